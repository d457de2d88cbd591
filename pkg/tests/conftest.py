import pytest

from synthcog.datasets import MotifSpec, make_synthetic, write_synthetic

PLANTED = MotifSpec({"a": ["AAAAA"], "b": ["TTTTT"]}, n_train=200, n_test=200, length=40)
PLANTED_SEED = 7


@pytest.fixture(scope="session")
def planted():
    return make_synthetic(PLANTED, PLANTED_SEED)


@pytest.fixture(scope="session")
def planted_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("planted")
    write_synthetic(PLANTED, PLANTED_SEED, directory)
    return directory


RESULTS = {}


@pytest.fixture
def record():
    """Record one acceptance criterion outcome for the end-of-run summary."""

    def _record(key, ok, detail):
        RESULTS[key] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
