import json

import numpy as np
import pytest

from synthcog.datasets import (
    DatasetManifest,
    LabeledSequenceSet,
    MotifSpec,
    benchmark_groups,
    catalogue,
    load_dataset,
    load_manifest,
    make_synthetic,
    satisfies_motif_contract,
    validate_dataset,
    write_manifest,
)
from synthcog.exceptions import DatasetError, InvalidSpecError, UnknownSymbolError


def write(path, rows, header="sequence,label"):
    path.write_text("\n".join([header] + [f"{s},{lab}" for s, lab in rows]) + "\n")
    return path


def manifest_for(tmp_path, train_rows, test_rows=None, **kw):
    train = write(tmp_path / "train.csv", train_rows)
    test = write(tmp_path / "test.csv", test_rows or train_rows)
    return DatasetManifest(kw.pop("name", "toy"), str(train), str(test), **kw)


def random_rows(n, length, seed):
    rng = np.random.default_rng(seed)
    return [("".join(rng.choice(list("ACGT"), length)), str(i % 2)) for i in range(n)]


class TestLoad:
    def test_two_rows(self, tmp_path):
        m = manifest_for(tmp_path, [("ACGT", "x"), ("acgtaa", "y")])
        data = load_dataset(m, "train")
        assert data.records == (("ACGT", "x"), ("ACGTAA", "y"))
        assert data.label_order == ("x", "y")
        assert (data.stats.min_length, data.stats.max_length, data.stats.mean_length) == (4, 6, 5.0)

    def test_header_only(self, tmp_path):
        with pytest.raises(DatasetError, match="empty"):
            load_dataset(manifest_for(tmp_path, []), "train")

    def test_unknown_symbol_reports_line(self, tmp_path):
        m = manifest_for(tmp_path, [("ACGT", "x"), ("ACQT", "y")])
        with pytest.raises(UnknownSymbolError, match="line 3"):
            load_dataset(m, "train")

    def test_malformed_row(self, tmp_path):
        m = manifest_for(tmp_path, [("ACGT", "x,extra")])
        with pytest.raises(DatasetError, match="line 2"):
            load_dataset(m, "train")

    def test_bad_header(self, tmp_path):
        path = write(tmp_path / "train.csv", [("ACGT", "x")], header="seq,label")
        with pytest.raises(DatasetError, match="header"):
            load_dataset(DatasetManifest("t", str(path), str(path)), "train")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(DatasetManifest("t", str(tmp_path / "nope.csv"), ""), "train")

    def test_declared_label_order(self, tmp_path):
        m = manifest_for(tmp_path, [("ACGT", "x"), ("ACGT", "y")], label_order=("y", "x"))
        assert load_dataset(m, "train").label_order == ("y", "x")

    def test_round_trip(self, tmp_path):
        m = manifest_for(tmp_path, random_rows(20, 30, 1))
        data = load_dataset(m, "train")
        data.save(tmp_path / "copy.csv")
        again = load_dataset(DatasetManifest("toy", str(tmp_path / "copy.csv"), ""), "train")
        assert again == data

    def test_manifest_file(self, tmp_path):
        m = manifest_for(tmp_path, [("ACGT", "x")], label_order=("x",), task_group="g")
        write_manifest(m, tmp_path / "manifest.json")
        doc = json.loads((tmp_path / "manifest.json").read_text())
        assert doc["train_path"] == "train.csv"
        loaded = load_manifest(tmp_path / "manifest.json")
        assert loaded.label_order == ("x",) and loaded.group == "g"
        assert load_dataset(loaded, "test").records == (("ACGT", "x"),)


class TestValidate:
    @pytest.mark.parametrize(
        "name, n_train, n_test, length",
        [("Promoter B_amyloliquefaciens", 1483, 636, 40), ("5-methylcytosin(5mC)", 2344, 2344, 41)],
    )
    def test_benchmark_rows_pass(self, tmp_path, name, n_train, n_test, length):
        declared = {k: v for k, v in catalogue()[name].items() if k != "task_group"}
        assert (declared["train_samples"], declared["test_samples"], declared["max_length"]) == (
            n_train,
            n_test,
            length,
        )
        m = manifest_for(
            tmp_path, random_rows(n_train, length, 0), random_rows(n_test, length, 1), name=name, declared=declared
        )
        for split in ("train", "test"):
            data = load_dataset(m, split)
            report = validate_dataset(data, m)
            assert report.status == "PASS", report.warnings

    def test_count_mismatch_warns(self, tmp_path):
        m = manifest_for(tmp_path, random_rows(9, 20, 0), declared={"train_samples": 10})
        data = load_dataset(m, "train")
        report = validate_dataset(data, m)
        assert report.status == "WARN"
        assert report.warnings == ["count-mismatch: declared 10, observed 9"]
        assert len(data) == 9

    def test_catalogue(self):
        cat = catalogue()
        assert len(cat) == 57
        groups = benchmark_groups()
        assert len(set(groups.values())) == 44
        assert sum(g == "Mouse TFBS (all)" for g in groups.values()) == 5
        assert sum(g == "Yeast Epigenetic Marks (all)" for g in groups.values()) == 10


class TestSynthetic:
    spec = MotifSpec({"a": ["AAAAA"], "b": ["TTTTT"]}, n_train=200, n_test=200, length=40)

    def test_contract_holds(self):
        train, test = make_synthetic(self.spec, 7)
        assert len(train) == 200 and len(test) == 200
        assert satisfies_motif_contract(train, self.spec)
        assert satisfies_motif_contract(test, self.spec)
        assert train.labels.count("a") == 100

    def test_deterministic(self):
        a = make_synthetic(self.spec, 7)
        b = make_synthetic(self.spec, 7)
        assert a[0].to_csv() == b[0].to_csv() and a[1].to_csv() == b[1].to_csv()
        assert make_synthetic(self.spec, 8)[0].to_csv() != a[0].to_csv()

    def test_overlapping_motifs(self):
        with pytest.raises(InvalidSpecError):
            make_synthetic(MotifSpec({"a": ["AAAAA"], "b": ["AAAAA", "CCCCC"]}), 0)

    def test_nested_motifs_rejected(self):
        with pytest.raises(InvalidSpecError):
            make_synthetic(MotifSpec({"a": ["AAAAA"], "b": ["AAAAAC"]}), 0)

    def test_multiclass(self):
        spec = MotifSpec({"x": ["ACGTA"], "y": ["TTGCA", "GGGGC"], "z": ["CATCA"]}, n_train=30, n_test=30)
        train, test = make_synthetic(spec, 1)
        assert satisfies_motif_contract(train, spec) and train.label_order == ("x", "y", "z")


def test_labeled_set_rejects_empty_sequence():
    with pytest.raises(DatasetError):
        LabeledSequenceSet.from_records("t", "train", [("", "a")])
