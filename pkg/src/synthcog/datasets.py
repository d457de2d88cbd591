"""Loading, validation and synthesis of labelled sequence datasets.

Record files are comma-separated text with the header ``sequence,label``
and one record per line. Sequences carry no quoting and no embedded
delimiters; they are upper-cased on load.

A manifest is a JSON document describing one dataset::

    {
      "name": "Promoter B_amyloliquefaciens",
      "train_path": "train.csv",
      "test_path": "test.csv",
      "alphabet": "ACGTNRYSWKMBDHV",
      "label_order": ["0", "1"],
      "task_group": "Promoter B_amyloliquefaciens",
      "declared": {"train_samples": 1483, "test_samples": 636,
                   "max_length": 40, "avg_length": 40}
    }

Relative paths resolve against the manifest's directory. ``declared``,
``label_order`` and ``task_group`` are optional; a dataset whose name is in
the bundled benchmark catalogue picks up its declared statistics from there.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .encoder import DNA_AMBIGUITY, DNA_BASES
from .exceptions import DatasetError, InvalidSpecError, UnknownSymbolError

HEADER = ("sequence", "label")
DEFAULT_ALPHABET = DNA_BASES + DNA_AMBIGUITY
SPLITS = ("train", "test")


@dataclass(frozen=True)
class SequenceStats:
    n: int
    min_length: int
    max_length: int
    mean_length: float


@dataclass(frozen=True)
class LabeledSequenceSet:
    name: str
    split: str
    records: tuple
    label_order: tuple
    stats: SequenceStats

    @classmethod
    def from_records(cls, name, split, records, label_order=None) -> LabeledSequenceSet:
        records = tuple((str(s), lab) for s, lab in records)
        if not records:
            raise DatasetError(f"{name} ({split}): dataset is empty")
        for i, (s, lab) in enumerate(records):
            if not s:
                raise DatasetError(f"{name} ({split}): record {i} has an empty sequence")
        if label_order is None:
            label_order = tuple(dict.fromkeys(lab for _, lab in records))
        else:
            label_order = tuple(label_order)
            stray = {lab for _, lab in records} - set(label_order)
            if stray:
                raise DatasetError(f"{name} ({split}): labels {sorted(stray)} not in label_order")
        lengths = np.array([len(s) for s, _ in records])
        stats = SequenceStats(len(records), int(lengths.min()), int(lengths.max()), float(lengths.mean()))
        return cls(name, split, records, label_order, stats)

    @property
    def sequences(self) -> list[str]:
        return [s for s, _ in self.records]

    @property
    def labels(self) -> list:
        return [lab for _, lab in self.records]

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(HEADER) + "\n")
        for s, lab in self.records:
            buf.write(f"{s},{lab}\n")
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    train_path: str
    test_path: str
    alphabet: str = DEFAULT_ALPHABET
    label_order: tuple | None = None
    task_group: str | None = None
    declared: dict = field(default_factory=dict)

    @property
    def group(self) -> str:
        return self.task_group or self.name

    def path(self, split) -> str:
        if split not in SPLITS:
            raise DatasetError(f"unknown split {split!r}")
        return self.train_path if split == "train" else self.test_path


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid manifest JSON ({exc})") from None
    try:
        name = doc["name"]
        base = path.parent
        train = str(base / doc["train_path"])
        test = str(base / doc["test_path"])
    except KeyError as exc:
        raise DatasetError(f"{path}: manifest is missing {exc}") from None
    declared = dict(catalogue().get(name, {}))
    declared.update(doc.get("declared", {}))
    label_order = doc.get("label_order")
    return DatasetManifest(
        name=name,
        train_path=train,
        test_path=test,
        alphabet=doc.get("alphabet", DEFAULT_ALPHABET),
        label_order=tuple(label_order) if label_order is not None else None,
        task_group=doc.get("task_group") or declared.pop("task_group", None),
        declared={k: v for k, v in declared.items() if k != "task_group"},
    )


def write_manifest(manifest: DatasetManifest, path):
    """Write ``manifest`` as JSON; data paths are stored relative to ``path``."""
    base = Path(path).parent.resolve()
    doc = {
        "name": manifest.name,
        "train_path": os.path.relpath(Path(manifest.train_path).resolve(), base),
        "test_path": os.path.relpath(Path(manifest.test_path).resolve(), base),
        "alphabet": manifest.alphabet,
    }
    if manifest.label_order is not None:
        doc["label_order"] = list(manifest.label_order)
    if manifest.task_group:
        doc["task_group"] = manifest.task_group
    if manifest.declared:
        doc["declared"] = manifest.declared
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def parse_records(text: str, alphabet=DEFAULT_ALPHABET, source="<string>"):
    allowed = set(alphabet)
    lines = text.splitlines()
    if not lines or tuple(c.strip() for c in lines[0].split(",")) != HEADER:
        raise DatasetError(f"{source}: line 1: expected header 'sequence,label'")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DatasetError(f"{source}: line {lineno}: expected 2 fields, found {len(parts)}")
        seq, label = parts[0].strip().upper(), parts[1].strip()
        if not seq:
            raise DatasetError(f"{source}: line {lineno}: empty sequence")
        if not label:
            raise DatasetError(f"{source}: line {lineno}: empty label")
        if not allowed.issuperset(seq):
            pos = next(i for i, ch in enumerate(seq) if ch not in allowed)
            raise UnknownSymbolError(seq[pos], pos, f"{source}: line {lineno}")
        records.append((seq, label))
    return records


def load_dataset(manifest: DatasetManifest, split: str) -> LabeledSequenceSet:
    path = manifest.path(split)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DatasetError(f"{manifest.name}: {split} file not found: {path}") from None
    records = parse_records(text, manifest.alphabet, source=path)
    if not records:
        raise DatasetError(f"{path}: dataset is empty (header only)")
    return LabeledSequenceSet.from_records(manifest.name, split, records, manifest.label_order)


@dataclass(frozen=True)
class Check:
    field: str
    declared: object
    observed: object
    ok: bool


@dataclass(frozen=True)
class ValidationReport:
    dataset: str
    split: str
    checks: tuple

    @property
    def status(self) -> str:
        return "PASS" if all(c.ok for c in self.checks) else "WARN"

    @property
    def warnings(self) -> list[str]:
        return [
            f"{c.field}-mismatch: declared {c.declared}, observed {c.observed}"
            for c in self.checks
            if not c.ok
        ]


def validate_dataset(data: LabeledSequenceSet, manifest: DatasetManifest) -> ValidationReport:
    """Compare observed size and lengths with the manifest's declared values.

    Only fields the manifest declares are checked. Average length is
    declared as a rounded integer, so it passes within half a symbol.
    """
    decl = manifest.declared
    checks = []
    count_key = f"{data.split}_samples"
    if count_key in decl:
        checks.append(Check("count", decl[count_key], data.stats.n, data.stats.n == decl[count_key]))
    if "max_length" in decl:
        checks.append(
            Check("max_length", decl["max_length"], data.stats.max_length,
                  data.stats.max_length <= decl["max_length"] if data.split == "test"
                  else data.stats.max_length == decl["max_length"])
        )
    if "avg_length" in decl and data.split == "train":
        checks.append(
            Check("avg_length", decl["avg_length"], round(data.stats.mean_length, 3),
                  abs(data.stats.mean_length - decl["avg_length"]) <= 0.5)
        )
    return ValidationReport(data.name, data.split, tuple(checks))


_CATALOGUE: dict | None = None


def catalogue() -> dict[str, dict]:
    """Declared statistics of the 57 benchmark datasets, keyed by name."""
    global _CATALOGUE
    if _CATALOGUE is None:
        text = resources.files("synthcog.data").joinpath("table1_datasets.csv").read_text("utf-8")
        rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
        _CATALOGUE = {
            r["dataset"]: {
                "train_samples": int(r["train_samples"]),
                "test_samples": int(r["test_samples"]),
                "max_length": int(r["max_length"]),
                "avg_length": int(r["avg_length"]),
                "task_group": r["task_group"],
            }
            for r in rows
        }
    return _CATALOGUE


def benchmark_groups() -> dict[str, str]:
    """Dataset name -> evaluation row name for the benchmark's grouped tasks."""
    return {name: info["task_group"] for name, info in catalogue().items()}


# -- synthetic planted-motif data ---------------------------------------------


@dataclass(frozen=True)
class MotifSpec:
    """Planted-motif generator parameters.

    ``motifs`` maps each class label to its motif strings; ``n_train`` and
    ``n_test`` are split totals, dealt round-robin over the classes.
    """

    motifs: dict
    n_train: int = 200
    n_test: int = 200
    length: int = 40
    background: str = DNA_BASES
    name: str = "planted-motif"

    def validate(self):
        if len(self.motifs) < 2:
            raise InvalidSpecError("need motif sets for at least two classes")
        labels = list(self.motifs)
        for lab in labels:
            if not self.motifs[lab]:
                raise InvalidSpecError(f"class {lab!r} has no motifs")
            for m in self.motifs[lab]:
                if not m or set(m) - set(self.background):
                    raise InvalidSpecError(f"motif {m!r} must be a non-empty string over {self.background}")
                if len(m) > self.length:
                    raise InvalidSpecError(f"motif {m!r} is longer than the sequence length")
        for i, a in enumerate(labels):
            for b in labels[i + 1 :]:
                for ma in self.motifs[a]:
                    for mb in self.motifs[b]:
                        if ma in mb or mb in ma:
                            raise InvalidSpecError(
                                f"motif sets overlap: {ma!r} ({a}) and {mb!r} ({b})"
                            )
        if self.n_train < 1 or self.n_test < 1:
            raise InvalidSpecError("n_train and n_test must be positive")


def _foreign_motifs(spec: MotifSpec, label) -> list[str]:
    return [m for lab, ms in spec.motifs.items() if lab != label for m in ms]


def _planted_sequence(rng, spec: MotifSpec, label, max_tries=1000) -> str:
    alphabet = np.array(list(spec.background))
    own = list(spec.motifs[label])
    foreign = _foreign_motifs(spec, label)
    for _ in range(max_tries):
        seq = "".join(alphabet[rng.integers(0, len(alphabet), spec.length)])
        motif = own[int(rng.integers(0, len(own)))]
        pos = int(rng.integers(0, spec.length - len(motif) + 1))
        seq = seq[:pos] + motif + seq[pos + len(motif) :]
        if not any(f in seq for f in foreign):
            return seq
    raise InvalidSpecError(f"could not plant a clean sequence for class {label!r}")


def make_synthetic(spec: MotifSpec, seed: int) -> tuple[LabeledSequenceSet, LabeledSequenceSet]:
    """Seed-deterministic train/test sets with class-specific planted motifs."""
    spec.validate()
    rng = np.random.default_rng(seed)
    labels = list(spec.motifs)

    def draw(n, split):
        recs = [(None, labels[i % len(labels)]) for i in range(n)]
        recs = [(_planted_sequence(rng, spec, lab), lab) for _, lab in recs]
        order = rng.permutation(n)
        recs = [recs[i] for i in order]
        return LabeledSequenceSet.from_records(spec.name, split, recs, tuple(labels))

    return draw(spec.n_train, "train"), draw(spec.n_test, "test")


def satisfies_motif_contract(data: LabeledSequenceSet, spec: MotifSpec) -> bool:
    for seq, lab in data.records:
        if not any(m in seq for m in spec.motifs[lab]):
            return False
        if any(f in seq for f in _foreign_motifs(spec, lab)):
            return False
    return True


def write_synthetic(spec: MotifSpec, seed: int, directory) -> DatasetManifest:
    """Generate a planted-motif dataset into ``directory`` with its manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train, test = make_synthetic(spec, seed)
    train.save(directory / "train.csv")
    test.save(directory / "test.csv")
    manifest = DatasetManifest(
        name=spec.name,
        train_path=str(directory / "train.csv"),
        test_path=str(directory / "test.csv"),
        label_order=tuple(str(lab) for lab in spec.motifs),
        declared={
            "train_samples": spec.n_train,
            "test_samples": spec.n_test,
            "max_length": spec.length,
            "avg_length": spec.length,
        },
    )
    write_manifest(manifest, directory / "manifest.json")
    return manifest
