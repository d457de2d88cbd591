"""Online representation tree.

Leaves absorb training inputs; an input close enough to its most similar
leaf is OR-ed into it, otherwise it becomes a new leaf. A new leaf that is
moderately similar to its best match joins that leaf's parent (an interior
node is created above a root leaf when needed), so interior nodes are the
bitwise OR of their children and carry the summed label histograms.

Identification always scans every leaf; the hierarchy is for abstraction
and reporting, not for pruning the search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_ratio
from .encoder import DEFAULT_CODEBOOK, Codebook, Sdr, WindowConfig, n_words
from .exceptions import (
    CapacityError,
    InvalidInputError,
    ModelFormatError,
    UntrainedModelError,
)

MODEL_MAGIC = "SYNTHCOG-MODEL"
MODEL_VERSION = 1

# Bound on queries x leaves x words handled per chunk in batch identification.
_BATCH_CELLS = 1 << 22


@dataclass(frozen=True)
class CoreConfig:
    merge_threshold: float = 0.8
    branch_threshold: float = 0.4
    max_representations: int | None = 5_000_000

    def __post_init__(self):
        check_ratio(self.merge_threshold, "merge_threshold")
        check_ratio(self.branch_threshold, "branch_threshold")
        if self.branch_threshold > self.merge_threshold:
            raise InvalidInputError("branch_threshold must not exceed merge_threshold")
        if self.max_representations is not None:
            check_positive_int(self.max_representations, "max_representations")


@dataclass
class Representation:
    """Read-only snapshot of one tree node."""

    id: int
    sdr: Sdr
    label_counts: dict
    children: list[int] = field(default_factory=list)
    parent: int | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _check_width(a: Sdr, b: Sdr):
    if a.width != b.width:
        raise InvalidInputError(f"SDR width mismatch: {a.width} != {b.width}")


def similarity(a: Sdr, b: Sdr) -> float:
    """Jaccard index of the active sets; two empty SDRs are identical (1.0)."""
    _check_width(a, b)
    sa, sb = set(a.active), set(b.active)
    union = len(sa | sb)
    if union == 0:
        return 1.0
    return len(sa & sb) / union


def aggregate(a: Sdr, b: Sdr) -> Sdr:
    _check_width(a, b)
    return Sdr(a.width, tuple(sorted(set(a.active) | set(b.active))))


def packed_similarity(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Jaccard of packed ``x`` against every packed row."""
    inter = np.bitwise_count(rows & x).sum(axis=1, dtype=np.int64)
    union = np.bitwise_count(rows | x).sum(axis=1, dtype=np.int64)
    out = np.ones(len(rows), dtype=np.float64)
    nz = union > 0
    out[nz] = inter[nz] / union[nz]
    return out


class Model:
    """Representation tree plus the configuration it was built with.

    Training mutates the model in place (``train_one`` is order dependent
    and must be called sequentially); once training is done, identification
    only reads state and is safe to share.
    """

    def __init__(
        self,
        core: CoreConfig = CoreConfig(),
        window: WindowConfig = WindowConfig(),
        codebook: Codebook = DEFAULT_CODEBOOK,
        labels=(),
    ):
        self.core = core
        self.window = window
        self.codebook = codebook
        self.width = window.n * codebook.bits_per_symbol
        self.n_words = n_words(self.width)
        self.labels: list = []
        self._label_index: dict = {}
        for lab in labels:
            self.label_id(lab)
        self.trained_count = 0
        self._parent: list[int] = []
        self._children: list[list[int]] = []
        self._counts: list[dict[int, int]] = []
        self._sdr = np.zeros((16, self.n_words), dtype=np.uint64)
        self._roots: list[int] = []
        self._leaf_ids: list[int] = []
        self._leaf_of: dict[int, int] = {}
        self._leaf_sdr = np.zeros((16, self.n_words), dtype=np.uint64)

    # -- bookkeeping -------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self._parent)

    @property
    def n_leaves(self) -> int:
        return len(self._leaf_ids)

    @property
    def roots(self) -> list[int]:
        return list(self._roots)

    @property
    def leaf_ids(self) -> list[int]:
        return list(self._leaf_ids)

    def label_id(self, label) -> int:
        idx = self._label_index.get(label)
        if idx is None:
            idx = len(self.labels)
            self.labels.append(label)
            self._label_index[label] = idx
        return idx

    def node(self, node_id: int) -> Representation:
        if not 0 <= node_id < self.n_nodes:
            raise KeyError(node_id)
        parent = self._parent[node_id]
        return Representation(
            id=node_id,
            sdr=Sdr.from_packed(self._sdr[node_id], self.width),
            label_counts={self.labels[k]: v for k, v in sorted(self._counts[node_id].items())},
            children=list(self._children[node_id]),
            parent=None if parent < 0 else parent,
        )

    @property
    def nodes(self) -> list[Representation]:
        return [self.node(i) for i in range(self.n_nodes)]

    def leaf_matrix(self) -> np.ndarray:
        return self._leaf_sdr[: self.n_leaves]

    def _new_node(self, sdr_row, counts, parent=-1, leaf=True) -> int:
        nid = self.n_nodes
        if nid == len(self._sdr):
            self._sdr = np.concatenate([self._sdr, np.zeros_like(self._sdr)])
        self._sdr[nid] = sdr_row
        self._parent.append(parent)
        self._children.append([])
        self._counts.append(dict(counts))
        if leaf:
            k = self.n_leaves
            if k == len(self._leaf_sdr):
                self._leaf_sdr = np.concatenate([self._leaf_sdr, np.zeros_like(self._leaf_sdr)])
            self._leaf_sdr[k] = sdr_row
            self._leaf_ids.append(nid)
            self._leaf_of[nid] = k
        return nid

    def _reserve(self, needed: int):
        cap = self.core.max_representations
        if cap is not None and self.n_nodes + needed > cap:
            raise CapacityError(
                f"model holds {self.n_nodes} representations; adding {needed} would "
                f"exceed max_representations={cap}"
            )

    def _absorb_upwards(self, node_id: int, x, label_idx: int):
        while node_id >= 0:
            self._sdr[node_id] |= x
            counts = self._counts[node_id]
            counts[label_idx] = counts.get(label_idx, 0) + 1
            node_id = self._parent[node_id]

    def as_packed(self, x) -> np.ndarray:
        if isinstance(x, Sdr):
            if x.width != self.width:
                raise InvalidInputError(f"input width {x.width} != model width {self.width}")
            return x.to_packed()
        x = np.asarray(x, dtype=np.uint64)
        if x.shape != (self.n_words,):
            raise InvalidInputError(f"packed input must have shape ({self.n_words},)")
        return x

    # -- learning and recall -----------------------------------------------

    def train_one(self, x, label) -> Model:
        """Absorb one input (an :class:`Sdr` or a packed row) with its label."""
        x = self.as_packed(x)
        lab = self.label_id(label)
        if self.n_leaves == 0:
            self._reserve(1)
            self._roots.append(self._new_node(x, {lab: 1}))
            self.trained_count += 1
            return self

        sims = packed_similarity(self.leaf_matrix(), x)
        k = int(np.argmax(sims))
        s = sims[k]
        best = self._leaf_ids[k]
        if s >= self.core.merge_threshold:
            self._leaf_sdr[k] |= x
            self._absorb_upwards(best, x, lab)
        elif s >= self.core.branch_threshold:
            parent = self._parent[best]
            if parent < 0:
                self._reserve(2)
                leaf = self._new_node(x, {lab: 1})
                counts = dict(self._counts[best])
                counts[lab] = counts.get(lab, 0) + 1
                inner = self._new_node(self._sdr[best] | x, counts, leaf=False)
                self._children[inner] = [best, leaf]
                self._parent[best] = inner
                self._parent[leaf] = inner
                self._roots[self._roots.index(best)] = inner
                self._roots.sort()
            else:
                self._reserve(1)
                leaf = self._new_node(x, {lab: 1}, parent=parent)
                self._children[parent].append(leaf)
                self._absorb_upwards(parent, x, lab)
        else:
            self._reserve(1)
            self._roots.append(self._new_node(x, {lab: 1}))
        self.trained_count += 1
        return self

    def identify(self, x) -> tuple[int, float]:
        """Most similar leaf (lowest id on ties) and its similarity."""
        if self.n_leaves == 0:
            raise UntrainedModelError("model has no representations")
        sims = packed_similarity(self.leaf_matrix(), self.as_packed(x))
        k = int(np.argmax(sims))
        return self._leaf_ids[k], float(sims[k])

    def identify_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``identify`` for every packed row of ``X``; returns (leaf ids, scores)."""
        if self.n_leaves == 0:
            raise UntrainedModelError("model has no representations")
        X = np.asarray(X, dtype=np.uint64)
        if X.ndim != 2 or X.shape[1] != self.n_words:
            raise InvalidInputError(f"packed inputs must have shape (m, {self.n_words})")
        leaves = self.leaf_matrix()
        leaf_pop = np.bitwise_count(leaves).sum(axis=1, dtype=np.int64)
        x_pop = np.bitwise_count(X).sum(axis=1, dtype=np.int64)
        ids = np.empty(len(X), dtype=np.int64)
        scores = np.empty(len(X), dtype=np.float64)
        step = max(1, _BATCH_CELLS // max(1, len(leaves) * self.n_words))
        leaf_ids = np.asarray(self._leaf_ids, dtype=np.int64)
        for start in range(0, len(X), step):
            q = X[start : start + step]
            inter = np.bitwise_count(q[:, None, :] & leaves[None, :, :]).sum(axis=2, dtype=np.int64)
            union = x_pop[start : start + step, None] + leaf_pop[None, :] - inter
            with np.errstate(invalid="ignore", divide="ignore"):
                sims = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
            k = np.argmax(sims, axis=1)
            ids[start : start + step] = leaf_ids[k]
            scores[start : start + step] = sims[np.arange(len(q)), k]
        return ids, scores

    def leaf_label(self, node_id: int, label_order=None):
        """Majority label of a node; ties go to the earliest label in ``label_order``."""
        counts = self._counts[node_id]
        order = self.labels if label_order is None else list(label_order)
        best, best_count = None, -1
        for lab in order:
            c = counts.get(self._label_index.get(lab, -1), 0)
            if c > best_count:
                best, best_count = lab, c
        return best

    def predict_window_label(self, x, label_order=None):
        node_id, _ = self.identify(x)
        return self.leaf_label(node_id, label_order)

    # -- audit ---------------------------------------------------------------

    def audit(self) -> list[str]:
        """Full-tree consistency check; returns a list of violations (empty if sound)."""
        problems = []
        seen_roots = sorted(i for i in range(self.n_nodes) if self._parent[i] < 0)
        if seen_roots != sorted(self._roots):
            problems.append("root list does not match parentless nodes")
        for nid in range(self.n_nodes):
            kids = self._children[nid]
            for c in kids:
                if self._parent[c] != nid:
                    problems.append(f"node {c} does not point back to parent {nid}")
            if kids:
                row = np.zeros(self.n_words, dtype=np.uint64)
                total: dict[int, int] = {}
                for c in kids:
                    row |= self._sdr[c]
                    for k, v in self._counts[c].items():
                        total[k] = total.get(k, 0) + v
                if not np.array_equal(row, self._sdr[nid]):
                    problems.append(f"node {nid} sdr is not the OR of its children")
                if total != self._counts[nid]:
                    problems.append(f"node {nid} label counts are not the sum of its children")
            elif nid not in self._leaf_of:
                problems.append(f"childless node {nid} is not registered as a leaf")
            elif not np.array_equal(self._leaf_sdr[self._leaf_of[nid]], self._sdr[nid]):
                problems.append(f"leaf {nid} search row is stale")
        # acyclicity: every node reaches a root within n_nodes steps
        for nid in range(self.n_nodes):
            cur, steps = nid, 0
            while self._parent[cur] >= 0 and steps <= self.n_nodes:
                cur, steps = self._parent[cur], steps + 1
            if steps > self.n_nodes:
                problems.append(f"cycle above node {nid}")
                break
        leaf_total = sum(sum(self._counts[i].values()) for i in self._leaf_ids)
        if leaf_total != self.trained_count:
            problems.append(f"leaf label totals {leaf_total} != trained_count {self.trained_count}")
        return problems

    # -- persistence -----------------------------------------------------------

    def config_dict(self) -> dict:
        return {
            "merge_threshold": self.core.merge_threshold,
            "branch_threshold": self.core.branch_threshold,
            "max_representations": self.core.max_representations,
            "n": self.window.n,
            "stride": self.window.stride,
        }

    def save(self, path):
        save_model(self, path)

    @classmethod
    def load(cls, path) -> Model:
        return load_model(path)


def train_one(m: Model, x, label) -> Model:
    return m.train_one(x, label)


def identify(m: Model, x) -> tuple[int, float]:
    return m.identify(x)


def predict_window_label(m: Model, x, label_order=None):
    return m.predict_window_label(x, label_order)


# Model file layout (UTF-8 text, tab separated, one record per line):
#
#   SYNTHCOG-MODEL <version>
#   config <json>
#   codebook <json>
#   labels <json list>
#   trained_count <int>
#   nodes <count>
#   <id> <parent|-> <children csv> <active bits csv> <label_idx:count csv>   (x count)
#   end
#
# Empty csv fields are written as "-".


def _csv(values) -> str:
    return ",".join(str(v) for v in values) or "-"


def _parse_ints(field_: str) -> list[int]:
    return [] if field_ == "-" else [int(v) for v in field_.split(",")]


def dumps_model(m: Model) -> str:
    lines = [
        f"{MODEL_MAGIC}\t{MODEL_VERSION}",
        "config\t" + json.dumps(m.config_dict(), sort_keys=True),
        "codebook\t" + json.dumps(m.codebook.to_dict(), sort_keys=True),
        "labels\t" + json.dumps(m.labels),
        f"trained_count\t{m.trained_count}",
        f"nodes\t{m.n_nodes}",
    ]
    for nid in range(m.n_nodes):
        active = Sdr.from_packed(m._sdr[nid], m.width).active
        counts = ",".join(f"{k}:{v}" for k, v in sorted(m._counts[nid].items())) or "-"
        parent = m._parent[nid]
        lines.append(
            "\t".join(
                [str(nid), "-" if parent < 0 else str(parent), _csv(m._children[nid]), _csv(active), counts]
            )
        )
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(m: Model, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_model(m))


def loads_model(text: str) -> Model:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    def expect(i, key):
        if i >= len(lines):
            raise ModelFormatError(f"model file truncated before {key!r}")
        name, _, value = lines[i].partition("\t")
        if name != key:
            raise ModelFormatError(f"line {i + 1}: expected {key!r}, found {name!r}")
        return value

    if not lines:
        raise ModelFormatError("empty model file")
    magic, _, version = lines[0].partition("\t")
    if magic != MODEL_MAGIC:
        raise ModelFormatError("not a synthcog model file")
    try:
        version = int(version)
    except ValueError:
        raise ModelFormatError(f"bad version field {version!r}") from None
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version} (expected {MODEL_VERSION})")
    try:
        cfg = json.loads(expect(1, "config"))
        cb = Codebook.from_dict(json.loads(expect(2, "codebook")))
        labels = json.loads(expect(3, "labels"))
        trained = int(expect(4, "trained_count"))
        count = int(expect(5, "nodes"))
        m = Model(
            CoreConfig(cfg["merge_threshold"], cfg["branch_threshold"], cfg["max_representations"]),
            WindowConfig(cfg["n"], cfg["stride"]),
            cb,
            labels=labels,
        )
        node_lines = lines[6 : 6 + count]
        if len(node_lines) != count or len(lines) != 7 + count or lines[6 + count] != "end":
            raise ModelFormatError("model file truncated or has trailing data")
        for i, line in enumerate(node_lines):
            parts = line.split("\t")
            if len(parts) != 5 or int(parts[0]) != i:
                raise ModelFormatError(f"line {7 + i}: malformed node record")
            parent = -1 if parts[1] == "-" else int(parts[1])
            children = _parse_ints(parts[2])
            active = _parse_ints(parts[3])
            counts = {}
            if parts[4] != "-":
                for item in parts[4].split(","):
                    k, v = item.split(":")
                    counts[int(k)] = int(v)
            row = Sdr(m.width, tuple(active)).to_packed()
            nid = m._new_node(row, counts, parent=parent, leaf=not children)
            m._children[nid] = children
            if parent < 0:
                m._roots.append(nid)
        m.trained_count = trained
    except ModelFormatError:
        raise
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    problems = m.audit()
    if problems:
        raise ModelFormatError("inconsistent model file: " + problems[0])
    return m


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as f:
        return loads_model(f.read())
