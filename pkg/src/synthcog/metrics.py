"""AUC scoring and comparative analytics over task x model score tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .exceptions import (
    IncompleteGroupError,
    IncompleteMatrixError,
    InvalidInputError,
    UndefinedAUCError,
)


def _binary_labels(labels, pos_label) -> np.ndarray:
    labels = list(labels)
    if pos_label is None:
        arr = np.asarray(labels)
        if arr.dtype == bool:
            return arr
        values = set(arr.tolist())
        if values <= {0, 1}:
            return arr.astype(bool)
        if values <= {"pos", "neg"}:
            return arr == "pos"
        raise InvalidInputError("labels must be boolean, 0/1 or pos/neg unless pos_label is given")
    return np.array([lab == pos_label for lab in labels], dtype=bool)


def roc_auc_binary(scores, labels, pos_label=None) -> float:
    """Tie-aware ROC AUC as the Mann-Whitney pair statistic.

    Each (positive, negative) pair counts 1 when the positive scores higher
    and 0.5 when they tie; the result is the mean over all pairs.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = _binary_labels(labels, pos_label)
    if len(s) != len(y):
        raise InvalidInputError(f"{len(s)} scores but {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC needs at least one positive and one negative sample")
    # average ranks turn ties into half-wins
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _prob_matrix(prob_vectors, label_order) -> np.ndarray:
    if isinstance(prob_vectors, np.ndarray):
        P = np.asarray(prob_vectors, dtype=np.float64)
    else:
        P = np.vstack([pv.vector(label_order) for pv in prob_vectors])
    if P.ndim != 2 or P.shape[1] != len(label_order):
        raise InvalidInputError("probability matrix does not match the label order")
    return P


def per_class_auc(prob_vectors, labels, label_order) -> dict:
    """One-vs-rest AUC per class present in ``labels`` (absent classes skipped)."""
    order = list(label_order)
    P = _prob_matrix(prob_vectors, order)
    labels = list(labels)
    if len(labels) != len(P):
        raise InvalidInputError(f"{len(P)} probability vectors but {len(labels)} labels")
    present = set(labels)
    if len(present) < 2:
        raise UndefinedAUCError("AUC needs at least two classes in the labels")
    out = {}
    for j, c in enumerate(order):
        if c in present:
            out[c] = roc_auc_binary(P[:, j], [lab == c for lab in labels])
    return out


def roc_auc_macro_ovr(prob_vectors, labels, label_order=None) -> float:
    """Unweighted mean of one-vs-rest AUCs over the classes present."""
    if label_order is None:
        label_order = prob_vectors[0].label_order
    return float(np.mean(list(per_class_auc(prob_vectors, labels, label_order).values())))


@dataclass
class ScoreMatrix:
    """Task x model grid of scores; missing cells are NaN."""

    tasks: list
    models: list
    scores: np.ndarray

    def __post_init__(self):
        self.tasks = list(self.tasks)
        self.models = list(self.models)
        self.scores = np.asarray(self.scores, dtype=np.float64).reshape(len(self.tasks), len(self.models))
        finite = self.scores[~np.isnan(self.scores)]
        if ((finite < 0) | (finite > 1)).any():
            raise InvalidInputError("scores must lie in [0, 1]")

    @property
    def complete(self) -> bool:
        return not np.isnan(self.scores).any()

    def column(self, model) -> np.ndarray:
        return self.scores[:, self.models.index(model)]

    def row(self, task) -> np.ndarray:
        return self.scores[self.tasks.index(task)]

    def with_column(self, model, values: dict) -> ScoreMatrix:
        """Add a model column; ``values`` maps task -> score, other cells NaN."""
        col = np.array([values.get(t, np.nan) for t in self.tasks])[:, None]
        return ScoreMatrix(self.tasks, self.models + [model], np.hstack([self.scores, col]))

    def subset(self, tasks) -> ScoreMatrix:
        idx = [self.tasks.index(t) for t in tasks]
        return ScoreMatrix([self.tasks[i] for i in idx], self.models, self.scores[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task"] + self.models)
        for t, row in zip(self.tasks, self.scores):
            w.writerow([t] + ["" if math.isnan(v) else repr(float(v)) for v in row])
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> ScoreMatrix:
        rows = list(csv.reader(line for line in text.splitlines() if line and not line.startswith("#")))
        if not rows or not rows[0] or rows[0][0] != "task":
            raise InvalidInputError("score table must start with a 'task,<model>...' header")
        models = rows[0][1:]
        tasks, grid = [], []
        for i, r in enumerate(rows[1:], start=2):
            if len(r) != len(models) + 1:
                raise InvalidInputError(f"score table row {i} has {len(r)} fields")
            tasks.append(r[0])
            grid.append([float(v) if v.strip() else np.nan for v in r[1:]])
        return cls(tasks, models, np.array(grid, dtype=np.float64).reshape(len(tasks), len(models)))

    @classmethod
    def load(cls, path) -> ScoreMatrix:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def published_results() -> ScoreMatrix:
    """The bundled 44-task x 4-model published AUC table."""
    text = resources.files("synthcog.data").joinpath("table2_results.csv").read_text("utf-8")
    return ScoreMatrix.from_csv(text)


@dataclass(frozen=True)
class RankRow:
    model: str
    wins: int
    win_fraction: float
    average_rank: float


def task_ranks(sm: ScoreMatrix, method="average") -> np.ndarray:
    """Per-task ranks (1 = best); ``method`` follows ``scipy.stats.rankdata``."""
    if not sm.complete:
        raise IncompleteMatrixError("rank table needs a complete score matrix")
    return np.vstack([rankdata(-row, method=method) for row in sm.scores]) if sm.tasks else np.zeros((0, len(sm.models)))


def rank_table(sm: ScoreMatrix, method="average") -> list[RankRow]:
    """Wins and average rank per model.

    Tied scores share the mean of the ranks they span (``method="average"``;
    pass ``"min"`` for competition ranking). A task's win goes to the
    first-listed model holding the maximum score.
    """
    if not sm.tasks:
        raise IncompleteMatrixError("empty score matrix")
    ranks = task_ranks(sm, method)
    winners = np.argmax(sm.scores, axis=1)
    wins = np.bincount(winners, minlength=len(sm.models))
    n = len(sm.tasks)
    return [
        RankRow(m, int(wins[j]), wins[j] / n, float(ranks[:, j].mean()))
        for j, m in enumerate(sm.models)
    ]


def group_average(sm: ScoreMatrix, groups) -> ScoreMatrix:
    """Replace each group's member rows by their unweighted mean row.

    ``groups`` maps group name -> member task names, or task -> group name
    (a plain ``dict[str, str]``). A grouped row takes the position of its
    first member; ungrouped tasks keep their rows.
    """
    members = _group_members(groups)
    task_group = {t: g for g, ts in members.items() for t in ts}
    for g, ts in members.items():
        missing = [t for t in ts if t not in sm.tasks]
        if missing:
            raise IncompleteGroupError(f"group {g!r} is missing member rows {missing}")
    tasks, rows, done = [], [], set()
    for t, row in zip(sm.tasks, sm.scores):
        g = task_group.get(t)
        if g is None:
            tasks.append(t)
            rows.append(row)
        elif g not in done:
            done.add(g)
            idx = [sm.tasks.index(m) for m in members[g]]
            tasks.append(g)
            rows.append(sm.scores[idx].mean(axis=0))
    return ScoreMatrix(tasks, sm.models, np.array(rows).reshape(len(tasks), len(sm.models)))


def _group_members(groups) -> dict[str, list]:
    groups = dict(groups)
    if all(isinstance(v, str) for v in groups.values()):
        members: dict[str, list] = {}
        for task, g in groups.items():
            members.setdefault(g, []).append(task)
        return members
    return {g: list(ts) for g, ts in groups.items()}


@dataclass(frozen=True)
class SummaryRow:
    model: str
    mean: float
    std: float


def summary_stats(sm: ScoreMatrix) -> list[SummaryRow]:
    """Mean and population standard deviation of each model column."""
    if not sm.tasks or not sm.models:
        raise IncompleteMatrixError("empty score matrix")
    if not sm.complete:
        raise IncompleteMatrixError("summary needs a complete score matrix")
    return [
        SummaryRow(m, float(sm.scores[:, j].mean()), float(sm.scores[:, j].std(ddof=0)))
        for j, m in enumerate(sm.models)
    ]


def rank_rows_csv(rows: list[RankRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "wins", "win_fraction", "avg_rank"])
    for r in rows:
        w.writerow([r.model, r.wins, f"{r.win_fraction:.6f}", f"{r.average_rank:.6f}"])
    return buf.getvalue()


def summary_rows_csv(rows: list[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "mean", "std"])
    for r in rows:
        w.writerow([r.model, f"{r.mean:.6f}", f"{r.std:.6f}"])
    return buf.getvalue()
