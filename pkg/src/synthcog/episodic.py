"""Sequence-level training and classification over the representation tree.

A sequence is cut into windows; every window is trained with the
sequence's label, and at inference every window votes for the majority
label of its most similar leaf. The votes are harmonised into a class
distribution whose frequencies double as class probabilities.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_symbol_string, check_sequences, check_sequences_labels
from .core import CoreConfig, Model, load_model, save_model
from .encoder import DEFAULT_CODEBOOK, SequenceEncoder, WindowConfig
from .exceptions import InvalidInputError, SynthCogError, UntrainedModelError

HARMONIZATION_MODES = ("majority", "any-trigger")
VOTE_WEIGHTINGS = ("hard", "similarity")


@dataclass(frozen=True)
class VoteDistribution:
    """Class frequencies over a set of votes.

    ``counts``/``probs`` only hold classes that received a vote; use
    :meth:`prob` or :meth:`vector` for classes that got none.
    """

    counts: dict
    probs: dict
    predicted: object
    label_order: tuple = ()

    def prob(self, label) -> float:
        return self.probs.get(label, 0.0)

    def vector(self, label_order=None) -> np.ndarray:
        order = self.label_order if label_order is None else label_order
        return np.array([self.prob(c) for c in order], dtype=np.float64)

    @property
    def n_votes(self):
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "counts": {str(k): v for k, v in self.counts.items()},
            "probs": {str(k): v for k, v in self.probs.items()},
            "predicted": self.predicted,
        }


def _from_counts(counts: dict, label_order, predicted=None) -> VoteDistribution:
    order = tuple(label_order)
    ordered = {c: counts[c] for c in order if counts.get(c, 0) > 0}
    total = sum(ordered.values())
    if total <= 0:
        raise InvalidInputError("cannot build a vote distribution from zero votes")
    probs = {c: v / total for c, v in ordered.items()}
    if predicted is None:
        # max() keeps the first maximal key, i.e. the earliest in label order
        predicted = max(ordered, key=ordered.__getitem__)
    return VoteDistribution(ordered, probs, predicted, order)


def harmonize(votes, label_order, mode="majority", trigger=None, weights=None) -> VoteDistribution:
    """Collapse per-window votes into one distribution.

    ``mode="majority"`` predicts the most repeated class (earliest in
    ``label_order`` on ties). ``mode="any-trigger"`` predicts ``trigger``
    as soon as a single vote names it and otherwise falls back to majority;
    probabilities stay the vote frequencies in both modes.
    ``weights`` optionally replaces the unit weight of each vote.
    """
    votes = list(votes)
    if not votes:
        raise InvalidInputError("cannot harmonize an empty vote list")
    order = list(label_order)
    known = set(order)
    unknown = [v for v in votes if v not in known]
    if unknown:
        raise InvalidInputError(f"vote {unknown[0]!r} is not in the label order")
    if mode not in HARMONIZATION_MODES:
        raise InvalidInputError(f"unknown harmonization mode {mode!r}")
    if weights is None:
        counts = Counter(votes)
    else:
        weights = list(weights)
        if len(weights) != len(votes):
            raise InvalidInputError("weights and votes differ in length")
        counts = Counter()
        for v, w in zip(votes, weights):
            counts[v] += float(w)
        if sum(counts.values()) <= 0:
            counts = Counter(votes)
    predicted = None
    if mode == "any-trigger":
        if trigger not in known:
            raise InvalidInputError("any-trigger mode needs a trigger class from the label order")
        if trigger in votes:
            predicted = trigger
    return _from_counts(dict(counts), order, predicted)


def _sequence_encoder(m: Model) -> SequenceEncoder:
    return SequenceEncoder(m.codebook, m.window)


def train_sequence(m: Model, seq, label, *, index=None, encoder=None) -> Model:
    """Train every window of ``seq`` with ``label``, in window order."""
    context = "sequence" if index is None else f"sequence {index}"
    seq = as_symbol_string(seq)
    if not seq:
        raise InvalidInputError(f"{context}: empty sequence")
    rows = (encoder or _sequence_encoder(m)).encode(seq, context=context)
    try:
        for x in rows:
            m.train_one(x, label)
    except SynthCogError as exc:
        raise type(exc)(f"{context}: {exc}") from exc
    return m


def window_votes(m: Model, packed: np.ndarray, label_order=None):
    """Per-window (labels, similarity scores) for packed window rows."""
    if m.n_leaves == 0:
        raise UntrainedModelError("model has no representations")
    order = list(m.labels if label_order is None else label_order)
    uniq, inverse = np.unique(packed, axis=0, return_inverse=True)
    leaf_ids, scores = m.identify_batch(uniq)
    label_cache: dict[int, object] = {}
    uniq_labels = []
    for nid in leaf_ids.tolist():
        if nid not in label_cache:
            label_cache[nid] = m.leaf_label(nid, order)
        uniq_labels.append(label_cache[nid])
    inverse = inverse.ravel()
    labels = [uniq_labels[i] for i in inverse.tolist()]
    return labels, scores[inverse]


def classify_sequence(
    m: Model, seq, label_order=None, mode="majority", trigger=None, weighting="hard"
) -> VoteDistribution:
    """One vote per window, harmonised into a :class:`VoteDistribution`."""
    return classify_sequences(m, [seq], label_order, mode, trigger, weighting)[0]


def classify_sequences(
    m: Model, seqs, label_order=None, mode="majority", trigger=None, weighting="hard"
) -> list[VoteDistribution]:
    if weighting not in VOTE_WEIGHTINGS:
        raise InvalidInputError(f"unknown vote weighting {weighting!r}")
    order = list(m.labels if label_order is None else label_order)
    seqs = check_sequences(seqs)
    packed, counts = _sequence_encoder(m).encode_many(seqs)
    labels, scores = window_votes(m, packed, order)
    out = []
    start = 0
    for c in counts.tolist():
        votes = labels[start : start + c]
        w = scores[start : start + c] if weighting == "similarity" else None
        out.append(harmonize(votes, order, mode=mode, trigger=trigger, weights=w))
        start += c
    return out


class EpisodicCognitionClassifier(ClassifierMixin, BaseEstimator):
    """Sliding-window sequence classifier backed by an online prototype tree.

    Parameters
    ----------
    window : int, default=5
        Window length in sequence symbols.
    stride : int, default=1
        Step between windows.
    merge_threshold : float, default=0.8
        Minimum Jaccard similarity for an input to be absorbed into its
        best-matching leaf.
    branch_threshold : float, default=0.4
        Minimum similarity for a new leaf to be grouped with its best match
        instead of starting a new root.
    max_representations : int or None, default=5_000_000
        Hard bound on tree size; exceeding it raises ``CapacityError``.
    harmonization : {"majority", "any-trigger"}, default="majority"
    trigger_class : label, optional
        Class selected by a single vote in ``"any-trigger"`` mode.
    vote_weighting : {"hard", "similarity"}, default="hard"
        ``"similarity"`` weights each window vote by its match score.
    label_order : sequence, optional
        Class order used for tie-breaking and ``predict_proba`` columns;
        defaults to the sorted unique labels.
    codebook : Codebook, optional
        Defaults to one-hot DNA with IUPAC ambiguity codes.

    Attributes
    ----------
    model_ : Model
    classes_ : ndarray
    n_train_windows_ : int
    """

    def __init__(
        self,
        window=5,
        stride=1,
        merge_threshold=0.8,
        branch_threshold=0.4,
        max_representations=5_000_000,
        harmonization="majority",
        trigger_class=None,
        vote_weighting="hard",
        label_order=None,
        codebook=None,
    ):
        self.window = window
        self.stride = stride
        self.merge_threshold = merge_threshold
        self.branch_threshold = branch_threshold
        self.max_representations = max_representations
        self.harmonization = harmonization
        self.trigger_class = trigger_class
        self.vote_weighting = vote_weighting
        self.label_order = label_order
        self.codebook = codebook

    def _new_model(self, classes) -> Model:
        return Model(
            CoreConfig(self.merge_threshold, self.branch_threshold, self.max_representations),
            WindowConfig(self.window, self.stride),
            self.codebook or DEFAULT_CODEBOOK,
            labels=classes,
        )

    def fit(self, X, y):
        seqs, labels = check_sequences_labels(X, y)
        if self.label_order is not None:
            classes = list(self.label_order)
            missing = set(labels) - set(classes)
            if missing:
                raise InvalidInputError(f"labels {sorted(map(str, missing))} not in label_order")
        else:
            classes = sorted(set(labels))
        if self.harmonization not in HARMONIZATION_MODES:
            raise InvalidInputError(f"unknown harmonization mode {self.harmonization!r}")
        if self.vote_weighting not in VOTE_WEIGHTINGS:
            raise InvalidInputError(f"unknown vote weighting {self.vote_weighting!r}")
        model = self._new_model(classes)
        enc = _sequence_encoder(model)
        for i, (s, lab) in enumerate(zip(seqs, labels)):
            train_sequence(model, s, lab, index=i, encoder=enc)
        self._set_model(model)
        return self

    def _set_model(self, model: Model):
        self.model_ = model
        self.classes_ = np.array(model.labels)
        self.n_train_windows_ = model.trained_count
        return self

    def vote_distributions(self, X) -> list[VoteDistribution]:
        check_is_fitted(self, "model_")
        return classify_sequences(
            self.model_,
            X,
            list(self.model_.labels),
            mode=self.harmonization,
            trigger=self.trigger_class,
            weighting=self.vote_weighting,
        )

    def predict_proba(self, X) -> np.ndarray:
        dists = self.vote_distributions(X)
        return np.vstack([d.vector(self.model_.labels) for d in dists])

    def predict(self, X) -> np.ndarray:
        dists = self.vote_distributions(X)
        return np.array([d.predicted for d in dists], dtype=self.classes_.dtype)

    @property
    def n_representations_(self) -> int:
        check_is_fitted(self, "model_")
        return self.model_.n_nodes

    def save(self, path):
        check_is_fitted(self, "model_")
        save_model(self.model_, path)

    @classmethod
    def from_model(cls, model: Model, **params) -> EpisodicCognitionClassifier:
        """Wrap an existing (e.g. loaded) model in a fitted estimator."""
        est = cls(
            window=model.window.n,
            stride=model.window.stride,
            merge_threshold=model.core.merge_threshold,
            branch_threshold=model.core.branch_threshold,
            max_representations=model.core.max_representations,
            label_order=list(model.labels),
            codebook=model.codebook,
            **params,
        )
        return est._set_model(model)

    @classmethod
    def load(cls, path, **params) -> EpisodicCognitionClassifier:
        return cls.from_model(load_model(path), **params)
