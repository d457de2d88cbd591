"""Reference classifiers for sanity-checking the evaluation harness."""

from __future__ import annotations

from collections import Counter

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.preprocessing import normalize
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_sequences, check_sequences_labels
from .encoder import DNA_BASES
from .episodic import VoteDistribution, _from_counts
from .exceptions import InvalidInputError


class _DistributionClassifier(ClassifierMixin, BaseEstimator):
    def _classes(self, labels):
        if self.label_order is None:
            return sorted(set(labels))
        classes = list(self.label_order)
        if set(labels) - set(classes):
            raise InvalidInputError("training labels missing from label_order")
        return classes

    def predict_proba(self, X) -> np.ndarray:
        return np.vstack([d.vector(list(self.classes_)) for d in self.vote_distributions(X)])

    def predict(self, X) -> np.ndarray:
        return np.array([d.predicted for d in self.vote_distributions(X)], dtype=self.classes_.dtype)


class MajorityBaseline(_DistributionClassifier):
    """Predicts the training label distribution for every sample."""

    def __init__(self, label_order=None):
        self.label_order = label_order

    def fit(self, X, y):
        _, labels = check_sequences_labels(X, y)
        self.classes_ = np.array(self._classes(labels))
        self.counts_ = Counter(labels)
        return self

    def vote_distributions(self, X) -> list[VoteDistribution]:
        check_is_fitted(self, "counts_")
        dist = _from_counts(dict(self.counts_), list(self.classes_.tolist()))
        return [dist for _ in check_sequences(X)]


def kmer_codes(seq: str, k: int, alphabet=DNA_BASES) -> np.ndarray:
    """Integer code of every k-mer made only of ``alphabet`` symbols."""
    lookup = np.full(256, -1, dtype=np.int64)
    for i, s in enumerate(alphabet):
        lookup[ord(s)] = i
    idx = lookup[np.frombuffer(seq.encode("ascii"), dtype=np.uint8)]
    if len(idx) < k:
        return np.zeros(0, dtype=np.int64)
    win = np.lib.stride_tricks.sliding_window_view(idx, k)
    ok = (win >= 0).all(axis=1)
    powers = len(alphabet) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return win[ok] @ powers


def kmer_frequencies(seqs, k: int, alphabet=DNA_BASES) -> sparse.csr_matrix:
    """Row-normalised k-mer frequency vectors (rows sum to 1, or 0 if no k-mers)."""
    rows, cols, vals = [], [], []
    for i, s in enumerate(seqs):
        codes, counts = np.unique(kmer_codes(s, k, alphabet), return_counts=True)
        if len(codes):
            rows.append(np.full(len(codes), i))
            cols.append(codes)
            vals.append(counts / counts.sum())
    dim = len(alphabet) ** k
    if not rows:
        return sparse.csr_matrix((len(seqs), dim))
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(len(seqs), dim)
    )


class KmerCentroidClassifier(_DistributionClassifier):
    """Nearest-centroid classifier on k-mer frequency profiles.

    Each class centroid is the mean frequency vector of its training
    sequences; a test sample's class scores are its cosine similarities to
    the centroids, rescaled to sum to one.
    """

    def __init__(self, k=5, label_order=None):
        self.k = k
        self.label_order = label_order

    def fit(self, X, y):
        k = check_positive_int(self.k, "k")
        seqs, labels = check_sequences_labels(X, y)
        if k > min(len(s) for s in seqs):
            raise InvalidInputError(f"k={k} exceeds the shortest training sequence")
        self.classes_ = np.array(self._classes(labels))
        F = kmer_frequencies(seqs, k)
        y_arr = np.array(labels, dtype=object)
        cents = []
        for c in self.classes_.tolist():
            mask = y_arr == c
            cents.append(np.asarray(F[mask].mean(axis=0)).ravel() if mask.any() else np.zeros(F.shape[1]))
        self.centroids_ = np.vstack(cents)
        return self

    def vote_distributions(self, X) -> list[VoteDistribution]:
        check_is_fitted(self, "centroids_")
        seqs = check_sequences(X)
        if self.k > min(len(s) for s in seqs):
            raise InvalidInputError(f"k={self.k} exceeds the shortest test sequence")
        F = normalize(kmer_frequencies(seqs, self.k))
        C = normalize(self.centroids_)
        cos = np.asarray(F @ C.T)
        order = list(self.classes_.tolist())
        out = []
        for row in cos:
            total = row.sum()
            weights = row / total if total > 0 else np.full(len(order), 1.0 / len(order))
            out.append(_from_counts(dict(zip(order, weights.tolist())), order))
        return out


def majority_baseline(train, test) -> list[VoteDistribution]:
    if len(train) == 0:
        raise InvalidInputError("majority baseline needs a non-empty training set")
    model = MajorityBaseline(label_order=list(train.label_order)).fit(train.sequences, train.labels)
    return model.vote_distributions(test.sequences)


def kmer_centroid(train, test, k=5) -> list[VoteDistribution]:
    model = KmerCentroidClassifier(k=k, label_order=list(train.label_order))
    return model.fit(train.sequences, train.labels).vote_distributions(test.sequences)
