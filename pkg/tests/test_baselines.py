import numpy as np
import pytest

from synthcog.baselines import (
    KmerCentroidClassifier,
    MajorityBaseline,
    kmer_centroid,
    kmer_codes,
    majority_baseline,
)
from synthcog.datasets import LabeledSequenceSet
from synthcog.exceptions import InvalidInputError
from synthcog.metrics import roc_auc_binary, roc_auc_macro_ovr


def labeled(records, order=None):
    return LabeledSequenceSet.from_records("t", "train", records, order)


def test_majority_distribution():
    train = labeled([("ACGT", "pos")] * 70 + [("ACGT", "neg")] * 30, ("pos", "neg"))
    test = labeled([("GGGG", "pos"), ("TTTT", "neg")], ("pos", "neg"))
    dists = majority_baseline(train, test)
    assert all(d.probs == {"pos": 0.7, "neg": 0.3} for d in dists)
    assert roc_auc_binary([d.prob("pos") for d in dists], [1, 0]) == 0.5


def test_majority_estimator():
    est = MajorityBaseline().fit(["AC", "GT", "TT"], ["b", "a", "b"])
    np.testing.assert_allclose(est.predict_proba(["A"]), [[1 / 3, 2 / 3]])
    assert est.predict(["A", "C"]).tolist() == ["b", "b"]


def test_kmer_codes():
    # base-4 codes with A=0, C=1, G=2, T=3; k-mers with N are dropped
    assert kmer_codes("ACGNT", 2).tolist() == [1, 6]


def test_kmer_centroid_planted(planted):
    train, test = planted
    dists = kmer_centroid(train, test, 5)
    assert roc_auc_macro_ovr(dists, test.labels) >= 0.95
    for d in dists:
        assert sum(d.probs.values()) == pytest.approx(1.0, abs=1e-12)


def test_kmer_centroids_sum_to_one(planted):
    train, _ = planted
    est = KmerCentroidClassifier(k=3).fit(train.sequences, train.labels)
    np.testing.assert_allclose(est.centroids_.sum(axis=1), 1.0)


def test_no_signal_is_near_chance():
    rng = np.random.default_rng(5)
    seqs = ["".join(rng.choice(list("ACGT"), 60)) for _ in range(400)]
    labels = ["a", "b"] * 200
    train = labeled(list(zip(seqs[:200], labels[:200])))
    test = labeled(list(zip(seqs[200:], labels[200:])))
    auc = roc_auc_macro_ovr(kmer_centroid(train, test, 3), test.labels)
    assert abs(auc - 0.5) < 0.1


def test_k_too_large():
    with pytest.raises(InvalidInputError):
        KmerCentroidClassifier(k=6).fit(["ACGTA", "ACGTAC"], ["a", "b"])
