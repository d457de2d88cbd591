"""Input validation helpers for sequence estimators.

scikit-learn's ``check_array`` assumes numeric 2-D input, which does not fit
variable-length symbol sequences, so these helpers play the same role for
lists of strings.
"""

from __future__ import annotations

import numbers
from collections.abc import Sequence

import numpy as np

from .exceptions import InvalidInputError


def as_symbol_string(seq) -> str:
    """Return ``seq`` as a str; lists of single-character symbols are joined."""
    if isinstance(seq, str):
        return seq
    if isinstance(seq, bytes):
        return seq.decode("ascii")
    if isinstance(seq, np.ndarray) and seq.ndim == 0:
        return as_symbol_string(seq.item())
    if isinstance(seq, Sequence) or isinstance(seq, np.ndarray):
        parts = [str(s) for s in seq]
        if any(len(p) != 1 for p in parts):
            raise InvalidInputError("symbol lists must contain single-character symbols")
        return "".join(parts)
    raise InvalidInputError(f"expected a symbol sequence, got {type(seq).__name__}")


def check_sequences(X, *, allow_empty_set=False) -> list[str]:
    """Validate a collection of sequences and return it as a list of str."""
    if isinstance(X, (str, bytes)):
        raise InvalidInputError("expected a collection of sequences, got a single string")
    try:
        seqs = [as_symbol_string(s) for s in X]
    except TypeError:
        raise InvalidInputError("expected an iterable of sequences") from None
    if not seqs and not allow_empty_set:
        raise InvalidInputError("no sequences given")
    for i, s in enumerate(seqs):
        if not s:
            raise InvalidInputError(f"sequence {i} is empty")
    return seqs


def check_sequences_labels(X, y) -> tuple[list[str], list]:
    seqs = check_sequences(X)
    labels = list(np.asarray(y, dtype=object).ravel()) if not isinstance(y, list) else list(y)
    if len(labels) != len(seqs):
        raise InvalidInputError(
            f"found {len(seqs)} sequences but {len(labels)} labels"
        )
    return seqs, [_plain(v) for v in labels]


def check_ratio(value, name) -> float:
    if not isinstance(value, numbers.Real) or not 0.0 <= float(value) <= 1.0:
        raise InvalidInputError(f"{name} must be a ratio in [0, 1], got {value!r}")
    return float(value)


def check_positive_int(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise InvalidInputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _plain(v):
    # numpy scalars -> python scalars so labels serialize and compare cleanly
    return v.item() if isinstance(v, np.generic) else v
