"""Sliding-window construction and SDR encoding of symbol sequences.

Each window of ``n`` symbols becomes one sparse binary vector of width
``n * bits_per_symbol``; position ``p`` in the window owns the bit band
``[p * bits_per_symbol, (p + 1) * bits_per_symbol)``.

Internally windows are handled as rows of little-endian packed ``uint64``
words, so that bit ``i`` of an SDR lives in word ``i // 64`` at bit
``i % 64``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_symbol_string, check_positive_int, check_sequences
from .exceptions import InvalidInputError, UnknownSymbolError

DNA_BASES = "ACGT"
# IUPAC ambiguity codes; all of them encode to the empty set.
DNA_AMBIGUITY = "NRYSWKMBDHV"
PAD_SYMBOL = "N"


@dataclass(frozen=True)
class Sdr:
    """Sparse binary vector stored as its sorted active bit indices."""

    width: int
    active: tuple[int, ...] = ()

    def __post_init__(self):
        active = tuple(int(i) for i in self.active)
        if self.width < 1:
            raise InvalidInputError(f"SDR width must be positive, got {self.width}")
        if any(b <= a for a, b in zip(active, active[1:])):
            raise InvalidInputError("SDR indices must be unique and strictly increasing")
        if active and (active[0] < 0 or active[-1] >= self.width):
            raise InvalidInputError(f"SDR index out of range for width {self.width}")
        object.__setattr__(self, "active", active)

    @classmethod
    def from_indices(cls, width, indices):
        return cls(width, tuple(sorted(set(int(i) for i in indices))))

    @property
    def n_words(self) -> int:
        return n_words(self.width)

    def to_packed(self) -> np.ndarray:
        words = np.zeros(self.n_words, dtype=np.uint64)
        for i in self.active:
            words[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
        return words

    @classmethod
    def from_packed(cls, words, width) -> Sdr:
        bits = np.unpackbits(
            np.ascontiguousarray(words, dtype="<u8").view(np.uint8), bitorder="little"
        )
        return cls(width, tuple(np.flatnonzero(bits[:width]).tolist()))

    def __len__(self):
        return len(self.active)


def n_words(width: int) -> int:
    return (width + 63) // 64


@dataclass(frozen=True)
class WindowConfig:
    n: int = 5
    stride: int = 1

    def __post_init__(self):
        check_positive_int(self.n, "window length n")
        check_positive_int(self.stride, "stride")


@dataclass(frozen=True)
class Codebook:
    """Maps each symbol of an alphabet to a set of active bits.

    Symbols whose code is empty are ambiguity symbols: they contribute no
    bits, so they add nothing to (and take nothing from) similarity.
    """

    alphabet: tuple[str, ...]
    bits_per_symbol: int
    code: MappingProxyType = field(repr=False)

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        object.__setattr__(self, "alphabet", alphabet)
        check_positive_int(self.bits_per_symbol, "bits_per_symbol")
        if len(set(alphabet)) != len(alphabet) or any(len(s) != 1 for s in alphabet):
            raise InvalidInputError("alphabet must list distinct single-character symbols")
        code = {s: frozenset(int(i) for i in self.code.get(s, ())) for s in alphabet}
        extra = set(self.code) - set(alphabet)
        if extra:
            raise InvalidInputError(f"code given for symbols outside the alphabet: {sorted(extra)}")
        seen: set[int] = set()
        for s in alphabet:
            bits = code[s]
            if any(i < 0 or i >= self.bits_per_symbol for i in bits):
                raise InvalidInputError(f"code for {s!r} has an index >= bits_per_symbol")
            if seen & bits:
                raise InvalidInputError(f"code for {s!r} overlaps another symbol's code")
            seen |= bits
        object.__setattr__(self, "code", MappingProxyType(code))

    @classmethod
    def one_hot(cls, symbols=DNA_BASES, ambiguous=DNA_AMBIGUITY) -> Codebook:
        """One active bit per symbol, in alphabet order; ``ambiguous`` map to nothing."""
        symbols = tuple(symbols)
        code = {s: (i,) for i, s in enumerate(symbols)}
        code.update({s: () for s in ambiguous if s not in code})
        return cls(symbols + tuple(s for s in ambiguous if s not in symbols), len(symbols), code)

    @property
    def ambiguous(self) -> tuple[str, ...]:
        return tuple(s for s in self.alphabet if not self.code[s])

    def _dense_table(self) -> tuple[np.ndarray, np.ndarray]:
        # (byte -> symbol row) lookup and (symbol row -> dense bit band)
        lookup = np.full(256, -1, dtype=np.int64)
        table = np.zeros((len(self.alphabet), self.bits_per_symbol), dtype=np.uint8)
        for row, s in enumerate(self.alphabet):
            lookup[ord(s)] = row
            table[row, list(self.code[s])] = 1
        return lookup, table

    def to_dict(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "bits_per_symbol": self.bits_per_symbol,
            "code": {s: sorted(self.code[s]) for s in self.alphabet},
        }

    @classmethod
    def from_dict(cls, d) -> Codebook:
        return cls(tuple(d["alphabet"]), int(d["bits_per_symbol"]), d["code"])


DEFAULT_CODEBOOK = Codebook.one_hot()


def windows(sequence, cfg: WindowConfig = WindowConfig(), pad_symbol=PAD_SYMBOL) -> list[str]:
    """Split a sequence into windows of ``cfg.n`` symbols, ``cfg.stride`` apart.

    A sequence shorter than the window yields a single window right-padded
    with ``pad_symbol``.
    """
    seq = as_symbol_string(sequence)
    if not seq:
        raise InvalidInputError("cannot window an empty sequence")
    n, stride = cfg.n, cfg.stride
    if len(seq) < n:
        return [seq + pad_symbol * (n - len(seq))]
    return [seq[k : k + n] for k in range(0, len(seq) - n + 1, stride)]


def window_count(length: int, cfg: WindowConfig) -> int:
    if length < 1:
        raise InvalidInputError("sequence length must be positive")
    if length < cfg.n:
        return 1
    return (length - cfg.n) // cfg.stride + 1


def encode_symbol(cb: Codebook, s: str, position: int = 0) -> Sdr:
    if s not in cb.code:
        raise UnknownSymbolError(s, position)
    return Sdr(cb.bits_per_symbol, tuple(sorted(cb.code[s])))


def encode_window(cb: Codebook, w, n: int | None = None) -> Sdr:
    """Encode one window; position ``p`` is offset by ``p * bits_per_symbol``."""
    w = as_symbol_string(w)
    if n is not None and len(w) != n:
        raise InvalidInputError(f"window has length {len(w)}, expected {n}")
    if not w:
        raise InvalidInputError("cannot encode an empty window")
    b = cb.bits_per_symbol
    active = []
    for p, s in enumerate(w):
        if s not in cb.code:
            raise UnknownSymbolError(s, p)
        active.extend(p * b + i for i in sorted(cb.code[s]))
    return Sdr(len(w) * b, tuple(active))


class SequenceEncoder:
    """Vectorised window encoder producing packed ``uint64`` rows.

    Equivalent to calling :func:`encode_window` on every window from
    :func:`windows`, but works on whole sequences at once.
    """

    def __init__(self, codebook: Codebook = DEFAULT_CODEBOOK, window: WindowConfig = WindowConfig()):
        self.codebook = codebook
        self.window = window
        self.width = window.n * codebook.bits_per_symbol
        self.n_words = n_words(self.width)
        self._lookup, self._table = codebook._dense_table()
        if PAD_SYMBOL not in codebook.code:
            self._pad = None
        else:
            self._pad = PAD_SYMBOL

    def symbol_rows(self, seq: str, context=None) -> np.ndarray:
        try:
            raw = np.frombuffer(seq.encode("ascii"), dtype=np.uint8)
        except UnicodeEncodeError:
            bad = next(i for i, ch in enumerate(seq) if ord(ch) > 127)
            raise UnknownSymbolError(seq[bad], bad, context) from None
        rows = self._lookup[raw]
        if (rows < 0).any():
            pos = int(np.flatnonzero(rows < 0)[0])
            raise UnknownSymbolError(seq[pos], pos, context)
        return rows

    def encode(self, sequence, context=None) -> np.ndarray:
        """Packed SDRs of every window of ``sequence``, shape (n_windows, n_words)."""
        seq = as_symbol_string(sequence)
        if not seq:
            raise InvalidInputError("cannot encode an empty sequence")
        n, stride = self.window.n, self.window.stride
        rows = self.symbol_rows(seq, context)
        if len(seq) < n:
            if self._pad is None:
                raise InvalidInputError(
                    f"sequence shorter than the window and codebook has no {PAD_SYMBOL!r}"
                )
            pad = np.full(n - len(seq), self._lookup[ord(self._pad)], dtype=rows.dtype)
            rows = np.concatenate([rows, pad])
        win = sliding_window_view(rows, n)[::stride]
        dense = self._table[win].reshape(len(win), self.width)
        return pack_dense(dense, self.n_words)

    def encode_many(self, sequences) -> tuple[np.ndarray, np.ndarray]:
        """Stack the windows of many sequences; also return per-sequence window counts."""
        blocks = [self.encode(s, context=f"sequence {i}") for i, s in enumerate(sequences)]
        counts = np.array([len(b) for b in blocks], dtype=np.int64)
        if not blocks:
            return np.zeros((0, self.n_words), dtype=np.uint64), counts
        return np.concatenate(blocks), counts


def pack_dense(dense: np.ndarray, words: int) -> np.ndarray:
    """Pack a (rows, width) 0/1 matrix into (rows, words) little-endian uint64."""
    packed = np.packbits(dense, axis=1, bitorder="little")
    nbytes = words * 8
    if packed.shape[1] < nbytes:
        packed = np.pad(packed, ((0, 0), (0, nbytes - packed.shape[1])))
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_dense(packed: np.ndarray, width: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(packed, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :width]


class WindowEncoder(TransformerMixin, BaseEstimator):
    """scikit-learn transformer turning sequences into windowed SDR rows.

    ``transform`` returns a dense 0/1 matrix with one row per window, all
    sequences stacked in order; ``window_counts`` tells how many rows each
    sequence contributed.

    Parameters
    ----------
    window : int, default=5
        Number of symbols per window.
    stride : int, default=1
        Step between consecutive window starts.
    codebook : Codebook or None
        Symbol code; ``None`` means one-hot DNA with IUPAC ambiguity codes.
    """

    def __init__(self, window=5, stride=1, codebook=None):
        self.window = window
        self.stride = stride
        self.codebook = codebook

    def _encoder(self) -> SequenceEncoder:
        return SequenceEncoder(self.codebook or DEFAULT_CODEBOOK, WindowConfig(self.window, self.stride))

    def fit(self, X, y=None):
        check_sequences(X)
        enc = self._encoder()
        self.n_features_out_ = enc.width
        return self

    def transform(self, X) -> np.ndarray:
        enc = self._encoder()
        packed, _ = enc.encode_many(check_sequences(X))
        return unpack_dense(packed, enc.width)

    def window_counts(self, X) -> np.ndarray:
        cfg = WindowConfig(self.window, self.stride)
        return np.array([window_count(len(s), cfg) for s in check_sequences(X)], dtype=np.int64)
