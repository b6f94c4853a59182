"""Sampling sets, partial matrices and the mask generators.

Indices are 0-based throughout the Python API. File formats (see
:mod:`isoplete.io`) use 1-based indices.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyLineError, InvalidInputError


class SamplingSet:
    """A 2-D index set ``Omega`` inside ``{0..m-1} x {0..n-1}``.

    Stored as a read-only boolean mask. ``row(i)`` is the set of observed
    columns in row ``i``; ``column(j)`` the observed rows in column ``j``.
    """

    __slots__ = ("_mask",)

    def __init__(self, mask):
        mask = np.array(mask, dtype=bool, copy=True)
        if mask.ndim != 2:
            raise InvalidInputError(f"mask must be 2-D, got shape {mask.shape}")
        mask.setflags(write=False)
        self._mask = mask

    @classmethod
    def from_pairs(cls, m: int, n: int, pairs) -> "SamplingSet":
        mask = np.zeros((m, n), dtype=bool)
        for i, j in pairs:
            if not (0 <= i < m and 0 <= j < n):
                raise InvalidInputError(f"index ({i}, {j}) outside {m}x{n}")
            if mask[i, j]:
                raise InvalidInputError(f"duplicate index ({i}, {j})")
            mask[i, j] = True
        return cls(mask)

    @classmethod
    def full(cls, m: int, n: int) -> "SamplingSet":
        return cls(np.ones((m, n), dtype=bool))

    @classmethod
    def empty(cls, m: int, n: int) -> "SamplingSet":
        return cls(np.zeros((m, n), dtype=bool))

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def shape(self) -> tuple[int, int]:
        return self._mask.shape

    @property
    def m(self) -> int:
        return self._mask.shape[0]

    @property
    def n(self) -> int:
        return self._mask.shape[1]

    def __len__(self) -> int:
        return int(self._mask.sum())

    def __contains__(self, ij) -> bool:
        i, j = ij
        return bool(0 <= i < self.m and 0 <= j < self.n and self._mask[i, j])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SamplingSet):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._mask, other._mask))

    def __hash__(self):
        return hash((self.shape, self._mask.tobytes()))

    def __repr__(self) -> str:
        return f"SamplingSet({self.m}x{self.n}, |Omega|={len(self)})"

    def pairs(self) -> np.ndarray:
        """Observed ``(i, j)`` pairs in row-major order, shape ``(|Omega|, 2)``."""
        return np.argwhere(self._mask)

    def row(self, i: int) -> np.ndarray:
        if not 0 <= i < self.m:
            raise IndexError(f"row index {i} out of range for m={self.m}")
        return np.flatnonzero(self._mask[i])

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n:
            raise IndexError(f"column index {j} out of range for n={self.n}")
        return np.flatnonzero(self._mask[:, j])

    def row_counts(self) -> np.ndarray:
        return self._mask.sum(axis=1)

    def column_counts(self) -> np.ndarray:
        return self._mask.sum(axis=0)

    def transpose(self) -> "SamplingSet":
        return SamplingSet(self._mask.T)

    @property
    def T(self) -> "SamplingSet":
        return self.transpose()

    def empty_rows(self) -> np.ndarray:
        return np.flatnonzero(self.row_counts() == 0)

    def empty_columns(self) -> np.ndarray:
        return np.flatnonzero(self.column_counts() == 0)

    def require_nonempty_columns(self) -> None:
        empty = self.empty_columns()
        if empty.size:
            raise EmptyLineError("column", empty)

    def require_nonempty_lines(self) -> None:
        empty = self.empty_rows()
        if empty.size:
            raise EmptyLineError("row", empty)
        self.require_nonempty_columns()

    def min_observed_fraction(self) -> float:
        """Smallest observed fraction over all rows and columns."""
        return float(min(self.row_counts().min() / self.n, self.column_counts().min() / self.m))


class PartialMatrix:
    """Observed entries of an m x n real matrix on a sampling set.

    ``values`` is a dense m x n array holding the observations; entries
    outside ``omega`` are stored as zero and carry no meaning.
    """

    __slots__ = ("omega", "values")

    def __init__(self, omega: SamplingSet, values):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != omega.shape:
            raise InvalidInputError(f"values shape {values.shape} != sampling shape {omega.shape}")
        if not np.all(np.isfinite(values[omega.mask])):
            raise InvalidInputError("observed values must be finite")
        values[~omega.mask] = 0.0
        values.setflags(write=False)
        self.omega = omega
        self.values = values

    @classmethod
    def from_dense(cls, L, omega: SamplingSet) -> "PartialMatrix":
        return cls(omega, np.where(omega.mask, np.asarray(L, dtype=float), 0.0))

    @classmethod
    def from_entries(cls, m: int, n: int, entries) -> "PartialMatrix":
        """Build from ``(i, j, value)`` triples (0-based)."""
        entries = list(entries)
        omega = SamplingSet.from_pairs(m, n, [(i, j) for i, j, _ in entries])
        values = np.zeros((m, n))
        for i, j, v in entries:
            values[i, j] = v
        return cls(omega, values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.omega.shape

    @property
    def mask(self) -> np.ndarray:
        return self.omega.mask

    def observed(self) -> np.ndarray:
        """Observed values in the row-major order of ``omega.pairs()``."""
        return self.values[self.omega.mask]

    def entries(self):
        for i, j in self.omega.pairs():
            yield int(i), int(j), float(self.values[i, j])

    def transpose(self) -> "PartialMatrix":
        return PartialMatrix(self.omega.transpose(), self.values.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartialMatrix):
            return NotImplemented
        return self.omega == other.omega and bool(np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        m, n = self.shape
        return f"PartialMatrix({m}x{n}, |Omega|={len(self.omega)})"


def gen_uniform_mask(m: int, n: int, rho: float, seed=None) -> SamplingSet:
    """Bernoulli mask: each cell kept independently with probability ``rho``."""
    if not 0 < rho <= 1:
        raise InvalidInputError("rho must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    return SamplingSet(rng.random((m, n)) < rho)


def gen_diagonal_band_mask(m: int, n: int, fraction: float) -> SamplingSet:
    """Deterministic circular band around the main diagonal.

    Cell ``(i, j)`` (1-based) is kept iff its circular diagonal distance
    ``min(|i n - j m|, m n - |i n - j m|) / (m n)`` is at most ``fraction / 2``.
    The kept fraction matches ``fraction`` up to one band width.
    """
    if not 0 < fraction <= 1:
        raise InvalidInputError("fraction must lie in (0, 1]")
    i = np.arange(1, m + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    d = np.abs(i * n - j * m)
    d = np.minimum(d, m * n - d)
    # slack absorbs rounding in fraction * m * n
    return SamplingSet(2 * d <= fraction * m * n + 1e-9)


def circulant_index(m: int) -> np.ndarray:
    """``idx[t, j] = (t - j) mod m``: source index of circulant entry ``(t, j)``."""
    t = np.arange(m)[:, None]
    j = np.arange(m)[None, :]
    return (t - j) % m


def mask_from_convolution(y) -> SamplingSet:
    """Support of the circulant matrix of a binary vector ``y``."""
    y = np.asarray(y)
    if y.ndim != 1 or not np.all((y == 0) | (y == 1)):
        raise InvalidInputError("y must be a binary vector")
    return SamplingSet(y.astype(bool)[circulant_index(y.size)])
