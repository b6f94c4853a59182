"""Plain-text file formats.

Every index written to or read from disk is 1-based. Files are UTF-8 with
LF line endings and ``.`` decimals. Blank lines and lines starting with
``#`` are ignored.
"""

from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .sampling import PartialMatrix, SamplingSet


def _rows(path):
    """Yield ``(line_number, fields)`` for the data lines of a CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
                continue
            yield lineno, [f.strip() for f in fields]


def _parse_index(text: str, bound: int, lineno: int, what: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise InvalidInputError(f"line {lineno}: {what} index {text!r} is not an integer") from None
    if not 1 <= k <= bound:
        raise InvalidInputError(f"line {lineno}: {what} index {k} outside 1..{bound}")
    return k - 1


def _parse_float(text: str, lineno: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InvalidInputError(f"line {lineno}: value {text!r} is not a number") from None
    if not np.isfinite(v):
        raise InvalidInputError(f"line {lineno}: value must be finite")
    return v


def _read_indexed(path, dims, width: int):
    m, n = dims
    seen = {}
    out = []
    for lineno, fields in _rows(path):
        if len(fields) != width:
            raise InvalidInputError(f"line {lineno}: expected {width} fields, got {len(fields)}")
        i = _parse_index(fields[0], m, lineno, "row")
        j = _parse_index(fields[1], n, lineno, "column")
        if (i, j) in seen:
            raise InvalidInputError(
                f"line {lineno}: duplicate entry ({i + 1}, {j + 1}), first on line {seen[i, j]}")
        seen[i, j] = lineno
        out.append((i, j, _parse_float(fields[2], lineno) if width == 3 else None))
    return out


def load_mask(path, dims) -> SamplingSet:
    """Read ``i,j`` lines into a sampling set of shape ``dims``."""
    entries = _read_indexed(path, dims, 2)
    return SamplingSet.from_pairs(dims[0], dims[1], [(i, j) for i, j, _ in entries])


def save_mask(path, omega: SamplingSet) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j in omega.pairs():
            fh.write(f"{i + 1},{j + 1}\n")


def load_partial_matrix(path, dims) -> PartialMatrix:
    """Read ``i,j,value`` lines. An empty file gives an empty sampling set."""
    return PartialMatrix.from_entries(dims[0], dims[1], _read_indexed(path, dims, 3))


def save_partial_matrix(path, partial: PartialMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j, v in partial.entries():
            fh.write(f"{i + 1},{j + 1},{v!r}\n")


def load_matrix(path) -> np.ndarray:
    """Dense matrix, one comma-separated row per line."""
    rows = []
    for lineno, fields in _rows(path):
        rows.append([_parse_float(f, lineno) for f in fields])
    if not rows:
        raise InvalidInputError(f"{path}: no matrix rows")
    if len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{path}: rows have unequal lengths")
    return np.array(rows, dtype=float)


def save_matrix(path, M) -> None:
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")


def load_series(path) -> np.ndarray:
    """One value per line."""
    vals = []
    for lineno, fields in _rows(path):
        if len(fields) != 1:
            raise InvalidInputError(f"line {lineno}: expected one value per line")
        vals.append(_parse_float(fields[0], lineno))
    return np.array(vals, dtype=float)


def save_series(path, x) -> None:
    np.savetxt(path, np.asarray(x, dtype=float).ravel(), fmt="%.17g")


class RatingTable:
    """Triplet data re-indexed densely.

    ``users`` and ``items`` map the dense 0-based index back to the original
    identifiers; ``rows``, ``cols`` and ``values`` hold one rating each.
    """

    def __init__(self, users, items, rows, cols, values):
        self.users = list(users)
        self.items = list(items)
        self.rows = np.asarray(rows, dtype=int)
        self.cols = np.asarray(cols, dtype=int)
        self.values = np.asarray(values, dtype=float)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.users), len(self.items)

    def __len__(self) -> int:
        return int(self.values.size)

    def to_partial(self) -> PartialMatrix:
        m, n = self.shape
        return PartialMatrix.from_entries(m, n, zip(self.rows, self.cols, self.values))


def filter_min_count(triplets, min_count: int):
    """Drop users and items with fewer than ``min_count`` ratings until stable."""
    kept = list(triplets)
    while True:
        users = Counter(t[0] for t in kept)
        items = Counter(t[1] for t in kept)
        nxt = [t for t in kept if users[t[0]] >= min_count and items[t[1]] >= min_count]
        if len(nxt) == len(kept):
            return kept
        kept = nxt


def build_rating_table(triplets, min_count: int = 1) -> RatingTable:
    kept = filter_min_count(triplets, min_count)
    users = sorted({t[0] for t in kept})
    items = sorted({t[1] for t in kept})
    u_idx = {u: k for k, u in enumerate(users)}
    i_idx = {it: k for k, it in enumerate(items)}
    seen = set()
    rows, cols, vals = [], [], []
    for u, it, v in kept:
        key = (u_idx[u], i_idx[it])
        if key in seen:
            raise InvalidInputError(f"duplicate rating for user {u!r}, item {it!r}")
        seen.add(key)
        rows.append(key[0])
        cols.append(key[1])
        vals.append(v)
    return RatingTable(users, items, rows, cols, vals)


def load_triplets(path, min_count: int = 1) -> RatingTable:
    """Read ``user,item,rating`` lines; identifiers are kept as strings.

    A non-numeric rating on the first line is treated as a header.
    """
    raw = []
    for lineno, fields in _rows(path):
        if len(fields) < 3:
            raise InvalidInputError(f"line {lineno}: expected user,item,rating")
        try:
            v = float(fields[2])
        except ValueError:
            if not raw:
                continue
            raise InvalidInputError(f"line {lineno}: rating {fields[2]!r} is not a number") from None
        raw.append((fields[0], fields[1], v))
    return build_rating_table(raw, min_count)


def write_csv(path, header, rows) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
