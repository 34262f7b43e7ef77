"""Dynamic time warping distance between two magnitude sequences.

    DTW_q(a, b) = min over admissible paths P of (sum_{(i,j) in P} |a_i - b_j|**q) ** (1/q)

A path starts at (0, 0), ends at (n-1, m-1) and advances i, j or both by one
per step. No step weights, no length normalisation. ``a`` is the reference
sequence, ``b`` the sequence under test.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import ConfigurationError, DomainError

BRUTEFORCE_MAX_LEN = 8


@dataclass(frozen=True)
class DtwConfig:
    """``q``: path-cost exponent. ``window``: Sakoe-Chiba half-width (None: no limit).
    ``scale``: magnitude scale ("linear" or "decibel") the verification pipeline
    feeds to DTW; the DTW functions themselves ignore it. Decibels are the default
    because a series-fed port compresses |S11| close to one in linear units.
    """

    q: float = 2.0
    window: Optional[int] = None
    scale: str = "decibel"

    def __post_init__(self):
        if self.scale not in ("linear", "decibel"):
            raise ConfigurationError(f"unknown magnitude scale {self.scale!r}")
        if not self.q >= 1:
            raise ConfigurationError(f"q must be >= 1, got {self.q!r}")
        if self.window is not None and (self.window < 0 or int(self.window) != self.window):
            raise ConfigurationError(f"window must be a non-negative integer, got {self.window!r}")


@dataclass(frozen=True)
class AlignmentPath:
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs or pairs[0] != (0, 0):
            raise DomainError("alignment path must start at (0, 0)")
        for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
            if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1), (1, 1)):
                raise DomainError(f"illegal step {(i0, j0)} -> {(i1, j1)}")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def end(self) -> tuple[int, int]:
        return self.pairs[-1]

    def cost(self, a, b, q: float = 2.0) -> float:
        a, b = np.asarray(a, float), np.asarray(b, float)
        idx = np.array(self.pairs)
        return float(np.sum(np.abs(a[idx[:, 0]] - b[idx[:, 1]]) ** q) ** (1.0 / q))


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: Optional[AlignmentPath]
    band: object = None

    def __iter__(self):
        yield self.distance
        yield self.path


@numba.njit(cache=True, nogil=True)
def _local_cost(x, y, q):
    d = abs(x - y)
    if q == 1.0:
        return d
    if q == 2.0:
        return d * d
    return d ** q


@numba.njit(cache=True, nogil=True)
def _accumulated_cost(a, b, q, window):
    n, m = a.size, b.size
    acc = np.full((n, m), np.inf)
    for i in range(n):
        lo, hi = 0, m
        if window >= 0:
            lo = max(0, i - window)
            hi = min(m, i + window + 1)
        for j in range(lo, hi):
            c = _local_cost(a[i], b[j], q)
            if i == 0 and j == 0:
                acc[i, j] = c
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = acc[i - 1, j - 1]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            acc[i, j] = c + best
    return acc


@numba.njit(cache=True, nogil=True)
def _final_cost(a, b, q, window):
    # Two-row version of _accumulated_cost for long sequences.
    n, m = a.size, b.size
    prev = np.full(m, np.inf)
    cur = np.full(m, np.inf)
    for i in range(n):
        lo, hi = 0, m
        if window >= 0:
            lo = max(0, i - window)
            hi = min(m, i + window + 1)
        cur[:] = np.inf
        for j in range(lo, hi):
            c = _local_cost(a[i], b[j], q)
            if i == 0 and j == 0:
                cur[j] = c
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = prev[j - 1]
            if j > 0 and cur[j - 1] < best:
                best = cur[j - 1]
            if i > 0 and prev[j] < best:
                best = prev[j]
            cur[j] = c + best
        prev, cur = cur, prev
    return prev[m - 1]


@numba.njit(cache=True, nogil=True)
def _backtrack(acc):
    n, m = acc.shape
    i, j = n - 1, m - 1
    out = np.empty((n + m - 1, 2), dtype=np.int64)
    k = 0
    out[k, 0], out[k, 1] = i, j
    while i > 0 or j > 0:
        # ties: diagonal, then advance test index j, then reference index i
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, left, up = acc[i - 1, j - 1], acc[i, j - 1], acc[i - 1, j]
            if diag <= left and diag <= up:
                i -= 1
                j -= 1
            elif left <= up:
                j -= 1
            else:
                i -= 1
        k += 1
        out[k, 0], out[k, 1] = i, j
    return out[: k + 1][::-1]


def _prepare(a, b, cfg):
    cfg = cfg or DtwConfig()
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise DomainError("DTW expects 1-D sequences")
    if a.size == 0 or b.size == 0:
        raise DomainError("DTW needs non-empty sequences")
    window = -1
    if cfg.window is not None:
        window = int(cfg.window)
        if abs(a.size - b.size) > window:
            raise ConfigurationError(
                f"window {window} cannot reach the end cell for lengths {a.size} and {b.size}")
    return a, b, float(cfg.q), window


def dtw_distance(a, b, cfg: Optional[DtwConfig] = None) -> DtwResult:
    """DTW distance and an optimal alignment path, by dynamic programming in O(n*m)."""
    a, b, q, window = _prepare(a, b, cfg)
    acc = _accumulated_cost(a, b, q, window)
    path = AlignmentPath(tuple(map(tuple, _backtrack(acc))))
    return DtwResult(float(acc[-1, -1] ** (1.0 / q)), path)


def dtw_score(a, b, cfg: Optional[DtwConfig] = None) -> float:
    """Same distance as :func:`dtw_distance` without the path, in O(m) memory."""
    a, b, q, window = _prepare(a, b, cfg)
    return float(_final_cost(a, b, q, window) ** (1.0 / q))


def admissible_paths(n: int, m: int, window: Optional[int] = None):
    """Yield every admissible alignment path for lengths ``n`` and ``m``."""
    steps = ((1, 1), (0, 1), (1, 0))

    def extend(path):
        i, j = path[-1]
        if (i, j) == (n - 1, m - 1):
            yield tuple(path)
            return
        for di, dj in steps:
            ni, nj = i + di, j + dj
            if ni >= n or nj >= m:
                continue
            if window is not None and abs(ni - nj) > window:
                continue
            path.append((ni, nj))
            yield from extend(path)
            path.pop()

    yield from extend([(0, 0)])


def dtw_distance_bruteforce(a, b, cfg: Optional[DtwConfig] = None) -> float:
    """Minimum path cost by explicit enumeration. Test oracle; lengths <= 8 only."""
    a, b, q, window = _prepare(a, b, cfg)
    if a.size > BRUTEFORCE_MAX_LEN or b.size > BRUTEFORCE_MAX_LEN:
        raise DomainError(f"brute force refuses sequences longer than {BRUTEFORCE_MAX_LEN}")
    cost = np.abs(a[:, None] - b[None, :]) ** q
    best = min(
        sum(cost[i, j] for i, j in path)
        for path in admissible_paths(a.size, b.size, None if window < 0 else window)
    )
    return float(best ** (1.0 / q))
