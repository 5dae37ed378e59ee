"""Integer wave vectors, centrally symmetric truncation sets and lattice sums.

Wave vectors are plain tuples of Python ints (or rows of an int64 array).
A :class:`TruncationSet` keeps its members in lexicographic order and also
records, for every member, the index of its negative and which member of the
``{k, -k}`` pair is the canonical representative (first nonzero component
positive).  The canonical half is what the spectrum classes store.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "EmptyTruncationError",
    "LatticeSumDivergenceError",
    "TruncationSet",
    "build_truncation",
    "wave_norm",
    "perp",
    "is_canonical",
    "convolution_pairs",
    "shell_partition",
    "shell_of",
    "ball_count",
    "lattice_sum",
    "lattice_sum_bracket",
    "tail_sum_bounds",
    "ball_volume",
]

# relative padding applied when rounding certified bounds outward
_OUTWARD = 1e-13

DEFAULT_CUTOFF = {2: 200, 3: 100}


class EmptyTruncationError(ValueError):
    pass


class LatticeSumDivergenceError(ValueError):
    pass


def wave_norm(k: Sequence[int]) -> float:
    return math.sqrt(sum(int(c) * int(c) for c in k))


def perp(k: Sequence[int]) -> tuple[int, int]:
    """(k1, k2) -> (-k2, k1)."""
    if len(k) != 2:
        raise ValueError("perp is only defined for two-dimensional wave vectors")
    return (-int(k[1]), int(k[0]))


def is_canonical(k: Sequence[int]) -> bool:
    for c in k:
        if c != 0:
            return c > 0
    return False


@dataclass(frozen=True, eq=False)
class TruncationSet:
    """Finite centrally symmetric subset of Z^d \\ {0}.

    ``points`` is an ``(M, d)`` int64 array in lexicographic order.  ``half``
    lists the indices of the canonical representatives (again lexicographic),
    ``neg[i]`` is the index of ``-points[i]`` and ``half_slot[i]`` is the
    position in ``half`` of whichever of ``points[i]``/``-points[i]`` is
    canonical.
    """

    d: int
    shape: str
    K_max: float
    points: np.ndarray
    norms: np.ndarray = field(repr=False)
    neg: np.ndarray = field(repr=False)
    half: np.ndarray = field(repr=False)
    half_slot: np.ndarray = field(repr=False)
    conj: np.ndarray = field(repr=False)
    _index: dict = field(repr=False)
    _grid: np.ndarray = field(repr=False)
    _reach: int = field(repr=False)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return (tuple(int(c) for c in p) for p in self.points)

    def __contains__(self, k) -> bool:
        return tuple(int(c) for c in k) in self._index

    def index_of(self, k) -> int:
        return self._index[tuple(int(c) for c in k)]

    @property
    def half_points(self) -> np.ndarray:
        return self.points[self.half]

    @property
    def half_norms(self) -> np.ndarray:
        return self.norms[self.half]

    @property
    def n_half(self) -> int:
        return len(self.half)

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        """Vectorised membership: index of each row of ``keys`` or -1."""
        keys = np.asarray(keys, dtype=np.int64)
        shifted = keys + self._reach
        inside = np.all((shifted >= 0) & (shifted < self._grid.shape[0]), axis=-1)
        out = np.full(keys.shape[:-1], -1, dtype=np.int64)
        sel = shifted[inside]
        out[inside] = self._grid[tuple(sel.T)]
        return out

    def same_as(self, other: "TruncationSet") -> bool:
        return self.d == other.d and np.array_equal(self.points, other.points)


def _from_points(d: int, shape: str, K_max: float, pts: np.ndarray) -> TruncationSet:
    order = np.lexsort(pts.T[::-1])
    pts = np.ascontiguousarray(pts[order])
    index = {tuple(int(c) for c in p): i for i, p in enumerate(pts)}
    neg = np.array([index[tuple(-int(c) for c in p)] for p in pts], dtype=np.int64)
    canon = np.array([is_canonical(p) for p in pts])
    half = np.flatnonzero(canon)
    slot_of = np.full(len(pts), -1, dtype=np.int64)
    slot_of[half] = np.arange(len(half))
    half_slot = np.where(canon, slot_of, slot_of[neg])
    reach = int(np.max(np.abs(pts))) if len(pts) else 0
    side = 2 * reach + 1
    grid = np.full((side,) * d, -1, dtype=np.int64)
    grid[tuple((pts + reach).T)] = np.arange(len(pts))
    norms = np.sqrt(np.sum(pts * pts, axis=1).astype(np.float64))
    for a in (pts, norms, neg, half, half_slot, canon, grid):
        a.setflags(write=False)
    return TruncationSet(
        d=d,
        shape=shape,
        K_max=float(K_max),
        points=pts,
        norms=norms,
        neg=neg,
        half=half,
        half_slot=half_slot,
        conj=~canon,
        _index=index,
        _grid=grid,
        _reach=reach,
    )


@lru_cache(maxsize=64)
def build_truncation(d: int, shape: str = "disk", K_max: float = 1.0) -> TruncationSet:
    """All nonzero lattice points with ``|k| <= K_max`` (disk) or
    ``max |k_i| <= K_max`` (square)."""
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if shape not in ("disk", "square"):
        raise ValueError(f"unknown truncation shape {shape!r}")
    if not K_max >= 1:
        raise EmptyTruncationError(f"K_max={K_max} < 1 leaves the truncation set empty")
    m = int(math.floor(K_max))
    axis = np.arange(-m, m + 1, dtype=np.int64)
    cube = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    sq = np.sum(cube * cube, axis=1)
    keep = sq > 0
    if shape == "disk":
        keep &= sq <= K_max * K_max
    return _from_points(d, shape, K_max, cube[keep])


def convolution_pairs(k, Z: TruncationSet) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Ordered pairs ``(l1, l2)`` in ``Z x Z`` with ``l1 + l2 = k``.

    Ordered by ``l2`` lexicographically; ``k`` need not belong to ``Z``.
    """
    k = np.asarray(k, dtype=np.int64)
    l1 = k[None, :] - Z.points
    idx = Z.lookup(l1)
    return [
        (tuple(int(c) for c in l1[j]), tuple(int(c) for c in Z.points[j]))
        for j in np.flatnonzero(idx >= 0)
    ]


def shell_of(k, l2) -> int:
    """0 (near), 1 (mid) or 2 (far) by comparing |l2| with |k|/2 and 2|k|.

    Integer comparisons: near iff 4|l2|^2 < |k|^2, far iff |l2|^2 > 4|k|^2.
    """
    kk = sum(int(c) * int(c) for c in k)
    ll = sum(int(c) * int(c) for c in l2)
    if 4 * ll < kk:
        return 0
    if ll <= 4 * kk:
        return 1
    return 2


def shell_partition(k, pairs):
    near, mid, far = [], [], []
    parts = (near, mid, far)
    for pair in pairs:
        parts[shell_of(k, pair[1])].append(pair)
    return near, mid, far


# ---------------------------------------------------------------------------
# lattice sums


def ball_volume(d: int, radius: float = 1.0) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@lru_cache(maxsize=16)
def _rep_counts(d: int, nmax: int) -> np.ndarray:
    """r_d(n) = #{l in Z^d : |l|^2 = n} for n <= nmax (origin included at n=0)."""
    r1 = np.zeros(nmax + 1, dtype=np.int64)
    x = 0
    while x * x <= nmax:
        r1[x * x] += 1 if x == 0 else 2
        x += 1
    r = r1
    for _ in range(d - 1):
        nxt = np.zeros(nmax + 1, dtype=np.int64)
        x = 0
        while x * x <= nmax:
            mult = 1 if x == 0 else 2
            nxt[x * x :] += mult * r[: nmax + 1 - x * x]
            x += 1
        r = nxt
    r.setflags(write=False)
    return r


def ball_count(d: int, R: float) -> int:
    """Exact number of lattice points (origin included) with |l| <= R."""
    if R < 0:
        return 0
    nmax = int(math.floor(R * R))
    return int(_rep_counts(d, nmax).sum())


def _shell_sum(d: int, p: float, n_lo: int, n_hi: int) -> float:
    """sum over n_lo < |l|^2 <= n_hi of |l|^-p (exact terms, fsum)."""
    if n_hi <= n_lo:
        return 0.0
    r = _rep_counts(d, n_hi)
    n = np.arange(n_lo + 1, n_hi + 1)
    cnt = r[n_lo + 1 : n_hi + 1]
    sel = cnt > 0
    terms = cnt[sel] * np.exp(-0.5 * p * np.log(n[sel].astype(np.float64)))
    return math.fsum(terms.tolist())


def tail_sum_bounds(d: int, p: float, R: float) -> tuple[float, float]:
    """Rigorous (lower, upper) bounds on sum_{|l| > R} |l|^-p for p > d.

    Stieltjes form  -R^-p N(R) + p int_R^inf N(s) s^(-p-1) ds  with the exact
    count N(R) and the cube-packing bounds V_d (s -/+ sqrt(d)/2)^d on N(s).
    """
    if p <= d:
        raise LatticeSumDivergenceError(f"sum of |l|^-{p} over Z^{d} diverges (need p > {d})")
    h = math.sqrt(d) / 2
    if R < h:
        raise ValueError(f"tail radius {R} must be at least sqrt(d)/2")
    vol = ball_volume(d)
    n_R = ball_count(d, R)
    boundary = -(R ** (-p)) * n_R
    up = lo = 0.0
    for j in range(d + 1):
        base = math.comb(d, j) * p * R ** (j - p) / (p - j)
        up += base * h ** (d - j)
        lo += base * (-h) ** (d - j)
    upper = boundary + vol * up
    lower = max(0.0, boundary + vol * lo)
    return lower * (1 - _OUTWARD), upper * (1 + _OUTWARD)


def _region(region, radius):
    if isinstance(region, tuple):
        region, radius = region
    if region not in ("all", "ball", "complement_ball"):
        raise ValueError(f"unknown region {region!r}")
    if region != "all" and radius is None:
        raise ValueError(f"region {region!r} needs a radius")
    return region, radius


def lattice_sum_bracket(d: int, p: float, region="all", radius: float | None = None,
                        cutoff: float | None = None) -> tuple[float, float]:
    """Certified ``(lower, upper)`` bracket of sum |l|^-p over a region of Z^d \\ {0}.

    ``region`` is ``"all"``, ``("ball", R)`` or ``("complement_ball", R)``
    (or pass ``radius`` separately).  Infinite regions are summed exactly up
    to ``cutoff`` and closed with :func:`tail_sum_bounds`.
    """
    region, radius = _region(region, radius)
    if region == "ball":
        # finite sum: the fsum of the terms, no tail to round
        s = _shell_sum(d, p, 0, int(math.floor(radius * radius)))
        return s, s
    if p <= d:
        raise LatticeSumDivergenceError(f"sum of |l|^-{p} over Z^{d} diverges (need p > {d})")
    inner = 0.0 if region == "all" else float(radius)
    rc = float(cutoff if cutoff is not None else DEFAULT_CUTOFF[d])
    rc = max(rc, math.floor(inner) + 1.0)
    n_in = int(math.floor(inner * inner))
    n_c = int(math.floor(rc * rc))
    body = _shell_sum(d, p, n_in, n_c)
    t_lo, t_hi = tail_sum_bounds(d, p, rc)
    return (body + t_lo) * (1 - _OUTWARD), (body + t_hi) * (1 + _OUTWARD)


def lattice_sum(d: int, p: float, region="all", radius: float | None = None,
                cutoff: float | None = None) -> float:
    """Certified upper bound of sum_{l in region, l != 0} |l|^-p."""
    return lattice_sum_bracket(d, p, region, radius, cutoff)[1]
