"""Deterministic forcing with prescribed Fourier envelopes.

``g_k(t) = envelope(k) * exp(i theta(k)) * m(t)`` (times a fixed real unit
vector orthogonal to ``k`` in 3D).  ``theta`` is a seeded hash of the wave
vector with ``theta(-k) = -theta(k)``, and ``|m(t)| <= 1``, so every
envelope inequality holds with the configured constant.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .lattice import DEFAULT_CUTOFF, TruncationSet, _rep_counts, lattice_sum, wave_norm

__all__ = [
    "ForcingSpec",
    "envelope",
    "sample_forcing",
    "forcing_half",
    "g_star",
    "g_star_lattice",
    "transverse_unit",
]

KINDS = ("zero", "power_law", "exponential", "trig_poly")

# relative shrink of the sampled modulus so rounding never lifts it above
# the envelope (four units in the last place)
_SHRINK = 1.0 - 4 * 2.0**-53


@dataclass(frozen=True)
class ForcingSpec:
    kind: str = "zero"
    G: float = 0.0
    r: float = 3.0
    eps: float = 0.5
    gamma: float = 0.0
    delta: float = 0.0
    alpha_ref: float = 2.0
    band: tuple = field(default_factory=tuple)
    temporal: str = "constant"
    frequency: float = 0.0
    phase_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.G < 0:
            raise ValueError("forcing amplitude G must be >= 0")
        if self.kind in ("power_law", "exponential") and not self.eps > 0:
            raise ValueError("forcing margin eps must be > 0")
        if self.kind == "exponential" and not (self.gamma > 0 and self.delta > 0):
            raise ValueError("exponential forcing needs gamma > 0 and delta > 0")
        if self.temporal not in ("constant", "sinusoid"):
            raise ValueError(f"unknown temporal mode {self.temporal!r}")
        band = tuple(tuple(int(c) for c in k) for k in self.band)
        if any(not any(k) for k in band):
            raise ValueError("trig_poly band may not contain the zero mode")
        object.__setattr__(self, "band", band)

    @property
    def power(self) -> float:
        """Exponent ``r - alpha_ref + eps`` of the algebraic factor."""
        return self.r - self.alpha_ref + self.eps

    def to_dict(self) -> dict:
        out = asdict(self)
        out["band"] = [list(k) for k in self.band]
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ForcingSpec":
        obj = dict(obj)
        obj["band"] = tuple(tuple(k) for k in obj.get("band", ()))
        return cls(**obj)


def _band_set(spec: ForcingSpec) -> frozenset:
    out = set()
    for k in spec.band:
        out.add(k)
        out.add(tuple(-c for c in k))
    return frozenset(out)


def _envelope_norms(spec: ForcingSpec, norm):
    norm = np.asarray(norm, dtype=np.float64)
    if spec.kind == "zero":
        return np.zeros_like(norm)
    e = spec.G * np.exp(-spec.power * np.log(norm))
    if spec.kind == "exponential":
        e = e * np.exp(-spec.gamma * np.exp((1 + spec.delta) * np.log(norm)))
    return e


def envelope(spec: ForcingSpec, k) -> float:
    """Upper bound of ``|g_k(t)|`` over all ``t``."""
    if not any(k):
        raise ValueError("forcing is not defined at k = 0")
    if spec.kind == "trig_poly":
        return spec.G if tuple(int(c) for c in k) in _band_set(spec) else 0.0
    return float(_envelope_norms(spec, wave_norm(k)))


# splitmix64, vectorised on uint64 arrays (wrapping arithmetic)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix(x):
    x = x + _GOLD
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _phase(seed: int, pts: np.ndarray) -> np.ndarray:
    """theta(k) in [0, 2 pi) for canonical ``pts``; callers flip sign for -k."""
    with np.errstate(over="ignore"):
        h = np.full(len(pts), np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        for c in range(pts.shape[1]):
            h = _mix(h ^ pts[:, c].astype(np.int64).view(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (2 * math.pi / 2.0**53)


def _canonical_rows(pts: np.ndarray):
    """Canonical representative of each row and a +-1 flag (-1 if flipped)."""
    pts = np.asarray(pts, dtype=np.int64)
    first = np.zeros(len(pts), dtype=np.int64)
    found = np.zeros(len(pts), dtype=bool)
    for c in range(pts.shape[1]):
        take = ~found & (pts[:, c] != 0)
        first[take] = pts[take, c]
        found |= take
    sign = np.where(first > 0, 1, -1)
    return pts * sign[:, None], sign


def transverse_unit(pts: np.ndarray) -> np.ndarray:
    """Real unit vectors orthogonal to each 3D row, even in ``k``."""
    can, _ = _canonical_rows(pts)
    can = can.astype(np.float64)
    # cross with the coordinate axis least aligned with k
    axis = np.argmin(np.abs(can), axis=1)
    e = np.zeros_like(can)
    e[np.arange(len(can)), axis] = 1.0
    v = np.cross(can, e)
    return v / np.linalg.norm(v, axis=1)[:, None]


def _temporal(spec: ForcingSpec, t: float) -> float:
    if spec.temporal == "constant":
        return 1.0
    return math.cos(2 * math.pi * spec.frequency * t)


def _static(spec: ForcingSpec, pts: np.ndarray) -> np.ndarray:
    """Time-independent part ``envelope * exp(i theta)`` for rows of ``pts``."""
    pts = np.asarray(pts, dtype=np.int64)
    if spec.kind == "zero" or len(pts) == 0:
        g = np.zeros(len(pts), dtype=np.complex128)
    else:
        if spec.kind == "trig_poly":
            bs = _band_set(spec)
            env = np.array([spec.G if tuple(int(c) for c in p) in bs else 0.0 for p in pts])
        else:
            env = _envelope_norms(spec, np.sqrt(np.sum(pts * pts, axis=1)))
        can, sign = _canonical_rows(pts)
        theta = _phase(spec.phase_seed, can) * sign
        g = (env * _SHRINK) * np.exp(1j * theta)
    if pts.shape[1] == 3:
        return g[:, None] * transverse_unit(pts)
    return g


def sample_forcing(spec: ForcingSpec, k, t: float):
    """``g_k(t)``: complex in 2D, complex 3-vector orthogonal to ``k`` in 3D."""
    k = np.asarray(k, dtype=np.int64)
    if not k.any():
        raise ValueError("forcing is not defined at k = 0")
    g = _static(spec, k[None, :])[0] * _temporal(spec, t)
    return complex(g) if k.shape[0] == 2 else g


@lru_cache(maxsize=32)
def _static_half(spec: ForcingSpec, Z: TruncationSet) -> np.ndarray:
    g = _static(spec, Z.half_points)
    g.setflags(write=False)
    return g


def forcing_half(spec: ForcingSpec | None, Z: TruncationSet, t: float) -> np.ndarray | None:
    """Forcing on the canonical half of ``Z`` at time ``t`` (None if zero)."""
    if spec is None or spec.kind == "zero" or spec.G == 0:
        return None
    return _static_half(spec, Z) * _temporal(spec, t)


def _envelope_sq_sum(spec: ForcingSpec, Z: TruncationSet) -> float:
    if spec.kind == "trig_poly":
        bs = _band_set(spec)
        return math.fsum(spec.G**2 for p in Z if p in bs)
    e = _envelope_norms(spec, Z.norms)
    return math.fsum((e * e).tolist())


def _tail_sq(spec: ForcingSpec, d: int, R: float) -> float:
    """Upper bound of the squared envelope summed over ``|k| > R``."""
    p = 2 * spec.power
    G2 = spec.G**2
    if spec.kind == "power_law":
        return G2 * lattice_sum(d, p, ("complement_ball", R))
    # exponential: split exp(-2 gamma s^a) = exp(-gamma s^a) * exp(-gamma s^a),
    # bound one factor by its value at R and the other, times s^q, by the
    # maximum of h(s) = s^q exp(-gamma s^a) over s >= R
    a = 1 + spec.delta
    q = max(0.0, d + 1 - p)
    s_star = (q / (spec.gamma * a)) ** (1 / a) if q > 0 else 0.0
    s_max = max(R, s_star)
    h = s_max**q * math.exp(-spec.gamma * s_max**a)
    return G2 * math.exp(-spec.gamma * R**a) * h * lattice_sum(d, p + q, ("complement_ball", R))


def g_star_lattice(spec: ForcingSpec | None, d: int) -> float:
    """Certified bound of ``sup_t (sum_{k != 0} |g_k(t)|^2)^(1/2)`` over all of Z^d.

    Independent of any truncation: exact shell sums up to the default
    lattice cutoff and a certified tail beyond it.
    """
    if spec is None or spec.kind == "zero" or spec.G == 0:
        return 0.0
    if spec.kind == "trig_poly":
        return math.sqrt(spec.G**2 * len(_band_set(spec)))
    if spec.kind == "power_law":
        return math.sqrt(spec.G**2 * lattice_sum(d, 2 * spec.power)) * (1 + 1e-13)
    rc = DEFAULT_CUTOFF[d]
    nmax = rc * rc
    cnt = _rep_counts(d, nmax)[1:]
    n = np.arange(1, nmax + 1, dtype=np.float64)
    sel = cnt > 0
    e = _envelope_norms(spec, np.sqrt(n[sel]))
    body = math.fsum((cnt[sel] * e * e).tolist())
    return math.sqrt(body + _tail_sq(spec, d, float(rc))) * (1 + 1e-13)


def g_star(spec: ForcingSpec | None, Z: TruncationSet, all_lattice: bool = False) -> float:
    """Upper bound of ``sup_t (sum |g_k(t)|^2)^(1/2)``.

    Sums the envelope over ``Z``.  With ``all_lattice`` the sum runs over
    every nonzero wave vector instead (see :func:`g_star_lattice`), which
    makes the value independent of the truncation.
    """
    if all_lattice:
        return g_star_lattice(spec, Z.d)
    if spec is None or spec.kind == "zero" or spec.G == 0:
        return 0.0
    return math.sqrt(_envelope_sq_sum(spec, Z))
