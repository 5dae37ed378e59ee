"""Right-hand sides of the truncated vorticity systems.

2D, stored on the canonical half of ``Z``::

    d w_k/dt = N_k - 4 pi^2 nu |k|^alpha w_k + g_k
    N_k      = sum_{l1 + l2 = k, l1, l2 in Z} w_l1 w_l2 (k, l2_perp) / |l2|^2

with ``l_perp = (-l2, l1)``.  The coefficient is real: with the sign
convention ``w = d u1/d x2 - d u2/d x1`` the advection term is
``(u . grad w)_k = -sum w_l1 w_l2 (k, l2_perp)/|l2|^2``.  An imaginary
prefactor would give ``N_{-k} = -conj(N_k)`` and break reality.

3D::

    N_k = -2 pi i sum [ (u_l1, k) w_l2 - (w_l1, k) u_l2 ]

followed by projection onto the plane orthogonal to ``k``.

The triad tables list, for every canonical output ``k``, the ordered pairs
``(l1, l2)`` in ``Z x Z`` with ``l1 + l2 = k`` (sorted by output, then by
``l2`` lexicographically).  The kernels accumulate in table order, which
fixes the floating-point reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .forcing import ForcingSpec, forcing_half
from .lattice import TruncationSet
from .state import Spectrum2D, Spectrum3D, _full, _velocity_3d, project_transversal

__all__ = [
    "PhysicalParams",
    "GridTooSmallError",
    "TriadTable",
    "triad_table",
    "dissipation_rates",
    "nonlinear_2d",
    "nonlinear_2d_half",
    "nonlinear_2d_fast",
    "rhs_2d",
    "rhs_2d_half",
    "rhs_2d_real_split",
    "nonlinear_3d",
    "nonlinear_3d_half",
    "nonlinear_3d_unreduced",
    "rhs_3d",
    "rhs_3d_half",
    "min_fast_grid",
]


class GridTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    nu: float
    alpha: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if not self.alpha > 1:
            raise ValueError(f"dissipation exponent must exceed 1, got {self.alpha}")


def dissipation_rates(Z: TruncationSet, p: PhysicalParams) -> np.ndarray:
    """``4 pi^2 nu |k|^alpha`` on the canonical half (|k| >= 1)."""
    return 4 * math.pi**2 * p.nu * np.exp(p.alpha * np.log(Z.half_norms))


@dataclass(frozen=True, eq=False)
class TriadTable:
    out: np.ndarray   # position of k in Z.half
    i1: np.ndarray    # index of l1 in Z.points
    i2: np.ndarray    # index of l2 in Z.points
    coef: np.ndarray  # (k, l2_perp) / |l2|^2 (2D only; zeros dropped)
    kout: np.ndarray  # float copy of Z.half_points

    def __len__(self):
        return len(self.out)


@lru_cache(maxsize=32)
def triad_table(Z: TruncationSet) -> TriadTable:
    pts = Z.points
    M = len(pts)
    slot = np.full(M, -1, dtype=np.int64)
    slot[Z.half] = np.arange(Z.n_half)
    outs, i1s, i2s = [], [], []
    for j in range(M):  # l2 in lexicographic order
        ks = pts + pts[j]
        idx = Z.lookup(ks)
        sel = np.flatnonzero(idx >= 0)
        o = slot[idx[sel]]
        keep = o >= 0
        outs.append(o[keep])
        i1s.append(sel[keep])
        i2s.append(np.full(int(keep.sum()), j, dtype=np.int64))
    out = np.concatenate(outs)
    i1 = np.concatenate(i1s)
    i2 = np.concatenate(i2s)
    order = np.lexsort((i1, i2, out))
    out, i1, i2 = out[order], i1[order], i2[order]
    if Z.d == 2:
        k = Z.half_points[out].astype(np.float64)
        l2 = pts[i2].astype(np.float64)
        coef = (-k[:, 0] * l2[:, 1] + k[:, 1] * l2[:, 0]) / np.sum(l2 * l2, axis=1)
        nz = coef != 0
        out, i1, i2, coef = out[nz], i1[nz], i2[nz], coef[nz]
    else:
        coef = np.empty(0)
    arrs = [np.ascontiguousarray(a) for a in (out, i1, i2, coef)]
    kout = np.ascontiguousarray(Z.half_points.astype(np.float64))
    for a in arrs + [kout]:
        a.setflags(write=False)
    return TriadTable(*arrs, kout=kout)


def _forcing(f: ForcingSpec | None, Z: TruncationSet, t: float):
    return forcing_half(f, Z, t) if f is not None else None


# ---------------------------------------------------------------------------
# 2D


def nonlinear_2d_half(Z: TruncationSet, w_half: np.ndarray) -> np.ndarray:
    tab = triad_table(Z)
    w = np.ascontiguousarray(_full(Z, w_half))
    return kernels.triad_2d(w, tab.out, tab.i1, tab.i2, tab.coef, Z.n_half)


def nonlinear_2d(s: Spectrum2D) -> Spectrum2D:
    return Spectrum2D(s.Z, nonlinear_2d_half(s.Z, s.coeffs))


def rhs_2d_half(Z, w_half, p: PhysicalParams, f: ForcingSpec | None, t: float, nonlin=None):
    n = (nonlin or nonlinear_2d_half)(Z, w_half)
    out = n - dissipation_rates(Z, p) * w_half
    g = _forcing(f, Z, t)
    if g is not None:
        out = out + g
    return out


def rhs_2d(s: Spectrum2D, p: PhysicalParams, f: ForcingSpec | None = None, t: float = 0.0) -> Spectrum2D:
    return Spectrum2D(s.Z, rhs_2d_half(s.Z, s.coeffs, p, f, t))


def rhs_2d_real_split(Z: TruncationSet, w1: np.ndarray, w2: np.ndarray,
                      p: PhysicalParams, f: ForcingSpec | None = None, t: float = 0.0):
    """Real form on ``w = w1 + i w2`` (canonical half arrays).

    d w1_k/dt = sum c [w1 w1' - w2 w2'] - 4 pi^2 nu |k|^alpha w1_k + g1_k
    d w2_k/dt = sum c [w1 w2' + w2 w1'] - 4 pi^2 nu |k|^alpha w2_k + g2_k

    with unprimed factors at ``l1``, primed at ``l2`` and ``c`` the real
    triad coefficient.  Evaluated with plain numpy, independent of the kernels.
    """
    tab = triad_table(Z)
    # full real and imaginary parts: w(-k) = conj w(k)
    a = np.asarray(w1, dtype=np.float64)[Z.half_slot]
    b = np.asarray(w2, dtype=np.float64)[Z.half_slot]
    b = np.where(Z.conj, -b, b)
    a1, b1, a2, b2 = a[tab.i1], b[tab.i1], a[tab.i2], b[tab.i2]
    n1 = np.bincount(tab.out, tab.coef * (a1 * a2 - b1 * b2), Z.n_half)
    n2 = np.bincount(tab.out, tab.coef * (a1 * b2 + b1 * a2), Z.n_half)
    lam = dissipation_rates(Z, p)
    d1 = n1 - lam * w1
    d2 = n2 - lam * w2
    g = _forcing(f, Z, t)
    if g is not None:
        d1 = d1 + g.real
        d2 = d2 + g.imag
    return d1, d2


def min_fast_grid(Z: TruncationSet) -> int:
    """Smallest grid side with no aliasing onto ``Z``: 3 m + 1, m = max |k_i|."""
    m = int(np.max(np.abs(Z.points)))
    return 3 * m + 1


def nonlinear_2d_fast(s: Spectrum2D, grid: int | None = None) -> Spectrum2D:
    """Same sum via real FFTs on an ``n x n`` grid (pseudo-spectral)."""
    Z = s.Z
    n = grid if grid is not None else min_fast_grid(Z)
    need = min_fast_grid(Z)
    if n < need:
        raise GridTooSmallError(f"grid side {n} aliases onto the truncation set (need >= {need})")
    w = _full(Z, s.coeffs)
    kf = Z.points.astype(np.float64)
    k2 = Z.norms**2
    sel = Z.points[:, 1] >= 0
    rows = Z.points[sel, 0] % n
    cols = Z.points[sel, 1]
    nc = n // 2 + 1

    def to_grid(v):
        a = np.zeros((n, nc), dtype=np.complex128)
        a[rows, cols] = v[sel]
        return np.fft.irfft2(a, s=(n, n)) * (n * n)

    # i k_j w_k is Hermitian in k, so these fields are real
    iw = 1j * w
    A1 = to_grid(kf[:, 0] * iw)
    A2 = to_grid(kf[:, 1] * iw)
    B1 = to_grid(kf[:, 0] * iw / k2)
    B2 = to_grid(kf[:, 1] * iw / k2)
    spec = np.fft.rfft2(A1 * B2 - A2 * B1) / (n * n)
    hp = Z.half_points
    # canonical k has k1 > 0, or k1 == 0 and k2 > 0; read k2 < 0 via conjugate
    k1, kk2 = hp[:, 0], hp[:, 1]
    vals = np.where(
        kk2 >= 0,
        spec[k1 % n, np.abs(kk2)],
        np.conj(spec[(-k1) % n, np.abs(kk2)]),
    )
    return Spectrum2D(Z, vals)


# ---------------------------------------------------------------------------
# 3D


def nonlinear_3d_half(Z: TruncationSet, w_half: np.ndarray, project: bool = True) -> np.ndarray:
    tab = triad_table(Z)
    u = np.ascontiguousarray(_full(Z, _velocity_3d(Z, w_half)))
    w = np.ascontiguousarray(_full(Z, w_half))
    acc = kernels.triad_3d(u, w, tab.kout, tab.out, tab.i1, tab.i2, Z.n_half)
    n = -2j * math.pi * acc
    return project_transversal(Z, n) if project else n


def nonlinear_3d(s: Spectrum3D, project: bool = True) -> Spectrum3D:
    s.check_transversal()
    return Spectrum3D(s.Z, nonlinear_3d_half(s.Z, s.coeffs, project))


def nonlinear_3d_unreduced(s: Spectrum3D) -> Spectrum3D:
    """Reference evaluation with ``(u_l1, l2)`` and ``(w_l1, l2)`` in place of
    the ``k`` dot products, by explicit double loop."""
    s.check_transversal()
    Z = s.Z
    u = _full(Z, _velocity_3d(Z, s.coeffs))
    w = _full(Z, s.coeffs)
    pts = Z.points
    out = np.zeros((Z.n_half, 3), dtype=np.complex128)
    for j, k in enumerate(Z.half_points):
        acc = np.zeros(3, dtype=np.complex128)
        for b, l2 in enumerate(pts):
            a = Z.lookup((k - l2)[None, :])[0]
            if a < 0:
                continue
            acc += np.dot(u[a], l2) * w[b] - np.dot(w[a], l2) * u[b]
        out[j] = -2j * math.pi * acc
    return Spectrum3D(Z, out)


def rhs_3d_half(Z, w_half, p: PhysicalParams, f: ForcingSpec | None, t: float):
    out = nonlinear_3d_half(Z, w_half, project=False) - dissipation_rates(Z, p)[:, None] * w_half
    g = _forcing(f, Z, t)
    if g is not None:
        out = out + g
    return project_transversal(Z, out)


def rhs_3d(s: Spectrum3D, p: PhysicalParams, f: ForcingSpec | None = None, t: float = 0.0) -> Spectrum3D:
    s.check_transversal()
    return Spectrum3D(s.Z, rhs_3d_half(s.Z, s.coeffs, p, f, t))
