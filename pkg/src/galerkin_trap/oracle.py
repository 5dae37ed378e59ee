"""Brute-force ground truth for the estimates and the inward-pointing test.

Nothing here reuses the triad tables or the compiled kernels, except
:func:`verify_inward`, which deliberately evaluates the production tendency
at a constructed boundary state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PhysicalParams, nonlinear_2d_half, nonlinear_3d_half, rhs_2d_half, rhs_3d_half
from .envelopes import MEMBERSHIP_SLACK, Envelope
from .estimates import lemma1_bound
from .forcing import ForcingSpec
from .lattice import TruncationSet, build_truncation, shell_of
from .serial import csv_line
from .state import Spectrum2D, Spectrum3D, _velocity_3d, enstrophy

__all__ = [
    "brute_shell_sums",
    "brute_total",
    "envelope_sequence",
    "random_wave_vector",
    "lemma1_trials",
    "InwardResult",
    "random_inside_state",
    "boundary_state",
    "verify_inward",
    "conservation_rates",
    "write_trials_csv",
]


def _as_array(a, Z: TruncationSet) -> np.ndarray:
    if isinstance(a, dict):
        out = np.zeros(len(Z))
        for k, v in a.items():
            out[Z.index_of(k)] = v
        return out
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (len(Z),):
        raise ValueError(f"expected {len(Z)} values aligned with Z.points, got shape {a.shape}")
    return a


def brute_shell_sums(a, b, k, Z: TruncationSet) -> tuple[float, float, float]:
    """``sum |a_l1| |b_l2| |k| / |l2|`` over ``l1 + l2 = k`` split by shell of ``l2``.

    ``a`` and ``b`` are dicts ``{k: value}`` or arrays aligned with ``Z.points``.
    """
    a = np.abs(_as_array(a, Z))
    b = np.abs(_as_array(b, Z))
    kn = math.sqrt(sum(int(c) ** 2 for c in k))
    sums = [[], [], []]
    kk = tuple(int(c) for c in k)
    for j, l2 in enumerate(Z):
        l1 = tuple(x - y for x, y in zip(kk, l2))
        if l1 not in Z:
            continue
        i = Z.index_of(l1)
        term = a[i] * b[j] * kn / math.sqrt(sum(c * c for c in l2))
        sums[shell_of(kk, l2)].append(term)
    return tuple(math.fsum(s) for s in sums)


def brute_total(a, b, k, Z: TruncationSet) -> float:
    """Unpartitioned double loop over ``Z x Z`` (no shell bookkeeping)."""
    a = np.abs(_as_array(a, Z))
    b = np.abs(_as_array(b, Z))
    kk = np.asarray(k, dtype=np.int64)
    kn = math.sqrt(float(kk @ kk))
    terms = []
    for i, l1 in enumerate(Z.points):
        for j, l2 in enumerate(Z.points):
            if np.array_equal(l1 + l2, kk):
                terms.append(a[i] * b[j] * kn / Z.norms[j])
    return math.fsum(terms)


def _fast_total(a, b, k, Z: TruncationSet) -> float:
    kk = np.asarray(k, dtype=np.int64)
    idx = Z.lookup(kk[None, :] - Z.points)
    j = np.flatnonzero(idx >= 0)
    terms = a[idx[j]] * b[j] * math.sqrt(float(kk @ kk)) / Z.norms[j]
    return math.fsum(terms.tolist())


def envelope_sequence(Z: TruncationSet, C: float, r: float, rng: np.random.Generator) -> np.ndarray:
    """``u C / |l|^r`` with ``u`` uniform in [0, 1], aligned with ``Z.points``."""
    return rng.uniform(0.0, 1.0, len(Z)) * C / Z.norms**r


def random_wave_vector(d: int, lo: float, hi: float, rng: np.random.Generator) -> tuple:
    m = int(math.floor(hi))
    while True:
        k = rng.integers(-m, m + 1, size=d)
        n = math.sqrt(float(k @ k))
        if lo <= n <= hi:
            return tuple(int(c) for c in k)


def lemma1_trials(d: int, r: float, n_trials: int, seed: int, K_max: float | None = None,
                  k_range=(2.0, 32.0), C: float = 1.0) -> list[dict]:
    """Randomised domination trials of the convolution bound."""
    if K_max is None:
        K_max = 40.0 if d == 2 else 20.0
    Z = build_truncation(d, "disk", K_max)
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(n_trials):
        a = envelope_sequence(Z, C, r, rng)
        b = envelope_sequence(Z, C, r, rng)
        k = random_wave_vector(d, *k_range, rng)
        total = _fast_total(a, b, k, Z)
        bound = lemma1_bound(C, r, d, k)
        rows.append({"trial": t, "seed": seed, "d": d, "r": r, "k": k,
                     "total": total, "bound": bound, "pass": total <= bound})
    return rows


def write_trials_csv(path, rows: list[dict]) -> None:
    if not rows:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("trial\n")
        return
    cols = list(rows[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            vals = []
            for c in cols:
                v = row[c]
                if isinstance(v, tuple):
                    v = " ".join(str(x) for x in v)
                elif isinstance(v, (bool, np.bool_)):
                    v = "pass" if v else "fail"
                vals.append(v)
            fh.write(csv_line(vals))


# ---------------------------------------------------------------------------
# inward-pointing audit


@dataclass(frozen=True)
class InwardResult:
    margin: float
    holds: bool
    tendency: float
    envelope: float
    sufficient_margin: float | None


def _spectrum(Z, c):
    return Spectrum2D(Z, c) if Z.d == 2 else Spectrum3D(Z, c)


def random_inside_state(Z: TruncationSet, env: Envelope, rng: np.random.Generator, t: float = 0.0,
                        fill: float = 1.0):
    """Each component ``u fill env(k, t)`` with uniform ``u`` and random sign.

    Every mode (including ``|k| <= K0``) satisfies the envelope.  In 3D the
    real and imaginary parts are random transversal vectors with those norms.
    """
    e = env.value(Z.half_norms, t) * fill
    n = Z.n_half
    if Z.d == 2:
        re = rng.uniform(-1, 1, n) * e
        im = rng.uniform(-1, 1, n) * e
        return Spectrum2D(Z, re + 1j * im)
    k = Z.half_points.astype(np.float64)

    def part():
        v = rng.standard_normal((n, 3))
        v -= k * (np.einsum("ij,ij->i", k, v) / Z.half_norms**2)[:, None]
        v /= np.linalg.norm(v, axis=1)[:, None]
        return v * (rng.uniform(0, 1, n) * e)[:, None]

    return Spectrum3D(Z, part() + 1j * part())


def boundary_state(s, env: Envelope, kbar, part: str = "re", sign: int = 1, t: float = 0.0,
                   enstrophy_cap: float | None = None):
    """Rescale one component of ``s`` at canonical ``kbar`` to exact equality.

    ``part`` picks the real or imaginary part; in 2D it is set to
    ``sign * env``, in 3D its vector norm is set to ``env``.  With
    ``enstrophy_cap`` the remaining modes are scaled down (never up) until
    the total enstrophy fits.
    """
    Z = s.Z
    kbar = tuple(int(c) for c in kbar)
    if kbar not in Z or not Z.conj[Z.index_of(kbar)] == False:  # noqa: E712
        raise ValueError(f"{kbar} must be a canonical member of the truncation set")
    j = Z.half_slot[Z.index_of(kbar)]
    ev = float(env.value(Z.half_norms[j], t))
    c = np.array(s.coeffs)
    v = c[j]
    if Z.d == 2:
        v = complex(sign * ev, v.imag) if part == "re" else complex(v.real, sign * ev)
    else:
        re, im = v.real.copy(), v.imag.copy()
        tgt = re if part == "re" else im
        nrm = np.linalg.norm(tgt)
        if nrm == 0:
            raise ValueError("selected component is zero; cannot rescale to the boundary")
        tgt *= ev / nrm
        v = re + 1j * im
    if enstrophy_cap is not None:
        fixed = 2 * ev * ev
        if fixed > enstrophy_cap:
            raise ValueError("boundary component alone exceeds the enstrophy cap")
        own = 2 * float(np.sum(np.abs(v) ** 2))
        if own > enstrophy_cap:
            # shrink the free component of the boundary mode first
            scale = math.sqrt((enstrophy_cap - fixed) / (own - fixed)) * (1 - 1e-12)
            v = v.real + 1j * (v.imag * scale) if part == "re" else v.real * scale + 1j * v.imag
            own = 2 * float(np.sum(np.abs(v) ** 2))
        c[j] = 0
        rest = 2 * float(np.sum(np.abs(c) ** 2))
        if rest > enstrophy_cap - own:
            c *= math.sqrt((enstrophy_cap - own) / rest) * (1 - 1e-12)
    c[j] = v
    return _spectrum(Z, c)


def _dlog_env_dt(env: Envelope, norm: float) -> float:
    return -env.gamma * norm if env.kind == "gevrey" else 0.0


def verify_inward(s, env: Envelope, p: PhysicalParams, f: ForcingSpec | None, t: float, kbar,
                  part: str = "re", sign: int = 1, condition=None) -> InwardResult:
    """Direct inward test at a boundary state.

    ``margin = d env/dt - d(component)/dt``; positive means the component is
    moving back inside.  ``condition`` (a :class:`KcritResult`) adds the
    sufficient-condition margin in the same units for comparison.
    """
    Z = s.Z
    kbar = tuple(int(c) for c in kbar)
    j = Z.half_slot[Z.index_of(kbar)]
    norm = float(Z.half_norms[j])
    ev = float(env.value(norm, t))
    v = s.coeffs[j]
    # precondition: designated component on the boundary, all others inside
    if Z.d == 2:
        comp = v.real if part == "re" else v.imag
        on = math.isclose(sign * comp, ev, rel_tol=1e-12)
    else:
        comp = np.linalg.norm(v.real if part == "re" else v.imag)
        on = math.isclose(comp, ev, rel_tol=1e-12)
    if not on:
        raise ValueError(f"state is not on the envelope boundary at {kbar} ({part})")
    envs = env.value(Z.half_norms, t) * (1 + MEMBERSHIP_SLACK)
    if Z.d == 2:
        inside = np.all(np.abs(s.coeffs.real) <= envs) and np.all(np.abs(s.coeffs.imag) <= envs)
    else:
        inside = np.all(np.linalg.norm(s.coeffs.real, axis=1) <= envs) and np.all(
            np.linalg.norm(s.coeffs.imag, axis=1) <= envs
        )
    if not inside:
        raise ValueError("state violates the envelope away from the boundary mode")
    if Z.d == 2:
        rhs = rhs_2d_half(Z, s.coeffs, p, f, t)[j]
        tend = sign * (rhs.real if part == "re" else rhs.imag)
    else:
        rhs = rhs_3d_half(Z, s.coeffs, p, f, t)[j]
        x = v.real if part == "re" else v.imag
        y = rhs.real if part == "re" else rhs.imag
        tend = float(x @ y) / comp
    margin = _dlog_env_dt(env, norm) * ev - float(tend)
    suff = None
    if condition is not None:
        suff = float(condition.margin(np.array([norm]))[0]) * ev * norm**p.alpha
    return InwardResult(margin=margin, holds=margin > 0, tendency=float(tend), envelope=ev,
                        sufficient_margin=suff)


# ---------------------------------------------------------------------------
# conservation


def conservation_rates(s) -> dict:
    """Nonlinear-only rates of the quadratic invariants and their scales.

    2D: ``Re sum conj(w) N`` (enstrophy) and ``Re sum conj(w) N / |k|^2``
    (energy, up to the constant ``4 pi^2``).  3D: ``Re sum conj(u) . N_u``
    with ``N_u`` the velocity image of the projected ``N``.  Sums run over
    the full symmetric set.
    """
    Z = s.Z
    w = s.coeffs
    if Z.d == 2:
        N = nonlinear_2d_half(Z, w)
        k2 = Z.half_norms**2
        prod = np.conj(w) * N
        mag = np.abs(w) * np.abs(N)
        return {
            "d_enstrophy_nl": 2 * math.fsum(prod.real.tolist()),
            "d_energy_nl": 2 * math.fsum((prod.real / k2).tolist()),
            "enstrophy_scale": 2 * math.fsum(mag.tolist()),
            "energy_scale": 2 * math.fsum((mag / k2).tolist()),
        }
    N = nonlinear_3d_half(Z, w, project=True)
    u = _velocity_3d(Z, w)
    Nu = _velocity_3d(Z, N)
    prod = np.einsum("ij,ij->i", np.conj(u), Nu)
    mag = np.linalg.norm(u, axis=1) * np.linalg.norm(Nu, axis=1)
    return {
        "d_energy_nl": 2 * math.fsum(prod.real.tolist()),
        "energy_scale": 2 * math.fsum(mag.tolist()),
    }
