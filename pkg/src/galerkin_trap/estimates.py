"""Computable constants behind the trapping arguments.

Everything here depends only on physical parameters and on lattice sums
over all of Z^d, never on the truncation set, so two truncations of the same
problem get byte-identical reports.

Normalisation used throughout: modes ``exp(2 pi i (k, x))``, dissipation
``4 pi^2 nu |k|^alpha`` and ``|u_k| = |w_k| / (2 pi |k|)``.  A component
envelope ``|w_k^(j)| <= D/|k|^r`` gives ``|w_k| <= sqrt(2) D/|k|^r``, which is
the amplitude fed to the convolution bound.

Every ``kcrit_*`` function returns a :class:`KcritResult`: the smallest
integer ``K >= 2`` such that the sufficient inward condition holds at every
``|k| >= K`` checked (a dense grid up to ``64 K`` plus a geometric far tail),
together with the margin function so callers can re-evaluate it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .lattice import LatticeSumDivergenceError, _rep_counts, _shell_sum, lattice_sum, wave_norm
from .serial import dumps

__all__ = [
    "INEQUALITIES",
    "InfeasibleError",
    "PreconditionError",
    "Constant",
    "EstimateReport",
    "KcritResult",
    "enstrophy_bound",
    "energy_bound_3d",
    "lemma1_constants",
    "lemma1_bracket",
    "lemma1_bound",
    "d_prime_algebraic",
    "log_sum_constant",
    "thm1_cbar",
    "kcrit_2d_algebraic",
    "gamma2_prime",
    "kcrit_2d_exponential",
    "gamma3",
    "kcrit_2d_gevrey",
    "thm4_constant",
    "kcrit_3d",
    "kcrit_search",
    "DEFAULT_FACTOR",
]

INEQUALITIES = (
    "enstrophy_gronwall",
    "energy_gronwall",
    "convolution",
    "algebraic_2d",
    "exponential_2d",
    "gevrey_2d",
    "energy_3d",
    "convolution_3d",
)

# right-hand factor of the algebraic 2D condition; 4 pi^2 is sharp, the
# smaller default 4 pi only makes the condition harder to satisfy
DEFAULT_FACTOR = 4 * math.pi
FOUR_PI2 = 4 * math.pi**2

_GRID_SPAN = 64
_LOG_CUTOFF = 200


class InfeasibleError(ValueError):
    """Parameters outside the range where the condition can close."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Constant:
    name: str
    value: float
    definition: str

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "definition": self.definition}


@dataclass
class EstimateReport:
    quantity: str
    value: float
    inequality_id: str
    inputs: dict
    constants: list = field(default_factory=list)

    def __post_init__(self):
        if self.inequality_id not in INEQUALITIES:
            raise ValueError(f"unknown inequality id {self.inequality_id!r}")
        if not (math.isfinite(self.value) and self.value > 0):
            raise ValueError(f"{self.quantity}: value must be finite and positive, got {self.value}")

    def to_dict(self) -> dict:
        val = self.value if isinstance(self.value, int) else float(self.value)
        return {
            "quantity": self.quantity,
            "value": val,
            "inequality_id": self.inequality_id,
            "inputs": dict(self.inputs),
            "constants": [c.to_dict() for c in self.constants],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "EstimateReport":
        return cls(
            quantity=obj["quantity"],
            value=obj["value"],
            inequality_id=obj["inequality_id"],
            inputs=dict(obj["inputs"]),
            constants=[Constant(**c) for c in obj["constants"]],
        )

    @classmethod
    def from_json(cls, text: str) -> "EstimateReport":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# uniform bounds


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not v >= 0:
            raise ValueError(f"{name} must be >= 0, got {v}")


def enstrophy_bound(E0: float, g_star: float, nu: float) -> float:
    """``max(E0, (g*/(4 pi^2 nu))^2)``.

    From ``dE/dt <= -8 pi^2 nu E + 2 g* sqrt(E)`` (the truncated nonlinearity
    conserves enstrophy and ``|k| >= 1``).
    """
    _check_nonneg(E0=E0, g_star=g_star)
    if not nu > 0:
        raise ValueError("nu must be positive")
    return max(float(E0), (g_star / (FOUR_PI2 * nu)) ** 2)


def energy_bound_3d(E0: float, g_star: float, nu: float) -> float:
    """Same construction for ``sum |u_k|^2`` in 3D.

    The velocity forcing is ``|g_k| / (2 pi |k|) <= |g_k|``, so using ``g*``
    directly is conservative.
    """
    return enstrophy_bound(E0, g_star, nu)


def d_prime_algebraic(K0: float, E_star: float, r: float, G: float) -> float:
    """``max(G, sqrt(E*) K0^r)``: covers ``|k| <= K0`` through the enstrophy bound."""
    if K0 < 1:
        raise ValueError("K0 must be >= 1")
    return max(float(G), math.sqrt(E_star) * K0**r)


# ---------------------------------------------------------------------------
# convolution bound


@lru_cache(maxsize=64)
def lemma1_constants(d: int, r: float) -> tuple:
    """Lattice constants of the three-shell convolution bound.

    near and far shells: ``c1 = sum |l|^-(r+1)`` (the far shell uses
    ``|l1| >= |l2|/2``), mid shell: ``sqrt(sum |l|^-2r)``.
    """
    if r <= d - 1:
        raise LatticeSumDivergenceError(f"convolution bound needs r > d - 1 = {d - 1}, got r = {r}")
    c1 = lattice_sum(d, r + 1)
    c_mid = math.sqrt(lattice_sum(d, 2 * r)) * (1 + 1e-15)
    const = max(c1 * (1 + 2.0**-r), c_mid)
    return (
        Constant("c1", c1, f"upper bound of sum over Z^{d}\\0 of |l|^-(r+1), r={r}"),
        Constant("c_mid", c_mid, f"sqrt of upper bound of sum over Z^{d}\\0 of |l|^-2r, r={r}"),
        Constant("const", const, "max(c1 (1 + 2^-r), c_mid)"),
    )


def _lemma1_const(d: int, r: float) -> float:
    return lemma1_constants(d, r)[2].value


def lemma1_bracket(r: float, d: int, x):
    """``2^r x + 2^(r+1) (6x+1)^(d/2) + x^(d-1-r) / 2``."""
    x = np.asarray(x, dtype=np.float64)
    return 2.0**r * x + 2.0 ** (r + 1) * (6 * x + 1) ** (d / 2) + 0.5 * x ** (d - 1 - r)


def lemma1_bound(C: float, r: float, d: int, k) -> float:
    """Upper bound of ``sum_{l1+l2=k} |a_l1| |b_l2| |k| / |l2|`` over Z^d
    when ``|a_l|, |b_l| <= C / |l|^r``."""
    x = wave_norm(k)
    if x == 0:
        raise ValueError("k must be nonzero")
    return _lemma1_const(d, r) * float(lemma1_bracket(r, d, x)) * C * C / x**r


def _lemma1_report(C, r, d, k) -> EstimateReport:
    return EstimateReport(
        "lemma1_bound", lemma1_bound(C, r, d, k), "convolution",
        {"C": C, "r": r, "d": d, "k": [int(c) for c in k]},
        list(lemma1_constants(d, r)),
    )


# ---------------------------------------------------------------------------
# K_crit search


@dataclass
class KcritResult:
    K: int
    margin: Callable
    report: EstimateReport

    def __int__(self):
        return self.K

    def holds(self, x) -> bool:
        return bool(np.all(self.margin(np.asarray(x, dtype=np.float64)) > 0))


def _grid(K: int) -> np.ndarray:
    hi = _GRID_SPAN * K
    parts = [
        np.geomspace(K, hi, 512),
        np.arange(K, min(hi, K + 512) + 1, dtype=np.float64),
        np.sqrt(np.arange(K * K, min(hi * hi, K * K + 8192) + 1, dtype=np.float64)),
        hi * 2.0 ** np.arange(1, 41),
    ]
    return np.unique(np.concatenate(parts))


def kcrit_search(margin: Callable, K_limit: int = 10**7) -> int:
    """Smallest integer ``K >= 2`` with ``margin > 0`` on the check grid from ``K``."""
    K = 2
    while K <= K_limit:
        xs = _grid(K)
        m = margin(xs)
        bad = np.flatnonzero(~(m > 0))
        if bad.size == 0:
            return K
        # the condition fails somewhere at or beyond this K: restart past it
        K = max(K + 1, int(math.floor(xs[bad[-1]])) + 1)
    raise InfeasibleError(f"inward condition still fails beyond |k| = {K_limit}")


def _kcrit(margin, quantity, ineq, inputs, constants) -> KcritResult:
    K = kcrit_search(margin)
    return KcritResult(K, margin, EstimateReport(quantity, K, ineq, inputs, constants))


# ---------------------------------------------------------------------------
# 2D, algebraic envelope


@lru_cache(maxsize=4)
def log_sum_constant(R_c: int = _LOG_CUTOFF) -> float:
    """``c_log`` with ``sum_{0<|l|<=R} |l|^-2 <= c_log^2 ln(2R)`` for all ``R >= 1``.

    Exact maximum over lattice radii up to ``R_c``.  Beyond, the disk-mean
    inequality for the subharmonic ``|x|^-2`` gives
    ``S(R) <= S(R_c) + 8 ln((R + 1/2)/(R_c - 1/2))``.
    """
    nmax = R_c * R_c
    cnt = _rep_counts(2, nmax)[1:].astype(np.float64)
    n = np.arange(1, nmax + 1, dtype=np.float64)
    S = np.cumsum(cnt / n)
    # cumsum rounding is far below the 1e-12 padding applied below
    ratio = S / np.log(2 * np.sqrt(n))
    body = float(np.max(ratio[cnt > 0]))
    B = _shell_sum(2, 2.0, 0, nmax) - 8 * math.log(R_c - 0.5)
    tail = 8 + max(0.0, (B - 8 * math.log(2) + 4 / R_c) / math.log(2 * R_c))
    return math.sqrt(max(body, tail)) * (1 + 1e-12)


def _thm1_parts(r: float) -> tuple:
    c_log = log_sum_constant()
    c_far = math.sqrt((2.0 / 3.0) ** (2 * r - 2) / (r - 1))
    s1 = math.sqrt(2) * 2.0**r * c_log
    s23 = (2 * math.sqrt(2) * 2.0**r * 13 + 2 * math.sqrt(2) * c_far) / (2 * math.sqrt(math.log(2)))
    return c_log, c_far, s1 + s23


def thm1_cbar(E_star: float, r: float) -> float:
    """Constant ``cbar`` of the algebraic condition.

    For ``|k| >= 2`` the nonlinear term at a boundary mode is at most
    ``2^(r+2) E* cbar |k| sqrt(ln|k|) D / |k|^r``.
    """
    if not r > 1:
        raise InfeasibleError("algebraic envelope needs r > 1")
    if not E_star > 0:
        raise ValueError("E_star must be positive")
    return _thm1_parts(r)[2] / (2.0 ** (r + 2) * math.sqrt(E_star))


def kcrit_2d_algebraic(E_star: float, r: float, alpha: float, eps: float, nu: float,
                       factor: float = DEFAULT_FACTOR) -> KcritResult:
    """``sqrt(E*) A |k| sqrt(ln|k|) / |k|^alpha + |k|^-eps < factor * nu``.

    ``A = 2^(r+2) sqrt(E*) cbar``; the forcing term uses ``D' >= G``.
    """
    if not alpha > 1:
        raise InfeasibleError("need alpha > 1")
    if not eps > 0:
        raise InfeasibleError("need eps > 0")
    if not r > 1:
        raise InfeasibleError("algebraic envelope needs r > 1")
    c_log, c_far, A = _thm1_parts(r)
    s = math.sqrt(E_star)

    def margin(x):
        x = np.asarray(x, dtype=np.float64)
        return factor * nu - (s * A * x * np.sqrt(np.log(x)) / x**alpha + x**-eps)

    consts = [
        Constant("c_log", c_log, "sqrt of sup over R >= 1 of sum_{0<|l|<=R} |l|^-2 / ln(2R), Z^2"),
        Constant("c_far", c_far, "sqrt((2/3)^(2r-2)/(r-1)), tail of sum |l|^-2r beyond 2|k|"),
        Constant("A", A, "sqrt(2) 2^r c_log + (2 sqrt(2) 2^r 13 + 2 sqrt(2) c_far)/(2 sqrt(ln 2))"),
        Constant("factor", factor, "right-hand factor multiplying nu"),
    ]
    if E_star > 0:
        consts.insert(2, Constant("cbar", A / (2.0 ** (r + 2) * s), "A / (2^(r+2) sqrt(E*))"))
    inputs = {"E_star": E_star, "r": r, "alpha": alpha, "eps": eps, "nu": nu}
    return _kcrit(margin, "K_crit", "algebraic_2d", inputs, consts)


# ---------------------------------------------------------------------------
# 2D, exponential envelope


def gamma2_prime(K0: float, D_bar: float, D2_prime: float, r: float, gamma: float, delta: float,
                 gamma2: float | None = None) -> float:
    """Rate of the exponential envelope.

    ``min(gamma K0^delta, ln(D2'/D_bar)/K0)``: the first cap keeps the forcing
    weight ratio at most 1 beyond ``K0``, the second absorbs the algebraic
    bound ``D_bar/|k|^r`` on ``|k| <= K0``.  ``gamma2``, the rate of the
    initial data, caps it further so the initial state starts inside.
    """
    if K0 < 1:
        raise ValueError("K0 must be >= 1")
    if not D2_prime > D_bar > 0:
        raise PreconditionError("need D2' > D_bar > 0")
    out = min(gamma * K0**delta, math.log(D2_prime / D_bar) / K0)
    if gamma2 is not None:
        out = min(out, gamma2)
    return out


def kcrit_2d_exponential(D2_prime: float, G: float, gamma: float, delta: float, gamma2_prime: float,
                         r: float, alpha: float, eps: float, nu: float) -> KcritResult:
    """``2 pi c (2^(r+1) x + 2^(r+2)(6x+1) + 2 x^(1-r)) D' + (G/D') x^(alpha-eps) < 4 pi^2 nu x^alpha``

    with the weight ratio ``exp(-gamma x^(1+delta)) / exp(-gamma2' x)`` replaced
    by its bound 1 (valid for ``x >= K0`` by the choice of ``gamma2'``).
    """
    if D2_prime < G:
        raise PreconditionError(f"need D2' >= G, got D2'={D2_prime}, G={G}")
    if not alpha > 1:
        raise InfeasibleError("need alpha > 1")
    consts = list(lemma1_constants(2, r))
    c = consts[2].value

    def margin(x):
        x = np.asarray(x, dtype=np.float64)
        nl = 2 * math.pi * c * (2.0 ** (r + 1) * x + 2.0 ** (r + 2) * (6 * x + 1) + 2 * x ** (1 - r)) * D2_prime
        return FOUR_PI2 * nu - (nl / x**alpha + (G / D2_prime) * x**-eps)

    inputs = {"D2_prime": D2_prime, "G": G, "gamma": gamma, "delta": delta,
              "gamma2_prime": gamma2_prime, "r": r, "alpha": alpha, "eps": eps, "nu": nu}
    return _kcrit(margin, "K_crit", "exponential_2d", inputs, consts)


# ---------------------------------------------------------------------------
# 2D, time-growing (Gevrey-type) envelope


def gamma3(K0: float, t0: float, gamma: float, delta: float, gamma0: float,
           D3_prime: float | None = None, D1_prime: float | None = None) -> float:
    """``min(gamma0, gamma K0^delta / t0)``, and ``ln(D3'/D1')/(t0 K0)`` when
    both amplitudes are given (keeps the low band inside up to ``t0``)."""
    if not (t0 > 0 and K0 >= 1 and gamma0 > 0):
        raise ValueError("need t0 > 0, K0 >= 1, gamma0 > 0")
    out = min(gamma0, gamma * K0**delta / t0)
    if D3_prime is not None and D1_prime is not None:
        if not D3_prime > D1_prime > 0:
            raise PreconditionError("need D3' > D1' > 0")
        out = min(out, math.log(D3_prime / D1_prime) / (t0 * K0))
    return out


def kcrit_2d_gevrey(D3_prime: float, G: float, gamma0: float, r: float, alpha: float, nu: float,
                    eps: float) -> KcritResult:
    """``4 pi^2 nu > gamma0 x^(1-alpha) + c D3' (2^(r+1) x + 2^(r+2) 7x + x^(1-r)) / x^alpha
    + (G/D3') x^-eps``."""
    if not alpha > 1:
        raise InfeasibleError("need alpha > 1")
    if not r > 2:
        raise InfeasibleError("time-growing envelope needs r > 2")
    if D3_prime < G:
        raise PreconditionError(f"need D3' >= G, got D3'={D3_prime}, G={G}")
    consts = list(lemma1_constants(2, r))
    c = consts[2].value

    def margin(x):
        x = np.asarray(x, dtype=np.float64)
        nl = c * D3_prime * (2.0 ** (r + 1) * x + 2.0 ** (r + 2) * 7 * x + x ** (1 - r))
        return FOUR_PI2 * nu - (gamma0 * x ** (1 - alpha) + nl / x**alpha + (G / D3_prime) * x**-eps)

    inputs = {"D3_prime": D3_prime, "G": G, "gamma0": gamma0, "r": r, "alpha": alpha,
              "nu": nu, "eps": eps}
    return _kcrit(margin, "K_crit", "gevrey_2d", inputs, consts)


# ---------------------------------------------------------------------------
# 3D


@lru_cache(maxsize=16)
def thm4_constant(r: float) -> tuple:
    """Shell constants of the energy-based 3D bound.

    near: ``#{0<|l|<=|k|/2} <= 8|k|^3``; mid: ``#{|l|<=3|k|} <= 7^3 |k|^3``;
    far: ``sum_{|l|>|k|} |l|^-2r <= 24 2^(2r-3) |k|^(3-2r) / (2r-3)``.
    """
    if not r > 1.5:
        raise InfeasibleError("energy-based 3D bound needs r > 3/2")
    c_near = 2.0**r * math.sqrt(8)
    c_mid = 2.0 ** (r + 1) * 3 * 7**1.5
    c_far = math.sqrt(24 * 2.0 ** (2 * r - 3) / (2 * r - 3))
    total = (c_near + c_mid + c_far) * (1 + 1e-15)
    return (
        Constant("c_near", c_near, "2^r sqrt(8)"),
        Constant("c_mid", c_mid, "2^(r+1) 3 7^(3/2)"),
        Constant("c_far", c_far, "sqrt(24 2^(2r-3) / (2r-3))"),
        Constant("const", total, "c_near + c_mid + c_far"),
    )


def kcrit_3d(E_star: float, r: float, alpha: float, nu: float, variant: str = "thm4",
             gamma0: float = 0.0, D_prime: float | None = None) -> KcritResult:
    """3D inward conditions.

    thm4: ``8 pi c sqrt(E*) x^(5/2) < 4 pi^2 nu x^alpha`` (energy bound only).
    thm7: ``8 pi c (2^r x + 2^(r+1)(6x+1)^(3/2) + x^(2-r)/2) D' < 4 pi^2 nu x^alpha - gamma0 x``.
    """
    if variant == "thm4":
        if not alpha > 2.5:
            raise InfeasibleError(f"energy-based 3D condition needs alpha > 5/2, got {alpha}")
        consts = list(thm4_constant(r))
        c = consts[-1].value
        s = math.sqrt(E_star)

        def margin(x):
            x = np.asarray(x, dtype=np.float64)
            return FOUR_PI2 * nu - 8 * math.pi * c * s * x ** (2.5 - alpha)

        inputs = {"E_star": E_star, "r": r, "alpha": alpha, "nu": nu}
        return _kcrit(margin, "K_crit", "energy_3d", inputs, consts)
    if variant == "thm7":
        if not alpha > 1.5:
            raise InfeasibleError(f"3D convolution condition needs alpha > 3/2, got {alpha}")
        if not r > 2:
            raise InfeasibleError(f"3D convolution condition needs r > 2, got {r}")
        if D_prime is None or not D_prime > 0:
            raise PreconditionError("thm7 variant needs a positive D_prime")
        consts = list(lemma1_constants(3, r))
        c = consts[2].value

        def margin(x):
            x = np.asarray(x, dtype=np.float64)
            nl = 8 * math.pi * c * lemma1_bracket(r, 3, x) * D_prime
            return FOUR_PI2 * nu - (nl + gamma0 * x) / x**alpha

        inputs = {"E_star": E_star, "r": r, "alpha": alpha, "nu": nu,
                  "gamma0": gamma0, "D_prime": D_prime}
        return _kcrit(margin, "K_crit", "convolution_3d", inputs, consts)
    raise ValueError(f"unknown variant {variant!r}")
