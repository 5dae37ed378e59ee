"""Decay envelopes and trapping-region diagnostics.

An envelope bounds each real component of ``w_k`` (real and imaginary parts
separately, as in the componentwise definition of the trapping regions) by

    algebraic     D / |k|^r
    exponential   D exp(-gamma |k|) / |k|^r
    gevrey        D exp(-gamma t |k|) / |k|^r

for ``|k| > K0``; modes with ``|k| <= K0`` are controlled by the enstrophy
bound instead and are exempt.  In 3D the real and imaginary parts are
vectors and their Euclidean norms are compared with the envelope.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "Envelope",
    "Membership",
    "EstimateUndefinedError",
    "WeightOverflowError",
    "weighted_transform",
    "inverse_weighted_transform",
    "membership",
    "envelope_ratio_series",
    "ratio_observer",
    "fitted_gamma",
    "MEMBERSHIP_SLACK",
    "WEIGHT_LIMIT",
]

MEMBERSHIP_SLACK = 1e-9
WEIGHT_LIMIT = 700.0
KINDS = ("algebraic", "exponential", "gevrey")


class EstimateUndefinedError(ValueError):
    pass


class WeightOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class Envelope:
    kind: str
    D: float
    r: float
    gamma: float = 0.0
    K0: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if not (self.D > 0 and self.r > 0):
            raise ValueError("envelope needs D > 0 and r > 0")
        if self.kind == "exponential" and not self.gamma > 0:
            raise ValueError("exponential envelope needs gamma > 0")
        if self.kind == "gevrey" and self.gamma < 0:
            raise ValueError("gevrey envelope needs a rate >= 0")
        if self.K0 < 0:
            raise ValueError("K0 must be >= 0")

    def rate(self, t: float) -> float:
        """Exponential rate multiplying |k| at time ``t``."""
        if self.kind == "algebraic":
            return 0.0
        if self.kind == "exponential":
            return self.gamma
        return self.gamma * t

    def log_value(self, norm, t: float = 0.0):
        norm = np.asarray(norm, dtype=np.float64)
        return math.log(self.D) - self.r * np.log(norm) - self.rate(t) * norm

    def value(self, norm, t: float = 0.0):
        return np.exp(self.log_value(norm, t))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "D": self.D, "r": self.r, "gamma": self.gamma, "K0": self.K0}


@dataclass(frozen=True)
class Membership:
    inside: bool
    worst_k: tuple | None
    worst_ratio: float
    modulus_ratio: float
    modulus_k: tuple | None


def _weights(s, gw: float, t: float) -> np.ndarray:
    expo = gw * t * s.Z.half_norms
    if expo.size and float(np.max(expo)) > WEIGHT_LIMIT:
        raise WeightOverflowError(
            f"weight exponent {float(np.max(expo)):.1f} exceeds {WEIGHT_LIMIT:g}"
        )
    return np.exp(expo)


def weighted_transform(s, gw: float, t: float = 1.0):
    """``v_k = w_k exp(gw t |k|)``."""
    w = _weights(s, gw, t)
    c = s.coeffs * (w if s.coeffs.ndim == 1 else w[:, None])
    return type(s)(s.Z, c)


def inverse_weighted_transform(v, gw: float, t: float = 1.0):
    w = _weights(v, gw, t)
    c = v.coeffs / (w if v.coeffs.ndim == 1 else w[:, None])
    return type(v)(v.Z, c)


def _component_sizes(c: np.ndarray):
    """(|Re|, |Im|, |.|) per stored mode; vector norms in 3D."""
    if c.ndim == 1:
        return np.abs(c.real), np.abs(c.imag), np.abs(c)
    return (
        np.linalg.norm(c.real, axis=1),
        np.linalg.norm(c.imag, axis=1),
        np.linalg.norm(c, axis=1),
    )


def _ratio(size: np.ndarray, log_env: np.ndarray) -> np.ndarray:
    """``size / exp(log_env)``, through logs where the envelope underflows."""
    env = np.exp(log_env)
    ok = env > 1e-290
    out = np.empty_like(size)
    out[ok] = size[ok] / env[ok]
    with np.errstate(divide="ignore", over="ignore"):
        out[~ok] = np.exp(np.log(size[~ok]) - log_env[~ok])
    return out


def _argmax_first(x: np.ndarray) -> int:
    # np.argmax already returns the first maximal index; canonical half is lexicographic
    return int(np.argmax(x))


def membership(s, env: Envelope, t: float = 0.0, slack: float = MEMBERSHIP_SLACK) -> Membership:
    """Largest component ratio ``|w_k^(j)| / env(k, t)`` over ``|k| > K0``."""
    Z = s.Z
    active = Z.half_norms > env.K0
    if not np.any(active):
        return Membership(True, None, 0.0, 0.0, None)
    norms = Z.half_norms[active]
    re, im, mod = _component_sizes(s.coeffs[active])
    log_env = env.log_value(norms, t)
    comp = np.maximum(_ratio(re, log_env), _ratio(im, log_env))
    full = _ratio(mod, log_env)
    pts = Z.half_points[active]
    j = _argmax_first(comp)
    m = _argmax_first(full)
    worst = float(comp[j])
    inside = worst <= 1.0 + slack
    if inside and worst > 1.0:
        log.warning("envelope ratio %.12g within roundoff slack at k=%s", worst, tuple(pts[j]))
    return Membership(
        inside=bool(inside),
        worst_k=tuple(int(c) for c in pts[j]),
        worst_ratio=worst,
        modulus_ratio=float(full[m]),
        modulus_k=tuple(int(c) for c in pts[m]),
    )


def ratio_observer(env: Envelope):
    """Observer for :func:`integrator.run` producing ``(t, Membership)``."""

    def obs(t, s):
        return (t, membership(s, env, t))

    return obs


def envelope_ratio_series(trajectory, env: Envelope | None = None):
    """``[(t, sup ratio)]`` from ``(t, state)`` pairs (or ``(t, Membership)``)."""
    out = []
    last = -math.inf
    for t, item in trajectory:
        if t < last:
            raise ValueError("trajectory times must be non-decreasing")
        last = t
        m = item if isinstance(item, Membership) else membership(item, env, t)
        out.append((t, m.worst_ratio))
    return out


_CLIP = 1e-300


def fitted_gamma(s, r: float, D: float, k_min: float = 0.0) -> float:
    """``inf_{|k| >= k_min} -ln(|w_k| |k|^r / D) / |k|``.

    Empirical decay rate: equals ``gamma`` when every mode sits on
    ``D exp(-gamma |k|) / |k|^r`` and is >= 0 inside the algebraic envelope.
    """
    Z = s.Z
    sel = Z.half_norms >= k_min
    if not np.any(sel):
        raise EstimateUndefinedError(f"no modes with |k| >= {k_min}")
    norms = Z.half_norms[sel]
    _, _, mod = _component_sizes(s.coeffs[sel])
    mod = np.maximum(mod, _CLIP)
    g = -(np.log(mod) + r * np.log(norms) - math.log(D)) / norms
    return float(np.min(g))
