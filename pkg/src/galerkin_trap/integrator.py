"""Fixed-step time integration.

``if_rk4`` is classical RK4 applied to ``v = exp(L t) w`` where ``L`` is the
diagonal dissipation, so the stiff linear part is integrated exactly
(Lawson's integrating-factor scheme).  ``rk4`` applies classical RK4 to the
full right-hand side and is limited by the real-axis stability interval.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    PhysicalParams,
    dissipation_rates,
    nonlinear_2d_fast,
    nonlinear_2d_half,
    nonlinear_3d_half,
)
from .forcing import ForcingSpec, forcing_half
from .lattice import TruncationSet
from .state import Spectrum2D, Spectrum3D, project_transversal

log = logging.getLogger(__name__)

__all__ = [
    "StepControl",
    "StepRejectedError",
    "DivergenceError",
    "stability_bound",
    "step",
    "run",
    "RunResult",
    "SCHEMES",
]

SCHEMES = ("if_rk4", "rk4")
RK4_STABILITY = 2.7


class StepRejectedError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Non-finite amplitudes; ``checkpoint`` is the last finite state."""

    def __init__(self, msg, checkpoint=None, t=None):
        super().__init__(msg)
        self.checkpoint = checkpoint
        self.t = t


@dataclass(frozen=True)
class StepControl:
    dt: float
    t_end: float
    scheme: str = "if_rk4"
    observer_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.observer_stride < 1:
            raise ValueError("observer_stride must be a positive integer")


def stability_bound(p: PhysicalParams, K_max: float) -> float:
    """Largest plain-RK4 step accepted: 2.7 / (4 pi^2 nu K_max^alpha)."""
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    return RK4_STABILITY / (4 * math.pi**2 * p.nu * K_max**p.alpha)


class _System:
    """Half-array right-hand side pieces for one truncation set."""

    def __init__(self, Z: TruncationSet, p: PhysicalParams, f: ForcingSpec | None, fast: bool = False):
        self.Z = Z
        self.p = p
        self.f = f
        self.lam = dissipation_rates(Z, p)
        self.factors: dict = {}
        if Z.d == 2:
            self.lam_b = self.lam
            if fast:
                self._nl = lambda w: nonlinear_2d_fast(Spectrum2D(Z, w)).coeffs
            else:
                self._nl = lambda w: nonlinear_2d_half(Z, w)
        else:
            self.lam_b = self.lam[:, None]
            self._nl = lambda w: nonlinear_3d_half(Z, w, project=False)

    def forcing(self, t):
        return forcing_half(self.f, self.Z, t)

    def explicit(self, t, w):
        """Nonlinearity plus forcing (everything except the dissipation)."""
        out = self._nl(w)
        g = self.forcing(t)
        if g is not None:
            out = out + g
        return out

    def full_rhs(self, t, w):
        return self.explicit(t, w) - self.lam_b * w

    def finish(self, w):
        return project_transversal(self.Z, w) if self.Z.d == 3 else w


def _factors(sysm: _System, dt: float):
    hit = sysm.factors.get(dt)
    if hit is None:
        hit = (np.exp(-sysm.lam_b * dt), np.exp(-sysm.lam_b * (0.5 * dt)))
        sysm.factors[dt] = hit
    return hit


def _step_if_rk4(sysm: _System, w, t, h):
    E, E2 = _factors(sysm, h)
    F = sysm.explicit
    k1 = F(t, w)
    k2 = F(t + 0.5 * h, E2 * (w + (0.5 * h) * k1))
    k3 = F(t + 0.5 * h, E2 * w + (0.5 * h) * k2)
    k4 = F(t + h, E * w + h * (E2 * k3))
    return E * w + (h / 6.0) * (E * k1 + 2.0 * (E2 * (k2 + k3)) + k4)


def _step_rk4(sysm: _System, w, t, h):
    F = sysm.full_rhs
    k1 = F(t, w)
    k2 = F(t + 0.5 * h, w + (0.5 * h) * k1)
    k3 = F(t + 0.5 * h, w + (0.5 * h) * k2)
    k4 = F(t + h, w + h * k3)
    return w + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _check_rk4(sysm: _System, dt: float):
    bound = stability_bound(sysm.p, float(np.max(sysm.Z.norms)))
    if dt > bound:
        raise StepRejectedError(
            f"rk4 step {dt:.3e} exceeds the stability bound {bound:.3e}; use if_rk4 or a smaller dt"
        )


def _wrap(Z, w):
    return Spectrum2D(Z, w) if Z.d == 2 else Spectrum3D(Z, w)


def step(state, p: PhysicalParams, f: ForcingSpec | None, t: float, dt: float,
         scheme: str = "if_rk4", fast: bool = False):
    """One step from ``t`` to ``t + dt``; returns a new state."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    sysm = _System(state.Z, p, f, fast)
    if scheme == "rk4":
        _check_rk4(sysm, dt)
        w = _step_rk4(sysm, state.coeffs, t, dt)
    else:
        w = _step_if_rk4(sysm, state.coeffs, t, dt)
    return _wrap(state.Z, sysm.finish(w))


@dataclass
class RunResult:
    state: object
    t: float
    steps: int
    series: list


Observer = Callable[[float, object], object]


def run(state0, p: PhysicalParams, f: ForcingSpec | None, control: StepControl,
        observers: Sequence[Observer] = (), fast: bool = False, observe_initial: bool = True,
        monitor: Callable[[int, float, object], None] | None = None) -> RunResult:
    """Advance from ``t = 0`` to ``control.t_end`` in fixed steps.

    Observers are called as ``obs(t, state)`` at ``t = 0`` (if
    ``observe_initial``), every ``observer_stride`` steps and at the final
    step; non-None return values are appended to ``series`` in time order.
    The last step is shortened to land exactly on ``t_end``.  ``monitor``,
    if given, is called as ``monitor(n, t, state)`` after every step and may
    raise to abort the run.
    """
    Z = state0.Z
    series: list = []
    if control.t_end == 0:
        return RunResult(state0, 0.0, 0, series)
    sysm = _System(Z, p, f, fast)
    stepper = _step_if_rk4 if control.scheme == "if_rk4" else _step_rk4
    if control.scheme == "rk4":
        _check_rk4(sysm, control.dt)

    def notify(t, s):
        for obs in observers:
            row = obs(t, s)
            if row is not None:
                series.append(row)

    if observe_initial:
        notify(0.0, state0)
    n_full = int(math.floor(control.t_end / control.dt + 1e-9))
    rem = control.t_end - n_full * control.dt
    n_steps = n_full + (1 if rem > 1e-12 * control.dt else 0)
    w = state0.coeffs
    t = 0.0
    for n in range(1, n_steps + 1):
        h = control.dt if n <= n_full else rem
        w_new = sysm.finish(stepper(sysm, w, t, h))
        if not np.all(np.isfinite(w_new)):
            raise DivergenceError(
                f"non-finite amplitude at step {n} (t={t + h:.6g})",
                checkpoint=_wrap(Z, w),
                t=t,
            )
        w = w_new
        t = n * control.dt if n <= n_full else control.t_end
        if monitor is not None:
            monitor(n, t, _wrap(Z, w))
        if n % control.observer_stride == 0 or n == n_steps:
            notify(t, _wrap(Z, w))
    return RunResult(_wrap(Z, w), t, n_steps, series)
