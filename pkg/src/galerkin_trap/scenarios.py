"""Scenario configs, the certification pipeline and simulation runs.

A scenario binds physical parameters, forcing and initial data to the
estimates that define a trapping envelope, then simulates on two
truncation sets and checks the envelope along both trajectories.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PhysicalParams, nonlinear_2d_fast, nonlinear_2d_half
from .envelopes import (
    MEMBERSHIP_SLACK,
    EstimateUndefinedError,
    Envelope,
    fitted_gamma,
    membership,
)
from .estimates import (
    DEFAULT_FACTOR,
    Constant,
    EstimateReport,
    InfeasibleError,
    PreconditionError,
    d_prime_algebraic,
    energy_bound_3d,
    enstrophy_bound,
    gamma2_prime,
    gamma3,
    kcrit_2d_algebraic,
    kcrit_2d_exponential,
    kcrit_2d_gevrey,
    kcrit_3d,
)
from .forcing import ForcingSpec, g_star_lattice
from .integrator import DivergenceError, StepControl, run
from .lattice import build_truncation, lattice_sum
from .serial import csv_line, dumps, fmt_float, write_json
from .state import Spectrum2D, Spectrum3D, energy, enstrophy, restrict, to_json

log = logging.getLogger(__name__)

__all__ = [
    "SCENARIOS",
    "ConfigError",
    "default_config",
    "load_config",
    "Certificate",
    "certify",
    "initial_state",
    "run_scenario",
    "ScenarioOutcome",
    "SERIES_COLUMNS",
]

SCENARIOS = ("thm1", "thm2", "thm3", "thm4_3d", "thm7_3d", "thm8_3d", "custom")
SERIES_COLUMNS = (
    "t",
    "enstrophy",
    "energy",
    "envelope_ratio_re_im_max",
    "envelope_worst_k",
    "fitted_gamma",
    "dt",
    "step_rejections",
)
FAST_TOL = 1e-10

_BAND3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0]]


class ConfigError(ValueError):
    """Invalid scenario config; ``field`` names the offending entry."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


def _forcing(kind, G, r, eps, alpha, gamma=0.0, delta=0.0, band=()):
    return {
        "kind": kind, "G": G, "r": r, "eps": eps, "gamma": gamma, "delta": delta,
        "alpha_ref": alpha, "band": [list(b) for b in band], "temporal": "constant",
        "frequency": 0.0, "phase_seed": 7,
    }


def _base(scenario, dim, K, K_check, nu, alpha, forcing, initial, dt, t_end, stride):
    return {
        "scenario": scenario,
        "dimension": dim,
        "truncation": {"shape": "disk", "K_max": K, "K_max_check": K_check},
        "physical": {"nu": nu, "alpha": alpha},
        "forcing": forcing,
        "initial": initial,
        "steps": {"dt": dt, "t_end": t_end, "scheme": "if_rk4", "observer_stride": stride},
        "estimates": {"K0": None, "K0_floor": 4.0, "factor": DEFAULT_FACTOR, "gamma0": 1.0},
        "envelope": None,
        "snapshots": [0.0, t_end],
        "seed": 0,
        "reproducible": False,
    }


def _initial(kind, D, r, gamma=0.0):
    return {"kind": kind, "D": D, "r": r, "gamma": gamma}


def default_config(scenario: str) -> dict:
    """Materialised defaults; amplitudes are sized so K_crit fits the truncation."""
    if scenario == "thm1":
        return _base("thm1", 2, 12.0, 16.0, 1.0, 2.0, _forcing("power_law", 0.5, 3.0, 0.5, 2.0),
                     _initial("algebraic", 0.05, 3.0), 0.005, 10.0, 20)
    if scenario == "thm2":
        return _base("thm2", 2, 12.0, 16.0, 1.0, 2.0,
                     _forcing("exponential", 1e-3, 3.0, 0.5, 2.0, gamma=0.2, delta=0.5),
                     _initial("exponential", 5e-5, 3.0, 0.3), 0.005, 5.0, 10)
    if scenario == "thm3":
        cfg = _base("thm3", 2, 12.0, 16.0, 1.0, 2.0,
                    _forcing("exponential", 3e-3, 3.0, 0.5, 2.0, gamma=0.2, delta=0.5),
                    _initial("algebraic", 3e-4, 3.0), 0.0025, 0.5, 4)
        return cfg
    if scenario == "thm4_3d":
        return _base("thm4_3d", 3, 4.0, 5.0, 1.0, 3.0, _forcing("trig_poly", 0.02, 2.0, 0.5, 3.0, band=_BAND3),
                     _initial("algebraic", 5e-3, 2.0), 0.005, 2.0, 10)
    if scenario == "thm7_3d":
        return _base("thm7_3d", 3, 4.0, 5.0, 1.0, 3.0, _forcing("trig_poly", 2e-6, 2.5, 0.5, 3.0, band=_BAND3),
                     _initial("algebraic", 2e-6, 2.5), 0.005, 0.5, 5)
    if scenario == "thm8_3d":
        return _base("thm8_3d", 3, 4.0, 5.0, 1.0, 3.0, _forcing("trig_poly", 2e-6, 2.5, 0.5, 3.0, band=_BAND3),
                     _initial("exponential", 2e-6, 2.5, 0.3), 0.005, 1.0, 10)
    if scenario == "custom":
        cfg = _base("custom", 2, 8.0, 10.0, 1.0, 2.0, _forcing("zero", 0.0, 3.0, 0.5, 2.0),
                    _initial("algebraic", 0.0, 3.0), 0.01, 1.0, 10)
        cfg["envelope"] = {"kind": "algebraic", "D": 1.0, "r": 3.0, "gamma": 0.0, "K0": 0.0}
        return cfg
    raise ConfigError("scenario", f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in out:
            raise ConfigError(where, "unknown field")
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(obj: dict | str) -> dict:
    """Validate a user config (dict or JSON text) on top of the scenario defaults."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "scenario" not in obj:
        raise ConfigError("scenario", "missing")
    scen = obj["scenario"]
    if scen not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {scen!r}; choose from {', '.join(SCENARIOS)}")
    cfg = _merge(default_config(scen), obj)
    if scen == "custom" and isinstance(obj.get("envelope"), dict):
        cfg["envelope"] = {"kind": "algebraic", "D": 1.0, "r": 3.0, "gamma": 0.0, "K0": 0.0,
                           **obj["envelope"]}
    _validate(cfg)
    return cfg


def _num(cfg, path):
    cur = cfg
    for p in path.split("."):
        cur = cur[p]
    if isinstance(cur, bool) or not isinstance(cur, (int, float)) or not math.isfinite(cur):
        raise ConfigError(path, f"expected a finite number, got {cur!r}")
    return float(cur)


def _validate(cfg: dict) -> None:
    scen = cfg["scenario"]
    d = cfg["dimension"]
    if d not in (2, 3):
        raise ConfigError("dimension", "must be 2 or 3")
    want = 3 if scen.endswith("_3d") else (2 if scen != "custom" else d)
    if d != want:
        raise ConfigError("dimension", f"{scen} is a {want}D scenario")
    if cfg["truncation"]["shape"] not in ("disk", "square"):
        raise ConfigError("truncation.shape", "must be 'disk' or 'square'")
    K = _num(cfg, "truncation.K_max")
    if K < 1:
        raise ConfigError("truncation.K_max", "must be >= 1")
    if cfg["truncation"]["K_max_check"] is not None and _num(cfg, "truncation.K_max_check") < 1:
        raise ConfigError("truncation.K_max_check", "must be >= 1 or null")
    nu = _num(cfg, "physical.nu")
    alpha = _num(cfg, "physical.alpha")
    if not nu > 0:
        raise ConfigError("physical.nu", "must be positive")
    if not alpha > 1:
        raise ConfigError("physical.alpha", "must exceed 1")
    r = _num(cfg, "initial.r")
    for key in ("initial.D", "initial.gamma"):
        if _num(cfg, key) < 0:
            raise ConfigError(key, "must be >= 0")
    if cfg["initial"]["kind"] not in ("algebraic", "exponential"):
        raise ConfigError("initial.kind", "must be 'algebraic' or 'exponential'")
    try:
        f = ForcingSpec.from_dict(cfg["forcing"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("forcing", str(exc)) from None
    try:
        StepControl(_num(cfg, "steps.dt"), _num(cfg, "steps.t_end"), cfg["steps"]["scheme"],
                    int(cfg["steps"]["observer_stride"]))
    except ValueError as exc:
        raise ConfigError("steps", str(exc)) from None
    if scen == "custom":
        env = cfg["envelope"]
        if env is not None:
            try:
                Envelope(env["kind"], float(env["D"]), float(env["r"]), float(env.get("gamma", 0.0)),
                         float(env.get("K0", 0.0)))
            except (KeyError, ValueError) as exc:
                raise ConfigError("envelope", str(exc)) from None
        return
    if cfg["envelope"] is not None:
        raise ConfigError("envelope", "only the custom scenario takes an explicit envelope")
    if f.kind in ("power_law", "exponential") and (f.r != r or f.alpha_ref != alpha):
        raise ConfigError("forcing", "forcing r and alpha_ref must match initial.r and physical.alpha")
    if scen == "thm1":
        if not r > 1:
            raise ConfigError("initial.r", "thm1 requires r > 1")
        if f.kind not in ("zero", "power_law", "exponential"):
            raise ConfigError("forcing.kind", "thm1 needs zero, power_law or exponential forcing")
    if scen in ("thm2", "thm3"):
        if f.kind != "exponential":
            raise ConfigError("forcing.kind", f"{scen} needs exponential forcing")
        if not r > 1:
            raise ConfigError("initial.r", f"{scen} requires r > 1")
    if scen == "thm2" and cfg["initial"]["kind"] != "exponential":
        raise ConfigError("initial.kind", "thm2 needs exponential initial data")
    if scen == "thm2" and not _num(cfg, "initial.gamma") > 0:
        raise ConfigError("initial.gamma", "thm2 needs a positive initial decay rate")
    if scen == "thm3":
        if not r > 2:
            raise ConfigError("initial.r", "thm3 requires r > 2")
        if not _num(cfg, "estimates.gamma0") > 0:
            raise ConfigError("estimates.gamma0", "must be positive")
    if scen.endswith("_3d"):
        if f.kind not in ("zero", "trig_poly"):
            raise ConfigError("forcing.kind", "3D scenarios take zero or trig_poly forcing")
        if not alpha > 2.5:
            raise ConfigError("physical.alpha", f"{scen} requires alpha > 2.5 (uniform energy-based envelope)")
        if scen == "thm4_3d" and not r > 1.5:
            raise ConfigError("initial.r", "thm4_3d requires r > 3/2")
        if scen in ("thm7_3d", "thm8_3d") and not r > 2:
            raise ConfigError("initial.r", f"{scen} requires r > 2")
    if scen == "thm8_3d" and not (cfg["initial"]["kind"] == "exponential" and _num(cfg, "initial.gamma") > 0):
        raise ConfigError("initial", "thm8_3d needs exponential initial data with gamma > 0")


# ---------------------------------------------------------------------------
# certification


@dataclass
class Certificate:
    scenario: str
    envelope: Envelope
    E_star: float
    reports: list = field(default_factory=list)
    gamma_check: float | None = None  # rate for the fitted-gamma check (thm3)
    D_fit: float | None = None
    condition: object = None  # KcritResult behind the envelope (not serialised)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "envelope": self.envelope.to_dict(),
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"


def _rep(q, v, ineq, inputs, consts=()):
    return EstimateReport(q, v, ineq, inputs, list(consts))


def _E0_2d(D, r):
    return D * D * lattice_sum(2, 2 * r)


def _E0_3d(D, r):
    return D * D * lattice_sum(3, 2 * r + 2) / (4 * math.pi**2)


def _K0(cfg, K):
    o = cfg["estimates"]["K0"]
    if o is None:
        return float(K)
    if o < K:
        raise ConfigError("estimates.K0", f"override {o} is below K_crit = {K}")
    return float(o)


def _thm1_chain(cfg, D, f, reports, tag=""):
    p = cfg["physical"]
    r = cfg["initial"]["r"]
    g = g_star_lattice(f, 2)
    E0 = _E0_2d(D, r)
    E = enstrophy_bound(E0, g, p["nu"])
    reports.append(_rep("E_star", E, "enstrophy_gronwall", {"E0": E0, "g_star": g, "nu": p["nu"]},
                        [Constant("sum_l_-2r", lattice_sum(2, 2 * r), "upper bound of sum |l|^-2r over Z^2\\0")]))
    kc = kcrit_2d_algebraic(E, r, p["alpha"], f.eps, p["nu"], cfg["estimates"]["factor"])
    kc.report.quantity = f"K_crit{tag}"
    reports.append(kc.report)
    K0 = max(kc.K, cfg["estimates"]["K0_floor"])
    if not tag:
        K0 = _K0(cfg, K0)
    Dp = d_prime_algebraic(K0, E, r, f.G)
    reports.append(_rep(f"D_prime{tag}", Dp, "algebraic_2d",
                        {"K0": K0, "E_star": E, "r": r, "G": f.G}))
    return E, kc, K0, Dp


def _thm4_chain(cfg, D, f, reports, tag=""):
    p = cfg["physical"]
    r = cfg["initial"]["r"]
    g = g_star_lattice(f, 3)
    E0 = _E0_3d(D, r)
    E = energy_bound_3d(E0, g, p["nu"])
    reports.append(_rep("E_star", E, "energy_gronwall", {"E0": E0, "g_star": g, "nu": p["nu"]},
                        [Constant("sum_l_-2r-2", lattice_sum(3, 2 * r + 2), "upper bound of sum |l|^-(2r+2) over Z^3\\0")]))
    kc = kcrit_3d(E, r, p["alpha"], p["nu"], "thm4")
    kc.report.quantity = f"K_crit{tag}"
    reports.append(kc.report)
    band = max((math.sqrt(sum(c * c for c in b)) for b in f.band), default=1.0)
    K0 = max(float(kc.K), band)
    if not tag:
        K0 = _K0(cfg, K0)
    Dp = max(D, 2 * math.pi * math.sqrt(E) * K0 ** (r + 1))
    reports.append(_rep(f"D_prime{tag}", Dp, "energy_3d", {"K0": K0, "E_star": E, "r": r, "D": D}))
    return E, kc, K0, Dp


def certify(cfg: dict) -> Certificate:
    """Estimates pipeline: E*, K_crit, K0, D', rates; no simulation."""
    scen = cfg["scenario"]
    f = ForcingSpec.from_dict(cfg["forcing"])
    p = cfg["physical"]
    ini = cfg["initial"]
    r, D = ini["r"], ini["D"]
    reps: list = []
    try:
        if scen == "custom":
            env = cfg["envelope"]
            d = cfg["dimension"]
            g = g_star_lattice(f, d)
            E0 = (_E0_2d if d == 2 else _E0_3d)(D, r) if D > 0 else 0.0
            E = (enstrophy_bound if d == 2 else energy_bound_3d)(E0, g, p["nu"])
            if E > 0:
                reps.append(_rep("E_star", E, "enstrophy_gronwall" if d == 2 else "energy_gronwall",
                                 {"E0": E0, "g_star": g, "nu": p["nu"]}))
            envl = Envelope(env["kind"], float(env["D"]), float(env["r"]), float(env.get("gamma", 0.0)),
                            float(env.get("K0", 0.0)))
            return Certificate(scen, envl, E, reps)
        if scen == "thm1":
            E, kc, K0, Dp = _thm1_chain(cfg, D, f, reps)
            return Certificate(scen, Envelope("algebraic", Dp, r, 0.0, K0), E, reps, condition=kc)
        if scen == "thm2":
            E, _, _, Dbar = _thm1_chain(cfg, D, f, reps, tag="_algebraic")
            D2p = max(2 * Dbar, f.G)
            kc = kcrit_2d_exponential(D2p, f.G, f.gamma, f.delta, 0.0, r, p["alpha"], f.eps, p["nu"])
            K0 = _K0(cfg, kc.K)
            g2 = gamma2_prime(K0, Dbar, D2p, r, f.gamma, f.delta, ini["gamma"])
            kc.report.inputs["gamma2_prime"] = g2
            reps.append(kc.report)
            reps.append(_rep("D2_prime", D2p, "exponential_2d", {"D_bar": Dbar, "G": f.G}))
            reps.append(_rep("gamma2_prime", g2, "exponential_2d",
                             {"K0": K0, "D_bar": Dbar, "D2_prime": D2p, "gamma": f.gamma,
                              "delta": f.delta, "gamma2": ini["gamma"]}))
            return Certificate(scen, Envelope("exponential", D2p, r, g2, K0), E, reps, condition=kc)
        if scen == "thm3":
            E, _, _, D1p = _thm1_chain(cfg, D, f, reps, tag="_algebraic")
            D3p = max(2 * D1p, f.G)
            g0 = cfg["estimates"]["gamma0"]
            kc = kcrit_2d_gevrey(D3p, f.G, g0, r, p["alpha"], p["nu"], f.eps)
            reps.append(kc.report)
            K0 = _K0(cfg, kc.K)
            t0 = cfg["steps"]["t_end"]
            g3 = gamma3(K0, t0, f.gamma, f.delta, g0, D3p, D1p)
            reps.append(_rep("D3_prime", D3p, "gevrey_2d", {"D1_prime": D1p, "G": f.G}))
            reps.append(_rep("gamma3", g3, "gevrey_2d",
                             {"K0": K0, "t0": t0, "gamma": f.gamma, "delta": f.delta, "gamma0": g0,
                              "D3_prime": D3p, "D1_prime": D1p}))
            return Certificate(scen, Envelope("gevrey", D3p, r, g3, K0), E, reps,
                               gamma_check=g3, D_fit=math.sqrt(2) * D3p, condition=kc)
        if scen == "thm4_3d":
            E, kc, K0, Dp = _thm4_chain(cfg, D, f, reps)
            return Certificate(scen, Envelope("algebraic", Dp, r, 0.0, K0), E, reps, condition=kc)
        if scen in ("thm7_3d", "thm8_3d"):
            E, _, _, Dbar = _thm4_chain(cfg, D, f, reps, tag="_energy")
            Dp = 2 * Dbar
            g0 = cfg["estimates"]["gamma0"] if scen == "thm7_3d" else 0.0
            kc = kcrit_3d(E, r, p["alpha"], p["nu"], "thm7", g0, Dp)
            reps.append(kc.report)
            band = max((math.sqrt(sum(c * c for c in b)) for b in f.band), default=1.0)
            K0 = _K0(cfg, max(float(kc.K), band))
            reps.append(_rep("D_prime", Dp, "convolution_3d", {"D_bar": Dbar}))
            if scen == "thm7_3d":
                t1 = cfg["steps"]["t_end"]
                g7 = min(g0, math.log(Dp / Dbar) / (t1 * K0))
                reps.append(_rep("gamma7", g7, "convolution_3d", {"gamma0": g0, "t1": t1, "K0": K0}))
                return Certificate(scen, Envelope("gevrey", Dp, r, g7, K0), E, reps, condition=kc)
            g8 = min(math.log(Dp / Dbar) / K0, ini["gamma"])
            reps.append(_rep("gamma8_prime", g8, "convolution_3d", {"K0": K0, "gamma8": ini["gamma"]}))
            return Certificate(scen, Envelope("exponential", Dp, r, g8, K0), E, reps, condition=kc)
    except (InfeasibleError, PreconditionError) as exc:
        raise ConfigError(scen, str(exc)) from None
    raise ConfigError("scenario", f"unknown scenario {scen!r}")


# ---------------------------------------------------------------------------
# runs


def _modulus(ini: dict, norms: np.ndarray) -> np.ndarray:
    m = ini["D"] / norms ** ini["r"]
    if ini["kind"] == "exponential":
        m = m * np.exp(-ini["gamma"] * norms)
    return m


def initial_state(cfg: dict, Z):
    """Envelope-saturating moduli with seeded random phases (random
    transversal directions in 3D)."""
    rng = np.random.default_rng(int(cfg["seed"]))
    ini = cfg["initial"]
    m = _modulus(ini, Z.half_norms)
    n = Z.n_half
    if Z.d == 2:
        phi = rng.uniform(0, 2 * math.pi, n)
        return Spectrum2D(Z, m * np.exp(1j * phi))
    k = Z.half_points.astype(np.float64)
    v = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    v -= k * (np.einsum("ij,ij->i", k, v) / Z.half_norms**2)[:, None]
    v /= np.linalg.norm(v, axis=1)[:, None]
    return Spectrum3D(Z, v * m[:, None])


def _truncations(cfg):
    t = cfg["truncation"]
    d = cfg["dimension"]
    Zs = [build_truncation(d, t["shape"], float(t["K_max"]))]
    if t["K_max_check"] is not None:
        Zs.append(build_truncation(d, t["shape"], float(t["K_max_check"])))
    return Zs


@dataclass
class Trace:
    rows: list
    worst: tuple  # (ratio, t, k)
    max_invariant: float
    fit_fail: tuple | None
    divergence: str | None = None


def _observer(cert: Certificate, d: int, dt: float, rows: list, state: dict):
    env = cert.envelope
    r = env.r
    D_fit = cert.D_fit if cert.D_fit is not None else math.sqrt(2) * env.D

    def obs(t, s):
        m = membership(s, env, t)
        try:
            fg = fitted_gamma(s, r, D_fit, env.K0 + 1)
        except EstimateUndefinedError:
            fg = None
        ens = enstrophy(s)
        en = energy(s)
        inv = ens if d == 2 else en
        state["max_inv"] = max(state["max_inv"], inv)
        if m.worst_ratio > state["worst"][0]:
            state["worst"] = (m.worst_ratio, t, m.worst_k)
        if cert.gamma_check is not None and fg is not None and fg < 0.5 * cert.gamma_check * t:
            if state["fit_fail"] is None:
                state["fit_fail"] = (t, fg)
        wk = "" if m.worst_k is None else " ".join(str(c) for c in m.worst_k)
        rows.append((t, ens, en, m.worst_ratio, wk, "" if fg is None else fg, dt, 0))
        return None

    return obs


def _spot_checker(stride: int, Z):
    def monitor(n, t, s):
        if n % stride:
            return
        direct = nonlinear_2d_half(Z, s.coeffs)
        fast = nonlinear_2d_fast(s).coeffs
        scale = math.sqrt(float(np.sum(np.abs(direct) ** 2)))
        err = math.sqrt(float(np.sum(np.abs(fast - direct) ** 2)))
        if err > FAST_TOL * max(scale, 1e-300):
            raise RuntimeError(f"fast nonlinearity deviates from direct by {err:.3e} (scale {scale:.3e}) at t={t}")

    return monitor


def simulate(cfg: dict, cert: Certificate, Z, fast: bool = False, spot_every: int = 100,
             snap_dir: str | None = None) -> Trace:
    p = PhysicalParams(cfg["physical"]["nu"], cfg["physical"]["alpha"])
    f = ForcingSpec.from_dict(cfg["forcing"])
    st = cfg["steps"]
    s0 = initial_state(cfg, Z)
    rows: list = []
    state = {"max_inv": 0.0, "worst": (-1.0, None, None), "fit_fail": None}
    obs = [_observer(cert, Z.d, st["dt"], rows, state)]
    snaps = sorted(float(x) for x in cfg["snapshots"])
    if snap_dir is not None and snaps:
        def snap_obs(t, s):
            for ts in snaps:
                if abs(t - ts) <= 1e-9 * max(1.0, ts):
                    with open(os.path.join(snap_dir, f"spectrum_t{ts:g}.json"), "w", encoding="utf-8",
                              newline="\n") as fh:
                        fh.write(to_json(s))
            return None
        obs.append(snap_obs)
    control = StepControl(st["dt"], st["t_end"], st["scheme"], int(st["observer_stride"]))
    monitor = _spot_checker(spot_every, Z) if fast and Z.d == 2 else None
    div = None
    try:
        run(s0, p, f, control, observers=obs, fast=fast and Z.d == 2, monitor=monitor)
    except DivergenceError as exc:
        div = str(exc)
        if snap_dir is not None and exc.checkpoint is not None:
            with open(os.path.join(snap_dir, "checkpoint.json"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(to_json(exc.checkpoint))
    return Trace(rows, state["worst"], state["max_inv"], state["fit_fail"], div)


def _write_series(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for row in rows:
            fh.write(csv_line(row))


@dataclass
class ScenarioOutcome:
    passed: bool
    verdict: str
    certificate: Certificate
    traces: list
    identical_constants: bool


def run_scenario(cfg: dict, out_dir: str, fast: bool = False, spot_every: int = 100) -> ScenarioOutcome:
    """Certify, simulate on both truncations and write all artifacts."""
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()
    write_json(os.path.join(out_dir, "config.json"), cfg)
    Zs = _truncations(cfg)
    # estimates are recomputed per truncation to expose any Z dependence
    certs = [certify(cfg) for _ in Zs]
    texts = [c.to_json() for c in certs]
    identical = all(t == texts[0] for t in texts)
    cert = certs[0]
    with open(os.path.join(out_dir, "estimates.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(texts[0])
    traces = []
    for i, Z in enumerate(Zs):
        tr = simulate(cfg, cert, Z, fast, spot_every, out_dir if i == 0 else None)
        _write_series(os.path.join(out_dir, "series.csv" if i == 0 else f"series_K{Z.K_max:g}.csv"), tr.rows)
        traces.append((Z, tr))
    problems = []
    if not identical:
        problems.append("estimate reports differ between truncations")
    for Z, tr in traces:
        tag = f"K_max={Z.K_max:g}"
        if tr.divergence:
            problems.append(f"{tag}: divergence ({tr.divergence}); checkpoint.json written")
            continue
        ratio, t, k = tr.worst
        if ratio > 1 + MEMBERSHIP_SLACK:
            problems.append(f"{tag}: envelope ratio {fmt_float(ratio)} at t={t:g} k={k}")
        if tr.max_invariant > cert.E_star * (1 + 1e-12):
            what = "enstrophy" if Z.d == 2 else "energy"
            problems.append(f"{tag}: {what} {fmt_float(tr.max_invariant)} exceeds E*={fmt_float(cert.E_star)}")
        if tr.fit_fail is not None:
            problems.append(f"{tag}: fitted gamma {fmt_float(tr.fit_fail[1])} below half the certified rate at t={tr.fit_fail[0]:g}")
    worst = max(tr.worst[0] for _, tr in traces)
    if problems:
        verdict = "FAIL " + "; ".join(problems)
    else:
        verdict = (f"PASS scenario={cfg['scenario']} max_envelope_ratio={fmt_float(worst)} "
                   f"E_star={fmt_float(cert.E_star)} truncations={','.join(f'{Z.K_max:g}' for Z in Zs)}")
    lines = [verdict]
    if not cfg.get("reproducible"):
        lines.append(f"elapsed_seconds={time.perf_counter() - started:.2f}")
    with open(os.path.join(out_dir, "verdict.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return ScenarioOutcome(not problems, verdict, cert, [tr for _, tr in traces], identical)
