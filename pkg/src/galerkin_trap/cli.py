"""Command-line entry point: ``galerkin-trap {run,certify,oracle}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import kernels
from .dynamics import PhysicalParams
from .envelopes import Envelope
from .lattice import build_truncation
from .oracle import (
    boundary_state,
    conservation_rates,
    lemma1_trials,
    random_inside_state,
    verify_inward,
    write_trials_csv,
)
from .scenarios import ConfigError, certify, default_config, load_config, run_scenario
from .forcing import ForcingSpec
from .serial import write_json
from .state import random_spectrum_2d, random_spectrum_3d

log = logging.getLogger("galerkin_trap")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _read_config(args) -> dict:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            obj = json.load(fh)
    else:
        obj = {"scenario": args.scenario or "thm1"}
    if args.scenario:
        obj["scenario"] = args.scenario
    if args.seed is not None:
        obj["seed"] = args.seed
    if getattr(args, "reproducible", False):
        obj["reproducible"] = True
    return load_config(obj)


def cmd_run(args) -> int:
    cfg = _read_config(args)
    if cfg["reproducible"]:
        # one backend for every run so reduction order never depends on the build
        kernels.use_backend("compiled" if "compiled" in kernels.available_backends() else "python")
    out = run_scenario(cfg, args.out, fast=args.fast_nonlinearity, spot_every=args.spot_check_every)
    print(out.verdict)
    if any(tr.divergence for tr in out.traces):
        return EXIT_DIVERGED
    return EXIT_PASS if out.passed else EXIT_FAIL


def cmd_certify(args) -> int:
    cfg = _read_config(args)
    cert = certify(cfg)
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "config.json"), cfg)
    with open(os.path.join(args.out, "estimates.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cert.to_json())
    for r in cert.reports:
        print(f"{r.quantity} = {r.value!r} [{r.inequality_id}]")
    return EXIT_PASS


def _inward_audit(scenario: str, n: int, seed: int) -> list[dict]:
    """Randomised boundary states for a default 2D scenario configuration.

    Boundary wave vectors are drawn beyond ``max(K0, K_crit)`` among those
    where a boundary state with enstrophy at most ``E*`` exists.
    """
    cfg = default_config(scenario)
    cert = certify(cfg)
    env = cert.envelope
    f = ForcingSpec.from_dict(cfg["forcing"])
    p = PhysicalParams(cfg["physical"]["nu"], cfg["physical"]["alpha"])
    kc = cert.condition
    Z = build_truncation(2, "disk", cfg["truncation"]["K_max"])
    rng = np.random.default_rng(seed)
    reachable = 2 * env.value(Z.half_norms) ** 2 <= cert.E_star
    cand = np.flatnonzero((Z.half_norms > max(env.K0, kc.K)) & reachable)
    if cand.size == 0:
        raise ValueError(f"{scenario}: no reachable boundary modes in the truncation")
    rows = []
    for trial in range(n):
        j = int(rng.choice(cand))
        kbar = tuple(int(c) for c in Z.half_points[j])
        part = "re" if rng.integers(2) == 0 else "im"
        sign = 1 if rng.integers(2) == 0 else -1
        s = random_inside_state(Z, env, rng)
        s = boundary_state(s, env, kbar, part, sign, enstrophy_cap=cert.E_star)
        res = verify_inward(s, env, p, f, 0.0, kbar, part, sign, condition=kc)
        rows.append({"trial": trial, "seed": seed, "scenario": scenario, "k": kbar, "part": part,
                     "sign": sign, "margin": res.margin, "sufficient_margin": res.sufficient_margin,
                     "pass": res.holds})
    return rows


def cmd_oracle(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    ok = True
    rows = []
    for d, r in ((2, 1.5), (2, 2.0), (2, 3.0), (3, 3.0)):
        rows += lemma1_trials(d, r, args.trials, args.seed)
    write_trials_csv(os.path.join(args.out, "lemma1_trials.csv"), rows)
    bad = sum(not x["pass"] for x in rows)
    print(f"lemma1 domination: {len(rows) - bad}/{len(rows)} trials pass")
    ok &= bad == 0

    rng = np.random.default_rng(args.seed)
    crow = []
    for d, K in ((2, 8.0), (3, 4.0)):
        Z = build_truncation(d, "disk", K)
        for t in range(args.states):
            s = random_spectrum_2d(Z, rng) if d == 2 else random_spectrum_3d(Z, rng)
            c = conservation_rates(s)
            good = abs(c["d_energy_nl"]) <= 1e-12 * c["energy_scale"]
            if d == 2:
                good &= abs(c["d_enstrophy_nl"]) <= 1e-12 * c["enstrophy_scale"]
            crow.append({"trial": t, "seed": args.seed, "d": d,
                         "d_energy_nl": c["d_energy_nl"], "energy_scale": c["energy_scale"], "pass": good})
    write_trials_csv(os.path.join(args.out, "conservation_trials.csv"), crow)
    bad = sum(not x["pass"] for x in crow)
    print(f"conservation: {len(crow) - bad}/{len(crow)} states pass")
    ok &= bad == 0

    irow = []
    for scen in ("thm1", "thm2"):
        rows = _inward_audit(scen, args.boundary_states, args.seed)
        bad = sum(not x["pass"] for x in rows)
        print(f"inward audit ({scen}): {len(rows) - bad}/{len(rows)} boundary states point inward")
        ok &= bad == 0
        irow += rows
    write_trials_csv(os.path.join(args.out, "inward_trials.csv"), irow)
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="galerkin-trap", description="Trapping-region experiments for truncated vorticity systems.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON scenario config")
        p.add_argument("--scenario", help="scenario name (overrides the config)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="seed for the initial phases")

    p = sub.add_parser("run", help="certify and simulate a scenario")
    common(p)
    p.add_argument("--reproducible", action="store_true", help="byte-identical outputs")
    p.add_argument("--fast-nonlinearity", action="store_true", help="FFT nonlinearity (2D) with direct spot checks")
    p.add_argument("--spot-check-every", type=int, default=100, metavar="N")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("certify", help="estimates only")
    common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle", help="run the brute-force oracle suites")
    p.add_argument("--out", default="oracle_out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000, help="trials per (d, r)")
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--boundary-states", type=int, default=200)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "spot_check_every", 1) < 1:
        print("error: --spot-check-every must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
