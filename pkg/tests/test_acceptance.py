"""Acceptance criteria 1-13, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import filecmp
import math
import time

import numpy as np
import pytest

from galerkin_trap.dynamics import (
    PhysicalParams,
    nonlinear_2d,
    nonlinear_2d_fast,
    nonlinear_3d,
    nonlinear_3d_unreduced,
    rhs_2d,
    rhs_2d_real_split,
)
from galerkin_trap.cli import _inward_audit
from galerkin_trap.envelopes import MEMBERSHIP_SLACK, Envelope, membership, weighted_transform
from galerkin_trap.estimates import kcrit_2d_algebraic, lemma1_bound
from galerkin_trap.forcing import ForcingSpec, sample_forcing
from galerkin_trap.integrator import StepControl, run, step
from galerkin_trap.lattice import build_truncation
from galerkin_trap.oracle import boundary_state, conservation_rates, lemma1_trials, verify_inward
from galerkin_trap.scenarios import certify, default_config, initial_state, load_config, run_scenario
from galerkin_trap.state import Spectrum2D, random_spectrum_2d, random_spectrum_3d

SLACK = 1 + 1e-9


def criterion(n, title):
    return pytest.mark.criterion(n, title)


@pytest.fixture(scope="module")
def thm1_runs(tmp_path_factory):
    """Two reproducible thm1 runs (criteria 6, 11 and 13)."""
    cfg = load_config({"scenario": "thm1", "reproducible": True})
    out = []
    for i in range(2):
        d = tmp_path_factory.mktemp(f"thm1_{i}")
        t0 = time.perf_counter()
        res = run_scenario(cfg, str(d))
        out.append((d, res, time.perf_counter() - t0))
    return cfg, out


@pytest.fixture(scope="module")
def other_runs(tmp_path_factory):
    runs = {}
    for scen in ("thm2", "thm3", "thm4_3d", "thm7_3d", "thm8_3d", "custom"):
        d = tmp_path_factory.mktemp(scen)
        runs[scen] = (load_config({"scenario": scen, "reproducible": True}), run_scenario(
            load_config({"scenario": scen, "reproducible": True}), str(d)))
    return runs


@criterion(1, "2D truncated nonlinearity conserves enstrophy and energy")
def test_c01_conservation_2d():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    Z = build_truncation(2, "disk", 8.0)
    worst = 0.0
    for _ in range(100):
        c = conservation_rates(random_spectrum_2d(Z, rng))
        assert abs(c["d_enstrophy_nl"]) <= 1e-12 * c["enstrophy_scale"]
        assert abs(c["d_energy_nl"]) <= 1e-12 * c["energy_scale"]
        worst = max(worst, abs(c["d_enstrophy_nl"]) / c["enstrophy_scale"])
    assert time.perf_counter() - t0 < 60
    print(f"worst relative enstrophy rate {worst:.2e}")


@criterion(2, "3D truncated nonlinearity conserves energy")
def test_c02_conservation_3d():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    Z = build_truncation(3, "disk", 4.0)
    for _ in range(100):
        c = conservation_rates(random_spectrum_3d(Z, rng))
        assert abs(c["d_energy_nl"]) <= 1e-12 * c["energy_scale"]
    assert time.perf_counter() - t0 < 120


@criterion(3, "complex and real-split right-hand sides agree")
def test_c03_real_split():
    rng = np.random.default_rng(103)
    Z = build_truncation(2, "disk", 8.0)
    p = PhysicalParams(1.0, 2.0)
    f = ForcingSpec("power_law", G=0.5, r=3.0, eps=0.5, alpha_ref=2.0)
    worst = 0.0
    for _ in range(100):
        s = random_spectrum_2d(Z, rng)
        t = float(rng.uniform(0, 10))
        c = rhs_2d(s, p, f, t).coeffs
        d1, d2 = rhs_2d_real_split(Z, s.coeffs.real, s.coeffs.imag, p, f, t)
        dev = max(np.max(np.abs(d1 - c.real)), np.max(np.abs(d2 - c.imag))) / np.max(np.abs(c))
        worst = max(worst, dev)
    assert worst <= 1e-12


@criterion(4, "3D convolution form and reduced form agree on transversal states")
def test_c04_3d_forms():
    rng = np.random.default_rng(104)
    Z = build_truncation(3, "disk", 3.0)
    for _ in range(50):
        s = random_spectrum_3d(Z, rng)
        a = nonlinear_3d(s, project=False).coeffs
        b = nonlinear_3d_unreduced(s).coeffs
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


@criterion(5, "integrating-factor RK4: order 4 and exact linear flow")
def test_c05_integrator():
    Z = build_truncation(2, "disk", 4.0)
    p = PhysicalParams(1.0, 2.0)
    for k in [(1, 0), (2, 1), (3, 2)]:
        s = Spectrum2D.from_modes(Z, {k: 0.4 + 0.9j})
        dt = 1e-3
        out = step(s, p, None, 0.0, dt)
        exact = (0.4 + 0.9j) * math.exp(-4 * math.pi**2 * (k[0] ** 2 + k[1] ** 2) * dt)
        assert abs(out[k] - exact) <= 1e-14 * abs(exact)
    Z = build_truncation(2, "disk", 1.5)
    s = Spectrum2D.from_modes(Z, {(1, 0): 3 + 1j, (1, 1): -2 + 2j})
    p = PhysicalParams(0.05, 2.0)

    def end(h):
        return run(s, p, None, StepControl(h, 1.0)).state.coeffs

    ref = end(0.05 / 64)
    slope = math.log2(np.linalg.norm(end(0.05) - ref) / np.linalg.norm(end(0.025) - ref))
    print(f"order slope {slope:.4f}")
    assert 3.8 <= slope <= 4.2


@criterion(6, "thm1 trapping on disk(12) and disk(16), identical constants")
def test_c06_thm1(thm1_runs):
    cfg, runs = thm1_runs
    _, res, secs = runs[0]
    assert secs < 600
    cert = res.certificate
    kc = next(r for r in cert.reports if r.quantity == "K_crit")
    assert cert.envelope.K0 == max(kc.value, 4)
    assert res.identical_constants
    assert len(res.traces) == 2
    for tr in res.traces:
        assert tr.divergence is None
        assert all(row[3] <= SLACK for row in tr.rows)
        assert tr.rows[-1][0] == 10.0
    assert res.passed, res.verdict
    print(res.verdict)


@criterion(7, "thm2 weighted-variable envelope over T=5 on disk(12)")
def test_c07_thm2_weighted():
    cfg = load_config({"scenario": "thm2"})
    cert = certify(cfg)
    env = cert.envelope
    alg = Envelope("algebraic", env.D, env.r, K0=env.K0)
    Z = build_truncation(2, "disk", 12.0)
    f = ForcingSpec.from_dict(cfg["forcing"])
    p = PhysicalParams(cfg["physical"]["nu"], cfg["physical"]["alpha"])
    st = cfg["steps"]

    def obs(t, s):
        return membership(weighted_transform(s, env.gamma, 1.0), alg).worst_ratio

    res = run(initial_state(cfg, Z), p, f, StepControl(st["dt"], 5.0, observer_stride=st["observer_stride"]),
              observers=[obs])
    assert len(res.series) == 101
    print(f"max weighted ratio {max(res.series):.4e}")
    assert max(res.series) <= SLACK


@criterion(8, "thm3 fitted decay rate grows at least like half the certified rate")
def test_c08_thm3(other_runs):
    cfg, res = other_runs["thm3"]
    g3 = res.certificate.gamma_check
    t0 = cfg["steps"]["t_end"]
    assert g3 * t0 * cfg["truncation"]["K_max_check"] <= 40
    for tr in res.traces:
        assert tr.rows[-1][0] == t0
        for row in tr.rows:
            t, fg = row[0], row[5]
            assert fg >= 0.5 * g3 * t, (t, fg)
    assert res.passed, res.verdict


@criterion(9, "convolution bound dominates brute shell totals")
def test_c09_lemma1():
    t0 = time.perf_counter()
    total = 0
    for d, r in ((2, 1.5), (2, 2.0), (2, 3.0), (3, 3.0)):
        rows = lemma1_trials(d, r, 1000, seed=109)
        bad = [row for row in rows if not row["total"] <= row["bound"]]
        assert not bad, bad[:3]
        assert all(2 <= math.sqrt(sum(c * c for c in row["k"])) <= 32 for row in rows)
        total += len(rows)
    assert total == 4000
    assert time.perf_counter() - t0 < 300


@criterion(10, "inward audit for thm1 and thm2 plus a counterexample below K_crit")
def test_c10_inward():
    for scen in ("thm1", "thm2"):
        rows = _inward_audit(scen, 200, seed=110)
        assert len(rows) == 200
        assert all(row["pass"] for row in rows), scen
    Z = build_truncation(2, "disk", 6.0)
    nu = 1e-4
    p = PhysicalParams(nu, 2.0)
    f = ForcingSpec("power_law", G=1.0, r=3.0, eps=0.5, alpha_ref=2.0, phase_seed=1)
    env = Envelope("algebraic", 1e-3, 3.0)
    kbar = (3, 1)
    g = sample_forcing(f, kbar, 0.0)
    part = "re" if abs(g.real) >= abs(g.imag) else "im"
    sign = 1 if (g.real if part == "re" else g.imag) > 0 else -1
    s = boundary_state(Spectrum2D.zeros(Z), env, kbar, part, sign)
    assert kcrit_2d_algebraic(s.enstrophy(), 3.0, 2.0, 0.5, nu).K > math.sqrt(10)
    assert not verify_inward(s, env, p, f, 0.0, kbar, part, sign).holds


@criterion(11, "enstrophy (2D) and energy (3D) stay below E* in every scenario run")
def test_c11_bounds(thm1_runs, other_runs):
    outcomes = [thm1_runs[1][0][1]] + [res for _, res in other_runs.values()]
    assert len(outcomes) == 7
    for res in outcomes:
        col = 2 if res.certificate.scenario.endswith("_3d") else 1
        for tr in res.traces:
            assert tr.rows
            assert max(row[col] for row in tr.rows) <= res.certificate.E_star, res.certificate.scenario


@criterion(12, "fast nonlinearity matches the direct sum")
def test_c12_fast_path():
    rng = np.random.default_rng(112)
    Z = build_truncation(2, "disk", 8.0)
    for _ in range(50):
        s = random_spectrum_2d(Z, rng)
        a = nonlinear_2d(s)
        b = nonlinear_2d_fast(s)
        diff = Spectrum2D(Z, a.coeffs - b.coeffs)
        assert math.sqrt(diff.enstrophy()) <= 1e-10 * math.sqrt(a.enstrophy())


@criterion(13, "reproducible thm1 runs are byte-identical")
def test_c13_determinism(thm1_runs):
    (d1, _, _), (d2, _, _) = thm1_runs[1]
    for name in ("series.csv", "estimates.json"):
        assert filecmp.cmp(d1 / name, d2 / name, shallow=False), name
    assert (d1 / "series.csv").read_bytes() == (d2 / "series.csv").read_bytes()
