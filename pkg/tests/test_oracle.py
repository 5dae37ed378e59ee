import csv
import math

import numpy as np
import pytest

from galerkin_trap.cli import _inward_audit
from galerkin_trap.dynamics import PhysicalParams
from galerkin_trap.envelopes import Envelope, membership
from galerkin_trap.estimates import kcrit_2d_algebraic, lemma1_bound
from galerkin_trap.forcing import ForcingSpec, sample_forcing
from galerkin_trap.lattice import build_truncation
from galerkin_trap.oracle import (
    boundary_state,
    brute_shell_sums,
    brute_total,
    conservation_rates,
    envelope_sequence,
    lemma1_trials,
    random_inside_state,
    random_wave_vector,
    verify_inward,
    write_trials_csv,
)
from galerkin_trap.state import Spectrum2D, Spectrum3D, random_spectrum_2d, random_spectrum_3d


def test_shell_sums_zero_and_single_pair():
    Z = build_truncation(2, "disk", 4.0)
    assert brute_shell_sums({}, {}, (2, 0), Z) == (0.0, 0.0, 0.0)
    a, b = 0.3, 0.7
    sums = brute_shell_sums({(1, 0): a}, {(1, 0): b}, (2, 0), Z)
    assert sums == (0.0, pytest.approx(2 * a * b, rel=1e-15), 0.0)


def test_shell_sum_additivity():
    rng = np.random.default_rng(3)
    Z = build_truncation(2, "disk", 6.0)
    for _ in range(5):
        a = envelope_sequence(Z, 1.0, 2.0, rng)
        b = envelope_sequence(Z, 1.0, 2.0, rng)
        k = random_wave_vector(2, 1, 8, rng)
        s = brute_shell_sums(a, b, k, Z)
        assert math.fsum(s) == pytest.approx(brute_total(a, b, k, Z), rel=1e-12)
    with pytest.raises(ValueError):
        brute_shell_sums(np.ones(3), np.ones(3), (1, 0), Z)


def test_disk12_domination_20_vectors():
    rng = np.random.default_rng(4)
    Z = build_truncation(2, "disk", 12.0)
    for _ in range(20):
        a = envelope_sequence(Z, 1.0, 2.0, rng)
        b = envelope_sequence(Z, 1.0, 2.0, rng)
        k = random_wave_vector(2, 2, 24, rng)
        assert math.fsum(brute_shell_sums(a, b, k, Z)) <= lemma1_bound(1.0, 2.0, 2, k)


@pytest.mark.parametrize("d,r", [(2, 1.5), (2, 3.0), (3, 3.0)])
def test_lemma1_trials_small(d, r, tmp_path):
    rows = lemma1_trials(d, r, 30, seed=1)
    assert len(rows) == 30 and all(row["pass"] for row in rows)
    assert all(2 <= math.sqrt(sum(c * c for c in row["k"])) <= 32 for row in rows)
    path = tmp_path / "trials.csv"
    write_trials_csv(path, rows)
    with open(path, newline="") as fh:
        got = list(csv.DictReader(fh))
    assert len(got) == 30 and got[0]["pass"] == "pass"
    assert list(got[0]) == ["trial", "seed", "d", "r", "k", "total", "bound", "pass"]


def test_lemma1_trials_deterministic():
    assert lemma1_trials(2, 2.0, 5, seed=9) == lemma1_trials(2, 2.0, 5, seed=9)


def test_conservation_rates_trivial():
    Z = build_truncation(2, "disk", 4.0)
    c = conservation_rates(Spectrum2D.zeros(Z))
    assert c == {"d_enstrophy_nl": 0.0, "d_energy_nl": 0.0, "enstrophy_scale": 0.0, "energy_scale": 0.0}
    one = Spectrum2D.from_modes(Z, {(2, 1): 1 - 1j})
    c = conservation_rates(one)
    assert c["d_enstrophy_nl"] == 0 and c["d_energy_nl"] == 0


@pytest.mark.parametrize("d", [2, 3])
def test_conservation_random(d):
    rng = np.random.default_rng(10 + d)
    Z = build_truncation(d, "disk", 8.0 if d == 2 else 4.0)
    for _ in range(10):
        s = random_spectrum_2d(Z, rng) if d == 2 else random_spectrum_3d(Z, rng)
        c = conservation_rates(s)
        assert abs(c["d_energy_nl"]) <= 1e-12 * c["energy_scale"]
        if d == 2:
            assert abs(c["d_enstrophy_nl"]) <= 1e-12 * c["enstrophy_scale"]
        assert c["energy_scale"] > 0


def test_random_inside_and_boundary_state():
    Z = build_truncation(2, "disk", 8.0)
    env = Envelope("algebraic", 0.5, 3.0, K0=2.0)
    rng = np.random.default_rng(5)
    s = random_inside_state(Z, env, rng)
    assert membership(s, Envelope("algebraic", 0.5, 3.0)).inside
    b = boundary_state(s, env, (3, 2), "im", -1, enstrophy_cap=0.05)
    assert b[(3, 2)].imag == pytest.approx(-float(env.value(math.sqrt(13))), rel=1e-15)
    assert b.enstrophy() <= 0.05
    with pytest.raises(ValueError):
        boundary_state(s, env, (-3, -2))
    with pytest.raises(ValueError):
        verify_inward(s, env, PhysicalParams(1.0, 2.0), None, 0.0, (3, 2))


def test_random_inside_state_3d():
    Z = build_truncation(3, "disk", 3.0)
    env = Envelope("algebraic", 1.0, 2.0)
    s = random_inside_state(Z, env, np.random.default_rng(6))
    assert s.transversality_defect().max() <= 1e-14
    assert membership(s, env).inside
    b = boundary_state(s, env, (1, 1, 0), "re")
    assert np.linalg.norm(b[(1, 1, 0)].real) == pytest.approx(float(env.value(math.sqrt(2))), rel=1e-15)


@pytest.mark.parametrize("kbar,part,sign", [((2, 1), "re", 1), ((3, 0), "im", -1), ((0, 4), "re", -1)])
def test_pure_dissipation_margin(kbar, part, sign):
    Z = build_truncation(2, "disk", 5.0)
    p = PhysicalParams(0.7, 2.5)
    env = Envelope("algebraic", 2.0, 3.0)
    s = boundary_state(Spectrum2D.zeros(Z), env, kbar, part, sign)
    res = verify_inward(s, env, p, None, 0.0, kbar, part, sign)
    n = math.hypot(*kbar)
    expect = 4 * math.pi**2 * p.nu * n**p.alpha * float(env.value(n))
    assert res.holds
    assert res.margin == pytest.approx(expect, rel=1e-14)


def test_gevrey_boundary_margin_includes_envelope_motion():
    Z = build_truncation(2, "disk", 5.0)
    env = Envelope("gevrey", 1.0, 3.0, gamma=0.5)
    t, kbar = 0.4, (3, 1)
    s = boundary_state(Spectrum2D.zeros(Z), env, kbar, t=t)
    res = verify_inward(s, env, PhysicalParams(1.0, 2.0), None, t, kbar)
    n = math.sqrt(10)
    e = float(env.value(n, t))
    assert res.margin == pytest.approx((4 * math.pi**2 * 10 - 0.5 * n) * e, rel=1e-13)


def test_saturated_forcing_counterexample():
    Z = build_truncation(2, "disk", 6.0)
    nu, alpha = 1e-4, 2.0
    p = PhysicalParams(nu, alpha)
    f = ForcingSpec("power_law", G=1.0, r=3.0, eps=0.5, alpha_ref=alpha, phase_seed=1)
    env = Envelope("algebraic", 1e-3, 3.0)
    kbar = (3, 1)
    g = sample_forcing(f, kbar, 0.0)
    part = "re" if abs(g.real) >= abs(g.imag) else "im"
    gpart = g.real if part == "re" else g.imag
    sign = 1 if gpart > 0 else -1
    n = math.sqrt(10)
    e = float(env.value(n))
    assert abs(gpart) > 4 * math.pi**2 * nu * n**alpha * e
    s = boundary_state(Spectrum2D.zeros(Z), env, kbar, part, sign)
    res = verify_inward(s, env, p, f, 0.0, kbar, part, sign)
    assert not res.holds
    assert res.margin == pytest.approx(4 * math.pi**2 * nu * n**alpha * e - abs(gpart), rel=1e-12)
    assert verify_inward(s, env, p, f, 0.0, kbar, part, sign).margin == res.margin
    # the configuration is below the critical wavenumber of the same data
    assert kcrit_2d_algebraic(s.enstrophy(), 3.0, alpha, 0.5, nu).K > n


def test_inward_audit_small_and_conservative():
    rows = _inward_audit("thm1", 25, seed=3) + _inward_audit("thm2", 25, seed=3)
    assert len(rows) == 50
    for row in rows:
        assert row["pass"]
        assert row["sufficient_margin"] > 0
        assert row["margin"] >= row["sufficient_margin"]


def test_verify_inward_3d_dissipation():
    Z = build_truncation(3, "disk", 3.0)
    env = Envelope("algebraic", 1.0, 2.0)
    s = Spectrum3D.from_modes(Z, {(1, 1, 0): [1.0, -1.0, 0.0]})
    s = boundary_state(s, env, (1, 1, 0))
    res = verify_inward(s, env, PhysicalParams(1.0, 3.0), None, 0.0, (1, 1, 0))
    n = math.sqrt(2)
    assert res.margin == pytest.approx(4 * math.pi**2 * n**3 * float(env.value(n)), rel=1e-14)
