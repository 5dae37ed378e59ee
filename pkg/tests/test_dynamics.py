import math

import numpy as np
import pytest

from galerkin_trap import kernels
from galerkin_trap.dynamics import (
    GridTooSmallError,
    PhysicalParams,
    dissipation_rates,
    min_fast_grid,
    nonlinear_2d,
    nonlinear_2d_fast,
    nonlinear_3d,
    nonlinear_3d_unreduced,
    rhs_2d,
    rhs_2d_real_split,
    rhs_3d,
    triad_table,
)
from galerkin_trap.forcing import ForcingSpec, forcing_half
from galerkin_trap.lattice import build_truncation
from galerkin_trap.state import Spectrum2D, Spectrum3D, random_spectrum_2d, random_spectrum_3d


@pytest.fixture
def rng():
    return np.random.default_rng(99)


def brute_n2d(s, prefactor=1.0):
    """Direct double loop over Z x Z of w_l1 w_l2 (k, l2_perp)/|l2|^2."""
    Z = s.Z
    out = {}
    for k in Z:
        acc = 0j
        for l2 in Z:
            l1 = (k[0] - l2[0], k[1] - l2[1])
            if l1 not in Z:
                continue
            coef = (k[0] * -l2[1] + k[1] * l2[0]) / (l2[0] ** 2 + l2[1] ** 2)
            acc += s[l1] * s[l2] * coef
        out[k] = prefactor * acc
    return out


def test_axis_modes_cancel_at_diagonal():
    Z = build_truncation(2, "disk", 1.5)
    s = Spectrum2D.from_modes(Z, {(1, 0): 0.7 - 0.2j, (0, 1): 0.4 + 0.9j})
    assert nonlinear_2d(s)[(1, 1)] == 0
    assert brute_n2d(s)[(1, 1)] == 0


def test_single_pair_gives_zero():
    Z = build_truncation(2, "disk", 3.0)
    s = Spectrum2D.from_modes(Z, {(2, 1): 1.3 + 0.4j})
    assert not np.any(nonlinear_2d(s).coeffs)


def test_two_mode_triad_value():
    Z = build_truncation(2, "disk", 3.0)
    a, b = 0.5 + 0.5j, 0.7 - 0.4j
    s = Spectrum2D.from_modes(Z, {(1, 0): a, (1, 1): b})
    got = nonlinear_2d(s)[(2, 1)]
    # l2=(1,0) gives (2,1).(0,1)/1 = 1, l2=(1,1) gives (2,1).(-1,1)/2 = -1/2
    assert got == pytest.approx(0.5 * a * b, rel=1e-15)
    assert got == pytest.approx(0.275 + 0.075j, rel=1e-15)
    assert brute_n2d(s)[(2, 1)] == pytest.approx(got, rel=1e-15)


def test_imaginary_prefactor_breaks_reality(rng):
    Z = build_truncation(2, "disk", 3.0)
    s = random_spectrum_2d(Z, rng)
    bad = brute_n2d(s, prefactor=-2j * math.pi)
    good = brute_n2d(s)
    k = (2, 1)
    mk = (-2, -1)
    assert good[mk] == pytest.approx(np.conj(good[k]), rel=1e-12)
    assert abs(bad[k]) > 1e-3
    assert bad[mk] == pytest.approx(-np.conj(bad[k]), rel=1e-12)
    assert abs(bad[mk] - np.conj(bad[k])) > 1e-3


def test_direct_matches_brute(rng):
    Z = build_truncation(2, "disk", 3.0)
    s = random_spectrum_2d(Z, rng)
    n = nonlinear_2d(s)
    ref = brute_n2d(s)
    for k in Z:
        assert n[k] == pytest.approx(ref[k], rel=1e-12, abs=1e-12)


def test_triad_table_size_and_order():
    Z = build_truncation(2, "disk", 8.0)
    tab = triad_table(Z)
    assert len(tab) == 10788
    key = np.stack([tab.out, tab.i2, tab.i1], axis=1)
    assert np.all(np.diff(key[:, 0]) >= 0)


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
@pytest.mark.parametrize("d", [2, 3])
def test_backends_agree(rng, d):
    Z = build_truncation(d, "disk", 6.0 if d == 2 else 3.0)
    s = random_spectrum_2d(Z, rng) if d == 2 else random_spectrum_3d(Z, rng)
    f = nonlinear_2d if d == 2 else nonlinear_3d
    prev = kernels.use_backend("compiled")
    try:
        a = f(s).coeffs
        kernels.use_backend("python")
        b = f(s).coeffs
    finally:
        kernels.use_backend(prev)
    assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))


def test_rhs_recomposition_exact(rng):
    Z = build_truncation(2, "disk", 6.0)
    p = PhysicalParams(0.3, 2.5)
    f = ForcingSpec("power_law", G=1.0, r=3.0, eps=0.5, alpha_ref=2.5, phase_seed=3)
    s = random_spectrum_2d(Z, rng)
    t = 0.37
    expect = nonlinear_2d(s).coeffs - dissipation_rates(Z, p) * s.coeffs + forcing_half(f, Z, t)
    assert np.array_equal(rhs_2d(s, p, f, t).coeffs, expect)


def test_linear_mode_tendency():
    Z = build_truncation(2, "disk", 1.0)
    s = Spectrum2D.from_modes(Z, {(1, 0): 1.0 + 0j})
    d = rhs_2d(s, PhysicalParams(1.0, 2.0))
    assert d[(1, 0)] == pytest.approx(-4 * math.pi**2, rel=1e-15)
    assert not np.any(rhs_2d(Spectrum2D.zeros(Z), PhysicalParams(1.0, 2.0)).coeffs)


def test_real_split_matches_complex(rng):
    Z = build_truncation(2, "disk", 5.0)
    p = PhysicalParams(1.0, 2.0)
    f = ForcingSpec("power_law", G=0.5, r=3.0, eps=0.5, alpha_ref=2.0)
    for _ in range(10):
        s = random_spectrum_2d(Z, rng)
        c = rhs_2d(s, p, f, 0.1).coeffs
        d1, d2 = rhs_2d_real_split(Z, s.coeffs.real, s.coeffs.imag, p, f, 0.1)
        scale = np.max(np.abs(c))
        assert np.max(np.abs(d1 - c.real)) <= 1e-12 * scale
        assert np.max(np.abs(d2 - c.imag)) <= 1e-12 * scale


def test_real_split_sign_pattern_on_real_spectrum():
    # real amplitudes: d w2/dt picks up only the forcing, d w1/dt the real bracket
    Z = build_truncation(2, "disk", 3.0)
    rng = np.random.default_rng(5)
    w1 = rng.standard_normal(Z.n_half)
    s = Spectrum2D(Z, w1)
    p = PhysicalParams(1.0, 2.0)
    d1, d2 = rhs_2d_real_split(Z, w1, np.zeros(Z.n_half), p)
    assert np.max(np.abs(d2)) <= 1e-14
    assert np.allclose(d1, rhs_2d(s, p).coeffs.real, rtol=0, atol=1e-12)


def test_fast_path_matches_direct(rng):
    Z = build_truncation(2, "disk", 8.0)
    for _ in range(10):
        s = random_spectrum_2d(Z, rng)
        a = nonlinear_2d(s).coeffs
        b = nonlinear_2d_fast(s).coeffs
        assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(a)
    assert not np.any(nonlinear_2d_fast(Spectrum2D.zeros(Z)).coeffs)


def test_fast_path_grid_guard(rng):
    Z = build_truncation(2, "disk", 4.0)
    assert min_fast_grid(Z) == 13
    s = random_spectrum_2d(Z, rng)
    with pytest.raises(GridTooSmallError):
        nonlinear_2d_fast(s, grid=12)
    a = nonlinear_2d(s).coeffs
    b = nonlinear_2d_fast(s, grid=16).coeffs
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(a)


def test_3d_single_pair_and_zero():
    Z = build_truncation(3, "disk", 2.0)
    s = Spectrum3D.from_modes(Z, {(1, 1, 0): [1.0, -1.0, 0.5j]})
    assert np.max(np.abs(nonlinear_3d(s).coeffs)) <= 1e-15
    assert not np.any(nonlinear_3d(Spectrum3D.zeros(Z)).coeffs)


def test_3d_forms_agree_two_modes():
    Z = build_truncation(3, "disk", 2.0)
    s = Spectrum3D.from_modes(Z, {(1, 0, 0): [0, 1.0, 0.5j], (0, 1, 0): [0.3 - 1j, 0, 2.0]})
    a = nonlinear_3d(s, project=False).coeffs
    b = nonlinear_3d_unreduced(s).coeffs
    assert np.max(np.abs(a)) > 0.1
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_3d_rhs_transversal_and_decay(rng):
    Z = build_truncation(3, "disk", 3.0)
    s = random_spectrum_3d(Z, rng)
    p = PhysicalParams(1.0, 3.0)
    f = ForcingSpec("trig_poly", G=1.0, band=((1, 0, 0), (1, 1, 0)))
    d = rhs_3d(s, p, f, 0.0)
    assert d.transversality_defect().max() <= 1e-12
    one = Spectrum3D.from_modes(Z, {(0, 1, 1): [1.0, 0, 0]})
    t = rhs_3d(one, p).coeffs[Z.half_slot[Z.index_of((0, 1, 1))]]
    assert t[0] == pytest.approx(-4 * math.pi**2 * 2**1.5, rel=1e-14)


def test_3d_invalid_state():
    Z = build_truncation(3, "disk", 1.0)
    s = Spectrum3D.from_modes(Z, {(1, 0, 0): [1.0, 0, 0]})
    with pytest.raises(ValueError):
        nonlinear_3d(s)


def test_physical_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(0.0, 2.0)
    with pytest.raises(ValueError):
        PhysicalParams(1.0, 1.0)
