import itertools
import math

import numpy as np
import pytest

from galerkin_trap.lattice import (
    EmptyTruncationError,
    LatticeSumDivergenceError,
    build_truncation,
    convolution_pairs,
    is_canonical,
    lattice_sum,
    lattice_sum_bracket,
    perp,
    shell_of,
    shell_partition,
    tail_sum_bounds,
    wave_norm,
)


def test_unit_disk_members():
    Z = build_truncation(2, "disk", 1.0)
    assert sorted(Z) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


def test_disk_1_5_has_diagonals():
    Z = build_truncation(2, "disk", 1.5)
    assert len(Z) == 8
    assert (1, 1) in Z and (-1, -1) in Z and (1, -1) in Z


def test_3d_disk_count_matches_cube_enumeration():
    brute = sum(
        1 for k in itertools.product(range(-2, 3), repeat=3) if 0 < sum(c * c for c in k) <= 4
    )
    assert brute == 32
    assert len(build_truncation(3, "disk", 2.0)) == brute


def test_square_shape():
    Z = build_truncation(2, "square", 2.0)
    assert len(Z) == 24
    assert (2, 2) in Z


def test_empty_truncation():
    with pytest.raises(EmptyTruncationError):
        build_truncation(2, "disk", 0.5)


@pytest.mark.parametrize("d,K", [(2, 5.0), (3, 3.0)])
def test_symmetry_order_and_zero(d, K):
    Z = build_truncation(d, "disk", K)
    pts = [tuple(p) for p in Z.points]
    assert pts == sorted(pts)
    assert (0,) * d not in Z
    for p in pts:
        assert tuple(-c for c in p) in Z
    # canonical half: one representative per pair, first nonzero positive
    assert all(is_canonical(p) for p in Z.half_points)
    assert 2 * Z.n_half == len(Z)


def test_wave_norm_and_perp():
    assert wave_norm((3, 4)) == 5.0
    assert perp((2, 5)) == (-5, 2)


def test_convolution_pairs_unit_disk():
    Z = build_truncation(2, "disk", 1.0)
    assert convolution_pairs((1, 1), Z) == [((1, 0), (0, 1)), ((0, 1), (1, 0))]
    assert convolution_pairs((3, 0), Z) == []


def test_convolution_pairs_against_double_loop():
    Z = build_truncation(2, "disk", 1.5)
    got = convolution_pairs((2, 1), Z)
    brute = [(a, b) for a in Z for b in Z if a[0] + b[0] == 2 and a[1] + b[1] == 1]
    assert sorted(got) == sorted(brute)
    assert len(set(got)) == len(got)


def test_pairs_central_symmetry():
    Z = build_truncation(2, "disk", 4.0)
    k = (2, -1)
    plus = set(convolution_pairs(k, Z))
    minus = set(convolution_pairs((-2, 1), Z))
    assert {(tuple(-c for c in a), tuple(-c for c in b)) for a, b in plus} == minus


def test_shell_thresholds():
    assert shell_of((4, 0), (1, 0)) == 0
    assert shell_of((4, 0), (4, 4)) == 1
    assert shell_of((2, 0), (5, 0)) == 2
    # |l2| = |k|/2 exactly lands in the mid shell
    assert shell_of((2, 0), (1, 0)) == 1


def test_shell_partition_is_partition():
    Z = build_truncation(2, "disk", 6.0)
    for k in [(1, 0), (3, 2), (5, -4)]:
        pairs = convolution_pairs(k, Z)
        near, mid, far = shell_partition(k, pairs)
        assert sorted(near + mid + far) == sorted(pairs)
        assert not (set(near) & set(mid) or set(mid) & set(far) or set(near) & set(far))


def test_lattice_sum_finite_ball():
    assert lattice_sum(2, 4, ("ball", 1.0)) == 4.0


def test_lattice_sum_bracket_width_2d_p3():
    lo, hi = lattice_sum_bracket(2, 3)
    assert lo <= hi
    assert hi - lo < 1e-3
    # enumeration up to R = 200 is a lower bound
    n = np.arange(-200, 201)
    X, Y = np.meshgrid(n, n)
    sq = (X * X + Y * Y).astype(float)
    sel = (sq > 0) & (sq <= 200 * 200)
    partial = math.fsum((sq[sel] ** -1.5).tolist())
    assert partial <= hi
    assert partial >= lo - 0.05  # tail beyond 200 is about 2 pi / 200


def test_complement_ball_exceeds_partial_enumeration():
    up = lattice_sum(3, 4, ("complement_ball", 2.0))
    n = np.arange(-100, 101)
    X, Y, W = np.meshgrid(n, n, n, indexing="ij")
    sq = (X * X + Y * Y + W * W).astype(float)
    sel = (sq > 4) & (sq <= 100 * 100)
    partial = math.fsum((sq[sel] ** -2.0).tolist())
    assert up > partial


def test_divergence():
    with pytest.raises(LatticeSumDivergenceError):
        lattice_sum(2, 2.0)
    with pytest.raises(LatticeSumDivergenceError):
        lattice_sum(3, 3.0, ("complement_ball", 5.0))


@pytest.mark.parametrize("R", [1.0, 3.5, 10.0])
def test_all_equals_ball_plus_complement(R):
    total_lo, total_hi = lattice_sum_bracket(2, 3.5)
    ball = lattice_sum(2, 3.5, ("ball", R))
    c_lo, c_hi = lattice_sum_bracket(2, 3.5, ("complement_ball", R))
    assert ball + c_lo <= total_hi * (1 + 1e-12)
    assert ball + c_hi >= total_lo * (1 - 1e-12)


def test_monotone_in_p():
    vals = [lattice_sum(2, p) for p in (2.5, 3.0, 4.0, 6.0)]
    assert vals == sorted(vals, reverse=True)


def test_tail_bounds_order():
    lo, hi = tail_sum_bounds(2, 4.0, 20.0)
    assert 0 <= lo <= hi
