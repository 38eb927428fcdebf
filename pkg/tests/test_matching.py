from itertools import combinations

import numpy as np
import pytest

from core.matching import (
    bounded_distance_match,
    build_instance,
    counting_diff,
    hall_check,
    max_matching,
    minimal_bde_constant,
    orbit_enumerate,
    product_reduction_check,
    translation_spread,
)
from core.modelset import arithmetic_progression, generate_patch
from core.utils import OrbitError
from core.window import Box


def _neighbors(adj, S):
    return {v for u in S for v in adj[u]}


def _max_deficiency(adj):
    """max over S of |S| - |N(S)|, and every S attaining it."""
    best, attaining = 0, [()]
    for size in range(1, len(adj) + 1):
        for S in combinations(range(len(adj)), size):
            d = size - len(_neighbors(adj, S))
            if d > best:
                best, attaining = d, [S]
            elif d == best:
                attaining.append(S)
    return best, attaining


def _random_instance(rng):
    left = rng.integers(0, 10, size=int(rng.integers(0, 9)))
    right = rng.integers(0, 10, size=int(rng.integers(0, 9)))
    F = sorted(set(int(f) for f in rng.integers(-2, 3, size=int(rng.integers(1, 4)))))
    return build_instance(left, right, F)


# --- Hall Witnesses --------------------------------------------------------
def test_pigeonhole_witness():
    inst = build_instance([0, 2], [1], [1, -1])
    result = max_matching(inst)
    assert result.deficiency == 1
    assert result.witness == (0, 1)
    assert inst.left[list(result.witness), 0].tolist() == [0.0, 2.0]
    verdict = hall_check(inst, "left")
    assert not verdict.holds
    assert verdict.neighbors == (0,)
    assert hall_check(inst, "right").holds


def test_isolated_left_point_joins_witness():
    inst = build_instance([0, 2], [1], [1])
    result = max_matching(inst)
    assert result.deficiency == 1
    assert result.witness == (0, 1)
    assert result.pairs == ((0, 0, 1),)


def test_single_edge():
    result = max_matching(build_instance([0], [1], [1]))
    assert result.pairs == ((0, 0, 1),)
    assert result.deficiency == 0


def test_empty_translation_set():
    inst = build_instance([0, 1], [1], [])
    assert inst.edge_count() == 0
    result = max_matching(inst)
    assert result.deficiency == 2
    assert result.witness == (0, 1)


def test_hall_side_must_be_known():
    with pytest.raises(ValueError, match="side"):
        hall_check(build_instance([0], [1], [1]), "top")


def test_matching_agrees_with_subset_oracle():
    rng = np.random.default_rng(11)
    for _ in range(300):
        inst = _random_instance(rng)
        adj = inst.adjacency()
        deficiency, attaining = _max_deficiency(adj)
        result = max_matching(inst)
        assert result.deficiency == deficiency

        used_left = [u for u, _, _ in result.pairs]
        used_right = [v for _, v, _ in result.pairs]
        assert len(set(used_left)) == len(used_left)
        assert len(set(used_right)) == len(used_right)
        for u, v, f in result.pairs:
            assert inst.right[v, 0] == inst.left[u, 0] + f

        verdict = hall_check(inst, "left")
        assert verdict.holds == (deficiency == 0)
        if deficiency:
            S = verdict.witness
            assert len(S) - len(_neighbors(adj, S)) == deficiency
            assert all(set(T) <= set(S) for T in attaining)


def test_right_side_agrees_with_subset_oracle():
    rng = np.random.default_rng(12)
    for _ in range(200):
        inst = _random_instance(rng)
        radj = [[] for _ in range(inst.right.shape[0])]
        for u, row in enumerate(inst.adjacency()):
            for v in row:
                radj[v].append(u)
        deficiency, _ = _max_deficiency(radj)
        verdict = hall_check(inst, "right")
        assert verdict.holds == (deficiency == 0)
        assert verdict.deficiency == deficiency


def test_instance_edges_match_pairwise_scan():
    rng = np.random.default_rng(21)
    for _ in range(50):
        left = rng.uniform(0, 3, size=(int(rng.integers(0, 30)), 2))
        right = rng.uniform(0, 3, size=(int(rng.integers(1, 30)), 2))
        F = [tuple(v) for v in rng.uniform(-1, 1, size=(int(rng.integers(1, 4)), 2))]
        tol = float(rng.uniform(0.05, 0.4))
        inst = build_instance(left, right, F, tolerance=tol)
        vectors = np.array(F)
        expected = [
            sorted((v, f) for v in range(len(right)) for f in range(len(F))
                   if np.linalg.norm(right[v] - (left[u] + vectors[f])) <= tol)
            for u in range(len(left))
        ]
        assert [sorted(row) for row in inst.edges] == expected


# --- Bounded Distance ------------------------------------------------------
@pytest.fixture
def fibonacci(golden_lattice, kesten_window):
    return lambda n_max: generate_patch(golden_lattice, kesten_window, (-50, n_max))


def test_patch_matches_itself(fibonacci):
    patch = fibonacci(1000)
    result = bounded_distance_match(patch, patch, 0.5 * patch.min_gap)
    assert result.deficiency == 0
    assert result.max_displacement == 0.0


def test_bde_constant_stabilizes_against_progression(fibonacci, alpha):
    constants = []
    for n_max in (1000, 10_000):
        pa = fibonacci(n_max)
        pb = arithmetic_progression(1.0 / alpha, 0.0, (-40, int(n_max * alpha) + 1))
        K = minimal_bde_constant(pa, pb, 10.0)
        assert K is not None
        constants.append(K)
    assert abs(constants[1] - constants[0]) < 0.02


def test_bde_constant_grows_for_non_brs(golden_lattice, half_window):
    constants = []
    for n_max in (100, 10_000):
        pa = generate_patch(golden_lattice, half_window, (-50, n_max))
        pb = arithmetic_progression(2.0, 0.0, (-25, n_max // 2 + 1))
        K = minimal_bde_constant(pa, pb, 20.0)
        assert K is not None
        constants.append(K)
    assert constants[1] > constants[0] + 1e-3


def test_bde_rejects_bad_constants(fibonacci):
    patch = fibonacci(100)
    with pytest.raises(ValueError, match="K must be positive"):
        bounded_distance_match(patch, patch, 0.0)
    with pytest.raises(ValueError, match="boundary_slack"):
        bounded_distance_match(patch, patch, 1.0, boundary_slack=-1.0)


def test_counting_diff_of_identical_patches(fibonacci):
    patch = fibonacci(1000)
    diff, _ = counting_diff(patch, patch, np.linspace(1.0, 500.0, 50))
    assert diff == 0


def test_counting_diff_bounded_for_equal_densities(fibonacci, alpha):
    pa = fibonacci(6000)
    pb = arithmetic_progression(1.0 / alpha, 0.0, (-40, int(6000 * alpha) + 1))
    for x_max in (500, 5000):
        diff, _ = counting_diff(pa, pb, np.arange(1.0, x_max + 1.0))
        assert diff <= 3


def test_counting_diff_grows_with_density_gap(fibonacci, alpha):
    pa = fibonacci(6000)
    pb = arithmetic_progression(1.0, 0.0, (-10, 6000))
    for x_max in (500, 5000):
        diff, _ = counting_diff(pa, pb, np.arange(1.0, x_max + 1.0))
        assert abs(diff - x_max * (1.0 - alpha)) <= 4


# --- Orbit Pairings --------------------------------------------------------
def test_identical_windows_pair_without_translation(alpha, kesten_window):
    enum = orbit_enumerate(kesten_window, kesten_window, [alpha], [0.1], (0, 1000))
    assert translation_spread(enum).E == (0,)


def test_golden_pair_translation_set(alpha, kesten_window, kesten_partner):
    short = orbit_enumerate(kesten_window, kesten_partner, [alpha], [0.1], (0, 1000))
    long = orbit_enumerate(kesten_window, kesten_partner, [alpha], [0.1], (0, 10_000))
    spread_short = translation_spread(short)
    spread_long = translation_spread(long)
    assert spread_short.E == spread_long.E == (0, 1)
    assert np.all(long.displacement_residuals() < 1e-9)

    creep = np.max(np.abs(long.s_deviation())) - np.max(np.abs(short.s_deviation()))
    assert creep <= 1e-2

    bound = (2 * spread_long.K1_obs + spread_long.K2_obs) / long.measure
    assert np.all(np.abs(spread_long.e) <= bound + 1e-9)
    assert np.all(long.sync_gaps() < long.q_fiber)


def test_orbit_range_through_zero(alpha, kesten_window, kesten_partner):
    enum = orbit_enumerate(kesten_window, kesten_partner, [alpha], [0.1], (-500, 500))
    assert enum.s[enum.index_of(0)] == 0
    assert enum.t[enum.index_of(0)] == 0
    assert np.all(enum.displacement_residuals() < 1e-9)


def test_orbit_needs_equal_measure(alpha, kesten_window, half_window):
    with pytest.raises(OrbitError, match="equal measure"):
        orbit_enumerate(kesten_window, half_window, [alpha], [0.1], (0, 100))


def test_orbit_range_must_contain_zero(alpha, kesten_window):
    with pytest.raises(OrbitError, match="contain 0"):
        orbit_enumerate(kesten_window, kesten_window, [alpha], [0.1], (5, 100))


# --- Product Reduction -----------------------------------------------------
def test_product_reduction_on_matchable_data():
    report = product_reduction_check([0, 1, 2], [0, 1, 2], [0], 1.0, 1, [1, 10, 100])
    assert report.limit_holds
    assert report.hall.holds
    assert report.consistent
    assert all(not v for v in report.product_failures.values())


def test_product_reduction_on_pigeonhole():
    report = product_reduction_check([0, 2], [1], [1, -1], 1.0, 1, [1, 100])
    assert not report.limit_holds
    assert not report.hall.holds
    assert report.consistent
    assert report.product_failures[1.0] == ()
    assert report.product_failures[100.0] == ((0, 1),)


def test_product_reduction_limits_subset_scan():
    with pytest.raises(ValueError, match="12"):
        product_reduction_check(list(range(13)), [0], [0], 1.0, 1, [1])
