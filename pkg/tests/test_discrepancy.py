from fractions import Fraction

import numpy as np
import pytest

import config
from core.discrepancy import (
    Evidence,
    brs_classify,
    classify_on_grid,
    default_grid,
    discrepancy_profile,
    pair_gap_profile,
    pair_gap_slope,
    shifted_gap_identity_residual,
    torus_orbit,
    two_sided_scan,
    uniformity_scan,
)
from core.window import Box, chi, empty_window

UNIT = Box.from_bounds([0.0], [1.0])


# --- Torus Orbit -----------------------------------------------------------
def test_torus_orbit_matches_direct_reduction(alpha):
    orbit = torus_orbit([alpha], [0.1], 0, 200)[:, 0]
    direct = (0.1 + np.arange(200) * alpha) % 1.0
    assert np.allclose(orbit, direct, atol=1e-12)
    assert np.all((orbit >= 0) & (orbit < 1))


def test_torus_orbit_stays_accurate_for_large_k(alpha):
    start = 10**9
    orbit = torus_orbit([alpha], [0.0], start, 5)[:, 0]
    exact_alpha = Fraction(alpha)
    for i, y in enumerate(orbit):
        exact = (start + i) * exact_alpha
        frac = float(exact - (exact.numerator // exact.denominator))
        diff = abs(y - frac)
        assert min(diff, 1 - diff) < 1e-12


def test_default_grid():
    grid = default_grid(1)
    assert grid.shape == (17, 1)
    assert np.allclose(grid[:, 0], (np.arange(17) + 0.5) / 17)
    assert default_grid(2).shape == (289, 2)


# --- Profiles --------------------------------------------------------------
def test_unit_window_has_zero_discrepancy(alpha):
    profile = discrepancy_profile(UNIT, [alpha], [0.3], 1000)
    assert np.all(profile.values == 0)
    assert two_sided_scan(UNIT, [alpha], [0.3], 500, (0, 20)) == 0.0


def test_first_value_of_kesten_profile(alpha, kesten_window):
    profile = discrepancy_profile(kesten_window, [alpha], [0.0], 10)
    assert profile.values[0] == pytest.approx(1.0 - alpha)


def test_profile_matches_direct_sum(alpha, half_window):
    profile = discrepancy_profile(half_window, [alpha], [0.2], 60)
    running = 0
    for N in range(1, 61):
        running += chi(half_window, [0.2 + (N - 1) * alpha])
        assert profile.counts[N - 1] == running
        assert profile.values[N - 1] == pytest.approx(running - 0.5 * N)


def test_two_sided_scan_from_zero_is_one_sided(alpha, half_window):
    profile = discrepancy_profile(half_window, [alpha], [0.2], 800)
    one_sided = two_sided_scan(half_window, [alpha], [0.2], 800, (0, 1))
    assert one_sided == pytest.approx(profile.running_max[-1])
    assert two_sided_scan(half_window, [alpha], [0.2], 800, (0, 50)) >= one_sided


def test_two_sided_scan_stabilizes_for_kesten(alpha, kesten_window):
    short = two_sided_scan(kesten_window, [alpha], [0.1], 1000, (0, 100))
    long = two_sided_scan(kesten_window, [alpha], [0.1], 10_000, (0, 100))
    assert long >= short
    assert long - short <= config.BRS_TOL


@pytest.mark.parametrize("N_max", [1, 7, 8])
def test_two_sided_scan_matches_direct_sums(alpha, half_window, N_max):
    values = [chi(half_window, [(0.2 + k * alpha) % 1.0]) - 0.5 for k in range(5 + N_max)]
    expected = max(
        abs(sum(values[j:j + n])) for j in range(5) for n in range(1, N_max + 1)
    )
    assert two_sided_scan(half_window, [alpha], [0.2], N_max, (0, 5)) == pytest.approx(expected, abs=1e-9)


# --- Classification --------------------------------------------------------
def test_brs_dichotomy_on_default_grid(alpha, kesten_window, half_window):
    bounded = classify_on_grid(kesten_window, [alpha], 100_000, 1000)
    growth = classify_on_grid(half_window, [alpha], 100_000, 1000)
    assert bounded.evidence == Evidence.BOUNDED
    assert growth.evidence == Evidence.GROWTH
    assert len(bounded.points) == 17


def test_unit_window_is_bounded(alpha):
    profile = discrepancy_profile(UNIT, [alpha], [0.0], 2000)
    assert brs_classify(profile, 100).evidence == Evidence.BOUNDED


def test_split_must_be_inside_profile(alpha):
    profile = discrepancy_profile(UNIT, [alpha], [0.0], 100)
    with pytest.raises(ValueError, match="split"):
        brs_classify(profile, 100)
    with pytest.raises(ValueError, match="split"):
        brs_classify(profile, 0)


# --- Two-Window Gap --------------------------------------------------------
def test_pair_gap_of_identical_windows(alpha, half_window):
    profile = pair_gap_profile(half_window, half_window, [alpha], [0.4], 1000)
    assert np.all(profile.values == 0)


def test_pair_gap_of_equal_measure_brs_pair(alpha, kesten_window, kesten_partner):
    profile = pair_gap_profile(kesten_window, kesten_partner, [alpha], [0.1], 100_000)
    assert profile.running_max[-1] == profile.running_max[999]
    assert profile.running_max[-1] <= 1


def test_pair_gap_slope_for_unequal_measures(alpha, kesten_window):
    other = Box.from_bounds([0.0], [0.3])
    profile = pair_gap_profile(kesten_window, other, [alpha], [0.1], 10_000)
    expected = alpha - 0.3
    assert abs(pair_gap_slope(profile) - expected) <= 0.05 * expected


@pytest.mark.parametrize("j", [0, 1, 7, 100])
def test_shifted_gap_identity(alpha, j):
    w = Box.from_bounds([0.0], [0.5])
    w2 = Box.from_bounds([0.25], [0.75])
    assert shifted_gap_identity_residual(w, w2, [alpha], [0.1], 300, j) == 0


# --- Uniformity ------------------------------------------------------------
def test_uniformity_of_full_torus(alpha):
    report = uniformity_scan(UNIT, [[alpha]], 32, 8, seed=0)
    assert np.all(report.ratios == 1.0)
    assert report.c_estimate == 1.0
    assert report.k0_estimate == 0


def test_uniformity_of_null_window(alpha):
    report = uniformity_scan(empty_window(1), [[alpha]], 32, 8, seed=0)
    assert report.c_estimate == 0.0
    assert report.k0_estimate is None


def test_uniformity_approaches_measure(alpha, kesten_window):
    report = uniformity_scan(kesten_window, [[alpha]], 128, 32, seed=0)
    tail = report.ratios[report.ks >= 64]
    assert np.all(np.abs(tail - alpha) <= 0.1 * alpha)
    assert report.c_estimate > 0


def test_uniformity_checks_generator_shape(kesten_window):
    with pytest.raises(ValueError, match="generators"):
        uniformity_scan(kesten_window, [[0.1, 0.2]], 16, 4)
