import math
from itertools import product

import numpy as np
import pytest

from core.lattice import (
    DiagonalSplitMap,
    LatticeBasis,
    SpecialFormLattice,
    certify_special_form,
    check_general_position,
    default_q_max,
    find_integer_relations,
    kernel_split,
    lattice_from_config,
    lift_window_points,
    special_form_basis,
    to_special_form,
    transport_window,
)
from core.utils import GeneralPositionError, LatticeError, WindowError
from core.window import Box, Window, measure

SILVER = math.sqrt(2.0) - 1.0


# --- General Position ------------------------------------------------------
def test_rational_alpha_has_relation():
    basis = SpecialFormLattice((0.5,), (math.sqrt(3.0),)).basis()
    report = check_general_position(basis, 10)
    assert not report.certified
    assert "alpha" in report.conditions


def test_silver_special_form_is_certified():
    lat = SpecialFormLattice((SILVER,), (math.sqrt(3.0),))
    report = check_general_position(lat, 50)
    assert report.certified
    assert report.bound_checked == 50


def test_bound_must_be_positive(golden_lattice):
    with pytest.raises(LatticeError, match="bound must be positive"):
        check_general_position(golden_lattice.basis(), 0)


def test_certify_rejects_rational_beta(alpha):
    # beta = 0 is an integer relation on the physical side
    with pytest.raises(GeneralPositionError, match="not in general position"):
        certify_special_form([alpha], [0.0])


def test_certify_records_bound(golden_lattice):
    assert golden_lattice.independence_bound == default_q_max(2)
    assert default_q_max(2) == 49


def _has_relation(values, bound, tol=1e-9):
    """Brute force: integer q != 0 and p with |q| <= bound, |p| <= bound, |q . values + p| < tol."""
    for q in product(range(-bound, bound + 1), repeat=len(values)):
        if not any(q):
            continue
        s = sum(qi * v for qi, v in zip(q, values))
        p = -round(s)
        if abs(p) <= bound and abs(s + p) < tol:
            return True
    return False


@pytest.mark.parametrize("alpha, beta", [
    ((0.5,), (math.sqrt(3.0),)),
    ((1.0 / 3.0,), (math.sqrt(3.0),)),
    ((2.0 / 7.0,), (math.sqrt(3.0),)),
    ((3.0 / 11.0,), (math.sqrt(3.0),)),
    ((0.25 + 1e-6,), (math.sqrt(3.0),)),
    ((SILVER,), (math.sqrt(3.0),)),
    ((SILVER,), (0.0,)),
    ((0.5,), (1.5,)),
    ((0.5, SILVER), (math.sqrt(3.0), math.sqrt(5.0))),
    ((SILVER, 2.0 * SILVER), (math.sqrt(3.0), math.sqrt(5.0))),
    ((SILVER, 1.0 - SILVER), (math.sqrt(3.0), math.sqrt(5.0))),
    ((SILVER, (math.sqrt(5.0) - 1.0) / 2.0), (math.sqrt(3.0), math.sqrt(5.0))),
])
def test_general_position_agrees_with_exhaustive_scan(alpha, beta):
    bound = 6
    report = check_general_position(SpecialFormLattice(alpha, beta).basis(), bound)
    assert report.alpha[0] == pytest.approx(alpha)
    last = 1.0 + float(np.dot(beta, alpha))
    expected = _has_relation(alpha, bound) or _has_relation([b / last for b in beta], bound)
    assert report.certified == (not expected)


def test_integer_relations_are_primitive():
    rels = find_integer_relations([[0.5]], 4)
    assert rels == [(2, -1)]


def test_rank_deficient_basis():
    with pytest.raises(LatticeError, match="basis not full rank"):
        LatticeBasis(1, 1, [[1.0, 2.0], [2.0, 4.0]])


# --- Kernel Split ----------------------------------------------------------
def test_kernel_split_of_special_form_is_trivial(golden_lattice):
    split = kernel_split(golden_lattice.basis(), search_radius=20)
    assert split.N is None
    assert split.L.rank == 2
    assert abs(split.unimodular_det) == 1


def test_kernel_split_finds_physical_kernel():
    basis = LatticeBasis(1, 1, [[1.0, 0.0], [math.sqrt(2.0), math.sqrt(3.0)]])
    split = kernel_split(basis, search_radius=10)
    assert split.N is not None and split.N.rank == 1
    assert [abs(c) for c in split.N.coeffs[0]] == [1, 0]
    assert np.allclose(split.N.vectors[:, 1], 0.0)
    assert split.L.rank == 1
    assert abs(split.unimodular_det) == 1


def test_kernel_split_saturates_kernel():
    basis = LatticeBasis(1, 2, [[1.0, 1.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    split = kernel_split(basis, search_radius=10)
    assert split.N.rank == 1
    assert tuple(abs(c) for c in split.N.coeffs[0]) == (2, 1, 0)
    assert split.L.rank == 2
    assert abs(split.unimodular_det) == 1


# --- Special Form ----------------------------------------------------------
def test_special_form_identity_case():
    lat = SpecialFormLattice((SILVER,), (math.sqrt(3.0),))
    T, out = to_special_form(special_form_basis(lat))
    assert T.a == pytest.approx(1.0)
    assert np.allclose(T.matrix, np.eye(1))
    assert out.alpha == pytest.approx(lat.alpha)
    assert out.beta == pytest.approx(lat.beta)


def test_special_form_round_trip_on_random_bases():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        d = int(rng.integers(1, 4))
        mat = rng.normal(size=(d + 1, d + 1))
        if np.linalg.cond(mat) > 1e3:
            continue
        basis = LatticeBasis(1, d, mat)
        T, lat = to_special_form(basis)
        images = T.apply(mat)
        gens = special_form_basis(lat).matrix
        for row in images:
            close = [np.allclose(row, g, rtol=1e-9, atol=1e-9) for g in gens]
            assert sum(close) == 1
        checked += 1


def test_special_form_needs_one_physical_dimension():
    basis = LatticeBasis(2, 1, np.eye(3) + 0.1)
    with pytest.raises(LatticeError, match="m = 1"):
        to_special_form(basis)


def test_diagonal_split_map_inverse():
    T = DiagonalSplitMap(2.5, [[1.0, 2.0], [0.5, 3.0]])
    pts = np.random.default_rng(0).normal(size=(10, 3))
    assert np.allclose(T.inverse_apply(T.apply(pts)), pts)


def test_transport_window_scales_measure():
    T = DiagonalSplitMap(2.0, [[3.0]])
    w = transport_window(T, Box.from_bounds([0.0], [0.5]))
    assert measure(w) == pytest.approx(1.5)


# --- Lifted Points ---------------------------------------------------------
def test_lift_window_points_filters_by_window(golden_lattice, kesten_window):
    basis = golden_lattice.basis()
    pts = lift_window_points(basis, kesten_window, [(-30, 30), (0, 40)])
    # one point per n for each n with n alpha mod 1 in the window
    assert len(pts) == sum(1 for n in range(40) if (n * golden_lattice.alpha[0]) % 1.0 < golden_lattice.alpha[0])
    assert all(kesten_window.indicator(np.array([p.p2]))[0] for p in pts)
    p1 = [p.p1[0] for p in pts]
    assert p1 == sorted(p1)


def test_lift_window_points_edge_cases(golden_lattice):
    basis = golden_lattice.basis()
    assert lift_window_points(basis, Box.from_bounds([0.2], [0.2]), [(0, 5), (0, 5)]) == []
    with pytest.raises(WindowError, match="window must be bounded"):
        lift_window_points(basis, _Unbounded(), [(0, 5), (0, 5)])


class _Unbounded(Window):
    dim = 1

    def bounds(self):
        return np.array([0.0]), np.array([math.inf])


def test_lattice_config_rejects_unknown_keys():
    with pytest.raises(LatticeError, match="unknown lattice keys"):
        lattice_from_config({"m": 1, "n": 1, "basis": [[1, 0], [0, 1]], "extra": 1})
