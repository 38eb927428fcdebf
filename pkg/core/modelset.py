# --- Model Sets: Patches & Counting Functions ------------------------------
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

import config
from .lattice import LatticeBasis, SpecialFormLattice
from .utils import CoverageError, LatticeError, require, validate_interval
from .window import Window, lattice_shift_hits

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PatchPoint:
    n: int
    m: tuple[int, ...]
    p1: float
    p2: tuple[float, ...]
    near_boundary: bool = False


@dataclass(frozen=True, eq=False)
class Patch:
    """
    Finite slab of a model set sorted by p1 (ties by (n, m)).

    Every model-set point with p1 in the half-open coverage interval is
    present; outside of it the patch may be incomplete.
    """

    n: np.ndarray
    m: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    near_boundary: np.ndarray
    coverage: tuple[float, float]
    n_range: tuple[int, int] | None = None
    lattice: object = field(default=None, repr=False)
    window: Window | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.p1.shape[0])

    @property
    def points(self) -> list[PatchPoint]:
        return [
            PatchPoint(
                int(self.n[i]),
                tuple(int(v) for v in self.m[i]),
                float(self.p1[i]),
                tuple(float(v) for v in self.p2[i]),
                bool(self.near_boundary[i]),
            )
            for i in range(len(self))
        ]

    @property
    def min_gap(self) -> float:
        """Smallest distance between two points; inf for fewer than two."""
        if len(self) < 2:
            return math.inf
        if self.p1.ndim == 1:
            return float(np.min(np.diff(self.p1)))
        dist, _ = cKDTree(self.p1).query(self.p1, k=2)
        return float(np.min(dist[:, 1]))

    @property
    def flagged(self) -> int:
        return int(np.sum(self.near_boundary))

    def counts(self) -> tuple[int, int]:
        """(inclusive, exclusive) point counts; exclusive leaves out near-boundary points."""
        return len(self), len(self) - self.flagged

    @classmethod
    def from_points(cls, p1, coverage: tuple[float, float] | None = None) -> "Patch":
        """Patch of arbitrary real points; coverage defaults to [first, last)."""
        p1 = np.sort(np.asarray(p1, dtype=float).reshape(-1))
        k = p1.shape[0]
        if coverage is None:
            coverage = (float(p1[0]), float(p1[-1])) if k else (0.0, 0.0)
        return cls(
            n=np.arange(k, dtype=np.int64),
            m=np.zeros((k, 0), dtype=np.int64),
            p1=p1,
            p2=np.zeros((k, 0)),
            near_boundary=np.zeros(k, dtype=bool),
            coverage=(float(coverage[0]), float(coverage[1])),
        )


def arithmetic_progression(spacing: float, offset: float, index_range) -> Patch:
    """Points offset + spacing * k for k in the half-open index_range."""
    require(validate_interval(index_range, "index_range"))
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    k0, k1 = index_range
    idx = np.arange(k0, k1, dtype=np.int64)
    pts = offset + spacing * idx.astype(float)
    patch = Patch.from_points(pts, (offset + spacing * k0, offset + spacing * k1))
    return Patch(idx, patch.m, patch.p1, patch.p2, patch.near_boundary, patch.coverage, (k0, k1))


def physical_slack(lat: SpecialFormLattice, w: Window) -> float:
    """C = sup over y in the bounding box of |beta . y|, so |p1 - n| <= C."""
    lo, hi = w.bounds()
    beta = np.abs(np.array(lat.beta))
    return float(beta @ np.maximum(np.abs(lo), np.abs(hi)))


def _sorted_patch(n, m, p1, p2, near, coverage, n_range, lat, w) -> Patch:
    if p1.ndim == 1:
        keys = tuple(m[:, ::-1].T) + (n, p1)
    else:
        keys = tuple(m[:, ::-1].T) + (n,) + tuple(p1[:, ::-1].T)
    order = np.lexsort(keys) if len(n) else np.zeros(0, dtype=np.int64)
    patch = Patch(n[order], m[order], p1[order], p2[order], near[order], coverage, n_range, lat, w)
    if len(patch) > 1 and patch.min_gap <= 0:
        logger.warning("patch has coincident physical coordinates (min gap %.3g)", patch.min_gap)
    return patch


# --- Patch Generation ------------------------------------------------------
def generate_patch(lat: SpecialFormLattice, w: Window, n_range) -> Patch:
    """
    Model-set points p1 = n + beta.(n alpha + m) for n in n_range with
    n alpha + m in the window; coverage is n_range shrunk by the slack C.
    """
    require(validate_interval(n_range, "n_range"))
    n0, n1 = (int(v) for v in n_range)
    d = lat.d
    alpha = np.array(lat.alpha)
    beta = np.array(lat.beta)
    ns = np.arange(n0, n1, dtype=np.int64)
    base = ns[:, None].astype(float) * alpha[None, :]
    idx, shifts = lattice_shift_hits(w, base)
    n = ns[idx]
    p2 = base[idx] + shifts
    p1 = n.astype(float) + p2 @ beta
    near = w.margin(p2) < config.BOUNDARY_EPS if len(idx) else np.zeros(0, dtype=bool)
    slack = physical_slack(lat, w)
    lo, hi = n0 + slack, n1 - slack
    coverage = (lo, max(lo, hi))
    logger.debug("generate_patch: n in [%d, %d), %d points, slack %.6g", n0, n1, len(idx), slack)
    return _sorted_patch(n, shifts.reshape(-1, d), p1, p2.reshape(-1, d), near, coverage, (n0, n1), lat, w)


def generate_patch_general(basis: LatticeBasis, w: Window, p1_box) -> Patch:
    """
    Model-set points of a general lattice with p1 in the half-open box
    p1_box = (lo, hi). Coefficients (c_1..c_{m+n}) are stored as m = c[:-1],
    n = c[-1], matching the special-form generator order.
    """
    lo_p = np.atleast_1d(np.asarray(p1_box[0], dtype=float))
    hi_p = np.atleast_1d(np.asarray(p1_box[1], dtype=float))
    if lo_p.shape != (basis.m,) or hi_p.shape != (basis.m,):
        raise LatticeError(f"p1_box needs {basis.m} coordinates per bound")
    mat = basis.matrix
    if np.linalg.cond(mat) > config.MAX_CONDITION:
        raise LatticeError("basis too degenerate to enumerate")
    size = basis.m + basis.n
    empty = Patch(
        np.zeros(0, dtype=np.int64), np.zeros((0, size - 1), dtype=np.int64),
        np.zeros(0) if basis.m == 1 else np.zeros((0, basis.m)), np.zeros((0, basis.n)),
        np.zeros(0, dtype=bool), (float(lo_p[0]), float(max(lo_p[0], hi_p[0]))), None, basis, w,
    )
    if w.is_empty() or np.any(hi_p <= lo_p):
        return empty
    lo_w, hi_w = w.bounds()
    lo = np.concatenate([lo_p, lo_w])
    hi = np.concatenate([hi_p, hi_w])
    inv = np.linalg.inv(mat)
    center = 0.5 * (lo + hi) @ inv
    radius = 0.5 * (hi - lo) @ np.abs(inv)
    c_lo = np.floor(center - radius - config.ABS_TOL).astype(np.int64)
    c_hi = np.ceil(center + radius + config.ABS_TOL).astype(np.int64)
    count = math.prod(int(h - l + 1) for l, h in zip(c_lo, c_hi))
    if count > config.MAX_ENUMERATION:
        raise LatticeError(f"enumeration too large: {count} coefficient vectors")
    axes = [np.arange(l, h + 1) for l, h in zip(c_lo, c_hi)]
    coeffs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, size)
    pts = coeffs @ mat
    p1 = pts[:, : basis.m]
    keep = np.all((p1 >= lo_p) & (p1 < hi_p), axis=1)
    coeffs, pts = coeffs[keep], pts[keep]
    inside = w.indicator(pts[:, basis.m:])
    coeffs, pts = coeffs[inside], pts[inside]
    p2 = pts[:, basis.m:]
    near = w.margin(p2) < config.BOUNDARY_EPS if len(coeffs) else np.zeros(0, dtype=bool)
    p1 = pts[:, 0] if basis.m == 1 else pts[:, : basis.m]
    logger.debug("generate_patch_general: %d candidates, %d points", count, len(coeffs))
    return _sorted_patch(
        coeffs[:, -1], coeffs[:, :-1], p1, p2, near, empty.coverage, None, basis, w
    )


# --- Counting --------------------------------------------------------------
def _check_coverage(patch: Patch, lo: float, hi: float) -> None:
    cov_lo, cov_hi = patch.coverage
    if lo < cov_lo or hi > cov_hi:
        raise CoverageError(
            f"coverage exceeded: [{lo:.17g}, {hi:.17g}) not within [{cov_lo:.17g}, {cov_hi:.17g})"
        )


def nu_many(patch: Patch, xs, include_flagged: bool = True) -> np.ndarray:
    """Vectorized counting function."""
    if patch.p1.ndim != 1:
        raise ValueError("counting function needs physical dimension 1")
    xs = np.asarray(xs, dtype=float).reshape(-1)
    nonzero = xs[xs != 0]
    if nonzero.size:
        _check_coverage(patch, min(0.0, float(nonzero.min())), max(0.0, float(nonzero.max())))
    p1 = patch.p1 if include_flagged else patch.p1[~patch.near_boundary]
    zero = np.searchsorted(p1, 0.0, side="left")
    return (np.searchsorted(p1, xs, side="left") - zero).astype(np.int64)


def nu(patch: Patch, x: float, include_flagged: bool = True) -> int:
    """
    #(points in [0, x)) for x >= 0, minus #(points in [x, 0)) for x < 0.
    """
    return int(nu_many(patch, [x], include_flagged)[0])


def counting_formula_gap(lat: SpecialFormLattice, w: Window, N_max: int,
                         include_flagged: bool = True) -> np.ndarray:
    """g(N) = nu(N) - sum_{n<N} chi_W(n alpha) for N = 1..N_max."""
    if N_max < 1:
        raise ValueError("N_max must be positive")
    slack = math.ceil(physical_slack(lat, w))
    patch = generate_patch(lat, w, (-slack - 1, N_max + slack + 1))
    Ns = np.arange(1, N_max + 1)
    counts = nu_many(patch, Ns.astype(float), include_flagged)
    alpha = np.array(lat.alpha)
    base = np.arange(N_max)[:, None].astype(float) * alpha[None, :]
    idx, _ = lattice_shift_hits(w, base)
    chi_sum = np.cumsum(np.bincount(idx, minlength=N_max))
    return (counts - chi_sum).astype(float)
