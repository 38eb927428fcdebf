# --- Lattices: General Position, Kernel Split & Special Form ---------------
import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations

import numpy as np

import config
from .utils import GeneralPositionError, LatticeError, require, validate_positive_int, validate_vector
from .window import Window, WindowError, linear_image

logger = logging.getLogger(__name__)


# --- Domain Types ----------------------------------------------------------
@dataclass(frozen=True)
class LatticeBasis:
    """
    Basis of a lattice in R^m x R^n. Rows of `matrix` are the basis vectors,
    the first m coordinates are physical (p1), the last n internal (p2).
    """

    m: int
    n: int
    vectors: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        require(validate_positive_int(self.m, "m"), LatticeError)
        require(validate_positive_int(self.n, "n"), LatticeError)
        arr = np.asarray(self.vectors, dtype=float)
        size = self.m + self.n
        if arr.shape != (size, size):
            raise LatticeError(f"basis must hold {size} vectors of length {size}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise LatticeError("basis entries must be finite")
        if np.linalg.matrix_rank(arr) < size:
            raise LatticeError("basis not full rank")
        object.__setattr__(self, "vectors", tuple(tuple(float(v) for v in row) for row in arr))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.vectors)

    @property
    def p1(self) -> np.ndarray:
        return self.matrix[:, : self.m]

    @property
    def p2(self) -> np.ndarray:
        return self.matrix[:, self.m:]

    def point(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.matrix


@dataclass(frozen=True)
class SpecialFormLattice:
    """Gamma = {(n + beta.(n alpha + m), n alpha + m) : n in Z, m in Z^d}."""

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    independence_bound: int = 1

    def __post_init__(self):
        require(validate_vector(self.alpha, "alpha"), LatticeError)
        require(validate_vector(self.beta, "beta", len(np.atleast_1d(self.alpha))), LatticeError)
        require(validate_positive_int(self.independence_bound, "independence_bound"), LatticeError)
        object.__setattr__(self, "alpha", tuple(float(v) for v in np.atleast_1d(self.alpha)))
        object.__setattr__(self, "beta", tuple(float(v) for v in np.atleast_1d(self.beta)))

    @property
    def d(self) -> int:
        return len(self.alpha)

    def basis(self) -> LatticeBasis:
        """Generators (beta_j, e_j), then (1 + beta.alpha, alpha); coefficients read (m_1..m_d, n)."""
        a = np.array(self.alpha)
        b = np.array(self.beta)
        rows = [np.concatenate([[b[j]], np.eye(self.d)[j]]) for j in range(self.d)]
        rows.append(np.concatenate([[1.0 + b @ a], a]))
        return LatticeBasis(1, self.d, np.array(rows))


@dataclass(frozen=True)
class DiagonalSplitMap:
    """T(x, y) = (a x, B y)."""

    a: float
    B: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.B, dtype=float))
        if self.a == 0 or not math.isfinite(self.a):
            raise LatticeError("a must be a nonzero real")
        if mat.shape[0] != mat.shape[1] or np.linalg.det(mat) == 0:
            raise LatticeError("B must be an invertible square matrix")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "B", tuple(tuple(float(v) for v in row) for row in mat))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.B)

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.hstack([self.a * pts[:, :1], pts[:, 1:] @ self.matrix.T])

    def inverse_apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inv = np.linalg.inv(self.matrix)
        return np.hstack([pts[:, :1] / self.a, pts[:, 1:] @ inv.T])


@dataclass(frozen=True)
class IndependenceReport:
    bound_checked: int
    violations: tuple[tuple[int, ...], ...] = ()
    conditions: tuple[str, ...] = ()
    alpha: tuple[tuple[float, ...], ...] = ()
    beta: tuple[float, ...] = ()

    @property
    def certified(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Sublattice:
    """Integer coefficient rows (relative to the parent basis) and their vectors."""

    coeffs: tuple[tuple[int, ...], ...]
    vectors: np.ndarray = field(compare=False)

    @property
    def rank(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class KernelSplit:
    L: Sublattice
    N: Sublattice | None
    search_radius: int
    unimodular_det: int


@dataclass(frozen=True)
class LiftedPoint:
    coeffs: tuple[int, ...]
    p1: tuple[float, ...]
    p2: tuple[float, ...]


# --- Integer Relations -----------------------------------------------------
def default_q_max(length: int, budget: int = config.RELATION_BUDGET) -> int:
    """Largest q with (2q + 1)^length <= budget."""
    return max(1, int((budget ** (1.0 / length) - 1.0) / 2.0))


def _integer_grid(f: int, q_max: int) -> np.ndarray:
    size = (2 * q_max + 1) ** f
    if size > config.MAX_ENUMERATION:
        raise LatticeError(f"relation search too large: {size} vectors")
    axes = [np.arange(-q_max, q_max + 1)] * f
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, f)


def _canonical_primitive(vec) -> bool:
    nz = [v for v in vec if v != 0]
    if not nz or nz[0] < 0:
        return False
    return reduce(math.gcd, (abs(v) for v in nz)) == 1


def find_integer_relations(free, q_max: int, tol: float = config.ABS_TOL) -> list[tuple[int, ...]]:
    """
    Integer q (|q_i| <= q_max, q != 0) and p (|p_r| <= q_max) with free @ q + p = 0.

    free is an (r, f) real matrix. The f free coordinates are enumerated,
    p is solved by rounding. Relations come back as (q..., p...), primitive
    and with the first nonzero entry positive.
    """
    require(validate_positive_int(q_max, "q_max"), LatticeError)
    free = np.atleast_2d(np.asarray(free, dtype=float))
    grid = _integer_grid(free.shape[1], q_max)
    grid = grid[np.any(grid != 0, axis=1)]
    s = grid @ free.T
    p = -np.rint(s)
    ok = np.all(np.abs(s + p) < tol, axis=1) & np.all(np.abs(p) <= q_max, axis=1)
    found = []
    for q_vec, p_vec in zip(grid[ok], p[ok].astype(np.int64)):
        rel = tuple(int(v) for v in q_vec) + tuple(int(v) for v in p_vec)
        if _canonical_primitive(rel):
            found.append(rel)
    logger.debug("relation scan: %d vectors, %d relations", grid.shape[0], len(found))
    return found


def _best_internal_subset(p2: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Indices of n rows of p2 whose square block has the largest |det|."""
    n = p2.shape[1]
    best, best_det = None, -1.0
    for subset in combinations(range(p2.shape[0]), n):
        det = abs(np.linalg.det(p2[list(subset)]))
        if det > best_det:
            best, best_det = subset, det
    return best, best_det


def _alpha_and_beta(basis: LatticeBasis):
    p2 = basis.p2
    subset, det = _best_internal_subset(p2)
    if det < config.ABS_TOL:
        raise GeneralPositionError("p₂(Γ) cannot be dense: internal projection is rank deficient")
    rest = [i for i in range(basis.m + basis.n) if i not in subset]
    B = np.linalg.inv(p2[list(subset)].T)
    alphas = p2[rest] @ B.T  # row r: B p2(w_r)
    return subset, rest, B, alphas


def _beta_relations(beta: np.ndarray, alpha: np.ndarray, q_max: int) -> list[tuple[int, ...]]:
    values = np.concatenate([beta, [1.0 + beta @ alpha]])
    last = values[-1]
    if abs(last) < config.ABS_TOL:
        return [tuple([0] * len(beta) + [1])]
    return find_integer_relations((values[:-1] / last)[None, :], q_max)


def check_general_position(basis, q_max: int) -> IndependenceReport:
    """
    Certify general position up to the relation bound q_max.

    The internal coordinates are normalized by the best invertible n-block,
    and p2(Gamma) is dense iff no integer q, p satisfy q.alpha_r + p_r = 0
    for every remaining vector r. For m = 1 the physical projection is
    injective iff beta_1..beta_d, 1 + beta.alpha have no integer relation.
    Violations are reported as (p..., q...) for alpha and (q..., q_last) for beta.
    """
    if isinstance(basis, SpecialFormLattice):
        basis = basis.basis()
    if isinstance(q_max, bool) or not isinstance(q_max, (int, np.integer)) or q_max < 1:
        raise LatticeError("bound must be positive")
    subset, rest, B, alphas = _alpha_and_beta(basis)
    violations, conditions = [], []
    for rel in find_integer_relations(alphas, q_max):
        n = basis.n
        violations.append(rel[n:] + rel[:n])
        conditions.append("alpha")
    beta = ()
    if basis.m == 1:
        p1 = basis.p1[:, 0]
        alpha = alphas[0]
        den = p1[rest[0]] - alpha @ p1[list(subset)]
        if abs(den) < config.ABS_TOL:
            raise GeneralPositionError("physical projection degenerate: zero scaling denominator")
        beta_arr = p1[list(subset)] / den
        for rel in _beta_relations(beta_arr, alpha, q_max):
            violations.append(rel)
            conditions.append("beta")
        beta = tuple(float(v) for v in beta_arr)
    report = IndependenceReport(
        bound_checked=int(q_max),
        violations=tuple(violations),
        conditions=tuple(conditions),
        alpha=tuple(tuple(float(v) for v in row) for row in alphas),
        beta=beta,
    )
    logger.info("general position scan to q_max=%d: %d violations", q_max, len(violations))
    return report


def certify_special_form(alpha, beta, q_max: int | None = None) -> SpecialFormLattice:
    """Build a SpecialFormLattice after scanning both rational-independence conditions."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if q_max is None:
        q_max = default_q_max(alpha.shape[0] + 1)
    lat = SpecialFormLattice(tuple(alpha), tuple(beta), int(q_max))
    report = check_general_position(lat.basis(), q_max)
    if not report.certified:
        raise GeneralPositionError(
            f"not in general position: relations {list(report.violations)} ({', '.join(report.conditions)})"
        )
    return lat


def special_form_basis(lat: SpecialFormLattice) -> LatticeBasis:
    return lat.basis()


# --- Kernel Split ----------------------------------------------------------
def _row_basis(rows: list[list[int]]) -> list[list[int]]:
    """Integer echelon basis of the row lattice (Euclid on columns)."""
    rows = [list(r) for r in rows if any(r)]
    basis = []
    if not rows:
        return basis
    width = len(rows[0])
    for col in range(width):
        active = [r for r in rows if r[col] != 0]
        rows = [r for r in rows if r[col] == 0]
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[col]))
            pivot = active[0]
            nxt = [pivot]
            for r in active[1:]:
                q = r[col] // pivot[col]
                r = [a - q * b for a, b in zip(r, pivot)]
                if r[col] != 0:
                    nxt.append(r)
                elif any(r):
                    rows.append(r)
            active = nxt
        if active:
            basis.append(active[0])
    return basis


def _unimodular_completion(kernel: list[list[int]], size: int) -> list[list[int]]:
    """
    Column-reduce kernel rows to [H | 0] with a unimodular U and return
    U^-1. Its first k rows span the saturation of the kernel rows, the
    remaining rows a complement.
    """
    mat = [list(r) for r in kernel]
    uinv = [[int(i == j) for j in range(size)] for i in range(size)]
    for i in range(len(mat)):
        while True:
            nz = [j for j in range(i, size) if mat[i][j] != 0]
            if not nz:
                raise LatticeError("kernel rows are linearly dependent")
            j_min = min(nz, key=lambda j: abs(mat[i][j]))
            if j_min != i:
                for row in mat:
                    row[i], row[j_min] = row[j_min], row[i]
                uinv[i], uinv[j_min] = uinv[j_min], uinv[i]
            done = True
            for j in range(i + 1, size):
                if mat[i][j] != 0:
                    q = mat[i][j] // mat[i][i]
                    for row in mat:
                        row[j] -= q * row[i]
                    uinv[i] = [a + q * b for a, b in zip(uinv[i], uinv[j])]
                    if mat[i][j] != 0:
                        done = False
            if done:
                break
    return uinv


def _integer_det(rows: list[list[int]]) -> int:
    return int(round(np.linalg.det(np.array(rows, dtype=float))))


def kernel_split(basis: LatticeBasis, search_radius: int = config.KERNEL_SEARCH_RADIUS) -> KernelSplit:
    """
    Split off the lattice vectors killed by p2.

    Integer coefficient vectors c with c @ p2 = 0 are found by enumerating
    integer values on pivot coordinates of the real null space within
    search_radius and solving for the rest. N is the saturated kernel
    found, L a complement with [N; L] unimodular.
    """
    require(validate_positive_int(search_radius, "search_radius"), LatticeError)
    p2 = basis.p2
    size = basis.m + basis.n
    _, sing, vt = np.linalg.svd(p2.T)
    rank = int(np.sum(sing > config.ABS_TOL * max(1.0, sing.max())))
    null = vt[rank:].T  # (size, k)
    k = null.shape[1]
    found = []
    if k:
        pivots, det = max(
            ((c, abs(np.linalg.det(null[list(c)]))) for c in combinations(range(size), k)),
            key=lambda item: item[1],
        )
        grid = _integer_grid(k, search_radius)
        grid = grid[np.any(grid != 0, axis=1)]
        coeffs = grid @ np.linalg.inv(null[list(pivots)]).T @ null.T
        rounded = np.rint(coeffs)
        integral = np.all(np.abs(coeffs - rounded) < config.ABS_TOL * max(1, search_radius), axis=1)
        cand = rounded[integral]
        norms = np.linalg.norm(cand @ p2, axis=1)
        found = [[int(v) for v in row] for row in cand[norms < config.KERNEL_TOL]]
    logger.info("kernel split: radius %d, real null dimension %d, %d integer kernel vectors",
                search_radius, k, len(found))
    kernel = _row_basis(found)
    uinv = _unimodular_completion(kernel, size)
    r = len(kernel)
    n_rows, l_rows = uinv[:r], uinv[r:]
    det = _integer_det(uinv)
    mat = basis.matrix
    n_part = None
    if r:
        n_part = Sublattice(tuple(tuple(row) for row in n_rows), np.array(n_rows, dtype=float) @ mat)
    l_part = Sublattice(tuple(tuple(row) for row in l_rows), np.array(l_rows, dtype=float) @ mat)
    return KernelSplit(L=l_part, N=n_part, search_radius=int(search_radius), unimodular_det=det)


# --- Reduction to Special Form ---------------------------------------------
def to_special_form(basis: LatticeBasis, q_max: int | None = None) -> tuple[DiagonalSplitMap, SpecialFormLattice]:
    """
    Find T(x, y) = (a x, B y) carrying the lattice onto a special-form lattice.

    The d vectors whose internal parts have the largest |det| become the
    generators (beta_j, e_j); the omitted vector becomes (1 + beta.alpha, alpha).
    """
    if basis.m != 1:
        raise LatticeError("special form needs physical dimension m = 1")
    subset, rest, B, alphas = _alpha_and_beta(basis)
    alpha = alphas[0]
    p1 = basis.p1[:, 0]
    den = p1[rest[0]] - alpha @ p1[list(subset)]
    if abs(den) < config.ABS_TOL:
        raise GeneralPositionError("not in general position: zero scaling denominator")
    a = 1.0 / den
    beta = a * p1[list(subset)]
    lat = certify_special_form(alpha, beta, q_max)
    logger.info("special form: order %s, a=%.17g", list(subset) + rest, a)
    return DiagonalSplitMap(a, B), lat


def transport_window(T: DiagonalSplitMap, window: Window) -> Window:
    """Window B W, so that T maps the model set of (L, W) onto that of (T L, B W)."""
    return linear_image(window, T.matrix)


# --- Lifted Window Points --------------------------------------------------
def lift_window_points(basis: LatticeBasis, window: Window, coeff_box) -> list[LiftedPoint]:
    """
    Lattice points with integer coordinates in coeff_box (one half-open
    (lo, hi) pair per basis vector) whose internal projection lies in the
    window, sorted by p1 then coefficients.
    """
    lo_w, hi_w = window.bounds()
    if not (np.all(np.isfinite(lo_w)) and np.all(np.isfinite(hi_w))):
        raise WindowError("window must be bounded")
    size = basis.m + basis.n
    if len(coeff_box) != size:
        raise LatticeError(f"coefficient box needs {size} ranges")
    count = math.prod(max(0, int(hi) - int(lo)) for lo, hi in coeff_box)
    if count == 0 or window.is_empty():
        return []
    if count > config.MAX_ENUMERATION:
        raise LatticeError(f"coefficient box too large: {count} points")
    axes = [np.arange(int(lo), int(hi)) for lo, hi in coeff_box]
    coeffs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, size)
    pts = coeffs @ basis.matrix
    keep = window.indicator(pts[:, basis.m:])
    coeffs, pts = coeffs[keep], pts[keep]
    order = np.lexsort(tuple(coeffs[:, ::-1].T) + tuple(pts[:, : basis.m][:, ::-1].T))
    return [
        LiftedPoint(
            tuple(int(v) for v in coeffs[i]),
            tuple(float(v) for v in pts[i, : basis.m]),
            tuple(float(v) for v in pts[i, basis.m:]),
        )
        for i in order
    ]


# --- Config ----------------------------------------------------------------
def lattice_from_config(data: dict):
    if "special_form" in data:
        body = data["special_form"]
        return certify_special_form(body["alpha"], body["beta"], body.get("q_max"))
    unknown = set(data) - {"m", "n", "basis"}
    if unknown:
        raise LatticeError(f"unknown lattice keys: {sorted(unknown)}")
    return LatticeBasis(int(data["m"]), int(data["n"]), data["basis"])


def lattice_to_config(lat) -> dict:
    if isinstance(lat, SpecialFormLattice):
        return {"special_form": {"alpha": list(lat.alpha), "beta": list(lat.beta)}}
    return {"m": lat.m, "n": lat.n, "basis": [list(r) for r in lat.vectors]}
