# --- Windows: Bounded Regions of Internal Space ----------------------------
import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

import config
from .utils import WindowError, require, validate_vector

logger = logging.getLogger(__name__)


class Status(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    NEAR_BOUNDARY = "near_boundary"


@dataclass(frozen=True)
class MembershipVerdict:
    status: Status
    margin: float


def _as_vec(values, name: str, dim: int | None = None) -> tuple[float, ...]:
    try:
        arr = np.asarray(values, dtype=float).reshape(-1)
    except (TypeError, ValueError) as e:
        raise WindowError(f"{name} is not numeric: {e}")
    if np.any(np.isinf(arr)):
        raise WindowError("window must be bounded")
    require(validate_vector(arr, name, dim), WindowError)
    return tuple(float(v) for v in arr)


def _as_mat(values, name: str, dim: int) -> tuple[tuple[float, ...], ...]:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (dim, dim):
        raise WindowError(f"{name} must be a {dim}x{dim} matrix, got shape {arr.shape}")
    if np.any(np.isinf(arr)):
        raise WindowError("window must be bounded")
    if not np.all(np.isfinite(arr)):
        raise WindowError(f"{name} must be finite")
    return tuple(tuple(float(v) for v in row) for row in arr)


def _positive_first(vectors: np.ndarray) -> np.ndarray:
    """True where the first nonzero component of each row is positive."""
    nz = vectors != 0
    first = np.argmax(nz, axis=1)
    lead = vectors[np.arange(vectors.shape[0]), first]
    return lead > 0


# --- Window Shapes ---------------------------------------------------------
class Window:
    """
    Bounded region of R^d.

    Subclasses provide measure, bounds, a vectorized half-open indicator,
    a distance-to-boundary lower bound and a half-space description of
    the closure (A x <= b) for overlap tests.
    """

    dim: int

    def measure(self) -> float:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def indicator(self, points: np.ndarray, snap: float = config.BOUNDARY_SNAP) -> np.ndarray:
        raise NotImplementedError

    def margin(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def translate(self, v) -> "Window":
        raise NotImplementedError

    def linear_image(self, matrix: np.ndarray) -> "Window":
        raise NotImplementedError

    def primitives(self) -> list["Window"]:
        return [self]

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def is_empty(self) -> bool:
        return self.measure() == 0.0


@dataclass(frozen=True)
class Box(Window):
    """Axis box [lo, lo + widths), lower faces in, upper faces out."""

    lo: tuple[float, ...]
    widths: tuple[float, ...]

    def __post_init__(self):
        lo = _as_vec(self.lo, "box lo")
        widths = _as_vec(self.widths, "box widths", len(lo))
        if any(w < 0 for w in widths):
            raise WindowError("box hi must not be below lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "widths", widths)

    @classmethod
    def from_bounds(cls, lo, hi) -> "Box":
        lo = _as_vec(lo, "box lo")
        hi = _as_vec(hi, "box hi", len(lo))
        return cls(lo, tuple(h - l for l, h in zip(lo, hi)))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(l + w for l, w in zip(self.lo, self.widths))

    def measure(self) -> float:
        return float(math.prod(self.widths))

    def bounds(self):
        return np.array(self.lo), np.array(self.hi)

    def indicator(self, points, snap=config.BOUNDARY_SNAP):
        y = np.asarray(points, dtype=float).reshape(-1, self.dim)
        lo, hi = self.bounds()
        return np.all((y >= lo - snap) & (y < hi - snap), axis=1)

    def margin(self, points):
        y = np.asarray(points, dtype=float).reshape(-1, self.dim)
        lo, hi = self.bounds()
        below = lo - y
        above = y - hi
        excess = np.maximum(np.maximum(below, above), 0.0)
        outside = np.linalg.norm(excess, axis=1)
        inside = np.min(np.minimum(-below, -above), axis=1)
        return np.where(np.any(excess > 0, axis=1), outside, np.maximum(inside, 0.0))

    def translate(self, v):
        v = _as_vec(v, "translation", self.dim)
        return Box(tuple(l + s for l, s in zip(self.lo, v)), self.widths)

    def linear_image(self, matrix):
        m = np.asarray(matrix, dtype=float)
        edges = m @ np.diag(self.widths)
        return Parallelepiped(tuple(m @ np.array(self.lo)), edges)

    def halfspaces(self):
        eye = np.eye(self.dim)
        lo, hi = self.bounds()
        return np.vstack([eye, -eye]), np.concatenate([hi, -lo])


@dataclass(frozen=True)
class Parallelepiped(Window):
    """origin + edges @ t for t in [0, 1)^d; the columns of edges span it."""

    origin: tuple[float, ...]
    edges: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        origin = _as_vec(self.origin, "parallelepiped origin")
        edges = _as_mat(self.edges, "parallelepiped edges", len(origin))
        if abs(np.linalg.det(np.array(edges))) == 0.0:
            raise WindowError("parallelepiped edges are linearly dependent")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "edges", edges)

    @property
    def dim(self) -> int:
        return len(self.origin)

    def _inverse(self) -> np.ndarray:
        return np.linalg.inv(np.array(self.edges))

    def measure(self) -> float:
        return float(abs(np.linalg.det(np.array(self.edges))))

    def bounds(self):
        e = np.array(self.edges)
        o = np.array(self.origin)
        lo = o + np.minimum(e, 0.0).sum(axis=1)
        hi = o + np.maximum(e, 0.0).sum(axis=1)
        return lo, hi

    def _coords(self, points):
        y = np.asarray(points, dtype=float).reshape(-1, self.dim)
        inv = self._inverse()
        return (y - np.array(self.origin)) @ inv.T, np.linalg.norm(inv, axis=1)

    def indicator(self, points, snap=config.BOUNDARY_SNAP):
        t, row_norms = self._coords(points)
        s = snap * row_norms
        return np.all((t >= -s) & (t < 1.0 - s), axis=1)

    def margin(self, points):
        t, row_norms = self._coords(points)
        dist = np.minimum(t, 1.0 - t) / row_norms
        inside = np.all(dist >= 0, axis=1)
        return np.where(inside, np.min(dist, axis=1), np.max(-dist, axis=1))

    def translate(self, v):
        v = _as_vec(v, "translation", self.dim)
        return Parallelepiped(tuple(o + s for o, s in zip(self.origin, v)), self.edges)

    def linear_image(self, matrix):
        m = np.asarray(matrix, dtype=float)
        return Parallelepiped(tuple(m @ np.array(self.origin)), m @ np.array(self.edges))

    def halfspaces(self):
        inv = self._inverse()
        base = inv @ np.array(self.origin)
        return np.vstack([inv, -inv]), np.concatenate([1.0 + base, -base])


@dataclass(frozen=True)
class Simplex(Window):
    """Closed d-simplex; shared facets go to the side their inward normal points into."""

    vertices: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] != verts.shape[1] + 1:
            raise WindowError(f"a d-simplex needs d+1 vertices in R^d, got shape {verts.shape}")
        if np.any(np.isinf(verts)):
            raise WindowError("window must be bounded")
        if not np.all(np.isfinite(verts)):
            raise WindowError("simplex vertices must be finite")
        if np.linalg.det(verts[1:] - verts[0]) == 0.0:
            raise WindowError("simplex is not d-dimensional")
        object.__setattr__(self, "vertices", tuple(tuple(float(v) for v in row) for row in verts))

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    def _gradients(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows are gradients of the barycentric coordinates lambda_0..lambda_d."""
        verts = np.array(self.vertices)
        inv = np.linalg.inv((verts[1:] - verts[0]).T)
        grads = np.vstack([-inv.sum(axis=0), inv])
        return grads, verts[0]

    def barycentric(self, points) -> np.ndarray:
        y = np.asarray(points, dtype=float).reshape(-1, self.dim)
        grads, base = self._gradients()
        lam = (y - base) @ grads[1:].T
        return np.hstack([1.0 - lam.sum(axis=1, keepdims=True), lam])

    def measure(self) -> float:
        verts = np.array(self.vertices)
        return float(abs(np.linalg.det(verts[1:] - verts[0])) / math.factorial(self.dim))

    def bounds(self):
        verts = np.array(self.vertices)
        return verts.min(axis=0), verts.max(axis=0)

    def indicator(self, points, snap=config.BOUNDARY_SNAP):
        lam = self.barycentric(points)
        grads, _ = self._gradients()
        s = snap * np.linalg.norm(grads, axis=1)
        keep_face = _positive_first(grads)
        inner = lam > s
        on_face = (lam >= -s) & ~inner
        return np.all(inner | (on_face & keep_face), axis=1)

    def margin(self, points):
        lam = self.barycentric(points)
        grads, _ = self._gradients()
        dist = lam / np.linalg.norm(grads, axis=1)
        inside = np.all(dist >= 0, axis=1)
        return np.where(inside, np.min(dist, axis=1), np.max(-dist, axis=1))

    def translate(self, v):
        v = np.array(_as_vec(v, "translation", self.dim))
        return Simplex(np.array(self.vertices) + v)

    def linear_image(self, matrix):
        m = np.asarray(matrix, dtype=float)
        return Simplex(np.array(self.vertices) @ m.T)

    def halfspaces(self):
        # lambda_i(x) >= 0; lambda_0 carries the constant 1
        grads, base = self._gradients()
        offsets = -grads @ base
        offsets[0] += 1.0
        return -grads, offsets


@dataclass(frozen=True)
class WindowUnion(Window):
    """Finite union of windows with pairwise disjoint interiors."""

    components: tuple[Window, ...]
    validate: bool = True

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise WindowError("union needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise WindowError(f"union components differ in dimension: {sorted(dims)}")
        object.__setattr__(self, "components", comps)
        if self.validate:
            check_disjoint_interiors(comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def measure(self) -> float:
        return float(math.fsum(c.measure() for c in self.components))

    def bounds(self):
        los, his = zip(*(c.bounds() for c in self.components))
        return np.min(los, axis=0), np.max(his, axis=0)

    def indicator(self, points, snap=config.BOUNDARY_SNAP):
        y = np.asarray(points, dtype=float).reshape(-1, self.dim)
        hit = np.zeros(y.shape[0], dtype=bool)
        for c in self.components:
            hit |= c.indicator(y, snap)
        return hit

    def margin(self, points):
        y = np.asarray(points, dtype=float).reshape(-1, self.dim)
        inside_best = np.zeros(y.shape[0])
        outside_best = np.full(y.shape[0], np.inf)
        any_inside = np.zeros(y.shape[0], dtype=bool)
        for c in self.components:
            mask = c.indicator(y, 0.0)
            m = c.margin(y)
            inside_best = np.where(mask, np.maximum(inside_best, m), inside_best)
            outside_best = np.where(mask, outside_best, np.minimum(outside_best, m))
            any_inside |= mask
        return np.where(any_inside, inside_best, outside_best)

    def translate(self, v):
        return WindowUnion(tuple(c.translate(v) for c in self.components), validate=False)

    def linear_image(self, matrix):
        return WindowUnion(tuple(c.linear_image(matrix) for c in self.components), validate=False)

    def primitives(self):
        out = []
        for c in self.components:
            out.extend(c.primitives())
        return out


def SimplexUnion(simplices, validate: bool = True) -> WindowUnion:
    """Union of d-simplices given as vertex lists, interiors pairwise disjoint."""
    return WindowUnion(tuple(Simplex(s) for s in simplices), validate=validate)


def empty_window(dim: int) -> Box:
    return Box((0.0,) * dim, (0.0,) * dim)


# --- Overlap Checks --------------------------------------------------------
def _chebyshev_radius(a: np.ndarray, b: np.ndarray) -> float:
    """Radius of the largest ball inside {x : a x <= b}; 0 if empty or flat."""
    norms = np.linalg.norm(a, axis=1)
    dim = a.shape[1]
    c = np.zeros(dim + 1)
    c[-1] = -1.0
    a_ub = np.hstack([a, norms[:, None]])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b,
        bounds=[(None, None)] * dim + [(0, None)],
        method="highs",
    )
    if res.status != 0:
        return 0.0
    return float(res.x[-1])


def _boxes_overlap(p: Box, q: Box) -> bool:
    plo, phi = p.bounds()
    qlo, qhi = q.bounds()
    return bool(np.all(np.minimum(phi, qhi) - np.maximum(plo, qlo) > 0))


def check_disjoint_interiors(components, tol: float = config.OVERLAP_TOL) -> None:
    """Raise WindowError if two primitives of the given windows overlap in volume."""
    prims = []
    for c in components:
        prims.extend(c.primitives())
    for i, j in combinations(range(len(prims)), 2):
        p, q = prims[i], prims[j]
        if p.is_empty() or q.is_empty():
            continue
        if isinstance(p, Box) and isinstance(q, Box):
            overlap = _boxes_overlap(p, q)
        else:
            plo, phi = p.bounds()
            qlo, qhi = q.bounds()
            if np.any(np.minimum(phi, qhi) <= np.maximum(plo, qlo)):
                continue
            ap, bp = p.halfspaces()
            aq, bq = q.halfspaces()
            scale = max(1.0, float(np.max(np.abs(np.concatenate([phi, plo])))))
            overlap = _chebyshev_radius(np.vstack([ap, aq]), np.concatenate([bp, bq])) > tol * scale
        if overlap:
            raise WindowError(f"window components {i} and {j} have overlapping interiors")


# --- Operations ------------------------------------------------------------
def measure(window: Window) -> float:
    return window.measure()


def bounding_box(window: Window) -> Box:
    lo, hi = window.bounds()
    return Box.from_bounds(lo, hi)


def translate(window: Window, v) -> Window:
    return window.translate(v)


def linear_image(window: Window, matrix) -> Window:
    """Image of the window under an invertible linear map."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (window.dim, window.dim) or np.linalg.det(m) == 0.0:
        raise WindowError("linear image needs an invertible dim x dim matrix")
    return window.linear_image(m)


def contains(window: Window, x, epsilon: float = 0.0) -> MembershipVerdict:
    """
    Half-open membership of x; near_boundary whenever the margin
    (a lower bound on the distance to the boundary) is below epsilon.
    """
    if epsilon < 0:
        raise WindowError("epsilon must be nonnegative")
    y = np.asarray(x, dtype=float).reshape(1, window.dim)
    margin = float(window.margin(y)[0])
    if margin < epsilon:
        return MembershipVerdict(Status.NEAR_BOUNDARY, margin)
    inside = bool(window.indicator(y)[0])
    return MembershipVerdict(Status.INSIDE if inside else Status.OUTSIDE, margin)


def lattice_shift_hits(window: Window, points, snap: float = config.BOUNDARY_SNAP,
                       chunk: int = 1_000_000) -> tuple[np.ndarray, np.ndarray]:
    """
    All pairs (i, k) with k in Z^d and points[i] + k in the window.

    Returns (index array, shift array of shape (h, d)), ordered by i and then
    lexicographically by k.
    """
    x = np.asarray(points, dtype=float)
    x = x.reshape(-1, window.dim)
    d = window.dim
    if window.is_empty() or x.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, d), dtype=np.int64)
    lo, hi = window.bounds()
    spans = np.ceil(hi - lo).astype(np.int64) + 2
    offsets = np.stack(
        np.meshgrid(*[np.arange(s) for s in spans], indexing="ij"), axis=-1
    ).reshape(-1, d)
    per_point = offsets.shape[0]
    step = max(1, chunk // per_point)
    idx_parts, k_parts = [], []
    for start in range(0, x.shape[0], step):
        xs = x[start:start + step]
        kmin = np.ceil(lo - xs - 2 * snap)
        shifts = kmin[:, None, :] + offsets[None, :, :]
        y = xs[:, None, :] + shifts
        mask = window.indicator(y.reshape(-1, d), snap).reshape(xs.shape[0], per_point)
        rows, cols = np.nonzero(mask)
        idx_parts.append(rows + start)
        k_parts.append(shifts[rows, cols].astype(np.int64))
    return np.concatenate(idx_parts), np.concatenate(k_parts)


def chi_values(window: Window, points) -> np.ndarray:
    """Vectorized multiplicity function over rows of points."""
    x = np.asarray(points, dtype=float).reshape(-1, window.dim)
    idx, _ = lattice_shift_hits(window, x)
    return np.bincount(idx, minlength=x.shape[0]).astype(np.int64)


def chi(window: Window, x) -> int:
    """Number of integer translates x + k lying in the window."""
    return int(chi_values(window, np.asarray(x, dtype=float).reshape(1, window.dim))[0])


def brs_parallelepiped(alpha, labels, origin=None) -> Parallelepiped:
    """
    Parallelepiped spanned by the vectors k*alpha + m, one (k, m) label per edge.
    These are bounded remainder sets for the rotation by alpha.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    d = alpha.shape[0]
    if len(labels) != d:
        raise WindowError(f"need {d} labels, got {len(labels)}")
    cols = []
    for k, m in labels:
        m = np.asarray(m, dtype=float).reshape(d)
        cols.append(k * alpha + m)
    edges = np.column_stack(cols)
    if abs(np.linalg.det(edges)) < config.ABS_TOL:
        raise WindowError("labels span a degenerate parallelepiped")
    origin = np.zeros(d) if origin is None else np.asarray(origin, dtype=float)
    return Parallelepiped(tuple(origin), edges)


# --- Config (de)serialization ----------------------------------------------
def window_from_config(data: dict) -> Window:
    if not isinstance(data, dict) or len(data) != 1:
        raise WindowError("window config must have exactly one of box/parallelepiped/simplices/union")
    kind, body = next(iter(data.items()))
    if kind == "box":
        return Box.from_bounds(body["lo"], body["hi"])
    if kind == "parallelepiped":
        return Parallelepiped(tuple(body["origin"]), body["edges"])
    if kind == "simplices":
        return SimplexUnion(body)
    if kind == "union":
        return WindowUnion(tuple(window_from_config(w) for w in body))
    raise WindowError(f"unknown window kind: {kind}")


def window_to_config(window: Window) -> dict:
    if isinstance(window, Box):
        return {"box": {"lo": list(window.lo), "hi": list(window.hi)}}
    if isinstance(window, Parallelepiped):
        return {"parallelepiped": {"origin": list(window.origin),
                                   "edges": [list(r) for r in window.edges]}}
    if isinstance(window, Simplex):
        return {"simplices": [[list(v) for v in window.vertices]]}
    if isinstance(window, WindowUnion):
        if all(isinstance(c, Simplex) for c in window.components):
            return {"simplices": [[list(v) for v in c.vertices] for c in window.components]}
        return {"union": [window_to_config(c) for c in window.components]}
    raise WindowError(f"unknown window type: {type(window).__name__}")
