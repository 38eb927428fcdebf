# --- Matching: Hall Witnesses, Bounded Distance & Orbit Pairings -----------
import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

import config
from .modelset import Patch, nu_many
from .utils import OrbitError, TranslationError, require, validate_interval
from .window import Window, lattice_shift_hits

logger = logging.getLogger(__name__)

_INF = math.inf


# --- Domain Types ----------------------------------------------------------
@dataclass(frozen=True, eq=False)
class BipartiteInstance:
    """
    Left/right point sets and translations F. edges[i] lists (right index,
    label index) for every F element with |b - (a + f)| <= tolerance.
    """

    left: np.ndarray
    right: np.ndarray
    labels: tuple
    vectors: np.ndarray
    edges: tuple[tuple[tuple[int, int], ...], ...]
    tolerance: float

    def adjacency(self) -> list[list[int]]:
        return [sorted({j for j, _ in row}) for row in self.edges]

    def edge_count(self) -> int:
        return sum(len(row) for row in self.edges)

    def label_of(self, i: int, j: int):
        for jj, f in self.edges[i]:
            if jj == j:
                return self.labels[f]
        raise KeyError((i, j))


@dataclass(frozen=True)
class MatchingResult:
    pairs: tuple[tuple, ...]
    deficiency: int
    witness: tuple[int, ...] | None = None
    witness_side: str = "left"
    max_displacement: float | None = None
    exempt: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class HallVerdict:
    holds: bool
    side: str
    witness: tuple[int, ...] | None
    neighbors: tuple[int, ...]
    deficiency: int


# --- Instance Construction -------------------------------------------------
def _as_points(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.size == 0:
        return np.zeros((0, arr.shape[1] if arr.ndim == 2 else 1))
    return arr


def resolve_translation(label, alpha=None) -> np.ndarray:
    """A label (k, m) means k alpha + m when alpha is given; anything else is a raw vector."""
    if isinstance(label, dict):
        label = (label["k"], label["m"])
    if alpha is not None and isinstance(label, (tuple, list)) and len(label) == 2 \
            and isinstance(label[0], (int, np.integer)) and not isinstance(label[0], bool):
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        m = np.atleast_1d(np.asarray(label[1], dtype=float))
        if m.shape != alpha.shape:
            raise TranslationError(f"label {label} does not match alpha dimension {alpha.shape[0]}")
        return label[0] * alpha + m
    return np.atleast_1d(np.asarray(label, dtype=float))


def build_instance(left, right, F, alpha=None, tolerance: float = 0.0) -> BipartiteInstance:
    """
    Bipartite graph with an edge (a, b, f) whenever |b - (a + f)| <= tolerance.
    Right points are bucketed with width max|f| + tolerance so only the
    3^dim cells around each left point are scanned.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    L = _as_points(left)
    R = _as_points(right)
    labels = tuple(F)
    dim = L.shape[1] if L.shape[0] else R.shape[1]
    vectors = np.array([resolve_translation(f, alpha) for f in labels]).reshape(-1, dim)
    if not labels or L.shape[0] == 0 or R.shape[0] == 0:
        return BipartiteInstance(L, R, labels, vectors, tuple(() for _ in range(L.shape[0])), tolerance)
    width = float(np.max(np.linalg.norm(vectors, axis=1))) + tolerance
    if width <= 0:
        width = 1.0
    buckets = defaultdict(list)
    for j, cell in enumerate(np.floor(R / width).astype(np.int64)):
        buckets[tuple(cell)].append(j)
    around = list(product((-1, 0, 1), repeat=dim))
    edges = []
    for a in L:
        cell = np.floor(a / width).astype(np.int64)
        cand = []
        for off in around:
            cand.extend(buckets.get(tuple(cell + np.array(off)), ()))
        row = []
        if cand:
            cand = np.array(sorted(cand))
            gap = R[cand][:, None, :] - (a[None, None, :] + vectors[None, :, :])
            hit = np.linalg.norm(gap, axis=2) <= tolerance
            for jj, ff in zip(*np.nonzero(hit)):
                row.append((int(cand[jj]), int(ff)))
        edges.append(tuple(row))
    inst = BipartiteInstance(L, R, labels, vectors, tuple(edges), tolerance)
    logger.debug("instance: %d left, %d right, %d edges", L.shape[0], R.shape[0], inst.edge_count())
    return inst


# --- Hopcroft-Karp ---------------------------------------------------------
class HopcroftKarp:
    """
    Maximum-cardinality matching on a bipartite graph given by left
    adjacency lists. BFS layering from the free left vertices, iterative
    DFS along the layers. An optional initial matching is kept and only
    augmented.
    """

    def __init__(self, adj: list[list[int]], num_right: int, initial=None):
        self.adj = adj
        self.num_left = len(adj)
        self.num_right = num_right
        self.mate_left = [-1] * self.num_left
        self.mate_right = [-1] * num_right
        self.dist = [0] * self.num_left
        for u, v in initial or ():
            self.mate_left[u] = v
            self.mate_right[v] = u

    def _layer(self) -> bool:
        queue = deque()
        for u in range(self.num_left):
            if self.mate_left[u] == -1:
                self.dist[u] = 0
                queue.append(u)
            else:
                self.dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in self.adj[u]:
                w = self.mate_right[v]
                if w == -1:
                    found = True
                elif self.dist[w] == _INF:
                    self.dist[w] = self.dist[u] + 1
                    queue.append(w)
        return found

    def _augment(self, root: int, ptr: list[int]) -> bool:
        stack = [root]
        path = []
        while stack:
            u = stack[-1]
            if ptr[u] < len(self.adj[u]):
                v = self.adj[u][ptr[u]]
                ptr[u] += 1
                w = self.mate_right[v]
                if w == -1:
                    path.append(v)
                    for uu, vv in zip(stack, path):
                        self.mate_left[uu] = vv
                        self.mate_right[vv] = uu
                    return True
                if self.dist[w] == self.dist[u] + 1:
                    path.append(v)
                    stack.append(w)
            else:
                self.dist[u] = _INF
                stack.pop()
                if path:
                    path.pop()
        return False

    def __call__(self) -> list[tuple[int, int]]:
        while self._layer():
            ptr = [0] * self.num_left
            for u in range(self.num_left):
                if self.mate_left[u] == -1:
                    self._augment(u, ptr)
        return [(u, v) for u, v in enumerate(self.mate_left) if v != -1]


def _right_adjacency(adj: list[list[int]], num_right: int) -> list[list[int]]:
    radj = [[] for _ in range(num_right)]
    for u, row in enumerate(adj):
        for v in row:
            radj[v].append(u)
    return radj


def _maximal_witness(adj, num_right, mate_left, mate_right) -> tuple[list[int], list[int]]:
    """
    Largest left set S maximizing |S| - |N(S)|: every left vertex not
    reachable by an alternating path from a free right vertex.
    """
    radj = _right_adjacency(adj, num_right)
    reached_left = set()
    seen_right = set(v for v in range(num_right) if mate_right[v] == -1)
    queue = deque(seen_right)
    while queue:
        v = queue.popleft()
        for u in radj[v]:
            if u in reached_left or mate_left[u] == v:
                continue
            reached_left.add(u)
            w = mate_left[u]
            if w != -1 and w not in seen_right:
                seen_right.add(w)
                queue.append(w)
    S = [u for u in range(len(adj)) if u not in reached_left]
    nbrs = sorted({v for u in S for v in adj[u]})
    return S, nbrs


def max_matching(inst: BipartiteInstance) -> MatchingResult:
    """Maximum matching; when left is not saturated a maximal Hall witness S with |S| > |N(S)|."""
    adj = inst.adjacency()
    hk = HopcroftKarp(adj, inst.right.shape[0])
    pairs = hk()
    deficiency = inst.left.shape[0] - len(pairs)
    witness = None
    if deficiency > 0:
        S, nbrs = _maximal_witness(adj, inst.right.shape[0], hk.mate_left, hk.mate_right)
        assert len(S) - len(nbrs) == deficiency
        witness = tuple(S)
    return MatchingResult(
        pairs=tuple((u, v, inst.label_of(u, v)) for u, v in pairs),
        deficiency=deficiency,
        witness=witness,
    )


def _transpose(inst: BipartiteInstance) -> list[list[int]]:
    return _right_adjacency(inst.adjacency(), inst.right.shape[0])


def hall_check(inst: BipartiteInstance, side: str = "left") -> HallVerdict:
    """
    Hall's condition for one side: every S on that side has |N(S)| >= |S|.
    Holds iff a maximum matching saturates the side; otherwise the maximal
    violating set is returned.
    """
    if side == "left":
        adj, other = inst.adjacency(), inst.right.shape[0]
    elif side == "right":
        adj, other = _transpose(inst), inst.left.shape[0]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side}")
    hk = HopcroftKarp(adj, other)
    pairs = hk()
    deficiency = len(adj) - len(pairs)
    if deficiency == 0:
        return HallVerdict(True, side, None, (), 0)
    S, nbrs = _maximal_witness(adj, other, hk.mate_left, hk.mate_right)
    return HallVerdict(False, side, tuple(S), tuple(nbrs), deficiency)


# --- Bounded Distance Matching ---------------------------------------------
def _interval_adjacency(a: np.ndarray, b: np.ndarray, K: float) -> list[list[int]]:
    lo = np.searchsorted(b, a - K, side="left")
    hi = np.searchsorted(b, a + K, side="right")
    return [list(range(l, h)) for l, h in zip(lo, hi)]


def _greedy_seed(adj, rows) -> list[tuple[int, int]]:
    """Each row in order takes its first free neighbour (order preserving on sorted lines)."""
    taken = set()
    seed = []
    for u in rows:
        for v in adj[u]:
            if v not in taken:
                taken.add(v)
                seed.append((u, v))
                break
    return seed


def _cover_right(adj, radj, mate_left, mate_right, b: int, exempt_right) -> bool:
    """
    Alternating BFS from the uncovered right vertex b to a free left vertex or
    to a matched exempt right vertex; flipping the path covers b and keeps
    every covered left vertex covered.
    """
    parent_left = {}
    queue = deque([b])
    seen_right = {b}
    while queue:
        v = queue.popleft()
        for u in radj[v]:
            if u in parent_left or mate_left[u] == v:
                continue
            parent_left[u] = v
            w = mate_left[u]
            if w == -1 or w in exempt_right:
                # flip: walk back from u
                if w != -1:
                    mate_right[w] = -1
                cur = u
                while True:
                    v_prev = parent_left[cur]
                    old = mate_right[v_prev]
                    mate_left[cur] = v_prev
                    mate_right[v_prev] = cur
                    if v_prev == b:
                        return True
                    cur = old
            if w not in seen_right:
                seen_right.add(w)
                queue.append(w)
    return False


def bounded_distance_match(pa: Patch, pb: Patch, K: float, boundary_slack: float | None = None) -> MatchingResult:
    """
    Match points of two patches moving each at most K. Points within
    K + boundary_slack of the ends of the common coverage are exempt;
    deficiency counts unmatched core points of both patches.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    slack = K if boundary_slack is None else boundary_slack
    if slack < 0:
        raise ValueError("boundary_slack must be nonnegative")
    lo = max(pa.coverage[0], pb.coverage[0])
    hi = min(pa.coverage[1], pb.coverage[1])
    if hi <= lo:
        raise ValueError("patch coverages do not overlap")
    core_lo, core_hi = lo + K + slack, hi - K - slack
    a, b = pa.p1, pb.p1
    core_a = np.nonzero((a >= core_lo) & (a < core_hi))[0]
    core_b = np.nonzero((b >= core_lo) & (b < core_hi))[0]
    exempt_b = set(range(len(b))) - set(core_b.tolist())

    adj = _interval_adjacency(a, b, K)
    in_core = (a >= core_lo) & (a < core_hi)
    core_adj = [adj[u] if in_core[u] else [] for u in range(len(a))]
    hk = HopcroftKarp(core_adj, len(b), _greedy_seed(core_adj, core_a.tolist()))
    hk()
    witness = None
    if any(hk.mate_left[u] == -1 for u in core_a):
        S, _ = _maximal_witness(
            [core_adj[u] for u in core_a], len(b),
            [hk.mate_left[u] for u in core_a], _restricted_mates(hk.mate_right, core_a),
        )
        witness = tuple(int(core_a[i]) for i in S)

    # exempt left vertices may now be used as free endpoints
    radj = _right_adjacency(adj, len(b))
    mate_left, mate_right = hk.mate_left, hk.mate_right
    for v in core_b:
        if mate_right[v] == -1:
            _cover_right(adj, radj, mate_left, mate_right, int(v), exempt_b)

    pairs = []
    k_obs = 0.0
    for u, v in enumerate(mate_left):
        if v == -1:
            continue
        disp = float(b[v] - a[u])
        if abs(disp) > K:
            raise AssertionError(f"matched displacement {disp} exceeds K={K}")
        k_obs = max(k_obs, abs(disp))
        pairs.append((u, v, disp))
    deficiency = sum(mate_left[u] == -1 for u in core_a) + sum(mate_right[v] == -1 for v in core_b)
    logger.debug("bde K=%.6g: %d pairs, deficiency %d, K'=%.6g", K, len(pairs), deficiency, k_obs)
    return MatchingResult(
        pairs=tuple(pairs),
        deficiency=int(deficiency),
        witness=witness,
        max_displacement=k_obs,
        exempt=(len(a) - len(core_a), len(b) - len(core_b)),
    )


def _restricted_mates(mate_right, rows) -> list[int]:
    index = {int(u): i for i, u in enumerate(rows)}
    return [index.get(u, -1) if u != -1 else -1 for u in mate_right]


def minimal_bde_constant(pa: Patch, pb: Patch, K_hi: float, step: float = config.BDE_STEP,
                         boundary_slack: float | None = None) -> float | None:
    """Smallest K = j * step <= K_hi with zero deficiency; None if K_hi fails."""
    j_hi = int(math.ceil(K_hi / step))

    def ok(j: int) -> bool:
        return bounded_distance_match(pa, pb, j * step, boundary_slack).deficiency == 0

    if not ok(j_hi):
        return None
    j_lo = 0  # invariant: j_lo fails (or is zero), j_hi passes
    while j_hi - j_lo > 1:
        mid = (j_lo + j_hi) // 2
        if ok(mid):
            j_hi = mid
        else:
            j_lo = mid
    return j_hi * step


def counting_diff(pa: Patch, pb: Patch, x_grid) -> tuple[int, float]:
    """max |nu_a(x) - nu_b(x)| over the grid and the x attaining it."""
    xs = np.asarray(x_grid, dtype=float).reshape(-1)
    if xs.size == 0:
        return 0, math.nan
    diff = np.abs(nu_many(pa, xs) - nu_many(pb, xs))
    i = int(np.argmax(diff))
    return int(diff[i]), float(xs[i])


# --- Orbit Enumeration -----------------------------------------------------
@dataclass(frozen=True, eq=False)
class OrbitEnumeration:
    """
    Fiberwise enumeration of A and B along x + n alpha + Z^d.

    s[i] is s_n for n = n_range[0] + i (s_0 = 0), likewise t; a_points are
    ordered by fiber and then lexicographically by shift, a_j paired with
    b_j for j in the common index range.
    """

    x: tuple[float, ...]
    alpha: tuple[float, ...]
    n_range: tuple[int, int]
    measure: float
    s: np.ndarray
    t: np.ndarray
    a_points: np.ndarray
    b_points: np.ndarray
    a_fiber: np.ndarray
    b_fiber: np.ndarray
    j: np.ndarray
    e: np.ndarray
    m: np.ndarray
    a_cube: np.ndarray
    a_sigma: np.ndarray
    cubes: tuple[tuple[int, ...], ...]
    q_fiber: int
    flagged: int

    def index_of(self, n: int) -> int:
        return int(n) - self.n_range[0]

    def displacement_residuals(self) -> np.ndarray:
        a = self.a_points[self._a_rows()]
        b = self.b_points[self._b_rows()]
        alpha = np.array(self.alpha)
        return np.linalg.norm(b - (a + self.e[:, None] * alpha + self.m), axis=1)

    def _a_rows(self) -> np.ndarray:
        return self.j - self.s[0]

    def _b_rows(self) -> np.ndarray:
        return self.j - self.t[0]

    def pair_points(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a_points[self._a_rows()], self.b_points[self._b_rows()]

    def s_deviation(self) -> np.ndarray:
        """s_n - n mes A over the range."""
        ns = np.arange(self.n_range[0], self.n_range[1] + 1, dtype=float)
        return self.s - ns * self.measure

    def sync_gaps(self) -> np.ndarray:
        """|t_{m_j} - s_{n_j}| for every pair."""
        na = self.a_fiber[self._a_rows()]
        nb = self.b_fiber[self._b_rows()]
        return np.abs(self.t[nb - self.n_range[0]] - self.s[na - self.n_range[0]])


def _fibers(w: Window, x, alpha, ns):
    base = x[None, :] + ns[:, None].astype(float) * alpha[None, :]
    idx, shifts = lattice_shift_hits(w, base)
    points = base[idx] + shifts
    counts = np.bincount(idx, minlength=len(ns))
    return points, ns[idx], shifts, counts


def _indices(counts: np.ndarray, n0: int) -> np.ndarray:
    """s_n for n = n0..n1 with s_0 = 0."""
    cum = np.concatenate([[0], np.cumsum(counts)])
    zero = cum[-n0] if n0 < 0 else 0
    return cum - zero


def orbit_enumerate(wA: Window, wB: Window, alpha, x, n_range) -> OrbitEnumeration:
    """
    Enumerate A^n = A ∩ (x + n alpha + Z^d) and B^m fiberwise, index them by
    s_{n+1} - s_n = #A^n and t_{m+1} - t_m = #B^m, and pair a_j with b_j.
    """
    mes_a, mes_b = wA.measure(), wB.measure()
    if abs(mes_a - mes_b) > config.ABS_TOL:
        raise OrbitError(f"windows must have equal measure ({mes_a:.17g} vs {mes_b:.17g})")
    require(validate_interval(n_range, "n_range"), OrbitError)
    n0, n1 = (int(v) for v in n_range)
    if not n0 <= 0 <= n1:
        raise OrbitError("n_range must contain 0")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ns = np.arange(n0, n1, dtype=np.int64)
    a_pts, a_fib, a_shift, a_cnt = _fibers(wA, x, alpha, ns)
    b_pts, b_fib, b_shift, b_cnt = _fibers(wB, x, alpha, ns)
    s = _indices(a_cnt, n0)
    t = _indices(b_cnt, n0)
    j_lo, j_hi = max(s[0], t[0]), min(s[-1], t[-1])
    j = np.arange(j_lo, j_hi, dtype=np.int64)
    a_rows, b_rows = j - s[0], j - t[0]
    e = b_fib[b_rows] - a_fib[a_rows]
    m = b_shift[b_rows] - a_shift[a_rows]

    lo, hi = wA.bounds()
    axes = [np.arange(int(np.floor(l)), int(np.ceil(h))) for l, h in zip(lo, hi)]
    cubes = [tuple(int(v) for v in c) for c in product(*axes)]
    cube_index = {c: i for i, c in enumerate(cubes)}
    a_cube = np.floor(a_pts).astype(np.int64)
    a_sigma = np.array([cube_index.get(tuple(c), -1) for c in a_cube], dtype=np.int64)

    flagged = 0
    if len(a_pts):
        flagged += int(np.sum(wA.margin(a_pts) < config.BOUNDARY_EPS))
    if len(b_pts):
        flagged += int(np.sum(wB.margin(b_pts) < config.BOUNDARY_EPS))
    if flagged:
        logger.warning("orbit enumeration at x=%s: %d points near the window boundary", x.tolist(), flagged)
    q_fiber = int(max(a_cnt.max(initial=0), b_cnt.max(initial=0)))
    logger.debug("orbit enumeration: %d a points, %d b points, %d pairs", len(a_pts), len(b_pts), len(j))
    return OrbitEnumeration(
        x=tuple(float(v) for v in x),
        alpha=tuple(float(v) for v in alpha),
        n_range=(n0, n1),
        measure=mes_a,
        s=s,
        t=t,
        a_points=a_pts,
        b_points=b_pts,
        a_fiber=a_fib,
        b_fiber=b_fib,
        j=j,
        e=e,
        m=m,
        a_cube=a_cube,
        a_sigma=a_sigma,
        cubes=tuple(cubes),
        q_fiber=q_fiber,
        flagged=flagged,
    )


@dataclass(frozen=True, eq=False)
class TranslationSpread:
    E: tuple[int, ...]
    K1_obs: float
    K2_obs: float
    e: np.ndarray
    m: np.ndarray


def translation_spread(enum: OrbitEnumeration, e_bound: int = config.E_SCAN_BOUND,
                       tol: float = config.ABS_TOL, chunk: int = 512) -> TranslationSpread:
    """
    Solve b_j - a_j = e alpha + m for every pair by scanning |e| <= e_bound,
    and report the occurring e values with the observed bounds on the outer
    (K1) and middle (K2) terms of
        e = (m mes - t_m)/mes + (t_m - s_n)/mes + (s_n - n mes)/mes.
    """
    alpha = np.array(enum.alpha)
    a, b = enum.pair_points()
    delta = b - a
    es = np.arange(-e_bound, e_bound + 1, dtype=np.int64)
    shifts = es[:, None].astype(float) * alpha[None, :]
    solved_e = np.empty(len(delta), dtype=np.int64)
    solved_m = np.empty((len(delta), alpha.shape[0]), dtype=np.int64)
    for start in range(0, len(delta), chunk):
        part = delta[start:start + chunk]
        rest = part[:, None, :] - shifts[None, :, :]
        rounded = np.rint(rest)
        resid = np.max(np.abs(rest - rounded), axis=2)
        best = np.argmin(resid, axis=1)
        rows = np.arange(len(part))
        if np.any(resid[rows, best] >= tol):
            bad = start + int(np.argmax(resid[rows, best] >= tol))
            raise TranslationError(
                f"displacement not in Zα + Z^d: pair {int(enum.j[bad])} within |e| <= {e_bound}"
            )
        solved_e[start:start + len(part)] = es[best]
        solved_m[start:start + len(part)] = rounded[rows, best].astype(np.int64)
    na = enum.a_fiber[enum.j - enum.s[0]]
    nb = enum.b_fiber[enum.j - enum.t[0]]
    s_n = enum.s[na - enum.n_range[0]]
    t_m = enum.t[nb - enum.n_range[0]]
    mes = enum.measure
    if len(delta):
        k1 = float(max(np.max(np.abs(s_n - na * mes)), np.max(np.abs(t_m - nb * mes))))
        k2 = float(np.max(np.abs(t_m - s_n)))
    else:
        k1 = k2 = 0.0
    E = tuple(sorted(int(v) for v in set(solved_e.tolist())))
    logger.info("translation spread: E=%s K1=%.6g K2=%.6g", E, k1, k2)
    return TranslationSpread(E, k1, k2, solved_e, solved_m)


# --- Product Reduction -----------------------------------------------------
@dataclass(frozen=True)
class ProductReductionReport:
    limit_holds: bool
    limit_failures: tuple[tuple[int, ...], ...]
    product_failures: dict
    hall: HallVerdict
    consistent: bool


def product_reduction_check(A, B, F, K: float, s: int, R_list) -> ProductReductionReport:
    """
    For every S ⊆ A and R in R_list test |S| R^s <= |(S+F) ∩ B| (R+2K)^s,
    together with the R -> infinity limit |S| <= |(S+F) ∩ B|, and compare
    with hall_check on the same data.
    """
    A = [tuple(int(v) for v in np.atleast_1d(p)) for p in A]
    B = [tuple(int(v) for v in np.atleast_1d(p)) for p in B]
    F = [tuple(int(v) for v in np.atleast_1d(f)) for f in F]
    if len(A) > 12:
        raise ValueError("subset scan limited to |A| <= 12")
    b_set = set(B)
    reach = [{tuple(x + y for x, y in zip(a, f)) for f in F} & b_set for a in A]
    limit_failures = []
    product_failures = {float(R): [] for R in R_list}
    for size in range(1, len(A) + 1):
        for S in combinations(range(len(A)), size):
            hits = len(set().union(*(reach[i] for i in S)))
            if size > hits:
                limit_failures.append(S)
            for R in R_list:
                if size * R ** s > hits * (R + 2 * K) ** s:
                    product_failures[float(R)].append(S)
    inst = build_instance(A, B, F) if A and B else None
    if inst is None:
        hall = HallVerdict(not A, "left", tuple(range(len(A))) or None, (), len(A))
    else:
        hall = hall_check(inst, "left")
    limit_holds = not limit_failures
    return ProductReductionReport(
        limit_holds=limit_holds,
        limit_failures=tuple(limit_failures),
        product_failures={R: tuple(v) for R, v in product_failures.items()},
        hall=hall,
        consistent=limit_holds == hall.holds,
    )
