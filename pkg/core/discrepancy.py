# --- Discrepancy: Birkhoff Sums of Irrational Rotations --------------------
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d
from scipy.stats import linregress, qmc

import config
from .utils import require, validate_interval, validate_positive_int
from .window import Window, chi_values

logger = logging.getLogger(__name__)

_SPLITTER = 134217729.0  # 2**27 + 1


class Evidence(str, Enum):
    BOUNDED = "bounded_evidence"
    GROWTH = "growth_evidence"


@dataclass(frozen=True, eq=False)
class DiscrepancyProfile:
    """
    values[N-1] = D(N), counts[N-1] = sum_{k<N} chi(x + k alpha).
    For two-window gap profiles counts holds the integer gap S_N and
    values = counts.
    """

    alpha: tuple[float, ...]
    window_id: str
    x: tuple[float, ...]
    counts: np.ndarray
    values: np.ndarray
    running_max: np.ndarray

    @property
    def N_max(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class BrsVerdict:
    evidence: Evidence
    split: int
    N_max: int
    max_at_split: float
    max_at_end: float


@dataclass(frozen=True)
class GridVerdict:
    evidence: Evidence
    split: int
    N_max: int
    points: tuple[tuple[float, ...], ...]
    max_at_split: tuple[float, ...]
    max_at_end: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class UniformityReport:
    generators: tuple[tuple[float, ...], ...]
    ks: np.ndarray
    min_counts: np.ndarray
    ratios: np.ndarray
    c_estimate: float
    k0_estimate: int | None
    seed: int = field(default=config.DEFAULT_SEED)


# --- Torus Orbit -----------------------------------------------------------
def _split(a: np.ndarray):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_product(a: np.ndarray, b: np.ndarray):
    """p + err == a * b exactly (Dekker)."""
    p = a * b
    a_hi, a_lo = _split(a)
    b_hi, b_lo = _split(b)
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


def torus_orbit(alpha, x, start: int, count: int) -> np.ndarray:
    """
    Points x + k alpha reduced to [0, 1)^d for k = start..start+count-1.

    k alpha is formed as an exact product pair and its integer part is
    removed before x is added, so the error stays at one ulp of 1 for any k.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(start, start + count, dtype=float)[:, None]
    p, err = _two_product(k, alpha[None, :])
    frac = p - np.floor(p)
    y = (x - np.floor(x))[None, :] + (frac + err)
    y = y - np.floor(y)
    y[y >= 1.0] = 0.0
    return y


def default_grid(d: int, per_axis: int = config.GRID_POINTS_PER_AXIS) -> np.ndarray:
    """per_axis^d points (i + h) / per_axis, h the first nonzero Halton point."""
    h = qmc.Halton(d=d, scramble=False).random(2)[1]
    axes = [(np.arange(per_axis) + h[j]) / per_axis for j in range(d)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


# --- Profiles --------------------------------------------------------------
def _orbit_counts(w: Window, alpha, x, start: int, count: int) -> np.ndarray:
    return chi_values(w, torus_orbit(alpha, x, start, count))


def _profile(alpha, window_id, x, counts, values) -> DiscrepancyProfile:
    return DiscrepancyProfile(
        alpha=tuple(float(v) for v in np.atleast_1d(alpha)),
        window_id=window_id,
        x=tuple(float(v) for v in np.atleast_1d(x)),
        counts=counts,
        values=values,
        running_max=np.maximum.accumulate(np.abs(values)),
    )


def discrepancy_profile(w: Window, alpha, x, N_max: int, window_id: str = "W") -> DiscrepancyProfile:
    """D(N) = sum_{k<N} chi_W(x + k alpha) - N mes W, N = 1..N_max."""
    require(validate_positive_int(N_max, "N_max"))
    chi = _orbit_counts(w, alpha, x, 0, N_max)
    counts = np.cumsum(chi)
    values = counts - np.arange(1, N_max + 1, dtype=float) * w.measure()
    return _profile(alpha, window_id, x, counts, values)


def _window_extrema(values: np.ndarray, width: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Max and min of values[s:s+width] for s = 0..count-1."""
    span = np.asarray(values[: count + width - 1], dtype=float)
    # a centred filter of size width at index s + width // 2 covers exactly values[s:s+width]
    centre = slice(width // 2, width // 2 + count)
    return maximum_filter1d(span, width)[centre], minimum_filter1d(span, width)[centre]


def two_sided_scan(w: Window, alpha, x, N_max: int, j_range) -> float:
    """
    sup over n in [1, N_max], j in j_range (half-open) of
    |sum_{k=j}^{j+n-1} chi_W(x + k alpha) - n mes W|.
    """
    require(validate_positive_int(N_max, "N_max"))
    require(validate_interval(j_range, "j_range"))
    j0, j1 = (int(v) for v in j_range)
    if j1 == j0:
        return 0.0
    count = j1 - j0
    chi = _orbit_counts(w, alpha, x, j0, count + N_max - 1)
    prefix = np.concatenate([[0], np.cumsum(chi)])
    P = prefix - np.arange(prefix.shape[0], dtype=float) * w.measure()
    maxima, minima = _window_extrema(P[1:], N_max, count)
    base = P[:count]
    return float(max(np.max(maxima - base), np.max(base - minima), 0.0))


def brs_classify(profile: DiscrepancyProfile, split: int, tol: float = config.BRS_TOL) -> BrsVerdict:
    """bounded_evidence iff M(N_max) <= M(split) + tol."""
    if not 1 <= split < profile.N_max:
        raise ValueError(f"split must lie in [1, N_max), got {split}")
    m_split = float(profile.running_max[split - 1])
    m_end = float(profile.running_max[-1])
    evidence = Evidence.BOUNDED if m_end <= m_split + tol else Evidence.GROWTH
    return BrsVerdict(evidence, int(split), profile.N_max, m_split, m_end)


def classify_on_grid(w: Window, alpha, N_max: int, split: int, grid=None,
                     tol: float = config.BRS_TOL) -> GridVerdict:
    """brs_classify at every grid point; growth if any point shows growth."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    grid = default_grid(alpha.shape[0]) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    verdicts = [brs_classify(discrepancy_profile(w, alpha, x, N_max), split, tol) for x in grid]
    growth = any(v.evidence == Evidence.GROWTH for v in verdicts)
    result = GridVerdict(
        evidence=Evidence.GROWTH if growth else Evidence.BOUNDED,
        split=int(split),
        N_max=int(N_max),
        points=tuple(tuple(float(v) for v in x) for x in grid),
        max_at_split=tuple(v.max_at_split for v in verdicts),
        max_at_end=tuple(v.max_at_end for v in verdicts),
    )
    logger.info("grid classification over %d points: %s", len(verdicts), result.evidence.value)
    return result


# --- Two-Window Gap --------------------------------------------------------
def pair_gap_profile(w: Window, w2: Window, alpha, x, N_max: int) -> DiscrepancyProfile:
    """S_N(x) = sum_{n<N} (chi_W - chi_W')(x + n alpha), no measure term."""
    require(validate_positive_int(N_max, "N_max"))
    orbit = torus_orbit(alpha, x, 0, N_max)
    gap = np.cumsum(chi_values(w, orbit) - chi_values(w2, orbit))
    return _profile(alpha, "W-W2", x, gap, gap.astype(float))


def pair_gap_slope(profile: DiscrepancyProfile) -> float:
    """Least-squares slope of S_N against N."""
    Ns = np.arange(1, profile.N_max + 1, dtype=float)
    return float(linregress(Ns, profile.values).slope)


def shifted_gap_identity_residual(w: Window, w2: Window, alpha, x, N: int, j: int) -> int:
    """S_N(x + j alpha) - (S_{N+j}(x) - S_j(x)); zero when the shift identity holds."""
    if j < 0:
        raise ValueError("shift j must be nonnegative")
    shifted = torus_orbit(alpha, x, j, 1)[0]
    lhs = int(pair_gap_profile(w, w2, alpha, shifted, N).counts[-1])
    full = pair_gap_profile(w, w2, alpha, x, N + j).counts
    s_j = int(full[j - 1]) if j > 0 else 0
    return lhs - (int(full[-1]) - s_j)


# --- Uniformity ------------------------------------------------------------
def uniformity_scan(w: Window, generators, k_max: int, x_samples: int,
                    seed: int = config.DEFAULT_SEED) -> UniformityReport:
    """
    Per-k minimum over sampled x of |W ∩ (P_k + x)| / k^d, where P_k is the
    block {sum_j m_j g_j : 0 <= m_j < k} on the torus.
    """
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    require(validate_positive_int(x_samples, "x_samples"))
    gens = np.atleast_2d(np.asarray(generators, dtype=float))
    d = w.dim
    if gens.shape != (d, d):
        raise ValueError(f"need {d} generators in R^{d}, got shape {gens.shape}")
    rng = np.random.default_rng(seed)
    xs = rng.random((x_samples, d))
    axes = np.stack(np.meshgrid(*[np.arange(k_max)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    offsets = axes.astype(float) @ gens
    ks = np.arange(1, k_max + 1)
    min_counts = np.full(k_max, np.iinfo(np.int64).max, dtype=np.int64)
    corner = (ks - 1,) * d
    for x in xs:
        hits = chi_values(w, offsets + x).reshape((k_max,) * d)
        cum = hits
        for axis in range(d):
            cum = np.cumsum(cum, axis=axis)
        min_counts = np.minimum(min_counts, cum[corner])
    ratios = min_counts / ks.astype(float) ** d
    c = float(np.min(ratios[ks > k_max / 2]))
    k0 = None
    if c > 0:
        bad = ks[ratios < c]
        k0 = int(bad.max()) if bad.size else 0
    logger.info("uniformity scan: c=%.6g k0=%s over %d samples", c, k0, x_samples)
    return UniformityReport(
        generators=tuple(tuple(float(v) for v in g) for g in gens),
        ks=ks,
        min_counts=min_counts,
        ratios=ratios,
        c_estimate=c,
        k0_estimate=k0,
        seed=int(seed),
    )
