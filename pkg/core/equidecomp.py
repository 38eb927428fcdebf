# --- Equidecompositions: Piecewise Translations up to Measure Zero ---------
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import qmc

import config
from .matching import orbit_enumerate, translation_spread
from .utils import OrbitError, require, validate_positive_int
from .window import Box, Window, WindowUnion, window_from_config, window_to_config

logger = logging.getLogger(__name__)

GROUP_LATTICE = "Z alpha + Z^d"
GROUP_RAW = "raw"


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"


@dataclass(frozen=True)
class Piece:
    window: Window
    label: tuple | None
    vector: tuple[float, ...]
    cells: int = 0


@dataclass(frozen=True)
class PiecewiseTranslation:
    pieces: tuple[Piece, ...]
    group: str = GROUP_LATTICE
    alpha: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return self.pieces[0].window.dim if self.pieces else len(self.alpha)

    def vectors(self) -> np.ndarray:
        return np.array([p.vector for p in self.pieces]).reshape(-1, self.dim)


@dataclass(frozen=True)
class ApplyResult:
    image: tuple[float, ...] | None
    piece: int | None
    ambiguous: tuple[int, ...] = ()


@dataclass(frozen=True)
class PartitionReport:
    defect_source: float
    defect_overlap: float
    defect_target: float
    se_source: float
    se_overlap: float
    se_target: float
    samples: int
    seed: int
    verdict: Verdict
    reason: str = ""


# --- Construction ----------------------------------------------------------
def make_piecewise_translation(pieces, alpha=None) -> PiecewiseTranslation:
    """
    pieces: iterable of (window, translation). A translation (k, m) is read
    as k alpha + m when alpha is given, otherwise it is a raw vector.
    """
    out = []
    group = GROUP_LATTICE if alpha is not None else GROUP_RAW
    a = None if alpha is None else np.atleast_1d(np.asarray(alpha, dtype=float))
    for window, translation in pieces:
        lo, hi = window.bounds()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("piece regions must be bounded")
        if a is not None and isinstance(translation, (tuple, list)) and len(translation) == 2 \
                and isinstance(translation[0], (int, np.integer)):
            k, m = int(translation[0]), tuple(int(v) for v in np.atleast_1d(translation[1]))
            if len(m) != a.shape[0]:
                raise ValueError(f"translation label {translation} does not match alpha dimension")
            vec = k * a + np.array(m, dtype=float)
            out.append(Piece(window, (k, m), tuple(float(v) for v in vec)))
        else:
            vec = np.atleast_1d(np.asarray(translation, dtype=float))
            group = GROUP_RAW
            out.append(Piece(window, None, tuple(float(v) for v in vec)))
    return PiecewiseTranslation(tuple(out), group, () if a is None else tuple(float(v) for v in a))


def apply(pt: PiecewiseTranslation, x) -> ApplyResult:
    """Image of x under the piece containing it; ambiguity is reported, not raised."""
    y = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    hits = [i for i, p in enumerate(pt.pieces) if p.window.indicator(y)[0]]
    if not hits:
        return ApplyResult(None, None)
    if len(hits) > 1:
        return ApplyResult(None, None, tuple(hits))
    i = hits[0]
    image = y[0] + np.array(pt.pieces[i].vector)
    return ApplyResult(tuple(float(v) for v in image), i)


# --- Verification ----------------------------------------------------------
def _union_bounds(windows) -> tuple[np.ndarray, np.ndarray]:
    los, his = zip(*(w.bounds() for w in windows))
    return np.min(los, axis=0), np.max(his, axis=0)


def _stream_sizes(samples: int, streams: int) -> list[int]:
    base, extra = divmod(samples, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


class _Moments:
    """Running sums for a Monte Carlo mean and its standard error."""

    def __init__(self):
        self.n = 0
        self.total = 0.0
        self.total_sq = 0.0

    def add(self, values: np.ndarray) -> None:
        self.n += values.shape[0]
        self.total += float(np.sum(values))
        self.total_sq += float(np.sum(values * values))

    def estimate(self, volume: float) -> tuple[float, float]:
        mean = self.total / self.n
        var = max(self.total_sq / self.n - mean * mean, 0.0) * self.n / max(self.n - 1, 1)
        return volume * mean, volume * math.sqrt(var / self.n)


def verify_equidecomposition(A: Window, B: Window, pt: PiecewiseTranslation, samples: int,
                             seed: int = config.DEFAULT_SEED) -> PartitionReport:
    """
    Monte Carlo check that the pieces partition A and their translates
    partition B up to measure zero.

    PASS iff every defect is below 3 standard errors plus 1e-6 max(mes A, 1).
    """
    require(validate_positive_int(samples, "samples"))
    if samples < config.MIN_MC_SAMPLES:
        raise ValueError(f"samples must be at least {config.MIN_MC_SAMPLES}")
    mes_a, mes_b = A.measure(), B.measure()
    if abs(mes_a - mes_b) > config.ABS_TOL:
        reason = f"measures differ: mes A = {mes_a:.17g}, mes B = {mes_b:.17g}"
        logger.info("equidecomposition FAIL: %s", reason)
        nan = math.nan
        return PartitionReport(nan, nan, nan, nan, nan, nan, samples, seed, Verdict.FAIL, reason)

    pieces = [p.window for p in pt.pieces]
    vectors = pt.vectors()
    src_lo, src_hi = _union_bounds([A] + pieces)
    moved = [w.translate(v) for w, v in zip(pieces, vectors)]
    tgt_lo, tgt_hi = _union_bounds([B] + moved)
    src_vol = float(np.prod(src_hi - src_lo))
    tgt_vol = float(np.prod(tgt_hi - tgt_lo))

    src, overlap, tgt = _Moments(), _Moments(), _Moments()
    streams = np.random.SeedSequence(seed).spawn(config.MC_STREAMS)
    for child, size in zip(streams, _stream_sizes(samples, config.MC_STREAMS)):
        rng = np.random.default_rng(child)
        done = 0
        while done < size:
            n = min(config.MC_CHUNK, size - done)
            p = src_lo + (src_hi - src_lo) * rng.random((n, A.dim))
            q = tgt_lo + (tgt_hi - tgt_lo) * rng.random((n, A.dim))
            count = np.zeros(n, dtype=np.int64)
            count_t = np.zeros(n, dtype=np.int64)
            for w, v in zip(pieces, vectors):
                count += w.indicator(p)
                count_t += w.indicator(q - v)
            in_a = A.indicator(p)
            src.add((in_a != (count >= 1)).astype(float))
            overlap.add((count * (count - 1) / 2).astype(float))
            tgt.add(np.abs(count_t - B.indicator(q)).astype(float))
            done += n

    d_src, e_src = src.estimate(src_vol)
    d_ovl, e_ovl = overlap.estimate(src_vol)
    d_tgt, e_tgt = tgt.estimate(tgt_vol)
    slack = 1e-6 * max(mes_a, 1.0)
    failing = [
        name for name, d, e in (("source", d_src, e_src), ("overlap", d_ovl, e_ovl), ("target", d_tgt, e_tgt))
        if not d < 3 * e + slack
    ]
    verdict = Verdict.FAIL if failing else Verdict.PASS
    reason = f"defects above threshold: {', '.join(failing)}" if failing else ""
    logger.info("equidecomposition %s: source=%.3g overlap=%.3g target=%.3g (%d samples)",
                verdict.value, d_src, d_ovl, d_tgt, samples)
    return PartitionReport(d_src, d_ovl, d_tgt, e_src, e_ovl, e_tgt, samples, int(seed), verdict, reason)


# --- Assembly from Orbit Matchings -----------------------------------------
def _merge_runs(cells: list[tuple[int, ...]], lo: np.ndarray, hi: np.ndarray, raster: float) -> list[Box]:
    """Join cells adjacent along the last axis into boxes, clipped to [lo, hi]."""
    boxes = []
    cells = sorted(cells)
    i = 0
    while i < len(cells):
        start = cells[i]
        end = start
        while i + 1 < len(cells) and cells[i + 1][:-1] == start[:-1] and cells[i + 1][-1] == end[-1] + 1:
            i += 1
            end = cells[i]
        c_lo = lo + np.array(start, dtype=float) * raster
        c_hi = lo + (np.array(end, dtype=float) + 1.0) * raster
        boxes.append(Box.from_bounds(np.maximum(c_lo, lo), np.minimum(c_hi, hi)))
        i += 1
    return boxes


def pieces_from_orbit_matchings(wA: Window, wB: Window, alpha, x_grid, n_range, raster: float,
                                seed: int = config.DEFAULT_SEED) -> PiecewiseTranslation:
    """
    Aggregate orbit pairings over a grid of base points into raster pieces.

    A label (e, m) carried by fewer than LABEL_DROP_FRACTION of all matched
    pairs over the whole grid is dropped. Each raster cell of A's bounding
    box takes the label most of its orbit points were matched with, counted
    over every grid point. With x_grid None the grid is a scrambled Halton
    sample drawn from seed.
    """
    if abs(wA.measure() - wB.measure()) > config.ABS_TOL:
        raise OrbitError("windows must have equal measure")
    if raster <= 0:
        raise ValueError("raster must be positive")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if x_grid is None:
        x_grid = qmc.Halton(d=alpha.shape[0], scramble=True, seed=seed).random(config.ASSEMBLY_GRID_POINTS)
        logger.info("assembly grid: %d scrambled Halton points, seed %d", len(x_grid), seed)
    grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    runs = []
    for x in grid:
        enum = orbit_enumerate(wA, wB, alpha, x, n_range)
        spread = translation_spread(enum)
        a, _ = enum.pair_points()
        labels = [(int(e), tuple(int(v) for v in m)) for e, m in zip(spread.e, spread.m)]
        runs.append((a, labels))

    signatures = Counter(frozenset(labels) for _, labels in runs)
    if len(signatures) > 1:
        logger.info("label sets differ across %d grid points: %d distinct sets", len(runs), len(signatures))

    label_share = Counter(label for _, labels in runs for label in labels)
    total = sum(label_share.values())
    rare = {lab for lab, c in label_share.items() if c < config.LABEL_DROP_FRACTION * total}
    for lab in sorted(rare):
        logger.warning("dropping rare label %s (%d of %d matched pairs)", lab, label_share[lab], total)

    lo, hi = wA.bounds()
    votes = defaultdict(Counter)
    for a, labels in runs:
        cells = np.floor((a - lo) / raster).astype(np.int64)
        for cell, lab in zip(map(tuple, cells), labels):
            if lab not in rare:
                votes[cell][lab] += 1
    by_label = defaultdict(list)
    for cell, counter in votes.items():
        lab = max(counter.items(), key=lambda item: (item[1], item[0]))[0]
        by_label[lab].append(cell)

    pieces = []
    for lab in sorted(by_label):
        boxes = _merge_runs(by_label[lab], lo, hi, raster)
        window = boxes[0] if len(boxes) == 1 else WindowUnion(tuple(boxes), validate=False)
        vec = lab[0] * alpha + np.array(lab[1], dtype=float)
        pieces.append(Piece(window, lab, tuple(float(v) for v in vec), len(by_label[lab])))
        logger.info("label %s: %d cells, %d boxes", lab, len(by_label[lab]), len(boxes))
    return PiecewiseTranslation(tuple(pieces), GROUP_LATTICE, tuple(float(v) for v in alpha))


# --- Config ----------------------------------------------------------------
def decomposition_from_config(data: dict) -> PiecewiseTranslation:
    unknown = set(data) - {"alpha", "pieces"}
    if unknown:
        raise ValueError(f"unknown decomposition keys: {sorted(unknown)}")
    alpha = data.get("alpha")
    pieces = []
    for item in data["pieces"]:
        window = window_from_config(item["window"])
        if "vector" in item:
            pieces.append((window, tuple(float(v) for v in item["vector"])))
        else:
            pieces.append((window, (int(item["k"]), tuple(int(v) for v in item["m"]))))
    if alpha is None and any(isinstance(t[0], int) for _, t in pieces):
        raise ValueError("labelled pieces need alpha")
    return make_piecewise_translation(pieces, alpha)


def decomposition_to_config(pt: PiecewiseTranslation) -> dict:
    items = []
    for p in pt.pieces:
        if p.label is None:
            items.append({"window": window_to_config(p.window), "vector": list(p.vector)})
        else:
            items.append({"window": window_to_config(p.window), "k": p.label[0], "m": list(p.label[1])})
    out = {"pieces": items}
    if pt.alpha:
        out["alpha"] = list(pt.alpha)
    return out
