# --- Main Application File -------------------------------------------------
import argparse
import dataclasses
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

import config
from core.discrepancy import (
    classify_on_grid,
    default_grid,
    discrepancy_profile,
    pair_gap_profile,
    pair_gap_slope,
    uniformity_scan,
)
from core.equidecomp import (
    Verdict,
    decomposition_to_config,
    pieces_from_orbit_matchings,
    verify_equidecomposition,
)
from core.lattice import (
    LatticeBasis,
    SpecialFormLattice,
    check_general_position,
    default_q_max,
    lattice_to_config,
    to_special_form,
    transport_window,
)
from core.matching import (
    bounded_distance_match,
    build_instance,
    hall_check,
    minimal_bde_constant,
    orbit_enumerate,
    translation_spread,
)
from core.modelset import arithmetic_progression, generate_patch, generate_patch_general
from core.pdf_generation import create_verdict_report_pdf
from core.text_exports import (
    build_manifest,
    create_text_report,
    matching_json,
    patch_csv,
    profile_csv,
    uniformity_csv,
    write_text,
)
from core.utils import ConfigError, canonical_json, format_float
from core.window import window_to_config

logger = logging.getLogger("app")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class CommandResult:
    status: int
    artifacts: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)


# --- Input Helpers ---------------------------------------------------------
def _lattice(run):
    if run.lattice is None:
        raise ConfigError(f"{run.command} needs --lattice")
    return config.load_lattice(run.lattice)


def _window(run, which: str = "window"):
    path = getattr(run, which)
    if path is None:
        raise ConfigError(f"{run.command} needs --{which}")
    return config.load_window(path)


def _alpha(run) -> np.ndarray:
    """--alpha if given, otherwise the alpha of a special-form --lattice."""
    if run.params.get("alpha") is not None:
        return np.array(run.params["alpha"], dtype=float)
    if run.lattice is not None:
        lat = config.load_lattice(run.lattice)
        if isinstance(lat, SpecialFormLattice):
            return np.array(lat.alpha)
    raise ConfigError(f"{run.command} needs --alpha or a special-form --lattice")


def _x(run, d: int) -> np.ndarray:
    x = run.params.get("x")
    if x is None:
        return np.zeros(d)
    if len(x) != d:
        raise ConfigError(f"--x needs {d} coordinates")
    return np.array(x, dtype=float)


def _patch(lat, w, nmax: int):
    if isinstance(lat, SpecialFormLattice):
        return generate_patch(lat, w, (0, nmax))
    return generate_patch_general(lat, w, ([0.0] * lat.m, [float(nmax)] * lat.m))


def _covolume(lat) -> float:
    basis = lat.basis() if isinstance(lat, SpecialFormLattice) else lat
    return abs(float(np.linalg.det(basis.matrix)))


# --- Commands --------------------------------------------------------------
def cmd_gen(run) -> CommandResult:
    lat, w = _lattice(run), _window(run)
    nmax = run.params["nmax"]
    patch = _patch(lat, w, nmax)
    meta = {
        "lattice": lattice_to_config(lat),
        "window": window_to_config(w),
        "n_range": patch.n_range,
        "coverage": patch.coverage,
        "points": len(patch),
        "points_inclusive": patch.counts()[0],
        "points_exclusive": patch.counts()[1],
        "flagged": patch.flagged,
        "min_gap": patch.min_gap,
    }
    lines = [f"{len(patch)} points, coverage [{patch.coverage[0]:.6g}, {patch.coverage[1]:.6g})"]
    return CommandResult(EXIT_OK, {"patch.csv": patch_csv(patch), "patch.json": canonical_json(meta)}, lines)


def cmd_brs(run) -> CommandResult:
    w, alpha = _window(run), _alpha(run)
    nmax, split = run.params["nmax"], run.params["split"]
    verdict = classify_on_grid(w, alpha, nmax, split)
    profile = discrepancy_profile(w, alpha, _x(run, alpha.shape[0]), nmax)
    lines = [
        f"evidence: {verdict.evidence.value}",
        f"max running max at split {split}: {max(verdict.max_at_split):.6g}",
        f"max running max at {nmax}: {max(verdict.max_at_end):.6g}",
    ]
    artifacts = {"profile.csv": profile_csv(profile), "brs.json": canonical_json(dataclasses.asdict(verdict))}
    return CommandResult(EXIT_OK, artifacts, lines)


def cmd_pairgap(run) -> CommandResult:
    w, w2, alpha = _window(run), _window(run, "window2"), _alpha(run)
    nmax = run.params["nmax"]
    profile = pair_gap_profile(w, w2, alpha, _x(run, alpha.shape[0]), nmax)
    summary = {
        "N_max": nmax,
        "max_abs_gap": float(profile.running_max[-1]),
        "slope": pair_gap_slope(profile),
        "measure_difference": w.measure() - w2.measure(),
    }
    lines = [f"max |S_N| = {summary['max_abs_gap']:.6g}", f"slope = {summary['slope']:.6g}"]
    return CommandResult(EXIT_OK, {"pairgap.csv": profile_csv(profile), "pairgap.json": canonical_json(summary)}, lines)


def cmd_bde(run) -> CommandResult:
    lat, w = _lattice(run), _window(run)
    nmax = run.params["nmax"]
    pa = _patch(lat, w, nmax)
    if pa.p1.ndim != 1:
        raise ConfigError("bde needs physical dimension 1")
    if run.window2 is not None:
        pb = _patch(lat, _window(run, "window2"), nmax)
    else:
        density = w.measure() / _covolume(lat)
        lo, hi = pa.coverage
        pb = arithmetic_progression(
            1.0 / density, 0.0, (math.floor(lo * density) - 1, math.ceil(hi * density) + 1)
        )
    K, slack = run.params["K"], run.params.get("slack")
    summary = {"K": K, "slack": K if slack is None else slack}
    if run.params.get("binary_search_K"):
        k_min = minimal_bde_constant(pa, pb, K, run.params["step"], slack)
        summary["minimal_K"] = k_min
        if k_min is None:
            return CommandResult(EXIT_FAIL, {"bde.json": canonical_json(summary)},
                                 [f"no zero-deficiency matching up to K={K}"])
        K = k_min
    result = bounded_distance_match(pa, pb, K, slack)
    summary.update(deficiency=result.deficiency, max_displacement=result.max_displacement,
                   exempt=result.exempt)
    lines = [f"K = {K:.6g}: deficiency {result.deficiency}, max displacement {result.max_displacement:.6g}"]
    status = EXIT_OK if result.deficiency == 0 else EXIT_FAIL
    return CommandResult(status, {"matching.json": matching_json(result), "bde.json": canonical_json(summary)}, lines)


def cmd_hall(run) -> CommandResult:
    if run.instance is None:
        raise ConfigError("hall needs --instance")
    data = config.load_instance(run.instance)
    inst = build_instance(data["left"], data["right"], data["F"], data.get("alpha"), data.get("tolerance", 0.0))
    verdict = hall_check(inst, run.params["side"])
    lines = [f"Hall's condition ({verdict.side}): {'holds' if verdict.holds else 'violated'}"]
    if not verdict.holds:
        lines.append(f"witness {list(verdict.witness)} has {len(verdict.neighbors)} neighbours")
    status = EXIT_OK if verdict.holds else EXIT_FAIL
    return CommandResult(status, {"hall.json": canonical_json(dataclasses.asdict(verdict))}, lines)


def cmd_special_form(run) -> CommandResult:
    basis = _lattice(run)
    if not isinstance(basis, LatticeBasis):
        raise ConfigError("special-form needs a general basis, not a special-form lattice")
    q_max = run.params.get("q_max") or default_q_max(basis.n + 1)
    report = check_general_position(basis, q_max)
    if not report.certified:
        payload = {"certified": False, "bound_checked": report.bound_checked,
                   "violations": report.violations, "conditions": report.conditions}
        lines = [f"not in general position: {list(report.violations)}"]
        return CommandResult(EXIT_FAIL, {"special_form.json": canonical_json(payload)}, lines)
    T, lat = to_special_form(basis, q_max)
    payload = {"certified": True, "a": T.a, "B": T.B, "lattice": lattice_to_config(lat),
               "bound_checked": lat.independence_bound}
    if run.window is not None:
        payload["window"] = window_to_config(transport_window(T, _window(run)))
    lines = [f"a = {format_float(T.a)}", f"alpha = {list(lat.alpha)}", f"beta = {list(lat.beta)}"]
    return CommandResult(EXIT_OK, {"special_form.json": canonical_json(payload)}, lines)


def cmd_orbit(run) -> CommandResult:
    wA, wB, alpha = _window(run), _window(run, "window2"), _alpha(run)
    nmax = run.params["nmax"]
    enum = orbit_enumerate(wA, wB, alpha, _x(run, alpha.shape[0]), (0, nmax))
    spread = translation_spread(enum)
    residual = enum.displacement_residuals()
    summary = {
        "E": spread.E,
        "K1_obs": spread.K1_obs,
        "K2_obs": spread.K2_obs,
        "pairs": int(enum.j.shape[0]),
        "q_fiber": enum.q_fiber,
        "flagged": enum.flagged,
        "max_residual": float(residual.max(initial=0.0)),
        "max_s_deviation": float(np.max(np.abs(enum.s_deviation()))),
    }
    d = alpha.shape[0]
    header = "j,e," + ",".join(f"m_{i + 1}" for i in range(d)) + "\n"
    rows = "".join(
        f"{int(j)},{int(e)}," + ",".join(str(int(v)) for v in m) + "\n"
        for j, e, m in zip(enum.j, spread.e, spread.m)
    )
    lines = [f"E = {list(spread.E)}", f"K1 = {spread.K1_obs:.6g}, K2 = {spread.K2_obs:.6g}"]
    return CommandResult(EXIT_OK, {"orbit.json": canonical_json(summary), "orbit_pairs.csv": header + rows}, lines)


def _partition_payload(report) -> dict:
    return dataclasses.asdict(report)


def cmd_equi_verify(run) -> CommandResult:
    A, B = _window(run), _window(run, "window2")
    if run.decomposition is None:
        raise ConfigError("equi-verify needs --decomposition")
    pt = config.load_decomposition(run.decomposition)
    report = verify_equidecomposition(A, B, pt, run.params["samples"], run.seed)
    lines = [f"verdict: {report.verdict.value}"] + ([report.reason] if report.reason else [])
    status = EXIT_OK if report.verdict == Verdict.PASS else EXIT_FAIL
    return CommandResult(status, {"partition.json": canonical_json(_partition_payload(report))}, lines)


def cmd_equi_build(run) -> CommandResult:
    A, B, alpha = _window(run), _window(run, "window2"), _alpha(run)
    pt = pieces_from_orbit_matchings(
        A, B, alpha, default_grid(alpha.shape[0]), (0, run.params["nmax"]), run.params["raster"], run.seed
    )
    report = verify_equidecomposition(A, B, pt, run.params["samples"], run.seed)
    lines = [f"{len(pt.pieces)} pieces", f"verdict: {report.verdict.value}"]
    status = EXIT_OK if report.verdict == Verdict.PASS else EXIT_FAIL
    artifacts = {
        "decomposition.json": canonical_json(decomposition_to_config(pt)),
        "partition.json": canonical_json(_partition_payload(report)),
    }
    return CommandResult(status, artifacts, lines)


def cmd_uniformity(run) -> CommandResult:
    w = _window(run)
    gens = run.params.get("generators")
    if gens is None:
        alpha = _alpha(run)
        if alpha.shape[0] != 1:
            raise ConfigError("uniformity needs --generators when d > 1")
        gens = [[float(alpha[0])]]
    else:
        d = w.dim
        if len(gens) != d * d:
            raise ConfigError(f"--generators needs {d * d} values")
        gens = np.array(gens, dtype=float).reshape(d, d)
    report = uniformity_scan(w, gens, run.params["kmax"], run.params["samples"], run.seed)
    summary = {"c_estimate": report.c_estimate, "k0_estimate": report.k0_estimate, "seed": report.seed}
    lines = [f"c = {report.c_estimate:.6g}, k0 = {report.k0_estimate}"]
    return CommandResult(EXIT_OK, {"uniformity.csv": uniformity_csv(report), "uniformity.json": canonical_json(summary)}, lines)


COMMAND_HANDLERS = {
    "gen": cmd_gen,
    "brs": cmd_brs,
    "pairgap": cmd_pairgap,
    "bde": cmd_bde,
    "hall": cmd_hall,
    "special-form": cmd_special_form,
    "orbit": cmd_orbit,
    "equi-verify": cmd_equi_verify,
    "equi-build": cmd_equi_build,
    "uniformity": cmd_uniformity,
}


# --- Argument Parsing ------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    common.add_argument("--pdf", action="store_true", help="also write a PDF verdict report")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--lattice")
    common.add_argument("--window")
    common.add_argument("--alpha", type=float, nargs="+")
    common.add_argument("--x", type=float, nargs="+", help="base point on the torus")

    parser = argparse.ArgumentParser(prog="app.py", description="Cut-and-project sets and bounded remainder sets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a model-set patch")
    p.add_argument("--nmax", type=int, default=1000)

    p = sub.add_parser("brs", parents=[common], help="bounded remainder evidence on the default grid")
    p.add_argument("--nmax", type=int, default=100_000)
    p.add_argument("--split", type=int, default=1000)

    p = sub.add_parser("pairgap", parents=[common], help="gap profile of two windows")
    p.add_argument("--window2", required=True)
    p.add_argument("--nmax", type=int, default=100_000)

    p = sub.add_parser("bde", parents=[common], help="bounded distance matching")
    p.add_argument("--window2")
    p.add_argument("--nmax", type=int, default=1000)
    p.add_argument("--K", type=float, default=2.0)
    p.add_argument("--slack", type=float)
    p.add_argument("--binary-search-K", dest="binary_search_K", action="store_true")
    p.add_argument("--step", type=float, default=config.BDE_STEP)

    p = sub.add_parser("hall", parents=[common], help="Hall's condition with witness")
    p.add_argument("--instance", required=True)
    p.add_argument("--side", choices=("left", "right"), default="left")

    p = sub.add_parser("special-form", parents=[common], help="reduce a basis to special form")
    p.add_argument("--q-max", dest="q_max", type=int)

    p = sub.add_parser("orbit", parents=[common], help="orbit pairing of two windows")
    p.add_argument("--window2", required=True)
    p.add_argument("--nmax", type=int, default=10_000)

    p = sub.add_parser("equi-verify", parents=[common], help="verify an equidecomposition")
    p.add_argument("--window2", required=True)
    p.add_argument("--decomposition", required=True)
    p.add_argument("--samples", type=int, default=1_000_000)

    p = sub.add_parser("equi-build", parents=[common], help="assemble pieces from orbit pairings")
    p.add_argument("--window2", required=True)
    p.add_argument("--nmax", type=int, default=10_000)
    p.add_argument("--raster", type=float, default=2.0 ** -10)
    p.add_argument("--samples", type=int, default=200_000)

    p = sub.add_parser("uniformity", parents=[common], help="uniformity scan over orbit blocks")
    p.add_argument("--generators", type=float, nargs="+", help="d*d values, row-major")
    p.add_argument("--kmax", type=int, default=128)
    p.add_argument("--samples", type=int, default=64)
    return parser


# --- Output ----------------------------------------------------------------
def _write_report(run, result: CommandResult) -> str:
    title = f"{run.command} verdict report"
    params = {k: v for k, v in run.params.items()}
    params["seed"] = run.seed
    try:
        data = create_verdict_report_pdf(title, params, result.lines)
        path = os.path.join(run.out, "report.pdf")
        with open(path, "wb") as f:
            f.write(data)
    except Exception as e:
        logger.warning("PDF report failed, writing text fallback: %s", e)
        path = write_text(os.path.join(run.out, "report.txt"), create_text_report(title, params, result.lines))
    return os.path.basename(path)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config.configure_logging(args.verbose)
    try:
        run = config.build_run_config(args)
        result = COMMAND_HANDLERS[run.command](run)
        os.makedirs(run.out, exist_ok=True)
        outputs = []
        for name, text in sorted(result.artifacts.items()):
            write_text(os.path.join(run.out, name), text)
            outputs.append(name)
        if run.pdf:
            outputs.append(_write_report(run, result))
        write_text(os.path.join(run.out, "manifest.json"), canonical_json(build_manifest(run, outputs)))
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    for line in result.lines:
        logger.info(line)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
