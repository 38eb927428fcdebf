# --- Artifact Writers & Text Report Fallback -------------------------------
import csv
import io
import os

import config
from .utils import canonical_json, format_float, sha256_digest


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_text(path: str, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


# --- CSV -------------------------------------------------------------------
def patch_csv(patch) -> str:
    """n, m_1..m_d, p1 (one column per physical axis), p2_1..p2_n, flag_boundary."""
    d = patch.m.shape[1]
    n_int = patch.p2.shape[1]
    p1 = patch.p1.reshape(len(patch), -1)
    p1_cols = ["p1"] if p1.shape[1] == 1 else [f"p1_{i + 1}" for i in range(p1.shape[1])]
    header = ["n"] + [f"m_{i + 1}" for i in range(d)] + p1_cols + [f"p2_{i + 1}" for i in range(n_int)]
    header.append("flag_boundary")
    rows = (
        [int(patch.n[i])]
        + [int(v) for v in patch.m[i]]
        + [float(v) for v in p1[i]]
        + [float(v) for v in patch.p2[i]]
        + [int(bool(patch.near_boundary[i]))]
        for i in range(len(patch))
    )
    return _csv_text(header, rows)


def profile_csv(profile) -> str:
    rows = (
        (N + 1, float(profile.values[N]), float(profile.running_max[N]))
        for N in range(profile.N_max)
    )
    return _csv_text(["N", "D", "running_max"], rows)


def uniformity_csv(report) -> str:
    rows = (
        (int(k), int(c), float(r))
        for k, c, r in zip(report.ks, report.min_counts, report.ratios)
    )
    return _csv_text(["k", "min_count", "ratio"], rows)


# --- JSON ------------------------------------------------------------------
def matching_json(result) -> str:
    payload = {
        "pairs": [list(p) for p in result.pairs],
        "deficiency": result.deficiency,
        "witness": None if result.witness is None else list(result.witness),
        "witness_side": result.witness_side,
        "max_displacement": result.max_displacement,
    }
    return canonical_json(payload)


def build_manifest(run, outputs: list[str]) -> dict:
    """Command, version, seed, parameters and a digest over inputs and parameters."""
    inputs = {}
    parts = [run.command, canonical_json(run.params), str(run.seed)]
    for name in ("lattice", "window", "window2", "decomposition", "instance"):
        path = getattr(run, name)
        if path is None:
            continue
        with open(path, "rb") as f:
            data = f.read()
        inputs[name] = {"path": os.path.basename(path), "sha256": sha256_digest(data)}
        parts.append(data)
    return {
        "command": run.command,
        "version": config.VERSION,
        "seed": run.seed,
        "params": run.params,
        "inputs": inputs,
        "digest": sha256_digest(*parts),
        "outputs": sorted(outputs),
    }


# --- Plain Text Report -----------------------------------------------------
def create_text_report(title: str, params: dict, lines: list[str]) -> str:
    """Plain text verdict report; used when the PDF cannot be produced."""
    param_text = "\n".join(f"{k}: {v}" for k, v in sorted(params.items())) or "none"
    body = "\n".join(lines)
    return f"""{title.upper()}
version {config.VERSION}

PARAMETERS:
{'='*80}

{param_text}

{'='*80}
VERDICT:
{'='*80}

{body}

{'='*80}
Note: verdicts are numerical evidence at the stated truncations, not proofs.
"""
