# --- Configuration and Setup -----------------------------------------------
import json
import logging
import os
from dataclasses import dataclass, field

VERSION = "0.4.0"

# --- Numeric Tolerances ----------------------------------------------------
ABS_TOL = 1e-9             # generic float comparisons
BOUNDARY_SNAP = 1e-12      # boundary points within this distance follow the half-open rule
BOUNDARY_EPS = 1e-9        # margin below which patch points are flagged
KERNEL_TOL = 1e-12         # |p2(v)| below this counts as a kernel vector
OVERLAP_TOL = 1e-9         # Chebyshev radius above this means two pieces overlap

# --- Search Bounds ---------------------------------------------------------
RELATION_BUDGET = 10_000   # integer relation vectors scanned per certification
KERNEL_SEARCH_RADIUS = 50
E_SCAN_BOUND = 1000
MAX_ENUMERATION = 20_000_000
MAX_CONDITION = 1e12

# --- Sampling --------------------------------------------------------------
GRID_POINTS_PER_AXIS = 17
DEFAULT_SEED = 0
MC_STREAMS = 8
MIN_MC_SAMPLES = 10_000
MC_CHUNK = 250_000

# --- Classification --------------------------------------------------------
BRS_TOL = 1e-2             # running-max creep allowed by the bounded verdict
BDE_STEP = 1e-3
LABEL_DROP_FRACTION = 0.01
ASSEMBLY_GRID_POINTS = 17  # base points drawn when no assembly grid is given

COMMANDS = (
    "gen",
    "brs",
    "pairgap",
    "bde",
    "hall",
    "special-form",
    "orbit",
    "equi-verify",
    "equi-build",
    "uniformity",
)

logger = logging.getLogger(__name__)


# --- Logging ---------------------------------------------------------------
def configure_logging(verbosity: int = 0) -> None:
    """Install one stream handler on the root logger; 0=WARNING, 1=INFO, 2+=DEBUG."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)


# --- File Loaders ----------------------------------------------------------
def _read_json(path: str, what: str) -> dict:
    from core.utils import ConfigError

    if not path:
        raise ConfigError(f"{what} file not given")
    if not os.path.isfile(path):
        raise ConfigError(f"{what} file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{what} file is not valid JSON ({path}): {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"{what} file must hold a JSON object")
    return data


def load_lattice(path: str):
    """
    Load a lattice config.

    Returns either a LatticeBasis ({"m", "n", "basis"}) or a
    SpecialFormLattice ({"special_form": {"alpha", "beta"}}).
    """
    from core.lattice import lattice_from_config
    from core.utils import ConfigError

    data = _read_json(path, "lattice")
    try:
        return lattice_from_config(data)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"lattice config invalid: {e}")


def load_window(path: str):
    """Load a window config (box, parallelepiped, simplices or union)."""
    from core.utils import ConfigError
    from core.window import window_from_config

    data = _read_json(path, "window")
    try:
        return window_from_config(data)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"window config invalid: {e}")


def load_decomposition(path: str):
    """Load a piecewise translation: {"alpha": [...], "pieces": [{"window", "k", "m"}...]}."""
    from core.equidecomp import decomposition_from_config
    from core.utils import ConfigError

    data = _read_json(path, "decomposition")
    try:
        return decomposition_from_config(data)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"decomposition config invalid: {e}")


def load_instance(path: str) -> dict:
    """
    Load a bipartite instance: {"left": [...], "right": [...], "F": [...],
    "alpha": [...] (optional), "tolerance": float (optional)}.
    Points and translations are numbers (1-D) or lists.
    """
    from core.utils import ConfigError

    data = _read_json(path, "instance")
    for key in ("left", "right", "F"):
        if key not in data or not isinstance(data[key], list):
            raise ConfigError(f"instance config invalid: '{key}' must be a list")
    unknown = set(data) - {"left", "right", "F", "alpha", "tolerance"}
    if unknown:
        raise ConfigError(f"instance config invalid: unknown keys {sorted(unknown)}")
    return data


# --- Run Configuration -----------------------------------------------------
@dataclass(frozen=True)
class RunConfig:
    command: str
    out: str
    lattice: str | None = None
    window: str | None = None
    window2: str | None = None
    decomposition: str | None = None
    instance: str | None = None
    seed: int = DEFAULT_SEED
    params: dict = field(default_factory=dict)
    pdf: bool = False


_FILE_ARGS = ("lattice", "window", "window2", "decomposition", "instance")


def build_run_config(args) -> RunConfig:
    """Turn parsed CLI arguments into a RunConfig; referenced files must exist."""
    from core.utils import ConfigError

    if args.command not in COMMANDS:
        raise ConfigError(f"unknown command: {args.command}")
    files = {}
    for name in _FILE_ARGS:
        path = getattr(args, name, None)
        if path is not None and not os.path.isfile(path):
            raise ConfigError(f"{name} file not found: {path}")
        files[name] = path
    skip = set(_FILE_ARGS) | {"command", "out", "seed", "pdf", "verbose", "func"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    seed = args.seed if getattr(args, "seed", None) is not None else DEFAULT_SEED
    return RunConfig(
        command=args.command,
        out=args.out,
        seed=int(seed),
        params=params,
        pdf=bool(getattr(args, "pdf", False)),
        **files,
    )
