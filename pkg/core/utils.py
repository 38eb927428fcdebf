# --- Utility Functions: Validation, Errors & Serialization ----------------
import hashlib
import json
import math
import re

import numpy as np


# --- Errors ----------------------------------------------------------------
class ConfigError(ValueError):
    """Malformed or missing configuration input."""


class LatticeError(ValueError):
    """Invalid lattice basis (rank, shape)."""


class GeneralPositionError(LatticeError):
    """The lattice violates a general-position condition."""


class WindowError(ValueError):
    """Invalid window data."""


class CoverageError(ValueError):
    """A query left the certified coverage interval of a patch."""


class OrbitError(ValueError):
    """Orbit enumeration preconditions failed."""


class TranslationError(ValueError):
    """A displacement could not be written as e*alpha + m."""


# --- Validation ------------------------------------------------------------
def validate_positive_int(value, field_name: str = "value") -> tuple[bool, str]:
    """
    Validate a strictly positive integer.
    Returns (is_valid, error_message)
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        return False, f"{field_name} must be an integer, got {type(value).__name__}"
    if value <= 0:
        return False, f"{field_name} must be positive"
    return True, ""


def validate_vector(values, field_name: str = "vector", dim: int | None = None) -> tuple[bool, str]:
    """
    Validate a finite real vector, optionally of a fixed dimension.
    Returns (is_valid, error_message)
    """
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as e:
        return False, f"{field_name} is not numeric: {str(e)}"
    if arr.ndim != 1:
        return False, f"{field_name} must be one-dimensional, got shape {arr.shape}"
    if dim is not None and arr.shape[0] != dim:
        return False, f"{field_name} must have {dim} entries, got {arr.shape[0]}"
    if not np.all(np.isfinite(arr)):
        return False, f"{field_name} must be finite"
    return True, ""


def validate_interval(interval, field_name: str = "range") -> tuple[bool, str]:
    """
    Validate an integer half-open interval (start, stop).
    Returns (is_valid, error_message)
    """
    if interval is None or len(interval) != 2:
        return False, f"{field_name} must be a pair (start, stop)"
    start, stop = interval
    for v in (start, stop):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            return False, f"{field_name} bounds must be integers"
    if stop < start:
        return False, f"{field_name} is reversed ({start} > {stop})"
    return True, ""


def validate_report_inputs(title: str, params: dict, lines: list) -> tuple[bool, str]:
    """
    Validate the pieces of a verdict report before rendering.
    Returns (is_valid, error_message)
    """
    if not title or not isinstance(title, str):
        return False, "Report title must be a non-empty string"
    if not isinstance(params, dict):
        return False, "Report parameters must be a mapping"
    if not lines:
        return False, "Report has no verdict lines"
    if not all(isinstance(line, str) for line in lines):
        return False, "Report lines must be strings"
    try:
        sanitized = sanitize_text_for_pdf("\n".join(lines)[:1000])
        if not sanitized:
            return False, "Text sanitization produced empty result"
    except Exception as e:
        return False, f"Text encoding error: {str(e)}"
    return True, ""


def require(check: tuple[bool, str], error_cls=ValueError) -> None:
    """Raise error_cls with the validator message when check failed."""
    is_valid, error = check
    if not is_valid:
        raise error_cls(error)


# --- Float & JSON Formatting -----------------------------------------------
def format_float(x: float) -> str:
    """17 significant digits, round-trip exact."""
    return format(float(x), ".17g")


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        inner = (",\n").join(pad + _encode(v, indent, level + 1) for v in obj)
        return "[\n" + inner + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted(obj.items())
        inner = (",\n").join(
            pad + json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in items
        )
        return "{\n" + inner + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj, indent: int = 2) -> str:
    """
    Deterministic JSON text: sorted keys, 17-digit floats, NaN/inf as null.
    Numpy scalars/arrays and str-valued enums are converted first.
    """
    return _encode(_canonical(obj), indent, 0) + "\n"


def sha256_digest(*parts) -> str:
    """SHA-256 over the given bytes/str parts, in order."""
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, str):
            part = part.encode("utf-8")
        h.update(part)
    return h.hexdigest()


# --- Text Sanitization -----------------------------------------------------
def sanitize_text_for_pdf(text: str) -> str:
    """
    Replace characters not supported by core PDF fonts (Latin-1)
    and add soft break opportunities to very long tokens so MultiCell can wrap.
    """
    if not text:
        return ""

    replacements = {
        "—": "-",
        "–": "-",
        "−": "-",
        "‘": "'",
        "’": "'",
        "“": '"',
        "”": '"',
        "…": "...",
        "\u00A0": " ",
        "≤": "<=",
        "≥": ">=",
        "≠": "!=",
        "×": "x",
        "∈": " in ",
        "∑": "sum",
        "∞": "inf",
        "α": "alpha",
        "β": "beta",
        "σ": "sigma",
        "χ": "chi",
        "Λ": "Lambda",
        "Γ": "Gamma",
        "ν": "nu",
        "ℤ": "Z",
        "ℝ": "R",
    }
    for src, dst in replacements.items():
        text = text.replace(src, dst)

    text = re.sub(r"(\S{60})(?=\S)", r"\1 ", text)

    return text.encode("latin-1", errors="replace").decode("latin-1")
