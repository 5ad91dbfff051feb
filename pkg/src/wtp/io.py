"""JSON/TOML ingestion and float formatting for reports."""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import BernoulliMeasure, CylinderPotential, SpecError, SpongeSpec, parse_digit_key

SIG_DIGITS = 12


def read_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"cannot parse {path}: {exc}") from exc


def spec_from_config(data: dict) -> tuple[SpongeSpec, np.ndarray | None]:
    """Sponge plus optional allowed-transition matrix from ``"forbidden"`` digit-key pairs."""
    spec = SpongeSpec.from_dict(data)
    forbidden = data.get("forbidden")
    if not forbidden:
        return spec, None
    allowed = np.ones((spec.n_digits, spec.n_digits), dtype=bool)
    for pair in forbidden:
        if len(pair) != 2:
            raise SpecError(f"forbidden transition {pair!r} is not a pair")
        src, dst = (spec.index_of(parse_digit_key(k) if isinstance(k, str) else k) for k in pair)
        allowed[src, dst] = False
    if not allowed.any(axis=1).all():
        raise SpecError("forbidden transitions leave a digit without successors")
    return spec, allowed


def load_spec(path: str | Path) -> tuple[SpongeSpec, np.ndarray | None]:
    return spec_from_config(read_config(path))


def load_potential(path: str | Path, spec: SpongeSpec) -> CylinderPotential:
    data = read_config(path)
    try:
        return CylinderPotential.from_mapping(spec, data.get("f", data))
    except (AttributeError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed potential in {path}: {exc}") from exc


def load_measure(path: str | Path, spec: SpongeSpec) -> BernoulliMeasure:
    data = read_config(path)
    try:
        return BernoulliMeasure.from_mapping(spec, data["p"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed measure in {path}: {exc}") from exc


def fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.{SIG_DIGITS}g}"


def round_floats(obj):
    """Recursively round floats to the report precision for JSON output."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [round_floats(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, sort_keys=True) + "\n"
