"""Serialization of result envelopes to CSV and JSON."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict

from .config import OUTPUT_DIR_ENV
from .errors import ConfigError


def format_value(v) -> str:
    """17 significant digits for floats, so every double round-trips exactly."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float) or type(v).__module__ == "numpy":
        try:
            f = float(v)
        except (TypeError, ValueError):
            return str(v)
        if float(f).is_integer() and not isinstance(v, float) and abs(f) < 2 ** 53:
            return str(int(f))
        return "nan" if math.isnan(f) else f"{f:.17g}"
    return "" if v is None else str(v)


def to_csv(env) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(env.columns)
    for row in env.rows:
        w.writerow([format_value(row.get(c, "")) for c in env.columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return _jsonable(v.item())
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return None
        return float(f"{v:.17g}")
    return v


def to_json(env) -> str:
    doc = _jsonable(asdict(env))
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def resolve_output_path(path: str | None, task: str, fmt: str) -> str | None:
    """Explicit path wins; otherwise ``$NEGENT_OUTPUT_DIR/<task>.<fmt>``; otherwise stdout (None)."""
    if path and path != "-":
        return path
    if path == "-":
        return None
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir:
        return os.path.join(outdir, f"{task}.{fmt}")
    return None


def emit(env, fmt: str = "csv", path: str | None = None) -> str | None:
    """Write the envelope; returns the file written, or None when printed to stdout."""
    text = to_csv(env) if fmt == "csv" else to_json(env)
    target = resolve_output_path(path, env.task, fmt)
    if target is None:
        print(text, end="")
        return None
    try:
        os.makedirs(os.path.dirname(os.path.abspath(target)), exist_ok=True)
        with open(target, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write output {target}: {exc}") from exc
    return target
