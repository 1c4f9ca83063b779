"""Machine-readable run artifacts: JSON-lines, flat CSV, config echo.

Determinism contract: with a fixed config and seed the emitted bytes are
identical across runs and worker counts.  Floats are rendered with repr
(shortest round-trip form), JSON keys are sorted, CSV columns are sorted,
and all line endings are a single newline.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

__all__ = [
    "write_jsonl",
    "write_csv",
    "echo_config",
    "dump_config",
    "load_config",
    "parse_scalar",
    "get_schema",
]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def write_jsonl(path, records: list) -> None:
    with open(path, "w", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), sort_keys=True))
            fh.write("\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def write_csv(path, records: list, columns: list | None = None) -> None:
    if columns is None:
        keys = set()
        for rec in records:
            keys.update(rec.keys())
        columns = sorted(keys)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for rec in records:
            fh.write(",".join(_cell(rec.get(c)) for c in columns) + "\n")


def echo_config(config: dict) -> str:
    lines = [f"{k} = {_cell(v)}" for k, v in sorted(config.items())]
    return "\n".join(lines) + "\n"


def dump_config(path, config: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(echo_config(config))


def load_config(path) -> dict:
    """Flat `key = value` text; blank lines and # comments are skipped."""
    out: dict = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def parse_scalar(text: str):
    """Best-effort typed view of a config token."""
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low == "inf":
        return math.inf
    if low == "-inf":
        return -math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def get_schema(name: str) -> dict:
    ref = resources.files("gibbs_lsi").joinpath(f"schemas/{name}.json")
    return json.loads(ref.read_text())
