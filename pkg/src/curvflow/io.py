"""Reproducible CSV/JSON output with an embedded run configuration."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

__all__ = ["RunConfig", "fmt", "sanitize", "write_csv", "write_json", "read_csv"]


@dataclass(frozen=True)
class RunConfig:
    command: str
    speed: str = "E(1)"
    n: int = 2
    alpha: float = 1.0
    init: str = ""
    grid: int = 256
    t_end: float | None = None
    seed: int = 0
    out: str = "run"
    extend: str = "continue"
    kind: str = ""

    def canonical(self) -> str:
        """One-line ``key=value`` form in field order; reals with 17 digits."""
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float):
                v = fmt(v)
            elif v is None:
                v = "none"
            parts.append(f"{f.name}={v}")
        return "curvflow " + " ".join(parts)

    def to_dict(self):
        return asdict(self)


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def sanitize(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite reals to strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if obj is None or isinstance(obj, str):
        return obj
    if callable(obj):
        return None
    return str(obj)


def write_csv(path, header, rows, config: RunConfig | None = None, comments=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if config is not None:
        lines.append("# " + config.canonical())
    lines.extend("# " + c for c in comments)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, obj: dict, config: RunConfig | None = None) -> Path:
    """JSON file whose first key is the canonical configuration line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config": config.canonical()} if config is not None else {}
    body.update(sanitize(obj))
    path.write_text(json.dumps(body, indent=2, allow_nan=False) + "\n")
    return path


def read_csv(path):
    """(header, data array, comment lines) of a file written by ``write_csv``."""
    comments, header, rows = [], None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    return header, np.array(rows), comments
