"""Result serialization: JSON reports and CSV field dumps.

JSON reports are deterministic for identical inputs except for the
``metadata.timestamp`` block, which groups all volatile values
(generation time, wall time).  Every number is finite or explicitly
null with a sibling ``*_reason`` string.
"""

from __future__ import annotations

import datetime
import json
import math
import platform
import warnings

import numpy as np
import scipy

from . import __version__
from .biharmonic import BoundaryData

SCHEMA_VERSION = "1"
FIELD_SCHEMA = "willmore-field-v1"
BOUNDARY_SCHEMA = "willmore-boundary-v1"


def sanitize(obj):
    """Replace non-finite numbers with null plus a reason string."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool):
                v = float(v) if isinstance(v, (float, np.floating)) else int(v)
                if isinstance(v, float) and not math.isfinite(v):
                    out[k] = None
                    out[f"{k}_reason"] = "non-finite value"
                    continue
            out[k] = sanitize(v)
        return out
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    return obj


def build_report(command, config_data, payload, status="ok", failure=None, wall_time=None):
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "status": status,
        "config": config_data,
        "result": payload,
        "metadata": {
            "versions": {
                "willmore": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "timestamp": {
                "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "wall_time_s": wall_time,
            },
        },
    }
    if failure is not None:
        report["failure"] = failure
    return sanitize(report)


def dump_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def export_field(fld, path, name="value"):
    """CSV dump of masked nodes: x, y, value per row."""
    X, Y = fld.domain.nodes()
    ii, jj = np.nonzero(fld.mask)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema={FIELD_SCHEMA}\n")
        fh.write(f"x,y,{name}\n")
        for i, j in zip(ii, jj):
            fh.write(f"{X[i, j]!r},{Y[i, j]!r},{fld.values[i, j]!r}\n")


def export_boundary(bc: BoundaryData, path):
    s = bc.domain.boundary_arclength
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema={BOUNDARY_SCHEMA}\n")
        fh.write("arclength,g0,g1\n")
        for k in range(len(s)):
            fh.write(f"{s[k]!r},{bc.g0[k]!r},{bc.g1[k]!r}\n")


def import_boundary(path, domain) -> BoundaryData:
    """Read (arclength, g0, g1) rows; resample if the count mismatches.

    Arclength must be strictly increasing; count mismatches are handled
    by periodic linear interpolation onto the grid's boundary arclengths,
    with a warning.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.lower().startswith("arclength"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 3 comma-separated values")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    if len(rows) < 4:
        raise ValueError("boundary file needs at least 4 samples")
    data = np.asarray(rows)
    s, g0, g1 = data[:, 0], data[:, 1], data[:, 2]
    if np.any(np.diff(s) <= 0):
        bad = int(np.flatnonzero(np.diff(s) <= 0)[0]) + 2
        raise ValueError(f"arclength must be strictly increasing (violated at data row {bad})")

    target = domain.boundary_arclength
    if len(s) == len(target) and np.allclose(s, target, atol=1e-12):
        return BoundaryData(domain, g0, g1)

    warnings.warn(
        f"boundary sample count {len(s)} does not match the grid's {len(target)}; "
        "resampling by periodic linear interpolation",
        stacklevel=2,
    )
    L = domain.boundary_length
    sp = np.concatenate([s, [s[0] + L]])
    g0p = np.concatenate([g0, [g0[0]]])
    g1p = np.concatenate([g1, [g1[0]]])
    tq = np.mod(target - s[0], L) + s[0]
    return BoundaryData(domain, np.interp(tq, sp, g0p), np.interp(tq, sp, g1p))
