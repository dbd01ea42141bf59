"""Plain key-value run configuration.

Grammar: one ``key = value`` pair per line, ``#`` starts a comment,
blank lines ignored.  Lists are comma-separated.  All validation errors
are collected and reported together, with a nearest-key suggestion for
unknown keys.
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, field, fields as dataclass_fields

from .errors import ConfigurationError

COMMANDS = ("solve", "verify-identity", "norms", "energy", "sweep", "convergence-study")


@dataclass
class RunConfig:
    domain: str = "unit-square"
    resolution: int = 64
    bc: str = "sine"                      # sine | affine | zero | file:<path>
    epsilon: float = 0.05
    frequency: int = 1
    affine: tuple = (0.3, -0.2, 1.0)      # a1, a2, c for g0 = a1 x + a2 y + c
    field: str = "cap:2.0,1.0471975511965976"  # energy command target
    p: float = 4.0
    a: float = 0.25
    tol: float = 1e-10
    max_iter: int = 30
    damping: float = 1.0
    initial_guess: str = "biharmonic"
    levels: tuple = (16, 32, 64)
    betas: tuple = (0.0, 1.0, 2.0)
    epsilons: tuple = (0.01, 0.02, 0.05, 0.1)
    out: str = "."
    quiet: bool = False

    def polygon_vertices(self):
        """Vertex list for domain = polygon:x0,y0;x1,y1;... presets return None."""
        if not self.domain.startswith("polygon:"):
            return None
        chunks = self.domain[len("polygon:"):].split(";")
        verts = []
        for chunk in chunks:
            xy = chunk.split(",")
            verts.append((float(xy[0]), float(xy[1])))
        return verts


_PARSERS = {
    "domain": str,
    "resolution": int,
    "bc": str,
    "epsilon": float,
    "frequency": int,
    "affine": lambda s: tuple(float(v) for v in s.split(",")),
    "field": str,
    "p": float,
    "a": float,
    "tol": float,
    "max_iter": int,
    "damping": float,
    "initial_guess": str,
    "levels": lambda s: tuple(int(v) for v in s.split(",")),
    "betas": lambda s: tuple(float(v) for v in s.split(",")),
    "epsilons": lambda s: tuple(float(v) for v in s.split(",")),
    "out": str,
    "quiet": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigurationError with ALL problems."""
    values = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got '{line}'")
            continue
        key, _, val = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        val = val.strip()
        if key not in _PARSERS:
            hint = difflib.get_close_matches(key, _PARSERS.keys(), n=1)
            suffix = f"; nearest valid key: '{hint[0]}'" if hint else ""
            errors.append(f"line {lineno}: unknown key '{key}'{suffix}")
            continue
        try:
            values[key] = _PARSERS[key](val)
        except (ValueError, IndexError):
            errors.append(f"line {lineno}: could not parse value '{val}' for key '{key}'")

    cfg = RunConfig(**values)
    errors.extend(validate(cfg))
    if errors:
        raise ConfigurationError(errors)
    return cfg


def validate(cfg: RunConfig):
    """Range checks; messages cite the admissible ranges."""
    errors = []
    if cfg.resolution < 16:
        errors.append(f"resolution must be >= 16, got {cfg.resolution}")
    if any(lv < 16 for lv in cfg.levels):
        errors.append(f"every study level must be >= 16, got {cfg.levels}")
    if len(cfg.levels) < 3:
        errors.append(f"studies need at least 3 levels, got {len(cfg.levels)}")
    if not cfg.p > 2.0:
        errors.append(f"p = {cfg.p} rejected: the iteration needs p ∈ (2, ∞)")
    elif not (0.0 < cfg.a < 1.0 - 2.0 / cfg.p):
        errors.append(
            f"a = {cfg.a} rejected: the iteration needs a ∈ (0, 1 − 2/p) "
            f"= (0, {1.0 - 2.0 / cfg.p:.6g}) for p = {cfg.p}"
        )
    if not (cfg.tol > 0 and math.isfinite(cfg.tol)):
        errors.append(f"tol must be a positive finite number, got {cfg.tol}")
    if not (0.0 < cfg.damping <= 1.0):
        errors.append(f"damping must lie in (0, 1], got {cfg.damping}")
    if cfg.max_iter < 1:
        errors.append(f"max_iter must be >= 1, got {cfg.max_iter}")
    if not math.isfinite(cfg.epsilon):
        errors.append(f"epsilon must be finite, got {cfg.epsilon}")
    if cfg.frequency < 1:
        errors.append(f"frequency must be >= 1, got {cfg.frequency}")
    if cfg.initial_guess not in ("biharmonic", "zero"):
        errors.append(f"initial_guess must be 'biharmonic' or 'zero', got '{cfg.initial_guess}'")
    if len(cfg.affine) != 3:
        errors.append(f"affine needs exactly 3 numbers a1, a2, c, got {len(cfg.affine)}")

    known_domains = ("unit-square", "l-shape")
    if cfg.domain not in known_domains and not cfg.domain.startswith("polygon:"):
        errors.append(
            f"unknown domain '{cfg.domain}'; use one of {known_domains} or polygon:x0,y0;x1,y1;..."
        )
    if cfg.domain.startswith("polygon:"):
        try:
            verts = cfg.polygon_vertices()
            if len(verts) < 3:
                errors.append("polygon needs at least 3 vertices")
        except (ValueError, IndexError):
            errors.append(f"could not parse polygon vertices from '{cfg.domain}'")

    if not (cfg.bc in ("sine", "affine", "zero") or cfg.bc.startswith("file:")):
        errors.append(f"unknown bc '{cfg.bc}'; use sine | affine | zero | file:<path>")
    if not (cfg.field.startswith(("cap:", "sine:"))):
        errors.append(f"unknown field '{cfg.field}'; use cap:R,angle or sine:amplitude")
    else:
        try:
            parts = cfg.field.split(":", 1)[1].split(",")
            [float(v) for v in parts]
            if cfg.field.startswith("cap:") and len(parts) != 2:
                errors.append("field cap needs two numbers: cap:R,angle")
        except ValueError:
            errors.append(f"could not parse field spec '{cfg.field}'")

    if any(b <= -1 for b in cfg.betas):
        errors.append(f"every beta must satisfy beta > -1, got {cfg.betas}")
    eps = cfg.epsilons
    if any(e < 0 for e in eps) or any(b <= a for a, b in zip(eps, eps[1:])):
        errors.append(f"epsilons must be nonnegative and strictly increasing, got {eps}")
    return errors


def config_dict(cfg: RunConfig):
    out = {}
    for f in dataclass_fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
