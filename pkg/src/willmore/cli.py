"""Command-line interface.

    willmore --command solve --config run.cfg --out results/

Commands: solve | verify-identity | norms | energy | sweep |
convergence-study.  Exit codes: 0 success, 1 diverged or failed study,
2 configuration error.  Each run writes report.json (plus CSV field
dumps for solve/energy) under --out and prints a short summary.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .biharmonic import BoundaryData, max_modulus_ratio
from .config import COMMANDS, RunConfig, config_dict, parse_config, validate
from .driver import IterationConfig, iterate
from .errors import ConfigurationError, WillmoreError
from .fields import ScalarField
from .geometry import (
    area_element,
    conformal_energy,
    gauss_curvature,
    mean_curvature,
    willmore_energy,
)
from .grid import GridDomain, disk, l_shape, unit_square
from .norms import (
    NormParams,
    dirichlet_trace_norm,
    distance_field,
    parameter_check,
    weighted_lp_norm,
    weighted_sobolev_norm,
)
from .reports import build_report, dump_report, export_field, import_boundary
from .studies import (
    CUBIC_SADDLE,
    SINE_BUMP,
    check_reformulation_identity,
    manufactured_biharmonic,
    small_data_sweep,
)

ORDER_BAND = (1.8, 2.5)


def build_domain(cfg: RunConfig, resolution=None):
    res = resolution or cfg.resolution
    if cfg.domain == "unit-square":
        return unit_square(res)
    if cfg.domain == "l-shape":
        return l_shape(res)
    return GridDomain(cfg.polygon_vertices(), 1.0 / res)


def build_bc(cfg: RunConfig, domain) -> BoundaryData:
    if cfg.bc == "zero":
        return BoundaryData.zero(domain)
    if cfg.bc == "affine":
        a1, a2, c = cfg.affine
        return BoundaryData.affine(domain, (a1, a2), c)
    if cfg.bc == "sine":
        return BoundaryData.sine_slope(domain, cfg.epsilon, cfg.frequency)
    return import_boundary(cfg.bc[len("file:"):], domain)


def _iteration_config(cfg: RunConfig) -> IterationConfig:
    return IterationConfig(
        params=NormParams(cfg.p, cfg.a),
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        damping=cfg.damping,
        initial_guess=cfg.initial_guess,
    )


def _field_from_spec(cfg: RunConfig, spec: str):
    kind, args = spec.split(":", 1)
    parts = [float(v) for v in args.split(",")]
    if kind == "cap":
        radius, angle = parts
        dom = disk(radius * math.sin(angle), cfg.resolution)
        u = ScalarField.from_function(
            dom, lambda x, y: np.sqrt(radius ** 2 - x ** 2 - y ** 2))
        return dom, u
    amplitude = parts[0]
    dom = build_domain(cfg)
    u = ScalarField.from_function(
        dom, lambda x, y: amplitude * np.sin(np.pi * x) * np.sin(np.pi * y), where="domain")
    return dom, u


# -- command implementations -------------------------------------------------

def cmd_solve(cfg: RunConfig, outdir: Path):
    dom = build_domain(cfg)
    bc = build_bc(cfg, dom)
    u, report = iterate(bc, _iteration_config(cfg))

    export_field(u, outdir / "solution.csv", "u")
    for name, fld in (
        ("mean_curvature", mean_curvature(u)),
        ("gauss_curvature", gauss_curvature(u)),
        ("area_element", area_element(u)),
    ):
        export_field(fld, outdir / f"{name}.csv", name)

    payload = {
        "convergence": report.to_dict(),
        "energies": {
            "willmore": willmore_energy(u),
            "conformal": conformal_energy(u),
        },
        "boundary": {
            "max_modulus_ratio": _safe_ratio(bc),
            "trace_norm": dirichlet_trace_norm(bc, NormParams(cfg.p, cfg.a)).__dict__,
        },
        "parameter_check": parameter_check(cfg.p, cfg.a, dom.lipschitz_constant).to_dict(),
    }
    lines = [
        f"solve: {report.status} after {report.iterations} iteration(s)",
        f"  weak residual {report.residual_weak:.3e}, strong residual {report.residual_strong:.3e}",
        f"  willmore energy {payload['energies']['willmore']:.6g}",
    ]
    return (0 if report.converged else 1), payload, lines


def _safe_ratio(bc):
    try:
        return max_modulus_ratio(bc)
    except WillmoreError:
        return None


def cmd_verify_identity(cfg: RunConfig, outdir: Path):
    studies = [check_reformulation_identity(spec, cfg.levels)
               for spec in (SINE_BUMP, CUBIC_SADDLE)]
    ok = True
    lines = []
    for st in studies:
        # gate: shrinking discrepancy, finest-pair order inside the band
        decreasing = all(a > b for a, b in zip(st.errors, st.errors[1:]))
        last = st.orders[-1]
        good = st.exact or (
            decreasing and last is not None and ORDER_BAND[0] <= last <= ORDER_BAND[1]
        )
        ok &= bool(good)
        orders = [o for o in st.orders if o is not None]
        lines.append(
            f"identity[{st.meta['field']}]: errors {['%.3e' % e for e in st.errors]} "
            f"orders {['%.2f' % o for o in orders]} -> {'ok' if good else 'FAILED'}"
        )
    payload = {"studies": [st.to_dict() for st in studies], "order_band": list(ORDER_BAND)}
    return (0 if ok else 1), payload, lines


def cmd_norms(cfg: RunConfig, outdir: Path):
    dom = build_domain(cfg)
    d = distance_field(dom)
    one = ScalarField(dom, np.ones((dom.nx, dom.ny)), dom.domain_mask)
    params = NormParams(cfg.p, cfg.a)
    bc = build_bc(cfg, dom)
    u = ScalarField.from_function(dom, lambda x, y: x, where="domain")
    weight_integrals = {
        str(beta): weighted_lp_norm(one, 1.0, beta, d) for beta in cfg.betas
    }
    payload = {
        "distance_weight_integrals": weight_integrals,
        "sobolev_norm_of_x": weighted_sobolev_norm(u, 2, params, d),
        "trace_norm": dirichlet_trace_norm(bc, params).__dict__,
        "parameter_check": parameter_check(cfg.p, cfg.a, dom.lipschitz_constant).to_dict(),
    }
    lines = [f"norms: int d^beta -> {weight_integrals}"]
    return 0, payload, lines


def cmd_energy(cfg: RunConfig, outdir: Path):
    dom, u = _field_from_spec(cfg, cfg.field)
    for name, fld in (
        ("mean_curvature", mean_curvature(u)),
        ("gauss_curvature", gauss_curvature(u)),
    ):
        export_field(fld, outdir / f"{name}.csv", name)
    payload = {
        "field": cfg.field,
        "willmore_energy": willmore_energy(u),
        "conformal_energy": conformal_energy(u),
    }
    lines = [
        f"energy[{cfg.field}]: willmore {payload['willmore_energy']:.6g}, "
        f"conformal {payload['conformal_energy']:.6g}",
    ]
    return 0, payload, lines


def cmd_sweep(cfg: RunConfig, outdir: Path):
    report = small_data_sweep(cfg.epsilons, cfg.resolution, _iteration_config(cfg),
                              cfg.frequency)
    ok = report.first_failure is None
    lines = [
        f"sweep eps={e.epsilon:g}: {e.status} (q_geo={e.q_geometric_mean})"
        for e in report.entries
    ]
    lines.append("sweep: all converged" if ok else f"sweep: first failure at eps = {report.first_failure:g}")
    return (0 if ok else 1), {"sweep": report.to_dict()}, lines


def cmd_convergence_study(cfg: RunConfig, outdir: Path):
    rep = manufactured_biharmonic(cfg.levels)
    orders = [o for o in rep.study.orders if o is not None]
    ok = bool(orders) and all(ORDER_BAND[0] <= o <= ORDER_BAND[1] for o in orders)
    ok &= rep.divergence_path_gap <= 1e-9
    lines = [
        f"manufactured solve: errors {['%.3e' % e for e in rep.study.errors]} "
        f"orders {['%.2f' % o for o in orders]}",
        f"divergence-path gap {rep.divergence_path_gap:.3e}",
        "convergence-study: ok" if ok else "convergence-study: FAILED",
    ]
    return (0 if ok else 1), {"manufactured": rep.to_dict(), "order_band": list(ORDER_BAND)}, lines


_DISPATCH = {
    "solve": cmd_solve,
    "verify-identity": cmd_verify_identity,
    "norms": cmd_norms,
    "energy": cmd_energy,
    "sweep": cmd_sweep,
    "convergence-study": cmd_convergence_study,
}


def run(command, cfg: RunConfig) -> int:
    """Programmatic entry point; writes outputs under cfg.out."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        code, payload, lines = _DISPATCH[command](cfg, outdir)
        failure = None
        status = "ok" if code == 0 else "failed"
    except WillmoreError as exc:
        code, payload, lines = 1, {}, [f"{command}: error: {exc}"]
        failure = {"error": str(exc), "type": type(exc).__name__}
        status = "failed"
    wall = time.perf_counter() - start
    report = build_report(command, config_dict(cfg), payload, status, failure, wall)
    dump_report(report, outdir / "report.json")
    if not cfg.quiet:
        for line in lines:
            print(line)
        print(f"report: {outdir / 'report.json'}")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="willmore",
        description="Clamped Willmore boundary-value laboratory on uniform grids",
    )
    parser.add_argument("--config", help="path to a key = value configuration file")
    parser.add_argument("--command", default="solve", help=f"one of {', '.join(COMMANDS)}")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--resolution", type=int, help="grid resolution override")
    parser.add_argument("--epsilon", type=float, help="boundary amplitude override")
    parser.add_argument("--quiet", action="store_true", help="suppress the stdout summary")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    args = parser.parse_args(argv)

    try:
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = RunConfig()
            problems = validate(cfg)
            if problems:
                raise ConfigurationError(problems)
        if args.out is not None:
            cfg.out = args.out
        if args.resolution is not None:
            cfg.resolution = args.resolution
        if args.epsilon is not None:
            cfg.epsilon = args.epsilon
        if args.quiet:
            cfg.quiet = True
        problems = validate(cfg)
        if problems:
            raise ConfigurationError(problems)
        if args.command not in _DISPATCH:
            raise ConfigurationError(
                [f"unknown command '{args.command}'; use one of {', '.join(COMMANDS)}"]
            )
    except (ConfigurationError, OSError) as exc:
        errors = exc.errors if isinstance(exc, ConfigurationError) else [str(exc)]
        for err in errors:
            print(f"configuration error: {err}", file=sys.stderr)
        try:
            outdir = Path(args.out or ".")
            outdir.mkdir(parents=True, exist_ok=True)
            report = build_report(
                args.command, {}, {}, status="failed",
                failure={"errors": errors, "type": "ConfigurationError"},
            )
            dump_report(report, outdir / "report.json")
        except OSError:
            pass
        return 2

    return run(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
