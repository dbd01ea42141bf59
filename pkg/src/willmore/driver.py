"""Picard iteration for the clamped fourth-order graph problem.

Each step freezes the nonlinear fluxes at the previous iterate v and
solves the linear clamped problem

    lap^2 w = D_i b1^i[v] + D^2_ij b2^ij[v],   w = g0, dw/dnu = g1,

optionally damped to (1 - theta) v + theta w.  The driver monitors the
three iteration-set quantities per iterate (sup |grad u|, the
distance-weighted L^1 Hessian norm, and the full weighted Sobolev norm),
successive-difference norms in the weighted Sobolev metric, contraction
factors, and final strong/weak residuals of the fourth-order equation.
The contraction-theory constants are unknown, so bounds are reported,
never enforced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .biharmonic import BoundaryData, SparseSystem, cached_system, divergence_rhs, solve
from .errors import ConfigurationError, WillmoreError
from .fields import ScalarField, cross_centered, diff1_centered, diff2_centered, erode
from .geometry import b1_terms, b2_terms, hessian, willmore_operator_divergence
from .norms import (
    NormParams,
    distance_field,
    sup_gradient,
    weighted_l1_hessian,
    weighted_sobolev_norm,
)

EPS_FLOOR = 100 * np.finfo(float).eps


@dataclass
class IterationConfig:
    """Exponents, stopping rule, and policies of the Picard scheme.

    The exponent pair must satisfy the fixed-point regime p > 2,
    0 < a < 1 - 2/p; the convergence metric is the full weighted Sobolev
    norm of the iterate difference.
    """

    params: NormParams = None
    tol: float = 1e-10
    max_iter: int = 30
    damping: float = 1.0
    initial_guess: str = "biharmonic"  # biharmonic | zero | field
    initial_field: ScalarField = None
    blowup_gradient: float = 10.0
    blowup_growth: float = 1e6

    def __post_init__(self):
        if self.params is None:
            self.params = NormParams(4.0, 0.25)
        problems = []
        p, a = self.params.p, self.params.a
        if not p > 2.0:
            problems.append(f"p must lie in (2, inf) for the iteration, got {p}")
        elif not (0.0 < a < 1.0 - 2.0 / p):
            problems.append(f"a must lie in (0, 1 - 2/p) = (0, {1.0 - 2.0 / p:.6g}), got {a}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            problems.append(f"tolerance must be positive, got {self.tol}")
        if not (0.0 < self.damping <= 1.0):
            problems.append(f"damping must lie in (0, 1], got {self.damping}")
        if self.max_iter < 1:
            problems.append(f"max_iter must be at least 1, got {self.max_iter}")
        if self.initial_guess not in ("biharmonic", "zero", "field"):
            problems.append(f"unknown initial guess policy '{self.initial_guess}'")
        if self.initial_guess == "field" and self.initial_field is None:
            problems.append("initial_guess='field' needs initial_field")
        if problems:
            raise ConfigurationError(problems)

    @property
    def interpolation_exponents(self):
        """Proof-internal exponents (q_aux, gamma); metadata only."""
        p, a = self.params.p, self.params.a
        q = 0.5 * (2.0 / (1.0 - a) + p)
        gamma = (p / q) * (q - 1.0) / (p - 1.0)
        return q, gamma


@dataclass
class IterationState:
    """Per-iteration ledger of the monitored iteration-set quantities."""

    grad_sup: list = dataclass_field(default_factory=list)
    hessian_l1_weighted: list = dataclass_field(default_factory=list)
    sobolev: list = dataclass_field(default_factory=list)
    diff_norms: list = dataclass_field(default_factory=list)
    diverged: bool = False

    def record(self, entry):
        self.grad_sup.append(entry[0])
        self.hessian_l1_weighted.append(entry[1])
        self.sobolev.append(entry[2])

    @property
    def iterations(self):
        return len(self.grad_sup)

    def finite(self):
        rows = self.grad_sup + self.hessian_l1_weighted + self.sobolev + self.diff_norms
        return all(math.isfinite(v) for v in rows)


@dataclass
class ContractionSummary:
    factors: list
    q_max: float = None
    q_geometric_mean: float = None
    skipped: int = 0
    insufficient_history: bool = False
    non_contractive: bool = False

    def to_dict(self):
        return {
            "factors": list(self.factors),
            "q_max": self.q_max,
            "q_geometric_mean": self.q_geometric_mean,
            "skipped": self.skipped,
            "insufficient_history": self.insufficient_history,
            "non_contractive": self.non_contractive,
        }


@dataclass
class ConvergenceReport:
    status: str  # converged | max_iterations | diverged
    iterations: int
    diff_norms: list
    ledger: dict
    contraction: ContractionSummary
    residual_weak: float
    residual_strong: float
    grad_bound_violated: bool
    notes: list
    metadata: dict

    @property
    def converged(self):
        return self.status == "converged"

    def to_dict(self):
        return {
            "status": self.status,
            "converged": self.converged,
            "iterations": self.iterations,
            "diff_norms": list(self.diff_norms),
            "ledger": {k: list(v) for k, v in self.ledger.items()},
            "contraction": self.contraction.to_dict(),
            "residual_weak": self.residual_weak,
            "residual_strong": self.residual_strong,
            "grad_bound_violated": self.grad_bound_violated,
            "notes": list(self.notes),
            "metadata": dict(self.metadata),
        }


def apply_G(v: ScalarField, bc: BoundaryData, cfg: IterationConfig,
            system: SparseSystem | None = None) -> ScalarField:
    """One frozen-coefficient solve: lap^2 w = div-form fluxes of v."""
    if system is None:
        system = cached_system(bc.domain)
    grad_max = sup_gradient(v)
    if grad_max >= 1.0:
        warnings.warn(
            f"iterate leaves the small-slope regime: sup |grad v| = {grad_max:.3g} >= 1",
            RuntimeWarning,
            stacklevel=2,
        )
    b1 = b1_terms(v)
    b2 = b2_terms(v)
    dom = bc.domain
    if not (b1.mask | ~dom.domain_mask).all() or not (b2.mask | ~dom.domain_mask).all():
        raise WillmoreError("non-finite flux terms: iterate left the graphical regime")
    rhs = divergence_rhs(b1, b2)
    w = solve(system, rhs, bc)
    if cfg.damping < 1.0:
        blended = (1.0 - cfg.damping) * v.values + cfg.damping * w.values
        w = ScalarField(dom, blended, w.mask & v.mask)
    return w


def initial_iterate(bc: BoundaryData, cfg: IterationConfig,
                    system: SparseSystem | None = None) -> ScalarField:
    if system is None:
        system = cached_system(bc.domain)
    if cfg.initial_guess == "zero":
        return ScalarField.zeros(bc.domain)
    if cfg.initial_guess == "field":
        return cfg.initial_field
    return solve(system, None, bc)


def iterate(bc: BoundaryData, cfg: IterationConfig | None = None):
    """Run the Picard scheme; returns (final iterate, ConvergenceReport).

    Divergence (gradient blow-up, norm growth, or non-finite fluxes) is a
    reported outcome, not an exception; linear-solver failures propagate.
    """
    cfg = cfg or IterationConfig()
    dom = bc.domain
    system = cached_system(dom)
    d = distance_field(dom)
    params = cfg.params

    def ledger_entry(u):
        return (
            sup_gradient(u),
            weighted_l1_hessian(u, params.a, d),
            weighted_sobolev_norm(u, 2, params, d),
        )

    state = IterationState()
    notes = []
    u = initial_iterate(bc, cfg, system)
    state.record(ledger_entry(u))
    status = "max_iterations"

    for _ in range(cfg.max_iter):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                u_next = apply_G(u, bc, cfg, system)
        except WillmoreError as exc:
            state.diverged = True
            status = "diverged"
            notes.append(str(exc))
            break
        diff = ScalarField(dom, u_next.values - u.values, u.mask & u_next.mask)
        dnorm = weighted_sobolev_norm(diff, 2, params, d)
        state.diff_norms.append(dnorm)
        entry = ledger_entry(u_next)
        state.record(entry)
        u = u_next

        if not state.finite():
            state.diverged = True
            status = "diverged"
            notes.append("non-finite ledger entry")
            break
        if entry[0] > cfg.blowup_gradient:
            state.diverged = True
            status = "diverged"
            notes.append(
                f"gradient blow-up: sup |grad u| = {entry[0]:.3g} > {cfg.blowup_gradient}"
            )
            break
        ref = max(state.sobolev[0], EPS_FLOOR)
        if entry[2] > cfg.blowup_growth * ref:
            state.diverged = True
            status = "diverged"
            notes.append(f"norm growth beyond {cfg.blowup_growth:.1e} x initial")
            break
        if dnorm < cfg.tol:
            status = "converged"
            break

    contraction = contraction_report(state)
    if status == "converged":
        weak, strong = willmore_residual(u)
    else:
        weak, strong = float("nan"), float("nan")

    grad_flag = bool(state.grad_sup and state.grad_sup[0] <= 1.0
                     and any(g > 1.0 for g in state.grad_sup))
    if grad_flag:
        notes.append("iterate left sup |grad u| <= 1 despite starting inside")

    q_aux, gamma = cfg.interpolation_exponents
    report = ConvergenceReport(
        status=status,
        iterations=len(state.diff_norms),
        diff_norms=list(state.diff_norms),
        ledger={
            "grad_sup": state.grad_sup,
            "hessian_l1_weighted": state.hessian_l1_weighted,
            "sobolev": state.sobolev,
        },
        contraction=contraction,
        residual_weak=weak,
        residual_strong=strong,
        grad_bound_violated=grad_flag,
        notes=notes,
        metadata={
            "p": params.p,
            "a": params.a,
            "s": params.s,
            "tolerance": cfg.tol,
            "damping": cfg.damping,
            "interpolation_q": q_aux,
            "interpolation_gamma": gamma,
            "constants_note": "iteration-set bounds are monitored only; the "
                              "contraction constants are not computable",
        },
    )
    return u, report


def contraction_report(state: IterationState) -> ContractionSummary:
    """Successive-difference ratios q_k; needs at least 3 iterates."""
    diffs = state.diff_norms
    if state.iterations < 3 or len(diffs) < 2:
        return ContractionSummary(factors=[], insufficient_history=True)
    factors = []
    skipped = 0
    for prev, cur in zip(diffs[:-1], diffs[1:]):
        if prev < EPS_FLOOR:
            skipped += 1
            continue
        factors.append(cur / prev)
    if not factors:
        return ContractionSummary(factors=[], skipped=skipped, insufficient_history=True)
    q_max = max(factors)
    geo = float(np.exp(np.mean(np.log(np.maximum(factors, 1e-300)))))
    return ContractionSummary(
        factors=factors,
        q_max=q_max,
        q_geometric_mean=geo,
        skipped=skipped,
        non_contractive=q_max >= 1.0,
    )


def test_field_basis(domain, count=4):
    """Fixed set of smooth interior bumps used by the weak residual.

    Mollifier bumps exp(-1/(1 - t^2)) placed greedily at deep-interior
    nodes, radii capped three cells inside the boundary.
    """
    d = distance_field(domain).values
    X, Y = domain.nodes()
    h = domain.h
    available = domain.interior_mask.copy()
    fields = []
    for _ in range(count):
        if not available.any():
            break
        masked = np.where(available, d, -np.inf)
        i, j = np.unravel_index(np.argmax(masked), masked.shape)
        cx, cy = X[i, j], Y[i, j]
        r = max(d[i, j] - 3 * h, 3 * h)
        t2 = ((X - cx) ** 2 + (Y - cy) ** 2) / r ** 2
        vals = np.zeros_like(X)
        inside = t2 < 1.0
        vals[inside] = np.exp(-1.0 / (1.0 - t2[inside]))
        fields.append(ScalarField(domain, vals, domain.domain_mask.copy()))
        available &= np.hypot(X - cx, Y - cy) > 0.7 * r
    return fields


def willmore_residual(u: ScalarField, basis=None):
    """(weak, strong) residuals of the fourth-order equation at u.

    weak: max over the bump basis of |sum(lap u lap phi + b1 . Dphi
    - b2 : D^2 phi) h^2| / ||phi||; strong: masked-interior max of the
    divergence-form operator.
    """
    dom = u.domain
    h = dom.h
    if basis is None:
        basis = test_field_basis(dom)

    op = willmore_operator_divergence(u)
    strong_mask = op.mask & dom.interior_mask
    strong = float(np.max(np.abs(op.values[strong_mask]))) if strong_mask.any() else 0.0

    hess_u = hessian(u)
    lap_u = hess_u.xx + hess_u.yy
    b1 = b1_terms(u)
    b2 = b2_terms(u)
    area = dom.cell_area

    weak = 0.0
    for phi in basis:
        px, _ = diff1_centered(phi.values, phi.mask, 0, h)
        py, _ = diff1_centered(phi.values, phi.mask, 1, h)
        pxx, _ = diff2_centered(phi.values, phi.mask, 0, h)
        pxy, _ = cross_centered(phi.values, phi.mask, h)
        pyy, _ = diff2_centered(phi.values, phi.mask, 1, h)
        lap_phi = pxx + pyy
        total = np.sum(lap_u * lap_phi) + np.sum(b1.values[0] * px + b1.values[1] * py) \
            - np.sum(b2.xx * pxx + 2 * b2.xy * pxy + b2.yy * pyy)
        total *= area
        scale = math.sqrt(
            float(np.sum(phi.values ** 2 + px ** 2 + py ** 2
                         + pxx ** 2 + 2 * pxy ** 2 + pyy ** 2)) * area
        )
        if scale > 0:
            weak = max(weak, abs(total) / scale)
    return weak, strong
