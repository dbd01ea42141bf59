"""Distance-weighted interior norms and boundary trace norms.

Interior norms weight derivatives by powers of the distance to the
polygon boundary and are evaluated with the same composite midpoint
quadrature the energies use.  Boundary norms combine an arclength L^p
part with a double-sum fractional seminorm whose kernel uses the ambient
chordal distance |x - y| (the two conventions are mixed on purpose,
following each formula as written).  All discrete norms are absolutely
homogeneous by construction, and the interior ones are weighted l^p
norms of linear samplings of the field, so the triangle inequality is
structural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .fields import ScalarField, cell_mean, integration_cells
from .geometry import gradient, hessian
from .grid import GridDomain


@dataclass(frozen=True)
class NormParams:
    """Exponent pair (p, a) with derived boundary smoothness s = 1 - a - 1/p.

    p is the integrability exponent, a the distance-weight power per unit
    of p (the interior weight is d^(a p)).  The admissible box is
    p in (1, inf), a in (-1/p, 1 - 1/p), which makes s land in (0, 1).
    """

    p: float
    a: float

    def __post_init__(self):
        problems = []
        if not (1.0 < self.p < math.inf):
            problems.append(f"p must lie in (1, inf), got {self.p}")
        else:
            if not (-1.0 / self.p < self.a < 1.0 - 1.0 / self.p):
                problems.append(
                    f"a must lie in (-1/p, 1 - 1/p) = "
                    f"({-1.0 / self.p:.4g}, {1.0 - 1.0 / self.p:.4g}), got {self.a}"
                )
        if problems:
            raise ParameterError("; ".join(problems))

    @property
    def s(self):
        return 1.0 - self.a - 1.0 / self.p


@dataclass
class DistanceField:
    """Exact distance to the polygon boundary, zero on boundary nodes."""

    domain: GridDomain
    values: np.ndarray

    @property
    def mask(self):
        return self.domain.domain_mask


def distance_field(domain: GridDomain) -> DistanceField:
    """Pointwise minimum over all boundary edges (exact, not marched)."""
    return DistanceField(domain, domain.node_distance().copy())


# -- interior quadrature norms ------------------------------------------------

def weighted_lp_norm(f: ScalarField, p, beta, d: DistanceField) -> float:
    """(int |f|^p d^beta dx)^(1/p) by midpoint quadrature at cell centers.

    beta > -1 is required for integrability.  Boundary nodes (d = 0)
    enter only through corner-mean interpolation; for beta < 0 the
    missing boundary ring contributes O(h^(1+beta)) to the continuum
    integral, which refines away.
    """
    if beta <= -1.0:
        raise ParameterError(f"weight power must satisfy beta > -1, got {beta}")
    if p < 1.0:
        raise ParameterError(f"integrability exponent must satisfy p >= 1, got {p}")
    return _cell_norm([f.values], f.mask, f.domain, p, beta, d) ** (1.0 / p)


def _cell_norm(value_arrays, mask, domain, p, beta, d):
    """Sum of cell contributions of |.|^p d^beta over the quadrature cells."""
    cells = integration_cells(domain, mask)
    dc = cell_mean(d.values)[cells]
    weight = dc ** beta if beta != 0 else np.ones_like(dc)
    total = 0.0
    for vals in value_arrays:
        vc = np.abs(cell_mean(vals)[cells])
        total += float(np.sum(vc ** p * weight) * domain.cell_area)
    return total


def weighted_sobolev_norm(u: ScalarField, m, params: NormParams, d: DistanceField) -> float:
    """( sum_{|alpha| <= m} ||D^alpha u||^p_{L^p(d^{ap})} )^(1/p), m <= 2."""
    if m not in (0, 1, 2):
        raise ParameterError(f"derivative order m must be 0, 1 or 2, got {m}")
    arrays = [u.values]
    mask = u.mask.copy()
    if m >= 1:
        g = gradient(u)
        arrays += [g.values[0], g.values[1]]
        mask &= g.mask
    if m >= 2:
        hess = hessian(u)
        arrays += [hess.xx, hess.xy, hess.yy]
        mask &= hess.mask
    total = _cell_norm(arrays, mask, u.domain, params.p, params.a * params.p, d)
    return total ** (1.0 / params.p)


def weighted_l1_hessian(u: ScalarField, a, d: DistanceField) -> float:
    """int |D^2 u|_F d^a dx, the Hessian ledger quantity of the iteration set."""
    hess = hessian(u)
    return _cell_norm([hess.frobenius()], hess.mask, u.domain, 1.0, a, d)


def sup_gradient(u: ScalarField) -> float:
    g = gradient(u)
    return float(np.max(g.magnitude()[g.mask])) if g.mask.any() else 0.0


# -- boundary fields -----------------------------------------------------------

def tangential_gradient(bc) -> np.ndarray:
    """Arclength derivative of g0 along the boundary polyline.

    Centered in arclength away from polygon vertices; at vertices the two
    one-sided edge derivatives are averaged and the node stays flagged via
    ``domain.boundary_is_corner``.
    """
    dom = bc.domain
    f = bc.g0
    s = dom.boundary_arclength
    n = len(f)
    if n < 4:
        raise ParameterError("tangential gradient needs at least 4 boundary samples")
    L = dom.boundary_length
    fp = np.roll(f, -1)
    fm = np.roll(f, 1)
    dp = (np.roll(s, -1) - s) % L
    dm = (s - np.roll(s, 1)) % L
    dp[dp == 0] = L
    dm[dm == 0] = L
    out = (dm ** 2 * fp - dp ** 2 * fm + (dp ** 2 - dm ** 2) * f) / (dp * dm * (dp + dm))

    corners = np.flatnonzero(dom.boundary_is_corner)
    for k in corners:
        fwd = _one_sided(f, s, L, k, +1)
        bwd = _one_sided(f, s, L, k, -1)
        vals = [v for v in (fwd, bwd) if v is not None]
        if vals:
            out[k] = float(np.mean(vals))
    return out


def _one_sided(f, s, L, k, direction):
    n = len(f)
    k1 = (k + direction) % n
    k2 = (k + 2 * direction) % n
    d1 = (s[k1] - s[k]) % L if direction > 0 else (s[k] - s[k1]) % L
    d2 = (s[k2] - s[k1]) % L if direction > 0 else (s[k1] - s[k2]) % L
    if d1 <= 0 or d2 <= 0:
        return None
    # second-order one-sided on (possibly) nonuniform spacing
    a = -(2 * d1 + d2) / (d1 * (d1 + d2))
    b = (d1 + d2) / (d1 * d2)
    c = -d1 / (d2 * (d1 + d2))
    return direction * (a * f[k] + b * f[k1] + c * f[k2])


def boundary_gradient_field(bc) -> np.ndarray:
    """Reconstructed boundary gradient nu g1 + tangent g0', shape (n, 2).

    At polygon vertices the normal is ambiguous; there the two one-sided
    tangential derivatives along the meeting edges determine the full
    gradient (a 2x2 solve), which reproduces constant gradients exactly.
    """
    dom = bc.domain
    tg = tangential_gradient(bc)
    out = dom.boundary_normal * bc.g1[:, None] + dom.boundary_tangent * tg[:, None]

    f, s, L = bc.g0, dom.boundary_arclength, dom.boundary_length
    n = len(f)
    for k in np.flatnonzero(dom.boundary_is_corner):
        t_next = dom.boundary_tangent[(k + 1) % n]
        t_prev = dom.boundary_tangent[(k - 1) % n]
        det = t_next[0] * t_prev[1] - t_next[1] * t_prev[0]
        if abs(det) < 1e-9:
            continue  # straight pseudo-corner: keep the generic formula
        d_next = _one_sided(f, s, L, k, +1)
        d_prev = _one_sided(f, s, L, k, -1)
        if d_next is None or d_prev is None:
            continue
        mat = np.array([[t_next[0], t_next[1]], [t_prev[0], t_prev[1]]])
        out[k] = np.linalg.solve(mat, np.array([d_next, d_prev]))
    return out


# -- boundary norms -------------------------------------------------------------

def _pair_geometry(domain):
    x, y, w = domain.boundary_x, domain.boundary_y, domain.boundary_ds
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    dist = np.hypot(dx, dy)
    cutoff = np.maximum(w[:, None], w[None, :])
    keep = dist >= cutoff
    np.fill_diagonal(keep, False)
    return dist, w, keep


def _value_differences(values):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.abs(values[:, None] - values[None, :])
    diff = values[:, None, :] - values[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def besov_seminorm(domain, values, s, p) -> float:
    """Double-sum fractional seminorm with one-panel diagonal cutoff.

    ( sum_{|x-y| >= panel} |f(x)-f(y)|^p / |x-y|^(1+sp) dS_x dS_y )^(1/p);
    chordal |x - y|, arclength panel weights dS.
    """
    if not (0.0 < s < 1.0):
        raise ParameterError(f"smoothness must satisfy s in (0, 1), got {s}")
    if not (1.0 < p < math.inf):
        raise ParameterError(f"exponent must satisfy p in (1, inf), got {p}")
    dist, w, keep = _pair_geometry(domain)
    fd = _value_differences(values)
    kernel = np.zeros_like(dist)
    kernel[keep] = fd[keep] ** p / dist[keep] ** (1.0 + s * p)
    total = float(np.sum(kernel * w[:, None] * w[None, :]))
    return total ** (1.0 / p)


def boundary_lp_norm(domain, values, p) -> float:
    values = np.asarray(values, dtype=float)
    mag = np.abs(values) if values.ndim == 1 else np.linalg.norm(values, axis=-1)
    return float(np.sum(mag ** p * domain.boundary_ds) ** (1.0 / p))


def besov_norm(domain, values, s, p) -> float:
    return boundary_lp_norm(domain, values, p) + besov_seminorm(domain, values, s, p)


@dataclass
class TraceNormReport:
    total: float
    g0_norm: float
    gradient_norm: float
    gradient_sup: float


def dirichlet_trace_norm(bc, params: NormParams) -> TraceNormReport:
    """Norm of the clamped pair: ||g0||_B + ||nu g1 + tangent g0'||_B.

    Also reports the sup norm of the reconstructed boundary gradient,
    the quantity the smallness hypotheses are stated in.
    """
    dom = bc.domain
    s, p = params.s, params.p
    g0n = besov_norm(dom, bc.g0, s, p)
    bg = boundary_gradient_field(bc)
    bgn = besov_norm(dom, bg, s, p)
    sup = float(np.max(np.hypot(bg[:, 0], bg[:, 1]))) if len(bg) else 0.0
    return TraceNormReport(total=g0n + bgn, g0_norm=g0n, gradient_norm=bgn, gradient_sup=sup)


def holder_norm(domain, values, alpha) -> float:
    """sup |f| plus the largest sampled difference quotient |df| / |dx|^alpha.

    A sampled lower bound of the continuum norm; nondecreasing under
    boundary refinement.
    """
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"exponent must satisfy alpha in (0, 1], got {alpha}")
    values = np.asarray(values, dtype=float)
    x, y = domain.boundary_x, domain.boundary_y
    dist = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
    fd = _value_differences(values)
    pos = dist > 0
    quotient = float(np.max(fd[pos] / dist[pos] ** alpha)) if pos.any() else 0.0
    mag = np.abs(values) if values.ndim == 1 else np.linalg.norm(values, axis=-1)
    return float(np.max(mag)) + quotient


# -- parameter validation --------------------------------------------------------

@dataclass
class ValidityReport:
    """Which hypothesis regimes the exponent pair (p, a) satisfies."""

    p: float
    a: float
    s: float | None
    base_range_ok: bool
    fixed_point_ok: bool
    lipschitz_constant: float | None
    lipschitz_regime: str
    holder_regime: str
    messages: list = field(default_factory=list)

    def to_dict(self):
        return {
            "p": self.p,
            "a": self.a,
            "s": self.s,
            "base_range_ok": self.base_range_ok,
            "fixed_point_ok": self.fixed_point_ok,
            "lipschitz_constant": self.lipschitz_constant,
            "lipschitz_regime": self.lipschitz_regime,
            "holder_regime": self.holder_regime,
            "messages": list(self.messages),
        }


def parameter_check(p, a, lipschitz_constant=None) -> ValidityReport:
    """Classify (p, a) against the exponent hypotheses; never raises.

    The Lipschitz-domain regime depends on an unknowable constant C(M)
    (only that it exists for Lipschitz constant <= M), so it is reported
    as not checkable, with the inequalities displayed.
    """
    messages = []
    base_ok = (1.0 < p < math.inf) and (-1.0 / p < a < 1.0 - 1.0 / p) if p > 1 else False
    s = 1.0 - a - 1.0 / p if p > 1 else None
    if not base_ok:
        messages.append(
            "base weighted-norm range violated: need p in (1, inf) and a in (-1/p, 1 - 1/p)"
        )

    fixed_ok = True
    if not p > 2.0:
        fixed_ok = False
        messages.append(f"fixed-point regime needs p in (2, inf); got p = {p}")
    elif not (0.0 < a < 1.0 - 2.0 / p):
        fixed_ok = False
        messages.append(
            f"fixed-point regime needs a in (0, 1 - 2/p) = (0, {1.0 - 2.0 / p:.6g}); got a = {a}"
        )

    mtxt = f"{lipschitz_constant:.6g}" if lipschitz_constant is not None else "M"
    lip = (
        "not checkable: requires p in (2, 2 + C(M)) and a in (0, 1 - 2/p) ∩ (0, C(M)) "
        f"for an unknown constant C(M) > 0 depending on the domain Lipschitz constant M = {mtxt}"
    )
    if s is not None and fixed_ok:
        hold = (
            f"conditional: admissible for C^(1+alpha) boundary data whenever alpha > s = {s:.6g}"
        )
    else:
        hold = "not applicable: fixed-point exponent range must hold first"

    return ValidityReport(
        p=float(p),
        a=float(a),
        s=s,
        base_range_ok=bool(base_ok),
        fixed_point_ok=bool(fixed_ok),
        lipschitz_constant=lipschitz_constant,
        lipschitz_regime=lip,
        holder_regime=hold,
        messages=messages,
    )
