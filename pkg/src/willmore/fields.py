"""Grid-sampled fields and masked finite-difference stencils.

Fields store one value per lattice node (shape ``(nx, ny)``) together with
a boolean mask of nodes where the value is meaningful.  Values are finite
everywhere; nodes outside the mask hold 0.  Derivative helpers pick a
centered stencil wherever both axis neighbors are in the mask and fall
back to second-order one-sided stencils otherwise, so fields sampled on
interior + boundary nodes are differentiable up to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .grid import GridDomain

# 13-point biharmonic stencil, coefficients times h^4
THIRTEEN_POINT = (
    (0, 0, 20.0),
    (1, 0, -8.0), (-1, 0, -8.0), (0, 1, -8.0), (0, -1, -8.0),
    (1, 1, 2.0), (1, -1, 2.0), (-1, 1, 2.0), (-1, -1, 2.0),
    (2, 0, 1.0), (-2, 0, 1.0), (0, 2, 1.0), (0, -2, 1.0),
)


def shift(a, di, dj, fill=0):
    """Array shifted so that out[i, j] = a[i + di, j + dj]."""
    out = np.full_like(a, fill)
    src_i = slice(max(0, di), a.shape[0] + min(0, di))
    dst_i = slice(max(0, -di), a.shape[0] + min(0, -di))
    src_j = slice(max(0, dj), a.shape[1] + min(0, dj))
    dst_j = slice(max(0, -dj), a.shape[1] + min(0, -dj))
    out[dst_i, dst_j] = a[src_i, src_j]
    return out


def _axis_shift(a, d, axis, fill=0):
    return shift(a, d, 0, fill) if axis == 0 else shift(a, 0, d, fill)


def erode(mask, n=1):
    """Chebyshev-ball erosion: keep nodes whose (2n+1)x(2n+1) box is all True."""
    out = mask.copy()
    for _ in range(n):
        acc = out.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                acc &= shift(out, di, dj, fill=False)
        out = acc
    return out


def diff1(values, mask, axis, h):
    """First derivative: centered where possible, one-sided 3-point otherwise."""
    vp1 = _axis_shift(values, 1, axis)
    vm1 = _axis_shift(values, -1, axis)
    vp2 = _axis_shift(values, 2, axis)
    vm2 = _axis_shift(values, -2, axis)
    mp1 = _axis_shift(mask, 1, axis, False)
    mm1 = _axis_shift(mask, -1, axis, False)
    mp2 = _axis_shift(mask, 2, axis, False)
    mm2 = _axis_shift(mask, -2, axis, False)

    centered = mask & mp1 & mm1
    fwd = mask & mp1 & mp2 & ~centered
    bwd = mask & mm1 & mm2 & ~centered & ~fwd

    out = np.zeros_like(values)
    out[centered] = (vp1[centered] - vm1[centered]) / (2 * h)
    out[fwd] = (-3 * values[fwd] + 4 * vp1[fwd] - vp2[fwd]) / (2 * h)
    out[bwd] = (3 * values[bwd] - 4 * vm1[bwd] + vm2[bwd]) / (2 * h)
    return out, centered | fwd | bwd


def diff2(values, mask, axis, h):
    """Pure second derivative: centered 3-point or one-sided 4-point."""
    vp1 = _axis_shift(values, 1, axis)
    vm1 = _axis_shift(values, -1, axis)
    vp2 = _axis_shift(values, 2, axis)
    vm2 = _axis_shift(values, -2, axis)
    vp3 = _axis_shift(values, 3, axis)
    vm3 = _axis_shift(values, -3, axis)
    mp = [_axis_shift(mask, d, axis, False) for d in (1, 2, 3)]
    mm = [_axis_shift(mask, -d, axis, False) for d in (1, 2, 3)]

    centered = mask & mp[0] & mm[0]
    fwd = mask & mp[0] & mp[1] & mp[2] & ~centered
    bwd = mask & mm[0] & mm[1] & mm[2] & ~centered & ~fwd

    h2 = h * h
    out = np.zeros_like(values)
    out[centered] = (vp1[centered] - 2 * values[centered] + vm1[centered]) / h2
    out[fwd] = (2 * values[fwd] - 5 * vp1[fwd] + 4 * vp2[fwd] - vp3[fwd]) / h2
    out[bwd] = (2 * values[bwd] - 5 * vm1[bwd] + 4 * vm2[bwd] - vm3[bwd]) / h2
    return out, centered | fwd | bwd


def diff_cross(values, mask, h):
    """Symmetrized mixed derivative d^2/dxdy via composed first differences."""
    dy, my = diff1(values, mask, 1, h)
    a, ma = diff1(dy, my, 0, h)
    dx, mx = diff1(values, mask, 0, h)
    b, mb = diff1(dx, mx, 1, h)
    both = ma & mb
    out = np.zeros_like(values)
    out[both] = 0.5 * (a[both] + b[both])
    only_a = ma & ~mb
    only_b = mb & ~ma
    out[only_a] = a[only_a]
    out[only_b] = b[only_b]
    return out, ma | mb


def diff1_centered(values, mask, axis, h):
    vp1 = _axis_shift(values, 1, axis)
    vm1 = _axis_shift(values, -1, axis)
    ok = mask & _axis_shift(mask, 1, axis, False) & _axis_shift(mask, -1, axis, False)
    out = np.zeros_like(values)
    out[ok] = (vp1[ok] - vm1[ok]) / (2 * h)
    return out, ok


def diff2_centered(values, mask, axis, h):
    vp1 = _axis_shift(values, 1, axis)
    vm1 = _axis_shift(values, -1, axis)
    ok = mask & _axis_shift(mask, 1, axis, False) & _axis_shift(mask, -1, axis, False)
    out = np.zeros_like(values)
    out[ok] = (vp1[ok] - 2 * values[ok] + vm1[ok]) / (h * h)
    return out, ok


def cross_centered(values, mask, h):
    """4-point centered mixed derivative; self-adjoint on lattice sums."""
    vpp = shift(values, 1, 1)
    vpm = shift(values, 1, -1)
    vmp = shift(values, -1, 1)
    vmm = shift(values, -1, -1)
    ok = mask.copy()
    for di in (-1, 1):
        for dj in (-1, 1):
            ok &= shift(mask, di, dj, False)
    out = np.zeros_like(values)
    out[ok] = (vpp[ok] - vpm[ok] - vmp[ok] + vmm[ok]) / (4 * h * h)
    return out, ok


def biharmonic_13point(values, mask, h):
    """Discrete bilaplacian; valid where the full stencil footprint is in-mask."""
    out = np.zeros_like(values)
    ok = np.ones_like(mask)
    for di, dj, _ in THIRTEEN_POINT:
        ok &= shift(mask, di, dj, False)
    for di, dj, c in THIRTEEN_POINT:
        out += c * shift(values, di, dj)
    out /= h ** 4
    out[~ok] = 0.0
    return out, ok


def _sanitize(domain, values, mask):
    values = np.asarray(values, dtype=float)
    if values.shape[-2:] != (domain.nx, domain.ny):
        raise ValueError(
            f"field shape {values.shape} does not match grid ({domain.nx}, {domain.ny})"
        )
    if mask is None:
        mask = domain.domain_mask.copy()
    mask = np.asarray(mask, dtype=bool)
    finite = np.isfinite(values)
    if values.ndim == 3:
        finite = np.all(finite, axis=0)
    mask = mask & finite
    out = np.where(np.isfinite(values), values, 0.0)
    out[..., ~mask] = 0.0
    return out, mask


@dataclass
class ScalarField:
    domain: GridDomain
    values: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        self.values, self.mask = _sanitize(self.domain, self.values, self.mask)

    @classmethod
    def zeros(cls, domain, mask=None):
        return cls(domain, np.zeros((domain.nx, domain.ny)), mask)

    @classmethod
    def from_function(cls, domain, fn, where="all"):
        """Sample fn(x, y) on every node; non-finite samples are masked out.

        where="domain" restricts the mask to interior + boundary nodes,
        "all" keeps every node where fn evaluates finite (useful when a
        closed form extends beyond the polygon, e.g. sphere caps).
        """
        X, Y = domain.nodes()
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.asarray(fn(X, Y), dtype=float)
        if vals.shape != X.shape:
            vals = np.broadcast_to(vals, X.shape).astype(float)
        mask = np.isfinite(vals)
        if where == "domain":
            mask &= domain.domain_mask
        return cls(domain, vals, mask)

    def max_abs(self, mask=None):
        m = self.mask if mask is None else (self.mask & mask)
        return float(np.max(np.abs(self.values[m]))) if m.any() else 0.0

    def shifted(self, c):
        return ScalarField(self.domain, self.values + c, self.mask.copy())


@dataclass
class VectorField:
    """Two components, indexed values[0] = x-component, values[1] = y."""

    domain: GridDomain
    values: np.ndarray  # (2, nx, ny)
    mask: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != 2:
            raise ValueError("VectorField needs 2 components")
        self.values, self.mask = _sanitize(self.domain, self.values, self.mask)

    def magnitude(self):
        return np.hypot(self.values[0], self.values[1])


@dataclass
class TensorField:
    """Symmetric 2x2 tensor stored as (xx, xy, yy); symmetry is structural."""

    domain: GridDomain
    values: np.ndarray  # (3, nx, ny) ordered xx, xy, yy
    mask: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != 3:
            raise ValueError("TensorField stores (xx, xy, yy) components")
        self.values, self.mask = _sanitize(self.domain, self.values, self.mask)

    @property
    def xx(self):
        return self.values[0]

    @property
    def xy(self):
        return self.values[1]

    @property
    def yy(self):
        return self.values[2]

    def component(self, i, j):
        return self.values[0] if (i, j) == (0, 0) else self.values[2] if (i, j) == (1, 1) else self.values[1]

    def frobenius(self):
        return np.sqrt(self.xx ** 2 + 2 * self.xy ** 2 + self.yy ** 2)


def cell_mean(values):
    """Corner average per cell: bilinear interpolation at cell centers."""
    return 0.25 * (values[:-1, :-1] + values[1:, :-1] + values[:-1, 1:] + values[1:, 1:])


def integration_cells(domain, mask=None):
    """Cells used by the composite midpoint rule.

    A cell participates when its center is inside the polygon and, if a
    mask is given, all four corner nodes carry meaningful values.
    """
    cells = domain.cell_inside().copy()
    if mask is not None:
        cells &= mask[:-1, :-1] & mask[1:, :-1] & mask[:-1, 1:] & mask[1:, 1:]
    return cells


def integrate(domain, values, mask=None):
    """Composite midpoint quadrature of nodal values over the polygon."""
    cells = integration_cells(domain, mask)
    return float(np.sum(cell_mean(values)[cells]) * domain.cell_area)


def check_thickness(domain):
    if domain.max_domain_run() < 5:
        raise ConfigurationError(
            ["domain too thin for second-order stencils: fewer than 5 nodes across"]
        )
