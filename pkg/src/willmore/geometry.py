"""Pointwise geometry of graph surfaces and the fourth-order operator.

For a height function u over a planar domain, with Q = sqrt(1 + |grad u|^2),
the graph carries

    mean curvature      H = div(grad u / Q) = lap u / Q - grad u . (D2u grad u) / Q^3
    Gauss curvature     K = det(D2u) / Q^4
    Willmore energy     W = (1/4) int H^2 Q dx          (dS = Q dx)
    conformal energy    int (H^2/4 - K) Q dx

The fourth-order operator is evaluated along two independent code paths:

* ``willmore_operator_geometric`` discretizes the nested flux divergence
      div( (1/Q)(I - grad u x grad u / Q^2) grad(QH) - (H^2 / 2Q) grad u )
* ``willmore_operator_divergence`` discretizes the reformulated
      lap^2 u - D_i b1^i[u] - D^2_ij b2^ij[u]
  with the explicit lower-order fluxes

      b1 = -( (5/2)(H^2/Q) grad u + 2 (H/Q^2) D2u grad u - 2 (lap u H / Q^2) grad u )
      b2_ij = A delta_ij + grad_i u grad_j u H / Q^2,
      A = |grad u|^2 lap u / (Q(1+Q)) + grad u . (D2u grad u) / Q^3.

The two agree pointwise in the continuum (verified symbolically before the
build); their discrete difference shrinks at second order, which the
verification studies exploit as a self-check.

Sign convention: with H = div(grad u / Q) as written, the upper sphere cap
u = sqrt(R^2 - x^2 - y^2) has H = -2/R (downward-bending graph).

Fourth-order composites are only meaningful two cells away from the edge
of the data; nearer nodes are masked out, not extrapolated.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    ScalarField,
    TensorField,
    VectorField,
    biharmonic_13point,
    check_thickness,
    cross_centered,
    diff1,
    diff1_centered,
    diff2,
    diff2_centered,
    diff_cross,
    erode,
    integrate,
)


# -- discrete derivatives ---------------------------------------------------

def gradient(u: ScalarField) -> VectorField:
    """Discrete gradient: centered inside, one-sided 3-point at the rim."""
    check_thickness(u.domain)
    gx, mx = diff1(u.values, u.mask, 0, u.domain.h)
    gy, my = diff1(u.values, u.mask, 1, u.domain.h)
    return VectorField(u.domain, np.stack([gx, gy]), mx & my)


def hessian(u: ScalarField) -> TensorField:
    """Discrete Hessian (xx, xy, yy); symmetric by construction."""
    check_thickness(u.domain)
    h = u.domain.h
    hxx, mxx = diff2(u.values, u.mask, 0, h)
    hyy, myy = diff2(u.values, u.mask, 1, h)
    hxy, mxy = diff_cross(u.values, u.mask, h)
    return TensorField(u.domain, np.stack([hxx, hxy, hyy]), mxx & myy & mxy)


def _parts(u):
    g = gradient(u)
    hess = hessian(u)
    return g, hess, g.mask & hess.mask


# -- pointwise algebra (shared by discrete paths and symbolic oracles) ------

def area_element_values(gx, gy):
    return np.sqrt(1.0 + gx * gx + gy * gy)


def mean_curvature_values(gx, gy, hxx, hxy, hyy):
    q = area_element_values(gx, gy)
    lap = hxx + hyy
    mg1 = hxx * gx + hxy * gy
    mg2 = hxy * gx + hyy * gy
    return lap / q - (gx * mg1 + gy * mg2) / q ** 3


def gauss_curvature_values(gx, gy, hxx, hxy, hyy):
    q = area_element_values(gx, gy)
    return (hxx * hyy - hxy * hxy) / q ** 4


def flux1_values(gx, gy, hxx, hxy, hyy):
    """First-order flux b1 (vector), explicit coefficient form."""
    q = area_element_values(gx, gy)
    lap = hxx + hyy
    mg1 = hxx * gx + hxy * gy
    mg2 = hxy * gx + hyy * gy
    H = lap / q - (gx * mg1 + gy * mg2) / q ** 3
    common = 2.5 * H * H / q - 2.0 * lap * H / q ** 2
    b1x = -(common * gx + 2.0 * H / q ** 2 * mg1)
    b1y = -(common * gy + 2.0 * H / q ** 2 * mg2)
    return b1x, b1y


def flux2_values(gx, gy, hxx, hxy, hyy):
    """Second-order flux b2 (symmetric tensor), explicit coefficient form."""
    q = area_element_values(gx, gy)
    lap = hxx + hyy
    mg1 = hxx * gx + hxy * gy
    mg2 = hxy * gx + hyy * gy
    H = lap / q - (gx * mg1 + gy * mg2) / q ** 3
    A = (gx * gx + gy * gy) * lap / (q * (1.0 + q)) + (gx * mg1 + gy * mg2) / q ** 3
    b2xx = A + gx * gx * H / q ** 2
    b2xy = gx * gy * H / q ** 2
    b2yy = A + gy * gy * H / q ** 2
    return b2xx, b2xy, b2yy


# -- field-level operations --------------------------------------------------

def area_element(u: ScalarField) -> ScalarField:
    g = gradient(u)
    return ScalarField(u.domain, area_element_values(g.values[0], g.values[1]), g.mask)


def mean_curvature(u: ScalarField) -> ScalarField:
    g, hess, m = _parts(u)
    vals = mean_curvature_values(g.values[0], g.values[1], *hess.values)
    return ScalarField(u.domain, vals, m)


def gauss_curvature(u: ScalarField) -> ScalarField:
    g, hess, m = _parts(u)
    vals = gauss_curvature_values(g.values[0], g.values[1], *hess.values)
    return ScalarField(u.domain, vals, m)


def b1_terms(u: ScalarField) -> VectorField:
    g, hess, m = _parts(u)
    b1x, b1y = flux1_values(g.values[0], g.values[1], *hess.values)
    return VectorField(u.domain, np.stack([b1x, b1y]), m)


def b2_terms(u: ScalarField) -> TensorField:
    g, hess, m = _parts(u)
    comps = flux2_values(g.values[0], g.values[1], *hess.values)
    return TensorField(u.domain, np.stack(comps), m)


def willmore_operator_divergence(u: ScalarField) -> ScalarField:
    """lap^2 u - D_i b1^i - D^2_ij b2^ij with centered stencils, 2-cell mask."""
    h = u.domain.h
    b1 = b1_terms(u)
    b2 = b2_terms(u)
    lap2, m4 = biharmonic_13point(u.values, u.mask, h)
    d1x, m1x = diff1_centered(b1.values[0], b1.mask, 0, h)
    d1y, m1y = diff1_centered(b1.values[1], b1.mask, 1, h)
    dxx, mxx = diff2_centered(b2.xx, b2.mask, 0, h)
    dxy, mxy = cross_centered(b2.xy, b2.mask, h)
    dyy, myy = diff2_centered(b2.yy, b2.mask, 1, h)
    vals = lap2 - d1x - d1y - dxx - 2 * dxy - dyy
    mask = m4 & m1x & m1y & mxx & mxy & myy & erode(u.mask, 2)
    return ScalarField(u.domain, vals, mask)


def _centered_parts(u):
    """Centered-only derivatives; one ring narrower than the mixed stencils.

    The nested flux composites differentiate intermediate fields twice
    more; a one-sided/centered error jump between adjacent rings would
    cost an order there, so these paths stay strictly centered and mask
    one extra ring instead.
    """
    h = u.domain.h
    gx, mx = diff1_centered(u.values, u.mask, 0, h)
    gy, my = diff1_centered(u.values, u.mask, 1, h)
    hxx, mxx = diff2_centered(u.values, u.mask, 0, h)
    hyy, myy = diff2_centered(u.values, u.mask, 1, h)
    hxy, mxy = cross_centered(u.values, u.mask, h)
    return gx, gy, hxx, hxy, hyy, mx & my & mxx & myy & mxy


def willmore_operator_geometric(u: ScalarField) -> ScalarField:
    """Nested-divergence evaluation of the geometric flux form.

    Shares only the difference primitives with the divergence path; valid
    three cells in from the edge of the data (one ring narrower).
    """
    h = u.domain.h
    gx, gy, hxx, hxy, hyy, m = _centered_parts(u)
    q = area_element_values(gx, gy)
    H = mean_curvature_values(gx, gy, hxx, hxy, hyy)
    p = q * H
    px, mpx = diff1_centered(p, m, 0, h)
    py, mpy = diff1_centered(p, m, 1, h)
    mp = mpx & mpy
    gdotp = gx * px + gy * py
    f1 = (px - gx * gdotp / q ** 2) / q - H * H / (2 * q) * gx
    f2 = (py - gy * gdotp / q ** 2) / q - H * H / (2 * q) * gy
    d1, md1 = diff1_centered(f1, mp, 0, h)
    d2, md2 = diff1_centered(f2, mp, 1, h)
    mask = md1 & md2 & erode(u.mask, 2)
    return ScalarField(u.domain, d1 + d2, mask)


def willmore_operator_curvature(u: ScalarField) -> ScalarField:
    """Diagnostic path: Delta_g H + 2 H (H^2/4 - K) with discrete Delta_g.

    Delta_g f = (1/Q) D_i( Q (delta_ij - grad_i u grad_j u / Q^2) D_j f ).
    Reported by the verification studies alongside the other two forms to
    document which of them carries an area-element factor; not asserted.
    """
    h = u.domain.h
    gx, gy, hxx, hxy, hyy, m = _centered_parts(u)
    q = area_element_values(gx, gy)
    H = mean_curvature_values(gx, gy, hxx, hxy, hyy)
    K = gauss_curvature_values(gx, gy, hxx, hxy, hyy)
    hx, mhx = diff1_centered(H, m, 0, h)
    hy, mhy = diff1_centered(H, m, 1, h)
    mh = mhx & mhy
    gdot = gx * hx + gy * hy
    f1 = q * (hx - gx * gdot / q ** 2)
    f2 = q * (hy - gy * gdot / q ** 2)
    d1, md1 = diff1_centered(f1, mh, 0, h)
    d2, md2 = diff1_centered(f2, mh, 1, h)
    vals = (d1 + d2) / q + 2.0 * H * (H * H / 4.0 - K)
    mask = md1 & md2 & erode(u.mask, 2)
    return ScalarField(u.domain, vals, mask)


# -- energies -----------------------------------------------------------------

def willmore_energy(u: ScalarField) -> float:
    """(1/4) int H^2 dS over the polygon, dS = Q dx, midpoint quadrature."""
    g, hess, m = _parts(u)
    gx, gy = g.values
    q = area_element_values(gx, gy)
    H = mean_curvature_values(gx, gy, *hess.values)
    return integrate(u.domain, 0.25 * H * H * q, m)


def conformal_energy(u: ScalarField) -> float:
    """int (H^2/4 - K) dS, the scale-invariant bending content."""
    g, hess, m = _parts(u)
    gx, gy = g.values
    q = area_element_values(gx, gy)
    H = mean_curvature_values(gx, gy, *hess.values)
    K = gauss_curvature_values(gx, gy, *hess.values)
    return integrate(u.domain, (0.25 * H * H - K) * q, m)
