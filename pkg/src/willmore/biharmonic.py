"""Discrete inhomogeneous biharmonic Dirichlet problem on aligned grids.

Assembles the 13-point bilaplacian over interior unknowns with clamped
boundary conditions w = g0, dw/dnu = g1.  Boundary values are pinned by
elimination: the ghost value across an edge boundary node b in the
outward axis direction e is expressed through the centered normal
derivative, w(b + he) = w(b - he) + 2h g1(b), which folds onto the
diagonal of the mirrored interior row and moves the g1 contribution into
the right-hand side.  Solution fields carry w = g0 exactly at boundary
nodes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import (
    AssemblyError,
    SolverConvergenceError,
    SolverError,
    UndefinedRatioError,
)
from .fields import (
    ScalarField,
    TensorField,
    VectorField,
    THIRTEEN_POINT,
    cross_centered,
    diff1_centered,
    diff2_centered,
)
from .grid import BOUNDARY, EXTERIOR, GHOST, INTERIOR, GridDomain

RESIDUAL_TOL = 1e-10


@dataclass
class BoundaryData:
    """Clamped Dirichlet pair sampled at the domain's boundary nodes.

    g0 is the prescribed height, g1 the outward normal slope; both are
    arclength-ordered to match ``domain.boundary_arclength``.
    """

    domain: GridDomain
    g0: np.ndarray
    g1: np.ndarray

    def __post_init__(self):
        self.g0 = np.asarray(self.g0, dtype=float)
        self.g1 = np.asarray(self.g1, dtype=float)
        nb = self.domain.n_boundary
        if len(self.g0) != nb or len(self.g1) != nb:
            raise ValueError(
                f"boundary samples ({len(self.g0)}, {len(self.g1)}) do not match "
                f"the {nb} boundary nodes of the grid"
            )
        if not (np.all(np.isfinite(self.g0)) and np.all(np.isfinite(self.g1))):
            raise ValueError("boundary data must be finite")
        s = self.domain.boundary_arclength
        if len(s) and np.any(np.diff(s) <= 0):
            raise ValueError("boundary arclength must be strictly increasing")

    @classmethod
    def zero(cls, domain):
        nb = domain.n_boundary
        return cls(domain, np.zeros(nb), np.zeros(nb))

    @classmethod
    def from_functions(cls, domain, g0_fn, g1_fn):
        x, y, s = domain.boundary_x, domain.boundary_y, domain.boundary_arclength
        return cls(domain, np.asarray(g0_fn(x, y, s), dtype=float) + np.zeros_like(x),
                   np.asarray(g1_fn(x, y, s), dtype=float) + np.zeros_like(x))

    @classmethod
    def from_trace(cls, domain, u_fn, grad_fn):
        """Exact clamped traces of a closed-form height function."""
        x, y = domain.boundary_x, domain.boundary_y
        gx, gy = grad_fn(x, y)
        nu = domain.boundary_normal
        g0 = np.asarray(u_fn(x, y), dtype=float) + np.zeros_like(x)
        g1 = nu[:, 0] * (gx + np.zeros_like(x)) + nu[:, 1] * (gy + np.zeros_like(x))
        return cls(domain, g0, g1)

    @classmethod
    def affine(cls, domain, a=(0.0, 0.0), c=0.0):
        return cls.from_trace(
            domain,
            lambda x, y: a[0] * x + a[1] * y + c,
            lambda x, y: (a[0], a[1]),
        )

    @classmethod
    def sine_slope(cls, domain, amplitude, frequency=1):
        """g1 = amplitude * sin(2 pi k s / L), g0 = 0."""
        L = domain.boundary_length
        s = domain.boundary_arclength
        g1 = amplitude * np.sin(2 * np.pi * frequency * s / L)
        return cls(domain, np.zeros_like(g1), g1)

    def scaled(self, alpha):
        return BoundaryData(self.domain, alpha * self.g0, alpha * self.g1)

    def shifted(self, c):
        return BoundaryData(self.domain, self.g0 + c, self.g1.copy())


class SparseSystem:
    """Assembled clamped-bilaplacian operator with factorization cache.

    matrix      : csr over interior unknowns (pattern symmetric, <= 13 nnz/row)
    g0_matrix   : csr mapping boundary g0 samples into the RHS
    g1_matrix   : csr mapping boundary g1 samples into the RHS
    """

    def __init__(self, domain, matrix, g0_matrix, g1_matrix, interior_ij):
        self.domain = domain
        self.matrix = matrix
        self.g0_matrix = g0_matrix
        self.g1_matrix = g1_matrix
        self.interior_i, self.interior_j = interior_ij
        self._lu = None

    @property
    def n_unknowns(self):
        return self.matrix.shape[0]

    @property
    def lu(self):
        if self._lu is None:
            try:
                self._lu = splu(self.matrix.tocsc())
            except RuntimeError as exc:  # singular factorization
                raise SolverError(f"sparse factorization failed: {exc}") from exc
        return self._lu


def assemble(domain: GridDomain) -> SparseSystem:
    """Build the 13-point clamped system over the interior unknowns."""
    if not domain.aligned or domain.n_boundary == 0:
        raise AssemblyError("solver requires a grid-aligned polygon with boundary nodes")
    if domain.min_interior_run() < 4:
        raise AssemblyError(
            "domain has fewer than 5 interior cells across its narrowest dimension"
        )

    cls = domain.cls
    h = domain.h
    idx = np.full(cls.shape, -1, dtype=int)
    ii, jj = np.nonzero(cls == INTERIOR)
    idx[ii, jj] = np.arange(len(ii))
    bidx = domain.boundary_index
    n = len(ii)
    nb = domain.n_boundary

    rows_a, cols_a, vals_a = [], [], []
    rows_0, cols_0, vals_0 = [], [], []
    rows_1, cols_1, vals_1 = [], [], []
    bad = []

    inv_h4 = 1.0 / h ** 4
    for di, dj, coef in THIRTEEN_POINT:
        qi, qj = ii + di, jj + dj
        qcls = cls[qi, qj]
        c = coef * inv_h4

        m_int = qcls == INTERIOR
        if np.any(m_int):
            rows_a.append(idx[ii[m_int], jj[m_int]])
            cols_a.append(idx[qi[m_int], qj[m_int]])
            vals_a.append(np.full(m_int.sum(), c))

        m_bnd = qcls == BOUNDARY
        if np.any(m_bnd):
            rows_0.append(idx[ii[m_bnd], jj[m_bnd]])
            cols_0.append(bidx[qi[m_bnd], qj[m_bnd]])
            vals_0.append(np.full(m_bnd.sum(), c))

        m_out = (qcls == EXTERIOR) | (qcls == GHOST)
        if np.any(m_out):
            if abs(di) + abs(dj) != 2 or (di != 0 and dj != 0):
                bad.extend(zip(ii[m_out].tolist(), jj[m_out].tolist()))
                continue
            # ghost across the boundary node halfway along the axis
            mi, mj = ii[m_out] + di // 2, jj[m_out] + dj // 2
            if np.any(cls[mi, mj] != BOUNDARY):
                viol = cls[mi, mj] != BOUNDARY
                bad.extend(zip(ii[m_out][viol].tolist(), jj[m_out][viol].tolist()))
                continue
            b = bidx[mi, mj]
            nu = domain.boundary_normal[b]
            e = np.array([np.sign(di), np.sign(dj)], dtype=float)
            sign = nu[:, 0] * e[0] + nu[:, 1] * e[1]
            if np.any(np.abs(np.abs(sign) - 1.0) > 1e-9):
                viol = np.abs(np.abs(sign) - 1.0) > 1e-9
                bad.extend(zip(ii[m_out][viol].tolist(), jj[m_out][viol].tolist()))
                continue
            p = idx[ii[m_out], jj[m_out]]
            rows_a.append(p)
            cols_a.append(p)  # mirror of the ghost is the interior node itself
            vals_a.append(np.full(m_out.sum(), c))
            rows_1.append(p)
            cols_1.append(b)
            vals_1.append(c * 2.0 * h * sign)

    if bad:
        raise AssemblyError("degenerate clamped stencil at interior nodes", nodes=bad)

    def build(rows, cols, vals, shape):
        if not rows:
            return sp.csr_matrix(shape)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=shape,
        )

    A = build(rows_a, cols_a, vals_a, (n, n))
    G0 = build(rows_0, cols_0, vals_0, (n, nb))
    G1 = build(rows_1, cols_1, vals_1, (n, nb))
    return SparseSystem(domain, A, G0, G1, (ii, jj))


def cached_system(domain: GridDomain) -> SparseSystem:
    """Assemble once per domain instance; reuse the factorization."""
    if domain._system is None:
        domain._system = assemble(domain)
    return domain._system


def divergence_rhs(h1: VectorField, h2: TensorField) -> ScalarField:
    """D_i h1^i + D^2_ij h2^ij with the lattice-adjoint centered stencils.

    The first differences are the exact negative adjoints of the centered
    gradient on interior-supported test fields, and the second differences
    are self-adjoint, so summation by parts holds to machine precision.
    """
    if h1.domain is not h2.domain:
        raise ValueError("h1 and h2 must live on the same grid")
    h = h1.domain.h
    d1x, m1 = diff1_centered(h1.values[0], h1.mask, 0, h)
    d1y, m2 = diff1_centered(h1.values[1], h1.mask, 1, h)
    dxx, m3 = diff2_centered(h2.xx, h2.mask, 0, h)
    dxy, m4 = cross_centered(h2.xy, h2.mask, h)
    dyy, m5 = diff2_centered(h2.yy, h2.mask, 1, h)
    vals = d1x + d1y + dxx + 2 * dxy + dyy
    mask = m1 & m2 & m3 & m4 & m5
    return ScalarField(h1.domain, vals, mask)


def solve(system: SparseSystem, rhs, bc: BoundaryData) -> ScalarField:
    """Direct sparse solve; relative residual must reach 1e-10."""
    dom = system.domain
    if bc.domain is not dom:
        raise ValueError("boundary data does not match the assembled domain")
    if rhs is None:
        f = np.zeros(system.n_unknowns)
    else:
        f = rhs.values[system.interior_i, system.interior_j]
    b = f - system.g0_matrix @ bc.g0 - system.g1_matrix @ bc.g1
    w = system.lu.solve(b)
    res = np.linalg.norm(system.matrix @ w - b)
    scale = np.linalg.norm(b)
    rel = res / scale if scale > 0 else res
    if not np.isfinite(rel) or rel > RESIDUAL_TOL:
        raise SolverConvergenceError(rel, RESIDUAL_TOL)

    out = np.zeros((dom.nx, dom.ny))
    out[system.interior_i, system.interior_j] = w
    out[dom.boundary_i, dom.boundary_j] = bc.g0
    return ScalarField(dom, out, dom.domain_mask.copy())


def max_modulus_ratio(bc: BoundaryData, system: SparseSystem | None = None) -> float:
    """sup_interior |grad w| / sup_boundary |nu g1 + tangent g0'| for lap^2 w = 0.

    Diagnostic for the biharmonic maximum-modulus behaviour; the
    continuum constant is unknown, only boundedness is meaningful.
    """
    from .norms import boundary_gradient_field  # local import, no cycle

    if system is None:
        system = cached_system(bc.domain)
    bg = boundary_gradient_field(bc)
    den = float(np.max(np.hypot(bg[:, 0], bg[:, 1]))) if len(bg) else 0.0
    if den <= 0.0:
        raise UndefinedRatioError("boundary gradient data is identically zero")

    w = solve(system, None, bc)
    from .geometry import gradient

    g = gradient(w)
    m = g.mask & bc.domain.interior_mask
    num = float(np.max(g.magnitude()[m]))
    return num / den
