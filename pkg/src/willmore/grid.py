"""Uniform-grid discretization of polygonal domains.

A :class:`GridDomain` lays a uniform lattice with spacing ``h`` over the
bounding box of a simple closed polygon (counterclockwise vertex order),
padded by two ghost layers, and classifies every node as interior,
boundary, ghost, or exterior.  For polygons whose edges are axis-aligned
with vertices on the lattice ("grid-aligned" domains, the ones the
biharmonic solver accepts) it also walks the boundary and records
arclength, outward normals, tangents, and corner flags per boundary node.
Non-aligned polygons (e.g. the inscribed-polygon disk preset) are still
valid domains for field operations, norms, and quadrature.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError

EXTERIOR, INTERIOR, BOUNDARY, GHOST = 0, 1, 2, 3

_ALIGN_TOL = 1e-9


def points_in_polygon(px, py, vertices):
    """Even-odd crossing test, vectorized over points.

    Points lying exactly on the boundary are not reliably classified and
    must be filtered out beforehand (GridDomain does this by distance).
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    n = len(vertices)
    for k in range(n):
        x1, y1 = vertices[k]
        x2, y2 = vertices[(k + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        if not np.any(crosses):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= crosses & (px < xi)
    return inside


def polygon_distance(px, py, vertices):
    """Exact minimum distance from points to the (closed) polygon boundary."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    best = np.full(px.shape, np.inf)
    n = len(vertices)
    for k in range(n):
        ax, ay = vertices[k]
        bx, by = vertices[(k + 1) % n]
        ex, ey = bx - ax, by - ay
        ee = ex * ex + ey * ey
        t = ((px - ax) * ex + (py - ay) * ey) / ee
        t = np.clip(t, 0.0, 1.0)
        dx = px - (ax + t * ex)
        dy = py - (ay + t * ey)
        np.minimum(best, np.hypot(dx, dy), out=best)
    return best


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


class GridDomain:
    """Uniform grid over a simple closed CCW polygon.

    Parameters
    ----------
    vertices : array-like, shape (m, 2)
        Polygon vertices in counterclockwise order, first vertex not
        repeated at the end.
    h : float
        Grid spacing, > 0.

    Attributes
    ----------
    cls : ndarray of int8, shape (nx, ny)
        Node classification (EXTERIOR / INTERIOR / BOUNDARY / GHOST).
        Index convention: ``cls[i, j]`` is the node at
        ``(node_x[i], node_y[j])``.
    """

    def __init__(self, vertices, h):
        vertices = np.asarray(vertices, dtype=float)
        errors = []
        if h <= 0 or not np.isfinite(h):
            raise ConfigurationError([f"grid spacing must be positive, got {h}"])
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
            raise ConfigurationError(["polygon needs at least 3 (x, y) vertices"])
        area2 = self._shoelace(vertices)
        if area2 <= 0:
            errors.append("polygon vertices must be ordered counterclockwise")
        if not self._is_simple(vertices):
            errors.append("polygon is self-intersecting")
        if errors:
            raise ConfigurationError(errors)

        self.vertices = vertices
        self.h = float(h)
        self.area_polygon = 0.5 * area2

        minx, miny = vertices.min(axis=0)
        maxx, maxy = vertices.max(axis=0)
        ncx = int(round((maxx - minx) / h))
        ncy = int(round((maxy - miny) / h))
        ncx = max(ncx, int(math.ceil((maxx - minx) / h - 1e-12)))
        ncy = max(ncy, int(math.ceil((maxy - miny) / h - 1e-12)))
        self.nx = ncx + 5
        self.ny = ncy + 5
        self.node_x = minx + (np.arange(self.nx) - 2) * self.h
        self.node_y = miny + (np.arange(self.ny) - 2) * self.h

        self._classify()
        self.aligned = self._check_aligned()
        if self.aligned:
            self._walk_boundary()
            self._validate_neighbor_invariant()
        else:
            self._empty_boundary()

        # lazy caches
        self._node_distance = None
        self._cell_inside = None
        self._system = None

    # -- construction helpers -------------------------------------------

    @staticmethod
    def _shoelace(v):
        x, y = v[:, 0], v[:, 1]
        return float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @staticmethod
    def _is_simple(v):
        n = len(v)
        if n > 2000:
            return True  # preset disks with many segments are simple by construction
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    return False
        return True

    def _classify(self):
        X, Y = np.meshgrid(self.node_x, self.node_y, indexing="ij")
        dist = polygon_distance(X.ravel(), Y.ravel(), self.vertices).reshape(X.shape)
        on_boundary = dist <= _ALIGN_TOL
        inside = np.zeros(X.shape, dtype=bool)
        off = ~on_boundary
        inside[off] = points_in_polygon(X[off], Y[off], self.vertices)

        cls = np.full(X.shape, EXTERIOR, dtype=np.int8)
        cls[inside] = INTERIOR
        cls[on_boundary] = BOUNDARY
        # ghost: exterior nodes within Chebyshev distance 2 of an interior node
        near = _dilate(cls == INTERIOR, 2)
        cls[(cls == EXTERIOR) & near] = GHOST
        self.cls = cls
        self._X, self._Y = X, Y

    def _check_aligned(self):
        v = self.vertices
        n = len(v)
        for k in range(n):
            dx = v[(k + 1) % n, 0] - v[k, 0]
            dy = v[(k + 1) % n, 1] - v[k, 1]
            if abs(dx) > _ALIGN_TOL and abs(dy) > _ALIGN_TOL:
                return False
            # vertices must sit on the lattice
            fi = (v[k, 0] - self.node_x[0]) / self.h
            fj = (v[k, 1] - self.node_y[0]) / self.h
            if abs(fi - round(fi)) > 1e-7 or abs(fj - round(fj)) > 1e-7:
                return False
        return True

    def _walk_boundary(self):
        v = self.vertices
        n = len(v)
        ii, jj, ss, nrm, tng, crn = [], [], [], [], [], []
        s_done = 0.0
        for k in range(n):
            a, b = v[k], v[(k + 1) % n]
            ex, ey = b - a
            length = math.hypot(ex, ey)
            steps = int(round(length / self.h))
            ux, uy = ex / length, ey / length
            # outward normal of a CCW edge points to the right of the direction
            nxk, nyk = uy, -ux
            for t in range(steps):
                x = a[0] + t * self.h * ux
                y = a[1] + t * self.h * uy
                i = int(round((x - self.node_x[0]) / self.h))
                j = int(round((y - self.node_y[0]) / self.h))
                ii.append(i)
                jj.append(j)
                ss.append(s_done + t * self.h)
                nrm.append((nxk, nyk))
                tng.append((ux, uy))
                crn.append(t == 0)
            s_done += length
        self.boundary_i = np.array(ii, dtype=int)
        self.boundary_j = np.array(jj, dtype=int)
        self.boundary_arclength = np.array(ss)
        self.boundary_length = s_done
        normal = np.array(nrm)
        tangent = np.array(tng)
        corner = np.array(crn, dtype=bool)
        # corner nodes: average the two adjacent edge frames
        prev_n = np.roll(normal, 1, axis=0)
        prev_t = np.roll(tangent, 1, axis=0)
        for arr, prev in ((normal, prev_n), (tangent, prev_t)):
            mixed = arr[corner] + prev[corner]
            norms = np.linalg.norm(mixed, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            arr[corner] = mixed / norms
        self.boundary_normal = normal
        self.boundary_tangent = tangent
        self.boundary_is_corner = corner
        self.boundary_ds = np.full(len(ii), self.h)
        self.boundary_x = self.node_x[self.boundary_i]
        self.boundary_y = self.node_y[self.boundary_j]
        self.boundary_index = np.full((self.nx, self.ny), -1, dtype=int)
        self.boundary_index[self.boundary_i, self.boundary_j] = np.arange(len(ii))
        if not np.all(self.cls[self.boundary_i, self.boundary_j] == BOUNDARY):
            raise ConfigurationError(["boundary walk hit a node not classified as boundary"])

    def _empty_boundary(self):
        self.boundary_i = np.array([], dtype=int)
        self.boundary_j = np.array([], dtype=int)
        self.boundary_arclength = np.array([])
        self.boundary_length = float(np.sum(np.hypot(*(np.roll(self.vertices, -1, axis=0) - self.vertices).T)))
        self.boundary_normal = np.zeros((0, 2))
        self.boundary_tangent = np.zeros((0, 2))
        self.boundary_is_corner = np.array([], dtype=bool)
        self.boundary_ds = np.array([])
        self.boundary_x = np.array([])
        self.boundary_y = np.array([])
        self.boundary_index = np.full((self.nx, self.ny), -1, dtype=int)

    def _validate_neighbor_invariant(self):
        interior = self.cls == INTERIOR
        ok = interior | (self.cls == BOUNDARY)
        bad = []
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            shifted = _shift_bool(ok, di, dj)
            viol = interior & ~shifted
            if np.any(viol):
                bad.extend(zip(*np.nonzero(viol)))
        if bad:
            raise ConfigurationError(
                [f"interior node with exterior axis neighbor at {sorted(set(bad))[:5]}"]
            )

    # -- queries ----------------------------------------------------------

    @property
    def interior_mask(self):
        return self.cls == INTERIOR

    @property
    def boundary_mask(self):
        return self.cls == BOUNDARY

    @property
    def domain_mask(self):
        """Interior plus boundary nodes."""
        return (self.cls == INTERIOR) | (self.cls == BOUNDARY)

    @property
    def n_interior(self):
        return int(np.count_nonzero(self.cls == INTERIOR))

    @property
    def n_boundary(self):
        return len(self.boundary_i)

    @property
    def cell_area(self):
        return self.h * self.h

    def nodes(self):
        """Node coordinate arrays X, Y of shape (nx, ny)."""
        return self._X, self._Y

    def node_distance(self):
        """Distance from every node to the polygon boundary (cached)."""
        if self._node_distance is None:
            X, Y = self.nodes()
            d = polygon_distance(X.ravel(), Y.ravel(), self.vertices).reshape(X.shape)
            d[~self.domain_mask] = 0.0
            d[self.boundary_mask] = 0.0
            self._node_distance = d
        return self._node_distance

    def cell_inside(self):
        """Cells (shape (nx-1, ny-1)) whose center lies inside the polygon."""
        if self._cell_inside is None:
            cx = 0.5 * (self.node_x[:-1] + self.node_x[1:])
            cy = 0.5 * (self.node_y[:-1] + self.node_y[1:])
            CX, CY = np.meshgrid(cx, cy, indexing="ij")
            self._cell_inside = points_in_polygon(CX, CY, self.vertices)
        return self._cell_inside

    @property
    def lipschitz_constant(self):
        """max_k |cot(theta_k / 2)| over vertex interior angles theta_k.

        A square gives 1, a many-segment inscribed disk tends to 0.
        """
        v = self.vertices
        n = len(v)
        worst = 0.0
        for k in range(n):
            p0, p1, p2 = v[k - 1], v[k], v[(k + 1) % n]
            a = p0 - p1
            b = p2 - p1
            # interior angle: rotation from ray p1->p2 to ray p1->p0, CCW polygon
            cross = b[0] * a[1] - b[1] * a[0]
            ang = math.atan2(cross, float(np.dot(a, b))) % (2 * math.pi)
            half = ang / 2.0
            if abs(math.sin(half)) < 1e-12:
                return math.inf
            worst = max(worst, abs(math.cos(half) / math.sin(half)))
        return worst

    def min_interior_run(self):
        """Shortest contiguous run of interior nodes along any grid line."""
        return min(_run_stat(self.interior_mask, np.min), _run_stat(self.interior_mask.T, np.min))

    def max_domain_run(self):
        """Longest contiguous run of in-domain nodes (domain thickness in nodes)."""
        return max(_run_stat(self.domain_mask, np.max), _run_stat(self.domain_mask.T, np.max))


def _shift_bool(mask, di, dj):
    out = np.zeros_like(mask)
    src_i = slice(max(0, -di), mask.shape[0] - max(0, di))
    dst_i = slice(max(0, di), mask.shape[0] - max(0, -di))
    src_j = slice(max(0, -dj), mask.shape[1] - max(0, dj))
    dst_j = slice(max(0, dj), mask.shape[1] - max(0, -dj))
    out[dst_i, dst_j] = mask[src_i, src_j]
    return out


def _dilate(mask, n):
    out = mask.copy()
    for _ in range(n):
        acc = out.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                acc |= _shift_bool(out, di, dj)
        out = acc
    return out


def _run_stat(mask, stat):
    best = None
    for row in mask:
        if not row.any():
            continue
        padded = np.concatenate(([0], row.view(np.int8), [0]))
        edges = np.flatnonzero(np.diff(padded))
        runs = edges[1::2] - edges[0::2]
        val = stat(runs)
        best = val if best is None else stat([best, val])
    return best if best is not None else 0


# -- presets ---------------------------------------------------------------

def unit_square(resolution):
    """Unit square [0,1]^2 with h = 1/resolution."""
    _check_resolution(resolution)
    return GridDomain([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], 1.0 / resolution)


def l_shape(resolution):
    """L-shaped domain [0,1]^2 minus the top-right quadrant [0.5,1]^2."""
    _check_resolution(resolution)
    if resolution % 2:
        raise ConfigurationError(["l-shape needs an even resolution so (0.5, 0.5) is on the lattice"])
    verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0)]
    return GridDomain(verts, 1.0 / resolution)


def disk(radius, resolution, center=(0.0, 0.0), segments=None):
    """Inscribed-polygon disk, not grid-aligned (norms/quadrature only)."""
    _check_resolution(resolution)
    h = 1.0 / resolution
    if segments is None:
        segments = max(96, int(math.ceil(2 * math.pi * radius / h)))
    th = 2 * math.pi * np.arange(segments) / segments
    verts = np.column_stack(
        [center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)]
    )
    return GridDomain(verts, h)


def polygon(vertices, resolution):
    _check_resolution(resolution)
    return GridDomain(vertices, 1.0 / resolution)


def _check_resolution(resolution):
    if resolution < 4:
        raise ConfigurationError([f"resolution must be at least 4 cells, got {resolution}"])
