"""Scattered-AP interpolation over the full mesh by natural neighbors.

AP positions and mesh vertices are mapped into a 2D parameterization of
the surface (best-fit plane of the APs by default; an azimuthal projection
when the AP set is strongly non-planar).  Inside the convex hull of the
projected APs, per-vertex Sibson weights are computed exactly via
Bowyer-Watson virtual insertion: the weight of each natural neighbor is
the Voronoi area the query point would steal from it.  Outside the hull
the query is projected to the nearest hull edge and interpolated linearly
along it, which is the boundary limit of the natural-neighbor field, so
the combined field is continuous, exact at the APs, bounded by the input
values, and linearly precise inside the hull.

Degenerate AP configurations (collinear in the parameterization) fall
back to inverse-distance weighting with a warning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from ..errors import ParameterError
from ..geometry.aps import AuricularPointSet
from ..geometry.mesh import SurfaceMesh


@dataclass(frozen=True)
class ContourField:
    """Per-vertex scalar field over a mesh (dimensionless normalized AESR)."""

    mesh: SurfaceMesh
    values: np.ndarray

    def __post_init__(self):
        self.values.flags.writeable = False


def interpolate_contour(mesh: SurfaceMesh, aps: AuricularPointSet, values,
                        projection: str = "auto") -> ContourField:
    """Interpolate AP values onto every mesh vertex.

    ``projection``: "plane", "azimuthal", or "auto" (plane unless the AP
    set is strongly non-planar).
    """
    sites3d = aps.positions()
    vals = np.asarray(values, dtype=np.float64)
    if sites3d.shape[0] < 3:
        raise ParameterError("need at least 3 APs")
    if vals.shape != (sites3d.shape[0],):
        raise ParameterError(
            f"{vals.size} values for {sites3d.shape[0]} APs"
        )
    if not np.isfinite(vals).all():
        raise ParameterError("AP values must be finite")

    sites2d, queries2d = _parameterize(sites3d, mesh.vertices, projection)
    field = interpolate_2d(sites2d, vals, queries2d)
    return ContourField(mesh=mesh, values=field)


def _parameterize(sites3d, queries3d, projection):
    center = sites3d.mean(axis=0)
    u, s, vt = np.linalg.svd(sites3d - center, full_matrices=False)
    if projection == "auto":
        # out-of-plane spread comparable to the in-plane minor axis means
        # a plane projection would fold the surface over itself
        flat = s[2] / s[1] if s.size > 2 and s[1] > 0 else 0.0
        projection = "azimuthal" if flat > 0.9 else "plane"
    if projection == "plane":
        b1, b2 = vt[0], vt[1]
        sites2d = (sites3d - center) @ np.stack([b1, b2], axis=1)
        queries2d = (queries3d - center) @ np.stack([b1, b2], axis=1)
        return sites2d, queries2d
    if projection == "azimuthal":
        w = vt[2] if vt.shape[0] > 2 else np.array([0.0, 0.0, 1.0])
        radius = max(np.linalg.norm(sites3d - center, axis=1).max(), 1e-9)
        origin = center - 2.0 * radius * w
        b1, b2 = vt[0], vt[1]

        def project(points):
            d = points - origin
            d = d / np.linalg.norm(d, axis=1)[:, None]
            cos_t = np.clip(d @ w, -1.0, 1.0)
            theta = np.arccos(cos_t)
            phi = np.arctan2(d @ b2, d @ b1)
            return np.stack([theta * np.cos(phi), theta * np.sin(phi)], axis=1)

        return project(sites3d), project(queries3d)
    raise ParameterError("projection must be 'auto', 'plane' or 'azimuthal'")


def interpolate_2d(sites, values, queries) -> np.ndarray:
    """Natural-neighbor interpolation of (site, value) pairs at 2D queries."""
    sites = np.asarray(sites, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    scale = max(np.ptp(sites[:, 0]), np.ptp(sites[:, 1]), 1e-12)
    site_tol = 1e-9 * scale

    try:
        tri = Delaunay(sites)
    except QhullError:
        warnings.warn(
            "APs are collinear in the parameterization; "
            "falling back to inverse-distance weighting",
            stacklevel=2,
        )
        return _shepard(sites, values, queries, site_tol)

    simplices = tri.simplices
    cc = np.empty((simplices.shape[0], 2))
    r2 = np.empty(simplices.shape[0])
    degenerate = False
    for t, (i, j, k) in enumerate(simplices):
        c = _circumcenter(sites[i], sites[j], sites[k])
        if c is None:
            degenerate = True
            break
        cc[t] = c
        d = sites[i] - c
        r2[t] = d @ d
    if degenerate:
        warnings.warn(
            "degenerate AP triangulation; "
            "falling back to inverse-distance weighting",
            stacklevel=2,
        )
        return _shepard(sites, values, queries, site_tol)

    located = tri.find_simplex(queries)
    out = np.empty(queries.shape[0])
    hull_edges = tri.convex_hull  # (H, 2) site-index pairs

    outside = located < 0
    if outside.any():
        out[outside] = _hull_edge_interp(sites, values, hull_edges,
                                         queries[outside])

    inside_idx = np.where(~outside)[0]
    r2tol = r2 * (1.0 + 1e-12) + (1e-12 * scale) ** 2
    for qi in inside_idx:
        q = queries[qi]
        # coincident with a site: exact
        d2s = np.einsum("ij,ij->i", sites - q, sites - q)
        nearest = int(np.argmin(d2s))
        if d2s[nearest] <= site_tol * site_tol:
            out[qi] = values[nearest]
            continue
        dq = cc - q
        cavity = np.where(np.einsum("ij,ij->i", dq, dq) < r2tol)[0]
        w = _sibson_weights(sites, simplices, cc, cavity, q)
        if w is None:
            # cocircular/collinear edge case: linear in the containing simplex
            out[qi] = _simplex_interp(tri, sites, values, int(located[qi]), q)
        else:
            out[qi] = w @ values
    return out


def _circumcenter(a, b, c):
    bx, by = b[0] - a[0], b[1] - a[1]
    cx, cy = c[0] - a[0], c[1] - a[1]
    d = 2.0 * (bx * cy - by * cx)
    scale2 = max(bx * bx + by * by, cx * cx + cy * cy)
    if abs(d) < 1e-12 * scale2:
        return None
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return np.array([a[0] + ux, a[1] + uy])


def _sibson_weights(sites, simplices, cc, cavity, q):
    """Stolen-area weights of the natural neighbors of q; None on degeneracy."""
    if cavity.size == 0:
        return None
    edge_count: dict = {}
    tris_of_site: dict = {}
    for t in cavity:
        i, j, k = simplices[t]
        for v in (i, j, k):
            tris_of_site.setdefault(int(v), []).append(t)
        for e in ((i, j), (j, k), (k, i)):
            key = (min(e), max(e))
            edge_count[key] = edge_count.get(key, 0) + 1
    boundary = [e for e, n in edge_count.items() if n == 1]

    new_cc: dict = {}
    for vi, vj in boundary:
        c = _circumcenter(q, sites[vi], sites[vj])
        if c is None:
            return None
        new_cc[(vi, vj)] = c

    neighbors = sorted(tris_of_site)
    weights = np.zeros(sites.shape[0])
    for v in neighbors:
        poly = [cc[t] for t in tris_of_site[v]]
        for (vi, vj), c in new_cc.items():
            if v == vi or v == vj:
                poly.append(c)
        if len(poly) < 3:
            continue
        weights[v] = _convex_area(np.asarray(poly))
    total = weights.sum()
    if total <= 0 or not np.isfinite(total):
        return None
    return weights / total


def _convex_area(pts):
    center = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    order = np.argsort(ang)
    p = pts[order]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _simplex_interp(tri, sites, values, simplex, q):
    """Barycentric interpolation inside one Delaunay triangle."""
    tr = tri.transform[simplex]
    b = tr[:2] @ (q - tr[2])
    bary = np.array([b[0], b[1], 1.0 - b.sum()])
    bary = np.clip(bary, 0.0, 1.0)
    bary /= bary.sum()
    return float(values[tri.simplices[simplex]] @ bary)


def _hull_edge_interp(sites, values, hull_edges, queries):
    """Project outside queries to the nearest hull edge, interpolate along it."""
    a = sites[hull_edges[:, 0]]  # (H, 2)
    b = sites[hull_edges[:, 1]]
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2[ab2 == 0] = 1e-300
    aq = queries[:, None, :] - a[None, :, :]          # (Q, H, 2)
    t = np.einsum("qhj,hj->qh", aq, ab) / ab2[None, :]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d2 = np.einsum("qhj,qhj->qh", queries[:, None, :] - proj,
                   queries[:, None, :] - proj)
    best = np.argmin(d2, axis=1)
    rows = np.arange(queries.shape[0])
    tb = t[rows, best]
    va = values[hull_edges[best, 0]]
    vb = values[hull_edges[best, 1]]
    return (1.0 - tb) * va + tb * vb


def _shepard(sites, values, queries, site_tol, power: float = 2.0):
    d2 = np.einsum("qsj,qsj->qs", queries[:, None, :] - sites[None, :, :],
                   queries[:, None, :] - sites[None, :, :])
    out = np.empty(queries.shape[0])
    at_site = d2.min(axis=1) <= site_tol * site_tol
    out[at_site] = values[np.argmin(d2[at_site], axis=1)]
    rest = ~at_site
    w = 1.0 / np.power(d2[rest], power / 2.0)
    out[rest] = (w @ values) / w.sum(axis=1)
    return out
