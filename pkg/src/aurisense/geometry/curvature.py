"""Per-vertex principal curvature by local quadric fitting.

At each vertex the k-ring neighborhood is expressed in the tangent frame
and a height field h(u, w) = a u^2 + b u w + c w^2 + d u + e w is fitted
by least squares (ridge-stabilized normal equations).  Principal
curvatures come from the shape operator of that Monge patch; the sign
convention makes a sphere with outward normals convex-positive
(H = 1/R > 0).

The fit needs at least 5 distinct neighbors; vertices below that are
retried with progressively larger rings and flagged if they never reach
5.  Both kernel backends (see ``aurisense._accel``) solve the identical
regularized system, so they agree to solver roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._accel import USE_NUMBA, maybe_jit
from ..errors import ParameterError
from .mesh import SurfaceMesh

_RIDGE = 1e-10  # relative Tikhonov weight on the normal equations
_MIN_NEIGHBORS = 5
_MAX_RING_GROWTH = 3


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex curvatures in 1/mm; ``flagged`` lists unfit vertices."""

    kappa1: np.ndarray
    kappa2: np.ndarray
    mean: np.ndarray
    flagged: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        for arr in (self.kappa1, self.kappa2, self.mean, self.flagged):
            arr.flags.writeable = False


def _tangent_frames(normals: np.ndarray):
    """Orthonormal (t1, t2) spanning each tangent plane."""
    n = normals
    ref = np.zeros_like(n)
    use_x = np.abs(n[:, 0]) < 0.9
    ref[use_x, 0] = 1.0
    ref[~use_x, 1] = 1.0
    t1 = ref - (np.einsum("ij,ij->i", ref, n))[:, None] * n
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(n, t1)
    return t1, t2


def _principal_from_coeffs(a, b, c, d, e):
    """Shape-operator eigenvalues of the Monge patch, convex-positive."""
    s = np.sqrt(1.0 + d * d + e * e)
    L = 2.0 * a / s
    M = b / s
    N = 2.0 * c / s
    E = 1.0 + d * d
    F = d * e
    G = 1.0 + e * e
    det_i = E * G - F * F
    tr = (G * L - 2.0 * F * M + E * N) / det_i
    det = (L * N - M * M) / det_i
    h = 0.5 * tr
    disc = np.sqrt(np.maximum(h * h - det, 0.0))
    # height measured along the outward normal: flip so convex is positive
    k1 = -(h - disc)
    k2 = -(h + disc)
    return k1, k2


# ----------------------------------------------------------------------
# kernels: accumulate + solve the per-vertex 5x5 normal equations
# ----------------------------------------------------------------------

def _fit_coeffs_loop(vertices, t1, t2, normals, query, indptr, indices):
    nq = query.shape[0]
    coeffs = np.zeros((nq, 5))
    ok = np.zeros(nq, dtype=np.bool_)
    ata = np.zeros((5, 5))
    atb = np.zeros(5)
    row = np.zeros(5)
    for qi in range(nq):
        v = query[qi]
        lo = indptr[qi]
        hi = indptr[qi + 1]
        if hi - lo < _MIN_NEIGHBORS:
            continue
        for i in range(5):
            atb[i] = 0.0
            for j in range(5):
                ata[i, j] = 0.0
        for p in range(lo, hi):
            u = indices[p]
            dx = vertices[u, 0] - vertices[v, 0]
            dy = vertices[u, 1] - vertices[v, 1]
            dz = vertices[u, 2] - vertices[v, 2]
            uu = dx * t1[v, 0] + dy * t1[v, 1] + dz * t1[v, 2]
            ww = dx * t2[v, 0] + dy * t2[v, 1] + dz * t2[v, 2]
            hh = dx * normals[v, 0] + dy * normals[v, 1] + dz * normals[v, 2]
            row[0] = uu * uu
            row[1] = uu * ww
            row[2] = ww * ww
            row[3] = uu
            row[4] = ww
            for i in range(5):
                atb[i] += row[i] * hh
                for j in range(5):
                    ata[i, j] += row[i] * row[j]
        trace = ata[0, 0] + ata[1, 1] + ata[2, 2] + ata[3, 3] + ata[4, 4]
        ridge = _RIDGE * trace / 5.0 + 1e-300
        for i in range(5):
            ata[i, i] += ridge
        coeffs[qi] = np.linalg.solve(ata, atb)
        ok[qi] = True
    return coeffs, ok


_fit_coeffs_numba = maybe_jit(_fit_coeffs_loop)


def _fit_coeffs_numpy(vertices, t1, t2, normals, query, indptr, indices):
    nq = query.shape[0]
    coeffs = np.zeros((nq, 5))
    counts = np.diff(indptr)
    ok = counts >= _MIN_NEIGHBORS
    if not ok.any():
        return coeffs, ok
    # pair-expanded arrays over every (query, neighbor) edge
    qidx = np.repeat(np.arange(nq), counts)
    keep = ok[qidx]
    qidx = qidx[keep]
    nbr = indices[np.repeat(ok, counts)]
    vq = query[qidx]
    d = vertices[nbr] - vertices[vq]
    uu = np.einsum("ij,ij->i", d, t1[vq])
    ww = np.einsum("ij,ij->i", d, t2[vq])
    hh = np.einsum("ij,ij->i", d, normals[vq])
    rows = np.stack([uu * uu, uu * ww, ww * ww, uu, ww], axis=1)
    ata = np.zeros((nq, 5, 5))
    atb = np.zeros((nq, 5))
    np.add.at(ata, qidx, rows[:, :, None] * rows[:, None, :])
    np.add.at(atb, qidx, rows * hh[:, None])
    trace = np.trace(ata, axis1=1, axis2=2)
    ridge = _RIDGE * trace / 5.0 + 1e-300
    ata[:, np.arange(5), np.arange(5)] += ridge[:, None]
    coeffs[ok] = np.linalg.solve(ata[ok], atb[ok])
    return coeffs, ok


_fit_coeffs = _fit_coeffs_numba if USE_NUMBA else _fit_coeffs_numpy


def _neighborhood_csr(mesh: SurfaceMesh, query, k_ring: int):
    indptr = [0]
    indices = []
    for v in query:
        ring = mesh.k_ring(int(v), k_ring)
        indices.append(ring)
        indptr.append(indptr[-1] + ring.size)
    flat = np.concatenate(indices) if indices else np.empty(0, dtype=np.int64)
    return np.asarray(indptr, dtype=np.int64), flat


def curvature_field(mesh: SurfaceMesh, k_ring: int = 2) -> CurvatureField:
    """Principal and mean curvature at every vertex.

    Vertices whose neighborhood is too small for the quadric fit are
    retried with rings up to ``k_ring + 3``; any survivor is reported in
    ``flagged`` with curvature set to 0.
    """
    if k_ring < 1:
        raise ParameterError("k_ring must be >= 1")
    t1, t2 = _tangent_frames(mesh.vertex_normals)
    k1 = np.zeros(mesh.n_vertices)
    k2 = np.zeros(mesh.n_vertices)
    pending = np.arange(mesh.n_vertices, dtype=np.int64)
    ring = k_ring
    while pending.size and ring <= k_ring + _MAX_RING_GROWTH:
        indptr, indices = _neighborhood_csr(mesh, pending, ring)
        coeffs, ok = _fit_coeffs(
            mesh.vertices, t1, t2, mesh.vertex_normals, pending, indptr, indices
        )
        done = pending[ok]
        ka, kb = _principal_from_coeffs(*(coeffs[ok].T))
        k1[done] = ka
        k2[done] = kb
        pending = pending[~ok]
        ring += 1
    mean = 0.5 * (k1 + k2)
    return CurvatureField(kappa1=k1, kappa2=k2, mean=mean, flagged=pending)
