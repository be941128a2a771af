"""Electrode sensing-area computation and per-point diameter scaling.

The sensing area of an electrode pathway is the true contact patch: the
area of the mesh surface clipped to the interior of the infinite cylinder
around the pathway axis, restricted to the connected patch containing the
contact point.  Clipping is done by recursive midpoint subdivision of each
triangle against the implicit cylinder (inside test on radial distance),
with a linear area fraction at the finest level and the subdivision depth
grown adaptively until the total changes by less than 1e-4 relative.

``solve_diameter`` inverts the area by bisection (the area is monotone in
the diameter but only piecewise smooth on meshes, so no derivatives), and
``design_array`` runs the solve point by point so every electrode of an
array reaches one target area regardless of local curvature.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._accel import USE_NUMBA, maybe_jit
from .errors import (
    AurisenseError,
    NonMonotoneAreaError,
    ParameterError,
    UnreachableTargetError,
    ZeroAreaError,
)
from .geometry.aps import AuricularPointSet
from .geometry.curvature import curvature_field
from .geometry.mesh import SurfaceMesh

DEFAULT_TARGET_AREA = float(np.pi * 1.5 ** 2)  # flat-case area of a 3 mm pathway
AREA_REFINE_TOL = 1e-4   # relative area change between subdivision depths
MAX_TILT_DEG = 85.0      # beyond this the pathway is nearly tangent
_MIN_DEPTH = 4
_MAX_DEPTH = 13


# ----------------------------------------------------------------------
# clipping kernels
# ----------------------------------------------------------------------

def _clipped_areas_loop(tris, cx, cy, cz, ax, ay, az, radius, max_depth):
    """Per-triangle clipped area; scalar stack-based subdivision.

    ``tris`` is (K, 9): the three corners flattened.  Inside test:
    s(p) = radius - (distance of p from the axis line); s >= 0 is inside.
    """
    n = tris.shape[0]
    out = np.zeros(n)
    cap = 4 * (max_depth + 2) + 8
    stack = np.empty((cap, 9))
    sdepth = np.empty(cap, np.int64)
    child = np.empty((4, 9))
    for t in range(n):
        sp = 0
        stack[0, :] = tris[t]
        sdepth[0] = 0
        sp = 1
        acc = 0.0
        while sp > 0:
            sp -= 1
            d = sdepth[sp]
            p0x = stack[sp, 0]; p0y = stack[sp, 1]; p0z = stack[sp, 2]
            p1x = stack[sp, 3]; p1y = stack[sp, 4]; p1z = stack[sp, 5]
            p2x = stack[sp, 6]; p2y = stack[sp, 7]; p2z = stack[sp, 8]

            s0 = _signed_inside(p0x, p0y, p0z, cx, cy, cz, ax, ay, az, radius)
            s1 = _signed_inside(p1x, p1y, p1z, cx, cy, cz, ax, ay, az, radius)
            s2 = _signed_inside(p2x, p2y, p2z, cx, cy, cz, ax, ay, az, radius)

            e1x = p1x - p0x; e1y = p1y - p0y; e1z = p1z - p0z
            e2x = p2x - p0x; e2y = p2y - p0y; e2z = p2z - p0z
            nx = e1y * e2z - e1z * e2y
            ny = e1z * e2x - e1x * e2z
            nz = e1x * e2y - e1y * e2x
            area = 0.5 * np.sqrt(nx * nx + ny * ny + nz * nz)

            if s0 >= 0.0 and s1 >= 0.0 and s2 >= 0.0:
                acc += area  # the cylinder interior is convex
                continue
            if s0 < 0.0 and s1 < 0.0 and s2 < 0.0:
                gx = (p0x + p1x + p2x) / 3.0
                gy = (p0y + p1y + p2y) / 3.0
                gz = (p0z + p1z + p2z) / 3.0
                sc = _signed_inside(gx, gy, gz, cx, cy, cz, ax, ay, az, radius)
                rb0 = (p0x - gx) ** 2 + (p0y - gy) ** 2 + (p0z - gz) ** 2
                rb1 = (p1x - gx) ** 2 + (p1y - gy) ** 2 + (p1z - gz) ** 2
                rb2 = (p2x - gx) ** 2 + (p2y - gy) ** 2 + (p2z - gz) ** 2
                rb = np.sqrt(max(rb0, max(rb1, rb2)))
                if sc < -rb:
                    continue  # whole cell provably outside
            if d >= max_depth:
                acc += area * _linear_fraction(s0, s1, s2)
                continue

            m01x = 0.5 * (p0x + p1x); m01y = 0.5 * (p0y + p1y); m01z = 0.5 * (p0z + p1z)
            m12x = 0.5 * (p1x + p2x); m12y = 0.5 * (p1y + p2y); m12z = 0.5 * (p1z + p2z)
            m20x = 0.5 * (p2x + p0x); m20y = 0.5 * (p2y + p0y); m20z = 0.5 * (p2z + p0z)
            child[0, 0] = p0x; child[0, 1] = p0y; child[0, 2] = p0z
            child[0, 3] = m01x; child[0, 4] = m01y; child[0, 5] = m01z
            child[0, 6] = m20x; child[0, 7] = m20y; child[0, 8] = m20z
            child[1, 0] = m01x; child[1, 1] = m01y; child[1, 2] = m01z
            child[1, 3] = p1x; child[1, 4] = p1y; child[1, 5] = p1z
            child[1, 6] = m12x; child[1, 7] = m12y; child[1, 8] = m12z
            child[2, 0] = m20x; child[2, 1] = m20y; child[2, 2] = m20z
            child[2, 3] = m12x; child[2, 4] = m12y; child[2, 5] = m12z
            child[2, 6] = p2x; child[2, 7] = p2y; child[2, 8] = p2z
            child[3, 0] = m01x; child[3, 1] = m01y; child[3, 2] = m01z
            child[3, 3] = m12x; child[3, 4] = m12y; child[3, 5] = m12z
            child[3, 6] = m20x; child[3, 7] = m20y; child[3, 8] = m20z
            for c in range(4):
                stack[sp, :] = child[c]
                sdepth[sp] = d + 1
                sp += 1
        out[t] = acc
    return out


def _signed_inside_py(px, py, pz, cx, cy, cz, ax, ay, az, radius):
    dx = px - cx
    dy = py - cy
    dz = pz - cz
    along = dx * ax + dy * ay + dz * az
    perp2 = dx * dx + dy * dy + dz * dz - along * along
    if perp2 < 0.0:
        perp2 = 0.0
    return radius - np.sqrt(perp2)


def _linear_fraction_py(s0, s1, s2):
    """Area fraction with s >= 0, assuming s varies linearly over the cell."""
    n_pos = (1 if s0 >= 0.0 else 0) + (1 if s1 >= 0.0 else 0) + (1 if s2 >= 0.0 else 0)
    if n_pos == 0:
        return 0.0
    if n_pos == 3:
        return 1.0
    if n_pos == 1:
        if s0 >= 0.0:
            sp, sa, sb = s0, s1, s2
        elif s1 >= 0.0:
            sp, sa, sb = s1, s0, s2
        else:
            sp, sa, sb = s2, s0, s1
        return sp * sp / ((sp - sa) * (sp - sb))
    if s0 < 0.0:
        sm, sa, sb = s0, s1, s2
    elif s1 < 0.0:
        sm, sa, sb = s1, s0, s2
    else:
        sm, sa, sb = s2, s0, s1
    return 1.0 - sm * sm / ((sm - sa) * (sm - sb))


_signed_inside = maybe_jit(_signed_inside_py)
_linear_fraction = maybe_jit(_linear_fraction_py)
_clipped_areas_numba = maybe_jit(_clipped_areas_loop)


def _clipped_areas_numpy(tris, cx, cy, cz, ax, ay, az, radius, max_depth):
    """Vectorized fallback: level-synchronous subdivision over triangle arrays."""
    center = np.array([cx, cy, cz])
    axis = np.array([ax, ay, az])

    def signed(pts):
        d = pts - center
        along = d @ axis
        perp2 = np.einsum("...i,...i->...", d, d) - along * along
        return radius - np.sqrt(np.maximum(perp2, 0.0))

    def tri_areas(work):
        n = np.cross(work[:, 1] - work[:, 0], work[:, 2] - work[:, 0])
        return 0.5 * np.linalg.norm(n, axis=1)

    k = tris.shape[0]
    out = np.zeros(k)
    work = tris.reshape(k, 3, 3).copy()
    owner = np.arange(k)
    for depth in range(max_depth + 1):
        if work.shape[0] == 0:
            break
        s = signed(work)  # (n, 3)
        areas = tri_areas(work)
        inside = s >= 0.0
        allin = inside.all(axis=1)
        np.add.at(out, owner[allin], areas[allin])
        allout = (~inside).all(axis=1)
        centroid = work.mean(axis=1)
        sc = signed(centroid)
        rb = np.sqrt(np.max(np.einsum(
            "nkj,nkj->nk", work - centroid[:, None, :], work - centroid[:, None, :]
        ), axis=1))
        prune = allout & (sc < -rb)
        live = ~(allin | prune)
        if depth == max_depth:
            frac = _linear_fraction_vec(s[live])
            np.add.at(out, owner[live], areas[live] * frac)
            break
        work = work[live]
        owner = owner[live]
        if work.shape[0] == 0:
            break
        p0, p1, p2 = work[:, 0], work[:, 1], work[:, 2]
        m01 = 0.5 * (p0 + p1)
        m12 = 0.5 * (p1 + p2)
        m20 = 0.5 * (p2 + p0)
        work = np.concatenate([
            np.stack([p0, m01, m20], axis=1),
            np.stack([m01, p1, m12], axis=1),
            np.stack([m20, m12, p2], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ])
        owner = np.concatenate([owner, owner, owner, owner])
    return out


def _linear_fraction_vec(s):
    pos = s >= 0.0
    n_pos = pos.sum(axis=1)
    frac = np.zeros(s.shape[0])
    frac[n_pos == 3] = 1.0

    one = n_pos == 1
    if one.any():
        sp = np.max(np.where(pos[one], s[one], -np.inf), axis=1)
        neg = np.sort(np.where(pos[one], np.inf, s[one]), axis=1)[:, :2]
        frac[one] = sp * sp / ((sp - neg[:, 0]) * (sp - neg[:, 1]))

    two = n_pos == 2
    if two.any():
        sm = np.min(np.where(pos[two], np.inf, s[two]), axis=1)
        ppos = np.sort(np.where(pos[two], s[two], np.inf), axis=1)[:, :2]
        frac[two] = 1.0 - sm * sm / ((sm - ppos[:, 0]) * (sm - ppos[:, 1]))
    return frac


_clipped_areas = _clipped_areas_numba if USE_NUMBA else _clipped_areas_numpy


# ----------------------------------------------------------------------
# public operations
# ----------------------------------------------------------------------

def sensing_area(mesh: SurfaceMesh, center, axis, diameter: float,
                 refine_tol: float = AREA_REFINE_TOL) -> float:
    """Contact-patch area (mm^2) of a cylindrical pathway against the mesh.

    Only the connected component of the clipped surface that contains
    ``center`` counts; a cylinder grazing the far side of a fold does not
    inflate the area.  Raises ``ZeroAreaError`` when the cylinder misses
    the mesh and warns when it also hits a disconnected region.
    """
    per_face, keep, seed_face = _per_face_clipped(mesh, center, axis, diameter, refine_tol)
    positive = np.where(per_face > 0.0)[0]
    if positive.size == 0:
        raise ZeroAreaError("cylinder does not intersect the mesh")
    patch = _connected_patch(mesh, keep[positive], keep[seed_face])
    total = float(per_face.sum())
    patch_mask = np.isin(keep, patch)
    patch_area = float(per_face[patch_mask].sum())
    if total > patch_area * (1.0 + 1e-9) + 1e-12:
        warnings.warn(
            "cylinder intersects a disconnected surface region; "
            "returning the contact-patch area only",
            stacklevel=2,
        )
    return patch_area


def _per_face_clipped(mesh, center, axis, diameter, refine_tol):
    center = np.asarray(center, dtype=np.float64)
    axis = np.asarray(axis, dtype=np.float64)
    nrm = np.linalg.norm(axis)
    if nrm == 0.0:
        raise ParameterError("axis must be a nonzero vector")
    axis = axis / nrm
    if diameter <= 0.0:
        raise ParameterError("diameter must be positive")

    snapped, seed_face_full, bary, dist = mesh.closest_point(center)
    if dist > 1e-6 * max(mesh.bounding_diagonal(), 1.0):
        raise ParameterError(
            f"center is {dist:.3g} mm off the surface; it must lie on the mesh"
        )
    normal = mesh.normal_at(seed_face_full, bary)
    tilt = np.degrees(np.arccos(np.clip(abs(float(axis @ normal)), -1.0, 1.0)))
    if tilt >= MAX_TILT_DEG:
        raise ParameterError(
            f"axis is {tilt:.1f} deg from the surface normal (>= {MAX_TILT_DEG} deg)"
        )

    radius = diameter / 2.0
    # conservative candidate prefilter on face bounding spheres
    v0 = mesh.vertices[mesh.faces[:, 0]]
    v1 = mesh.vertices[mesh.faces[:, 1]]
    v2 = mesh.vertices[mesh.faces[:, 2]]
    centroid = (v0 + v1 + v2) / 3.0
    rb = np.sqrt(np.max(np.stack([
        np.einsum("ij,ij->i", v0 - centroid, v0 - centroid),
        np.einsum("ij,ij->i", v1 - centroid, v1 - centroid),
        np.einsum("ij,ij->i", v2 - centroid, v2 - centroid),
    ], axis=1), axis=1))
    d = centroid - center
    along = d @ axis
    perp = np.sqrt(np.maximum(np.einsum("ij,ij->i", d, d) - along * along, 0.0))
    keep = np.where(perp - rb <= radius)[0]
    if keep.size == 0:
        raise ZeroAreaError("cylinder does not intersect the mesh")
    if seed_face_full not in keep:  # numerical edge; force the seed in
        keep = np.append(keep, seed_face_full)
    seed_pos = int(np.where(keep == seed_face_full)[0][0])

    tris = np.concatenate([
        mesh.vertices[mesh.faces[keep, 0]],
        mesh.vertices[mesh.faces[keep, 1]],
        mesh.vertices[mesh.faces[keep, 2]],
    ], axis=1)

    prev = None
    per_face = None
    for depth in range(_MIN_DEPTH, _MAX_DEPTH + 1):
        per_face = _clipped_areas(
            tris, center[0], center[1], center[2],
            axis[0], axis[1], axis[2], radius, depth,
        )
        total = per_face.sum()
        if prev is not None and abs(total - prev) <= refine_tol * max(total, 1e-300):
            break
        prev = total
    return per_face, keep, seed_pos


def _connected_patch(mesh, positive_faces, seed_face):
    """Faces of the positive-area component containing the seed face."""
    positive = set(int(f) for f in positive_faces)
    if seed_face not in positive:
        positive.add(int(seed_face))
    adjacency = mesh.face_adjacency()
    comp = {int(seed_face)}
    frontier = [int(seed_face)]
    while frontier:
        f = frontier.pop()
        for g in adjacency[f]:
            g = int(g)
            if g in positive and g not in comp:
                comp.add(g)
                frontier.append(g)
    return np.fromiter(sorted(comp), dtype=np.int64)


def solve_diameter(mesh: SurfaceMesh, center, axis, target_area: float,
                   tol: float = 1e-3, bracket_low: float = 0.1) -> float:
    """Diameter whose sensing area matches ``target_area`` to relative ``tol``.

    Bisection with automatic bracket expansion; every evaluation is checked
    against the others for monotonicity, and a decrease beyond numerical
    slack raises ``NonMonotoneAreaError`` naming the violating sub-bracket.
    ``UnreachableTargetError`` signals a target beyond the local patch.
    """
    if target_area <= 0.0:
        raise ParameterError("target_area must be positive")
    evals: list = []

    def area_at(d):
        try:
            a = sensing_area(mesh, center, axis, d)
        except ZeroAreaError:
            a = 0.0
        evals.append((d, a))
        _check_monotone(evals)
        return a

    lo = bracket_low
    a_lo = area_at(lo)
    while a_lo > target_area and lo > 1e-3:
        lo /= 2.0
        a_lo = area_at(lo)
    if a_lo > target_area * (1.0 + tol):
        raise UnreachableTargetError(
            f"target {target_area:.6g} mm^2 is below the area at the "
            f"minimum diameter {lo:.3g} mm ({a_lo:.6g} mm^2)"
        )

    hi = max(2.0 * lo, 1.0)
    a_hi = area_at(hi)
    prev_hi = a_hi
    expansions = 0
    while a_hi < target_area:
        hi *= 2.0
        a_hi = area_at(hi)
        expansions += 1
        if expansions > 60:
            raise UnreachableTargetError("bracket expansion exhausted")
        if abs(a_hi - prev_hi) <= 1e-9 * max(target_area, a_hi):
            # the cylinder swallowed the whole patch: the area has plateaued
            raise UnreachableTargetError(
                f"target {target_area:.6g} mm^2 exceeds the patch maximum "
                f"(~{a_hi:.6g} mm^2)"
            )
        prev_hi = a_hi

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        a_mid = area_at(mid)
        if abs(a_mid - target_area) <= tol * target_area:
            return float(mid)
        if a_mid < target_area:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(hi, 1.0):
            break
    raise AurisenseError("diameter bisection failed to converge")


def _check_monotone(evals):
    if len(evals) < 2:
        return
    by_d = sorted(evals)
    for (d0, a0), (d1, a1) in zip(by_d, by_d[1:]):
        slack = 5e-4 * max(a0, a1) + 1e-12
        if a1 < a0 - slack:
            raise NonMonotoneAreaError(
                f"sensing area decreased from {a0:.6g} to {a1:.6g} mm^2 "
                f"on diameters [{d0:.6g}, {d1:.6g}] mm",
                bracket=(d0, d1),
            )


@dataclass(frozen=True)
class ElectrodeSpec:
    ap_label: str
    center: np.ndarray
    axis: np.ndarray
    diameter_mm: float
    tilt_deg: float
    sensing_area_mm2: float
    mean_curvature_per_mm: float = float("nan")

    def to_json_obj(self) -> dict:
        return {
            "ap": self.ap_label,
            "center": [float(x) for x in self.center],
            "axis": [float(x) for x in self.axis],
            "diameter_mm": float(self.diameter_mm),
            "tilt_deg": float(self.tilt_deg),
            "area_mm2": float(self.sensing_area_mm2),
            "mean_curvature_per_mm": float(self.mean_curvature_per_mm),
        }


@dataclass(frozen=True)
class ArrayDesign:
    electrodes: tuple
    target_area_mm2: float
    max_rel_deviation: float
    failed: tuple = field(default_factory=tuple)

    def to_json_obj(self) -> dict:
        return {
            "target_area_mm2": float(self.target_area_mm2),
            "max_rel_deviation": float(self.max_rel_deviation),
            "electrodes": [e.to_json_obj() for e in self.electrodes],
            "failed": [{"ap": ap, "reason": reason} for ap, reason in self.failed],
        }


def _tilt_axis(normal, tilt_deg):
    """Rotate the normal by tilt_deg around a deterministic tangent direction."""
    n = normal / np.linalg.norm(normal)
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t = ref - (ref @ n) * n
    t /= np.linalg.norm(t)
    th = np.radians(tilt_deg)
    return np.cos(th) * n + np.sin(th) * t


def design_array(mesh: SurfaceMesh, aps: AuricularPointSet,
                 target_area: float = DEFAULT_TARGET_AREA,
                 tilt_policy="normal", tol: float = 1e-3) -> ArrayDesign:
    """One equal-sensing-area electrode per AP.

    ``tilt_policy`` is "normal" (pathway along the surface normal) or a
    mapping/label -> tilt in degrees (or one float applied to every AP).
    Per-AP solver failures leave a partial design and are listed in
    ``failed``.
    """
    curv = curvature_field(mesh)
    electrodes = []
    failed = []
    for p in aps:
        if tilt_policy == "normal":
            tilt = 0.0
        elif isinstance(tilt_policy, dict):
            tilt = float(tilt_policy.get(p.label, 0.0))
        else:
            tilt = float(tilt_policy)
        if not 0.0 <= tilt < 90.0:
            raise ParameterError(f"{p.label}: tilt must be in [0, 90) deg")
        normal = mesh.normal_at(p.face, p.barycentric)
        axis = _tilt_axis(normal, tilt) if tilt else normal
        try:
            d = solve_diameter(mesh, p.position, axis, target_area, tol=tol)
            area = sensing_area(mesh, p.position, axis, d)
        except AurisenseError as exc:
            failed.append((p.label, str(exc)))
            continue
        h_vals = curv.mean[mesh.faces[p.face]]
        h_here = float(h_vals @ p.barycentric)
        electrodes.append(ElectrodeSpec(
            ap_label=p.label, center=p.position, axis=axis,
            diameter_mm=d, tilt_deg=tilt, sensing_area_mm2=area,
            mean_curvature_per_mm=h_here,
        ))
    if electrodes:
        deviation = max(abs(e.sensing_area_mm2 - target_area) / target_area
                        for e in electrodes)
    else:
        deviation = float("nan")
    return ArrayDesign(
        electrodes=tuple(electrodes),
        target_area_mm2=target_area,
        max_rel_deviation=deviation,
        failed=tuple(failed),
    )


def write_design_json(path, design: ArrayDesign, meta: dict | None = None) -> None:
    obj = design.to_json_obj()
    if meta:
        obj["_meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
