"""ASCII OBJ / PLY readers and PLY / legacy-VTK writers.

Only the ASCII flavors are supported: OBJ ``v``/``f`` records and PLY
``element vertex`` / ``element face`` with float properties.  Extra
per-vertex PLY properties (e.g. a scalar written by the contour
exporter) are tolerated on read and can be recovered with
``read_ply_vertex_scalars``.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import EmptyMeshError, MeshFormatError, UnsupportedTopologyError
from .mesh import SurfaceMesh


def load_mesh(path, fmt: str | None = None) -> SurfaceMesh:
    """Load and validate a triangle mesh from an ASCII OBJ or PLY file.

    ``fmt`` may be "obj" or "ply"; inferred from the extension when None.
    """
    path = os.fspath(path)
    if fmt is None:
        ext = os.path.splitext(path)[1].lower().lstrip(".")
        fmt = ext if ext in ("obj", "ply") else None
    if fmt not in ("obj", "ply"):
        raise MeshFormatError(f"cannot infer mesh format for '{path}'; pass fmt='obj' or 'ply'")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if fmt == "obj":
        vertices, faces = _parse_obj(lines)
    else:
        vertices, faces, _ = _parse_ply(lines)
    if not vertices:
        raise EmptyMeshError(f"no vertices in '{path}'")
    if not faces:
        raise EmptyMeshError(f"no faces in '{path}'")
    return SurfaceMesh(np.asarray(vertices), np.asarray(faces))


def _parse_obj(lines):
    vertices = []
    faces = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshFormatError("vertex record needs 3 coordinates", line=lineno)
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise MeshFormatError(f"bad vertex coordinate in '{line}'", line=lineno)
        elif tag == "f":
            refs = parts[1:]
            if len(refs) != 3:
                raise UnsupportedTopologyError(
                    f"only triangle faces are supported; got {len(refs)} "
                    f"vertices on line {lineno}"
                )
            idx = []
            for ref in refs:
                head = ref.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise MeshFormatError(f"bad face index '{ref}'", line=lineno)
                # OBJ indices are 1-based; negative indices count from the end
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            faces.append(idx)
        # vn/vt/usemtl/o/g/s records are ignored
    return vertices, faces


def _parse_ply(lines):
    """Parse ASCII PLY; returns (vertices, faces, vertex property table)."""
    if not lines or lines[0].strip() != "ply":
        raise MeshFormatError("not a PLY file (missing 'ply' magic)", line=1)
    n_vertex = n_face = None
    vertex_props = []  # property names in declaration order
    current_element = None
    body_start = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        parts = line.split()
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise MeshFormatError("only ASCII PLY is supported", line=lineno)
        elif parts[0] == "element":
            current_element = parts[1]
            if parts[1] == "vertex":
                n_vertex = int(parts[2])
            elif parts[1] == "face":
                n_face = int(parts[2])
        elif parts[0] == "property":
            if current_element == "vertex" and parts[1] != "list":
                vertex_props.append(parts[-1])
        elif parts[0] == "end_header":
            body_start = lineno
            break
    if body_start is None or n_vertex is None or n_face is None:
        raise MeshFormatError("incomplete PLY header")
    for coord in ("x", "y", "z"):
        if coord not in vertex_props:
            raise MeshFormatError(f"PLY vertex element lacks '{coord}' property")

    body = [l for l in lines[body_start:]]
    ix = vertex_props.index("x")
    iy = vertex_props.index("y")
    iz = vertex_props.index("z")
    vertices = []
    extras = {name: [] for name in vertex_props if name not in ("x", "y", "z")}
    cursor = 0
    parsed = 0
    while parsed < n_vertex:
        if cursor >= len(body):
            raise MeshFormatError("PLY body ended before all vertices were read")
        lineno = body_start + 1 + cursor
        line = body[cursor].strip()
        cursor += 1
        if not line:
            continue
        parts = line.split()
        if len(parts) < len(vertex_props):
            raise MeshFormatError("vertex row has too few columns", line=lineno)
        try:
            vertices.append([float(parts[ix]), float(parts[iy]), float(parts[iz])])
            for name in extras:
                extras[name].append(float(parts[vertex_props.index(name)]))
        except ValueError:
            raise MeshFormatError(f"bad vertex value in '{line}'", line=lineno)
        parsed += 1
    faces = []
    parsed = 0
    while parsed < n_face:
        if cursor >= len(body):
            raise MeshFormatError("PLY body ended before all faces were read")
        lineno = body_start + 1 + cursor
        line = body[cursor].strip()
        cursor += 1
        if not line:
            continue
        parts = line.split()
        try:
            count = int(parts[0])
        except ValueError:
            raise MeshFormatError(f"bad face row '{line}'", line=lineno)
        if count != 3:
            raise UnsupportedTopologyError(
                f"only triangle faces are supported; got a {count}-gon on line {lineno}"
            )
        if len(parts) < 4:
            raise MeshFormatError("face row has too few indices", line=lineno)
        faces.append([int(parts[1]), int(parts[2]), int(parts[3])])
        parsed += 1
    return vertices, faces, extras


def read_ply_vertex_scalars(path) -> dict:
    """Per-vertex scalar properties (beyond x/y/z) from an ASCII PLY file."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    _, _, extras = _parse_ply(lines)
    return {name: np.asarray(vals) for name, vals in extras.items()}


def write_ply(path, mesh: SurfaceMesh, scalars: dict | None = None,
              comments: tuple = ()) -> None:
    """Write an ASCII PLY, optionally with named per-vertex scalar properties."""
    scalars = scalars or {}
    for name, vals in scalars.items():
        if len(vals) != mesh.n_vertices:
            raise ValueError(f"scalar '{name}' has {len(vals)} values for "
                             f"{mesh.n_vertices} vertices")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        for c in comments:
            fh.write(f"comment {c}\n")
        fh.write(f"element vertex {mesh.n_vertices}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        for name in scalars:
            fh.write(f"property float {name}\n")
        fh.write(f"element face {mesh.n_faces}\n")
        fh.write("property list uchar int vertex_indices\n")
        fh.write("end_header\n")
        cols = [mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.vertices[:, 2]]
        cols += [np.asarray(scalars[name], dtype=np.float64) for name in scalars]
        for row in zip(*cols):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def write_vtk(path, mesh: SurfaceMesh, scalars: dict | None = None,
              title: str = "aurisense surface") -> None:
    """Write legacy ASCII VTK PolyData with optional POINT_DATA scalars."""
    scalars = scalars or {}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {mesh.n_vertices} double\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]!r} {v[1]!r} {v[2]!r}\n")
        fh.write(f"POLYGONS {mesh.n_faces} {4 * mesh.n_faces}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
        if scalars:
            fh.write(f"POINT_DATA {mesh.n_vertices}\n")
            for name, vals in scalars.items():
                if len(vals) != mesh.n_vertices:
                    raise ValueError(f"scalar '{name}' has wrong length")
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in vals:
                    fh.write(f"{float(v)!r}\n")
