"""Auricular point (AP) placement from a normalized template layout.

A template is a list of labeled points in the unit cube of the canonical
ear bounding box.  Placement maps each template point through the target
mesh's axis-aligned bounding box and projects it to the nearest surface
point, which makes the layout proportionally scaled: the same template on
a uniformly scaled mesh lands on the correspondingly scaled positions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import ParameterError, PlacementError
from .mesh import SurfaceMesh

# Fraction of the bounding-box diagonal beyond which a projection is
# considered ambiguous and rejected.
PROJECTION_TOLERANCE = 0.20


@dataclass(frozen=True)
class AuricularPoint:
    label: str
    position: np.ndarray  # (3,) mm, on the surface
    face: int
    barycentric: np.ndarray  # (3,), nonnegative, sums to 1


@dataclass(frozen=True)
class AuricularPointSet:
    points: tuple

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def labels(self):
        return [p.label for p in self.points]

    def positions(self) -> np.ndarray:
        return np.asarray([p.position for p in self.points])

    def to_json_obj(self) -> dict:
        return {
            "aps": [
                {
                    "label": p.label,
                    "position": [float(x) for x in p.position],
                    "face": int(p.face),
                    "barycentric": [float(x) for x in p.barycentric],
                }
                for p in self.points
            ]
        }

    @staticmethod
    def from_json_obj(obj) -> "AuricularPointSet":
        pts = []
        for rec in obj["aps"]:
            pts.append(AuricularPoint(
                label=str(rec["label"]),
                position=np.asarray(rec["position"], dtype=np.float64),
                face=int(rec.get("face", -1)),
                barycentric=np.asarray(rec.get("barycentric", [1.0, 0.0, 0.0])),
            ))
        return AuricularPointSet(points=tuple(pts))


def load_template(path) -> list:
    """Parse a template file: one ``label x y z`` line per AP, xyz in [0,1]."""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParameterError(
                    f"template line {lineno}: expected 'label x y z', got '{line}'"
                )
            try:
                xyz = [float(parts[1]), float(parts[2]), float(parts[3])]
            except ValueError:
                raise ParameterError(f"template line {lineno}: bad coordinate")
            if not all(0.0 <= c <= 1.0 for c in xyz):
                raise ParameterError(
                    f"template line {lineno}: coordinates must be in [0, 1]"
                )
            entries.append((parts[0], np.asarray(xyz)))
    if not entries:
        raise ParameterError("template file contains no points")
    labels = [e[0] for e in entries]
    if len(set(labels)) != len(labels):
        raise ParameterError("template labels must be unique")
    return entries


def default_template(n: int = 13) -> list:
    """Built-in illustrative layout with 13 (or the derived 10) APs.

    The 10-point variant drops the 3rd, 7th and 11th entries of the full
    layout and relabels the remainder AP1..AP10.
    """
    name = {13: "ap13.txt", 10: "ap10.txt"}.get(n)
    if name is None:
        raise ParameterError("default templates exist for n in {10, 13}")
    ref = resources.files("aurisense.geometry").joinpath("templates", name)
    with resources.as_file(ref) as path:
        return load_template(path)


def place_aps(mesh: SurfaceMesh, template) -> AuricularPointSet:
    """Project a normalized template onto the mesh surface.

    ``template`` may be a path or a parsed list of ``(label, xyz01)``.
    Raises ``PlacementError`` if any projection lands farther than 20% of
    the bounding-box diagonal from its template position.
    """
    if isinstance(template, (str, bytes)) or hasattr(template, "__fspath__"):
        template = load_template(template)
    lo, hi = mesh.bounding_box()
    diag = mesh.bounding_diagonal()
    points = []
    for label, unit in template:
        target = lo + np.asarray(unit) * (hi - lo)
        pos, face, bary, dist = mesh.closest_point(target)
        if dist > PROJECTION_TOLERANCE * diag:
            raise PlacementError(
                f"{label}: nearest surface point is {dist:.3g} mm away "
                f"(> {PROJECTION_TOLERANCE:.0%} of the bounding diagonal)"
            )
        points.append(AuricularPoint(
            label=label, position=pos, face=face, barycentric=bary,
        ))
    return AuricularPointSet(points=tuple(points))


def write_aps_json(path, aps: AuricularPointSet, meta: dict | None = None) -> None:
    obj = aps.to_json_obj()
    if meta:
        obj["_meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_aps_json(path) -> AuricularPointSet:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if "aps" in obj:
        return AuricularPointSet.from_json_obj(obj)
    if "electrodes" in obj:  # accept an array-design file: centers become APs
        pts = []
        for rec in obj["electrodes"]:
            pts.append(AuricularPoint(
                label=str(rec["ap"]),
                position=np.asarray(rec["center"], dtype=np.float64),
                face=-1,
                barycentric=np.asarray([1.0, 0.0, 0.0]),
            ))
        return AuricularPointSet(points=tuple(pts))
    raise ParameterError("JSON file has neither 'aps' nor 'electrodes'")
