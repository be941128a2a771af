import numpy as np
import pytest

from aurisense.electrode import (
    DEFAULT_TARGET_AREA,
    design_array,
    sensing_area,
    solve_diameter,
)
from aurisense.errors import (
    ParameterError,
    UnreachableTargetError,
)
from aurisense.geometry import place_aps
from aurisense.geometry.mesh import SurfaceMesh
from aurisense.geometry.primitives import make_plane_grid

ORIGIN = np.zeros(3)
Z = np.array([0.0, 0.0, 1.0])


def tilted_axis(theta_deg):
    th = np.radians(theta_deg)
    return np.array([np.sin(th), 0.0, np.cos(th)])


def test_plane_circle_area(plane_fine):
    # clipped-triangle sum vs the analytic pi r^2, refinement edge <= D/10
    area = sensing_area(plane_fine, ORIGIN, Z, 3.0)
    expected = np.pi * 1.5 ** 2
    assert abs(area - expected) / expected < 5e-3


@pytest.mark.parametrize("theta", [15.0, 30.0])
def test_plane_tilted_ellipse_area(plane_fine, theta):
    area = sensing_area(plane_fine, ORIGIN, tilted_axis(theta), 3.0)
    expected = np.pi * 1.5 ** 2 / np.cos(np.radians(theta))
    assert abs(area - expected) / expected < 5e-3


def test_tilt_monotone_up_to_60deg(plane_fine):
    areas = []
    for theta in (0.0, 15.0, 30.0, 45.0, 60.0):
        a = sensing_area(plane_fine, ORIGIN, tilted_axis(theta), 3.0)
        expected = np.pi * 1.5 ** 2 / np.cos(np.radians(theta))
        assert abs(a - expected) / expected < 0.01
        areas.append(a)
    assert all(b > a for a, b in zip(areas, areas[1:]))


def test_sphere_cap_area(icosphere_r10):
    v0 = icosphere_r10.vertices[0]
    axis = v0 / np.linalg.norm(v0)
    # the cylinder also grazes the far side of the sphere; only the
    # connected patch around the contact point counts
    with pytest.warns(UserWarning, match="disconnected"):
        area = sensing_area(icosphere_r10, v0, axis, 6.0)
    expected = 2 * np.pi * 10.0 * (10.0 - np.sqrt(100.0 - 9.0))  # 28.94
    assert abs(area - expected) / expected < 5e-3


def test_scale_covariance(plane_fine):
    a1 = sensing_area(plane_fine, ORIGIN, Z, 3.0)
    s = 2.5
    scaled = SurfaceMesh(plane_fine.vertices * s, plane_fine.faces)
    a2 = sensing_area(scaled, ORIGIN, Z, 3.0 * s)
    assert abs(a2 - s ** 2 * a1) / (s ** 2 * a1) < 1e-9


def test_center_off_surface_rejected(plane_fine):
    with pytest.raises(ParameterError, match="surface"):
        sensing_area(plane_fine, np.array([0.0, 0.0, 5.0]), Z, 3.0)


def test_tangent_axis_rejected(plane_fine):
    with pytest.raises(ParameterError, match="deg"):
        sensing_area(plane_fine, ORIGIN, tilted_axis(88.0), 3.0)


def test_bad_diameter(plane_fine):
    with pytest.raises(ParameterError):
        sensing_area(plane_fine, ORIGIN, Z, -1.0)


def test_solve_diameter_plane(plane_fine):
    d = solve_diameter(plane_fine, ORIGIN, Z, np.pi * 1.5 ** 2)
    assert abs(d - 3.0) / 3.0 < 1e-3
    d = solve_diameter(plane_fine, ORIGIN, Z, 12.566)
    assert abs(d - 4.0) / 4.0 < 1e-3


def test_solve_diameter_sphere(icosphere_r10):
    v0 = icosphere_r10.vertices[0]
    axis = v0 / np.linalg.norm(v0)
    target = 28.94
    with pytest.warns(UserWarning, match="disconnected"):
        d = solve_diameter(icosphere_r10, v0, axis, target)
        area = sensing_area(icosphere_r10, v0, axis, d)
    assert abs(area - target) / target <= 1e-3


def test_solver_monotone_in_target(plane_fine):
    d_small = solve_diameter(plane_fine, ORIGIN, Z, 5.0)
    d_large = solve_diameter(plane_fine, ORIGIN, Z, 9.0)
    assert d_small < d_large


def test_unreachable_target(plane_coarse):
    # the 20x20 mm plane holds 400 mm^2 at most
    with pytest.raises(UnreachableTargetError):
        solve_diameter(plane_coarse, ORIGIN, Z, 5000.0)


def test_design_array_plane_all_three_mm(plane_fine):
    template = [(f"AP{i+1}", np.array(xyz)) for i, xyz in enumerate([
        (0.3, 0.3, 0.5), (0.7, 0.3, 0.5), (0.3, 0.7, 0.5), (0.7, 0.7, 0.5),
        (0.5, 0.5, 0.5), (0.4, 0.6, 0.5), (0.6, 0.4, 0.5), (0.35, 0.5, 0.5),
        (0.5, 0.35, 0.5), (0.65, 0.6, 0.5),
    ])]
    aps = place_aps(plane_fine, template)
    design = design_array(plane_fine, aps, target_area=DEFAULT_TARGET_AREA)
    assert not design.failed
    diam = np.array([e.diameter_mm for e in design.electrodes])
    np.testing.assert_allclose(diam, 3.0, rtol=5e-3)
    assert design.max_rel_deviation <= 1e-3


def test_design_array_curved_equalizes_area(bumpy):
    template = [(f"AP{i+1}", np.array(xyz)) for i, xyz in enumerate([
        (0.25, 0.25, 0.5), (0.5, 0.3, 0.5), (0.75, 0.25, 0.5),
        (0.3, 0.55, 0.5), (0.6, 0.5, 0.5), (0.8, 0.6, 0.5),
        (0.25, 0.8, 0.5), (0.5, 0.75, 0.5), (0.7, 0.8, 0.5), (0.45, 0.45, 0.5),
    ])]
    aps = place_aps(bumpy, template)
    solved = design_array(bumpy, aps, target_area=DEFAULT_TARGET_AREA)
    assert not solved.failed
    areas = np.array([e.sensing_area_mm2 for e in solved.electrodes])
    assert np.max(np.abs(areas - DEFAULT_TARGET_AREA)) / DEFAULT_TARGET_AREA <= 1e-3
    diameters = np.array([e.diameter_mm for e in solved.electrodes])
    assert np.ptp(diameters) > 1e-3  # curvature varies, so diameters must too

    # a constant-diameter array on the same APs spreads far more
    const_areas = []
    for p in aps:
        n = bumpy.normal_at(p.face, p.barycentric)
        const_areas.append(sensing_area(bumpy, p.position, n, 3.0))
    const_spread = np.ptp(const_areas) / DEFAULT_TARGET_AREA
    solved_spread = np.ptp(areas) / DEFAULT_TARGET_AREA
    assert const_spread > solved_spread * 5


def test_design_partial_failure(plane_coarse):
    template = [("AP1", np.array([0.5, 0.5, 0.5])), ("AP2", np.array([0.4, 0.4, 0.5]))]
    aps = place_aps(plane_coarse, template)
    design = design_array(plane_coarse, aps, target_area=10000.0)
    assert len(design.failed) == 2
    assert design.failed[0][0] == "AP1"


def test_design_json_fields(tmp_path, plane_coarse):
    import json
    from aurisense.electrode import write_design_json

    aps = place_aps(plane_coarse, [("AP1", np.array([0.5, 0.5, 0.5]))])
    design = design_array(plane_coarse, aps)
    out = tmp_path / "design.json"
    write_design_json(out, design, meta={"seed": None})
    obj = json.loads(out.read_text())
    assert set(obj) == {"target_area_mm2", "max_rel_deviation", "electrodes",
                        "failed", "_meta"}
    e = obj["electrodes"][0]
    assert set(e) == {"ap", "center", "axis", "diameter_mm", "tilt_deg",
                      "area_mm2", "mean_curvature_per_mm"}
