import numpy as np
import pytest

from dawnik.paths import PathSpec, generate_path, path_length, path_point, waypoint_in_force


def test_circle_waypoint_count_and_geometry():
    spec = PathSpec("circle", "XY", [0.3, 0.0, 0.2], 0.18, duration=12.0, sample_period=0.03)
    wps = generate_path(spec)
    assert len(wps) == 400
    for w in wps:
        assert abs(np.linalg.norm(w.position - spec.center) - 0.18) < 1e-12
        assert abs(w.position[2] - 0.2) < 1e-15  # in-plane
    # cyclic closure: the parametrization returns to the start
    np.testing.assert_allclose(path_point(spec, 12.0), wps[0].position, atol=1e-12)


def test_square_perimeter_and_spacing():
    spec = PathSpec("square", "XY", [0.0, 0.0, 0.0], 0.40, duration=12.0, sample_period=0.03)
    wps = generate_path(spec)
    pts = np.array([w.position for w in wps])
    seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)  # cyclic
    lengths = np.linalg.norm(seg, axis=1)
    assert np.sum(lengths) == pytest.approx(1.6, abs=1e-9)
    assert np.max(lengths) - np.min(lengths) < 1e-9  # constant spacing
    assert path_length(spec) == pytest.approx(1.6)


def test_square_hits_corners():
    spec = PathSpec("square", "YZ", [0.0, 0.0, 0.0], 0.40, duration=8.0, sample_period=0.02)
    pts = np.array([w.position for w in generate_path(spec)])
    for cy in (-0.2, 0.2):
        for cz in (-0.2, 0.2):
            corner = np.array([0.0, cy, cz])
            assert np.min(np.linalg.norm(pts - corner, axis=1)) < 1e-12


def test_eight_two_tangent_loops():
    r = 0.1
    spec = PathSpec("eight", "XY", [0.0, 0.0, 0.0], r, duration=8.0, sample_period=0.01)
    pts = np.array([w.position for w in generate_path(spec)])
    # each point lies on one of the two loop circles
    d_right = np.abs(np.linalg.norm(pts - np.array([r, 0, 0]), axis=1) - r)
    d_left = np.abs(np.linalg.norm(pts + np.array([r, 0, 0]), axis=1) - r)
    assert np.all(np.minimum(d_right, d_left) < 1e-12)
    # crossing point is visited and velocity is continuous there
    v_end_first = path_point(spec, 4.0 + 1e-6) - path_point(spec, 4.0 - 1e-6)
    assert np.linalg.norm(v_end_first) < 2.5e-6  # no jump at the loop switch
    seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    assert np.sum(lengths) == pytest.approx(4 * np.pi * r, rel=1e-4)


def test_hold_emits_identical_waypoints():
    spec = PathSpec("hold", "YZ", [0.4, 0.1, 0.3], 0.1, duration=2.0, sample_period=0.03)
    wps = generate_path(spec)
    for w in wps:
        np.testing.assert_array_equal(w.position, [0.4, 0.1, 0.3])


def test_waypoint_schedule_floor_and_wrap():
    spec = PathSpec("circle", "XY", [0, 0, 0], 0.1, duration=0.3, sample_period=0.03)
    wps = generate_path(spec)
    assert len(wps) == 10
    assert waypoint_in_force(wps, 0.0, 0.03) is wps[0]
    assert waypoint_in_force(wps, 0.0299, 0.03) is wps[0]
    assert waypoint_in_force(wps, 0.0301, 0.03) is wps[1]
    assert waypoint_in_force(wps, 0.09, 0.03) is wps[3]
    assert waypoint_in_force(wps, 0.3, 0.03) is wps[0]  # loops


def test_constant_speed_along_every_shape():
    for shape in ("square", "circle", "eight"):
        spec = PathSpec(shape, "XY", [0, 0, 0], 0.2, duration=10.0, sample_period=0.01)
        pts = np.array([w.position for w in generate_path(spec)])
        seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
        # chord lengths stay within a tight band (corners cut chords slightly)
        assert np.max(seg) <= np.median(seg) * 1.001 + 1e-12


def test_path_spec_validation():
    with pytest.raises(ValueError):
        PathSpec("triangle", "XY", [0, 0, 0], 0.1, 1.0)
    with pytest.raises(ValueError):
        PathSpec("circle", "XZ", [0, 0, 0], 0.1, 1.0)
    with pytest.raises(ValueError):
        PathSpec("circle", "XY", [0, 0, 0], -0.1, 1.0)
    with pytest.raises(ValueError):
        PathSpec("circle", "XY", [0, 0, 0], 0.1, 0.0)
