import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastdbar.errors import GeometryError, InputError
from fastdbar.geometry import (
    BoundaryCurve,
    chest_domain,
    circle,
    domain_from_dict,
    electrode_quadrature,
    equispaced_angles,
    fixture_dict,
    normalize_domain,
    save_fixture,
    load_fixture,
    unit_disk,
)


def test_unit_circle_identity():
    dom = normalize_domain(circle(64), equispaced_angles(32))
    assert dom.scale == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(dom.center, 0.0, atol=1e-12)
    assert abs(dom.perimeter - 2 * np.pi) / (2 * np.pi) < 5e-3


def test_shifted_scaled_circle():
    dom = normalize_domain(circle(128, radius=5.0, center=(2.0, 3.0)))
    assert np.allclose(dom.center, [2.0, 3.0], atol=1e-12)
    assert dom.scale == pytest.approx(5.0, rel=1e-12)
    assert np.allclose(np.abs(dom.boundary.complex), 1.0, atol=1e-12)
    z = np.array([0.3 + 0.1j])
    assert np.allclose(dom.to_physical(z), 5 * z + (2 + 3j))


def test_normalized_max_radius_and_arclength_table(chest):
    assert np.max(np.abs(chest.boundary.complex)) == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(chest.arclength) > 0)
    assert chest.arclength[-1] == chest.perimeter


def test_too_few_points():
    with pytest.raises(InputError):
        BoundaryCurve(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]))


def test_coincident_points():
    pts = circle(16).points.copy()
    pts[3] = pts[2]
    with pytest.raises(InputError):
        BoundaryCurve(pts)


def test_self_intersecting_bowtie():
    t = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    pts = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    pts[0] += 1e-3
    with pytest.raises(GeometryError):
        BoundaryCurve(pts)


def test_clockwise_rejected():
    with pytest.raises(GeometryError):
        BoundaryCurve(circle(16).points[::-1])


def test_electrode_layout_errors():
    dom = normalize_domain(circle(64))
    with pytest.raises(InputError):
        dom.with_electrodes([0.0, 1.0, 2.0])
    with pytest.raises(InputError):
        dom.with_electrodes([0.0, 1.0, 1.0, 2.0])
    with pytest.raises(InputError):
        dom.with_electrodes(equispaced_angles(8), area=0.0)


def test_default_area_is_gap_free_arc(disk):
    assert disk.electrodes.area == pytest.approx(disk.perimeter / 32)


def test_quadrature_weights_uniform_on_disk(disk):
    q = electrode_quadrature(disk)
    assert np.allclose(q.weights, 1.0, atol=1e-12)
    assert q.darc.sum() == pytest.approx(disk.perimeter, rel=1e-12)
    assert q.dtheta.sum() == pytest.approx(2 * np.pi, rel=1e-12)


def test_chest_fixture_weights_uniform(chest):
    q = electrode_quadrature(chest)
    assert np.std(q.darc) / np.mean(q.darc) < 1e-10
    assert chest.electrodes.L == 32


def test_point_at_is_on_boundary(chest):
    th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    p = chest.point_at(th)
    assert np.allclose(np.angle(p) % (2 * np.pi), th, atol=1e-12)
    assert np.all(chest.contains(0.999 * p))
    assert not np.any(chest.contains(1.001 * p))


def test_arclength_inverse(chest):
    s = np.linspace(0, chest.perimeter, 40, endpoint=False)
    back = chest.arclength_at(chest.angle_at_arclength(s))
    assert np.allclose(back, s, atol=1e-12)


def test_fixture_roundtrip(tmp_path, chest):
    raw = circle(64, radius=2.0, center=(1.0, -1.0))
    path = tmp_path / "b.json"
    save_fixture(path, raw, equispaced_angles(16))
    dom = load_fixture(path)
    assert dom.electrodes.L == 16
    first = path.read_bytes()
    save_fixture(path, raw, equispaced_angles(16))
    assert path.read_bytes() == first
    d2 = domain_from_dict(json.loads(first))
    assert np.array_equal(d2.boundary.points, dom.boundary.points)


@settings(max_examples=30, deadline=None)
@given(
    r=st.floats(0.1, 100.0),
    cx=st.floats(-50, 50),
    cy=st.floats(-50, 50),
    n=st.integers(8, 200),
)
def test_normalization_is_affine_invariant(r, cx, cy, n):
    dom = normalize_domain(circle(n, radius=r, center=(cx, cy)))
    assert np.max(np.abs(dom.boundary.complex)) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(dom.to_physical(dom.boundary.complex), circle(n, r, (cx, cy)).complex, atol=1e-9 * max(r, abs(cx), abs(cy)))
