import math

import numpy as np
import pytest

from framelap import catalog
from framelap import jet
from framelap.ambient import AMBIENT_COORDINATES, AmbientSpace, GeometryError, local_geometry, metric_at
from framelap.catalog import expected_kappa, expected_two_H
from framelap.exprlang import SmoothMap
from framelap.geometry import (
    SURFACE_COORDINATES,
    DomainBox,
    FrameSpec,
    Surface,
    adapted_frame_at,
    connection_forms_at,
    foot_point,
    frame_data_at,
    frame_on_surface,
    frame_scalars_at,
    structure_residuals,
    validate_frame,
)

ELLIPSOID_POINTS = [(0.3, 1.0), (-0.7, 0.6), (0.9, 2.2)]


# Domain Tests
def test_domain_rejects_empty_interval():
    with pytest.raises(ValueError):
        DomainBox(z1=(1.0, 1.0))


def test_domain_rejects_nonpositive_tube():
    with pytest.raises(ValueError):
        DomainBox(s_max=0.0)


def test_grid_covers_corners():
    box = DomainBox((-1.0, 1.0), (0.0, 2.0), 0.1)
    points = box.grid(3, 2)
    assert len(points) == 6
    assert points[0] == (-1.0, 0.0)
    assert points[-1] == (1.0, 2.0)


def test_sample_is_seeded_and_inside():
    box = DomainBox()
    first = box.sample(20, seed=4)
    assert first == box.sample(20, seed=4)
    assert first != box.sample(20, seed=5)
    assert all(box.contains(z) for z in first)


# Flat Plane Tests
def test_flat_plane_has_no_curvature():
    entry = catalog.get("flat-plane")
    data = frame_data_at(entry.surface, entry.frame("coordinate"), (0.2, -0.3))
    row = data.as_dict()
    for name in ("t11", "t12", "t22", "kappa", "H", "alpha1", "alpha2", "gamma1", "gamma2", "gamma3"):
        assert row[name] == pytest.approx(0.0, abs=1e-12)
    assert data.orientation == 1


def test_non_normal_frame_is_rejected():
    entry = catalog.get("flat-plane")
    c, s = math.cos(0.3), math.sin(0.3)
    spec = FrameSpec.closed_form(
        "rolled", (("1", "0", "0"), ("0", repr(c), repr(s)), ("0", repr(-s), repr(c))), AMBIENT_COORDINATES
    )
    with pytest.raises(GeometryError):
        validate_frame(entry.surface, spec, [(0.0, 0.0)])


def test_non_orthonormal_frame_is_rejected():
    entry = catalog.get("flat-plane")
    spec = FrameSpec.closed_form("skew", (("1", "0", "0"), ("1", "1", "0"), ("0", "0", "1")), AMBIENT_COORDINATES)
    with pytest.raises(GeometryError):
        frame_on_surface(entry.surface, spec, (0.1, 0.1))


def test_closed_form_frame_needs_three_vectors():
    with pytest.raises(ValueError):
        FrameSpec.closed_form("short", (("1", "0", "0"), ("0", "1", "0")), AMBIENT_COORDINATES)


def test_surface_embedding_must_be_two_to_three():
    psi = SmoothMap.from_sources(AMBIENT_COORDINATES, AMBIENT_COORDINATES)
    with pytest.raises(ValueError):
        Surface(AmbientSpace.flat(psi), SmoothMap.from_sources(("z1", "z2"), SURFACE_COORDINATES))


# Ellipsoid Tests
@pytest.mark.parametrize("frame_name", ["coordinate", "tilted", "normal-tube"])
@pytest.mark.parametrize("z", ELLIPSOID_POINTS)
def test_ellipsoid_curvature_matches_closed_form(frame_name, z):
    entry = catalog.get("ellipsoid", {"a": 2.0})
    data = frame_data_at(entry.surface, entry.frame(frame_name), z)
    assert data.second_fundamental.kappa == pytest.approx(expected_kappa(2.0, z[1]), rel=1e-8, abs=1e-10)
    assert abs(2.0 * data.second_fundamental.H) == pytest.approx(abs(expected_two_H(2.0, z[1])), rel=1e-8)


def test_curvature_does_not_depend_on_frame():
    entry = catalog.get("ellipsoid", {"a": 1.5})
    z = (0.4, 1.2)
    coordinate = frame_data_at(entry.surface, entry.frame("coordinate"), z)
    tilted = frame_data_at(entry.surface, entry.frame("tilted"), z)
    assert tilted.second_fundamental.kappa == pytest.approx(coordinate.second_fundamental.kappa, rel=1e-9)
    assert abs(tilted.second_fundamental.H) == pytest.approx(abs(coordinate.second_fundamental.H), rel=1e-9)


def test_unit_sphere_is_umbilic():
    entry = catalog.get("unit-sphere")
    data = frame_data_at(entry.surface, entry.frame("coordinate"), (0.1, 1.3))
    sff = data.second_fundamental
    assert sff.kappa == pytest.approx(1.0)
    assert abs(sff.H) == pytest.approx(1.0)
    np.testing.assert_allclose(sff.t, sff.H * np.eye(2), atol=1e-10)


def test_second_fundamental_form_routes_agree():
    entry = catalog.get("ellipsoid")
    data = frame_data_at(entry.surface, entry.frame("tilted"), (0.0, 1.0))
    assert data.second_fundamental.route_deviation < 1e-10
    np.testing.assert_allclose(data.second_fundamental.t, data.second_fundamental.t.T, atol=1e-10)


def test_adjugate_and_p_tensor():
    entry = catalog.get("ellipsoid")
    sff = frame_data_at(entry.surface, entry.frame("coordinate"), (0.5, 0.9)).second_fundamental
    np.testing.assert_allclose(sff.S_adj @ sff.t, sff.kappa * np.eye(2), atol=1e-10)
    np.testing.assert_allclose(sff.P, sff.kappa * np.eye(2) - 2.0 * sff.H * sff.t, atol=1e-12)


def test_orientation_is_a_sign():
    entry = catalog.get("ellipsoid")
    for name in ("coordinate", "tilted", "normal-tube"):
        assert frame_data_at(entry.surface, entry.frame(name), (0.2, 1.1)).orientation in (-1, 1)


# Torus Tests
def test_torus_gaussian_curvature():
    entry = catalog.get("torus", {"R": 2.0, "r": 0.5})
    z = (0.3, 0.7)
    kappa = frame_data_at(entry.surface, entry.frame("coordinate"), z).second_fundamental.kappa
    assert kappa == pytest.approx(math.cos(0.7) / (0.5 * (2.0 + 0.5 * math.cos(0.7))), rel=1e-8)


# Structure Identity Tests
@pytest.mark.parametrize(
    "name, params, frame_name, z",
    [
        ("ellipsoid", {"a": 2.0}, "coordinate", (0.3, 1.0)),
        ("ellipsoid", {"a": 2.0}, "tilted", (-0.5, 2.0)),
        ("ellipsoid", {"a": 0.7}, "normal-tube", (0.1, 0.8)),
        ("graph-surface", {}, "normal-tube", (0.2, -0.1)),
        ("torus", {}, "coordinate", (0.5, -0.4)),
    ],
)
def test_structure_residuals_vanish(name, params, frame_name, z):
    entry = catalog.get(name, params)
    residuals = structure_residuals(entry.surface, entry.frame(frame_name), z)
    assert set(residuals) == {
        "orthonormality",
        "structure",
        "antisymmetry",
        "t12_symmetry",
        "second_fundamental_routes",
        "weingarten",
        "gauss_split",
        "codazzi_1",
        "codazzi_2",
        "gauss_equation",
        "w_bracket",
    }
    for identity, value in residuals.items():
        assert value < 1e-6, identity


# Normal Tube Tests
def test_foot_point_recovers_offset():
    entry = catalog.get("graph-surface")
    z = np.array([0.1, 0.2])
    p = entry.surface.point(z)
    frame = frame_on_surface(entry.surface, entry.frame("normal-tube"), z)
    x = p + 0.03 * frame.values[2]
    z_star, s = foot_point(entry.surface, x, z)
    np.testing.assert_allclose(z_star, z, atol=1e-9)
    assert abs(s) == pytest.approx(0.03, rel=1e-8)


def test_normal_tube_needs_flat_ambient():
    metric = SmoothMap.from_sources(("1", "0", "0", "1", "0", "1"), AMBIENT_COORDINATES)
    f = SmoothMap.from_sources(("z1", "z2", "0"), SURFACE_COORDINATES)
    surface = Surface(AmbientSpace.explicit(metric), f, DomainBox((-1.0, 1.0), (-1.0, 1.0), 0.1))
    with pytest.raises(GeometryError):
        frame_on_surface(surface, FrameSpec.normal_tube(), (0.0, 0.0))


# Metric Tests
def test_spherical_pullback_metric():
    ambient = catalog.get("unit-sphere").surface.ambient
    y = (0.3, 1.0, 1.2)
    g = metric_at(ambient, y, 1)
    values = np.array([[jet.value_of(c) for c in row] for row in g])
    expected = np.diag([(1.2 * math.sin(1.0)) ** 2, 1.2**2, 1.0])
    np.testing.assert_allclose(values, expected, atol=1e-12)
    assert g[1][1].gradient()[2] == pytest.approx(2.4)


def test_pullback_metric_and_connection_keep_full_order():
    ambient = catalog.get("unit-sphere").surface.ambient
    y = (0.3, 1.0, 1.2)
    g = metric_at(ambient, y, 3)
    assert g[0][0].order == 3
    assert g[0][0].partial((0, 3, 0)) == pytest.approx(-4.0 * 1.2**2 * math.sin(2.0))
    christoffel = local_geometry(ambient, y).christoffel
    assert min(c.order for plane in christoffel for row in plane for c in row) == 2


def test_constant_explicit_metric_is_returned_verbatim():
    metric = SmoothMap.from_sources(("2", "0.5", "0", "1", "0", "3"), AMBIENT_COORDINATES)
    g = metric_at(AmbientSpace.explicit(metric), (0.1, 0.2, 0.3), 1)
    values = np.array([[jet.value_of(c) for c in row] for row in g])
    np.testing.assert_allclose(values, [[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 3.0]])
    for row in g:
        for c in row:
            np.testing.assert_allclose(c.gradient(), 0.0)


def test_indefinite_metric_is_rejected():
    metric = SmoothMap.from_sources(("1", "0", "0", "-1", "0", "1"), AMBIENT_COORDINATES)
    with pytest.raises(GeometryError):
        metric_at(AmbientSpace.explicit(metric), (0.0, 0.0, 0.0), 0)


# Frame Data Tests
def test_connection_forms_are_antisymmetric():
    entry = catalog.get("ellipsoid", {"a": 2.0})
    omega = connection_forms_at(entry.surface, entry.frame("tilted"), (0.2, 1.0, 1.05))
    np.testing.assert_allclose(omega, -omega.transpose(1, 0, 2), atol=1e-10)


def test_frame_is_orthonormal_off_surface():
    entry = catalog.get("ellipsoid", {"a": 2.0})
    frame = adapted_frame_at(entry.surface, entry.frame("coordinate"), (0.3, 1.0, 1.0))
    metric = np.array([[jet.value_of(c) for c in row] for row in frame.geometry.metric])
    np.testing.assert_allclose(frame.values @ metric @ frame.values.T, np.eye(3), atol=1e-12)


def test_coordinate_frame_scalars():
    entry = catalog.get("ellipsoid", {"a": 2.0})
    scalars = frame_scalars_at(entry.surface, entry.frame("coordinate"), (0.3, 1.0, 1.0))
    assert scalars.gamma[2] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(scalars.X3, scalars.alpha)
    np.testing.assert_allclose(scalars.w, scalars.gamma[:2])
