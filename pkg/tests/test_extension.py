from types import SimpleNamespace

import numpy as np
import pytest

from framelap import catalog, extension, jet
from framelap.decomposition import aux_tensors_at
from framelap.exprlang import SmoothMap
from framelap.extension import (
    ExtensionError,
    FoldOverError,
    NormalChart,
    TangentialRule,
    build_normal_chart,
    extend_closed_form,
    extend_compatible,
    extend_curl_normal,
    extend_divfree,
)
from framelap.geometry import SURFACE_COORDINATES
from framelap.operators import ExpressionSurfaceField, restriction_residuals, surface_field_at


def surface_field(*sources: str) -> ExpressionSurfaceField:
    return ExpressionSurfaceField(SmoothMap.from_sources(sources, SURFACE_COORDINATES))


@pytest.fixture
def plane_chart():
    entry = catalog.get("flat-plane")
    return NormalChart(entry.surface, entry.frame("coordinate"), s_max=0.3)


@pytest.fixture
def ellipsoid():
    return catalog.get("ellipsoid", {"a": 2.0})


# Chart Tests
def test_plane_chart_moves_straight_up(plane_chart):
    np.testing.assert_allclose(plane_chart.point((0.2, -0.1), 0.25), [0.2, -0.1, 0.25], atol=1e-10)
    jets = plane_chart.jets((0.2, -0.1), 0.1, 2)
    np.testing.assert_allclose([c.gradient() for c in jets], np.eye(3), atol=1e-10)


def test_locate_inverts_the_chart(plane_chart):
    z, s = plane_chart.locate(plane_chart.point((0.3, 0.1), 0.1), z_hint=(0.0, 0.0))
    np.testing.assert_allclose(z, (0.3, 0.1), atol=1e-8)
    assert s == pytest.approx(0.1, abs=1e-8)


def test_locate_rejects_points_outside_the_tube(plane_chart):
    with pytest.raises(ExtensionError):
        plane_chart.locate((0.0, 0.0, 0.9))


def test_query_outside_tube(plane_chart):
    with pytest.raises(ExtensionError):
        plane_chart.curve((0.0, 0.0)).state(0.5)


def test_chart_needs_positive_thickness(ellipsoid):
    with pytest.raises(ValueError):
        NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.0)


def test_ellipsoid_chart_does_not_fold(ellipsoid):
    chart = build_normal_chart(ellipsoid.surface, ellipsoid.frame("coordinate"), [(0.0, 1.0), (0.5, 1.5)], 0.1)
    assert chart.nodes == [(0.0, 1.0), (0.5, 1.5)]
    assert chart.check_fold_over((0.0, 1.0)) > 0.5


def test_sphere_tube_past_the_centre_folds_over():
    entry = catalog.get("unit-sphere")
    with pytest.raises(FoldOverError):
        build_normal_chart(entry.surface, entry.frame("coordinate"), [(0.0, 1.2)], 1.5)


def test_threaded_chart_matches_sequential(ellipsoid):
    grid = [(0.0, 1.0), (0.5, 1.5), (-0.4, 2.0)]
    spec = ellipsoid.frame("coordinate")
    sequential = build_normal_chart(ellipsoid.surface, spec, grid, 0.1)
    threaded = build_normal_chart(ellipsoid.surface, spec, grid, 0.1, workers=3)
    assert threaded.nodes == sequential.nodes
    for z in grid:
        np.testing.assert_allclose(threaded.point(z, 0.07), sequential.point(z, 0.07), atol=1e-14)


def test_threaded_chart_reports_fold_over():
    entry = catalog.get("unit-sphere")
    with pytest.raises(FoldOverError):
        build_normal_chart(entry.surface, entry.frame("coordinate"), [(0.0, 1.2), (0.3, 1.0)], 1.5, workers=2)


def test_failed_flow_integration_is_reported(plane_chart, monkeypatch):
    failed = SimpleNamespace(status=-1, message="step size too small", y=np.zeros((3, 1)))
    monkeypatch.setattr(extension, "solve_ivp", lambda *args, **kwargs: failed)
    with pytest.raises(ExtensionError, match="flow integration failed"):
        plane_chart.locate((0.1, 0.0, 0.1), z_hint=(0.0, 0.0))


def test_characteristics_converge_when_tolerance_is_halved(ellipsoid):
    spec = ellipsoid.frame("coordinate")
    v = ellipsoid.surface_field("solenoidal")
    results = []
    for tolerance in (1e-10, 5e-11):
        chart = NormalChart(ellipsoid.surface, spec, s_max=0.05, tolerance=tolerance)
        u = extend_divfree(chart, v)
        values = [jet.value_of(c) for c in u.field_jets((0.3, 1.0), 0.04, order=0)]
        results.append(np.concatenate([chart.point((0.3, 1.0), 0.04), values]))
    np.testing.assert_allclose(results[0], results[1], atol=1e-8)


# Extension Tests
def test_compatible_extension_on_plane_stays_tangent(plane_chart):
    u = extend_compatible(plane_chart, surface_field("sin(z2)", "z1^2"))
    jets = u.field_jets((0.2, 0.4), 0.2)
    assert jets[0].value == pytest.approx(np.sin(0.4), abs=1e-9)
    assert jets[1].value == pytest.approx(0.04, abs=1e-9)
    assert jets[2].value == pytest.approx(0.0, abs=1e-9)
    assert u.restriction_residual((0.2, 0.4)) < 1e-12


def test_divfree_extension_on_plane_compensates_divergence(plane_chart):
    u = extend_divfree(plane_chart, surface_field("z1", "0"))
    assert u.field_jets((0.1, 0.1), 0.2)[2].value == pytest.approx(-0.2, abs=1e-8)
    assert u.pde_residual((0.1, 0.1), 0.1) < 1e-8


def test_extension_needs_a_normal_rule(plane_chart):
    u = extend_compatible(plane_chart, surface_field("1", "0"))
    assert u.name == "compatible/constant"
    with pytest.raises(ValueError):
        extend_closed_form(plane_chart, SmoothMap.from_sources(["y1"], ("y1", "y2", "y3")))


def test_field_order_is_capped(plane_chart):
    u = extend_compatible(plane_chart, surface_field("1", "0"))
    with pytest.raises(ExtensionError):
        u.field_jets((0.0, 0.0), 0.0, order=3)


@pytest.mark.parametrize("z", [(0.3, 1.0), (-0.6, 1.8)])
def test_compatible_extension_on_ellipsoid(ellipsoid, z):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    u = extend_compatible(chart, ellipsoid.surface_field("killing"))
    assert u.restriction_residual(z) < 1e-12
    assert u.pde_residual(z) < 1e-8
    assert u.pde_residual(z, 0.03) < 1e-7
    field = u.at(z)
    residuals = restriction_residuals(field, surface_field_at(chart.surface, chart.spec, u.v, z))
    assert residuals["divergence"] < 1e-8
    assert residuals["rot_curl"] < 1e-9


def test_divfree_extension_on_ellipsoid(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    rule = ellipsoid.tangential_rule("solenoidal")
    u = extend_divfree(chart, ellipsoid.surface_field("solenoidal"), TangentialRule.CLOSED_FORM, rule)
    assert u.restriction_residual((0.3, 1.0)) < 1e-10
    assert u.pde_residual((0.3, 1.0)) < 1e-7
    assert u.pde_residual((0.3, 1.0), -0.04) < 1e-7


def test_compatible_extension_bracket_has_no_normal_part(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("tilted"), s_max=0.05)
    u = extend_compatible(chart, surface_field("0.4*cos(z1)", "0.3*z1*sin(z2)"))
    for z in [(0.3, 1.0), (-0.6, 1.8)]:
        field = u.at(z)
        frame = field.frame
        bracket = frame.geometry.bracket(field.vector, frame.vectors[2])
        assert abs(jet.value_of(frame.geometry.inner(bracket, frame.vectors[2]))) < 1e-8


def test_divfree_extension_transport_defect_is_minus_divergence(ellipsoid):
    spec = ellipsoid.frame("coordinate")
    chart = NormalChart(ellipsoid.surface, spec, s_max=0.05)
    u = extend_divfree(chart, surface_field("0.4*cos(z1)", "0.3*z1*sin(z2)"))
    aux = aux_tensors_at(ellipsoid.surface, spec, u, (0.3, 1.0))
    assert abs(aux.div_v) > 1e-3
    assert aux.rho == pytest.approx(-aux.div_v, abs=1e-8)


@pytest.mark.parametrize("s", [-0.05, 0.05])
def test_constant_rule_divfree_extension_is_solenoidal_across_the_tube(ellipsoid, s):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    u = extend_divfree(chart, ellipsoid.surface_field("solenoidal"))
    assert u.tangential is TangentialRule.CONSTANT
    assert abs(u.at((0.3, 1.0), s, order=1).divergence) <= 1e-7


def test_second_normal_derivative_off_the_surface(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.06)
    u = extend_divfree(chart, ellipsoid.surface_field("solenoidal"))
    z, s, h = (0.3, 1.0), 0.03, 1e-3
    jets = u.field_jets(z, s, order=2)
    assert [c.order for c in jets] == [2, 2, 2]
    along = jets[2].compose(chart.jets(z, s, 2))
    curve = u.curve(z)
    normal = [curve.state(s + k * h).normal.value for k in (-1, 0, 1)]
    assert along.value == pytest.approx(normal[1], abs=1e-12)
    assert along.partial((0, 0, 1)) == pytest.approx((normal[2] - normal[0]) / (2.0 * h), rel=1e-5, abs=1e-6)
    second = (normal[0] - 2.0 * normal[1] + normal[2]) / h**2
    assert along.partial((0, 0, 2)) == pytest.approx(second, rel=1e-4, abs=1e-4)


def test_curl_normal_solenoidal_extension_stops_at_first_order_off_the_surface(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    u = extend_curl_normal(chart, ellipsoid.surface_field("killing"), divfree=True)
    assert u.tube_order == 1
    assert [c.order for c in u.field_jets((0.3, 1.0), 0.02, order=1)] == [1, 1, 1]
    with pytest.raises(ExtensionError):
        u.field_jets((0.3, 1.0), 0.02, order=2)


def test_tube_order_follows_the_frame_jets(ellipsoid):
    coordinate = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    tube = NormalChart(ellipsoid.surface, ellipsoid.frame("normal-tube"), s_max=0.05)
    v = ellipsoid.surface_field("killing")
    assert (coordinate.frame_order, tube.frame_order) == (3, 2)
    assert extend_divfree(coordinate, v).tube_order == 2
    assert extend_compatible(tube, v).tube_order == 1
    assert extend_curl_normal(tube, v, divfree=True).tube_order == 0


@pytest.mark.parametrize("z", [(0.3, 1.0), (-0.6, 1.8)])
def test_curl_normal_extension_of_a_general_field_has_normal_curl(ellipsoid, z):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    u = extend_curl_normal(chart, ellipsoid.surface_field("solenoidal"))
    assert u.pde_residual(z, 0.02) < 1e-7
    curl = u.at(z, 0.0).curl
    np.testing.assert_allclose(curl[:2], 0.0, atol=1e-8)


def test_curl_normal_extension_on_ellipsoid(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    u = extend_curl_normal(chart, ellipsoid.surface_field("killing"))
    assert u.name == "curl-normal/curl-normal"
    assert u.pde_residual((0.3, 1.0), 0.02) < 1e-7
    curl = u.at((0.3, 1.0), 0.0).curl
    np.testing.assert_allclose(curl[:2], 0.0, atol=1e-8)


def test_closed_form_extension_restricts_to_its_trace(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("tilted"), s_max=0.05)
    components = SmoothMap.from_sources(["sin(y1)*y3", "cos(y2)", "(y3 - 1)*y1"], ("y1", "y2", "y3"))
    u = extend_closed_form(chart, components)
    assert u.restriction_residual((0.3, 1.0)) < 1e-12
    jets = u.field_jets((0.3, 1.0), 0.0)
    expected = components.jets(ellipsoid.surface.point((0.3, 1.0)), 2)
    for got, want in zip(jets, expected):
        np.testing.assert_allclose(got.coeffs, want.coeffs, atol=1e-12)


def test_component_jets_locate_the_point(plane_chart):
    u = extend_divfree(plane_chart, surface_field("z1", "0"))
    plane_chart.nodes.append((0.0, 0.0))
    field = u.at((0.2, 0.1), 0.1, order=1)
    located = u.component_jets(field.frame, 1)
    assert located[2].value == pytest.approx(-0.1, abs=1e-7)
