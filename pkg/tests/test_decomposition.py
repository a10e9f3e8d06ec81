import numpy as np
import pytest

from framelap import catalog
from framelap.decomposition import (
    DIVFREE_MUTATIONS,
    DIVFREE_NORMAL_TERMS,
    GENERAL_MUTATIONS,
    GENERAL_NORMAL_TERMS,
    MUTATIONS,
    TANGENTIAL_TERMS,
    DecompositionError,
    aux_tensors_at,
    decompose_divfree,
    decompose_general,
    lemma_residuals,
    projected_comparison,
    setup_at,
)
from framelap.exprlang import SmoothMap
from framelap.extension import NormalChart, TangentialRule, extend_compatible, extend_divfree
from framelap.operators import ClosedFormField, CoordinateField, laplacian_ambient_bochner, surface_laplacian

U_SOURCES = ("sin(y1)*y3", "cos(y2)", "(y3 - 1)*y1")
POINTS = [(0.3, 1.0), (-0.5, 0.7), (0.9, 2.1)]


@pytest.fixture(scope="module")
def ellipsoid():
    return catalog.get("ellipsoid", {"a": 2.0})


@pytest.fixture(scope="module")
def closed_u():
    return ClosedFormField(SmoothMap.from_sources(U_SOURCES, ("y1", "y2", "y3")))


# General Decomposition Tests
@pytest.mark.parametrize("frame_name", ["coordinate", "tilted"])
@pytest.mark.parametrize("z", POINTS)
def test_general_decomposition_matches_laplacian(ellipsoid, closed_u, frame_name, z):
    report = decompose_general(ellipsoid.surface, ellipsoid.frame(frame_name), closed_u, z)
    assert report.within(1e-7, 1e-8), report.residual
    assert report.route == "general"
    assert set(report.terms) == set(TANGENTIAL_TERMS) | {f"n:{name}" for name in GENERAL_NORMAL_TERMS}


def test_general_decomposition_on_normal_tube_frame(ellipsoid, closed_u):
    report = decompose_general(ellipsoid.surface, ellipsoid.frame("normal-tube"), closed_u, (0.2, 1.3))
    assert report.within(1e-7, 1e-8), report.residual


def test_laplacian_is_frame_independent_on_the_surface(ellipsoid):
    u = CoordinateField(SmoothMap.from_sources(("y3*sin(y1)", "cos(y2)", "y1*y2"), ("y1", "y2", "y3")))
    y = tuple(ellipsoid.surface.point((0.3, 1.0)))
    first = laplacian_ambient_bochner(ellipsoid.surface, ellipsoid.frame("coordinate"), u, y)
    second = laplacian_ambient_bochner(ellipsoid.surface, ellipsoid.frame("tilted"), u, y)
    assert np.linalg.norm(first) == pytest.approx(np.linalg.norm(second), rel=1e-8)


@pytest.mark.parametrize("mutation", ["Nq", "Ev", "2rhoX3"])
def test_mutation_breaks_the_identity(ellipsoid, closed_u, mutation):
    report = decompose_general(ellipsoid.surface, ellipsoid.frame("tilted"), closed_u, (0.3, 1.0), mutation=mutation)
    assert report.mutation == mutation
    assert not report.within(1e-7, 1e-8)


def test_unknown_mutation_is_rejected(ellipsoid, closed_u):
    with pytest.raises(DecompositionError):
        decompose_general(ellipsoid.surface, ellipsoid.frame("coordinate"), closed_u, (0.3, 1.0), mutation="d")


@pytest.mark.parametrize("mutation", ["Sadj_X3_v", "Kw_q"])
def test_general_route_rejects_solenoidal_mutations(ellipsoid, closed_u, mutation):
    with pytest.raises(DecompositionError):
        decompose_general(ellipsoid.surface, ellipsoid.frame("tilted"), closed_u, (0.3, 1.0), mutation=mutation)


def test_mutations_name_real_terms():
    terms = set(TANGENTIAL_TERMS) | set(GENERAL_NORMAL_TERMS) | set(DIVFREE_NORMAL_TERMS)
    assert set(MUTATIONS) <= terms
    assert set(GENERAL_MUTATIONS) <= set(TANGENTIAL_TERMS) | set(GENERAL_NORMAL_TERMS)
    assert set(DIVFREE_MUTATIONS) <= set(TANGENTIAL_TERMS) | set(DIVFREE_NORMAL_TERMS)
    assert set(GENERAL_MUTATIONS) | set(DIVFREE_MUTATIONS) == set(MUTATIONS)


def test_report_serialises(ellipsoid, closed_u):
    report = decompose_general(ellipsoid.surface, ellipsoid.frame("coordinate"), closed_u, (0.3, 1.0))
    row = report.as_dict()
    assert row["frame"] == "coordinate"
    assert len(row["B_t"]) == 2
    assert row["residual"] == pytest.approx(report.residual)


# Lemma Tests
@pytest.mark.parametrize("frame_name", ["coordinate", "tilted"])
def test_lemma_residuals_vanish(ellipsoid, closed_u, frame_name):
    residuals = lemma_residuals(ellipsoid.surface, ellipsoid.frame(frame_name), closed_u, (-0.5, 0.7))
    assert "normal_hessian" in residuals
    for name, value in residuals.items():
        assert value < 1e-7, name


def test_aux_tensor_identities(ellipsoid, closed_u):
    aux = aux_tensors_at(ellipsoid.surface, ellipsoid.frame("tilted"), closed_u, (0.3, 1.0))
    for name, value in aux.identity_residuals().items():
        assert value < 1e-9, name
    np.testing.assert_allclose(aux.S, aux.S.T, atol=1e-10)
    assert aux.as_dict()["kappa"] == pytest.approx(catalog.expected_kappa(2.0, 1.0), rel=1e-8)


def test_coordinate_frame_e_tensor_is_diagonal(ellipsoid, closed_u):
    aux = aux_tensors_at(ellipsoid.surface, ellipsoid.frame("coordinate"), closed_u, (0.3, 1.0))
    assert aux.gamma3 == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose([aux.E[0, 0], aux.E[0, 1], aux.E[1, 0]], 0.0, atol=1e-10)


# Projected Comparison Tests
@pytest.mark.parametrize("frame_name", ["coordinate", "tilted"])
def test_projected_part_splits_into_named_terms(ellipsoid, closed_u, frame_name):
    comparison = projected_comparison(ellipsoid.surface, ellipsoid.frame(frame_name), closed_u, (0.3, 1.0))
    np.testing.assert_allclose(comparison.difference, comparison.other_total, atol=1e-8)
    assert comparison.bracket_form_residual < 1e-7
    assert set(comparison.other_terms) == {"Ev", "2rhoX3", "d", "Nq"}


def test_frames_disagree_on_e(ellipsoid, closed_u):
    coordinate = projected_comparison(ellipsoid.surface, ellipsoid.frame("coordinate"), closed_u, (0.3, 1.0))
    tilted = projected_comparison(ellipsoid.surface, ellipsoid.frame("tilted"), closed_u, (0.3, 1.0))
    assert np.abs(coordinate.E - tilted.E).max() > 1e-3


# Solenoidal Route Tests
@pytest.fixture(scope="module")
def divfree_u(ellipsoid):
    chart = NormalChart(ellipsoid.surface, ellipsoid.frame("coordinate"), s_max=0.05)
    rule = ellipsoid.tangential_rule("solenoidal")
    return extend_divfree(chart, ellipsoid.surface_field("solenoidal"), TangentialRule.CLOSED_FORM, rule)


def test_divfree_route_agrees_with_general(ellipsoid, divfree_u):
    spec = ellipsoid.frame("coordinate")
    z = (0.3, 1.0)
    setup = setup_at(ellipsoid.surface, spec, divfree_u, z)
    general = decompose_general(ellipsoid.surface, spec, divfree_u, z, setup=setup)
    divfree = decompose_divfree(ellipsoid.surface, spec, divfree_u, z, setup=setup)
    assert general.within(1e-7, 1e-8), general.residual
    assert divfree.within(1e-7, 1e-8), divfree.residual
    np.testing.assert_allclose(general.assembled, divfree.assembled, atol=1e-7)
    assert divfree.route == "divfree"


def test_divfree_route_rejects_divergent_fields(ellipsoid, closed_u):
    with pytest.raises(DecompositionError):
        decompose_divfree(ellipsoid.surface, ellipsoid.frame("coordinate"), closed_u, (0.3, 1.0))


@pytest.mark.parametrize("mutation", ["Sadj_X3_v", "Kw_q"])
def test_divfree_mutation_flips_one_term(ellipsoid, divfree_u, mutation):
    spec = ellipsoid.frame("coordinate")
    clean = decompose_divfree(ellipsoid.surface, spec, divfree_u, (0.3, 1.0))
    mutated = decompose_divfree(ellipsoid.surface, spec, divfree_u, (0.3, 1.0), mutation=mutation)
    flipped = abs(mutated.B_n - clean.B_n)
    assert flipped == pytest.approx(2.0 * clean.terms[f"n:{mutation}"], abs=1e-12)


def test_divfree_route_rejects_vanishing_transport_mutation(ellipsoid, divfree_u):
    with pytest.raises(DecompositionError):
        decompose_divfree(ellipsoid.surface, ellipsoid.frame("coordinate"), divfree_u, (0.3, 1.0), mutation="2rhoX3")


# Sphere Tests
@pytest.fixture(scope="module")
def sphere():
    return catalog.get("unit-sphere")


@pytest.fixture(scope="module")
def sphere_killing(sphere):
    chart = NormalChart(sphere.surface, sphere.frame("coordinate"), s_max=0.05)
    return extend_compatible(chart, sphere.surface_field("killing"))


def test_sphere_killing_field_has_compatible_extension(sphere, sphere_killing):
    report = decompose_general(sphere.surface, sphere.frame("coordinate"), sphere_killing, (0.4, 1.1))
    assert report.within(1e-7, 1e-8), report.residual
    aux = aux_tensors_at(sphere.surface, sphere.frame("coordinate"), sphere_killing, (0.4, 1.1))
    np.testing.assert_allclose(aux.X3, 0.0, atol=1e-10)
    assert aux.rho == pytest.approx(0.0, abs=1e-10)


def test_sphere_projected_laplacian_is_hodge_laplacian(sphere, sphere_killing):
    setup = setup_at(sphere.surface, sphere.frame("coordinate"), sphere_killing, (0.4, 1.1))
    hodge = surface_laplacian(setup.surface_field, "hodge")
    np.testing.assert_allclose(setup.laplacian[:2], hodge, atol=1e-8)
    report = decompose_general(sphere.surface, sphere.frame("coordinate"), sphere_killing, (0.4, 1.1), setup=setup)
    np.testing.assert_allclose(report.B_t, hodge, atol=1e-8)


def test_sphere_compatible_solenoidal_route(sphere, sphere_killing):
    spec = sphere.frame("coordinate")
    setup = setup_at(sphere.surface, spec, sphere_killing, (0.4, 1.1))
    general = decompose_general(sphere.surface, spec, sphere_killing, (0.4, 1.1), setup=setup)
    compatible = decompose_divfree(sphere.surface, spec, sphere_killing, (0.4, 1.1), compatible=True, setup=setup)
    assert compatible.route == "divfree-compatible"
    assert compatible.within(1e-7, 1e-8), compatible.residual
    np.testing.assert_allclose(compatible.assembled, general.assembled, atol=1e-7)
