"""Tangential and normal parts of the Bochner Laplacian of an extended field, assembled on the surface.

Three routes meet here: the direct ambient Laplacian of the extension, the general decomposition in
terms of surface quantities, and the solenoidal variant that trades normal derivatives of ``u^3`` for
mixed second derivatives of ``u^1, u^2``. Every intermediate identity is also available as a residual.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from . import jet
from .extension import ExtendedField
from .geometry import (
    K,
    FrameSpec,
    PointFrame,
    Surface,
    SurfaceFrame,
    curvature_forms_at,
    frame_on_surface,
    second_fundamental_at,
)
from .jet import JetLike
from .operators import AmbientField, AmbientFieldJets, SurfaceFieldJets

logger = logging.getLogger(__name__)

DIVERGENCE_TOLERANCE = 1e-7

TANGENTIAL_TERMS = ("laplacian", "kappa_v", "shape_v", "Ev", "2rhoX3", "d", "Nq")
GENERAL_NORMAL_TERMS = ("2sigma", "S_w_Kv", "S_X3_v", "Tv", "d3", "X3_q", "H_rho")
DIVFREE_NORMAL_TERMS = ("2sigma", "gamma3_rot", "S_w_Kv", "Sadj_X3_v", "Tv", "m", "Kw_q")
# sign flips that each route can detect; 2rhoX3 vanishes on the solenoidal route
GENERAL_MUTATIONS = ("Nq", "Ev", "2rhoX3")
DIVFREE_MUTATIONS = ("Nq", "Ev", "Sadj_X3_v", "Kw_q")
MUTATIONS = ("Nq", "Ev", "2rhoX3", "Sadj_X3_v", "Kw_q")


class DecompositionError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{message} at {where}")
        self.where = where


def _values(vector: Sequence[JetLike]) -> np.ndarray:
    return np.array([jet.value_of(c) for c in vector])


@dataclass
class AuxTensors:
    """Frame-dependent tensors on the surface at one point, all in frame components."""

    z: tuple
    S: np.ndarray
    kappa: float
    H: float
    K: np.ndarray
    w: np.ndarray
    X3: np.ndarray
    gamma3: float
    ell: np.ndarray
    normal_gamma3: float
    v: np.ndarray
    q: np.ndarray
    rho: float
    Q: np.ndarray
    sigma: float
    sigma_hat: float
    div_v: float
    T0: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    T: np.ndarray
    T_div: np.ndarray
    T_div_c: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E: np.ndarray
    N: np.ndarray
    P: np.ndarray
    S_adj: np.ndarray
    d: np.ndarray
    m: np.ndarray

    def shape(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(a @ self.S @ b)

    @property
    def Kw(self) -> np.ndarray:
        return self.K @ self.w

    @property
    def Kv(self) -> np.ndarray:
        return self.K @ self.v

    def identity_residuals(self) -> Dict[str, float]:
        """Internal consistency of the tensors against their expanded forms."""
        eye = np.eye(2)
        explicit_E = (
            np.outer(self.X3, self.X3)
            - self.gamma3**2 * eye
            + (self.normal_gamma3 - 2.0 * self.H * self.gamma3 - float(self.X3 @ self.w)) * self.K
        )
        return {
            "sigma": abs(self.sigma - float(np.sum(self.S * self.Q))),
            "E_expanded": float(np.abs(self.E - explicit_E).max()),
            "N": float(np.abs(self.N - (2.0 * self.gamma3 * self.K - 2.0 * self.H * eye)).max()),
            "P": float(np.abs(self.P - (self.kappa * eye - 2.0 * self.H * self.S)).max()),
            "S_adj": float(np.abs(self.S_adj - (2.0 * self.H * eye - self.S)).max()),
            "T": float(np.abs(self.T - self.T0 - self.T2).max()),
            "T_div_c": float(np.abs(self.T_div_c - self.T_div - 2.0 * self.S[0, 0] * self.Kw).max()),
        }

    def as_dict(self) -> Dict[str, Union[float, List]]:
        out: Dict[str, Union[float, List]] = {}
        for name, value in self.__dict__.items():
            out[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out


@dataclass
class PointSetup:
    """Everything the routes share at one surface point."""

    z: tuple
    frame: PointFrame
    surface_frame: SurfaceFrame
    field: AmbientFieldJets
    surface_field: SurfaceFieldJets
    aux: AuxTensors

    @property
    def laplacian(self) -> np.ndarray:
        return self.field.laplacian_bochner

    def frame_components(self, vector: Sequence[JetLike]) -> np.ndarray:
        return _values(self.frame.components(vector))

    def intrinsic_covariant(self, direction: np.ndarray) -> np.ndarray:
        """``nabla_x v`` for ``x`` given in frame components."""
        return self.surface_field.covariant_components(self.surface_frame.assemble(direction.tolist()))


@dataclass
class DecompositionReport:
    z: tuple
    frame_name: str
    route: str
    orientation: int
    B_t: np.ndarray
    B_n: float
    laplacian: np.ndarray
    comparison: np.ndarray
    terms: Dict[str, float] = field(default_factory=dict)
    lemmas: Dict[str, float] = field(default_factory=dict)
    mutation: Optional[str] = None

    @property
    def assembled(self) -> np.ndarray:
        return np.array([self.B_t[0], self.B_t[1], self.B_n])

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.laplacian - self.assembled))

    @property
    def relative_residual(self) -> float:
        return self.residual / max(float(np.linalg.norm(self.laplacian)), 1e-300)

    def within(self, relative: float = 1e-7, absolute: float = 1e-8) -> bool:
        return self.residual <= max(relative * float(np.linalg.norm(self.laplacian)), absolute)

    def as_dict(self) -> Dict[str, object]:
        return {
            "z": list(self.z),
            "frame": self.frame_name,
            "route": self.route,
            "orientation": self.orientation,
            "B_t": self.B_t.tolist(),
            "B_n": self.B_n,
            "laplacian": self.laplacian.tolist(),
            "comparison": self.comparison.tolist(),
            "residual": self.residual,
            "terms": dict(self.terms),
            "mutation": self.mutation,
        }


def _field_jets(ext: AmbientField, frame: PointFrame, z: Sequence[float]) -> List[JetLike]:
    if isinstance(ext, ExtendedField):
        return ext.field_jets(z, 0.0, 2)
    return ext.component_jets(frame, 2)


def _hessian_scalar(frame: PointFrame, a: int, b: int, h: JetLike) -> float:
    """``nabla nabla h (b^a, b^b)``."""
    first = jet.value_of(frame.derivative(a, frame.derivative(b, h)))
    return first - jet.value_of(frame.along(_values(frame.nabla[a][b]), h))


def setup_at(surface: Surface, spec: FrameSpec, ext: AmbientField, z: Sequence[float]) -> PointSetup:
    z = tuple(float(c) for c in z)
    frame = frame_on_surface(surface, spec, z)
    surface_frame = SurfaceFrame(frame, z)
    u = _field_jets(ext, frame, z)
    ambient_field = AmbientFieldJets(frame, u)
    f = surface.embedding_jets(z)
    v_jets = [c.compose(f) for c in u[:2]]
    surface_field = SurfaceFieldJets(surface_frame, v_jets)
    aux = _aux_tensors(surface, spec, z, frame, ambient_field, surface_field)
    return PointSetup(z, frame, surface_frame, ambient_field, surface_field, aux)


def _aux_tensors(
    surface: Surface,
    spec: FrameSpec,
    z: tuple,
    frame: PointFrame,
    ambient_field: AmbientFieldJets,
    surface_field: SurfaceFieldJets,
) -> AuxTensors:
    sff = second_fundamental_at(surface, spec, z, frame)
    S = 0.5 * (sff.t + sff.t.T)
    H, kappa = sff.H, float(np.linalg.det(S))
    omega = frame.omega
    u = ambient_field.u
    eye = np.eye(2)

    X3 = np.array([omega[0, 2, 2], omega[1, 2, 2]])
    gamma = np.array([omega[0, 1, k] for k in range(3)])
    w, gamma3 = gamma[:2].copy(), float(gamma[2])
    ell = np.array([jet.value_of(frame.derivative(2, frame.gamma_jet(j))) for j in range(2)])
    normal_gamma3 = jet.value_of(frame.derivative(2, frame.gamma_jet(2)))

    v = surface_field.values
    q = np.array([jet.value_of(frame.derivative(2, u[j])) for j in range(2)])
    rho = jet.value_of(frame.derivative(2, u[2])) - float(X3 @ v)
    Q = surface_field.tangential_derivatives
    sigma = float(np.sum(S * Q))
    sigma_hat = (S[1, 1] - S[0, 0]) * Q[1, 1] + S[0, 1] * (Q[1, 0] + Q[0, 1])
    div_v = surface_field.divergence

    curvature = curvature_forms_at(surface, spec, frame.y, frame)
    grad_H = np.array([jet.value_of(frame.derivative(k, frame.mean_curvature_jet())) for k in range(2)])
    T0 = np.array([2.0 * grad_H[0] + curvature[1, 2, 0, 1], 2.0 * grad_H[1] - curvature[0, 2, 0, 1]])
    T1 = np.array([jet.value_of(frame.derivative(2, frame.alpha_jet(j))) for j in range(2)])
    T2 = gamma3 * (K @ X3) - T1
    T_div = T0 + K @ (ell + gamma3 * X3)
    T_div_c = T0 + K @ (ell + gamma3 * X3 + 2.0 * S[0, 0] * w)

    E0 = np.outer(X3, X3)
    E1 = E0 + normal_gamma3 * K - gamma3**2 * eye
    E2 = E1 - float(X3 @ w) * K
    E = E2 - 2.0 * H * gamma3 * K

    d = np.array([_hessian_scalar(frame, 2, 2, u[j]) for j in range(3)])
    m = np.array([_hessian_scalar(frame, j, 2, u[j]) for j in range(2)])

    return AuxTensors(
        z=z,
        S=S,
        kappa=kappa,
        H=H,
        K=K.copy(),
        w=w,
        X3=X3,
        gamma3=gamma3,
        ell=ell,
        normal_gamma3=normal_gamma3,
        v=v,
        q=q,
        rho=rho,
        Q=Q,
        sigma=sigma,
        sigma_hat=float(sigma_hat),
        div_v=div_v,
        T0=T0,
        T1=T1,
        T2=T2,
        T=T0 + T2,
        T_div=T_div,
        T_div_c=T_div_c,
        E0=E0,
        E1=E1,
        E2=E2,
        E=E,
        N=2.0 * gamma3 * K - 2.0 * H * eye,
        P=kappa * eye - 2.0 * H * S,
        S_adj=2.0 * H * eye - S,
        d=d,
        m=m,
    )


def aux_tensors_at(surface: Surface, spec: FrameSpec, ext: AmbientField, z: Sequence[float]) -> AuxTensors:
    return setup_at(surface, spec, ext, z).aux


def _check_mutation(mutation: Optional[str], available: Sequence[str], route: str, where: str) -> None:
    if mutation is None:
        return
    if mutation not in MUTATIONS:
        raise DecompositionError(where, f"unknown mutation '{mutation}' (known: {', '.join(MUTATIONS)})")
    if mutation not in available:
        raise DecompositionError(
            where, f"mutation '{mutation}' has no effect on the {route} route (it takes: {', '.join(available)})"
        )


def _assemble(
    tangential: Dict[str, np.ndarray], normal: Dict[str, float], mutation: Optional[str]
) -> tuple:
    if mutation in tangential:
        tangential[mutation] = -tangential[mutation]
    if mutation in normal:
        normal[mutation] = -normal[mutation]
    B_t = sum(tangential.values(), np.zeros(2))
    B_n = float(sum(normal.values()))
    terms = {name: float(np.linalg.norm(value)) for name, value in tangential.items()}
    terms.update({f"n:{name}": abs(value) for name, value in normal.items()})
    return B_t, B_n, terms


def _tangential_terms(setup: PointSetup, transport: np.ndarray) -> Dict[str, np.ndarray]:
    aux = setup.aux
    return {
        "laplacian": setup.surface_field.laplacian_bochner,
        "kappa_v": aux.kappa * aux.v,
        "shape_v": -2.0 * aux.H * (aux.S @ aux.v),
        "Ev": aux.E @ aux.v,
        "2rhoX3": transport,
        "d": aux.d[:2].copy(),
        "Nq": aux.N @ aux.q,
    }


def _comparison(aux: AuxTensors, setup: PointSetup) -> np.ndarray:
    return setup.surface_field.laplacian_bochner + aux.kappa * aux.v - 2.0 * aux.H * (aux.S @ aux.v)


def _report(setup: PointSetup, route: str, B_t, B_n, terms, mutation) -> DecompositionReport:
    report = DecompositionReport(
        z=setup.z,
        frame_name=setup.frame.spec.name,
        route=route,
        orientation=setup.frame.orientation,
        B_t=B_t,
        B_n=B_n,
        laplacian=setup.laplacian,
        comparison=_comparison(setup.aux, setup),
        terms=terms,
        mutation=mutation,
    )
    logger.debug("%s decomposition at z=%s: residual %.3e", route, setup.z, report.residual)
    return report


def decompose_general(
    surface: Surface,
    spec: FrameSpec,
    ext: AmbientField,
    z: Sequence[float],
    mutation: Optional[str] = None,
    setup: Optional[PointSetup] = None,
) -> DecompositionReport:
    """``Delta_B u = B_t + B_n b^3`` on the surface, for any extension.

    Args:
        mutation: Name of a single term whose sign is flipped; used to check that residual suites detect it.

    Raises:
        DecompositionError: If ``mutation`` names no term of this route.
    """
    setup = setup or setup_at(surface, spec, ext, z)
    aux = setup.aux
    _check_mutation(mutation, GENERAL_MUTATIONS, "general", f"z={setup.z}")
    tangential = _tangential_terms(setup, 2.0 * aux.rho * aux.X3)
    normal = {
        "2sigma": 2.0 * aux.sigma,
        "S_w_Kv": 2.0 * aux.shape(aux.w, aux.Kv),
        "S_X3_v": -aux.shape(aux.X3, aux.v),
        "Tv": float(aux.T @ aux.v),
        "d3": float(aux.d[2]),
        "X3_q": -2.0 * float(aux.X3 @ aux.q),
        "H_rho": -2.0 * aux.H * aux.rho,
    }
    B_t, B_n, terms = _assemble(tangential, normal, mutation)
    return _report(setup, "general", B_t, B_n, terms, mutation)


def decompose_divfree(
    surface: Surface,
    spec: FrameSpec,
    ext: AmbientField,
    z: Sequence[float],
    compatible: bool = False,
    mutation: Optional[str] = None,
    setup: Optional[PointSetup] = None,
) -> DecompositionReport:
    """The solenoidal form of the decomposition; needs ``div u = 0`` near the surface.

    With ``compatible`` the contraction ``sigma`` is replaced by its reduced form and ``T_div`` by its
    compatible counterpart.

    Raises:
        DecompositionError: If the extension is not divergence free at the point, or ``mutation`` names no
            term of this route.
    """
    setup = setup or setup_at(surface, spec, ext, z)
    aux = setup.aux
    where = f"z={setup.z}"
    _check_mutation(mutation, DIVFREE_MUTATIONS, "divfree", where)
    divergence = setup.field.divergence
    if abs(divergence) > DIVERGENCE_TOLERANCE:
        raise DecompositionError(where, f"extension is not divergence free (div u = {divergence:.3e})")
    tangential = _tangential_terms(setup, -2.0 * aux.div_v * aux.X3)
    sigma = aux.sigma_hat if compatible else aux.sigma
    T_div = aux.T_div_c if compatible else aux.T_div
    normal = {
        "2sigma": 2.0 * sigma,
        "gamma3_rot": aux.gamma3 * (aux.Q[1, 0] - aux.Q[0, 1]),
        "S_w_Kv": 2.0 * aux.shape(aux.w, aux.Kv),
        "Sadj_X3_v": float(aux.X3 @ aux.S_adj @ aux.v),
        "Tv": float(T_div @ aux.v),
        "m": -float(aux.m.sum()),
        "Kw_q": float(aux.Kw @ aux.q),
    }
    B_t, B_n, terms = _assemble(tangential, normal, mutation)
    route = "divfree-compatible" if compatible else "divfree"
    return _report(setup, route, B_t, B_n, terms, mutation)


def lemma_residuals(
    surface: Surface, spec: FrameSpec, ext: AmbientField, z: Sequence[float], setup: Optional[PointSetup] = None
) -> Dict[str, float]:
    """Left minus right side of each intermediate identity; left sides come from the ambient operators."""
    setup = setup or setup_at(surface, spec, ext, z)
    aux, frame, field_ = setup.aux, setup.frame, setup.field
    b = frame.vectors
    v, q = aux.v, aux.q
    lap_v = setup.surface_field.laplacian_bochner
    nabla_Kw_v = setup.intrinsic_covariant(aux.Kw)
    X = _values(frame.nabla[0][0]) + _values(frame.nabla[1][1])
    X3_derivative = np.array([jet.value_of(frame.along(_values(frame.nabla[2][2]), field_.u[j])) for j in range(2)])

    def stacked(tangential: np.ndarray, normal: float) -> np.ndarray:
        return np.array([tangential[0], tangential[1], normal])

    residuals: Dict[str, float] = {}

    left = field_.covariant_components(X)
    right = stacked(
        nabla_Kw_v + 2.0 * aux.H * (q + aux.gamma3 * aux.Kv), 2.0 * aux.H * aux.rho + aux.shape(aux.Kw, v)
    )
    residuals["mean_curvature_direction"] = float(np.abs(left - right).max())

    left = sum((setup.frame_components(field_.iterated_covariant(b[k], b[k])) for k in range(2)), np.zeros(3))
    right = stacked(
        lap_v + aux.kappa * v - 2.0 * aux.H * (aux.S @ v) + nabla_Kw_v,
        2.0 * aux.sigma + float(aux.T0 @ v) + aux.shape(aux.Kw, v) + 2.0 * aux.shape(aux.w, aux.Kv),
    )
    residuals["tangential_iterated"] = float(np.abs(left - right).max())

    left = sum((setup.frame_components(field_.second_covariant(b[k], b[k])) for k in range(2)), np.zeros(3))
    right = stacked(
        lap_v + aux.kappa * v - 2.0 * aux.H * (aux.S @ v + q + aux.gamma3 * aux.Kv),
        2.0 * aux.sigma + float(aux.T0 @ v) + 2.0 * aux.shape(aux.w, aux.Kv) - 2.0 * aux.H * aux.rho,
    )
    residuals["tangential_hessian"] = float(np.abs(left - right).max())

    left = setup.frame_components(field_.iterated_covariant(b[2], b[2]))
    right = stacked(
        aux.d[:2] + X3_derivative + 2.0 * aux.gamma3 * (aux.K @ q) + 2.0 * aux.rho * aux.X3 + aux.E1 @ v,
        aux.d[2] + float(aux.T2 @ v) - 2.0 * float(aux.X3 @ q),
    )
    residuals["normal_iterated"] = float(np.abs(left - right).max())

    rho = frame.derivative(2, field_.u[2]) - frame.alpha_jet(0) * field_.u[0] - frame.alpha_jet(1) * field_.u[1]
    left_rho = jet.value_of(frame.derivative(2, rho))
    residuals["normal_rho"] = abs(left_rho - (aux.d[2] - float(aux.T1 @ v) - float(aux.X3 @ q)))

    left = setup.frame_components(field_.second_covariant(b[2], b[2]))
    right = stacked(
        aux.d[:2] + 2.0 * aux.gamma3 * (aux.K @ q) + 2.0 * aux.rho * aux.X3 + aux.E2 @ v,
        aux.d[2] + float(aux.T2 @ v) - 2.0 * float(aux.X3 @ q) - aux.shape(aux.X3, v),
    )
    residuals["normal_hessian"] = float(np.abs(left - right).max())

    # supporting identities
    contraction = sum(
        float((aux.S @ setup.intrinsic_covariant(np.eye(2)[k]))[k]) for k in range(2)
    )
    residuals["shape_contraction"] = abs(contraction - (aux.sigma + aux.shape(aux.w, aux.Kv)))

    shape_divergence = 0.0
    for k in range(2):
        pairing = frame.t_jet(0, k) * field_.u[0] + frame.t_jet(1, k) * field_.u[1]
        shape_divergence += jet.value_of(frame.derivative(k, pairing))
    expected = aux.sigma + float(aux.T0 @ v) + aux.shape(aux.Kw, v) + aux.shape(aux.w, aux.Kv)
    residuals["shape_divergence"] = abs(shape_divergence - expected)

    shift = X3_derivative - setup.intrinsic_covariant(aux.X3)
    residuals["x3_shift"] = float(np.abs(shift + float(aux.X3 @ aux.w) * aux.Kv).max())

    residuals["sigma_reduced"] = abs(aux.sigma - aux.sigma_hat - aux.S[0, 0] * (aux.div_v + float(aux.Kw @ v)))

    rotated = frame.gamma_jet(1) * field_.u[0] - frame.gamma_jet(0) * field_.u[1]
    left_bracket = jet.value_of(frame.derivative(2, rotated))
    residuals["bracket_transport"] = abs(left_bracket - float(aux.Kw @ q) - float((aux.K @ aux.ell) @ v))

    residuals["adjugate"] = abs(
        2.0 * aux.H * float(aux.X3 @ v) - aux.shape(aux.X3, v) - float(aux.X3 @ aux.S_adj @ v)
    )
    return residuals


@dataclass
class ProjectedComparison:
    z: tuple
    frame_name: str
    projected: np.ndarray
    comparison: np.ndarray
    other_terms: Dict[str, np.ndarray]
    bracket_form_residual: float
    E: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.projected - self.comparison

    @property
    def other_total(self) -> np.ndarray:
        return sum(self.other_terms.values(), np.zeros(2))

    def as_dict(self) -> Dict[str, object]:
        return {
            "z": list(self.z),
            "frame": self.frame_name,
            "projected": self.projected.tolist(),
            "comparison": self.comparison.tolist(),
            "difference": self.difference.tolist(),
            "other_terms": {k: v.tolist() for k, v in self.other_terms.items()},
            "bracket_form_residual": self.bracket_form_residual,
            "E": self.E.tolist(),
        }


def projected_comparison(
    surface: Surface, spec: FrameSpec, ext: AmbientField, z: Sequence[float], setup: Optional[PointSetup] = None
) -> ProjectedComparison:
    """Tangential part of ``Delta_B u`` against ``Delta_B v + kappa v - 2H Sv``, with the remaining terms itemised.

    Also evaluates the bracket form ``pi(Delta_B u) = Delta_B v + kappa v + pi(hess u (b3, b3) + 2H [u, b3])``,
    which holds whenever ``u^3`` vanishes on the surface.
    """
    setup = setup or setup_at(surface, spec, ext, z)
    aux, frame = setup.aux, setup.frame
    projected = setup.laplacian[:2]
    comparison = _comparison(aux, setup)
    other = {
        "Ev": aux.E @ aux.v,
        "2rhoX3": 2.0 * aux.rho * aux.X3,
        "d": aux.d[:2].copy(),
        "Nq": aux.N @ aux.q,
    }
    normal_hessian = setup.frame_components(setup.field.second_covariant(frame.vectors[2], frame.vectors[2]))
    bracket = setup.frame_components(frame.geometry.bracket(setup.field.vector, frame.vectors[2]))
    bracket_form = (
        setup.surface_field.laplacian_bochner + aux.kappa * aux.v + normal_hessian[:2] + 2.0 * aux.H * bracket[:2]
    )
    return ProjectedComparison(
        z=setup.z,
        frame_name=spec.name,
        projected=projected,
        comparison=comparison,
        other_terms=other,
        bracket_form_residual=float(np.abs(projected - bracket_form).max()),
        E=aux.E.copy(),
    )
