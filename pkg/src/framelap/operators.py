"""Vector calculus on the ambient space and on the surface, in frame components."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from . import jet
from .ambient import ConsistencyError, Vector
from .exprlang import SmoothMap
from .geometry import (
    FrameSpec,
    PointFrame,
    Surface,
    SurfaceFrame,
    adapted_frame_at,
    curvature_forms_at,
    frame_on_surface,
)
from .jet import Jet3, JetLike

logger = logging.getLogger(__name__)

FIELD_ORDER = 2
ROUTE_TOLERANCE = 1e-8


class OperatorError(ValueError):
    def __init__(self, operator: str, message: str):
        super().__init__(f"{message} in '{operator}'")


def _values(vector: Sequence[JetLike]) -> np.ndarray:
    return np.array([jet.value_of(c) for c in vector])


def _check_routes(name: str, first: float, second: float, where: str) -> None:
    scale = max(1.0, abs(first), abs(second))
    if abs(first - second) > ROUTE_TOLERANCE * scale:
        raise ConsistencyError(where, f"{name} routes disagree ({first!r} vs {second!r})")


# fields


class AmbientField(ABC):
    """A vector field near the surface, given by its frame components ``u^1, u^2, u^3``."""

    @abstractmethod
    def component_jets(self, frame: PointFrame, order: int) -> List[JetLike]:
        """y-jets of the frame components at ``frame.y``."""


@dataclass(frozen=True)
class ClosedFormField(AmbientField):
    components: SmoothMap

    def component_jets(self, frame: PointFrame, order: int) -> List[JetLike]:
        return list(self.components.jets(frame.y, order))


@dataclass(frozen=True)
class CoordinateField(AmbientField):
    """A field given by its y-coordinate components; converted to frame components on demand."""

    components: SmoothMap

    def component_jets(self, frame: PointFrame, order: int) -> List[JetLike]:
        return frame.components(self.components.jets(frame.y, order))


class SurfaceField(ABC):
    """A tangent field on the surface, given by components ``v^1, v^2`` against ``b_z^1, b_z^2``."""

    @abstractmethod
    def jets(self, z: Sequence[float], order: int) -> List[JetLike]:
        pass


@dataclass(frozen=True)
class ExpressionSurfaceField(SurfaceField):
    components: SmoothMap

    def jets(self, z: Sequence[float], order: int) -> List[JetLike]:
        return list(self.components.jets(z, order))


@dataclass(frozen=True)
class RestrictedField(SurfaceField):
    """Restriction to the surface of the frame components of a closed-form ambient field."""

    components: SmoothMap
    surface: Surface

    def jets(self, z: Sequence[float], order: int) -> List[JetLike]:
        f = self.surface.embedding_jets(z, order)
        ambient = self.components.jets([c.value for c in f], order)
        return [c.compose(f) for c in ambient[:2]]


def to_coordinate_components(frame: PointFrame, u: Sequence[JetLike]) -> Vector:
    return frame.assemble(u)


class AmbientFieldJets:
    """Frame components of an ambient field at one point, with the operators acting on it."""

    def __init__(self, frame: PointFrame, components: Sequence[JetLike]):
        self.frame = frame
        self.u = list(components)
        self.vector = frame.assemble(self.u)

    def covariant(self, x: Sequence[JetLike]) -> Vector:
        return self.frame.covariant(x, self.vector)

    def covariant_components(self, x: Sequence[JetLike]) -> np.ndarray:
        return _values(self.frame.components(self.covariant(x)))

    def second_covariant(self, x: Sequence[JetLike], y: Sequence[JetLike]) -> Vector:
        """``nabla nabla u (x, y) = nabla_x nabla_y u - nabla_{nabla_x y} u``."""
        inner = self.frame.covariant(y, self.vector)
        first = self.frame.covariant(x, inner)
        shift = self.covariant(_values(self.frame.covariant(x, y)))
        return [a - b for a, b in zip(first, shift)]

    def iterated_covariant(self, x: Sequence[JetLike], y: Sequence[JetLike]) -> Vector:
        """``nabla_x nabla_y u`` without the connection correction."""
        return self.frame.covariant(x, self.frame.covariant(y, self.vector))

    @cached_property
    def laplacian_bochner(self) -> np.ndarray:
        total = np.zeros(3)
        for b in self.frame.vectors:
            total += _values(self.second_covariant(b, b))
        return _values(self.frame.components(total.tolist()))

    def divergence_jet(self) -> JetLike:
        return sum((self.frame.components(self.covariant(b))[k] for k, b in enumerate(self.frame.vectors)), 0.0)

    @cached_property
    def divergence(self) -> float:
        """Divergence from the frame expansion, cross-checked against the coordinate formula."""
        frame = self.frame
        omega = frame.omega
        u = [jet.value_of(c) for c in self.u]
        t11, t22 = -omega[0, 2, 0], -omega[1, 2, 1]
        alpha1, alpha2 = omega[0, 2, 2], omega[1, 2, 2]
        gamma1, gamma2 = omega[0, 1, 0], omega[0, 1, 1]
        expansion = (
            -(gamma2 + alpha1) * u[0]
            + (gamma1 - alpha2) * u[1]
            - (t11 + t22) * u[2]
            + sum(jet.value_of(frame.derivative(k, self.u[k])) for k in range(3))
        )
        _check_routes("divergence", expansion, self.coordinate_divergence, f"y={frame.y}")
        return float(expansion)

    @cached_property
    def coordinate_divergence(self) -> float:
        geometry = self.frame.geometry
        volume = geometry.half_log_volume()
        total = 0.0
        for i in range(3):
            component = self.vector[i]
            if isinstance(component, Jet3):
                total += component.deriv(i).value
            total += jet.value_of(component) * volume.deriv(i).value
        return total

    def exterior(self, a: int, b: int) -> float:
        """``du(b^a, b^b)`` for the one-form dual to ``u``."""
        frame = self.frame
        bracket = _values(frame.brackets[a][b])
        return (
            jet.value_of(frame.derivative(a, self.u[b]))
            - jet.value_of(frame.derivative(b, self.u[a]))
            - jet.value_of(frame.geometry.inner(_values(self.vector), bracket))
        )

    @cached_property
    def curl(self) -> np.ndarray:
        return np.array([self.exterior(1, 2), self.exterior(2, 0), self.exterior(0, 1)])

    def bracket_with(self, other: "AmbientFieldJets") -> Vector:
        return self.frame.geometry.bracket(self.vector, other.vector)


class SurfaceFieldJets:
    """Frame components of a surface field at one surface point, with the intrinsic operators."""

    def __init__(self, surface_frame: SurfaceFrame, components: Sequence[JetLike]):
        self.frame = surface_frame
        self.v = list(components)
        self.vector = surface_frame.assemble(self.v)

    @property
    def values(self) -> np.ndarray:
        return _values(self.v)

    def covariant(self, x: Sequence[JetLike]) -> Vector:
        return self.frame.geometry.covariant(x, self.vector)

    def covariant_components(self, x: Sequence[JetLike]) -> np.ndarray:
        return _values(self.frame.components(self.covariant(x)))

    @cached_property
    def gradient(self) -> np.ndarray:
        """``gradient[k, j]`` is the ``b_z^j`` component of ``nabla_{b_z^k} v``."""
        return np.array([self.covariant_components(c) for c in self.frame.vectors])

    @cached_property
    def tangential_derivatives(self) -> np.ndarray:
        """``Q[i, j] = b_z^i(v^j)``."""
        return np.array([[jet.value_of(self.frame.derivative(i, self.v[j])) for j in range(2)] for i in range(2)])

    @cached_property
    def laplacian_bochner(self) -> np.ndarray:
        geometry = self.frame.geometry
        total = np.zeros(2)
        for c in self.frame.vectors:
            first = geometry.covariant(c, self.covariant(c))
            shift = self.covariant(_values(geometry.covariant(c, c)))
            total += _values(first) - _values(shift)
        return _values(self.frame.components(total.tolist()))

    def divergence_jet(self) -> JetLike:
        return sum((self.frame.components(self.covariant(c))[k] for k, c in enumerate(self.frame.vectors)), 0.0)

    @cached_property
    def divergence(self) -> float:
        """``-gamma2 v^1 + gamma1 v^2 + b_z^1(v^1) + b_z^2(v^2)``, cross-checked against the coordinate formula."""
        gamma = self.frame.gamma
        v = self.values
        q = self.tangential_derivatives
        expansion = -gamma[1] * v[0] + gamma[0] * v[1] + q[0, 0] + q[1, 1]
        geometry = self.frame.geometry
        volume = geometry.half_log_volume()
        coordinate = 0.0
        for i in range(2):
            component = self.vector[i]
            if isinstance(component, Jet3):
                coordinate += component.deriv(i).value
            coordinate += jet.value_of(component) * volume.deriv(i).value
        _check_routes("surface divergence", expansion, coordinate, f"z={self.frame.z}")
        return float(expansion)

    @cached_property
    def rot(self) -> float:
        q = self.tangential_derivatives
        return float(q[0, 1] - q[1, 0] - np.dot(self.values, self.frame.bracket))

    @cached_property
    def grad_div(self) -> np.ndarray:
        div = self.divergence_jet()
        return np.array([jet.value_of(self.frame.derivative(k, div)) for k in range(2)])

    @cached_property
    def symmetric_gradient(self) -> np.ndarray:
        return self.gradient + self.gradient.T

    @cached_property
    def advection(self) -> np.ndarray:
        """``nabla_v v``."""
        return self.values @ self.gradient

    @cached_property
    def grad_half_norm(self) -> np.ndarray:
        half = 0.5 * self.frame.geometry.inner(self.vector, self.vector)
        return np.array([jet.value_of(self.frame.derivative(k, half)) for k in range(2)])

    @property
    def kappa(self) -> float:
        return self.frame.gaussian_curvature


# operations


def field_at(
    surface: Surface,
    spec: FrameSpec,
    u: AmbientField,
    y: Sequence[float],
    order: int = FIELD_ORDER,
    frame: Optional[PointFrame] = None,
) -> AmbientFieldJets:
    frame = frame or adapted_frame_at(surface, spec, y)
    return AmbientFieldJets(frame, u.component_jets(frame, order))


def surface_field_at(
    surface: Surface, spec: FrameSpec, v: SurfaceField, z: Sequence[float], order: int = FIELD_ORDER
) -> SurfaceFieldJets:
    surface_frame = SurfaceFrame(frame_on_surface(surface, spec, z), z)
    return SurfaceFieldJets(surface_frame, v.jets(z, order))


def covariant_derivative(
    surface: Surface, spec: FrameSpec, u: AmbientField, direction: Sequence[float], y: Sequence[float]
) -> np.ndarray:
    """``nabla_X u`` in frame components, ``X`` given by its frame components."""
    field = field_at(surface, spec, u, y)
    x = field.frame.assemble(list(direction))
    return field.covariant_components(_values(x))


def div_ambient(surface: Surface, spec: FrameSpec, u: AmbientField, y: Sequence[float]) -> float:
    return field_at(surface, spec, u, y).divergence


def div_surface(surface: Surface, spec: FrameSpec, v: SurfaceField, z: Sequence[float]) -> float:
    return surface_field_at(surface, spec, v, z).divergence


def curl_ambient(surface: Surface, spec: FrameSpec, u: AmbientField, y: Sequence[float]) -> np.ndarray:
    """Curl in frame components; a negatively oriented frame flips its sign relative to the ambient orientation."""
    return field_at(surface, spec, u, y).curl


def rot_surface(surface: Surface, spec: FrameSpec, v: SurfaceField, z: Sequence[float]) -> float:
    return surface_field_at(surface, spec, v, z).rot


def bracket(surface: Surface, spec: FrameSpec, u1: AmbientField, u2: AmbientField, y: Sequence[float]) -> np.ndarray:
    """Lie bracket in frame components, checked against the torsion-free covariant route."""
    first = field_at(surface, spec, u1, y)
    second = AmbientFieldJets(first.frame, u2.component_jets(first.frame, FIELD_ORDER))
    coordinate = _values(first.bracket_with(second))
    covariant = _values(first.frame.covariant(first.vector, second.vector)) - _values(
        first.frame.covariant(second.vector, first.vector)
    )
    deviation = float(np.abs(coordinate - covariant).max())
    if deviation > ROUTE_TOLERANCE * max(1.0, float(np.abs(coordinate).max())):
        raise ConsistencyError(f"y={tuple(y)}", f"bracket routes disagree by {deviation:.3e}")
    return _values(first.frame.components(coordinate))


def jacobi_residual(
    surface: Surface, spec: FrameSpec, fields: Sequence[AmbientField], y: Sequence[float]
) -> float:
    frame = adapted_frame_at(surface, spec, y)
    vectors = [frame.assemble(f.component_jets(frame, jet.MAX_ORDER)) for f in fields]
    bracket_ = frame.geometry.bracket
    total = np.zeros(3)
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        total += _values(bracket_(vectors[a], bracket_(vectors[b], vectors[c])))
    return float(np.abs(total).max())


def metric_compatibility_residual(
    surface: Surface, spec: FrameSpec, u: AmbientField, w: AmbientField, direction: Sequence[float], y: Sequence[float]
) -> float:
    """``X(g0(u, w)) - g0(nabla_X u, w) - g0(u, nabla_X w)``."""
    first = field_at(surface, spec, u, y)
    second = AmbientFieldJets(first.frame, w.component_jets(first.frame, FIELD_ORDER))
    geometry = first.frame.geometry
    x = _values(first.frame.assemble(list(direction)))
    lhs = jet.value_of(geometry.directional(x, geometry.inner(first.vector, second.vector)))
    rhs = jet.value_of(geometry.inner(_values(first.covariant(x)), second.vector)) + jet.value_of(
        geometry.inner(first.vector, _values(second.covariant(x)))
    )
    return abs(lhs - rhs)


def laplacian_surface(
    surface: Surface, spec: FrameSpec, v: SurfaceField, z: Sequence[float], kind: Union[str, float] = "bochner"
) -> np.ndarray:
    """Bochner, Hodge or symmetric Laplacian of ``v``; a number selects ``Delta_B v + beta kappa v``."""
    field = surface_field_at(surface, spec, v, z)
    return surface_laplacian(field, kind)


def surface_laplacian(field: SurfaceFieldJets, kind: Union[str, float]) -> np.ndarray:
    bochner = field.laplacian_bochner
    kappa = field.kappa
    if not isinstance(kind, str):
        beta = float(kind)
        if abs(beta) > 1.0:
            logger.warning("beta=%g outside [-1, 1]", beta)
        return bochner + beta * kappa * field.values
    if kind == "bochner":
        return bochner
    if kind == "hodge":
        return bochner - kappa * field.values
    if kind == "symmetric":
        return bochner + field.grad_div + kappa * field.values
    raise OperatorError("laplacian_surface", f"unknown Laplacian '{kind}'")


def laplacian_ambient_bochner(surface: Surface, spec: FrameSpec, u: AmbientField, y: Sequence[float]) -> np.ndarray:
    return field_at(surface, spec, u, y).laplacian_bochner


def ricci_ambient(
    surface: Surface, spec: FrameSpec, y: Sequence[float], frame: Optional[PointFrame] = None
) -> np.ndarray:
    """Ambient Ricci tensor in frame components, ``Ri(b^j, b^k) = sum_i Omega_ik(b^i, b^j)``."""
    frame = frame or adapted_frame_at(surface, spec, y)
    omega = curvature_forms_at(surface, spec, frame.y, frame)
    return np.array([[sum(omega[i, k, i, j] for i in range(3)) for k in range(3)] for j in range(3)])


def laplacian_ambient(surface: Surface, spec: FrameSpec, u: AmbientField, y: Sequence[float], kind: str) -> np.ndarray:
    field = field_at(surface, spec, u, y)
    bochner = field.laplacian_bochner
    if kind == "bochner":
        return bochner
    ricci = ricci_ambient(surface, spec, y, field.frame) @ _values(field.u)
    if kind == "hodge":
        return bochner - ricci
    if kind == "symmetric":
        div = field.divergence_jet()
        grad_div = np.array([jet.value_of(field.frame.derivative(k, div)) for k in range(3)])
        return bochner + grad_div + ricci
    raise OperatorError("laplacian_ambient", f"unknown Laplacian '{kind}'")


def special_field_residuals(field: SurfaceFieldJets) -> Dict[str, float]:
    """Zero residuals identify parallel, harmonic and Killing fields."""
    hodge = surface_laplacian(field, "hodge")
    return {
        "parallel": float(np.linalg.norm(field.gradient)),
        "harmonic": float(np.linalg.norm(hodge)),
        "harmonic_forms": abs(field.rot) + abs(field.divergence),
        "killing": float(np.linalg.norm(field.symmetric_gradient)),
    }


def navier_stokes_residuals(field: SurfaceFieldJets) -> Dict[str, float]:
    """Steady Navier-Stokes residuals with the pressure each special class is paired with.

    Parallel fields go with the Bochner Laplacian and constant pressure, harmonic fields with the Hodge
    Laplacian and ``p = -|v|^2/2``, Killing fields with the symmetric Laplacian and ``p = |v|^2/2``.
    """
    parallel = -surface_laplacian(field, "bochner") + field.advection
    harmonic = -surface_laplacian(field, "hodge") + field.advection - field.grad_half_norm
    killing = -surface_laplacian(field, "symmetric") + field.advection + field.grad_half_norm
    return {
        "parallel": float(np.linalg.norm(parallel)),
        "harmonic": float(np.linalg.norm(harmonic)),
        "killing": float(np.linalg.norm(killing)),
    }


def restriction_residuals(field: AmbientFieldJets, surface_field: SurfaceFieldJets) -> Dict[str, float]:
    """Identities tying an ambient field at a surface point to the surface field it extends.

    ``tangency`` is ``|u^3|``; ``normal_derivative`` compares the covariant route for ``nabla_{b^3} u`` with
    ``q + u^3 X3 + gamma3 (u^2 b^1 - u^1 b^2) + rho b^3``; ``rot_curl`` compares ``g0(curl u, b^3)`` with ``rot v``;
    ``divergence`` compares ``div u`` with ``div v + rho`` (zero ``rho`` for compatible extensions).
    """
    frame = field.frame
    omega = frame.omega
    u = _values(field.u)
    alpha = omega[:2, 2, 2]
    gamma3 = omega[0, 1, 2]
    q = np.array([jet.value_of(frame.derivative(2, field.u[k])) for k in range(2)])
    rho = jet.value_of(frame.derivative(2, field.u[2])) - float(alpha @ u[:2])
    expansion = np.array([q[0] + u[2] * alpha[0] + gamma3 * u[1], q[1] + u[2] * alpha[1] - gamma3 * u[0], rho])
    direct = field.covariant_components(_values(frame.vectors[2]))
    return {
        "tangency": abs(float(u[2])),
        "restriction": float(np.abs(u[:2] - surface_field.values).max()),
        "normal_derivative": float(np.abs(direct - expansion).max()),
        "rot_curl": abs(float(field.curl[2]) - surface_field.rot),
        "divergence": abs(field.divergence - surface_field.divergence - rho),
    }
