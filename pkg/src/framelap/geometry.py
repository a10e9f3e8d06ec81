"""Adapted orthonormal frames near an embedded surface and the quantities built from them.

Indices are zero-based in code: ``omega[i][j][k]`` is the connection form ``omega_ij`` evaluated on
the frame vector ``b^k``, i.e. ``g0(nabla_{b^k} b^j, b^i)``.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from . import jet
from .ambient import (
    AmbientSpace,
    ConsistencyError,
    GeometryError,
    LocalGeometry,
    Vector,
    local_geometry,
    orientation,
)
from .exprlang import EvaluationError, SmoothMap
from .jet import Jet3, JetDomainError, JetLike

logger = logging.getLogger(__name__)

SURFACE_COORDINATES = ("z1", "z2")
FRAME_ORDER = 2
ORTHONORMAL_TOLERANCE = 1e-10
ROUTE_TOLERANCE = 1e-8

K = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class DomainBox:
    z1: Tuple[float, float] = (-1.0, 1.0)
    z2: Tuple[float, float] = (0.4, math.pi - 0.4)
    s_max: float = 0.1

    def __post_init__(self):
        for name in ("z1", "z2"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"empty interval for {name}: ({lo}, {hi})")
        if self.s_max <= 0.0:
            raise ValueError(f"s_max must be positive, got {self.s_max}")

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.z1[0] + self.z1[1]), 0.5 * (self.z2[0] + self.z2[1]))

    def contains(self, z: Sequence[float]) -> bool:
        return self.z1[0] <= z[0] <= self.z1[1] and self.z2[0] <= z[1] <= self.z2[1]

    def grid(self, n1: int, n2: int) -> List[Tuple[float, float]]:
        return [(float(a), float(b)) for a in np.linspace(*self.z1, n1) for b in np.linspace(*self.z2, n2)]

    def sample(self, count: int, seed: int) -> List[Tuple[float, float]]:
        rng = np.random.default_rng(seed)
        a = rng.uniform(*self.z1, size=count)
        b = rng.uniform(*self.z2, size=count)
        return [(float(x), float(y)) for x, y in zip(a, b)]


@dataclass(frozen=True)
class Surface:
    ambient: AmbientSpace
    f: SmoothMap
    domain: DomainBox = DomainBox()

    def __post_init__(self):
        if self.f.domain_dim != 2 or self.f.codomain_dim != 3:
            raise ValueError("the embedding f must map two surface coordinates to three ambient coordinates")

    def point(self, z: Sequence[float]) -> np.ndarray:
        return self.f(z)

    def embedding_jets(self, z: Sequence[float], order: int = jet.MAX_ORDER) -> List[Jet3]:
        return self.f.jets(z, order)


class FrameKind(str, Enum):
    CLOSED_FORM = "closed-form"
    NORMAL_TUBE = "normal-tube"


@dataclass(frozen=True)
class FrameSpec:
    name: str
    kind: FrameKind
    vectors: Tuple[SmoothMap, ...] = ()

    def __post_init__(self):
        if self.kind is FrameKind.CLOSED_FORM:
            if len(self.vectors) != 3 or any(v.codomain_dim != 3 for v in self.vectors):
                raise ValueError(f"closed-form frame '{self.name}' needs three vector fields with three components")

    @classmethod
    def closed_form(
        cls,
        name: str,
        sources: Sequence[Sequence[str]],
        variables: Sequence[str],
        bindings: Optional[Dict[str, float]] = None,
    ) -> "FrameSpec":
        vectors = tuple(SmoothMap.from_sources(s, variables, bindings) for s in sources)
        return cls(name, FrameKind.CLOSED_FORM, vectors)

    @classmethod
    def normal_tube(cls, name: str = "normal-tube") -> "FrameSpec":
        return cls(name, FrameKind.NORMAL_TUBE)


# normal-tube frame


def _cross(a: Sequence[JetLike], b: Sequence[JetLike]) -> Vector:
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def _unit(a: Sequence[JetLike]) -> Vector:
    norm = jet.sqrt(jet.dot(a, a))
    return [c / norm for c in a]


def _flat_embedding_jets(surface: Surface, z: Sequence[float], order: int) -> List[Jet3]:
    f = surface.embedding_jets(z, order)
    psi = surface.ambient.psi.jets([c.value for c in f], order)
    return [c.compose(f) for c in psi]


def foot_point(
    surface: Surface, x: Sequence[float], z_hint: Optional[Sequence[float]] = None
) -> Tuple[np.ndarray, float]:
    """Surface coordinates and signed normal distance of the flat-chart point ``x``."""

    def residual(u: np.ndarray) -> np.ndarray:
        p = _flat_embedding_jets(surface, u[:2], 1)
        n = np.cross(np.array([c.gradient()[0] for c in p]), np.array([c.gradient()[1] for c in p]))
        n /= np.linalg.norm(n)
        return np.array([c.value for c in p]) + u[2] * n - np.asarray(x, dtype=float)

    start = np.array(list(z_hint if z_hint is not None else surface.domain.center) + [0.0])
    solution = least_squares(residual, start, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    miss = float(np.linalg.norm(solution.fun))
    if miss > 1e-10:
        raise GeometryError(f"x={tuple(x)}", f"degenerate normal-tube inversion (residual {miss:.3e})")
    z, s = solution.x[:2], float(solution.x[2])
    logger.debug("foot point of %s: z=%s s=%.6g (%d evaluations)", tuple(x), z, s, solution.nfev)
    return z, s


def _normal_tube_vectors(surface: Surface, y: Sequence[float], z_hint: Optional[Sequence[float]]) -> List[Vector]:
    ambient = surface.ambient
    if not ambient.is_flat:
        raise GeometryError(f"y={tuple(y)}", "the normal-tube frame needs a flat-pullback ambient")
    x_of_y = ambient.psi.jets(y, jet.MAX_ORDER)
    z_star, s_star = foot_point(surface, [c.value for c in x_of_y], z_hint)
    p = _flat_embedding_jets(surface, z_star, jet.MAX_ORDER)
    dp = [[c.deriv(i) for c in p] for i in range(2)]
    normal = _unit(_cross(dp[0], dp[1]))
    e1 = _unit(dp[0])
    projection = jet.dot(dp[1], e1)
    e2 = _unit([a - projection * b for a, b in zip(dp[1], e1)])

    s = Jet3.variable(2, s_star, 3, jet.MAX_ORDER)
    tube = [a.embed(3, (0, 1)) + s * b.embed(3, (0, 1)) for a, b in zip(p, normal)]
    chart = jet.invert_map(tube, (float(z_star[0]), float(z_star[1]), s_star))
    jacobian = [[c.deriv(i) for i in range(3)] for c in x_of_y]
    inverse = jet.inverse(jacobian)
    vectors = []
    for vec in (e1, e2, normal):
        in_x = [c.embed(3, (0, 1)).compose(chart).compose(x_of_y) for c in vec]
        vectors.append([jet.dot(inverse[k], in_x) for k in range(3)])
    return vectors


def frame_vectors(
    surface: Surface,
    spec: FrameSpec,
    y: Sequence[float],
    order: int = FRAME_ORDER,
    z_hint: Optional[Sequence[float]] = None,
) -> List[Vector]:
    """y-component jets of ``b^1, b^2, b^3`` at ``y``."""
    try:
        if spec.kind is FrameKind.NORMAL_TUBE:
            vectors = _normal_tube_vectors(surface, y, z_hint)
            return [[c.truncate(min(order, c.order)) for c in v] for v in vectors]
        return [m.jets(y, order) for m in spec.vectors]
    except (EvaluationError, JetDomainError) as exc:
        raise GeometryError(f"y={tuple(y)}", f"frame '{spec.name}' cannot be evaluated ({exc})") from exc


def check_orthonormal(geometry: LocalGeometry, vectors: Sequence[Vector], name: str, tolerance: float) -> float:
    gram = geometry.gram(vectors)
    deviation = float(np.abs(gram - np.eye(len(vectors))).max())
    if deviation > tolerance:
        raise GeometryError(
            f"y={geometry.point}",
            f"frame '{name}' is not orthonormal (deviation {deviation:.3e}, Gram matrix {gram.tolist()})",
        )
    return deviation


class PointFrame:
    """An adapted frame with its jets at one ambient point, plus everything derived from them."""

    def __init__(self, surface: Surface, spec: FrameSpec, geometry: LocalGeometry, vectors: List[Vector]):
        self.surface = surface
        self.spec = spec
        self.geometry = geometry
        self.vectors = vectors

    @property
    def y(self) -> Tuple[float, ...]:
        return self.geometry.point

    @cached_property
    def values(self) -> np.ndarray:
        """Rows are the y-components of ``b^1, b^2, b^3``."""
        return np.array([[jet.value_of(c) for c in v] for v in self.vectors])

    @cached_property
    def orientation(self) -> int:
        return orientation(self.surface.ambient, self.y, self.values)

    def derivative(self, k: int, h: JetLike) -> JetLike:
        return self.geometry.directional(self.vectors[k], h)

    def along(self, x: Sequence[JetLike], h: JetLike) -> JetLike:
        return self.geometry.directional(x, h)

    def components(self, v: Sequence[JetLike]) -> List[JetLike]:
        return [self.geometry.inner(v, b) for b in self.vectors]

    def assemble(self, u: Sequence[JetLike]) -> Vector:
        return [sum((u[j] * self.vectors[j][m] for j in range(3)), 0.0) for m in range(3)]

    def covariant(self, x: Sequence[JetLike], v: Sequence[JetLike]) -> Vector:
        return self.geometry.covariant(x, v)

    @cached_property
    def nabla(self) -> List[List[Vector]]:
        """``nabla[k][j]`` is ``nabla_{b^k} b^j`` in y-components."""
        return [[self.geometry.covariant(bk, bj) for bj in self.vectors] for bk in self.vectors]

    @cached_property
    def omega_jets(self) -> List[List[List[JetLike]]]:
        inner, nabla, b = self.geometry.inner, self.nabla, self.vectors
        return [[[inner(nabla[k][j], b[i]) for k in range(3)] for j in range(3)] for i in range(3)]

    @cached_property
    def omega(self) -> np.ndarray:
        return np.array([[[jet.value_of(x) for x in row] for row in plane] for plane in self.omega_jets])

    def form(self, i: int, j: int, v: Sequence[float]) -> float:
        """``omega_ij`` evaluated on an arbitrary vector with y-components ``v``."""
        theta = [jet.value_of(c) for c in self.components(v)]
        return float(np.dot(theta, self.omega[i, j, :]))

    @cached_property
    def brackets(self) -> List[List[Vector]]:
        return [[self.geometry.bracket(a, b) for b in self.vectors] for a in self.vectors]

    # frame scalars as jets

    def t_jet(self, i: int, j: int) -> JetLike:
        return -self.omega_jets[i][2][j]

    def alpha_jet(self, j: int) -> JetLike:
        return self.omega_jets[j][2][2]

    def gamma_jet(self, k: int) -> JetLike:
        return self.omega_jets[0][1][k]

    def mean_curvature_jet(self) -> JetLike:
        return 0.5 * (self.t_jet(0, 0) + self.t_jet(1, 1))


def adapted_frame_at(
    surface: Surface,
    spec: FrameSpec,
    y: Sequence[float],
    order: int = FRAME_ORDER,
    z_hint: Optional[Sequence[float]] = None,
) -> PointFrame:
    """Frame jets at the ambient point ``y``, checked for orthonormality.

    Raises:
        GeometryError: If the frame is not orthonormal at ``y`` or cannot be evaluated there.
    """
    geometry = local_geometry(surface.ambient, y)
    vectors = frame_vectors(surface, spec, y, order, z_hint)
    check_orthonormal(geometry, vectors, spec.name, ORTHONORMAL_TOLERANCE)
    return PointFrame(surface, spec, geometry, vectors)


def frame_on_surface(surface: Surface, spec: FrameSpec, z: Sequence[float], order: int = FRAME_ORDER) -> PointFrame:
    return adapted_frame_at(surface, spec, surface.point(z), order, z_hint=z)


def validate_frame(surface: Surface, spec: FrameSpec, points: Sequence[Sequence[float]]) -> float:
    """Check on the surface that the frame is orthonormal and ``b^3`` is normal; returns the worst deviation."""
    worst = 0.0
    for z in points:
        frame = frame_on_surface(surface, spec, z, order=1)
        worst = max(worst, check_orthonormal(frame.geometry, frame.vectors, spec.name, ORTHONORMAL_TOLERANCE))
        f = surface.embedding_jets(z, 1)
        for i in range(2):
            tangent = [c.gradient()[i] for c in f]
            scale = math.sqrt(abs(jet.value_of(frame.geometry.inner(tangent, tangent))))
            normal = abs(jet.value_of(frame.geometry.inner(tangent, frame.vectors[2]))) / scale
            worst = max(worst, normal)
            if normal > ORTHONORMAL_TOLERANCE:
                message = f"b3 of frame '{spec.name}' is not normal (deviation {normal:.3e})"
                raise GeometryError(f"z={tuple(z)}", message)
    logger.debug("frame '%s' validated at %d points, worst deviation %.3e", spec.name, len(points), worst)
    return worst


class SurfaceFrame:
    """The restriction of ``b^1, b^2`` to the surface, in z-components, with the pullback metric."""

    def __init__(self, frame: PointFrame, z: Sequence[float]):
        self.frame = frame
        self.z = tuple(float(c) for c in z)
        f = frame.surface.embedding_jets(z, jet.MAX_ORDER)
        if max(abs(c.value - y) for c, y in zip(f, frame.y)) > 1e-9:
            raise GeometryError(f"z={self.z}", "point frame is not on the surface")
        df = [[c.deriv(i) for i in range(2)] for c in f]
        g0 = [[c.compose(f) for c in row] for row in frame.geometry.metric]
        metric = [[sum((df[a][i] * g0[a][b] * df[b][j] for a in range(3) for b in range(3)), 0.0) for j in range(2)]
                  for i in range(2)]
        normal_matrix = [[jet.dot([df[a][i] for a in range(3)], [df[a][j] for a in range(3)]) for j in range(2)]
                         for i in range(2)]
        self.tangents = df
        self.vectors: List[Vector] = []
        for k in range(2):
            b = [c.compose(f) for c in frame.vectors[k]]
            rhs = [jet.dot([df[a][i] for a in range(3)], b) for i in range(2)]
            self.vectors.append(jet.solve(normal_matrix, rhs))
        self.geometry = LocalGeometry.from_metric(self.z, metric)

    def derivative(self, k: int, h: JetLike) -> JetLike:
        return self.geometry.directional(self.vectors[k], h)

    def along(self, x: Sequence[JetLike], h: JetLike) -> JetLike:
        return self.geometry.directional(x, h)

    def components(self, v: Sequence[JetLike]) -> List[JetLike]:
        return [self.geometry.inner(v, c) for c in self.vectors]

    def assemble(self, v: Sequence[JetLike]) -> Vector:
        return [v[0] * self.vectors[0][m] + v[1] * self.vectors[1][m] for m in range(2)]

    def omega12_jet(self, k: int) -> JetLike:
        return self.geometry.inner(self.geometry.covariant(self.vectors[k], self.vectors[1]), self.vectors[0])

    @cached_property
    def gamma(self) -> np.ndarray:
        return np.array([jet.value_of(self.omega12_jet(k)) for k in range(2)])

    @cached_property
    def bracket(self) -> np.ndarray:
        """``[b_z^1, b_z^2]`` in frame components."""
        vector = self.geometry.bracket(self.vectors[0], self.vectors[1])
        return np.array([jet.value_of(c) for c in self.components(vector)])

    @cached_property
    def gaussian_curvature(self) -> float:
        """Intrinsic ``Omega^z_12(b_z^1, b_z^2)``."""
        d_omega = jet.value_of(self.derivative(0, self.omega12_jet(1))) - jet.value_of(
            self.derivative(1, self.omega12_jet(0))
        )
        return float(d_omega - np.dot(self.bracket, self.gamma))


# operations


@dataclass
class SecondFundamentalForm:
    t: np.ndarray
    t_weingarten: np.ndarray
    route_deviation: float
    kappa: float
    H: float
    S_adj: np.ndarray
    P: np.ndarray
    orientation: int


@dataclass
class FrameScalars:
    alpha: np.ndarray
    gamma: np.ndarray
    X3: np.ndarray
    w: np.ndarray
    ell: np.ndarray
    K: np.ndarray = field(default_factory=lambda: K.copy())

    @property
    def gamma3(self) -> float:
        return float(self.gamma[2])


@dataclass
class FrameData:
    z: Tuple[float, ...]
    frame_name: str
    vectors: np.ndarray
    omega: np.ndarray
    second_fundamental: SecondFundamentalForm
    scalars: FrameScalars

    @property
    def orientation(self) -> int:
        return self.second_fundamental.orientation

    def as_dict(self) -> Dict[str, float]:
        sff = self.second_fundamental
        row = {
            "t11": sff.t[0, 0],
            "t12": sff.t[0, 1],
            "t22": sff.t[1, 1],
            "kappa": sff.kappa,
            "H": sff.H,
            "alpha1": self.scalars.alpha[0],
            "alpha2": self.scalars.alpha[1],
            "gamma1": self.scalars.gamma[0],
            "gamma2": self.scalars.gamma[1],
            "gamma3": self.scalars.gamma[2],
            "ell1": self.scalars.ell[0],
            "ell2": self.scalars.ell[1],
        }
        return {k: float(v) for k, v in row.items()}


def connection_forms_at(
    surface: Surface, spec: FrameSpec, y: Sequence[float], frame: Optional[PointFrame] = None
) -> np.ndarray:
    frame = frame or adapted_frame_at(surface, spec, y)
    return frame.omega


def second_fundamental_at(
    surface: Surface, spec: FrameSpec, z: Sequence[float], frame: Optional[PointFrame] = None
) -> SecondFundamentalForm:
    """Second fundamental form along both routes, with curvature and its derived tensors.

    Raises:
        ConsistencyError: If the Gauss-formula and Weingarten routes disagree by more than 1e-8.
    """
    frame = frame or frame_on_surface(surface, spec, z)
    omega = frame.omega
    gauss_route = np.array([[omega[2, j, i] for j in range(2)] for i in range(2)])
    weingarten_route = np.array([[-omega[i, 2, j] for j in range(2)] for i in range(2)])
    deviation = float(np.abs(gauss_route - weingarten_route).max())
    if deviation > ROUTE_TOLERANCE:
        raise ConsistencyError(f"z={tuple(z)}", f"second fundamental form routes disagree by {deviation:.3e}")
    t = 0.5 * (gauss_route + gauss_route.T)
    kappa = float(t[0, 0] * t[1, 1] - t[0, 1] ** 2)
    H = float(0.5 * (t[0, 0] + t[1, 1]))
    S_adj = np.array([[t[1, 1], -t[0, 1]], [-t[0, 1], t[0, 0]]])
    P = kappa * np.eye(2) - 2.0 * H * t
    return SecondFundamentalForm(gauss_route, weingarten_route, deviation, kappa, H, S_adj, P, frame.orientation)


def curvature_forms_at(
    surface: Surface, spec: FrameSpec, y: Sequence[float], frame: Optional[PointFrame] = None
) -> np.ndarray:
    """``Omega[i, j, a, b]`` is the curvature form ``Omega_ij`` on the pair ``(b^a, b^b)``."""
    frame = frame or adapted_frame_at(surface, spec, y)
    omega = frame.omega
    theta_brackets = np.array(
        [[[jet.value_of(c) for c in frame.components(frame.brackets[a][b])] for b in range(3)] for a in range(3)]
    )
    result = np.zeros((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            for a in range(3):
                for b in range(3):
                    if a == b:
                        continue
                    d_omega = (
                        jet.value_of(frame.derivative(a, frame.omega_jets[i][j][b]))
                        - jet.value_of(frame.derivative(b, frame.omega_jets[i][j][a]))
                        - float(np.dot(theta_brackets[a, b], omega[i, j, :]))
                    )
                    wedge = sum(omega[i, k, a] * omega[k, j, b] - omega[i, k, b] * omega[k, j, a] for k in range(3))
                    result[i, j, a, b] = d_omega + wedge
    return result


def frame_scalars_at(
    surface: Surface, spec: FrameSpec, y: Sequence[float], frame: Optional[PointFrame] = None
) -> FrameScalars:
    frame = frame or adapted_frame_at(surface, spec, y)
    omega = frame.omega
    alpha = np.array([omega[0, 2, 2], omega[1, 2, 2]])
    gamma = np.array([omega[0, 1, k] for k in range(3)])
    ell = np.array([jet.value_of(frame.derivative(2, frame.gamma_jet(j))) for j in range(2)])
    return FrameScalars(alpha=alpha, gamma=gamma, X3=alpha.copy(), w=gamma[:2].copy(), ell=ell)


def frame_data_at(surface: Surface, spec: FrameSpec, z: Sequence[float]) -> FrameData:
    frame = frame_on_surface(surface, spec, z)
    sff = second_fundamental_at(surface, spec, z, frame)
    scalars = frame_scalars_at(surface, spec, frame.y, frame)
    return FrameData(tuple(float(c) for c in z), spec.name, frame.values, frame.omega, sff, scalars)


# identity residuals


def embedding_second_fundamental(frame: PointFrame, surface_frame: SurfaceFrame) -> np.ndarray:
    """``S(b^a, b^b)`` from the Hessian of the embedding, independent of the frame derivatives."""
    f = frame.surface.embedding_jets(surface_frame.z, jet.MAX_ORDER)
    first = np.array([c.gradient() for c in f])
    second = np.array([c.hessian() for c in f])
    gamma = np.array([[[jet.value_of(x) for x in row] for row in plane] for plane in frame.geometry.christoffel])
    normal = frame.values[2]
    metric = np.array([[jet.value_of(x) for x in row] for row in frame.geometry.metric])
    acceleration = second + np.einsum("kab,ai,bj->kij", gamma, first, first)
    h = np.einsum("kij,kl,l->ij", acceleration, metric, normal)
    c = np.array([[jet.value_of(x) for x in v] for v in surface_frame.vectors])
    return c @ h @ c.T


def structure_residual(frame: PointFrame) -> float:
    """Torsion-free structure equations ``d theta^i + omega_ik ^ theta^k = 0`` on all frame pairs."""
    worst = 0.0
    for a in range(3):
        for b in range(a + 1, 3):
            theta = [jet.value_of(c) for c in frame.components(frame.brackets[a][b])]
            for i in range(3):
                worst = max(worst, abs(-theta[i] + frame.omega[i, b, a] - frame.omega[i, a, b]))
    return worst


def codazzi_residuals(frame: PointFrame, curvature: np.ndarray) -> Tuple[float, float]:
    t11, t12, t22 = frame.t_jet(0, 0), frame.t_jet(0, 1), frame.t_jet(1, 1)
    v11, v12, v22 = (jet.value_of(x) for x in (t11, t12, t22))
    g1, g2 = frame.omega[0, 1, 0], frame.omega[0, 1, 1]
    d = lambda k, h: jet.value_of(frame.derivative(k, h))  # noqa: E731
    first = d(0, t12) - d(1, t11) + curvature[0, 2, 0, 1] - (v11 - v22) * g1 - 2.0 * v12 * g2
    second = d(1, t12) - d(0, t22) - curvature[1, 2, 0, 1] + 2.0 * v12 * g1 - (v11 - v22) * g2
    return abs(first), abs(second)


def structure_residuals(surface: Surface, spec: FrameSpec, z: Sequence[float]) -> Dict[str, float]:
    """Residuals of the frame identities at the surface point ``z``."""
    frame = frame_on_surface(surface, spec, z)
    surface_frame = SurfaceFrame(frame, z)
    sff = second_fundamental_at(surface, spec, z, frame)
    curvature = curvature_forms_at(surface, spec, frame.y, frame)
    embedded = embedding_second_fundamental(frame, surface_frame)
    omega = frame.omega

    weingarten = max(abs(omega[i, 2, a] + embedded[a, i]) for a in range(2) for i in range(2))
    weingarten = max(weingarten, max(abs(omega[2, 2, a]) for a in range(2)))
    gauss_split = max(abs(omega[0, 1, a] - surface_frame.gamma[a]) for a in range(2))
    gauss_split = max(gauss_split, max(abs(omega[2, c, a] - embedded[a, c]) for a in range(2) for c in range(2)))
    codazzi_1, codazzi_2 = codazzi_residuals(frame, curvature)
    antisymmetry = float(np.abs(omega + omega.transpose(1, 0, 2)).max())
    return {
        "orthonormality": float(np.abs(frame.geometry.gram(frame.vectors) - np.eye(3)).max()),
        "structure": structure_residual(frame),
        "antisymmetry": antisymmetry,
        "t12_symmetry": abs(omega[0, 2, 1] - omega[1, 2, 0]),
        "second_fundamental_routes": sff.route_deviation,
        "weingarten": weingarten,
        "gauss_split": gauss_split,
        "codazzi_1": codazzi_1,
        "codazzi_2": codazzi_2,
        "gauss_equation": abs(surface_frame.gaussian_curvature - sff.kappa - curvature[0, 1, 0, 1]),
        "w_bracket": float(np.abs(surface_frame.bracket - surface_frame.gamma).max()),
    }
