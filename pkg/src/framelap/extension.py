"""Extensions of surface fields into a tube around the surface.

The tube is parametrised by the flow ``Phi(z, s)`` of ``b^3`` started on the surface. Along every
characteristic the unknown frame components satisfy first-order equations in ``s``; the state carries
jets in the surface coordinates so tangential derivatives are transported with it. Jets in the normal
direction come from Picard iteration of the same equations in jet arithmetic.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from . import jet
from .ambient import GeometryError, local_geometry
from .exprlang import EvaluationError, SmoothMap
from .geometry import FrameKind, FrameSpec, PointFrame, Surface, adapted_frame_at, frame_vectors
from .jet import Jet3, JetDomainError, JetLike, basis_size
from .operators import AmbientField, AmbientFieldJets, RestrictedField, SurfaceField

logger = logging.getLogger(__name__)

TOLERANCE = 1e-11
VOLUME_RATIO_FLOOR = 0.05
FOLD_SAMPLES = 41
MAX_FIELD_ORDER = 2


class ExtensionError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{message} at {where}")
        self.where = where


class FoldOverError(ExtensionError):
    def __init__(self, z: Sequence[float], s: float, message: str):
        super().__init__(f"z=({z[0]:.6g}, {z[1]:.6g}), s={s:.6g}", f"tube folds over: {message}")
        self.z = tuple(float(c) for c in z)
        self.s = float(s)


class ExtensionKind(str, Enum):
    COMPATIBLE = "compatible"
    DIVFREE = "divergence-free"
    CURL_NORMAL = "curl-normal"
    CLOSED_FORM = "closed-form"


class TangentialRule(str, Enum):
    CONSTANT = "constant"
    CLOSED_FORM = "closed-form"
    CURL_NORMAL = "curl-normal"


class NormalRule(str, Enum):
    COMPATIBLE = "compatible"
    DIVFREE = "divergence-free"


@dataclass
class TransportState:
    """Jets of ``Phi`` and of the transported components along one characteristic."""

    phi: List[JetLike]
    tangential: Optional[List[JetLike]] = None
    normal: Optional[JetLike] = None


def _pull(h: JetLike, phi: Sequence[JetLike]) -> JetLike:
    return h.compose(phi) if isinstance(h, Jet3) else h


def _flatten(values: Sequence[JetLike], order: int, nvars: int = 2) -> np.ndarray:
    size = basis_size(nvars, order)
    out = []
    for c in values:
        if isinstance(c, Jet3):
            out.append(c.truncate(order).coeffs)
        else:
            block = np.zeros(size)
            block[0] = float(c)
            out.append(block)
    return np.concatenate(out)


def _add(a: JetLike, b: JetLike) -> JetLike:
    if not isinstance(b, Jet3) and b == 0.0:
        return a
    return a + b


def _integral(h: JetLike, var: int) -> JetLike:
    return h.integrate(var) if isinstance(h, Jet3) else 0.0


def _d(h: JetLike, var: int) -> JetLike:
    return h.deriv(var) if isinstance(h, Jet3) else 0.0


class _Layout:
    """Slot orders of a flattened two-variable transport state."""

    def __init__(self, phi: int, tangential: Optional[int], normal: Optional[int]):
        self.phi = phi
        self.tangential = tangential
        self.normal = normal

    def pack(self, state: TransportState) -> np.ndarray:
        parts = [_flatten(state.phi, self.phi)]
        if self.tangential is not None:
            parts.append(_flatten(state.tangential, self.tangential))
        if self.normal is not None:
            parts.append(_flatten([state.normal], self.normal))
        return np.concatenate(parts)

    def unpack(self, x: np.ndarray) -> TransportState:
        offset = 0

        def take(count: int, order: int) -> List[Jet3]:
            nonlocal offset
            size = basis_size(2, order)
            out = [Jet3(x[offset + i * size : offset + (i + 1) * size], 2, order) for i in range(count)]
            offset += count * size
            return out

        phi = take(3, self.phi)
        tangential = take(2, self.tangential) if self.tangential is not None else None
        normal = take(1, self.normal)[0] if self.normal is not None else None
        return TransportState(phi, tangential, normal)


class _Characteristic:
    """Dense solution of a transport system along the characteristic started at ``z``."""

    def __init__(
        self, z: Tuple[float, float], layout: _Layout, initial: TransportState, forward, backward, s_max: float
    ):
        self.z = z
        self.layout = layout
        self.initial = initial
        self.forward = forward
        self.backward = backward
        self.s_max = s_max

    def state(self, s: float) -> TransportState:
        if abs(s) > self.s_max * (1.0 + 1e-12):
            raise ExtensionError(f"z={self.z}, s={s:.6g}", f"query outside the tube |s| <= {self.s_max:g}")
        if s == 0.0:
            return self.layout.unpack(self.layout.pack(self.initial))
        solution = self.forward if s > 0.0 else self.backward
        return self.layout.unpack(solution.sol(s))


def _integrate(
    z: Tuple[float, float],
    layout: _Layout,
    initial: TransportState,
    rates,
    s_max: float,
    tolerance: float,
) -> _Characteristic:
    def fun(s: float, x: np.ndarray) -> np.ndarray:
        try:
            return layout.pack(rates(layout.unpack(x)))
        except (GeometryError, EvaluationError, JetDomainError) as exc:
            raise FoldOverError(z, s, str(exc)) from exc

    x0 = layout.pack(initial)
    solutions = []
    for end in (s_max, -s_max):
        solution = solve_ivp(fun, (0.0, end), x0, method="DOP853", rtol=tolerance, atol=tolerance, dense_output=True)
        if solution.status != 0:
            raise ExtensionError(f"z={z}", f"characteristic integration failed ({solution.message})")
        logger.debug("characteristic z=%s to s=%g: %d steps, %d evaluations", z, end, len(solution.t), solution.nfev)
        solutions.append(solution)
    return _Characteristic(z, layout, initial, solutions[0], solutions[1], s_max)


def _embed(h: JetLike) -> JetLike:
    return h.embed(3, (0, 1)) if isinstance(h, Jet3) else h


def _normal_direction(surface: Surface, spec: FrameSpec, y: Sequence[float], z_hint, order: int) -> List[JetLike]:
    return frame_vectors(surface, spec, y, order, z_hint)[2]


class NormalChart:
    """Tube coordinates ``(z, s) -> Phi(z, s)``, the flow of ``b^3`` from the surface.

    ``frame_order`` is the order of the frame jets along the characteristics; the z-jets of ``Phi`` are
    carried to the same order and the connection forms to one less.
    """

    def __init__(self, surface: Surface, spec: FrameSpec, s_max: float, tolerance: float = TOLERANCE):
        if s_max <= 0.0:
            raise ValueError(f"s_max must be positive, got {s_max}")
        self.surface = surface
        self.spec = spec
        self.s_max = float(s_max)
        self.tolerance = tolerance
        # normal-tube frame jets lose one order through the foot-point inversion
        self.frame_order = jet.MAX_ORDER - 1 if spec.kind is FrameKind.NORMAL_TUBE else jet.MAX_ORDER
        self._curves: Dict[Tuple[float, float], _Characteristic] = {}
        self.nodes: List[Tuple[float, float]] = []

    def _rates(self, z: Tuple[float, float]):
        def rates(state: TransportState) -> TransportState:
            b3 = _normal_direction(self.surface, self.spec, [c.value for c in state.phi], z, self.frame_order)
            return TransportState([_pull(c, state.phi) for c in b3])

        return rates

    def curve(self, z: Sequence[float]) -> _Characteristic:
        key = (float(z[0]), float(z[1]))
        if key not in self._curves:
            initial = TransportState([c.truncate(self.frame_order) for c in self.surface.embedding_jets(key)])
            layout = _Layout(self.frame_order, None, None)
            self._curves[key] = _integrate(key, layout, initial, self._rates(key), self.s_max, self.tolerance)
        return self._curves[key]

    def point(self, z: Sequence[float], s: float) -> np.ndarray:
        if s == 0.0:
            return self.surface.point(z)
        return np.array([c.value for c in self.curve(z).state(s).phi])

    def jets(self, z: Sequence[float], s: float, order: int) -> List[Jet3]:
        """Jets of ``Phi`` in ``(z1, z2, s)`` at ``(z, s)``."""
        key = (float(z[0]), float(z[1]))
        start = self.surface.embedding_jets(key) if s == 0.0 else self.curve(key).state(s).phi
        start = [_embed(c) for c in start]
        phi = list(start)
        for _ in range(jet.MAX_ORDER + 1):
            b3 = _normal_direction(self.surface, self.spec, [c.value for c in start], key, self.frame_order)
            phi = [a + _integral(_pull(c, phi), 2) for a, c in zip(start, b3)]
        if min(c.order for c in phi) < order:
            carried = min(c.order for c in phi)
            raise ExtensionError(f"z={key}, s={s:g}", f"chart jets carry order {carried}, {order} requested")
        return [c.truncate(order) for c in phi]

    def volume(self, phi: Sequence[Jet3], z: Tuple[float, float]) -> float:
        y = [c.value for c in phi]
        metric = np.array([[jet.value_of(x) for x in row] for row in local_geometry(self.surface.ambient, y).metric])
        b3 = [jet.value_of(c) for c in _normal_direction(self.surface, self.spec, y, z, 1)]
        columns = np.array([[c.gradient()[0] for c in phi], [c.gradient()[1] for c in phi], b3]).T
        return float(np.sqrt(np.linalg.det(metric)) * np.linalg.det(columns))

    def check_fold_over(self, z: Sequence[float]) -> float:
        """Smallest tube volume ratio along the characteristic through ``z``.

        Raises:
            FoldOverError: If the ratio changes sign, drops below the floor, or the metric degenerates.
        """
        key = (float(z[0]), float(z[1]))
        curve = self.curve(key)
        reference = self.volume(curve.initial.phi, key)
        worst = 1.0
        for s in np.linspace(-self.s_max, self.s_max, FOLD_SAMPLES):
            try:
                ratio = self.volume(curve.state(float(s)).phi, key) / reference
            except (GeometryError, EvaluationError, JetDomainError) as exc:
                raise FoldOverError(key, float(s), str(exc)) from exc
            if ratio < VOLUME_RATIO_FLOOR:
                raise FoldOverError(key, float(s), f"volume ratio {ratio:.3e}")
            worst = min(worst, ratio)
        return worst

    def _flow_point(self, z: Sequence[float], s: float) -> np.ndarray:
        if s == 0.0:
            return self.surface.point(z)
        start = self.surface.point(z)

        def fun(_, y):
            return np.array([jet.value_of(c) for c in _normal_direction(self.surface, self.spec, y, z, 1)])

        solution = solve_ivp(fun, (0.0, s), start, method="DOP853", rtol=self.tolerance, atol=self.tolerance)
        if solution.status != 0:
            where = f"z=({z[0]:.6g}, {z[1]:.6g}), s={s:.6g}"
            raise ExtensionError(where, f"flow integration failed ({solution.message})")
        return solution.y[:, -1]

    def locate(self, y: Sequence[float], z_hint: Optional[Sequence[float]] = None) -> Tuple[Tuple[float, float], float]:
        """Tube coordinates of the ambient point ``y``."""
        start = np.array(list(z_hint if z_hint is not None else self.surface.domain.center) + [0.0])
        target = np.asarray(y, dtype=float)
        solution = least_squares(
            lambda u: self._flow_point(u[:2], float(u[2])) - target, start, xtol=1e-14, ftol=1e-14, gtol=1e-14
        )
        if np.linalg.norm(solution.fun) > 1e-9 or abs(solution.x[2]) > self.s_max * (1.0 + 1e-9):
            raise ExtensionError(f"y={tuple(target)}", "point is outside the tube")
        s = float(solution.x[2])
        if abs(s) < 1e-13:
            s = 0.0
        return (float(solution.x[0]), float(solution.x[1])), s


def build_normal_chart(
    surface: Surface,
    spec: FrameSpec,
    z_grid: Sequence[Sequence[float]],
    s_max: float,
    tolerance: float = TOLERANCE,
    workers: int = 1,
) -> NormalChart:
    """Integrate the characteristics through the grid nodes and check the tube does not fold over.

    Args:
        workers: Number of threads the nodes are mapped over; each characteristic is independent.

    Raises:
        FoldOverError: At the first node, in grid order, whose characteristic folds over.
    """
    chart = NormalChart(surface, spec, s_max, tolerance)
    nodes = [(float(z[0]), float(z[1])) for z in z_grid]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(chart.check_fold_over, nodes))
    else:
        for z in nodes:
            chart.check_fold_over(z)
    chart.nodes.extend(nodes)
    logger.info("normal chart for frame '%s': %d nodes, s_max=%g", spec.name, len(chart.nodes), s_max)
    return chart


def tangential_system(frame: PointFrame) -> np.ndarray:
    """Coefficients of ``b^3(u^1), b^3(u^2)`` in the curl-normal extension equations."""
    omega = frame.omega
    t11, t12, t22 = -omega[0, 2, 0], -omega[0, 2, 1], -omega[1, 2, 1]
    gamma3 = omega[0, 1, 2]
    return np.array([[t11, t12 - gamma3], [t12 + gamma3, t22]])


def divfree_source(frame: PointFrame, tangential: Sequence[JetLike]) -> Tuple[float, float]:
    """``(t11 + t22, F)`` of the solenoidal equation ``b^3(u^3) - (t11 + t22) u^3 = F`` for y-jets of ``u^1, u^2``."""
    omega = frame.omega
    u = [jet.value_of(c) for c in tangential]
    coefficient = -omega[0, 2, 0] - omega[1, 2, 1]
    gamma1, gamma2 = omega[0, 1, 0], omega[0, 1, 1]
    alpha1, alpha2 = omega[0, 2, 2], omega[1, 2, 2]
    derivatives = sum(jet.value_of(frame.derivative(k, tangential[k])) for k in range(2))
    source = (gamma2 + alpha1) * u[0] - (gamma1 - alpha2) * u[1] - derivatives
    return float(coefficient), float(source)


class ExtendedField(AmbientField):
    """A surface field extended into the tube."""

    def __init__(
        self,
        chart: NormalChart,
        v: SurfaceField,
        kind: ExtensionKind,
        tangential: TangentialRule = TangentialRule.CONSTANT,
        normal: Optional[NormalRule] = None,
        closed_form: Optional[SmoothMap] = None,
    ):
        self.chart = chart
        self.surface = chart.surface
        self.spec = chart.spec
        self.v = v
        self.kind = kind
        self.tangential = tangential
        self.normal = normal
        self.closed_form = closed_form
        if kind is ExtensionKind.CLOSED_FORM:
            if closed_form is None or closed_form.codomain_dim != 3:
                raise ValueError("a closed-form extension needs three component expressions")
        elif normal is None:
            raise ValueError(f"extension kind '{kind.value}' needs a rule for u3")
        if tangential is TangentialRule.CLOSED_FORM and kind is not ExtensionKind.CLOSED_FORM:
            if closed_form is None or closed_form.codomain_dim != 2:
                raise ValueError("the closed-form tangential rule needs two component expressions")
        self._curves: Dict[Tuple[float, float], _Characteristic] = {}

    @property
    def name(self) -> str:
        if self.kind is ExtensionKind.CLOSED_FORM:
            return self.kind.value
        return f"{self.kind.value}/{self.tangential.value}"

    # transport equations

    @property
    def _state_tangential(self) -> bool:
        return self.tangential is not TangentialRule.CLOSED_FORM

    def _layout(self) -> _Layout:
        """Slot orders: the rates of ``u^3`` and of curl-normal ``u^1, u^2`` go through the connection forms."""
        frame_order = self.chart.frame_order
        connection = frame_order - 1
        tangential = {TangentialRule.CONSTANT: frame_order, TangentialRule.CURL_NORMAL: connection}.get(self.tangential)
        normal = connection
        if self.tangential is TangentialRule.CURL_NORMAL and self.normal is NormalRule.DIVFREE:
            normal = connection - 1
        return _Layout(frame_order, tangential, normal)

    @property
    def tube_order(self) -> int:
        """Highest order of the field jets available off the surface."""
        if self.kind is ExtensionKind.CLOSED_FORM:
            return MAX_FIELD_ORDER
        layout = self._layout()
        return min([MAX_FIELD_ORDER] + [o for o in (layout.tangential, layout.normal) if o is not None])

    def rates(self, frame: PointFrame, state: TransportState) -> TransportState:
        """Right-hand sides ``d/ds`` of the transported jets; works over two or three chart variables."""
        phi = state.phi
        pull = lambda h: _pull(h, phi)  # noqa: E731
        dphi = [pull(c) for c in frame.vectors[2]]

        if self._state_tangential:
            u = state.tangential
            if self.tangential is TangentialRule.CONSTANT:
                du: List[JetLike] = [0.0, 0.0]
            else:
                t11, t12, t22 = (pull(frame.t_jet(i, j)) for i, j in ((0, 0), (0, 1), (1, 1)))
                gamma3 = pull(frame.gamma_jet(2))
                du = [t11 * u[0] + (t12 - gamma3) * u[1], (t12 + gamma3) * u[0] + t22 * u[1]]
        else:
            closed = self.closed_form.jets(frame.y, jet.MAX_ORDER)
            u = [pull(c) for c in closed]
            du = None

        alpha = [pull(frame.alpha_jet(j)) for j in range(2)]
        if self.normal is NormalRule.COMPATIBLE:
            dn = alpha[0] * u[0] + alpha[1] * u[1]
        else:
            gamma = [pull(frame.gamma_jet(j)) for j in range(2)]
            trace = pull(frame.t_jet(0, 0)) + pull(frame.t_jet(1, 1))
            derivatives = self._tangential_derivatives(frame, phi, dphi, u, du)
            dn = (
                trace * state.normal
                + (gamma[1] + alpha[0]) * u[0]
                - (gamma[0] - alpha[1]) * u[1]
                - derivatives[0]
                - derivatives[1]
            )
        return TransportState(dphi, du if self._state_tangential else None, dn)

    def _tangential_derivatives(self, frame, phi, dphi, u, du) -> List[JetLike]:
        """``b^k(u^k)`` for ``k = 1, 2`` expressed through the chart variables."""
        if not self._state_tangential:
            closed = self.closed_form.jets(frame.y, jet.MAX_ORDER)
            return [_pull(frame.derivative(k, closed[k]), phi) for k in range(2)]
        chart_matrix = [[phi[m].deriv(0), phi[m].deriv(1), dphi[m]] for m in range(3)]
        out = []
        for k in range(2):
            direction = [_pull(c, phi) for c in frame.vectors[k]]
            a = jet.solve(chart_matrix, direction)
            value = a[0] * _d(u[k], 0) + a[1] * _d(u[k], 1)
            out.append(_add(value, a[2] * du[k]))
        return out

    def initial_state(self, z: Sequence[float], order: int) -> TransportState:
        phi = [c.truncate(order) for c in self.surface.embedding_jets(z, jet.MAX_ORDER)]
        tangential = [c.truncate(order) if isinstance(c, Jet3) else c for c in self.v.jets(z, jet.MAX_ORDER)]
        zero = Jet3.constant(0.0, 2, order)
        return TransportState(phi, tangential if self._state_tangential else None, zero)

    def curve(self, z: Sequence[float]) -> _Characteristic:
        key = (float(z[0]), float(z[1]))
        if key not in self._curves:
            layout = self._layout()
            initial = self.initial_state(key, jet.MAX_ORDER)

            def rates(state: TransportState) -> TransportState:
                y = [c.value for c in state.phi]
                frame = adapted_frame_at(self.surface, self.spec, y, self.chart.frame_order, z_hint=key)
                return self.rates(frame, state)

            self._curves[key] = _integrate(key, layout, initial, rates, self.chart.s_max, self.chart.tolerance)
        return self._curves[key]

    # jets

    def field_jets(self, z: Sequence[float], s: float, order: int = MAX_FIELD_ORDER) -> List[JetLike]:
        """y-jets of ``u^1, u^2, u^3`` at ``Phi(z, s)``.

        Raises:
            ExtensionError: If the point is outside the tube or the transported data carry too few orders.
        """
        if order > MAX_FIELD_ORDER:
            raise ExtensionError(f"z={tuple(z)}", f"field jets stop at order {MAX_FIELD_ORDER}")
        key = (float(z[0]), float(z[1]))
        if self.kind is ExtensionKind.CLOSED_FORM:
            return list(self.closed_form.jets(self.chart.point(key, s), order))
        start = self.initial_state(key, jet.MAX_ORDER) if s == 0.0 else self.curve(key).state(s)
        y = [c.value for c in start.phi]
        frame = adapted_frame_at(self.surface, self.spec, y, z_hint=key)

        base = TransportState(
            [_embed(c) for c in start.phi],
            [_embed(c) for c in start.tangential] if start.tangential is not None else None,
            _embed(start.normal),
        )
        current = base
        for _ in range(jet.MAX_ORDER + 1):
            rate = self.rates(frame, current)
            current = TransportState(
                [a + _integral(b, 2) for a, b in zip(base.phi, rate.phi)],
                [_add(a, _integral(b, 2)) for a, b in zip(base.tangential, rate.tangential)]
                if base.tangential is not None
                else None,
                _add(base.normal, _integral(rate.normal, 2)),
            )
        inverse = jet.invert_map(current.phi, (key[0], key[1], 0.0))
        if current.tangential is not None:
            tangential = [_pull(c, inverse) for c in current.tangential]
        else:
            tangential = list(self.closed_form.jets(y, jet.MAX_ORDER))
        components = tangential + [_pull(current.normal, inverse)]
        available = min(c.order if isinstance(c, Jet3) else jet.MAX_ORDER for c in components)
        if available < order:
            raise ExtensionError(f"z={key}, s={s:g}", f"transported jets carry order {available}, {order} requested")
        return [c.truncate(order) if isinstance(c, Jet3) else c for c in components]

    def component_jets(self, frame: PointFrame, order: int) -> List[JetLike]:
        z, s = self.chart.locate(frame.y, z_hint=None if not self.chart.nodes else self._nearest_node(frame.y))
        return self.field_jets(z, s, order)

    def _nearest_node(self, y: Sequence[float]) -> Tuple[float, float]:
        target = np.asarray(y, dtype=float)
        return min(self.chart.nodes, key=lambda z: float(np.linalg.norm(self.surface.point(z) - target)))

    def at(self, z: Sequence[float], s: float = 0.0, order: int = MAX_FIELD_ORDER) -> AmbientFieldJets:
        """Field jets together with the frame at ``Phi(z, s)``."""
        jets = self.field_jets(z, s, order)
        y = self.chart.point(z, s)
        frame = adapted_frame_at(self.surface, self.spec, y, z_hint=z)
        return AmbientFieldJets(frame, jets)

    # checks

    def restriction_residual(self, z: Sequence[float]) -> float:
        u = [jet.value_of(c) for c in self.field_jets(z, 0.0, 0)]
        v = [jet.value_of(c) for c in self.v.jets(z, 0)]
        return max(abs(u[0] - v[0]), abs(u[1] - v[1]), abs(u[2]))

    def pde_residual(self, z: Sequence[float], s: float = 0.0) -> float:
        """Residual of the equation that defines ``u^3`` (or the curl conditions) at ``Phi(z, s)``."""
        field = self.at(z, s, order=1)
        frame = field.frame
        if self.kind is ExtensionKind.CLOSED_FORM:
            return 0.0
        residuals = []
        if self.normal is NormalRule.COMPATIBLE:
            rho = jet.value_of(frame.derivative(2, field.u[2])) - float(
                np.dot(frame.omega[:2, 2, 2], [jet.value_of(c) for c in field.u[:2]])
            )
            residuals.append(abs(rho))
        else:
            residuals.append(abs(field.divergence))
        if self.tangential is TangentialRule.CURL_NORMAL:
            normal_derivatives = np.array([jet.value_of(frame.derivative(2, field.u[k])) for k in range(2)])
            expected = tangential_system(frame) @ np.array([jet.value_of(c) for c in field.u[:2]])
            residuals.append(float(np.abs(normal_derivatives - expected).max()))
        return max(residuals)


def _extension(chart, v, kind, tangential, normal, closed_form) -> ExtendedField:
    field = ExtendedField(chart, v, kind, tangential, normal, closed_form)
    logger.debug("extension %s on frame '%s'", field.name, chart.spec.name)
    return field


def extend_compatible(
    chart: NormalChart,
    v: SurfaceField,
    tangential: TangentialRule = TangentialRule.CONSTANT,
    closed_form: Optional[SmoothMap] = None,
) -> ExtendedField:
    """``u^3`` solves ``b^3(u^3) = alpha1 u^1 + alpha2 u^2`` with ``u^3 = 0`` on the surface."""
    return _extension(chart, v, ExtensionKind.COMPATIBLE, tangential, NormalRule.COMPATIBLE, closed_form)


def extend_divfree(
    chart: NormalChart,
    v: SurfaceField,
    tangential: TangentialRule = TangentialRule.CONSTANT,
    closed_form: Optional[SmoothMap] = None,
) -> ExtendedField:
    """``u^3`` solves the divergence-free equation with ``u^3 = 0`` on the surface."""
    return _extension(chart, v, ExtensionKind.DIVFREE, tangential, NormalRule.DIVFREE, closed_form)


def extend_curl_normal(chart: NormalChart, v: SurfaceField, divfree: bool = False) -> ExtendedField:
    """``u^1, u^2`` solve the curl-normal system; ``u^3`` is compatible or divergence-free."""
    normal = NormalRule.DIVFREE if divfree else NormalRule.COMPATIBLE
    return _extension(chart, v, ExtensionKind.CURL_NORMAL, TangentialRule.CURL_NORMAL, normal, None)


def extend_closed_form(chart: NormalChart, u: SmoothMap, v: Optional[SurfaceField] = None) -> ExtendedField:
    """Extension given by closed-form frame components; ``v`` defaults to the restriction of ``u``."""
    v = v or RestrictedField(u, chart.surface)
    return _extension(chart, v, ExtensionKind.CLOSED_FORM, TangentialRule.CLOSED_FORM, None, u)
