"""Ambient three-dimensional Riemannian space in y-coordinates.

Two modes are supported: the pullback of the flat metric through a diffeomorphism ``psi``
onto a domain of Euclidean space, and an explicitly given metric ``g0(y)``.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import jet
from .exprlang import SmoothMap
from .jet import Jet3, JetDomainError, JetLike, JetOrderError

logger = logging.getLogger(__name__)

Vector = List[JetLike]
MetricJets = List[List[JetLike]]

AMBIENT_COORDINATES = ("y1", "y2", "y3")
SINGULAR_TOLERANCE = 1e-12


class GeometryError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{message} at {where}")
        self.where = where


class ConsistencyError(GeometryError):
    """Two independent routes to the same quantity disagree."""


class AmbientMode(str, Enum):
    FLAT_PULLBACK = "flat-pullback"
    EXPLICIT_METRIC = "explicit-metric"


def _where(y: Sequence[float]) -> str:
    return "y=(" + ", ".join(f"{float(c):.6g}" for c in y) + ")"


@dataclass(frozen=True)
class AmbientSpace:
    mode: AmbientMode
    psi: Optional[SmoothMap] = None
    metric: Optional[SmoothMap] = None
    coordinates: Tuple[str, ...] = AMBIENT_COORDINATES

    def __post_init__(self):
        if self.mode is AmbientMode.FLAT_PULLBACK:
            if self.psi is None or self.psi.codomain_dim != 3 or self.psi.domain_dim != 3:
                raise ValueError("flat-pullback mode needs psi with three components in three variables")
        else:
            if self.metric is None or self.metric.codomain_dim not in (6, 9):
                raise ValueError("explicit-metric mode needs 6 (upper triangle) or 9 (row-major) metric components")

    @classmethod
    def flat(cls, psi: SmoothMap) -> "AmbientSpace":
        return cls(AmbientMode.FLAT_PULLBACK, psi=psi, coordinates=psi.variables)

    @classmethod
    def explicit(cls, metric: SmoothMap) -> "AmbientSpace":
        return cls(AmbientMode.EXPLICIT_METRIC, metric=metric, coordinates=metric.variables)

    @property
    def is_flat(self) -> bool:
        return self.mode is AmbientMode.FLAT_PULLBACK

    @cached_property
    def psi_jacobian(self) -> SmoothMap:
        """Symbolic ``d psi^a / d y^i``, so metric jets keep every order the jets carry."""
        return self.psi.jacobian()

    def to_flat(self, y: Sequence[float]) -> np.ndarray:
        if not self.is_flat:
            raise GeometryError(_where(y), "no flat chart in explicit-metric mode")
        return self.psi(y)


def _psi_jacobian(ambient: AmbientSpace, y: Sequence[float], order: int) -> MetricJets:
    flat = ambient.psi_jacobian.jets(y, order)
    return [flat[3 * a : 3 * a + 3] for a in range(3)]


def _check_jacobian(jacobian: MetricJets, y: Sequence[float]) -> None:
    values = np.array([[jet.value_of(x) for x in row] for row in jacobian])
    det = float(np.linalg.det(values))
    if abs(det) < SINGULAR_TOLERANCE * max(1.0, np.abs(values).max() ** 3):
        raise GeometryError(_where(y), f"singular Jacobian of psi (det={det:.3e})")


def _explicit_components(ambient: AmbientSpace, y: Sequence[float], order: int) -> MetricJets:
    flat = ambient.metric.jets(y, order)
    if len(flat) == 9:
        g = [flat[3 * i : 3 * i + 3] for i in range(3)]
        asym = max(abs(g[i][j].value - g[j][i].value) for i in range(3) for j in range(3))
        if asym > 1e-12:
            raise GeometryError(_where(y), f"metric is not symmetric (deviation {asym:.3e})")
        return g
    upper = {(0, 0): 0, (0, 1): 1, (0, 2): 2, (1, 1): 3, (1, 2): 4, (2, 2): 5}
    return [[flat[upper[(min(i, j), max(i, j))]] for j in range(3)] for i in range(3)]


def metric_at(ambient: AmbientSpace, y: Sequence[float], order: int) -> MetricJets:
    """Jets of the ambient metric components ``g0_ij`` at ``y``.

    Raises:
        GeometryError: If psi has a singular Jacobian or the explicit metric is not positive definite.
        JetOrderError: If more than three orders are requested.
    """
    if order > jet.MAX_ORDER:
        raise JetOrderError("metric_at", f"metric jets stop at order {jet.MAX_ORDER}")
    if ambient.is_flat:
        jacobian = _psi_jacobian(ambient, y, order)
        _check_jacobian(jacobian, y)
        columns = [[row[i] for row in jacobian] for i in range(3)]
        return [[jet.dot(columns[i], columns[j]) for j in range(3)] for i in range(3)]
    g = _explicit_components(ambient, y, order)
    values = np.array([[jet.value_of(x) for x in row] for row in g])
    eigenvalues = np.linalg.eigvalsh(values)
    if eigenvalues.min() <= 0.0:
        raise GeometryError(_where(y), f"metric is not positive definite (eigenvalues {eigenvalues})")
    return g


def _d(h: JetLike, var: int) -> JetLike:
    return h.deriv(var) if isinstance(h, Jet3) else 0.0


class LocalGeometry:
    """Metric and Christoffel jets of a chart, expanded at one point.

    Vectors are lists of coordinate components (floats or jets over the chart variables).
    """

    def __init__(self, point: Sequence[float], metric: MetricJets, christoffel: List[List[List[JetLike]]]):
        self.point = tuple(float(c) for c in point)
        self.metric = metric
        self.christoffel = christoffel
        self.dim = len(metric)

    @classmethod
    def from_metric(cls, point: Sequence[float], metric: MetricJets) -> "LocalGeometry":
        n = len(metric)
        inverse = jet.inverse(metric)
        dg = [[[_d(metric[i][j], l) for j in range(n)] for i in range(n)] for l in range(n)]
        christoffel = []
        for k in range(n):
            rows = []
            for i in range(n):
                row = []
                for j in range(n):
                    total: JetLike = 0.0
                    for l in range(n):
                        total = total + inverse[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])
                    row.append(0.5 * total)
                rows.append(row)
            christoffel.append(rows)
        return cls(point, metric, christoffel)

    def inner(self, x: Sequence[JetLike], y: Sequence[JetLike]) -> JetLike:
        total: JetLike = 0.0
        for i in range(self.dim):
            for j in range(self.dim):
                total = total + self.metric[i][j] * x[i] * y[j]
        return total

    def directional(self, x: Sequence[JetLike], h: JetLike) -> JetLike:
        """Derivative of the scalar jet ``h`` along ``x``."""
        if not isinstance(h, Jet3):
            return 0.0
        return jet.dot(x, [h.deriv(i) for i in range(self.dim)])

    def covariant(self, x: Sequence[JetLike], y: Sequence[JetLike]) -> Vector:
        result = []
        for k in range(self.dim):
            total = self.directional(x, y[k])
            for i in range(self.dim):
                for j in range(self.dim):
                    total = total + self.christoffel[k][i][j] * x[i] * y[j]
            result.append(total)
        return result

    def bracket(self, x: Sequence[JetLike], y: Sequence[JetLike]) -> Vector:
        """Coordinate Lie bracket ``[x, y]``, independent of the Christoffel symbols."""
        return [self.directional(x, y[k]) - self.directional(y, x[k]) for k in range(self.dim)]

    def gram(self, vectors: Sequence[Sequence[JetLike]]) -> np.ndarray:
        return np.array([[jet.value_of(self.inner(a, b)) for b in vectors] for a in vectors])

    def half_log_volume(self) -> Jet3:
        """``log sqrt(det g)`` as a jet."""
        det = jet.determinant(self.metric)
        if jet.value_of(det) <= 0.0:
            raise GeometryError(_where(self.point), "metric determinant is not positive")
        return 0.5 * jet.log(det)


@lru_cache(maxsize=512)
def _local_geometry(ambient: AmbientSpace, y: Tuple[float, ...]) -> LocalGeometry:
    if ambient.is_flat:
        jacobian = _psi_jacobian(ambient, y, jet.MAX_ORDER)
        _check_jacobian(jacobian, y)
        inverse = jet.inverse(jacobian)
        columns = [[row[i] for row in jacobian] for i in range(3)]
        metric = [[jet.dot(columns[i], columns[j]) for j in range(3)] for i in range(3)]
        hessians = [[[jacobian[a][i].deriv(j) for j in range(3)] for i in range(3)] for a in range(3)]
        christoffel = [
            [[jet.dot(inverse[k], [hessians[a][i][j] for a in range(3)]) for j in range(3)] for i in range(3)]
            for k in range(3)
        ]
        return LocalGeometry(y, metric, christoffel)
    return LocalGeometry.from_metric(y, metric_at(ambient, y, jet.MAX_ORDER))


def local_geometry(ambient: AmbientSpace, y: Sequence[float]) -> LocalGeometry:
    """Metric and Christoffel jets at ``y``, memoised per point."""
    try:
        return _local_geometry(ambient, tuple(float(c) for c in y))
    except JetDomainError as exc:
        raise GeometryError(_where(y), f"metric evaluation failed ({exc})") from exc


def orientation(ambient: AmbientSpace, y: Sequence[float], vectors: Sequence[Sequence[float]]) -> int:
    """Sign of the frame volume, measured in the flat chart when there is one."""
    columns = np.array(vectors, dtype=float).T
    if ambient.is_flat:
        jacobian = np.array([c.gradient() for c in ambient.psi.jets(y, 1)])
        columns = jacobian @ columns
    return 1 if np.linalg.det(columns) > 0.0 else -1
