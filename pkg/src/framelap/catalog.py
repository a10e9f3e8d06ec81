"""Built-in surfaces with their frames, reference fields and closed-form curvature data."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .ambient import AMBIENT_COORDINATES, AmbientSpace
from .decomposition import aux_tensors_at
from .exprlang import ParseError, SmoothMap
from .extension import divfree_source, tangential_system
from .geometry import (
    SURFACE_COORDINATES,
    DomainBox,
    FrameSpec,
    PointFrame,
    Surface,
    adapted_frame_at,
    frame_on_surface,
    second_fundamental_at,
)
from .operators import ClosedFormField, ExpressionSurfaceField

logger = logging.getLogger(__name__)

ParamValue = Union[float, str]

# lambda and its swapped counterpart, as y-expressions
LAMBDA_SQUARED = "(a^2*cos(y2)^2 + sin(y2)^2)"
LAMBDA = f"sqrt{LAMBDA_SQUARED}"
LAMBDA_HAT_SQUARED = "(a^2*sin(y2)^2 + cos(y2)^2)"
MU0 = f"((y3 - 1)^2*{LAMBDA_HAT_SQUARED} + a^2*y3^2*sin(y2)^2)"
MU1 = f"((y3 - 1)^2 + y3^2*{LAMBDA_SQUARED}*sin(y2)^2)"

DEFAULT_GRAPH = "0.4*z1^2 - 0.3*z1*z2 + 0.2*z2^2 + 0.1*z1^3"


class CatalogError(ValueError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{message} in '{name}'")
        self.name = name


@dataclass(frozen=True)
class ClosedForm:
    """A printed formula in ``y`` and the route that computes the same quantity from the geometry."""

    frame: str
    printed: SmoothMap
    computed: Callable[["CatalogEntry", FrameSpec, PointFrame, Optional[Tuple[float, float]]], float]
    on_surface: bool = True


@dataclass(frozen=True)
class ClosedFormCheck:
    quantity: str
    printed: float
    computed: float

    @property
    def deviation(self) -> float:
        return abs(self.printed - self.computed)


@dataclass
class CatalogEntry:
    name: str
    params: Dict[str, ParamValue]
    surface: Surface
    frames: Dict[str, FrameSpec]
    fields: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    tangential_rules: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    closed_forms: Dict[str, ClosedForm] = field(default_factory=dict)

    @property
    def ambient(self) -> AmbientSpace:
        return self.surface.ambient

    @property
    def default_frame(self) -> str:
        return next(iter(self.frames))

    @property
    def numeric_params(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.params.items() if not isinstance(v, str)}

    def frame(self, name: str) -> FrameSpec:
        if name not in self.frames:
            raise CatalogError(self.name, f"unknown frame '{name}' (available: {', '.join(self.frames)})")
        return self.frames[name]

    def surface_field(self, name: str) -> ExpressionSurfaceField:
        if name not in self.fields:
            raise CatalogError(self.name, f"unknown field '{name}' (available: {', '.join(self.fields)})")
        components = SmoothMap.from_sources(self.fields[name], SURFACE_COORDINATES, self.numeric_params)
        return ExpressionSurfaceField(components)

    def tangential_rule(self, name: str) -> SmoothMap:
        if name not in self.tangential_rules:
            raise CatalogError(self.name, f"no closed-form tangential rule '{name}'")
        return SmoothMap.from_sources(self.tangential_rules[name], AMBIENT_COORDINATES, self.numeric_params)


def _map(sources: Sequence[str], variables: Sequence[str], params: Mapping[str, float]) -> SmoothMap:
    return SmoothMap.from_sources(sources, variables, params)


def _frame(name: str, vectors: Sequence[Sequence[str]], params: Mapping[str, float]) -> FrameSpec:
    return FrameSpec.closed_form(name, vectors, AMBIENT_COORDINATES, params)


# computed routes for closed forms


def _kappa(entry, spec, frame, z) -> float:
    return second_fundamental_at(entry.surface, spec, z, frame).kappa


def _two_H(entry, spec, frame, z) -> float:
    return 2.0 * second_fundamental_at(entry.surface, spec, z, frame).H


def _omega(i: int, j: int, k: int):
    def computed(entry, spec, frame, z) -> float:
        return float(frame.omega[i, j, k])

    return computed


def _X3_w(entry, spec, frame, z) -> float:
    omega = frame.omega
    return float(omega[0, 2, 2] * omega[0, 1, 0] + omega[1, 2, 2] * omega[0, 1, 1])


def _E(i: int, j: int):
    def computed(entry, spec, frame, z) -> float:
        zero = ClosedFormField(_map(("0", "0", "0"), AMBIENT_COORDINATES, {}))
        return float(aux_tensors_at(entry.surface, spec, zero, z).E[i, j])

    return computed


def _tangential_system(i: int, j: int):
    def computed(entry, spec, frame, z) -> float:
        return float(tangential_system(frame)[i, j])

    return computed


def _divfree(index: int):
    def computed(entry, spec, frame, z) -> float:
        rule = entry.tangential_rule("solenoidal")
        return divfree_source(frame, rule.jets(frame.y, 2))[index]

    return computed


def _ellipsoid_closed_forms(params: Mapping[str, float]) -> Dict[str, ClosedForm]:
    def printed(source: str) -> SmoothMap:
        return _map((source,), AMBIENT_COORDINATES, params)

    lam = LAMBDA
    forms = {
        "kappa": ClosedForm("coordinate", printed(f"1/{LAMBDA_SQUARED}^2"), _kappa),
        "two_H": ClosedForm("coordinate", printed(f"-1/(a*{lam}) - a/{lam}^3"), _two_H),
        "omega12_b1": ClosedForm("coordinate", printed(f"cos(y2)/(y3*{lam}*sin(y2))"), _omega(0, 1, 0), False),
        "omega13_b1": ClosedForm("coordinate", printed(f"1/(a*y3*{lam})"), _omega(0, 2, 0), False),
        "omega23_b2": ClosedForm("coordinate", printed(f"a/(y3*{lam}^3)"), _omega(1, 2, 1), False),
        "omega23_b3": ClosedForm(
            "coordinate", printed(f"(1 - a^2)*sin(2*y2)/(2*y3*{lam}^3)"), _omega(1, 2, 2), False
        ),
        "E22": ClosedForm("coordinate", printed(f"(1 - a^2)^2*sin(2*y2)^2/(4*{lam}^6)"), _E(1, 1)),
        "E11": ClosedForm("coordinate", printed("0"), _E(0, 0)),
        "E12": ClosedForm("coordinate", printed("0"), _E(0, 1)),
        "E21": ClosedForm("coordinate", printed("0"), _E(1, 0)),
        "gamma3": ClosedForm("coordinate", printed("0"), _omega(0, 1, 2), False),
        "X3_w": ClosedForm("coordinate", printed("0"), _X3_w),
        "tilted_gamma3": ClosedForm("tilted", printed("(1 - a^2)*cos(y2)/a^2"), _omega(0, 1, 2)),
        "tilted_X3_w": ClosedForm("tilted", printed(f"-cos(y2)/(a*{lam}*sin(y2)^2)"), _X3_w),
        "tilted_E11": ClosedForm(
            "tilted", printed(f"({lam}^4 - (1 + a^2)*{lam}^2 + 2*a^2)/(a^4*sin(y2)^2)"), _E(0, 0)
        ),
        "tilted_E12": ClosedForm("tilted", printed(f"(a^2 - 1)*cos(y2)*(3*{lam}^2 - a^2)/(a^3*{lam})"), _E(0, 1)),
        "tilted_E21": ClosedForm(
            "tilted", printed(f"(a^2 - 1)*cos(y2)*(2*a^2 + {lam}^2*a^2 - 3*{lam}^4)/(a^3*{lam}^3)"), _E(1, 0)
        ),
        "tilted_E22": ClosedForm(
            "tilted", printed(f"({lam}^2 - 1)*((1 - a^2)*{lam}^6 - a^4*{lam}^2 + a^6)/(a^4*{lam}^6)"), _E(1, 1)
        ),
        "curl_normal_11": ClosedForm("coordinate", printed(f"-1/(a*y3*{lam})"), _tangential_system(0, 0), False),
        "curl_normal_12": ClosedForm("coordinate", printed("0"), _tangential_system(0, 1), False),
        "curl_normal_21": ClosedForm("coordinate", printed("0"), _tangential_system(1, 0), False),
        "curl_normal_22": ClosedForm("coordinate", printed(f"-a/(y3*{lam}^3)"), _tangential_system(1, 1), False),
        "divfree_coefficient": ClosedForm(
            "coordinate", printed(f"-1/(a*y3*{lam}) - a/(y3*{lam}^3)"), _divfree(0), False
        ),
        "divfree_source": ClosedForm(
            "coordinate", printed(f"(a^2 - 1)*cos(y2)*y2/(y3*{lam}^3)"), _divfree(1), False
        ),
    }
    return forms


# builders


def _ellipsoid(params: Dict[str, ParamValue]) -> CatalogEntry:
    a = float(params.get("a", 2.0))
    if not a > 0.0:
        raise CatalogError("ellipsoid", f"parameter a must be positive, got {a}")
    p = {"a": a}
    psi = _map(("a*y3*cos(y1)*sin(y2)", "a*y3*sin(y1)*sin(y2)", "y3*cos(y2)"), AMBIENT_COORDINATES, p)
    f = _map(("z1", "z2", "1"), SURFACE_COORDINATES, p)
    coordinate = _frame(
        "coordinate",
        (
            ("1/(a*y3*sin(y2))", "0", "0"),
            ("0", f"1/(y3*{LAMBDA})", "0"),
            ("0", f"(1 - a^2)*sin(2*y2)/(2*a*y3*{LAMBDA})", f"{LAMBDA}/a"),
        ),
        p,
    )
    tilted = _frame(
        "tilted",
        (
            (f"1/sqrt{MU0}", "0", f"(y3 - 1)/sqrt{MU0}"),
            (
                f"(1 - a^2)*(y3 - 1)*sin(2*y2)/(2*a*sqrt({MU0}*{MU1}))",
                f"sqrt{MU0}/(a*y3*sqrt{MU1})",
                f"(1 - a^2)*(y3 - 1)^2*sin(2*y2)/(2*a*sqrt({MU0}*{MU1}))",
            ),
            (
                f"-(y3 - 1)/(a*y3*sin(y2)*sqrt{MU1})",
                f"(1 - a^2)*sin(2*y2)*sin(y2)/(2*a*sqrt{MU1})",
                f"y3*{LAMBDA_SQUARED}*sin(y2)/(a*sqrt{MU1})",
            ),
        ),
        p,
    )
    surface = Surface(AmbientSpace.flat(psi), f, DomainBox())
    z_lambda = "sqrt(a^2*cos(z2)^2 + sin(z2)^2)"
    return CatalogEntry(
        name="ellipsoid",
        params=dict(p),
        surface=surface,
        frames={"coordinate": coordinate, "tilted": tilted, "normal-tube": FrameSpec.normal_tube()},
        fields={"killing": ("a*sin(z2)", "0"), "solenoidal": (f"a*z1/{z_lambda}", "-z2/sin(z2)")},
        tangential_rules={"solenoidal": (f"a*y1/{LAMBDA}", "-y2/sin(y2)")},
        closed_forms=_ellipsoid_closed_forms(p),
    )


def _unit_sphere(params: Dict[str, ParamValue]) -> CatalogEntry:
    if params:
        raise CatalogError("unit-sphere", f"takes no parameters, got {sorted(params)}")
    entry = _ellipsoid({"a": 1.0})
    entry.name = "unit-sphere"
    return entry


def _flat_plane(params: Dict[str, ParamValue]) -> CatalogEntry:
    if params:
        raise CatalogError("flat-plane", f"takes no parameters, got {sorted(params)}")
    psi = _map(AMBIENT_COORDINATES, AMBIENT_COORDINATES, {})
    f = _map(("z1", "z2", "0"), SURFACE_COORDINATES, {})
    coordinate = _frame("coordinate", (("1", "0", "0"), ("0", "1", "0"), ("0", "0", "1")), {})
    surface = Surface(AmbientSpace.flat(psi), f, DomainBox((-1.0, 1.0), (-1.0, 1.0), 0.5))
    return CatalogEntry(
        name="flat-plane",
        params={},
        surface=surface,
        frames={"coordinate": coordinate, "normal-tube": FrameSpec.normal_tube()},
        fields={"rotation": ("-z2", "z1"), "shear": ("sin(z2)", "z1^2")},
        tangential_rules={"rotation": ("-y2", "y1")},
    )


def _graph_surface(params: Dict[str, ParamValue]) -> CatalogEntry:
    h = params.get("h", DEFAULT_GRAPH)
    if not isinstance(h, str):
        raise CatalogError("graph-surface", "parameter h must be an expression in z1, z2")
    try:
        f = _map(("z1", "z2", h), SURFACE_COORDINATES, {})
    except ParseError as exc:
        raise CatalogError("graph-surface", f"invalid height expression ({exc})") from exc
    psi = _map(AMBIENT_COORDINATES, AMBIENT_COORDINATES, {})
    surface = Surface(AmbientSpace.flat(psi), f, DomainBox((-0.5, 0.5), (-0.5, 0.5), 0.05))
    return CatalogEntry(
        name="graph-surface",
        params={"h": h},
        surface=surface,
        frames={"normal-tube": FrameSpec.normal_tube()},
        fields={"rotation": ("-z2", "z1"), "shear": ("sin(z2)", "z1^2")},
    )


def _torus(params: Dict[str, ParamValue]) -> CatalogEntry:
    R, r = float(params.get("R", 2.0)), float(params.get("r", 0.5))
    if not 0.0 < r < R:
        raise CatalogError("torus", f"radii must satisfy 0 < r < R, got R={R}, r={r}")
    p = {"R": R, "r": r}
    psi = _map(
        ("(R + y3*cos(y2))*cos(y1)", "(R + y3*cos(y2))*sin(y1)", "y3*sin(y2)"), AMBIENT_COORDINATES, p
    )
    f = _map(("z1", "z2", "r"), SURFACE_COORDINATES, p)
    coordinate = _frame("coordinate", (("1/(R + y3*cos(y2))", "0", "0"), ("0", "1/y3", "0"), ("0", "0", "1")), p)
    surface = Surface(AmbientSpace.flat(psi), f, DomainBox((-1.0, 1.0), (-1.0, 1.0), min(0.1, 0.5 * r)))
    return CatalogEntry(
        name="torus",
        params=dict(p),
        surface=surface,
        frames={"coordinate": coordinate, "normal-tube": FrameSpec.normal_tube()},
        fields={"rotation": ("R + r*cos(z2)", "0"), "shear": ("sin(z2)", "cos(z1)")},
    )


BUILDERS: Dict[str, Callable[[Dict[str, ParamValue]], CatalogEntry]] = {
    "ellipsoid": _ellipsoid,
    "unit-sphere": _unit_sphere,
    "flat-plane": _flat_plane,
    "graph-surface": _graph_surface,
    "torus": _torus,
}

ALLOWED_PARAMS = {
    "ellipsoid": {"a"},
    "unit-sphere": set(),
    "flat-plane": set(),
    "graph-surface": {"h"},
    "torus": {"R", "r"},
}


def names() -> List[str]:
    return list(BUILDERS)


def get(name: str, params: Optional[Mapping[str, ParamValue]] = None) -> CatalogEntry:
    """Build the catalog entry ``name`` with ``params``.

    Raises:
        CatalogError: If the name is unknown or a parameter is unknown or invalid.
    """
    if name not in BUILDERS:
        raise CatalogError(name, f"unknown catalog entry (available: {', '.join(BUILDERS)})")
    params = dict(params or {})
    unknown = set(params) - ALLOWED_PARAMS[name]
    if unknown:
        raise CatalogError(name, f"unknown parameters {sorted(unknown)}")
    entry = BUILDERS[name](params)
    logger.debug("catalog entry %s with %s", name, entry.params)
    return entry


def closed_form_check(
    entry: CatalogEntry,
    quantity: str,
    z: Optional[Sequence[float]] = None,
    y: Optional[Sequence[float]] = None,
) -> ClosedFormCheck:
    """Compare a printed closed form with its computed counterpart at ``f(z)`` or at the ambient point ``y``.

    Raises:
        CatalogError: If the entry has no closed form for ``quantity`` or it needs a surface point.
    """
    if quantity not in entry.closed_forms:
        raise CatalogError(entry.name, f"no closed form for '{quantity}'")
    form = entry.closed_forms[quantity]
    spec = entry.frame(form.frame)
    if y is None:
        if z is None:
            raise CatalogError(entry.name, f"'{quantity}' needs a point")
        z = (float(z[0]), float(z[1]))
        frame = frame_on_surface(entry.surface, spec, z)
    else:
        if form.on_surface:
            raise CatalogError(entry.name, f"'{quantity}' is only defined on the surface")
        frame = adapted_frame_at(entry.surface, spec, y)
    printed = float(form.printed(frame.y)[0])
    computed = float(form.computed(entry, spec, frame, z if y is None else None))
    return ClosedFormCheck(quantity, printed, computed)


def closed_forms_for(entry: CatalogEntry, frame_name: Optional[str] = None) -> List[str]:
    return [k for k, v in entry.closed_forms.items() if frame_name is None or v.frame == frame_name]


def expected_kappa(a: float, z2: float) -> float:
    return 1.0 / (a**2 * math.cos(z2) ** 2 + math.sin(z2) ** 2) ** 2


def expected_two_H(a: float, z2: float) -> float:
    lam = math.sqrt(a**2 * math.cos(z2) ** 2 + math.sin(z2) ** 2)
    return -1.0 / (a * lam) - a / lam**3
