"""Run configuration: a single JSON document validated with pydantic, then compiled into geometry objects."""

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import catalog
from .ambient import AMBIENT_COORDINATES, AmbientSpace
from .catalog import CatalogEntry
from .decomposition import MUTATIONS
from .exprlang import SmoothMap
from .extension import (
    ExtendedField,
    NormalChart,
    TangentialRule,
    build_normal_chart,
    extend_closed_form,
    extend_compatible,
    extend_curl_normal,
    extend_divfree,
)
from .geometry import SURFACE_COORDINATES, DomainBox, FrameSpec, Surface
from .operators import ExpressionSurfaceField, SurfaceField

logger = logging.getLogger(__name__)

TOLERANCES: Dict[str, float] = {
    "curvature": 1e-8,
    "E_relative": 1e-6,
    "structure": 1e-7,
    "flat_curvature": 1e-8,
    "operators": 1e-7,
    "restriction": 1e-10,
    "extension_pde": 1e-8,
    "divergence": 1e-7,
    "curl": 1e-7,
    "lemmas": 1e-7,
    "aux": 1e-9,
    "decomposition_relative": 1e-7,
    "decomposition_absolute": 1e-8,
    "route_agreement": 1e-8,
    "bracket_form": 1e-7,
}

ExtensionKindName = Literal["compatible", "divergence-free", "curl-normal", "closed-form"]


class ConfigError(ValueError):
    def __init__(self, source: str, message: str):
        super().__init__(f"{message} in '{source}'")
        self.source = source


class DomainConfig(BaseModel):
    """Overrides for the parameter box; missing entries keep the geometry's own box."""

    z1: Optional[Tuple[float, float]] = None
    z2: Optional[Tuple[float, float]] = None
    s_max: Optional[float] = None

    @model_validator(mode="after")
    def _nonempty(self) -> "DomainConfig":
        for name in ("z1", "z2"):
            interval = getattr(self, name)
            if interval is not None and not interval[0] < interval[1]:
                raise ValueError(f"empty interval for {name}")
        if self.s_max is not None and self.s_max <= 0.0:
            raise ValueError("s_max must be positive")
        return self

    def to_box(self, base: DomainBox = DomainBox()) -> DomainBox:
        return DomainBox(self.z1 or base.z1, self.z2 or base.z2, self.s_max or base.s_max)


class GeometryConfig(BaseModel):
    """Either a catalog entry or inline expressions for psi (or the metric), f and the frames."""

    catalog: Optional[str] = None
    params: Dict[str, Union[float, str]] = Field(default_factory=dict)
    psi: Optional[List[str]] = None
    metric: Optional[List[str]] = None
    f: Optional[List[str]] = None
    frames: Dict[str, List[List[str]]] = Field(default_factory=dict)
    domain: Optional[DomainConfig] = None

    @model_validator(mode="after")
    def _one_source(self) -> "GeometryConfig":
        inline = self.f is not None or self.psi is not None or self.metric is not None
        if (self.catalog is None) == (not inline):
            raise ValueError("give either 'catalog' or inline 'f' with 'psi' or 'metric', not both")
        if inline:
            if self.f is None or len(self.f) != 3:
                raise ValueError("inline geometry needs 'f' with three expressions in z1, z2")
            if (self.psi is None) == (self.metric is None):
                raise ValueError("inline geometry needs exactly one of 'psi' and 'metric'")
            if self.psi is not None and len(self.psi) != 3:
                raise ValueError("'psi' needs three expressions in y1, y2, y3")
            if self.metric is not None and len(self.metric) not in (6, 9):
                raise ValueError("'metric' needs 6 (upper triangle) or 9 (row-major) expressions")
        for name, vectors in self.frames.items():
            if len(vectors) != 3 or any(len(v) != 3 for v in vectors):
                raise ValueError(f"frame '{name}' needs three vectors of three y-component expressions")
        return self


class FieldConfig(BaseModel):
    name: Optional[str] = None
    v: Optional[List[str]] = None
    u: Optional[List[str]] = None
    extension: ExtensionKindName = "compatible"
    tangential: Literal["constant", "closed-form", "curl-normal"] = "constant"
    tangential_rule: Optional[str] = None
    tangential_u: Optional[List[str]] = None
    divfree: bool = False
    compatible: bool = False

    @model_validator(mode="after")
    def _consistent(self) -> "FieldConfig":
        if self.v is not None and len(self.v) != 2:
            raise ValueError("'v' needs two expressions in z1, z2")
        if self.u is not None and len(self.u) != 3:
            raise ValueError("'u' needs three expressions in y1, y2, y3")
        if self.tangential_u is not None and len(self.tangential_u) != 2:
            raise ValueError("'tangential_u' needs two expressions in y1, y2, y3")
        if self.extension == "closed-form" and self.u is None:
            raise ValueError("a closed-form extension needs 'u'")
        if self.extension == "curl-normal" and self.tangential not in ("constant", "curl-normal"):
            raise ValueError("the curl-normal extension fixes its own tangential rule")
        if self.tangential == "closed-form" and self.tangential_u is None and self.tangential_rule is None:
            raise ValueError("the closed-form tangential rule needs 'tangential_u' or 'tangential_rule'")
        return self


class SamplingConfig(BaseModel):
    mode: Literal["grid", "random"] = "grid"
    grid: Tuple[int, int] = (5, 5)
    points: int = 10
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _seeded(self) -> "SamplingConfig":
        if self.mode == "random" and self.seed is None:
            raise ValueError("random sampling needs a seed")
        if self.points < 1 or min(self.grid) < 1:
            raise ValueError("point counts must be positive")
        return self


class OutputConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    json_path: Optional[str] = Field(default=None, alias="json")
    csv_path: Optional[str] = Field(default=None, alias="csv")


class RunConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    geometry: GeometryConfig
    frame: Optional[str] = None
    frames: List[str] = Field(default_factory=list)
    field: FieldConfig = Field(default_factory=FieldConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    chart_grid: Tuple[int, int] = (3, 3)
    workers: int = Field(default=1, ge=1)
    suite: Optional[str] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)
    output: OutputConfig = Field(default_factory=OutputConfig)
    mutation: Optional[str] = None

    @field_validator("tolerances")
    @classmethod
    def _tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        unknown = set(value) - set(TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerances {sorted(unknown)}")
        for name, tol in value.items():
            if not tol > 0.0:
                raise ValueError(f"tolerance '{name}' must be positive")
        return value

    @field_validator("mutation")
    @classmethod
    def _known_mutation(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in MUTATIONS:
            raise ValueError(f"unknown mutation '{value}' (known: {', '.join(MUTATIONS)})")
        return value

    @model_validator(mode="after")
    def _fill_tolerances(self) -> "RunConfig":
        self.tolerances = {**TOLERANCES, **self.tolerances}
        return self

    def digest(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        where = ".".join(str(p) for p in error["loc"]) or "<root>"
        parts.append(f"{where}: {error['msg']}")
    return "; ".join(parts)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Validate a JSON configuration document.

    Raises:
        ConfigError: On JSON syntax errors (with line and column) or schema violations (with field paths).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(source, f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(source, _validation_message(exc)) from exc


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(path, f"cannot read configuration ({exc.strerror})") from exc
    config = parse_config(text, path)
    logger.debug("configuration %s loaded (sha256 %s)", path, config.digest())
    return config


@dataclass
class Problem:
    """A configuration compiled into a surface, frames and the field to study."""

    config: RunConfig
    surface: Surface
    frames: Dict[str, FrameSpec]
    entry: Optional[CatalogEntry] = None
    v: Optional[SurfaceField] = None
    closed_u: Optional[SmoothMap] = None
    tangential_map: Optional[SmoothMap] = None

    def frame(self, name: Optional[str] = None) -> FrameSpec:
        name = name or self.config.frame or next(iter(self.frames))
        if name not in self.frames:
            raise ConfigError("frame", f"unknown frame '{name}' (available: {', '.join(self.frames)})")
        return self.frames[name]

    def frame_names(self) -> List[str]:
        if self.config.frames:
            return list(self.config.frames)
        return [self.frame().name]

    def points(self) -> List[Tuple[float, float]]:
        sampling = self.config.sampling
        if sampling.mode == "grid":
            return self.surface.domain.grid(*sampling.grid)
        return self.surface.domain.sample(sampling.points, sampling.seed)

    def chart(self, spec: FrameSpec, integrate: bool = False) -> NormalChart:
        """A normal chart for ``spec``; with ``integrate`` the characteristics through the chart grid are checked."""
        domain = self.surface.domain
        if integrate:
            nodes = domain.grid(*self.config.chart_grid)
            return build_normal_chart(self.surface, spec, nodes, domain.s_max, workers=self.config.workers)
        return NormalChart(self.surface, spec, domain.s_max)

    def extension(self, spec: FrameSpec, integrate: bool = False) -> ExtendedField:
        settings = self.config.field
        chart = self.chart(spec, integrate)
        if settings.extension == "closed-form":
            return extend_closed_form(chart, self.closed_u, self.v)
        if self.v is None:
            raise ConfigError("field", "no surface field given ('v' or 'name')")
        if settings.extension == "curl-normal":
            return extend_curl_normal(chart, self.v, divfree=settings.divfree)
        rule = TangentialRule(settings.tangential)
        closed = self.tangential_map if rule is TangentialRule.CLOSED_FORM else None
        if settings.extension == "divergence-free":
            return extend_divfree(chart, self.v, rule, closed)
        return extend_compatible(chart, self.v, rule, closed)


def _inline_geometry(geometry: GeometryConfig, bindings: Dict[str, float]) -> Tuple[Surface, Dict[str, FrameSpec]]:
    if geometry.psi is not None:
        ambient = AmbientSpace.flat(SmoothMap.from_sources(geometry.psi, AMBIENT_COORDINATES, bindings))
    else:
        ambient = AmbientSpace.explicit(SmoothMap.from_sources(geometry.metric, AMBIENT_COORDINATES, bindings))
    f = SmoothMap.from_sources(geometry.f, SURFACE_COORDINATES, bindings)
    domain = (geometry.domain or DomainConfig()).to_box()
    surface = Surface(ambient, f, domain)
    frames = {
        name: FrameSpec.closed_form(name, vectors, AMBIENT_COORDINATES, bindings)
        for name, vectors in geometry.frames.items()
    }
    if ambient.is_flat:
        frames.setdefault("normal-tube", FrameSpec.normal_tube())
    if not frames:
        raise ConfigError("geometry.frames", "an explicit metric needs at least one closed-form frame")
    return surface, frames


def build_problem(config: RunConfig) -> Problem:
    """Compile every expression of the configuration.

    Raises:
        ConfigError: If names referenced by the configuration do not exist.
        ParseError: If an expression does not parse.
        CatalogError: If the catalog entry or its parameters are invalid.
    """
    geometry = config.geometry
    entry = None
    if geometry.catalog is not None:
        entry = catalog.get(geometry.catalog, geometry.params)
        surface = entry.surface
        if geometry.domain is not None:
            surface = Surface(surface.ambient, surface.f, geometry.domain.to_box(surface.domain))
        frames = dict(entry.frames)
        for name, vectors in geometry.frames.items():
            frames[name] = FrameSpec.closed_form(name, vectors, AMBIENT_COORDINATES, entry.numeric_params)
        bindings = entry.numeric_params
    else:
        bindings = {k: float(v) for k, v in geometry.params.items() if not isinstance(v, str)}
        surface, frames = _inline_geometry(geometry, bindings)

    for name in [config.frame, *config.frames]:
        if name is not None and name not in frames:
            raise ConfigError("frame", f"unknown frame '{name}' (available: {', '.join(frames)})")

    settings = config.field
    v: Optional[SurfaceField] = None
    if settings.v is not None:
        v = ExpressionSurfaceField(SmoothMap.from_sources(settings.v, SURFACE_COORDINATES, bindings))
    elif settings.name is not None:
        if entry is None:
            raise ConfigError("field.name", "named fields need a catalog geometry")
        v = entry.surface_field(settings.name)
    elif entry is not None and settings.extension != "closed-form":
        v = entry.surface_field(next(iter(entry.fields)))

    closed_u = SmoothMap.from_sources(settings.u, AMBIENT_COORDINATES, bindings) if settings.u is not None else None
    tangential_map = None
    if settings.tangential_u is not None:
        tangential_map = SmoothMap.from_sources(settings.tangential_u, AMBIENT_COORDINATES, bindings)
    elif settings.tangential_rule is not None:
        if entry is None:
            raise ConfigError("field.tangential_rule", "named tangential rules need a catalog geometry")
        tangential_map = entry.tangential_rule(settings.tangential_rule)

    problem = Problem(config, surface, frames, entry, v, closed_u, tangential_map)
    logger.info("geometry '%s' with frames %s", geometry.catalog or "inline", ", ".join(frames))
    return problem


def apply_overrides(
    config: RunConfig,
    points: Optional[int] = None,
    grid: Optional[Tuple[int, int]] = None,
    seed: Optional[int] = None,
    frames: Optional[List[str]] = None,
    suite: Optional[str] = None,
    json_path: Optional[str] = None,
    csv_path: Optional[str] = None,
    tolerances: Optional[List[str]] = None,
    mutation: Optional[str] = None,
) -> RunConfig:
    """Patch a loaded configuration with command-line values and validate the result again.

    ``points`` switches to seeded random sampling, ``grid`` to grid sampling; ``tolerances`` holds ``NAME=VALUE``
    strings.

    Raises:
        ConfigError: If an override is malformed or leaves the configuration invalid.
    """
    data = config.model_dump(by_alias=True)
    sampling = data["sampling"]
    if points is not None:
        sampling.update(mode="random", points=points)
    if grid is not None:
        sampling.update(mode="grid", grid=grid)
    if seed is not None:
        sampling["seed"] = seed
    if frames:
        data["frame"] = frames[0]
        data["frames"] = list(frames)
    if suite is not None:
        data["suite"] = suite
    if json_path is not None:
        data["output"]["json"] = json_path
    if csv_path is not None:
        data["output"]["csv"] = csv_path
    if mutation is not None:
        data["mutation"] = mutation
    for item in tolerances or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("--tol-override", f"expected NAME=VALUE, got '{item}'")
        try:
            data["tolerances"][name.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError("--tol-override", f"'{value}' is not a number") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("command line", _validation_message(exc)) from exc
