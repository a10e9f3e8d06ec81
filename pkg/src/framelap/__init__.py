from importlib.metadata import version

__version__ = version(__name__)
from .catalog import CatalogError
from .config import ConfigError, RunConfig, build_problem, load_config
from .decomposition import decompose_divfree, decompose_general, lemma_residuals, projected_comparison
from .exprlang import ParseError, SmoothMap, parse
from .extension import (
    ExtensionError,
    FoldOverError,
    build_normal_chart,
    extend_closed_form,
    extend_compatible,
    extend_curl_normal,
    extend_divfree,
)
from .geometry import DomainBox, FrameSpec, Surface, frame_data_at, structure_residuals
from .jet import Jet3
from .report import Report, load_report

__all__ = [
    "CatalogError",
    "ConfigError",
    "DomainBox",
    "ExtensionError",
    "FoldOverError",
    "FrameSpec",
    "Jet3",
    "ParseError",
    "Report",
    "RunConfig",
    "SmoothMap",
    "Surface",
    "build_normal_chart",
    "build_problem",
    "decompose_divfree",
    "decompose_general",
    "extend_closed_form",
    "extend_compatible",
    "extend_curl_normal",
    "extend_divfree",
    "frame_data_at",
    "lemma_residuals",
    "load_config",
    "load_report",
    "parse",
    "projected_comparison",
    "structure_residuals",
]
