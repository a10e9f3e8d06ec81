"""Batch driver: ``framelap curvature | verify | compare-frames | extend``."""

import argparse
import logging
import sys
from collections import defaultdict
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import __version__, catalog, jet
from .ambient import GeometryError
from .catalog import CatalogError
from .config import ConfigError, Problem, RunConfig, apply_overrides, build_problem, load_config
from .decomposition import (
    DIVFREE_MUTATIONS,
    GENERAL_MUTATIONS,
    DecompositionError,
    DecompositionReport,
    decompose_divfree,
    decompose_general,
    lemma_residuals,
    projected_comparison,
    setup_at,
)
from .exprlang import EvaluationError, ParseError
from .extension import ExtendedField, ExtensionError, NormalRule, TangentialRule
from .geometry import FrameSpec, curvature_forms_at, frame_data_at, frame_on_surface, structure_residuals
from .jet import JetDomainError, JetOrderError
from .logging_utils import configure_logging
from .operators import (
    OperatorError,
    navier_stokes_residuals,
    restriction_residuals,
    special_field_residuals,
    surface_field_at,
    surface_laplacian,
    to_coordinate_components,
)
from .report import InMemoryRowStore, Report, Row, build_report, save_csv, save_json

logger = logging.getLogger(__name__)

SUITES = ("structure", "lemmas", "decomposition", "extension", "operators")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

RUN_ERRORS = (
    ExtensionError,
    GeometryError,
    DecompositionError,
    OperatorError,
    EvaluationError,
    JetOrderError,
    JetDomainError,
)


class Sweep:
    """Collects rows and the budget of every residual they carry."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.tolerances = problem.config.tolerances
        self.store = InMemoryRowStore()
        self.budgets: Dict[str, float] = {}
        self.orientations: Dict[str, List[int]] = defaultdict(list)
        self.extensions: Dict[str, ExtendedField] = {}
        self.frames: List[str] = problem.frame_names()
        self._index = 0

    def add(
        self,
        z: Sequence[float],
        frame: Optional[str],
        quantities: Optional[Mapping[str, float]] = None,
        residuals: Optional[Mapping[str, float]] = None,
        terms: Optional[Mapping[str, float]] = None,
        budgets: Optional[Mapping[str, float]] = None,
    ) -> Row:
        row = Row(
            index=self._index,
            point=[float(c) for c in z],
            frame=frame,
            quantities={k: float(v) for k, v in (quantities or {}).items()},
            residuals={k: float(v) for k, v in (residuals or {}).items()},
            terms={k: float(v) for k, v in (terms or {}).items()},
        )
        self._index += 1
        self.store.add_row(row)
        self.budgets.update(budgets or {})
        return row

    def budget_all(self, names, tolerance: str) -> Dict[str, float]:
        return {name: self.tolerances[tolerance] for name in names}

    def extension(self, spec: FrameSpec) -> ExtendedField:
        """The configured extension with its normal chart integrated, built once per frame."""
        if spec.name not in self.extensions:
            self.extensions[spec.name] = self.problem.extension(spec, integrate=True)
        return self.extensions[spec.name]

    def report(self, command: str) -> Report:
        config = self.problem.config
        return build_report(
            command,
            self.store,
            self.budgets,
            config.digest(),
            __version__,
            seed=config.sampling.seed,
            orientations=self.orientations,
            frames=self.frames,
        )


def _scaled(residual: float, laplacian: np.ndarray, tolerances: Mapping[str, float]) -> float:
    """``residual`` in units of ``max(rel |Delta_B u|, abs)``; at most 1 passes."""
    scale = float(np.linalg.norm(laplacian))
    return residual / max(tolerances["decomposition_relative"] * scale, tolerances["decomposition_absolute"])


def _master_ratio(report: DecompositionReport, tolerances: Mapping[str, float]) -> float:
    return _scaled(report.residual, report.laplacian, tolerances)


# curvature


def _closed_form_residuals(sweep: Sweep, frame_name: str, z: Tuple[float, float]) -> Dict[str, float]:
    entry = sweep.problem.entry
    if entry is None:
        return {}
    residuals = {}
    for quantity in catalog.closed_forms_for(entry, frame_name):
        check = catalog.closed_form_check(entry, quantity, z)
        name = f"closed_form:{quantity}"
        residuals[name] = check.deviation / max(abs(check.printed), 1.0)
        tolerance = "E_relative" if quantity.removeprefix("tilted_").startswith("E") else "curvature"
        sweep.budgets[name] = sweep.tolerances[tolerance]
    return residuals


def run_curvature(problem: Problem) -> Sweep:
    """kappa, H, t_ij and the frame scalars per point, with closed-form deviations where the catalog has them."""
    sweep = Sweep(problem)
    surface = problem.surface
    for frame_name in problem.frame_names():
        spec = problem.frame(frame_name)
        for z in problem.points():
            data = frame_data_at(surface, spec, z)
            sweep.orientations[frame_name].append(data.orientation)
            residuals = {"second_fundamental_routes": data.second_fundamental.route_deviation}
            budgets = {"second_fundamental_routes": sweep.tolerances["structure"]}
            if surface.ambient.is_flat:
                frame = frame_on_surface(surface, spec, z)
                residuals["flat_curvature"] = float(np.abs(curvature_forms_at(surface, spec, frame.y, frame)).max())
                budgets["flat_curvature"] = sweep.tolerances["flat_curvature"]
            residuals.update(_closed_form_residuals(sweep, frame_name, z))
            quantities = {**data.as_dict(), "orientation": data.orientation}
            sweep.add(z, frame_name, quantities, residuals, budgets=budgets)
    return sweep


# verify suites


def _suite_structure(sweep: Sweep, frame_name: str, z: Tuple[float, float]) -> None:
    problem = sweep.problem
    spec = problem.frame(frame_name)
    residuals = structure_residuals(problem.surface, spec, z)
    if problem.surface.ambient.is_flat:
        frame = frame_on_surface(problem.surface, spec, z)
        residuals["flat_curvature"] = float(np.abs(curvature_forms_at(problem.surface, spec, frame.y, frame)).max())
    budgets = sweep.budget_all(residuals, "structure")
    if "flat_curvature" in residuals:
        budgets["flat_curvature"] = sweep.tolerances["flat_curvature"]
    sweep.add(z, frame_name, residuals=residuals, budgets=budgets)


def _suite_lemmas(sweep: Sweep, frame_name: str, z: Tuple[float, float]) -> None:
    problem = sweep.problem
    spec = problem.frame(frame_name)
    ext = problem.extension(spec)
    setup = setup_at(problem.surface, spec, ext, z)
    lemmas = lemma_residuals(problem.surface, spec, ext, z, setup)
    aux = {f"aux:{k}": v for k, v in setup.aux.identity_residuals().items()}
    budgets = {**sweep.budget_all(lemmas, "lemmas"), **sweep.budget_all(aux, "aux")}
    quantities = {"kappa": setup.aux.kappa, "H": setup.aux.H, "rho": setup.aux.rho, "sigma": setup.aux.sigma}
    sweep.add(z, frame_name, quantities, {**lemmas, **aux}, budgets=budgets)


def _solenoidal(problem: Problem, ext: ExtendedField, divergence: float, tolerance: float) -> bool:
    if ext.normal is NormalRule.DIVFREE:
        return True
    return problem.config.field.extension == "closed-form" and abs(divergence) <= tolerance


def _suite_decomposition(sweep: Sweep, frame_name: str, z: Tuple[float, float]) -> None:
    problem = sweep.problem
    tolerances = sweep.tolerances
    mutation = problem.config.mutation
    spec = problem.frame(frame_name)
    ext = problem.extension(spec)
    setup = setup_at(problem.surface, spec, ext, z)
    sweep.orientations[frame_name].append(setup.frame.orientation)

    routes = ["general"]
    general_mutation = mutation if mutation in GENERAL_MUTATIONS else None
    general = decompose_general(problem.surface, spec, ext, z, mutation=general_mutation, setup=setup)
    residuals = {"master_general": _master_ratio(general, tolerances)}
    budgets = {"master_general": 1.0}
    terms = {f"general:{k}": v for k, v in general.terms.items()}
    quantities = {
        "laplacian_norm": float(np.linalg.norm(general.laplacian)),
        "B_t1": general.B_t[0],
        "B_t2": general.B_t[1],
        "B_n": general.B_n,
    }

    divergence = setup.field.divergence
    quantities["divergence"] = divergence
    applied = general_mutation is not None
    if _solenoidal(problem, ext, divergence, tolerances["divergence"]):
        routes.append("divfree")
        divfree_mutation = mutation if mutation in DIVFREE_MUTATIONS else None
        applied = applied or divfree_mutation is not None
        compatible = problem.config.field.compatible
        divfree = decompose_divfree(
            problem.surface, spec, ext, z, compatible=compatible, mutation=divfree_mutation, setup=setup
        )
        residuals["master_divfree"] = _master_ratio(divfree, tolerances)
        residuals["route_agreement"] = float(np.linalg.norm(general.assembled - divfree.assembled))
        budgets.update(master_divfree=1.0, route_agreement=tolerances["route_agreement"])
        terms.update({f"divfree:{k}": v for k, v in divfree.terms.items()})
    if mutation is not None and not applied:
        where = f"z=({z[0]:.6g}, {z[1]:.6g}), frame '{frame_name}'"
        message = f"mutation '{mutation}' acts on none of the evaluated routes ({', '.join(routes)})"
        raise DecompositionError(where, message)
    sweep.add(z, frame_name, quantities, residuals, terms, budgets)


def _suite_extension(sweep: Sweep, frame_name: str, z: Tuple[float, float]) -> None:
    problem = sweep.problem
    spec = problem.frame(frame_name)
    ext = sweep.extension(spec)
    residuals = {"restriction": ext.restriction_residual(z), "extension_pde": ext.pde_residual(z)}
    budgets = {"restriction": sweep.tolerances["restriction"], "extension_pde": sweep.tolerances["extension_pde"]}

    setup = setup_at(problem.surface, spec, ext, z)
    surface_field = surface_field_at(problem.surface, spec, ext.v, z)
    on_surface = restriction_residuals(setup.field, surface_field)
    quantities = {"rho": setup.aux.rho, "div_v": surface_field.divergence, "rot_v": surface_field.rot}
    residuals["divergence_restriction"] = on_surface["divergence"]
    budgets["divergence_restriction"] = sweep.tolerances["divergence"]
    if ext.normal is NormalRule.COMPATIBLE:
        residuals["rho_on_surface"] = abs(setup.aux.rho)
        budgets["rho_on_surface"] = sweep.tolerances["restriction"]
    if ext.tangential is TangentialRule.CURL_NORMAL:
        residuals["curl_tangential"] = float(np.abs(setup.field.curl[:2]).max())
        budgets["curl_tangential"] = sweep.tolerances["curl"]
    residuals.update(_tube_residuals(sweep, ext, z, quantities, budgets))
    sweep.add(z, frame_name, quantities, residuals, budgets=budgets)


def _off_surface_available(ext: ExtendedField) -> bool:
    return ext.tube_order >= 1


def _tube_residuals(
    sweep: Sweep, ext: ExtendedField, z: Tuple[float, float], quantities: Dict[str, float], budgets: Dict[str, float]
) -> Dict[str, float]:
    """PDE residuals and divergence at ``s = +-s_max/2`` along the characteristic through ``z``."""
    if not _off_surface_available(ext):
        return {}
    residuals = {}
    half = 0.5 * ext.chart.s_max
    for label, s in (("below", -half), ("above", half)):
        field = ext.at(z, s, order=1)
        residuals[f"extension_pde_{label}"] = ext.pde_residual(z, s)
        budgets[f"extension_pde_{label}"] = sweep.tolerances["extension_pde"]
        quantities[f"u3_{label}"] = jet.value_of(field.u[2])
        quantities[f"div_u_{label}"] = field.divergence
        if ext.normal is NormalRule.DIVFREE:
            residuals[f"divergence_{label}"] = abs(field.divergence)
            budgets[f"divergence_{label}"] = sweep.tolerances["divergence"]
    return residuals


def _suite_operators(sweep: Sweep, frame_name: str, z: Tuple[float, float]) -> None:
    problem = sweep.problem
    tolerances = sweep.tolerances
    spec = problem.frame(frame_name)
    ext = problem.extension(spec)
    setup = setup_at(problem.surface, spec, ext, z)
    surface_field = surface_field_at(problem.surface, spec, ext.v, z)

    on_surface = restriction_residuals(setup.field, surface_field)
    residuals = {
        "normal_derivative": on_surface["normal_derivative"],
        "rot_curl": on_surface["rot_curl"],
        "hodge_split": float(
            np.abs(
                surface_laplacian(surface_field, "hodge")
                + surface_field.kappa * surface_field.values
                - surface_field.laplacian_bochner
            ).max()
        ),
    }
    budgets = {
        "normal_derivative": tolerances["operators"],
        "rot_curl": tolerances["curl"],
        "hodge_split": tolerances["operators"],
    }
    quantities = {f"special:{k}": v for k, v in special_field_residuals(surface_field).items()}
    quantities.update({f"navier_stokes:{k}": v for k, v in navier_stokes_residuals(surface_field).items()})
    quantities["div_v"] = surface_field.divergence
    quantities["rot_v"] = surface_field.rot
    sweep.add(z, frame_name, quantities, residuals, budgets=budgets)


SUITE_RUNNERS: Dict[str, Callable[[Sweep, str, Tuple[float, float]], None]] = {
    "structure": _suite_structure,
    "lemmas": _suite_lemmas,
    "decomposition": _suite_decomposition,
    "extension": _suite_extension,
    "operators": _suite_operators,
}


def run_verify(problem: Problem, suite: Optional[str] = None) -> Sweep:
    """Run one identity suite over every sample point and frame."""
    suite = suite or problem.config.suite
    if suite not in SUITE_RUNNERS:
        raise ConfigError("suite", f"unknown or missing suite '{suite}' (known: {', '.join(SUITES)})")
    sweep = Sweep(problem)
    runner = SUITE_RUNNERS[suite]
    for frame_name in problem.frame_names():
        for z in problem.points():
            runner(sweep, frame_name, z)
    return sweep


# compare-frames


def run_compare_frames(problem: Problem, frames: Optional[List[str]] = None) -> Sweep:
    """Decomposition of the same surface field in each frame, side by side, with per-point frame differences."""
    sweep = Sweep(problem)
    tolerances = sweep.tolerances
    names = frames or problem.frame_names()
    sweep.frames = list(names)
    per_point: Dict[int, Dict[str, Dict[str, np.ndarray]]] = defaultdict(dict)
    for frame_name in names:
        spec = problem.frame(frame_name)
        ext = problem.extension(spec)
        for index, z in enumerate(problem.points()):
            setup = setup_at(problem.surface, spec, ext, z)
            general = decompose_general(problem.surface, spec, ext, z, mutation=problem.config.mutation, setup=setup)
            comparison = projected_comparison(problem.surface, spec, ext, z, setup)
            sweep.orientations[frame_name].append(setup.frame.orientation)
            E = comparison.E
            coordinate = to_coordinate_components(setup.frame, general.laplacian.tolist())
            laplacian = np.array([jet.value_of(c) for c in coordinate])
            per_point[index][frame_name] = {"E": E, "laplacian": laplacian}

            split = _scaled(
                float(np.linalg.norm(comparison.difference - comparison.other_total)), general.laplacian, tolerances
            )
            quantities = {
                "E11": E[0, 0],
                "E12": E[0, 1],
                "E21": E[1, 0],
                "E22": E[1, 1],
                "B_t1": general.B_t[0],
                "B_t2": general.B_t[1],
                "B_n": general.B_n,
                "laplacian_y1": laplacian[0],
                "laplacian_y2": laplacian[1],
                "laplacian_y3": laplacian[2],
                "bracket_form": comparison.bracket_form_residual,
            }
            residuals = {"master_general": _master_ratio(general, tolerances), "projected_split": split}
            terms = {f"other:{k}": float(np.linalg.norm(v)) for k, v in comparison.other_terms.items()}
            sweep.add(z, frame_name, quantities, residuals, terms, {"master_general": 1.0, "projected_split": 1.0})

    points = problem.points()
    for first, second in zip(names, names[1:]):
        for index, z in enumerate(points):
            a, b = per_point[index][first], per_point[index][second]
            quantities = {
                "E_max_difference": float(np.abs(a["E"] - b["E"]).max()),
                "laplacian_difference": float(np.linalg.norm(a["laplacian"] - b["laplacian"])),
            }
            sweep.add(z, f"{first} vs {second}", quantities)
    return sweep


# extend


def run_extend(problem: Problem) -> Sweep:
    """Build the configured extension with fold-over checks and report its residuals on and off the surface."""
    sweep = Sweep(problem)
    for frame_name in problem.frame_names():
        for z in problem.points():
            _suite_extension(sweep, frame_name, z)
    return sweep


# driver


def _grid(text: str) -> Tuple[int, int]:
    parts = text.lower().split("x")
    try:
        a, b = (int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected AxB, got '{text}'") from exc
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError(f"grid sizes must be positive, got '{text}'")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    sampling = common.add_mutually_exclusive_group()
    sampling.add_argument("--points", type=int, help="number of seeded random sample points")
    sampling.add_argument("--grid", type=_grid, help="sample grid AxB")
    common.add_argument("--seed", type=int)
    common.add_argument("--frame", action="append", help="frame name; repeat to compare frames")
    common.add_argument("--tol-override", action="append", default=[], metavar="NAME=VAL")
    common.add_argument("--json", dest="json_path", metavar="PATH")
    common.add_argument("--csv", dest="csv_path", metavar="PATH")
    common.add_argument("--debug-mutation", metavar="TERM", help="flip the sign of one named term")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="framelap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("curvature", parents=[common], help="curvature and frame scalars per point")
    verify = commands.add_parser("verify", parents=[common], help="run an identity suite")
    verify.add_argument("--suite", choices=SUITES)
    commands.add_parser("compare-frames", parents=[common], help="decompose the same field in several frames")
    commands.add_parser("extend", parents=[common], help="build an extension and check it in the tube")
    return parser


def _load(args: argparse.Namespace) -> Tuple[RunConfig, Problem]:
    config = load_config(args.config)
    config = apply_overrides(
        config,
        points=args.points,
        grid=args.grid,
        seed=args.seed,
        frames=args.frame,
        suite=getattr(args, "suite", None),
        json_path=args.json_path,
        csv_path=args.csv_path,
        tolerances=args.tol_override,
        mutation=args.debug_mutation,
    )
    return config, build_problem(config)


def _decomposes(command: str, config: RunConfig) -> bool:
    return command == "compare-frames" or (command == "verify" and config.suite == "decomposition")


def _run(command: str, problem: Problem) -> Sweep:
    if command == "curvature":
        return run_curvature(problem)
    if command == "verify":
        return run_verify(problem)
    if command == "compare-frames":
        return run_compare_frames(problem)
    return run_extend(problem)


def print_summary(report: Report, out=None) -> None:
    out = out or sys.stdout
    frames = ", ".join(report.provenance.frames) or "-"
    print(f"{report.command}: {len(report.rows)} rows, frames {frames}", file=out)
    for entry in report.summary:
        status = "pass" if entry.passed else "FAIL"
        budget = "-" if entry.budget is None else f"{entry.budget:.1e}"
        print(f"  {status}  {entry.identity:<36} max {entry.max:.3e}  mean {entry.mean:.3e}  budget {budget}", file=out)
    print("PASSED" if report.passed else "FAILED", file=out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    configure_logging(level)

    try:
        config, problem = _load(args)
        if args.command == "verify" and config.suite is None:
            raise ConfigError("suite", f"verify needs a suite (known: {', '.join(SUITES)})")
        if config.mutation is not None and not _decomposes(args.command, config):
            raise ConfigError("mutation", f"'{args.command}' evaluates no decomposition route to mutate")
    except (ConfigError, ParseError, CatalogError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG

    try:
        sweep = _run(args.command, problem)
    except RUN_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_FAILED

    report = sweep.report(args.command)
    if config.output.json_path:
        save_json(report, config.output.json_path)
    if config.output.csv_path:
        save_csv(report, config.output.csv_path)
    print_summary(report)
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
