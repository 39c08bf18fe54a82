import argparse
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional

from src.core.errors import InvalidParameterError, VerificationError
from src.core.run_config import load_run_config
from src.data_access.result_repository import ResultRepository
from src.models.schemas import (
    BoundaryKind,
    IntegratorConfig,
    MonodromyMethod,
    Orientation,
    PhysicalParams,
    RunConfig,
    StabilityParams,
    State,
    parse_waveform,
)
from src.services.diagram_service import BOUNDARY_KINDS, DiagramService
from src.services.monodromy import monodromy
from src.services.numeric import simulate_nonlinear
from src.services.stability import classify_point, floquet_multipliers
from src.services.verification import SUITES, run_verification
from src.services.waveforms import params_from_physical

logger = logging.getLogger(__name__)


# These functions provide the collaborators used by the commands.
def get_result_repository() -> ResultRepository:
    return ResultRepository()


def get_diagram_service(repository: Optional[ResultRepository] = None) -> DiagramService:
    return DiagramService(repository=repository or get_result_repository())


def _integrator(args: argparse.Namespace) -> IntegratorConfig:
    return IntegratorConfig(steps_per_period=args.steps) if args.steps else IntegratorConfig()


def _run_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --config with the command-line flags taking precedence."""
    overrides: Dict[str, Any] = {
        "waveform": args.waveform,
        "window": args.window,
        "resolution": args.resolution,
        "output": args.output,
        "format": args.format,
    }
    if args.steps:
        overrides["integrator"] = {"steps_per_period": args.steps}
    for name in ("tol", "refine_tol", "svg"):
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    return load_run_config(args.config, overrides)


def _point(args: argparse.Namespace):
    """Waveform and (alpha, beta) from --alpha/--beta or from --physical."""
    w = args.waveform or parse_waveform("triangular")
    if args.physical is not None:
        A, length, g, omega = args.physical
        orientation = Orientation.INVERTED if args.inverted else Orientation.PENDENT
        ph = PhysicalParams(A=A, l=length, g=g, Omega=omega, orientation=orientation)
        return w, params_from_physical(ph, w)
    if args.alpha is None or args.beta is None:
        raise InvalidParameterError("--alpha and --beta are required unless --physical is given")
    return w, StabilityParams(alpha=args.alpha, beta=args.beta)


# --- Commands ---
def cmd_trace(args: argparse.Namespace) -> None:
    """Prints the monodromy trace with 12 significant digits."""
    w, p = _point(args)
    method = args.method or ("product" if w.impulsive else "numeric")
    result = monodromy(w, p, MonodromyMethod(method), _integrator(args))
    if result.matrix is not None:
        logger.debug("E = %s, |det - 1| = %.3e", result.matrix.rows(), result.det_error)
    print(f"{result.trace:#.12g}")


def cmd_classify(args: argparse.Namespace) -> None:
    """Prints the class code, the trace and the largest Floquet multiplier modulus."""
    w, p = _point(args)
    result = classify_point(w, p, args.tol, _integrator(args))
    largest, _ = floquet_multipliers(result.trace)
    print(f"{result.kind.value} {result.trace:#.12g} {abs(largest):#.12g}")


def cmd_boundary(args: argparse.Namespace) -> None:
    config = _run_config(args)
    kinds = BOUNDARY_KINDS if args.kind == "both" else (BoundaryKind(args.kind),)
    curves = get_diagram_service().export_boundaries(config, kinds, args.form, corrected=not args.uncorrected)
    logger.info("wrote %d boundary curves", len(curves))


def cmd_diagram(args: argparse.Namespace) -> None:
    get_diagram_service().export_diagram(_run_config(args))


def cmd_render_svg(args: argparse.Namespace) -> None:
    get_diagram_service().render(args.diagram, args.boundary, args.output)


def cmd_verify(args: argparse.Namespace) -> None:
    """Prints the check table; fails with the first failing check named."""
    report = run_verification(args.suite, n=args.n, perturb=args.perturb)
    print(report.to_frame().to_string(index=False))
    failure = report.first_failure
    if failure is not None:
        raise VerificationError(f"verification failed at {failure.suite}: {failure.check}")


def cmd_simulate(args: argparse.Namespace) -> None:
    w, p = _point(args)
    y0 = State(theta=args.theta0, omega=args.omega0)
    trajectory = simulate_nonlinear(
        w, p, y0, args.t_end, _integrator(args), linear=args.linear, sample_every=args.sample_every
    )
    get_result_repository().write_trajectory_csv(trajectory, args.output)


# --- Parser ---
def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _add_waveform(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--waveform", type=parse_waveform, default=None,
        help="triangular, rect:<n> or cosine (default triangular)",
    )
    parser.add_argument("--steps", type=int, default=None, help="RK4 steps per period for numeric traces")


def _add_point(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument(
        "--physical", type=float, nargs=4, default=None, metavar=("A", "L", "G", "OMEGA"),
        help="derive alpha and beta from pivot amplitude, length, gravity and pivot frequency",
    )
    parser.add_argument("--inverted", action="store_true", help="with --physical: upright pendulum")


def _add_run(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration; flags override it")
    parser.add_argument(
        "--window", type=float, nargs=4, default=None, metavar=("ALPHA_MIN", "ALPHA_MAX", "BETA_MIN", "BETA_MAX")
    )
    parser.add_argument("--resolution", type=int, nargs=2, default=None, metavar=("N_ALPHA", "N_BETA"))
    parser.add_argument("--output", type=Path, default=None, help="output file (stdout if omitted)")
    parser.add_argument("--format", choices=["csv", "json"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivot-stability",
        description="Floquet stability of a pendulum whose pivot oscillates as a triangular, rectangular or cosine wave.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    trace = sub.add_parser("trace", help="monodromy trace at one parameter point")
    _add_waveform(trace)
    _add_point(trace)
    trace.add_argument("--method", choices=[m.value for m in MonodromyMethod], default=None)
    trace.set_defaults(handler=cmd_trace)

    classify = sub.add_parser("classify", help="stability class at one parameter point")
    _add_waveform(classify)
    _add_point(classify)
    classify.add_argument("--tol", type=float, default=None)
    classify.set_defaults(handler=cmd_classify)

    boundary = sub.add_parser("boundary", help="Tr = +-2 boundary curves as CSV")
    _add_waveform(boundary)
    _add_run(boundary)
    boundary.add_argument("--kind", choices=["plus2", "minus2", "both"], default="both")
    boundary.add_argument("--form", choices=["closed", "contour"], default=None)
    boundary.add_argument("--uncorrected", action="store_true", help="contour the published rectangular closed form")
    boundary.add_argument("--refine-tol", dest="refine_tol", type=float, default=None)
    boundary.set_defaults(handler=cmd_boundary)

    diagram = sub.add_parser("diagram", help="stability diagram on a grid")
    _add_waveform(diagram)
    _add_run(diagram)
    diagram.add_argument("--tol", type=float, default=None)
    diagram.add_argument("--svg", type=Path, default=None, help="also render the diagram to this SVG file")
    diagram.set_defaults(handler=cmd_diagram)

    render = sub.add_parser("render-svg", help="SVG from diagram and boundary CSV files")
    render.add_argument("--diagram", type=Path, required=True)
    render.add_argument("--boundary", type=Path, default=None)
    render.add_argument("--output", type=Path, default=None)
    render.set_defaults(handler=cmd_render_svg)

    verify = sub.add_parser("verify", help="run the verification suites")
    verify.add_argument("--suite", action="append", choices=list(SUITES), default=None)
    verify.add_argument("--n", type=int, default=100, help="rectangular order for rect-neg2-search")
    verify.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    verify.set_defaults(handler=cmd_verify)

    simulate = sub.add_parser("simulate", help="pendulum trajectory as CSV (t, theta, omega)")
    _add_waveform(simulate)
    _add_point(simulate)
    simulate.add_argument("--theta0", type=float, default=0.1)
    simulate.add_argument("--omega0", type=float, default=0.0)
    simulate.add_argument("--t-end", dest="t_end", type=float, default=20.0 * math.pi)
    simulate.add_argument("--linear", action="store_true", help="integrate the linearized equation")
    simulate.add_argument("--sample-every", dest="sample_every", type=_positive_int, default=16)
    simulate.add_argument("--output", type=Path, default=None)
    simulate.set_defaults(handler=cmd_simulate)
    return parser
