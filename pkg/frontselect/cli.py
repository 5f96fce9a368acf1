"""Command-line front end for the frontselect pipeline."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
import json
import logging
from pathlib import Path
from typing import Any

import colorlog
import numpy as np

from . import __version__
from .config import (
    parse_param_overrides,
    read_json,
    validate_manifest,
    validate_sim_config,
)
from .const import (
    BOUNDARY_TOL,
    DEFAULT_DOMAIN,
    DEFAULT_MU,
    DEFAULT_SIM_DOMAIN,
    DEFAULT_SIM_DT,
    DEFAULT_SIM_DX,
    DEFAULT_SIM_T_END,
    DEFAULT_SPACING,
    DEFAULT_T,
    DOUBLE_ROOT_RESIDUAL,
    EXIT_CONVERGENCE,
    EXIT_DEFINITION,
    EXIT_HYPOTHESIS,
    EXIT_IO,
    EXIT_OK,
    FIT_START_FRACTION,
    FRONT_RESIDUAL_TOL,
    HYP1_TOL,
    LOCALIZATION_THRESHOLD,
    MATCHING_FLOOR,
    MIN_FIT_SAMPLES,
    POINT_SPECTRUM_TOL,
    PUSHED_B_TOL,
    RITZ_RESIDUAL_TOL,
    SCAN_DEPTH,
    SIGN_IMAG_TOL,
    WAKE_MARGIN,
    XI_MAX,
    XI_STEP,
    ZERO_MODE_FLOOR,
)
from .dispersion import SymbolPencil, far_field_expansion, speed_scan
from .exceptions import (
    ConvergenceError,
    FrontSelectError,
    HypothesisError,
    OutputError,
    SystemDefinitionError,
)
from .pipeline import Pipeline, safe_stage
from .simulator import SimConfig, compare_to_front, track_sensitivity
from .systems import BUILTIN_NAMES, SystemSpec, builtin, system_from_config
from .tail import transcription_gap
from .utils import config_hash, to_jsonable

_LOGGER = logging.getLogger(__name__)

COMMANDS = ("analyze", "normal-form", "front", "spectrum", "tail", "simulate", "verify")

_TOLERANCES = {
    "analyze": {
        "double-root residual": DOUBLE_ROOT_RESIDUAL,
        "Hypothesis 1 real-part tolerance": HYP1_TOL,
        "imaginary part of d10*d02": SIGN_IMAG_TOL,
    },
    "normal-form": {"double-root residual": DOUBLE_ROOT_RESIDUAL},
    "front": {
        "front residual": FRONT_RESIDUAL_TOL,
        "boundary mismatch": BOUNDARY_TOL,
        "pushed-front b threshold": PUSHED_B_TOL,
        "wake margin": WAKE_MARGIN,
    },
    "spectrum": {
        "scan depth": SCAN_DEPTH,
        "localization threshold": LOCALIZATION_THRESHOLD,
        "point-spectrum tolerance": POINT_SPECTRUM_TOL,
        "Ritz residual": RITZ_RESIDUAL_TOL,
        "zero-mode floor constant": ZERO_MODE_FLOOR,
    },
    "tail": {
        "xi_max": XI_MAX,
        "xi step": XI_STEP,
        "matching floor": MATCHING_FLOOR,
    },
    "simulate": {
        "fit start fraction": FIT_START_FRACTION,
        "minimum fit samples": MIN_FIT_SAMPLES,
    },
}
_TOLERANCES["verify"] = {
    key: value
    for command in ("analyze", "front", "spectrum")
    for key, value in _TOLERANCES[command].items()
}


def setup_logging(verbose: bool) -> None:
    """Install a colored handler on the root logger."""
    handler = colorlog.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s",
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _pair(text: str) -> tuple[float, float]:
    try:
        left, right = (float(part) for part in text.split(","))
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected two numbers 'a,b', got {text!r}") from err
    return left, right


def _epilog(command: str) -> str:
    lines = ["tolerances:"]
    lines += [f"  {name} = {value:g}" for name, value in _TOLERANCES[command].items()]
    lines.append(
        f"exit codes: {EXIT_OK} ok, {EXIT_DEFINITION} bad definition, "
        f"{EXIT_HYPOTHESIS} hypothesis failure, {EXIT_CONVERGENCE} non-convergence, "
        f"{EXIT_IO} I/O"
    )
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subparser per pipeline stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--system", default="kpp", help=f"builtin ({', '.join(BUILTIN_NAMES)}) or JSON file"
    )
    common.add_argument("--param", default=None, help="parameter overrides k=v,...")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--bracket", type=_pair, default=None, help="speed bracket a,b")
    common.add_argument(
        "--speed", type=float, default=None, help="marginal speed of a symbol-only system"
    )
    common.add_argument("--domain", type=_pair, default=None, help="domain a,b")
    common.add_argument("--dx", type=float, default=None, help="grid spacing")
    common.add_argument("--dt", type=float, default=None, help="time step")
    common.add_argument("--t-end", type=float, default=None, help="end time")
    common.add_argument("--mu", type=float, default=DEFAULT_MU, help="gluing exponent")
    common.add_argument("--T", type=float, default=DEFAULT_T, help="time offset")
    common.add_argument("--jobs", type=int, default=None, help="worker cap")
    common.add_argument("--replay", default=None, help="re-run a recorded manifest")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="frontselect",
        description="Front selection analysis for reaction-diffusion systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(
            command,
            parents=[common],
            epilog=_epilog(command),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        if command == "analyze":
            sub.add_argument("--scan", default=None, help="parameter sweep NAME=START:STOP:COUNT")
        if command == "simulate":
            sub.add_argument("--config", default=None, help="simulation settings JSON file")
            sub.add_argument("--frame", choices=("lab", "comoving"), default=None)
            sub.add_argument("--scheme", choices=("cnab2", "euler"), default=None)
            sub.add_argument("--initial", choices=("step", "front"), default=None)
            sub.add_argument("--h-track", type=float, default=None)
            sub.add_argument("--stride", type=int, default=10, help="snapshot stride of the CSV")
    return parser


def load_spec(ref: str, params: dict[str, float]) -> tuple[SystemSpec, dict[str, Any]]:
    """Resolve a builtin name or a system file, applying parameter overrides."""
    if ref in BUILTIN_NAMES:
        spec = builtin(ref, params)
        return spec, spec.to_config()
    path = Path(ref)
    if not path.exists():
        raise SystemDefinitionError(
            f"{ref!r} is neither a builtin ({', '.join(BUILTIN_NAMES)}) nor a file"
        )
    data = read_json(path)
    data.setdefault("params", {}).update(params)
    return system_from_config(data), data


def _sim_config(args: argparse.Namespace) -> SimConfig:
    """Defaults, then the settings file, then flags."""
    settings: dict[str, Any] = {
        "x_left": DEFAULT_SIM_DOMAIN[0],
        "x_right": DEFAULT_SIM_DOMAIN[1],
        "dx": DEFAULT_SIM_DX,
        "dt": DEFAULT_SIM_DT,
        "t_end": DEFAULT_SIM_T_END,
    }
    if getattr(args, "config", None):
        settings.update(read_json(args.config))
    flags = {
        "dt": args.dt,
        "t_end": args.t_end,
        "T": args.T,
        "dx": args.dx,
        "frame": getattr(args, "frame", None),
        "scheme": getattr(args, "scheme", None),
        "initial": getattr(args, "initial", None),
        "h_track": getattr(args, "h_track", None),
    }
    if args.domain is not None:
        flags["x_left"], flags["x_right"] = args.domain
    settings.update({key: value for key, value in flags.items() if value is not None})
    return SimConfig(**validate_sim_config(settings))


def _pipeline(args: argparse.Namespace, spec: SystemSpec) -> Pipeline:
    sim = _sim_config(args) if args.command == "simulate" else None
    return Pipeline(
        spec,
        bracket=args.bracket,
        domain=args.domain if args.domain and args.command != "simulate" else DEFAULT_DOMAIN,
        spacing=args.dx if args.dx and args.command != "simulate" else DEFAULT_SPACING,
        mu=args.mu,
        T=args.T,
        workers=args.jobs,
        sim=sim,
        speed_override=args.speed,
    )


class _Outputs:
    """Collects the files written by a subcommand."""

    def __init__(self, root: Path) -> None:
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise OutputError(f"Could not create output directory {root}: {err}") from err
        self.root = root
        self.paths: list[str] = []

    def json(self, name: str, report: Any) -> None:
        self.paths.append(str(report.write_json(self.root / name)))

    def csv(self, name: str, writer: Callable[[Path], Path]) -> None:
        self.paths.append(str(writer(self.root / name)))


def cmd_analyze(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Spreading speed with Hypothesis 1 verdicts, optionally over a sweep."""
    speed = safe_stage("analyze", pipe.speed)
    out.json("speed.json", speed)
    print(f"c_star={round(speed.c_star, 10)} eta_star={round(speed.eta_star, 10)}")
    if args.scan:
        name, _, spec_text = args.scan.partition("=")
        try:
            start, stop, count = spec_text.split(":")
            values = np.linspace(float(start), float(stop), int(count))
        except ValueError as err:
            raise SystemDefinitionError(f"Malformed --scan {args.scan!r}") from err
        scan = safe_stage(
            "analyze",
            lambda: speed_scan(pipe.spec.name, name, values, parse_param_overrides(args.param)),
        )
        out.json("speed_scan.json", scan)
    if not speed.passed and not pipe.spec.symbol_only:
        print(f"Hypothesis 1: FAIL {to_jsonable(speed.witnesses)}")
        return EXIT_HYPOTHESIS
    return EXIT_OK


def cmd_normal_form(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Pencil, normal form and far-field expansion."""
    nf = safe_stage("normal-form", pipe.normal_form)
    out.json("pencil.json", pipe.pencil())
    out.json("normal_form.json", nf)
    print(f"case={nf.case} D_eff={nf.D_eff:.10g}")
    if not pipe.spec.symbol_only:
        speed = pipe.speed()
        pencil = SymbolPencil.from_spec(pipe.spec.centered(), speed.c_star, eta=speed.eta_star)
        far = safe_stage("normal-form", lambda: far_field_expansion(pencil, speed.root))
        out.json("far_field.json", far)
    return EXIT_OK


def cmd_front(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Critical front and wake stability."""
    front = safe_stage("front", pipe.front)
    out.json("front.json", front)
    out.csv("front.csv", front.to_csv)
    wake = safe_stage("front", pipe.wake)
    out.json("wake.json", wake)
    print(f"a={front.a:.10g} residual={front.residual_norm:.3g} wake_margin={wake.margin:.3g}")
    return EXIT_OK if wake.stable else EXIT_HYPOTHESIS


def cmd_spectrum(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Point spectrum scan and zero-mode check."""
    report = safe_stage("spectrum", pipe.spectrum)
    out.json("spectrum.json", report)
    out.csv("spectrum.csv", report.to_csv)
    zero = report.zero_mode
    passed = report.passed and zero is not None and zero.passed
    point = "PASS" if report.passed else "FAIL"
    print(f"point_spectrum={point} zero_mode={'PASS' if zero and zero.passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_HYPOTHESIS


def cmd_tail(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Self-similar profiles, approximate solution and residual decay."""
    profiles = safe_stage("tail", pipe.profiles)
    profiles.checks["transcription_gap"] = transcription_gap(profiles, pipe.normal_form())
    out.json("profiles.json", profiles)
    out.csv("profiles.csv", profiles.to_csv)
    if pipe.spec.symbol_only:
        return EXIT_OK
    report = safe_stage("tail", pipe.residual)
    out.json("vapp.json", pipe.vapp())
    out.json("residual.json", report)
    out.csv("residual.csv", report.to_csv)
    print(
        f"residual_exponent={report.exponent:.4f} "
        f"matching_exponent={report.matching_exponent:.4f}"
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Direct simulation, front tracking and comparison with the front."""
    traj = safe_stage("simulate", pipe.trajectory)
    out.json("trajectory.json", traj)
    out.csv("trajectory.csv", lambda path: traj.to_csv(path, stride=args.stride))
    track = safe_stage("simulate", pipe.track)
    out.json("track.json", track)
    out.csv("track.csv", track.to_csv)
    out.json("sensitivity.json", safe_stage("simulate", lambda: track_sensitivity(traj)))
    if pipe.spec.wake_state is not None:
        report = safe_stage(
            "simulate", lambda: compare_to_front(traj, pipe.front(), track)
        )
        out.json("convergence.json", report)
        out.csv("convergence.csv", report.to_csv)
    print(
        f"c_fit={track.c_fit:.6g}±{track.errors[0]:.2g} "
        f"kappa_fit={track.kappa_fit:.4g}±{track.errors[1]:.2g}"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, pipe: Pipeline, out: _Outputs) -> int:
    """Hypotheses 1 to 4 in order."""
    board = pipe.verify()
    out.json("scoreboard.json", board)
    for line in board.lines():
        print(line)
    return board.exit_code


_HANDLERS: dict[str, Callable[[argparse.Namespace, Pipeline, _Outputs], int]] = {
    "analyze": cmd_analyze,
    "normal-form": cmd_normal_form,
    "front": cmd_front,
    "spectrum": cmd_spectrum,
    "tail": cmd_tail,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}

_RECORDED = ("replay", "verbose")


def _replay(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    manifest = validate_manifest(read_json(args.replay))
    replayed = parser.parse_args([manifest["command"]])
    for key, value in manifest["arguments"].items():
        if isinstance(value, list):
            value = tuple(value)
        setattr(replayed, key, value)
    replayed.replay = None
    replayed.verbose = args.verbose
    return replayed


def run(args: argparse.Namespace) -> int:
    """Run one subcommand and write its manifest; return the exit code."""
    params = parse_param_overrides(args.param)
    spec, system = load_spec(args.system, params)
    out = _Outputs(Path(args.out))
    pipe = _pipeline(args, spec)
    code = EXIT_OK
    try:
        code = _HANDLERS[args.command](args, pipe, out)
    except FrontSelectError as err:
        code = exit_code(err)
        raise
    finally:
        arguments = {k: v for k, v in vars(args).items() if k not in _RECORDED}
        hashed = to_jsonable({"system": system, "arguments": arguments})
        manifest = validate_manifest(
            {
                "command": args.command,
                "arguments": to_jsonable(arguments),
                "system": to_jsonable(system),
                "config_hash": config_hash(hashed),
                "version": __version__,
                "outputs": out.paths,
                "timings": pipe.timings,
                "exit_code": code,
            }
        )
        path = out.root / "manifest.json"
        try:
            path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        except OSError as err:
            raise OutputError(f"Could not write {path}: {err}") from err
    return code


def exit_code(err: FrontSelectError) -> int:
    """Exit code for a library error."""
    if isinstance(err, HypothesisError):
        return EXIT_HYPOTHESIS
    if isinstance(err, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(err, OutputError):
        return EXIT_IO
    return EXIT_DEFINITION


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``frontselect`` command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.replay:
            args = _replay(args, parser)
        return run(args)
    except FrontSelectError as err:
        _LOGGER.error("%s", err)
        if isinstance(err, HypothesisError) and err.witness:
            print(f"witness: {to_jsonable(err.witness)}")
        return exit_code(err)
