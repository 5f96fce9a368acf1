"""Stage coordinator: speed, normal form, front, spectrum, tail and simulation."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
import logging
import time
from typing import Any, TypeVar

from .base import Report
from .const import (
    DEFAULT_DOMAIN,
    DEFAULT_MU,
    DEFAULT_SPACING,
    DEFAULT_T,
    EXIT_CONVERGENCE,
    EXIT_DEFINITION,
    EXIT_HYPOTHESIS,
    EXIT_OK,
)
from .dispersion import SpreadingSpeedResult, solve_spreading_speed
from .exceptions import (
    ConvergenceError,
    FrontSelectError,
    HypothesisError,
    SystemDefinitionError,
)
from .front import FrontProfile, WakeVerdict, check_wake_stability, solve_front
from .normal_form import NormalForm, PencilData, build_normal_form, extract_pencil
from .simulator import (
    ConvergenceReport,
    FrontTrack,
    SimConfig,
    Trajectory,
    compare_to_front,
    integrate,
    track_front,
)
from .spectral import (
    CLOSURE_BOUNDED,
    SpectrumReport,
    ZeroModeVerdict,
    build_weighted_operator,
    check_zero_mode,
    scan_point_spectrum,
)
from .systems import SystemSpec
from .tail import (
    ApproxSolution,
    ResidualReport,
    SelfSimilarProfiles,
    assemble_vapp,
    residual,
    solve_profiles,
)

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")


@dataclass
class HypothesisVerdict(Report):
    """PASS/FAIL of one hypothesis with its witness."""

    hypothesis: str
    passed: bool
    stage: str
    detail: str = ""
    witness: dict[str, Any] = field(default_factory=dict)


@dataclass
class Scoreboard(Report):
    """Verdicts of Hypotheses 1 to 4, checked in order."""

    system: str
    verdicts: list[HypothesisVerdict]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """Whether all four hypotheses hold."""
        return len(self.verdicts) == 4 and all(v.passed for v in self.verdicts)

    @property
    def first_failure(self) -> HypothesisVerdict | None:
        """The first failing hypothesis, if any."""
        return next((v for v in self.verdicts if not v.passed), None)

    @property
    def exit_code(self) -> int:
        """Exit code encoding the first failure."""
        failure = self.first_failure
        if failure is None:
            return EXIT_OK
        if failure.witness.get("error") == "convergence":
            return EXIT_CONVERGENCE
        if failure.witness.get("error") == "definition":
            return EXIT_DEFINITION
        return EXIT_HYPOTHESIS

    def lines(self) -> list[str]:
        """One PASS/FAIL line per hypothesis."""
        return [
            f"Hypothesis {v.hypothesis}: {'PASS' if v.passed else 'FAIL'}"
            + (f" ({v.detail})" if v.detail else "")
            for v in self.verdicts
        ]


class Pipeline:
    """Lazily computed, cached stage results for one system."""

    def __init__(
        self,
        spec: SystemSpec,
        *,
        bracket: tuple[float, float] | None = None,
        domain: tuple[float, float] = DEFAULT_DOMAIN,
        spacing: float = DEFAULT_SPACING,
        mu: float = DEFAULT_MU,
        T: float = DEFAULT_T,
        workers: int | None = None,
        sim: SimConfig | None = None,
        speed_override: float | None = None,
    ) -> None:
        """Initialize the pipeline.

        Args:
            spec: System in its own coordinates
            bracket: Speed bracket for the spreading-speed solve
            domain: Front domain
            spacing: Front grid spacing
            mu: Gluing exponent of the approximate solution
            T: Time offset of the approximate solution
            workers: Worker cap for concurrent eigen-solves
            sim: Simulation settings
            speed_override: Prescribed marginal speed for symbol-only systems
        """
        self.spec = spec
        self.bracket = bracket
        self.domain = domain
        self.spacing = spacing
        self.mu = mu
        self.T = T
        self.workers = workers
        self.sim = sim
        self.speed_override = speed_override
        self.timings: dict[str, float] = {}
        self._results: dict[str, Any] = {}

    def _stage(self, name: str, compute: Callable[[], _T]) -> _T:
        """Run a stage once and cache its result."""
        if name not in self._results:
            start = time.perf_counter()
            _LOGGER.debug("Stage %s started", name)
            self._results[name] = compute()
            self.timings[name] = time.perf_counter() - start
            _LOGGER.debug("Stage %s finished in %.3fs", name, self.timings[name])
        return self._results[name]

    def speed(self) -> SpreadingSpeedResult:
        """Linear spreading speed and Hypothesis 1 verdicts."""

        def compute() -> SpreadingSpeedResult:
            if self.spec.symbol_only:
                c = 0.0 if self.speed_override is None else self.speed_override
                return SpreadingSpeedResult.from_root(self.spec, c, (0j, 0j))
            return solve_spreading_speed(self.spec, self.bracket)

        return self._stage("speed", compute)

    def pencil(self) -> PencilData:
        """Marginal pencil at (c_*, η_*)."""
        return self._stage("pencil", lambda: extract_pencil(self.spec, self.speed()))

    def normal_form(self) -> NormalForm:
        """Diffusive normal form."""
        return self._stage("normal_form", lambda: build_normal_form(self.pencil()))

    def front(self) -> FrontProfile:
        """Critical front."""
        return self._stage(
            "front",
            lambda: solve_front(
                self.spec, self.speed(), self.pencil(), self.domain, self.spacing
            ),
        )

    def wake(self) -> WakeVerdict:
        """Stability of the wake state."""
        return self._stage("wake", lambda: check_wake_stability(self.spec, self.speed()))

    def spectrum(self) -> SpectrumReport:
        """Point spectrum of the weighted linearization, with the zero-mode check."""

        def compute() -> SpectrumReport:
            report = scan_point_spectrum(
                build_weighted_operator(self.front()), workers=self.workers
            )
            report.zero_mode = self.zero_mode()
            return report

        return self._stage("spectrum", compute)

    def zero_mode(self) -> ZeroModeVerdict:
        """Bounded-kernel check at λ = 0."""
        return self._stage(
            "zero_mode",
            lambda: check_zero_mode(
                build_weighted_operator(self.front(), closure=CLOSURE_BOUNDED)
            ),
        )

    def profiles(self) -> SelfSimilarProfiles:
        """Self-similar tail profiles."""
        return self._stage(
            "profiles",
            lambda: solve_profiles(self.normal_form(), symbol_only=self.spec.symbol_only),
        )

    def vapp(self) -> ApproxSolution:
        """Matched approximate solution."""
        return self._stage(
            "vapp",
            lambda: assemble_vapp(
                self.front(), self.profiles(), self.normal_form(), self.T, self.mu
            ),
        )

    def residual(self) -> ResidualReport:
        """Residual decay of the approximate solution."""
        return self._stage("residual", lambda: residual(self.vapp()))

    def trajectory(self) -> Trajectory:
        """Direct simulation."""
        if self.sim is None:
            raise SystemDefinitionError("no simulation settings configured")
        needs_front = self.sim.initial == "front"
        return self._stage(
            "trajectory",
            lambda: integrate(
                self.spec,
                self.sim,
                speed=self.speed(),
                front=self.front() if needs_front else None,
            ),
        )

    def track(self) -> FrontTrack:
        """Tracked front position and fit."""
        return self._stage(
            "track", lambda: track_front(self.trajectory(), speed=self.speed())
        )

    def convergence(self) -> ConvergenceReport:
        """Weighted distance of the simulation to the front."""
        return self._stage(
            "convergence",
            lambda: compare_to_front(self.trajectory(), self.front(), self.track()),
        )

    def _check(
        self, hypothesis: str, stage: str, check: Callable[[], tuple[bool, str, dict]]
    ) -> HypothesisVerdict:
        try:
            passed, detail, witness = check()
        except HypothesisError as err:
            return HypothesisVerdict(
                err.hypothesis, False, stage, str(err), dict(err.witness)
            )
        except ConvergenceError as err:
            return HypothesisVerdict(
                hypothesis, False, stage, str(err), {"error": "convergence"}
            )
        except SystemDefinitionError as err:
            return HypothesisVerdict(
                hypothesis, False, stage, str(err), {"error": "definition"}
            )
        return HypothesisVerdict(hypothesis, passed, stage, detail, witness)

    def verify(self) -> Scoreboard:
        """Check Hypotheses 1 to 4 in order, stopping at the first failure."""

        def hyp1() -> tuple[bool, str, dict]:
            speed = self.speed()
            return (
                speed.passed,
                f"c_*={speed.c_star:.10g}, eta_*={speed.eta_star:.10g}",
                dict(speed.witnesses),
            )

        def hyp2() -> tuple[bool, str, dict]:
            front = self.front()
            return True, f"a={front.a:.6g}, b_raw={front.b_raw:.6g}", {}

        def hyp3() -> tuple[bool, str, dict]:
            wake = self.wake()
            return (
                wake.stable,
                f"margin={wake.margin:.3g}",
                {"k": wake.k_max, "margin": wake.margin},
            )

        def hyp4() -> tuple[bool, str, dict]:
            spectrum = self.spectrum()
            zero = spectrum.zero_mode
            unstable = [
                p.value for p in spectrum.point_spectrum if p.value.real >= -spectrum.depth
            ]
            passed = spectrum.passed and zero is not None and zero.passed
            return (
                passed,
                f"sigma_min={zero.sigma_min:.3g}, floor={zero.floor:.3g}",
                {"eigenvalues": unstable},
            )

        verdicts: list[HypothesisVerdict] = []
        checks = (
            ("1", "analyze", hyp1),
            ("2", "front", hyp2),
            ("3", "wake", hyp3),
            ("4", "spectrum", hyp4),
        )
        for hypothesis, stage, check in checks:
            verdict = self._check(hypothesis, stage, check)
            verdicts.append(verdict)
            _LOGGER.info(
                "%s: Hypothesis %s %s",
                self.spec.name,
                hypothesis,
                "PASS" if verdict.passed else "FAIL",
            )
            if not verdict.passed:
                break
        return Scoreboard(system=self.spec.name, verdicts=verdicts, timings=dict(self.timings))

    def run_all(self) -> dict[str, Report]:
        """Every analysis stage, plus the simulation when configured."""
        results: dict[str, Report] = {
            "speed": self.speed(),
            "normal_form": self.normal_form(),
            "front": self.front(),
            "spectrum": self.spectrum(),
            "residual": self.residual(),
        }
        if self.sim is not None:
            results["track"] = self.track()
            results["convergence"] = self.convergence()
        return results


def safe_stage(name: str, compute: Callable[[], _T]) -> _T:
    """Run a stage, tagging library errors with the stage name."""
    try:
        return compute()
    except FrontSelectError as err:
        err.args = (f"[{name}] {err.args[0] if err.args else err}",) + err.args[1:]
        raise
