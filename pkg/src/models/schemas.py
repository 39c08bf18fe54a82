import math
from enum import Enum
from pathlib import Path
from typing import Annotated, ClassVar, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator

from src.core.config import (
    CLOSED_FORM_TOL,
    BOUNDARY_REFINE_TOL,
    DEFAULT_RESOLUTION,
    DEFAULT_STEPS_PER_PERIOD,
    GLOBAL_WINDOW,
    MIN_STEPS_PER_PERIOD,
    NUMERIC_TOL,
)

TWO_PI = 2.0 * math.pi


# --- Linear algebra ---
class Mat2(BaseModel):
    """Real 2x2 matrix acting on the state column (theta, omega)."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(a11=1.0, a12=0.0, a21=0.0, a22=1.0)

    def rows(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (self.a11, self.a12), (self.a21, self.a22)

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def trace(self) -> float:
        return self.a11 + self.a22

    def apply(self, theta: float, omega: float) -> Tuple[float, float]:
        """Maps the state (theta, omega) through the matrix."""
        return self.a11 * theta + self.a12 * omega, self.a21 * theta + self.a22 * omega


class TrigPair(BaseModel):
    """Generalized cosine C(alpha, tau) and sine-over-root S(alpha, tau)."""
    c: float
    s: float
    alpha: float
    tau: float


# --- Waveforms ---
class Triangular(BaseModel):
    """Triangular pivot motion with amplitude A, pivot at +A for t = 0."""
    model_config = ConfigDict(frozen=True, extra="forbid")
    impulsive: ClassVar[bool] = True

    kind: Literal["triangular"] = "triangular"

    @property
    def label(self) -> str:
        return "triangular"


class RectangularApprox(BaseModel):
    """Rectangular pivot motion with linear ramps of half-width 1/n around each switch."""
    model_config = ConfigDict(frozen=True, extra="forbid")
    impulsive: ClassVar[bool] = True

    kind: Literal["rect"] = "rect"
    n: PositiveInt

    @model_validator(mode="after")
    def _plateau_nonempty(self) -> "RectangularApprox":
        if 1.0 / self.n >= math.pi / 2:
            raise ValueError(f"rect:{self.n} has an empty plateau (1/n must be below pi/2)")
        return self

    @property
    def label(self) -> str:
        return f"rect:{self.n}"


class Cosine(BaseModel):
    """Cosine pivot motion A cos t (the Mathieu case)."""
    model_config = ConfigDict(frozen=True, extra="forbid")
    impulsive: ClassVar[bool] = False

    kind: Literal["cosine"] = "cosine"

    @property
    def label(self) -> str:
        return "cosine"


Waveform = Annotated[Union[Triangular, RectangularApprox, Cosine], Field(discriminator="kind")]


def parse_waveform(text: str) -> Union[Triangular, RectangularApprox, Cosine]:
    """
    Parses the command-line spelling of a waveform.

    Args:
        text: 'triangular', 'rect:<n>' or 'cosine'.

    Returns:
        The matching waveform model.

    Raises:
        ValueError: on an unknown name or a bad rectangular order.
    """
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    if name == "triangular" and not arg:
        return Triangular()
    if name == "cosine" and not arg:
        return Cosine()
    if name == "rect" and arg:
        try:
            n = int(arg)
        except ValueError:
            raise ValueError(f"rect order must be an integer, got '{arg}'")
        return RectangularApprox(n=n)
    raise ValueError(f"unknown waveform '{text}', expected triangular, rect:<n> or cosine")


# --- Parameters ---
class Orientation(str, Enum):
    PENDENT = "pendent"
    INVERTED = "inverted"


class PhysicalParams(BaseModel):
    """Dimensional description of the pendulum and its pivot motion."""
    A: float = Field(ge=0, description="Pivot amplitude (length).")
    l: float = Field(gt=0, description="Pendulum length.")
    g: float = Field(gt=0, description="Gravitational acceleration.")
    Omega: float = Field(gt=0, description="Angular frequency of the pivot.")
    orientation: Orientation = Orientation.PENDENT


class StabilityParams(BaseModel):
    """Point (alpha, beta) of the stability plane. Negative alpha is the upright pendulum."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha: float
    beta: float


class ImpulseEvent(BaseModel):
    """Dirac term of weight `weight` in the coefficient, located at `time`."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    time: float
    weight: float


class CoefficientModel(BaseModel):
    """
    Periodic coefficient of theta'' + (alpha + q(t)) theta = 0 over one period
    starting just before t_start. Impulsive waveforms carry `impulses`,
    the cosine wave carries `cosine_amplitude` (q(t) = amplitude * cos t).
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    t_start: float
    impulses: List[ImpulseEvent] = Field(default_factory=list)
    cosine_amplitude: Optional[float] = None

    @model_validator(mode="after")
    def _check_train(self) -> "CoefficientModel":
        if bool(self.impulses) == (self.cosine_amplitude is not None):
            raise ValueError("a coefficient model has either impulses or a smooth part, not both")
        times = [event.time for event in self.impulses]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("impulse times must be strictly increasing")
        if times and (times[0] < self.t_start or times[-1] >= self.t_start + TWO_PI):
            raise ValueError("impulse times must lie in [t_start, t_start + 2pi)")
        weights = [event.weight for event in self.impulses]
        scale = max((abs(w) for w in weights), default=0.0)
        if abs(math.fsum(weights)) > 1e-12 * max(1.0, scale):
            raise ValueError("impulse weights must sum to zero over one period")
        return self

    @property
    def period(self) -> float:
        return TWO_PI

    @property
    def is_smooth(self) -> bool:
        return self.cosine_amplitude is not None

    def smooth(self, t):
        """Smooth part q(t); zero for impulsive models. Accepts arrays."""
        if self.cosine_amplitude is None:
            return np.zeros_like(np.asarray(t, dtype=float))
        return self.cosine_amplitude * np.cos(t)


# --- Results ---
class MonodromyMethod(str, Enum):
    PRODUCT = "product"
    CLOSED = "closed"
    UNCORRECTED = "uncorrected"
    NUMERIC = "numeric"


class MonodromyResult(BaseModel):
    """Monodromy matrix over one period (absent for trace-only methods)."""
    model_config = ConfigDict(allow_inf_nan=False)

    matrix: Optional[Mat2] = None
    trace: float
    method: MonodromyMethod

    @property
    def det_error(self) -> Optional[float]:
        if self.matrix is None:
            return None
        return abs(self.matrix.det() - 1.0)


class StabilityKind(str, Enum):
    STABLE = "S"
    UNSTABLE = "U"
    BOUNDARY = "B"


class StabilityClass(BaseModel):
    kind: StabilityKind
    trace: float


class BoundaryKind(str, Enum):
    TRACE_PLUS_2 = "plus2"
    TRACE_MINUS_2 = "minus2"

    @property
    def target(self) -> float:
        return 2.0 if self is BoundaryKind.TRACE_PLUS_2 else -2.0


class BoundaryCurve(BaseModel):
    """Polyline in the (alpha, beta) plane on which Tr E equals kind.target."""
    kind: BoundaryKind
    points: List[Tuple[float, float]]
    closed_form: bool


# --- Diagram geometry ---
class Window(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    alpha_min: float
    alpha_max: float
    beta_min: float
    beta_max: float

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, value):
        if isinstance(value, (list, tuple)):
            if len(value) != 4:
                raise ValueError("window needs (alpha_min, alpha_max, beta_min, beta_max)")
            return dict(zip(("alpha_min", "alpha_max", "beta_min", "beta_max"), value))
        return value

    @model_validator(mode="after")
    def _ordered(self) -> "Window":
        if not (self.alpha_min < self.alpha_max and self.beta_min < self.beta_max):
            raise ValueError("window bounds must be strictly ordered")
        return self

    @classmethod
    def from_tuple(cls, bounds) -> "Window":
        return cls.model_validate(tuple(bounds))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.alpha_min, self.alpha_max, self.beta_min, self.beta_max


class Resolution(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_alpha: int = Field(ge=2)
    n_beta: int = Field(ge=2)

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, value):
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError("resolution needs (n_alpha, n_beta)")
            return {"n_alpha": value[0], "n_beta": value[1]}
        return value


class DiagramGrid(BaseModel):
    """
    Classification sampled at the nodes of a regular grid over `window`.
    Cells are row-major: one row per beta node, alpha varying fastest.
    """
    waveform: Waveform
    window: Window
    resolution: Resolution
    tol: float = Field(gt=0)
    traces: List[float]
    classes: List[StabilityKind]

    @model_validator(mode="after")
    def _check_size(self) -> "DiagramGrid":
        expected = self.resolution.n_alpha * self.resolution.n_beta
        if len(self.traces) != expected or len(self.classes) != expected:
            raise ValueError(f"diagram needs {expected} cells, got {len(self.traces)}")
        return self

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(self.window.alpha_min, self.window.alpha_max, self.resolution.n_alpha)

    @property
    def betas(self) -> np.ndarray:
        return np.linspace(self.window.beta_min, self.window.beta_max, self.resolution.n_beta)

    def trace_array(self) -> np.ndarray:
        return np.asarray(self.traces, dtype=float).reshape(self.resolution.n_beta, self.resolution.n_alpha)

    def cell(self, i_alpha: int, i_beta: int) -> StabilityClass:
        k = i_beta * self.resolution.n_alpha + i_alpha
        return StabilityClass(kind=self.classes[k], trace=self.traces[k])

    def cell_at(self, alpha: float, beta: float) -> StabilityClass:
        """Cell of the grid node nearest to (alpha, beta)."""
        i_alpha = int(np.argmin(np.abs(self.alphas - alpha)))
        i_beta = int(np.argmin(np.abs(self.betas - beta)))
        return self.cell(i_alpha, i_beta)


# --- Integration ---
class State(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    theta: float
    omega: float


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    steps_per_period: int = Field(DEFAULT_STEPS_PER_PERIOD, ge=MIN_STEPS_PER_PERIOD)
    method: Literal["rk4"] = "rk4"
    mollify_epsilon: Optional[float] = Field(None, gt=0)


class Trajectory(BaseModel):
    """Samples of (t, theta, omega); an impulse shows up as two samples at the same t."""
    t: List[float]
    theta: List[float]
    omega: List[float]
    events: List[ImpulseEvent] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_samples(self) -> "Trajectory":
        if not (len(self.t) == len(self.theta) == len(self.omega)):
            raise ValueError("trajectory columns must have equal length")
        if any(b < a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("trajectory times must be nondecreasing")
        return self

    @property
    def final(self) -> State:
        return State(theta=self.theta[-1], omega=self.omega[-1])


# --- Run configuration ---
class RunConfig(BaseModel):
    """Settings of one diagram/boundary run. Unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")

    waveform: Waveform = Field(default_factory=Triangular)
    window: Window = Field(default_factory=lambda: Window.from_tuple(GLOBAL_WINDOW))
    resolution: Resolution = Field(default_factory=lambda: Resolution.model_validate(DEFAULT_RESOLUTION))
    tol: Optional[float] = Field(None, gt=0)
    refine_tol: float = Field(BOUNDARY_REFINE_TOL, gt=0)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    output: Optional[Path] = None
    svg: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("waveform", mode="before")
    @classmethod
    def _parse_waveform(cls, value):
        if isinstance(value, str):
            return parse_waveform(value)
        return value

    @property
    def effective_tol(self) -> float:
        """Classification tolerance, defaulting by how the traces are computed."""
        if self.tol is not None:
            return self.tol
        return CLOSED_FORM_TOL if self.waveform.impulsive else NUMERIC_TOL


# --- Rectangular-wave audits ---
class IdentityTerms(BaseModel):
    """
    Brackets of the rectangular Tr = -2 equation at (alpha, n), each computed two ways.
    b_printed is the published product form of b, which does not equal the bracket.
    """
    alpha: float
    n: int
    a: float
    a_factored: float
    b: float
    b_factored: float
    b_printed: float


class Minus2Search(BaseModel):
    """Result of a dense grid search for Tr = -2 solutions away from beta = 0."""
    n: int
    corrected: bool
    window: Window
    exclude_beta: float
    unstable_points: int
    tangent_points: int
    max_abs_beta: float
