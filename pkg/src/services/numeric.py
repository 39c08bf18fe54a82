import logging
import math
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.config import MIN_STEPS_PER_PULSE
from src.core.errors import IntegrationError, InvalidParameterError, UnsupportedWaveformError
from src.models.schemas import (
    TWO_PI,
    CoefficientModel,
    Cosine,
    ImpulseEvent,
    IntegratorConfig,
    MonodromyMethod,
    MonodromyResult,
    Mat2,
    StabilityParams,
    State,
    Trajectory,
    Waveform,
)
from src.services.waveforms import coefficient_model, impulse_gap, unit_impulses
from src.utils.linalg2 import free_transfer, transfer_product

logger = logging.getLogger(__name__)


class _Segment(NamedTuple):
    """Integration interval; `kick` is applied at `start`, `pulse` is added to alpha throughout."""
    start: float
    end: float
    kick: object
    pulse: object
    dense: bool


# --- Impulse schedule ---
def _periodic_impulses(train, t_start: float, t0: float, t1: float) -> List[Tuple[float, object]]:
    """Copies of a one-period impulse train with t0 <= time < t1, in time order."""
    out = []
    m_lo = math.floor((t0 - t_start) / TWO_PI) - 1
    m_hi = math.ceil((t1 - t_start) / TWO_PI) + 1
    for m in range(m_lo, m_hi + 1):
        for time, weight in train:
            shifted = time + m * TWO_PI
            if t0 <= shifted < t1:
                out.append((shifted, weight))
    out.sort(key=lambda event: event[0])
    return out


def _schedule(train, t_start: float, t0: float, t1: float, epsilon: Optional[float] = None) -> List[_Segment]:
    """
    Splits [t0, t1) into segments whose endpoints are impulse times
    (epsilon None) or the edges of pulses of width epsilon centred on them.
    """
    if epsilon is None:
        segments = []
        current, pending = t0, None
        for time, weight in _periodic_impulses(train, t_start, t0, t1):
            if time > current:
                segments.append(_Segment(current, time, pending, 0.0, False))
                current, pending = time, None
            pending = weight if pending is None else pending + weight
        segments.append(_Segment(current, t1, pending, 0.0, False))
        return segments

    half = 0.5 * epsilon
    pulses = [
        (time - half, time + half, weight / epsilon)
        for time, weight in _periodic_impulses(train, t_start, t0 - epsilon, t1 + epsilon)
    ]
    edges = {t0, t1}
    for lo, hi, _ in pulses:
        edges.update(edge for edge in (lo, hi) if t0 < edge < t1)
    ordered = sorted(edges)
    segments = []
    for a, b in zip(ordered, ordered[1:]):
        mid = 0.5 * (a + b)
        covering = [height for lo, hi, height in pulses if lo <= mid < hi]
        segments.append(_Segment(a, b, None, sum(covering) if covering else 0.0, bool(covering)))
    return segments


def _steps_for(segment: _Segment, cfg: IntegratorConfig) -> int:
    steps = round(cfg.steps_per_period * (segment.end - segment.start) / TWO_PI)
    return max(MIN_STEPS_PER_PULSE if segment.dense else 1, steps)


# --- Fixed-step integrator ---
def _rk4(fn: Callable, w, a: float, b: float, steps: int, record: Optional[list], sample_every: int):
    """Classical 4th order Runge-Kutta with `steps` equal steps from a to b."""
    h = (b - a) / steps
    t = a
    for j in range(1, steps + 1):
        K1 = h * fn(t, w)
        K2 = h * fn(t + h / 2, w + K1 / 2)
        K3 = h * fn(t + h / 2, w + K2 / 2)
        K4 = h * fn(t + h, w + K3)

        w = w + (K1 + 2 * K2 + 2 * K3 + K4) / 6
        t = a + j * h
        if record is not None and (j % sample_every == 0 or j == steps):
            record.append((b if j == steps else t, float(w[0]), float(w[1])))
    return w


def _propagate(
    w: np.ndarray,
    t0: float,
    t1: float,
    alpha,
    train,
    t_start: float,
    smooth: Optional[Callable],
    cfg: IntegratorConfig,
    nonlinear: bool = False,
    epsilon: Optional[float] = None,
    record: Optional[list] = None,
    events: Optional[List[ImpulseEvent]] = None,
    sample_every: int = 1,
) -> np.ndarray:
    """
    Integrates theta'' + (alpha + pulse + smooth(t)) f(theta) = 0 from t0 to t1,
    f = identity or sin. w[0] is theta and w[1] is omega; both may carry
    extra axes (fundamental-matrix columns, batches of parameter points) that
    broadcast against alpha, smooth(t) and the impulse weights.
    """
    restoring = np.sin if nonlinear else (lambda x: x)
    segments = _schedule(train, t_start, t0, t1, epsilon) if train else [_Segment(t0, t1, None, 0.0, False)]

    for segment in segments:
        if segment.kick is not None:
            w = np.stack([w[0], w[1] - segment.kick * restoring(w[0])])
            if events is not None:
                events.append(ImpulseEvent(time=segment.start, weight=float(segment.kick)))
            if record is not None:
                record.append((segment.start, float(w[0]), float(w[1])))
        if segment.end <= segment.start:
            continue

        coef = alpha + segment.pulse

        if smooth is None:
            def fn(t, y, coef=coef):
                return np.stack([y[1], -coef * restoring(y[0])])
        else:
            def fn(t, y, coef=coef):
                return np.stack([y[1], -(coef + smooth(t)) * restoring(y[0])])

        with np.errstate(over="ignore", invalid="ignore"):
            w = _rk4(fn, w, segment.start, segment.end, _steps_for(segment, cfg), record, sample_every)
        if not np.all(np.isfinite(w)):
            raise IntegrationError(f"state overflowed while integrating [{segment.start:.6g}, {segment.end:.6g}]")
    return w


def _model_train(model: CoefficientModel):
    return [(event.time, event.weight) for event in model.impulses]


def _model_smooth(model: CoefficientModel) -> Optional[Callable]:
    return model.smooth if model.is_smooth else None


def _mollifier_width(model: CoefficientModel, epsilon: Optional[float], label: str) -> Optional[float]:
    """Pulse width for an impulse train; pulses must not overlap."""
    if epsilon is None or not model.impulses:
        return None
    gap = impulse_gap(model)
    if not 0 < epsilon < gap / 4:
        raise InvalidParameterError(f"mollifier width {epsilon} must lie in (0, {gap / 4:.6g}) for {label}")
    return epsilon


def _to_trajectory(record: list, events: List[ImpulseEvent]) -> Trajectory:
    t, theta, omega = (list(column) for column in zip(*record))
    return Trajectory(t=t, theta=theta, omega=omega, events=events)


# --- Public operations ---
def integrate_linear(
    model: CoefficientModel,
    alpha: float,
    y0: State,
    t_span: Tuple[float, float],
    cfg: IntegratorConfig,
    sample_every: int = 1,
) -> Trajectory:
    """
    Integrates theta'' + (alpha + q(t)) theta = 0 over t_span.

    Steps stop exactly at each impulse time; crossing an impulse of weight
    Gamma maps (theta, omega) to (theta, omega - Gamma theta). Impulses at
    t_span[0] are applied, impulses at t_span[1] are not.

    Args:
        model: Coefficient model (impulse train or cosine part).
        alpha: Constant part of the coefficient.
        y0: Initial state.
        t_span: (t0, t1) with t0 <= t1.
        cfg: Integrator settings; cfg.mollify_epsilon smooths the impulses.
        sample_every: Keep every k-th step in the trajectory (segment ends are always kept).

    Returns:
        The sampled trajectory and the impulses applied.
    """
    t0, t1 = t_span
    if t1 < t0:
        raise InvalidParameterError(f"t_span must be ordered, got {t_span}")
    record = [(t0, y0.theta, y0.omega)]
    epsilon = _mollifier_width(model, cfg.mollify_epsilon, "the impulse train")
    events: List[ImpulseEvent] = []
    _propagate(
        np.array([y0.theta, y0.omega]), t0, t1, alpha, _model_train(model), model.t_start,
        _model_smooth(model), cfg, epsilon=epsilon, record=record, events=events, sample_every=sample_every,
    )
    return _to_trajectory(record, events)


def _batch_inputs(w: Waveform, betas: np.ndarray):
    """Impulse train with per-point weights (or the cosine part) for a batch of betas."""
    if isinstance(w, Cosine):
        return [], 0.0, lambda t: betas * math.cos(t)
    t_start, unit = unit_impulses(w)
    return [(time, weight * betas) for time, weight in unit], t_start, None


def monodromy_numeric_batch(
    w: Waveform,
    alphas: Sequence[float],
    betas: Sequence[float],
    cfg: IntegratorConfig,
) -> np.ndarray:
    """
    Numeric monodromy traces for many (alpha, beta) points at once.

    Returns:
        Array of traces with the broadcast shape of alphas and betas.
    """
    alphas, betas = np.broadcast_arrays(np.asarray(alphas, dtype=float), np.asarray(betas, dtype=float))
    shape = alphas.shape
    a, b = alphas.ravel(), betas.ravel()
    train, t_start, smooth = _batch_inputs(w, b)

    # Columns start from (1, 0) and (0, 1) for every point
    start = np.zeros((2, 2, a.size))
    start[0, 0, :] = 1.0
    start[1, 1, :] = 1.0
    end = _propagate(start, t_start, t_start + TWO_PI, a, train, t_start, smooth, cfg)
    traces = end[0, 0, :] + end[1, 1, :]
    logger.debug("integrated %d monodromy matrices for %s", a.size, w.label)
    return traces.reshape(shape)


def monodromy_numeric(w: Waveform, p: StabilityParams, cfg: IntegratorConfig) -> MonodromyResult:
    """
    Monodromy matrix by integrating the unit initial states over one period
    from the waveform's t_start.
    """
    model = coefficient_model(w, p)
    epsilon = _mollifier_width(model, cfg.mollify_epsilon, w.label)
    start = np.array([[1.0, 0.0], [0.0, 1.0]])
    end = _propagate(
        start, model.t_start, model.t_start + TWO_PI, p.alpha, _model_train(model), model.t_start,
        _model_smooth(model), cfg, epsilon=epsilon,
    )
    # end[0] holds theta of both columns, end[1] omega
    matrix = Mat2(a11=end[0, 0], a12=end[0, 1], a21=end[1, 0], a22=end[1, 1])
    return MonodromyResult(matrix=matrix, trace=matrix.trace(), method=MonodromyMethod.NUMERIC)


def _check_mollifier(w: Waveform, p: StabilityParams, epsilon: float) -> CoefficientModel:
    if not w.impulsive:
        raise UnsupportedWaveformError("mollification needs an impulsive waveform")
    model = coefficient_model(w, p)
    _mollifier_width(model, epsilon, w.label)
    return model


def mollified_trace(w: Waveform, p: StabilityParams, epsilon: float, cfg: IntegratorConfig) -> float:
    """
    Trace with every Dirac term of weight Gamma replaced by a centred pulse
    of height Gamma/epsilon and width epsilon, integrated numerically.
    """
    model = _check_mollifier(w, p, epsilon)
    start = np.array([[1.0, 0.0], [0.0, 1.0]])
    end = _propagate(
        start, model.t_start, model.t_start + TWO_PI, p.alpha, _model_train(model), model.t_start,
        None, cfg, epsilon=epsilon,
    )
    return float(end[0, 0] + end[1, 1])


def mollified_product_trace(w: Waveform, p: StabilityParams, epsilon: float) -> float:
    """Exact trace of the mollified system, whose coefficient is piecewise constant."""
    model = _check_mollifier(w, p, epsilon)
    segments = _schedule(_model_train(model), model.t_start, model.t_start, model.t_start + TWO_PI, epsilon)
    factors = [free_transfer(p.alpha + segment.pulse, segment.end - segment.start) for segment in segments]
    return transfer_product(factors).trace()


def simulate_nonlinear(
    w: Waveform,
    p: StabilityParams,
    y0: State,
    t_end: float,
    cfg: IntegratorConfig,
    linear: bool = False,
    sample_every: int = 1,
) -> Trajectory:
    """
    Pendulum response from t = 0 to t_end.

    Integrates theta'' + (alpha + q(t)) sin(theta) = 0; an impulse of weight
    Gamma changes omega by -Gamma sin(theta). linear=True integrates the
    linearized equation instead.
    """
    if t_end < 0:
        raise InvalidParameterError(f"t_end must be nonnegative, got {t_end}")
    model = coefficient_model(w, p)
    epsilon = _mollifier_width(model, cfg.mollify_epsilon, w.label)
    record = [(0.0, y0.theta, y0.omega)]
    events: List[ImpulseEvent] = []
    _propagate(
        np.array([y0.theta, y0.omega]), 0.0, t_end, p.alpha, _model_train(model), model.t_start,
        _model_smooth(model), cfg, nonlinear=not linear, epsilon=epsilon,
        record=record, events=events, sample_every=sample_every,
    )
    logger.info("simulated %s at alpha=%g beta=%g up to t=%g (%d samples)", w.label, p.alpha, p.beta, t_end, len(record))
    return _to_trajectory(record, events)
