import logging
import math
from typing import Union

import numpy as np

from src.core.errors import UnsupportedWaveformError
from src.models.schemas import (
    TWO_PI,
    CoefficientModel,
    Cosine,
    ImpulseEvent,
    Orientation,
    PhysicalParams,
    RectangularApprox,
    StabilityParams,
    Triangular,
    Waveform,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(values: np.ndarray) -> ArrayLike:
    return float(values) if values.ndim == 0 else values


# --- Pivot motion ---
def pivot_position(w: Waveform, A: float, t: ArrayLike) -> ArrayLike:
    """
    Pivot displacement xi(t) in dimensionless time (period 2pi).

    Triangular: +A at t = 0 falling linearly to -A at t = pi and back.
    RectangularApprox(n): plateaus at +A and -A joined by ramps of slope
    -+nA over [-1/n, 1/n] and [pi - 1/n, pi + 1/n].
    Cosine: A cos t.
    """
    t = np.asarray(t, dtype=float)
    if isinstance(w, Triangular):
        tau = np.mod(t, TWO_PI)
        xi = np.where(tau <= math.pi, A - 2.0 * A * tau / math.pi, -3.0 * A + 2.0 * A * tau / math.pi)
    elif isinstance(w, RectangularApprox):
        half = 1.0 / w.n
        u = np.mod(t + half, TWO_PI) - half
        xi = np.select(
            [u <= half, u < math.pi - half, u <= math.pi + half],
            [w.n * A * u, np.full_like(u, A), -w.n * A * (u - math.pi)],
            default=-A,
        )
    else:
        xi = A * np.cos(t)
    return _scalar_or_array(np.asarray(xi, dtype=float))


def pivot_velocity(w: Waveform, A: float, t: ArrayLike) -> ArrayLike:
    """
    Pivot velocity d(xi)/dt. Piecewise constant for the impulsive waveforms;
    at a corner the value of the segment that starts there is returned.
    """
    t = np.asarray(t, dtype=float)
    if isinstance(w, Triangular):
        tau = np.mod(t, TWO_PI)
        v = np.where(tau < math.pi, -2.0 * A / math.pi, 2.0 * A / math.pi)
    elif isinstance(w, RectangularApprox):
        half = 1.0 / w.n
        u = np.mod(t + half, TWO_PI) - half
        v = np.select(
            [u < half, u < math.pi - half, u < math.pi + half],
            [np.full_like(u, w.n * A), np.zeros_like(u), np.full_like(u, -w.n * A)],
            default=0.0,
        )
    else:
        v = -A * np.sin(t)
    return _scalar_or_array(np.asarray(v, dtype=float))


# --- Coefficient of the linearized equation ---
def unit_impulses(w: Waveform):
    """
    Impulse times and weights per unit beta over one period, plus t_start.
    The weights of coefficient_model are these scaled by beta.
    """
    if isinstance(w, Triangular):
        return 0.0, [(0.0, -1.0), (math.pi, 1.0)]
    if isinstance(w, RectangularApprox):
        half = 1.0 / w.n
        n = float(w.n)
        return -half, [(-half, n), (half, -n), (math.pi - half, -n), (math.pi + half, n)]
    raise UnsupportedWaveformError("the cosine wave has no impulse train")


def coefficient_model(w: Waveform, p: StabilityParams) -> CoefficientModel:
    """
    Coefficient of theta'' + (alpha + q(t)) theta = 0 for a waveform.

    Args:
        w: Pivot waveform.
        p: Stability parameters; only beta enters the coefficient model.

    Returns:
        Impulse train (triangular, rectangular) or smooth cosine part.
    """
    if isinstance(w, Cosine):
        return CoefficientModel(t_start=0.0, cosine_amplitude=p.beta)
    t_start, unit = unit_impulses(w)
    impulses = [ImpulseEvent(time=time, weight=weight * p.beta) for time, weight in unit]
    return CoefficientModel(t_start=t_start, impulses=impulses)


def impulse_gap(model: CoefficientModel) -> float:
    """Smallest spacing between consecutive impulses, wrapping around the period."""
    times = [event.time for event in model.impulses]
    if not times:
        return math.inf
    gaps = [b - a for a, b in zip(times, times[1:])]
    gaps.append(times[0] + model.period - times[-1])
    return min(gaps)


# --- Parameter mapping ---
def params_from_physical(ph: PhysicalParams, w: Waveform) -> StabilityParams:
    """
    Dimensionless (alpha, beta) for a physical pendulum.

    alpha = (g / l) / Omega^2, negated for the inverted pendulum.
    beta = 4A / (pi l) for the triangular wave, A / l for the rectangular
    approximation and -A / l for the cosine wave.
    """
    alpha = (ph.g / ph.l) / ph.Omega ** 2
    if ph.orientation is Orientation.INVERTED:
        alpha = -alpha
    if isinstance(w, Triangular):
        beta = 4.0 * ph.A / (math.pi * ph.l)
    elif isinstance(w, RectangularApprox):
        beta = ph.A / ph.l
    else:
        beta = -ph.A / ph.l
    logger.debug("mapped %s to alpha=%g beta=%g for %s", ph, alpha, beta, w.label)
    return StabilityParams(alpha=alpha, beta=beta)
