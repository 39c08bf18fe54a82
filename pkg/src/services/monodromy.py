import logging
import math
from typing import List, Optional, Union

import numpy as np

from src.core.errors import UnsupportedWaveformError
from src.models.schemas import (
    TWO_PI,
    CoefficientModel,
    IntegratorConfig,
    Mat2,
    MonodromyMethod,
    MonodromyResult,
    RectangularApprox,
    StabilityParams,
    Triangular,
    Waveform,
)
from src.services.numeric import monodromy_numeric
from src.services.waveforms import coefficient_model
from src.utils.linalg2 import cos_sin, free_transfer, jump_transfer, transfer_product

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# --- Transfer-matrix product ---
def monodromy_factors(model: CoefficientModel, alpha: float) -> List[Mat2]:
    """
    Jump and free-flight factors over one period, in time order.
    The period runs from just before t_start to just before t_start + 2pi.
    """
    if model.is_smooth:
        raise UnsupportedWaveformError("a smooth coefficient has no transfer-matrix factors")
    factors: List[Mat2] = []
    first = model.impulses[0].time
    if first > model.t_start:
        factors.append(free_transfer(alpha, first - model.t_start))
    ends = [event.time for event in model.impulses[1:]] + [model.t_start + model.period]
    for event, end in zip(model.impulses, ends):
        factors.append(jump_transfer(event.weight))
        factors.append(free_transfer(alpha, end - event.time))
    return factors


def monodromy_product(w: Waveform, p: StabilityParams) -> MonodromyResult:
    """
    Monodromy matrix of an impulsive waveform as a product of transfer matrices.

    Triangular: E = F(pi) J(beta) F(pi) J(-beta).
    RectangularApprox(n): eight factors with free spans 2/n and pi - 2/n alternating.

    Raises:
        UnsupportedWaveformError: for the cosine wave.
    """
    if not w.impulsive:
        raise UnsupportedWaveformError(f"{w.label} has no impulse decomposition, use the numeric method")
    matrix = transfer_product(monodromy_factors(coefficient_model(w, p), p.alpha))
    return MonodromyResult(matrix=matrix, trace=matrix.trace(), method=MonodromyMethod.PRODUCT)


# --- Closed-form traces ---
def triangular_trace(alpha: ArrayLike, beta: ArrayLike) -> ArrayLike:
    """Tr E = 2 C(2pi) - beta^2 S(pi)^2; vectorized over alpha and beta."""
    c_period, _ = cos_sin(alpha, TWO_PI)
    _, s_half = cos_sin(alpha, math.pi)
    return 2.0 * c_period - np.square(beta) * np.square(s_half)


def rectangular_trace(alpha: ArrayLike, beta: ArrayLike, n: int, corrected: bool = True) -> ArrayLike:
    """
    Trace of the rectangular-approximation monodromy, vectorized over alpha and beta.

    With G = (n beta)^2, h = 2/n and the generalized S of cos_sin:
        Tr = 2 C(2pi)
             + G [2 S(pi-h) S(pi+h) - 2 S(h) S(2pi-h) - 2 S(pi)^2]
             + G^2 S(h)^2 S(pi-h)^2
    corrected=False adds 4 G S(h)^2, which reproduces the published
    closed form (it disagrees with the transfer-matrix product).
    """
    h = 2.0 / n
    gamma_sq = np.square(n * np.asarray(beta, dtype=float))
    c_period, _ = cos_sin(alpha, TWO_PI)
    _, s_ramp = cos_sin(alpha, h)
    _, s_plateau = cos_sin(alpha, math.pi - h)
    _, s_long = cos_sin(alpha, math.pi + h)
    _, s_half = cos_sin(alpha, math.pi)
    _, s_rest = cos_sin(alpha, TWO_PI - h)

    quadratic = 2.0 * s_plateau * s_long - 2.0 * s_ramp * s_rest - 2.0 * np.square(s_half)
    if not corrected:
        quadratic = quadratic + 4.0 * np.square(s_ramp)
    quartic = np.square(s_ramp * s_plateau)
    trace = 2.0 * c_period + gamma_sq * quadratic + np.square(gamma_sq) * quartic
    return float(trace) if np.ndim(trace) == 0 else trace


def trace_triangular_closed(p: StabilityParams) -> float:
    return float(triangular_trace(p.alpha, p.beta))


def trace_rectangular_closed(p: StabilityParams, n: int) -> float:
    """Closed-form trace for RectangularApprox(n); matches monodromy_product, including alpha = 0."""
    return float(rectangular_trace(p.alpha, p.beta, n))


def trace_rectangular_uncorrected(p: StabilityParams, n: int) -> float:
    """The published rectangular closed form, kept for auditing against the product."""
    return float(rectangular_trace(p.alpha, p.beta, n, corrected=False))


def closed_form_trace(w: Waveform, alpha: ArrayLike, beta: ArrayLike, corrected: bool = True) -> ArrayLike:
    """Vectorized closed-form trace for either impulsive waveform."""
    if isinstance(w, Triangular):
        return triangular_trace(alpha, beta)
    if isinstance(w, RectangularApprox):
        return rectangular_trace(alpha, beta, w.n, corrected=corrected)
    raise UnsupportedWaveformError("the cosine wave has no closed-form trace, use the numeric method")


def rectangular_large_n_coefficient(p: StabilityParams) -> float:
    """Limit of Tr / n^2 as n grows: 4 beta^4 S(pi)^2."""
    _, s_half = cos_sin(p.alpha, math.pi)
    return 4.0 * p.beta ** 4 * s_half ** 2


# --- Dispatcher ---
def monodromy(
    w: Waveform,
    p: StabilityParams,
    method: MonodromyMethod = MonodromyMethod.PRODUCT,
    cfg: Optional[IntegratorConfig] = None,
) -> MonodromyResult:
    """
    Monodromy matrix or trace by the requested method.

    Args:
        w: Pivot waveform.
        p: Stability parameters.
        method: product, closed, uncorrected (rectangular only) or numeric.
        cfg: Integrator settings for the numeric method.

    Returns:
        MonodromyResult; the closed forms carry no matrix.
    """
    if method is MonodromyMethod.NUMERIC:
        return monodromy_numeric(w, p, cfg or IntegratorConfig())
    if method is MonodromyMethod.PRODUCT:
        return monodromy_product(w, p)
    if method is MonodromyMethod.UNCORRECTED and not isinstance(w, RectangularApprox):
        raise UnsupportedWaveformError("the uncorrected closed form exists only for rect:<n>")
    trace = closed_form_trace(w, p.alpha, p.beta, corrected=method is MonodromyMethod.CLOSED)
    return MonodromyResult(trace=float(trace), method=method)
