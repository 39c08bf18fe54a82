import logging
from typing import Iterable, Tuple, Union

import numpy as np

from src.core.config import TRIG_SERIES_THRESHOLD, UNIMODULAR_TOL
from src.core.errors import InvalidParameterError, UnimodularityError
from src.models.schemas import Mat2, TrigPair

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# --- Generalized trigonometric pair ---
def cos_sin(alpha: ArrayLike, tau: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Generalized cosine and sine-over-root for theta'' + alpha theta = 0.

    C = cos(sqrt(alpha) tau), S = sin(sqrt(alpha) tau) / sqrt(alpha) for alpha > 0,
    the hyperbolic versions for alpha < 0, and (1, tau) at alpha = 0. When
    |alpha| tau^2 is below TRIG_SERIES_THRESHOLD the Taylor series is used, so
    the branches join continuously. Broadcasts over numpy arrays.

    Args:
        alpha: Stiffness (scalar or array).
        tau: Time span (scalar or array).

    Returns:
        (C, S) with the broadcast shape of the inputs; floats for scalar input.
    """
    a = np.asarray(alpha, dtype=float)
    t = np.asarray(tau, dtype=float)
    x = a * t * t
    root = np.sqrt(np.abs(a))
    phase = root * t

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c_osc, s_osc = np.cos(phase), np.sin(phase) / root
        c_hyp, s_hyp = np.cosh(phase), np.sinh(phase) / root

    small = np.abs(x) < TRIG_SERIES_THRESHOLD
    c_series = 1.0 - x / 2.0 + x * x / 24.0
    s_series = t * (1.0 - x / 6.0 + x * x / 120.0)

    c = np.where(small, c_series, np.where(a > 0, c_osc, c_hyp))
    s = np.where(small, s_series, np.where(a > 0, s_osc, s_hyp))
    if c.ndim == 0:
        return float(c), float(s)
    return c, s


def trig_pair(alpha: float, tau: float) -> TrigPair:
    """Scalar generalized (C, S) pair, see cos_sin."""
    c, s = cos_sin(alpha, tau)
    return TrigPair(c=c, s=s, alpha=alpha, tau=tau)


# --- 2x2 products and transfer matrices ---
def mat2_mul(a: Mat2, b: Mat2) -> Mat2:
    """Row-by-column product a . b."""
    return Mat2(
        a11=a.a11 * b.a11 + a.a12 * b.a21,
        a12=a.a11 * b.a12 + a.a12 * b.a22,
        a21=a.a21 * b.a11 + a.a22 * b.a21,
        a22=a.a21 * b.a12 + a.a22 * b.a22,
    )


def free_transfer(alpha: float, tau: float) -> Mat2:
    """Fundamental matrix of theta'' + alpha theta = 0 over a span tau >= 0."""
    if tau < 0:
        raise InvalidParameterError(f"free span must be nonnegative, got {tau}")
    c, s = cos_sin(alpha, tau)
    return Mat2(a11=c, a12=s, a21=-alpha * s, a22=c)


def jump_transfer(gamma: float) -> Mat2:
    """Crossing a Dirac term of weight gamma: theta is kept, omega is kicked by -gamma*theta."""
    return Mat2(a11=1.0, a12=0.0, a21=-gamma, a22=1.0)


def _row_norm(m: Mat2) -> float:
    return max(abs(m.a11) + abs(m.a12), abs(m.a21) + abs(m.a22))


def unimodular_error(m: Mat2, scale: float = 1.0) -> float:
    """|det - 1| divided by max(1, scale)."""
    return abs(m.det() - 1.0) / max(1.0, scale)


def transfer_product(factors: Iterable[Mat2], tol: float = UNIMODULAR_TOL) -> Mat2:
    """
    Product of transfer matrices given in time order (first factor acts first).

    The determinant check is relative to the squared product of the factor
    norms, which bounds every intermediate entry of the product.

    Raises:
        UnimodularityError: if the result drifts from det = 1 by more than tol.
    """
    result = Mat2.identity()
    norm = 1.0
    count = 0
    for factor in factors:
        result = mat2_mul(factor, result)
        norm *= _row_norm(factor)
        count += 1
    error = unimodular_error(result, norm * norm)
    if error > tol:
        raise UnimodularityError(f"product of {count} transfer matrices lost unimodularity (relative |det - 1| = {error:.3e})")
    return result
