import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from src.core.config import CLOSED_FORM_TOL, DEFAULT_BETA_MAX, NUMERIC_TOL
from src.core.errors import InvalidParameterError, PivotStabilityError
from src.models.schemas import (
    BoundaryCurve,
    BoundaryKind,
    DiagramGrid,
    IdentityTerms,
    IntegratorConfig,
    Minus2Search,
    RectangularApprox,
    Resolution,
    StabilityClass,
    StabilityKind,
    StabilityParams,
    Waveform,
    Window,
)
from src.services.monodromy import closed_form_trace, rectangular_trace
from src.services.numeric import monodromy_numeric_batch
from src.utils.contour import extract_contours
from src.utils.linalg2 import cos_sin

logger = logging.getLogger(__name__)


# --- Classification ---
def classify(trace: float, tol: float) -> StabilityClass:
    """Stable if |trace| < 2 - tol, Unstable if |trace| > 2 + tol, Boundary otherwise."""
    if tol <= 0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    magnitude = abs(trace)
    if magnitude < 2.0 - tol:
        kind = StabilityKind.STABLE
    elif magnitude > 2.0 + tol:
        kind = StabilityKind.UNSTABLE
    else:
        kind = StabilityKind.BOUNDARY
    return StabilityClass(kind=kind, trace=trace)


def classify_array(traces: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized classify returning the class codes 'S', 'U', 'B'."""
    magnitude = np.abs(traces)
    return np.where(magnitude < 2.0 - tol, "S", np.where(magnitude > 2.0 + tol, "U", "B"))


def default_tol(w: Waveform) -> float:
    return CLOSED_FORM_TOL if w.impulsive else NUMERIC_TOL


def floquet_multipliers(trace: float) -> Tuple[complex, complex]:
    """Eigenvalues of a unimodular 2x2 monodromy matrix with the given trace, largest first."""
    roots = np.roots([1.0, -trace, 1.0])
    ordered = sorted((complex(r) for r in roots), key=abs, reverse=True)
    return ordered[0], ordered[1]


# --- Trace evaluation ---
def trace_grid(
    w: Waveform,
    alphas,
    betas,
    cfg: Optional[IntegratorConfig] = None,
    corrected: bool = True,
) -> np.ndarray:
    """
    Traces at every (alpha, beta) node, shape (len(betas), len(alphas)).
    Closed form for impulsive waveforms, numeric Floquet for the cosine.
    """
    A, B = np.meshgrid(np.asarray(alphas, dtype=float), np.asarray(betas, dtype=float))
    if w.impulsive:
        return np.asarray(closed_form_trace(w, A, B, corrected=corrected), dtype=float)
    return monodromy_numeric_batch(w, A, B, cfg or IntegratorConfig())


def point_trace(
    w: Waveform,
    alpha: float,
    beta: float,
    cfg: Optional[IntegratorConfig] = None,
    corrected: bool = True,
) -> float:
    if w.impulsive:
        return float(closed_form_trace(w, alpha, beta, corrected=corrected))
    return float(monodromy_numeric_batch(w, [alpha], [beta], cfg or IntegratorConfig())[0])


def classify_point(
    w: Waveform,
    p: StabilityParams,
    tol: Optional[float] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> StabilityClass:
    return classify(point_trace(w, p.alpha, p.beta, cfg), tol if tol is not None else default_tol(w))


# --- Triangular boundaries ---
def _runs(mask: np.ndarray) -> List[slice]:
    """Maximal runs of True in a boolean vector."""
    runs, start = [], None
    for index, flag in enumerate(mask.tolist() + [False]):
        if flag and start is None:
            start = index
        elif not flag and start is not None:
            runs.append(slice(start, index))
            start = None
    return runs


def _mirrored_curves(
    kind: BoundaryKind, alphas: np.ndarray, betas: np.ndarray, beta_range: Tuple[float, float]
) -> List[BoundaryCurve]:
    """Curves +beta(alpha) and -beta(alpha), cut where they leave beta_range."""
    lo, hi = beta_range
    curves = []
    for sign in (1.0, -1.0):
        signed = sign * betas
        for part in _runs(np.isfinite(signed) & (signed >= lo) & (signed <= hi)):
            if part.stop - part.start < 2:
                continue
            points = list(zip(alphas[part].tolist(), signed[part].tolist()))
            curves.append(BoundaryCurve(kind=kind, points=points, closed_form=True))
    return curves


def boundary_triangular(
    kind: BoundaryKind,
    alpha_range: Tuple[float, float],
    samples: int,
    beta_range: Tuple[float, float] = (-DEFAULT_BETA_MAX, DEFAULT_BETA_MAX),
) -> List[BoundaryCurve]:
    """
    Closed-form Tr = +-2 curves of the triangular wave.

    TracePlus2: vertical lines alpha = k^2 (k >= 1) across beta_range,
    and beta = +-2 sqrt(|alpha|) for alpha <= 0.
    TraceMinus2: beta = +-2 |C(pi) / S(pi)|, which is 2 sqrt(alpha)|cot(pi sqrt(alpha))|
    for alpha > 0 and 2 sqrt(|alpha|) coth(pi sqrt(|alpha|)) for alpha < 0,
    sampled on each interval between the poles alpha = k^2.

    Args:
        kind: Which trace level.
        alpha_range: (alpha_lo, alpha_hi).
        samples: Points per sampled branch (>= 2).
        beta_range: (beta_lo, beta_hi); curves are cut where they leave it.
    """
    lo, hi = alpha_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidParameterError(f"alpha_range must be finite and ordered, got {alpha_range}")
    if samples < 2:
        raise InvalidParameterError(f"samples must be at least 2, got {samples}")
    if not beta_range[0] < beta_range[1]:
        raise InvalidParameterError(f"beta_range must be ordered, got {beta_range}")

    curves: List[BoundaryCurve] = []
    if kind is BoundaryKind.TRACE_PLUS_2:
        k = max(1, math.ceil(math.sqrt(max(lo, 0.0))))
        while k * k <= hi:
            alpha = float(k * k)
            points = [(alpha, float(beta_range[0])), (alpha, float(beta_range[1]))]
            curves.append(BoundaryCurve(kind=kind, points=points, closed_form=True))
            k += 1
        reach = max(abs(beta_range[0]), abs(beta_range[1]))
        left, right = max(lo, -reach ** 2 / 4.0), min(hi, 0.0)
        if left < right:
            alphas = np.linspace(left, right, samples)
            curves.extend(_mirrored_curves(kind, alphas, 2.0 * np.sqrt(np.abs(alphas)), beta_range))
        return curves

    # Poles of |C/S| at alpha = k^2, k >= 1
    poles = [float(k * k) for k in range(1, math.floor(math.sqrt(max(hi, 0.0))) + 1) if lo < k * k < hi]
    edges = [lo] + poles + [hi]
    for left, right in zip(edges, edges[1:]):
        alphas = np.linspace(left, right, samples)
        keep = np.array([a not in poles for a in alphas.tolist()])
        alphas = alphas[keep]
        c, s = cos_sin(alphas, math.pi)
        with np.errstate(divide="ignore"):
            betas = 2.0 * np.abs(c / s)
        curves.extend(_mirrored_curves(kind, alphas, betas, beta_range))
    return curves


def stability_gap_negative(alpha: float) -> Tuple[float, float]:
    """
    Range of |beta| that stabilizes the inverted pendulum at alpha < 0.

    Returns:
        (2 sqrt|alpha|, 2 sqrt|alpha| coth(pi sqrt|alpha|)).
    """
    if alpha >= 0:
        raise InvalidParameterError(f"the stabilization window needs alpha < 0, got {alpha}")
    root = math.sqrt(-alpha)
    return 2.0 * root, 2.0 * root / math.tanh(math.pi * root)


# --- Contoured boundaries ---
def _grid_axes(window: Window, resolution: Resolution) -> Tuple[np.ndarray, np.ndarray]:
    return (
        np.linspace(window.alpha_min, window.alpha_max, resolution.n_alpha),
        np.linspace(window.beta_min, window.beta_max, resolution.n_beta),
    )


def _edge_locator(f: Callable[[float, float], float], refine_tol: float):
    """Refines a sign change on a grid edge with Brent's method and checks the residual."""

    def locate(p0, p1, v0, v1):
        if v0 == 0.0:
            return p0
        if v1 == 0.0:
            return p1

        def along(s: float) -> float:
            return f(p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1]))

        try:
            s = brentq(along, 0.0, 1.0, xtol=1e-15, maxiter=100)
        except (ValueError, RuntimeError) as e:
            logger.debug("edge %s-%s not refined: %s", p0, p1, e)
            return None
        point = (p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1]))
        residual = abs(f(*point))
        if residual > refine_tol:
            logger.debug("dropping boundary point %s with residual %.3e", point, residual)
            return None
        return point

    return locate


def boundary_contour(
    w: Waveform,
    kind: BoundaryKind,
    window: Window,
    resolution: Resolution,
    refine_tol: float,
    cfg: Optional[IntegratorConfig] = None,
    corrected: bool = True,
) -> List[BoundaryCurve]:
    """
    Tr = +-2 curves by marching squares on the sampled trace, every crossing
    refined along its cell edge until |Tr -+ 2| <= refine_tol.
    """
    if refine_tol <= 0:
        raise InvalidParameterError(f"refine_tol must be positive, got {refine_tol}")
    alphas, betas = _grid_axes(window, resolution)
    target = kind.target
    values = trace_grid(w, alphas, betas, cfg, corrected) - target

    def f(alpha: float, beta: float) -> float:
        return point_trace(w, alpha, beta, cfg, corrected) - target

    polylines = extract_contours(alphas, betas, values, locate=_edge_locator(f, refine_tol), center=f)
    logger.info("extracted %d %s curves for %s", len(polylines), kind.value, w.label)
    return [BoundaryCurve(kind=kind, points=line, closed_form=False) for line in polylines]


def boundary_rectangular(
    n: int,
    kind: BoundaryKind,
    window: Window,
    resolution: Resolution,
    refine_tol: float,
    corrected: bool = True,
) -> List[BoundaryCurve]:
    """Contoured Tr = +-2 curves of RectangularApprox(n), see boundary_contour."""
    return boundary_contour(RectangularApprox(n=n), kind, window, resolution, refine_tol, corrected=corrected)


# --- Rectangular-wave audits ---
def identity_terms_A_B(alpha: float, n: int) -> IdentityTerms:
    """
    Brackets A (beta^4) and B (beta^2) of the rectangular Tr = -2 equation,
    each from its defining sum and from a factored form.
    """
    if alpha <= 0:
        raise InvalidParameterError(f"identity terms need alpha > 0, got {alpha}")
    k = math.sqrt(alpha)
    ramp = 2.0 * k / n
    a = (
        4.0 * math.sin(math.pi * k - ramp) ** 2
        + math.cos(2.0 * math.pi * k - 4.0 * ramp)
        - 2.0 * math.cos(2.0 * ramp)
        + math.cos(2.0 * math.pi * k)
    )
    a_factored = 2.0 * (1.0 - math.cos(2.0 * ramp)) * (1.0 - math.cos(2.0 * math.pi * k - 2.0 * ramp))
    b = 4.0 * math.sin(math.pi * k - ramp) ** 2 - 2.0 * math.cos(2.0 * ramp) + 2.0 * math.cos(2.0 * math.pi * k)
    b_factored = -8.0 * math.sin(ramp) * math.cos(math.pi * k) * math.sin(math.pi * k - ramp)
    b_printed = -8.0 * math.sin(2.0 * ramp) * math.cos(2.0 * math.pi * k) * math.sin(math.pi * k - ramp)
    return IdentityTerms(alpha=alpha, n=n, a=a, a_factored=a_factored, b=b, b_factored=b_factored, b_printed=b_printed)


def beta_axis_crossing(n: int, corrected: bool = True) -> float:
    """
    beta > 0 where the rectangular Tr = +2 curve meets alpha = 0:
    sqrt(2 pi n) / (n pi - 2), or sqrt(2 / (n pi - 2)) for the uncorrected form.
    """
    if corrected:
        return math.sqrt(2.0 * math.pi * n) / (n * math.pi - 2.0)
    return math.sqrt(2.0 / (n * math.pi - 2.0))


def find_beta_axis_crossing(n: int, corrected: bool = True) -> float:
    """Root-finds beta > 0 with Tr(0, beta) = 2 on the implemented rectangular trace."""

    def f(beta: float) -> float:
        return rectangular_trace(0.0, beta, n, corrected=corrected) - 2.0

    lo, hi = 1e-3, 1.0
    if f(lo) >= 0:
        raise PivotStabilityError(f"Tr(0, {lo}) - 2 is not negative for rect:{n}")
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise PivotStabilityError(f"no Tr = 2 crossing on alpha = 0 for rect:{n}")
    return brentq(f, lo, hi, xtol=1e-15, maxiter=200)


def axis_touchpoints(
    w: Waveform,
    alpha_range: Tuple[float, float],
    samples: int,
    cfg: Optional[IntegratorConfig] = None,
    tol: float = 1e-6,
) -> List[float]:
    """
    alpha values on beta = 0 where |Tr| reaches 2 from below (tongue anchors).
    Local minima of 2 - |Tr(alpha, 0)| on a sample grid are refined with a
    bounded scalar minimization and kept when the minimum is within tol of 0.
    """
    lo, hi = alpha_range
    alphas = np.linspace(lo, hi, samples)
    gap = 2.0 - np.abs(trace_grid(w, alphas, [0.0], cfg)[0])

    def g(alpha: float) -> float:
        return 2.0 - abs(point_trace(w, alpha, 0.0, cfg))

    found = []
    for i in range(1, samples - 1):
        if gap[i] < gap[i - 1] and gap[i] <= gap[i + 1]:
            result = minimize_scalar(g, bounds=(alphas[i - 1], alphas[i + 1]), method="bounded", options={"xatol": 1e-12})
            if abs(result.fun) <= tol:
                found.append(float(result.x))
    return found


def search_trace_minus2(
    n: int,
    window: Window,
    resolution: Resolution,
    exclude_beta: float = 1e-4,
    corrected: bool = True,
    tol: float = 1e-6,
) -> Minus2Search:
    """
    Dense grid search for Tr = -2 solutions of RectangularApprox(n) with |beta| >= exclude_beta.

    unstable_points counts nodes with Tr < -2 - tol (inside a subharmonic
    tongue, so Tr = -2 is crossed nearby); tangent_points counts nodes with
    |Tr + 2| <= tol.
    """
    alphas, betas = _grid_axes(window, resolution)
    A, B = np.meshgrid(alphas, betas)
    shifted = np.asarray(rectangular_trace(A, B, n, corrected=corrected)) + 2.0
    off_axis = np.abs(B) >= exclude_beta
    unstable = off_axis & (shifted < -tol)
    tangent = off_axis & (np.abs(shifted) <= tol)
    max_abs_beta = float(np.max(np.abs(B[unstable]))) if unstable.any() else 0.0
    return Minus2Search(
        n=n,
        corrected=corrected,
        window=window,
        exclude_beta=exclude_beta,
        unstable_points=int(unstable.sum()),
        tangent_points=int(tangent.sum()),
        max_abs_beta=max_abs_beta,
    )


# --- Diagram ---
def diagram(
    w: Waveform,
    window: Window,
    resolution: Resolution,
    tol: Optional[float] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> DiagramGrid:
    """
    Ince-Strutt diagram sampled at the grid nodes of window.

    Args:
        w: Pivot waveform.
        window: Parameter window.
        resolution: Node counts along alpha and beta.
        tol: Classification tolerance; 1e-9 (closed form) or 1e-6 (numeric) if None.
        cfg: Integrator settings for the cosine wave.

    Returns:
        A DiagramGrid with row-major traces and classes.
    """
    tol = tol if tol is not None else default_tol(w)
    alphas, betas = _grid_axes(window, resolution)
    traces = trace_grid(w, alphas, betas, cfg)
    classes = classify_array(traces, tol)
    logger.info("classified %d cells for %s", traces.size, w.label)
    return DiagramGrid(
        waveform=w,
        window=window,
        resolution=resolution,
        tol=tol,
        traces=traces.ravel().tolist(),
        classes=[StabilityKind(code) for code in classes.ravel().tolist()],
    )
