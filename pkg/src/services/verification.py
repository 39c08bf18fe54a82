import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.optimize import brentq

from src.core.config import VERIFY_SEED
from src.core.errors import InvalidParameterError
from src.models.schemas import (
    Cosine,
    IntegratorConfig,
    RectangularApprox,
    Resolution,
    StabilityKind,
    StabilityParams,
    Triangular,
    Window,
)
from src.services.monodromy import (
    closed_form_trace,
    monodromy_product,
    rectangular_large_n_coefficient,
    trace_triangular_closed,
)
from src.services.numeric import mollified_product_trace, mollified_trace, monodromy_numeric_batch
from src.services.stability import (
    axis_touchpoints,
    beta_axis_crossing,
    classify_point,
    find_beta_axis_crossing,
    identity_terms_A_B,
    point_trace,
    search_trace_minus2,
    stability_gap_negative,
)

logger = logging.getLogger(__name__)


class CheckResult(BaseModel):
    """One row of the verification report: passed iff measured <= limit."""
    suite: str
    check: str
    measured: float
    limit: float
    passed: bool


class VerificationReport(BaseModel):
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def first_failure(self) -> Optional[CheckResult]:
        return next((check for check in self.checks if not check.passed), None)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([check.model_dump() for check in self.checks], columns=list(CheckResult.model_fields))
        frame["status"] = frame["passed"].map({True: "pass", False: "FAIL"})
        return frame.drop(columns="passed")


def _check(suite: str, check: str, measured: float, limit: float) -> CheckResult:
    passed = bool(math.isfinite(measured) and measured <= limit)
    logger.debug("%s/%s: %.3e (limit %.3e) %s", suite, check, measured, limit, "pass" if passed else "FAIL")
    return CheckResult(suite=suite, check=check, measured=float(measured), limit=float(limit), passed=passed)


def _flag(suite: str, check: str, ok: bool) -> CheckResult:
    """Boolean check reported as 0 (pass) or 1 (fail) against limit 0."""
    return _check(suite, check, 0.0 if ok else 1.0, 0.0)


# --- Suites ---
def closed_vs_product(perturb: float = 0.0, grid: int = 50) -> List[CheckResult]:
    """Closed-form traces against transfer-matrix products on a seeded random grid."""
    rng = np.random.default_rng(VERIFY_SEED)
    alphas = rng.uniform(-4.0, 9.0, size=grid)
    alphas = np.where(np.abs(alphas) < 1e-3, 1e-3, alphas)
    betas = rng.uniform(-4.0, 4.0, size=grid)

    results = []
    for w in [Triangular()] + [RectangularApprox(n=n) for n in (1, 4, 10, 100)]:
        worst = 0.0
        for alpha in alphas.tolist():
            for beta in betas.tolist():
                product = monodromy_product(w, StabilityParams(alpha=alpha, beta=beta)).matrix
                closed = float(closed_form_trace(w, alpha, beta)) + perturb
                scale = max(1.0, max(abs(x) for row in product.rows() for x in row))
                worst = max(worst, abs(product.trace() - closed) / scale)
        results.append(_check("closed-vs-product", f"{w.label} max relative |dTr|", worst, 1e-9))
    return results


def numeric_oracle(perturb: float = 0.0, grid: int = 20, steps: int = 4096) -> List[CheckResult]:
    """Batch RK4 monodromy traces against the closed forms."""
    A, B = np.meshgrid(np.linspace(-1.0, 4.0, grid), np.linspace(-2.0, 2.0, grid))
    cfg = IntegratorConfig(steps_per_period=steps)
    results = []
    for w in (Triangular(), RectangularApprox(n=4), RectangularApprox(n=10)):
        closed = np.asarray(closed_form_trace(w, A, B)) + perturb
        numeric = monodromy_numeric_batch(w, A, B, cfg)
        worst = float(np.max(np.abs(numeric - closed) / np.maximum(1.0, np.abs(closed))))
        results.append(_check("numeric-oracle", f"{w.label} max relative |dTr|", worst, 1e-8))
    return results


def _mollifier_points(count: int) -> List[StabilityParams]:
    """Seeded points whose first-order mollification error is well away from zero."""
    rng = np.random.default_rng(VERIFY_SEED)
    points: List[StabilityParams] = []
    while len(points) < count:
        alpha, beta = rng.uniform(0.1, 1.5), rng.uniform(0.2, 0.6)
        if abs(math.sin(2.0 * math.pi * math.sqrt(alpha))) > 0.5:
            points.append(StabilityParams(alpha=alpha, beta=beta))
    return points


def mollification(perturb: float = 0.0) -> List[CheckResult]:
    """Smoothed impulses converge to the jump rule: error halves with epsilon."""
    w = Triangular()
    cfg = IntegratorConfig()
    epsilons = (0.1, 0.05, 0.025)
    results = []
    worst_rk4 = 0.0
    for k, p in enumerate(_mollifier_points(5)):
        exact = trace_triangular_closed(p) + perturb
        smoothed = [mollified_trace(w, p, eps, cfg) for eps in epsilons]
        errors = [abs(trace - exact) for trace in smoothed]
        ratios = [a / b for a, b in zip(errors, errors[1:])]
        worst = max(abs(r - 2.0) for r in ratios)
        results.append(_check("mollification", f"point {k} (a={p.alpha:.4f}, b={p.beta:.4f}) |ratio - 2|", worst, 0.5))
        for eps, trace in zip(epsilons, smoothed):
            worst_rk4 = max(worst_rk4, abs(trace - mollified_product_trace(w, p, eps)))
    # The integrator resolves the smoothed pulses at every width
    results.append(_check("mollification", "max |RK4 - exact pulse trace|", worst_rk4, 1e-7))

    # At alpha = 1/4 the first-order term vanishes; the error still shrinks monotonically
    p = StabilityParams(alpha=0.25, beta=0.5)
    exact = trace_triangular_closed(p) + perturb
    errors = [abs(mollified_trace(w, p, eps, cfg) - exact) for eps in (0.2, 0.1, 0.05, 0.025)]
    results.append(_flag("mollification", "monotone decrease at (0.25, 0.5)", all(b < a for a, b in zip(errors, errors[1:]))))

    # First-order error, so one Richardson step recovers the rect:4 Dirac trace
    rect, p = RectangularApprox(n=4), StabilityParams(alpha=0.5, beta=0.3)
    extrapolated = 2.0 * mollified_trace(rect, p, 0.0125, cfg) - mollified_trace(rect, p, 0.025, cfg)
    exact = float(closed_form_trace(rect, p.alpha, p.beta)) + perturb
    results.append(_check("mollification", "rect:4 Richardson error at (0.5, 0.3)", abs(extrapolated - exact), 1e-4))
    return results


def ab_identity(perturb: float = 0.0, samples: int = 10_000) -> List[CheckResult]:
    """Factored forms of the rectangular Tr = -2 brackets, and their signs."""
    rng = np.random.default_rng(VERIFY_SEED)
    alphas = rng.uniform(1e-3, 9.0, size=samples)
    orders = rng.integers(1, 1001, size=samples)
    worst_a, worst_b, min_a = 0.0, 0.0, math.inf
    for alpha, n in zip(alphas.tolist(), orders.tolist()):
        terms = identity_terms_A_B(alpha, n)
        worst_a = max(worst_a, abs(terms.a + perturb - terms.a_factored))
        worst_b = max(worst_b, abs(terms.b - terms.b_factored))
        min_a = min(min_a, terms.a)

    min_printed = math.inf
    for n in (20, 50, 100, 200, 1000):
        for alpha in np.linspace(0.2, 0.3, 101).tolist():
            min_printed = min(min_printed, identity_terms_A_B(alpha, n).b_printed)
    return [
        _check("ab-identity", "max |A - factored A|", worst_a, 1e-12),
        _check("ab-identity", "max |B - factored B|", worst_b, 1e-12),
        _check("ab-identity", "-min A", -min_a, 1e-12),
        _check("ab-identity", "-min printed B on [0.2, 0.3], n >= 20", -min_printed, 0.0),
    ]


def beta_parity(perturb: float = 0.0) -> List[CheckResult]:
    """Traces are even in beta."""
    rng = np.random.default_rng(VERIFY_SEED)
    alphas = rng.uniform(-1.0, 4.0, size=25)
    betas = rng.uniform(0.0, 3.0, size=25)
    results = []
    for w in (Triangular(), RectangularApprox(n=10)):
        plus = np.asarray(closed_form_trace(w, alphas, betas)) + perturb
        minus = np.asarray(closed_form_trace(w, alphas, -betas))
        worst = float(np.max(np.abs(plus - minus) / np.maximum(1.0, np.abs(plus))))
        results.append(_check("beta-parity", f"{w.label} closed form", worst, 1e-12))

    cfg = IntegratorConfig()
    plus = monodromy_numeric_batch(Cosine(), alphas[:6], betas[:6], cfg) + perturb
    minus = monodromy_numeric_batch(Cosine(), alphas[:6], -betas[:6], cfg)
    worst = float(np.max(np.abs(plus - minus) / np.maximum(1.0, np.abs(plus))))
    results.append(_check("beta-parity", "cosine numeric", worst, 1e-8))
    return results


def axis_crossings(perturb: float = 0.0) -> List[CheckResult]:
    """Tongue anchors on beta = 0, the (1/16, 1/2) boundary point, rectangular crossings of alpha = 0."""
    results = []
    expected = [0.25, 1.0, 2.25, 4.0]
    samples = 421
    spacing = (4.2 - 0.05) / (samples - 1)
    found = axis_touchpoints(Triangular(), (0.05, 4.2), samples)
    if len(found) == len(expected):
        worst = max(abs(a - b) for a, b in zip(found, expected))
    else:
        worst = math.inf
    results.append(_check("axis-crossings", "triangular touchpoints at 1/4, 1, 9/4, 4", worst, spacing))

    residual = abs(trace_triangular_closed(StabilityParams(alpha=1.0 / 16.0, beta=0.5)) + perturb + 2.0)
    results.append(_check("axis-crossings", "triangular Tr(1/16, 1/2) = -2", residual, 1e-10))

    for corrected in (True, False):
        form = "transfer-matrix" if corrected else "uncorrected"
        worst = max(
            abs(find_beta_axis_crossing(n, corrected=corrected) - beta_axis_crossing(n, corrected=corrected) - perturb)
            for n in (4, 10, 20, 100)
        )
        results.append(_check("axis-crossings", f"rect {form} crossing of alpha = 0", worst, 1e-5))
    return results


def large_n(perturb: float = 0.0, n: int = 1000) -> List[CheckResult]:
    """Tr / n^2 approaches 4 beta^4 S(pi)^2."""
    p = StabilityParams(alpha=0.3, beta=0.5)
    scaled = (float(closed_form_trace(RectangularApprox(n=n), p.alpha, p.beta)) + perturb) / n ** 2
    coefficient = rectangular_large_n_coefficient(p)
    return [_check("large-n", f"rect:{n} relative |Tr/n^2 - c|", abs(scaled - coefficient) / coefficient, 0.02)]


def stability_gap(perturb: float = 0.0, alpha: float = -0.05) -> List[CheckResult]:
    """The inverted pendulum is stable exactly between the two boundary curves."""
    w = Triangular()
    lower, upper = stability_gap_negative(alpha)
    trace_lower = trace_triangular_closed(StabilityParams(alpha=alpha, beta=lower)) + perturb
    trace_upper = trace_triangular_closed(StabilityParams(alpha=alpha, beta=upper)) + perturb
    inside = classify_point(w, StabilityParams(alpha=alpha, beta=0.5 * (lower + upper))).kind
    below = classify_point(w, StabilityParams(alpha=alpha, beta=0.9 * lower)).kind
    above = classify_point(w, StabilityParams(alpha=alpha, beta=1.1 * upper)).kind
    return [
        _check("stability-gap", f"Tr = 2 at beta = {lower:.6f}", abs(trace_lower - 2.0), 1e-10),
        _check("stability-gap", f"Tr = -2 at beta = {upper:.6f}", abs(trace_upper + 2.0), 1e-10),
        _flag("stability-gap", "stable inside, unstable outside",
              inside is StabilityKind.STABLE and below is StabilityKind.UNSTABLE and above is StabilityKind.UNSTABLE),
    ]


def _cosine_tongue_edges(beta: float, steps: int) -> List[float]:
    cfg = IntegratorConfig(steps_per_period=steps)

    def f(alpha: float) -> float:
        return abs(point_trace(Cosine(), alpha, beta, cfg)) - 2.0

    return [brentq(f, 0.15, 0.25, xtol=1e-7), brentq(f, 0.25, 0.35, xtol=1e-7)]


def cosine_tongue(perturb: float = 0.0, beta: float = 0.1) -> List[CheckResult]:
    """Principal subharmonic tongue of the Mathieu case, stable under step halving."""
    cfg = IntegratorConfig()
    unforced = monodromy_numeric_batch(Cosine(), [0.3, 1.7], [0.0, 0.0], cfg) + perturb
    exact = 2.0 * np.cos(2.0 * np.pi * np.sqrt([0.3, 1.7]))
    coarse = _cosine_tongue_edges(beta, 1024)
    fine = _cosine_tongue_edges(beta, 2048)
    centre = classify_point(Cosine(), StabilityParams(alpha=0.25, beta=beta)).kind
    return [
        _check("cosine-tongue", "unforced trace vs 2 cos(2 pi sqrt(alpha))", float(np.max(np.abs(unforced - exact))), 1e-8),
        _check("cosine-tongue", "tongue edges under step halving", max(abs(a - b) for a, b in zip(coarse, fine)), 1e-3),
        _flag("cosine-tongue", f"unstable at (0.25, {beta}), edges {fine[0]:.4f} / {fine[1]:.4f} inside (0.15, 0.35)",
              centre is StabilityKind.UNSTABLE and 0.15 < fine[0] < 0.25 < fine[1] < 0.35),
    ]


def rect_neg2_search(n: int = 100) -> List[CheckResult]:
    """
    Tr = -2 away from beta = 0 near alpha = 1/4: absent for the uncorrected
    rectangular form, a thin tongue of width below 1/sqrt(n) for the transfer-matrix trace.
    """
    window = Window.from_tuple((0.2, 0.3, -0.5, 0.5))
    resolution = Resolution(n_alpha=201, n_beta=401)
    uncorrected = search_trace_minus2(n, window, resolution, corrected=False)
    corrected = search_trace_minus2(n, window, resolution, corrected=True)
    logger.info(
        "rect:%d: %d uncorrected and %d transfer-matrix grid points below Tr = -2",
        n, uncorrected.unstable_points, corrected.unstable_points,
    )
    return [
        _check("rect-neg2-search", f"rect:{n} uncorrected: no nontrivial Tr=-2 solutions near alpha=0.25",
               float(uncorrected.unstable_points), 0.0),
        _check("rect-neg2-search", f"rect:{n} transfer-matrix tongue max |beta| vs 1/sqrt(n)",
               corrected.max_abs_beta, 1.0 / math.sqrt(n)),
    ]


SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "closed-vs-product": closed_vs_product,
    "numeric-oracle": numeric_oracle,
    "mollification": mollification,
    "ab-identity": ab_identity,
    "beta-parity": beta_parity,
    "axis-crossings": axis_crossings,
    "large-n": large_n,
    "stability-gap": stability_gap,
    "cosine-tongue": cosine_tongue,
    "rect-neg2-search": rect_neg2_search,
}


def run_verification(
    suites: Optional[Sequence[str]] = None,
    n: int = 100,
    perturb: float = 0.0,
) -> VerificationReport:
    """
    Runs the named suites (all of them if None) and collects their checks.

    Args:
        suites: Suite names from SUITES.
        n: Rectangular order for the rect-neg2-search suite.
        perturb: Offset added to the traces under comparison, to exercise the failure path
            (the grid search of rect-neg2-search is not perturbed).
    """
    names = list(suites) if suites else list(SUITES)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise InvalidParameterError(f"unknown verification suite(s) {unknown}, expected one of {sorted(SUITES)}")

    checks: List[CheckResult] = []
    for name in names:
        logger.info("running verification suite %s", name)
        if name == "rect-neg2-search":
            checks.extend(rect_neg2_search(n=n))
        else:
            checks.extend(SUITES[name](perturb=perturb))
    return VerificationReport(checks=checks)
