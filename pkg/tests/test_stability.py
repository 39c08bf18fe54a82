import math

import numpy as np
import pytest

from src.core.errors import InvalidParameterError
from src.models.schemas import (
    BoundaryKind,
    Cosine,
    IntegratorConfig,
    RectangularApprox,
    Resolution,
    StabilityKind,
    StabilityParams,
    Triangular,
    Window,
)
from src.services.monodromy import rectangular_trace, triangular_trace
from src.services.stability import (
    axis_touchpoints,
    beta_axis_crossing,
    boundary_contour,
    boundary_rectangular,
    boundary_triangular,
    classify,
    classify_array,
    classify_point,
    default_tol,
    diagram,
    find_beta_axis_crossing,
    floquet_multipliers,
    identity_terms_A_B,
    search_trace_minus2,
    stability_gap_negative,
)


# --- Classification ---
@pytest.mark.parametrize(
    "trace,expected",
    [
        (0.5, StabilityKind.STABLE),
        (-1.999, StabilityKind.STABLE),
        (-3.0, StabilityKind.UNSTABLE),
        (2.0, StabilityKind.BOUNDARY),
        (-2.0 - 5e-10, StabilityKind.BOUNDARY),
        (2.0 + 2e-9, StabilityKind.UNSTABLE),
    ],
)
def test_classify(trace, expected):
    result = classify(trace, 1e-9)
    assert result.kind is expected
    assert result.trace == trace


def test_classify_needs_positive_tol():
    with pytest.raises(InvalidParameterError):
        classify(0.0, 0.0)


def test_classify_array_matches_scalar():
    traces = np.array([0.5, -3.0, 2.0, 1.0 - 1e-12])
    codes = classify_array(traces, 1e-9)
    assert codes.tolist() == [classify(t, 1e-9).kind.value for t in traces]


def test_default_tolerances():
    assert default_tol(Triangular()) == 1e-9
    assert default_tol(RectangularApprox(n=4)) == 1e-9
    assert default_tol(Cosine()) == 1e-6


def test_floquet_multipliers():
    """Tr = -3 gives real multipliers (-3 -+ sqrt 5)/2; |Tr| < 2 puts them on the unit circle."""
    big, small = floquet_multipliers(-3.0)
    assert big == pytest.approx((-3.0 - math.sqrt(5.0)) / 2.0)
    assert big * small == pytest.approx(1.0)
    a, b = floquet_multipliers(0.0)
    assert abs(a) == pytest.approx(1.0)
    assert abs(b) == pytest.approx(1.0)


# --- Point classification ---
def test_classify_point_triangular():
    result = classify_point(Triangular(), StabilityParams(alpha=0.25, beta=0.5))
    assert result.kind is StabilityKind.UNSTABLE
    assert result.trace == pytest.approx(-3.0)


def test_inverted_pendulum_stabilized():
    """Upright pendulums at small negative alpha are stabilized by a moderate beta."""
    assert classify_point(Cosine(), StabilityParams(alpha=-0.05, beta=0.5)).kind is StabilityKind.STABLE
    assert classify_point(RectangularApprox(n=4), StabilityParams(alpha=-0.01, beta=0.158)).kind is StabilityKind.STABLE
    assert classify_point(Triangular(), StabilityParams(alpha=-0.05, beta=0.6)).kind is StabilityKind.STABLE
    assert classify_point(Triangular(), StabilityParams(alpha=-0.05, beta=0.0)).kind is StabilityKind.UNSTABLE


# --- Triangular boundaries ---
def test_triangular_plus2_curves():
    """Vertical lines at alpha = 1 and 4, and beta = +-2 sqrt|alpha| for alpha <= 0."""
    curves = boundary_triangular(BoundaryKind.TRACE_PLUS_2, (-1.0, 5.0), 101, beta_range=(-4.0, 4.0))
    vertical = [c for c in curves if c.points[0][0] == c.points[-1][0]]
    assert sorted(c.points[0][0] for c in vertical) == [1.0, 4.0]
    assert all(c.points == [(c.points[0][0], -4.0), (c.points[0][0], 4.0)] for c in vertical)
    assert len(curves) == 4
    for curve in curves:
        assert curve.closed_form
        for alpha, beta in curve.points:
            assert float(triangular_trace(alpha, beta)) == pytest.approx(2.0, abs=1e-9)


def test_triangular_minus2_curves():
    """beta = 2 sqrt(alpha) |cot(pi sqrt(alpha))|, e.g. (1/16, 1/2)."""
    curves = boundary_triangular(BoundaryKind.TRACE_MINUS_2, (0.0, 1.0), 161, beta_range=(-4.0, 4.0))
    assert len(curves) == 2
    points = [point for curve in curves for point in curve.points]
    assert any(abs(a - 0.0625) < 1e-15 and abs(b - 0.5) < 1e-12 for a, b in points)
    assert all(abs(b) <= 4.0 for _, b in points)
    for alpha, beta in points:
        assert float(triangular_trace(alpha, beta)) == pytest.approx(-2.0, abs=1e-8)


def test_triangular_minus2_curves_split_at_poles():
    """The curves blow up at alpha = 1 and 4, so each side of a pole is its own curve."""
    curves = boundary_triangular(BoundaryKind.TRACE_MINUS_2, (0.5, 4.5), 200, beta_range=(-4.0, 4.0))
    for curve in curves:
        alphas = [a for a, _ in curve.points]
        assert not (min(alphas) < 1.0 < max(alphas))
        assert not (min(alphas) < 4.0 < max(alphas))


def test_boundary_triangular_validation():
    with pytest.raises(InvalidParameterError):
        boundary_triangular(BoundaryKind.TRACE_PLUS_2, (1.0, 0.0), 10)
    with pytest.raises(InvalidParameterError):
        boundary_triangular(BoundaryKind.TRACE_PLUS_2, (0.0, 1.0), 1)


def test_stability_gap_negative():
    low, high = stability_gap_negative(-0.05)
    assert low == pytest.approx(0.447214, rel=1e-5)
    assert high == pytest.approx(0.73805, rel=1e-4)
    # the window edges are the Tr = +2 and Tr = -2 curves
    assert float(triangular_trace(-0.05, low)) == pytest.approx(2.0, abs=1e-12)
    assert float(triangular_trace(-0.05, high)) == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        stability_gap_negative(0.1)


# --- Contoured boundaries ---
@pytest.mark.parametrize("corrected", [True, False])
def test_rectangular_plus2_contour_meets_beta_axis(corrected):
    """The refined contour crosses alpha = 0 at the closed-form crossing."""
    curves = boundary_rectangular(
        10, BoundaryKind.TRACE_PLUS_2, Window.from_tuple((-0.5, 0.5, -0.5, 0.5)),
        Resolution(n_alpha=11, n_beta=21), 1e-8, corrected=corrected,
    )
    expected = beta_axis_crossing(10, corrected)
    points = [point for curve in curves for point in curve.points]
    assert any(abs(a) < 1e-12 and abs(b - expected) < 1e-6 for a, b in points)
    assert all(not c.closed_form for c in curves)


def test_contour_points_lie_on_the_curve():
    """Every refined point satisfies |Tr + 2| <= refine_tol."""
    curves = boundary_contour(
        Triangular(), BoundaryKind.TRACE_MINUS_2, Window.from_tuple((0.05, 0.95, 0.0, 2.0)),
        Resolution(n_alpha=31, n_beta=31), 1e-8,
    )
    assert curves
    for curve in curves:
        for alpha, beta in curve.points:
            assert abs(float(triangular_trace(alpha, beta)) + 2.0) <= 1e-8


def test_contour_rejects_bad_refine_tol():
    with pytest.raises(InvalidParameterError):
        boundary_contour(
            Triangular(), BoundaryKind.TRACE_PLUS_2, Window.from_tuple((0.0, 1.0, 0.0, 1.0)),
            Resolution(n_alpha=5, n_beta=5), 0.0,
        )


# --- Rectangular audits ---
@pytest.mark.parametrize("alpha", [0.05, 0.2, 0.25, 0.9, 2.7])
@pytest.mark.parametrize("n", [4, 10, 20, 100])
def test_identity_brackets_factor(alpha, n):
    """The A and B brackets equal their factored forms, and A >= 0."""
    terms = identity_terms_A_B(alpha, n)
    assert terms.a == pytest.approx(terms.a_factored, abs=1e-12)
    assert terms.b == pytest.approx(terms.b_factored, abs=1e-12)
    assert terms.a >= -1e-12


def test_published_b_factorization_is_wrong():
    """At alpha = 0.2, n = 20 the bracket is negative while the published product is positive."""
    terms = identity_terms_A_B(0.2, 20)
    assert terms.b == pytest.approx(-0.0577, abs=5e-4)
    assert terms.b_printed == pytest.approx(0.661, abs=1e-3)


def test_identity_terms_need_positive_alpha():
    with pytest.raises(InvalidParameterError):
        identity_terms_A_B(0.0, 10)


def test_beta_axis_crossings():
    assert beta_axis_crossing(10) == pytest.approx(0.269471, abs=1e-6)
    assert beta_axis_crossing(10, corrected=False) == pytest.approx(0.260749, abs=1e-6)
    for corrected in (True, False):
        root = find_beta_axis_crossing(10, corrected)
        assert root == pytest.approx(beta_axis_crossing(10, corrected), abs=1e-10)
        assert rectangular_trace(0.0, root, 10, corrected=corrected) == pytest.approx(2.0, abs=1e-12)


def test_axis_touchpoints_triangular():
    """With beta = 0 the tongues start at alpha = k^2 / 4."""
    points = axis_touchpoints(Triangular(), (0.05, 4.2), 421)
    assert points == pytest.approx([0.25, 1.0, 2.25, 4.0], abs=1e-6)


def test_axis_touchpoints_do_not_depend_on_waveform():
    """Without forcing every waveform is the free oscillator, so the anchors coincide."""
    assert axis_touchpoints(RectangularApprox(n=10), (0.05, 4.2), 421) == pytest.approx([0.25, 1.0, 2.25, 4.0], abs=1e-6)
    points = axis_touchpoints(Cosine(), (0.05, 2.4), 236, cfg=IntegratorConfig(steps_per_period=512))
    assert points == pytest.approx([0.25, 1.0, 2.25], abs=1e-6)


def test_rectangular_minus2_tongue_is_thin():
    """Near alpha = 1/4, Tr < -2 only for |beta| well below 1/sqrt(n)."""
    search = search_trace_minus2(
        10, Window.from_tuple((0.2, 0.3, -0.5, 0.5)), Resolution(n_alpha=101, n_beta=101)
    )
    assert search.unstable_points > 0
    assert 0.0 < search.max_abs_beta < 1.0 / math.sqrt(10)
    assert search.corrected


# --- Diagram ---
def test_triangular_diagram():
    grid = diagram(Triangular(), Window.from_tuple((-1.0, 4.0, -4.0, 4.0)), Resolution(n_alpha=101, n_beta=81))
    assert len(grid.classes) == 101 * 81
    assert grid.tol == 1e-9
    tongue = grid.cell_at(0.25, 0.5)
    assert tongue.kind is StabilityKind.UNSTABLE
    assert tongue.trace == pytest.approx(-3.0)
    assert grid.cell_at(1.0, 3.0).kind is StabilityKind.BOUNDARY
    assert grid.cell_at(0.5, 0.0).kind is StabilityKind.STABLE
    assert grid.cell_at(-0.05, 0.6).kind is StabilityKind.STABLE
    assert grid.cell_at(-0.05, 1.0).kind is StabilityKind.UNSTABLE


def test_diagram_is_symmetric_in_beta():
    grid = diagram(RectangularApprox(n=4), Window.from_tuple((-1.0, 4.0, -2.0, 2.0)), Resolution(n_alpha=26, n_beta=21))
    traces = grid.trace_array()
    np.testing.assert_allclose(traces, traces[::-1, :], rtol=1e-12, atol=1e-12)


def test_cosine_diagram_first_tongue():
    """At beta = 0.1 the first Mathieu tongue spans roughly (0.199, 0.299)."""
    grid = diagram(
        Cosine(), Window.from_tuple((0.15, 0.35, 0.0, 0.2)), Resolution(n_alpha=21, n_beta=5),
        cfg=IntegratorConfig(steps_per_period=512),
    )
    assert grid.tol == 1e-6
    assert grid.cell_at(0.25, 0.1).kind is StabilityKind.UNSTABLE
    assert grid.cell_at(0.15, 0.1).kind is StabilityKind.STABLE
    assert grid.cell_at(0.35, 0.1).kind is StabilityKind.STABLE
