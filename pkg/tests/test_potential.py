import math

import numpy as np
import pytest

from plapx.errors import ConfigurationError
from plapx.exponent import ExponentField, validate
from plapx.potential import (
    CheckReport,
    PotentialSpec,
    builtin_j1,
    check_asymptotic_iv,
    check_growth,
    check_h1,
    check_h2,
    clarke_interval,
    eval_dj,
    eval_j,
    generalized_dd,
    sampled_dd_estimate,
)

COORDS = np.linspace(0.0, 1.0, 9)[:, None]


def _r_field(value, n=9):
    return ExponentField(np.full(n, float(value)), 1)


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_pieces_must_cover_real_line():
    with pytest.raises(ConfigurationError, match="cover"):
        PotentialSpec.from_pieces([(0.0, math.inf, "t^2")])


def test_pieces_must_be_contiguous():
    with pytest.raises(ConfigurationError, match="contiguous"):
        PotentialSpec.from_pieces([(-math.inf, 0.0, "t^2"),
                                   (1.0, math.inf, "t^2")])


def test_pieces_must_join_continuously():
    with pytest.raises(ConfigurationError, match="discontinuous"):
        PotentialSpec.from_pieces([(-math.inf, 1.0, "t^2"),
                                   (1.0, math.inf, "t^2 + 1")])


def test_zero_at_zero_enforced():
    with pytest.raises(ConfigurationError, match=r"j\(x, 0\) = 0"):
        PotentialSpec.smooth("t + 1")


def test_describe_lists_pieces_and_declared():
    spec = builtin_j1(1.0, 2.0, 4.0)
    d = spec.describe()
    assert d["name"] == "j1"
    assert len(d["pieces"]) == 3
    assert d["breakpoints"] == [-1.0, 1.0]
    assert d["declared"]["nu"] == 1.0


def test_builtin_j1_parameter_validation():
    with pytest.raises(ConfigurationError, match="nu > 0"):
        builtin_j1(0.0, 2.0, 4.0)
    with pytest.raises(ConfigurationError, match=r"h\(x\) > 1"):
        builtin_j1(1.0, 1.0, 4.0)
    with pytest.raises(ConfigurationError, match="h\\+ < r_plus"):
        builtin_j1(1.0, 5.0, 4.0)


# ---------------------------------------------------------------------------
# evaluation and Clarke calculus
# ---------------------------------------------------------------------------

def test_eval_j1_both_branches():
    spec = builtin_j1(1.0, 2.0, 4.0)
    # inside: -|t|^2; outside: -|t|^4 - nu + 1 = -|t|^4 (nu = 1)
    assert abs(eval_j(spec, 0.0, 0.5) - (-0.25)) < 1e-14
    assert abs(eval_j(spec, 0.0, 2.0) - (-16.0)) < 1e-12
    assert abs(eval_j(spec, 0.0, -2.0) - (-16.0)) < 1e-12


def test_derivative_off_breakpoints():
    spec = builtin_j1(1.0, 2.0, 4.0)
    assert abs(eval_dj(spec, 0.0, 0.5) - (-1.0)) < 1e-14      # -2t
    assert abs(eval_dj(spec, 0.0, 2.0) - (-32.0)) < 1e-12     # -4t^3


def test_clarke_interval_at_kink():
    # one-sided slopes at t = 1: inner -2t -> -2, outer -4t^3 -> -4
    spec = builtin_j1(1.0, 2.0, 4.0)
    iv = clarke_interval(spec, 0.0, 1.0)
    assert abs(iv.lower - (-4.0)) < 1e-12
    assert abs(iv.upper - (-2.0)) < 1e-12
    assert iv.contains(-3.0)
    assert not iv.contains(-5.0)


def test_clarke_interval_smooth_point_is_degenerate():
    spec = builtin_j1(1.0, 2.0, 4.0)
    iv = clarke_interval(spec, 0.0, 0.3)
    assert abs(iv.lower - iv.upper) < 1e-14


def test_clarke_bounds_vectorized_matches_scalar():
    spec = builtin_j1(1.0, 2.0, 4.0)
    ts = np.array([-2.0, -1.0, 0.0, 0.7, 1.0, 3.0])
    lo, hi = spec.clarke_bounds(np.zeros((ts.size, 1)), ts)
    for k, t in enumerate(ts):
        iv = clarke_interval(spec, 0.0, float(t))
        assert abs(lo[k] - iv.lower) < 1e-12
        assert abs(hi[k] - iv.upper) < 1e-12


def test_generalized_dd_is_support_function():
    spec = builtin_j1(1.0, 2.0, 4.0)
    # at the kink the interval is [-4, -2]
    assert abs(generalized_dd(spec, 0.0, 1.0, +1.0) - (-2.0)) < 1e-12
    assert abs(generalized_dd(spec, 0.0, 1.0, -1.0) - 4.0) < 1e-12


def test_sampled_dd_agrees_with_support_function():
    spec = builtin_j1(1.0, 2.0, 4.0)
    rng = np.random.default_rng(7)
    for t, d in [(1.0, 1.0), (1.0, -1.0), (0.5, 1.0), (2.0, -1.0)]:
        exact = generalized_dd(spec, 0.0, t, d)
        est = sampled_dd_estimate(spec, 0.0, t, d, rng)
        # the scan looks at base points within O(step) of t, so the estimate
        # brackets the support-function value to the neighborhood width
        assert abs(est - exact) <= 1e-2 * max(1.0, abs(exact))


def test_spatially_varying_kink():
    # breakpoint slopes vary with x through the h-exponent
    spec = builtin_j1(1.0, "2 + abs(x)", 5.0)
    iv0 = clarke_interval(spec, 0.0, 1.0)
    iv1 = clarke_interval(spec, 1.0, 1.0)
    assert abs(iv0.upper - (-2.0)) < 1e-12   # h(0) = 2
    assert abs(iv1.upper - (-3.0)) < 1e-12   # h(1) = 3


# ---------------------------------------------------------------------------
# hypothesis checkers
# ---------------------------------------------------------------------------

def test_growth_bound_passes_for_pure_power():
    # j = -5|t|^5: |dj| = 25|t|^4 = c1 |t|^{r-1} with c1 = 25, r = 5
    spec = PotentialSpec.smooth("-5*abs(t)^5")
    rep = check_growth(spec, 25.0, _r_field(5.0), COORDS)
    assert rep.passed
    assert rep.decisive <= 1.0 + 1e-12


def test_growth_bound_fails_when_constant_too_small():
    spec = PotentialSpec.smooth("-5*abs(t)^5")
    rep = check_growth(spec, 24.0, _r_field(5.0), COORDS)
    assert not rep.passed
    assert rep.decisive > 1.0


def test_growth_bound_reports_j1_near_zero_violation():
    # |dj|(t) = nu h |t|^{h-1} near zero beats c1 |t|^{r-1} whenever h < r:
    # the ratio blows up like |t|^{h-r}; the checker reports, never hides
    spec = builtin_j1(1.0, 2.0, 5.0)
    rep = check_growth(spec, 1.0, _r_field(5.0), COORDS)
    assert not rep.passed
    assert rep.decisive == pytest.approx(2.0e18, rel=1e-6)
    assert abs(rep.worst_t) == pytest.approx(1e-6)


def test_growth_bound_enforces_exponent_ordering():
    spec = PotentialSpec.smooth("-5*abs(t)^5")
    p_summary = validate(ExponentField(np.full(9, 6.0), 1))
    with pytest.raises(ConfigurationError, match="max p < min r"):
        check_growth(spec, 25.0, _r_field(5.0), COORDS, p_summary=p_summary)


def test_asymptotic_iv_j1_values():
    # tail of j1 with nu=1: j = -|t|^5, max_v (vt - j) / |t|^5 -> -4
    spec = builtin_j1(1.0, 2.0, 5.0)
    r5 = _r_field(5.0)
    rep_ok = check_asymptotic_iv(spec, 3.9, r5, COORDS)
    assert rep_ok.passed
    assert rep_ok.decisive == pytest.approx(-4.0, rel=1e-6)
    rep_bad = check_asymptotic_iv(spec, 4.1, r5, COORDS)
    assert not rep_bad.passed


def test_asymptotic_iv_fails_for_zero_potential():
    # j = 0: ratio 0 can never sit below a negative threshold
    spec = PotentialSpec.smooth("0")
    rep = check_asymptotic_iv(spec, 0.5, _r_field(5.0), COORDS)
    assert not rep.passed
    assert rep.decisive == pytest.approx(0.0, abs=1e-12)


def test_asymptotic_iv_echoes_declared_margin():
    spec = builtin_j1(1.0, 2.0, 5.0, declared={"c1": 1.0})
    rep = check_asymptotic_iv(spec, 3.9, _r_field(5.0), COORDS)
    assert rep.details["c_above_2c1"] is True


def test_h1_ratio_is_exactly_minus_nu():
    spec = builtin_j1(1.0, 2.0, 5.0)
    h2 = _r_field(2.0)
    rep = check_h1(spec, 1.0, h2, COORDS)
    assert rep.passed
    assert rep.decisive == pytest.approx(-1.0, abs=1e-12)
    rep_bad = check_h1(spec, 1.1, h2, COORDS)
    assert not rep_bad.passed


def test_h1_enforces_h_ordering():
    spec = builtin_j1(1.0, 2.0, 5.0)
    with pytest.raises(ConfigurationError, match=r"h\(x\) > 1"):
        check_h1(spec, 1.0, _r_field(1.0), COORDS)
    p_summary = validate(ExponentField(np.full(9, 1.5), 1))
    with pytest.raises(ConfigurationError, match="h\\+ < min p"):
        check_h1(spec, 1.0, _r_field(2.0), COORDS, p_summary=p_summary)


def test_h2_split_around_true_coefficient():
    spec = PotentialSpec.smooth("-5*abs(t)^5")
    r5 = _r_field(5.0)
    assert check_h2(spec, 4.9, r5, COORDS).passed
    assert not check_h2(spec, 5.1, r5, COORDS).passed


def test_check_report_to_dict_merges_details():
    spec = PotentialSpec.smooth("-5*abs(t)^5")
    rep = check_h2(spec, 4.9, _r_field(5.0), COORDS)
    d = rep.to_dict()
    assert isinstance(rep, CheckReport)
    assert d["name"] == "tail-negativity"
    assert d["mu"] == 4.9
    assert "decisive" in d and "slack" in d
