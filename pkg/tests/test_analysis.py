import math

import numpy as np
import pytest

from pagedcuckoo.analysis import (
    C_STAR_2L_OVER_L,
    C_STAR_3,
    C_STAR_4,
    FitRefusedError,
    TrialOutcome,
    aggregate,
    expected_page_requests,
    fit_sigmoid,
    poisson_success_estimate,
    sigmoid,
    significance_bound,
    unsuccessful_search_requests,
    w_histogram_stats,
)


# ---- Poisson estimate ------------------------------------------------


def test_poisson_single_cell_page():
    # Pr(Po(0.5) <= 1) = e^{-0.5} * (1 + 0.5)
    want = math.exp(-0.5) * 1.5
    assert poisson_success_estimate(0.5, 1, 1) == pytest.approx(want, abs=1e-12)


def test_poisson_single_page_no_powering():
    p1 = poisson_success_estimate(0.9, 50, 1)
    p4 = poisson_success_estimate(0.9, 50, 4)
    assert p4 == pytest.approx(p1**4, rel=1e-9)


def test_poisson_matches_direct_summation():
    for c, s in ((0.7, 10), (0.95, 100), (1.2, 30)):
        lam = c * s
        direct = sum(math.exp(-lam) * lam**i / math.factorial(i) for i in range(s + 1))
        assert poisson_success_estimate(c, s, 1) == pytest.approx(direct, rel=1e-9)


def test_poisson_monotone_in_c_and_t():
    cs = np.linspace(0.5, 1.4, 10)
    vals = [poisson_success_estimate(c, 100, 50) for c in cs]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
    ts = [1, 2, 5, 10, 100, 1000, 10**5]
    vals_t = [poisson_success_estimate(0.95, 100, t) for t in ts]
    assert all(a >= b - 1e-15 for a, b in zip(vals_t, vals_t[1:]))


def test_poisson_vanishes_for_many_pages():
    assert poisson_success_estimate(0.95, 100, 10**6) < 1e-12


def test_poisson_large_lambda_stable():
    # Far below capacity: probability ~1 without overflow.
    assert poisson_success_estimate(0.5, 10**5, 10) == pytest.approx(1.0, abs=1e-9)
    # Far above capacity: probability ~0.
    assert poisson_success_estimate(2.0, 10**4, 1) < 1e-100


def test_poisson_capacity_extension():
    # ell > 1 raises the per-page bound to s * ell.
    lo = poisson_success_estimate(1.8, 10, 1, ell=1)
    hi = poisson_success_estimate(1.8, 10, 1, ell=2)
    assert hi > lo
    lam = 18.0
    direct = sum(math.exp(-lam) * lam**i / math.factorial(i) for i in range(21))
    assert hi == pytest.approx(direct, rel=1e-9)


def test_poisson_validates_arguments():
    with pytest.raises(ValueError):
        poisson_success_estimate(0.9, 0, 1)
    with pytest.raises(ValueError):
        poisson_success_estimate(-0.1, 10, 1)


# ---- sigmoid fit ------------------------------------------------------


def synthetic_points(x, y, span=None, count=41):
    span = span if span is not None else max(6 * y, 0.02)
    cs = np.linspace(x - span, x + span, count)
    return [(float(c), float(sigmoid(c, x, y))) for c in cs]


@pytest.mark.parametrize("x", [0.6, 0.8, 0.99])
@pytest.mark.parametrize("y", [5e-4, 0.005, 0.05])
def test_fit_recovers_exact_model(x, y):
    fit = fit_sigmoid(synthetic_points(x, y))
    assert abs(fit.x - x) < 1e-6
    assert abs(fit.y - y) < 1e-6
    assert fit.sum_res < 1e-12


def test_fit_permutation_invariant():
    pts = synthetic_points(0.95, 0.002)
    fit1 = fit_sigmoid(pts)
    fit2 = fit_sigmoid(list(reversed(pts)))
    assert abs(fit1.x - fit2.x) < 1e-12
    assert fit1.sum_res == fit2.sum_res


def test_fit_handles_noisy_transition():
    rng = np.random.RandomState(0)
    pts = []
    for c, lam in synthetic_points(0.7, 0.004, span=0.03, count=31):
        noisy = min(1.0, max(0.0, lam + rng.normal(0, 0.03)))
        pts.append((c, noisy))
    fit = fit_sigmoid(pts)
    assert abs(fit.x - 0.7) < 0.005
    assert fit.y > 0


def test_fit_refuses_flat_data():
    with pytest.raises(FitRefusedError):
        fit_sigmoid([(0.9, 0.0), (0.91, 0.0), (0.92, 0.0), (0.93, 0.0)])
    with pytest.raises(FitRefusedError):
        fit_sigmoid([(0.9, 1.0), (0.91, 1.0), (0.92, 1.0), (0.93, 1.0)])
    with pytest.raises(FitRefusedError):
        fit_sigmoid([(0.9, 0.0), (0.91, 1.0)])


def test_fit_x_stays_in_data_neighborhood():
    pts = synthetic_points(0.93, 0.001, span=0.01)
    fit = fit_sigmoid(pts)
    cs = [p[0] for p in pts]
    assert min(cs) - 0.05 <= fit.x <= max(cs) + 0.05


# ---- significance bound ----------------------------------------------


def test_significance_reference_value():
    sig = significance_bound(10**6, 1e-5)
    assert sig.bound == pytest.approx(math.exp(-10), rel=1e-12)
    assert sig.bound == pytest.approx(4.54e-5, rel=1e-2)
    assert sig.exact <= sig.bound


def test_significance_single_trial():
    sig = significance_bound(1, 0.25)
    assert sig.exact == pytest.approx(0.75, abs=1e-12)


def test_significance_bound_dominates_exact():
    for a in (1, 10, 1000, 10**6):
        for p in (1e-7, 1e-4, 0.1, 0.9):
            sig = significance_bound(a, p)
            assert sig.exact <= sig.bound + 1e-15


def test_significance_small_p_limit():
    assert significance_bound(100, 1e-12).bound == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        significance_bound(0, 0.5)
    with pytest.raises(ValueError):
        significance_bound(10, 0.0)


# ---- page request formulas -------------------------------------------


def test_expected_page_requests_endpoints():
    assert expected_page_requests(1.0) == 1.0
    assert expected_page_requests(0.0) == 2.0
    assert expected_page_requests(0.75) == 1.25


def test_expected_page_requests_monotone_into_unit_band():
    grid = np.linspace(0, 1, 21)
    vals = [expected_page_requests(r) for r in grid]
    assert all(1.0 <= v <= 2.0 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        expected_page_requests(1.5)


def test_unsuccessful_search_all_quiet_pages():
    assert unsuccessful_search_requests({0: 1.0}, 3, 1000, 3) == 1.0


def test_unsuccessful_search_formula_value():
    hist = {0: 0.5, 25: 0.5}
    want = 1.0 + 0.5 * (3 * 25 / 1000) ** 3
    assert unsuccessful_search_requests(hist, 3, 1000, 3) == pytest.approx(want, abs=1e-15)
    # Saturates at one extra page request.
    assert unsuccessful_search_requests({2000: 1.0}, 3, 1000, 3) == 2.0
    with pytest.raises(ValueError):
        unsuccessful_search_requests({0: 0.7}, 3, 1000, 3)


# ---- aggregation ------------------------------------------------------


def test_aggregate_single_trial_variance_zero():
    stats = aggregate([TrialOutcome(success=True, r_p=0.9, alpha_p=0.8, st=4.0, pr=1.5)])
    assert stats.lam == 0.0
    assert stats.rp_mean == 0.9
    assert stats.rp_var == 0.0
    assert stats.st_var == 0.0


def test_aggregate_failure_rate():
    stats = aggregate([TrialOutcome(success=True, r_p=1.0), TrialOutcome(success=False)])
    assert stats.lam == 0.5
    assert stats.a == 2 and stats.failures == 1
    assert stats.rp_mean == 1.0  # failed trials excluded from means


def test_aggregate_means_and_variance():
    outcomes = [
        TrialOutcome(success=True, r_p=0.9, st=10.0),
        TrialOutcome(success=True, r_p=0.8, st=14.0),
    ]
    stats = aggregate(outcomes)
    assert stats.rp_mean == pytest.approx(0.85)
    assert stats.st_var == pytest.approx(np.var([10.0, 14.0], ddof=1))


def test_aggregate_pools_w_histogram():
    outcomes = [
        TrialOutcome(success=True, r_p=1.0, w_counts=np.array([0, 0, 2, 5])),
        TrialOutcome(success=True, r_p=1.0, w_counts=np.array([0, 2, 2, 9])),
    ]
    stats = aggregate(outcomes)
    assert sum(stats.w_histogram.values()) == pytest.approx(1.0, abs=1e-9)
    assert stats.w_histogram[0] == pytest.approx(3 / 8)
    assert stats.w_histogram[2] == pytest.approx(3 / 8)
    with pytest.raises(ValueError):
        aggregate([])


def test_w_histogram_stats_reports_both_means():
    hist = {0: 0.5, 10: 0.25, 30: 0.25}
    out = w_histogram_stats(hist, s=100)
    assert out["freq_w0"] == 0.5
    assert out["w_mean_all_pages"] == pytest.approx(10.0)
    assert out["w_mean_positive_pages"] == pytest.approx(20.0)
    assert out["pr_w_gt_0.1s"] == pytest.approx(0.25)


def test_threshold_constants_pinned():
    assert C_STAR_3 == 0.917935
    assert C_STAR_4 == 0.976770
    assert C_STAR_2L_OVER_L[10] == 0.999143
    assert len(C_STAR_2L_OVER_L) == 7
