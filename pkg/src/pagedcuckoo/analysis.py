"""Numerical analysis behind the experiments.

Covers the Poisson estimate for the no-backup success probability, the
sigmoid fit locating load thresholds, the zero-failure significance
bound, expected page-request formulas for searches, and aggregation of
trial outcomes.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

# Known load thresholds for standard k-ary cuckoo hashing, used as
# reference lines by the experiment drivers.
C_STAR_3 = 0.917935
C_STAR_4 = 0.976770
# c*_{2,ell} / ell for two choices and capacity-ell cells.
C_STAR_2L_OVER_L = {
    2: 0.897012,
    3: 0.959154,
    4: 0.980370,
    5: 0.989551,
    8: 0.997853,
    10: 0.999143,
    16: 0.999928,
}


class FitRefusedError(ValueError):
    """Raised when the data show no failure-rate transition to fit."""


@dataclass
class SigmoidFit:
    """Fitted transition: inflection x, slope y, residual sum, data."""

    x: float
    y: float
    sum_res: float
    points: tuple[tuple[float, float], ...]
    iterations: int = 0


class SignificanceBound(NamedTuple):
    exact: float  # (1 - p)^a
    bound: float  # exp(-p * a)


def sigmoid(c, x: float, y: float):
    """Transition model: 1 / (1 + exp(-(c - x) / y))."""
    z = np.clip((np.asarray(c, dtype=float) - x) / y, -700.0, 700.0)
    return 1.0 / (1.0 + np.exp(-z))


def fit_sigmoid(points: Iterable[tuple[float, float]]) -> SigmoidFit:
    """Least-squares fit of the sigmoid to (load factor, failure rate) data.

    Damped Gauss-Newton: x starts at the load whose failure rate is
    closest to 0.5, y at a tenth of the load span; a step is halved until
    the residual sum decreases; convergence when the parameter change
    drops below 1e-10 (at most 1e4 iterations).  Points are sorted
    internally, so the result is invariant under input permutation.
    """
    pts = sorted((float(c), float(lam)) for c, lam in points)
    if len(pts) < 4:
        raise FitRefusedError(f"need at least 4 data points, got {len(pts)}")
    cs = np.array([p[0] for p in pts])
    lams = np.array([p[1] for p in pts])
    if not (lams.min() < 0.5 and lams.max() > 0.5):
        raise FitRefusedError(
            "no transition present: need failure rates on both sides of 0.5 "
            f"(observed range [{lams.min():.3g}, {lams.max():.3g}])"
        )

    x = float(cs[np.argmin(np.abs(lams - 0.5))])
    y = float((cs.max() - cs.min()) / 10.0) or 1e-4

    def sse(xv, yv):
        r = sigmoid(cs, xv, yv) - lams
        return float(r @ r)

    current = sse(x, y)
    iterations = 0
    for iterations in range(1, 10001):
        f = sigmoid(cs, x, y)
        r = f - lams
        g = f * (1.0 - f)
        jx = -g / y
        jy = -g * (cs - x) / (y * y)
        jtj = np.array([[jx @ jx, jx @ jy], [jx @ jy, jy @ jy]])
        jtr = np.array([jx @ r, jy @ r])
        try:
            delta = np.linalg.solve(jtj, -jtr)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(jtj, -jtr, rcond=None)[0]
        alpha = 1.0
        while alpha > 1e-14:
            nx, ny = x + alpha * delta[0], y + alpha * delta[1]
            if ny > 0 and sse(nx, ny) < current:
                break
            alpha *= 0.5
        else:
            break
        step = alpha * delta
        x, y = x + step[0], y + step[1]
        current = sse(x, y)
        if max(abs(step[0]), abs(step[1])) < 1e-10:
            break
    return SigmoidFit(x=float(x), y=float(y), sum_res=current, points=tuple(pts), iterations=iterations)


def poisson_success_estimate(c: float, s: int, t: int, ell: int = 1) -> float:
    """Pr(every page keeps its keys) under the Poisson page-load model.

    Single page: Pr(Po(c*s) <= floor(s*ell)), raised to the t pages.  The
    ell > 1 form extends the published ell = 1 estimate by raising the
    per-page capacity to s*ell (c stays keys per cell).  Computed with a
    log-space term recurrence; near-one values go through the upper tail
    so the power of t keeps precision.
    """
    if c < 0 or s < 1 or t < 1 or ell < 1:
        raise ValueError("need c >= 0, s >= 1, t >= 1, ell >= 1")
    if c == 0:
        return 1.0
    lam = c * s
    kcap = int(math.floor(s * ell))
    loglam = math.log(lam)

    def logterm(i: int) -> float:
        return -lam + i * loglam - math.lgamma(i + 1)

    if kcap >= lam:
        # Head is the bulk: sum the tail i > kcap until terms vanish.
        log_tail = -math.inf
        i = kcap + 1
        while True:
            lt = logterm(i)
            log_tail = np.logaddexp(log_tail, lt)
            if lt < log_tail - 60.0 and i > lam:
                break
            i += 1
            if i > kcap + 10_000_000:
                break
        tail = math.exp(log_tail)
        if tail >= 1.0:
            return 0.0
        log_page = math.log1p(-tail)
    else:
        log_head = -math.inf
        for i in range(0, kcap + 1):
            log_head = np.logaddexp(log_head, logterm(i))
        log_page = min(log_head, 0.0)
    return float(math.exp(t * log_page))


def significance_bound(a: int, p: float) -> SignificanceBound:
    """Chance of a clean a-trial run if the true failure rate were >= p."""
    if a < 1:
        raise ValueError(f"trial count must be positive, got {a}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"hypothesized failure probability must be in (0, 1), got {p}")
    exact = math.exp(a * math.log1p(-p))
    return SignificanceBound(exact=exact, bound=math.exp(-p * a))


def expected_page_requests(r_p: float) -> float:
    """E(page requests) for a successful search probing the primary page first."""
    if not 0.0 <= r_p <= 1.0:
        raise ValueError(f"primary fraction must be in [0, 1], got {r_p}")
    return r_p * 1.0 + (1.0 - r_p) * 2.0


def unsuccessful_search_requests(
    w_histogram: Mapping[int, float], k_p: int, s: int, h: int
) -> float:
    """E(page requests) for a negative lookup with per-page Bloom filters.

    One request always; the backup page is touched with probability at
    most (k_p * w / s)^h on a page with w displaced keys, averaged over
    the page histogram.
    """
    total = float(sum(w_histogram.values()))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"histogram must sum to 1, got {total}")
    extra = 0.0
    for w, freq in w_histogram.items():
        extra += freq * min(1.0, (k_p * w) / s) ** h
    return 1.0 + extra


@dataclass
class TrialOutcome:
    """Measurements of one trial (one graph / one insertion run)."""

    success: bool
    r_p: float = 0.0
    alpha_p: float = 0.0
    st: float = 0.0
    pr: float = 0.0
    w_counts: np.ndarray | None = None


@dataclass
class TrialStats:
    """Aggregate over a batch of trials; means cover successful trials only."""

    a: int
    failures: int
    lam: float
    rp_mean: float = 0.0
    rp_var: float = 0.0
    alphap_mean: float = 0.0
    alphap_var: float = 0.0
    st_mean: float = 0.0
    st_var: float = 0.0
    pr_mean: float = 0.0
    pr_var: float = 0.0
    w_histogram: dict[int, float] = field(default_factory=dict)


def _mean_var(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, 0.0
    return mean, float(np.var(values, ddof=1))


def aggregate(outcomes: Sequence[TrialOutcome]) -> TrialStats:
    """Failure rate, sample means/variances, and the pooled w histogram."""
    if not outcomes:
        raise ValueError("cannot aggregate zero trials")
    a = len(outcomes)
    ok = [o for o in outcomes if o.success]
    failures = a - len(ok)
    rp_mean, rp_var = _mean_var([o.r_p for o in ok])
    ap_mean, ap_var = _mean_var([o.alpha_p for o in ok])
    st_mean, st_var = _mean_var([o.st for o in ok])
    pr_mean, pr_var = _mean_var([o.pr for o in ok])
    hist: dict[int, float] = {}
    pages = 0
    for o in ok:
        if o.w_counts is None:
            continue
        pages += len(o.w_counts)
        vals, counts = np.unique(o.w_counts, return_counts=True)
        for w, cnt in zip(vals, counts):
            hist[int(w)] = hist.get(int(w), 0) + int(cnt)
    if pages:
        hist = {w: cnt / pages for w, cnt in sorted(hist.items())}
    return TrialStats(
        a=a,
        failures=failures,
        lam=failures / a,
        rp_mean=rp_mean,
        rp_var=rp_var,
        alphap_mean=ap_mean,
        alphap_var=ap_var,
        st_mean=st_mean,
        st_var=st_var,
        pr_mean=pr_mean,
        pr_var=pr_var,
        w_histogram=hist,
    )


def w_histogram_stats(hist: Mapping[int, float], s: int) -> dict[str, float]:
    """Summary of a w histogram: zero-page share, means, tail mass.

    Reports the mean both over all pages and over pages with w > 0 (the
    natural reading of a mean varies between the two).
    """
    freq0 = float(hist.get(0, 0.0))
    mean_all = float(sum(w * f for w, f in hist.items()))
    pos_mass = float(sum(f for w, f in hist.items() if w > 0))
    mean_pos = float(sum(w * f for w, f in hist.items() if w > 0) / pos_mass) if pos_mass else 0.0
    tail_10pct = float(sum(f for w, f in hist.items() if w > 0.1 * s))
    within_5pct = float(sum(f for w, f in hist.items() if w <= 0.05 * s))
    return {
        "freq_w0": freq0,
        "w_mean_all_pages": mean_all,
        "w_mean_positive_pages": mean_pos,
        "pr_w_gt_0.1s": tail_10pct,
        "share_w_le_0.05s": within_5pct,
    }
