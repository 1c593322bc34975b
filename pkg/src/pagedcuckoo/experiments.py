"""Experiment drivers: reproducible sweeps with CSV/JSON reporting.

Every driver is a pure function of its spec: trial j of sweep point i
runs on an independent generator seeded seed_base + i * trials + j, and
aggregation reduces trials in index order, so reports are bit-identical
across runs.  Wall-clock timings are carried in reports but kept out of
the CSV payload.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import (
    FitRefusedError,
    SigmoidFit,
    TrialOutcome,
    TrialStats,
    aggregate,
    expected_page_requests,
    fit_sigmoid,
    significance_bound,
    unsuccessful_search_requests,
    w_histogram_stats,
)
from .graph import Config, draw_choices, generate
from .offline_solver import solve
from .paged_table import PagedTable, WalkParams
from .rng import Rng, derive_seed

KINDS = ("threshold-sweep", "offline-frac", "randomwalk", "bias-sweep", "dynamics", "smallpages")

STATS_COLUMNS = (
    "c,s,m,kp,kb,ell,a_bias,b_factor,trials,lambda,"
    "rp_mean,alphap_mean,st_mean,st_var,pr_mean,pr_var"
)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment request; unused fields may stay at their defaults."""

    kind: str
    m: int
    s: int
    k_p: int
    k_b: int
    ell: int = 1
    c_list: tuple[float, ...] = ()
    c_start: float = 0.0
    c_end: float = 0.0
    c_step: float = 1e-4
    a_bias: float = 1.0
    b_factor: float = math.inf
    a_grid: tuple[float, ...] = ()
    trials: int = 1
    seed_base: int = 0
    phase2_mult: float = 1.0
    window: int = 0
    null_p: float = 1e-5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("need at least one trial per point")


@dataclass
class PointResult:
    c: float
    stats: TrialStats
    elapsed: float = 0.0


@dataclass
class ExperimentReport:
    kind: str
    spec: ExperimentSpec
    points: list[PointResult] = field(default_factory=list)
    fit: SigmoidFit | None = None
    fit_error: str | None = None
    derived: dict = field(default_factory=dict)
    series: list[dict] = field(default_factory=list)
    whists: dict[str, dict[int, float]] = field(default_factory=dict)


def _config(spec: ExperimentSpec, c: float) -> Config:
    return Config(c=c, m=spec.m, s=spec.s, k_p=spec.k_p, k_b=spec.k_b, ell=spec.ell)


def _point_seed(spec: ExperimentSpec, point_idx: int, trial: int) -> int:
    return derive_seed(spec.seed_base, point_idx * spec.trials + trial)


def offline_trial(config: Config, seed: int) -> TrialOutcome:
    rng = Rng(seed)
    placement = solve(generate(config, rng))
    return TrialOutcome(
        success=placement.feasible,
        r_p=placement.r_p,
        alpha_p=placement.alpha_p,
        w_counts=placement.w,
    )


def walk_trial(config: Config, walk: WalkParams, seed: int) -> TrialOutcome:
    rng = Rng(seed)
    graph = generate(config, rng)
    table = PagedTable(config, walk)
    done, failed, steps, prs = table.bulk_insert(graph, 0, config.n, rng)
    if failed:
        return TrialOutcome(success=False)
    return TrialOutcome(
        success=True,
        r_p=table.r_p,
        alpha_p=table.alpha_p,
        st=float(steps.mean()) if len(steps) else 0.0,
        pr=float(prs.mean()) if len(prs) else 0.0,
        w_counts=table.w_counts(),
    )


def sweep_loads(c_start: float, c_end: float, c_step: float) -> list[float]:
    """Grid c_start + i*c_step up to c_end (inclusive within float slack)."""
    if not c_start < c_end:
        raise ValueError("sweep needs c_start < c_end")
    if c_step <= 0:
        raise ValueError("sweep step must be positive")
    loads = []
    i = 0
    while True:
        c = c_start + i * c_step
        if c > c_end + 1e-9:
            break
        loads.append(c)
        i += 1
    return loads


def run_threshold_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """Failure rate over a load grid plus the fitted transition point."""
    report = ExperimentReport(kind=spec.kind, spec=spec)
    for pi, c in enumerate(sweep_loads(spec.c_start, spec.c_end, spec.c_step)):
        config = _config(spec, c)
        t0 = time.perf_counter()
        outcomes = [
            offline_trial(config, _point_seed(spec, pi, j)) for j in range(spec.trials)
        ]
        stats = aggregate(outcomes)
        report.points.append(PointResult(c=c, stats=stats, elapsed=time.perf_counter() - t0))
    try:
        report.fit = fit_sigmoid([(p.c, p.stats.lam) for p in report.points])
    except FitRefusedError as exc:
        report.fit_error = str(exc)
    return report


def run_offline_frac(spec: ExperimentSpec) -> ExperimentReport:
    """Optimal primary fractions and the pooled w histogram per load."""
    report = ExperimentReport(kind=spec.kind, spec=spec)
    for pi, c in enumerate(spec.c_list):
        config = _config(spec, c)
        t0 = time.perf_counter()
        outcomes = [
            offline_trial(config, _point_seed(spec, pi, j)) for j in range(spec.trials)
        ]
        stats = aggregate(outcomes)
        report.points.append(PointResult(c=c, stats=stats, elapsed=time.perf_counter() - t0))
        report.whists[f"c={c:.10g}"] = stats.w_histogram
        derived = w_histogram_stats(stats.w_histogram, spec.s)
        derived["ex_successful"] = expected_page_requests(stats.rp_mean)
        derived["ex_unsuccessful_h3_1bit"] = unsuccessful_search_requests(
            stats.w_histogram, spec.k_p, spec.s, 3
        )
        report.derived[f"c={c:.10g}"] = derived
    return report


def run_randomwalk(spec: ExperimentSpec) -> ExperimentReport:
    """Full insertion runs: failure rate, primary fraction, step and
    page-request statistics, and the zero-failure significance bound."""
    report = ExperimentReport(kind=spec.kind, spec=spec)
    walk = WalkParams(a_bias=spec.a_bias, b_factor=spec.b_factor)
    for pi, c in enumerate(spec.c_list):
        config = _config(spec, c)
        t0 = time.perf_counter()
        outcomes = [
            walk_trial(config, walk, _point_seed(spec, pi, j)) for j in range(spec.trials)
        ]
        stats = aggregate(outcomes)
        report.points.append(PointResult(c=c, stats=stats, elapsed=time.perf_counter() - t0))
        report.whists[f"c={c:.10g}"] = stats.w_histogram
        derived = {"ex_successful": expected_page_requests(stats.rp_mean)}
        if stats.w_histogram:
            derived["ex_unsuccessful_h3_1bit"] = unsuccessful_search_requests(
                stats.w_histogram, spec.k_p, spec.s, 3
            )
        if stats.failures == 0:
            sig = significance_bound(spec.trials, spec.null_p)
            derived["zero_failure_exact"] = sig.exact
            derived["zero_failure_bound"] = sig.bound
            derived["null_p"] = spec.null_p
        report.derived[f"c={c:.10g}"] = derived
    return report


def run_bias_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """Walk statistics across a grid of coin biases at one load."""
    if not spec.a_grid:
        raise ValueError("bias sweep needs a_grid")
    if any(not 0.0 <= a <= 1.0 for a in spec.a_grid):
        raise ValueError("a_grid values must lie in [0, 1]")
    if len(spec.c_list) != 1:
        raise ValueError("bias sweep runs at exactly one load factor")
    report = ExperimentReport(kind=spec.kind, spec=spec)
    config = _config(spec, spec.c_list[0])
    for pi, a in enumerate(spec.a_grid):
        walk = WalkParams(a_bias=a, b_factor=spec.b_factor)
        t0 = time.perf_counter()
        outcomes = [
            walk_trial(config, walk, _point_seed(spec, pi, j)) for j in range(spec.trials)
        ]
        stats = aggregate(outcomes)
        report.points.append(PointResult(c=a, stats=stats, elapsed=time.perf_counter() - t0))
    return report


def run_smallpages(spec: ExperimentSpec) -> ExperimentReport:
    """Blocked variant: single-cell pages of capacity ell, loads c/ell."""
    if spec.k_p != 1 or spec.k_b != 1 or spec.s != 1 or spec.ell < 2:
        raise ValueError("smallpages requires k_p=1, k_b=1, s=1 and ell >= 2")
    report = ExperimentReport(kind=spec.kind, spec=spec)
    for pi, c_norm in enumerate(spec.c_list):
        config = _config(spec, c_norm * spec.ell)
        t0 = time.perf_counter()
        outcomes = [
            offline_trial(config, _point_seed(spec, pi, j)) for j in range(spec.trials)
        ]
        # Report the normalized load and normalized primary load.
        for o in outcomes:
            o.alpha_p /= spec.ell
        stats = aggregate(outcomes)
        report.points.append(PointResult(c=c_norm, stats=stats, elapsed=time.perf_counter() - t0))
    return report


def _dynamics_run(spec: ExperimentSpec, config: Config, walk: WalkParams, seed: int):
    rng = Rng(seed)
    graph = generate(config, rng)
    table = PagedTable(config, walk)
    n = config.n
    window = spec.window or max(1, n // 100)
    series: list[tuple[int, int, int, float, float]] = []
    op = 0

    lo = 0
    failed = False
    while lo < n:
        hi = min(lo + window, n)
        done, fail, steps, _ = table.bulk_insert(graph, lo, hi, rng)
        op += done
        series.append((op, 1, table.live_keys, table.r_p, float(steps.mean()) if len(steps) else 0.0))
        if fail:
            failed = True
            break
        lo = hi
    phase1_st = table.mean_steps()
    phase1_last_window = series[-1][4] if series else 0.0
    whist1 = np.bincount(table.w_counts(), minlength=1)

    phase2_steps: list[int] = []
    if not failed:
        table.global_counter = -1  # deletions and refills run unbudgeted
        live_list = np.arange(n, dtype=np.int64)
        live_len = n
        pairs = int(round(spec.phase2_mult * n))
        win_steps: list[int] = []
        for pair in range(pairs):
            idx = rng.uniform_below(live_len)
            victim = int(live_list[idx])
            live_list[idx] = live_list[live_len - 1]
            live_len -= 1
            table.delete(victim)
            key_id = n + pair
            choices = draw_choices(config, rng, key_id)
            res = table.insert(choices, rng)
            if live_len < live_list.shape[0]:
                live_list[live_len] = key_id
            live_len += 1
            op += 2
            win_steps.append(res.steps)
            phase2_steps.append(res.steps)
            if (pair + 1) % max(1, window // 2) == 0:
                series.append(
                    (op, 2, table.live_keys, table.r_p, float(np.mean(win_steps)))
                )
                win_steps = []
    whist2 = np.bincount(table.w_counts(), minlength=1)

    outcome = TrialOutcome(
        success=not failed,
        r_p=table.r_p,
        alpha_p=table.alpha_p,
        st=float(np.mean(phase2_steps)) if phase2_steps else 0.0,
        pr=table.mean_page_requests(),
        w_counts=table.w_counts(),
    )
    return outcome, series, phase1_st, phase1_last_window, whist1, whist2


def run_dynamics(spec: ExperimentSpec) -> ExperimentReport:
    """Insert-only phase followed by alternating delete/insert pairs.

    Deletions pick a uniformly random live key; replacement keys draw
    fresh choices from the trial generator.  The step budget applies to
    the insertion phase only.
    """
    if len(spec.c_list) != 1:
        raise ValueError("dynamics runs at exactly one load factor")
    report = ExperimentReport(kind=spec.kind, spec=spec)
    config = _config(spec, spec.c_list[0])
    walk = WalkParams(a_bias=spec.a_bias, b_factor=spec.b_factor)
    all_series = []
    outcomes = []
    p1_st, p1_last = [], []
    h1_total: dict[int, int] = {}
    h2_total: dict[int, int] = {}
    t0 = time.perf_counter()
    for j in range(spec.trials):
        outcome, series, st1, last1, whist1, whist2 = _dynamics_run(
            spec, config, walk, _point_seed(spec, 0, j)
        )
        outcomes.append(outcome)
        if outcome.success:
            all_series.append(series)
            p1_st.append(st1)
            p1_last.append(last1)
            for w, cnt in enumerate(whist1):
                if cnt:
                    h1_total[w] = h1_total.get(w, 0) + int(cnt)
            for w, cnt in enumerate(whist2):
                if cnt:
                    h2_total[w] = h2_total.get(w, 0) + int(cnt)
    stats = aggregate(outcomes)
    report.points.append(
        PointResult(c=spec.c_list[0], stats=stats, elapsed=time.perf_counter() - t0)
    )
    if all_series:
        rows = min(len(s) for s in all_series)
        for i in range(rows):
            op, phase, live = all_series[0][i][:3]
            report.series.append(
                {
                    "op_index": op,
                    "phase": phase,
                    "live_keys": live,
                    "r_p": float(np.mean([s[i][3] for s in all_series])),
                    "st_window": float(np.mean([s[i][4] for s in all_series])),
                }
            )
        pages1 = sum(h1_total.values())
        pages2 = sum(h2_total.values())
        report.whists["phase1"] = {w: c / pages1 for w, c in sorted(h1_total.items())}
        report.whists["phase2"] = {w: c / pages2 for w, c in sorted(h2_total.items())}
        report.derived["phase1_st_mean"] = float(np.mean(p1_st))
        report.derived["phase1_last_window_st"] = float(np.mean(p1_last))
        report.derived["phase2_st_mean"] = stats.st_mean
    return report


RUNNERS = {
    "threshold-sweep": run_threshold_sweep,
    "offline-frac": run_offline_frac,
    "randomwalk": run_randomwalk,
    "bias-sweep": run_bias_sweep,
    "dynamics": run_dynamics,
    "smallpages": run_smallpages,
}


def run(spec: ExperimentSpec) -> ExperimentReport:
    return RUNNERS[spec.kind](spec)


# ---- serialization ---------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return format(v, ".10g")
    return str(v)


def report_csv(report: ExperimentReport) -> str:
    """Render the per-point table; schema depends on the experiment kind."""
    spec = report.spec
    lines = []
    if report.kind == "threshold-sweep":
        lines.append("c,trials,failures,lambda")
        for p in report.points:
            lines.append(
                ",".join(_fmt(v) for v in (p.c, p.stats.a, p.stats.failures, p.stats.lam))
            )
    elif report.kind == "dynamics":
        lines.append("op_index,phase,live_keys,r_p,st_window")
        for row in report.series:
            lines.append(
                ",".join(
                    _fmt(row[k]) for k in ("op_index", "phase", "live_keys", "r_p", "st_window")
                )
            )
    else:
        lines.append(STATS_COLUMNS)
        for p in report.points:
            if report.kind == "bias-sweep":
                c, a_bias = spec.c_list[0], p.c
            else:
                c, a_bias = p.c, spec.a_bias
            walk_kind = report.kind in ("randomwalk", "bias-sweep")
            row = (
                c,
                spec.s,
                spec.m,
                spec.k_p,
                spec.k_b,
                spec.ell,
                a_bias if walk_kind else 0.0,
                spec.b_factor if walk_kind else 0.0,
                p.stats.a,
                p.stats.lam,
                p.stats.rp_mean,
                p.stats.alphap_mean,
                p.stats.st_mean,
                p.stats.st_var,
                p.stats.pr_mean,
                p.stats.pr_var,
            )
            lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def whist_csv(report: ExperimentReport) -> str:
    lines = ["label,w,freq"]
    for label, hist in report.whists.items():
        for w, freq in hist.items():
            lines.append(f"{label},{w},{_fmt(float(freq))}")
    return "\n".join(lines) + "\n"


def report_json(report: ExperimentReport) -> str:
    doc = {
        "kind": report.kind,
        "spec": asdict(report.spec),
        "points": [
            {"c": p.c, "elapsed_seconds": p.elapsed, **asdict(p.stats)}
            for p in report.points
        ],
        "derived": report.derived,
        "series": report.series,
        "whists": {k: {str(w): f for w, f in h.items()} for k, h in report.whists.items()},
    }
    if report.fit is not None:
        doc["fit"] = {"x": report.fit.x, "y": report.fit.y, "sum_res": report.fit.sum_res}
    if report.fit_error is not None:
        doc["fit_error"] = report.fit_error
    for point in doc["points"]:
        point["w_histogram"] = {str(w): f for w, f in point["w_histogram"].items()}
    return json.dumps(doc, indent=2, default=float) + "\n"


def fit_sidecar_json(report: ExperimentReport) -> str:
    if report.fit is not None:
        doc = {"x": report.fit.x, "y": report.fit.y, "sum_res": report.fit.sum_res}
    else:
        doc = {"error": report.fit_error}
    return json.dumps(doc) + "\n"
