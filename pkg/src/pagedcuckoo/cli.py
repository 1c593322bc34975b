"""Command-line experiment drivers.

    pagedcuckoo threshold  --c-start 0.97 --c-end 0.98 --m 100000 --s 100 ...
    pagedcuckoo offline    --c 0.90,0.95 ...
    pagedcuckoo randomwalk --c 0.95 --a-bias 0.97 --b-factor inf ...
    pagedcuckoo bias-sweep --c 0.95 --a-grid 0.90,0.95,0.97 ...
    pagedcuckoo dynamics   --c 0.95 --a-bias 0.97 --b-factor 30 ...
    pagedcuckoo smallpages --c 0.95 --ell 10 ...   (--c is load per cell, c/ell)

CSV goes to --out (default stdout).  Threshold sweeps write the sigmoid
fit to <out>.fit.json; w histograms go to <out>.whist.csv.  Exit status
is 0 for any completed experiment (failures and fit refusals included),
2 for an invalid spec, 1 for I/O errors.
"""

import argparse
import math
import sys

from .experiments import ExperimentSpec, fit_sidecar_json, report_csv, report_json, run, whist_csv


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _inf_float(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pagedcuckoo",
        description="Paged cuckoo hashing experiments (offline optimum and random-walk insertion).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, default=10**5, help="total table cells")
    common.add_argument("--s", type=int, default=10**3, help="page size in cells")
    common.add_argument("--kp", type=int, default=3, help="primary-page choices per key")
    common.add_argument("--kb", type=int, default=1, help="backup-page choices per key")
    common.add_argument("--ell", type=int, default=1, help="keys per cell")
    common.add_argument("--trials", type=int, default=30, help="trials per sweep point")
    common.add_argument("--seed", type=int, default=0, help="seed base; trial j of point i uses seed + i*trials + j")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--a-bias", type=float, default=0.97, help="walk coin bias")
    common.add_argument("--b-factor", type=_inf_float, default=math.inf, help="step budget factor (accepts inf)")

    p = sub.add_parser("threshold", parents=[common], help="failure-rate sweep with sigmoid fit")
    p.add_argument("--c-start", type=float, required=True)
    p.add_argument("--c-end", type=float, required=True)
    p.add_argument("--c-step", type=float, default=1e-4)

    p = sub.add_parser("offline", parents=[common], help="optimal primary fractions per load")
    p.add_argument("--c", type=_floats, required=True, help="comma-separated load factors")

    p = sub.add_parser("randomwalk", parents=[common], help="online insertion runs")
    p.add_argument("--c", type=_floats, required=True)
    p.add_argument("--null-p", type=float, default=1e-5, help="failure probability for the zero-failure bound")

    p = sub.add_parser("bias-sweep", parents=[common], help="walk statistics over coin biases")
    p.add_argument("--c", type=_floats, required=True)
    p.add_argument("--a-grid", type=_floats, required=True)

    p = sub.add_parser("dynamics", parents=[common], help="alternating deletes and inserts")
    p.add_argument("--c", type=_floats, required=True)
    p.add_argument("--phase2-mult", type=float, default=1.0, help="delete/insert pairs as a multiple of n")
    p.add_argument("--window", type=int, default=0, help="series window in operations (default n/100)")

    p = sub.add_parser("smallpages", parents=[common], help="single-cell pages of capacity ell")
    p.add_argument("--c", type=_floats, required=True, help="normalized loads c/ell")
    return parser


_KIND = {
    "threshold": "threshold-sweep",
    "offline": "offline-frac",
    "randomwalk": "randomwalk",
    "bias-sweep": "bias-sweep",
    "dynamics": "dynamics",
    "smallpages": "smallpages",
}


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        kind=_KIND[args.command],
        m=args.m,
        s=args.s,
        k_p=args.kp,
        k_b=args.kb,
        ell=args.ell,
        c_list=getattr(args, "c", ()) or (),
        c_start=getattr(args, "c_start", 0.0),
        c_end=getattr(args, "c_end", 0.0),
        c_step=getattr(args, "c_step", 1e-4),
        a_bias=args.a_bias,
        b_factor=args.b_factor,
        a_grid=getattr(args, "a_grid", ()) or (),
        trials=args.trials,
        seed_base=args.seed,
        phase2_mult=getattr(args, "phase2_mult", 1.0),
        window=getattr(args, "window", 0),
        null_p=getattr(args, "null_p", 1e-5),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        report = run(spec)
    except ValueError as exc:
        print(f"invalid experiment spec: {exc}", file=sys.stderr)
        return 2

    try:
        if args.format == "json":
            payload = report_json(report)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(payload)
            else:
                sys.stdout.write(payload)
        else:
            payload = report_csv(report)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(payload)
                if report.kind == "threshold-sweep":
                    with open(args.out + ".fit.json", "w") as fh:
                        fh.write(fit_sidecar_json(report))
                if report.whists:
                    with open(args.out + ".whist.csv", "w") as fh:
                        fh.write(whist_csv(report))
            else:
                sys.stdout.write(payload)
                if report.kind == "threshold-sweep":
                    sys.stderr.write(fit_sidecar_json(report))
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 1
    if report.fit_error is not None:
        print(f"fit refused: {report.fit_error}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
