"""Command-line interface.

    covcp detect --input data.csv [--tau-rule bootstrap|theory:C] [--skip-reduction] [--seed S] [--out result.json]
    covcp simulate --scenario sc.json --replicates K [--seed S]
    covcp table --preset table1|table2|table3 [--replicates K]
    covcp verify [--max-n N]

Exit status is 0 whenever the computation ran, including when no component
survives screening; it is nonzero only for IO and validation failures, or
when ``verify`` finds a deviation above 1e-8.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bootstrap import DEFAULT_SEED
from .core import DataMatrix, DataValidationError
from .detect import PipelineConfig, run_pipeline
from .oracle import agreement_report
from .serialize import (
    curve_to_csv,
    dumps,
    dvector_to_csv,
    estimates_to_csv,
    format_table,
    read_csv,
    report_to_dict,
    result_to_dict,
)
from .simgen import Scenario, run_replications

log = logging.getLogger("covcp")

VERIFY_TOLERANCE = 1e-8
DIMS = [5, 20, 60, 200, 300, 500]
PRESETS = {
    "table1": {"title": "n = 100, k0 = 50", "n": 100, "cases": ["1", "2", "3", "4"], "skip_reduction": False},
    "table2": {"title": "n = 200, k0 = 100", "n": 200, "cases": ["1", "2", "3", "4"], "skip_reduction": False},
    "table3": {"title": "n = 200, k0 = 100, without dimension reduction", "n": 200, "cases": ["1", "3"], "skip_reduction": True},
}


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig.from_rule(
        args.tau_rule,
        seed=args.seed,
        boot_replicates=args.boot_replicates,
        skip_reduction=args.skip_reduction,
        fallback_all=args.fallback_all,
    )


def cmd_detect(args) -> int:
    x = read_csv(args.input, delimiter=args.delimiter)
    res = run_pipeline(DataMatrix(x), _pipeline_config(args))
    _write(args.out, dumps(result_to_dict(res, include_curve=not args.no_curve)))
    if args.curve_csv and res.curve is not None:
        Path(args.curve_csv).write_text(curve_to_csv(res.curve))
    if args.d_csv:
        Path(args.d_csv).write_text(dvector_to_csv(res.D, res.selection))
    log.info("status=%s m=%d k_hat=%s", res.status, res.m, res.k_hat)
    return 0


def cmd_simulate(args) -> int:
    spec = json.loads(Path(args.scenario).read_text())
    scenario = Scenario.from_dict(spec)
    rep = run_replications(
        scenario, args.replicates, args.seed, _pipeline_config(args), workers=args.threads
    )
    _write(args.out, dumps(report_to_dict(rep, include_estimates=args.include_estimates)))
    if args.estimates_csv:
        Path(args.estimates_csv).write_text(estimates_to_csv(rep))
    return 0


def run_table(preset: str, replicates: int, seed: int, threads: int, dims=None):
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; available: {', '.join(PRESETS)}")
    cfg = PRESETS[preset]
    dims = list(dims or DIMS)
    n = cfg["n"]
    pcfg = PipelineConfig(skip_reduction=cfg["skip_reduction"])
    grid = {}
    for case in cfg["cases"]:
        for p in dims:
            log.info("%s: case %s, p=%d", preset, case, p)
            grid[(case, p)] = run_replications(
                Scenario.standard(case, n, p), replicates, seed, pcfg, workers=threads
            )
    return cfg, dims, grid


def cmd_table(args) -> int:
    cfg, dims, grid = run_table(args.preset, args.replicates, args.seed, args.threads, args.dims)
    text = format_table(f"{args.preset}: {cfg['title']}, K = {args.replicates}", dims, grid)
    _write(args.out, text)
    if args.json:
        payload = {f"case{c}_p{p}": report_to_dict(r) for (c, p), r in grid.items()}
        Path(args.json).write_text(dumps(payload))
    return 0


def cmd_verify(args) -> int:
    worst = agreement_report(args.max_n, args.instances, args.seed)
    ok = True
    for name, dev in worst.items():
        flag = "ok" if dev <= VERIFY_TOLERANCE else "FAIL"
        ok &= dev <= VERIFY_TOLERANCE
        print(f"{name:4s} max relative deviation {dev:.3e}  {flag}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covcp", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_flags(p):
        p.add_argument("--tau-rule", default="bootstrap", help="'bootstrap' or 'theory:C'")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--boot-replicates", type=int, default=1,
                       help="resampling draws; >1 uses the median of maxima (extension)")
        p.add_argument("--skip-reduction", action="store_true", help="keep every component")
        p.add_argument("--fallback-all", action="store_true",
                       help="use all components when none survives screening")

    p = sub.add_parser("detect", help="estimate the change point of a CSV data set")
    p.add_argument("--input", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out", default=None, help="result JSON (default stdout)")
    p.add_argument("--curve-csv", default=None)
    p.add_argument("--d-csv", default=None)
    p.add_argument("--no-curve", action="store_true", help="omit u_curve from the JSON")
    pipeline_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="replicate a scenario and report mean/std/MSE")
    p.add_argument("--scenario", required=True)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--threads", type=int, default=0, help="worker processes (0 = auto)")
    p.add_argument("--out", default=None)
    p.add_argument("--estimates-csv", default=None)
    p.add_argument("--include-estimates", action="store_true")
    pipeline_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", help="reproduce a simulation table")
    p.add_argument("--preset", required=True)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--dims", type=int, nargs="+", default=None, help="override the dimension grid")
    p.add_argument("--out", default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("verify", help="check fast kernels against brute-force sums")
    p.add_argument("--max-n", type=int, default=12)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DataValidationError, ValueError, OSError) as e:
        print(f"covcp {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
