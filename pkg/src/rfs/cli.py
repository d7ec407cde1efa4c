"""Command line entry point: ``rfs sweep|rates|verify --config <path>``."""

from __future__ import annotations

import argparse
import sys

from . import ingest
from .harness import ConfigError, load_config, run_rates, run_sweep, run_verify
from .harness.config import option_table

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3

SHORTCUTS = {"out": "experiment.out", "threads": "experiment.threads", "seed": "experiment.base_seed"}


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI-style config file ([section] key = value)")
    p.add_argument("--out", help="detail CSV path (same as --experiment.out)")
    p.add_argument("--threads", help="worker threads (same as --experiment.threads)")
    p.add_argument("--seed", help="base seed (same as --experiment.base_seed)")
    group = p.add_argument_group("config keys", "any config key; overrides the file")
    for section, f in option_table():
        group.add_argument(f"--{section}.{f.name}", dest=f"{section}.{f.name}", metavar="V",
                           default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfs", description="Random-feature spectral regularization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("sweep", "test error over an M x T grid"),
                       ("rates", "learning curve along the theory schedule and its slope"),
                       ("verify", "filter bounds, equivalence and Monte-Carlo checks")):
        _add_experiment_args(sub.add_parser(name, help=text))
    blobs = sub.add_parser("gen-blobs", help="write the two-blob stand-in classification CSV")
    blobs.add_argument("--n", type=int, default=10000)
    blobs.add_argument("--d", type=int, default=14)
    blobs.add_argument("--separation", type=float, default=2.0)
    blobs.add_argument("--seed", type=int, default=0)
    blobs.add_argument("--out", required=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    ns = vars(args)
    out = {k: v for k, v in ns.items() if "." in k}
    for short, key in SHORTCUTS.items():
        if ns.get(short) is not None:
            out[key] = ns[short]
    return out


def _report_run(res) -> None:
    print(f"detail: {res.detail_path}")
    print(f"aggregate: {res.aggregate_path}")
    failed = sum(1 for r in res.detail if r["status"] != "ok")
    if failed:
        print(f"{failed} cell(s) failed; see the status column", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gen-blobs":
        ds = ingest.make_blobs(args.n, args.d, args.separation, seed=args.seed)
        ingest.save_csv(ds, args.out, label_name="label")
        print(f"wrote {ds.n} rows to {args.out}")
        return EXIT_OK
    try:
        cfg = load_config(args.config, args.command, _overrides(args))
        runner = {"sweep": run_sweep, "rates": run_rates, "verify": run_verify}[args.command]
        res = runner(cfg)
    except (ConfigError, ingest.DataError) as exc:
        print(f"rfs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"rfs: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    if args.command == "verify":
        print(f"report: {res.report_path}")
        print(f"filters: {res.filters_path}")
        for r in res.failures():
            print(f"FAIL {r['check']} {r['subject']} {r['param']}: {r['value']:.6g} > {r['bound']:.6g}")
        print("all gated checks passed" if res.passed else "gated verification failed")
        return EXIT_OK if res.passed else EXIT_VERIFY
    _report_run(res)
    if args.command == "rates" and "slope_err" in res.extra:
        x = res.extra
        print(f"slope(error) = {x['slope_err']:.4f} +- {x['stderr_err']:.4f} (theory {x['theoretical_err']:.4f})")
        print(f"slope(error^2) = {x['slope_sq']:.4f} +- {x['stderr_sq']:.4f} (theory {x['theoretical_sq']:.4f})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
