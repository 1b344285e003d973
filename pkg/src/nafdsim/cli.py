"""Command-line entry point: ``nafdsim --config PATH [--mode run|validate]``.

Exit codes: 0 success, 1 configuration error, 2 runtime or validation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from nafdsim.config import RUN_STRUCTURES, load_config
from nafdsim.errors import ConfigError
from nafdsim.experiment import (
    PLOT_HEADER,
    VALIDATION_HEADER,
    feasibility_crossover,
    plot_rows,
    rows_to_csv,
    run_experiment,
    run_validation,
    validation_passed,
)

log = logging.getLogger("nafdsim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nafdsim", description="Cell-free NAFD/FD/HD system-level simulator.")
    p.add_argument("--config", required=True, help="INI experiment config")
    p.add_argument("--seed", type=int, help="override experiment.seed")
    p.add_argument("--output", help="output directory (overrides experiment.output)")
    p.add_argument("--mode", choices=("run", "validate"), default="run")
    p.add_argument("--structures", help="comma-separated subset of " + ",".join(RUN_STRUCTURES))
    p.add_argument("--threads", type=int, help="worker threads over topologies")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(cfg, args):
    exp = {}
    if args.seed is not None:
        exp["seed"] = args.seed
    if args.output is not None:
        exp["output"] = args.output
    if args.threads is not None:
        exp["threads"] = args.threads
    if args.structures is not None:
        exp["structures"] = tuple(s.strip().upper() for s in args.structures.split(",") if s.strip())
    return cfg.replace("experiment", **exp) if exp else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.experiment.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.mode == "validate":
            rows = run_validation(cfg)
            (out / "validation.csv").write_text(rows_to_csv(rows, VALIDATION_HEADER))
            failed = [r for r in rows if r[-1] != "pass"]
            print(f"validation: {len(rows) - len(failed)}/{len(rows)} term comparisons passed")
            for r in failed:
                print("FAIL", *r[:5], f"rel_error={r[7]:.4g}", f"tol={r[8]}")
            return EXIT_OK if validation_passed(rows) else EXIT_RUNTIME
        rows = run_experiment(cfg)
        (out / "results.csv").write_text(rows_to_csv(rows))
        (out / "plot_data.csv").write_text(rows_to_csv(plot_rows(rows), PLOT_HEADER))
        cross = feasibility_crossover(rows)
        print(f"wrote {out / 'results.csv'} ({len(rows)} rows)")
        print("feasibility crossover QoS:", ", ".join(f"{q:g}" for q in cross) or "none")
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
