"""Average EE and feasibility rate vs per-UE SE requirement for NAFD, FD and HD.

    python scripts/qos_sweep.py --config configs/default.ini --m 16 40 --output results/qos_sweep
"""
import argparse
from pathlib import Path

from nafdsim.config import load_config
from nafdsim.experiment import (
    PLOT_HEADER,
    feasibility_crossover,
    lookup,
    plot_rows,
    rows_to_csv,
    run_experiment,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    ap.add_argument("--config", default="configs/default.ini")
    ap.add_argument("--m", type=int, nargs="+", default=[40], help="AP counts to sweep")
    ap.add_argument("--topologies", type=int, help="override experiment.n_topologies")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--output", default="results/qos_sweep")
    args = ap.parse_args()

    base = load_config(args.config)
    if args.topologies:
        base = base.replace("experiment", n_topologies=args.topologies)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for m in args.m:
        cfg = base.replace("topology", m=m)
        rows = run_experiment(cfg, threads=args.threads)
        (out / f"results_m{m}.csv").write_text(rows_to_csv(rows))
        (out / f"plot_data_m{m}.csv").write_text(rows_to_csv(plot_rows(rows), PLOT_HEADER))
        print(f"M={m}")
        print(f"{'qos':>5} " + " ".join(f"{s + ' feas':>10} {s + ' EE':>10}"
                                        for s in cfg.experiment.structures))
        for q in cfg.experiment.qos_grid:
            cells = []
            for s in cfg.experiment.structures:
                cells.append(f"{lookup(rows, s, 'feasibility_rate')[q]:>10.2f}")
                cells.append(f"{lookup(rows, s, 'ee_mean')[q]:>10.3f}")
            print(f"{q:>5g} " + " ".join(cells))
        cross = feasibility_crossover(rows)
        print("crossover QoS:", ", ".join(f"{q:g}" for q in cross) or "none")


if __name__ == "__main__":
    main()
