"""Closed-form SE terms against Monte-Carlo averages over small-scale fading.

    python scripts/validate_oracle.py --config configs/validation.ini
"""
import argparse
import sys
from pathlib import Path

from nafdsim.config import load_config
from nafdsim.experiment import VALIDATION_HEADER, rows_to_csv, run_validation, validation_passed


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    ap.add_argument("--config", default="configs/validation.ini")
    ap.add_argument("--draws", type=int, help="override validation.n_fading_draws")
    ap.add_argument("--output", default="results/validation")
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.draws:
        cfg = cfg.replace("validation", n_fading_draws=args.draws)
    rows = run_validation(cfg)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.csv").write_text(rows_to_csv(rows, VALIDATION_HEADER))

    worst = {}
    for s, ups, direction, term, _, _, _, rel, _, _ in rows:
        key = (s, ups, direction, term)
        worst[key] = max(worst.get(key, 0.0), rel)
    print(f"{'structure':<6} {'ups':>5} {'dir':<3} {'term':<10} {'worst rel err':>14}")
    for (s, ups, d, term), rel in worst.items():
        print(f"{s:<6} {ups:>5g} {d:<3} {term:<10} {rel:>14.4%}")
    ok = validation_passed(rows)
    print("all terms within tolerance" if ok else "some terms outside tolerance")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
