"""Run experiments at their acceptance settings and save JSON + text reports.

    python scripts/run_experiments.py                  # every experiment, seed 42
    python scripts/run_experiments.py mixing coupling --seed 7 --outdir results
    python scripts/run_experiments.py --quick          # smoke-test sizes
"""

import argparse
import time
from pathlib import Path

from grouplab import experiments as ex
from grouplab.cli import ALL_ORDER


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", default=list(ALL_ORDER), choices=list(ex.RUNNERS))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--outdir", default="results")
    args = parser.parse_args()

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for name in args.names:
        cfg = ex.make_config(name, quick=args.quick)
        t0 = time.perf_counter()
        rep = ex.RUNNERS[name](cfg, seed=args.seed, jobs=args.jobs)
        secs = time.perf_counter() - t0
        (out / f"{name}.json").write_text(rep.to_json() + "\n")
        (out / f"{name}.txt").write_text(rep.to_text() + "\n")
        counts = {k: v for k, v in rep.counts().items() if v}
        summary.append(f"{name:<14} {rep.verdict:<5} {secs:7.1f}s  {counts}")
        print(summary[-1], flush=True)
    (out / "summary.txt").write_text("\n".join(summary) + "\n")


if __name__ == "__main__":
    main()
