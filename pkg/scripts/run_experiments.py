#!/usr/bin/env python3
"""Run the structure, model and value sweeps from configs/ and print per-grid means.

    python3 scripts/run_experiments.py [--jobs N] [--out DIR] [names...]
"""

import argparse
import os
import time

from causal_ctm.experiments import load_config, run_experiment

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = {
    "structure": ("structure", "structure.yaml", "ged"),
    "model": ("model", "model.yaml", "model_l1"),
    "model_mirrored": ("model", "model_mirrored.yaml", "model_l1"),
    "value": ("value", "value.yaml", "suboptimality_gap"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=list(CONFIGS), choices=list(CONFIGS))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="override the output root")
    args = ap.parse_args()
    for name in args.names:
        kind, fname, metric = CONFIGS[name]
        config = load_config(os.path.join(HERE, "..", "configs", fname), jobs=args.jobs)
        if args.out:
            config.out = os.path.join(args.out, name)
        t0 = time.perf_counter()
        result = run_experiment(kind, config)
        csv_path, _ = result.write(config.out)
        print(f"[{name}] {time.perf_counter() - t0:.1f}s -> {csv_path}")
        for samples, mean in result.means(metric):
            print(f"  samples={samples:>9d}  mean {metric}={mean:.4f}")


if __name__ == "__main__":
    main()
