"""Cycle-to-cycle deviation of autonomous letter writing for three model configurations."""

import argparse
import csv
import math
import sys

from bcil.autonomy import AutonomyConfig, run_autonomous
from bcil.episode import downsample
from bcil.errors import NoCycles
from bcil.metrics import metric_corridor, metric_cycle_variance
from bcil.seqmodel import ModelConfig, train
from bcil.tasks import make_task
from bcil.teleop import run_demo

MODELS = (("SM2SM", True), ("SM2SM", False), ("S2M", False))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--trials", type=int, default=2)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--epochs-ar", type=int, default=1500)
    p.add_argument("--height", type=float, default=55.0, help="paper height of the evaluation, mm")
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)

    data = [downsample(run_demo(make_task("write", height_mm=h), seed=s))
            for h in (35.0, 55.0, 75.0) for s in (1, 2)]
    task = make_task("write", height_mm=args.height, duration=22.0)

    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["seed", "model", "trial", "cycles", "cycle_dev", "success", "diagnostics"])
    for seed in range(args.seeds):
        for variant, ar in MODELS:
            cfg = ModelConfig(variant=variant, ar=ar, layers=2, units=32, window=50, batch=32,
                              epochs=args.epochs_ar if ar else args.epochs, lr=3e-3, seed=seed)
            model, _ = train(data, cfg)
            for trial in range(args.trials):
                ep = run_autonomous(model, task, AutonomyConfig(), seed=trial)
                res = metric_corridor(ep, task)
                try:
                    dev = metric_cycle_variance(ep, task)
                except NoCycles:
                    dev = math.inf
                w.writerow([seed, cfg.label, trial, res.values.get("cycles", 0), repr(dev),
                            int(res.success), ";".join(res.diagnostics)])
                out.flush()
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
