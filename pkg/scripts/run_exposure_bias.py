"""Free-running prediction error of SM2SM with and without autoregressive learning.

Trains both models on write-task demonstrations for several seeds and writes
the open-loop MSE at a few horizons on a held-out demonstration.
"""

import argparse
import csv
import sys

from bcil.episode import downsample
from bcil.metrics import metric_open_loop
from bcil.seqmodel import ModelConfig, train
from bcil.tasks import make_task
from bcil.teleop import run_demo


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--epochs-ar", type=int, default=300)
    p.add_argument("--horizons", default="1,10,50,100")
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)

    demos = [run_demo(make_task("write", height_mm=h), seed=s) for h in (35.0, 55.0, 75.0) for s in (1, 2)]
    data = [downsample(ep) for ep in demos]
    held = run_demo(make_task("write", height_mm=55.0), seed=9)
    horizons = [int(h) for h in args.horizons.split(",")]

    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["seed", "model", "final_loss"] + [f"mse_{h}" for h in horizons])
    for seed in range(args.seeds):
        for ar in (False, True):
            cfg = ModelConfig(variant="SM2SM", ar=ar, layers=2, units=32, window=50, batch=32,
                              epochs=args.epochs_ar if ar else args.epochs, lr=3e-3, seed=seed)
            model, rep = train(data, cfg)
            w.writerow([seed, cfg.label, repr(rep.losses[-1])]
                       + [repr(metric_open_loop(model, held, h)) for h in horizons])
            out.flush()
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
