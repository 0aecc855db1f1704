#!/usr/bin/env python3
"""Print latent vs end-to-end replay training cost curves for one schedule.

Evaluates the analytic flop model over a class-incremental schedule and
prints per-task and cumulative costs plus the cumulative cost ratio.
"""

import argparse
import csv
import sys

from latentcl.compute import (CostModel, TaskLoad, end2end_er_cost,
                              latent_er_cost, metric_classifier_cost)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c-enc", type=float, default=1.76e10,
                    help="encoder forward flops per sample")
    ap.add_argument("--latent-dim", type=int, default=768)
    ap.add_argument("--hidden", type=int, default=1024)
    ap.add_argument("--tasks", type=int, default=5)
    ap.add_argument("--classes-per-task", type=int, default=20)
    ap.add_argument("--samples-per-class", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--er-size", type=int, default=20)
    args = ap.parse_args(argv)

    cost = CostModel(c_enc=args.c_enc, n_z=args.latent_dim, hidden=args.hidden)
    schedule = [TaskLoad(args.classes_per_task, args.samples_per_class)
                for _ in range(args.tasks)]
    lat_per, lat_cum = latent_er_cost(schedule, args.epochs, args.er_size, cost)
    e2e_per, e2e_cum = end2end_er_cost(schedule, args.epochs, args.er_size, cost)

    writer = csv.writer(sys.stdout)
    writer.writerow(["task", "latent_flops", "latent_cumulative",
                     "end2end_flops", "end2end_cumulative", "cumulative_ratio"])
    for t in range(args.tasks):
        writer.writerow([t, f"{lat_per[t]:.4e}", f"{lat_cum[t]:.4e}",
                         f"{e2e_per[t]:.4e}", f"{e2e_cum[t]:.4e}",
                         f"{e2e_cum[t] / lat_cum[t]:.2f}"])

    n = sum(load.n_samples for load in schedule)
    classes = args.tasks * args.classes_per_task
    for kind in ("nmc", "slda"):
        total = metric_classifier_cost(kind, n, classes, cost)
        print(f"# {kind} total over the stream: {total:.4e} flops", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
