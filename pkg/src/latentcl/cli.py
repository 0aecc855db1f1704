"""Command line interface.

Subcommands: run (experiment config), synth (write a synthetic LCF),
similarity (overlap/cosine CSVs for an LCF), compute-model (cost curves),
info (inspect an LCF header).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .compute import CostModel, TaskLoad, end2end_er_cost, latent_er_cost
from .featurestore import read_lcf, split_dataset, write_lcf
from .runner import parse_config, parse_synth_config, run_experiment
from .similarity import average_overlap, class_prototype_similarity, subspace_overlap
from .streams import build_class_incremental
from .synth import generate_synthetic


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    result = run_experiment(cfg)
    print(f"wrote {len(result['cells'])} cells to {result['csv_path']}")
    if result["failures"]:
        print(f"{len(result['failures'])} cell group(s) failed; see failures.json")
        return 1
    return 0


def _cmd_synth(args) -> int:
    with open(args.synth_config, "r", encoding="utf-8") as fh:
        cfg = parse_synth_config(json.load(fh))
    ds = generate_synthetic(cfg)
    write_lcf(ds, args.out)
    print(f"wrote {ds.n} x {ds.d} features ({ds.n_classes} classes) to {args.out}")
    return 0


def _cmd_similarity(args) -> int:
    ds = read_lcf(args.input)
    split = split_dataset(ds, seed=args.seed)
    stream = build_class_incremental(split, args.tasks, args.seed)
    mats = [t.train.features for t in stream.tasks]
    n = len(mats)
    overlap = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            overlap[i, j] = overlap[j, i] = subspace_overlap(mats[i], mats[j], args.k)
    sim, sim_avg = class_prototype_similarity(ds)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# pairwise task subspace overlap"])
        for row in overlap:
            writer.writerow([repr(v) for v in row])
        writer.writerow(["# class prototype cosine similarity"])
        for row in sim:
            writer.writerow([repr(float(v)) for v in row])
    print(f"overlap_avg={average_overlap(mats, args.k)!r} class_sim_avg={sim_avg!r}")
    print(f"matrices written to {args.out}")
    return 0


def _cmd_compute_model(args) -> int:
    with open(args.params, "r", encoding="utf-8") as fh:
        p = json.load(fh)
    cost = CostModel(c_enc=p["c_enc"], n_z=p["latent_dim"], hidden=p.get("hidden", 1024))
    schedule = [
        TaskLoad(n_classes=p["classes_per_task"], samples_per_class=p["samples_per_class"])
        for _ in range(p["n_tasks"])
    ]
    epochs = p.get("epochs", 10)
    er = p.get("er_size", 20)
    _, latent = latent_er_cost(schedule, epochs, er, cost)
    _, end2end = end2end_er_cost(schedule, epochs, er, cost)
    writer = csv.writer(sys.stdout)
    writer.writerow(["task", "latent_flops", "end2end_flops", "ratio"])
    for t, (lf, ef) in enumerate(zip(latent, end2end)):
        writer.writerow([t, repr(lf), repr(ef), repr(ef / lf)])
    return 0


def _cmd_info(args) -> int:
    ds = read_lcf(args.input)
    print(f"encoder:  {ds.meta.encoder_name}")
    print(f"source:   {ds.meta.source_dataset}")
    print(f"samples:  {ds.n}")
    print(f"dim:      {ds.d}")
    print(f"classes:  {ds.n_classes}")
    print(f"enc flops/sample: {ds.meta.encode_flops_per_sample}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentcl")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic LCF dataset")
    p.add_argument("synth_config")
    p.add_argument("out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("similarity", help="similarity matrices for an LCF dataset")
    p.add_argument("input")
    p.add_argument("--tasks", type=int, default=5)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("compute-model", help="latent vs end2end cost curves")
    p.add_argument("params", help="JSON file with c_enc, latent_dim, n_tasks, ...")
    p.set_defaults(func=_cmd_compute_model)

    p = sub.add_parser("info", help="inspect an LCF file")
    p.add_argument("input")
    p.set_defaults(func=_cmd_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
