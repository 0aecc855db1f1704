#!/usr/bin/env python3
"""Compare metric classifiers against the replay MLP across buffer sizes.

Runs NMC, SLDA, and the MLP at several replay buffer sizes on two synthetic
streams (low and high prototype similarity) and prints a per-stream table of
final accuracies.
"""

import argparse
import sys

from latentcl.classifiers import Hyperparams
from latentcl.featurestore import split_dataset
from latentcl.metrics import ClassifierSpec, run_protocol
from latentcl.streams import build_class_incremental
from latentcl.synth import SynthConfig, generate_synthetic


def build_stream(rho, args, seed=0):
    cfg = SynthConfig(
        latent_dim=args.latent_dim, n_classes=args.classes,
        samples_per_class=args.samples_per_class, test_samples_per_class=0,
        target_similarity=rho, within_class_noise=args.noise,
        seed=seed, shared_noise_scale=args.shared_noise,
    )
    split = split_dataset(generate_synthetic(cfg), (0.7, 0.1, 0.2), seed=seed)
    return build_class_incremental(split, args.tasks, ordering_seed=seed)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rhos", type=float, nargs="+", default=[0.1, 0.9])
    ap.add_argument("--er-sizes", type=int, nargs="+", default=[2, 10, 50])
    ap.add_argument("--latent-dim", type=int, default=128)
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--tasks", type=int, default=5)
    ap.add_argument("--samples-per-class", type=int, default=100)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--shared-noise", type=float, default=0.5)
    ap.add_argument("--epochs", type=int, default=6)
    args = ap.parse_args(argv)

    hp = Hyperparams(learning_rate=0.05, epochs=args.epochs, batch_size=32)
    mlp = ClassifierSpec("mlp", hp, hidden=128)
    for rho in args.rhos:
        stream = build_stream(rho, args)
        _, nmc = run_protocol(stream, ClassifierSpec("nmc"), "CL", 0, 0)
        _, slda = run_protocol(stream, ClassifierSpec("slda"), "CL", 0, 0)
        print(f"\nrho={rho}")
        print(f"  nmc   a_cl={nmc:.3f}")
        print(f"  slda  a_cl={slda:.3f}")
        for er in args.er_sizes:
            _, a_cl = run_protocol(stream, mlp, "CL", er, 0)
            print(f"  mlp er={er:<4d} a_cl={a_cl:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
