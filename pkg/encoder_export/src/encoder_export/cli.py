"""Command line interface: `encoder-export export ... <folder>`."""

from __future__ import annotations

import argparse
import logging

from .export import ExportSpec, export_features


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="encoder-export")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="encode an image folder into an LCF file")
    p.add_argument("folder", help="dataset root with one subdirectory per class")
    p.add_argument("--model", required=True)
    p.add_argument("--size", type=int, default=224)
    p.add_argument("--out", required=True)
    p.add_argument("--taps", type=int, nargs="*", default=[],
                   help="intermediate block indices to export instead of the final embedding")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--no-pretrained", action="store_true",
                   help="use seeded random weights instead of pretrained ones")
    p.add_argument("--init-seed", type=int, default=0)
    p.set_defaults(func=_cmd_export)
    return parser


def _cmd_export(args) -> int:
    spec = ExportSpec(
        model=args.model,
        image_size=args.size,
        out_path=args.out,
        taps=tuple(args.taps),
        batch_size=args.batch_size,
        pretrained=not args.no_pretrained,
        init_seed=args.init_seed,
    )
    data = export_features(spec, args.folder)
    print(f"wrote {data.n} x {data.d} features "
          f"({len(data.class_names)} classes) to {spec.out_path}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
