"""Trainer command line: `train` and `goldens` subcommands."""

from __future__ import annotations

import argparse
import sys

from .goldens import export_goldens
from .train import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uista-train", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the unrolled network on a dataset")
    p.add_argument("--data", required=True, help="dataset directory (manifest.json layout)")
    p.add_argument("--out", required=True, help="output directory for weights.uwb + train_log.csv")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--freeze-unets", action="store_true")

    p = sub.add_parser("goldens", help="export golden inference vectors for a weight bundle")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask", default="29x29", help="sampling rectangle, e.g. 29x29")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        cfg = TrainConfig(epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch_size,
                          k=args.k, seed=args.seed, val_fraction=args.val_fraction,
                          freeze_unets=args.freeze_unets)
        result = train(args.data, args.out, cfg)
        first, last = result["epochs"][0], result["epochs"][-1]
        print(f"val loss {first['val_loss']:.6f} -> {last['val_loss']:.6f}; "
              f"wrote {result['weights']} and {result['log']}")
        return 0
    if args.command == "goldens":
        d_nu, d_tau = (int(v) for v in args.mask.lower().split("x"))
        manifest = export_goldens(args.weights, args.out, count=args.count, seed=args.seed,
                                  d_nu=d_nu, d_tau=d_tau)
        print(f"wrote {manifest['count']} goldens to {args.out}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
