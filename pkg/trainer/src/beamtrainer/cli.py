"""Command line entry: train a step-size network and export its weights."""

from __future__ import annotations

import argparse
from pathlib import Path

import torch

from .data import TrainConfig
from .export import export_weights
from .train import loss_csv_lines, train


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beamtrainer",
                                description="Train the unfolded step-size network")
    p.add_argument("--num-antennas", type=int, default=64)
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=15, help="unfolded iteration count T")
    p.add_argument("--depth", type=int, default=3, choices=[3, 5])
    p.add_argument("--dataset-size", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--float32", action="store_true", help="train in single precision")
    p.add_argument("--out", required=True, help="weights JSON output path")
    p.add_argument("--loss-csv", default=None, help="optional loss curve CSV path")
    p.add_argument("--log-every", type=int, default=10)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = TrainConfig(
        num_antennas=args.num_antennas,
        spacing_over_wavelength=args.spacing,
        unfold_steps=args.steps,
        depth=args.depth,
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        dataset_size=args.dataset_size,
    )
    dtype = torch.float32 if args.float32 else torch.float64
    result = train(cfg, dtype=dtype, log_every=args.log_every)
    export_weights(result.net, cfg, result.samples[0], args.out)
    print(f"initial loss {result.loss_curve[0]:.6g}, final {result.loss_curve[-1]:.6g}")
    print(f"wrote {args.out}")
    if args.loss_csv:
        Path(args.loss_csv).write_text("\n".join(loss_csv_lines(result.loss_curve)) + "\n")
        print(f"wrote {args.loss_csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
