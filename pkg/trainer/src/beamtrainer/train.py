"""Optimization loop for the step-size network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .data import TrainConfig, generate_dataset, pad_and_stack
from .model import StepSizeNet, unfold_loss


@dataclass
class TrainResult:
    net: StepSizeNet
    config: TrainConfig
    #: mean training loss per epoch; index 0 is the pre-training evaluation
    loss_curve: list[float]
    samples: list


def _to_tensors(samples, dtype):
    a, u, w0, inputs = pad_and_stack(samples)
    cdtype = torch.complex128 if dtype == torch.float64 else torch.complex64
    return (
        torch.from_numpy(a).to(cdtype),
        torch.from_numpy(u).to(cdtype),
        torch.from_numpy(w0).to(cdtype),
        torch.from_numpy(inputs).to(cdtype),
    )


def train(cfg: TrainConfig, dtype=torch.float64, log_every: int = 0) -> TrainResult:
    """Train on a freshly generated dataset; deterministic for a seed.

    The loss averages the squared residual over every unfolded iteration,
    so intermediate iterates are supervised, not just the final one. A
    non-finite loss aborts with a diagnostic.
    """
    torch.manual_seed(cfg.seed)
    samples = generate_dataset(cfg)
    a, u, w0, inputs = _to_tensors(samples, dtype)

    input_rms = float(torch.sqrt((inputs.abs() ** 2).mean()))
    # safe starting step: inverse total steering power bounds 1/lambda_max
    step_scale = float(np.median([1.0 / (np.abs(s.steering) ** 2).sum() for s in samples]))
    net = StepSizeNet(cfg.layer_dims, seed=cfg.seed, dtype=dtype,
                      input_rms=input_rms, output_scale=step_scale)
    with torch.no_grad():
        initial = float(unfold_loss(a, u, w0, net(inputs)))
    loss_curve = [initial]
    if cfg.epochs == 0:
        return TrainResult(net, cfg, loss_curve, samples)

    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    count = len(samples)
    order_rng = np.random.default_rng(cfg.seed + 1)
    for epoch in range(cfg.epochs):
        order = order_rng.permutation(count)
        epoch_losses = []
        for start in range(0, count, cfg.batch_size):
            idx = torch.from_numpy(order[start:start + cfg.batch_size].copy())
            optimizer.zero_grad()
            loss = unfold_loss(a[idx], u[idx], w0[idx], net(inputs[idx]))
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite training loss at epoch {epoch}: {loss.item()!r}"
                )
            loss.backward()
            optimizer.step()
            epoch_losses.append(loss.item())
        loss_curve.append(float(np.mean(epoch_losses)))
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1:4d}: loss {loss_curve[-1]:.6g}")
    return TrainResult(net, cfg, loss_curve, samples)


def smoothed(curve, window: int = 5) -> np.ndarray:
    """Moving average with edge truncation, for trend checks."""
    arr = np.asarray(curve, dtype=float)
    if arr.size <= window:
        return arr
    kernel = np.ones(window) / window
    return np.convolve(arr, kernel, mode="valid")


def loss_csv_lines(curve) -> list[str]:
    lines = ["epoch,loss"]
    for i, v in enumerate(curve):
        lines.append(f"{i},{float(v)!r}")
    return lines
