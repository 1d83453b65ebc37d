"""Weights interchange file writer.

The file is consumed by the runtime package: JSON carrying the layer
dimensions, per-layer row-major real/imaginary weight and bias arrays, and
a recorded reference forward pass for load-time validation.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .data import TrainConfig, TrainSample
from .model import StepSizeNet

FORMAT_VERSION = "1"


def _forward_float64(layers, vec: np.ndarray) -> np.ndarray:
    """Reference forward pass on float64 copies of the stored arrays."""
    z = vec
    for i, (w, b) in enumerate(layers):
        z = z @ w.T + b
        if i < len(layers) - 1:
            z = np.maximum(z.real, 0.0) + 1j * np.maximum(z.imag, 0.0)
    return np.abs(z.real + z.imag)


def export_weights(net: StepSizeNet, cfg: TrainConfig, reference: TrainSample, path) -> Path:
    """Write the network with a reference input/output pair for validation."""
    layers_np = []
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        w = (layer.w_real.detach().numpy().astype(float)
             + 1j * layer.w_imag.detach().numpy().astype(float))
        b = (layer.b_real.detach().numpy().astype(float)
             + 1j * layer.b_imag.detach().numpy().astype(float))
        if i == last:
            # the abs-combine output is positively homogeneous, so the
            # training-side output scale folds exactly into the last layer
            w = net.output_scale * w
            b = net.output_scale * b
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("network weights contain non-finite values")
        layers_np.append((w, b))

    vec = np.concatenate([reference.ls_solution, reference.egrad0, reference.rgrad0])
    ref_out = _forward_float64(layers_np, vec)

    doc = {
        "format_version": FORMAT_VERSION,
        "depth": cfg.depth,
        "layer_dims": list(cfg.layer_dims),
        "num_antennas": cfg.num_antennas,
        "unfold_steps": cfg.unfold_steps,
        "spacing_over_wavelength": cfg.spacing_over_wavelength,
        "seed": cfg.seed,
        "layers": [
            {
                "w_real": w.real.ravel().tolist(),
                "w_imag": w.imag.ravel().tolist(),
                "b_real": b.real.tolist(),
                "b_imag": b.imag.tolist(),
            }
            for w, b in layers_np
        ],
        "reference_input": {"real": vec.real.tolist(), "imag": vec.imag.tolist()},
        "reference_output": ref_out.tolist(),
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path
