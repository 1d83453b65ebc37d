"""Complex-valued step-size network and the differentiable unfolded solver."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

#: lower clamp on magnitudes inside the training graph, where the phase
#: projection is otherwise non-differentiable at zero
ANGLE_EPS = 1e-12


def crelu(z: torch.Tensor) -> torch.Tensor:
    return torch.complex(torch.relu(z.real), torch.relu(z.imag))


def abs_combine(z: torch.Tensor) -> torch.Tensor:
    return (z.real + z.imag).abs()


class ComplexLinear(nn.Module):
    """Dense complex layer stored as separate real and imaginary parts."""

    def __init__(self, in_dim: int, out_dim: int, generator: torch.Generator,
                 dtype=torch.float64, weight_scale: float = 1.0):
        super().__init__()
        scale = weight_scale / np.sqrt(2.0 * in_dim)
        self.w_real = nn.Parameter(scale * torch.randn(out_dim, in_dim, generator=generator, dtype=dtype))
        self.w_imag = nn.Parameter(scale * torch.randn(out_dim, in_dim, generator=generator, dtype=dtype))
        self.b_real = nn.Parameter(torch.zeros(out_dim, dtype=dtype))
        self.b_imag = nn.Parameter(torch.zeros(out_dim, dtype=dtype))

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        w = torch.complex(self.w_real, self.w_imag)
        b = torch.complex(self.b_real, self.b_imag)
        return z @ w.mT + b


class StepSizeNet(nn.Module):
    """Predicts one nonnegative step size per unfolded iteration.

    Complex linear layers with CReLU activations, except the last layer
    whose real and imaginary parts are summed and passed through an
    absolute value, keeping every step size nonnegative.

    ``input_rms`` rescales the first layer's initialization so raw
    instance-sized inputs land in a unit activation range. ``output_scale``
    multiplies the final abs-combined output, letting every parameter train
    at unit scale while predicted steps start near a known-safe size (the
    phase retraction is scale invariant for oversized steps, which kills
    the training gradient if the net starts there). Since the final
    activation is positively homogeneous, the scale folds exactly into the
    last layer's stored weights at export time.
    """

    def __init__(self, layer_dims, seed: int = 0, dtype=torch.float64,
                 input_rms: float = 1.0, output_scale: float = 1.0):
        super().__init__()
        generator = torch.Generator().manual_seed(seed)
        self.layer_dims = tuple(int(d) for d in layer_dims)
        self.output_scale = float(output_scale)
        layers = []
        last = len(self.layer_dims) - 2
        for i in range(len(self.layer_dims) - 1):
            scale = 1.0
            if i == 0:
                scale = 1.0 / max(input_rms, 1e-30)
            if i == last:
                scale = 0.01
            layers.append(ComplexLinear(self.layer_dims[i], self.layer_dims[i + 1],
                                        generator, dtype, weight_scale=scale))
        self.layers = nn.ModuleList(layers)
        # start every step at exactly output_scale
        with torch.no_grad():
            self.layers[-1].b_real.fill_(1.0)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        for layer in self.layers[:-1]:
            z = crelu(layer(z))
        return self.output_scale * abs_combine(self.layers[-1](z))


def unit_project(z: torch.Tensor) -> torch.Tensor:
    """Differentiable phase projection z/|z| with a magnitude floor."""
    return z / torch.clamp(z.abs(), min=ANGLE_EPS)


def unfold_objectives(a: torch.Tensor, u: torch.Tensor, w0: torch.Tensor,
                      steps: torch.Tensor) -> torch.Tensor:
    """Residuals along the unfolded descent trajectory.

    ``a`` is (batch, n, k), ``u`` (batch, k), ``w0`` (batch, n), ``steps``
    (batch, T). Returns (batch, T) squared residuals after each iteration;
    gradients flow through the projection and retraction of every step.
    """
    w = w0
    out = []
    for t in range(steps.shape[1]):
        resid = u - torch.einsum("bn,bnk->bk", w.conj(), a)
        egrad = torch.einsum("bnk,bk->bn", a, -resid.conj())
        rgrad = egrad - (egrad * w.conj()).real.to(egrad.dtype) * w
        w = unit_project(w - steps[:, t:t + 1].to(egrad.dtype) * rgrad)
        resid = u - torch.einsum("bn,bnk->bk", w.conj(), a)
        out.append((resid.abs() ** 2).sum(dim=1))
    return torch.stack(out, dim=1)


def unfold_loss(a, u, w0, steps) -> torch.Tensor:
    """Mean over iterations and batch of the squared residual."""
    return unfold_objectives(a, u, w0, steps).mean()
