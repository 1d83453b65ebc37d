"""Learned step-size inference for fixed-depth manifold descent.

A small complex-valued network maps a least-squares instance to one step
size per descent iteration, replacing the backtracking search at run time.
Weights are trained offline and loaded from a self-describing JSON
interchange file that carries reference vectors for round-trip validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError
from .manifold import (
    LsSystem,
    euclidean_gradient,
    retract,
    riemannian_project,
    unit_phases,
)

FORMAT_VERSION = "1"
#: relative tolerance for the reference forward-pass check at load time
REFERENCE_RTOL = 1e-5
_RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class CvnnLayer:
    weight: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class CvnnWeights:
    """Layered complex linear network predicting nonnegative step sizes."""

    layers: tuple[CvnnLayer, ...]
    depth: int
    layer_dims: tuple[int, ...]

    def __post_init__(self):
        if self.depth not in (3, 5):
            raise ConfigurationError(f"network depth must be 3 or 5, got {self.depth}")
        if len(self.layers) != self.depth:
            raise ConfigurationError("layer count does not match depth")
        if len(self.layer_dims) != self.depth + 1:
            raise ConfigurationError("layer_dims must have depth + 1 entries")
        for i, layer in enumerate(self.layers):
            expect = (self.layer_dims[i + 1], self.layer_dims[i])
            if layer.weight.shape != expect:
                raise ConfigurationError(
                    f"layer {i} weight shape {layer.weight.shape}, expected {expect}"
                )
            if layer.bias.shape != (self.layer_dims[i + 1],):
                raise ConfigurationError(f"layer {i} bias has wrong length")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def unfold_steps(self) -> int:
        return self.layer_dims[-1]


@dataclass(frozen=True)
class UnfoldInput:
    """Network inputs describing one least-squares instance."""

    ls_solution: np.ndarray
    egrad0: np.ndarray
    rgrad0: np.ndarray

    def __post_init__(self):
        sizes = {self.ls_solution.size, self.egrad0.size, self.rgrad0.size}
        if len(sizes) != 1:
            raise DomainError("unfold input vectors must have equal lengths")

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.ls_solution, self.egrad0, self.rgrad0])


def crelu(z: np.ndarray) -> np.ndarray:
    """Ramp applied independently to real and imaginary parts."""
    z = np.asarray(z, dtype=complex)
    return np.maximum(z.real, 0.0) + 1j * np.maximum(z.imag, 0.0)


def abs_combine(z: np.ndarray) -> np.ndarray:
    """Collapse to a nonnegative real vector: ``|real(z) + imag(z)|``."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z.real + z.imag)


def predict_step_sizes(inp: UnfoldInput, weights: CvnnWeights) -> np.ndarray:
    """Forward pass: complex linear layers with CReLU, abs-combined output."""
    x = inp.concatenated()
    if x.size != weights.input_dim:
        raise DomainError(
            f"input length {x.size} does not match network input {weights.input_dim}"
        )
    for layer in weights.layers[:-1]:
        x = crelu(layer.weight @ x + layer.bias)
    last = weights.layers[-1]
    return abs_combine(last.weight @ x + last.bias)


def ls_solution(sys: LsSystem, ridge_scale: float = _RIDGE_SCALE) -> tuple[np.ndarray, float]:
    """Solve ``(A A^H) x = A conj(u)``, with an automatic ridge on failure.

    Returns ``(x, gamma)``; a nonzero ``gamma`` marks the ridge fallback.
    """
    a = sys.steering
    gram = a @ a.conj().T
    rhs = a @ sys.targets.conj()
    try:
        x = np.linalg.solve(gram, rhs)
        ok = np.all(np.isfinite(x)) and (
            np.linalg.norm(gram @ x - rhs) <= 1e-6 * max(np.linalg.norm(rhs), 1e-300)
        )
    except np.linalg.LinAlgError:
        ok = False
    if ok:
        return x, 0.0
    gamma = ridge_scale * max(float(np.real(np.trace(gram))), 1e-300) / gram.shape[0]
    x = np.linalg.solve(gram + gamma * np.eye(gram.shape[0]), rhs)
    return x, gamma


def init_w0(sys: LsSystem) -> np.ndarray:
    """Unconstrained least-squares start ``(A A^H)^-1 A conj(u)``.

    Project with ``unit_phases`` before using it as a manifold point.
    """
    return ls_solution(sys)[0]


def make_unfold_input(sys: LsSystem) -> tuple[UnfoldInput, np.ndarray]:
    """Build network inputs and the projected start point for an instance.

    Gradients are evaluated at the projected start: at the raw least-squares
    point the Euclidean gradient vanishes identically and carries nothing.
    """
    ls = init_w0(sys)
    w0 = unit_phases(ls)
    egrad0 = euclidean_gradient(w0, sys)
    rgrad0 = riemannian_project(egrad0, w0)
    return UnfoldInput(ls, egrad0, rgrad0), w0


def unfolded_rgd(w0: np.ndarray, sys: LsSystem, steps) -> np.ndarray:
    """Exactly ``len(steps)`` descent iterations with fixed step sizes."""
    steps = np.asarray(steps, dtype=float).ravel()
    if steps.size and steps.min() < 0:
        raise DomainError("step sizes must be >= 0")
    w = np.asarray(w0, dtype=complex).ravel()
    for mu in steps:
        rgrad = riemannian_project(euclidean_gradient(w, sys), w)
        w = retract(w, rgrad, float(mu))
    return w


def _as_float_array(obj, length: int, what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=float).ravel()
    if arr.size != length:
        raise ConfigurationError(f"{what} has length {arr.size}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{what} contains non-finite values")
    return arr


def load_weights(path) -> CvnnWeights:
    """Parse and validate a weights interchange file.

    The stored reference input must reproduce the stored reference output
    through the loaded network within ``REFERENCE_RTOL`` relative error.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot parse weights file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("weights file must contain a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported weights format_version {doc.get('format_version')!r}"
        )
    try:
        depth = int(doc["depth"])
        dims = tuple(int(d) for d in doc["layer_dims"])
        raw_layers = doc["layers"]
        ref_in = doc["reference_input"]
        ref_out = doc["reference_output"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"weights file missing or malformed field: {exc}") from exc
    if len(raw_layers) != depth:
        raise ConfigurationError("layer list does not match depth")

    layers = []
    for i, raw in enumerate(raw_layers):
        out_dim, in_dim = dims[i + 1], dims[i]
        wr = _as_float_array(raw.get("w_real"), out_dim * in_dim, f"layer {i} w_real")
        wi = _as_float_array(raw.get("w_imag"), out_dim * in_dim, f"layer {i} w_imag")
        br = _as_float_array(raw.get("b_real"), out_dim, f"layer {i} b_real")
        bi = _as_float_array(raw.get("b_imag"), out_dim, f"layer {i} b_imag")
        layers.append(CvnnLayer(
            weight=(wr + 1j * wi).reshape(out_dim, in_dim),
            bias=br + 1j * bi,
        ))
    weights = CvnnWeights(layers=tuple(layers), depth=depth, layer_dims=dims)

    n = dims[0]
    ref_re = _as_float_array(ref_in.get("real"), n, "reference_input real")
    ref_im = _as_float_array(ref_in.get("imag"), n, "reference_input imag")
    expected = _as_float_array(ref_out, dims[-1], "reference_output")
    third = n // 3
    if third * 3 != n:
        raise ConfigurationError("network input dimension must be divisible by 3")
    vec = ref_re + 1j * ref_im
    probe = UnfoldInput(vec[:third], vec[third:2 * third], vec[2 * third:])
    got = predict_step_sizes(probe, weights)
    scale = max(float(np.linalg.norm(expected)), 1e-300)
    if np.linalg.norm(got - expected) > REFERENCE_RTOL * scale:
        raise ConfigurationError("weights file failed its reference forward check")
    return weights


def packaged_weights_path(name: str = "cvnn_nr64_t15_d3.json") -> Path:
    """Path of a weights file shipped inside the package."""
    return Path(__file__).parent / "weights" / name
