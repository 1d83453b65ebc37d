"""Hardware non-ideality models and phase-code compensation for planar arrays.

Covers per-channel gain and phase inconsistency, b-bit phase quantization,
measured nonlinear code-to-phase maps, and code selection by cosine
similarity against the ideal weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arrays import UpaGeometry, upa_steering
from .errors import ConfigurationError, DomainError

TWO_PI = 2.0 * np.pi


@dataclass
class ImpairmentModel:
    """Per-channel error state of one planar array.

    ``phase_map[c, k]`` is the measured phase a channel ``c`` produces for
    shifter code ``k`` (radians in [0, 2pi)); channels are indexed row-major
    over the array. ``phase_map`` may be None until a table is attached.
    """

    gain_err: np.ndarray
    phase_err: np.ndarray
    sigma_a: float
    sigma_p: float
    bits: int
    phase_map: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        self.gain_err = np.asarray(self.gain_err, dtype=float)
        self.phase_err = np.asarray(self.phase_err, dtype=float)
        if self.gain_err.shape != self.phase_err.shape:
            raise ConfigurationError("gain and phase error grids must share a shape")
        if self.bits < 1:
            raise ConfigurationError("phase shifter resolution must be >= 1 bit")
        if self.phase_map is not None:
            self.phase_map = np.asarray(self.phase_map, dtype=float)
            expect = (self.gain_err.size, 2 ** self.bits)
            if self.phase_map.shape != expect:
                raise ConfigurationError(
                    f"phase map shape {self.phase_map.shape}, expected {expect}"
                )
            if np.any(self.phase_map < 0) or np.any(self.phase_map >= TWO_PI):
                raise ConfigurationError("phase map entries must lie in [0, 2pi)")

    @property
    def num_channels(self) -> int:
        return self.gain_err.size

    @property
    def delta(self) -> float:
        """Quantizer resolution 2pi / 2^bits."""
        return TWO_PI / (2 ** self.bits)


def sample_errors(geom: UpaGeometry, sigma_a: float, sigma_p: float, seed: int,
                  bits: int = 6) -> ImpairmentModel:
    """Draw independent zero-mean normal gain/phase errors per channel."""
    if sigma_a < 0 or sigma_p < 0:
        raise DomainError("error standard deviations must be >= 0")
    rng = np.random.default_rng(seed)
    gain = sigma_a * rng.standard_normal((geom.rows, geom.cols))
    phase = sigma_p * rng.standard_normal((geom.rows, geom.cols))
    return ImpairmentModel(gain, phase, sigma_a, sigma_p, bits, seed=seed)


def apply_channel_errors(weights: np.ndarray, model: ImpairmentModel) -> np.ndarray:
    """Actual radiated weights ``(1 + gain_err) * exp(j*phase_err) * W``."""
    w = np.asarray(weights, dtype=complex)
    if w.shape != model.gain_err.shape:
        raise DomainError(f"weights shape {w.shape} does not match error grids")
    return (1.0 + model.gain_err) * np.exp(1j * model.phase_err) * w


def quantize_phase(phi, bits: int):
    """Round a phase to the nearest b-bit shifter code.

    Returns ``(code, error)`` with ``code = round(phi/delta) mod 2^b``
    (half-up ties) and ``error in [-delta/2, delta/2)``.
    """
    if bits < 1:
        raise DomainError("bits must be >= 1")
    delta = TWO_PI / (2 ** bits)
    phi_arr = np.asarray(phi, dtype=float)
    wrapped = np.mod(phi_arr, TWO_PI)
    raw = np.floor(wrapped / delta + 0.5).astype(int)
    err = wrapped - raw * delta
    code = np.mod(raw, 2 ** bits)
    if np.isscalar(phi) or np.ndim(phi) == 0:
        return int(code), float(err)
    return code, err


def identity_phase_map(bits: int, num_channels: int) -> np.ndarray:
    """Nominal linear map: code k produces phase k * delta on every channel."""
    codes = np.arange(2 ** bits)
    return np.tile(codes * (TWO_PI / (2 ** bits)), (num_channels, 1))


def perturbed_phase_map(bits: int, num_channels: int, amplitude: float, seed: int) -> np.ndarray:
    """Nonlinear measured-style map: linear map plus a smooth deviation.

    Each channel gets a random two-harmonic deviation of the given peak
    amplitude (radians), mimicking code-dependent shifter nonlinearity.
    """
    rng = np.random.default_rng(seed)
    codes = np.arange(2 ** bits)
    base = codes * (TWO_PI / (2 ** bits))
    maps = np.empty((num_channels, codes.size))
    for c in range(num_channels):
        a1, a2 = amplitude * rng.uniform(0.3, 1.0, size=2)
        p1, p2 = rng.uniform(0.0, TWO_PI, size=2)
        dev = a1 * np.sin(TWO_PI * codes / codes.size + p1) \
            + a2 * np.sin(2 * TWO_PI * codes / codes.size + p2)
        maps[c] = np.mod(base + dev, TWO_PI)
    return maps


def nonlinear_map_phase(code: int, channel: int, model: ImpairmentModel) -> float:
    """Measured phase produced by ``code`` on ``channel`` (no interpolation)."""
    if model.phase_map is None:
        raise ConfigurationError("impairment model has no phase map table")
    if not 0 <= code < 2 ** model.bits:
        raise DomainError(f"code {code} out of range for {model.bits} bits")
    if not 0 <= channel < model.num_channels:
        raise DomainError(f"channel {channel} out of range")
    return float(model.phase_map[channel, code])


def select_codes_cosine(ideal_weights: np.ndarray, model: ImpairmentModel) -> np.ndarray:
    """Per-channel code choice maximizing alignment with the ideal weight.

    For unit-modulus weights, maximizing the per-channel real part
    ``real(conj(w) * exp(j*mapped_phase))`` maximizes the real part of the
    full-vector cosine similarity. Ties resolve to the lowest code.
    """
    if model.phase_map is None:
        raise ConfigurationError("impairment model has no phase map table")
    w = np.asarray(ideal_weights, dtype=complex)
    if w.shape != model.gain_err.shape:
        raise DomainError(f"weights shape {w.shape} does not match the model grid")
    target = np.angle(w).ravel()
    score = np.cos(model.phase_map - target[:, None])
    codes = np.argmax(score, axis=1)
    return codes.reshape(w.shape).astype(int)


def codes_to_weights(codes: np.ndarray, model: ImpairmentModel,
                     include_errors: bool = True) -> np.ndarray:
    """Radiated weights for a code matrix under the model's phase map."""
    if model.phase_map is None:
        raise ConfigurationError("impairment model has no phase map table")
    codes = np.asarray(codes, dtype=int)
    if codes.shape != model.gain_err.shape:
        raise DomainError("code matrix shape does not match the model grid")
    phases = model.phase_map[np.arange(codes.size), codes.ravel()].reshape(codes.shape)
    w = np.exp(1j * phases)
    if include_errors:
        w = (1.0 + model.gain_err) * np.exp(1j * model.phase_err) * w
    return w


@dataclass
class ImpairedPatterns:
    theta_deg: np.ndarray
    phi_deg: float
    ideal: np.ndarray
    uncorrected: np.ndarray
    compensated: np.ndarray


def impaired_pattern(ideal_weights: np.ndarray, model: ImpairmentModel, geom: UpaGeometry,
                     theta_deg, phi_deg: float = 90.0,
                     wavenumber_scale: float = 1.0) -> ImpairedPatterns:
    """Evaluate a cut of the array pattern under three weight realizations.

    ideal: the requested weights, error free. uncorrected: phases rounded on
    the assumed linear code map, radiated through the true nonlinear map and
    channel errors. compensated: initial phase inconsistency removed, codes
    chosen by cosine similarity under the true map, then radiated through
    the same errors.
    """
    w = np.asarray(ideal_weights, dtype=complex)
    if w.shape != (geom.rows, geom.cols):
        raise DomainError("ideal weights do not match the array geometry")
    if model.phase_map is None:
        raise ConfigurationError("impairment model has no phase map table")

    naive_codes, _ = quantize_phase(np.angle(w), model.bits)
    uncorrected_w = codes_to_weights(naive_codes, model)

    detrended = w * np.exp(-1j * model.phase_err)
    comp_codes = select_codes_cosine(detrended, model)
    compensated_w = codes_to_weights(comp_codes, model)

    theta = np.asarray(theta_deg, dtype=float).ravel()
    steer = np.stack([upa_steering(geom, t, phi_deg, wavenumber_scale) for t in theta], axis=1)
    return ImpairedPatterns(
        theta_deg=theta,
        phi_deg=float(phi_deg),
        ideal=w.ravel() @ steer,
        uncorrected=uncorrected_w.ravel() @ steer,
        compensated=compensated_w.ravel() @ steer,
    )


def save_phase_map_csv(path, model: ImpairmentModel) -> None:
    """Write the code-to-phase tables as ``channel,code,phase_rad`` rows."""
    if model.phase_map is None:
        raise ConfigurationError("impairment model has no phase map table")
    lines = ["channel,code,phase_rad"]
    for c in range(model.num_channels):
        for k in range(2 ** model.bits):
            lines.append(f"{c},{k},{float(model.phase_map[c, k])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_phase_map_csv(path, bits: int, num_channels: int) -> np.ndarray:
    """Parse a ``channel,code,phase_rad`` table, checking completeness."""
    rows = Path(path).read_text().strip().splitlines()
    if not rows or rows[0].strip() != "channel,code,phase_rad":
        raise ConfigurationError("phase map CSV missing its header row")
    table = np.full((num_channels, 2 ** bits), np.nan)
    for line in rows[1:]:
        parts = line.split(",")
        if len(parts) != 3:
            raise ConfigurationError(f"malformed phase map row: {line!r}")
        c, k, phase = int(parts[0]), int(parts[1]), float(parts[2])
        if not (0 <= c < num_channels and 0 <= k < 2 ** bits):
            raise ConfigurationError(f"phase map row out of range: {line!r}")
        table[c, k] = phase
    if np.any(np.isnan(table)):
        raise ConfigurationError("phase map table is incomplete")
    return table


def save_model_json(path, model: ImpairmentModel) -> None:
    doc = {
        "seed": model.seed,
        "sigma_a": model.sigma_a,
        "sigma_p": model.sigma_p,
        "bits": model.bits,
        "rows": model.gain_err.shape[0],
        "cols": model.gain_err.shape[1],
        "gain_err": model.gain_err.ravel().tolist(),
        "phase_err": model.phase_err.ravel().tolist(),
        "phase_map": None if model.phase_map is None else model.phase_map.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_model_json(path) -> ImpairmentModel:
    try:
        doc = json.loads(Path(path).read_text())
        rows, cols, bits = int(doc["rows"]), int(doc["cols"]), int(doc["bits"])
        gain = np.asarray(doc["gain_err"], dtype=float).reshape(rows, cols)
        phase = np.asarray(doc["phase_err"], dtype=float).reshape(rows, cols)
        pmap = doc.get("phase_map")
        if pmap is not None:
            pmap = np.asarray(pmap, dtype=float).reshape(rows * cols, 2 ** bits)
    except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot parse impairment model {path}: {exc}") from exc
    return ImpairmentModel(
        gain_err=gain,
        phase_err=phase,
        sigma_a=float(doc.get("sigma_a", 0.0)),
        sigma_p=float(doc.get("sigma_p", 0.0)),
        bits=bits,
        phase_map=pmap,
        seed=doc.get("seed"),
    )
