"""Pattern quality metrics, threshold verdicts, SINR and sum-rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import BeamSpec, discretize_spec
from .digital import effective_steering
from .errors import ConfigurationError, DomainError

_MATCH_TOL = 1e-9


def composite_pattern(w_bb, analog_weights, per_ap_steering) -> np.ndarray:
    """Two-stage pattern response at every steering column.

    Uses the block structure (per-node inner products, then the digital
    combine) instead of materializing the dense block-diagonal matrix.
    """
    w_bb = np.asarray(w_bb, dtype=complex).ravel()
    eff = effective_steering(analog_weights, per_ap_steering)
    if w_bb.size != eff.num_nodes:
        raise DomainError("digital weight length must equal node count")
    return w_bb.conj() @ eff.a_cpu


@dataclass(frozen=True)
class Verdict:
    passed: bool
    #: dB of headroom; negative when the constraint is violated
    margin_db: float


@dataclass
class PatternReport:
    angles_deg: np.ndarray
    gains_db: np.ndarray
    ripple_db: float
    max_sidelobe_db: float
    max_null_db: float
    verdicts: dict[str, Verdict]
    eta_sl_db: float
    eta_z_db: float
    ripple_limit_db: float | None = None

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "ripple_db": self.ripple_db,
            "max_sidelobe_db": self.max_sidelobe_db,
            "max_null_db": self.max_null_db,
            "eta_sl_db": self.eta_sl_db,
            "eta_z_db": self.eta_z_db,
            "ripple_limit_db": self.ripple_limit_db,
            "verdicts": {
                name: {"passed": bool(v.passed), "margin_db": v.margin_db}
                for name, v in sorted(self.verdicts.items())
            },
        }


def _region_indices(angles: np.ndarray, samples: np.ndarray, what: str) -> np.ndarray:
    if samples.size == 0:
        return np.empty(0, dtype=int)
    idx = np.searchsorted(angles, samples)
    idx = np.clip(idx, 0, angles.size - 1)
    left = np.clip(idx - 1, 0, angles.size - 1)
    use_left = np.abs(angles[left] - samples) < np.abs(angles[idx] - samples)
    idx = np.where(use_left, left, idx)
    if np.any(np.abs(angles[idx] - samples) > _MATCH_TOL):
        raise DomainError(f"response grid does not cover all {what} samples")
    return idx


def pattern_report(angles_deg, response, spec: BeamSpec,
                   ripple_limit_db: float | None = None) -> PatternReport:
    """Normalize a pattern and judge it against the spec thresholds.

    ``response`` holds complex values on ``angles_deg``, which must contain
    every discretized spec sample. Gains are dB relative to the peak, so the
    maximum of ``gains_db`` is exactly 0.
    """
    angles = np.asarray(angles_deg, dtype=float).ravel()
    resp = np.asarray(response, dtype=complex).ravel()
    if angles.size != resp.size:
        raise DomainError("angles and response lengths differ")
    main, side, null = discretize_spec(spec)

    power = np.abs(resp) ** 2
    peak = power.max() if power.size else 0.0
    if peak <= 0.0:
        raise DomainError("pattern response is identically zero")
    with np.errstate(divide="ignore"):
        gains_db = 10.0 * np.log10(power / peak)

    i_main = _region_indices(angles, main.angles, "mainlobe")
    i_side = _region_indices(angles, side.angles, "sidelobe")
    i_null = _region_indices(angles, null.angles, "null")
    if i_main.size == 0:
        raise ConfigurationError("mainlobe sample set is empty")

    main_db = gains_db[i_main]
    ripple = float(main_db.max() - main_db.min())
    max_sl = float(gains_db[i_side].max()) if i_side.size else float("-inf")
    max_null = float(gains_db[i_null].max()) if i_null.size else float("-inf")

    verdicts = {
        "sidelobe": Verdict(max_sl <= spec.eta_sl_db, spec.eta_sl_db - max_sl),
        "null": Verdict(max_null <= spec.eta_z_db, spec.eta_z_db - max_null),
    }
    if ripple_limit_db is not None:
        verdicts["ripple"] = Verdict(ripple <= ripple_limit_db, ripple_limit_db - ripple)

    return PatternReport(
        angles_deg=angles,
        gains_db=gains_db,
        ripple_db=ripple,
        max_sidelobe_db=max_sl,
        max_null_db=max_null,
        verdicts=verdicts,
        eta_sl_db=spec.eta_sl_db,
        eta_z_db=spec.eta_z_db,
        ripple_limit_db=ripple_limit_db,
    )


def pattern_csv_lines(angles_deg, gains_db) -> list[str]:
    lines = ["angle_deg,gain_db"]
    for a, g in zip(np.asarray(angles_deg, dtype=float), np.asarray(gains_db, dtype=float)):
        lines.append(f"{float(a)!r},{float(g)!r}")
    return lines


def effective_row(w_bb, analog_weights) -> np.ndarray:
    """Stacked combined weight row ``w_bb^H blkdiag(w_l)^H``."""
    w_bb = np.asarray(w_bb, dtype=complex).ravel()
    if w_bb.size != len(analog_weights):
        raise DomainError("digital weight length must equal node count")
    blocks = [
        np.conj(w_bb[l]) * np.asarray(analog_weights[l], dtype=complex).conj()
        for l in range(w_bb.size)
    ]
    return np.concatenate(blocks)


def sinr(w_bb, analog_weights, user_channel, jammer_channels, noise_var: float) -> float:
    """Post-combining SINR for one user under the given jammer channels."""
    if noise_var <= 0:
        raise DomainError("noise_var must be > 0")
    row = effective_row(w_bb, analog_weights)
    user = np.asarray(user_channel, dtype=complex).ravel()
    if user.size != row.size:
        raise DomainError("user channel length must match the stacked array size")
    signal = float(np.abs(row @ user) ** 2)
    interference = 0.0
    for jam in jammer_channels:
        jam = np.asarray(jam, dtype=complex).ravel()
        if jam.size != row.size:
            raise DomainError("jammer channel length must match the stacked array size")
        interference += float(np.abs(row @ jam) ** 2)
    noise = noise_var * float(np.real(row @ row.conj()))
    return signal / (interference + noise)


def sum_rate(sinrs) -> float:
    """Shannon sum rate ``sum(log2(1 + sinr))`` in bit/s/Hz."""
    total = 0.0
    for s in sinrs:
        if s < 0:
            raise DomainError("SINR values must be >= 0")
        total += float(np.log2(1.0 + s))
    return total
