"""Scenario configuration: parsing, validation, and derived objects.

Configs are JSON with nested sections. Angles are degrees and thresholds dB
at this boundary; linear-scale conversions happen when the solver parameter
objects are built.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analog import AdmmParams
from .arrays import BeamSpec, UlaGeometry, discretize_spec, shift_spec
from .errors import ConfigurationError
from .manifold import ArmijoParams


@dataclass
class ChannelSetup:
    user_angles_deg: list[float] = field(default_factory=lambda: [0.0])
    jammer_angles_deg: list[float] = field(default_factory=list)
    jsr_db: float = 10.0
    snr_db: float = 10.0
    #: absolute noise power; overrides snr_db calibration when set
    noise_var: float | None = None
    jsr_sweep_db: list[float] | None = None


@dataclass
class ScenarioConfig:
    num_aps: int = 1
    num_antennas: int = 64
    spacing_over_wavelength: float = 0.5
    reference_ap: int = 0
    ap_offsets_deg: list[float] = field(default_factory=list)
    spec: BeamSpec = field(default_factory=lambda: BeamSpec(((-4.0, 4.0),)))
    ripple_limit_db: float | None = None
    rho: float = 1e-5
    itermax: int = 50
    kappa: float = 1e-9
    analog_dual_steps: tuple[float, float, float] = (0.01, 0.025, 0.3)
    digital_dual_steps: tuple[float, float, float] = (0.2, 0.3, 0.7)
    rgd_max_iters: int = 20
    rgd_tol: float = 1e-6
    armijo: ArmijoParams = field(default_factory=ArmijoParams)
    mode: str = "armijo"
    weights_path: str | None = None
    unfold_invoke: str = "per_iteration"
    channels: ChannelSetup = field(default_factory=ChannelSetup)
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.num_aps < 1:
            raise ConfigurationError("num_aps must be >= 1")
        if not self.ap_offsets_deg:
            self.ap_offsets_deg = [0.0] * self.num_aps
        if len(self.ap_offsets_deg) != self.num_aps:
            raise ConfigurationError("ap_offsets_deg must list one offset per node")
        if not 0 <= self.reference_ap < self.num_aps:
            raise ConfigurationError("reference_ap out of range")
        if self.mode not in ("armijo", "unfolded"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "unfolded" and not self.weights_path:
            raise ConfigurationError("unfolded mode requires a weights file path")
        if self.workers is not None and self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        # every local sample angle must stay inside [-90, 90]; shifting
        # raises through BeamSpec validation when an offset pushes out
        for off in self.ap_offsets_deg:
            shift_spec(self.spec, off)

    @property
    def geometry(self) -> UlaGeometry:
        return UlaGeometry(self.num_antennas, self.spacing_over_wavelength)

    def _admm(self, steps) -> AdmmParams:
        return AdmmParams.from_spec(
            self.spec, rho=self.rho, itermax=self.itermax, kappa=self.kappa,
            dual_step_main=steps[0], dual_step_side=steps[1], dual_step_null=steps[2],
        )

    @property
    def admm(self) -> AdmmParams:
        """Analog-stage solver constants."""
        return self._admm(self.analog_dual_steps)

    @property
    def admm_digital(self) -> AdmmParams:
        """Coordinator-stage solver constants."""
        return self._admm(self.digital_dual_steps)

    def local_spec(self, ap_index: int) -> BeamSpec:
        return shift_spec(self.spec, self.ap_offsets_deg[ap_index])

    def report_window(self) -> tuple[float, float]:
        """Global angle window whose local images all stay in [-90, 90]."""
        offs = np.asarray(self.ap_offsets_deg, dtype=float)
        lo = max(-90.0, -90.0 + float(offs.max()))
        hi = min(90.0, 90.0 + float(offs.min()))
        return lo, hi

    def report_angles(self) -> np.ndarray:
        lo, hi = self.report_window()
        step = self.spec.grid_step_deg
        count = int(np.floor((hi - lo) / step + 1e-9))
        pts = lo + step * np.arange(count + 1)
        main, side, null = discretize_spec(self.spec)
        samples = np.concatenate([main.angles, side.angles, null.angles])
        merged = np.unique(np.concatenate([pts, samples]))
        if merged.min() < lo - 1e-9 or merged.max() > hi + 1e-9:
            raise ConfigurationError("spec samples fall outside the valid offset window")
        return merged


def _get(section: dict, key: str, default):
    value = section.get(key, default)
    return default if value is None else value


def _dual_steps(section: dict, key: str, default) -> tuple[float, float, float]:
    raw = _get(section, key, list(default))
    steps = tuple(float(x) for x in raw)
    if len(steps) != 3:
        raise ConfigurationError(f"{key} must list three values (mainlobe, sidelobe, null)")
    return steps


def _regions(raw) -> tuple:
    return tuple((float(lo), float(hi)) for lo, hi in (raw or []))


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a JSON object")
    system = doc.get("system", {}) or {}
    spec_doc = doc.get("spec", {}) or {}
    admm = doc.get("admm", {}) or {}
    unfolding = doc.get("unfolding", {}) or {}
    channels = doc.get("channels", {}) or {}
    armijo_doc = admm.get("armijo", {}) or {}

    try:
        spec = BeamSpec(
            mainlobe_regions=_regions(spec_doc.get("mainlobe_regions", [[-4.0, 4.0]])),
            null_regions=_regions(spec_doc.get("null_regions", [])),
            sidelobe_regions=_regions(spec_doc.get("sidelobe_regions", [])),
            eta_sl_db=float(_get(spec_doc, "eta_sl_db", -15.0)),
            eta_z_db=float(_get(spec_doc, "eta_z_db", -30.0)),
            alpha=float(_get(spec_doc, "alpha", 1.05)),
            grid_step_deg=float(_get(spec_doc, "grid_step_deg", 1.0)),
        )
        armijo = ArmijoParams(
            initial_step=float(_get(armijo_doc, "initial_step", 1.0)),
            contraction=float(_get(armijo_doc, "contraction", 0.5)),
            sufficient_decrease=float(_get(armijo_doc, "sufficient_decrease", 1e-4)),
            max_backtracks=int(_get(armijo_doc, "max_backtracks", 30)),
        )
        ripple_limit = spec_doc.get("ripple_limit_db")
        channel_setup = ChannelSetup(
            user_angles_deg=[float(a) for a in _get(channels, "user_angles_deg", [0.0])],
            jammer_angles_deg=[float(a) for a in _get(channels, "jammer_angles_deg", [])],
            jsr_db=float(_get(channels, "jsr_db", 10.0)),
            snr_db=float(_get(channels, "snr_db", 10.0)),
            noise_var=(None if channels.get("noise_var") is None
                       else float(channels["noise_var"])),
            jsr_sweep_db=(None if channels.get("jsr_sweep_db") is None
                          else [float(x) for x in channels["jsr_sweep_db"]]),
        )
        return ScenarioConfig(
            num_aps=int(_get(system, "num_aps", 1)),
            num_antennas=int(_get(system, "num_antennas", 64)),
            spacing_over_wavelength=float(_get(system, "spacing_over_wavelength", 0.5)),
            reference_ap=int(_get(system, "reference_ap", 0)),
            ap_offsets_deg=[float(x) for x in _get(system, "ap_offsets_deg", [])],
            spec=spec,
            ripple_limit_db=None if ripple_limit is None else float(ripple_limit),
            rho=float(_get(admm, "rho", 1e-5)),
            itermax=int(_get(admm, "itermax", 50)),
            kappa=float(_get(admm, "kappa", 1e-9)),
            analog_dual_steps=_dual_steps(admm, "analog_dual_steps", (0.01, 0.025, 0.3)),
            digital_dual_steps=_dual_steps(admm, "digital_dual_steps", (0.2, 0.3, 0.7)),
            rgd_max_iters=int(_get(admm, "rgd_max_iters", 20)),
            rgd_tol=float(_get(admm, "rgd_tol", 1e-6)),
            armijo=armijo,
            mode=str(_get(unfolding, "mode", "armijo")),
            weights_path=unfolding.get("weights_path"),
            unfold_invoke=str(_get(unfolding, "invoke", "per_iteration")),
            channels=channel_setup,
            seed=int(_get(doc, "seed", 0)),
            workers=None if doc.get("workers") is None else int(doc["workers"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed config value: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)
