"""End-to-end scenario execution: per-node analog stage, digital stage,
pattern reporting, and the solution interchange file."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analog import AnalogSynthesis, analog_beamforming, trace_csv_lines
from .arrays import discretize_spec, steering_matrix
from .digital import DigitalSynthesis, digital_stage, effective_steering
from .errors import ConfigurationError, DomainError
from .metrics import (
    PatternReport,
    composite_pattern,
    pattern_csv_lines,
    pattern_report,
    sinr,
    sum_rate,
)
from .scenario import ScenarioConfig
from .unfold import load_weights

SOLUTION_FORMAT_VERSION = "1"


@dataclass
class SynthesisResult:
    config: ScenarioConfig
    analog: list[AnalogSynthesis]
    digital: DigitalSynthesis
    report: PatternReport
    report_angles: np.ndarray
    response: np.ndarray
    flags: list[str]

    @property
    def analog_weights(self) -> list[np.ndarray]:
        return [a.w_rf for a in self.analog]

    @property
    def w_bb(self) -> np.ndarray:
        return self.digital.w_bb


def _per_ap_steering(config: ScenarioConfig, global_angles: np.ndarray) -> list[np.ndarray]:
    geom = config.geometry
    return [
        steering_matrix(geom, global_angles - off)
        for off in config.ap_offsets_deg
    ]


def synthesize(config: ScenarioConfig) -> SynthesisResult:
    """Run the two-stage pipeline for a scenario.

    Node analog syntheses are independent and run on a thread pool; results
    merge in node-index order so outputs are reproducible.
    """
    params = config.admm
    geom = config.geometry
    step_kwargs = dict(
        step_source=config.mode,
        armijo=config.armijo,
        rgd_max_iters=config.rgd_max_iters,
        rgd_tol=config.rgd_tol,
        unfold_invoke=config.unfold_invoke,
    )
    if config.mode == "unfolded":
        step_kwargs["cvnn"] = load_weights(config.weights_path)

    def run_ap(index: int) -> AnalogSynthesis:
        return analog_beamforming(config.local_spec(index), geom, params,
                                  variant=index, **step_kwargs)

    workers = config.workers or min(config.num_aps, 8)
    if workers == 1 or config.num_aps == 1:
        analog = [run_ap(i) for i in range(config.num_aps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            analog = list(pool.map(run_ap, range(config.num_aps)))

    main, side, null = discretize_spec(config.spec)
    sample_angles = np.concatenate([main.angles, side.angles, null.angles])
    eff = effective_steering(
        [a.w_rf for a in analog], _per_ap_steering(config, sample_angles)
    )
    digital = digital_stage(eff, config.spec, config.admm_digital)

    report_angles = config.report_angles()
    response = composite_pattern(
        digital.w_bb, [a.w_rf for a in analog], _per_ap_steering(config, report_angles)
    )
    report = pattern_report(report_angles, response, config.spec,
                            ripple_limit_db=config.ripple_limit_db)

    flags = [f"ap{i}:{f}" for i, a in enumerate(analog) for f in a.flags]
    flags += [f"digital:{f}" for f in digital.flags]
    return SynthesisResult(
        config=config,
        analog=analog,
        digital=digital,
        report=report,
        report_angles=report_angles,
        response=response,
        flags=flags,
    )


def _complex_to_doc(vec: np.ndarray) -> dict:
    return {"real": vec.real.tolist(), "imag": vec.imag.tolist()}


def _complex_from_doc(doc: dict, what: str) -> np.ndarray:
    try:
        re = np.asarray(doc["real"], dtype=float)
        im = np.asarray(doc["imag"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed {what} in solution file: {exc}") from exc
    if re.shape != im.shape:
        raise ConfigurationError(f"{what} real/imag shapes differ")
    return re + 1j * im


def save_solution(path, result: SynthesisResult) -> None:
    """Write the synthesized weights as a JSON interchange file."""
    config = result.config
    doc = {
        "format_version": SOLUTION_FORMAT_VERSION,
        "num_aps": config.num_aps,
        "num_antennas": config.num_antennas,
        "spacing_over_wavelength": config.spacing_over_wavelength,
        "ap_offsets_deg": list(config.ap_offsets_deg),
        "seed": config.seed,
        "analog": [_complex_to_doc(w) for w in result.analog_weights],
        "w_bb": _complex_to_doc(result.w_bb),
        "flags": list(result.flags),
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


@dataclass
class Solution:
    num_aps: int
    num_antennas: int
    spacing_over_wavelength: float
    ap_offsets_deg: list[float]
    analog_weights: list[np.ndarray]
    w_bb: np.ndarray
    flags: list[str]


def load_solution(path) -> Solution:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot parse solution file {path}: {exc}") from exc
    if doc.get("format_version") != SOLUTION_FORMAT_VERSION:
        raise ConfigurationError("unsupported solution format_version")
    try:
        num_aps = int(doc["num_aps"])
        num_antennas = int(doc["num_antennas"])
        analog = [_complex_from_doc(w, f"analog[{i}]") for i, w in enumerate(doc["analog"])]
        w_bb = _complex_from_doc(doc["w_bb"], "w_bb")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed solution file: {exc}") from exc
    if len(analog) != num_aps or w_bb.size != num_aps:
        raise ConfigurationError("solution node counts are inconsistent")
    for i, w in enumerate(analog):
        if w.size != num_antennas:
            raise ConfigurationError(f"analog[{i}] has wrong length")
        if np.max(np.abs(np.abs(w) - 1.0)) > 1e-6:
            raise ConfigurationError(f"analog[{i}] is not unit modulus")
    return Solution(
        num_aps=num_aps,
        num_antennas=num_antennas,
        spacing_over_wavelength=float(doc.get("spacing_over_wavelength", 0.5)),
        ap_offsets_deg=[float(x) for x in doc.get("ap_offsets_deg", [0.0] * num_aps)],
        analog_weights=analog,
        w_bb=w_bb,
        flags=[str(f) for f in doc.get("flags", [])],
    )


def _stacked_channel(config: ScenarioConfig, angle_deg: float, gain: float = 1.0) -> np.ndarray:
    """Line-of-sight channel: concatenated per-node steering at local angles."""
    geom = config.geometry
    parts = []
    for off in config.ap_offsets_deg:
        local = angle_deg - off
        if not -90.0 <= local <= 90.0:
            raise DomainError(f"channel angle {angle_deg} maps outside [-90, 90] for offset {off}")
        parts.append(steering_matrix(geom, [local])[:, 0])
    return gain * np.concatenate(parts)


@dataclass
class SinrRow:
    jsr_db: float
    sinr: list[float]
    sum_rate: float


def sinr_table(config: ScenarioConfig, analog_weights, w_bb) -> list[SinrRow]:
    """Per-user SINR and sum-rate, one row per jammer power point."""
    from .metrics import effective_row

    setup = config.channels
    users = [_stacked_channel(config, a) for a in setup.user_angles_deg]
    jam_unit = [_stacked_channel(config, a) for a in setup.jammer_angles_deg]

    row = effective_row(w_bb, analog_weights)
    if setup.noise_var is not None:
        noise_var = setup.noise_var
    else:
        ref_power = float(np.abs(row @ users[0]) ** 2)
        row_power = float(np.real(row @ row.conj()))
        noise_var = ref_power / (10.0 ** (setup.snr_db / 10.0) * row_power)

    sweep = setup.jsr_sweep_db if setup.jsr_sweep_db is not None else [setup.jsr_db]
    out = []
    for jsr_db in sweep:
        scale = np.sqrt(10.0 ** (jsr_db / 10.0))
        jams = [scale * j for j in jam_unit]
        sinrs = [sinr(w_bb, analog_weights, u, jams, noise_var) for u in users]
        out.append(SinrRow(jsr_db=float(jsr_db), sinr=sinrs, sum_rate=sum_rate(sinrs)))
    return out


def evaluate_solution(config: ScenarioConfig, solution: Solution):
    """Recompute the pattern report and SINR table from saved weights."""
    if solution.num_aps != config.num_aps or solution.num_antennas != config.num_antennas:
        raise ConfigurationError("solution dimensions do not match the config")
    report_angles = config.report_angles()
    response = composite_pattern(
        solution.w_bb,
        solution.analog_weights,
        _per_ap_steering(config, report_angles),
    )
    report = pattern_report(report_angles, response, config.spec,
                            ripple_limit_db=config.ripple_limit_db)
    table = sinr_table(config, solution.analog_weights, solution.w_bb)
    return report, table


def sinr_csv_lines(table: list[SinrRow]) -> list[str]:
    width = max((len(r.sinr) for r in table), default=0)
    header = "jsr_db," + ",".join(f"sinr_user{k}" for k in range(width)) + ",sum_rate"
    lines = [header]
    for r in table:
        vals = ",".join(f"{v!r}" for v in r.sinr)
        lines.append(f"{r.jsr_db!r},{vals},{r.sum_rate!r}")
    return lines


def write_lines(path, lines: list[str]) -> None:
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_json(path, report: PatternReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")


def write_synthesis_outputs(out_dir, result: SynthesisResult) -> dict[str, Path]:
    """Emit weights, traces, pattern CSV, and the report for one run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    paths["solution"] = out / "solution.json"
    save_solution(paths["solution"], result)

    paths["pattern"] = out / "pattern.csv"
    write_lines(paths["pattern"], pattern_csv_lines(result.report_angles, result.report.gains_db))

    paths["report"] = out / "report.json"
    write_report_json(paths["report"], result.report)

    for i, a in enumerate(result.analog):
        p = out / f"trace_analog_ap{i}.csv"
        write_lines(p, trace_csv_lines(a.trace))
        paths[f"trace_analog_ap{i}"] = p
    paths["trace_digital"] = out / "trace_digital.csv"
    write_lines(paths["trace_digital"], trace_csv_lines(result.digital.trace))
    return paths
