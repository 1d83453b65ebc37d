"""Benchmark and study harnesses behind the CLI: step-size comparison,
node-count scaling, and the hardware impairment study."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace, field

import numpy as np

from .analog import AdmmParams, synthesize_on_steering
from .arrays import (
    BeamSpec,
    UpaGeometry,
    discretize_spec,
    steering_matrix,
    upa_steering,
)
from .errors import ConfigurationError
from .impairments import (
    ImpairedPatterns,
    ImpairmentModel,
    impaired_pattern,
    perturbed_phase_map,
    sample_errors,
)
from .manifold import LsSystem, ls_objective, rgd_solve
from .metrics import pattern_report
from .pipeline import synthesize
from .scenario import ScenarioConfig
from .unfold import load_weights, make_unfold_input, predict_step_sizes, unfolded_rgd


def _subtract_intervals(base: list[tuple[float, float]],
                        cuts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Set difference of closed intervals, keeping nonempty pieces."""
    out = list(base)
    for clo, chi in cuts:
        nxt = []
        for lo, hi in out:
            if chi <= lo or clo >= hi:
                nxt.append((lo, hi))
                continue
            if clo > lo:
                nxt.append((lo, clo))
            if chi < hi:
                nxt.append((chi, hi))
        out = nxt
    return [(lo, hi) for lo, hi in out if hi - lo > 1e-9]


def random_instance_spec(rng: np.random.Generator, base: BeamSpec,
                         center_range: tuple[float, float] = (-60.0, 60.0),
                         width_deg: float = 8.0, min_gap_deg: float = 12.0,
                         max_retries: int = 100) -> BeamSpec:
    """Draw a one-target one-jammer spec with uniform random region centers."""
    half = width_deg / 2.0
    main_center = float(rng.uniform(*center_range))
    for _ in range(max_retries):
        null_center = float(rng.uniform(*center_range))
        if abs(null_center - main_center) >= min_gap_deg:
            return replace(
                base,
                mainlobe_regions=((main_center - half, main_center + half),),
                null_regions=((null_center - half, null_center + half),),
                sidelobe_regions=(),
            )
    raise ConfigurationError("could not draw disjoint regions (range too tight)")


def _instance_system(spec: BeamSpec, geom) -> LsSystem:
    """Weight-subproblem instance as the solver meets it once underway.

    Bootstraps from the spoiled template, then clamps the resulting pattern
    into the spec masks; the clamped values are the subproblem targets
    (multipliers are still zero at that point of the loop).
    """
    from .analog import initial_targets, project_mainlobe, project_null, \
        project_sidelobe, solve_epsilon_analog
    from .manifold import unit_phases
    from .unfold import ls_solution

    main, side, null = discretize_spec(spec)
    a_all = np.hstack([
        steering_matrix(geom, main.angles),
        steering_matrix(geom, side.angles),
        steering_matrix(geom, null.angles),
    ])
    params = AdmmParams.from_spec(spec)
    ls, _ = ls_solution(LsSystem(initial_targets(spec, geom), a_all))
    wa = unit_phases(ls).conj() @ a_all
    m, s = len(main), len(side)
    h, g, q = wa[:m], wa[m:m + s], wa[m + s:]
    eps = solve_epsilon_analog(h, g, q, params)
    u = np.concatenate([
        np.asarray(project_mainlobe(h, eps, params.alpha)),
        np.asarray(project_sidelobe(g, eps, params.eta_sl_lin)),
        np.asarray(project_null(q, eps, params.eta_z_lin)),
    ])
    return LsSystem(u, a_all)


@dataclass(frozen=True)
class CompareRow:
    instance: int
    armijo_time_s: float
    unfolded_time_s: float
    armijo_objective: float
    unfolded_objective: float
    objective_ratio: float
    armijo_iters: int
    unfolded_steps: int


COMPARE_HEADER = ("instance,armijo_time_s,unfolded_time_s,armijo_objective,"
                  "unfolded_objective,objective_ratio,armijo_iters,unfolded_steps")


def compare_stepsize(config: ScenarioConfig, num_instances: int = 50,
                     armijo_max_iters: int = 200) -> list[CompareRow]:
    """Paired weight-subproblem solves: line-searched descent vs learned steps.

    Both modes start from the identical projected least-squares point of the
    same randomized instance, so wall time and final objective compare the
    step-size strategies alone.
    """
    if not config.weights_path:
        raise ConfigurationError(
            "step-size comparison needs a trained weights file "
            "(set unfolding.weights_path or pass --weights)"
        )
    cvnn = load_weights(config.weights_path)
    geom = config.geometry
    rng = np.random.default_rng(config.seed)
    rows = []
    for i in range(num_instances):
        spec = random_instance_spec(rng, config.spec)
        sys = _instance_system(spec, geom)

        t0 = time.perf_counter()
        inp_a, w0_a = make_unfold_input(sys)
        res = rgd_solve(w0_a, sys, config.armijo, max_iters=armijo_max_iters,
                        tol=config.rgd_tol)
        t_armijo = time.perf_counter() - t0
        f_armijo = ls_objective(res.w, sys)

        t0 = time.perf_counter()
        inp_u, w0_u = make_unfold_input(sys)
        steps = predict_step_sizes(inp_u, cvnn)
        w_unf = unfolded_rgd(w0_u, sys, steps)
        t_unfolded = time.perf_counter() - t0
        f_unfolded = ls_objective(w_unf, sys)

        ratio = f_unfolded / f_armijo if f_armijo > 0 else float("inf")
        rows.append(CompareRow(
            instance=i,
            armijo_time_s=t_armijo,
            unfolded_time_s=t_unfolded,
            armijo_objective=f_armijo,
            unfolded_objective=f_unfolded,
            objective_ratio=ratio,
            armijo_iters=res.iterations,
            unfolded_steps=int(steps.size),
        ))
    return rows


def compare_csv_lines(rows: list[CompareRow]) -> list[str]:
    lines = [COMPARE_HEADER]
    for r in rows:
        lines.append(
            f"{r.instance},{r.armijo_time_s!r},{r.unfolded_time_s!r},"
            f"{r.armijo_objective!r},{r.unfolded_objective!r},{r.objective_ratio!r},"
            f"{r.armijo_iters},{r.unfolded_steps}"
        )
    return lines


@dataclass
class ScalingRow:
    num_aps: int
    median_time_s: float
    times_s: list[float]


@dataclass
class ScalingFit:
    rows: list[ScalingRow]
    slope: float
    intercept: float
    r_squared: float


SCALING_HEADER = "num_aps,median_time_s,slope,intercept,r_squared"


def bench_scaling(config: ScenarioConfig, l_list, runs: int = 5) -> ScalingFit:
    """Median synthesis wall time per node count, with a linear fit.

    Runs serially (workers forced to 1) so the measured time tracks total
    compute; one warmup run per point is discarded.
    """
    l_list = list(l_list)
    if not l_list or sorted(l_list) != l_list:
        raise ConfigurationError("node counts must be a nonempty ascending list")
    rows = []
    for L in l_list:
        cfg = replace(config, num_aps=L, ap_offsets_deg=[0.0] * L, workers=1)
        times = []
        for r in range(runs + 1):
            t0 = time.perf_counter()
            synthesize(cfg)
            times.append(time.perf_counter() - t0)
        times = times[1:]
        rows.append(ScalingRow(L, float(np.median(times)), times))

    x = np.asarray([r.num_aps for r in rows], dtype=float)
    y = np.asarray([r.median_time_s for r in rows], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(rows, float(slope), float(intercept), r2)


def scaling_csv_lines(fit: ScalingFit) -> list[str]:
    lines = [SCALING_HEADER]
    for r in fit.rows:
        lines.append(
            f"{r.num_aps},{r.median_time_s!r},{fit.slope!r},{fit.intercept!r},"
            f"{fit.r_squared!r}"
        )
    return lines


@dataclass
class ImpairmentStudyConfig:
    #: the first index multiplies the swept virtual angle, so the panel's
    #: 16-element dimension runs along the horizontal cut
    rows: int = 16
    cols: int = 8
    #: physical element spacing; the abstract unit-phase pattern form is
    #: spacing_over_wavelength = 1/(2*pi)
    spacing_over_wavelength: float = 0.5
    bits: int = 6
    sigma_a: float = 0.05
    sigma_p: float = 0.3
    nonlinear_amplitude_rad: float = 0.35
    seed: int = 0
    mainlobe_center_deg: float = 0.0
    null_center_deg: float = 45.0
    #: the chamber scenario points at a single target direction
    mainlobe_width_deg: float = 0.0
    null_width_deg: float = 8.0
    #: sidelobe samples start this far from the target, outside the natural
    #: beamwidth of the swept dimension
    sidelobe_guard_deg: float = 8.0
    eta_sl_db: float = -15.0
    eta_z_db: float = -40.0
    alpha: float = 1.05
    grid_step_deg: float = 1.0
    rho: float = 1e-5
    itermax: int = 50

    @property
    def wavenumber_scale(self) -> float:
        return 2.0 * np.pi * self.spacing_over_wavelength

    @classmethod
    def from_dict(cls, doc: dict) -> "ImpairmentStudyConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown impairment config keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed impairment config: {exc}") from exc

    def cut_spec(self) -> BeamSpec:
        mh = self.mainlobe_width_deg / 2.0
        nh = self.null_width_deg / 2.0
        main = (self.mainlobe_center_deg - mh, self.mainlobe_center_deg + mh)
        null = (self.null_center_deg - nh, self.null_center_deg + nh)
        guard = (self.mainlobe_center_deg - mh - self.sidelobe_guard_deg,
                 self.mainlobe_center_deg + mh + self.sidelobe_guard_deg)
        side = _subtract_intervals(
            [(-90.0, 90.0)],
            [guard, (null[0] - self.grid_step_deg, null[1] + self.grid_step_deg)],
        )
        return BeamSpec(
            mainlobe_regions=(main,),
            null_regions=(null,),
            sidelobe_regions=tuple(side),
            eta_sl_db=self.eta_sl_db,
            eta_z_db=self.eta_z_db,
            alpha=self.alpha,
            grid_step_deg=self.grid_step_deg,
        )


@dataclass
class ImpairmentStudyResult:
    config: ImpairmentStudyConfig
    ideal_weights: np.ndarray
    model: ImpairmentModel
    patterns: ImpairedPatterns
    #: per-trace normalized gain maxima over the null region
    null_db: dict[str, float]
    improvement_db: float


CUT_PHI_DEG = 90.0


def _upa_cut_matrix(geom: UpaGeometry, angles: np.ndarray, scale: float) -> np.ndarray:
    cols = [np.conj(upa_steering(geom, t, CUT_PHI_DEG, scale)) for t in angles]
    return np.stack(cols, axis=1) if cols else np.empty((geom.size, 0), dtype=complex)


def synthesize_upa_cut(cfg: ImpairmentStudyConfig) -> np.ndarray:
    """Unit-modulus planar weights for a one-target one-jammer azimuth cut.

    The cut steering spans a one-dimensional angle curve, so its Gram is
    rank deficient and the projected least-squares phases carry no beam;
    the loop therefore starts from the matched-beam phases of the mainlobe
    steering sum instead.
    """
    geom = UpaGeometry(cfg.rows, cfg.cols)
    spec = cfg.cut_spec()
    main, side, null = discretize_spec(spec)
    params = AdmmParams.from_spec(spec, rho=cfg.rho, itermax=cfg.itermax)
    a_main = _upa_cut_matrix(geom, main.angles, cfg.wavenumber_scale)
    result = synthesize_on_steering(
        a_main,
        _upa_cut_matrix(geom, side.angles, cfg.wavenumber_scale),
        _upa_cut_matrix(geom, null.angles, cfg.wavenumber_scale),
        params,
        init_weights=a_main.sum(axis=1).conj(),
        epsilon_rule="binding",
    )
    return result.w_rf.reshape(cfg.rows, cfg.cols)


def _null_level_db(pattern: np.ndarray, angles: np.ndarray, null_grid: np.ndarray) -> float:
    power = np.abs(pattern) ** 2
    gains = 10.0 * np.log10(power / power.max())
    mask = np.isin(np.round(angles, 6), np.round(null_grid, 6))
    return float(gains[mask].max())


def impairment_study(cfg: ImpairmentStudyConfig) -> ImpairmentStudyResult:
    """Synthesize, impair, compensate, and compare null depths on one cut."""
    geom = UpaGeometry(cfg.rows, cfg.cols)
    w_ideal = synthesize_upa_cut(cfg)

    model = sample_errors(geom, cfg.sigma_a, cfg.sigma_p, cfg.seed, bits=cfg.bits)
    model.phase_map = perturbed_phase_map(
        cfg.bits, geom.size, cfg.nonlinear_amplitude_rad, cfg.seed + 1
    )

    spec = cfg.cut_spec()
    _, _, null = discretize_spec(spec)
    angles = np.arange(-90.0, 90.0 + cfg.grid_step_deg / 2, cfg.grid_step_deg)
    patterns = impaired_pattern(w_ideal, model, geom, angles, phi_deg=CUT_PHI_DEG,
                                wavenumber_scale=cfg.wavenumber_scale)

    null_db = {
        "ideal": _null_level_db(patterns.ideal, angles, null.angles),
        "uncorrected": _null_level_db(patterns.uncorrected, angles, null.angles),
        "compensated": _null_level_db(patterns.compensated, angles, null.angles),
    }
    return ImpairmentStudyResult(
        config=cfg,
        ideal_weights=w_ideal,
        model=model,
        patterns=patterns,
        null_db=null_db,
        improvement_db=null_db["uncorrected"] - null_db["compensated"],
    )


def impairment_csv_lines(patterns: ImpairedPatterns, which: str) -> list[str]:
    trace = getattr(patterns, which)
    power = np.abs(trace) ** 2
    gains = 10.0 * np.log10(power / power.max())
    lines = ["az_deg,el_deg,gain_db"]
    for a, g in zip(patterns.theta_deg, gains):
        lines.append(f"{float(a)!r},0.0,{float(g)!r}")
    return lines
