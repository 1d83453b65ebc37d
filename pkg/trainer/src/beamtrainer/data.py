"""Training-instance generation.

Each sample is one randomized weight-subproblem of the runtime's analog
stage: steering columns over the discretized mainlobe/sidelobe/null sets of
a one-target one-jammer spec, a spoiled-mainlobe target template, the
unconstrained least-squares start, and the gradients at its phase
projection. Everything here is rebuilt from the angle definitions so the
generator stays independent of the runtime package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID_LO = -90.0
GRID_HI = 90.0
#: quadratic defocus phase per unit of aperture_scale * width_deg * cos(center)
SPOIL_COEFF = 1.0 / 128.0


@dataclass(frozen=True)
class TrainConfig:
    num_antennas: int = 64
    spacing_over_wavelength: float = 0.5
    unfold_steps: int = 15
    depth: int = 3
    batch_size: int = 100
    epochs: int = 50
    learning_rate: float = 1e-3
    seed: int = 0
    dataset_size: int = 1000
    center_range: tuple[float, float] = (-60.0, 60.0)
    region_width_deg: float = 8.0
    min_center_gap_deg: float = 12.0
    grid_step_deg: float = 1.0
    eta_sl_db: float = -15.0
    eta_z_db: float = -30.0
    alpha: float = 1.05

    def __post_init__(self):
        if self.depth not in (3, 5):
            raise ValueError("network depth must be 3 or 5")
        for name in ("num_antennas", "unfold_steps", "batch_size", "dataset_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        n = self.num_antennas
        hidden = 4 * n if self.depth == 5 else 2 * n
        return (3 * n,) + (hidden,) * (self.depth - 1) + (self.unfold_steps,)


def sample_region(lo: float, hi: float, step: float) -> np.ndarray:
    """Sample [lo, hi] at ``step`` including both endpoints."""
    count = int(np.floor((hi - lo) / step + 1e-9))
    pts = lo + step * np.arange(count + 1)
    if pts[-1] < hi - 1e-9:
        pts = np.append(pts, hi)
    return pts


def instance_angles(main_center: float, null_center: float, cfg: TrainConfig):
    """Discretized (mainlobe, sidelobe, null) angle sets for one draw.

    The sidelobe set is the grid complement of the two regions, minus one
    grid step of transition band at the mainlobe edges.
    """
    half = cfg.region_width_deg / 2.0
    step = cfg.grid_step_deg
    main = sample_region(main_center - half, main_center + half, step)
    null = sample_region(null_center - half, null_center + half, step)
    grid = sample_region(GRID_LO, GRID_HI, step)
    keep = np.abs(grid - main_center) > half + step + 1e-9
    keep &= np.abs(grid - null_center) > half + 1e-9
    side = grid[keep]
    return main, side, null


def steering_columns(angles: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """Steering matrix with element i carrying exp(j*2pi*(d/l)*i*sin(theta))."""
    idx = np.arange(cfg.num_antennas)[:, None]
    phase = 2.0 * np.pi * cfg.spacing_over_wavelength * np.sin(np.deg2rad(angles))[None, :]
    return np.exp(1j * idx * phase)


def spoiled_targets(main: np.ndarray, center: float, cfg: TrainConfig) -> np.ndarray:
    """Unit-magnitude mainlobe targets with the quadratic defocus phase."""
    scale = cfg.num_antennas * cfg.spacing_over_wavelength
    beta = SPOIL_COEFF * scale * cfg.region_width_deg * np.cos(np.deg2rad(center))
    half = cfg.region_width_deg / 2.0
    rel = (main - center) / half
    return np.exp(1j * beta * rel ** 2)


@dataclass
class TrainSample:
    steering: np.ndarray
    targets: np.ndarray
    ls_solution: np.ndarray
    w0: np.ndarray
    egrad0: np.ndarray
    rgrad0: np.ndarray
    #: where the unfolded trajectory starts during training; equals ``w0``
    #: for half the samples and a random manifold point for the rest, so
    #: the learned steps descend from anywhere near the operating regime
    w_start: np.ndarray
    main_center: float
    null_center: float


def _solve_scale(rh, rg, rq, alpha, eta_sl, eta_z) -> float:
    """Scale subproblem: vertex of the always-active quadratic in sqrt(eps)."""
    m, s, n = rh.size, rg.size, rq.size
    curvature = (alpha + 1.0) * m + eta_sl * s + eta_z * n - 1.0
    slope = -2.0 * ((np.sqrt(alpha) + 1.0) * rh.sum()
                    + np.sqrt(eta_sl) * rg.sum() + np.sqrt(eta_z) * rq.sum())
    if curvature <= 0:
        return 0.0
    root = max(0.0, -slope / (2.0 * curvature))
    return root * root


def _clamped_targets(wa: np.ndarray, m: int, s: int, cfg: TrainConfig) -> np.ndarray:
    """One auxiliary update: clamp the current pattern into the spec masks.

    This reproduces the targets the runtime's solver feeds its weight
    subproblem after the first outer iteration (multipliers still zero):
    mainlobe magnitudes into the scale band, sidelobes and nulls capped.
    """
    eta_sl = 10.0 ** (cfg.eta_sl_db / 10.0)
    eta_z = 10.0 ** (cfg.eta_z_db / 10.0)
    h, g, q = wa[:m], wa[m:m + s], wa[m + s:]
    eps = _solve_scale(np.abs(h), np.abs(g), np.abs(q), cfg.alpha, eta_sl, eta_z)

    def phases(z):
        mag = np.abs(z)
        return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0 + 0.0j)

    h_t = np.clip(np.abs(h), np.sqrt(eps), np.sqrt(cfg.alpha * eps)) * phases(h)
    g_t = np.minimum(np.abs(g), np.sqrt(eta_sl * eps)) * phases(g)
    q_t = np.minimum(np.abs(q), np.sqrt(eta_z * eps)) * phases(q)
    return np.concatenate([h_t, g_t, q_t])


def build_sample(main_center: float, null_center: float, cfg: TrainConfig,
                 start_rng: np.random.Generator | None = None) -> TrainSample:
    main, side, null = instance_angles(main_center, null_center, cfg)
    a = np.hstack([
        steering_columns(main, cfg),
        steering_columns(side, cfg),
        steering_columns(null, cfg),
    ])
    gram = a @ a.conj().T

    def ls_phases(targets):
        sol = np.linalg.solve(gram, a @ targets.conj())
        return sol, np.exp(1j * np.angle(sol))

    # bootstrap from the ideal template, then take the clamped-pattern
    # targets of the resulting start: the weight subproblem the runtime
    # solver actually faces once its loop is underway
    template = np.concatenate([
        spoiled_targets(main, main_center, cfg),
        np.zeros(side.size + null.size, dtype=complex),
    ])
    _, w_boot = ls_phases(template)
    u = _clamped_targets(w_boot.conj() @ a, main.size, side.size, cfg)

    ls, w0 = ls_phases(u)
    egrad0 = a @ (a.conj().T @ w0) - a @ u.conj()
    rgrad0 = egrad0 - np.real(egrad0 * w0.conj()) * w0
    if start_rng is None:
        w_start = w0
    else:
        w_start = np.exp(1j * start_rng.uniform(0.0, 2.0 * np.pi, cfg.num_antennas))
    return TrainSample(a, u, ls, w0, egrad0, rgrad0, w_start, main_center, null_center)


def generate_dataset(cfg: TrainConfig, max_retries: int = 100) -> list[TrainSample]:
    """Deterministic dataset for a seed; redraws overlapping region pairs.

    Every other sample's training trajectory starts at a random manifold
    point instead of the projected least-squares start, so the network sees
    both the cold and the warm descent regimes.
    """
    rng = np.random.default_rng(cfg.seed)
    samples = []
    for i in range(cfg.dataset_size):
        main_center = float(rng.uniform(*cfg.center_range))
        for attempt in range(max_retries):
            null_center = float(rng.uniform(*cfg.center_range))
            if abs(null_center - main_center) >= cfg.min_center_gap_deg:
                break
        else:
            raise RuntimeError("could not draw disjoint regions; widen center_range")
        start_rng = rng if i % 2 == 1 else None
        samples.append(build_sample(main_center, null_center, cfg, start_rng=start_rng))
    return samples


def pad_and_stack(samples: list[TrainSample]):
    """Stack samples into dense batch arrays, zero-padding the angle axis.

    Zero steering columns paired with zero targets contribute nothing to the
    residual or its gradient, so padding is exact.
    """
    n = samples[0].steering.shape[0]
    width = max(s.steering.shape[1] for s in samples)
    a = np.zeros((len(samples), n, width), dtype=complex)
    u = np.zeros((len(samples), width), dtype=complex)
    for i, s in enumerate(samples):
        k = s.steering.shape[1]
        a[i, :, :k] = s.steering
        u[i, :k] = s.targets
    w_start = np.stack([s.w_start for s in samples])
    inputs = np.stack([
        np.concatenate([s.ls_solution, s.egrad0, s.rgrad0]) for s in samples
    ])
    return a, u, w_start, inputs
