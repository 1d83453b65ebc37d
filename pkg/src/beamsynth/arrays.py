"""Array geometries, steering vectors, and angular-region discretization.

Angles are degrees at every public interface and radians only inside
phase computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError

#: tolerance for grid membership and endpoint comparisons, in degrees
_ANGLE_TOL = 1e-9

Interval = tuple[float, float]


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array with a single RF chain per node.

    Parameters
    ----------
    num_antennas : int
        Number of elements, >= 1.
    spacing_over_wavelength : float
        Element spacing divided by carrier wavelength, > 0.
    """

    num_antennas: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ConfigurationError("num_antennas must be >= 1")
        if self.spacing_over_wavelength <= 0:
            raise ConfigurationError("spacing_over_wavelength must be > 0")


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array of ``rows`` x ``cols`` elements."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("UPA dimensions must be >= 1")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class AngleGrid:
    """Strictly increasing sample angles in degrees within [-90, 90]."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        object.__setattr__(self, "angles", a)
        if a.ndim != 1:
            raise ConfigurationError("AngleGrid takes a 1-D angle list")
        if a.size and (a.min() < -90.0 - _ANGLE_TOL or a.max() > 90.0 + _ANGLE_TOL):
            raise ConfigurationError("grid angles must lie in [-90, 90] degrees")
        if a.size > 1 and not np.all(np.diff(a) > 0):
            raise ConfigurationError("grid angles must be strictly increasing")

    def __len__(self) -> int:
        return int(self.angles.size)


@dataclass(frozen=True)
class BeamSpec:
    """Angular region sets and thresholds for one synthesis problem.

    ``sidelobe_regions`` left empty means the sidelobe set defaults to the
    complement of mainlobe and null regions over [-90, 90], with a guard
    band of one grid step adjacent to each mainlobe edge left unconstrained.
    Thresholds are dB relative to the mainlobe target power.
    """

    mainlobe_regions: tuple[Interval, ...]
    null_regions: tuple[Interval, ...] = ()
    sidelobe_regions: tuple[Interval, ...] = ()
    eta_sl_db: float = -15.0
    eta_z_db: float = -30.0
    alpha: float = 1.05
    grid_step_deg: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mainlobe_regions", _as_regions(self.mainlobe_regions))
        object.__setattr__(self, "null_regions", _as_regions(self.null_regions))
        object.__setattr__(self, "sidelobe_regions", _as_regions(self.sidelobe_regions))
        if not self.mainlobe_regions:
            raise ConfigurationError("at least one mainlobe region is required")
        if self.alpha <= 1.0:
            raise ConfigurationError("alpha must be > 1")
        if self.eta_z_db > self.eta_sl_db:
            raise ConfigurationError("eta_z_db must not exceed eta_sl_db")
        if self.grid_step_deg <= 0:
            raise ConfigurationError("grid_step_deg must be > 0")


def _as_regions(regions) -> tuple[Interval, ...]:
    out = []
    for lo, hi in regions:
        lo, hi = float(lo), float(hi)
        if hi < lo:
            raise ConfigurationError(f"region [{lo}, {hi}] has hi < lo")
        if lo < -90.0 - _ANGLE_TOL or hi > 90.0 + _ANGLE_TOL:
            raise ConfigurationError(f"region [{lo}, {hi}] outside [-90, 90]")
        out.append((lo, hi))
    return tuple(out)


def steering_vector(geom: UlaGeometry, theta_deg: float) -> np.ndarray:
    """ULA steering vector at direction ``theta_deg``.

    Element ``i`` equals ``exp(j * 2*pi * (d/lambda) * i * sin(theta))``;
    element 0 is exactly 1.
    """
    if not -90.0 <= theta_deg <= 90.0:
        raise DomainError(f"steering angle {theta_deg} outside [-90, 90]")
    idx = np.arange(geom.num_antennas)
    phase = 2.0 * np.pi * geom.spacing_over_wavelength * np.sin(np.deg2rad(theta_deg))
    out = np.exp(1j * phase * idx)
    out[0] = 1.0 + 0.0j
    return out


def steering_matrix(geom: UlaGeometry, angles_deg) -> np.ndarray:
    """Column-stacked steering vectors, shape (num_antennas, len(angles))."""
    angles = np.asarray(angles_deg, dtype=float)
    if angles.size and (angles.min() < -90.0 or angles.max() > 90.0):
        raise DomainError("steering angles outside [-90, 90]")
    idx = np.arange(geom.num_antennas)[:, None]
    phase = 2.0 * np.pi * geom.spacing_over_wavelength * np.sin(np.deg2rad(angles))[None, :]
    mat = np.exp(1j * idx * phase)
    if mat.shape[0]:
        mat[0, :] = 1.0 + 0.0j
    return mat


def _sample_region(lo: float, hi: float, step: float) -> np.ndarray:
    """Sample [lo, hi] at ``step`` including both endpoints."""
    count = int(np.floor((hi - lo) / step + _ANGLE_TOL))
    pts = lo + step * np.arange(count + 1)
    if pts[-1] < hi - _ANGLE_TOL:
        pts = np.append(pts, hi)
    return pts


def _in_any_region(points: np.ndarray, regions) -> np.ndarray:
    mask = np.zeros(points.shape, dtype=bool)
    for lo, hi in regions:
        mask |= (points >= lo - _ANGLE_TOL) & (points <= hi + _ANGLE_TOL)
    return mask


def _near_any_region(points: np.ndarray, regions, dist: float) -> np.ndarray:
    mask = np.zeros(points.shape, dtype=bool)
    for lo, hi in regions:
        mask |= (points >= lo - dist - _ANGLE_TOL) & (points <= hi + dist + _ANGLE_TOL)
    return mask


def discretize_spec(spec: BeamSpec) -> tuple[AngleGrid, AngleGrid, AngleGrid]:
    """Discretize a BeamSpec into (mainlobe, sidelobe, null) sample grids.

    Each declared region is sampled at ``grid_step_deg`` including both
    endpoints. An empty sidelobe declaration resolves to the complement of
    mainlobe and null regions over [-90, 90], excluding a transition band
    of one grid step adjacent to the mainlobe edges. The three grids are
    validated to be pairwise disjoint.
    """
    step = spec.grid_step_deg
    main = _merge_sorted([_sample_region(lo, hi, step) for lo, hi in spec.mainlobe_regions])
    if main.size == 0:
        raise ConfigurationError("discretized mainlobe set is empty")
    null = _merge_sorted([_sample_region(lo, hi, step) for lo, hi in spec.null_regions])

    if spec.sidelobe_regions:
        side = _merge_sorted([_sample_region(lo, hi, step) for lo, hi in spec.sidelobe_regions])
    else:
        side = full_grid(step)
        keep = ~_in_any_region(side, spec.mainlobe_regions)
        keep &= ~_in_any_region(side, spec.null_regions)
        keep &= ~_near_any_region(side, spec.mainlobe_regions, step)
        side = side[keep]

    grids = (AngleGrid(main), AngleGrid(side), AngleGrid(null))
    _check_disjoint(grids)
    return grids


def full_grid(step: float, lo: float = -90.0, hi: float = 90.0) -> np.ndarray:
    """Uniform angle grid over [lo, hi] at ``step`` degrees."""
    return _sample_region(lo, hi, step)


def _merge_sorted(parts: list[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.empty(0, dtype=float)
    merged = np.sort(np.concatenate(parts))
    if merged.size > 1:
        merged = merged[np.concatenate(([True], np.diff(merged) > _ANGLE_TOL))]
    return merged


def _check_disjoint(grids) -> None:
    names = ("mainlobe", "sidelobe", "null")
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = grids[i].angles, grids[j].angles
            if a.size and b.size:
                close = np.min(np.abs(a[:, None] - b[None, :]))
                if close <= _ANGLE_TOL:
                    raise ConfigurationError(
                        f"{names[i]} and {names[j]} sample sets overlap after discretization"
                    )


def resolve_sidelobe_regions(spec: BeamSpec) -> BeamSpec:
    """Return an equivalent spec with the sidelobe complement materialized.

    Contiguous runs of complement samples become explicit intervals, so the
    resolved spec discretizes to exactly the same sample sets. Needed before
    shifting a shared spec into a node's local angle frame.
    """
    if spec.sidelobe_regions:
        return spec
    _, side, _ = discretize_spec(spec)
    pts = side.angles
    if pts.size == 0:
        return replace(spec, sidelobe_regions=())
    breaks = np.where(np.diff(pts) > spec.grid_step_deg + _ANGLE_TOL)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [pts.size - 1]))
    regions = tuple((float(pts[s]), float(pts[e])) for s, e in zip(starts, ends))
    return replace(spec, sidelobe_regions=regions)


def shift_spec(spec: BeamSpec, offset_deg: float) -> BeamSpec:
    """Translate all regions into a local frame: local = global - offset.

    The sidelobe complement is materialized first so that shifted sample
    sets stay aligned one-to-one with the global ones.
    """
    base = resolve_sidelobe_regions(spec)

    def shift(regions):
        return tuple((lo - offset_deg, hi - offset_deg) for lo, hi in regions)

    shifted = replace(
        base,
        mainlobe_regions=shift(base.mainlobe_regions),
        null_regions=shift(base.null_regions),
        sidelobe_regions=shift(base.sidelobe_regions),
    )
    return shifted


def upa_virtual_angles(theta_deg: float, phi_deg: float) -> tuple[float, float]:
    """Virtual angles (u, v) = (sin(theta)sin(phi), cos(theta))."""
    t = np.deg2rad(theta_deg)
    p = np.deg2rad(phi_deg)
    return float(np.sin(t) * np.sin(p)), float(np.cos(t))


def upa_steering(geom: UpaGeometry, theta_deg: float, phi_deg: float,
                 wavenumber_scale: float = 1.0) -> np.ndarray:
    """Vectorized UPA phase profile exp(j*k*(m*u + n*v)), 1-based m, n.

    Returned flat vector is row-major over (m, n) so it pairs with
    ``weights.ravel()`` for an M x N weight matrix. The default
    ``wavenumber_scale`` of 1 is the abstract unit-spacing form; a physical
    array spaced d carries ``2*pi*d/lambda`` (pi at half wavelength).
    """
    u, v = upa_virtual_angles(theta_deg, phi_deg)
    m = np.arange(1, geom.rows + 1)[:, None]
    n = np.arange(1, geom.cols + 1)[None, :]
    return np.exp(1j * wavenumber_scale * (m * u + n * v)).ravel()


def upa_pattern(geom: UpaGeometry, weights: np.ndarray, theta_deg: float, phi_deg: float) -> complex:
    """Planar-array response sum_m sum_n W[m,n] exp(j(m*u + n*v))."""
    w = np.asarray(weights)
    if w.shape != (geom.rows, geom.cols):
        raise DomainError(f"weights shape {w.shape} does not match {geom.rows}x{geom.cols} array")
    return complex(w.ravel() @ upa_steering(geom, theta_deg, phi_deg))
