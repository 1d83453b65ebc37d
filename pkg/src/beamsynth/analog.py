"""Per-node analog beamforming: ADMM with closed-form auxiliary updates.

One node synthesizes a unit-modulus weight vector whose pattern power sits
inside ``[eps, alpha*eps]`` on mainlobe samples while staying below
``eta_sl*eps`` on sidelobe samples and ``eta_z*eps`` on null samples, with
the power scale ``eps`` pushed as high as the pattern allows. The weight
subproblem runs on the complex-circle manifold; the auxiliary and scale
subproblems have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .arrays import BeamSpec, UlaGeometry, discretize_spec, steering_matrix
from .errors import ConfigurationError, DomainError
from .manifold import ArmijoParams, LsSystem, rgd_solve, unit_phases
from . import unfold as _unfold

#: magnitudes closer than this are treated as one breakpoint
_BREAKPOINT_TOL = 1e-12


def db_to_linear(db: float) -> float:
    """Power ratio for a dB value: 10**(db/10)."""
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class AdmmParams:
    """Shared ADMM constants for both synthesis stages.

    ``rho`` is the penalty weight of the consensus terms. The augmented
    Lagrangian is written in scaled form, so the multiplier iteration takes
    steps of its own size per constraint family (``dual_step_*``); with the
    steps tied to a tiny rho the multipliers never act and the loop degrades
    to plain alternating projection, which measurably misses the null and
    sidelobe targets.
    """

    rho: float = 1e-5
    itermax: int = 50
    kappa: float = 1e-9
    alpha: float = 1.05
    eta_sl_lin: float = db_to_linear(-15.0)
    eta_z_lin: float = db_to_linear(-30.0)
    dual_step_main: float = 0.01
    dual_step_side: float = 0.025
    dual_step_null: float = 0.3

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigurationError("rho must be > 0")
        if self.itermax < 1:
            raise ConfigurationError("itermax must be >= 1")
        if self.alpha <= 1.0:
            raise ConfigurationError("alpha must be > 1")
        if self.eta_sl_lin <= 0 or self.eta_z_lin <= 0:
            raise ConfigurationError("linear thresholds must be > 0")
        if min(self.dual_step_main, self.dual_step_side, self.dual_step_null) < 0:
            raise ConfigurationError("dual steps must be >= 0")

    @classmethod
    def from_spec(cls, spec: BeamSpec, rho: float = 1e-5, itermax: int = 50,
                  kappa: float = 1e-9, **kwargs) -> "AdmmParams":
        return cls(
            rho=rho,
            itermax=itermax,
            kappa=kappa,
            alpha=spec.alpha,
            eta_sl_lin=db_to_linear(spec.eta_sl_db),
            eta_z_lin=db_to_linear(spec.eta_z_db),
            **kwargs,
        )


@dataclass
class AnalogState:
    """Full ADMM state for one node."""

    w_rf: np.ndarray
    h: np.ndarray
    g: np.ndarray
    q: np.ndarray
    delta: np.ndarray
    lam: np.ndarray
    xi: np.ndarray
    epsilon_l: float


def _phase_factors(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, x / safe, 1.0 + 0.0j)


def _scalar_like(out: np.ndarray, template) -> np.ndarray | complex:
    if np.isscalar(template) or np.ndim(template) == 0:
        return complex(out)
    return out


def project_mainlobe(h_hat, epsilon_l: float, alpha: float):
    """Clamp magnitude into [sqrt(eps), sqrt(alpha*eps)], phase preserved.

    A zero input with positive eps climbs to the lower bound at phase 0.
    """
    if epsilon_l < 0:
        raise DomainError("epsilon_l must be >= 0")
    if alpha <= 1.0:
        raise DomainError("alpha must be > 1")
    x = np.asarray(h_hat, dtype=complex)
    lo = np.sqrt(epsilon_l)
    hi = np.sqrt(alpha * epsilon_l)
    mag = np.abs(x)
    clamped = np.clip(mag, lo, hi) * _phase_factors(x)
    out = np.where((mag >= lo) & (mag <= hi), x, clamped)
    return _scalar_like(out, h_hat)


def _project_capped(x_hat, cap: float):
    x = np.asarray(x_hat, dtype=complex)
    mag = np.abs(x)
    out = np.where(mag <= cap, x, cap * _phase_factors(x))
    return _scalar_like(out, x_hat)


def project_sidelobe(g_hat, epsilon_l: float, eta_sl_lin: float):
    """Cap magnitude at sqrt(eta_sl * eps), phase preserved."""
    if epsilon_l < 0:
        raise DomainError("epsilon_l must be >= 0")
    return _project_capped(g_hat, np.sqrt(eta_sl_lin * epsilon_l))


def project_null(q_hat, epsilon_l: float, eta_z_lin: float):
    """Cap magnitude at sqrt(eta_z * eps), phase preserved."""
    if epsilon_l < 0:
        raise DomainError("epsilon_l must be >= 0")
    return _project_capped(q_hat, np.sqrt(eta_z_lin * epsilon_l))


def _epsilon_objective(x: np.ndarray, rh: np.ndarray, rg: np.ndarray, rq: np.ndarray,
                       alpha: float, eta_sl: float, eta_z: float) -> np.ndarray:
    """Scale objective evaluated at sqrt(eps) candidates ``x`` (vectorized)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    g = -x[:, 0] ** 2
    if rh.size:
        g = g + np.sum((np.sqrt(alpha) * x - rh[None, :]) ** 2, axis=1)
        g = g + np.sum((x - rh[None, :]) ** 2, axis=1)
    if rg.size:
        g = g + np.sum((np.sqrt(eta_sl) * x - rg[None, :]) ** 2, axis=1)
    if rq.size:
        g = g + np.sum((np.sqrt(eta_z) * x - rq[None, :]) ** 2, axis=1)
    return g


def solve_epsilon_analog(h_hat, g_hat, q_hat, params: AdmmParams) -> float:
    """Global minimizer of the scale subproblem over sqrt(eps) >= 0.

    Candidates are the sorted clamp-boundary magnitudes (duplicates removed),
    zero, and the quadratic vertex when the curvature is positive; the
    candidate with the smallest objective wins. Returns eps itself.
    """
    rh = np.abs(np.asarray(h_hat, dtype=complex).ravel())
    rg = np.abs(np.asarray(g_hat, dtype=complex).ravel())
    rq = np.abs(np.asarray(q_hat, dtype=complex).ravel())
    m, s, n = rh.size, rg.size, rq.size
    if m + s + n == 0:
        raise ConfigurationError("scale subproblem needs at least one sample")
    if not (np.all(np.isfinite(rh)) and np.all(np.isfinite(rg)) and np.all(np.isfinite(rq))):
        raise DomainError("scale subproblem inputs must be finite")

    alpha, eta_sl, eta_z = params.alpha, params.eta_sl_lin, params.eta_z_lin
    curvature = (alpha + 1.0) * m + eta_sl * s + eta_z * n - 1.0
    slope = -2.0 * (
        (np.sqrt(alpha) + 1.0) * rh.sum()
        + np.sqrt(eta_sl) * rg.sum()
        + np.sqrt(eta_z) * rq.sum()
    )

    breaks = np.concatenate((rh, rh / np.sqrt(alpha), rg, rq, [0.0]))
    breaks = np.sort(breaks)
    keep = np.concatenate(([True], np.diff(breaks) > _BREAKPOINT_TOL))
    candidates = breaks[keep]
    if curvature > 0:
        vertex = -slope / (2.0 * curvature)
        if vertex >= 0:
            candidates = np.append(candidates, vertex)
    values = _epsilon_objective(candidates, rh, rg, rq, alpha, eta_sl, eta_z)
    best = float(candidates[int(np.argmin(values))])
    return best * best


def solve_epsilon_binding(h_hat, g_hat, q_hat, params: AdmmParams) -> float:
    """Piecewise scale solver counting only the clamp-active terms.

    Breakpoints are the sorted clamp-boundary magnitudes; on each piece the
    objective keeps only terms whose clamp branch is active there, and the
    search is restricted to the breakpoint span, which bounds the otherwise
    unbounded scale direction. Complements :func:`solve_epsilon_analog` for
    point-target patterns, where the always-active form lets the many
    compliant sidelobe terms drag the scale far below the beam power.
    """
    rh = np.abs(np.asarray(h_hat, dtype=complex).ravel())
    rg = np.abs(np.asarray(g_hat, dtype=complex).ravel())
    rq = np.abs(np.asarray(q_hat, dtype=complex).ravel())
    if rh.size + rg.size + rq.size == 0:
        raise ConfigurationError("scale subproblem needs at least one sample")
    alpha, eta_sl, eta_z = params.alpha, params.eta_sl_lin, params.eta_z_lin

    breaks = np.concatenate((
        rh, rh / np.sqrt(alpha),
        rg / np.sqrt(eta_sl), rq / np.sqrt(eta_z),
        [0.0],
    ))
    breaks = np.sort(breaks)
    breaks = breaks[np.concatenate(([True], np.diff(breaks) > _BREAKPOINT_TOL))]

    def objective(x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(x)[:, None]
        val = -x[:, 0] ** 2
        if rh.size:
            val = val + np.where(x > rh, (x - rh) ** 2, 0.0).sum(axis=1)
            val = val + np.where(np.sqrt(alpha) * x < rh,
                                 (np.sqrt(alpha) * x - rh) ** 2, 0.0).sum(axis=1)
        if rg.size:
            c = np.sqrt(eta_sl)
            val = val + np.where(c * x < rg, (c * x - rg) ** 2, 0.0).sum(axis=1)
        if rq.size:
            c = np.sqrt(eta_z)
            val = val + np.where(c * x < rq, (c * x - rq) ** 2, 0.0).sum(axis=1)
        return val

    candidates = list(breaks)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (lo + hi)
        # piece-wise quadratic coefficients from the branch memberships at
        # the midpoint; the vertex is a candidate when it lands inside
        below = rh < mid
        above = rh / np.sqrt(alpha) > mid
        side_on = rg / np.sqrt(eta_sl) > mid
        null_on = rq / np.sqrt(eta_z) > mid
        a_j = (below.sum() + alpha * above.sum()
               + eta_sl * side_on.sum() + eta_z * null_on.sum() - 1.0)
        b_j = -2.0 * (rh[below].sum() + np.sqrt(alpha) * rh[above].sum()
                      + np.sqrt(eta_sl) * rg[side_on].sum()
                      + np.sqrt(eta_z) * rq[null_on].sum())
        if a_j > 0:
            vertex = -b_j / (2.0 * a_j)
            if lo < vertex < hi:
                candidates.append(vertex)
    candidates = np.asarray(candidates)
    best = float(candidates[int(np.argmin(objective(candidates)))])
    return best * best


def update_multipliers_analog(state: AnalogState, wa_main: np.ndarray, wa_side: np.ndarray,
                              wa_null: np.ndarray, rho: float,
                              rho_side: float | None = None,
                              rho_null: float | None = None) -> AnalogState:
    """Dual ascent on the three consensus residuals.

    ``wa_*`` are the current pattern rows ``w^H a(theta)`` over each region.
    A single ``rho`` steps all three multiplier families; the optional
    per-family overrides let the loop weight the scarce constraints harder.
    """
    rho_side = rho if rho_side is None else rho_side
    rho_null = rho if rho_null is None else rho_null
    return replace(
        state,
        delta=state.delta + rho * (state.h - wa_main),
        lam=state.lam + rho_side * (state.g - wa_side),
        xi=state.xi + rho_null * (state.q - wa_null),
    )


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    epsilon_l: float
    residual_h: float
    residual_g: float
    residual_q: float


TRACE_HEADER = "iter,epsilon_l,residual_h,residual_g,residual_q"


def trace_csv_lines(trace: list[TraceRow]) -> list[str]:
    lines = [TRACE_HEADER]
    for row in trace:
        lines.append(
            f"{row.iteration},{row.epsilon_l!r},{row.residual_h!r},"
            f"{row.residual_g!r},{row.residual_q!r}"
        )
    return lines


@dataclass
class AnalogSynthesis:
    w_rf: np.ndarray
    trace: list[TraceRow]
    epsilon_l: float
    flags: list[str]

    @property
    def iterations(self) -> int:
        return len(self.trace)


#: init template spoiling, radians of quadratic phase per unit of
#: num_antennas * (d/lambda) * mainlobe_width_deg * cos(center)
SPOIL_COEFF = 1.0 / 128.0


def spoiled_mainlobe_template(main_angles: np.ndarray, regions,
                              aperture_scale: float) -> np.ndarray:
    """Unit-magnitude mainlobe targets with a quadratic defocus phase.

    A flat-phase template least-squares fits to a focused beam, which a
    unit-modulus array cannot widen without heavy scalloping; a quadratic
    phase across each mainlobe region spreads the fit over the region.
    ``aperture_scale`` is ``num_antennas * spacing_over_wavelength``.
    """
    template = np.ones(main_angles.size, dtype=complex)
    for lo, hi in regions:
        sel = (main_angles >= lo - 1e-9) & (main_angles <= hi + 1e-9)
        if not np.any(sel):
            continue
        center = 0.5 * (lo + hi)
        half = max(0.5 * (hi - lo), 1e-9)
        beta = SPOIL_COEFF * aperture_scale * (hi - lo) * np.cos(np.deg2rad(center))
        rel = (main_angles[sel] - center) / half
        template[sel] = np.exp(1j * beta * rel ** 2)
    return template


def synthesize_on_steering(
    a_main: np.ndarray,
    a_side: np.ndarray,
    a_null: np.ndarray,
    params: AdmmParams,
    *,
    step_source: str = "armijo",
    cvnn=None,
    unfold_invoke: str = "per_iteration",
    armijo: ArmijoParams = ArmijoParams(),
    rgd_max_iters: int = 20,
    rgd_tol: float = 1e-6,
    init_targets: np.ndarray | None = None,
    init_weights: np.ndarray | None = None,
    epsilon_rule: str = "full",
) -> AnalogSynthesis:
    """Run the analog ADMM on prebuilt steering matrices.

    ``step_source`` selects the weight-subproblem solver: "armijo" runs
    gradient descent with backtracking, "unfolded" runs a fixed number of
    iterations with step sizes predicted by ``cvnn``. ``init_targets``
    replaces the default unit-mainlobe / zero-elsewhere template used to
    build the starting point; ``init_weights`` bypasses the least-squares
    start entirely with an explicit unit-modulus vector (needed when the
    steering Gram is rank deficient and the projected least-squares phases
    carry no beam).
    """
    if step_source not in ("armijo", "unfolded"):
        raise ConfigurationError(f"unknown step source {step_source!r}")
    if step_source == "unfolded" and cvnn is None:
        raise ConfigurationError("unfolded step source requires network weights")
    if unfold_invoke not in ("per_iteration", "once"):
        raise ConfigurationError(f"unknown unfold invocation {unfold_invoke!r}")
    if epsilon_rule == "full":
        solve_epsilon = solve_epsilon_analog
    elif epsilon_rule == "binding":
        solve_epsilon = solve_epsilon_binding
    else:
        raise ConfigurationError(f"unknown epsilon rule {epsilon_rule!r}")

    m, s, n = a_main.shape[1], a_side.shape[1], a_null.shape[1]
    if m == 0:
        raise ConfigurationError("mainlobe sample set is empty")
    a_all = np.hstack([a_main, a_side, a_null])
    flags: list[str] = []

    if init_targets is None:
        u_template = np.concatenate([np.ones(m), np.zeros(s + n)]).astype(complex)
    else:
        u_template = np.asarray(init_targets, dtype=complex).ravel()
        if u_template.size != m + s + n:
            raise ConfigurationError("init_targets length does not match the sample count")
    if init_weights is not None:
        w = np.asarray(init_weights, dtype=complex).ravel()
        if w.size != a_all.shape[0]:
            raise ConfigurationError("init_weights length does not match the array size")
        w = unit_phases(w)
    else:
        ls0, gamma0 = _unfold.ls_solution(LsSystem(u_template, a_all))
        if gamma0 > 0:
            flags.append("init_ridge")
        w = unit_phases(ls0)

    wa = w.conj() @ a_all
    state = AnalogState(
        w_rf=w,
        h=wa[:m].copy(),
        g=wa[m:m + s].copy(),
        q=wa[m + s:].copy(),
        delta=np.zeros(m, dtype=complex),
        lam=np.zeros(s, dtype=complex),
        xi=np.zeros(n, dtype=complex),
        epsilon_l=float(np.mean(np.abs(wa[:m]) ** 2)),
    )

    trace: list[TraceRow] = []
    cached_steps = None
    prev_eps = None
    for it in range(1, params.itermax + 1):
        u = np.concatenate([state.h + state.delta, state.g + state.lam, state.q + state.xi])
        sys = LsSystem(u, a_all)
        if step_source == "armijo":
            state.w_rf = rgd_solve(state.w_rf, sys, armijo, rgd_max_iters, rgd_tol).w
        else:
            if unfold_invoke == "per_iteration" or cached_steps is None:
                inp, w_start = _unfold.make_unfold_input(sys)
                steps = _unfold.predict_step_sizes(inp, cvnn)
                if unfold_invoke == "once":
                    cached_steps = steps
            else:
                steps = cached_steps
                w_start = state.w_rf
            state.w_rf = _unfold.unfolded_rgd(w_start, sys, steps)

        wa = state.w_rf.conj() @ a_all
        wa_main, wa_side, wa_null = wa[:m], wa[m:m + s], wa[m + s:]
        h_hat = wa_main - state.delta
        g_hat = wa_side - state.lam
        q_hat = wa_null - state.xi
        state.epsilon_l = solve_epsilon(h_hat, g_hat, q_hat, params)
        state.h = np.asarray(project_mainlobe(h_hat, state.epsilon_l, params.alpha))
        state.g = np.asarray(project_sidelobe(g_hat, state.epsilon_l, params.eta_sl_lin))
        state.q = np.asarray(project_null(q_hat, state.epsilon_l, params.eta_z_lin))
        state = update_multipliers_analog(
            state, wa_main, wa_side, wa_null,
            params.dual_step_main, params.dual_step_side, params.dual_step_null,
        )

        trace.append(TraceRow(
            iteration=it,
            epsilon_l=state.epsilon_l,
            residual_h=float(np.linalg.norm(state.h - wa_main)),
            residual_g=float(np.linalg.norm(state.g - wa_side)),
            residual_q=float(np.linalg.norm(state.q - wa_null)),
        ))
        if prev_eps is not None and abs(state.epsilon_l - prev_eps) <= params.kappa:
            break
        prev_eps = state.epsilon_l

    return AnalogSynthesis(state.w_rf, trace, state.epsilon_l, flags)


def initial_targets(spec: BeamSpec, geom: UlaGeometry, variant: int = 0) -> np.ndarray:
    """Default starting template: spoiled mainlobe, zero sidelobes and nulls.

    ``variant`` (typically the node index) picks a deterministic defocus
    profile per node: the spoil sign alternates and its depth cycles over
    0.8x to 1.2x, so cooperating nodes start from decorrelated patterns and
    their combined sidelobe structure averages down.
    """
    main, side, null = discretize_spec(spec)
    scale = geom.num_antennas * geom.spacing_over_wavelength
    scale *= (1.0, 0.9, 1.1, 0.8, 1.2)[variant % 5]
    template = spoiled_mainlobe_template(main.angles, spec.mainlobe_regions, scale)
    if variant % 2 == 1:
        template = np.conj(template)
    return np.concatenate([template, np.zeros(len(side) + len(null), dtype=complex)])


def analog_beamforming(
    spec: BeamSpec,
    geom: UlaGeometry,
    params: AdmmParams,
    variant: int = 0,
    **kwargs,
) -> AnalogSynthesis:
    """Synthesize one node's analog weights from its local beam spec."""
    main, side, null = discretize_spec(spec)
    kwargs.setdefault("init_targets", initial_targets(spec, geom, variant))
    return synthesize_on_steering(
        steering_matrix(geom, main.angles),
        steering_matrix(geom, side.angles),
        steering_matrix(geom, null.angles),
        params,
        **kwargs,
    )
