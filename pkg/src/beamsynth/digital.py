"""Centralized digital beamforming across nodes (stage two).

The coordinator sees each node only through the scalar response of its
analog weights at every sample angle, so the effective steering matrix has
one row per node and the digital ADMM runs in that small space.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .analog import AdmmParams, TraceRow, _project_capped
from .arrays import BeamSpec, discretize_spec
from .errors import ConfigurationError, DomainError
from .manifold import LsSystem
from .unfold import ls_solution

_EPS_CAP = 1.0 - 1e-12


@dataclass(frozen=True)
class EffectiveArray:
    """Node-level steering: entry (l, i) = w_l^H a_l(theta_i)."""

    a_cpu: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_cpu, dtype=complex)
        object.__setattr__(self, "a_cpu", a)
        if a.ndim != 2:
            raise DomainError("effective steering must be a 2-D matrix")

    @property
    def num_nodes(self) -> int:
        return self.a_cpu.shape[0]


def effective_steering(analog_weights, per_ap_steering) -> EffectiveArray:
    """Collapse per-node steering through the analog weights.

    ``analog_weights[l]`` is node l's weight vector and
    ``per_ap_steering[l]`` its steering columns at every sample angle.
    """
    if len(analog_weights) != len(per_ap_steering):
        raise DomainError("need one steering matrix per analog weight vector")
    if not analog_weights:
        raise DomainError("at least one node is required")
    rows = []
    width = None
    for w, a in zip(analog_weights, per_ap_steering):
        w = np.asarray(w, dtype=complex).ravel()
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != w.size:
            raise DomainError("steering matrix rows must match weight length")
        if width is None:
            width = a.shape[1]
        elif a.shape[1] != width:
            raise DomainError("all nodes must share the sample angle count")
        rows.append(w.conj() @ a)
    return EffectiveArray(np.vstack(rows))


@dataclass
class DigitalState:
    w_bb: np.ndarray
    h: np.ndarray
    g: np.ndarray
    q: np.ndarray
    delta: np.ndarray
    lam: np.ndarray
    xi: np.ndarray
    epsilon: float


@dataclass(frozen=True)
class DigitalLsResult:
    w_bb: np.ndarray
    gamma: float

    @property
    def flagged(self) -> bool:
        return self.gamma > 0


def digital_ls(eff: EffectiveArray, u_cpu: np.ndarray) -> DigitalLsResult:
    """Closed-form combiner fit ``(A A^H + gamma I)^-1 A conj(u)``.

    ``gamma`` stays zero while the Gram matrix is well conditioned; a
    singular system (duplicate nodes) engages a small automatic ridge and
    flags the result.
    """
    sys = LsSystem(u_cpu, eff.a_cpu)
    x, gamma = ls_solution(sys)
    return DigitalLsResult(x, gamma)


def project_mainlobe_digital(h_hat, epsilon: float):
    """Clamp magnitude into [sqrt(1-eps), sqrt(1+eps)], phase preserved."""
    if not 0.0 <= epsilon < 1.0:
        raise DomainError("epsilon must lie in [0, 1)")
    x = np.asarray(h_hat, dtype=complex)
    lo = np.sqrt(1.0 - epsilon)
    hi = np.sqrt(1.0 + epsilon)
    mag = np.abs(x)
    safe = np.where(mag > 0, mag, 1.0)
    phase = np.where(mag > 0, x / safe, 1.0 + 0.0j)
    clamped = np.clip(mag, lo, hi) * phase
    out = np.where((mag >= lo) & (mag <= hi), x, clamped)
    if np.isscalar(h_hat) or np.ndim(h_hat) == 0:
        return complex(out)
    return out


def project_sidelobe_digital(x_hat, eta_lin: float):
    """Cap magnitude at sqrt(eta), phase preserved."""
    return _project_capped(x_hat, np.sqrt(eta_lin))


def project_null_digital(x_hat, eta_lin: float):
    """Cap magnitude at sqrt(eta), phase preserved."""
    return _project_capped(x_hat, np.sqrt(eta_lin))


def solve_epsilon_digital(h_cpu) -> float:
    """Ripple subproblem minimizer.

    With ``e_m = sqrt(|1 - |h_m|^2|)`` the objective
    ``eps + sum_m (sqrt(eps) - e_m)^2`` is a single convex quadratic in
    sqrt(eps), so the stationary point ``||e||_1 / (M + 1)`` is global.
    """
    h = np.asarray(h_cpu, dtype=complex).ravel()
    if h.size == 0:
        raise DomainError("need at least one mainlobe sample")
    e = np.sqrt(np.abs(1.0 - np.abs(h) ** 2))
    root = float(e.sum() / (e.size + 1))
    return root * root


def update_multipliers_digital(state: DigitalState, wa_main: np.ndarray, wa_side: np.ndarray,
                               wa_null: np.ndarray, rho: float,
                               rho_side: float | None = None,
                               rho_null: float | None = None) -> DigitalState:
    """Dual ascent on the coordinator-side consensus residuals."""
    rho_side = rho if rho_side is None else rho_side
    rho_null = rho if rho_null is None else rho_null
    return replace(
        state,
        delta=state.delta + rho * (state.h - wa_main),
        lam=state.lam + rho_side * (state.g - wa_side),
        xi=state.xi + rho_null * (state.q - wa_null),
    )


@dataclass
class DigitalSynthesis:
    w_bb: np.ndarray
    trace: list[TraceRow]
    epsilon: float
    flags: list[str]

    @property
    def iterations(self) -> int:
        return len(self.trace)


def digital_stage(eff: EffectiveArray, spec: BeamSpec, params: AdmmParams) -> DigitalSynthesis:
    """ADMM over the digital combiner given all nodes' analog responses.

    The effective steering columns must follow the spec's discretization
    order: mainlobe, then sidelobe, then null samples.
    """
    main, side, null = discretize_spec(spec)
    m, s, n = len(main), len(side), len(null)
    a = eff.a_cpu
    if a.shape[1] != m + s + n:
        raise DomainError(
            f"effective steering has {a.shape[1]} columns, spec discretizes to {m + s + n}"
        )

    flags: list[str] = []
    u_template = np.concatenate([np.ones(m), np.zeros(s + n)]).astype(complex)
    res = digital_ls(eff, u_template)
    if res.flagged:
        flags.append("ridge_iter_0")
    wa = res.w_bb.conj() @ a
    state = DigitalState(
        w_bb=res.w_bb,
        h=wa[:m].copy(),
        g=wa[m:m + s].copy(),
        q=wa[m + s:].copy(),
        delta=np.zeros(m, dtype=complex),
        lam=np.zeros(s, dtype=complex),
        xi=np.zeros(n, dtype=complex),
        epsilon=solve_epsilon_digital(wa[:m]),
    )

    trace: list[TraceRow] = []
    prev_eps = None
    for it in range(1, params.itermax + 1):
        u = np.concatenate([state.h + state.delta, state.g + state.lam, state.q + state.xi])
        res = digital_ls(eff, u)
        if res.flagged:
            flags.append(f"ridge_iter_{it}")
        state.w_bb = res.w_bb

        wa = state.w_bb.conj() @ a
        wa_main, wa_side, wa_null = wa[:m], wa[m:m + s], wa[m + s:]
        h_hat = wa_main - state.delta
        g_hat = wa_side - state.lam
        q_hat = wa_null - state.xi
        state.epsilon = solve_epsilon_digital(h_hat)
        eps_proj = state.epsilon
        if eps_proj >= 1.0:
            eps_proj = _EPS_CAP
            flags.append(f"epsilon_clamped_iter_{it}")
        state.h = np.asarray(project_mainlobe_digital(h_hat, eps_proj))
        state.g = np.asarray(project_sidelobe_digital(g_hat, params.eta_sl_lin))
        state.q = np.asarray(project_null_digital(q_hat, params.eta_z_lin))
        state = update_multipliers_digital(
            state, wa_main, wa_side, wa_null,
            params.dual_step_main, params.dual_step_side, params.dual_step_null,
        )

        trace.append(TraceRow(
            iteration=it,
            epsilon_l=state.epsilon,
            residual_h=float(np.linalg.norm(state.h - wa_main)),
            residual_g=float(np.linalg.norm(state.g - wa_side)),
            residual_q=float(np.linalg.norm(state.q - wa_null)),
        ))
        if prev_eps is not None and abs(state.epsilon - prev_eps) <= params.kappa:
            break
        prev_eps = state.epsilon

    return DigitalSynthesis(state.w_bb, trace, state.epsilon, flags)
