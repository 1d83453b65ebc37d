"""Riemannian gradient descent on the unit-modulus (complex circle) manifold.

The feasible set is ``{w : |w(i)| = 1 for all i}`` and the objective is the
squared residual of a complex least-squares row system ``|| u - w^H A ||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_UNIT_TOL = 1e-8


@dataclass(frozen=True)
class LsSystem:
    """Least-squares instance: targets ``u`` and steering columns ``A``.

    Parameters
    ----------
    targets : ndarray, shape (K,)
        Complex target row values.
    steering : ndarray, shape (N, K)
        One steering column per target.
    """

    targets: np.ndarray
    steering: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.targets, dtype=complex).ravel()
        a = np.asarray(self.steering, dtype=complex)
        object.__setattr__(self, "targets", u)
        object.__setattr__(self, "steering", a)
        if a.ndim != 2:
            raise DomainError("steering must be a 2-D matrix")
        if a.shape[1] != u.size:
            raise DomainError(
                f"steering has {a.shape[1]} columns but there are {u.size} targets"
            )

    @property
    def dim(self) -> int:
        return self.steering.shape[0]


@dataclass(frozen=True)
class ArmijoParams:
    """Backtracking line-search constants."""

    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 30

    def __post_init__(self):
        if self.initial_step <= 0:
            raise DomainError("initial_step must be > 0")
        if not 0.0 < self.contraction < 1.0:
            raise DomainError("contraction must be in (0, 1)")
        if not 0.0 < self.sufficient_decrease < 1.0:
            raise DomainError("sufficient_decrease must be in (0, 1)")
        if self.max_backtracks < 0:
            raise DomainError("max_backtracks must be >= 0")


def _check_dims(w: np.ndarray, sys: LsSystem) -> np.ndarray:
    w = np.asarray(w, dtype=complex).ravel()
    if w.size != sys.dim:
        raise DomainError(f"weight length {w.size} does not match steering rows {sys.dim}")
    return w


def _require_unit_modulus(w: np.ndarray, what: str = "w") -> None:
    if w.size and np.max(np.abs(np.abs(w) - 1.0)) > _UNIT_TOL:
        raise DomainError(f"{what} must have unit-modulus entries")


def ls_objective(w: np.ndarray, sys: LsSystem) -> float:
    """Squared residual ``|| u - w^H A ||^2``."""
    w = _check_dims(w, sys)
    r = sys.targets - w.conj() @ sys.steering
    return float(np.real(r @ r.conj()))


def euclidean_gradient(w: np.ndarray, sys: LsSystem) -> np.ndarray:
    """Gradient ``A A^H w - A conj(u)`` of the residual wrt conj(w)."""
    w = _check_dims(w, sys)
    a = sys.steering
    return a @ (a.conj().T @ w) - a @ sys.targets.conj()


def riemannian_project(egrad: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Project a Euclidean gradient onto the tangent space at ``w``.

    Removes the radial component: ``egrad - real(egrad * conj(w)) * w``.
    """
    w = np.asarray(w, dtype=complex).ravel()
    egrad = np.asarray(egrad, dtype=complex).ravel()
    if egrad.size != w.size:
        raise DomainError("gradient and point sizes differ")
    _require_unit_modulus(w)
    return egrad - np.real(egrad * w.conj()) * w


def unit_phases(z: np.ndarray, fallback: np.ndarray | None = None) -> np.ndarray:
    """Map each entry to its unit-modulus phase factor exp(j*angle(z)).

    Entries that are exactly zero take the matching ``fallback`` entry when
    given (keeping a previous feasible phase), else 1.
    """
    z = np.asarray(z, dtype=complex).ravel()
    out = np.exp(1j * np.angle(z))
    zero = z == 0
    if np.any(zero):
        if fallback is not None:
            out = np.where(zero, np.asarray(fallback, dtype=complex).ravel(), out)
        else:
            out = np.where(zero, 1.0 + 0.0j, out)
    return out


def retract(w: np.ndarray, direction: np.ndarray, step: float) -> np.ndarray:
    """Phase retraction ``exp(j * angle(w - step * direction))``.

    An entry of ``w - step*direction`` that lands exactly on zero keeps its
    previous phase, since the angle is undefined there.
    """
    w = np.asarray(w, dtype=complex).ravel()
    if step < 0:
        raise DomainError("step must be >= 0")
    _require_unit_modulus(w)
    return unit_phases(w - step * np.asarray(direction, dtype=complex).ravel(), fallback=w)


@dataclass(frozen=True)
class ArmijoResult:
    step: float
    #: False flags no progress: zero gradient or backtracking exhausted.
    accepted: bool


def armijo_step(w: np.ndarray, sys: LsSystem, rgrad: np.ndarray, params: ArmijoParams) -> ArmijoResult:
    """Backtracking search for a step along the negative Riemannian gradient.

    Accepts the first ``mu`` with
    ``f(retract(w, rgrad, mu)) <= f(w) - c * mu * ||rgrad||^2``.
    """
    rgrad = np.asarray(rgrad, dtype=complex).ravel()
    grad_sq = float(np.real(rgrad @ rgrad.conj()))
    if grad_sq == 0.0:
        return ArmijoResult(params.initial_step, accepted=False)
    f0 = ls_objective(w, sys)
    mu = params.initial_step
    for _ in range(params.max_backtracks):
        if ls_objective(retract(w, rgrad, mu), sys) <= f0 - params.sufficient_decrease * mu * grad_sq:
            return ArmijoResult(mu, accepted=True)
        mu *= params.contraction
    return ArmijoResult(mu, accepted=False)


@dataclass
class RgdResult:
    w: np.ndarray
    #: objective value at the start point and after each accepted step
    objectives: list[float]
    iterations: int
    converged: bool
    #: True when the line search stalled before the tolerance was met
    stalled: bool = False


def rgd_solve(
    w0: np.ndarray,
    sys: LsSystem,
    params: ArmijoParams = ArmijoParams(),
    max_iters: int = 20,
    tol: float = 1e-6,
) -> RgdResult:
    """Riemannian gradient descent with Armijo backtracking.

    Stops when the Riemannian gradient norm drops below ``tol``, the line
    search makes no progress, or ``max_iters`` steps were taken. The
    objective trace is nonincreasing over accepted steps.
    """
    w = _check_dims(w0, sys)
    _require_unit_modulus(w, "w0")
    objectives = [ls_objective(w, sys)]
    for it in range(max_iters):
        rgrad = riemannian_project(euclidean_gradient(w, sys), w)
        if np.linalg.norm(rgrad) < tol:
            return RgdResult(w, objectives, it, converged=True)
        res = armijo_step(w, sys, rgrad, params)
        if not res.accepted:
            return RgdResult(w, objectives, it, converged=False, stalled=True)
        w = retract(w, rgrad, res.step)
        objectives.append(ls_objective(w, sys))
    rgrad = riemannian_project(euclidean_gradient(w, sys), w)
    converged = bool(np.linalg.norm(rgrad) < tol)
    return RgdResult(w, objectives, max_iters, converged=converged)
