"""Feedback-control geodesic shooting for landmark template matching.

The boundary-value problem (carry reference landmarks onto target
landmarks at t = 1) is solved as an initial-value problem: shoot with a
guessed initial momentum, measure the endpoint mismatch, and feed it
back additively,

    u(k+1) = u(k) + h * (target - endpoint(k)),   u(0) = 0,

where u is the initial velocity at the landmarks and h is a constant
scalar search length.  The velocity update is converted to momenta
through the kernel Gram system; a direct momentum-space update is
available as a cheaper variant.  A finite-difference Newton iteration
(newton_match) serves as the classical baseline: far fewer iterations,
but each one costs 2N extra shoots for the Jacobian.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigurationError, DegenerateConfigurationError, DivergenceError
from .integrator import EvolveConfig, evolve
from .kernels import KernelSpec, gram_matrix
from .particles import ParticleState, SystemSpec, hamiltonian
from .shapes import LandmarkTemplate

__all__ = [
    "UpdateSpace",
    "StopRule",
    "ResidualNorm",
    "ShootingConfig",
    "MatchResult",
    "match",
    "newton_match",
    "momenta_from_velocity",
    "contraction_diagnostics",
]

# A run is declared divergent once the stopping norm exceeds this multiple
# of its initial value (on top of the non-finite check).
_BLOWUP_FACTOR = 1e6
_ILL_CONDITIONED = 1e12


class UpdateSpace(str, enum.Enum):
    VELOCITY = "velocity"
    MOMENTUM = "momentum"


class StopRule(str, enum.Enum):
    TARGET_RESIDUAL = "residual"
    MOMENTUM_DELTA = "momentum-delta"


class ResidualNorm(str, enum.Enum):
    MAX = "max"
    L2 = "l2"


@dataclass(frozen=True)
class ShootingConfig:
    """Knobs of the matching iteration.

    ``h`` is the feedback gain (update matrix M = h * I).  Values above 1
    are allowed but tend to diverge.  The stop rule is the endpoint
    residual for exact matching; inexact systems (sigma2 > 0) never drive
    the endpoint residual to zero, so they must stop on the per-iteration
    change of the shooting iterate instead.
    """

    h: float
    epsilon: float = 1e-3
    max_iter: int = 500
    update_space: UpdateSpace = UpdateSpace.VELOCITY
    stop_rule: StopRule = StopRule.TARGET_RESIDUAL
    norm: ResidualNorm = ResidualNorm.MAX
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    system: SystemSpec = field(default_factory=SystemSpec)

    def __post_init__(self):
        object.__setattr__(self, "update_space", UpdateSpace(self.update_space))
        object.__setattr__(self, "stop_rule", StopRule(self.stop_rule))
        object.__setattr__(self, "norm", ResidualNorm(self.norm))
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigurationError(f"h must be positive, got {self.h}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.system.sigma2 > 0 and self.stop_rule is not StopRule.MOMENTUM_DELTA:
            raise ConfigurationError(
                "inexact matching (sigma2 > 0) cannot stop on the endpoint "
                "residual; use stop_rule = MomentumDelta"
            )


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one matching run.

    ``residual_history`` holds the stopping-norm value measured after
    each applied update, so its length equals ``iterations``; a run whose
    initial residual is already below tolerance reports zero iterations
    and an empty history.  ``diagnosis`` is set only on failed runs.
    """

    p0: np.ndarray
    iterations: int
    converged: bool
    residual_history: tuple
    hamiltonian: float
    final_template: LandmarkTemplate
    final_residual: float
    diagnosis: str | None = None
    warnings: tuple = ()


def _norm(kind: ResidualNorm, vec: np.ndarray) -> float:
    """Stopping norm of an (N, 2) mismatch field.

    MAX is the largest per-landmark Euclidean error, L2 the flat vector
    norm.  Both are invariant under a rigid motion of the whole problem,
    which keeps the iteration count (and hence H) exactly isometry
    invariant; a coordinate-wise max would not be.
    """
    arr = np.asarray(vec, dtype=float).reshape(-1, 2)
    if kind is ResidualNorm.MAX:
        return float(np.max(np.hypot(arr[:, 0], arr[:, 1])))
    return float(np.linalg.norm(arr.ravel()))


class _GramSolver:
    """Cholesky factorization of the kernel Gram matrix over fixed points,
    reused across all iterations of a match (the initial landmarks never
    move, so the factorization is constant)."""

    def __init__(self, kernel: KernelSpec, q0: np.ndarray):
        k = gram_matrix(kernel, q0)
        self.condition = float(np.linalg.cond(k))
        try:
            self._factor = cho_factor(k, lower=True)
        except np.linalg.LinAlgError as exc:
            raise DegenerateConfigurationError(
                f"kernel Gram matrix is not positive definite: {exc}"
            ) from exc

    @property
    def ill_conditioned(self) -> bool:
        return not (self.condition < _ILL_CONDITIONED)

    def solve(self, u: np.ndarray) -> np.ndarray:
        # (K (x) I2) p = u decouples into one solve per coordinate.
        return cho_solve(self._factor, u)


def momenta_from_velocity(kernel: KernelSpec, q0, u0) -> np.ndarray:
    """Invert the kernel reconstruction u_i = sum_j G(|q_i - q_j|) p_j.

    Solves (K (x) I2) p = u via a Cholesky factorization of the Gram
    matrix K over q0; the round-trip residual is at the level of the
    factorization error (<= 1e-10 for the shapes used here).
    """
    q0 = np.asarray(q0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if q0.shape != u0.shape or q0.ndim != 2 or q0.shape[1] != 2:
        raise ValueError(
            f"q0 and u0 must both have shape (N, 2), got {q0.shape} and {u0.shape}"
        )
    return _GramSolver(kernel, q0).solve(u0)


def _blown_up(value: float, initial: float) -> bool:
    return initial > 0 and value > _BLOWUP_FACTOR * initial


def _result(
    q0: np.ndarray,
    p: np.ndarray,
    history: list,
    converged: bool,
    system: SystemSpec,
    endpoint: np.ndarray,
    target: LandmarkTemplate,
    reference: LandmarkTemplate,
    norm_kind: ResidualNorm,
    diagnosis: str | None,
    warnings: tuple,
) -> MatchResult:
    state0 = ParticleState(q0, p)
    final = LandmarkTemplate(endpoint, f"{reference.label}>{target.label}")
    return MatchResult(
        p0=p,
        iterations=len(history),
        converged=converged,
        residual_history=tuple(history),
        hamiltonian=hamiltonian(system, state0),
        final_template=final,
        final_residual=_norm(norm_kind, target.points - endpoint),
        diagnosis=diagnosis,
        warnings=warnings,
    )


def _prepare(reference: LandmarkTemplate, target: LandmarkTemplate) -> None:
    if reference.n != target.n:
        raise ConfigurationError(
            f"templates must have equal landmark counts: "
            f"{reference.n} (reference) vs {target.n} (target)"
        )


def match(
    reference: LandmarkTemplate, target: LandmarkTemplate, cfg: ShootingConfig
) -> MatchResult:
    """Find initial momenta carrying ``reference`` onto ``target``.

    Exact matching (TargetResidual) measures the endpoint mismatch in
    the configured norm after every update and stops below epsilon;
    inexact matching (MomentumDelta) measures how far the shooting
    iterate moved instead, which is h times the driving residual in
    either update space.  Divergence (non-finite state, or stopping
    norm exceeding 1e6 times its first value) ends the run with
    converged = False and diagnosis "step too large" rather than an
    exception; hitting max_iter just reports converged = False.
    """
    _prepare(reference, target)
    q0 = reference.points
    n = reference.n
    velocity_mode = cfg.update_space is UpdateSpace.VELOCITY
    solver = _GramSolver(cfg.system.kernel, q0) if velocity_mode else None
    warnings = ()
    if solver is not None and solver.ill_conditioned:
        warnings = (
            f"Gram matrix condition number {solver.condition:.3e} exceeds "
            f"{_ILL_CONDITIONED:.0e}; momenta recovery may lose accuracy",
        )

    u = np.zeros((n, 2))
    p = np.zeros((n, 2))
    endpoint = evolve(cfg.system, ParticleState(q0, p), cfg.evolve).final.q
    residual = target.points - endpoint

    history: list = []
    initial_norm = None
    if cfg.stop_rule is StopRule.TARGET_RESIDUAL:
        initial_norm = _norm(cfg.norm, residual)
        if initial_norm < cfg.epsilon:
            return _result(
                q0, p, history, True, cfg.system, endpoint, target, reference,
                cfg.norm, None, warnings,
            )

    for _ in range(cfg.max_iter):
        # The iterate moves by exactly h * residual in its own space, and
        # that change is what the MomentumDelta rule measures.
        delta = cfg.h * _norm(cfg.norm, residual)
        if velocity_mode:
            u = u + cfg.h * residual
            p = solver.solve(u)
        else:
            p = p + cfg.h * residual

        try:
            endpoint = evolve(cfg.system, ParticleState(q0, p), cfg.evolve).final.q
        except (DivergenceError, DegenerateConfigurationError) as exc:
            # endpoint still holds the last finite evolution result.
            return _result(
                q0, p, history, False, cfg.system, endpoint, target, reference,
                cfg.norm, f"step too large ({exc})", warnings,
            )
        residual = target.points - endpoint

        if cfg.stop_rule is StopRule.TARGET_RESIDUAL:
            value = _norm(cfg.norm, residual)
        else:
            value = delta
            if initial_norm is None:
                initial_norm = value
        history.append(value)

        if not math.isfinite(value) or _blown_up(value, initial_norm):
            return _result(
                q0, p, history, False, cfg.system, endpoint, target, reference,
                cfg.norm, "step too large", warnings,
            )
        if value < cfg.epsilon:
            return _result(
                q0, p, history, True, cfg.system, endpoint, target, reference,
                cfg.norm, None, warnings,
            )

    return _result(
        q0, p, history, False, cfg.system, endpoint, target, reference,
        cfg.norm, "iteration cap reached before the stopping rule", warnings,
    )


def contraction_diagnostics(result: MatchResult) -> list:
    """Consecutive stopping-norm ratios |r(k+1)| / |r(k)|.

    An empirical proxy for the contraction factor of the feedback
    update; for a converged run the tail (last half) averages below 1.
    Individual tail ratios can tick above 1 even while converging: the
    max norm hops between landmarks, and long rotational matches decay
    with a slow ripple on top of the contraction. Too-short histories
    give an empty list.
    """
    hist = result.residual_history
    if len(hist) < 2:
        return []
    return [
        hist[i + 1] / hist[i] if hist[i] > 0 else math.inf
        for i in range(len(hist) - 1)
    ]


def _endpoint_of(cfg: ShootingConfig, q0: np.ndarray, p: np.ndarray) -> np.ndarray:
    return evolve(cfg.system, ParticleState(q0, p), cfg.evolve).final.q


def newton_match(
    reference: LandmarkTemplate, target: LandmarkTemplate, cfg: ShootingConfig
) -> MatchResult:
    """Finite-difference Newton baseline for the same root problem.

    Builds the 2N x 2N Jacobian of the endpoint map with forward
    differences off the current endpoint (one shoot per column), solves
    for the full Newton step, and damps it by h.  Each iteration
    therefore costs 2N + 1 evolutions; the point of the comparison is
    that the feedback loop avoids all of them.  Only the
    endpoint-residual stop rule is meaningful here.
    """
    _prepare(reference, target)
    if cfg.stop_rule is not StopRule.TARGET_RESIDUAL:
        raise ConfigurationError("newton_match supports only the TargetResidual rule")
    q0 = reference.points
    n = reference.n
    solver = _GramSolver(cfg.system.kernel, q0)
    warnings = ()
    if solver.ill_conditioned:
        warnings = (
            f"Gram matrix condition number {solver.condition:.3e} exceeds "
            f"{_ILL_CONDITIONED:.0e}; momenta recovery may lose accuracy",
        )

    def shoot(u_flat: np.ndarray) -> np.ndarray:
        p = solver.solve(u_flat.reshape(n, 2))
        return _endpoint_of(cfg, q0, p).ravel()

    u = np.zeros(2 * n)
    endpoint = shoot(u)
    residual = target.points.ravel() - endpoint
    initial_norm = _norm(cfg.norm, residual)
    history: list = []
    if initial_norm < cfg.epsilon:
        return _result(
            q0, solver.solve(u.reshape(n, 2)), history, True, cfg.system,
            endpoint.reshape(n, 2), target, reference, cfg.norm, None, warnings,
        )

    for _ in range(cfg.max_iter):
        step = 1e-5 * max(1.0, float(np.max(np.abs(u))))
        jac = np.empty((2 * n, 2 * n))
        try:
            for j in range(2 * n):
                probe = np.zeros(2 * n)
                probe[j] = step
                jac[:, j] = (shoot(u + probe) - endpoint) / step
            newton_step = np.linalg.solve(jac, residual)
            if not np.all(np.isfinite(newton_step)):
                raise np.linalg.LinAlgError("non-finite Newton step")
        except (np.linalg.LinAlgError, DivergenceError, DegenerateConfigurationError):
            # Singular or unevaluable Jacobian: take one feedback update.
            newton_step = residual
        u = u + cfg.h * newton_step

        try:
            endpoint = shoot(u)
        except (DivergenceError, DegenerateConfigurationError) as exc:
            # endpoint still holds the last finite shoot.
            return _result(
                q0, solver.solve(u.reshape(n, 2)), history, False, cfg.system,
                endpoint.reshape(n, 2), target, reference, cfg.norm,
                f"step too large ({exc})", warnings,
            )
        residual = target.points.ravel() - endpoint
        value = _norm(cfg.norm, residual)
        history.append(value)
        if not math.isfinite(value) or _blown_up(value, initial_norm):
            return _result(
                q0, solver.solve(u.reshape(n, 2)), history, False, cfg.system,
                endpoint.reshape(n, 2), target, reference, cfg.norm,
                "step too large", warnings,
            )
        if value < cfg.epsilon:
            return _result(
                q0, solver.solve(u.reshape(n, 2)), history, True, cfg.system,
                endpoint.reshape(n, 2), target, reference, cfg.norm, None, warnings,
            )

    return _result(
        q0, solver.solve(u.reshape(n, 2)), history, False, cfg.system,
        endpoint.reshape(n, 2), target, reference, cfg.norm,
        "iteration cap reached before the stopping rule", warnings,
    )
