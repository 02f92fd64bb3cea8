"""Fixed-step RK4 integration of the particle system.

A classical fourth-order Runge-Kutta scheme with a constant step is
enough here: the flows of interest are smooth away from particle
collisions, trajectories are short (t in [0, 1] by default), and a
fixed grid keeps runs bit-for-bit reproducible, which the matching
loop and the regression tests both rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateConfigurationError, DivergenceError
from .particles import ParticleState, SystemSpec, rhs

__all__ = ["EvolveConfig", "EvolveResult", "evolve"]


@dataclass(frozen=True)
class EvolveConfig:
    """Time horizon and grid for one evolution.

    ``capture_every = 0`` stores no intermediate frames; a positive value
    stores every k-th step.  The initial and final states are always
    included in ``frames`` when capturing is on.
    """

    t_final: float = 1.0
    steps: int = 100
    capture_every: int = 0

    def __post_init__(self):
        if not (self.t_final > 0 and np.isfinite(self.t_final)):
            raise ConfigurationError(f"t_final must be positive, got {self.t_final}")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be >= 1, got {self.steps}")
        if self.capture_every < 0:
            raise ConfigurationError(
                f"capture_every must be >= 0, got {self.capture_every}"
            )


@dataclass(frozen=True)
class EvolveResult:
    """Final state plus optionally captured (time, state) frames."""

    final: ParticleState
    frames: tuple

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.frames])


def _check_finite(q: np.ndarray, p: np.ndarray, step: int, t: float) -> None:
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise DivergenceError(
            f"non-finite state at step {step} (t = {t:.6g}); "
            "the step size is too large for this configuration"
        )


def evolve(
    spec: SystemSpec, state: ParticleState, config: EvolveConfig | None = None
) -> EvolveResult:
    """Integrate the system from ``state`` over [0, t_final].

    Raises DivergenceError when the state stops being finite and
    re-raises particle coincidence errors with the step and time at
    which they occurred appended.
    """
    if config is None:
        config = EvolveConfig()
    dt = config.t_final / config.steps
    # Frame times come from the fraction (step / steps) * t_final so the
    # last one lands on t_final exactly instead of accumulating dt error.
    t_at = lambda k: config.t_final * (k / config.steps)
    q = state.q.copy()
    p = state.p.copy()

    frames = []
    if config.capture_every > 0:
        frames.append((0.0, ParticleState(q.copy(), p.copy())))

    def f(qq, pp):
        return rhs(spec, ParticleState(qq, pp))

    # Oversized steps overflow to inf inside the stage evaluations before
    # the finite-state check catches them; that path is expected, so the
    # would-be RuntimeWarnings are suppressed here and nowhere else.
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(config.steps):
            t = t_at(step)
            try:
                k1q, k1p = f(q, p)
                k2q, k2p = f(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p)
                k3q, k3p = f(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p)
                k4q, k4p = f(q + dt * k3q, p + dt * k3p)
            except DegenerateConfigurationError as exc:
                raise DegenerateConfigurationError(
                    f"{exc} (during step {step + 1}, t in [{t:.6g}, {t + dt:.6g}])"
                ) from exc
            except ValueError as exc:
                # ParticleState rejects non-finite intermediates; surface as divergence.
                raise DivergenceError(
                    f"non-finite intermediate at step {step + 1} "
                    f"(t in [{t:.6g}, {t + dt:.6g}]); "
                    "the step size is too large for this configuration"
                ) from exc
            q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            _check_finite(q, p, step + 1, t_at(step + 1))
            if config.capture_every > 0 and (
                (step + 1) % config.capture_every == 0 or step + 1 == config.steps
            ):
                frames.append((t_at(step + 1), ParticleState(q.copy(), p.copy())))

    return EvolveResult(final=ParticleState(q, p), frames=tuple(frames))
