"""Higher-order DAE definitions and pointwise residual/linearization evaluation.

A problem is the map G(u, u^(1), ..., u^(k), t) = 0 for u(t) in R^n.  A
tau-periodic solution is computed through the rescaled residual

    F(q, tau)(t) = G(q(t), q^(1)(t)/tau, ..., q^(k)(t)/tau^k, tau*t)

evaluated along 1-periodic trajectories q.  This module evaluates F and its
linearization blocks A_j (partial derivatives of G along the trajectory,
with the tau scalings applied) on sampled trajectories; the Galerkin
projection lives in :mod:`harmbal.assembly`.

Evaluators are vectorized over the sample axis: the residual takes a list
of (S, n) derivative arrays plus the (S,) rescaled times and returns (S, n);
analytic partials return (S, n, n).  Evaluations at distinct nodes must not
share mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .fourier import CoefficientVector, TimeGrid, differentiate, synthesize

__all__ = [
    "PeriodMode",
    "DaeProblem",
    "TrajectorySamples",
    "LinearizationSamples",
    "EvaluationError",
    "trajectory_from_coefficients",
    "eval_F",
    "eval_linearization",
    "energy_2d",
    "MASS_SPRING_K",
]

EPS = np.finfo(float).eps

ResidualFn = Callable[[Sequence[np.ndarray], np.ndarray], np.ndarray]
PartialFn = Callable[[Sequence[np.ndarray], np.ndarray], np.ndarray]


class EvaluationError(RuntimeError):
    """Residual or derivative produced a non-finite value.

    Carries the index of the first offending grid node so solvers can
    report where a trajectory left the domain of the problem.
    """

    def __init__(self, message: str, node_index: int):
        super().__init__(f"{message} (node index {node_index})")
        self.node_index = node_index


@dataclass(frozen=True)
class PeriodMode:
    """Known(T) fixes the period; Unknown(T_guess) makes it an unknown."""

    known: bool
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")

    @classmethod
    def Known(cls, period: float) -> "PeriodMode":
        return cls(True, float(period))

    @classmethod
    def Unknown(cls, period_guess: float) -> "PeriodMode":
        return cls(False, float(period_guess))


@dataclass(frozen=True)
class DaeProblem:
    """User-facing definition of G(u, u^(1), ..., u^(k), t).

    Parameters
    ----------
    order : int
        Highest derivative order k appearing in G.
    state_dim : int
        State dimension n.
    residual : callable
        ``residual(stack, t)`` with ``stack`` a sequence of k+1 arrays of
        shape (S, n) (u, u^(1), ..., u^(k) already scaled by tau powers)
        and ``t`` the (S,) times passed to G; returns (S, n).
    partials : sequence of callables, optional
        ``partials[j](stack, t)`` returns the (S, n, n) Jacobian of G with
        respect to u^(j) for j = 0..k.  When absent, central finite
        differences with step sqrt(eps)*max(1, |argument|) are used.
    period_mode : PeriodMode
        Known period or unknown-with-guess.
    time_dependence : str
        "periodic" (G periodic in t with the known period) or "autonomous".
        An unknown period requires an autonomous problem.
    """

    order: int
    state_dim: int
    residual: ResidualFn
    period_mode: PeriodMode
    time_dependence: str = "periodic"
    partials: Optional[Sequence[PartialFn]] = None
    monitors: dict = field(default_factory=dict)
    name: str = "dae"

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if self.state_dim < 1:
            raise ValueError("state_dim must be positive")
        if self.time_dependence not in ("periodic", "autonomous"):
            raise ValueError("time_dependence must be 'periodic' or 'autonomous'")
        if not self.period_mode.known and self.time_dependence != "autonomous":
            raise ValueError("an unknown period requires an autonomous problem")
        if self.partials is not None and len(self.partials) != self.order + 1:
            raise ValueError(
                f"expected {self.order + 1} partial evaluators, got {len(self.partials)}"
            )

    @property
    def autonomous(self) -> bool:
        return self.time_dependence == "autonomous"


@dataclass(frozen=True)
class TrajectorySamples:
    """Sampled 1-periodic trajectory: q, q^(1), ..., q^(k) on a grid.

    The stack holds unscaled time derivatives of q in rescaled time; the
    tau powers are applied during evaluation.
    """

    grid: TimeGrid
    stack: tuple
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        s = self.grid.sample_count
        for entry in self.stack:
            if entry.shape[0] != s:
                raise ValueError("stack entries must be sampled on the grid")

    @property
    def depth(self) -> int:
        return len(self.stack) - 1


@dataclass(frozen=True)
class LinearizationSamples:
    """Sampled coefficient blocks of the linearized rescaled residual.

    ``blocks[j]`` has shape (S, n, n) and holds the partial of G with
    respect to u^(j) along the trajectory, j = 0..k (tau scalings are NOT
    included here; they are applied during Galerkin assembly).
    ``period_direction`` is the (S, n) derivative of F with respect to tau
    (only for unknown-period problems, via the autonomous identity).
    """

    grid: TimeGrid
    blocks: tuple
    period_direction: Optional[np.ndarray]


def trajectory_from_coefficients(
    x: CoefficientVector, period: float, grid: TimeGrid, order: int
) -> TrajectorySamples:
    """Synthesize q and its first ``order`` derivatives on the grid."""
    stack = [synthesize(x, grid)]
    current = x
    for _ in range(order):
        current = differentiate(current, 1)
        stack.append(synthesize(current, grid))
    return TrajectorySamples(grid, tuple(stack), float(period))


def _scaled_stack(problem: DaeProblem, traj: TrajectorySamples):
    tau = traj.period
    return [traj.stack[j] / tau**j for j in range(problem.order + 1)]


def eval_F(problem: DaeProblem, traj: TrajectorySamples) -> np.ndarray:
    """Evaluate F(q, tau) at all grid nodes, shape (S, n)."""
    if traj.depth != problem.order:
        raise ValueError(
            f"trajectory stack depth {traj.depth} != problem order {problem.order}"
        )
    t = traj.grid.nodes * traj.period
    values = np.asarray(problem.residual(_scaled_stack(problem, traj), t), dtype=float)
    if values.shape != (traj.grid.sample_count, problem.state_dim):
        raise ValueError("residual evaluator returned wrong shape")
    _check_finite(values, "residual")
    return values


def _check_finite(values: np.ndarray, what: str):
    finite = np.isfinite(values).reshape(values.shape[0], -1).all(axis=1)
    if not finite.all():
        raise EvaluationError(f"non-finite {what} value", int(np.argmax(~finite)))


def _fd_partial(problem: DaeProblem, stack, t, slot: int) -> np.ndarray:
    """Central finite-difference Jacobian of G w.r.t. argument ``slot``."""
    n = problem.state_dim
    s_count = stack[0].shape[0]
    scale = max(1.0, float(np.max(np.abs(stack[slot]))) if stack[slot].size else 1.0)
    h = np.sqrt(EPS) * scale
    jac = np.empty((s_count, n, n))
    for i in range(n):
        bumped = [entry.copy() for entry in stack]
        bumped[slot][:, i] += h
        plus = np.asarray(problem.residual(bumped, t), dtype=float)
        bumped[slot][:, i] -= 2 * h
        minus = np.asarray(problem.residual(bumped, t), dtype=float)
        jac[:, :, i] = (plus - minus) / (2 * h)
    return jac


def eval_linearization(problem: DaeProblem, traj: TrajectorySamples) -> LinearizationSamples:
    """Sampled partial-derivative blocks of G along the trajectory.

    Uses the analytic partials when supplied, otherwise central finite
    differences.  For unknown-period (autonomous) problems the derivative
    of F with respect to tau is also returned, computed from the identity

        dF/dtau = -sum_j j * tau^-(j+1) * dG/du^(j) * q^(j)

    which holds because G has no explicit time dependence.
    """
    if traj.depth != problem.order:
        raise ValueError("trajectory stack depth does not match problem order")
    tau = traj.period
    t = traj.grid.nodes * tau
    scaled = _scaled_stack(problem, traj)
    if problem.partials is not None:
        blocks = [
            np.asarray(problem.partials[j](scaled, t), dtype=float)
            for j in range(problem.order + 1)
        ]
    else:
        blocks = [_fd_partial(problem, scaled, t, j) for j in range(problem.order + 1)]
    for j, block in enumerate(blocks):
        _check_finite(block, f"derivative block {j}")

    period_direction = None
    if not problem.period_mode.known:
        period_direction = np.zeros_like(traj.stack[0])
        for j in range(1, problem.order + 1):
            scaled_deriv = traj.stack[j] / tau ** (j + 1)
            period_direction -= j * np.einsum("sij,sj->si", blocks[j], scaled_deriv)
    return LinearizationSamples(traj.grid, tuple(blocks), period_direction)


# Stiffness of the 2-DOF oscillator benchmark; also used by its energy.
MASS_SPRING_K = np.array([[2.0, -1.0], [-1.0, 2.0]])


def energy_2d(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Conserved energy of the 2-DOF cubic oscillator.

    H(u, v) = v.v/2 + u.K.u/2 + u_1^4/8 with v the physical-time velocity.
    Broadcasts over leading axes: u, v of shape (..., 2).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    kinetic = 0.5 * np.sum(v * v, axis=-1)
    elastic = 0.5 * np.einsum("...i,ij,...j->...", u, MASS_SPRING_K, u)
    quartic = u[..., 0] ** 4 / 8.0
    return kinetic + elastic + quartic
