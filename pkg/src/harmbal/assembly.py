"""Galerkin assembly of the harmonic balance residual and its Jacobians.

The residual of a coefficient vector x at period tau is the projection of
F(Q(x), tau) onto the represented harmonics, stored in the same block
order as x.  The default assembly path is alternating frequency/time:
synthesize the trajectory on a uniform grid, evaluate the problem
pointwise, and analyze back.  A slow adaptive-quadrature path with
tolerance 1e-15 is provided as an independent cross-check of the Fourier
integrals.

Jacobians with respect to the coefficients contract the sampled
derivative blocks of the problem against the basis and its derivatives;
the period column uses the autonomous identity from
:func:`harmbal.dae.eval_linearization`.  For unknown-period problems the
residual is augmented with a scalar phase condition anchored at a
reference solution, yielding the bordered square system.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.integrate
import scipy.linalg

from .dae import DaeProblem, TrajectorySamples, eval_F, eval_linearization
from .fourier import (
    CoefficientVector,
    HarmonicLayout,
    LayoutError,
    TimeGrid,
    analyze,
    basis_matrix,
    default_grid,
    derivative_matrix,
    differentiate,
    resize,
    synthesize_at,
)

__all__ = [
    "PhaseCondition",
    "HbSystem",
    "residual",
    "residual_quadrature",
    "jacobian_x",
    "jacobian_tau",
    "residual_augmented",
    "jacobian_augmented",
    "jacobian_operator",
    "linear_block_preconditioner",
]

QUAD_TOL = 1e-15


class UsageError(ValueError):
    """Operation invoked outside its contract."""


@dataclass(frozen=True)
class PhaseCondition:
    """Integral phase anchor removing the time-shift family.

    For an anchor solution a the condition is

        sigma(x) = <x - a, a'> + <x' - a', a''>

    in coefficient space, which by the basis isometry equals the time
    integral of (q - q_a) . q_a' + (q' - q_a') . q_a''.  It vanishes at
    the anchor itself and its gradient is a' - a''' (a fixed vector).
    """

    anchor: CoefficientVector

    def resized(self, layout: HarmonicLayout) -> "PhaseCondition":
        if self.anchor.layout == layout:
            return self
        if self.anchor.layout.state_dim != layout.state_dim:
            raise UsageError("phase anchor state dimension mismatch")
        return PhaseCondition(resize(self.anchor, layout.n_harmonics))

    def value(self, x: CoefficientVector) -> float:
        a = self.anchor
        d1 = differentiate(a, 1)
        d2 = differentiate(a, 2)
        first = (x.values - a.values) @ d1.values
        second = (differentiate(x, 1).values - d1.values) @ d2.values
        return float(first + second)

    def gradient(self, layout: HarmonicLayout) -> np.ndarray:
        a = self.anchor
        return differentiate(a, 1).values - differentiate(a, 3).values

    def value_quadrature(self, x: CoefficientVector, tol: float = QUAD_TOL) -> float:
        """Evaluate the defining time integral adaptively (cross-check)."""
        a = self.anchor
        da, dda = differentiate(a, 1), differentiate(a, 2)
        dx = differentiate(x, 1)

        def integrand(t):
            ts = np.array([t])
            q = synthesize_at(x, ts)[0]
            qa = synthesize_at(a, ts)[0]
            dq = synthesize_at(dx, ts)[0]
            dqa = synthesize_at(da, ts)[0]
            ddqa = synthesize_at(dda, ts)[0]
            return (q - qa) @ dqa + (dq - dqa) @ ddqa

        value, _ = scipy.integrate.quad(integrand, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
        return float(value)


@dataclass(frozen=True)
class HbSystem:
    """Evaluation context binding a problem to N harmonics and a grid.

    ``phase`` must be present exactly when the problem period is unknown.
    ``jacobian_mode`` selects analytic AFT contraction ("aft") or forward
    finite differences of the residual ("fd").
    """

    problem: DaeProblem
    layout: HarmonicLayout
    grid: TimeGrid
    phase: Optional[PhaseCondition] = None
    jacobian_mode: str = "aft"

    def __post_init__(self):
        if self.layout.state_dim != self.problem.state_dim:
            raise UsageError("layout state dimension must match the problem")
        if self.grid.sample_count < 2 * self.layout.n_harmonics + 2:
            raise UsageError("grid undersamples the layout; analysis would alias")
        if self.jacobian_mode not in ("aft", "fd"):
            raise UsageError("jacobian_mode must be 'aft' or 'fd'")
        if self.problem.period_mode.known:
            if self.phase is not None:
                raise UsageError("phase condition requires an unknown period")
        else:
            if self.phase is None:
                raise UsageError("unknown-period problems require a phase condition")
            object.__setattr__(self, "phase", self.phase.resized(self.layout))

    @classmethod
    def build(
        cls,
        problem: DaeProblem,
        n_harmonics: int,
        grid: TimeGrid | None = None,
        phase: PhaseCondition | None = None,
        jacobian_mode: str = "aft",
    ) -> "HbSystem":
        layout = HarmonicLayout(n_harmonics, problem.state_dim)
        return cls(problem, layout, grid or default_grid(layout), phase, jacobian_mode)

    def with_phase(self, phase: PhaseCondition) -> "HbSystem":
        return replace(self, phase=phase.resized(self.layout))

    def with_harmonics(self, n_harmonics: int) -> "HbSystem":
        layout = HarmonicLayout(n_harmonics, self.layout.state_dim)
        return HbSystem(
            self.problem, layout, default_grid(layout), self.phase, self.jacobian_mode
        )

    @property
    def size(self) -> int:
        return self.layout.size

    def period_of(self, tau: float | None) -> float:
        mode = self.problem.period_mode
        if mode.known:
            return mode.period
        if tau is None:
            raise UsageError("unknown-period system requires tau")
        if tau <= 0:
            raise UsageError("tau must be positive")
        return float(tau)

    # -- sampled-trajectory helpers -------------------------------------

    def _derivative_synthesis(self) -> list[np.ndarray]:
        basis = basis_matrix(self.layout.n_harmonics, self.grid.nodes)
        mats = []
        for j in range(self.problem.order + 1):
            mats.append(basis @ derivative_matrix(self.layout.n_harmonics, j))
        return mats

    def trajectory(self, x: CoefficientVector, tau: float) -> TrajectorySamples:
        mats = self._derivative_synthesis()
        blocks = x.block_matrix()
        stack = tuple(m @ blocks for m in mats)
        return TrajectorySamples(self.grid, stack, tau)

    def eval_time_residual(self, x: CoefficientVector, tau: float, t: np.ndarray) -> np.ndarray:
        """F(Q(x), tau) at arbitrary times t in [0, 1), shape (len(t), n)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        basis = basis_matrix(self.layout.n_harmonics, t)
        blocks = x.block_matrix()
        stack = tuple(
            basis @ derivative_matrix(self.layout.n_harmonics, j) @ blocks
            for j in range(self.problem.order + 1)
        )
        traj = TrajectorySamples(TimeGrid(len(t)), stack, tau)
        # TimeGrid nodes are not used below; eval_F needs the true times.
        scaled = [stack[j] / tau**j for j in range(self.problem.order + 1)]
        values = np.asarray(self.problem.residual(scaled, tau * t), dtype=float)
        del traj
        return values


def _check_x(sys: HbSystem, x: CoefficientVector):
    if x.layout != sys.layout:
        raise LayoutError("coefficient vector does not match the system layout")


def residual(sys: HbSystem, x: CoefficientVector, tau: float | None = None) -> CoefficientVector:
    """HB residual by the AFT pipeline, same block order as x."""
    _check_x(sys, x)
    period = sys.period_of(tau)
    values = eval_F(sys.problem, sys.trajectory(x, period))
    return analyze(values, sys.layout, sys.grid)


def residual_quadrature(
    sys: HbSystem, x: CoefficientVector, tau: float | None = None, tol: float = QUAD_TOL
) -> CoefficientVector:
    """HB residual with each Fourier integral evaluated adaptively.

    Independent of the AFT grid; used to cross-check aliasing behavior.
    """
    _check_x(sys, x)
    period = sys.period_of(tau)
    n_harm = sys.layout.n_harmonics

    def integrand(t):
        weights = basis_matrix(n_harm, np.array([t]))[0]
        f_val = sys.eval_time_residual(x, period, np.array([t]))[0]
        return np.outer(weights, f_val).ravel()

    values, _ = scipy.integrate.quad_vec(integrand, 0.0, 1.0, epsabs=tol, epsrel=tol)
    return CoefficientVector(sys.layout, values)


def _sampled_blocks(sys: HbSystem, x: CoefficientVector, tau: float):
    return eval_linearization(sys.problem, sys.trajectory(x, tau))


def _analysis_matrix(sys: HbSystem) -> np.ndarray:
    basis = basis_matrix(sys.layout.n_harmonics, sys.grid.nodes)
    return basis.T / sys.grid.sample_count


def jacobian_x(sys: HbSystem, x: CoefficientVector, tau: float | None = None) -> np.ndarray:
    """Dense derivative of the residual with respect to the coefficients.

    In "aft" mode the columns are assembled in one pass as
    analysis o (pointwise derivative blocks) o (derivative synthesis); in
    "fd" mode they are forward differences of :func:`residual`.
    """
    _check_x(sys, x)
    period = sys.period_of(tau)
    if sys.jacobian_mode == "fd":
        return _jacobian_fd(sys, x, period)
    lin = _sampled_blocks(sys, x, period)
    analysis = _analysis_matrix(sys)
    mats = sys._derivative_synthesis()
    nb, n = sys.layout.n_blocks, sys.layout.state_dim
    jac = np.zeros((nb, n, nb, n))
    for j in range(sys.problem.order + 1):
        jac += period ** (-j) * np.einsum(
            "am,mil,mc->aicl", analysis, lin.blocks[j], mats[j], optimize=True
        )
    return jac.reshape(sys.size, sys.size)


def _jacobian_fd(sys: HbSystem, x: CoefficientVector, period: float) -> np.ndarray:
    base = residual(sys, x, period).values
    jac = np.empty((sys.size, sys.size))
    sqrt_eps = np.sqrt(np.finfo(float).eps)
    for c in range(sys.size):
        h = sqrt_eps * (1.0 + abs(x.values[c]))
        bumped = x.values.copy()
        bumped[c] += h
        jac[:, c] = (residual(sys, x.with_values(bumped), period).values - base) / h
    return jac


def jacobian_tau(sys: HbSystem, x: CoefficientVector, tau: float) -> CoefficientVector:
    """Derivative of the residual with respect to the period (column).

    Only defined for unknown-period problems, where the autonomous
    identity expresses it through the sampled derivative blocks.
    """
    if sys.problem.period_mode.known:
        raise UsageError("period column is undefined for a known period")
    _check_x(sys, x)
    period = sys.period_of(tau)
    lin = _sampled_blocks(sys, x, period)
    return analyze(lin.period_direction, sys.layout, sys.grid)


def residual_augmented(
    sys: HbSystem, x: CoefficientVector, tau: float
) -> tuple[CoefficientVector, float]:
    """(HB residual, phase value) for the unknown-period bordered system."""
    if sys.phase is None:
        raise UsageError("augmented residual requires a phase condition")
    return residual(sys, x, tau), sys.phase.value(x)


def jacobian_augmented(sys: HbSystem, x: CoefficientVector, tau: float) -> np.ndarray:
    """Bordered square Jacobian of size n(2N+1)+1.

    Rows: coefficient residual with its period column, then the phase
    gradient with a zero period entry.
    """
    if sys.phase is None:
        raise UsageError("augmented Jacobian requires a phase condition")
    period = sys.period_of(tau)
    m = sys.size
    out = np.zeros((m + 1, m + 1))
    out[:m, :m] = jacobian_x(sys, x, period)
    out[:m, m] = jacobian_tau(sys, x, period).values
    out[m, :m] = sys.phase.gradient(sys.layout)
    return out


class _JacobianOperator:
    """Matrix-free products with the (optionally bordered) Jacobian."""

    def __init__(self, sys: HbSystem, x: CoefficientVector, tau: float, bordered: bool):
        self.sys = sys
        period = sys.period_of(tau)
        self.period = period
        self.lin = _sampled_blocks(sys, x, period)
        self.analysis = _analysis_matrix(sys)
        self.mats = sys._derivative_synthesis()
        self.bordered = bordered
        if bordered:
            if sys.phase is None:
                raise UsageError("bordered operator requires a phase condition")
            self.tau_column = analyze(
                self.lin.period_direction, sys.layout, sys.grid
            ).values
            self.phase_row = sys.phase.gradient(sys.layout)
        m = sys.size
        self.shape = (m + 1, m + 1) if bordered else (m, m)
        self.dtype = np.dtype(float)

    def _core_matvec(self, values: np.ndarray) -> np.ndarray:
        blocks = values.reshape(self.sys.layout.n_blocks, self.sys.layout.state_dim)
        samples = np.zeros((self.sys.grid.sample_count, self.sys.layout.state_dim))
        for j in range(self.sys.problem.order + 1):
            signal = self.mats[j] @ blocks
            samples += self.period ** (-j) * np.einsum(
                "sil,sl->si", self.lin.blocks[j], signal
            )
        return (self.analysis @ samples).ravel()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if not self.bordered:
            return self._core_matvec(v)
        m = self.sys.size
        top = self._core_matvec(v[:m]) + v[m] * self.tau_column
        bottom = self.phase_row @ v[:m]
        return np.concatenate([top, [bottom]])

    def __matmul__(self, v):
        return self.matvec(v)

    def to_dense(self) -> np.ndarray:
        m = self.shape[0]
        out = np.empty((m, m))
        eye = np.eye(m)
        for c in range(m):
            out[:, c] = self.matvec(eye[c])
        return out


def jacobian_operator(
    sys: HbSystem, x: CoefficientVector, tau: float | None = None, bordered: bool = False
) -> _JacobianOperator:
    """Matrix-free Jacobian products for Krylov inner solves."""
    _check_x(sys, x)
    return _JacobianOperator(sys, x, sys.period_of(tau), bordered)


def linear_block_preconditioner(
    sys: HbSystem, tau: float | None = None, x_ref: CoefficientVector | None = None
) -> Callable[[np.ndarray], np.ndarray]:
    """Factorized block-diagonal preconditioner from a frozen linearization.

    Freezes the derivative blocks at a reference point (default zero) and
    averages them over the grid, which for linear-plus-local-nonlinearity
    problems recovers the exact constant-coefficient HB operator: one n x n
    block for the constant term and one 2n x 2n sin/cos block per harmonic.
    The returned callable applies the inverse; bordered vectors pass the
    trailing entry through unchanged.
    """
    period = sys.period_of(tau)
    x_ref = x_ref or CoefficientVector.zeros(sys.layout)
    lin = _sampled_blocks(sys, x_ref, period)
    coeffs = [lin.blocks[j].mean(axis=0) for j in range(sys.problem.order + 1)]
    n = sys.layout.state_dim

    j_cycle = [
        np.array([[1.0, 0.0], [0.0, 1.0]]),
        np.array([[0.0, -1.0], [1.0, 0.0]]),
        np.array([[-1.0, 0.0], [0.0, -1.0]]),
        np.array([[0.0, 1.0], [-1.0, 0.0]]),
    ]
    factors = [scipy.linalg.lu_factor(coeffs[0])]
    for harmonic in range(1, sys.layout.n_harmonics + 1):
        w = 2.0 * np.pi * harmonic
        block = np.zeros((2 * n, 2 * n))
        for order, a_mat in enumerate(coeffs):
            block += (w / period) ** order * np.kron(j_cycle[order % 4], a_mat)
        factors.append(scipy.linalg.lu_factor(block))

    def apply(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        out = v.copy()
        out[:n] = scipy.linalg.lu_solve(factors[0], v[:n])
        for harmonic in range(1, sys.layout.n_harmonics + 1):
            sl = slice(n * (2 * harmonic - 1), n * (2 * harmonic + 1))
            out[sl] = scipy.linalg.lu_solve(factors[harmonic], v[sl])
        return out

    return apply
