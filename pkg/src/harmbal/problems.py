"""Benchmark problems: 3D circuit DAE, 2D cubic oscillator, cantilever beam.

Each builder returns a :class:`~harmbal.dae.DaeProblem` with analytic
partial derivatives.  The beam builder assembles consistent mass/stiffness
matrices from 2D Euler-Bernoulli frame elements (axial rod plus Hermite
bending) and attaches a grounded cubic spring at the transverse tip DOF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dae import MASS_SPRING_K, DaeProblem, PeriodMode, energy_2d

__all__ = [
    "build_circuit_3d",
    "build_mass_spring_2d",
    "BeamConfig",
    "BeamModel",
    "beam_element_matrices",
    "build_beam_model",
    "build_beam",
]

TWO_PI = 2.0 * np.pi


def build_circuit_3d() -> DaeProblem:
    """Three-node nonlinear circuit network, first order, period 1.

    G(u, u', t) = [ u1' + u1 - (exp(-u1-u3) - 1),
                    u2' + u2 + u3 + sin(2 pi t),
                    u2 + u3 + sin(2 pi t) + exp(u3) - exp(-u1-u3) ]

    The third equation is algebraic (no derivative enters), so the leading
    coefficient is singular.
    """

    def residual(stack, t):
        u, du = stack
        e_m = np.exp(-u[:, 0] - u[:, 2])
        e_p = np.exp(u[:, 2])
        sin_t = np.sin(TWO_PI * t)
        out = np.empty_like(u)
        out[:, 0] = du[:, 0] + u[:, 0] - (e_m - 1.0)
        out[:, 1] = du[:, 1] + u[:, 1] + u[:, 2] + sin_t
        out[:, 2] = u[:, 1] + u[:, 2] + sin_t + e_p - e_m
        return out

    def d_state(stack, t):
        u = stack[0]
        s = u.shape[0]
        e_m = np.exp(-u[:, 0] - u[:, 2])
        e_p = np.exp(u[:, 2])
        jac = np.zeros((s, 3, 3))
        jac[:, 0, 0] = 1.0 + e_m
        jac[:, 0, 2] = e_m
        jac[:, 1, 1] = 1.0
        jac[:, 1, 2] = 1.0
        jac[:, 2, 0] = e_m
        jac[:, 2, 1] = 1.0
        jac[:, 2, 2] = 1.0 + e_p + e_m
        return jac

    def d_velocity(stack, t):
        s = stack[0].shape[0]
        jac = np.zeros((s, 3, 3))
        jac[:, 0, 0] = 1.0
        jac[:, 1, 1] = 1.0
        return jac

    return DaeProblem(
        order=1,
        state_dim=3,
        residual=residual,
        partials=(d_state, d_velocity),
        period_mode=PeriodMode.Known(1.0),
        time_dependence="periodic",
        name="circuit_3d",
    )


def build_mass_spring_2d() -> DaeProblem:
    """Two-DOF oscillator with a cubic spring on the first coordinate.

    G(u, u', u'') = u'' + K u + (u1^3/2, 0) with K = [[2,-1],[-1,2]].
    Autonomous and conservative; periodic orbits come in one-parameter
    families, so the period is an unknown and solves use a phase condition.
    """

    def residual(stack, t):
        u, _, ddu = stack
        out = ddu + u @ MASS_SPRING_K.T
        out[:, 0] += 0.5 * u[:, 0] ** 3
        return out

    def d_state(stack, t):
        u = stack[0]
        s = u.shape[0]
        jac = np.broadcast_to(MASS_SPRING_K, (s, 2, 2)).copy()
        jac[:, 0, 0] += 1.5 * u[:, 0] ** 2
        return jac

    def d_velocity(stack, t):
        return np.zeros((stack[0].shape[0], 2, 2))

    def d_acceleration(stack, t):
        return np.broadcast_to(np.eye(2), (stack[0].shape[0], 2, 2))

    def mean_energy(traj):
        u = traj.stack[0]
        v = traj.stack[1] / traj.period
        return float(np.mean(energy_2d(u, v)))

    return DaeProblem(
        order=2,
        state_dim=2,
        residual=residual,
        partials=(d_state, d_velocity, d_acceleration),
        period_mode=PeriodMode.Unknown(TWO_PI),
        time_dependence="autonomous",
        monitors={"H": mean_energy},
        name="mass_spring_2d",
    )


@dataclass(frozen=True)
class BeamConfig:
    """Cantilever beam with a grounded cubic spring at the tip.

    Geometry and material default to structural steel with a square
    cross-section; damping is Rayleigh (C = a M + b K) and the forcing is
    a single-harmonic point load on the transverse tip DOF.
    """

    n_elements: int = 19
    length: float = 0.70
    youngs_modulus: float = 2.05e11
    density: float = 7800.0
    section_side: float = 0.014
    cubic_stiffness: float = 6.0e9
    rayleigh_mass: float = 0.0
    rayleigh_stiffness: float = 1.0e-4
    force_amplitude: float = 100.0
    force_dof: int | None = None  # default: transverse tip DOF

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be positive")
        if min(self.length, self.youngs_modulus, self.density, self.section_side) <= 0:
            raise ValueError("geometry and material properties must be positive")

    @property
    def area(self) -> float:
        return self.section_side**2

    @property
    def second_moment(self) -> float:
        return self.section_side**4 / 12.0


def beam_element_matrices(config: BeamConfig):
    """Single 6x6 element stiffness and consistent mass.

    DOF order per element: (u1, w1, theta1, u2, w2, theta2) with u axial,
    w transverse, theta rotation.
    """
    le = config.length / config.n_elements
    ea = config.youngs_modulus * config.area
    ei = config.youngs_modulus * config.second_moment
    rho_al = config.density * config.area * le

    k = np.zeros((6, 6))
    m = np.zeros((6, 6))

    axial = slice(0, 6, 3)
    k[axial, axial] = ea / le * np.array([[1.0, -1.0], [-1.0, 1.0]])
    m[axial, axial] = rho_al / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])

    bend = np.ix_([1, 2, 4, 5], [1, 2, 4, 5])
    k[bend] = (
        ei
        / le**3
        * np.array(
            [
                [12.0, 6.0 * le, -12.0, 6.0 * le],
                [6.0 * le, 4.0 * le**2, -6.0 * le, 2.0 * le**2],
                [-12.0, -6.0 * le, 12.0, -6.0 * le],
                [6.0 * le, 2.0 * le**2, -6.0 * le, 4.0 * le**2],
            ]
        )
    )
    m[bend] = (
        rho_al
        / 420.0
        * np.array(
            [
                [156.0, 22.0 * le, 54.0, -13.0 * le],
                [22.0 * le, 4.0 * le**2, 13.0 * le, -3.0 * le**2],
                [54.0, 13.0 * le, 156.0, -22.0 * le],
                [-13.0 * le, -3.0 * le**2, -22.0 * le, 4.0 * le**2],
            ]
        )
    )
    return m, k


@dataclass(frozen=True)
class BeamModel:
    """Assembled free-DOF matrices of the clamped beam."""

    config: BeamConfig
    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    tip_dof: int

    @property
    def n_dof(self) -> int:
        return self.mass.shape[0]

    def natural_frequencies(self) -> np.ndarray:
        """Undamped natural frequencies in rad/s, ascending."""
        w2 = scipy.linalg.eigh(self.stiffness, self.mass, eigvals_only=True)
        return np.sqrt(np.maximum(w2, 0.0))


def build_beam_model(config: BeamConfig | None = None) -> BeamModel:
    """Assemble global M, C, K; clamp node 0 (all three DOFs).

    Nodes are numbered along the axis with per-node DOF order (axial,
    transverse, rotation), so matrices are reproducible entry for entry.
    """
    config = config or BeamConfig()
    ne = config.n_elements
    n_nodes = ne + 1
    total = 3 * n_nodes
    m_el, k_el = beam_element_matrices(config)

    mass = np.zeros((total, total))
    stiffness = np.zeros((total, total))
    for e in range(ne):
        dofs = np.arange(3 * e, 3 * e + 6)
        idx = np.ix_(dofs, dofs)
        mass[idx] += m_el
        stiffness[idx] += k_el

    free = slice(3, total)
    mass = mass[free, free]
    stiffness = stiffness[free, free]
    damping = config.rayleigh_mass * mass + config.rayleigh_stiffness * stiffness
    tip_dof = 3 * (ne - 1) + 1
    return BeamModel(config, mass, damping, stiffness, tip_dof)


def build_beam(model: BeamModel, forcing_frequency: float) -> DaeProblem:
    """Forced beam DAE at a fixed forcing frequency s (rad/s).

    G(u, u', u'', t) = M u'' + C u' + K u + f_nl(u) - F0 cos(s t) e_f
    with f_nl the cubic tip spring.  The excitation is 2 pi / s periodic,
    so the problem carries a known period T = 2 pi / s.
    """
    s = float(forcing_frequency)
    if s <= 0:
        raise ValueError("forcing frequency must be positive")
    config = model.config
    n = model.n_dof
    tip = model.tip_dof
    force_dof = config.force_dof if config.force_dof is not None else tip
    if not 0 <= force_dof < n:
        raise ValueError(f"force_dof {force_dof} outside 0..{n - 1}")
    k3 = config.cubic_stiffness

    def residual(stack, t):
        u, du, ddu = stack
        out = ddu @ model.mass.T + du @ model.damping.T + u @ model.stiffness.T
        out[:, tip] += k3 * u[:, tip] ** 3
        out[:, force_dof] -= config.force_amplitude * np.cos(s * t)
        return out

    def d_state(stack, t):
        u = stack[0]
        jac = np.broadcast_to(model.stiffness, (u.shape[0], n, n)).copy()
        jac[:, tip, tip] += 3.0 * k3 * u[:, tip] ** 2
        return jac

    def d_velocity(stack, t):
        return np.broadcast_to(model.damping, (stack[0].shape[0], n, n))

    def d_acceleration(stack, t):
        return np.broadcast_to(model.mass, (stack[0].shape[0], n, n))

    def tip_amplitude(traj):
        return float(np.max(np.abs(traj.stack[0][:, tip])))

    return DaeProblem(
        order=2,
        state_dim=n,
        residual=residual,
        partials=(d_state, d_velocity, d_acceleration),
        period_mode=PeriodMode.Known(TWO_PI / s),
        time_dependence="periodic",
        monitors={"tip_amplitude": tip_amplitude},
        name="beam_57",
    )
