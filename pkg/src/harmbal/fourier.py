"""Real-form Fourier coefficient algebra for vector valued trig polynomials.

A 1-periodic signal with values in R^n and N harmonics is stored as a flat
coefficient vector in block order

    (x_0, x_1, x_2, ..., x_{2N-1}, x_{2N})

where each block is an n-vector: block 0 is the constant term, block 2j-1
holds the sin(2*pi*j*t) coefficients and block 2j the cos(2*pi*j*t)
coefficients.  Synthesis uses the sqrt(2)-normalized real basis

    f(t) = x_0 + sum_j sqrt(2)*x_{2j-1}*sin(2*pi*j*t)
               + sqrt(2)*x_{2j}*cos(2*pi*j*t)

so that the Euclidean norm of the coefficient vector equals the L2 norm of
the synthesized signal.  Analysis is the uniform-grid trapezoidal rule
(equivalently, scaled DFT bins); it inverts synthesis exactly whenever the
grid strictly oversamples the represented span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HarmonicLayout",
    "TimeGrid",
    "CoefficientVector",
    "default_sample_count",
    "default_grid",
    "basis_matrix",
    "synthesize",
    "synthesize_at",
    "analyze",
    "differentiate",
    "derivative_matrix",
    "resize",
    "grid_l2_norm",
    "coefficients_to_amplitudes",
    "amplitudes_to_coefficients",
]

TWO_PI = 2.0 * np.pi
SQRT2 = np.sqrt(2.0)


class LayoutError(ValueError):
    """Coefficient/grid shape disagreement (a usage error)."""


@dataclass(frozen=True)
class HarmonicLayout:
    """Shape descriptor: number of harmonics N and state dimension n."""

    n_harmonics: int
    state_dim: int

    def __post_init__(self):
        if self.n_harmonics < 0:
            raise LayoutError("n_harmonics must be non-negative")
        if self.state_dim < 1:
            raise LayoutError("state_dim must be positive")

    @property
    def n_blocks(self) -> int:
        return 2 * self.n_harmonics + 1

    @property
    def size(self) -> int:
        """Total coefficient count, state_dim * (2 N + 1)."""
        return self.state_dim * self.n_blocks


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_m = m/S on [0, 1)."""

    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise LayoutError("sample_count must be positive")

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.sample_count) / self.sample_count


def default_sample_count(n_harmonics: int) -> int:
    """Smallest power of two >= 4*(2N+1).

    This de-aliases products of up to four represented factors (cubic
    nonlinearities acting on an N-harmonic signal) on the analysis grid.
    """
    target = 4 * (2 * n_harmonics + 1)
    s = 1
    while s < target:
        s *= 2
    return s


def default_grid(layout: HarmonicLayout) -> TimeGrid:
    return TimeGrid(default_sample_count(layout.n_harmonics))


@dataclass(frozen=True)
class CoefficientVector:
    """Fourier coefficients of an n-vector valued trig polynomial.

    ``values`` is the flat array in the block order documented in the
    module docstring.  Instances are immutable; all algebra returns new
    vectors.
    """

    layout: HarmonicLayout
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.layout.size,):
            raise LayoutError(
                f"values has shape {vals.shape}, layout requires ({self.layout.size},)"
            )
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, layout: HarmonicLayout) -> "CoefficientVector":
        return cls(layout, np.zeros(layout.size))

    @classmethod
    def from_blocks(cls, blocks: np.ndarray) -> "CoefficientVector":
        """Build from a (2N+1, n) block matrix."""
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim != 2 or blocks.shape[0] % 2 != 1:
            raise LayoutError("block matrix must have shape (2N+1, n)")
        layout = HarmonicLayout((blocks.shape[0] - 1) // 2, blocks.shape[1])
        return cls(layout, blocks.ravel())

    def block_matrix(self) -> np.ndarray:
        """View of the coefficients as a (2N+1, n) matrix, row = block."""
        return self.values.reshape(self.layout.n_blocks, self.layout.state_dim)

    def block(self, index: int) -> np.ndarray:
        return self.block_matrix()[index]

    def norm(self) -> float:
        """Euclidean norm; equals the L2 norm of the synthesized signal."""
        return float(np.linalg.norm(self.values))

    def with_values(self, values: np.ndarray) -> "CoefficientVector":
        return CoefficientVector(self.layout, values)

    def __add__(self, other: "CoefficientVector") -> "CoefficientVector":
        self._check_same_layout(other)
        return CoefficientVector(self.layout, self.values + other.values)

    def __sub__(self, other: "CoefficientVector") -> "CoefficientVector":
        self._check_same_layout(other)
        return CoefficientVector(self.layout, self.values - other.values)

    def __mul__(self, scalar: float) -> "CoefficientVector":
        return CoefficientVector(self.layout, self.values * float(scalar))

    __rmul__ = __mul__

    def dot(self, other: "CoefficientVector") -> float:
        self._check_same_layout(other)
        return float(self.values @ other.values)

    def _check_same_layout(self, other: "CoefficientVector"):
        if self.layout != other.layout:
            raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")


def basis_matrix(n_harmonics: int, t: np.ndarray) -> np.ndarray:
    """Evaluate the sqrt(2)-normalized basis at times ``t``.

    Returns B of shape (len(t), 2N+1) with B[:, 0] = 1,
    B[:, 2j-1] = sqrt(2) sin(2 pi j t) and B[:, 2j] = sqrt(2) cos(2 pi j t),
    so sampled signals are ``B @ X`` for a (2N+1, n) block matrix X.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    cols = [np.ones_like(t)]
    for j in range(1, n_harmonics + 1):
        phase = TWO_PI * j * t
        cols.append(SQRT2 * np.sin(phase))
        cols.append(SQRT2 * np.cos(phase))
    return np.column_stack(cols)


def synthesize(x: CoefficientVector, grid: TimeGrid) -> np.ndarray:
    """Sample the trig polynomial on the grid; exact, shape (S, n).

    Requires S >= 2N+1 so that the sampled representation stays injective.
    """
    n = x.layout.n_harmonics
    if grid.sample_count < 2 * n + 1:
        raise LayoutError(
            f"grid with {grid.sample_count} samples cannot carry {n} harmonics"
        )
    return basis_matrix(n, grid.nodes) @ x.block_matrix()


def synthesize_at(x: CoefficientVector, t: np.ndarray) -> np.ndarray:
    """Evaluate the trig polynomial at arbitrary times, shape (len(t), n)."""
    return basis_matrix(x.layout.n_harmonics, t) @ x.block_matrix()


def analyze(signal: np.ndarray, layout: HarmonicLayout, grid: TimeGrid | None = None) -> CoefficientVector:
    """Project uniform samples onto the first N harmonics.

    Implements the trapezoidal-rule Fourier integrals on the uniform grid:
    the constant block is the sample mean, the sin/cos block for harmonic j
    is sqrt(2) times the mean of signal * sin/cos(2 pi j t_m).  Inverts
    ``synthesize`` exactly when the signal lies in the represented span and
    S >= 2N+2 (strict oversampling, so the Nyquist bin is never split).
    """
    signal = np.asarray(signal, dtype=float)
    if signal.ndim == 1:
        signal = signal[:, None]
    s_count = signal.shape[0]
    if grid is not None and grid.sample_count != s_count:
        raise LayoutError("signal length and grid sample_count disagree")
    if signal.shape[1] != layout.state_dim:
        raise LayoutError(
            f"signal has {signal.shape[1]} components, layout requires {layout.state_dim}"
        )
    if s_count < 2 * layout.n_harmonics + 2:
        raise LayoutError(
            f"{s_count} samples are too few to analyze {layout.n_harmonics} harmonics"
        )
    t = np.arange(s_count) / s_count
    blocks = basis_matrix(layout.n_harmonics, t).T @ signal / s_count
    return CoefficientVector(layout, blocks.ravel())


def derivative_matrix(n_harmonics: int, order: int = 1) -> np.ndarray:
    """Block-level derivative operator D^order of shape (2N+1, 2N+1).

    Acting on block matrices: constant -> 0 and per harmonic j the
    (sin, cos) pair maps to 2 pi j * (-cos, sin); higher orders compose.
    """
    if order < 0:
        raise LayoutError("derivative order must be non-negative")
    size = 2 * n_harmonics + 1
    d = np.zeros((size, size))
    d[0, 0] = 1.0 if order == 0 else 0.0
    for j in range(1, n_harmonics + 1):
        w = (TWO_PI * j) ** order
        # J = [[0, -1], [1, 0]] on (sin, cos); J^order cycles with period 4.
        quarter = order % 4
        if quarter == 0:
            block = np.array([[1.0, 0.0], [0.0, 1.0]])
        elif quarter == 1:
            block = np.array([[0.0, -1.0], [1.0, 0.0]])
        elif quarter == 2:
            block = np.array([[-1.0, 0.0], [0.0, -1.0]])
        else:
            block = np.array([[0.0, 1.0], [-1.0, 0.0]])
        rows = slice(2 * j - 1, 2 * j + 1)
        d[rows, rows] = w * block
    return d


def differentiate(x: CoefficientVector, order: int = 1) -> CoefficientVector:
    """Exact time derivative of given order in coefficient space."""
    blocks = derivative_matrix(x.layout.n_harmonics, order) @ x.block_matrix()
    return CoefficientVector(x.layout, blocks.ravel())


def resize(x: CoefficientVector, new_n_harmonics: int) -> CoefficientVector:
    """Zero-pad to more harmonics or truncate to fewer.

    Truncation is the orthogonal projection onto the smaller span, so the
    norm never increases; padding preserves the signal exactly.
    """
    if new_n_harmonics < 0:
        raise LayoutError("n_harmonics must be non-negative")
    old = x.block_matrix()
    new_layout = HarmonicLayout(new_n_harmonics, x.layout.state_dim)
    blocks = np.zeros((new_layout.n_blocks, new_layout.state_dim))
    keep = min(old.shape[0], blocks.shape[0])
    blocks[:keep] = old[:keep]
    return CoefficientVector(new_layout, blocks.ravel())


def grid_l2_norm(signal: np.ndarray) -> float:
    """Discrete L2 norm over one period: sqrt(mean of squared samples)."""
    signal = np.asarray(signal, dtype=float)
    return float(np.sqrt(np.sum(signal * signal) / signal.shape[0]))


def coefficients_to_amplitudes(x: CoefficientVector) -> np.ndarray:
    """Convert to conventional amplitudes: f = a_0 + sum a_j cos + b_j sin.

    Returns a (2N+1, n) matrix in the same block order but with the
    sqrt(2) factor folded in (a_j = sqrt(2) x_cos, b_j = sqrt(2) x_sin).
    """
    blocks = x.block_matrix().copy()
    blocks[1:] *= SQRT2
    return blocks


def amplitudes_to_coefficients(blocks: np.ndarray) -> CoefficientVector:
    """Inverse of :func:`coefficients_to_amplitudes`."""
    blocks = np.asarray(blocks, dtype=float).copy()
    blocks[1:] /= SQRT2
    return CoefficientVector.from_blocks(blocks)
