"""Discrete periodic grids on the unit torus and the Fourier transform pair.

Conventions: samples at x_j = j / N per axis, integer frequencies k in cycles
per unit length, and

    fhat(k) = N^-d sum_j f(x_j) exp(-2 pi i k.x_j),
    f(x_j)  = sum_k fhat(k) exp(+2 pi i k.x_j),

so fhat(0) is the mean of f. Coefficient arrays are stored in numpy's FFT
ordering (index i on an axis holds frequency ``fftfreq(N, 1/N)[i]``).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    d: int
    m: int

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError(f"dimension must be in 1..3, got {self.d}")
        if not 4 <= self.m <= 12:
            raise ValueError(f"resolution exponent must be in 4..12, got {self.m}")

    @property
    def N(self) -> int:
        return 1 << self.m

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(np.int64)

    @cached_property
    def frequency_vectors(self) -> np.ndarray:
        """Integer frequency vectors, shape ``shape + (d,)``, in FFT order."""
        axes = np.meshgrid(*([self.axis_frequencies] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    @cached_property
    def frequency_magnitude(self) -> np.ndarray:
        """Euclidean norm |k| of each grid frequency."""
        mag = np.sqrt(np.sum(self.frequency_vectors.astype(float) ** 2, axis=-1))
        mag.setflags(write=False)
        return mag

    @cached_property
    def points(self) -> np.ndarray:
        """Sample coordinates, shape ``shape + (d,)``."""
        x = np.arange(self.N) / self.N
        return np.stack(np.meshgrid(*([x] * self.d), indexing="ij"), axis=-1)

    @cached_property
    def torus_distance(self) -> np.ndarray:
        """Distance from each sample point to the origin on the torus."""
        j = np.arange(self.N)
        dist = np.minimum(j, self.N - j) / self.N
        axes = np.meshgrid(*([dist] * self.d), indexing="ij")
        return np.sqrt(sum(a**2 for a in axes))

    def index_of_frequency(self, k) -> tuple:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if k.shape != (self.d,):
            raise ValueError(f"frequency must have {self.d} components")
        if np.any(k < -self.N // 2) or np.any(k >= self.N // 2):
            raise ValueError(f"frequency {tuple(k)} not on the grid")
        return tuple(int(v) % self.N for v in k)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {vals.size}")
        object.__setattr__(self, "values", _frozen(vals.reshape(self.grid.shape)))

    def mean(self) -> complex:
        return complex(self.values.mean())

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            return SampledFunction(self.grid, self.values + other.values)
        return SampledFunction(self.grid, self.values + other)

    def __mul__(self, scalar):
        return SampledFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1) * other


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} coefficients, got {c.size}")
        object.__setattr__(self, "coefficients", _frozen(c.reshape(self.grid.shape)))

    def coefficient(self, k) -> complex:
        return complex(self.coefficients[self.grid.index_of_frequency(k)])


def sample(grid: Grid, fn) -> SampledFunction:
    """Sample ``fn(x)`` where x has shape ``grid.shape + (d,)``."""
    return SampledFunction(grid, fn(grid.points))


def forward_transform(f: SampledFunction) -> SpectralFunction:
    return SpectralFunction(f.grid, np.fft.fftn(f.values) / f.grid.size)


def inverse_transform(F: SpectralFunction) -> SampledFunction:
    return SampledFunction(F.grid, np.fft.ifftn(F.coefficients) * F.grid.size)


def apply_multiplier(f: SampledFunction, multiplier: np.ndarray) -> SampledFunction:
    """inverse_transform(multiplier * forward_transform(f)) without the wrapper objects."""
    return SampledFunction(f.grid, np.fft.ifftn(np.fft.fftn(f.values) * multiplier))
