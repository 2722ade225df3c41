"""Seeded test-function ensembles.

Each member i of an ensemble draws from its own LCG substream keyed by
(seed, i), and every random choice is made in a resolution-independent
order, so one EnsembleSpec describes the same continuous functions on grids
of different m.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

from .grid import Grid, SampledFunction
from .rng import substream

ENSEMBLE_KINDS = ("constant", "harmonic", "lacunary", "log-singular", "smooth-bump",
                  "dyadic-blocks", "indicator-smoothed")

# coarse dyadic lattice for random centres, so they sit on every grid with N >= 64
_CENTER_LATTICE = 64


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    count: int = 1
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {ENSEMBLE_KINDS}")
        if self.count < 1:
            raise ValueError("ensemble count must be positive")

    def label(self, i: int) -> str:
        return f"{self.kind}[{self.seed}:{i}]"


def _torus_offset(x: np.ndarray, c: float) -> np.ndarray:
    """Signed distance x - c wrapped into [-1/2, 1/2)."""
    return (x - c + 0.5) % 1.0 - 0.5


def _random_center(gen, d: int) -> list:
    return [gen.integer(0, _CENTER_LATTICE) / _CENTER_LATTICE for _ in range(d)]


def _synthesize(grid: Grid, coeffs: dict) -> SampledFunction:
    """Real part of sum_k c_k exp(2 pi i k.x) for integer vectors k on the grid."""
    spec = np.zeros(grid.shape, dtype=complex)
    for k, c in coeffs.items():
        spec[grid.index_of_frequency(k)] += c
    values = np.fft.ifftn(spec) * grid.size
    return SampledFunction(grid, values.real)


def constant(grid: Grid, value: complex = 1.0) -> SampledFunction:
    return SampledFunction(grid, np.full(grid.shape, value, dtype=complex))


def harmonic(grid: Grid, k0) -> SampledFunction:
    k0 = np.atleast_1d(np.asarray(k0, dtype=np.int64))
    if k0.size == 1 and grid.d > 1:
        k0 = np.concatenate([k0, np.zeros(grid.d - 1, dtype=np.int64)])
    grid.index_of_frequency(k0)  # validates k0 is on the grid
    phase = grid.points @ k0.astype(float)
    return SampledFunction(grid, np.exp(2j * np.pi * phase))


def lacunary(grid: Grid, signs) -> SampledFunction:
    """sum_{j=0}^{J} eps_j cos(2 pi 2^j x_1), J = len(signs) - 1."""
    J = len(signs) - 1
    if J > grid.m - 2:
        raise ValueError(f"lacunary top scale {J} exceeds n_max = {grid.m - 2}")
    x1 = grid.points[..., 0]
    vals = sum(e * np.cos(2 * np.pi * 2**j * x1) for j, e in enumerate(signs))
    return SampledFunction(grid, vals)


def log_singular(grid: Grid, center: float = 0.0) -> SampledFunction:
    """log|2 sin(pi (x_1 - c))|, the sample at the singularity clamped to the half-sample value."""
    if round(center * grid.N) != center * grid.N:
        raise ValueError("singularity must sit on a grid point")
    t = _torus_offset(grid.points[..., 0], center)
    with np.errstate(divide="ignore"):
        vals = np.log(np.abs(2 * np.sin(np.pi * t)))
    clamp = np.log(2 * np.sin(np.pi / (2 * grid.N)))
    return SampledFunction(grid, np.where(np.abs(t) < 0.5 / grid.N, clamp, vals))


def smooth_bump(grid: Grid, center, width: float) -> SampledFunction:
    """exp(1 - 1/(1 - r^2)) for r = |x - c|_torus / width < 1, else 0."""
    if not 0 < width <= 0.5:
        raise ValueError("bump width must lie in (0, 1/2]")
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    r2 = sum(_torus_offset(grid.points[..., a], center[a]) ** 2 for a in range(grid.d)) / width**2
    with np.errstate(divide="ignore", over="ignore"):
        vals = np.where(r2 < 1, np.exp(1 - 1 / np.where(r2 < 1, 1 - r2, 1.0)), 0.0)
    return SampledFunction(grid, vals)


def _annulus_vectors(d: int, j: int) -> list:
    """Integer vectors with 2^j <= |k| < 2^(j+1), lexicographic order."""
    lo, hi = 2**j, 2 ** (j + 1)
    out = []
    for k in itertools.product(range(-hi + 1, hi), repeat=d):
        r2 = sum(v * v for v in k)
        if lo * lo <= r2 < hi * hi:
            out.append(k)
    return out


def dyadic_blocks(grid: Grid, gen, scales) -> SampledFunction:
    """Random complex coefficients on the annuli 2^j <= |k| < 2^(j+1), j in ``scales``, real part taken."""
    if max(scales) > grid.m - 2:
        raise ValueError(f"dyadic block {max(scales)} exceeds n_max = {grid.m - 2}")
    coeffs = {}
    for j in sorted(scales):
        magnitude = gen.random()
        for k in _annulus_vectors(grid.d, j):
            coeffs[k] = magnitude * complex(gen.uniform(-1, 1), gen.uniform(-1, 1))
    return _synthesize(grid, coeffs)


def indicator_smoothed(grid: Grid, center, side: float, eps: float) -> SampledFunction:
    """Indicator of the cube (centre, side) convolved with a Gaussian of width eps, built spectrally."""
    if not 0 < side < 1:
        raise ValueError("cube side must lie in (0, 1)")
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    k = grid.frequency_vectors.astype(float)
    spec = np.ones(grid.shape, dtype=complex)
    for a in range(grid.d):
        spec = spec * side * np.sinc(k[..., a] * side) * np.exp(-2j * np.pi * k[..., a] * center[a])
    spec = spec * np.exp(-2 * np.pi**2 * eps**2 * grid.frequency_magnitude**2)
    return SampledFunction(grid, (np.fft.ifftn(spec) * grid.size).real)


def _member(spec: EnsembleSpec, i: int, grid: Grid) -> SampledFunction:
    p = spec.params
    gen = substream(spec.seed, i)
    kind = spec.kind
    if kind == "constant":
        return constant(grid, p.get("value", 1.0))
    if kind == "harmonic":
        return harmonic(grid, p["k0"])
    if kind == "lacunary":
        J = p.get("J", grid.m - 2)
        if p.get("signs", "random") == "plus":
            signs = [1] * (J + 1)
        else:
            signs = [gen.sign() for _ in range(J + 1)]
        return lacunary(grid, signs)
    if kind == "log-singular":
        center = p["center"] if "center" in p else (0.0 if spec.count == 1 else _random_center(gen, 1)[0])
        return log_singular(grid, center)
    if kind == "smooth-bump":
        center = p.get("center") or _random_center(gen, grid.d)
        width = p.get("width") or gen.uniform(0.05, 0.4)
        return smooth_bump(grid, center, width)
    if kind == "dyadic-blocks":
        scales = p.get("scales") or list(range(p.get("J", min(5, grid.m - 2)) + 1))
        return dyadic_blocks(grid, gen, scales)
    # indicator-smoothed
    center = p.get("center") or _random_center(gen, grid.d)
    side = p.get("side") or 2.0 ** -gen.integer(1, 5)
    eps = p.get("eps", 1.0 / 128)
    return indicator_smoothed(grid, center, side, eps)


def generate(spec: EnsembleSpec, grid: Grid) -> list:
    return [_member(spec, i, grid) for i in range(spec.count)]
