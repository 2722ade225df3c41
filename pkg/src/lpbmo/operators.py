"""Band operators Delta_n, the kernels S_n and P_n, and checks on them."""

from dataclasses import dataclass

import numpy as np

from .grid import Grid, SampledFunction, apply_multiplier
from .multipliers import MultiplierFamily


def _check_scale(fam: MultiplierFamily, n: int):
    if n not in fam.scales:
        raise ValueError(f"scale {n} outside family range [{fam.n_min}, {fam.n_max}]")


def band_project(f: SampledFunction, fam: MultiplierFamily, n: int) -> SampledFunction:
    """Delta_n f = inverse transform of psi_n * fhat."""
    _check_scale(fam, n)
    return apply_multiplier(f, fam.grid_multiplier(n, f.grid))


def neighborhood_project(f: SampledFunction, fam: MultiplierFamily, n: int) -> SampledFunction:
    """f * P_n, with P_n = S_{n-1} + S_n + S_{n+1}."""
    return apply_multiplier(f, fam.neighborhood_multiplier(n, f.grid))


@dataclass(frozen=True, eq=False)
class BandDecomposition:
    source: SampledFunction
    family: MultiplierFamily
    bands: dict
    mean: complex

    def reconstruct(self) -> SampledFunction:
        total = np.full(self.source.grid.shape, self.mean, dtype=complex)
        for band in self.bands.values():
            total = total + band.values
        return SampledFunction(self.source.grid, total)

    def band_array(self) -> np.ndarray:
        """Bands stacked along a leading axis, in scale order."""
        return np.stack([self.bands[n].values for n in sorted(self.bands)])


def decompose(f: SampledFunction, fam: MultiplierFamily) -> BandDecomposition:
    fhat = np.fft.fftn(f.values)
    bands = {n: SampledFunction(f.grid, np.fft.ifftn(fhat * fam.grid_multiplier(n, f.grid)))
             for n in fam.scales}
    return BandDecomposition(source=f, family=fam, bands=bands, mean=complex(fhat.flat[0] / f.grid.size))


def reconstruction_residual(f: SampledFunction, fam: MultiplierFamily) -> float:
    """||sum_n Delta_n f + mean(f) - f||_inf / ||f||_inf (absolute when f = 0)."""
    err = np.abs(decompose(f, fam).reconstruct().values - f.values).max()
    scale = f.sup_norm()
    return float(err / scale) if scale > 0 else float(err)


@dataclass(frozen=True, eq=False)
class Kernel:
    n: int
    kind: str  # "S" or "P"
    samples: SampledFunction


def kernel(fam: MultiplierFamily, n: int, grid: Grid, clamped: bool = True) -> Kernel:
    """S_n sampled on the torus: S_n(x_j) = sum_k psi_n(k) exp(2 pi i k.x_j).

    ``clamped=False`` uses the family member psi_n itself rather than the
    truncated-family multiplier; the two differ only at the extreme scales.
    """
    _check_scale(fam, n)
    if clamped:
        mult = fam.grid_multiplier(n, grid)
    else:
        mult = fam.radial(n, grid.frequency_magnitude)
    return Kernel(n=n, kind="S", samples=SampledFunction(grid, np.fft.ifftn(mult) * grid.size))


def neighborhood_kernel(fam: MultiplierFamily, n: int, grid: Grid) -> Kernel:
    mult = fam.neighborhood_multiplier(n, grid)
    return Kernel(n=n, kind="P", samples=SampledFunction(grid, np.fft.ifftn(mult) * grid.size))


def circular_convolve(f: SampledFunction, k: Kernel) -> SampledFunction:
    """(f * K)(x) = N^-d sum_y f(y) K(x - y), via the FFT."""
    grid = f.grid
    out = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(k.samples.values)) / grid.size
    return SampledFunction(grid, out)


@dataclass
class KernelDecay:
    n: int
    c_peak: float
    c_tail: float
    c_l1: float
    tail_points: int
    split_bound: float


def check_kernel_decay(fam: MultiplierFamily, n: int, grid: Grid, clamped: bool = False) -> KernelDecay:
    """Scale-normalized peak, tail and L^1 constants of S_n.

    c_peak = max|S_n| / 2^(nd)
    c_tail = max over 2^(2-n) <= |x| <= 1/4 of |S_n(x)| |x|^(d+1) 2^n  (0 if no such sample)
    c_l1   = N^-d sum |S_n|

    ``split_bound`` re-adds c_l1 from the peak bound inside radius 2^(2-n), the
    tail bound on the tail window, and the largest sample beyond radius 1/4; it is
    an upper bound for c_l1 by construction.
    """
    d = grid.d
    S = np.abs(kernel(fam, n, grid, clamped=clamped).samples.values)
    dist = grid.torus_distance
    c_peak = float(S.max() / 2.0 ** (n * d))
    window = (dist >= 2.0 ** (2 - n)) & (dist <= 0.25)
    tail_points = int(window.sum())
    c_tail = float((S[window] * dist[window] ** (d + 1)).max() * 2.0**n) if tail_points else 0.0
    c_l1 = float(S.sum() / grid.size)

    peak_part = c_peak * 2.0 ** (n * d) * np.count_nonzero(dist < 2.0 ** (2 - n)) / grid.size
    tail_part = c_tail * 2.0**-n * np.sum(dist[window] ** -(d + 1.0)) / grid.size
    far = (dist > 0.25) & ~window & ~(dist < 2.0 ** (2 - n))
    far_part = (S[far].max() if far.any() else 0.0) * np.count_nonzero(far) / grid.size
    return KernelDecay(n=n, c_peak=c_peak, c_tail=c_tail, c_l1=c_l1, tail_points=tail_points,
                       split_bound=float(peak_part + tail_part + far_part))


def inner_product(f: SampledFunction, g: SampledFunction) -> complex:
    """Discrete L^2 inner product N^-d sum f conj(g)."""
    return complex(np.vdot(g.values, f.values) / f.grid.size)


def l2_norm(f: SampledFunction) -> float:
    return float(np.sqrt(np.mean(np.abs(f.values) ** 2)))


@dataclass
class Orthogonality:
    n1: int
    n2: int
    inner: float
    normalized: float
    passed: bool


def check_band_orthogonality(f: SampledFunction, fam: MultiplierFamily, n1: int, n2: int,
                             tol: float = 1e-10) -> Orthogonality:
    if abs(n1 - n2) < 2:
        raise ValueError("orthogonality only holds for |n1 - n2| >= 2")
    b1 = band_project(f, fam, n1)
    b2 = band_project(f, fam, n2)
    ip = abs(inner_product(b1, b2))
    scale = l2_norm(b1) * l2_norm(b2)
    normalized = ip / scale if scale > 0 else 0.0
    return Orthogonality(n1=n1, n2=n2, inner=ip, normalized=normalized,
                         passed=bool(ip <= tol * scale))
