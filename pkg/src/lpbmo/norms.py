"""Cube-supremum norms on the torus: BMO, the Littlewood-Paley norm ||f||_D and
the Triebel-Lizorkin norm ||f||_phi, plus shell and cube averages of f * P_n.

The supremum over all cubes is approximated by dyadic cubes of side 2^-s,
s = 0..m, optionally together with the dyadic lattice shifted by half a side.
Integrals are midpoint sums over the samples a cube contains.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from .grid import Grid, SampledFunction
from .multipliers import MultiplierFamily
from .operators import BandDecomposition, decompose, neighborhood_project

ARGMAX_RTOL = 1e-12


@dataclass(frozen=True, order=True)
class Cube:
    s: int
    index: tuple
    shifted: bool = False

    @property
    def side(self) -> float:
        return 2.0**-self.s

    @property
    def anchor(self) -> tuple:
        """Physical lower corner on the torus."""
        off = self.side / 2 if self.shifted else 0.0
        return tuple(i * self.side + off for i in self.index)

    def samples_per_side(self, grid: Grid) -> int:
        if self.s > grid.m:
            raise ValueError(f"cube of side 2^-{self.s} holds no sample at m={grid.m}")
        return grid.N >> self.s

    def start(self, grid: Grid) -> tuple:
        """First sample index per axis (samples j with anchor <= j/N < anchor + side)."""
        L = self.samples_per_side(grid)
        off = (L + 1) // 2 if self.shifted else 0
        return tuple((i * L + off) % grid.N for i in self.index)

    def sample_count(self, grid: Grid) -> int:
        return self.samples_per_side(grid) ** grid.d

    def axis_indices(self, grid: Grid) -> list:
        L = self.samples_per_side(grid)
        return [(a + np.arange(L)) % grid.N for a in self.start(grid)]

    def indices(self, grid: Grid):
        return np.ix_(*self.axis_indices(grid))

    def dilate_axis_indices(self, grid: Grid, k: int) -> list:
        """Sample indices of kQ (same centre, k times the side) per axis."""
        L = self.samples_per_side(grid)
        out = []
        for a in self.start(grid):
            c2 = 2 * a + L
            lo = (c2 - k * L + 1) // 2
            out.append((lo + np.arange(k * L)) % grid.N)
        return out


class CubeList(tuple):
    """A tuple of cubes that remembers how to gather per-cube values from block tables."""

    @cached_property
    def groups(self) -> list:
        by_key = {}
        for pos, q in enumerate(self):
            by_key.setdefault((q.s, q.shifted), []).append(pos)
        out = []
        for key, positions in by_key.items():
            idx = np.array([self[p].index for p in positions], dtype=np.int64)
            out.append((key, np.array(positions), tuple(idx.T)))
        return out


def as_cube_list(cubes) -> CubeList:
    return cubes if isinstance(cubes, CubeList) else CubeList(cubes)


def enumerate_cubes(grid: Grid, shifted: bool = False, s_max: int | None = None) -> CubeList:
    """Dyadic cubes with s in [0, m] (and half-shifted ones for s >= 1), ordered by s then anchor."""
    s_max = grid.m if s_max is None else s_max
    cubes = []
    for s in range(s_max + 1):
        per_scale = [Cube(s, idx) for idx in itertools.product(range(1 << s), repeat=grid.d)]
        if shifted and s >= 1:
            per_scale += [Cube(s, idx, True) for idx in itertools.product(range(1 << s), repeat=grid.d)]
        cubes.extend(sorted(per_scale, key=lambda q: q.anchor))
    return CubeList(cubes)


def _blocks(values: np.ndarray, grid: Grid, s: int, shifted: bool) -> np.ndarray:
    """View ``values`` as (2^s, L, 2^s, L, ...) after aligning the (shifted) lattice to 0."""
    L = grid.N >> s
    if shifted:
        values = np.roll(values, -((L + 1) // 2), axis=tuple(range(grid.d)))
    shape = []
    for _ in range(grid.d):
        shape += [1 << s, L]
    return values.reshape(shape)


def _inner_axes(d: int) -> tuple:
    return tuple(range(1, 2 * d, 2))


def block_means(values: np.ndarray, grid: Grid, s: int, shifted: bool = False) -> np.ndarray:
    """Mean of ``values`` over every cube of side 2^-s, indexed by lattice position."""
    return _blocks(values, grid, s, shifted).mean(axis=_inner_axes(grid.d))


def block_oscillation(values: np.ndarray, grid: Grid, s: int, shifted: bool = False) -> np.ndarray:
    """Mean of |f - f_Q|^2 over every cube of side 2^-s."""
    b = _blocks(values, grid, s, shifted)
    axes = _inner_axes(grid.d)
    dev = b - b.mean(axis=axes, keepdims=True)
    return (dev.real**2 + dev.imag**2).mean(axis=axes)


@dataclass
class NormResult:
    value: float
    argmax: Cube
    table: dict | None = None


def _gather(cubes: CubeList, table_for) -> np.ndarray:
    out = np.empty(len(cubes))
    for key, positions, index in cubes.groups:
        out[positions] = table_for(*key)[index]
    return out


def _result(cubes: CubeList, contrib: np.ndarray, keep_table: bool) -> NormResult:
    if len(cubes) == 0:
        raise ValueError("no cubes to take the supremum over")
    best = float(contrib.max())
    first = int(np.argmax(contrib >= best - ARGMAX_RTOL * abs(best)))
    table = dict(zip(cubes, contrib.tolist())) if keep_table else None
    return NormResult(value=best, argmax=cubes[first], table=table)


def cube_mean(f: SampledFunction, Q: Cube) -> complex:
    return complex(f.values[Q.indices(f.grid)].mean())


def bmo_norm(f: SampledFunction, cubes, keep_table: bool = False) -> NormResult:
    """sup_Q (mean over Q of |f - f_Q|^2)^(1/2)."""
    cubes = as_cube_list(cubes)
    tables = {}

    def table_for(s, shifted):
        if (s, shifted) not in tables:
            tables[s, shifted] = np.sqrt(block_oscillation(f.values, f.grid, s, shifted))
        return tables[s, shifted]

    return _result(cubes, _gather(cubes, table_for), keep_table)


def _band_power_sup(decomp: BandDecomposition, p: float, cubes: CubeList, offset: int,
                    keep_table: bool) -> NormResult:
    grid = decomp.source.grid
    scales = sorted(decomp.bands)
    if p == 2:
        powers = [np.abs(decomp.bands[n].values) ** 2 for n in scales]
    else:
        powers = [np.abs(decomp.bands[n].values) ** p for n in scales]
    # suffix[i] = sum of powers for scales[i:]
    suffix = [None] * (len(scales) + 1)
    suffix[-1] = np.zeros(grid.shape)
    for i in range(len(scales) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + powers[i]
    tables = {}

    def table_for(s, shifted):
        if (s, shifted) not in tables:
            # scales finer than the cube: 2^-n <= l(Q) shifted by ``offset``, i.e. n >= s + offset
            first = next((i for i, n in enumerate(scales) if n >= s + offset), len(scales))
            tables[s, shifted] = block_means(suffix[first], grid, s, shifted) ** (1.0 / p)
        return tables[s, shifted]

    return _result(cubes, _gather(cubes, table_for), keep_table)


def _decomposition(f, fam) -> BandDecomposition:
    if isinstance(f, BandDecomposition):
        if f.family != fam:
            raise ValueError("decomposition was built with a different family")
        return f
    return decompose(f, fam)


def d_norm(f, fam: MultiplierFamily, cubes, offset: int = 0, keep_table: bool = False) -> NormResult:
    """||f||_D = sup_Q (mean over Q of sum_{n >= s(Q)} |Delta_n f|^2)^(1/2).

    ``f`` may be a SampledFunction or a BandDecomposition built with ``fam``.
    """
    return _band_power_sup(_decomposition(f, fam), 2, as_cube_list(cubes), offset, keep_table)


def tl_norm(f, fam: MultiplierFamily, p: float, cubes, offset: int = 0,
            keep_table: bool = False) -> NormResult:
    """||f||_phi = sup_Q (mean over Q of sum_{n >= s(Q)} |Delta_n f|^p)^(1/p)."""
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p}")
    return _band_power_sup(_decomposition(f, fam), p, as_cube_list(cubes), offset, keep_table)


# -- shell and cube averages-----------------------------------------------------------------

@dataclass
class AverageRatio:
    ratio: float
    numerator: float
    denominator: float
    degenerate: bool


def _ratio(num: float, den: float) -> AverageRatio:
    if den == 0.0:
        # constants and other band-free inputs: every bound is 0 <= C * 0
        return AverageRatio(ratio=0.0, numerator=num, denominator=den, degenerate=True)
    return AverageRatio(ratio=num / den, numerator=num, denominator=den, degenerate=False)


def shell_mask(grid: Grid, Q: Cube, ring: int) -> np.ndarray:
    """Boolean mask of Omega = (ring+1)Q minus ring*Q."""
    if ring < 2:
        raise ValueError("shell index must be at least 2")
    if (ring + 1) * Q.samples_per_side(grid) > grid.N:
        raise ValueError(f"({ring + 1})Q wraps onto itself on the torus")
    outer = np.zeros(grid.shape, dtype=bool)
    inner = np.zeros(grid.shape, dtype=bool)
    outer[np.ix_(*Q.dilate_axis_indices(grid, ring + 1))] = True
    inner[np.ix_(*Q.dilate_axis_indices(grid, ring))] = True
    return outer & ~inner


def shell_average_check(f: SampledFunction, fam: MultiplierFamily, Q: Cube, n: int, ring: int,
                        p: float = 2.0, norm: float | None = None, cubes=None) -> AverageRatio:
    """(mean over the shell of |f * P_n|) / ||f||_psi."""
    mask = shell_mask(f.grid, Q, ring)
    g = np.abs(neighborhood_project(f, fam, n).values)
    if norm is None:
        cubes = enumerate_cubes(f.grid, shifted=True) if cubes is None else cubes
        norm = tl_norm(f, fam, p, cubes).value
    return _ratio(float(g[mask].mean()), norm)


def cube_average_check(f: SampledFunction, fam: MultiplierFamily, sigma: Cube, n: int,
                       norm: float | None = None, cubes=None) -> AverageRatio:
    """(RMS of f * P_n over sigma) / ||f||_D, for cubes of side at least 2^-(n-1)."""
    if sigma.s > n - 1:
        raise ValueError(f"cube side 2^-{sigma.s} is below 2^-(n-1) for n={n}")
    g = neighborhood_project(f, fam, n).values[sigma.indices(f.grid)]
    if norm is None:
        cubes = enumerate_cubes(f.grid, shifted=True) if cubes is None else cubes
        norm = d_norm(f, fam, cubes).value
    return _ratio(float(np.sqrt(np.mean(np.abs(g) ** 2))), norm)


# -- vectorized average scans-----------------------------------------------------------

def _tiled_prefix(values: np.ndarray) -> np.ndarray:
    """Summed-area table of ``values`` tiled twice along every axis, zero-padded in front."""
    d = values.ndim
    t = np.tile(values, (2,) * d)
    for ax in range(d):
        t = np.cumsum(t, axis=ax)
    return np.pad(t, [(1, 0)] * d)


def _box_sums(sat: np.ndarray, lows: list, length: int) -> np.ndarray:
    """Sums over boxes [lo, lo + length) per axis; ``lows`` holds one index vector per axis."""
    d = len(lows)
    total = 0.0
    for corner in itertools.product((0, 1), repeat=d):
        idx = []
        for ax, c in enumerate(corner):
            v = lows[ax] + (length if c else 0)
            shape = [1] * d
            shape[ax] = -1
            idx.append(v.reshape(shape))
        sign = (-1) ** (d - sum(corner))
        total = total + sign * sat[tuple(idx)]
    return total


def _dilated_lows(grid: Grid, s: int, shifted: bool, k: int) -> np.ndarray:
    L = grid.N >> s
    off = (L + 1) // 2 if shifted else 0
    a = np.arange(1 << s) * L + off
    return ((2 * a + L - k * L + 1) // 2) % grid.N


def shell_average_scan(f: SampledFunction, fam: MultiplierFamily, norm: float, shifted: bool = True,
                max_ring: int | None = None) -> dict:
    """Largest shell ratio over all dyadic Q, scales n and admissible rings, with its location."""
    grid = f.grid
    best = {"ratio": 0.0, "n": None, "s": None, "ring": None, "count": 0}
    if norm == 0.0:
        best["degenerate"] = True
        return best
    for n in fam.scales:
        g = np.abs(neighborhood_project(f, fam, n).values)
        sat = _tiled_prefix(g)
        for s in range(2, grid.m + 1):
            L = grid.N >> s
            top = (1 << s) - 1
            if max_ring is not None:
                top = min(top, max_ring)
            for sh in ((False, True) if shifted else (False,)):
                for ring in range(2, top + 1):
                    outer = _box_sums(sat, [_dilated_lows(grid, s, sh, ring + 1)] * grid.d, (ring + 1) * L)
                    inner = _box_sums(sat, [_dilated_lows(grid, s, sh, ring)] * grid.d, ring * L)
                    vol = ((ring + 1) ** grid.d - ring**grid.d) * L**grid.d
                    ratios = (outer - inner) / vol / norm
                    best["count"] += ratios.size
                    mx = float(ratios.max())
                    if mx > best["ratio"]:
                        best.update(ratio=mx, n=n, s=s, ring=ring, shifted=sh)
    best["degenerate"] = False
    return best


def cube_average_scan(f: SampledFunction, fam: MultiplierFamily, norm: float, shifted: bool = True) -> dict:
    """Largest RMS(f * P_n over sigma) / ||f||_D over dyadic sigma with side >= 2^-(n-1)."""
    grid = f.grid
    best = {"ratio": 0.0, "n": None, "s": None, "count": 0}
    if norm == 0.0:
        best["degenerate"] = True
        return best
    for n in fam.scales:
        if n < 1:
            continue
        g2 = np.abs(neighborhood_project(f, fam, n).values) ** 2
        for s in range(0, min(n - 1, grid.m) + 1):
            for sh in ((False, True) if shifted and s >= 1 else (False,)):
                ratios = np.sqrt(block_means(g2, grid, s, sh)) / norm
                best["count"] += ratios.size
                mx = float(ratios.max())
                if mx > best["ratio"]:
                    best.update(ratio=mx, n=n, s=s, shifted=sh)
    best["degenerate"] = False
    return best
