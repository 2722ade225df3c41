"""Radial multiplier families {psi_n} built by telescoping one-octave transitions.

Every family is defined through transitions T_n(u), u = log2|xi|, with
T_n = 0 for u <= n and T_n = 1 for u >= n + width, and

    psi_n(xi) = T_{n-1}(log2|xi|) - T_n(log2|xi|).

With width = 1 this puts psi_n inside the annulus 2^(n-1) <= |xi| < 2^(n+1)
and makes the sum over n telescope to 1 away from the origin.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
import itertools
from math import comb

import numpy as np

from .grid import Grid
from .rng import substream

KINDS = ("smooth-logstep", "vp-trapezoid", "hetero-transition")
VARIANTS = ("L2", "L1")

# relative Richardson error above which a condition-3 estimate is reported as failed
RICHARDSON_FAIL = 0.10


def variant_order(variant: str, d: int) -> int:
    """Highest derivative order required by a condition-3 variant."""
    if variant == "L2":
        return d // 2 + 1
    if variant == "L1":
        return d + 1
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@lru_cache(maxsize=None)
def smoothstep_coefficients(r: int) -> np.ndarray:
    """Power-basis coefficients (ascending) of the C^r smoothstep polynomial.

    S_r(x) = x^(r+1) sum_k C(r+k, k) C(2r+1, r-k) (-x)^k, which has
    S_r(0) = 0, S_r(1) = 1 and vanishing derivatives of orders 1..r at both ends.
    """
    coef = np.zeros(2 * r + 2)
    for k in range(r + 1):
        coef[r + 1 + k] = comb(r + k, k) * comb(2 * r + 1, r - k) * (-1) ** k
    coef.setflags(write=False)
    return coef


def smoothstep(r: int, x):
    x = np.clip(x, 0.0, 1.0)
    return np.polynomial.polynomial.polyval(x, smoothstep_coefficients(r))


@lru_cache(maxsize=None)
def _hetero_shape(seed: int, n: int):
    gen = substream(seed, n)
    warp = gen.uniform(-0.4, 0.4)
    blend = gen.random()
    return warp, blend


@dataclass(frozen=True)
class MultiplierFamily:
    kind: str
    d: int
    n_min: int
    n_max: int
    r: int = 3
    seed: int = 0
    width: float = 1.0
    omitted: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {KINDS}")
        if self.n_min > self.n_max:
            raise ValueError("empty scale range")
        if self.width <= 0:
            raise ValueError("transition width must be positive")

    @property
    def scales(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @property
    def smoothness_order(self) -> int:
        """Maximal weak-derivative order of each psi_n."""
        return 1 if self.kind == "vp-trapezoid" else self.r

    def interior_scales(self) -> range:
        return range(self.n_min + 1, self.n_max)

    def without_scale(self, n: int) -> "MultiplierFamily":
        return replace(self, omitted=self.omitted | {n})

    def shape(self, n: int, x):
        """Transition profile of T_n on x in [0, 1]."""
        if self.kind == "vp-trapezoid":
            return x
        if self.kind == "smooth-logstep":
            return smoothstep(self.r, x)
        warp, blend = _hetero_shape(self.seed, n)
        w = x + warp * x * (1.0 - x)
        return (1.0 - blend) * smoothstep(self.r, w) + blend * smoothstep(self.r + 1, w)

    def transition(self, n: int, u):
        u = np.asarray(u, dtype=float)
        x = (u - n) / self.width
        inner = np.clip(x, 0.0, 1.0)
        # pin the ends exactly so supports are exact and neighbours cancel to 0
        return np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, self.shape(n, inner)))

    def radial(self, n: int, rho):
        """psi_n as a function of |xi| (the unclamped member of the Z-indexed family)."""
        rho = np.asarray(rho, dtype=float)
        if n in self.omitted:
            return np.zeros_like(rho)
        with np.errstate(divide="ignore"):
            u = np.log2(np.where(rho > 0, rho, 1.0))
        val = self.transition(n - 1, u) - self.transition(n, u)
        return np.where(rho > 0, val, 0.0)

    def evaluate(self, n: int, xi):
        """psi_n(xi) for points xi of shape (..., d)."""
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            rho = np.abs(xi)
        else:
            rho = np.sqrt(np.sum(xi**2, axis=-1))
        return self.radial(n, rho)

    def grid_multiplier(self, n: int, grid: Grid) -> np.ndarray:
        """psi_n on the grid frequencies, with the truncated family clamped.

        T_{n_min - 1} is taken as 1 and T_{n_max} as 0, so the finite sum over
        the scale range is exactly 1 at every nonzero grid frequency.
        """
        if n not in self.scales:
            raise ValueError(f"scale {n} outside family range [{self.n_min}, {self.n_max}]")
        return _grid_multiplier(self, grid, n)

    def neighborhood_multiplier(self, n: int, grid: Grid) -> np.ndarray:
        """psi_{n-1} + psi_n + psi_{n+1}, scales outside the range counting as zero."""
        total = np.zeros(grid.shape)
        for j in (n - 1, n, n + 1):
            if j in self.scales:
                total = total + self.grid_multiplier(j, grid)
        return total


@lru_cache(maxsize=256)
def _grid_multiplier(fam: MultiplierFamily, grid: Grid, n: int) -> np.ndarray:
    rho = grid.frequency_magnitude
    if n in fam.omitted:
        out = np.zeros(grid.shape)
    else:
        with np.errstate(divide="ignore"):
            u = np.log2(np.where(rho > 0, rho, 1.0))
        lower = np.ones_like(u) if n == fam.n_min else fam.transition(n - 1, u)
        upper = np.zeros_like(u) if n == fam.n_max else fam.transition(n, u)
        out = np.where(rho > 0, lower - upper, 0.0)
    out.setflags(write=False)
    return out


def make_family(kind: str, grid: Grid, r: int = 3, seed: int = 0, order: int | None = None,
                n_min: int | None = None, n_max: int | None = None,
                width: float = 1.0) -> MultiplierFamily:
    """Build a family whose scale range fits ``grid``.

    ``order`` is the derivative order the caller intends to validate; families
    that cannot supply it are rejected.
    """
    if grid.m < 4:
        raise ValueError("grid too coarse: m must be at least 4")
    n_min = 0 if n_min is None else n_min
    n_max = grid.m - 2 if n_max is None else n_max
    if n_min < 0 or n_max > grid.m - 2:
        raise ValueError(f"scale range [{n_min}, {n_max}] does not fit a grid with m={grid.m}")
    if kind != "vp-trapezoid" and r < 1:
        raise ValueError("smoothness r must be at least 1")
    fam = MultiplierFamily(kind=kind, d=grid.d, n_min=n_min, n_max=n_max, r=r,
                           seed=seed, width=width)
    if order is not None and fam.smoothness_order < order:
        raise ValueError(f"{kind} has smoothness {fam.smoothness_order} < requested order {order}")
    return fam


# -- conditions 1 and 2 ----------------------------------------------------------------

@dataclass
class SupportCheck:
    n: int
    passed: bool
    leakage: float
    max_abs: float


def _directions(d: int, count: int = 32) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = np.linspace(0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    # Fibonacci sphere
    i = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * i / count)
    theta = np.pi * (1 + 5**0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=-1)


def validate_support(fam: MultiplierFamily, n: int, radial_points: int = 2048) -> SupportCheck:
    """Sample psi_n on a radial-angular mesh outside 2^(n-1) <= |xi| < 2^(n+1)."""
    if n not in fam.scales:
        raise ValueError(f"scale {n} outside family range")
    lo, hi = 2.0 ** (n - 1), 2.0 ** (n + 1)
    inside = np.geomspace(lo * 2.0**-8, lo, radial_points, endpoint=False)
    outside = np.concatenate([[hi], np.geomspace(hi, hi * 2.0**4, radial_points)[1:]])
    annulus = np.geomspace(lo, hi, radial_points, endpoint=False)
    dirs = _directions(fam.d)

    def values(rho):
        # classify by the rounded norm of each mesh point, not the nominal radius
        xi = rho[:, None, None] * dirs[None, :, :]
        norm = np.sqrt(np.sum(xi**2, axis=-1))
        out = (norm < lo) | (norm >= hi)
        return np.abs(fam.evaluate(n, xi)), out

    leak = abs(float(fam.radial(n, 0.0)))
    max_abs = leak
    for rho in (inside, outside, annulus):
        v, out = values(rho)
        if out.any():
            leak = max(leak, float(v[out].max()))
        max_abs = max(max_abs, float(v.max()))
    return SupportCheck(n=n, passed=bool(leak == 0.0), leakage=float(leak), max_abs=float(max_abs))


def partition_sum(fam: MultiplierFamily, grid: Grid) -> np.ndarray:
    return sum(fam.grid_multiplier(n, grid) for n in fam.scales)


def validate_partition(fam: MultiplierFamily, grid: Grid) -> float:
    """max over nonzero grid frequencies of |sum_n psi_n(k) - 1|."""
    total = partition_sum(fam, grid)
    nonzero = grid.frequency_magnitude > 0
    return float(np.abs(total[nonzero] - 1.0).max())


# -- condition 3 -----------------------------------------------------------------------

@dataclass
class Condition3Estimate:
    n: int
    alpha: tuple
    variant: str
    value: float
    error: float
    passed: bool

    @property
    def order(self) -> int:
        return sum(self.alpha)


def multi_indices(d: int, order: int) -> list:
    """All alpha with |alpha| <= order, sorted by |alpha| then lexicographically descending."""
    out = [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) <= order]
    return sorted(out, key=lambda a: (sum(a), tuple(-v for v in a)))


def _half_width(k: int) -> int:
    return (k + 1) // 2


def _trim(a: np.ndarray, axis: int, lo: int, hi: int) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(lo, a.shape[axis] - hi)
    return a[tuple(idx)]


def _central_difference(a: np.ndarray, k: int, axis: int, h: float) -> np.ndarray:
    """Order-k central difference along ``axis``; the result is shorter by 2*ceil(k/2)."""
    if k % 2:
        a = (_trim(a, axis, 2, 0) - _trim(a, axis, 0, 2)) / (2 * h)
    for _ in range(k // 2):
        a = (_trim(a, axis, 2, 0) - 2 * _trim(a, axis, 1, 1) + _trim(a, axis, 0, 2)) / h**2
    return a


def _derivative_block(psi: np.ndarray, alpha: tuple, h: float, ghost: int) -> np.ndarray:
    """D^alpha psi on a block padded by ``ghost`` nodes per side on every axis, cropped to the core."""
    out = psi
    for axis, k in enumerate(alpha):
        out = _central_difference(out, k, axis, h)
        extra = ghost - _half_width(k)
        if extra:
            idx = [slice(None)] * out.ndim
            idx[axis] = slice(extra, out.shape[axis] - extra)
            out = out[tuple(idx)]
    return out


def _fold_weights(count: int) -> np.ndarray:
    w = np.full(count, 2.0)
    w[0] = 1.0
    return w


def _mesh_block(fam, n, h, rows, cols, ghost):
    """psi_n at nodes (i*h, j*h, ...) for i in rows (axis 0) and j in cols (other axes), ghost-padded."""
    r = np.arange(rows[0] - ghost, rows[1] + ghost) * h
    c = np.arange(-ghost, cols + ghost) * h
    axes = np.meshgrid(r, *([c] * (fam.d - 1)), indexing="ij", sparse=True)
    rho = np.sqrt(sum(a**2 for a in axes))
    return fam.radial(n, rho)


def _condition3_scale(fam: MultiplierFamily, n: int, alphas: list, variant: str,
                      h_exponent: int = 10, chunk_nodes: int = 1 << 21) -> list:
    """Condition-3 ratios for every alpha at one scale, with one Richardson halving.

    Derivatives are central differences on a vertex-centred Cartesian mesh of
    step h = 2^(n - h_exponent) (and h/2), restricted by symmetry to the
    nonnegative orthant; the mesh step doubles as the midpoint-rule cell.
    The error estimate is the larger of the change in the ratio and the
    distance between the two derivative fields on the shared nodes, both in
    the variant's norm.
    """
    d = fam.d
    ghost = max(_half_width(k) for a in alphas for k in a) if alphas else 0
    ghost = max(ghost, 1)
    h_c = 2.0 ** (n - h_exponent)
    h_f = h_c / 2
    m_c = (1 << (h_exponent + 1)) + ghost + 1  # coarse nodes per axis, covering |xi| <= 2^(n+1)
    m_f = 2 * m_c
    p = 2 if variant == "L2" else 1

    acc = {a: [0.0, 0.0, 0.0] for a in alphas}  # coarse integral, fine integral, diff integral
    w_c_cols = _fold_weights(m_c)
    w_f_cols = _fold_weights(m_f)
    rows_per_chunk = max(1, chunk_nodes // (m_f ** (d - 1)) // 2)

    for a0 in range(0, m_c, rows_per_chunk):
        a1 = min(m_c, a0 + rows_per_chunk)
        psi_c = _mesh_block(fam, n, h_c, (a0, a1), m_c, ghost)
        psi_f = _mesh_block(fam, n, h_f, (2 * a0, 2 * a1), m_f, ghost)
        wr_c = _fold_weights(m_c)[a0:a1]
        wr_f = _fold_weights(m_f)[2 * a0:2 * a1]
        w_c = wr_c.reshape((-1,) + (1,) * (d - 1))
        w_f = wr_f.reshape((-1,) + (1,) * (d - 1))
        for k in range(1, d):
            shp = [1] * d
            shp[k] = -1
            w_c = w_c * w_c_cols.reshape(shp)
            w_f = w_f * w_f_cols.reshape(shp)
        for a in alphas:
            dc = _derivative_block(psi_c, a, h_c, ghost)
            df = _derivative_block(psi_f, a, h_f, ghost)
            shared = df[(slice(None, None, 2),) * d]
            acc[a][0] += float(np.sum(w_c * np.abs(dc) ** p)) * h_c**d
            acc[a][1] += float(np.sum(w_f * np.abs(df) ** p)) * h_f**d
            acc[a][2] += float(np.sum(w_c * np.abs(dc - shared) ** p)) * h_c**d

    results = []
    for a in alphas:
        scale = 2.0 ** (n * sum(a))

        def normalize(integral):
            v = 2.0 ** (-n * d) * integral
            return (np.sqrt(v) if p == 2 else v) * scale

        coarse, fine, diff = (normalize(v) for v in acc[a])
        error = max(abs(fine - coarse), diff)
        if not np.isfinite(fine) or not np.isfinite(error):
            passed = False
        elif fine == 0.0:
            passed = error == 0.0
        else:
            passed = error <= RICHARDSON_FAIL * fine
        results.append(Condition3Estimate(n=n, alpha=tuple(a), variant=variant,
                                          value=float(fine), error=float(error), passed=bool(passed)))
    return results


def _check_alpha(fam: MultiplierFamily, alpha, variant: str) -> tuple:
    alpha = tuple(int(v) for v in np.atleast_1d(alpha))
    if len(alpha) != fam.d or min(alpha) < 0:
        raise ValueError(f"multi-index {alpha} invalid in dimension {fam.d}")
    if sum(alpha) > variant_order(variant, fam.d):
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds the {variant} order {variant_order(variant, fam.d)}")
    return alpha


def estimate_condition3(fam: MultiplierFamily, n: int, alpha, variant: str = "L2",
                        h_exponent: int = 10) -> Condition3Estimate:
    """Normalized derivative bound of psi_n for one multi-index.

    L2: (2^(-nd) int |D^alpha psi_n|^2)^(1/2) * 2^(n|alpha|)
    L1:  2^(-nd) int |D^alpha psi_n|      * 2^(n|alpha|)

    ``passed`` is False when the Richardson error exceeds 10% of the value,
    which is how insufficient smoothness shows up.
    """
    alpha = _check_alpha(fam, alpha, variant)
    return _condition3_scale(fam, n, [alpha], variant, h_exponent)[0]


@dataclass
class ConditionReport:
    variant: str
    entries: list
    partition_residual: float
    support: list
    K: float
    max_abs: float

    @property
    def passed(self) -> bool:
        return (all(e.passed for e in self.entries)
                and all(s.passed for s in self.support)
                and self.partition_residual <= 1e-12)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def K_by_scale(self) -> dict:
        out = {}
        for e in self.entries:
            out[e.n] = max(out.get(e.n, 0.0), e.value)
        return out


def full_report(fam: MultiplierFamily, grid: Grid, variant: str = "L2",
                h_exponent: int = 10) -> ConditionReport:
    order = variant_order(variant, fam.d)
    alphas = multi_indices(fam.d, order)
    entries = []
    support = []
    for n in fam.scales:
        if n in fam.omitted:
            continue
        support.append(validate_support(fam, n))
        entries.extend(_condition3_scale(fam, n, alphas, variant, h_exponent))
    values = [e.value for e in entries]
    return ConditionReport(
        variant=variant,
        entries=entries,
        partition_residual=validate_partition(fam, grid),
        support=support,
        K=float(max(values)) if values else 0.0,
        max_abs=float(max((s.max_abs for s in support), default=0.0)),
    )
