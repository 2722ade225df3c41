import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from lpbmo.grid import Grid
from lpbmo.multipliers import (
    KINDS,
    MultiplierFamily,
    estimate_condition3,
    full_report,
    make_family,
    multi_indices,
    partition_sum,
    smoothstep,
    smoothstep_coefficients,
    validate_partition,
    validate_support,
)

LN2 = np.log(2.0)


# -- transition profiles ---------------------------------------------------------------

@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_smoothstep_endpoint_derivatives_vanish(r):
    P = np.polynomial.Polynomial(smoothstep_coefficients(r))
    assert P(0.0) == pytest.approx(0.0, abs=1e-14)
    assert P(1.0) == pytest.approx(1.0, abs=1e-12)
    for k in range(1, r + 1):
        D = P.deriv(k)
        assert abs(D(0.0)) < 1e-9 and abs(D(1.0)) < 1e-9
    # the (r+1)-th derivative does not vanish, so the profile is exactly C^r at the joins
    assert abs(P.deriv(r + 1)(0.0)) > 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.floats(0.0, 1.0))
def test_smoothstep_symmetric_and_monotone(r, x):
    # degree 2r+1 with large alternating coefficients: roundoff reaches ~1e-12 at r=6
    assert smoothstep(r, x) + smoothstep(r, 1.0 - x) == pytest.approx(1.0, abs=1e-10)
    xs = np.linspace(0, 1, 401)
    assert np.all(np.diff(smoothstep(r, xs)) >= -1e-15)


@pytest.mark.parametrize("seed", [0, 7, 12345])
def test_hetero_transitions_are_monotone_and_distinct(seed):
    fam = MultiplierFamily("hetero-transition", 1, 0, 8, seed=seed)
    x = np.linspace(0, 1, 513)
    shapes = [fam.shape(n, x) for n in fam.scales]
    for s in shapes:
        assert s[0] == pytest.approx(0.0, abs=1e-14) and s[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(s) >= -1e-15)
    spread = max(np.abs(a - b).max() for a in shapes for b in shapes)
    assert spread > 1e-2


# -- vp-trapezoid endpoint values ------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_vp_values_at_octave_centre(n):
    fam = MultiplierFamily("vp-trapezoid", 1, -2, 8)
    assert fam.radial(n, 2.0**n) == 1.0
    assert fam.radial(n - 1, 2.0**n) == 0.0
    assert fam.radial(n + 1, 2.0**n) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_vp_overlap_point(n):
    fam = MultiplierFamily("vp-trapezoid", 1, -2, 8)
    xi = 3 * 2.0 ** (n - 1)
    assert fam.radial(n, xi) + fam.radial(n + 1, xi) == pytest.approx(1.0, abs=1e-15)
    assert fam.radial(n, xi) == pytest.approx(np.log2(2.0 ** (n + 1) / xi))


@pytest.mark.parametrize("n", [1, 3, 5])
def test_vp_closed_lower_endpoint_is_zero(n):
    fam = MultiplierFamily("vp-trapezoid", 2, 0, 8)
    assert fam.evaluate(n, np.array([2.0 ** (n - 1), 0.0])) == 0.0
    assert fam.evaluate(n, np.array([0.0, 2.0 ** (n + 1)])) == 0.0


# -- support and partition -------------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_builtin_support_has_no_leakage(kind, d):
    g = Grid(d, 7 if d < 3 else 5)
    fam = make_family(kind, g, seed=3)
    for n in fam.scales:
        chk = validate_support(fam, n)
        assert chk.passed and chk.leakage == 0.0
        assert 0.99 < chk.max_abs <= 1.0 + 1e-12


def test_broken_family_leaks():
    g = Grid(1, 8)
    fam = make_family("smooth-logstep", g, width=1.5)
    n = 3
    assert abs(fam.radial(n, 1.1 * 2.0 ** (n + 1))) > 0
    chk = validate_support(fam, n)
    assert not chk.passed and chk.leakage > 0


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("d,m", [(1, 6), (1, 8), (2, 6), (2, 8)])
def test_partition_of_unity(kind, d, m):
    g = Grid(d, m)
    assert validate_partition(make_family(kind, g, seed=5), g) <= 1e-12


def test_partition_by_direct_summation_d2():
    # independent route: evaluate the telescoping sum frequency by frequency from the transitions
    g = Grid(2, 8)
    fam = make_family("smooth-logstep", g)
    total = partition_sum(fam, g)
    worst = 0.0
    for idx in zip(*np.nonzero(g.frequency_magnitude > 0)):
        u = np.log2(g.frequency_magnitude[idx])
        acc = 0.0
        for n in fam.scales:
            lower = 1.0 if n == fam.n_min else float(fam.transition(n - 1, u))
            upper = 0.0 if n == fam.n_max else float(fam.transition(n, u))
            acc += lower - upper
        worst = max(worst, abs(acc - 1.0))
        assert abs(acc - total[idx]) <= 1e-13
    assert worst <= 1e-12


def test_deleted_scale_breaks_partition():
    g = Grid(1, 8)
    fam = make_family("smooth-logstep", g).without_scale(3)
    total = partition_sum(fam, g)
    assert validate_partition(fam, g) == pytest.approx(1.0, abs=1e-12)
    assert total[g.index_of_frequency((8,))] == pytest.approx(0.0, abs=1e-15)
    assert total[g.index_of_frequency((32,))] == pytest.approx(1.0, abs=1e-15)


def test_partition_excludes_zero_frequency():
    g = Grid(1, 6)
    fam = make_family("vp-trapezoid", g)
    assert partition_sum(fam, g)[0] == 0.0
    assert validate_partition(fam, g) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(KINDS), st.floats(2.0**-3, 2.0**14))
def test_at_most_two_consecutive_members_overlap(kind, rho):
    fam = MultiplierFamily(kind, 1, -6, 18, seed=9)
    vals = np.array([fam.radial(n, rho) for n in fam.scales])
    nz = np.nonzero(vals)[0]
    assert 1 <= nz.size <= 2
    if nz.size == 2:
        assert nz[1] - nz[0] == 1
    assert vals.sum() == pytest.approx(1.0, abs=1e-12)


# -- make_family contract --------------------------------------------------------------

def test_make_family_errors():
    g = Grid(2, 6)
    with pytest.raises(ValueError):
        make_family("vp-trapezoid", g, order=2)
    with pytest.raises(ValueError):
        make_family("smooth-logstep", g, r=1, order=2)
    with pytest.raises(ValueError):
        make_family("smooth-logstep", g, n_max=5)
    with pytest.raises(ValueError):
        make_family("gaussian", g)
    fam = make_family("smooth-logstep", g, r=3, order=3)
    assert (fam.n_min, fam.n_max) == (0, 4)


def test_multi_indices():
    assert multi_indices(1, 2) == [(0,), (1,), (2,)]
    assert len(multi_indices(2, 2)) == 6
    assert len(multi_indices(2, 3)) == 10


# -- condition 3 -----------------------------------------------------------------------

def test_alpha_above_variant_order_rejected():
    fam = MultiplierFamily("smooth-logstep", 1, 0, 6)
    with pytest.raises(ValueError):
        estimate_condition3(fam, 2, (3,), "L2")
    with pytest.raises(ValueError):
        estimate_condition3(fam, 2, (1, 0), "L2")


@pytest.mark.parametrize("n", [2, 4, 6])
def test_vp_first_derivative_l2_matches_closed_form(n):
    # psi_n' = +-1/(xi ln 2) on each half octave, so the normalized ratio is sqrt(3)/ln 2 for every n
    fam = MultiplierFamily("vp-trapezoid", 1, 0, 8)
    est = estimate_condition3(fam, n, (1,), "L2")
    assert est.passed
    assert est.value == pytest.approx(np.sqrt(3) / LN2, rel=1e-2)


@pytest.mark.parametrize("n", [2, 5])
def test_vp_first_derivative_l1_is_total_variation(n):
    fam = MultiplierFamily("vp-trapezoid", 1, 0, 8)
    est = estimate_condition3(fam, n, (1,), "L1")
    assert est.passed
    assert est.value == pytest.approx(4.0, rel=1e-3)


@pytest.mark.parametrize("kind", ["vp-trapezoid", "smooth-logstep"])
def test_zeroth_order_matches_quadrature(kind):
    n = 3
    fam = MultiplierFamily(kind, 1, 0, 8)
    lo, hi = 2.0 ** (n - 1), 2.0 ** (n + 1)
    sq = 2 * integrate.quad(lambda x: fam.radial(n, x) ** 2, lo, hi, points=[2.0**n], epsabs=1e-13)[0]
    ab = 2 * integrate.quad(lambda x: abs(fam.radial(n, x)), lo, hi, points=[2.0**n], epsabs=1e-13)[0]
    assert estimate_condition3(fam, n, (0,), "L2").value == pytest.approx(np.sqrt(sq / 2.0**n), rel=1e-5)
    assert estimate_condition3(fam, n, (0,), "L1").value == pytest.approx(ab / 2.0**n, rel=1e-5)


def test_vp_second_derivative_fails_l1_d1():
    fam = MultiplierFamily("vp-trapezoid", 1, 0, 8)
    est = estimate_condition3(fam, 3, (2,), "L1")
    assert not est.passed
    assert est.error > 0.1 * est.value


@pytest.mark.parametrize("alpha", [(2, 0), (1, 1)])
def test_vp_second_derivative_fails_l2_d2(alpha):
    fam = MultiplierFamily("vp-trapezoid", 2, 0, 6)
    est = estimate_condition3(fam, 3, alpha, "L2")
    assert not est.passed


def test_smooth_second_derivative_passes_with_small_error():
    fam = MultiplierFamily("smooth-logstep", 1, 0, 8)
    est = estimate_condition3(fam, 3, (2,), "L1")
    assert est.passed and est.error < 1e-3 * est.value
    fam2 = MultiplierFamily("smooth-logstep", 2, 0, 6)
    est = estimate_condition3(fam2, 3, (1, 1), "L2")
    assert est.passed and est.error < 1e-3 * est.value


SMOOTH_K_L2_D1 = 3.16660638012686
HETERO7_K_L2_D1 = 3.4996470442247127


@pytest.fixture(scope="module")
def reports_d1():
    g = Grid(1, 8)
    return {kind: full_report(make_family(kind, g, seed=7), g, "L2") for kind in KINDS}


def test_smooth_full_report_passes(reports_d1):
    rep = reports_d1["smooth-logstep"]
    assert rep.passed and np.isfinite(rep.K)
    assert all(e.value >= 0 for e in rep.entries)
    assert rep.max_abs == pytest.approx(1.0)
    assert rep.K == pytest.approx(SMOOTH_K_L2_D1, rel=1e-9)


@pytest.mark.parametrize("kind", ["smooth-logstep", "vp-trapezoid"])
def test_dilation_families_are_scale_invariant(reports_d1, kind):
    rep = reports_d1[kind]
    for alpha in multi_indices(1, 1):
        es = [e for e in rep.entries if e.alpha == alpha]
        vals = np.array([e.value for e in es])
        bound = max(e.error for e in es) + 1e-12 * vals.max()
        assert vals.max() - vals.min() <= bound


def test_hetero_report_within_factor_of_smooth(reports_d1):
    het, smooth = reports_d1["hetero-transition"], reports_d1["smooth-logstep"]
    assert het.passed
    assert het.K == pytest.approx(HETERO7_K_L2_D1, rel=1e-9)
    assert smooth.K / 4 <= het.K <= 4 * smooth.K
    # a non-dilation family: per-scale constants genuinely differ
    ks = list(het.K_by_scale().values())
    assert max(ks) / min(ks) > 1.01


def test_vp_l2_report_passes_at_first_order_only(reports_d1):
    rep = reports_d1["vp-trapezoid"]
    assert rep.passed  # L2 order in d = 1 is 1
    l1 = full_report(MultiplierFamily("vp-trapezoid", 1, 0, 4), Grid(1, 6), "L1")
    assert {e.alpha for e in l1.failures()} == {(2,)}
    assert len(l1.failures()) == 5
