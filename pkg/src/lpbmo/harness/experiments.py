"""The six experiments the CLI can run. Each returns an ExperimentReport."""

from concurrent.futures import ThreadPoolExecutor
import math
import time

import numpy as np

from ..grid import Grid
from ..multipliers import full_report, validate_partition, variant_order
from ..norms import bmo_norm, d_norm, enumerate_cubes, shell_average_scan, cube_average_scan, tl_norm
from ..operators import (check_band_orthogonality, check_kernel_decay, decompose, kernel,
                         neighborhood_kernel, reconstruction_residual)
from ..testfuns import generate
from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport

DEGENERATE_NORM = 1e-13


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _resolutions(cfg: ExperimentConfig, refine: bool) -> list:
    if cfg.resolutions:
        return list(cfg.resolutions)
    m = cfg.grid.m
    return [m, m + 1] if refine and m < 12 else [m]


def _members(cfg: ExperimentConfig, grid: Grid) -> list:
    if not cfg.ensembles:
        raise ConfigError("experiment needs at least one ensemble")
    out = []
    for e, spec in enumerate(cfg.ensembles):
        try:
            funcs = generate(spec, grid)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"ensembles/{e}: {exc}") from exc
        out.extend((f"e{e}:{spec.label(i)}", f) for i, f in enumerate(funcs))
    return out


def _families(cfg: ExperimentConfig, count: int) -> list:
    if len(cfg.families) < count:
        raise ConfigError(f"experiment needs {count} family spec(s), got {len(cfg.families)}")
    return cfg.families[:count]


def _cube_label(q) -> str:
    return "(" + ",".join(str(i) for i in q.index) + (")+half" if q.shifted else ")")


def _drift(a: float, b: float) -> float:
    if a <= 0 or b <= 0 or not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    return max(a / b, b / a)


def _bracket(values) -> dict:
    if not values:
        return {"min": None, "max": None, "median": None}
    v = np.asarray(values, dtype=float)
    return {"min": float(v.min()), "max": float(v.max()), "median": float(np.median(v))}


def _finite_positive(b: dict) -> bool:
    return (b["min"] is not None and 0 < b["min"] <= b["max"] and math.isfinite(b["max"]))


def _condition_summary(rep) -> dict:
    by_scale = rep.K_by_scale()
    vals = list(by_scale.values())
    return {
        "variant": rep.variant,
        "passed": rep.passed,
        "K": rep.K,
        "K_by_scale": by_scale,
        "K_spread": (max(vals) / min(vals)) if vals and min(vals) > 0 else None,
        "partition_residual": rep.partition_residual,
        "max_abs": rep.max_abs,
        "failures": [{"n": e.n, "alpha": list(e.alpha), "value": e.value, "error": e.error}
                     for e in rep.failures()],
    }


def run_validate_family(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    (spec,) = _families(cfg, 1)
    grid = cfg.grid
    fam = spec.build(grid)
    report = ExperimentReport("validate-family", cfg.echo())
    label = spec.label()
    for variant in ("L2", "L1"):
        rep = full_report(fam, grid, variant, cfg.h_exponent)
        report.validators[variant] = _condition_summary(rep)
        for e in rep.entries:
            report.add_row(m=grid.m, family=label, n=e.n, alpha=e.alpha,
                           quantity=f"condition3_{variant}", value=e.value, passed=e.passed)
            report.add_row(m=grid.m, family=label, n=e.n, alpha=e.alpha,
                           quantity=f"condition3_{variant}_error", value=e.error)
        if variant == "L2":
            for s in rep.support:
                report.add_row(m=grid.m, family=label, n=s.n, quantity="support_leakage",
                               value=s.leakage, passed=s.passed)
            report.add_row(m=grid.m, family=label, quantity="partition_residual",
                           value=rep.partition_residual,
                           passed=rep.partition_residual <= cfg.tolerances["partition"])
        report.aggregates[f"K_{variant}"] = rep.K
        report.aggregates[f"K_spread_{variant}"] = report.validators[variant]["K_spread"]
    declared = report.validators[spec.variant]
    report.check(f"conditions_{spec.variant}", declared["passed"],
                 f"{len(declared['failures'])} failing entries" if declared["failures"] else "")
    report.timings["total_s"] = time.perf_counter() - t0
    return report


def run_bmo_equivalence(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    if not cfg.families:
        raise ConfigError("experiment needs at least one family spec")
    report = ExperimentReport("bmo-equivalence", cfg.echo())
    tol = cfg.tolerances["drift"]
    for spec in cfg.families:
        label = spec.label()
        brackets = []
        for m in _resolutions(cfg, refine=True):
            t1 = time.perf_counter()
            grid = Grid(cfg.grid.d, m)
            fam = spec.build(grid)
            cubes = enumerate_cubes(grid, shifted=cfg.shifted)
            members = _members(cfg, grid)

            def measure(item):
                name, f = item
                return name, bmo_norm(f, cubes), d_norm(f, fam, cubes, offset=cfg.offset)

            ratios = []
            skipped = 0
            for name, bres, dres in _map(measure, members, threads):
                b, dn = bres.value, dres.value
                report.add_row(m=m, family=label, function=name, s=bres.argmax.s,
                               cube=_cube_label(bres.argmax), quantity="bmo", value=b)
                report.add_row(m=m, family=label, function=name, s=dres.argmax.s,
                               cube=_cube_label(dres.argmax), quantity="d_norm", value=dn)
                if dn < DEGENERATE_NORM:
                    skipped += 1
                    report.add_row(m=m, family=label, function=name, quantity="ratio", value=None,
                                   passed=False)
                    continue
                ratios.append(b / dn)
                report.add_row(m=m, family=label, function=name, quantity="ratio", value=b / dn)
            br = _bracket(ratios)
            agg = {"C1": br["min"], "C2": br["max"], "median": br["median"],
                   "used": len(ratios), "skipped": skipped, "degenerate": not ratios}
            report.aggregates[f"{label}@m={m}"] = agg
            report.timings[f"{label}@m={m}_s"] = time.perf_counter() - t1
            report.check(f"{label}@m={m}:nondegenerate", bool(ratios),
                         "" if ratios else "every function has zero d_norm")
            if ratios:
                report.check(f"{label}@m={m}:bracket_finite", _finite_positive(br),
                             f"[{br['min']}, {br['max']}]")
            brackets.append((m, br))
        for (m0, b0), (m1, b1) in zip(brackets, brackets[1:]):
            if b0["min"] is None or b1["min"] is None:
                continue
            drift = max(_drift(b0["min"], b1["min"]), _drift(b0["max"], b1["max"]))
            report.aggregates[f"{label}:drift_m{m0}_m{m1}"] = drift
            report.add_row(m=m1, family=label, quantity="bracket_drift", value=drift,
                           passed=drift <= tol)
            report.check(f"{label}:drift_m{m0}_m{m1}", drift <= tol, f"{drift:.4f} <= {tol}")
    report.timings["total_s"] = time.perf_counter() - t0
    return report


def run_tl_comparability(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    phi_spec, psi_spec = _families(cfg, 2)
    report = ExperimentReport("tl-comparability", cfg.echo())
    base = cfg.grid
    validated = {}
    for role, spec in (("phi", phi_spec), ("psi", psi_spec)):
        key = spec.label()
        if key not in validated:
            validated[key] = full_report(spec.build(base), base, "L1", cfg.h_exponent)
        rep = validated[key]
        report.validators[role] = _condition_summary(rep)
        report.aggregates[f"K_{role}"] = rep.K
    refused = [r for r in ("phi", "psi") if not report.validators[r]["passed"]]
    report.check("families_validated", not refused,
                 f"{', '.join(refused)} fails the L1 order-{variant_order('L1', base.d)} conditions; "
                 "inspect with `lp run validate-family`" if refused else "")
    if refused:
        report.timings["total_s"] = time.perf_counter() - t0
        return report

    phi_label, psi_label = phi_spec.label(), psi_spec.label()
    pair = f"{phi_label}/{psi_label}"
    tol = cfg.tolerances["drift"]
    brackets = {p: [] for p in cfg.p}
    for m in _resolutions(cfg, refine=True):
        t1 = time.perf_counter()
        grid = Grid(base.d, m)
        phi, psi = phi_spec.build(grid), psi_spec.build(grid)
        cubes = enumerate_cubes(grid, shifted=cfg.shifted)
        members = _members(cfg, grid)

        def measure(item):
            name, f = item
            dphi, dpsi = decompose(f, phi), decompose(f, psi)
            return name, [(p, tl_norm(dphi, phi, p, cubes, offset=cfg.offset).value,
                           tl_norm(dpsi, psi, p, cubes, offset=cfg.offset).value) for p in cfg.p]

        fwd = {p: [] for p in cfg.p}
        rev = {p: [] for p in cfg.p}
        for name, vals in _map(measure, members, threads):
            for p, a, b in vals:
                report.add_row(m=m, family=phi_label, function=name, p=p, quantity="tl_norm_phi", value=a)
                report.add_row(m=m, family=psi_label, function=name, p=p, quantity="tl_norm_psi", value=b)
                if a < DEGENERATE_NORM or b < DEGENERATE_NORM:
                    report.add_row(m=m, family=pair, function=name, p=p, quantity="ratio_phi_psi",
                                   value=None, passed=False)
                    continue
                fwd[p].append(a / b)
                rev[p].append(b / a)
                report.add_row(m=m, family=pair, function=name, p=p, quantity="ratio_phi_psi", value=a / b)
                report.add_row(m=m, family=pair, function=name, p=p, quantity="ratio_psi_phi", value=b / a)
        for p in cfg.p:
            bf, br = _bracket(fwd[p]), _bracket(rev[p])
            report.aggregates[f"p={p}@m={m}"] = {"phi_over_psi": bf, "psi_over_phi": br,
                                                 "used": len(fwd[p]), "skipped": len(members) - len(fwd[p])}
            ok = _finite_positive(bf) and _finite_positive(br)
            report.check(f"p={p}@m={m}:brackets_finite", ok,
                         f"phi/psi [{bf['min']}, {bf['max']}], psi/phi [{br['min']}, {br['max']}]")
            brackets[p].append((m, bf, br))
        report.timings[f"m={m}_s"] = time.perf_counter() - t1
    for p, seq in brackets.items():
        for (m0, f0, r0), (m1, f1, r1) in zip(seq, seq[1:]):
            if not all(_finite_positive(b) for b in (f0, r0, f1, r1)):
                continue
            drift = max(_drift(f0["min"], f1["min"]), _drift(f0["max"], f1["max"]),
                        _drift(r0["min"], r1["min"]), _drift(r0["max"], r1["max"]))
            report.aggregates[f"p={p}:drift_m{m0}_m{m1}"] = drift
            report.add_row(m=m1, family=pair, p=p, quantity="bracket_drift", value=drift,
                           passed=drift <= tol)
            report.check(f"p={p}:drift_m{m0}_m{m1}", drift <= tol, f"{drift:.4f} <= {tol}")
    report.timings["total_s"] = time.perf_counter() - t0
    return report


def run_kernel_decay(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    (spec,) = _families(cfg, 1)
    grid = cfg.grid
    fam = spec.build(grid)
    label = spec.label()
    report = ExperimentReport("kernel-decay", cfg.echo())
    validation = full_report(fam, grid, "L1", cfg.h_exponent)
    report.validators["L1"] = _condition_summary(validation)
    lo, hi = cfg.scales if cfg.scales else (2, grid.m - 2)
    scan = [n for n in fam.scales if lo <= n <= hi]
    if not scan:
        raise ConfigError(f"no family scales inside [{lo}, {hi}]")

    results = _map(lambda n: check_kernel_decay(fam, n, grid), list(fam.scales), threads)
    for r in results:
        for q in ("c_peak", "c_tail", "c_l1", "split_bound"):
            report.add_row(m=grid.m, family=label, n=r.n, quantity=q, value=getattr(r, q))
        report.add_row(m=grid.m, family=label, n=r.n, quantity="tail_points", value=r.tail_points)
    in_scan = [r for r in results if r.n in scan]
    tol = cfg.tolerances["variation"]
    for q in ("c_peak", "c_tail", "c_l1"):
        vals = [getattr(r, q) for r in in_scan]
        report.aggregates[f"max_{q}"] = max(vals)
        report.add_row(m=grid.m, family=label, quantity=f"max_{q}", value=max(vals))
    report.check("all_finite", all(math.isfinite(getattr(r, q)) for r in in_scan
                                   for q in ("c_peak", "c_tail", "c_l1")))
    for q in ("c_peak", "c_l1"):
        vals = [getattr(r, q) for r in in_scan]
        variation = max(vals) / min(vals) if min(vals) > 0 else math.inf
        report.aggregates[f"variation_{q}"] = variation
        report.add_row(m=grid.m, family=label, quantity=f"variation_{q}", value=variation,
                       passed=variation <= tol)
        report.check(f"variation_{q}", variation <= tol, f"{variation:.4f} <= {tol} over n in [{lo}, {hi}]")
    report.check("l1_split_consistent", all(r.c_l1 <= r.split_bound * (1 + 1e-12) for r in results))
    report.aggregates["scan_scales"] = [lo, hi]
    report.timings["total_s"] = time.perf_counter() - t0
    return report


def run_lemma_checks(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    (spec,) = _families(cfg, 1)
    label = spec.label()
    p = cfg.p[0]
    report = ExperimentReport("lemma-checks", cfg.echo())
    maxima = []
    for m in _resolutions(cfg, refine=False):
        t1 = time.perf_counter()
        grid = Grid(cfg.grid.d, m)
        fam = spec.build(grid)
        cubes = enumerate_cubes(grid, shifted=cfg.shifted)
        members = _members(cfg, grid)

        def measure(item):
            name, f = item
            dec = decompose(f, fam)
            norm_psi = tl_norm(dec, fam, p, cubes).value
            norm_d = d_norm(dec, fam, cubes).value
            l1 = shell_average_scan(f, fam, norm_psi, shifted=cfg.shifted)
            l2 = cube_average_scan(f, fam, norm_d, shifted=cfg.shifted)
            return name, l1, l2

        shell_max, cube_max, degenerate = 0.0, 0.0, 0
        for name, l1, l2 in _map(measure, members, threads):
            if l1["degenerate"] or l2["degenerate"]:
                degenerate += 1
            report.add_row(m=m, family=label, function=name, n=l1["n"], s=l1["s"], p=p,
                           quantity="shell_average_max", value=l1["ratio"], passed=not l1["degenerate"])
            report.add_row(m=m, family=label, function=name, n=l2["n"], s=l2["s"],
                           quantity="cube_average_max", value=l2["ratio"], passed=not l2["degenerate"])
            shell_max, cube_max = max(shell_max, l1["ratio"]), max(cube_max, l2["ratio"])
        elapsed = time.perf_counter() - t1
        report.aggregates[f"m={m}"] = {"shell_average_max": shell_max, "cube_average_max": cube_max,
                                       "functions": len(members), "degenerate": degenerate}
        report.timings[f"m={m}_s"] = elapsed
        report.check(f"m={m}:finite_maxima", math.isfinite(shell_max) and math.isfinite(cube_max))
        maxima.append((m, cube_max))
    if len(maxima) >= 2:
        vals = [v for _, v in maxima]
        spread = _drift(min(vals), max(vals))
        report.aggregates["cube_average_spread"] = spread
        tol = cfg.tolerances["drift"]
        report.add_row(family=label, quantity="cube_average_spread", value=spread, passed=spread <= tol)
        report.check("cube_average_stable", spread <= tol, f"{spread:.4f} <= {tol}")
    report.timings["total_s"] = time.perf_counter() - t0
    return report


def run_reconstruction(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    (spec,) = _families(cfg, 1)
    grid = cfg.grid
    fam = spec.build(grid)
    label = spec.label()
    tol = cfg.tolerances
    report = ExperimentReport("reconstruction", cfg.echo())

    partition = validate_partition(fam, grid)
    report.add_row(m=grid.m, family=label, quantity="partition_residual", value=partition,
                   passed=partition <= tol["partition"])
    report.check("partition", partition <= tol["partition"], f"{partition:.3e}")

    worst_sp = 0.0
    for n in fam.scales:
        S = kernel(fam, n, grid).samples.values
        PS = np.fft.ifftn(np.fft.fftn(neighborhood_kernel(fam, n, grid).samples.values)
                          * np.fft.fftn(S)) / grid.size
        scale = np.abs(S).max()
        res = float(np.abs(PS - S).max() / scale) if scale > 0 else float(np.abs(PS).max())
        worst_sp = max(worst_sp, res)
        report.add_row(m=grid.m, family=label, n=n, quantity="reproduction_residual", value=res,
                       passed=res <= tol["partition"])
    report.check("reproduction", worst_sp <= tol["partition"], f"{worst_sp:.3e}")

    members = _members(cfg, grid)
    pairs = [(a, b) for a in fam.scales for b in fam.scales if b - a >= 2]

    def measure(item):
        name, f = item
        dec = decompose(f, fam)
        band_sum = sum(b.values for b in dec.bands.values())
        return (name, reconstruction_residual(f, fam), float(np.abs(band_sum).max()),
                [check_band_orthogonality(f, fam, a, b, tol["orthogonality"]) for a, b in pairs])

    worst_rec, ortho_ok = 0.0, True
    for name, res, band_sum, ortho in _map(measure, members, threads):
        worst_rec = max(worst_rec, res)
        report.add_row(m=grid.m, family=label, function=name, quantity="reconstruction_residual",
                       value=res, passed=res <= tol["reconstruction"])
        report.add_row(m=grid.m, family=label, function=name, quantity="band_sum_sup", value=band_sum)
        for o in ortho:
            ortho_ok &= o.passed
            report.add_row(m=grid.m, family=label, function=name, n=o.n1, n2=o.n2,
                           quantity="orthogonality", value=o.normalized, passed=o.passed)
    report.aggregates["max_reconstruction_residual"] = worst_rec
    report.aggregates["max_reproduction_residual"] = worst_sp
    report.aggregates["partition_residual"] = partition
    report.check("reconstruction", worst_rec <= tol["reconstruction"], f"{worst_rec:.3e}")
    report.check("orthogonality", ortho_ok, f"{len(pairs)} pairs per function")
    report.timings["total_s"] = time.perf_counter() - t0
    return report


RUNNERS = {
    "validate-family": run_validate_family,
    "bmo-equivalence": run_bmo_equivalence,
    "tl-comparability": run_tl_comparability,
    "kernel-decay": run_kernel_decay,
    "lemma-checks": run_lemma_checks,
    "reconstruction": run_reconstruction,
}


def run_experiment(experiment: str, cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    if experiment not in RUNNERS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {sorted(RUNNERS)}")
    if cfg.experiment is not None and cfg.experiment != experiment:
        raise ConfigError(f"config is for {cfg.experiment!r}, not {experiment!r}")
    for m in cfg.resolutions or []:
        if m < 4 or m > 12:
            raise ConfigError(f"resolution {m} outside 4..12")
    return RUNNERS[experiment](cfg, threads=max(1, threads))
