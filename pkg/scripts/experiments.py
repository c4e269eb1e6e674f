"""
Apollonia - experiment commands.

Each cmd_* runs one experiment, prints progress the way the pipeline
scripts do, and returns an ExperimentReport whose config block is enough to
re-run it.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from scripts import config
from scripts.apollonian_packing import (
    PACKINGS,
    StopCriterion,
    audit_packing,
    counts_by_curvature,
    curvature_band_counts,
    residual_array,
    residual_indicator,
    write_packing_dump,
)
from scripts.cubature import (
    ReferenceValue,
    build_rule,
    integrate,
    monte_carlo_estimate,
    quadrature_reference,
    reference_integral,
    sup_norm,
    write_rule_dump,
)
from scripts.domain_model import domain_to_document, load_domain
from scripts.errors import DomainValidationError, InsufficientDataError, InvalidInputError
from scripts.exponent_fit import fit_power_law, log_spaced
from scripts.geometry_core import DEFAULT_TOLERANCE
from scripts.greedy_baseline import greedy_run, write_greedy_dump
from scripts.harmonic import HarmonicKind, sample_domain_points
from scripts.reports import ExperimentReport, write_report

GREEDY_PROTOCOL = (
    "greedy protocol: disk centered at the sampled point, radius = clearance to the "
    "boundary and to every placed disk; pooled log-log fit of residual vs N"
)


# ==================================================
# HELPERS
# ==================================================
def parallel_map(fn, items, threads=1):
    """Order-preserving map; threads > 1 uses a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _base_config(domain, tol, threads):
    return {
        "domain": domain.name,
        "domain_document": domain_to_document(domain),
        "tolerance_rel": tol.relative,
        "tolerance_abs": tol.absolute,
        "threads": threads,
    }


def _finish(report, started, out, label):
    report.wall_clock = time.time() - started
    print(f"⏱️  {label} took: {report.wall_clock:.2f}s")
    if out is not None:
        for path in write_report(report, out):
            print(f"💾 Saved {path}")
    return report


def _try_fit(report, name, *args, **kwargs):
    try:
        fit = fit_power_law(*args, **kwargs)
    except InsufficientDataError as e:
        report.notes.append(f"{name}: {e}")
        print(f"⚠️  {name}: {e}")
        return None
    report.fits[name] = fit
    flag = " (low confidence)" if fit.low_confidence else ""
    print(f"📈 {name}: slope {fit.slope:.4f}, r² {fit.r_squared:.5f}, {fit.points_used} points{flag}")
    return fit


def _check_grid(grid):
    grid = [int(n) for n in grid]
    if not grid:
        raise InvalidInputError("the N grid is empty")
    if any(n < 0 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInputError(f"the N grid must be strictly increasing and non-negative, got {grid}")
    return grid


def exact_reference(domain, u):
    """Exact integrals where they are known in closed form (constants)."""
    if u.kind is HarmonicKind.CONSTANT:
        return ReferenceValue(u.scale * u.c * domain.exact_area, 0.0)
    return None


# ==================================================
# VALIDATE
# ==================================================
def cmd_validate(path, tol=DEFAULT_TOLERANCE, out=None):
    """Validation report of a domain file; results.ok is False on violations."""
    started = time.time()
    print(f"📦 Validating {path}...")
    report = ExperimentReport("validate", {"domain_file": str(path), "tolerance_rel": tol.relative,
                                           "tolerance_abs": tol.absolute})
    try:
        domain = load_domain(path, tol)
    except DomainValidationError as e:
        report.results = {"ok": False, "violations": e.report.to_list()}
        print(f"❌ {len(e.report)} violation(s):\n{e.report.describe()}")
        return _finish(report, started, out, "Validation")

    report.results = {
        "ok": True,
        "violations": [],
        "disks": domain.k,
        "gaps": [list(g.members) for g in domain.gaps],
        "exact_area": domain.exact_area,
    }
    print(f"✅ {domain.k} disks, {len(domain.gaps)} gaps, area {domain.exact_area:.12g}")
    return _finish(report, started, out, "Validation")


# ==================================================
# GENERATE
# ==================================================
def cmd_generate(domain, stop, out=None, tol=DEFAULT_TOLERANCE, progress=False):
    """Packing prefix for `stop`; `out` receives the packing dump, `out`.json the report."""
    started = time.time()
    print(f"🔵 Generating packing of {domain.name} until {stop.describe()}...")
    stats, emitted = PACKINGS.prefix(domain, stop, tol, progress)
    report = ExperimentReport("generate", {**_base_config(domain, tol, 1), "stop": stop.describe()})
    report.results = {"stats": stats.to_dict(), "audit": audit_packing(emitted, tol)}
    print(f"✅ {stats.N} circles, residual {stats.residual_area:.6e}")

    if out is not None:
        write_packing_dump(emitted, out)
        print(f"💾 Saved {out}")
        out = f"{out}.json"
    return _finish(report, started, out, "Packing generation")


# ==================================================
# CONVERGE
# ==================================================
def cmd_converge(domain, u, grid, out=None, tol=DEFAULT_TOLERANCE, threads=1, oracle="quadrature",
                 sup_method="auto", mc_baseline=False, l1=False, seed=0, mc_samples=None,
                 rule_dump=None, progress=False):
    """
    One row per N: estimate, certified bound, error against a reference and
    whether the certificate held. oracle is 'quadrature' (adaptive, packing
    free) or 'packing' (a rule 100x deeper in residual than the grid needs).
    """
    started = time.time()
    grid = _check_grid(grid)
    print(f"🧮 Converge: {u.describe()} on {domain.name}, N in {grid[0]}..{grid[-1]}")

    _, emitted = PACKINGS.prefix(domain, StopCriterion(max_count=grid[-1]), tol, progress)
    if len(emitted) < grid[-1]:
        raise InvalidInputError(f"the packing has only {len(emitted)} circles, grid asks for {grid[-1]}")
    residuals = residual_array(emitted, domain)
    sup = sup_norm(domain, u, sup_method)

    reference = exact_reference(domain, u)
    oracle_used = "exact"
    if reference is None:
        oracle_used = oracle
        t_ref = time.time()
        if oracle == "quadrature":
            reference = quadrature_reference(domain, u)
        elif oracle == "packing":
            target = float(min(residuals[n] for n in grid)) / 100.0
            reference = reference_integral(domain, u, target, tol, progress=progress)
        else:
            raise InvalidInputError(f"unknown oracle {oracle!r}; use quadrature or packing")
        print(f"⏱️  Reference ({oracle}) took: {time.time() - t_ref:.2f}s")

    mc_samples = mc_samples or config.MC_SAMPLES
    l1_seed, *mc_seeds = np.random.SeedSequence(seed).spawn(len(grid) + 1)
    l1_norm = None
    if l1:
        l1_norm = monte_carlo_estimate(domain, u, mc_samples, np.random.default_rng(l1_seed)).l1_norm

    def row(item):
        n, ss = item
        rule = build_rule(emitted, n, domain)
        res = integrate(rule, u, sup=sup, rescaled=True)
        error = abs(res.estimate - reference.value)
        honest = None
        if res.certified:
            honest = error <= res.certified_bound + reference.uncertainty
        rescaled_error = None if res.rescaled_estimate is None else abs(res.rescaled_estimate - reference.value)
        extra = []
        if mc_baseline:
            # N random points, as many as the rule has nodes
            mc = monte_carlo_estimate(domain, u, max(n, 2), np.random.default_rng(ss))
            extra.append(abs(mc.integral - reference.value))
        if l1:
            extra.append(error / l1_norm if l1_norm > 0 else None)
        return [n, res.estimate, res.residual_bound, res.certified_bound, error, honest, rescaled_error, *extra]

    fields = ["N", "estimate", "residual_bound", "certified_bound", "true_error", "honest", "rescaled_error"]
    if mc_baseline:
        fields.append("mc_error")
    if l1:
        fields.append("error_over_l1")

    report = ExperimentReport("converge", {
        **_base_config(domain, tol, threads),
        "function": u.describe(),
        "grid": grid,
        "oracle": oracle_used,
        "sup_method": sup_method,
        "seed": seed,
        "mc_baseline": mc_baseline,
        "l1": l1,
        "mc_samples": mc_samples,
    })
    table = report.table("convergence", fields)
    for values in parallel_map(row, zip(grid, mc_seeds), threads):
        table.add(*values)

    honest_column = [h for h in table.column("honest") if h is not None]
    report.results = {
        "sup_norm": sup,
        "reference": reference.value,
        "reference_uncertainty": reference.uncertainty,
        "l1_norm_estimate": l1_norm,
        "certificate": "applicable" if u.is_harmonic else "inapplicable",
        "all_honest": all(honest_column) if honest_column else None,
    }
    if not u.is_harmonic:
        report.notes.append(f"{u.describe()} is not harmonic; certified bounds are not reported")
        print(f"⚠️  {u.describe()} is not harmonic, certificate inapplicable")
    elif not report.results["all_honest"]:
        print("❌ certified bound violated on some rows")
    else:
        print("✅ certified bound held on every row")

    n = np.array(grid, dtype=float)
    _try_fit(report, "certified_bound", n, table.column("residual_bound"),
             lo=config.PREASYMPTOTIC_N, preasymptotic_below=config.PREASYMPTOTIC_N)
    _try_fit(report, "true_error", n, table.column("true_error"),
             lo=config.PREASYMPTOTIC_N, preasymptotic_below=config.PREASYMPTOTIC_N)

    if rule_dump is not None:
        write_rule_dump(build_rule(emitted, grid[-1], domain), rule_dump)
        print(f"💾 Saved {rule_dump}")
    return _finish(report, started, out, "Convergence study")


# ==================================================
# EXPONENT FITS
# ==================================================
def cmd_fit_residual(domain, n_lo, n_hi, points=40, out=None, tol=DEFAULT_TOLERANCE, progress=False):
    """log residual vs log N over [n_lo, n_hi]; the residual exponent is -(2 - alpha)/alpha."""
    started = time.time()
    if not 1 <= n_lo <= n_hi:
        raise InvalidInputError(f"need 1 <= n_lo <= n_hi, got {(n_lo, n_hi)}")
    print(f"📉 Residual fit on {domain.name}, N in [{n_lo}, {n_hi}]")
    _, emitted = PACKINGS.prefix(domain, StopCriterion(max_count=int(n_hi)), tol, progress)
    if len(emitted) < n_hi:
        raise InsufficientDataError(f"the packing ended after {len(emitted)} circles, below {n_hi}")
    residuals = residual_array(emitted, domain)
    ns = log_spaced(n_lo, n_hi, points, integer=True)

    report = ExperimentReport("fit-residual", {**_base_config(domain, tol, 1), "n_range": [int(n_lo), int(n_hi)],
                                               "points": points})
    table = report.table("residual", ["N", "residual"])
    for n in ns:
        table.add(int(n), float(residuals[n]))

    fit = fit_power_law(ns, [residuals[n] for n in ns], preasymptotic_below=config.PREASYMPTOTIC_N)
    report.fits["residual"] = fit
    report.results = {"slope": fit.slope, "implied_alpha": 2.0 / (1.0 - fit.slope)}
    print(f"📈 residual slope {fit.slope:.4f} (r² {fit.r_squared:.5f})")
    return _finish(report, started, out, "Residual fit")


def cmd_fit_counting(domain, t_lo, t_hi, points=40, band_ratio=2.0, out=None, tol=DEFAULT_TOLERANCE, progress=False):
    """log N(T) vs log T over [t_lo, t_hi], plus geometric curvature band counts."""
    started = time.time()
    if not 0 < t_lo <= t_hi:
        raise InvalidInputError(f"need 0 < t_lo <= t_hi, got {(t_lo, t_hi)}")
    if not band_ratio > 1:
        raise InvalidInputError(f"band_ratio must be > 1, got {band_ratio}")
    print(f"🔢 Counting fit on {domain.name}, T in [{t_lo:g}, {t_hi:g}]")
    _, emitted = PACKINGS.prefix(domain, StopCriterion(max_curvature=float(t_hi)), tol, progress)
    ts = log_spaced(t_lo, t_hi, points)
    counts = counts_by_curvature(emitted, ts)

    report = ExperimentReport("fit-counting", {**_base_config(domain, tol, 1), "t_range": [t_lo, t_hi],
                                               "points": points, "band_ratio": band_ratio})
    table = report.table("counting", ["T", "count"])
    for t, c in zip(ts, counts):
        table.add(float(t), int(c))

    fit = fit_power_law(ts, counts, preasymptotic_below=config.PREASYMPTOTIC_T)
    report.fits["counting"] = fit
    alpha = fit.slope
    report.results = {
        "alpha": alpha,
        "prefactor": fit.prefactor,
        "implied_residual_exponent": (2.0 - alpha) / alpha if alpha else None,
    }

    bands = int(math.floor(math.log(t_hi / t_lo) / math.log(band_ratio) + 1e-12))
    band_table = report.table("bands", ["band", "T_low", "T_high", "count", "ratio_to_previous"])
    previous = None
    for j, c in enumerate(curvature_band_counts(emitted, t_lo, band_ratio, bands)):
        ratio = c / previous if previous else None
        band_table.add(j, t_lo * band_ratio ** j, t_lo * band_ratio ** (j + 1), c, ratio)
        previous = c
    print(f"📈 alpha {alpha:.4f} (r² {fit.r_squared:.5f}), (2-alpha)/alpha = {report.results['implied_residual_exponent']:.4f}")
    return _finish(report, started, out, "Counting fit")


# ==================================================
# L^p IDENTITY
# ==================================================
def cmd_lp_check(domain, n, ps, samples=None, seed=0, out=None, tol=DEFAULT_TOLERANCE, batch=200_000,
                 progress=False):
    """Monte-Carlo L^p norm of the residual indicator against residual^(1/p)."""
    started = time.time()
    ps = [float(p) for p in ps]
    if not ps or any(not p >= 1 for p in ps):
        raise InvalidInputError(f"every p must be >= 1, got {ps}")
    samples = samples or config.MC_SAMPLES
    print(f"🎯 L^p check on {domain.name}, N = {n}, {samples} samples")
    _, emitted = PACKINGS.prefix(domain, StopCriterion(max_count=int(n)), tol, progress)
    if len(emitted) < n:
        raise InvalidInputError(f"the packing has only {len(emitted)} circles, asked for {n}")
    residual = float(residual_array(emitted, domain)[n])

    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        pts = sample_domain_points(domain, m, rng)
        hits += int(np.count_nonzero(residual_indicator(emitted, domain, pts, n)))
        done += m
    area = domain.exact_area
    frac = hits / samples
    measured_area = area * frac
    se_area = area * math.sqrt(frac * (1.0 - frac) / samples)

    report = ExperimentReport("lp-check", {**_base_config(domain, tol, 1), "N": int(n), "p": ps,
                                           "samples": samples, "seed": seed})
    table = report.table("lp", ["p", "measured", "expected", "stderr", "within_4_sigma"])
    for p in ps:
        measured = measured_area ** (1.0 / p)
        expected = residual ** (1.0 / p)
        # delta method for x -> x^(1/p)
        se = se_area * (measured_area ** (1.0 / p - 1.0)) / p if measured_area > 0 else se_area
        ok = abs(measured - expected) <= 4.0 * se + 1e-12 * max(1.0, expected)
        table.add(p, measured, expected, se, ok)
    report.results = {"residual": residual, "all_within_band": all(table.column("within_4_sigma"))}
    mark = "✅" if report.results["all_within_band"] else "❌"
    print(f"{mark} residual {residual:.6e}, measured {measured_area:.6e} ± {se_area:.1e}")
    return _finish(report, started, out, "L^p check")


# ==================================================
# GREEDY BASELINE
# ==================================================
def cmd_greedy(region, target_n, seeds, fit_lo=1e2, fit_hi=1e4, points=40, out=None, threads=1,
               stall_limit=None, progress=False):
    """Per-seed greedy residual series and a pooled log-log fit."""
    started = time.time()
    seeds = [int(s) for s in seeds]
    if len(seeds) < 3:
        raise InvalidInputError(f"a pooled fit needs at least 3 seeds, got {len(seeds)}")
    if len(set(seeds)) != len(seeds):
        raise InvalidInputError(f"seeds must be distinct, got {seeds}")
    stall_limit = stall_limit or config.GREEDY_STALL_LIMIT
    print(f"🎲 Greedy on {region.describe()}: {len(seeds)} seeds x {target_n} disks")

    runs = parallel_map(lambda s: greedy_run(region, target_n, s, stall_limit, progress), seeds, threads)

    report = ExperimentReport("greedy", {
        "region": region.describe(),
        "target_N": int(target_n),
        "seeds": seeds,
        "fit_range": [fit_lo, fit_hi],
        "points": points,
        "rng": "numpy PCG64 via default_rng(seed)",
        "threads": threads,
    })
    report.notes.append(GREEDY_PROTOCOL)
    summary = report.table("seeds", ["seed", "N", "final_residual", "attempts"])
    pooled_n, pooled_r = [], []
    hi = min(fit_hi, target_n)
    grid = log_spaced(fit_lo, hi, points, integer=True) if hi >= fit_lo else []
    for run in runs:
        summary.add(run.seed, len(run.series), run.series[-1][1], run.attempts)
        for n in grid:
            pooled_n.append(int(n))
            pooled_r.append(run.series[int(n) - 1][1])
        if out is not None:
            write_greedy_dump(run.series, f"{out}.seed{run.seed}.csv")

    fit = fit_power_law(pooled_n, pooled_r)
    report.fits["pooled_residual"] = fit
    report.results = {"pooled_slope": fit.slope, "implied_alpha": -fit.slope}
    print(f"📈 pooled slope {fit.slope:.4f} (r² {fit.r_squared:.4f})")
    return _finish(report, started, out, "Greedy baseline")
