import json

import pytest

from scripts.apollonian_packing import StopCriterion, read_packing_dump
from scripts.errors import InsufficientDataError, InvalidInputError
from scripts.experiments import (
    cmd_converge,
    cmd_fit_counting,
    cmd_fit_residual,
    cmd_generate,
    cmd_greedy,
    cmd_lp_check,
    cmd_validate,
    parallel_map,
)
from scripts.exponent_fit import log_spaced
from scripts.greedy_baseline import ConvexRegion
from scripts.harmonic import HarmonicFn
from scripts.reports import read_table

Z0 = complex(10, 10)


def test_parallel_map_keeps_order():
    assert parallel_map(lambda v: v * v, range(20), threads=4) == [v * v for v in range(20)]
    assert parallel_map(lambda v: v, [], threads=4) == []


# ==================================================
# generate / validate
# ==================================================
def test_generate_dump_and_report(tmp_path, three_unit):
    out = tmp_path / "packing.csv"
    report = cmd_generate(three_unit, StopCriterion(max_count=10), out=out)
    rows = read_packing_dump(out)
    assert len(rows) == 10
    radii = [r.circle.radius for r in rows]
    assert radii == sorted(radii, reverse=True)
    document = json.loads((tmp_path / "packing.csv.json").read_text())
    assert document["command"] == "generate"
    assert document["results"]["stats"]["N"] == 10
    assert report.results["audit"]["radii_non_increasing"]


def test_generate_by_curvature(three_unit):
    report = cmd_generate(three_unit, StopCriterion(max_curvature=1.0))
    assert report.results["stats"]["N"] == 3


def test_validate(write_domain, three_unit_document, overlapping_document):
    good = cmd_validate(write_domain(three_unit_document))
    assert good.results["ok"]
    assert good.results["gaps"] == [[0, 1, 2]]
    bad = cmd_validate(write_domain(overlapping_document, name="bad.json"))
    assert not bad.results["ok"]
    assert [v["kind"] for v in bad.results["violations"]] == ["overlap"]


# ==================================================
# converge
# ==================================================
def test_constant_error_equals_residual(three_unit):
    report = cmd_converge(three_unit, HarmonicFn.constant(1.0), [3, 10, 100, 1000])
    table = report.tables["convergence"]
    assert table.column("true_error") == table.column("residual_bound")
    assert all(table.column("honest"))
    assert report.config["oracle"] == "exact"


def test_converge_certificates_hold(three_unit):
    u = HarmonicFn.re_power(2, Z0).normalized(three_unit)
    report = cmd_converge(three_unit, u, [10, 100, 1000, 2000], mc_baseline=True, l1=True, seed=4,
                           mc_samples=100_000)
    assert report.results["all_honest"] is True
    table = report.tables["convergence"]
    assert "mc_error" in table.fields and "error_over_l1" in table.fields
    bounds = table.column("certified_bound")
    assert all(b < a for a, b in zip(bounds, bounds[1:]))


def test_converge_is_thread_independent(three_unit):
    u = HarmonicFn.log_pole(Z0)
    grid = [10, 50, 100, 500]
    one = cmd_converge(three_unit, u, grid, threads=1, mc_baseline=True, seed=2)
    four = cmd_converge(three_unit, u, grid, threads=4, mc_baseline=True, seed=2)
    assert one.tables["convergence"].rows == four.tables["convergence"].rows


def test_converge_non_harmonic(three_unit):
    report = cmd_converge(three_unit, HarmonicFn.radial_square(), [10, 100])
    assert report.results["certificate"] == "inapplicable"
    assert report.tables["convergence"].column("certified_bound") == [None, None]


def test_converge_rejects_bad_grid(three_unit):
    with pytest.raises(InvalidInputError):
        cmd_converge(three_unit, HarmonicFn.constant(1), [100, 10])
    with pytest.raises(InvalidInputError):
        cmd_converge(three_unit, HarmonicFn.constant(1), [])


def test_converge_rule_dump(tmp_path, three_unit):
    dump = tmp_path / "rule.csv"
    cmd_converge(three_unit, HarmonicFn.constant(1), [10, 20], rule_dump=dump)
    assert len(dump.read_text().splitlines()) == 22


# ==================================================
# fits
# ==================================================
def test_pre_asymptotic_residual_fit(three_unit):
    with pytest.raises(InsufficientDataError):
        cmd_fit_residual(three_unit, 1, 20, points=5)
    report = cmd_fit_residual(three_unit, 1, 20)
    assert report.fits["residual"].low_confidence


def test_short_counting_range_is_flagged(three_unit):
    report = cmd_fit_counting(three_unit, 100, 500, points=20)
    fit = report.fits["counting"]
    assert fit.low_confidence
    assert "range spans less than one decade" in fit.reasons
    bands = report.tables["bands"]
    assert bands.column("band") == [0, 1]


def test_report_tables_round_trip(tmp_path, three_unit):
    out = tmp_path / "residual.json"
    report = cmd_fit_residual(three_unit, 10, 2000, points=15, out=out)
    back = read_table(tmp_path / "residual.json.residual.csv")
    assert back.fields == ["N", "residual"]
    assert back.rows == report.tables["residual"].rows
    document = json.loads(out.read_text())
    assert document["fits"]["residual"]["slope"] == report.fits["residual"].slope
    assert set(document) == {"command", "version", "config", "results", "fits", "tables", "notes", "wall_clock"}


def test_band_ratio_must_exceed_one(three_unit):
    for ratio in (1.0, 0.5):
        with pytest.raises(InvalidInputError):
            cmd_fit_counting(three_unit, 100, 1000, points=20, band_ratio=ratio)


# ==================================================
# L^p
# ==================================================
def test_lp_check_with_nothing_removed(three_unit):
    report = cmd_lp_check(three_unit, 0, [1, 2, 3], samples=1000)
    table = report.tables["lp"]
    assert table.column("measured") == table.column("expected")
    assert report.results["all_within_band"]


def test_lp_check_within_band(three_unit):
    report = cmd_lp_check(three_unit, 200, [1, 2, 3], samples=200_000, seed=1)
    assert report.results["all_within_band"]


def test_lp_check_rejects_small_p(three_unit):
    with pytest.raises(InvalidInputError):
        cmd_lp_check(three_unit, 10, [0.5])


# ==================================================
# greedy
# ==================================================
def test_greedy_needs_three_seeds():
    with pytest.raises(InvalidInputError):
        cmd_greedy(ConvexRegion.square(), 100, [1, 2])
    with pytest.raises(InvalidInputError):
        cmd_greedy(ConvexRegion.square(), 100, [1, 1, 2])


def test_greedy_small_run(tmp_path):
    out = tmp_path / "greedy.json"
    report = cmd_greedy(ConvexRegion.square(), 1000, [1, 2, 3], fit_lo=10, fit_hi=1000, points=20, out=out)
    assert report.results["pooled_slope"] < 0
    assert report.results["implied_alpha"] == -report.results["pooled_slope"]
    for seed in (1, 2, 3):
        assert (tmp_path / f"greedy.json.seed{seed}.csv").exists()
    assert report.tables["seeds"].column("N") == [1000, 1000, 1000]


# ==================================================
# acceptance runs
# ==================================================
@pytest.mark.slow
@pytest.mark.parametrize("domain_name", ["three_unit", "square_2x2"])
def test_residual_exponent(domain_name, request):
    domain = request.getfixturevalue(domain_name)
    report = cmd_fit_residual(domain, 1_000, 100_000)
    fit = report.fits["residual"]
    assert -0.586 <= fit.slope <= -0.486
    assert fit.r_squared >= 0.99


@pytest.mark.slow
def test_counting_exponent(three_unit):
    report = cmd_fit_counting(three_unit, 1e2, 1e4)
    fit = report.fits["counting"]
    assert 1.27 <= fit.slope <= 1.34
    assert fit.r_squared >= 0.99
    # doubling T multiplies the count by about 2^1.3057
    bands = report.tables["bands"]
    late = [row for row in bands.to_records() if row["T_low"] >= 1e3 and row["ratio_to_previous"] is not None]
    assert late
    for row in late:
        assert row["ratio_to_previous"] == pytest.approx(2 ** 1.3057, rel=0.15)


@pytest.mark.slow
def test_measured_error_decay(three_unit):
    grid = log_spaced(1_000, 100_000, 13, integer=True).tolist()
    report = cmd_converge(three_unit, HarmonicFn.re_power(2, Z0), grid)
    assert report.results["all_honest"]
    assert report.fits["true_error"].slope <= -0.45
    assert -0.586 <= report.fits["certified_bound"].slope <= -0.486


@pytest.mark.slow
def test_deep_lp_identity(three_unit):
    report = cmd_lp_check(three_unit, 10_000, [1, 2, 3], seed=3)
    assert report.results["all_within_band"]


@pytest.mark.slow
@pytest.mark.parametrize("region", [ConvexRegion.square(), ConvexRegion.disk()], ids=["square", "disk"])
def test_greedy_acceptance(region):
    report = cmd_greedy(region, 10_000, [1, 2, 3, 4, 5])
    assert -0.35 <= report.results["pooled_slope"] <= -0.10
