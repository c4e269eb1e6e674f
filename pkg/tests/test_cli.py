import json
from types import SimpleNamespace

import pytest

import cli
from cli import build_parser, main, resolve_domain_path
from scripts import config


def test_bundled_domain_names_resolve():
    assert resolve_domain_path("three_tangent") == config.DOMAIN_DIR / "three_tangent.json"
    assert resolve_domain_path("three_tangent.json") == config.DOMAIN_DIR / "three_tangent.json"


def test_generate_writes_dump(tmp_path):
    out = tmp_path / "packing.csv"
    assert main(["generate", "--domain", "three_tangent", "--max-count", "10", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 11
    report = json.loads((tmp_path / "packing.csv.json").read_text())
    assert report["config"]["stop"] == {"max_count": 10}


def test_converge_with_explicit_grid(tmp_path):
    out = tmp_path / "converge.json"
    code = main(["converge", "--domain", "three_tangent", "--function", "re:2@10,10", "--normalize",
                 "--grid", "10,100", "--sup", "closed", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["results"]["all_honest"] is True
    assert (tmp_path / "converge.json.convergence.csv").exists()


def test_usage_errors_exit_1(capsys):
    assert main(["generate", "--domain", "three_tangent"]) == 1
    assert main(["generate", "--domain", "three_tangent", "--max-count", "3", "--max-curvature", "2"]) == 1
    assert main(["no-such-command"]) == 1
    assert main(["converge", "--domain", "three_tangent", "--function", "sin(x)", "--grid", "10"]) == 1
    assert main(["greedy", "--seeds", "1", "2"]) == 1
    assert "error" in capsys.readouterr().err


def test_validation_failures_exit_2(write_domain, overlapping_document, tmp_path):
    bad = write_domain(overlapping_document)
    assert main(["validate", "--domain", str(bad)]) == 2
    assert main(["generate", "--domain", str(bad), "--max-count", "3"]) == 2
    assert main(["validate", "--domain", str(tmp_path / "missing.json")]) == 2


def test_validate_ok(write_domain, three_unit_document, tmp_path):
    out = tmp_path / "validate.json"
    assert main(["validate", "--domain", str(write_domain(three_unit_document)), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["results"]["ok"] is True


def test_numeric_failure_exits_3():
    assert main(["generate", "--domain", "three_tangent", "--min-residual", "1e-15"]) == 3


def test_parser_defaults():
    args = build_parser().parse_args(["lp-check", "--domain", "three_tangent", "--n", "100"])
    assert args.p == [1.0, 2.0, 3.0]
    assert args.tolerance_rel == config.TOLERANCE_REL
    assert args.threads == config.THREADS


def test_band_ratio_of_one_is_a_usage_error():
    argv = ["fit-counting", "--domain", "three_tangent", "--t-min", "100", "--t-max", "1000", "--band-ratio", "1"]
    assert main(argv) == 1


@pytest.mark.parametrize("honest, code", [(True, 0), (None, 0), (False, 3)])
def test_broken_certificate_exits_3(monkeypatch, honest, code):
    monkeypatch.setattr(cli, "cmd_converge", lambda *args, **kwargs: SimpleNamespace(results={"all_honest": honest}))
    argv = ["converge", "--domain", "three_tangent", "--function", "const:1", "--grid", "10"]
    assert main(argv) == code
