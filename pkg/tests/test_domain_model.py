import math

import numpy as np
import pytest

from scripts.domain_model import (
    DiskCoveredDomain,
    Gap,
    build_hex_lattice,
    build_lens,
    build_square_lattice,
    build_three_tangent,
    detect_gaps,
    domain_from_document,
    load_domain,
    make_domain,
    monte_carlo_area,
    save_domain,
    validate,
)
from scripts.errors import DomainFileError, DomainValidationError, GeometryError, InvalidInputError
from scripts.geometry_core import Circle, curvilinear_triangle_area, inscribed_circle

from tests.conftest import SQRT3, THREE_UNIT_AREA

SQUARE_GAP = 1 - math.pi / 4 - math.pi * (3 - 2 * math.sqrt(2)) / 4


def test_three_unit_domain(three_unit):
    assert three_unit.k == 3
    assert [g.members for g in three_unit.gaps] == [(0, 1, 2)]
    assert three_unit.exact_area == pytest.approx(THREE_UNIT_AREA, rel=1e-12)
    assert validate(three_unit).ok


def test_three_tangent_unequal_radii():
    domain = build_three_tangent(1, 2, 3)
    c3 = domain.base_disks[2]
    assert (c3.x, c3.y) == pytest.approx((0.0, 4.0), abs=1e-12)
    assert domain.base_disks[1].center == (3.0, 0.0)


def test_three_tangent_rejects_bad_radius():
    with pytest.raises(InvalidInputError):
        build_three_tangent(1, 0, 1)


def test_square_lattice_single_cell():
    domain = build_square_lattice(1, 1)
    assert domain.k == 5
    assert len(domain.gaps) == 4
    filler = math.sqrt(2) - 1
    expected = 4 * math.pi + math.pi * filler ** 2 + 4 * SQUARE_GAP
    assert domain.exact_area == pytest.approx(expected, rel=1e-12)


def test_square_lattice_2x2(square_2x2):
    assert square_2x2.k == 13
    assert len(square_2x2.gaps) == 16
    assert validate(square_2x2).ok


def test_hex_lattice_counts():
    small = build_hex_lattice(1, 2)
    assert (small.k, len(small.gaps)) == (3, 1)
    assert small.exact_area == pytest.approx(THREE_UNIT_AREA, rel=1e-12)
    two_rows = build_hex_lattice(2, 2)
    assert (two_rows.k, len(two_rows.gaps)) == (5, 2)
    wide = build_hex_lattice(1, 3)
    assert (wide.k, len(wide.gaps)) == (5, 3)


def test_lens_has_two_gaps():
    lens = build_lens()
    assert lens.k == 4
    assert [g.members for g in lens.gaps] == [(0, 1, 2), (0, 1, 3)]
    assert validate(lens).ok


def test_contains(three_unit):
    inner = inscribed_circle(*three_unit.base_disks)
    pts = np.array([[0.0, 0.0], [inner.x, inner.y], [1.0, 0.3], [5.0, 5.0], [1.0, -1.5]])
    assert three_unit.contains(pts).tolist() == [True, True, True, False, False]


def test_detect_gaps_refuses_overlap():
    with pytest.raises(GeometryError):
        detect_gaps([Circle.make(0, 0, 1), Circle.make(1, 0, 1), Circle.make(0, 3, 1)])


def test_validate_reports_each_violation_kind():
    disks = (Circle.make(0, 0, 1), Circle.make(2, 0, 1), Circle.make(1, SQRT3, 1), Circle.make(10, 0, 1))
    bad = make_domain(disks, [Gap((0, 1, 2)), Gap((0, 1, 2)), Gap((0, 1, 3)), Gap((0, 1, 7))])
    kinds = validate(bad).kinds()
    assert "duplicate_gap" in kinds
    assert "not_tangent" in kinds
    assert "bad_index" in kinds

    overlap = DiskCoveredDomain((Circle.make(0, 0, 1), Circle.make(1, 0, 1)), (), 2 * math.pi)
    assert validate(overlap).kinds() == ["overlap"]

    good = build_three_tangent(1, 1, 1)
    wrong_area = DiskCoveredDomain(good.base_disks, good.gaps, good.exact_area * 1.01)
    assert validate(wrong_area).kinds() == ["area_mismatch"]


def test_document_round_trip(tmp_path, three_unit):
    path = tmp_path / "three.json"
    save_domain(three_unit, path)
    loaded = load_domain(path)
    assert loaded == three_unit
    assert loaded.name == "three"


def test_document_detects_gaps_when_absent(three_unit_document):
    domain = domain_from_document(three_unit_document)
    assert [g.members for g in domain.gaps] == [(0, 1, 2)]


def test_overlapping_document_carries_report(write_domain, overlapping_document):
    with pytest.raises(DomainValidationError) as info:
        load_domain(write_domain(overlapping_document))
    assert info.value.report.kinds() == ["overlap"]
    assert info.value.exit_code == 2


def test_malformed_documents(write_domain, three_unit_document):
    with pytest.raises(DomainFileError):
        load_domain(write_domain({**three_unit_document, "colour": "red"}))
    with pytest.raises(DomainFileError):
        load_domain(write_domain({"disks": [{"x": 0, "y": 0, "r": -1}]}))
    with pytest.raises(DomainFileError):
        load_domain(write_domain({"disks": []}))
    bad_json = write_domain({}, name="broken.json")
    bad_json.write_text("{not json", encoding="utf-8")
    with pytest.raises(DomainFileError):
        load_domain(bad_json)
    with pytest.raises(DomainFileError):
        load_domain(bad_json.parent / "missing.json")


def test_monte_carlo_area_agrees(three_unit):
    estimate, stderr = monte_carlo_area(three_unit, 200_000, np.random.default_rng(3))
    assert abs(estimate - three_unit.exact_area) <= 4 * stderr


@pytest.mark.parametrize("builder", [lambda: build_square_lattice(1, 1), lambda: build_hex_lattice(2, 3), build_lens])
def test_detect_gaps_ignores_disk_order(builder):
    disks = builder().base_disks
    order = np.random.default_rng(8).permutation(len(disks)).tolist()
    shuffled = [disks[i] for i in order]
    relabeled = {tuple(sorted(order[m] for m in g.members)) for g in detect_gaps(shuffled)}
    assert relabeled == {g.members for g in detect_gaps(disks)}


def test_validate_flags_both_overlapping_pairs():
    disks = (Circle.make(0, 0, 1), Circle.make(2, 0, 1), Circle.make(1, SQRT3 - 0.1, 1))
    report = validate(DiskCoveredDomain(disks, (), 3 * math.pi))
    assert report.kinds() == ["overlap", "overlap"]
    assert sorted(v.members for v in report.violations) == [(0, 2), (1, 2)]


def test_hex_gaps_are_congruent():
    domain = build_hex_lattice(3, 4)
    assert domain.gaps
    for gap in domain.gaps:
        area = curvilinear_triangle_area(*domain.gap_circles(gap))
        assert area == pytest.approx(SQRT3 - math.pi / 2, rel=1e-12)
