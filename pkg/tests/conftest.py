import json
import math

import pytest

from scripts.apollonian_packing import PackingGenerator, StopCriterion, generate_until
from scripts.domain_model import build_single_disk, build_square_lattice, build_three_tangent

SQRT3 = math.sqrt(3.0)
THREE_UNIT_AREA = 3 * math.pi + SQRT3 - math.pi / 2
THREE_UNIT_GAP = SQRT3 - math.pi / 2
INNER_RADIUS = 2 / SQRT3 - 1


@pytest.fixture(scope="session")
def three_unit():
    return build_three_tangent(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def square_2x2():
    return build_square_lattice(2, 2)


@pytest.fixture(scope="session")
def unit_disk_at_one():
    """B((1, 0), 1)."""
    return build_single_disk(1.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def three_unit_packing(three_unit):
    """First 2000 circles of the three-unit-circle domain."""
    _, emitted = generate_until(PackingGenerator(three_unit), StopCriterion(max_count=2000))
    return emitted


@pytest.fixture
def write_domain(tmp_path):
    def write(document, name="domain.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path
    return write


@pytest.fixture
def three_unit_document():
    return {
        "disks": [
            {"x": 0.0, "y": 0.0, "r": 1.0},
            {"x": 2.0, "y": 0.0, "r": 1.0},
            {"x": 1.0, "y": SQRT3, "r": 1.0},
        ]
    }


@pytest.fixture
def overlapping_document():
    return {
        "disks": [
            {"x": 0.0, "y": 0.0, "r": 1.0},
            {"x": 1.5, "y": 0.0, "r": 1.0},
        ]
    }
