"""
Finitely disk-covered domains: base disks plus the curvilinear triangles
(gaps) enclosed by mutually tangent triples of them.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from scripts.errors import DomainFileError, DomainValidationError, GeometryError, InvalidInputError
from scripts.geometry_core import (
    DEFAULT_TOLERANCE,
    Circle,
    curvilinear_triangle_area,
    inscribed_circle,
    is_tangent,
    tangency_point,
    tangency_residual,
)

AREA_RTOL = 1e-12


@dataclass(frozen=True)
class Gap:
    """Three base-disk indices, stored sorted."""
    members: tuple

    @classmethod
    def of(cls, i, j, k):
        return cls(tuple(sorted((int(i), int(j), int(k)))))


@dataclass(frozen=True)
class Violation:
    kind: str
    members: tuple
    residual: float
    message: str

    def to_dict(self):
        return {"kind": self.kind, "members": list(self.members),
                "residual": self.residual, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def kinds(self):
        return [v.kind for v in self.violations]

    def to_list(self):
        return [v.to_dict() for v in self.violations]

    def describe(self):
        return "\n".join(f"  - {v.kind} {list(v.members)}: {v.message}" for v in self.violations)


@dataclass(frozen=True)
class DiskCoveredDomain:
    base_disks: tuple
    gaps: tuple
    exact_area: float
    name: str = field(default="domain", compare=False)

    @property
    def k(self):
        return len(self.base_disks)

    @property
    def largest_radius(self):
        return max(c.radius for c in self.base_disks)

    def gap_circles(self, gap):
        return tuple(self.base_disks[i] for i in gap.members)

    def bounding_box(self):
        xs = [c.x for c in self.base_disks]
        ys = [c.y for c in self.base_disks]
        rs = [c.radius for c in self.base_disks]
        return (min(x - r for x, r in zip(xs, rs)), min(y - r for y, r in zip(ys, rs)),
                max(x + r for x, r in zip(xs, rs)), max(y + r for y, r in zip(ys, rs)))

    def contains(self, points):
        """Membership in the closed union of base disks and gaps, vectorized over (n, 2) points."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        px, py = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        for c in self.base_disks:
            inside |= (px - c.x) ** 2 + (py - c.y) ** 2 <= c.radius * c.radius
        for gap in self.gaps:
            a, b, c = self.gap_circles(gap)
            inside |= in_curvilinear_triangle(px, py, a, b, c)
        return inside


def in_center_triangle(px, py, a, b, c):
    """Closed triangle of the three centers (sign test, either orientation)."""
    d1 = (px - b.x) * (a.y - b.y) - (a.x - b.x) * (py - b.y)
    d2 = (px - c.x) * (b.y - c.y) - (b.x - c.x) * (py - c.y)
    d3 = (px - a.x) * (c.y - a.y) - (c.x - a.x) * (py - a.y)
    has_neg = (d1 < 0) | (d2 < 0) | (d3 < 0)
    has_pos = (d1 > 0) | (d2 > 0) | (d3 > 0)
    return ~(has_neg & has_pos)


def in_curvilinear_triangle(px, py, a, b, c):
    mask = in_center_triangle(px, py, a, b, c)
    for d in (a, b, c):
        mask &= (px - d.x) ** 2 + (py - d.y) ** 2 >= d.radius * d.radius
    return mask


def compute_exact_area(base_disks, gaps, tol=DEFAULT_TOLERANCE):
    terms = [c.area for c in base_disks]
    for gap in gaps:
        a, b, c = (base_disks[i] for i in gap.members)
        terms.append(curvilinear_triangle_area(a, b, c, tol))
    return math.fsum(terms)


def make_domain(base_disks, gaps=None, tol=DEFAULT_TOLERANCE, name="domain"):
    """
    Assemble a domain. Gaps default to detect_gaps. The area is NaN when a gap
    is geometrically invalid so that validate can still report on it.
    """
    disks = tuple(base_disks)
    if gaps is None:
        gaps = detect_gaps(disks, tol)
    gaps = tuple(g if isinstance(g, Gap) else Gap.of(*g) for g in gaps)
    try:
        area = compute_exact_area(disks, gaps, tol)
    except (GeometryError, IndexError):
        area = float("nan")
    return DiskCoveredDomain(disks, gaps, area, name)


# ==================================================
# VALIDATION
# ==================================================
def _pair_residuals(disks):
    xs = np.array([c.x for c in disks])
    ys = np.array([c.y for c in disks])
    rs = np.array([c.radius for c in disks])
    dist = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    rsum = rs[:, None] + rs[None, :]
    return dist - rsum, rsum


def validate(domain, tol=DEFAULT_TOLERANCE):
    disks = domain.base_disks
    k = len(disks)
    found = []
    if k == 0:
        return ValidationReport((Violation("empty", (), 0.0, "a domain needs at least one disk"),))

    residual, rsum = _pair_residuals(disks)
    slack = tol.absolute + tol.relative * rsum
    for i, j in zip(*np.nonzero(np.triu(residual < -slack, k=1))):
        found.append(Violation("overlap", (int(i), int(j)), float(-residual[i, j]),
                               f"disks {i} and {j} overlap by {-residual[i, j]:.3e}"))

    seen = set()
    for gap in domain.gaps:
        members = gap.members
        if len(set(members)) != 3 or any(not 0 <= m < k for m in members):
            found.append(Violation("bad_index", members, 0.0, f"gap {list(members)} does not name three distinct disks"))
            continue
        if members in seen:
            found.append(Violation("duplicate_gap", members, 0.0, f"gap {list(members)} listed twice"))
            continue
        seen.add(members)

        a, b, c = domain.gap_circles(gap)
        pairs = ((a, b), (b, c), (a, c))
        worst = max(abs(tangency_residual(p, q)) for p, q in pairs)
        if not all(is_tangent(p, q, tol) for p, q in pairs):
            found.append(Violation("not_tangent", members, worst,
                                   f"gap {list(members)} is not a mutually tangent triple (residual {worst:.3e})"))
            continue

        points = [tangency_point(p, q) for p, q in pairs]
        closest = min(math.dist(points[i], points[j]) for i, j in ((0, 1), (1, 2), (0, 2)))
        if closest <= tol.slack(min(a.radius, b.radius, c.radius)):
            found.append(Violation("degenerate_gap", members, closest,
                                   f"gap {list(members)} has coincident tangency points"))
            continue

        witness = inscribed_circle(a, b, c, tol)
        for m, d in enumerate(disks):
            if m not in members and math.hypot(witness.x - d.x, witness.y - d.y) < d.radius:
                found.append(Violation("covered_gap", members, 0.0,
                                       f"gap {list(members)} lies inside disk {m}"))
                break

    if not any(v.kind in ("not_tangent", "bad_index", "degenerate_gap") for v in found):
        expected = compute_exact_area(disks, domain.gaps, tol)
        if not abs(domain.exact_area - expected) <= AREA_RTOL * expected:
            found.append(Violation("area_mismatch", (), abs(domain.exact_area - expected),
                                   f"exact_area {domain.exact_area!r} != {expected!r}"))
    return ValidationReport(tuple(found))


def detect_gaps(base_disks, tol=DEFAULT_TOLERANCE):
    """Triangles of the tangency graph whose curvilinear region no other disk covers."""
    disks = tuple(base_disks)
    k = len(disks)
    if k < 3:
        return []
    residual, rsum = _pair_residuals(disks)
    slack = tol.absolute + tol.relative * rsum
    off_diagonal = ~np.eye(k, dtype=bool)
    if np.any((residual < -slack) & off_diagonal):
        i, j = np.argwhere((residual < -slack) & off_diagonal)[0]
        raise GeometryError(f"base disks {i} and {j} overlap; gaps are undefined")

    tangent = (np.abs(residual) <= slack) & off_diagonal
    neighbours = [set(np.nonzero(tangent[i])[0].tolist()) for i in range(k)]
    gaps = []
    for i in range(k):
        for j in sorted(n for n in neighbours[i] if n > i):
            for l in sorted(n for n in neighbours[i] & neighbours[j] if n > j):
                witness = inscribed_circle(disks[i], disks[j], disks[l], tol)
                covered = any(
                    m not in (i, j, l) and math.hypot(witness.x - d.x, witness.y - d.y) < d.radius
                    for m, d in enumerate(disks)
                )
                if not covered:
                    gaps.append(Gap((i, j, l)))
    return sorted(gaps, key=lambda g: g.members)


def _checked(domain, tol=DEFAULT_TOLERANCE):
    report = validate(domain, tol)
    if not report.ok:
        raise GeometryError(f"builder produced an invalid domain:\n{report.describe()}")
    return domain


# ==================================================
# BUILDERS
# ==================================================
def build_three_tangent(r1, r2, r3, tol=DEFAULT_TOLERANCE):
    """c1 at the origin, c2 on the positive x-axis, c3 above both."""
    for r in (r1, r2, r3):
        if not r > 0:
            raise InvalidInputError(f"radii must be positive, got {(r1, r2, r3)}")
    d12, d13, d23 = r1 + r2, r1 + r3, r2 + r3
    x3 = (d13 * d13 - d23 * d23 + d12 * d12) / (2.0 * d12)
    y3 = math.sqrt(max(d13 * d13 - x3 * x3, 0.0))
    disks = (Circle.make(0.0, 0.0, r1), Circle.make(d12, 0.0, r2), Circle.make(x3, y3, r3))
    return _checked(make_domain(disks, [Gap((0, 1, 2))], tol, name=f"three_tangent({r1:g},{r2:g},{r3:g})"), tol)


def build_square_lattice(m, n, tol=DEFAULT_TOLERANCE):
    """Unit disks at (2i, 2j) with a filler of radius sqrt(2)-1 in every cell."""
    if m < 1 or n < 1:
        raise InvalidInputError(f"lattice needs at least one cell, got {(m, n)}")
    filler = math.sqrt(2.0) - 1.0
    disks = [Circle.make(2.0 * i, 2.0 * j, 1.0) for j in range(n + 1) for i in range(m + 1)]
    disks += [Circle.make(2.0 * i + 1.0, 2.0 * j + 1.0, filler) for j in range(n) for i in range(m)]
    return _checked(make_domain(disks, None, tol, name=f"square_lattice({m},{n})"), tol)


def build_hex_lattice(rows, cols, tol=DEFAULT_TOLERANCE):
    """
    rows strips of triangles between rows+1 rows of unit disks; even rows
    hold cols disks, odd rows cols-1 disks nested between them.

    Strips stack vertically, so (2, 2) is five disks with two gaps (one
    triangle pointing up, one down) rather than a four-disk rhombus; (1, 2)
    is the single three-disk triangle.
    """
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"hex lattice needs rows, cols >= 1, got {(rows, cols)}")
    h = math.sqrt(3.0)
    disks = []
    for j in range(rows + 1):
        if j % 2 == 0:
            disks += [Circle.make(2.0 * i, j * h, 1.0) for i in range(cols)]
        else:
            disks += [Circle.make(2.0 * i + 1.0, j * h, 1.0) for i in range(cols - 1)]
    return _checked(make_domain(disks, None, tol, name=f"hex_lattice({rows},{cols})"), tol)


def build_lens(r_upper=0.29, r_lower=0.2, tol=DEFAULT_TOLERANCE):
    """Two unit disks touching at (1, 0) with a small disk nested above and below."""
    if not (r_upper > 0 and r_lower > 0):
        raise InvalidInputError("lens radii must be positive")
    disks = (
        Circle.make(0.0, 0.0, 1.0),
        Circle.make(2.0, 0.0, 1.0),
        Circle.make(1.0, math.sqrt((1.0 + r_upper) ** 2 - 1.0), r_upper),
        Circle.make(1.0, -math.sqrt((1.0 + r_lower) ** 2 - 1.0), r_lower),
    )
    return _checked(make_domain(disks, None, tol, name=f"lens({r_upper:g},{r_lower:g})"), tol)


def build_single_disk(x=0.0, y=0.0, r=1.0):
    return _checked(make_domain((Circle.make(x, y, r),), (), name="single_disk"))


# ==================================================
# MONTE-CARLO AREA CROSS-CHECK
# ==================================================
def monte_carlo_area(domain, n, rng, batch=200_000):
    """Hit-or-miss area over the bounding box: (estimate, standard error)."""
    x0, y0, x1, y1 = domain.bounding_box()
    box = (x1 - x0) * (y1 - y0)
    hits = 0
    done = 0
    while done < n:
        size = min(batch, n - done)
        pts = np.column_stack((rng.uniform(x0, x1, size), rng.uniform(y0, y1, size)))
        hits += int(np.count_nonzero(domain.contains(pts)))
        done += size
    p = hits / n
    return box * p, box * math.sqrt(p * (1.0 - p) / n)


# ==================================================
# FILES
# ==================================================
class DiskEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: float
    y: float
    r: float = Field(gt=0)


class DomainFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    disks: list[DiskEntry] = Field(min_length=1)
    gaps: list[tuple[int, int, int]] | None = None


def domain_from_document(document, tol=DEFAULT_TOLERANCE, name="domain"):
    """Validate a parsed domain document and build the domain, detecting gaps if absent."""
    try:
        spec = DomainFile.model_validate(document)
    except ValidationError as e:
        raise DomainFileError(f"malformed domain document: {e}") from e

    disks = tuple(Circle.make(d.x, d.y, d.r) for d in spec.disks)
    disk_report = validate(DiskCoveredDomain(disks, (), math.fsum(c.area for c in disks)), tol)
    if not disk_report.ok:
        raise DomainValidationError(f"domain {name!r} failed validation:\n{disk_report.describe()}", disk_report)

    gaps = None if spec.gaps is None else [Gap.of(*g) for g in spec.gaps]
    domain = make_domain(disks, gaps, tol, name=name)
    report = validate(domain, tol)
    if not report.ok:
        raise DomainValidationError(f"domain {name!r} failed validation:\n{report.describe()}", report)
    return domain


def load_domain(path, tol=DEFAULT_TOLERANCE):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DomainFileError(f"cannot read domain file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DomainFileError(f"domain file {path} is not valid JSON: {e}") from e
    return domain_from_document(document, tol, name=path.stem)


def domain_to_document(domain):
    return {
        "disks": [{"x": c.x, "y": c.y, "r": c.radius} for c in domain.base_disks],
        "gaps": [list(g.members) for g in domain.gaps],
    }


def save_domain(domain, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(domain_to_document(domain), f, indent=2)
