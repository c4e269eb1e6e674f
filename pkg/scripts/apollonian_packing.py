"""
The size-ordered disk sequence E_1, E_2, ... of a finitely disk-covered domain.

Base disks and the inscribed circles of all pending gaps share one max-heap
keyed by radius. A child gap's inscribed circle is always strictly smaller
than its parent's, so popping largest-first yields the globally size-sorted
union of the base disks and every gap's Apollonian packing.
"""

import csv
import heapq
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from tqdm import tqdm

from scripts import config
from scripts.domain_model import in_curvilinear_triangle
from scripts.errors import GeometryError, InvalidInputError, NumericalLimitError, PackingGeometryError
from scripts.geometry_core import DEFAULT_TOLERANCE, Circle, descartes_residual, inscribed_circle

# refusing residual targets this close to the bookkeeping precision
RESIDUAL_FLOOR = 1e-9


@dataclass(frozen=True)
class EmittedCircle:
    index: int
    circle: Circle
    parents: tuple | None  # emission indices, None for base disks
    root_gap: int = -1
    base_index: int = -1

    @property
    def is_base(self):
        return self.base_index >= 0


@dataclass(frozen=True)
class StopCriterion:
    max_count: int | None = None
    max_curvature: float | None = None
    min_residual: float | None = None

    def __post_init__(self):
        given = [v for v in (self.max_count, self.max_curvature, self.min_residual) if v is not None]
        if len(given) != 1:
            raise InvalidInputError("exactly one of max_count, max_curvature, min_residual is required")
        if self.max_count is not None and self.max_count < 0:
            raise InvalidInputError(f"max_count must be >= 0, got {self.max_count}")
        if self.max_curvature is not None and not self.max_curvature > 0:
            raise InvalidInputError(f"max_curvature must be positive, got {self.max_curvature}")
        if self.min_residual is not None and not self.min_residual > 0:
            raise InvalidInputError(f"min_residual must be positive, got {self.min_residual}")

    def describe(self):
        if self.max_count is not None:
            return {"max_count": self.max_count}
        if self.max_curvature is not None:
            return {"max_curvature": self.max_curvature}
        return {"min_residual": self.min_residual}


@dataclass(frozen=True)
class PackingStats:
    N: int
    max_curvature_emitted: float
    packed_area: float
    residual_area: float

    def to_dict(self):
        return {"N": self.N, "max_curvature_emitted": self.max_curvature_emitted,
                "packed_area": self.packed_area, "residual_area": self.residual_area}


class _Pending(NamedTuple):
    circle: Circle
    parents: tuple  # base indices when from_base, else emission indices
    from_base: bool
    root_gap: int
    base_index: int


class RunningSum:
    """Neumaier-compensated running sum."""

    def __init__(self):
        self.total = 0.0
        self._carry = 0.0

    def add(self, value):
        t = self.total + value
        if abs(self.total) >= abs(value):
            self._carry += (self.total - t) + value
        else:
            self._carry += (value - t) + self.total
        self.total = t

    @property
    def value(self):
        return self.total + self._carry


class PackingGenerator:
    """Iterator over the size-ordered disks of a domain; next(gen) returns a Circle."""

    def __init__(self, domain, tol=DEFAULT_TOLERANCE, min_radius_factor=config.MIN_RADIUS_FACTOR):
        self.domain = domain
        self.tol = tol
        self.min_radius = min_radius_factor * domain.largest_radius
        self.emitted = []
        self._frontier = []
        self._seq = 0
        self._base_emission = {}
        self._packed = RunningSum()
        self._failure = None

        for i, disk in enumerate(domain.base_disks):
            self._push(_Pending(disk, (), True, -1, i))
        for g, gap in enumerate(domain.gaps):
            a, b, c = domain.gap_circles(gap)
            self._push(_Pending(inscribed_circle(a, b, c, tol), gap.members, True, g, -1))

    def _push(self, pending):
        c = pending.circle
        heapq.heappush(self._frontier, (-c.radius, c.x, c.y, self._seq, pending))
        self._seq += 1

    def __iter__(self):
        return self

    def __next__(self):
        if self._failure is not None:
            raise self._failure
        if not self._frontier:
            raise StopIteration
        return self._emit().circle

    @property
    def exhausted(self):
        return not self._frontier

    def peek(self):
        return self._frontier[0][4].circle if self._frontier else None

    @property
    def packed_area(self):
        return self._packed.value

    @property
    def residual_area(self):
        return self.domain.exact_area - self._packed.value

    def stats(self):
        kappa = self.emitted[-1].circle.curvature if self.emitted else 0.0
        return PackingStats(len(self.emitted), kappa, self.packed_area, self.residual_area)

    def _emit(self):
        entry = heapq.heappop(self._frontier)
        pending = entry[4]
        circle = pending.circle
        if circle.radius < self.min_radius:
            heapq.heappush(self._frontier, entry)
            raise NumericalLimitError(
                f"next circle has radius {circle.radius:.3e}, below the guard {self.min_radius:.3e}"
            )

        index = len(self.emitted)
        if pending.base_index >= 0:
            record = EmittedCircle(index, circle, None, -1, pending.base_index)
            self._base_emission[pending.base_index] = index
        else:
            parents = pending.parents
            if pending.from_base:
                parents = tuple(self._base_emission[m] for m in parents)
            record = EmittedCircle(index, circle, parents, pending.root_gap, -1)
        self.emitted.append(record)
        self._packed.add(circle.area)

        if record.parents is not None:
            a, b, c = record.parents
            for p, q in ((a, b), (b, c), (a, c)):
                cp, cq = self.emitted[p].circle, self.emitted[q].circle
                try:
                    child = inscribed_circle(cp, cq, circle, self.tol)
                except GeometryError as e:
                    self._failure = PackingGeometryError(
                        f"packing halted after {len(self.emitted)} emissions: {e}",
                        {"emitted": len(self.emitted), "parents": [p, q, index],
                         "circles": [tuple(cp), tuple(cq), tuple(circle)]},
                    )
                    raise self._failure from e
                self._push(_Pending(child, (p, q, index), False, record.root_gap, -1))
        return record


def prefix_length(emitted, domain, stop):
    """Length of the shortest prefix of `emitted` that satisfies `stop`."""
    if stop.max_count is not None:
        return min(stop.max_count, len(emitted))
    if stop.max_curvature is not None:
        n = 0
        while n < len(emitted) and emitted[n].circle.curvature <= stop.max_curvature:
            n += 1
        return n
    running = RunningSum()
    for n, e in enumerate(emitted):
        if domain.exact_area - running.value <= stop.min_residual:
            return n
        running.add(e.circle.area)
    return len(emitted)


def _advance(gen, stop, progress=False):
    domain = gen.domain
    if stop.min_residual is not None and stop.min_residual < RESIDUAL_FLOOR * domain.exact_area:
        raise NumericalLimitError(
            f"min_residual {stop.min_residual:.3e} is below the achievable precision "
            f"{RESIDUAL_FLOOR * domain.exact_area:.3e}"
        )
    if stop.max_count is not None and stop.max_count > config.MAX_EMISSIONS:
        raise NumericalLimitError(f"max_count {stop.max_count} exceeds the limit of {config.MAX_EMISSIONS} emissions")
    with tqdm(disable=not progress, unit="circle", desc="packing") as bar:
        while not gen.exhausted:
            if stop.max_count is not None and len(gen.emitted) >= stop.max_count:
                break
            if stop.max_curvature is not None and gen.peek().curvature > stop.max_curvature:
                break
            if stop.min_residual is not None and gen.residual_area <= stop.min_residual:
                break
            if len(gen.emitted) >= config.MAX_EMISSIONS:
                raise NumericalLimitError(
                    f"stop criterion not reached within {config.MAX_EMISSIONS} emissions "
                    f"(curvature {gen.peek().curvature:.3e}, residual {gen.residual_area:.3e})"
                )
            next(gen)
            bar.update(1)


def generate_until(gen, stop, progress=False):
    """Advance `gen` until `stop` triggers; returns (PackingStats, emitted prefix)."""
    _advance(gen, stop, progress)
    n = prefix_length(gen.emitted, gen.domain, stop)
    emitted = tuple(gen.emitted[:n])
    return packing_stats(emitted, gen.domain), emitted


def packing_stats(emitted, domain):
    packed = math.fsum(e.circle.area for e in emitted)
    kappa = emitted[-1].circle.curvature if emitted else 0.0
    return PackingStats(len(emitted), kappa, packed, domain.exact_area - packed)


# ==================================================
# QUERIES
# ==================================================
def _sorted_curvatures(emitted):
    return np.sort(np.fromiter((e.circle.curvature for e in emitted), dtype=float, count=len(emitted)))


def count_by_curvature(emitted, T):
    """#{i : kappa(E_i) <= T}. The caller guarantees `emitted` is complete up to T."""
    return int(np.searchsorted(_sorted_curvatures(emitted), T, side="right"))


def counts_by_curvature(emitted, thresholds):
    kappas = _sorted_curvatures(emitted)
    return np.searchsorted(kappas, np.asarray(thresholds, dtype=float), side="right")


def curvature_band_counts(emitted, T0, ratio, bands):
    """Counts of curvature in [T0 ratio^j, T0 ratio^(j+1)) for j < bands."""
    if bands < 0 or not T0 > 0 or not ratio > 1:
        raise InvalidInputError(f"need T0 > 0, ratio > 1, bands >= 0; got {(T0, ratio, bands)}")
    if bands == 0:
        return []
    kappas = _sorted_curvatures(emitted)
    edges = T0 * ratio ** np.arange(bands + 1, dtype=float)
    positions = np.searchsorted(kappas, edges, side="left")
    return np.diff(positions).astype(int).tolist()


def audit_packing(emitted, tol=DEFAULT_TOLERANCE):
    """Worst Descartes defect, worst tangency residual / slack, and size ordering."""
    worst_descartes = 0.0
    worst_tangency = 0.0
    for e in emitted:
        if e.parents is None:
            continue
        c = e.circle
        parents = [emitted[p].circle for p in e.parents]
        worst_descartes = max(worst_descartes, descartes_residual(*(p.curvature for p in parents), c.curvature))
        for p in parents:
            gap = abs(math.hypot(c.x - p.x, c.y - p.y) - (c.radius + p.radius))
            worst_tangency = max(worst_tangency, gap / tol.slack(c.radius + p.radius))
    radii = np.fromiter((e.circle.radius for e in emitted), dtype=float, count=len(emitted))
    return {
        "max_descartes_residual": worst_descartes,
        "max_tangency_over_slack": worst_tangency,
        "radii_non_increasing": bool(np.all(np.diff(radii) <= 0)),
    }


def residual_array(emitted, domain):
    """residual[N] = exact_area - sum_{i<N} area(E_i), for N = 0..len(emitted)."""
    out = np.empty(len(emitted) + 1)
    running = RunningSum()
    out[0] = domain.exact_area
    for n, e in enumerate(emitted, start=1):
        running.add(e.circle.area)
        out[n] = domain.exact_area - running.value
    return out


def residual_series(emitted, domain):
    return [(n, float(r)) for n, r in enumerate(residual_array(emitted, domain))]


def residual_indicator(emitted, domain, points, n=None):
    """
    True where a point lies in the domain but outside E_1..E_n.

    Each gap is descended through its Apollonian tree: a point outside the
    inscribed circle d of gap (p, q, r) falls in the child gap whose sector
    around d's center lies between the rays to two of the parent centers.
    """
    n = len(emitted) if n is None else min(n, len(emitted))
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    px, py = pts[:, 0], pts[:, 1]
    residual = np.zeros(len(pts), dtype=bool)

    base_emission = {e.base_index: e.index for e in emitted[:n] if e.is_base}
    in_base = np.zeros(len(pts), dtype=bool)
    for i, c in enumerate(domain.base_disks):
        inside = (px - c.x) ** 2 + (py - c.y) ** 2 <= c.radius * c.radius
        in_base |= inside
        if i not in base_emission:
            residual |= inside

    children = {tuple(sorted(e.parents)): e.index for e in emitted[:n] if not e.is_base}
    for gap in domain.gaps:
        a, b, c = domain.gap_circles(gap)
        idx = np.nonzero(in_curvilinear_triangle(px, py, a, b, c) & ~in_base)[0]
        if not len(idx):
            continue
        if any(m not in base_emission for m in gap.members):
            residual[idx] = True
            continue
        stack = [(tuple(base_emission[m] for m in gap.members), idx)]
        while stack:
            parents, idx = stack.pop()
            child = children.get(tuple(sorted(parents)))
            if child is None:
                residual[idx] = True
                continue
            d = emitted[child].circle
            dx, dy = px[idx] - d.x, py[idx] - d.y
            idx = idx[dx * dx + dy * dy > d.radius * d.radius]
            if not len(idx):
                continue

            centers = [emitted[p].circle for p in parents]
            angles = [math.atan2(pc.y - d.y, pc.x - d.x) for pc in centers]
            order = sorted(range(3), key=lambda j: angles[j])
            p0, p1, p2 = (parents[j] for j in order)
            s0, s1, s2 = (angles[j] for j in order)
            rel = np.mod(np.arctan2(py[idx] - d.y, px[idx] - d.x) - s0, 2.0 * math.pi)
            first = rel < s1 - s0
            second = ~first & (rel < s2 - s0)
            third = ~first & ~second
            for (u, v), mask in (((p0, p1), first), ((p1, p2), second), ((p0, p2), third)):
                if np.any(mask):
                    stack.append(((u, v, child), idx[mask]))
    return residual


# ==================================================
# SHARED, LOCKED GENERATORS
# ==================================================
class PackingCache:
    """
    One generator per (domain, tolerance), extended on demand under a lock.
    At most `max_entries` generators are kept; the least recently used goes first.
    """

    def __init__(self, max_entries=None):
        self.max_entries = max(1, config.PACKING_CACHE_SIZE if max_entries is None else max_entries)
        self._lock = threading.Lock()
        self._generators = OrderedDict()

    def __len__(self):
        return len(self._generators)

    def __contains__(self, key):
        return key in self._generators

    def prefix(self, domain, stop, tol=DEFAULT_TOLERANCE, progress=False):
        key = (domain, tol)
        with self._lock:
            gen = self._generators.get(key)
            if gen is None:
                gen = self._generators[key] = PackingGenerator(domain, tol)
                while len(self._generators) > self.max_entries:
                    self._generators.popitem(last=False)
            else:
                self._generators.move_to_end(key)
            _advance(gen, stop, progress)
            n = prefix_length(gen.emitted, domain, stop)
            emitted = tuple(gen.emitted[:n])
        return packing_stats(emitted, domain), emitted

    def clear(self):
        with self._lock:
            self._generators.clear()


PACKINGS = PackingCache()


# ==================================================
# DUMP
# ==================================================
DUMP_FIELDS = ["index", "x", "y", "r", "curvature", "parent_a", "parent_b", "parent_c"]


def write_packing_dump(emitted, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(DUMP_FIELDS)
        for e in emitted:
            c = e.circle
            parents = e.parents if e.parents is not None else (-1, -1, -1)
            w.writerow([e.index, f"{c.x:.17g}", f"{c.y:.17g}", f"{c.radius:.17g}",
                        f"{c.curvature:.17g}", *parents])


def read_packing_dump(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            parents = tuple(int(row[k]) for k in ("parent_a", "parent_b", "parent_c"))
            circle = Circle(float(row["x"]), float(row["y"]), float(row["r"]), float(row["curvature"]))
            rows.append(EmittedCircle(int(row["index"]), circle, None if parents[0] < 0 else parents))
    return rows
