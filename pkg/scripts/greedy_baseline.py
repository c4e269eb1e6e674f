"""
Randomized greedy disk packing of a convex region.

Each step samples a uniform point; if it is free, the largest disk centered
there that stays inside the region and clear of every placed disk is added.
Random numbers come from numpy's PCG64 (default_rng(seed)), drawn in fixed
batches so that a seed fully determines the run.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from scripts import config
from scripts.apollonian_packing import RunningSum
from scripts.errors import GreedyStallError, InvalidInputError
from scripts.geometry_core import Circle

RNG_ALGORITHM = "PCG64"
# brute-force the whole placement until the grid is worth building
GRID_MIN_DISKS = 64
ELLIPSE_BISECTIONS = 200


# ==================================================
# REGIONS
# ==================================================
def _ellipse_root(r0, z0, z1, g):
    n0 = r0 * z0
    s0 = z1 - 1.0
    s1 = 0.0 if g < 0 else math.hypot(n0, z1) - 1.0
    s = 0.0
    for _ in range(ELLIPSE_BISECTIONS):
        s = 0.5 * (s0 + s1)
        if s == s0 or s == s1:
            break
        ratio0 = n0 / (s + r0)
        ratio1 = z1 / (s + 1.0)
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0
        if g > 0:
            s0 = s
        elif g < 0:
            s1 = s
        else:
            break
    return s


def ellipse_boundary_distance(a, b, x, y):
    """Euclidean distance from (x, y) to the ellipse x^2/a^2 + y^2/b^2 = 1 (bisection)."""
    if a < b:
        a, b, x, y = b, a, y, x
    y0, y1 = abs(x), abs(y)
    if y1 > 0:
        if y0 > 0:
            z0, z1 = y0 / a, y1 / b
            g = z0 * z0 + z1 * z1 - 1.0
            if g == 0:
                return 0.0
            r0 = (a / b) ** 2
            s = _ellipse_root(r0, z0, z1, g)
            return math.hypot(r0 * y0 / (s + r0) - y0, y1 / (s + 1.0) - y1)
        return abs(y1 - b)
    numer = a * y0
    denom = a * a - b * b
    if numer < denom:
        t = numer / denom
        return math.hypot(a * t - y0, b * math.sqrt(1.0 - t * t))
    return abs(y0 - a)


@dataclass(frozen=True)
class ConvexRegion:
    """square: [0, a]^2; disk: radius a at the origin; ellipse: semi-axes a, b at the origin."""
    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("square", "disk", "ellipse"):
            raise InvalidInputError(f"unknown region kind {self.kind!r}")
        if not self.a > 0 or (self.kind == "ellipse" and not self.b > 0):
            raise InvalidInputError(f"region dimensions must be positive: {self}")

    @classmethod
    def square(cls, side=1.0):
        return cls("square", float(side))

    @classmethod
    def disk(cls, radius=1.0):
        return cls("disk", float(radius))

    @classmethod
    def ellipse(cls, a, b):
        return cls("ellipse", float(a), float(b))

    @property
    def exact_area(self):
        if self.kind == "square":
            return self.a * self.a
        if self.kind == "disk":
            return math.pi * self.a * self.a
        return math.pi * self.a * self.b

    def bounding_box(self):
        if self.kind == "square":
            return (0.0, 0.0, self.a, self.a)
        b = self.a if self.kind == "disk" else self.b
        return (-self.a, -b, self.a, b)

    def contains(self, x, y):
        if self.kind == "square":
            return 0.0 <= x <= self.a and 0.0 <= y <= self.a
        if self.kind == "disk":
            return x * x + y * y <= self.a * self.a
        return (x / self.a) ** 2 + (y / self.b) ** 2 <= 1.0

    def signed_distance(self, x, y):
        """Distance to the boundary; positive inside, negative outside."""
        if self.kind == "square":
            return min(x, self.a - x, y, self.a - y)
        if self.kind == "disk":
            return self.a - math.hypot(x, y)
        d = ellipse_boundary_distance(self.a, self.b, x, y)
        return d if self.contains(x, y) else -d

    def describe(self):
        if self.kind == "ellipse":
            return f"ellipse:{self.a:g},{self.b:g}"
        return f"{self.kind}:{self.a:g}"


def parse_region(spec):
    """'square[:s]', 'disk[:R]' or 'ellipse:a,b'."""
    kind, _, args = spec.strip().partition(":")
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise InvalidInputError(f"cannot parse region {spec!r}")
    if kind == "square" and len(values) <= 1:
        return ConvexRegion.square(*values)
    if kind == "disk" and len(values) <= 1:
        return ConvexRegion.disk(*values)
    if kind == "ellipse" and len(values) == 2:
        return ConvexRegion.ellipse(*values)
    raise InvalidInputError(f"cannot parse region {spec!r}; use square:s, disk:R or ellipse:a,b")


# ==================================================
# SPATIAL INDEX
# ==================================================
class SpatialIndex:
    """
    Clearance queries min_j (|p - c_j| - r_j) over the placed disks.

    Disks larger than a grid cell live in a small tier scanned with numpy;
    the rest sit in a uniform grid searched ring by ring. The cell size
    tracks twice the median radius and is rebuilt whenever the count doubles.
    """

    def __init__(self):
        self.xs, self.ys, self.rs = [], [], []
        self.cell = None
        self._grid = {}
        self._large = []
        self._large_arrays = None
        self._small_rmax = 0.0
        self._built_at = 0

    def __len__(self):
        return len(self.rs)

    def add(self, circle):
        i = len(self.rs)
        self.xs.append(circle.x)
        self.ys.append(circle.y)
        self.rs.append(circle.radius)
        n = i + 1
        if n >= GRID_MIN_DISKS and n >= 2 * self._built_at:
            self._rebuild()
        else:
            self._insert(i)

    def _cell_of(self, x, y):
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def _insert(self, i):
        if self.cell is None or self.rs[i] > self.cell:
            self._large.append(i)
            self._large_arrays = None
            return
        self._grid.setdefault(self._cell_of(self.xs[i], self.ys[i]), []).append(i)
        self._small_rmax = max(self._small_rmax, self.rs[i])

    def _rebuild(self):
        self._built_at = len(self.rs)
        self.cell = 2.0 * float(np.median(self.rs))
        self._grid = {}
        self._large = []
        self._large_arrays = None
        self._small_rmax = 0.0
        for i in range(len(self.rs)):
            self._insert(i)

    def _large_tier(self):
        if self._large_arrays is None:
            idx = np.array(self._large, dtype=int)
            self._large_arrays = (np.array(self.xs)[idx], np.array(self.ys)[idx], np.array(self.rs)[idx])
        return self._large_arrays

    def clearance(self, x, y, cap=math.inf):
        """min(cap, min_j |p - c_j| - r_j); exact whenever the result is below cap."""
        best = cap
        if self._large:
            lx, ly, lr = self._large_tier()
            best = min(best, float(np.min(np.hypot(lx - x, ly - y) - lr)))
        if not self._grid:
            return best
        ci, cj = self._cell_of(x, y)
        ring = 0
        while True:
            # disks first seen in this ring are at least (ring - 1) cells away
            if (ring - 1) * self.cell - self._small_rmax >= best:
                return best
            for i, j in _ring_cells(ci, cj, ring):
                for k in self._grid.get((i, j), ()):
                    d = math.hypot(self.xs[k] - x, self.ys[k] - y) - self.rs[k]
                    if d < best:
                        best = d
            ring += 1


def _ring_cells(ci, cj, ring):
    if ring == 0:
        yield ci, cj
        return
    for i in range(ci - ring, ci + ring + 1):
        yield i, cj - ring
        yield i, cj + ring
    for j in range(cj - ring + 1, cj + ring):
        yield ci - ring, j
        yield ci + ring, j


# ==================================================
# GREEDY STATE
# ==================================================
@dataclass
class GreedyState:
    region: ConvexRegion
    rng_seed: int
    placed: list = field(default_factory=list)
    attempts: int = 0
    accepted: int = 0

    def __post_init__(self):
        self.rng = np.random.default_rng(self.rng_seed)
        self.index = SpatialIndex()
        self.packed = RunningSum()
        self._batch = np.empty((0, 2))
        self._cursor = 0

    @property
    def residual(self):
        return self.region.exact_area - self.packed.value

    def next_point(self):
        if self._cursor >= len(self._batch):
            x0, y0, x1, y1 = self.region.bounding_box()
            u = self.rng.random((config.GREEDY_BATCH, 2))
            self._batch = np.column_stack((x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]))
            self._cursor = 0
        x, y = self._batch[self._cursor]
        self._cursor += 1
        return float(x), float(y)


def place_at(state, x, y):
    """The deterministic half of a step: try to place a disk centered at (x, y)."""
    state.attempts += 1
    if not state.region.contains(x, y):
        return None
    radius = state.index.clearance(x, y, cap=state.region.signed_distance(x, y))
    if not radius > 0:
        return None
    circle = Circle.make(x, y, radius)
    state.placed.append(circle)
    state.index.add(circle)
    state.packed.add(circle.area)
    state.accepted += 1
    return circle


def greedy_step(state):
    """One sample; returns the accepted Circle or None when rejected."""
    return place_at(state, *state.next_point())


@dataclass(frozen=True)
class GreedyRun:
    region: ConvexRegion
    seed: int
    series: tuple  # (N, residual, radius_accepted)
    attempts: int


def greedy_run(region, target_N, seed, stall_limit=config.GREEDY_STALL_LIMIT, progress=False, state=None):
    """Run until target_N acceptances; the series is exact area bookkeeping."""
    if target_N < 1:
        raise InvalidInputError(f"target_N must be >= 1, got {target_N}")
    state = state if state is not None else GreedyState(region, seed)
    series = []
    misses = 0
    with tqdm(total=target_N, disable=not progress, unit="disk", desc=f"greedy seed {seed}") as bar:
        while state.accepted < target_N:
            circle = greedy_step(state)
            if circle is None:
                misses += 1
                if misses >= stall_limit:
                    raise GreedyStallError(
                        f"{misses} consecutive rejections after {state.accepted} disks (seed {seed})",
                        tuple(series),
                    )
                continue
            misses = 0
            series.append((state.accepted, state.residual, circle.radius))
            bar.update(1)
    return GreedyRun(region, seed, tuple(series), state.attempts)


def check_placement(region, placed, tol=1e-12):
    """Pairs of overlapping disks and disks leaving the region (both lists empty when valid)."""
    xs = np.array([c.x for c in placed])
    ys = np.array([c.y for c in placed])
    rs = np.array([c.radius for c in placed])
    overlaps = []
    for i in range(len(placed)):
        d = np.hypot(xs[i + 1:] - xs[i], ys[i + 1:] - ys[i]) - (rs[i + 1:] + rs[i])
        overlaps += [(i, i + 1 + int(j)) for j in np.nonzero(d < -tol * (1.0 + rs[i]))[0]]
    outside = [i for i, c in enumerate(placed) if region.signed_distance(c.x, c.y) < c.radius - tol]
    return overlaps, outside


# ==================================================
# DUMP
# ==================================================
GREEDY_FIELDS = ["N", "residual", "radius_accepted"]


def write_greedy_dump(series, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(GREEDY_FIELDS)
        for n, residual, radius in series:
            w.writerow([n, f"{residual:.17g}", f"{radius:.17g}"])
