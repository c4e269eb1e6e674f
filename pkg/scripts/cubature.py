"""
Quadrature rules built from a packing prefix.

Nodes are the disk centers, weights the disk areas. For a harmonic u the
mean-value property makes every disk exact, so the whole error lives in the
residual set and is bounded by residual_area * sup|u|.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import dblquad

from scripts import config
from scripts.apollonian_packing import PACKINGS, StopCriterion
from scripts.errors import InvalidInputError, RuleRangeError
from scripts.geometry_core import DEFAULT_TOLERANCE
from scripts.harmonic import sample_domain_points


@dataclass(frozen=True, eq=False)
class CubatureRule:
    nodes: np.ndarray    # (N, 2) disk centers
    weights: np.ndarray  # (N,) disk areas
    residual_bound: float
    exact_area: float
    domain: object = field(default=None, repr=False)

    @property
    def N(self):
        return len(self.weights)

    def prefix(self, n):
        return build_rule_from_arrays(self.nodes[:n], self.weights[:n], self.exact_area, self.domain)


@dataclass(frozen=True)
class IntegrationResult:
    estimate: float
    N: int
    residual_bound: float
    sup_norm: float
    certified_bound: float | None  # None when u is not harmonic
    rescaled_estimate: float | None = None

    @property
    def certified(self):
        return self.certified_bound is not None

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "N": self.N,
            "residual_bound": self.residual_bound,
            "sup_norm": self.sup_norm,
            "certified_bound": self.certified_bound,
            "certificate": "applicable" if self.certified else "inapplicable",
            "rescaled_estimate": self.rescaled_estimate,
        }


@dataclass(frozen=True)
class ReferenceValue:
    value: float
    uncertainty: float
    N: int = 0
    residual: float = 0.0


# ==================================================
# RULES
# ==================================================
def build_rule_from_arrays(nodes, weights, exact_area, domain=None):
    weights = np.asarray(weights, dtype=float)
    nodes = np.asarray(nodes, dtype=float).reshape(len(weights), 2)
    return CubatureRule(nodes, weights, exact_area - math.fsum(weights), exact_area, domain)


def build_rule(emitted, N, domain):
    """Rule of the first N emitted disks: centers as nodes, areas as weights."""
    if N < 0:
        raise InvalidInputError(f"N must be >= 0, got {N}")
    if N > len(emitted):
        raise RuleRangeError(f"rule of size {N} requested but only {len(emitted)} circles were emitted")
    nodes = np.array([(e.circle.x, e.circle.y) for e in emitted[:N]], dtype=float).reshape(N, 2)
    weights = np.array([e.circle.area for e in emitted[:N]], dtype=float)
    return build_rule_from_arrays(nodes, weights, domain.exact_area, domain)


# ==================================================
# SUP-NORM
# ==================================================
def sup_norm_estimate(domain, u, samples=config.SUPNORM_SAMPLES, inflation=config.SUPNORM_INFLATION):
    """max |u| over `samples` points on every base circle, times `inflation`."""
    theta = 2.0 * math.pi * np.arange(samples) / samples
    ct, st = np.cos(theta), np.sin(theta)
    best = 0.0
    for c in domain.base_disks:
        values = u(c.x + c.radius * ct, c.y + c.radius * st)
        best = max(best, float(np.max(np.abs(values))))
    return inflation * best


def sup_norm(domain, u, method="sampled"):
    """'sampled', 'closed' (closed-form bound) or 'auto' (closed when available)."""
    if method == "sampled":
        return sup_norm_estimate(domain, u)
    bound = u.sup_bound(domain)
    if bound is None:
        if method == "closed":
            raise InvalidInputError(f"no closed-form sup bound for {u.describe()}")
        return sup_norm_estimate(domain, u)
    return bound


# ==================================================
# INTEGRATION
# ==================================================
def integrate(rule, u, sup=None, sup_method="sampled", rescaled=False):
    """
    Sum of weights * u(nodes) with the certified bound residual_bound * sup.

    `sup` overrides the sup-norm; otherwise it comes from `sup_method`.
    The certificate is dropped for functions that are not harmonic.
    """
    if rule.N:
        values = np.asarray(u(rule.nodes[:, 0], rule.nodes[:, 1]), dtype=float)
        estimate = math.fsum(rule.weights * values)
    else:
        estimate = 0.0
    if sup is None:
        if rule.domain is None:
            raise InvalidInputError("rule has no domain; pass sup explicitly")
        sup = sup_norm(rule.domain, u, sup_method)
    bound = rule.residual_bound * sup if u.is_harmonic else None
    scaled = None
    if rescaled:
        packed = rule.exact_area - rule.residual_bound
        scaled = estimate * rule.exact_area / packed if packed > 0 else None
    return IntegrationResult(estimate, rule.N, rule.residual_bound, sup, bound, scaled)


def reference_integral(domain, u, target_residual, tol=DEFAULT_TOLERANCE, sup_method="auto", progress=False):
    """
    A deep rule of the same construction, with its own certified error as the
    uncertainty. Any certified depth is a sound reference.
    """
    _, emitted = PACKINGS.prefix(domain, StopCriterion(min_residual=target_residual), tol, progress)
    rule = build_rule(emitted, len(emitted), domain)
    result = integrate(rule, u, sup_method=sup_method)
    return ReferenceValue(result.estimate, rule.residual_bound * result.sup_norm, rule.N, rule.residual_bound)


def certificate_holds(result, reference):
    """|estimate - reference| <= certified_bound + reference uncertainty."""
    if not result.certified:
        return None
    return abs(result.estimate - reference.value) <= result.certified_bound + reference.uncertainty


# ==================================================
# INDEPENDENT ORACLES
# ==================================================
def _polar_rule(order):
    t, w = leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


def disk_integral(u, disk, order=config.MEAN_VALUE_ORDER):
    """Tensor Gauss-Legendre rule in polar form over a disk."""
    s, ws = _polar_rule(order)
    rho = disk.radius * s
    theta = 2.0 * math.pi * s
    R, TH = np.meshgrid(rho, theta, indexing="ij")
    W = np.outer(ws * disk.radius * rho, ws * 2.0 * math.pi)
    values = u(disk.x + R * np.cos(TH), disk.y + R * np.sin(TH))
    return math.fsum((W * values).ravel())


def mean_value_check(u, disk, order=config.MEAN_VALUE_ORDER):
    """|numerical - area*u(center)| / (area * (1 + |u(center)|))."""
    numerical = disk_integral(u, disk, order)
    at_center = float(u(disk.x, disk.y))
    return abs(numerical - disk.area * at_center) / (disk.area * (1.0 + abs(at_center)))


def _sector_integral(u, center, toward_a, toward_b, epsabs, epsrel):
    """Integral of u over the sector of `center` spanned by the directions to two points."""
    a1 = math.atan2(toward_a[1] - center.y, toward_a[0] - center.x)
    a2 = math.atan2(toward_b[1] - center.y, toward_b[0] - center.x)
    span = (a2 - a1) % (2.0 * math.pi)
    if span > math.pi:
        a1, span = a2, 2.0 * math.pi - span

    def integrand(rho, theta):
        return float(u(center.x + rho * math.cos(theta), center.y + rho * math.sin(theta))) * rho

    value, err = dblquad(integrand, a1, a1 + span, 0.0, center.radius, epsabs=epsabs, epsrel=epsrel)
    return value, err


def _triangle_integral(u, a, b, c, epsabs, epsrel):
    """Duffy map (s, t) -> a + s(b - a) + s t (c - b) on the unit square."""
    ax, ay = a
    e1x, e1y = b[0] - ax, b[1] - ay
    e2x, e2y = c[0] - b[0], c[1] - b[1]
    jac = abs(e1x * e2y - e1y * e2x)

    def integrand(t, s):
        return float(u(ax + s * e1x + s * t * e2x, ay + s * e1y + s * t * e2y)) * s * jac

    return dblquad(integrand, 0.0, 1.0, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel)


def gap_integral(u, c1, c2, c3, epsabs=1e-13, epsrel=1e-12):
    """Integral over a curvilinear triangle: center triangle minus three sectors."""
    total, err = _triangle_integral(u, c1.center, c2.center, c3.center, epsabs, epsrel)
    for p, q, r in ((c1, c2, c3), (c2, c1, c3), (c3, c1, c2)):
        value, e = _sector_integral(u, p, q.center, r.center, epsabs, epsrel)
        total -= value
        err += e
    return total, err


def quadrature_reference(domain, u, epsabs=1e-13, epsrel=1e-12):
    """
    Packing-free oracle. Base disks use the mean-value property when u is
    harmonic (a polar Gauss rule otherwise); gaps use adaptive quadrature.
    """
    pieces = []
    err = 0.0
    for disk in domain.base_disks:
        if u.is_harmonic:
            pieces.append(disk.area * float(u(disk.x, disk.y)))
        else:
            pieces.append(disk_integral(u, disk))
    for gap in domain.gaps:
        value, e = gap_integral(u, *domain.gap_circles(gap), epsabs=epsabs, epsrel=epsrel)
        pieces.append(value)
        err += e
    return ReferenceValue(math.fsum(pieces), err)


# ==================================================
# MONTE-CARLO BASELINE
# ==================================================
@dataclass(frozen=True)
class MonteCarloEstimate:
    integral: float
    stderr: float
    l1_norm: float
    n: int


def monte_carlo_estimate(domain, u, n, rng, batch=200_000):
    """Plain Monte-Carlo integral (and L1 norm) over uniform domain samples."""
    if n < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n}")
    total = total_sq = total_abs = 0.0
    done = 0
    while done < n:
        m = min(batch, n - done)
        pts = sample_domain_points(domain, m, rng)
        values = np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float)
        total += math.fsum(values)
        total_sq += math.fsum(values * values)
        total_abs += math.fsum(np.abs(values))
        done += m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    area = domain.exact_area
    return MonteCarloEstimate(area * mean, area * math.sqrt(var / n), area * total_abs / n, n)


# ==================================================
# DUMP
# ==================================================
RULE_FIELDS = ["index", "x", "y", "weight"]


def write_rule_dump(rule, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(RULE_FIELDS)
        for i, ((x, y), a) in enumerate(zip(rule.nodes, rule.weights)):
            w.writerow([i, f"{x:.17g}", f"{y:.17g}", f"{a:.17g}"])
        w.writerow([f"# N={rule.N}", f"residual_bound={rule.residual_bound:.17g}"])


def read_rule_dump(path, exact_area=None):
    nodes, weights, residual = [], [], None
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            if row and row[0].startswith("#"):
                residual = float(row[1].split("=", 1)[1])
                continue
            nodes.append((float(row[1]), float(row[2])))
            weights.append(float(row[3]))
    if exact_area is None:
        exact_area = residual + math.fsum(weights)
    return build_rule_from_arrays(np.array(nodes).reshape(-1, 2), weights, exact_area)
