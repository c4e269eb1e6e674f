"""
Test functions for the cubature: closed-form harmonic families, their
sup-norm bounds over a disk-covered domain, and a harmonicity witness.
"""

import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from scripts.errors import InvalidInputError

WITNESS_POINTS = 100
WITNESS_STEP = 1e-4
WITNESS_LIMIT = 1e-4


class HarmonicKind(str, Enum):
    CONSTANT = "constant"
    RE_POWER = "re_power"
    IM_POWER = "im_power"
    LOG_POLE = "log_pole"
    EXP_COS = "exp_cos"
    COMBINATION = "combination"
    RADIAL_SQUARE = "radial_square"
    CUSTOM = "custom"


def _cpow(w, m):
    """w**m by repeated squaring; exact integer powers for complex arrays."""
    result = np.ones_like(w)
    base = w
    while m:
        if m & 1:
            result = result * base
        base = base * base
        m >>= 1
    return result


@dataclass(frozen=True)
class HarmonicFn:
    kind: HarmonicKind
    c: float = 0.0
    m: int = 0
    z0: complex = 0j
    terms: tuple = ()
    scale: float = 1.0
    func: Callable | None = field(default=None, repr=False)
    declared_harmonic: bool = True
    label: str = ""

    # ---------- constructors ----------
    @classmethod
    def constant(cls, c=1.0):
        return cls(HarmonicKind.CONSTANT, c=float(c))

    @classmethod
    def re_power(cls, m, z0=0j):
        if m < 0:
            raise InvalidInputError(f"power must be >= 0, got {m}")
        return cls(HarmonicKind.RE_POWER, m=int(m), z0=complex(z0))

    @classmethod
    def im_power(cls, m, z0=0j):
        if m < 0:
            raise InvalidInputError(f"power must be >= 0, got {m}")
        return cls(HarmonicKind.IM_POWER, m=int(m), z0=complex(z0))

    @classmethod
    def log_pole(cls, z0):
        return cls(HarmonicKind.LOG_POLE, z0=complex(z0))

    @classmethod
    def exp_cos(cls):
        return cls(HarmonicKind.EXP_COS)

    @classmethod
    def combination(cls, terms):
        terms = tuple((float(a), u) for a, u in terms)
        if not terms:
            raise InvalidInputError("a linear combination needs at least one term")
        return cls(HarmonicKind.COMBINATION, terms=terms)

    @classmethod
    def radial_square(cls, z0=0j):
        """|z - z0|^2: subharmonic, not harmonic."""
        return cls(HarmonicKind.RADIAL_SQUARE, z0=complex(z0), declared_harmonic=False)

    @classmethod
    def custom(cls, func, harmonic=False, label="custom"):
        return cls(HarmonicKind.CUSTOM, func=func, declared_harmonic=bool(harmonic), label=label)

    # ---------- evaluation ----------
    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.scale * self._raw(x, y)

    def _raw(self, x, y):
        kind = self.kind
        if kind is HarmonicKind.CONSTANT:
            return np.full(np.broadcast(x, y).shape, self.c)
        if kind in (HarmonicKind.RE_POWER, HarmonicKind.IM_POWER):
            w = _cpow((x - self.z0.real) + 1j * (y - self.z0.imag), self.m)
            return w.real if kind is HarmonicKind.RE_POWER else w.imag
        if kind is HarmonicKind.LOG_POLE:
            return 0.5 * np.log((x - self.z0.real) ** 2 + (y - self.z0.imag) ** 2)
        if kind is HarmonicKind.EXP_COS:
            return np.exp(x) * np.cos(y)
        if kind is HarmonicKind.COMBINATION:
            return sum(a * u(x, y) for a, u in self.terms)
        if kind is HarmonicKind.RADIAL_SQUARE:
            return (x - self.z0.real) ** 2 + (y - self.z0.imag) ** 2
        return np.asarray(self.func(x, y), dtype=float)

    @property
    def is_harmonic(self):
        if self.kind is HarmonicKind.COMBINATION:
            return all(u.is_harmonic for _, u in self.terms)
        return self.declared_harmonic

    def describe(self):
        z = f"@{self.z0.real:g},{self.z0.imag:g}"
        text = {
            HarmonicKind.CONSTANT: f"const:{self.c:g}",
            HarmonicKind.RE_POWER: f"re:{self.m}{z}",
            HarmonicKind.IM_POWER: f"im:{self.m}{z}",
            HarmonicKind.LOG_POLE: f"log{z}",
            HarmonicKind.EXP_COS: "expcos",
            HarmonicKind.RADIAL_SQUARE: f"radial2{z}",
            HarmonicKind.CUSTOM: self.label,
        }.get(self.kind)
        if text is None:
            text = "+".join(f"{a:g}*{u.describe()}" for a, u in self.terms)
        return text if self.scale == 1.0 else f"{self.scale:.6g}*({text})"

    # ---------- sup-norm ----------
    def pole_distance(self, domain):
        """Lower bound on dist(z0, domain) using base disks and gap center triangles."""
        p = (self.z0.real, self.z0.imag)
        best = min(math.hypot(p[0] - c.x, p[1] - c.y) - c.radius for c in domain.base_disks)
        for gap in domain.gaps:
            a, b, c = domain.gap_circles(gap)
            best = min(best, _point_triangle_distance(p, (a.center, b.center, c.center)))
        return best

    def sup_bound(self, domain):
        """Closed-form upper bound of |u| on the domain; None for custom functions."""
        raw = self._raw_sup_bound(domain)
        return None if raw is None else abs(self.scale) * raw

    def _raw_sup_bound(self, domain):
        kind = self.kind
        if kind is HarmonicKind.CONSTANT:
            return abs(self.c)
        reach = max(math.hypot(c.x - self.z0.real, c.y - self.z0.imag) + c.radius for c in domain.base_disks)
        if kind in (HarmonicKind.RE_POWER, HarmonicKind.IM_POWER):
            return reach ** self.m
        if kind is HarmonicKind.RADIAL_SQUARE:
            return reach * reach
        if kind is HarmonicKind.LOG_POLE:
            near = self.pole_distance(domain)
            if not near > 0:
                raise InvalidInputError(f"log pole {self.z0} is not strictly outside the domain")
            return max(abs(math.log(near)), abs(math.log(reach)))
        if kind is HarmonicKind.EXP_COS:
            return math.exp(max(c.x + c.radius for c in domain.base_disks))
        if kind is HarmonicKind.COMBINATION:
            bounds = [u.sup_bound(domain) for _, u in self.terms]
            if any(b is None for b in bounds):
                return None
            return sum(abs(a) * b for (a, _), b in zip(self.terms, bounds))
        return None

    def normalized(self, domain):
        """u / sup_bound, so that |u| <= 1 on the domain."""
        bound = self.sup_bound(domain)
        if not bound:
            raise InvalidInputError(f"cannot normalize {self.describe()}: no positive sup bound")
        return replace(self, scale=self.scale / bound)


def _point_triangle_distance(p, tri):
    a, b, c = (np.asarray(v, dtype=float) for v in tri)
    q = np.asarray(p, dtype=float)
    d1 = (q[0] - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (q[1] - b[1])
    d2 = (q[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (q[1] - c[1])
    d3 = (q[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (q[1] - a[1])
    if not ((d1 < 0 or d2 < 0 or d3 < 0) and (d1 > 0 or d2 > 0 or d3 > 0)):
        return 0.0
    best = math.inf
    for s, t in ((a, b), (b, c), (a, c)):
        seg = t - s
        u = np.clip(np.dot(q - s, seg) / np.dot(seg, seg), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(q - (s + u * seg))))
    return best


def laplacian_witness(u, domain, rng, n=WITNESS_POINTS, h=WITNESS_STEP):
    """Largest 5-point Laplacian at n random domain points, relative to max(1, max |u|) over them."""
    points = sample_domain_points(domain, n, rng)
    x, y = points[:, 0], points[:, 1]
    centre = u(x, y)
    lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * centre) / (h * h)
    return float(np.max(np.abs(lap)) / max(1.0, float(np.max(np.abs(centre)))))


def passes_harmonicity_witness(u, domain, rng):
    return laplacian_witness(u, domain, rng) <= WITNESS_LIMIT


def sample_domain_points(domain, n, rng, batch=4096):
    """Uniform points of the domain by rejection from its bounding box."""
    x0, y0, x1, y1 = domain.bounding_box()
    found = []
    have = 0
    while have < n:
        pts = np.column_stack((rng.uniform(x0, x1, batch), rng.uniform(y0, y1, batch)))
        pts = pts[domain.contains(pts)]
        found.append(pts)
        have += len(pts)
    return np.concatenate(found)[:n]


# ==================================================
# FUNCTION SPECS (CLI / HTTP)
# ==================================================
_TERM = re.compile(
    r"^\s*(?:(?P<coef>[-+]?[0-9.]+(?:[eE][-+]?\d+)?)\s*\*)?\s*"
    r"(?P<name>const|re|im|log|expcos|radial2)"
    r"(?::(?P<arg>[-+]?[0-9.]+(?:[eE][-+]?\d+)?))?"
    r"(?:@(?P<x>[-+]?[0-9.]+(?:[eE][-+]?\d+)?),(?P<y>[-+]?[0-9.]+(?:[eE][-+]?\d+)?))?\s*$"
)


def _parse_term(text):
    match = _TERM.match(text)
    if not match:
        raise InvalidInputError(f"cannot parse function term {text!r}")
    name, arg = match["name"], match["arg"]
    z0 = complex(float(match["x"]), float(match["y"])) if match["x"] is not None else 0j
    if name == "const":
        u = HarmonicFn.constant(float(arg) if arg is not None else 1.0)
    elif name in ("re", "im"):
        if arg is None or float(arg) != int(float(arg)):
            raise InvalidInputError(f"{name} needs an integer power, e.g. {name}:2@10,10")
        ctor = HarmonicFn.re_power if name == "re" else HarmonicFn.im_power
        u = ctor(int(float(arg)), z0)
    elif name == "log":
        if match["x"] is None:
            raise InvalidInputError("log needs a pole, e.g. log@10,10")
        u = HarmonicFn.log_pole(z0)
    elif name == "expcos":
        u = HarmonicFn.exp_cos()
    else:
        u = HarmonicFn.radial_square(z0)
    coef = match["coef"]
    return (1.0 if coef is None else float(coef)), u


def parse_function(spec):
    """
    Parse 'const:1', 're:2@10,10', 'im:3', 'log@10,10', 'expcos', 'radial2@0,0'
    or a '+'-joined sum of 'coef*term' pieces.
    """
    pieces = [p for p in re.split(r"(?<![eE*:@,])\+", spec) if p.strip()]
    if not pieces:
        raise InvalidInputError("empty function spec")
    terms = [_parse_term(p) for p in pieces]
    if len(terms) == 1 and terms[0][0] == 1.0:
        return terms[0][1]
    return HarmonicFn.combination(terms)
