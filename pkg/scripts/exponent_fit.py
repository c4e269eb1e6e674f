"""
Power-law fits y ~ c * x^slope by least squares on (log x, log y).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from scripts import config
from scripts.errors import InsufficientDataError, InvalidInputError


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    fit_range: tuple
    points_used: int
    stderr: float = 0.0
    low_confidence: bool = False
    reasons: tuple = field(default=())

    @property
    def prefactor(self):
        return math.exp(self.intercept)

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "prefactor": self.prefactor,
            "r_squared": self.r_squared,
            "stderr": self.stderr,
            "fit_range": list(self.fit_range),
            "points_used": self.points_used,
            "low_confidence": self.low_confidence,
            "reasons": list(self.reasons),
        }


def log_spaced(lo, hi, count, integer=False):
    """count points from lo to hi evenly spaced in log; integers are de-duplicated."""
    if not (lo > 0 and hi >= lo) or count < 1:
        raise InvalidInputError(f"need 0 < lo <= hi and count >= 1, got {(lo, hi, count)}")
    grid = np.geomspace(lo, hi, count)
    if integer:
        return np.unique(np.rint(grid).astype(np.int64))
    return grid


def fit_power_law(x, y, lo=None, hi=None, preasymptotic_below=None):
    """
    Fit over lo <= x <= hi (non-positive values dropped). Fits with fewer than
    MIN_FIT_POINTS points are refused; fits that start below
    `preasymptotic_below` or span less than a decade are flagged.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if lo is not None:
        keep &= x >= lo
    if hi is not None:
        keep &= x <= hi
    x, y = x[keep], y[keep]
    if len(x) < config.MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {len(x)} usable points in the fit range, need {config.MIN_FIT_POINTS}"
        )
    if np.ptp(x) == 0:
        raise InsufficientDataError("all fit points share one abscissa")

    res = linregress(np.log(x), np.log(y))
    span = (float(x.min()), float(x.max()))
    reasons = []
    if span[1] < 10.0 * span[0]:
        reasons.append("range spans less than one decade")
    if preasymptotic_below is not None and span[0] < preasymptotic_below:
        reasons.append(f"range starts below {preasymptotic_below:g} (pre-asymptotic)")
    return ExponentFit(
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=float(res.rvalue ** 2),
        fit_range=span,
        points_used=int(len(x)),
        stderr=float(res.stderr),
        low_confidence=bool(reasons),
        reasons=tuple(reasons),
    )
