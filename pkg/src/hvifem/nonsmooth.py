"""Two-branch semipermeability potential and its Clarke calculus.

    j(t) = 0                      for t < 0
    j(t) = 1 - exp(-a t) + b t    for t >= 0

Its generalized gradient is {0} for t < 0, the interval [0, a + b] at t = 0 and
{a exp(-a t) + b} for t > 0.  All functions accept scalars or numpy arrays.
"""
import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


class Selection(enum.Enum):
    """Which element of the interval [0, a + b] represents the gradient at 0."""

    LEFT = "left"
    RIGHT = "right"
    MID = "mid"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidArgumentError(
                f"selection_at_zero must be one of left/right/mid, got {value!r}") from None


@dataclass(frozen=True)
class PotentialParams:
    a: float
    b: float
    selection_at_zero: Selection = Selection.LEFT

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise InvalidArgumentError(f"potential parameter a must be > 0, got {self.a}")
        if not (np.isfinite(self.b) and self.b >= 0):
            raise InvalidArgumentError(f"potential parameter b must be >= 0, got {self.b}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "selection_at_zero", Selection.parse(self.selection_at_zero))

    @property
    def jump(self):
        """Length a + b of the gradient interval at t = 0."""
        return self.a + self.b

    def zero_value(self):
        return {Selection.LEFT: 0.0,
                Selection.RIGHT: self.jump,
                Selection.MID: 0.5 * self.jump}[self.selection_at_zero]

    def with_selection(self, selection):
        return PotentialParams(self.a, self.b, Selection.parse(selection))


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def potential(t, p):
    t = np.asarray(t, dtype=float)
    tp = np.maximum(t, 0.0)
    return _out(np.where(t < 0, 0.0, 1.0 - np.exp(-p.a * tp) + p.b * tp))


def smooth_branch(t, p):
    """a exp(-a t) + b, the gradient on t > 0 (evaluated at max(t, 0))."""
    tp = np.maximum(np.asarray(t, dtype=float), 0.0)
    return p.a * np.exp(-p.a * tp) + p.b


def smooth_branch_slope(t, p):
    tp = np.maximum(np.asarray(t, dtype=float), 0.0)
    return -p.a * p.a * np.exp(-p.a * tp)


def subdiff_bounds(t, p):
    """Lower and upper end of the generalized gradient at ``t``."""
    t = np.asarray(t, dtype=float)
    branch = smooth_branch(t, p)
    lower = np.where(t > 0, branch, 0.0)
    upper = np.where(t < 0, 0.0, np.where(t > 0, branch, p.jump))
    return _out(lower), _out(upper)


def subdiff_selection(t, p):
    """Single-valued element of the generalized gradient."""
    t = np.asarray(t, dtype=float)
    return _out(np.where(t < 0, 0.0,
                         np.where(t > 0, smooth_branch(t, p), p.zero_value())))


def clarke_j0(t, v, p):
    """Generalized directional derivative j0(t; v) = max of z*v over the gradient set."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    value = np.where(t < 0, 0.0,
                     np.where(t > 0, smooth_branch(t, p) * v, p.jump * np.maximum(v, 0.0)))
    return _out(value + 0.0)


def graph_distance(t, z, p):
    """Vertical distance from the points (t, z) to the graph of the gradient."""
    lower, upper = subdiff_bounds(t, p)
    z = np.asarray(z, dtype=float)
    return _out(np.maximum(np.maximum(lower - z, z - upper), 0.0))


@dataclass(frozen=True)
class HjDiagnostics:
    c0_hat: float
    c1_hat: float
    alpha_hat: float
    sample_count: int


def relaxed_monotonicity_ratio(t1, t2, p):
    """[j0(t1; t2-t1) + j0(t2; t1-t2)] / (t2-t1)^2 for t1 != t2."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    d = t2 - t1
    return (clarke_j0(t1, d, p) + clarke_j0(t2, -d, p)) / (d * d)


def estimate_hj_constants(p, t_range=(-10.0, 10.0), samples=100_000, window=32):
    """Sampled growth and relaxed-monotonicity constants of ``p``.

    The growth pair (c0, c1) is the lowest envelope c0 + c1 |t| through the
    value at the origin that dominates max |gradient| on the grid.  The
    monotonicity constant is the largest ratio over grid pairs whose indices
    differ by at most ``window``; the ratio is a difference quotient of the
    gradient graph, so its maximum over all pairs is attained at close pairs.
    """
    if samples < 100:
        raise InvalidArgumentError(f"samples must be >= 100, got {samples}")
    lo, hi = map(float, t_range)
    if not hi > lo:
        raise InvalidArgumentError(f"empty t_range {t_range}")
    t = np.linspace(lo, hi, int(samples))
    if lo < 0 < hi and not np.any(t == 0.0):
        t = np.sort(np.append(t, 0.0))
    lower, upper = subdiff_bounds(t, p)
    mag = np.maximum(np.abs(lower), np.abs(upper))
    at0 = float(np.max(upper[np.abs(t) == np.min(np.abs(t))]))
    away = np.abs(t) > 0
    c1 = max(0.0, float(np.max((mag[away] - at0) / np.abs(t[away])))) if np.any(away) else 0.0
    c0 = float(np.max(mag - c1 * np.abs(t)))

    alpha = 0.0
    for k in range(1, min(window, len(t) - 1) + 1):
        ratios = relaxed_monotonicity_ratio(t[:-k], t[k:], p)
        alpha = max(alpha, float(np.max(ratios)))
    return HjDiagnostics(c0_hat=max(c0, 0.0), c1_hat=c1, alpha_hat=max(alpha, 0.0),
                         sample_count=len(t))
