"""Exact algebra of compactly supported piecewise-constant functions.

A step function is stored as breakpoints ``xs[0..m]`` (strictly increasing)
and values ``vals[i]`` taken on the open piece ``(xs[i], xs[i+1])``; the
function vanishes outside ``[xs[0], xs[m]]``.  The canonical form has no
zero-width pieces, no adjacent equal values and no leading or trailing zero
pieces, so two equal functions have identical arrays.  Translation,
reflection, truncation, linear combination and integration all stay inside
the class; values are never interpolated, which is what keeps the transport
bookkeeping exact.
"""

from __future__ import annotations

import numpy as np

__all__ = ["StepFunction"]


def _canonical(xs: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if xs.size == 0:
        return np.empty(0), np.empty(0)
    # drop zero-width pieces
    keep = xs[1:] > xs[:-1]
    if not keep.all():
        vals = vals[keep]
        xs = np.concatenate([xs[:1], xs[1:][keep]])
        if vals.size == 0:
            return np.empty(0), np.empty(0)
    # merge adjacent equal values
    if vals.size > 1:
        new = np.concatenate([[True], vals[1:] != vals[:-1]])
        if not new.all():
            vals = vals[new]
            xs = np.concatenate([xs[:-1][new], xs[-1:]])
    # trim zero pieces at either end
    lo, hi = 0, vals.size
    while lo < hi and vals[lo] == 0.0:
        lo += 1
    while hi > lo and vals[hi - 1] == 0.0:
        hi -= 1
    if lo > 0 or hi < vals.size:
        vals = vals[lo:hi]
        xs = xs[lo:hi + 1] if vals.size else np.empty(0)
    return xs, vals


class StepFunction:
    """Piecewise-constant function with bounded support, canonical form."""

    __slots__ = ("xs", "vals")

    def __init__(self, xs, vals):
        xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        vals = np.atleast_1d(np.asarray(vals, dtype=np.float64))
        if xs.size == 0:
            vals = np.empty(0)
        elif xs.size != vals.size + 1:
            raise ValueError("need one more breakpoint than values")
        if xs.size:
            if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(vals)):
                raise ValueError("breakpoints and values must be finite")
            if not np.all(xs[1:] >= xs[:-1]):
                raise ValueError("breakpoints must be nondecreasing")
        self.xs, self.vals = _canonical(xs, vals)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def indicator(cls, lo: float, hi: float, value: float = 1.0) -> "StepFunction":
        if not lo < hi:
            return cls.zero()
        return cls([lo, hi], [value])

    @classmethod
    def from_pieces(cls, pieces) -> "StepFunction":
        """Sum of indicator pieces ``(lo, hi, value)``; pieces may overlap."""
        out = cls.zero()
        for lo, hi, value in pieces:
            out = out + cls.indicator(lo, hi, value)
        return out

    # -- basic queries -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.vals.size == 0

    def support(self):
        """(lo, hi) hull of the support, or None for the zero function."""
        if self.is_zero:
            return None
        return float(self.xs[0]), float(self.xs[-1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.xs, other.xs) and np.array_equal(self.vals, other.vals)

    def __hash__(self):
        return hash((self.xs.tobytes(), self.vals.tobytes()))

    def __repr__(self):
        if self.is_zero:
            return "StepFunction.zero()"
        return f"StepFunction({self.xs.tolist()}, {self.vals.tolist()})"

    def __call__(self, x: float) -> float:
        """Pointwise value; right-continuous at breakpoints, 0 off support."""
        if self.is_zero or x < self.xs[0] or x >= self.xs[-1]:
            return 0.0
        i = int(np.searchsorted(self.xs, x, side="right")) - 1
        return float(self.vals[i])

    def min_value(self) -> float:
        """Infimum over the whole line (the function is 0 off its support)."""
        if self.is_zero:
            return 0.0
        return float(min(self.vals.min(), 0.0))

    def max_value(self) -> float:
        if self.is_zero:
            return 0.0
        return float(max(self.vals.max(), 0.0))

    # -- geometry of the graph ----------------------------------------------

    def shift(self, dt: float) -> "StepFunction":
        """g(x) = f(x - dt)."""
        if self.is_zero or dt == 0.0:
            return self
        return StepFunction(self.xs + dt, self.vals)

    def reflect(self, c: float) -> "StepFunction":
        """g(x) = f(c - x)."""
        if self.is_zero:
            return self
        return StepFunction((c - self.xs)[::-1], self.vals[::-1])

    def clip(self, lo: float, hi: float) -> "StepFunction":
        """Restriction to (lo, hi); zero outside."""
        if self.is_zero or not lo < hi:
            return StepFunction.zero()
        if lo <= self.xs[0] and hi >= self.xs[-1]:
            return self
        xs = np.clip(self.xs, lo, hi)
        return StepFunction(xs, self.vals)

    def scale(self, a: float) -> "StepFunction":
        if self.is_zero:
            return self
        return StepFunction(self.xs, a * self.vals)

    def abs(self) -> "StepFunction":
        if self.is_zero:
            return self
        return StepFunction(self.xs, np.abs(self.vals))

    # -- linear combination --------------------------------------------------

    def _values_on(self, grid: np.ndarray) -> np.ndarray:
        """Values on each cell of a breakpoint grid covering the supports."""
        if self.is_zero:
            return np.zeros(grid.size - 1)
        mids = 0.5 * (grid[:-1] + grid[1:])
        idx = np.searchsorted(self.xs, mids, side="right") - 1
        out = np.zeros(grid.size - 1)
        inside = (idx >= 0) & (idx < self.vals.size) & (mids > self.xs[0]) & (mids < self.xs[-1])
        out[inside] = self.vals[idx[inside]]
        return out

    def __add__(self, other: "StepFunction") -> "StepFunction":
        if not isinstance(other, StepFunction):
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        grid = np.union1d(self.xs, other.xs)
        return StepFunction(grid, self._values_on(grid) + other._values_on(grid))

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + other.scale(-1.0)

    def __neg__(self) -> "StepFunction":
        return self.scale(-1.0)

    # -- integrals -------------------------------------------------------------

    def integral(self) -> float:
        if self.is_zero:
            return 0.0
        return float(np.dot(self.vals, np.diff(self.xs)))

    def window_integral(self, lo: float, hi: float) -> float:
        return self.clip(lo, hi).integral()

    def abs_integral(self) -> float:
        if self.is_zero:
            return 0.0
        return float(np.dot(np.abs(self.vals), np.diff(self.xs)))

    def l1_distance(self, other: "StepFunction") -> float:
        return (self - other).abs_integral()

    def exp_integral(self, lam: float, ref: float) -> float:
        """Exact ``integral of f(u) * exp(-lam * (ref - u)) du``.

        This is the building block for damped boundary traces: the mass of
        each piece discounted by the exponential clock run from the piece to
        the reference point ``ref``.
        """
        if lam <= 0.0:
            raise ValueError("lam must be positive")
        if self.is_zero:
            return 0.0
        weights = np.exp(-lam * (ref - self.xs))
        return float(np.dot(self.vals, (weights[1:] - weights[:-1]))) / lam
