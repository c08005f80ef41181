"""Vectorized interval arithmetic with outward epsilon inflation.

An interval array is a pair ``(lo, hi)`` of equally shaped float arrays.
Every operation widens its result by ``4 * eps`` relative to the endpoint
magnitude plus the smallest normal number, which dominates the rounding
error of a single IEEE add or multiply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = np.finfo(float).eps
TINY = np.finfo(float).tiny


def inflate(lo, hi, rel=4 * EPS):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo - (rel * np.abs(lo) + TINY), hi + (rel * np.abs(hi) + TINY)


def iadd(a, b):
    return inflate(a[0] + b[0], a[1] + b[1])


def isub(a, b):
    return inflate(a[0] - b[1], a[1] - b[0])


def imul(a, b):
    p = np.stack([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    return inflate(p.min(axis=0), p.max(axis=0))


def iscale(c, a):
    """Point scalar times interval."""
    lo, hi = c * a[0], c * a[1]
    return inflate(np.minimum(lo, hi), np.maximum(lo, hi))


def ipow(a, k):
    """Tight integer power; even powers of a zero-straddling interval start at 0."""
    lo, hi = np.asarray(a[0], dtype=float), np.asarray(a[1], dtype=float)
    if k == 0:
        return np.ones_like(lo), np.ones_like(hi)
    if k == 1:
        return lo, hi
    # pow may be off by an ulp per implicit multiply
    rel = (2 * k + 4) * EPS
    plo, phi = lo**k, hi**k
    if k % 2:
        return inflate(plo, phi, rel)
    straddle = (lo <= 0) & (hi >= 0)
    rlo = np.where(straddle, 0.0, np.minimum(plo, phi))
    rlo, rhi = inflate(rlo, np.maximum(plo, phi), rel)
    return np.maximum(rlo, 0.0), rhi


def contains_zero(a):
    return (a[0] <= 0.0) & (a[1] >= 0.0)


@dataclass(frozen=True)
class Interval:
    """Scalar convenience wrapper used in reports and tests."""

    lo: float
    hi: float

    def __contains__(self, v):
        return self.lo <= v <= self.hi

    @property
    def width(self):
        return self.hi - self.lo

    def encloses(self, other: "Interval"):
        return self.lo <= other.lo and other.hi <= self.hi
