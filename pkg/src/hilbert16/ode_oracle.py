"""Classical cross-check: fixed-step RK4 and Poincare return maps.

Only ``cycle_energy_check`` touches the variational side: it feeds a cycle
back into ``energy_E0``.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import Blowup, NonIsolatedCycle, NoReturn, NotConverged
from .paths import DiscretizedPath, interpolate
from .poly import PlanarSystem, compile_scalar
from .variational import energy_E0

BLOWUP_NORM = 1e12
DEFAULT_STEP = 1e-3
TIME_CAP = 200.0
NON_ISOLATED_TOL = 1e-3


@dataclass(frozen=True)
class Orbit:
    points: np.ndarray  # (n, 2)
    times: np.ndarray  # (n,), strictly increasing
    period: float | None = None

    def closure_error(self) -> float:
        return float(np.hypot(*(self.points[-1] - self.points[0])))

    def to_path(self) -> DiscretizedPath:
        """Uniform samples without the duplicated closing point."""
        if self.period is None:
            raise ValueError("orbit has no period")
        return DiscretizedPath(self.points[:-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for t, (x, y) in zip(self.times, self.points):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


@dataclass(frozen=True)
class Section:
    """Line through ``point`` with unit ``normal``; crossings count only when
    the flow goes from the negative to the positive side."""

    point: tuple[float, float]
    normal: tuple[float, float]

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.hypot(*n))
        if norm == 0:
            raise ValueError("section normal must be nonzero")
        object.__setattr__(self, "normal", (float(n[0] / norm), float(n[1] / norm)))
        object.__setattr__(self, "point", (float(self.point[0]), float(self.point[1])))

    @property
    def tangent(self):
        return (-self.normal[1], self.normal[0])

    def side(self, x, y) -> float:
        return (x - self.point[0]) * self.normal[0] + (y - self.point[1]) * self.normal[1]

    def coordinate(self, x, y) -> float:
        tx, ty = self.tangent
        return (x - self.point[0]) * tx + (y - self.point[1]) * ty

    def at(self, s: float) -> tuple[float, float]:
        tx, ty = self.tangent
        return self.point[0] + s * tx, self.point[1] + s * ty

    @classmethod
    def parse(cls, text: str) -> "Section":
        """``x=c+`` is the line x = c crossed with x increasing; ``y=c-`` etc."""
        m = re.fullmatch(r"\s*([xy])\s*=\s*([-+]?[0-9.eE+-]*[0-9.])\s*([+-])\s*", text)
        if not m:
            raise ValueError(f"bad section {text!r}; expected e.g. 'x=0+' or 'y=1.5-'")
        var, c, sign = m.group(1), float(m.group(2)), 1.0 if m.group(3) == "+" else -1.0
        if var == "x":
            return cls((c, 0.0), (sign, 0.0))
        return cls((0.0, c), (0.0, sign))


class _Field:
    def __init__(self, sys: PlanarSystem):
        self.P = compile_scalar(sys.P)
        self.Q = compile_scalar(sys.Q)

    def step(self, x, y, h):
        P, Q = self.P, self.Q
        k1x, k1y = P(x, y), Q(x, y)
        a, b = x + 0.5 * h * k1x, y + 0.5 * h * k1y
        k2x, k2y = P(a, b), Q(a, b)
        a, b = x + 0.5 * h * k2x, y + 0.5 * h * k2y
        k3x, k3y = P(a, b), Q(a, b)
        a, b = x + h * k3x, y + h * k3y
        k4x, k4y = P(a, b), Q(a, b)
        return (
            x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
            y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y),
        )


def _check(x, y, t):
    if not (math.isfinite(x) and math.isfinite(y)) or math.hypot(x, y) > BLOWUP_NORM:
        raise Blowup(f"state norm exceeded {BLOWUP_NORM:g} at t={t:.6g}")


def integrate(sys: PlanarSystem, x0, t_end: float, h: float = DEFAULT_STEP) -> Orbit:
    """RK4 trajectory of x' = P, y' = Q; the last step is shortened to hit t_end."""
    if h <= 0 or t_end <= 0:
        raise ValueError("h and t_end must be positive")
    f = _Field(sys)
    n = int(math.ceil(t_end / h - 1e-9))
    pts = np.empty((n + 1, 2))
    times = np.empty(n + 1)
    x, y = float(x0[0]), float(x0[1])
    pts[0] = x, y
    times[0] = 0.0
    for k in range(1, n + 1):
        t_prev = (k - 1) * h
        hk = min(h, t_end - t_prev)
        x, y = f.step(x, y, hk)
        _check(x, y, t_prev + hk)
        pts[k] = x, y
        times[k] = t_prev + hk if k < n else t_end
    return Orbit(pts, times)


def _first_crossing(f: _Field, sec: Section, x, y, h, t_cap):
    """Flow from (x, y) to the next directed crossing; returns (x, y, t).

    The starting point may lie on the section: only a strict sign change
    from negative to nonnegative after leaving it counts.
    """
    t = 0.0
    d = sec.side(x, y)
    while t < t_cap:
        xn, yn = f.step(x, y, h)
        try:
            _check(xn, yn, t + h)
        except Blowup as e:
            raise NoReturn(f"trajectory escaped before returning to the section: {e}") from e
        dn = sec.side(xn, yn)
        if d < 0 <= dn:
            # exact crossing time inside the step, along the RK4 map itself
            tau = brentq(lambda s: sec.side(*f.step(x, y, s)), 0.0, h, xtol=1e-15, rtol=1e-15)
            cx, cy = f.step(x, y, tau)
            return cx, cy, t + tau
        x, y, d, t = xn, yn, dn, t + h
    raise NoReturn(f"no section crossing within time {t_cap:g}")


def return_map(sys: PlanarSystem, sec: Section, s: float, h: float = DEFAULT_STEP, t_cap: float = TIME_CAP):
    """First return (s', T) of the section coordinate s."""
    x, y, T = _first_crossing(_Field(sys), sec, *sec.at(s), h, t_cap)
    return sec.coordinate(x, y), T


def sample_cycle(sys: PlanarSystem, start, period: float, K: int, h: float = DEFAULT_STEP) -> Orbit:
    """K + 1 points at times period*k/K, each interval split into equal RK4 steps."""
    sub = max(1, int(math.ceil(period / (K * h))))
    hs = period / (K * sub)
    f = _Field(sys)
    pts = np.empty((K + 1, 2))
    x, y = float(start[0]), float(start[1])
    pts[0] = x, y
    for k in range(1, K + 1):
        for _ in range(sub):
            x, y = f.step(x, y, hs)
        _check(x, y, k * period / K)
        pts[k] = x, y
    return Orbit(pts, period * np.arange(K + 1) / K, period)


def find_limit_cycle(
    sys: PlanarSystem,
    section: Section | str,
    x0=None,
    tol: float = 1e-9,
    K: int = 256,
    h: float = DEFAULT_STEP,
    t_cap: float = TIME_CAP,
    max_iter: int = 60,
    closure_tol: float = 1e-6,
) -> Orbit:
    """Fixed point of the return map by a few plain iterations, then secant.

    ``x0`` defaults to one unit along the section from its base point; it is
    flowed to its first crossing before the search starts.  Raises
    ``NonIsolatedCycle`` when the return-map derivative is within 1e-3 of 1.
    """
    sec = Section.parse(section) if isinstance(section, str) else section
    f = _Field(sys)
    start = sec.at(1.0) if x0 is None else (float(x0[0]), float(x0[1]))
    cx, cy, _ = _first_crossing(f, sec, *start, h, t_cap)

    def R(s):
        x, y, T = _first_crossing(f, sec, *sec.at(s), h, t_cap)
        return sec.coordinate(x, y), T

    s = sec.coordinate(cx, cy)
    r, T = R(s)
    g = r - s
    # plain iteration while it contracts: robust for attracting cycles
    for _ in range(8):
        if abs(g) <= tol:
            break
        r2, T2 = R(r)
        g2 = r2 - r
        if abs(g2) >= 0.5 * abs(g):
            if abs(g2) < abs(g):
                s, g, T = r, g2, T2
            break
        s, r, g, T = r, r2, g2, T2
    s_prev, g_prev = s, g
    if abs(g) > tol:
        s = r  # second secant seed
        r, T = R(s)
        g = r - s
    it = 0
    while abs(g) > tol:
        it += 1
        if it > max_iter or g == g_prev:
            raise NotConverged(f"return map residual {abs(g):.3g} after {it} secant steps")
        s_new = s - g * (s - s_prev) / (g - g_prev)
        s_prev, g_prev = s, g
        s = s_new
        r, T = R(s)
        g = r - s

    ds = 1e-5 * max(1.0, abs(s))
    deriv = (R(s + ds)[0] - R(s - ds)[0]) / (2 * ds)
    if abs(deriv - 1.0) < NON_ISOLATED_TOL:
        raise NonIsolatedCycle(
            f"return-map derivative {deriv:.6f} is within {NON_ISOLATED_TOL:g} of 1: "
            "a continuum of periodic orbits, not a limit cycle",
            derivative=deriv,
        )
    orbit = sample_cycle(sys, sec.at(s), T, K, h)
    if orbit.closure_error() > closure_tol:
        raise NotConverged(f"cycle closure error {orbit.closure_error():.3g} exceeds {closure_tol:g}")
    return orbit


def cycle_energy_check(sys: PlanarSystem, orbit: Orbit, K: int = 256) -> float:
    """energy_E0 of the closed orbit, trigonometrically resampled to K points.

    Works for any closed orbit with uniform times, oracle output or not.
    """
    if orbit.period is None:
        raise ValueError("orbit has no period")
    dt = np.diff(orbit.times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("orbit times must be uniform")
    path = orbit.to_path()
    if path.K != K:
        path = interpolate(path, K)
    return energy_E0(path, sys)
