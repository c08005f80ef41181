"""Energies on discretized periodic paths and their critical points.

For a planar system F = (P, Q) and a path u = (x, y) the basic energy is

    E0(u) = mean over samples of 1/2 Z^2,    Z = P(u) y' - Q(u) x',

which vanishes exactly on reparametrized orbits.  The perturbed energy adds
(eps/2)|u|^2 + <u, v> + |v|^2 / (2 eps) in the discrete H^2 inner product,
i.e. (eps/2) |u + v/eps|^2.  All derivatives in t are spectral.

Gradients are the Euclidean gradients of the discrete objectives with
respect to the 2K sample coordinates in interleaved order (x0, y0, x1, ...).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import IrregularPath, NonFinite, NotCritical, WindingBroken
from .paths import (
    DiscretizedPath,
    diff_samples,
    h2_apply,
    h2_inner,
    h2_norm_sq,
    h2_solve,
)
from .poly import PlanarSystem, Var, differentiate, divergence, eval_increment, eval_point, taylor_terms

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EnergyConfig:
    epsilon: float = 0.0
    v_eps: DiscretizedPath | None = None
    amplitude_factor: float | None = None  # recorded K_v with |v_eps| = K_v * eps
    quadrature: str = "PeriodicRectangle"

    def v_samples(self, K):
        if self.v_eps is None:
            return np.zeros((K, 2))
        if self.v_eps.K != K:
            raise ValueError(f"v_eps has K={self.v_eps.K}, path has K={K}")
        return self.v_eps.samples


class _FieldCache:
    """P, Q and their first partials, built once per system."""

    _cache: dict = {}

    def __init__(self, sys: PlanarSystem):
        self.P, self.Q = sys.P, sys.Q
        self.Px, self.Py = differentiate(sys.P, Var.X), differentiate(sys.P, Var.Y)
        self.Qx, self.Qy = differentiate(sys.Q, Var.X), differentiate(sys.Q, Var.Y)
        self.P_taylor, self.Q_taylor = taylor_terms(sys.P), taylor_terms(sys.Q)

    @classmethod
    def of(cls, sys):
        key = (sys.P, sys.Q)
        hit = cls._cache.get(key)
        if hit is None:
            if len(cls._cache) > 64:
                cls._cache.clear()
            hit = cls._cache[key] = cls(sys)
        return hit


def _z(samples, fc: _FieldCache, d1=None):
    x, y = samples[:, 0], samples[:, 1]
    if d1 is None:
        d1 = diff_samples(samples, 1)
    P = eval_point(fc.P, x, y)
    Q = eval_point(fc.Q, x, y)
    return P * d1[:, 1] - Q * d1[:, 0], P, Q, d1


def energy_E0(path: DiscretizedPath, sys: PlanarSystem) -> float:
    Z = _z(path.samples, _FieldCache.of(sys))[0]
    return float(np.mean(0.5 * Z * Z))


def energy_Eeps(path: DiscretizedPath, sys: PlanarSystem, cfg: EnergyConfig) -> float:
    eps = cfg.epsilon
    if eps <= 0:
        raise ValueError("energy_Eeps needs epsilon > 0; use energy_E0")
    v = DiscretizedPath(cfg.v_samples(path.K))
    return (
        energy_E0(path, sys)
        + 0.5 * eps * h2_norm_sq(path)
        + h2_inner(path, v)
        + h2_norm_sq(v) / (2 * eps)
    )


def _grad_E0_samples(samples, fc: _FieldCache):
    K = samples.shape[0]
    Z, P, Q, d1 = _z(samples, fc)
    x, y = samples[:, 0], samples[:, 1]
    xd, yd = d1[:, 0], d1[:, 1]
    Px, Py = eval_point(fc.Px, x, y), eval_point(fc.Py, x, y)
    Qx, Qy = eval_point(fc.Qx, x, y), eval_point(fc.Qy, x, y)
    # transpose of the first-derivative operator is its negative
    flux = diff_samples(np.column_stack([Z * Q, -Z * P]), 1)
    g = np.column_stack([Z * (Px * yd - Qx * xd), Z * (Py * yd - Qy * xd)]) + flux
    return g / K


def gradient_E0(path: DiscretizedPath, sys: PlanarSystem) -> np.ndarray:
    return _grad_E0_samples(path.samples, _FieldCache.of(sys)).ravel()


def _objective(sys: PlanarSystem, cfg: EnergyConfig, K: int):
    """(f, grad) on (K, 2) sample arrays for E0 or E_eps."""
    fc = _FieldCache.of(sys)
    eps = cfg.epsilon
    v = cfg.v_samples(K)
    Hv = h2_apply(v) if eps > 0 else None
    const = 0.0
    if eps > 0:
        const = float(np.sum(v * Hv)) / K / (2 * eps)

    def f(s):
        Z = _z(s, fc)[0]
        val = float(np.mean(0.5 * Z * Z))
        if eps > 0:
            Hs = h2_apply(s)
            val += 0.5 * eps * float(np.sum(s * Hs)) / K + float(np.sum(s * Hv)) / K + const
        return val

    def grad(s):
        g = _grad_E0_samples(s, fc)
        if eps > 0:
            g = g + (eps * h2_apply(s) + Hv) / K
        return g

    return f, grad


def _objective_delta(sys: PlanarSystem, cfg: EnergyConfig, K: int):
    """f(c) - f(s) without subtracting two large nearly equal values.

    Near a minimizer with large H^2 curvature the decrease of a step is far
    below one ulp of f itself; a line search on raw values then stalls.
    """
    fc = _FieldCache.of(sys)
    eps = cfg.epsilon
    v = cfg.v_samples(K)

    def delta(s, c):
        d = c - s
        Zs, Ps, Qs, d1s = _z(s, fc)
        dd1 = diff_samples(d, 1)
        x, y, dx, dy = s[:, 0], s[:, 1], d[:, 0], d[:, 1]
        dP = eval_increment(fc.P_taylor, x, y, dx, dy)
        dQ = eval_increment(fc.Q_taylor, x, y, dx, dy)
        dZ = dP * (d1s[:, 1] + dd1[:, 1]) + Ps * dd1[:, 1] - dQ * (d1s[:, 0] + dd1[:, 0]) - Qs * dd1[:, 0]
        val = float(np.mean(dZ * (Zs + 0.5 * dZ)))
        if eps > 0:
            # (eps/2)(|w + d|^2 - |w|^2) with w = s + v/eps
            val += 0.5 * eps * float(np.sum(d * h2_apply(2 * s + 2 * v / eps + d))) / K
        return val

    return delta


def gradient_Eeps(path: DiscretizedPath, sys: PlanarSystem, cfg: EnergyConfig) -> np.ndarray:
    return _objective(sys, cfg, path.K)[1](path.samples).ravel()


def objective_value(path, sys, cfg: EnergyConfig | None):
    if cfg is None or cfg.epsilon == 0:
        return energy_E0(path, sys)
    return energy_Eeps(path, sys, cfg)


def make_v_eps(epsilon: float, K: int, amplitude_factor: float = 0.01) -> DiscretizedPath:
    """Counter-clockwise circle scaled so its H^2 norm is amplitude_factor * epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    unit = DiscretizedPath.circle(K)
    c = amplitude_factor * epsilon / np.sqrt(h2_norm_sq(unit))
    return unit * c


def energy_config(epsilon: float, K: int, amplitude_factor: float = 0.01) -> EnergyConfig:
    if epsilon == 0:
        return EnergyConfig(0.0)
    return EnergyConfig(epsilon, make_v_eps(epsilon, K, amplitude_factor), amplitude_factor)


# -- winding -------------------------------------------------------------------


class Winding(NamedTuple):
    number: int | None
    regular: bool


def winding_number(path: DiscretizedPath, reg_tol: float = 1e-8, strict: bool = False) -> Winding:
    """Turns of the tangent u' around the loop.

    The path is regular when min |u'| exceeds ``reg_tol`` times max |u'|;
    otherwise no number is assigned (or IrregularPath is raised if strict).
    """
    d1 = diff_samples(path.samples, 1)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    top = float(speed.max())
    regular = top > 0 and float(speed.min()) > reg_tol * top
    if not regular:
        if strict:
            raise IrregularPath("tangent vanishes somewhere on the path")
        return Winding(None, False)
    ang = np.arctan2(d1[:, 1], d1[:, 0])
    inc = np.diff(np.append(ang, ang[0]))
    inc = (inc + np.pi) % (2 * np.pi) - np.pi
    return Winding(int(np.rint(inc.sum() / (2 * np.pi))), True)


def positively_oriented(path: DiscretizedPath) -> DiscretizedPath:
    """Reverse time on clockwise loops; E0 is unchanged since Z flips sign."""
    w = winding_number(path, strict=True)
    return path.reversed_time() if w.number is not None and w.number < 0 else path


# -- descent -------------------------------------------------------------------


@dataclass
class DescentOptions:
    # "lbfgs" (limited-memory quasi-Newton direction), "bb" (Barzilai-Borwein
    # trial step on the gradient) or "armijo" (growing trial step on the gradient)
    step_policy: str = "lbfgs"
    memory: int = 10
    max_iters: int = 20000
    grad_tol: float = 1e-8
    h2_precondition: bool = False
    initial_step: float = 1.0
    armijo_c: float = 1e-4
    min_step: float = 1e-16
    energy_tol: float = 0.0  # optional early stop on the objective value
    # cap on the largest per-sample displacement of one step, as a fraction of the
    # initial path's spread; keeps the iteration on the flow line instead of
    # leaping over energy barriers into another basin
    max_move: float = 0.02
    # search directions of the bare E0 keep only modes m <= band_limit * K;
    # aliased near-Nyquist sawtooth paths are spurious discrete zeros of E0
    band_limit: float | None = 0.25
    # with epsilon > 0, start from the cyclic shift of the path that minimizes
    # the objective; only <u, v_eps> varies along the shift orbit
    align_shift: bool = True


def best_shift(path: DiscretizedPath, v: np.ndarray) -> int:
    """Shift k minimizing <path.shift(k), v>_{H2}, via one FFT correlation."""
    K = path.K
    hv = h2_apply(np.asarray(v, dtype=float))
    corr = np.fft.ifft(np.conj(np.fft.fft(path.samples, axis=0)) * np.fft.fft(hv, axis=0), axis=0).real
    vals = corr.sum(axis=1) / K
    k = int(np.argmin(vals))
    # keep the path as is unless a shift is strictly better
    return 0 if vals[k] >= vals[0] - 1e-15 * (1 + abs(vals[0])) else k


def _lbfgs_apply(g, memory, precond):
    """Two-loop recursion: approximate inverse Hessian times g."""
    q = g.ravel().copy()
    coef = []
    for sk, yk, rho in reversed(memory):
        a = rho * float(sk @ q)
        coef.append(a)
        q -= a * yk
    shape = g.shape
    if memory:
        sk, yk, rho = memory[-1]
        gamma = float(sk @ yk) / float(yk @ precond(yk.reshape(shape)).ravel())
    else:
        gamma = 1.0
    r = gamma * precond(q.reshape(shape)).ravel()
    for (sk, yk, rho), a in zip(memory, reversed(coef)):
        b = rho * float(yk @ r)
        r += (a - b) * sk
    return r.reshape(shape)


class TraceRow(NamedTuple):
    iter: int
    energy: float
    grad_norm: float
    winding: int


@dataclass
class DescentResult:
    path: DiscretizedPath
    trace: list[TraceRow]
    reason: str
    accepted_steps: int
    grad_norm: float = field(default=float("nan"))

    def __iter__(self):
        yield self.path
        yield self.trace


def descend(
    path: DiscretizedPath,
    sys: PlanarSystem,
    cfg: EnergyConfig | None = None,
    opts: DescentOptions | None = None,
) -> DescentResult:
    """Monotone gradient descent restricted to winding-number +1 paths.

    Every trial point whose winding number differs from +1 is rejected and
    the step halved, exactly like an Armijo failure.
    """
    cfg = cfg or EnergyConfig(0.0)
    opts = opts or DescentOptions()
    w = winding_number(path)
    if w.number != 1:
        raise WindingBroken(f"initial path must have winding number +1, got {w.number}")
    K = path.K
    if opts.step_policy not in ("bb", "armijo", "lbfgs"):
        raise ValueError(f"unknown step policy {opts.step_policy!r}")
    band_mask = None
    if opts.band_limit is not None and cfg.epsilon == 0:
        band_mask = (np.arange(K // 2 + 1) <= opts.band_limit * K).astype(float)

    def band(a):
        if band_mask is None:
            return a
        return np.fft.irfft(np.fft.rfft(a, axis=0) * band_mask[:, None], n=K, axis=0)

    def precond(a):
        return h2_solve(a) * K if opts.h2_precondition else a

    if opts.align_shift and cfg.epsilon > 0:
        path = path.shift(best_shift(path, cfg.v_samples(K)))
    f, grad = _objective(sys, cfg, K)
    delta = _objective_delta(sys, cfg, K)
    s = path.samples.copy()
    fs = f(s)
    g = grad(s)
    trace = [TraceRow(0, fs, float(np.linalg.norm(band(g))), 1)]
    if not np.isfinite(fs):
        raise NonFinite("objective is not finite at the initial path")
    alpha = opts.initial_step
    spread = float(np.max(np.hypot(*(s - s.mean(axis=0)).T)))
    move_cap = opts.max_move * max(spread, 1e-12)
    prev_s = None
    memory: list = []
    prev_gf = None
    reason = "max_iters"
    accepted = 0
    for it in range(1, opts.max_iters + 1):
        gf = band(g)
        gnorm = float(np.linalg.norm(gf))
        if gnorm <= opts.grad_tol:
            reason = "grad_tol"
            break
        if fs <= opts.energy_tol:
            reason = "energy_tol"
            break
        if opts.step_policy == "lbfgs":
            if prev_s is not None:
                sk, yk = (s - prev_s).ravel(), (gf - prev_gf).ravel()
                sy = float(sk @ yk)
                if sy > 1e-12 * float(np.linalg.norm(sk) * np.linalg.norm(yk)):
                    memory.append((sk, yk, 1.0 / sy))
                    if len(memory) > opts.memory:
                        memory.pop(0)
            d = -_lbfgs_apply(gf, memory, precond)
            if float(np.sum(g * d)) >= 0:
                memory.clear()
                d = -precond(gf)
            alpha = opts.initial_step
        else:
            d = -precond(gf)
            if opts.step_policy == "bb" and prev_s is not None:
                ds, dg = s - prev_s, gf - prev_gf
                sy = float(np.sum(ds * dg))
                yy = float(np.sum(dg * precond(dg)))
                trial = sy / yy if sy > 0 and yy > 0 else alpha * 2
                alpha = float(np.clip(trial, 1e-12, 1e12))
            elif opts.step_policy == "armijo":
                alpha = min(alpha * 2.0, 1e12) if it > 1 else opts.initial_step
        slope = float(np.sum(g * d))
        dmax = float(np.max(np.abs(d)))
        if alpha * dmax > move_cap:
            alpha = move_cap / dmax
        step = alpha
        winding_rejected = False
        while step >= opts.min_step:
            cand = s + step * d
            df = delta(s, cand)  # non-finite trials just backtrack
            if np.isfinite(df) and df <= min(opts.armijo_c * step * slope, 0.0):
                if winding_number(DiscretizedPath(cand)).number == 1:
                    break
                winding_rejected = True
            step *= 0.5
        else:
            if winding_rejected:
                raise WindingBroken("no winding-preserving step above the minimal step")
            if memory:
                memory.clear()  # stale curvature pairs: retry along the plain gradient
                prev_s = None
                continue
            reason = "line_search_stalled"
            break
        prev_s, prev_gf = s, gf
        s, fs = cand, f(cand)
        g = grad(s)
        alpha = step
        accepted += 1
        if not np.isfinite(fs) or not np.all(np.isfinite(g)):
            raise NonFinite("objective or gradient became non-finite")
        trace.append(TraceRow(it, fs, float(np.linalg.norm(band(g))), 1))
    out = DiscretizedPath(s)
    return DescentResult(out, trace, reason, accepted, float(np.linalg.norm(band(g))))


def write_trace_csv(trace, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "energy", "grad_norm", "winding"])
        for row in trace:
            w.writerow([row.iter, repr(row.energy), repr(row.grad_norm), row.winding])


# -- Euler-Lagrange residual and Z diagnostics ----------------------------------


def el_residual(path: DiscretizedPath, sys: PlanarSystem, cfg: EnergyConfig | None = None) -> float:
    """L2 norm of the continuum critical-path equation evaluated spectrally.

    eps (u'''' - u'' + u) - (Z F_perp)' + Z (u')^T DF_perp + (v'''' - v'' + v)
    with F_perp = (-Q, P).
    """
    cfg = cfg or EnergyConfig(0.0)
    s = path.samples
    fc = _FieldCache.of(sys)
    Z, P, Q, d1 = _z(s, fc)
    x, y = s[:, 0], s[:, 1]
    xd, yd = d1[:, 0], d1[:, 1]
    Px, Py = eval_point(fc.Px, x, y), eval_point(fc.Py, x, y)
    Qx, Qy = eval_point(fc.Qx, x, y), eval_point(fc.Qy, x, y)
    r = diff_samples(np.column_stack([Z * Q, -Z * P]), 1)
    r = r + np.column_stack([Z * (Px * yd - Qx * xd), Z * (Py * yd - Qy * xd)])
    if cfg.epsilon > 0:
        v = cfg.v_samples(path.K)
        r = r + cfg.epsilon * _h2_operator(s) + _h2_operator(v)
    return float(np.sqrt(np.mean(np.sum(r * r, axis=1))))


def _h2_operator(s):
    return diff_samples(s, 4) - diff_samples(s, 2) + s


@dataclass(frozen=True)
class ZProfile:
    z: np.ndarray
    z2_mean: float
    z2_var: float
    div: np.ndarray


def z_profile(path: DiscretizedPath, sys: PlanarSystem) -> ZProfile:
    Z = _z(path.samples, _FieldCache.of(sys))[0]
    z2 = Z * Z
    div = eval_point(divergence(sys), path.x, path.y)
    return ZProfile(Z, float(z2.mean()), float(z2.var()), div)


# -- Hessian and Morse bookkeeping -------------------------------------------


@dataclass(frozen=True)
class HessianSpectrum:
    eigenvalues: np.ndarray  # the m smallest, ascending
    lambda_max: float
    asymmetry: float  # |H - H^T| / |H| before symmetrization


def hessian_matrix(path, sys, cfg: EnergyConfig | None = None, step: float = 1e-5):
    cfg = cfg or EnergyConfig(0.0)
    K = path.K
    grad = _objective(sys, cfg, K)[1]
    u = path.flat().copy()
    n = u.size
    H = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        gp = grad((u + e).reshape(K, 2)).ravel()
        gm = grad((u - e).reshape(K, 2)).ravel()
        H[:, k] = (gp - gm) / (2 * step)
    if not np.all(np.isfinite(H)):
        raise NonFinite("Hessian has non-finite entries")
    return H


def hessian_spectrum(path, sys, cfg: EnergyConfig | None = None, m: int | None = None, step: float = 1e-5):
    K = path.K
    m = 2 * K if m is None else m
    if m > 2 * K:
        raise ValueError("m must be <= 2K")
    H = hessian_matrix(path, sys, cfg, step)
    norm = np.linalg.norm(H)
    asym = float(np.linalg.norm(H - H.T) / norm) if norm > 0 else 0.0
    Hs = 0.5 * (H + H.T)
    ev = np.linalg.eigvalsh(Hs)
    return HessianSpectrum(ev[:m], float(np.max(np.abs(ev))), asym)


def index_tolerance(lambda_max: float) -> float:
    return 1e-6 * (1.0 + abs(lambda_max))


def morse_index(path, sys, cfg: EnergyConfig | None = None, grad_tol: float = 1e-8) -> int:
    cfg = cfg or EnergyConfig(0.0)
    g = _objective(sys, cfg, path.K)[1](path.samples)
    gn = float(np.linalg.norm(g))
    if gn > 10 * grad_tol:
        raise NotCritical(f"gradient norm {gn:.3g} exceeds {10 * grad_tol:.3g}")
    spec = hessian_spectrum(path, sys, cfg)
    return int(np.sum(spec.eigenvalues < -index_tolerance(spec.lambda_max)))


@dataclass(frozen=True)
class MorseCensus:
    counts: dict[int, int]
    alternating_sum: int

    @property
    def valley_identity_holds(self):
        return self.alternating_sum == 1

    def to_json(self):
        return {
            "kind": "morse_census",
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "alternating_sum": self.alternating_sum,
            "valley_identity_holds": self.valley_identity_holds,
        }


def morse_census(indices) -> MorseCensus:
    """Aggregate indices; accepts a sequence of indices or a {index: count} map."""
    if isinstance(indices, dict):
        counts = {int(k): int(v) for k, v in indices.items() if v}
    else:
        counts = {}
        for k in indices:
            counts[int(k)] = counts.get(int(k), 0) + 1
    alt = sum((-1) ** k * c for k, c in counts.items())
    census = MorseCensus(dict(sorted(counts.items())), alt)
    if not census.valley_identity_holds:
        log.warning("Morse census %s has alternating sum %d, expected 1", census.counts, alt)
    return census


DEFAULT_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def continuation(
    path: DiscretizedPath,
    sys: PlanarSystem,
    schedule=DEFAULT_SCHEDULE,
    opts: DescentOptions | None = None,
    amplitude_factor: float = 0.01,
) -> list[tuple[float, DescentResult]]:
    """Descend E_eps for each epsilon in turn, warm-starting from the last path."""
    out = []
    for eps in schedule:
        res = descend(path, sys, energy_config(eps, path.K, amplitude_factor), opts)
        out.append((eps, res))
        path = res.path
    return out
