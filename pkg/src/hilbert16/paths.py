"""Uniformly sampled 1-periodic plane paths and their spectral calculus."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class DiscretizedPath:
    """Samples u(k/K), k = 0..K-1, of a 1-periodic curve; no duplicated endpoint."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2:
            raise ValueError("samples must have shape (K, 2)")
        K = s.shape[0]
        if K < 16 or K % 2:
            raise ValueError(f"K must be even and >= 16, got {K}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def K(self) -> int:
        return self.samples.shape[0]

    @property
    def x(self):
        return self.samples[:, 0]

    @property
    def y(self):
        return self.samples[:, 1]

    @property
    def t(self):
        return np.arange(self.K) / self.K

    def flat(self):
        """Interleaved (x0, y0, x1, y1, ...) view used by gradients and Hessians."""
        return self.samples.ravel()

    @classmethod
    def from_flat(cls, v):
        return cls(np.asarray(v, dtype=float).reshape(-1, 2))

    @classmethod
    def from_function(cls, f, K):
        t = np.arange(K) / K
        x, y = f(t)
        return cls(np.column_stack([np.broadcast_to(x, t.shape), np.broadcast_to(y, t.shape)]))

    @classmethod
    def circle(cls, K, radius=1.0, center=(0.0, 0.0), turns=1):
        def f(t):
            a = 2 * np.pi * turns * t
            return center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)

        return cls.from_function(f, K)

    def __add__(self, other):
        return DiscretizedPath(self.samples + _samples(other))

    def __sub__(self, other):
        return DiscretizedPath(self.samples - _samples(other))

    def __mul__(self, c):
        return DiscretizedPath(self.samples * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return DiscretizedPath(self.samples / c)

    def shift(self, k: int):
        return DiscretizedPath(np.roll(self.samples, k, axis=0))

    def reversed_time(self):
        """u(-t): sample k maps to sample -k mod K."""
        idx = (-np.arange(self.K)) % self.K
        return DiscretizedPath(self.samples[idx])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for t, (x, y) in zip(self.t, self.samples):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(np.array([[float(r["x"]), float(r["y"])] for r in rows]))

    def to_json(self):
        return {"kind": "path", "K": self.K, "x": self.x.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(np.column_stack([obj["x"], obj["y"]]))


def _samples(other):
    return other.samples if isinstance(other, DiscretizedPath) else np.asarray(other, dtype=float)


def wavenumbers(K: int) -> np.ndarray:
    """Integer modes 0..K/2 of the real FFT (the last one is the Nyquist mode)."""
    return np.arange(K // 2 + 1)


def spectral_multiplier(K: int, order: int) -> np.ndarray:
    m = wavenumbers(K)
    mult = (2j * np.pi * m) ** order
    if order % 2:
        mult[-1] = 0.0
    return mult


def diff_samples(samples: np.ndarray, order: int) -> np.ndarray:
    """Spectral derivative of samples along axis 0."""
    K = samples.shape[0]
    coeffs = np.fft.rfft(samples, axis=0)
    mult = spectral_multiplier(K, order)
    shape = (-1,) + (1,) * (samples.ndim - 1)
    return np.fft.irfft(coeffs * mult.reshape(shape), n=K, axis=0)


def derivative(path: DiscretizedPath, order: int) -> DiscretizedPath:
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1, 2, 3 or 4")
    return DiscretizedPath(diff_samples(path.samples, order))


def h2_weights(K: int) -> np.ndarray:
    """Per-mode weight of |u|^2 + |u'|^2 + |u''|^2 under the spectral derivatives."""
    m = wavenumbers(K).astype(float)
    w2 = (2 * np.pi * m) ** 2
    w1 = w2.copy()
    w1[-1] = 0.0  # first derivative drops the Nyquist mode
    return 1.0 + w1 + w2**2


def h2_inner(a: DiscretizedPath, b: DiscretizedPath) -> float:
    """Rectangle rule for the integral of a.b + a'.b' + a''.b''."""
    sa, sb = a.samples, b.samples
    d1a, d1b = diff_samples(sa, 1), diff_samples(sb, 1)
    d2a, d2b = diff_samples(sa, 2), diff_samples(sb, 2)
    return float(np.mean(np.sum(sa * sb + d1a * d1b + d2a * d2b, axis=1)))


def h2_norm_sq(path: DiscretizedPath) -> float:
    return h2_inner(path, path)


def h2_apply(samples: np.ndarray) -> np.ndarray:
    """(1 - D^2 + D^4) u in Fourier space, consistent with ``h2_inner``."""
    K = samples.shape[0]
    c = np.fft.rfft(samples, axis=0) * h2_weights(K)[:, None]
    return np.fft.irfft(c, n=K, axis=0)


def h2_solve(samples: np.ndarray) -> np.ndarray:
    """Inverse of ``h2_apply``: the H^2 preconditioner."""
    K = samples.shape[0]
    c = np.fft.rfft(samples, axis=0) / h2_weights(K)[:, None]
    return np.fft.irfft(c, n=K, axis=0)


def interpolate(path: DiscretizedPath, K_new: int) -> DiscretizedPath:
    """Trigonometric interpolation to a different even K (zero padding / truncation)."""
    K = path.K
    c = np.fft.rfft(path.samples, axis=0)
    out = np.zeros((K_new // 2 + 1, 2), dtype=complex)
    n = min(len(c), len(out))
    out[:n] = c[:n]
    if K_new > K:
        out[K // 2] *= 0.5  # split the old Nyquist mode between +-K/2
    elif K_new < K:
        out[-1] = 2 * out[-1].real  # folded +-K_new/2 pair
    return DiscretizedPath(np.fft.irfft(out, n=K_new, axis=0) * (K_new / K))


def radial_noise(path: DiscretizedPath, amplitude: float, seed: int = 0, modes: int = 8) -> DiscretizedPath:
    """Scale each sample about the centroid by 1 + xi(t).

    xi is a random trigonometric polynomial of modes 1..``modes`` with 1/m
    coefficient decay, normalized so that max |xi| = ``amplitude``.
    """
    if amplitude == 0:
        return path
    rng = np.random.default_rng(seed)
    t = path.t
    xi = np.zeros(path.K)
    for m in range(1, min(modes, path.K // 4) + 1):
        a, b = rng.standard_normal(2)
        xi += (a * np.cos(2 * np.pi * m * t) + b * np.sin(2 * np.pi * m * t)) / m
    xi *= amplitude / np.abs(xi).max()
    c = path.samples.mean(axis=0)
    return DiscretizedPath(c + (path.samples - c) * (1.0 + xi[:, None]))
