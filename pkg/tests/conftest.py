import numpy as np
import pytest

from hilbert16.paths import DiscretizedPath
from hilbert16.poly import BivariatePoly, PlanarSystem

VDP = ("y - (x^3/3 - x)", "-x")
CUBIC_CIRCLE = ("-y + x*(1 - x^2 - y^2)", "x + y*(1 - x^2 - y^2)")
CENTER = ("-y", "x")


@pytest.fixture
def vdp():
    return PlanarSystem.from_strings(*VDP, name="vdp")


@pytest.fixture
def cubic_circle():
    return PlanarSystem.from_strings(*CUBIC_CIRCLE, name="cubic circle")


@pytest.fixture
def center():
    return PlanarSystem.from_strings(*CENTER, name="center")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_system(rng, degree=3):
    """Dense random system with coefficients shrinking with the monomial degree."""
    def poly():
        return BivariatePoly({(i, j): rng.normal() / (1 + i + j) for i in range(degree + 1) for j in range(degree + 1 - i)})

    return PlanarSystem(poly(), poly())


def random_loop(rng, K, modes=4, noise=0.2):
    """Unit circle plus a small band-limited perturbation."""
    t = np.arange(K) / K
    s = np.column_stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)])
    for m in range(2, modes + 2):
        a, b = rng.normal(size=(2, 2)) * noise / m
        s += np.outer(np.cos(2 * np.pi * m * t), a) + np.outer(np.sin(2 * np.pi * m * t), b)
    return DiscretizedPath(s)


def fd_gradient(f, u, step=1e-6):
    g = np.empty(u.size)
    for k in range(u.size):
        e = np.zeros(u.size)
        e[k] = step
        g[k] = (f(u + e) - f(u - e)) / (2 * step)
    return g


def linear(a, b, c):
    return BivariatePoly({(1, 0): a, (0, 1): b, (0, 0): c})


def product_system(seed):
    """p = L1 L2, q = L3 L4 on the window [-3, 3]^2; roots are known in closed form.

    Returns (p, q, roots) or None when the draw is badly conditioned.
    """
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(4):
        ang = rng.uniform(0, np.pi)
        a, b = np.cos(ang), np.sin(ang)
        x0, y0 = rng.uniform(-2, 2, 2)
        lines.append((a, b, -(a * x0 + b * y0)))
    roots = []
    for i in (0, 1):
        for j in (2, 3):
            A = np.array([lines[i][:2], lines[j][:2]])
            if abs(np.linalg.det(A)) < 0.2:
                return None
            roots.append(np.linalg.solve(A, [-lines[i][2], -lines[j][2]]))
    roots = np.array(roots)
    inside = [r for r in roots if np.all(np.abs(r) < 3)]
    # roots must be separated, not shared between factors, and clear of the window edge
    for k in range(len(roots)):
        for m in range(k + 1, len(roots)):
            if np.hypot(*(roots[k] - roots[m])) < 1e-2:
                return None
    if np.any(np.abs(np.abs(roots) - 3) < 0.05):
        return None
    p = linear(*lines[0]) * linear(*lines[1])
    q = linear(*lines[2]) * linear(*lines[3])
    return p, q, np.array(inside).reshape(-1, 2)


def constructed_suite(count=50):
    out, seed = [], 0
    while len(out) < count:
        s = product_system(seed)
        seed += 1
        if s is not None:
            out.append(s)
    return out
