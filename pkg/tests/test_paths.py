import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilbert16.paths import (
    DiscretizedPath,
    derivative,
    h2_apply,
    h2_inner,
    h2_norm_sq,
    h2_solve,
    h2_weights,
    interpolate,
    radial_noise,
)


def band_limited(rng, K, modes, scale=1.0):
    t = np.arange(K) / K
    s = np.zeros((K, 2))
    for m in range(1, modes + 1):
        a, b = rng.normal(size=(2, 2)) * scale / m
        s += np.outer(np.cos(2 * np.pi * m * t), a) + np.outer(np.sin(2 * np.pi * m * t), b)
    return DiscretizedPath(s + rng.normal(size=2))


def test_validation():
    with pytest.raises(ValueError):
        DiscretizedPath(np.zeros((15, 2)))
    with pytest.raises(ValueError):
        DiscretizedPath(np.zeros((17, 2)))
    with pytest.raises(ValueError):
        DiscretizedPath(np.zeros((16, 3)))


def test_circle_derivative():
    K = 64
    c = DiscretizedPath.circle(K)
    a = 2 * np.pi * c.t
    d = derivative(c, 1).samples
    np.testing.assert_allclose(d, np.column_stack([-2 * np.pi * np.sin(a), 2 * np.pi * np.cos(a)]), atol=1e-12)


def test_constant_derivative_zero():
    c = DiscretizedPath(np.tile([3.0, -1.0], (32, 1)))
    for order in (1, 2, 4):
        assert np.abs(derivative(c, order).samples).max() <= 1e-12


def test_second_twice_is_fourth(rng):
    p = band_limited(rng, 64, 10)
    twice = derivative(derivative(p, 2), 2).samples
    np.testing.assert_allclose(twice, derivative(p, 4).samples, atol=1e-9 * np.abs(twice).max())


def test_h2_unit_circle():
    val = h2_norm_sq(DiscretizedPath.circle(128))
    assert val == pytest.approx(1 + (2 * np.pi) ** 2 + (2 * np.pi) ** 4, rel=1e-12)
    assert val == pytest.approx(1599.0239, abs=1e-4)


def test_h2_zero_and_scaling(rng):
    assert h2_norm_sq(DiscretizedPath(np.zeros((32, 2)))) == 0
    p = band_limited(rng, 32, 5)
    assert h2_norm_sq(p * 3.0) == pytest.approx(9 * h2_norm_sq(p), rel=1e-12)


def test_h2_apply_consistent(rng):
    a, b = band_limited(rng, 32, 15), band_limited(rng, 32, 15)
    lhs = h2_inner(a, b)
    rhs = float(np.mean(np.sum(a.samples * h2_apply(b.samples), axis=1)))
    assert lhs == pytest.approx(rhs, rel=1e-10)
    np.testing.assert_allclose(h2_solve(h2_apply(a.samples)), a.samples, atol=1e-10)
    assert h2_weights(32)[0] == 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-40, 40))
def test_shift_invariance(seed, k):
    p = band_limited(np.random.default_rng(seed), 32, 8)
    assert h2_norm_sq(p.shift(k)) == pytest.approx(h2_norm_sq(p), rel=1e-12)


def test_interpolate_roundtrip(rng):
    p = band_limited(rng, 32, 7)
    up = interpolate(p, 64)
    np.testing.assert_allclose(up.samples[::2], p.samples, atol=1e-12)
    np.testing.assert_allclose(interpolate(up, 32).samples, p.samples, atol=1e-12)
    assert h2_norm_sq(up) == pytest.approx(h2_norm_sq(p), rel=1e-10)


def test_radial_noise():
    c = DiscretizedPath.circle(128, radius=2.0)
    n = radial_noise(c, 0.05, seed=0)
    r = np.hypot(*n.samples.T) / 2.0
    assert np.abs(r - 1).max() == pytest.approx(0.05, rel=1e-9)
    assert np.array_equal(n.samples, radial_noise(c, 0.05, seed=0).samples)
    assert radial_noise(c, 0.0) is c


def test_io_roundtrip(tmp_path, rng):
    p = band_limited(rng, 32, 5)
    f = tmp_path / "p.csv"
    p.to_csv(f)
    assert np.array_equal(DiscretizedPath.from_csv(f).samples, p.samples)
    assert np.array_equal(DiscretizedPath.from_json(p.to_json()).samples, p.samples)


def test_reversed_time_involution(rng):
    p = band_limited(rng, 32, 5)
    assert np.array_equal(p.reversed_time().reversed_time().samples, p.samples)
    assert np.array_equal(p.reversed_time().samples[0], p.samples[0])
