import logging

import numpy as np
import pytest
from conftest import fd_gradient, random_loop, random_system
from hypothesis import given, settings
from hypothesis import strategies as st

from hilbert16.errors import IrregularPath, NotCritical, WindingBroken
from hilbert16.paths import DiscretizedPath, h2_norm_sq, h2_weights, interpolate
from hilbert16.poly import PlanarSystem
from hilbert16.variational import (
    DescentOptions,
    EnergyConfig,
    best_shift,
    descend,
    el_residual,
    energy_config,
    energy_E0,
    energy_Eeps,
    gradient_E0,
    gradient_Eeps,
    hessian_matrix,
    hessian_spectrum,
    make_v_eps,
    morse_census,
    morse_index,
    positively_oriented,
    winding_number,
    write_trace_csv,
    z_profile,
)


def E0_flat(sys, K):
    return lambda u: energy_E0(DiscretizedPath(u.reshape(K, 2)), sys)


# -- energies ------------------------------------------------------------------


def test_E0_unit_circle_zero(cubic_circle):
    assert energy_E0(DiscretizedPath.circle(128), cubic_circle) <= 1e-20


def test_E0_constant_field():
    sys = PlanarSystem.from_strings("1", "0")
    assert energy_E0(DiscretizedPath.circle(64), sys) == pytest.approx(np.pi**2, rel=1e-12)


def test_E0_constant_path(vdp):
    assert energy_E0(DiscretizedPath(np.tile([0.3, 0.2], (32, 1))), vdp) == 0.0


def test_E0_nonnegative_and_zero_iff_Z_zero(rng, cubic_circle):
    for _ in range(10):
        sys = random_system(rng)
        p = random_loop(rng, 32)
        e = energy_E0(p, sys)
        assert e >= 0
        assert (e == 0) == bool(np.all(z_profile(p, sys).z == 0))
    assert np.abs(z_profile(DiscretizedPath.circle(64), cubic_circle).z).max() <= 1e-13


def test_Eeps_without_v(cubic_circle):
    p = DiscretizedPath.circle(64, radius=1.2)
    cfg = EnergyConfig(0.3)
    assert energy_Eeps(p, cubic_circle, cfg) == pytest.approx(
        energy_E0(p, cubic_circle) + 0.15 * h2_norm_sq(p), rel=1e-13
    )


def test_completing_the_square(rng, vdp):
    p = random_loop(rng, 64)
    for eps in (1e-1, 1e-3):
        cfg = energy_config(eps, 64)
        lhs = energy_Eeps(p, vdp, cfg) - energy_E0(p, vdp)
        rhs = 0.5 * eps * h2_norm_sq(p + cfg.v_eps / eps)
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_large_eps_dominance(vdp):
    p = DiscretizedPath.circle(64)
    cfg = energy_config(1e6, 64)
    ratio = energy_Eeps(p, vdp, cfg) / (0.5e6 * h2_norm_sq(p))
    assert abs(ratio - 1) <= 0.01


def test_make_v_eps():
    for eps in (1.0, 1e-3, 1e-6):
        v = make_v_eps(eps, 64, 0.01)
        assert np.sqrt(h2_norm_sq(v)) == pytest.approx(0.01 * eps, rel=1e-12)
        assert winding_number(v).number == 1
    with pytest.raises(ValueError):
        make_v_eps(0.0, 64)


def test_mismatched_v_eps(vdp):
    with pytest.raises(ValueError):
        energy_Eeps(DiscretizedPath.circle(32), vdp, energy_config(0.1, 64))


# -- gradients -----------------------------------------------------------------


def test_gradient_zero_at_exact_zero(cubic_circle):
    assert np.linalg.norm(gradient_E0(DiscretizedPath.circle(128), cubic_circle)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_gradient_E0_matches_fd(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, int(rng.integers(1, 4)))
    p = random_loop(rng, 64)
    g = gradient_E0(p, sys)
    fd = fd_gradient(E0_flat(sys, 64), p.flat().copy())
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) <= 1e-5


def test_gradient_Eeps_matches_fd(rng, vdp):
    p = random_loop(rng, 32)
    cfg = energy_config(1e-2, 32)
    g = gradient_Eeps(p, vdp, cfg)
    fd = fd_gradient(lambda u: energy_Eeps(DiscretizedPath(u.reshape(32, 2)), vdp, cfg), p.flat().copy())
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) <= 1e-5


def test_gradient_time_reversal(rng, vdp):
    p = random_loop(rng, 64)
    g = gradient_E0(p, vdp).reshape(64, 2)
    gr = gradient_E0(p.reversed_time(), vdp).reshape(64, 2)
    np.testing.assert_allclose(gr, DiscretizedPath(g).reversed_time().samples, atol=1e-12 * np.abs(g).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-100, 100))
def test_shift_invariance(seed, k):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, 2)
    p = random_loop(rng, 32)
    q = p.shift(k)
    assert energy_E0(q, sys) == pytest.approx(energy_E0(p, sys), rel=1e-12, abs=1e-14)
    assert h2_norm_sq(q) == pytest.approx(h2_norm_sq(p), rel=1e-12)
    assert winding_number(q) == winding_number(p)
    assert el_residual(q, sys) == pytest.approx(el_residual(p, sys), rel=1e-9, abs=1e-12)


def test_refinement_keeps_E0(rng):
    for _ in range(5):
        sys = random_system(rng, 1)
        K = 32
        p = random_loop(rng, K, modes=K // 4 - 2, noise=0.1)
        assert energy_E0(interpolate(p, 2 * K), sys) == pytest.approx(energy_E0(p, sys), abs=1e-9)


# -- winding -------------------------------------------------------------------


def test_winding_examples():
    K = 64
    assert winding_number(DiscretizedPath.circle(K)).number == 1
    assert winding_number(DiscretizedPath.circle(K).reversed_time()).number == -1
    assert winding_number(DiscretizedPath.circle(K, turns=2)).number == 2


def test_winding_irregular():
    const = DiscretizedPath(np.zeros((32, 2)))
    assert winding_number(const) == (None, False)
    with pytest.raises(IrregularPath):
        winding_number(const, strict=True)


def test_positively_oriented():
    c = DiscretizedPath.circle(32).reversed_time()
    assert winding_number(positively_oriented(c)).number == 1


# -- Euler-Lagrange and Z ------------------------------------------------------


def test_el_residual_on_exact_orbit(cubic_circle):
    assert el_residual(DiscretizedPath.circle(128), cubic_circle) <= 1e-10


def test_z_profile(cubic_circle):
    prof = z_profile(DiscretizedPath.circle(64), cubic_circle)
    assert np.abs(prof.z).max() <= 1e-13
    assert prof.z2_mean <= 1e-26 and prof.z2_var <= 1e-26
    np.testing.assert_allclose(prof.div, -2.0, atol=1e-12)


# -- descent -------------------------------------------------------------------


def test_descend_cubic_circle_small():
    sys = PlanarSystem.from_strings("-y + x*(1 - x^2 - y^2)", "x + y*(1 - x^2 - y^2)")
    res = descend(DiscretizedPath.circle(64, radius=1.3), sys)
    assert energy_E0(res.path, sys) <= 1e-10
    assert np.abs(np.hypot(*res.path.samples.T) - 1).max() <= 1e-3
    assert all(r.winding == 1 for r in res.trace)
    assert res.reason in ("grad_tol", "line_search_stalled")


@pytest.mark.parametrize("policy", ["lbfgs", "bb", "armijo"])
def test_descend_monotone(policy, vdp):
    p = DiscretizedPath.circle(64, radius=2.0)
    res = descend(p, vdp, opts=DescentOptions(step_policy=policy, max_iters=200))
    energies = np.array([r.energy for r in res.trace])
    # accepted steps decrease the exact objective; recomputed values carry rounding
    assert np.all(np.diff(energies) <= 1e-13 * (1 + energies[:-1]))
    assert energies[-1] < energies[0]


def test_descend_start_at_minimizer(cubic_circle):
    p = DiscretizedPath.circle(64)
    res = descend(p, cubic_circle)
    assert res.accepted_steps == 0
    assert np.array_equal(res.path.samples, p.samples)


def test_descend_rejects_bad_winding(cubic_circle):
    with pytest.raises(WindingBroken):
        descend(DiscretizedPath.circle(64).reversed_time(), cubic_circle)
    with pytest.raises(ValueError):
        descend(DiscretizedPath.circle(64), cubic_circle, opts=DescentOptions(step_policy="newton"))


def test_trace_csv(tmp_path, cubic_circle):
    res = descend(DiscretizedPath.circle(32, radius=1.2), cubic_circle, opts=DescentOptions(max_iters=5))
    out = tmp_path / "t.csv"
    write_trace_csv(res.trace, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "iter,energy,grad_norm,winding"
    assert len(lines) == 1 + len(res.trace)


def test_best_shift_brute_force(rng):
    K = 32
    p = random_loop(rng, K)
    v = make_v_eps(0.1, K).samples
    from hilbert16.paths import h2_inner

    vals = [h2_inner(p.shift(k), DiscretizedPath(v)) for k in range(K)]
    k = best_shift(p, v)
    assert vals[k] == pytest.approx(min(vals), rel=1e-10)


def test_eps_descent_positive_definite(cubic_circle):
    K = 32
    cfg = energy_config(1e-2, K)
    res = descend(DiscretizedPath.circle(K, radius=1.3), cubic_circle, cfg, DescentOptions(h2_precondition=True))
    assert res.reason == "grad_tol"
    spec = hessian_spectrum(res.path, cubic_circle, cfg)
    assert spec.eigenvalues[0] >= -1e-6
    assert morse_index(res.path, cubic_circle, cfg) == 0


# -- Hessian and Morse ---------------------------------------------------------


def test_hessian_closed_form():
    # P = 1, Q = 0 leaves x out of E0, so the x block is the bare eps * H2 form
    sys = PlanarSystem.from_strings("1", "0")
    K, eps = 16, 1.0
    H = hessian_matrix(DiscretizedPath.circle(K), sys, energy_config(eps, K))
    ev = np.sort(np.linalg.eigvalsh(H[0::2, 0::2]))
    w = h2_weights(K)
    expected = np.sort(np.concatenate([w, w[1:-1]])) * eps / K
    np.testing.assert_allclose(ev, expected, rtol=1e-6)
    assert np.all(np.linalg.eigvalsh(0.5 * (H + H.T)) > 0)


def test_hessian_symmetry(rng, vdp):
    p = random_loop(rng, 32)
    spec = hessian_spectrum(p, vdp, energy_config(0.1, 32))
    assert spec.asymmetry <= 1e-6
    assert len(spec.eigenvalues) == 64
    assert len(hessian_spectrum(p, vdp, m=5).eigenvalues) == 5
    with pytest.raises(ValueError):
        hessian_spectrum(p, vdp, m=65)


def test_morse_index_requires_critical(vdp):
    with pytest.raises(NotCritical):
        morse_index(DiscretizedPath.circle(32, radius=1.5), vdp)


def test_morse_index_at_zero(cubic_circle):
    assert morse_index(DiscretizedPath.circle(32), cubic_circle) == 0


def test_morse_census(caplog):
    assert morse_census({0: 1}).alternating_sum == 1
    assert morse_census([0]).valley_identity_holds
    c = morse_census({0: 2, 1: 1})
    assert c.alternating_sum == 1 and c.counts == {0: 2, 1: 1}
    with caplog.at_level(logging.WARNING):
        bad = morse_census({0: 1, 1: 1})
    assert bad.alternating_sum == 0 and not bad.valley_identity_holds
    assert "expected 1" in caplog.text
    assert morse_census([0, 1, 0, 2]).alternating_sum == 2


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(0, 6), st.integers(0, 20)))
def test_morse_census_arithmetic(counts):
    c = morse_census(counts)
    assert c.alternating_sum == sum((-1) ** k * v for k, v in counts.items())
