import numpy as np
import pytest

from nodal_lab.bessel import j0, j0_first_zero
from nodal_lab.field import (DerivativeJet, KernelSpec, kernel_derivatives,
                             sample_rpw, sample_smooth_stationary)
from nodal_lab.rng import trial_rng

from conftest import rng_for


def test_rpw_rejects_low_wave_count(rng):
    with pytest.raises(ValueError):
        sample_rpw(1.0, 8, rng)
    with pytest.raises(ValueError):
        sample_rpw(-1.0, 64, rng)


def test_rpw_variance_normalisation():
    # variance of Psi at a fixed point over many independent samples
    x = np.array([[0.37, -1.21]])
    vals = np.array([sample_rpw(1.0, 64, rng_for("var", i)).evaluate(x)[0]
                     for i in range(4000)])
    se = np.sqrt(2.0 / len(vals))          # var of the variance estimator
    assert abs(vals.var() - 1.0) < 3 * se + 3 * 64**-0.5 * 0.1


def test_helmholtz_identity_exact():
    s = sample_rpw(1.7, 64, rng_for("helm"))
    for p in rng_for("helm-pts").uniform(-4, 4, size=(30, 2)):
        J = s.jet(p, order=2)
        assert abs(np.trace(J.hess) + 1.7**2 * J.value) < 1e-12 * max(1.0, abs(J.value))


def test_jet_matches_finite_differences():
    s = sample_rpw(1.0, 64, rng_for("fd"))
    p = np.array([0.3, -0.8])
    h = 1e-5
    J = s.jet(p, order=3)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd = (s.evaluate([p + e])[0] - s.evaluate([p - e])[0]) / (2 * h)
        assert abs(J.grad[axis] - fd) < 1e-6 * max(1.0, abs(fd))
        fd2 = (s.evaluate([p + e])[0] - 2 * s.evaluate([p])[0] + s.evaluate([p - e])[0]) / h**2
        assert abs(J.hess[axis, axis] - fd2) < 1e-4
    # third derivative via gradient differences
    e = np.array([h, 0.0])
    g1 = s.jet(p + e, order=2).hess
    g0 = s.jet(p - e, order=2).hess
    fd3 = (g1 - g0) / (2 * h)
    assert np.abs(J.third[0] - fd3).max() < 1e-4


def test_jet_order_validation():
    s = sample_rpw(1.0, 64, rng_for("jet"))
    with pytest.raises(ValueError):
        s.jet(np.zeros(2), order=4)


def test_covariance_at_first_bessel_zero():
    # E[Psi(0) Psi(s)] vanishes at the first zero of J0 (within MC + M bias)
    d = j0_first_zero()
    n = 6000
    m = 128
    vals = np.empty(n)
    for i in range(n):
        s = sample_rpw(1.0, m, rng_for("zero-cov", i))
        v = s.evaluate(np.array([[0.0, 0.0], [d, 0.0]]))
        vals[i] = v[0] * v[1]
    sigma = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean()) < 3 * sigma + 0.5 * m**-0.5


def test_covariance_matches_j0_at_random_displacements():
    n = 4000
    m = 128
    rng = rng_for("cov-d")
    disps = rng.uniform(-4, 4, size=(12, 2))
    prods = np.empty((n, len(disps)))
    pts = np.vstack([np.zeros((1, 2)), disps])
    for i in range(n):
        s = sample_rpw(1.0, m, rng_for("cov-s", i))
        v = s.evaluate(pts)
        prods[i] = v[0] * v[1:]
    want = j0(np.linalg.norm(disps, axis=1))
    got = prods.mean(axis=0)
    sig = prods.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(got - want) < 3 * sig + 1.0 * m**-0.5)


def test_value_derivative_parity_independence():
    # E[Psi(0) Psi_v(0)] = 0: derivatives of different parity are independent
    n = 6000
    prods = np.empty(n)
    for i in range(n):
        s = sample_rpw(1.0, 64, rng_for("parity", i))
        J = s.jet(np.zeros(2), order=1)
        prods[i] = J.value * J.grad[0]
    assert abs(prods.mean()) < 3 * prods.std(ddof=1) / np.sqrt(n)


def test_derivative_variance_matches_kernel():
    # Var(Psi_v) = -kappa_vv(0) = k^2/2
    k = 1.3
    n = 6000
    g = np.empty(n)
    for i in range(n):
        s = sample_rpw(k, 64, rng_for("dvar", i))
        g[i] = s.jet(np.zeros(2), order=1).grad[0]
    se = np.sqrt(2.0 / n) * (k**2 / 2)
    assert abs(g.var() - k * k / 2) < 3 * se + 0.3 * 64**-0.5


def test_kernel_derivatives_values():
    k = KernelSpec("rpw", k=1.0)
    assert abs(k.radial(0.0) - 1.0) < 1e-14
    assert abs(k.kvv0() + 0.5) < 1e-12          # -k^2/2 at k=1
    gk = KernelSpec("gaussian", sigma=2.0)
    assert abs(gk.radial(0.0) - 1.0) < 1e-14
    r = 1.7
    assert abs(gk.radial(r) - np.exp(-r * r / 16.0)) < 1e-14
    # directional derivatives against finite differences
    s = np.array([0.8, -0.4])
    h = 1e-6
    val, grad, hess = kernel_derivatives(k, s, 2)
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd = (k.radial(np.linalg.norm(s + e)) - k.radial(np.linalg.norm(s - e))) / (2 * h)
        assert abs(grad[axis] - fd) < 1e-7


def test_rescale_to_unit_curvature():
    k = KernelSpec("rpw", k=1.0)
    resc, lam = k.rescale_to_unit_curvature()
    assert abs(resc.kvv0() + 2.0) < 1e-12
    assert abs(lam - 2.0) < 1e-12


def test_grid_sampler_covariance_identity():
    # white noise * gaussian bump has covariance exp(-r^2/(4 sigma^2));
    # cross-checked against numerical self-convolution of the bump
    sigma = 1.0
    ker = KernelSpec("gaussian", sigma=sigma)
    pts = np.array([[4.2, 9.1], [5.2, 9.1], [4.2, 11.1]])
    n = 2500
    vals = np.empty((n, 3))
    for i in range(n):
        g = sample_smooth_stationary(ker, 20.0, 80, rng_for("gcov", i))
        vals[i] = g.evaluate(pts)
    var = vals[:, 0].var()
    assert abs(var - 1.0) < 3 * np.sqrt(2.0 / n)
    for j, r in ((1, 1.0), (2, 2.0)):
        got = (vals[:, 0] * vals[:, j]).mean()
        sig = (vals[:, 0] * vals[:, j]).std(ddof=1) / np.sqrt(n)
        # oracle: numerical convolution of the bump with itself
        xs = np.linspace(-8, 8, 801)
        bump = np.exp(-xs**2 / (2 * sigma**2))
        conv = np.convolve(bump, bump, mode="same")
        conv /= conv.max()
        want = conv[np.argmin(np.abs(xs - r))] * np.exp(0)  # 1D marginal factor
        want_analytic = np.exp(-r * r / (4 * sigma**2))
        assert abs(want - np.exp(-r * r / (4 * sigma**2))) < 1e-3
        assert abs(got - want_analytic) < 3 * sig
    # positivity of the covariance: sampled estimate never strongly negative
    assert (vals[:, 0] * vals[:, 1]).mean() > -3 * sig


def test_grid_sampler_preconditions():
    ker = KernelSpec("gaussian", sigma=1.0)
    with pytest.raises(ValueError):
        sample_smooth_stationary(ker, 5.0, 64, rng_for("pre"))
    with pytest.raises(ValueError):
        sample_smooth_stationary(ker, 20.0, 10, rng_for("pre"))


def test_grid_jets_match_finite_differences():
    ker = KernelSpec("gaussian", sigma=1.0)
    g = sample_smooth_stationary(ker, 20.0, 80, rng_for("gjet"))
    p = np.array([7.3, 3.9])
    h = 1e-5
    J = g.jet(p, order=3)
    fd = (g.evaluate([p + [h, 0]])[0] - g.evaluate([p - [h, 0]])[0]) / (2 * h)
    assert abs(J.grad[0] - fd) < 1e-6
    fdyy = (g.evaluate([p + [0, h]])[0] - 2 * g.evaluate([p])[0] +
            g.evaluate([p - [0, h]])[0]) / h**2
    assert abs(J.hess[1, 1] - fdyy) < 1e-3


def test_sampling_determinism():
    a = sample_rpw(1.0, 64, trial_rng(7, "det", 3))
    b = sample_rpw(1.0, 64, trial_rng(7, "det", 3))
    pts = rng_for("det-pts").uniform(-3, 3, (50, 2))
    assert np.array_equal(a.evaluate(pts), b.evaluate(pts))
