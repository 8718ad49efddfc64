import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from nodal_lab.field import KernelSpec, sample_rpw
from nodal_lab.kacrice import (DegenerateCovariance, count_critical_points_grid,
                               critical_point_expectation, double_crossing_expectation,
                               folded_two_moment, folded_two_moment_mc,
                               gaussian_regression, hessian_eigenvalues,
                               hessian_sampler, rpw_profiles, sample_hessian_matrices,
                               single_crossing_intensity, small_ball_probability,
                               three_point_ratio, two_point_ratio)

from conftest import rng_for


def test_regression_examples():
    # independence
    r = gaussian_regression(np.eye(2), np.zeros((2, 1)), np.eye(1), [1.0])
    assert np.allclose(r.mean, 0.0) and np.allclose(r.cov, np.eye(2))
    # scalar bivariate
    rho = 0.37
    r = gaussian_regression([[1.0]], [[rho]], [[1.0]], [1.0])
    assert abs(r.mean[0] - rho) < 1e-14
    assert abs(r.cov[0, 0] - (1 - rho * rho)) < 1e-14
    # 2+1 block from direct matrix arithmetic
    r = gaussian_regression(np.eye(2), np.array([[0.3], [0.1]]), [[1.0]], [2.0])
    assert np.allclose(r.mean, [0.6, 0.2])
    assert np.allclose(np.diag(r.cov), [0.91, 0.99])
    assert abs(r.cov[0, 1] + 0.03) < 1e-14


def test_regression_singular_rejected():
    with pytest.raises(DegenerateCovariance):
        gaussian_regression(np.eye(2), np.zeros((2, 2)),
                            np.array([[1.0, 1.0], [1.0, 1.0]]), [0.0, 0.0])


@given(hnp.arrays(np.float64, (3, 3), elements=st.floats(-1.0, 1.0)),
       st.floats(0.1, 2.0))
@settings(max_examples=60, deadline=None)
def test_regression_covariance_psd(a, scale):
    sigma = a @ a.T + scale * np.eye(3)
    d = np.sqrt(np.diag(sigma))
    sigma = sigma / np.outer(d, d)
    r = gaussian_regression(sigma[:2, :2], sigma[:2, 2:], sigma[2:, 2:], [0.7])
    assert np.linalg.eigvalsh(r.cov).min() > -1e-9


def test_single_crossing_closed_forms():
    k = KernelSpec("rpw", k=1.0)
    assert abs(single_crossing_intensity(k, 0.0) - 1.0 / (np.pi * np.sqrt(2))) < 1e-14
    resc, _ = k.rescale_to_unit_curvature()
    assert abs(single_crossing_intensity(resc, 0.0) - np.sqrt(2) / np.pi) < 1e-14
    # high level: standard normal density factor
    r = single_crossing_intensity(k, 5.0) / single_crossing_intensity(k, 0.0)
    assert abs(r - np.exp(-12.5)) < 1e-16


def test_single_crossing_mc_many_directions():
    # intensity * length matches sign-change counts along random directions
    k = KernelSpec("rpw", k=1.0)
    lam = single_crossing_intensity(k, 0.0)
    rng = rng_for("sc-dirs")
    n = 800
    seg = 4.0
    npts = 129
    t = np.linspace(0, seg, npts)
    for trial in range(3):
        ang = rng.uniform(0, 2 * np.pi)
        v = np.array([np.cos(ang), np.sin(ang)])
        counts = np.empty(n)
        for i in range(n):
            s = sample_rpw(1.0, 64, rng_for(f"sc{trial}", i))
            vals = s.evaluate(t[:, None] * v[None, :])
            counts[i] = ((vals[:-1] < 0) != (vals[1:] < 0)).sum()
        got = counts.mean() / seg
        se = counts.std(ddof=1) / np.sqrt(n) / seg
        assert abs(got - lam) < 3 * se + 0.5 * 64**-0.5 * lam


def test_folded_moment_closed_vs_mc():
    rng = rng_for("folded")
    for _ in range(3):
        a = rng.standard_normal((2, 2))
        cov = a @ a.T + 0.2 * np.eye(2)
        mean = rng.standard_normal(2) * rng.choice([0.0, 1.0])
        got = folded_two_moment(mean, cov)
        mc = folded_two_moment_mc(mean, cov, 300_000, rng)
        assert abs(got - mc) < 0.02 * max(mc, 0.1)


def test_two_point_ratio_spec_values():
    f = lambda x: 1 - x * x
    g = lambda x: -2 * x
    assert abs(two_point_ratio(f, g, 0.1).ratio - 5.127e-3) < 1e-6
    assert abs(two_point_ratio(f, g, 0.05).ratio - 1.258e-3) < 1e-6
    with pytest.raises(DegenerateCovariance):
        two_point_ratio(lambda x: 1.0, g, 0.1)


def test_two_point_ratio_bounded_for_rpw():
    f, g, _ = rpw_profiles(KernelSpec("rpw", k=1.0))
    vals = [two_point_ratio(f, g, float(x)).ratio / x**2
            for x in np.geomspace(0.01, 0.5, 24)]
    assert max(vals) < 10.0 * min(vals)
    assert max(vals) < 2.0


def test_three_point_ratio_bound_and_preconditions():
    kernel = KernelSpec("rpw", k=1.0)
    rng = rng_for("tri-ratio")
    quantities = []
    for _ in range(200):
        eps = float(rng.uniform(0.05, 0.2))
        pts = rng.uniform(0, 1, (3, 2))
        side = max(np.linalg.norm(pts[a] - pts[b]) for a in range(3) for b in range(a))
        pts = pts / side * eps
        ang = rng.uniform(0, 2 * np.pi, 3)
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        try:
            rep = three_point_ratio(kernel, pts, dirs)
        except ValueError:
            continue
        quantities.append(rep.config["bound_quantity"])
    assert len(quantities) > 100
    assert max(quantities) < 50.0
    # collinear points rejected through the angle precondition
    pts = np.array([[0.0, 0.0], [0.05, 0.0], [0.1, 0.0]])
    with pytest.raises(ValueError):
        three_point_ratio(kernel, pts, np.eye(3)[:, :2] * 0 + [1, 0])


def test_three_point_ratio_isoceles_edge_of_precondition():
    kernel = KernelSpec("rpw", k=1.0)
    eps = 0.1
    alpha = eps ** 1.5 * 1.05
    base = np.array([[0.0, 0.0], [eps, 0.0]])
    apex = np.array([eps * np.cos(alpha), eps * np.sin(alpha)])
    pts = np.vstack([base, apex])
    dirs = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
    rep = three_point_ratio(kernel, pts, dirs)
    assert np.isfinite(rep.config["bound_quantity"])


def test_double_crossing_regimes():
    kernel = KernelSpec("rpw", k=1.0)
    seg = ((0.0, 0.0), (1.0, 0.0))
    tra = ((0.5, -0.5), (0.5, 0.5))
    e_col = {e: double_crossing_expectation(kernel, 0.0, seg, seg, eps=e, n_panel=10).value
             for e in (0.4, 0.2)}
    e_tra = {e: double_crossing_expectation(kernel, 0.0, seg, tra, eps=e, n_panel=10).value
             for e in (0.4, 0.2)}
    assert abs(e_col[0.4] / e_col[0.2] - 8.0) < 2.0
    assert abs(e_tra[0.4] / e_tra[0.2] - 2.0) < 0.5
    # level decay: expectation decreases in the level
    hi = double_crossing_expectation(kernel, 2.0, seg, seg, eps=0.4, n_panel=6).value
    assert hi < e_col[0.4]


def test_double_crossing_quadrature_vs_mc():
    # transverse unit segments: quadrature against MC pair counts
    kernel = KernelSpec("rpw", k=1.0)
    s1 = ((0.0, 0.0), (1.0, 0.0))
    s2 = ((0.5, -0.6), (0.5, 0.4))
    quad = double_crossing_expectation(kernel, 0.0, s1, s2, eps=1.0, n_panel=12).value
    n = 20000
    npts = 257
    t = np.linspace(0, 1, npts)
    a1, b1 = np.array(s1)
    a2, b2 = np.array(s2)
    p1 = a1 + t[:, None] * (b1 - a1)
    p2 = a2 + t[:, None] * (b2 - a2)
    counts = np.empty(n)
    for i in range(n):
        s = sample_rpw(1.0, 64, rng_for("dc-mc", i))
        v1 = s.evaluate(p1)
        v2 = s.evaluate(p2)
        c1 = ((v1[:-1] < 0) != (v1[1:] < 0)).sum()
        c2 = ((v2[:-1] < 0) != (v2[1:] < 0)).sum()
        counts[i] = c1 * c2
    got = counts.mean()
    se = counts.std(ddof=1) / np.sqrt(n)
    assert abs(got - quad) < max(3 * se, 0.05 * quad)


def test_hessian_entry_moments():
    m = sample_hessian_matrices(400_000, rng_for("hess"))
    se = 3.0 / np.sqrt(len(m))
    assert abs((m[:, 0] ** 2).mean() - 1.5) < 4 * se
    assert abs((m[:, 2] ** 2).mean() - 0.5) < 4 * se
    assert abs((m[:, 0] * m[:, 1]).mean() - 0.5) < 4 * se


def test_eigenvalue_repulsion_linear_vanishing():
    m = sample_hessian_matrices(400_000, rng_for("repel"))
    lam = hessian_eigenvalues(m)
    gap = lam[:, 1] - lam[:, 0]
    h, edges = np.histogram(gap, bins=np.linspace(0, 1.0, 21), density=True)
    # density near zero vanishes linearly: first bin much below the fourth
    assert h[0] < 0.45 * h[3]
    ratio10 = h[0] / (edges[1] / 2) / (h[3] / ((edges[3] + edges[4]) / 2))
    assert 0.3 < ratio10 < 3.0


def test_small_ball_grid_bounded_and_halving():
    rng = rng_for("sb")
    ratios = []
    for d1 in (0.05, 0.1, 0.2):
        for d2 in (0.05, 0.1, 0.2):
            for d3 in (0.05, 0.1, 0.2):
                p = small_ball_probability(d1, d2, d3, 300_000, rng)
                ratios.append(p / (d1 * d2**3 * d3))
    assert max(ratios) < 60.0
    p1 = small_ball_probability(0.2, 0.1, 0.4, 2_000_000, rng_for("sb2", 0))
    p2 = small_ball_probability(0.2, 0.05, 0.4, 2_000_000, rng_for("sb2", 1))
    assert p2 / p1 <= 2.0**-3 * 1.3


def test_hessian_sampler_interface():
    grad, hess = hessian_sampler(2.0, rng_for("hs"), n=50_000)
    assert abs(grad[:, 0].var() - 2.0) < 0.1          # k^2/2 at k=2
    assert abs((hess[:, 0] ** 2).mean() - 1.5 * 4.0) < 0.3


def test_critical_point_expectation_linearity_and_zero():
    assert critical_point_expectation(0.0, 0.0, 1.0, 25.0, 100_000, rng_for("cp0")) == 0.0
    a = critical_point_expectation(0.0, 0.005, 1.0, 25.0, 4_000_000, rng_for("cp1"))
    b = critical_point_expectation(0.0, 0.01, 1.0, 25.0, 4_000_000, rng_for("cp2"))
    assert abs(b / a - 2.0) < 0.1


def test_critical_point_mc_vs_grid_count():
    # rescaled plane wave (k = 2); direct counting over a 5x5 box
    delta = 0.25
    expect = critical_point_expectation(0.0, delta, 1.0, 25.0, 4_000_000, rng_for("cpm"))
    n = 60
    counts = np.empty(n)
    for i in range(n):
        s = sample_rpw(2.0, 64, rng_for("cp-grid", i))
        counts[i] = count_critical_points_grid(s, (0.0, 5.0, 0.0, 5.0), 0.0, delta, h=0.08)
    got = counts.mean()
    se = counts.std(ddof=1) / np.sqrt(n)
    assert abs(got - expect) < max(0.1 * expect, 3 * se)
