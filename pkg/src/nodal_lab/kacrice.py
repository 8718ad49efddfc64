"""Kac-Rice intensities, conditional-moment ratios, and Hessian statistics.

Closed forms where they exist (single-crossing intensity, centred folded
second moment), deterministic quadrature elsewhere: the double-crossing
expectation integrates the two-point Kac-Rice integrand with the
conditional law from Gaussian regression, capping the integrand near the
degenerate diagonal and reporting the excised mass.  The two- and
three-point ratio quantities are evaluated exactly by matrix arithmetic;
the Hessian-eigenvalue sampler realises the entry covariance
E[M_ij M_kl] = (d_ik d_jl + d_il d_jk + d_ij d_kl)/2 and feeds the
small-ball estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .field import KernelSpec, kernel_derivatives


class DegenerateCovariance(ValueError):
    pass


@dataclass(frozen=True)
class RegressionResult:
    mean: np.ndarray
    cov: np.ndarray


def gaussian_regression(sigma_x, sigma_xy, sigma_y, y) -> RegressionResult:
    """Conditional law of X given Y = y for a centred Gaussian (X, Y)."""
    sigma_x = np.atleast_2d(np.asarray(sigma_x, dtype=float))
    sigma_y = np.atleast_2d(np.asarray(sigma_y, dtype=float))
    sigma_xy = np.asarray(sigma_xy, dtype=float).reshape(sigma_x.shape[0], sigma_y.shape[0])
    y = np.asarray(y, dtype=float).reshape(sigma_y.shape[0])
    cond = np.linalg.cond(sigma_y)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateCovariance("conditioning covariance is singular")
    mean = sigma_xy @ np.linalg.solve(sigma_y, y)
    cov = sigma_x - sigma_xy @ np.linalg.solve(sigma_y, sigma_xy.T)
    cov = 0.5 * (cov + cov.T)
    return RegressionResult(mean, cov)


def _phi(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def single_crossing_intensity(kernel: KernelSpec, level: float, v=None) -> float:
    """Expected level crossings per unit length along any straight line.

    phi(level) * sqrt(-2 kappa_vv(0) / pi); the direction argument is
    accepted for interface symmetry (isotropic kernels).
    """
    kvv = kernel.kvv0()
    if kvv >= 0:
        raise DegenerateCovariance("kernel must have kappa_vv(0) < 0")
    return float(_phi(level) * np.sqrt(-2.0 * kvv / np.pi))


# ------------------------------------------------------- folded moments

def folded_two_moment(mean, cov, n_nodes: int = 48) -> float:
    """E|X1 X2| for a bivariate Gaussian.

    Centred case in closed form: (2/pi) s1 s2 (sqrt(1-r^2) + r asin r);
    otherwise tensor Gauss-Hermite quadrature (deterministic).
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    s1 = np.sqrt(max(cov[0, 0], 0.0))
    s2 = np.sqrt(max(cov[1, 1], 0.0))
    if s1 == 0.0 or s2 == 0.0:
        return float(abs(mean[0] * mean[1]))
    if np.allclose(mean, 0.0, atol=1e-14):
        r = np.clip(cov[0, 1] / (s1 * s2), -1.0, 1.0)
        return float((2.0 / np.pi) * s1 * s2 *
                     (np.sqrt(1.0 - r * r) + r * np.arcsin(r)))
    try:
        chol = np.linalg.cholesky(cov + 1e-15 * np.eye(2))
    except np.linalg.LinAlgError:
        raise DegenerateCovariance("conditional covariance not PSD")
    nodes, weights = hermegauss(n_nodes)
    w = weights / np.sqrt(2.0 * np.pi)
    z1, z2 = np.meshgrid(nodes, nodes, indexing="ij")
    x1 = mean[0] + chol[0, 0] * z1
    x2 = mean[1] + chol[1, 0] * z1 + chol[1, 1] * z2
    return float(np.einsum("i,j,ij->", w, w, np.abs(x1 * x2)))


def folded_two_moment_mc(mean, cov, n: int, rng: np.random.Generator) -> float:
    """MC cross-check of the folded two-moment (used by the test oracles)."""
    xs = rng.multivariate_normal(np.asarray(mean, dtype=float),
                                 np.asarray(cov, dtype=float), size=n)
    return float(np.abs(xs[:, 0] * xs[:, 1]).mean())


# --------------------------------------------------- double crossings

@dataclass
class QuadratureReport:
    value: float
    capped_fraction: float     # fraction of nodes excised near |A| = 0


def _two_point_integrand(kernel: KernelSpec, level: float, p1, p2, v1, v2,
                         hess0, det_tol: float) -> Optional[float]:
    kap, grad, hess = kernel_derivatives(kernel, p1 - p2, 2)
    det_a = 1.0 - kap * kap
    if det_a < det_tol:
        return None
    a = np.array([[1.0, kap], [kap, 1.0]])
    # E[Psi_v(x) Psi(y)] = kappa_v(x - y)
    b = np.array([[0.0, float(grad @ v1)],
                  [-float(grad @ v2), 0.0]])
    sigma_x = np.array([[-float(v1 @ hess0 @ v1), -float(v1 @ hess @ v2)],
                        [-float(v1 @ hess @ v2), -float(v2 @ hess0 @ v2)]])
    reg = gaussian_regression(sigma_x, b, a, np.array([level, level]))
    dens = np.exp(-(level**2) / (1.0 + kap)) / (2.0 * np.pi * np.sqrt(det_a))
    return dens * folded_two_moment(reg.mean, reg.cov)


def double_crossing_expectation(kernel: KernelSpec, level: float,
                                seg1, seg2, eps: float = 1.0,
                                n_panel: int = 16, det_tol: float = 1e-12) -> QuadratureReport:
    """E[ordered crossing pairs] on the scaled segments eps*L1, eps*L2.

    Tensor Gauss-Legendre panels over the parameter square; nodes whose
    two-point covariance is numerically singular (coincident points) are
    excised and reported, matching the integrable-singularity analysis.
    """
    a1 = eps * np.asarray(seg1[0], dtype=float)
    b1 = eps * np.asarray(seg1[1], dtype=float)
    a2 = eps * np.asarray(seg2[0], dtype=float)
    b2 = eps * np.asarray(seg2[1], dtype=float)
    l1 = float(np.linalg.norm(b1 - a1))
    l2 = float(np.linalg.norm(b2 - a2))
    v1 = (b1 - a1) / l1
    v2 = (b2 - a2) / l2
    hess0 = kernel_derivatives(kernel, (0.0, 0.0), 2)[2]
    nodes, weights = np.polynomial.legendre.leggauss(6)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    total = 0.0
    capped = 0
    n_nodes_total = 0
    for i in range(n_panel):
        for j in range(n_panel):
            for ti, wi in zip(nodes, weights):
                for tj, wj in zip(nodes, weights):
                    n_nodes_total += 1
                    t1 = (i + ti) / n_panel
                    t2 = (j + tj) / n_panel
                    p1 = a1 + t1 * (b1 - a1)
                    p2 = a2 + t2 * (b2 - a2)
                    val = _two_point_integrand(kernel, level, p1, p2, v1, v2,
                                               hess0, det_tol)
                    if val is None:
                        capped += 1
                        continue
                    total += wi * wj * val / (n_panel * n_panel)
    return QuadratureReport(total * l1 * l2, capped / n_nodes_total)


# ----------------------------------------------------- conditional ratios

@dataclass(frozen=True)
class RatioReport:
    det_a: float
    mean: np.ndarray
    d_diag: np.ndarray
    ratio: float
    config: dict


def two_point_ratio(f, g, x: float) -> RatioReport:
    """max_i max{mu_i^4, d_ii^2} / |A| for the collinear two-point law.

    f is the correlation profile, g the cross term between value and the
    directional derivative; evaluated by matrix arithmetic, matching the
    closed forms |A| = 1 - f^2, mu_i = g(1-f)/(1-f^2) and
    d_ii = (2(1-f^2) - g^2)/(1-f^2).
    """
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie in (0, 1)")
    fx = float(f(x))
    gx = float(g(x))
    det_a = 1.0 - fx * fx
    if det_a <= 0.0:
        raise DegenerateCovariance("|A| vanishes: coincident points")
    a = np.array([[1.0, fx], [fx, 1.0]])
    b = np.array([[0.0, gx], [-gx, 0.0]])
    mean = b @ np.linalg.solve(a, np.ones(2))
    d = 2.0 * np.eye(2) - b.T @ np.linalg.solve(a, b)
    d_diag = np.diag(d)
    ratio = float(max(np.max(mean**4), np.max(d_diag**2)) / det_a)
    return RatioReport(det_a, mean, d_diag, ratio, {"x": x})


def rpw_profiles(kernel: KernelSpec):
    """(f, g, rescaled kernel): covariance profiles at kappa_vv(0) = -2."""
    resc, _ = kernel.rescale_to_unit_curvature()
    return (lambda r: resc.radial(r)), (lambda r: resc.radial_d1(r)), resc


def _triangle_angles(pts) -> Tuple[float, float]:
    angs = []
    for i in range(3):
        a = pts[(i + 1) % 3] - pts[i]
        b = pts[(i + 2) % 3] - pts[i]
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        angs.append(np.arccos(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)))
    return min(angs), max(angs)


def three_point_ratio(kernel: KernelSpec, points, directions,
                      mu_plus: float = 2.8) -> RatioReport:
    """max_i max{mu_i^6, |d_ii|^3} / |A| for a non-degenerate triangle.

    Preconditions: theta-(s) >= eps^{3/2} with eps the largest side, and
    theta+(s) <= mu_plus.  The kernel is rescaled to kappa_vv(0) = -2; the
    report carries ratio * theta-(s)^2 / eps^2 for bound checking.
    """
    pts = np.asarray(points, dtype=float)
    dirs = np.asarray(directions, dtype=float)
    theta_minus, theta_plus = _triangle_angles(pts)
    eps = max(np.linalg.norm(pts[i] - pts[j]) for i in range(3) for j in range(i))
    if theta_plus > mu_plus:
        raise ValueError("triangle too close to collinear: theta+ exceeds mu")
    if theta_minus < eps**1.5:
        raise ValueError("triangle too degenerate: theta- below eps^{3/2}")
    resc, _ = kernel.rescale_to_unit_curvature()
    a = np.eye(3)
    b = np.zeros((3, 3))          # Sigma_XY: E[Psi_{v_i}(p_i) Psi(p_j)]
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            kap, grad, _ = kernel_derivatives(resc, pts[i] - pts[j], 2)
            a[i, j] = kap
            b[i, j] = float(grad @ dirs[i])
    det_a = float(np.linalg.det(a))
    if det_a <= 0.0:
        raise DegenerateCovariance("|A| <= 0 for the three-point law")
    mean = b @ np.linalg.solve(a, np.ones(3))
    d_full = 2.0 * np.eye(3) - b @ np.linalg.solve(a, b.T)
    d_diag = np.diag(d_full)
    ratio = float(max(np.max(mean**6), np.max(np.abs(d_diag) ** 3)) / det_a)
    return RatioReport(det_a, mean, d_diag, ratio,
                       {"theta_minus": theta_minus, "theta_plus": theta_plus,
                        "eps": eps,
                        "bound_quantity": ratio * theta_minus**2 / eps**2})


# --------------------------------------------- Hessian law and small ball

def sample_hessian_matrices(n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, 3) samples of (M11, M22, M12) with the invariant entry covariance."""
    cov = np.array([[1.5, 0.5], [0.5, 1.5]])
    chol = np.linalg.cholesky(cov)
    diag = rng.standard_normal((n, 2)) @ chol.T
    off = rng.standard_normal(n) * np.sqrt(0.5)
    return np.column_stack([diag[:, 0], diag[:, 1], off])


def hessian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """(n, 2) ordered eigenvalues of the symmetric 2x2 samples."""
    tr = m[:, 0] + m[:, 1]
    disc = np.sqrt((m[:, 0] - m[:, 1]) ** 2 + 4.0 * m[:, 2] ** 2)
    return np.column_stack([0.5 * (tr - disc), 0.5 * (tr + disc)])


def hessian_sampler(k: float, rng: np.random.Generator, n: int = 1):
    """Samples of grad Psi(0) and nabla^2 Psi(0) = (k^2/2) M, independent."""
    m = sample_hessian_matrices(n, rng)
    grad = rng.standard_normal((n, 2)) * (k / np.sqrt(2.0))
    return grad, 0.5 * k * k * m


def small_ball_probability(delta1: float, delta2: float, delta3: float,
                           trials: int, rng: np.random.Generator,
                           k: float = 1.0) -> float:
    """P(|grad| < d1, max|lambda_i| < d2, |lambda_1 + lambda_2| < d3).

    The gradient is independent of the Hessian (parity), so its factor is
    exact: 1 - exp(-d1^2 / k^2); the eigenvalue event is estimated by MC.
    """
    if trials < 10_000:
        raise ValueError("at least 1e4 trials required")
    p_grad = 1.0 - np.exp(-(delta1**2) / (k * k))
    m = sample_hessian_matrices(trials, rng)
    lam = hessian_eigenvalues(m) * 0.5 * k * k
    ev = (np.abs(lam).max(axis=1) < delta2) & \
         (np.abs(lam[:, 0] + lam[:, 1]) < delta3)
    return float(p_grad * ev.mean())


# ------------------------------------------- critical points near a level

def critical_point_expectation(level: float, delta: float, s: float,
                               area: float, trials: int,
                               rng: np.random.Generator) -> float:
    """E[#critical points in sD with |Psi - level| < delta], rescaled RPW.

    (s^2/4pi) Area(D) E[|det H| 1_{|Psi-level|<delta}] with H = 2M and
    Psi = -(M11 + M22)/2 exactly (Helmholtz ties the value to the trace).
    """
    m = sample_hessian_matrices(trials, rng)
    psi = -(m[:, 0] + m[:, 1]) / 2.0
    det = 4.0 * (m[:, 0] * m[:, 1] - m[:, 2] ** 2)
    factor = np.abs(det) * (np.abs(psi - level) < delta)
    return float(s * s / (4.0 * np.pi) * area * factor.mean())


def count_critical_points_grid(sample, bbox, level: float, delta: float,
                               h: float = 0.05) -> int:
    """Direct near-level critical point count on a fine grid (test oracle).

    Cells where both gradient components change sign across the corners are
    polished by Newton iteration on the analytic jet; converged points
    inside the cell with |Psi - level| < delta are counted once.
    """
    x0, x1, y0, y1 = bbox
    xs = np.arange(x0, x1 + h, h)
    ys = np.arange(y0, y1 + h, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    g = sample.gradient(np.column_stack([X.ravel(), Y.ravel()]))
    gx = (g[:, 0] > 0).reshape(len(xs), len(ys))
    gy = (g[:, 1] > 0).reshape(len(xs), len(ys))

    def mixed(sgn):
        c = sgn[:-1, :-1].astype(int) + sgn[1:, :-1] + sgn[:-1, 1:] + sgn[1:, 1:]
        return (c > 0) & (c < 4)

    cand = mixed(gx) & mixed(gy)
    found = set()
    count = 0
    for i, j in zip(*np.nonzero(cand)):
        p = np.array([xs[i] + 0.5 * h, ys[j] + 0.5 * h])
        ok = False
        for _ in range(40):
            J = sample.jet(p, order=2)
            try:
                step = np.linalg.solve(J.hess, J.grad)
            except np.linalg.LinAlgError:
                break
            p = p - step
            if np.linalg.norm(step) < 1e-10:
                ok = True
                break
        if not ok:
            continue
        if not (xs[i] - h <= p[0] <= xs[i] + 2 * h and ys[j] - h <= p[1] <= ys[j] + 2 * h):
            continue
        key = (round(p[0] / (0.25 * h)), round(p[1] / (0.25 * h)))
        if key in found:
            continue
        found.add(key)
        if abs(sample.jet(p, order=1).value - level) < delta:
            count += 1
    return count
