"""Stationary normalised planar Gaussian fields with analytic derivatives.

Two samplers:

* random plane wave with kernel J0(k|s|), realised as a random superposition
  Psi(x) = sqrt(2/M) sum_j cos(k <x, theta_j> + phi_j).  Each realization
  solves the Helmholtz equation exactly, term by term, and all derivatives up
  to order three are available analytically.
* positively-correlated smooth field: white noise on a periodic grid
  convolved with a Gaussian bump of width sigma, covariance exp(-r^2/(4 sigma^2)).

Both samples are immutable after construction; evaluation and jets are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Literal, Optional, Sequence

import numpy as np

from .bessel import j0, j1

KernelKind = Literal["rpw", "gaussian", "tabulated"]


@dataclass(frozen=True)
class KernelSpec:
    """Correlation kernel of a stationary normalised field.

    kind="rpw": kappa(s) = J0(k|s|).
    kind="gaussian": kappa(s) = exp(-|s|^2 / (4 sigma^2)).
    kind="tabulated": kappa(s) = sum_i w_i J0(k_i |s|), weights normalised.
    """

    kind: KernelKind
    k: float = 1.0
    sigma: float = 1.0
    freqs: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.kind == "rpw" and self.k <= 0:
            raise ValueError("kernel.k must be positive")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValueError("kernel.sigma must be positive")
        if self.kind == "tabulated":
            w = np.asarray(self.weights, dtype=float)
            if len(w) == 0 or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("tabulated kernel needs nonnegative weights")
            object.__setattr__(self, "weights", tuple(w / w.sum()))
            object.__setattr__(self, "freqs", tuple(float(f) for f in self.freqs))

    # -- radial profile g(r) = kappa(r) and derivatives --------------------

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "rpw":
            return j0(self.k * r)
        if self.kind == "gaussian":
            return np.exp(-(r * r) / (4.0 * self.sigma**2))
        acc = np.zeros_like(r)
        for f, w in zip(self.freqs, self.weights):
            acc = acc + w * j0(f * r)
        return acc

    def radial_d1(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "rpw":
            return -self.k * j1(self.k * r)
        if self.kind == "gaussian":
            return -(r / (2.0 * self.sigma**2)) * self.radial(r)
        acc = np.zeros_like(r)
        for f, w in zip(self.freqs, self.weights):
            acc = acc - w * f * j1(f * r)
        return acc

    def radial_d2(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "rpw":
            x = self.k * r
            # J0'' = J1(x)/x - J0(x); continuous limit -1/2 at x = 0
            ratio = np.where(x > 1e-8, j1(np.where(x > 1e-8, x, 1.0)) / np.where(x > 1e-8, x, 1.0),
                             0.5 - x * x / 16.0)
            return self.k**2 * (ratio - j0(x))
        if self.kind == "gaussian":
            s2 = 2.0 * self.sigma**2
            return (-1.0 / s2 + (r / s2) ** 2) * self.radial(r)
        acc = np.zeros_like(r, dtype=float)
        for f, w in zip(self.freqs, self.weights):
            acc = acc + w * KernelSpec("rpw", k=f).radial_d2(r)
        return acc

    def kvv0(self) -> float:
        """Second directional derivative of kappa at the origin (isotropic)."""
        return float(self.radial_d2(0.0))

    def rescale_to_unit_curvature(self) -> tuple["KernelSpec", float]:
        """Coordinate dilation x -> lam*x making kappa_vv(0) = -2.

        Returns (rescaled kernel, lam); the rescaled field is x -> Psi(lam x).
        """
        lam = float(np.sqrt(2.0 / -self.kvv0()))
        if self.kind == "rpw":
            return KernelSpec("rpw", k=self.k * lam), lam
        if self.kind == "gaussian":
            return KernelSpec("gaussian", sigma=self.sigma / lam), lam
        return KernelSpec("tabulated", freqs=tuple(f * lam for f in self.freqs),
                          weights=self.weights), lam


def kernel_derivatives(kernel: KernelSpec, s, order: int = 2):
    """kappa and its derivatives at displacement s.

    Returns (value, grad, hess) truncated to the requested order; grad and
    hess are the Cartesian derivative arrays of kappa at s.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    s = np.asarray(s, dtype=float)
    r = float(np.hypot(s[0], s[1]))
    val = float(kernel.radial(r))
    if order == 0:
        return (val,)
    if r < 1e-12:
        grad = np.zeros(2)
        if order == 1:
            return val, grad
        return val, grad, kernel.kvv0() * np.eye(2)
    u = s / r
    g1 = float(kernel.radial_d1(r))
    grad = g1 * u
    if order == 1:
        return val, grad
    g2 = float(kernel.radial_d2(r))
    uu = np.outer(u, u)
    hess = g2 * uu + (g1 / r) * (np.eye(2) - uu)
    return val, grad, hess


@dataclass(frozen=True)
class DerivativeJet:
    """Value and derivatives of a field realization at one point."""

    value: float
    grad: np.ndarray            # shape (2,)
    hess: np.ndarray            # shape (2,2), symmetric
    third: Optional[np.ndarray] = None  # shape (2,2,2), symmetric

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.hess)


class RpwSample:
    """One realization of the random plane wave superposition."""

    def __init__(self, k: float, thetas: np.ndarray, phis: np.ndarray, seed_id: str = ""):
        self.k = float(k)
        self.thetas = np.asarray(thetas, dtype=float)       # (M, 2) unit vectors
        self.phis = np.asarray(phis, dtype=float)           # (M,)
        self.m = len(self.phis)
        self.weight = np.sqrt(2.0 / self.m)
        self.seed_id = seed_id
        # second-moment matrix of the directions: basis of rigorous sup bounds
        t = self.thetas
        self._tmat = t.T @ t
        self._lam_max = float(np.linalg.eigvalsh(self._tmat)[-1])

    # sup_x |d_v Psi| over every x and unit v
    def grad_bound(self) -> float:
        return self.weight * self.k * np.sqrt(self.m * self._lam_max)

    # sup_x ||hessian||_op; also bounds |d_vv Psi| along any direction
    def hess_bound(self) -> float:
        return self.weight * self.k**2 * self._lam_max

    def _phases(self, points: np.ndarray) -> np.ndarray:
        return self.k * (points @ self.thetas.T) + self.phis

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Psi at an (N, 2) array of points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(points))
        chunk = max(1, int(4e6) // max(self.m, 1))
        for i in range(0, len(points), chunk):
            ph = self._phases(points[i:i + chunk])
            out[i:i + chunk] = np.cos(ph).sum(axis=1)
        return self.weight * out

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ph = self._phases(points)
        s = np.sin(ph)
        return -self.weight * self.k * (s @ self.thetas)

    def jet(self, x, order: int = 2) -> DerivativeJet:
        """Analytic derivatives at a single point, order in 1..3."""
        if order not in (1, 2, 3):
            raise ValueError("jet order must be 1, 2 or 3")
        x = np.asarray(x, dtype=float)
        ph = self.k * (self.thetas @ x) + self.phis
        c, s = np.cos(ph), np.sin(ph)
        w = self.weight
        val = float(w * c.sum())
        grad = -w * self.k * (self.thetas.T @ s)
        if order == 1:
            return DerivativeJet(val, grad, np.zeros((2, 2)))
        tt = self.thetas[:, :, None] * self.thetas[:, None, :]
        hess = -w * self.k**2 * np.einsum("m,mab->ab", c, tt)
        if order == 2:
            return DerivativeJet(val, grad, hess)
        ttt = tt[:, :, :, None] * self.thetas[:, None, None, :]
        third = w * self.k**3 * np.einsum("m,mabc->abc", s, ttt)
        return DerivativeJet(val, grad, hess, third)


def sample_rpw(k: float, m: int, rng: np.random.Generator, seed_id: str = "") -> RpwSample:
    """Draw a random plane wave realization with M plane-wave summands.

    The empirical covariance converges to J0(k|s|) with an O(M^{-1/2}) bias;
    M < 16 is rejected as below the approximation-quality floor.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if m < 16:
        raise ValueError("wave count M must be at least 16")
    ang = rng.uniform(0.0, 2.0 * np.pi, size=m)
    phis = rng.uniform(0.0, 2.0 * np.pi, size=m)
    thetas = np.column_stack([np.cos(ang), np.sin(ang)])
    return RpwSample(k, thetas, phis, seed_id=seed_id)


class GridSample:
    """Gaussian-bump moving average of white noise on a periodic grid.

    Psi(x) = C * sum_g xi_g exp(-|x - g|^2 / (2 sigma^2)) with the torus
    wrap; C normalises the pointwise variance to 1.  Derivatives come from
    the analytically differentiated bump, never from value interpolation.
    """

    def __init__(self, sigma: float, period: float, n: int, noise: np.ndarray, seed_id: str = ""):
        self.sigma = float(sigma)
        self.period = float(period)
        self.n = int(n)
        self.h = self.period / self.n
        self.noise = np.asarray(noise, dtype=float)
        self.seed_id = seed_id
        self.window = int(np.ceil(6.0 * self.sigma / self.h))
        # exact variance of the unnormalised sum at a generic point
        probe = np.array([0.37 * self.h, 0.61 * self.h])
        s2 = self._raw_weight_sq_sum(probe)
        self.norm = 1.0 / np.sqrt(s2)

    def _raw_weight_sq_sum(self, x) -> float:
        offs = np.arange(-self.window, self.window + 1)
        dx = x[0] - offs * self.h
        dy = x[1] - offs * self.h
        wx = np.exp(-(dx * dx) / self.sigma**2)
        wy = np.exp(-(dy * dy) / self.sigma**2)
        return float(wx.sum() * wy.sum())

    def _windows(self, points):
        # per-point index window and separable Gaussian weights; derivative
        # orders 0..3 of exp(-u^2/(2 sigma^2)) in each axis
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        base = np.floor(pts / self.h).astype(int)
        offs = np.arange(-self.window, self.window + 1)
        ix = (base[:, 0:1] + offs) % self.n
        iy = (base[:, 1:2] + offs) % self.n
        gx = (base[:, 0:1] + offs) * self.h
        gy = (base[:, 1:2] + offs) * self.h
        ux = pts[:, 0:1] - gx
        uy = pts[:, 1:2] - gy
        return pts, ix, iy, ux, uy

    @staticmethod
    def _bump_derivs(u, sigma, order):
        g = np.exp(-(u * u) / (2.0 * sigma**2))
        out = [g]
        if order >= 1:
            out.append(-(u / sigma**2) * g)
        if order >= 2:
            out.append(((u * u) / sigma**4 - 1.0 / sigma**2) * g)
        if order >= 3:
            out.append((3.0 * u / sigma**4 - u**3 / sigma**6) * g)
        return out

    def evaluate(self, points) -> np.ndarray:
        pts, ix, iy, ux, uy = self._windows(points)
        wx = self._bump_derivs(ux, self.sigma, 0)[0]
        wy = self._bump_derivs(uy, self.sigma, 0)[0]
        vals = np.einsum("pa,pb,pab->p", wx, wy, self.noise[ix[:, :, None], iy[:, None, :]])
        return self.norm * vals

    def evaluate_grid(self, xs, ys) -> np.ndarray:
        """Fast separable path for tensor-product point sets (len(xs) x len(ys))."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        gx = np.arange(self.n) * self.h
        bx = self._band(xs, gx)
        by = self._band(ys, gx)
        return self.norm * (bx @ self.noise @ by.T)

    def _band(self, coords, grid):
        d = coords[:, None] - grid[None, :]
        d -= self.period * np.round(d / self.period)
        return np.exp(-(d * d) / (2.0 * self.sigma**2))

    def jet(self, x, order: int = 2) -> DerivativeJet:
        if order not in (1, 2, 3):
            raise ValueError("jet order must be 1, 2 or 3")
        pts, ix, iy, ux, uy = self._windows(x)
        dx = self._bump_derivs(ux[0], self.sigma, order)
        dy = self._bump_derivs(uy[0], self.sigma, order)
        block = self.noise[np.ix_(ix[0], iy[0])]

        def term(ox, oy):
            return self.norm * float(dx[ox] @ block @ dy[oy])

        val = term(0, 0)
        grad = np.array([term(1, 0), term(0, 1)])
        hess = np.array([[term(2, 0), term(1, 1)], [term(1, 1), term(0, 2)]])
        if order < 3:
            return DerivativeJet(val, grad, hess if order >= 2 else np.zeros((2, 2)))
        third = np.empty((2, 2, 2))
        third[0, 0, 0] = term(3, 0)
        third[1, 1, 1] = term(0, 3)
        third[0, 0, 1] = third[0, 1, 0] = third[1, 0, 0] = term(2, 1)
        third[1, 1, 0] = third[1, 0, 1] = third[0, 1, 1] = term(1, 2)
        return DerivativeJet(val, grad, hess, third)


def sample_smooth_stationary(kernel: KernelSpec, period: float, n: int,
                             rng: np.random.Generator, seed_id: str = "") -> GridSample:
    """Sample the positively-correlated Gaussian-kernel field on a torus.

    Requires period >= 10 sigma so the wrap-around correlation is negligible,
    and a grid fine enough (h <= sigma/2) for the moving average to be
    effectively stationary.
    """
    if kernel.kind != "gaussian":
        raise ValueError("smooth stationary sampler requires a gaussian kernel spec")
    if period < 10.0 * kernel.sigma:
        raise ValueError("torus period must be at least 10 sigma")
    if period / n > kernel.sigma / 2.0:
        raise ValueError("grid too coarse: need h <= sigma/2")
    noise = rng.standard_normal((n, n))
    return GridSample(kernel.sigma, period, n, noise, seed_id=seed_id)


def jet(sample, x, order: int = 2) -> DerivativeJet:
    """Derivatives of a field realization at a point (order 1..3)."""
    return sample.jet(x, order)
