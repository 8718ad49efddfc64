"""Quasi-independence of sign events of Gaussian vectors.

The bracket ((m+n) |Sigma_XY|_2 log(1/|Sigma_XY|_2))^(1/3) bounds, up to an
absolute constant, the sign-event dependence |P(A and B) - P(A)P(B)|; the
module evaluates the bracket, measures the dependence by joint sampling,
and checks the log-determinant trace bound used in its proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np


@dataclass(frozen=True)
class BlockCovariance:
    """Unit-diagonal joint covariance of two sign-observed Gaussian blocks."""

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_xy: np.ndarray

    def __post_init__(self):
        sx = np.atleast_2d(np.asarray(self.sigma_x, dtype=float))
        sy = np.atleast_2d(np.asarray(self.sigma_y, dtype=float))
        sxy = np.asarray(self.sigma_xy, dtype=float).reshape(sx.shape[0], sy.shape[0])
        object.__setattr__(self, "sigma_x", sx)
        object.__setattr__(self, "sigma_y", sy)
        object.__setattr__(self, "sigma_xy", sxy)
        if not (np.allclose(np.diag(sx), 1.0) and np.allclose(np.diag(sy), 1.0)):
            raise ValueError("blocks must be normalised to unit diagonal")
        eigs = np.linalg.eigvalsh(self.full())
        if eigs.min() < -1e-9:
            raise ValueError("joint covariance is not positive semi-definite")

    def full(self) -> np.ndarray:
        m, n = self.sigma_x.shape[0], self.sigma_y.shape[0]
        out = np.empty((m + n, m + n))
        out[:m, :m] = self.sigma_x
        out[m:, m:] = self.sigma_y
        out[:m, m:] = self.sigma_xy
        out[m:, :m] = self.sigma_xy.T
        return out

    @property
    def m(self) -> int:
        return self.sigma_x.shape[0]

    @property
    def n(self) -> int:
        return self.sigma_y.shape[0]

    def cross_norm(self) -> float:
        """Schatten 2-norm of the cross block (entrywise l2)."""
        return float(np.sqrt((self.sigma_xy**2).sum()))


def qi_bracket(block: BlockCovariance) -> float:
    """((m+n) |Sigma_XY|_2 log(1/|Sigma_XY|_2))^(1/3), constant not applied."""
    eta = block.cross_norm()
    if eta == 0.0:
        return 0.0
    if eta >= 1.0:
        raise ValueError("cross norm must lie in (0, 1) for the bracket")
    return float(((block.m + block.n) * eta * np.log(1.0 / eta)) ** (1.0 / 3.0))


def empirical_sign_dependence(block: BlockCovariance,
                              event_a: Callable[[np.ndarray], np.ndarray],
                              event_b: Callable[[np.ndarray], np.ndarray],
                              trials: int, rng: np.random.Generator
                              ) -> Tuple[float, float]:
    """(|P(A and B) - P(A)P(B)|, MC standard error) by joint sampling.

    Events receive the sign arrays (trials, m) and (trials, n).
    """
    if trials < 10_000:
        raise ValueError("at least 1e4 trials required")
    full = block.full()
    chol = np.linalg.cholesky(full + 1e-12 * np.eye(len(full)))
    z = rng.standard_normal((trials, len(full))) @ chol.T
    signs = np.sign(z)
    a = np.asarray(event_a(signs[:, :block.m]), dtype=bool)
    b = np.asarray(event_b(signs[:, block.m:]), dtype=bool)
    pa, pb, pab = a.mean(), b.mean(), (a & b).mean()
    dep = abs(pab - pa * pb)
    se = np.sqrt((pab * (1 - pab) + pa * pb * (pa * (1 - pa) + pb * (1 - pb))) / trials)
    return float(dep), float(se)


def orthant_dependence_exact(rho: float) -> float:
    """|P(X>0, Y>0) - 1/4| for a correlated standard pair: arcsin(rho)/2pi."""
    return abs(np.arcsin(rho) / (2.0 * np.pi))


def trace_bound_check(e: np.ndarray) -> Tuple[float, float]:
    """(-log|I - E|, 2 Tr(E)) for symmetric PSD E with Tr(E) < 1/2."""
    e = np.atleast_2d(np.asarray(e, dtype=float))
    eigs = np.linalg.eigvalsh(e)
    tr = float(np.trace(e))
    if eigs.min() < -1e-12 or tr >= 0.5:
        raise ValueError("need PSD E with Tr(E) < 1/2")
    lhs = float(-np.log(np.linalg.det(np.eye(len(e)) - e)))
    rhs = 2.0 * tr
    if lhs > rhs + 1e-9:
        raise AssertionError("trace bound violated")
    return lhs, rhs


def field_block_covariance(kernel, points_x, points_y) -> BlockCovariance:
    """Blocks of field values at two vertex sets under a stationary kernel."""
    px = np.asarray(points_x, dtype=float)
    py = np.asarray(points_y, dtype=float)

    def gram(a, b):
        d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
        return kernel.radial(d)

    return BlockCovariance(gram(px, px), gram(py, py), gram(px, py))
