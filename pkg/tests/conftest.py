import numpy as np
import pytest

from nodal_lab.rng import trial_rng


class PolyField:
    """Synthetic field with analytic evaluation and rigorous bounds."""

    def __init__(self, fn, gfn, b1, b2, jet_fn=None):
        self.fn = fn
        self.gfn = gfn
        self.b1 = b1
        self.b2 = b2
        self.jet_fn = jet_fn

    def evaluate(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.fn(pts[:, 0], pts[:, 1])

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.gfn(pts[:, 0], pts[:, 1])

    def grad_bound(self):
        return self.b1

    def hess_bound(self):
        return self.b2

    def jet(self, x, order=2):
        if self.jet_fn is None:
            raise NotImplementedError
        return self.jet_fn(np.asarray(x, dtype=float), order)


@pytest.fixture
def rng():
    return trial_rng(0, "pytest", 0)


def rng_for(tag, i=0):
    return trial_rng(0, tag, i)
