import mpmath
import numpy as np

from nodal_lab.bessel import j0, j1, j0_first_zero


def test_j0_against_mpmath():
    xs = np.concatenate([np.linspace(0.0, 12.99, 250),
                         np.linspace(13.0, 120.0, 250)])
    want = np.array([float(mpmath.besselj(0, x)) for x in xs])
    assert np.abs(j0(xs) - want).max() < 1e-10


def test_j1_against_mpmath():
    xs = np.concatenate([np.linspace(0.01, 12.99, 250),
                         np.linspace(13.0, 120.0, 250)])
    want = np.array([float(mpmath.besselj(1, x)) for x in xs])
    assert np.abs(j1(xs) - want).max() < 1e-10


def test_first_zero_value():
    # independent series evaluation pins the first zero of J0
    z = j0_first_zero()
    assert abs(z - 2.404825557695773) < 1e-9
    assert abs(j0(2.404826)) < 1e-6


def test_negative_arguments():
    assert j0(-3.1) == j0(3.1)
    assert j1(-3.1) == -j1(3.1)


def test_taylor_behaviour_at_origin():
    x = 1e-4
    assert abs(j0(x) - (1 - x * x / 4)) < 1e-12
    assert abs(j1(x) - x / 2) < 1e-12
