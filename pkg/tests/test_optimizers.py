"""Optimizer oracles: Adam algebra, L-BFGS on classic benchmarks."""

import numpy as np
import pytest

from pinnlab.errors import NumericError
from pinnlab.optimizers import AdamState, LbfgsState, strong_wolfe


def test_adam_zero_gradient_fixed_point():
    opt = AdamState(3)
    theta = np.array([1.0, -2.0, 0.5])
    for _ in range(5):
        theta = opt.step(theta, np.zeros(3), 0.1)
    assert np.array_equal(theta, np.array([1.0, -2.0, 0.5]))


def test_adam_first_step_algebra():
    # bias correction makes m_hat = g and v_hat = g^2 on step 1, so the
    # update is -lr * g / (|g| + eps)
    opt = AdamState(1)
    theta = opt.step(np.array([0.0]), np.array([1.0]), 0.1)
    expect = -0.1 * 1.0 / (1.0 + 1e-8)
    assert theta[0] == pytest.approx(expect, rel=1e-12)
    assert abs(theta[0] + 0.1) < 1e-8


def test_adam_constant_gradient_step_magnitudes():
    # evaluate the recurrence independently and compare update sequences;
    # magnitudes must never grow
    g = np.array([0.7])
    opt = AdamState(1)
    theta = np.array([0.0])
    m = v = 0.0
    prev_step = None
    for t in range(1, 6):
        new = opt.step(theta, g, 0.05)
        m = 0.9 * m + 0.1 * 0.7
        v = 0.999 * v + 0.001 * 0.7**2
        expect = -0.05 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert (new - theta)[0] == pytest.approx(expect, rel=1e-12)
        step = abs((new - theta)[0])
        if prev_step is not None:
            assert step <= prev_step + 1e-15
        prev_step = step
        theta = new


def test_adam_rejects_nonfinite_and_mismatched():
    opt = AdamState(2)
    with pytest.raises(NumericError):
        opt.step(np.zeros(2), np.array([np.nan, 0.0]), 0.1)
    with pytest.raises(NumericError):
        opt.step(np.zeros(2), np.zeros(3), 0.1)


def _spd_quadratic():
    a = np.array([[3.0, 0.4], [0.4, 1.0]])

    def f(x):
        return 0.5 * x @ a @ x, a @ x

    return f


def test_lbfgs_empty_history_direction_is_negative_gradient():
    opt = LbfgsState()
    g = np.array([2.0, -3.0])
    assert np.array_equal(opt.direction(g), -g)


def test_lbfgs_quadratic_ten_steps():
    f = _spd_quadratic()
    opt = LbfgsState()
    x = np.array([4.0, -2.0])
    fx, g = f(x)
    steps = 0
    while np.linalg.norm(g) >= 1e-10 and steps < 10:
        x, fx, g, _ = opt.step(x, fx, g, f)
        steps += 1
    assert np.linalg.norm(g) < 1e-10
    assert steps <= 10


def test_lbfgs_rosenbrock():
    def rosen(z):
        x, y = z
        f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
        g = np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])
        return f, g

    opt = LbfgsState()
    z = np.array([-1.2, 1.0])
    fz, g = rosen(z)
    steps = 0
    while fz >= 1e-8 and steps < 100:
        z, fz, g, _ = opt.step(z, fz, g, rosen)
        steps += 1
    assert fz < 1e-8
    assert steps <= 100


def test_lbfgs_skips_nonpositive_curvature():
    # concave direction: s'y < 0 must not enter the history
    def f(x):
        return -float(x @ x), -2.0 * x

    opt = LbfgsState()
    x = np.array([1.0, 1.0])
    fx, g = f(x)
    opt.step(x, fx, g, f)
    assert len(opt.pairs) == 0


def test_line_search_fallback_on_non_descent():
    calls = {"n": 0}

    def phi(alpha):
        calls["n"] += 1
        return 1.0 + alpha, 1.0

    alpha, f, info = strong_wolfe(phi, 1.0, 1.0)  # dphi0 > 0: not a descent direction
    assert alpha == 0.0
    assert not info.success


def test_lbfgs_gradient_step_fallback():
    # f grows in every direction from the start: Wolfe cannot hold, the
    # optimizer must fall back to a tiny gradient step and keep going
    def f(x):
        return float(np.abs(x).sum()), np.sign(x) + (x == 0)

    opt = LbfgsState(max_line_search=3)
    x = np.zeros(2)  # gradient (1, 1), but f increases along -g too
    fx, g = f(x)
    x2, f2, g2, info = opt.step(x, fx, g, f)
    assert info.fallback != "" or info.success
