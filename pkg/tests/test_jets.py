"""Jet composition rules against closed forms and finite differences."""

import numpy as np
import pytest

from helpers import fd_jet, rel_err, scalar_field
from pinnlab.config import ModelConfig
from pinnlab.errors import CapabilityError
from pinnlab.jets import Jet2, jet3_compose, jet_compose, jet_input, tri_index
from pinnlab.models import forward_jet, init_params
from pinnlab.tape import Tape, backward


def _entry(tape, nid):
    return None if nid is None else np.asarray(tape.value(nid)).ravel()[0]


def _coordinate_jet(tape, x0):
    """Jet of the scalar coordinate x at the 1-point batch ((x0, 0),)."""
    full = jet_input(tape, np.array([[x0, 0.0]]), 2)
    # slice out coordinate 0 by dotting with e_x
    ex = tape.constant(np.array([[1.0], [0.0]]))
    value = tape.matmul(full.value, ex)
    grad = tuple(tape.matmul(g, ex) for g in full.grad)
    return Jet2(2, value, grad, full.hess)


def test_tri_index_layout():
    assert [tri_index(j, k, 2) for j, k in [(0, 0), (0, 1), (1, 1)]] == [0, 1, 2]
    assert tri_index(1, 0, 2) == tri_index(0, 1, 2)


def test_two_input_jet_arity():
    tape = Tape()
    jet = jet_input(tape, np.zeros((3, 2)), 2)
    assert len(jet.grad) == 2
    assert len(jet.hess) == 3


def test_sin_at_zero():
    tape = Tape()
    x = _coordinate_jet(tape, 0.0)
    s = jet_compose("sin", [x], tape)
    assert _entry(tape, s.value) == 0.0
    assert _entry(tape, s.grad[0]) == 1.0
    assert _entry(tape, s.grad[1]) == 0.0
    assert _entry(tape, s.hess_at(0, 0)) == 0.0  # -sin(0)


def test_tanh_of_affine_at_zero():
    # tanh(w x + b), w=1, b=0 at x=0: value 0, du/dx 1, d2u/dx2 0
    tape = Tape()
    x = _coordinate_jet(tape, 0.0)
    z = jet_compose("tanh", [x], tape)
    assert _entry(tape, z.value) == 0.0
    assert _entry(tape, z.grad[0]) == 1.0
    assert _entry(tape, z.hess_at(0, 0)) == 0.0


def test_mul_product_second_derivative():
    # (x * x) has d2/dx2 = 2 exactly
    tape = Tape()
    x = _coordinate_jet(tape, 1.7)
    sq = jet_compose("mul", [x, x], tape)
    assert _entry(tape, sq.value) == pytest.approx(1.7 * 1.7, abs=0)
    assert _entry(tape, sq.grad[0]) == pytest.approx(3.4, abs=0)
    assert _entry(tape, sq.hess_at(0, 0)) == 2.0


@pytest.mark.parametrize("op", ["sin", "cos", "exp", "tanh", "square", "reciprocal"])
def test_unary_chain_vs_finite_differences(op):
    x0 = 0.6

    def f(v):
        t = Tape()
        j = jet_compose(op, [_coordinate_jet(t, v)], t)
        return _entry(t, j.value)

    tape = Tape()
    jet = jet_compose(op, [_coordinate_jet(tape, x0)], tape)
    h = 1e-5
    fd1 = (f(x0 + h) - f(x0 - h)) / (2 * h)
    fd2 = (f(x0 + 1e-4) - 2 * f(x0) + f(x0 - 1e-4)) / 1e-8
    assert rel_err(_entry(tape, jet.grad[0]), fd1) < 1e-8
    assert rel_err(_entry(tape, jet.hess_at(0, 0)), fd2) < 1e-5


def test_network_jet_vs_finite_differences():
    cfg = ModelConfig(layer_widths=[2, 8, 1])
    params = init_params(cfg, seed=21)
    x0 = np.array([0.9, 0.35])
    tape = Tape()
    jet = forward_jet(cfg, params, x0[None, :], tape, order=2)
    fd = fd_jet(scalar_field(cfg, params), x0)
    assert rel_err(_entry(tape, jet.grad[0]), fd["gx"]) < 1e-6
    assert rel_err(_entry(tape, jet.grad[1]), fd["gt"]) < 1e-6
    assert rel_err(_entry(tape, jet.hess_at(0, 0)), fd["hxx"]) < 1e-4
    assert rel_err(_entry(tape, jet.hess_at(1, 1)), fd["htt"]) < 1e-4
    assert rel_err(_entry(tape, jet.hess_at(0, 1)), fd["hxt"]) < 1e-4


def test_jet_entries_are_differentiable_nodes():
    # parameter gradients of a derivative entry flow through reverse mode
    cfg = ModelConfig(layer_widths=[2, 4, 1])
    params = init_params(cfg, seed=2)

    def dudx_at(vec):
        t = Tape()
        j = forward_jet(cfg, params.replace_values(vec), np.array([[0.4, 0.2]]), t, order=1)
        return float(t.value(j.grad[0])[0, 0])

    tape = Tape()
    jet = forward_jet(cfg, params, np.array([[0.4, 0.2]]), tape, order=1)
    g = backward(tape, tape.mean(jet.grad[0]))
    from helpers import fd_gradient, max_rel_err_filtered

    fd = fd_gradient(dudx_at, params.values.copy())
    assert max_rel_err_filtered(g, fd) < 1e-5


def test_order_cap_skips_entries():
    cfg = ModelConfig(layer_widths=[2, 4, 1])
    params = init_params(cfg, seed=2)
    x = np.array([[0.4, 0.2]])
    t0, t1, t2 = Tape(), Tape(), Tape()
    j0 = forward_jet(cfg, params, x, t0, order=0)
    j1 = forward_jet(cfg, params, x, t1, order=1)
    j2 = forward_jet(cfg, params, x, t2, order=2)
    assert all(g is None for g in j0.grad) and all(h is None for h in j0.hess)
    assert all(g is not None for g in j1.grad) and all(h is None for h in j1.hess)
    # lower orders agree with the full jet where they overlap
    assert t0.value(j0.value)[0, 0] == t2.value(j2.value)[0, 0]
    assert t1.value(j1.grad[0])[0, 0] == t2.value(j2.grad[0])[0, 0]


def test_third_order_is_capability_error():
    tape = Tape()
    x = _coordinate_jet(tape, 0.0)
    with pytest.raises(CapabilityError):
        jet3_compose("sin", [x], tape)
    with pytest.raises(CapabilityError):
        jet_compose("sin", [x], tape, order=3)


def test_unsupported_op_is_capability_error():
    tape = Tape()
    x = _coordinate_jet(tape, 0.0)
    with pytest.raises(CapabilityError):
        jet_compose("mean", [x], tape)
