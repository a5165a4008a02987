"""Relative error formulas and the evaluation report."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinnlab.config import ModelConfig
from pinnlab.errors import DegenerateReferenceError
from pinnlab.metrics import evaluate_metrics, relative_errors
from pinnlab.models import init_params, param_count
from pinnlab.problems import make_problem, uniform_mesh


def test_exact_predictor_zero():
    truth = np.linspace(-1, 1, 50) + 0.1
    assert relative_errors(truth, truth) == (0.0, 0.0)


def test_zero_predictor_rmse_one():
    for name in ("reaction1d", "wave1d", "convection"):
        p = make_problem(name)
        mesh = uniform_mesh(p, 31, 2, 2)
        truth = p.analytic(mesh.interior[:, 0], mesh.interior[:, 1])
        _, rmse = relative_errors(np.zeros_like(truth), truth)
        assert abs(rmse - 1.0) <= 1e-12


def test_constant_offset_on_unit_reference():
    truth = np.ones(64)
    rmae, rmse = relative_errors(truth + 0.1, truth)
    assert rmse == pytest.approx(0.1, rel=1e-12)
    # rMAE keeps the outer square root: sqrt(n*0.1/n)
    assert rmae == pytest.approx(np.sqrt(0.1), rel=1e-12)


def test_degenerate_reference():
    with pytest.raises(DegenerateReferenceError):
        relative_errors(np.ones(4), np.zeros(4))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    truth = rng.normal(size=100) + 2.0
    pred = truth + rng.normal(scale=0.1, size=100)
    perm = rng.permutation(100)
    a = relative_errors(pred, truth)
    b = relative_errors(pred[perm], truth[perm])
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    assert a[1] == pytest.approx(b[1], rel=1e-12)


def test_metrics_larger_than_one_possible():
    truth = np.ones(10)
    _, rmse = relative_errors(-truth, truth)
    assert rmse == 2.0


def test_evaluate_metrics_report():
    p = make_problem("convection", beta=1.0)
    cfg = ModelConfig(layer_widths=[2, 8, 1])
    params = init_params(cfg, seed=0).replace_values(
        np.zeros(param_count((2, 8, 1)))
    )
    mesh = uniform_mesh(p, 21, 21, 21)
    report = evaluate_metrics(p, cfg, params, mesh)
    assert abs(report.rmse - 1.0) <= 1e-12
    # zero network on convection: IC defect is sin^2 with mean 50/101 on 101
    # points; on 21 points it is 10/21
    assert report.loss_ic == pytest.approx(10.0 / 21.0, rel=1e-12)
    assert report.loss_eq == 0.0
    assert report.loss_bc == 0.0
    assert report.train_loss == pytest.approx(report.loss_eq + report.loss_ic + report.loss_bc)
