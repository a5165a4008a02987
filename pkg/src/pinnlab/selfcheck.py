"""Fast oracle and property checks, runnable from the CLI and the service.

These are the quick members of the verification suite (the full suite lives
in the test tree): finite-difference gradient checks, jet consistency,
residual identities on the analytic solutions, metric edge cases, sampling
versus quadrature on a tiny model, trust-region bookkeeping laws, and
optimizer sanity. Each check returns a (name, passed, detail) record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig, ObjectiveSpec
from .metrics import relative_errors
from .models import forward_jet, forward_values, init_params
from .objectives import (
    point_loss,
    region_gradient_quadrature,
    sampled_gradients,
)
from .optimizers import AdamState, LbfgsState
from .problems import make_problem, uniform_mesh, residual_on_analytic
from .tape import Tape, backward
from .trust import TrustRegionState, calibrate


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _fd_gradient(fn, x0, h=1e-6):
    g = np.zeros_like(x0)
    for i in range(x0.size):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def check_gradients() -> CheckResult:
    cfg = ModelConfig(layer_widths=[2, 8, 8, 1])
    params = init_params(cfg, seed=11)
    prob = make_problem("reaction1d")
    mesh = uniform_mesh(prob, 5, 5, 5)
    spec = ObjectiveSpec(kind="point")
    build = point_loss(prob, cfg, params, mesh, spec)
    g = backward(build.tape, build.node)

    def loss_at(vec):
        b = point_loss(prob, cfg, params.replace_values(vec), mesh, spec)
        return float(b.tape.value(b.node))

    fd = _fd_gradient(loss_at, params.values.copy())
    mask = np.abs(g) > 1e-8
    rel = np.abs(fd[mask] - g[mask]) / np.maximum(np.abs(fd[mask]), np.abs(g[mask]))
    worst = float(rel.max())
    return CheckResult("parameter-gradient-vs-finite-differences", worst < 1e-5, f"max rel err {worst:.2e}")


def check_jets() -> CheckResult:
    cfg = ModelConfig(layer_widths=[2, 8, 8, 1])
    params = init_params(cfg, seed=3)
    x0 = np.array([1.1, 0.6])

    def u(pt):
        return forward_values(cfg, params, pt[None, :])[0]

    tape = Tape()
    jet = forward_jet(cfg, params, x0[None, :], tape, order=2)
    gx = tape.value(jet.grad[0])[0, 0]
    htt = tape.value(jet.hess_at(1, 1))[0, 0]
    ex, et = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    fd_gx = (u(x0 + 1e-6 * ex) - u(x0 - 1e-6 * ex)) / 2e-6
    fd_htt = (u(x0 + 1e-4 * et) - 2 * u(x0) + u(x0 - 1e-4 * et)) / 1e-8
    e1 = abs(gx - fd_gx) / max(abs(gx), abs(fd_gx))
    e2 = abs(htt - fd_htt) / max(abs(htt), abs(fd_htt))
    ok = e1 < 1e-6 and e2 < 1e-4
    return CheckResult("jet-vs-finite-differences", ok, f"first {e1:.2e}, second {e2:.2e}")


def check_residual_identity() -> CheckResult:
    worst = 0.0
    for name in ("reaction1d", "wave1d", "convection"):
        prob = make_problem(name)
        xs = np.linspace(prob.domain.x_lo, prob.domain.x_hi, 21)
        ts = np.linspace(prob.domain.t_lo, prob.domain.t_hi, 21)
        gx, gt = np.meshgrid(xs, ts)
        pts = np.column_stack([gx.ravel(), gt.ravel()])
        worst = max(worst, float(np.abs(residual_on_analytic(prob, pts)).max()))
    return CheckResult("analytic-residual-identity", worst <= 1e-9, f"max |residual| {worst:.2e}")


def check_metrics() -> CheckResult:
    prob = make_problem("convection")
    xs = np.linspace(0, 2 * np.pi, 31)
    ts = np.linspace(0, 1, 31)
    gx, gt = np.meshgrid(xs, ts)
    truth = prob.analytic(gx.ravel(), gt.ravel())
    rmae0, rmse0 = relative_errors(np.zeros_like(truth), truth)
    rmae1, rmse1 = relative_errors(truth, truth)
    ok = abs(rmse0 - 1.0) < 1e-12 and rmse1 == 0.0 and rmae1 == 0.0
    return CheckResult("metric-edge-cases", ok, f"zero-pred rMSE {rmse0:.15f}")


def check_sampling_vs_quadrature() -> CheckResult:
    cfg = ModelConfig(layer_widths=[2, 2, 1])
    params = init_params(cfg, seed=5)
    prob = make_problem("reaction1d")
    spec = ObjectiveSpec(kind="region")
    x = np.array([3.0, 0.5])
    h = 0.2
    quad = region_gradient_quadrature(prob, cfg, params, x, h, spec)
    rng = np.random.default_rng(0)
    samples = sampled_gradients(prob, cfg, params, x, h, spec, rng, 20000)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0) / np.sqrt(len(samples))
    ok = bool(np.all(np.abs(mean - quad) <= 4 * se + 1e-14))
    return CheckResult("region-gradient-sampling-vs-quadrature", ok,
                       f"max |mean-quad|/se {float(np.max(np.abs(mean - quad) / (se + 1e-300))):.2f}")


def check_trust_region() -> CheckResult:
    state = TrustRegionState(r0=1e-4, capacity=5, width_cap=1.0)
    calibrate(state, np.array([1.0, 0.0]))
    calibrate(state, np.array([-1.0, 0.0]))
    sigma_ok = state.sigma == 1.0
    for k in range(6):
        calibrate(state, np.full(2, float(k)))
    evict_ok = len(state.buffer) == 5 and state.buffer[0][0] == 1.0
    zero = TrustRegionState(r0=1e-4, capacity=5, width_cap=1.0)
    calibrate(zero, np.ones(3))
    cap_ok = zero.effective_width() == 1.0
    ok = sigma_ok and evict_ok and cap_ok
    return CheckResult("trust-region-bookkeeping", ok,
                       f"sigma {sigma_ok}, eviction {evict_ok}, floor+cap {cap_ok}")


def check_optimizers() -> CheckResult:
    # quadratic bowl for L-BFGS
    a = np.array([[3.0, 0.4], [0.4, 1.0]])

    def quad(x):
        return 0.5 * x @ a @ x, a @ x

    opt = LbfgsState()
    x = np.array([4.0, -2.0])
    f, g = quad(x)
    for _ in range(10):
        x, f, g, _ = opt.step(x, f, g, quad)
        if np.linalg.norm(g) < 1e-10:
            break
    lbfgs_ok = np.linalg.norm(g) < 1e-10
    adam = AdamState(2)
    same = adam.step(np.array([1.0, 2.0]), np.zeros(2), 0.1)
    adam_ok = bool(np.all(same == np.array([1.0, 2.0])))
    return CheckResult("optimizer-oracles", lbfgs_ok and adam_ok,
                       f"lbfgs |g| {np.linalg.norm(g):.1e}, adam fixed point {adam_ok}")


ALL_CHECKS = (
    check_gradients,
    check_jets,
    check_residual_identity,
    check_metrics,
    check_sampling_vs_quadrature,
    check_trust_region,
    check_optimizers,
)


def run_all() -> list:
    return [fn() for fn in ALL_CHECKS]
