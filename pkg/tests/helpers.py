"""Shared oracles for the test suite: finite differences and tiny fixtures."""

from __future__ import annotations

import numpy as np

from pinnlab.config import ModelConfig
from pinnlab.models import forward_values
from pinnlab.problems import DomainBox, PdeProblem


def fd_gradient(fn, x0, h=1e-6):
    """Central finite differences of a scalar function over a flat vector."""
    x0 = np.asarray(x0, dtype=np.float64)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def rel_err(a, b, floor=1e-30):
    return abs(a - b) / max(abs(a), abs(b), floor)


def max_rel_err_filtered(g, fd, threshold=1e-8):
    """Max relative error over coordinates with |g| above the threshold."""
    mask = np.abs(g) > threshold
    if not mask.any():
        return 0.0
    num = np.abs(fd[mask] - g[mask])
    den = np.maximum(np.abs(fd[mask]), np.abs(g[mask]))
    return float((num / den).max())


def scalar_field(config: ModelConfig, params):
    """u(x) callable over a single 2-vector, via the plain forward pass."""

    def u(pt):
        return forward_values(config, params, np.asarray(pt)[None, :])[0]

    return u


def fd_jet(u, x0, h1=1e-6, h2=1e-4):
    """All first and second derivatives of u at x0 by central differences."""
    x0 = np.asarray(x0, dtype=np.float64)
    ex = np.array([1.0, 0.0])
    et = np.array([0.0, 1.0])
    gx = (u(x0 + h1 * ex) - u(x0 - h1 * ex)) / (2 * h1)
    gt = (u(x0 + h1 * et) - u(x0 - h1 * et)) / (2 * h1)
    hxx = (u(x0 + h2 * ex) - 2 * u(x0) + u(x0 - h2 * ex)) / h2**2
    htt = (u(x0 + h2 * et) - 2 * u(x0) + u(x0 - h2 * et)) / h2**2
    hxt = (
        u(x0 + h2 * (ex + et))
        - u(x0 + h2 * (ex - et))
        - u(x0 + h2 * (et - ex))
        + u(x0 - h2 * (ex + et))
    ) / (4 * h2**2)
    return {"gx": gx, "gt": gt, "hxx": hxx, "htt": htt, "hxt": hxt}


def identity_problem():
    """Synthetic problem whose interior 'residual' is the field itself.

    With an affine model this makes the single-point loss (theta . (x, t, 1))^2,
    the configuration behind the closed-form sampling oracles.
    """
    zero = lambda x, t: np.zeros_like(np.asarray(x, dtype=np.float64))
    return PdeProblem(
        name="identity",
        domain=DomainBox(0.0, 1.0, 0.0, 1.0),
        params={},
        bc_kind="dirichlet-zero",
        residual_order=0,
        residual_dims=(),
        ic_velocity=False,
        residual=lambda jet, tape: jet.value,
        residual_gradients=None,
        ic_value=lambda x: np.zeros_like(x),
        analytic=zero,
        analytic_dx=zero,
        analytic_dt=zero,
        analytic_dxx=zero,
        analytic_dtt=zero,
        analytic_dxt=zero,
    )


TINY_EXPERIMENT = """
name: tiny
problem: reaction1d
model: {layer_widths: [2, 8, 1]}
iterations: 8
eval_every: 4
train_mesh: {n_interior: 6, n_ic: 11, n_bc: 11}
eval_mesh_n: 21
seeds: [0, 1]
arms:
  - {name: point, objective: {kind: point}}
  - {name: region, objective: {kind: region}}
"""
