"""Benchmark PDE problems: residual operators, constraints, analytic solutions.

Three problems on (x, t) boxes:

* ``reaction1d``   u_t = rho * u * (1 - u), periodic in x, Gaussian bump IC.
* ``wave1d``       u_tt = 4 u_xx, zero Dirichlet BC, superposed-sine IC with
                   zero initial velocity.
* ``convection``   u_t + beta * u_x = 0, periodic in x, sin(x) IC.

Residual operators are built from jet entries on a tape. Analytic solutions
and their derivatives are implemented by hand in plain numpy so they can act
as an oracle that is independent of the jet engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .jets import Jet2
from .tape import Tape


@dataclass(frozen=True)
class DomainBox:
    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float

    @property
    def x_width(self):
        return self.x_hi - self.x_lo

    @property
    def t_width(self):
        return self.t_hi - self.t_lo

    @property
    def min_side(self):
        return min(self.x_width, self.t_width)


@dataclass(frozen=True)
class PdeProblem:
    name: str
    domain: DomainBox
    params: dict
    bc_kind: str  # "periodic" | "dirichlet-zero"
    residual_order: int  # highest derivative order in the residual
    # first-order input dims the residual actually reads (0 = x, 1 = t);
    # first-order problems skip the unused jet channel during training
    residual_dims: tuple
    ic_velocity: bool  # wave also pins u_t(x, 0) = 0
    residual: Callable[[Jet2, Tape], int]
    # (dF/dx node, dF/dt node) from an order-2 jet; None when that would
    # require third-order jets (second-order residuals)
    residual_gradients: Optional[Callable[[Jet2, Tape], tuple]]
    ic_value: Callable[[np.ndarray], np.ndarray]
    analytic: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_dx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_dt: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_dxx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_dtt: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_dxt: Callable[[np.ndarray, np.ndarray], np.ndarray]

    @property
    def periodic(self):
        return self.bc_kind == "periodic"


# -- reaction ------------------------------------------------------------


def _make_reaction(rho):
    s2 = 2.0 * (np.pi / 4.0) ** 2  # Gaussian bump width

    def h(x):
        return np.exp(-((x - np.pi) ** 2) / s2)

    def hp(x):
        return h(x) * (-2.0 * (x - np.pi) / s2)

    def hpp(x):
        return hp(x) * (-2.0 * (x - np.pi) / s2) + h(x) * (-2.0 / s2)

    def parts(x, t):
        a = h(x) * np.exp(rho * t)
        d = a + 1.0 - h(x)
        return a, d

    def u(x, t):
        a, d = parts(x, t)
        return a / d

    def u_x(x, t):
        _, d = parts(x, t)
        return hp(x) * np.exp(rho * t) / (d * d)

    def u_t(x, t):
        a, d = parts(x, t)
        return rho * a * (1.0 - h(x)) / (d * d)

    def u_xx(x, t):
        a, d = parts(x, t)
        e = np.exp(rho * t)
        d_x = hp(x) * (e - 1.0)
        return e * (hpp(x) * d - 2.0 * hp(x) * d_x) / (d * d * d)

    def u_tt(x, t):
        a, d = parts(x, t)
        return rho * rho * a * (1.0 - h(x)) * (d - 2.0 * a) / (d * d * d)

    def u_xt(x, t):
        a, d = parts(x, t)
        return hp(x) * np.exp(rho * t) * rho * (d - 2.0 * a) / (d * d * d)

    def residual(jet, tape):
        # u_t - rho * u * (1 - u)
        one = tape.constant(1.0)
        growth = tape.mul(jet.value, tape.sub(one, jet.value))
        return tape.sub(jet.grad[1], tape.scale(growth, rho))

    def residual_gradients(jet, tape):
        # dF/dx = u_tx - rho * u_x * (1 - 2u);  dF/dt analogous
        one = tape.constant(1.0)
        factor = tape.sub(one, tape.scale(jet.value, 2.0))
        dfdx = tape.sub(jet.hess_at(0, 1), tape.scale(tape.mul(jet.grad[0], factor), rho))
        dfdt = tape.sub(jet.hess_at(1, 1), tape.scale(tape.mul(jet.grad[1], factor), rho))
        return dfdx, dfdt

    return PdeProblem(
        name="reaction1d",
        domain=DomainBox(0.0, 2.0 * np.pi, 0.0, 1.0),
        params={"rho": rho},
        bc_kind="periodic",
        residual_order=1,
        residual_dims=(1,),
        ic_velocity=False,
        residual=residual,
        residual_gradients=residual_gradients,
        ic_value=h,
        analytic=u,
        analytic_dx=u_x,
        analytic_dt=u_t,
        analytic_dxx=u_xx,
        analytic_dtt=u_tt,
        analytic_dxt=u_xt,
    )


# -- wave ----------------------------------------------------------------


def _make_wave(beta):
    b = float(beta)

    def u(x, t):
        return np.sin(np.pi * x) * np.cos(2 * np.pi * t) + 0.5 * np.sin(
            b * np.pi * x
        ) * np.cos(2 * b * np.pi * t)

    def u_x(x, t):
        return np.pi * np.cos(np.pi * x) * np.cos(2 * np.pi * t) + 0.5 * b * np.pi * np.cos(
            b * np.pi * x
        ) * np.cos(2 * b * np.pi * t)

    def u_t(x, t):
        return -2 * np.pi * np.sin(np.pi * x) * np.sin(2 * np.pi * t) - b * np.pi * np.sin(
            b * np.pi * x
        ) * np.sin(2 * b * np.pi * t)

    def u_xx(x, t):
        return -(np.pi**2) * np.sin(np.pi * x) * np.cos(2 * np.pi * t) - 0.5 * (
            b * np.pi
        ) ** 2 * np.sin(b * np.pi * x) * np.cos(2 * b * np.pi * t)

    def u_tt(x, t):
        return -4 * np.pi**2 * np.sin(np.pi * x) * np.cos(2 * np.pi * t) - 2 * (
            b * np.pi
        ) ** 2 * np.sin(b * np.pi * x) * np.cos(2 * b * np.pi * t)

    def u_xt(x, t):
        return -2 * np.pi**2 * np.cos(np.pi * x) * np.sin(2 * np.pi * t) - (
            b * np.pi
        ) ** 2 * np.cos(b * np.pi * x) * np.sin(2 * b * np.pi * t)

    def ic(x):
        return np.sin(np.pi * x) + 0.5 * np.sin(b * np.pi * x)

    def residual(jet, tape):
        # u_tt - 4 u_xx
        return tape.sub(jet.hess_at(1, 1), tape.scale(jet.hess_at(0, 0), 4.0))

    return PdeProblem(
        name="wave1d",
        domain=DomainBox(0.0, 1.0, 0.0, 1.0),
        params={"beta": b},
        bc_kind="dirichlet-zero",
        residual_order=2,
        residual_dims=(0, 1),
        ic_velocity=True,
        residual=residual,
        residual_gradients=None,  # would need third-order jets
        ic_value=ic,
        analytic=u,
        analytic_dx=u_x,
        analytic_dt=u_t,
        analytic_dxx=u_xx,
        analytic_dtt=u_tt,
        analytic_dxt=u_xt,
    )


# -- convection ----------------------------------------------------------


def _make_convection(beta):
    b = float(beta)

    def u(x, t):
        return np.sin(x - b * t)

    def residual(jet, tape):
        # u_t + beta * u_x
        return tape.add(jet.grad[1], tape.scale(jet.grad[0], b))

    def residual_gradients(jet, tape):
        dfdx = tape.add(jet.hess_at(0, 1), tape.scale(jet.hess_at(0, 0), b))
        dfdt = tape.add(jet.hess_at(1, 1), tape.scale(jet.hess_at(0, 1), b))
        return dfdx, dfdt

    return PdeProblem(
        name="convection",
        domain=DomainBox(0.0, 2.0 * np.pi, 0.0, 1.0),
        params={"beta": b},
        bc_kind="periodic",
        residual_order=1,
        residual_dims=(0, 1),
        ic_velocity=False,
        residual=residual,
        residual_gradients=residual_gradients,
        ic_value=np.sin,
        analytic=u,
        analytic_dx=lambda x, t: np.cos(x - b * t),
        analytic_dt=lambda x, t: -b * np.cos(x - b * t),
        analytic_dxx=lambda x, t: -np.sin(x - b * t),
        analytic_dtt=lambda x, t: -b * b * np.sin(x - b * t),
        analytic_dxt=lambda x, t: b * np.sin(x - b * t),
    )


_FACTORIES = {
    "reaction1d": ("rho", 5.0, _make_reaction),
    "wave1d": ("beta", 3.0, _make_wave),
    "convection": ("beta", 50.0, _make_convection),
}


def make_problem(name, **overrides) -> PdeProblem:
    if name not in _FACTORIES:
        raise ConfigError(f"unknown problem {name!r}")
    key, default, factory = _FACTORIES[name]
    value = default
    for k, v in overrides.items():
        if k != key:
            raise ConfigError(f"{name} accepts only the {key!r} override, got {k!r}")
        value = float(v)
    return factory(value)


# -- collocation ---------------------------------------------------------


@dataclass(frozen=True)
class CollocationSet:
    """Finite point sets per constraint manifold.

    ``boundary_left``/``boundary_right`` are matched rows: for periodic
    problems they form pairs sharing t; for Dirichlet problems they are
    independent points on each face.
    """

    domain: DomainBox
    periodic: bool
    interior: np.ndarray  # (n, 2) columns x, t
    initial: np.ndarray  # (m, 2) at t = t_lo
    boundary_left: np.ndarray  # (k, 2) at x = x_lo
    boundary_right: np.ndarray  # (k, 2) at x = x_hi


def uniform_mesh(problem: PdeProblem, n_interior, n_ic, n_bc) -> CollocationSet:
    """Uniform closed-box grids: n x n interior, n_ic initial, n_bc per face."""
    if min(n_interior, n_ic, n_bc) < 2:
        raise ConfigError("mesh counts must be at least 2")
    d = problem.domain
    xs = np.linspace(d.x_lo, d.x_hi, n_interior)
    ts = np.linspace(d.t_lo, d.t_hi, n_interior)
    gx, gt = np.meshgrid(xs, ts, indexing="ij")
    interior = np.column_stack([gx.ravel(), gt.ravel()])
    ic_x = np.linspace(d.x_lo, d.x_hi, n_ic)
    initial = np.column_stack([ic_x, np.full(n_ic, d.t_lo)])
    bc_t = np.linspace(d.t_lo, d.t_hi, n_bc)
    left = np.column_stack([np.full(n_bc, d.x_lo), bc_t])
    right = np.column_stack([np.full(n_bc, d.x_hi), bc_t])
    return CollocationSet(d, problem.periodic, interior, initial, left, right)


def residual_on_analytic(problem: PdeProblem, points) -> np.ndarray:
    """Residual evaluated on a jet assembled from the closed-form derivatives.

    Validates the residual operator and the hand-written derivatives against
    each other: the result should vanish identically.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    x, t = points[:, 0], points[:, 1]
    tape = Tape()
    value = tape.constant(problem.analytic(x, t)[:, None])
    grad = (
        tape.constant(problem.analytic_dx(x, t)[:, None]),
        tape.constant(problem.analytic_dt(x, t)[:, None]),
    )
    hess = (
        tape.constant(problem.analytic_dxx(x, t)[:, None]),
        tape.constant(problem.analytic_dxt(x, t)[:, None]),
        tape.constant(problem.analytic_dtt(x, t)[:, None]),
    )
    jet = Jet2(2, value, grad, hess)
    res = problem.residual(jet, tape)
    return tape.value(res)[:, 0]
