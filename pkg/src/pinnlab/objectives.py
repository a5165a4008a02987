"""Loss constructions: pointwise PINN loss, region-sampled surrogate, derivative
regularization, and the quadrature oracle for the true region gradient.

The pointwise loss follows the canonical three-term form: mean squared
equation residual over interior points, mean squared constraint defect over
initial points (plus the initial-velocity defect for the wave problem), and
mean squared boundary defect (periodic mismatch per pair, or squared value
per Dirichlet point). Region sampling replaces each collocation point by one
uniform draw from its neighborhood box before the same loss is built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import ObjectiveSpec
from .errors import CapabilityError, ConfigError, OracleGuardError
from .jets import densify
from .models import forward_jet, register_params
from .problems import CollocationSet
from .tape import Tape, backward, backward_per_sample


@dataclass(frozen=True)
class LossBuild:
    """A loss node on its tape plus the term values for tracing."""

    node: int
    tape: Tape
    parts: dict


@dataclass(frozen=True)
class PerturbedSet:
    """A collocation set with each point replaced by point + offset.

    Offsets respect the constraint manifolds: interior points move in both
    coordinates, initial points only in x, boundary points only in t, and
    periodic partners share their t offset so pairs stay aligned. Points are
    mapped back into the closed domain (wrap on a periodic x axis, clamp
    elsewhere). The draws are recorded alongside the perturbed coordinates.
    """

    base: CollocationSet
    interior: np.ndarray
    initial: np.ndarray
    boundary_left: np.ndarray
    boundary_right: np.ndarray
    offsets_interior: np.ndarray
    offsets_initial: np.ndarray
    offsets_boundary_left: np.ndarray
    offsets_boundary_right: np.ndarray


def _wrap_or_clamp_x(x, domain, periodic):
    if periodic:
        return domain.x_lo + np.mod(x - domain.x_lo, domain.x_width)
    return np.clip(x, domain.x_lo, domain.x_hi)


def _offsets(rng, mode, h, size):
    if mode == "centered":
        return rng.uniform(-0.5 * h, 0.5 * h, size=size)
    return rng.uniform(0.0, h, size=size)


def sample_region(colloc: CollocationSet, h, mode, rng, perturb="all") -> PerturbedSet:
    """One uniform draw from the width-``h`` neighborhood box of every point.

    ``h = 0`` returns the set unchanged without consuming the generator.
    Draw order is fixed (interior, initial, boundary) so runs replay exactly.
    """
    if h < 0:
        raise ConfigError("region width must be nonnegative")
    d = colloc.domain
    zero2 = np.zeros_like(colloc.interior)
    zero_i = np.zeros(len(colloc.initial))
    zero_b = np.zeros(len(colloc.boundary_left))
    if h == 0.0:
        return PerturbedSet(
            colloc,
            colloc.interior,
            colloc.initial,
            colloc.boundary_left,
            colloc.boundary_right,
            zero2,
            zero_i,
            zero_b,
            zero_b,
        )

    xi_int = _offsets(rng, mode, h, colloc.interior.shape)
    interior = colloc.interior + xi_int
    interior = np.column_stack(
        [
            _wrap_or_clamp_x(interior[:, 0], d, colloc.periodic),
            np.clip(interior[:, 1], d.t_lo, d.t_hi),
        ]
    )

    if perturb == "interior-only":
        return PerturbedSet(
            colloc,
            interior,
            colloc.initial,
            colloc.boundary_left,
            colloc.boundary_right,
            xi_int,
            zero_i,
            zero_b,
            zero_b,
        )

    # initial points move only along x; t stays on the initial manifold
    xi_ic = _offsets(rng, mode, h, len(colloc.initial))
    initial = colloc.initial.copy()
    initial[:, 0] = _wrap_or_clamp_x(initial[:, 0] + xi_ic, d, colloc.periodic)

    # boundary points move only along t; periodic partners share the draw
    xi_left = _offsets(rng, mode, h, len(colloc.boundary_left))
    xi_right = xi_left if colloc.periodic else _offsets(rng, mode, h, len(colloc.boundary_right))
    left = colloc.boundary_left.copy()
    right = colloc.boundary_right.copy()
    left[:, 1] = np.clip(left[:, 1] + xi_left, d.t_lo, d.t_hi)
    right[:, 1] = np.clip(right[:, 1] + xi_right, d.t_lo, d.t_hi)

    return PerturbedSet(
        colloc, interior, initial, left, right, xi_int, xi_ic, xi_left, xi_right
    )


def _spec_or_default(spec):
    return spec if spec is not None else ObjectiveSpec()


def _build_terms(problem, config, handles, tape, spec, interior, initial, left, right):
    """Assemble the weighted three-term loss from already-placed leaves."""
    parts = {}
    terms = []

    if spec.lambda_eq > 0:
        if len(interior) == 0:
            raise ConfigError("equation term has positive weight but no interior points")
        jet = forward_jet(
            config, handles, interior, tape,
            order=problem.residual_order, dims=problem.residual_dims,
        )
        res = problem.residual(densify(jet, tape), tape)
        eq = tape.mean(tape.square(res))
        parts["eq"] = float(tape.value(eq))
        terms.append(tape.scale(eq, spec.lambda_eq))
    else:
        parts["eq"] = 0.0

    if spec.lambda_ic > 0:
        if len(initial) == 0:
            raise ConfigError("initial term has positive weight but no initial points")
        order = 1 if problem.ic_velocity else 0
        jet = forward_jet(config, handles, initial, tape, order=order, dims=(1,))
        target = tape.constant(problem.ic_value(initial[:, 0])[:, None])
        defect = tape.square(tape.sub(jet.value, target))
        if problem.ic_velocity:
            defect = tape.add(defect, tape.square(jet.grad[1]))
        ic = tape.mean(defect)
        parts["ic"] = float(tape.value(ic))
        terms.append(tape.scale(ic, spec.lambda_ic))
    else:
        parts["ic"] = 0.0

    if spec.lambda_bc > 0:
        if len(left) == 0:
            raise ConfigError("boundary term has positive weight but no boundary points")
        jet_l = forward_jet(config, handles, left, tape, order=0)
        jet_r = forward_jet(config, handles, right, tape, order=0)
        if problem.periodic:
            bc = tape.mean(tape.square(tape.sub(jet_l.value, jet_r.value)))
        else:
            total = tape.add(
                tape.sum(tape.square(jet_l.value)), tape.sum(tape.square(jet_r.value))
            )
            bc = tape.scale(total, 1.0 / (len(left) + len(right)))
        parts["bc"] = float(tape.value(bc))
        terms.append(tape.scale(bc, spec.lambda_bc))
    else:
        parts["bc"] = 0.0

    if not terms:
        raise ConfigError("all loss weights are zero")
    node = terms[0]
    for t in terms[1:]:
        node = tape.add(node, t)
    return node, parts


def point_loss(problem, config, params, colloc, spec) -> LossBuild:
    """Canonical pointwise loss on a fresh tape."""
    spec = _spec_or_default(spec)
    tape = Tape()
    handles = register_params(tape, params)
    node, parts = _build_terms(
        problem,
        config,
        handles,
        tape,
        spec,
        colloc.interior,
        colloc.initial,
        colloc.boundary_left,
        colloc.boundary_right,
    )
    parts["total"] = float(tape.value(node))
    return LossBuild(node, tape, parts)


def loss_on_perturbed(problem, config, params, psets, spec) -> LossBuild:
    """Pointwise loss averaged over one or more perturbed sets (shared tape)."""
    spec = _spec_or_default(spec)
    tape = Tape()
    handles = register_params(tape, params)
    nodes = []
    part_sums = None
    for ps in psets:
        node, parts = _build_terms(
            problem,
            config,
            handles,
            tape,
            spec,
            ps.interior,
            ps.initial,
            ps.boundary_left,
            ps.boundary_right,
        )
        nodes.append(node)
        if part_sums is None:
            part_sums = dict(parts)
        else:
            for k, v in parts.items():
                part_sums[k] += v
    node = nodes[0]
    for other in nodes[1:]:
        node = tape.add(node, other)
    if len(nodes) > 1:
        node = tape.scale(node, 1.0 / len(nodes))
    parts = {k: v / len(nodes) for k, v in part_sums.items()}
    parts["total"] = float(tape.value(node))
    return LossBuild(node, tape, parts)


def region_loss(problem, config, params, colloc, spec, state, rng, k=1):
    """Monte Carlo region surrogate: the pointwise loss at sampled offsets.

    Width comes from the trust-region state (r0 / sigma, clamped); k > 1
    averages that many independent perturbed sets. Returns the loss build
    plus the perturbed sets used.
    """
    spec = _spec_or_default(spec)
    width = state.effective_width()
    psets = [
        sample_region(colloc, width, spec.region_mode, rng, perturb=spec.perturb)
        for _ in range(k)
    ]
    build = loss_on_perturbed(problem, config, params, psets, spec)
    return build, psets


def gpinn_loss(problem, config, params, colloc, spec) -> LossBuild:
    """Pointwise loss plus mean squared residual-derivative terms (x and t).

    Needs the residual's first derivatives, i.e. jets one order above the
    residual; second-order residuals would need third-order jets, which this
    build excludes.
    """
    spec = _spec_or_default(spec)
    if problem.residual_gradients is None:
        raise CapabilityError(
            f"{problem.name} has a second-order residual; its derivative "
            "regularizer needs third-order jets, which are not enabled"
        )
    tape = Tape()
    handles = register_params(tape, params)
    node, parts = _build_terms(
        problem,
        config,
        handles,
        tape,
        spec,
        colloc.interior,
        colloc.initial,
        colloc.boundary_left,
        colloc.boundary_right,
    )
    jet = densify(forward_jet(config, handles, colloc.interior, tape, order=2), tape)
    dfdx, dfdt = problem.residual_gradients(jet, tape)
    reg = tape.add(tape.mean(tape.square(dfdx)), tape.mean(tape.square(dfdt)))
    parts["reg"] = float(tape.value(reg))
    node = tape.add(node, tape.scale(reg, spec.gpinn_lambda))
    parts["total"] = float(tape.value(node))
    return LossBuild(node, tape, parts)


# -- single-point oracles -------------------------------------------------
#
# The sampling theory is stated per interior point: L(u, x) is the squared
# equation residual at x. These helpers expose its parameter gradient as a
# function of the offset so the Monte Carlo estimate can be compared with
# deterministic quadrature and with closed forms.


def _per_point_loss_vector(problem, config, params, points):
    """Tape whose root is the (n, 1) vector of per-point interior losses."""
    tape = Tape()
    handles = register_params(tape, params)
    jet = forward_jet(
        config, handles, points, tape,
        order=problem.residual_order, dims=problem.residual_dims,
    )
    res = problem.residual(densify(jet, tape), tape)
    return tape, tape.square(res)


def point_gradient(problem, config, params, x):
    """Gradient of the single-point interior loss at x."""
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    tape, vec = _per_point_loss_vector(problem, config, params, pts)
    return backward(tape, tape.mean(vec))


def _offset_box(h, mode):
    if mode == "centered":
        return -0.5 * h, 0.5 * h
    return 0.0, h


def gradients_at_offsets(problem, config, params, x, offsets):
    """Per-sample gradients of the single-point loss at x + each offset row."""
    x = np.asarray(x, dtype=np.float64)
    offsets = np.atleast_2d(np.asarray(offsets, dtype=np.float64))
    tape, vec = _per_point_loss_vector(problem, config, params, x[None, :] + offsets)
    return backward_per_sample(tape, vec)


def sampled_gradients(problem, config, params, x, h, spec, rng, n):
    """Per-sample gradients at n uniform offsets of x; shape (n, n_params).

    The offsets are used raw (no wrap/clamp), mirroring the region integral;
    the caller must keep x + [lo, hi]^2 inside the domain.
    """
    spec = _spec_or_default(spec)
    x = np.asarray(x, dtype=np.float64)
    lo, hi = _offset_box(h, spec.region_mode)
    d = problem.domain
    if not (
        d.x_lo <= x[0] + lo
        and x[0] + hi <= d.x_hi
        and d.t_lo <= x[1] + lo
        and x[1] + hi <= d.t_hi
    ):
        raise OracleGuardError("offset box leaves the domain; move x or shrink h")
    xi = rng.uniform(lo, hi, size=(n, 2))
    return gradients_at_offsets(problem, config, params, x, xi)


def region_gradient_quadrature(problem, config, params, x, h, spec, n_nodes=16):
    """Tensor-product Gauss-Legendre estimate of the mean gradient over the box.

    Deterministic oracle for the region gradient; guarded to small models.
    """
    spec = _spec_or_default(spec)
    if params.n_params > 100:
        raise OracleGuardError(
            f"quadrature oracle is limited to 100 parameters, got {params.n_params}"
        )
    x = np.asarray(x, dtype=np.float64)
    lo, hi = _offset_box(h, spec.region_mode)
    u, w = leggauss(n_nodes)
    xi = (u + 1.0) * (hi - lo) / 2.0 + lo
    wi = w * (hi - lo) / 2.0
    gx, gt = np.meshgrid(xi, xi, indexing="ij")
    pts = x[None, :] + np.column_stack([gx.ravel(), gt.ravel()])
    tape, vec = _per_point_loss_vector(problem, config, params, pts)
    grads = backward_per_sample(tape, vec)
    weights = np.outer(wi, wi).ravel()
    if hi == lo:  # degenerate box: plain point gradient
        return point_gradient(problem, config, params, x)
    volume = (hi - lo) ** 2
    return (weights[:, None] * grads).sum(axis=0) / volume
