"""Forward propagation of input-derivative jets through tape ops.

A ``Jet2`` bundles a quantity with its first derivatives and upper-triangle
second derivatives w.r.t. the network inputs. Every entry is itself a tape
node, so reverse mode over the tape later yields parameter gradients of any
derivative entry; no double-backward is needed.

Entries that are identically zero are stored as ``None`` and skipped by the
composition rules, which keeps affine chains cheap (the Hessian of a network
stays empty until the first nonlinearity creates it). Composition accepts an
``order`` cap so callers that only need first derivatives never pay for
second-order terms.

Third-order jets are not part of this build; the composition helpers raise
``CapabilityError`` when asked for them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, GraphError


def tri_index(j, k, dim):
    """Index of the (j, k) entry, j <= k, in row-major upper-triangle storage."""
    if j > k:
        j, k = k, j
    return j * dim - (j * (j - 1)) // 2 + (k - j)


def tri_size(dim):
    return dim * (dim + 1) // 2


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and upper-triangle Hessian node ids; None means zero."""

    dim: int
    value: int
    grad: tuple
    hess: tuple

    def hess_at(self, j, k):
        return self.hess[tri_index(j, k, self.dim)]


def jet_input(tape, x, dim):
    """Seed jet for the coordinate block itself: grad w.r.t. x_j is e_j, Hessian zero.

    ``x`` has shape (n, dim); the unit direction rows are stored once with
    shape (1, dim) and broadcast against the batch.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != dim:
        raise GraphError(f"input block must have shape (n, {dim}), got {x.shape}")
    value = tape.input(x)
    grad = []
    for j in range(dim):
        e = np.zeros((1, dim))
        e[0, j] = 1.0
        grad.append(tape.constant(e))
    return Jet2(dim, value, tuple(grad), (None,) * tri_size(dim))


def jet_constant(tape, x, dim):
    return Jet2(dim, tape.constant(x), (None,) * dim, (None,) * tri_size(dim))


def _add_maybe(tape, a, b):
    if a is None:
        return b
    if b is None:
        return a
    return tape.add(a, b)


def _sub_maybe(tape, a, b):
    if b is None:
        return a
    if a is None:
        return tape.neg(b)
    return tape.sub(a, b)


def _mul_maybe(tape, a, b):
    if a is None or b is None:
        return None
    return tape.mul(a, b)


def _scale_maybe(tape, a, c):
    if a is None:
        return None
    return tape.scale(a, c)


def _neg_maybe(tape, a):
    if a is None:
        return None
    return tape.neg(a)


def jet_affine(jet, w, b, tape, order=2):
    """Affine map applied entrywise to the jet: output = value @ W + b.

    Derivative entries propagate linearly (right-multiplication by W).
    """
    value = tape.matmul(jet.value, w)
    if b is not None:
        value = tape.add(value, b)
    if order >= 1:
        grad = tuple(None if g is None else tape.matmul(g, w) for g in jet.grad)
    else:
        grad = (None,) * jet.dim
    if order >= 2:
        hess = tuple(None if h is None else tape.matmul(h, w) for h in jet.hess)
    else:
        hess = (None,) * tri_size(jet.dim)
    return Jet2(jet.dim, value, grad, hess)


def _unary_chain(jet, tape, value, fp_fn, fpp_fn, order):
    """Order-2 chain rule for f(u): grad f'·u_j, hess f''·u_j·u_k + f'·u_jk."""
    dim = jet.dim
    if order < 1:
        return Jet2(dim, value, (None,) * dim, (None,) * tri_size(dim))
    fp = fp_fn()
    grad = tuple(_mul_maybe(tape, fp, g) for g in jet.grad)
    if order < 2:
        return Jet2(dim, value, grad, (None,) * tri_size(dim))
    need_fpp = any(
        jet.grad[j] is not None and jet.grad[k] is not None
        for j in range(dim)
        for k in range(j, dim)
    )
    fpp = fpp_fn() if need_fpp else None
    hess = []
    for j in range(dim):
        for k in range(j, dim):
            gjk = _mul_maybe(tape, jet.grad[j], jet.grad[k])
            term1 = _mul_maybe(tape, fpp, gjk) if fpp is not None else None
            term2 = _mul_maybe(tape, fp, jet.hess_at(j, k))
            hess.append(_add_maybe(tape, term1, term2))
    return Jet2(dim, value, grad, tuple(hess))


def _compose_unary(op, jet, tape, order, c=None):
    v = jet.value
    if op == "tanh":
        out = tape.tanh(v)
        fp_holder = {}

        def fp_fn():
            fp_holder["fp"] = tape.sub(tape.constant(1.0), tape.square(out))
            return fp_holder["fp"]

        return _unary_chain(
            jet, tape, out, fp_fn,
            lambda: tape.scale(tape.mul(out, fp_holder["fp"]), -2.0), order,
        )
    if op == "sin":
        out = tape.sin(v)
        return _unary_chain(jet, tape, out, lambda: tape.cos(v), lambda: tape.neg(out), order)
    if op == "cos":
        out = tape.cos(v)
        return _unary_chain(
            jet, tape, out, lambda: tape.neg(tape.sin(v)), lambda: tape.neg(out), order
        )
    if op == "exp":
        out = tape.exp(v)
        return _unary_chain(jet, tape, out, lambda: out, lambda: out, order)
    if op == "reciprocal":
        out = tape.reciprocal(v)
        sq_holder = {}

        def fp_fn():
            sq_holder["sq"] = tape.square(out)
            return tape.neg(sq_holder["sq"])

        return _unary_chain(
            jet, tape, out, fp_fn,
            lambda: tape.scale(tape.mul(sq_holder["sq"], out), 2.0), order,
        )
    if op == "square":
        out = tape.square(v)
        return _unary_chain(
            jet, tape, out, lambda: tape.scale(v, 2.0), lambda: tape.constant(2.0), order
        )
    if op == "neg":
        return Jet2(
            jet.dim,
            tape.neg(v),
            tuple(_neg_maybe(tape, g) for g in jet.grad),
            tuple(_neg_maybe(tape, h) for h in jet.hess),
        )
    if op == "scale":
        return Jet2(
            jet.dim,
            tape.scale(v, c),
            tuple(_scale_maybe(tape, g, c) for g in jet.grad),
            tuple(_scale_maybe(tape, h, c) for h in jet.hess),
        )
    raise CapabilityError(f"op {op!r} has no jet propagation rule")


def _compose_mul(a, b, tape, order):
    dim = a.dim
    value = tape.mul(a.value, b.value)
    if order < 1:
        return Jet2(dim, value, (None,) * dim, (None,) * tri_size(dim))
    grad = tuple(
        _add_maybe(
            tape,
            _mul_maybe(tape, a.grad[j], b.value),
            _mul_maybe(tape, a.value, b.grad[j]),
        )
        for j in range(dim)
    )
    if order < 2:
        return Jet2(dim, value, grad, (None,) * tri_size(dim))
    hess = []
    for j in range(dim):
        for k in range(j, dim):
            terms = _add_maybe(
                tape,
                _add_maybe(
                    tape,
                    _mul_maybe(tape, a.hess_at(j, k), b.value),
                    _mul_maybe(tape, a.value, b.hess_at(j, k)),
                ),
                _add_maybe(
                    tape,
                    _mul_maybe(tape, a.grad[j], b.grad[k]),
                    _mul_maybe(tape, a.grad[k], b.grad[j]),
                ),
            )
            hess.append(terms)
    return Jet2(dim, value, grad, tuple(hess))


def jet_compose(op, inputs, tape, c=None, order=2):
    """Apply a primitive to jets, propagating exact chain rules up to ``order``.

    Unary ops: neg, scale (with constant ``c``), square, tanh, sin, cos, exp,
    reciprocal. Binary ops: add, sub, mul. Raises CapabilityError for
    anything else (including any request for third-order propagation).
    """
    if order > 2:
        raise CapabilityError("third-order jets are not enabled in this build")
    if op in ("add", "sub"):
        a, b = inputs
        if a.dim != b.dim:
            raise GraphError("jet dims differ")
        combine = _add_maybe if op == "add" else _sub_maybe
        value = tape.add(a.value, b.value) if op == "add" else tape.sub(a.value, b.value)
        grad = tuple(combine(tape, a.grad[j], b.grad[j]) for j in range(a.dim))
        hess = tuple(combine(tape, ha, hb) for ha, hb in zip(a.hess, b.hess))
        return Jet2(a.dim, value, grad, hess)
    if op == "mul":
        a, b = inputs
        if a.dim != b.dim:
            raise GraphError("jet dims differ")
        return _compose_mul(a, b, tape, order)
    if len(inputs) != 1:
        raise CapabilityError(f"op {op!r} is not a supported jet primitive")
    return _compose_unary(op, inputs[0], tape, order, c=c)


def densify(jet, tape):
    """Replace implicit-zero entries with explicit 0.0 constants.

    Residual builders index jet entries directly; this keeps them free of
    None handling (an affine model has an identically-zero Hessian).
    """
    zero = None

    def pin(nid):
        nonlocal zero
        if nid is not None:
            return nid
        if zero is None:
            zero = tape.constant(0.0)
        return zero

    return Jet2(
        jet.dim,
        pin(jet.value),
        tuple(pin(g) for g in jet.grad),
        tuple(pin(h) for h in jet.hess),
    )


def jet3_compose(op, inputs, tape, c=None):
    """Third-order propagation is excluded from this build."""
    raise CapabilityError("third-order jets are not enabled in this build")
