"""Reverse-mode computation tape.

Every node carries a float64 numpy value. Values may be scalars (shape ``()``)
or arrays; an array-valued node represents the same scalar expression
evaluated at a batch of points, which is what keeps whole-mesh losses cheap.
Parameter leaves may be blocks (a weight matrix, a bias vector); each block
owns a contiguous range of flat-gradient coordinates, assigned in
registration order.

The graph is append-only and topological by construction: every parent id is
smaller than its child id. ``backward`` walks node ids in descending order
with a fixed parent order, so gradient accumulation is deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import GraphError, NumericError


class Node:
    __slots__ = ("op", "parents", "value", "aux")

    def __init__(self, op, parents, value, aux=None):
        self.op = op
        self.parents = parents
        self.value = value
        self.aux = aux

    def __repr__(self):
        return f"Node(op={self.op}, parents={self.parents}, shape={self.value.shape})"


class Tape:
    """Append-only computation graph with block parameter leaves."""

    def __init__(self):
        self.nodes: list[Node] = []
        # (node_id, flat slice) per parameter leaf, in registration order
        self.param_slices: list[tuple[int, slice]] = []
        self.n_params = 0

    # -- construction ----------------------------------------------------

    def _push(self, op, parents, value, aux=None):
        self.nodes.append(Node(op, parents, value, aux))
        return len(self.nodes) - 1

    def constant(self, x):
        return self._push("constant", (), np.asarray(x, dtype=np.float64))

    def input(self, x):
        return self._push("input", (), np.asarray(x, dtype=np.float64))

    def param(self, x):
        """Register a parameter leaf; its flat range follows registration order."""
        value = np.asarray(x, dtype=np.float64)
        nid = self._push("param", (), value)
        start = self.n_params
        self.n_params += value.size
        self.param_slices.append((nid, slice(start, self.n_params)))
        return nid

    def value(self, i):
        return self.nodes[i].value

    def add(self, a, b):
        return self._push("add", (a, b), self.nodes[a].value + self.nodes[b].value)

    def sub(self, a, b):
        return self._push("sub", (a, b), self.nodes[a].value - self.nodes[b].value)

    def mul(self, a, b):
        return self._push("mul", (a, b), self.nodes[a].value * self.nodes[b].value)

    def scale(self, a, c):
        c = float(c)
        return self._push("scale", (a,), self.nodes[a].value * c, c)

    def neg(self, a):
        return self._push("neg", (a,), -self.nodes[a].value)

    def square(self, a):
        v = self.nodes[a].value
        return self._push("square", (a,), v * v)

    def tanh(self, a):
        return self._push("tanh", (a,), np.tanh(self.nodes[a].value))

    def sin(self, a):
        return self._push("sin", (a,), np.sin(self.nodes[a].value))

    def cos(self, a):
        return self._push("cos", (a,), np.cos(self.nodes[a].value))

    def exp(self, a):
        return self._push("exp", (a,), np.exp(self.nodes[a].value))

    def reciprocal(self, a):
        return self._push("reciprocal", (a,), 1.0 / self.nodes[a].value)

    def matmul(self, a, b):
        return self._push("matmul", (a, b), self.nodes[a].value @ self.nodes[b].value)

    def sum(self, a):
        return self._push("sum", (a,), np.sum(self.nodes[a].value))

    def mean(self, a):
        return self._push("mean", (a,), np.mean(self.nodes[a].value))

    def __len__(self):
        return len(self.nodes)


def reevaluate(tape):
    """Recompute every node from its parents; True iff bit-identical to stored values."""
    vals = []
    for node in tape.nodes:
        p = [vals[i] for i in node.parents]
        op = node.op
        if op in ("constant", "param", "input"):
            v = node.value
        elif op == "add":
            v = p[0] + p[1]
        elif op == "sub":
            v = p[0] - p[1]
        elif op == "mul":
            v = p[0] * p[1]
        elif op == "scale":
            v = p[0] * node.aux
        elif op == "neg":
            v = -p[0]
        elif op == "square":
            v = p[0] * p[0]
        elif op == "tanh":
            v = np.tanh(p[0])
        elif op == "sin":
            v = np.sin(p[0])
        elif op == "cos":
            v = np.cos(p[0])
        elif op == "exp":
            v = np.exp(p[0])
        elif op == "reciprocal":
            v = 1.0 / p[0]
        elif op == "matmul":
            v = p[0] @ p[1]
        elif op == "sum":
            v = np.sum(p[0])
        elif op == "mean":
            v = np.mean(p[0])
        else:
            raise GraphError(f"unknown op {op!r}")
        vals.append(v)
        if not np.array_equal(v, node.value):
            return False
    return True


def _check_root(tape, root):
    if not isinstance(root, (int, np.integer)) or root < 0 or root >= len(tape.nodes):
        raise GraphError(f"unknown node id {root!r}")


def _first_nonfinite_node(tape, upto):
    for i in range(upto + 1):
        if not np.all(np.isfinite(tape.nodes[i].value)):
            return i
    return None


def _reduce_to_shape(arr, shape):
    """Sum an adjoint over axes that were broadcast during the forward op."""
    arr = np.asarray(arr)
    if arr.shape == shape:
        return arr
    extra = arr.ndim - len(shape)
    if extra > 0:
        arr = arr.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (a, s) in enumerate(zip(arr.shape, shape)) if s == 1 and a != 1)
    if axes:
        arr = arr.sum(axis=axes, keepdims=True)
    return arr


def backward(tape, root):
    """Flat gradient of the scalar node ``root`` w.r.t. every parameter leaf.

    Accumulation is deterministic: nodes are visited in descending id order
    and parents in their stored order. Raises NumericError when a non-finite
    value is met; the error carries the id of the first offending node
    (located lazily, only on failure).
    """
    _check_root(tape, root)
    rv = tape.nodes[root].value
    if rv.shape != ():
        raise GraphError(f"backward root must be scalar, got shape {rv.shape}")
    if not np.isfinite(rv):
        nid = _first_nonfinite_node(tape, root)
        raise NumericError(f"non-finite value at node {nid}", node_id=nid)

    nodes = tape.nodes
    adj = [None] * len(nodes)
    adj[root] = np.array(1.0)

    def accum(idx, delta):
        delta = _reduce_to_shape(delta, nodes[idx].value.shape)
        if adj[idx] is None:
            # safe to alias: stored adjoints are never mutated in place
            adj[idx] = delta
        else:
            adj[idx] = adj[idx] + delta

    for i in range(root, -1, -1):
        a = adj[i]
        if a is None:
            continue
        node = nodes[i]
        op = node.op
        if op in ("constant", "param", "input"):
            continue
        p = node.parents
        if op == "add":
            accum(p[0], a)
            accum(p[1], a)
        elif op == "sub":
            accum(p[0], a)
            accum(p[1], -a)
        elif op == "mul":
            accum(p[0], a * nodes[p[1]].value)
            accum(p[1], a * nodes[p[0]].value)
        elif op == "scale":
            accum(p[0], a * node.aux)
        elif op == "neg":
            accum(p[0], -a)
        elif op == "square":
            accum(p[0], a * (2.0 * nodes[p[0]].value))
        elif op == "tanh":
            accum(p[0], a * (1.0 - node.value * node.value))
        elif op == "sin":
            accum(p[0], a * np.cos(nodes[p[0]].value))
        elif op == "cos":
            accum(p[0], -a * np.sin(nodes[p[0]].value))
        elif op == "exp":
            accum(p[0], a * node.value)
        elif op == "reciprocal":
            accum(p[0], -a * node.value * node.value)
        elif op == "matmul":
            accum(p[0], a @ nodes[p[1]].value.T)
            accum(p[1], nodes[p[0]].value.T @ a)
        elif op == "sum":
            accum(p[0], np.broadcast_to(a, nodes[p[0]].value.shape))
        elif op == "mean":
            size = nodes[p[0]].value.size
            accum(p[0], np.broadcast_to(a / size, nodes[p[0]].value.shape))
        else:
            raise GraphError(f"unknown op {op!r}")

    grad = np.zeros(tape.n_params)
    for nid, sl in tape.param_slices:
        g = adj[nid]
        if g is not None:
            grad[sl] = np.asarray(g).ravel()
    if not np.all(np.isfinite(grad)):
        nid = _first_nonfinite_node(tape, root)
        raise NumericError(f"non-finite gradient (first bad node {nid})", node_id=nid)
    return grad


def backward_per_sample(tape, root):
    """Per-sample flat gradients of a batch-valued root.

    ``root`` must carry the batch on axis 0 (shape ``(N,)`` or ``(N, 1)``);
    returns an ``(N, n_params)`` array whose row n differentiates the n-th
    root entry alone. A node is treated as batch-carrying iff its leading
    axis has length N; adjoints of non-batch nodes get an extra leading
    batch axis. Full reductions (sum/mean) over batch-carrying arrays are
    not supported here. This is oracle machinery for the sampling tests,
    not part of the training loop.
    """
    _check_root(tape, root)
    rv = tape.nodes[root].value
    if rv.ndim == 0:
        raise GraphError("per-sample backward needs a batch-valued root")
    n = rv.shape[0]
    if not np.all(np.isfinite(rv)):
        nid = _first_nonfinite_node(tape, root)
        raise NumericError(f"non-finite value at node {nid}", node_id=nid)

    nodes = tape.nodes

    def is_batch(idx):
        shape = nodes[idx].value.shape
        return len(shape) >= 1 and shape[0] == n

    adj = [None] * len(nodes)
    adj[root] = np.ones_like(rv)

    def accum(idx, delta):
        # target: node shape if the node carries the batch, else (n, *shape)
        shape = nodes[idx].value.shape
        target = shape if is_batch(idx) else (n,) + shape
        delta = np.asarray(delta)
        # align dims after the batch axis from the right (numpy broadcast rules);
        # axis 0 is the batch and is never reduced
        extra = delta.ndim - len(target)
        if extra > 0:
            delta = delta.sum(axis=tuple(range(1, 1 + extra)))
        elif extra < 0:
            delta = delta.reshape(delta.shape[:1] + (1,) * (-extra) + delta.shape[1:])
        axes = tuple(
            i for i in range(1, len(target)) if target[i] == 1 and delta.shape[i] != 1
        )
        if axes:
            delta = delta.sum(axis=axes, keepdims=True)
        if delta.shape != target:
            delta = np.broadcast_to(delta, target)
        if adj[idx] is None:
            adj[idx] = np.array(delta, dtype=np.float64)
        else:
            adj[idx] = adj[idx] + delta

    for i in range(root, -1, -1):
        a = adj[i]
        if a is None:
            continue
        node = nodes[i]
        op = node.op
        if op in ("constant", "param", "input"):
            continue
        p = node.parents
        if op == "add":
            accum(p[0], a)
            accum(p[1], a)
        elif op == "sub":
            accum(p[0], a)
            accum(p[1], -a)
        elif op == "mul":
            accum(p[0], a * nodes[p[1]].value)
            accum(p[1], a * nodes[p[0]].value)
        elif op == "scale":
            accum(p[0], a * node.aux)
        elif op == "neg":
            accum(p[0], -a)
        elif op == "square":
            accum(p[0], a * (2.0 * nodes[p[0]].value))
        elif op == "tanh":
            accum(p[0], a * (1.0 - node.value * node.value))
        elif op == "sin":
            accum(p[0], a * np.cos(nodes[p[0]].value))
        elif op == "cos":
            accum(p[0], -a * np.sin(nodes[p[0]].value))
        elif op == "exp":
            accum(p[0], a * node.value)
        elif op == "reciprocal":
            accum(p[0], -a * node.value * node.value)
        elif op == "matmul":
            va, vb = nodes[p[0]].value, nodes[p[1]].value
            accum(p[0], a @ vb.swapaxes(-1, -2))
            if is_batch(p[0]):
                # batch rows hit the weight independently; keep them apart
                accum(p[1], np.einsum("n...i,n...o->nio", va, a))
            else:
                accum(p[1], va.swapaxes(-1, -2) @ a)
        elif op in ("sum", "mean"):
            if is_batch(p[0]):
                raise GraphError("per-sample backward cannot cross a batch reduction")
            size = nodes[p[0]].value.size
            d = a if op == "sum" else a / size
            accum(p[0], d.reshape(d.shape + (1,) * nodes[p[0]].value.ndim))
        else:
            raise GraphError(f"unknown op {op!r}")

    grad = np.zeros((n, tape.n_params))
    for nid, sl in tape.param_slices:
        g = adj[nid]
        if g is None:
            continue
        g = np.asarray(g)
        if g.shape == nodes[nid].value.shape:  # leaf never saw the batch axis
            grad[:, sl] = np.broadcast_to(g.ravel(), (n, g.size))
        else:
            grad[:, sl] = g.reshape(n, -1)
    return grad
