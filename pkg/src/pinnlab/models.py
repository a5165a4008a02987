"""Scalar-field network models: flat parameter storage and jet forward passes.

Two architectures: a plain tanh MLP and its first-layer-sine variant. Both
map (x, t) to a single output. Parameters live in one flat float64 vector
with a per-layer layout, so optimizers and the gradient buffer never deal
with shapes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import GraphError
from .jets import Jet2, jet_affine, jet_compose, jet_input
from .tape import Tape


@dataclass(frozen=True)
class FlatParams:
    """Flat parameter vector plus the (W, b) layout per layer."""

    values: np.ndarray
    widths: tuple

    @property
    def n_params(self):
        return self.values.size

    def layer_slices(self, i):
        """(weight slice, bias slice) of layer i within the flat vector."""
        off = 0
        for k in range(i):
            off += self.widths[k] * self.widths[k + 1] + self.widths[k + 1]
        w_len = self.widths[i] * self.widths[i + 1]
        return (
            slice(off, off + w_len),
            slice(off + w_len, off + w_len + self.widths[i + 1]),
        )

    def layer_arrays(self, i):
        ws, bs = self.layer_slices(i)
        fi, fo = self.widths[i], self.widths[i + 1]
        return self.values[ws].reshape(fi, fo), self.values[bs]

    @property
    def n_layers(self):
        return len(self.widths) - 1

    def replace_values(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise GraphError("parameter vector length mismatch")
        return FlatParams(values, self.widths)

    def to_json(self) -> str:
        return json.dumps(
            {"widths": list(self.widths), "values": self.values.tolist()}
        )

    @staticmethod
    def from_json(text: str) -> "FlatParams":
        data = json.loads(text)
        return FlatParams(
            np.asarray(data["values"], dtype=np.float64), tuple(data["widths"])
        )


def param_count(widths):
    return sum(widths[i] * widths[i + 1] + widths[i + 1] for i in range(len(widths) - 1))


def init_params(config: ModelConfig, seed=None) -> FlatParams:
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    if seed is None:
        seed = config.init_seed if config.init_seed is not None else 0
    rng = np.random.default_rng(seed)
    widths = tuple(config.layer_widths)
    values = np.zeros(param_count(widths))
    params = FlatParams(values, widths)
    for i in range(params.n_layers):
        fi, fo = widths[i], widths[i + 1]
        bound = np.sqrt(6.0 / (fi + fo))
        ws, _ = params.layer_slices(i)
        values[ws] = rng.uniform(-bound, bound, size=fi * fo)
    values.flags.writeable = False
    return params


def _activation(config: ModelConfig, layer_index: int) -> str:
    if config.arch == "fls" and layer_index == 0:
        return "sin"
    return "tanh"


def forward_values(config: ModelConfig, params: FlatParams, x) -> np.ndarray:
    """Plain numpy forward pass, no tape; returns shape (n,)."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if h.shape[1] != params.widths[0]:
        raise GraphError(
            f"input has {h.shape[1]} coordinates, model expects {params.widths[0]}"
        )
    for i in range(params.n_layers):
        w, b = params.layer_arrays(i)
        h = h @ w + b
        if i < params.n_layers - 1:
            h = np.sin(h) if _activation(config, i) == "sin" else np.tanh(h)
    return h[:, 0]


def register_params(tape: Tape, params: FlatParams):
    """Put every layer's W and b on the tape as parameter leaves.

    Must be called exactly once per tape; returns per-layer node id pairs.
    """
    handles = []
    for i in range(params.n_layers):
        w, b = params.layer_arrays(i)
        handles.append((tape.param(w), tape.param(b)))
    return handles


def forward_jet(config: ModelConfig, params, x, tape: Tape, order=2, dims=None) -> Jet2:
    """Network output as a jet at the points ``x`` (shape (n, d+1)).

    ``params`` is either a FlatParams (leaves get registered on the tape) or
    the handle list from a previous :func:`register_params` call on the same
    tape. ``order`` caps derivative propagation: 0 value only, 1 adds the
    input gradient, 2 (default) adds the full second-derivative triangle.

    ``dims`` restricts order-1 propagation to the listed input coordinates;
    the skipped grad entries come back as None (implicit zero), so only pass
    it when downstream consumers never read them. Ignored at order 2, where
    the Hessian chain needs every first-order channel.
    """
    if isinstance(params, FlatParams):
        handles = register_params(tape, params)
    else:
        handles = params
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    dim = tape.nodes[handles[0][0]].value.shape[0]
    if x.shape[1] != dim:
        raise GraphError(f"input has {x.shape[1]} coordinates, model expects {dim}")
    jet = jet_input(tape, x, dim)
    if order == 1 and dims is not None:
        keep = set(dims)
        jet = Jet2(
            jet.dim,
            jet.value,
            tuple(g if j in keep else None for j, g in enumerate(jet.grad)),
            jet.hess,
        )
    n_layers = len(handles)
    for i, (w, b) in enumerate(handles):
        jet = jet_affine(jet, w, b, tape, order=order)
        if i < n_layers - 1:
            jet = jet_compose(_activation(config, i), [jet], tape, order=order)
    return jet
