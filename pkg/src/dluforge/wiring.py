"""Layer-by-layer network assembly and structural composition helpers.

`NetBuilder` constructs a network one layer at a time while tracking affine
expressions over the current top layer, which keeps explicit weight packing
(and therefore the structural audits) under full control.  The free functions
below combine finished networks when packing does not matter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DLU, IDENTITY, ActivationKind, Layer, Network, ParameterError


@dataclass
class Affine:
    """coeffs . units + const over one specific layer of one builder."""

    builder: "NetBuilder"
    level: int
    coeffs: np.ndarray
    const: float

    def _check(self, other: "Affine"):
        if other.builder is not self.builder or other.level != self.level:
            raise ParameterError("affine expressions belong to different layers")

    def __add__(self, other):
        if isinstance(other, Affine):
            self._check(other)
            return Affine(self.builder, self.level, self.coeffs + other.coeffs,
                          self.const + other.const)
        return Affine(self.builder, self.level, self.coeffs.copy(), self.const + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, Affine) else -float(other))

    def __rsub__(self, other):
        return (self * -1.0) + float(other)

    def __mul__(self, scalar):
        return Affine(self.builder, self.level, self.coeffs * float(scalar),
                      self.const * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __neg__(self):
        return self * -1.0


class NetBuilder:
    """Builds a Network layer by layer from affine expressions."""

    def __init__(self, input_dim: int):
        self.input_dim = int(input_dim)
        self.level = 0
        self.top_width = self.input_dim
        self._layers: list[Layer] = []

    def inputs(self) -> list[Affine]:
        if self.level != 0:
            raise ParameterError("inputs() is only valid before any layer is added")
        return [self.unit_ref(i) for i in range(self.input_dim)]

    def unit_ref(self, index: int) -> Affine:
        coeffs = np.zeros(self.top_width)
        coeffs[index] = 1.0
        return Affine(self, self.level, coeffs, 0.0)

    def constant(self, value: float) -> Affine:
        return Affine(self, self.level, np.zeros(self.top_width), float(value))

    def add_layer(self, activation: ActivationKind, pre_acts: list[Affine]) -> list[Affine]:
        """Append one activated layer whose pre-activations are the given affines."""
        if not pre_acts:
            raise ParameterError("a layer needs at least one unit")
        for a in pre_acts:
            if a.builder is not self or a.level != self.level:
                raise ParameterError("pre-activations must be affine over the current top layer")
        W = np.stack([a.coeffs for a in pre_acts])
        b = np.array([a.const for a in pre_acts])
        self._layers.append(Layer(W, b, activation))
        self.level += 1
        self.top_width = len(pre_acts)
        return [self.unit_ref(i) for i in range(self.top_width)]

    def finish(self, outputs: list[Affine]) -> Network:
        for a in outputs:
            if a.builder is not self or a.level != self.level:
                raise ParameterError("outputs must be affine over the current top layer")
        W = np.stack([a.coeffs for a in outputs])
        b = np.array([a.const for a in outputs])
        return Network(self.input_dim, tuple(self._layers), Layer(W, b, IDENTITY))


def affine_network(weights, bias, input_dim=None) -> Network:
    """A depth-0 network computing W x + b."""
    W = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    b = np.atleast_1d(np.asarray(bias, dtype=np.float64))
    if input_dim is not None and W.shape[1] != input_dim:
        raise ParameterError("weight columns do not match input_dim")
    return Network(W.shape[1], (), Layer(W, b, IDENTITY))


def prepend_affine(net: Network, A, c) -> Network:
    """Return net composed with the input map x -> A x + c."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    if A.shape[0] != net.input_dim:
        raise ParameterError("input map rows must match net.input_dim")
    if net.hidden_layers:
        first = net.hidden_layers[0]
        merged = Layer(first.weights @ A, first.weights @ c + first.bias, first.activation)
        return Network(A.shape[1], (merged,) + net.hidden_layers[1:], net.output_layer)
    out = net.output_layer
    merged = Layer(out.weights @ A, out.weights @ c + out.bias, IDENTITY)
    return Network(A.shape[1], (), merged)


def append_affine(net: Network, B, c) -> Network:
    """Return the network computing B net(x) + c."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    out = net.output_layer
    merged = Layer(B @ out.weights, B @ out.bias + c, IDENTITY)
    return Network(net.input_dim, net.hidden_layers, merged)


def chain(second: Network, first: Network) -> Network:
    """Function composition second(first(x)) with the boundary affines merged."""
    if first.output_dim != second.input_dim:
        raise ParameterError("output/input dimensions do not chain")
    inner = prepend_affine(second, first.output_layer.weights, first.output_layer.bias)
    if not first.hidden_layers:
        return inner
    return Network(first.input_dim, first.hidden_layers + inner.hidden_layers,
                   inner.output_layer)


def pad_depth(net: Network, depth: int, lower_bounds, activation=None) -> Network:
    """Append identity-gadget layers until the network has the given depth.

    lower_bounds: per-output lower bounds of the network's values on the
    domain of interest; the padding shifts by 1 - lb so every padded
    pre-activation stays on the activation's identity branch.  The padding
    activation defaults to the one already in use (DLU for affine nets).
    """
    extra = depth - net.depth
    if extra < 0:
        raise ParameterError("network is already deeper than the target depth")
    if extra == 0:
        return net
    k = net.output_dim
    lb = np.broadcast_to(np.asarray(lower_bounds, dtype=np.float64), (k,)).copy()
    shift = 1.0 - lb
    act = activation
    if act is None:
        act = DLU
        for layer in net.hidden_layers:
            act = layer.activation  # pad with the activation family already in use
    out = net.output_layer
    hidden = list(net.hidden_layers)
    hidden.append(Layer(out.weights, out.bias + shift, act))
    eye = np.eye(k)
    for _ in range(extra - 1):
        hidden.append(Layer(eye, np.zeros(k), act))
    return Network(net.input_dim, tuple(hidden), Layer(eye, -shift, IDENTITY))


def parallel_shared(nets: list[Network]) -> Network:
    """Stack equal-depth networks over one shared input; outputs concatenate."""
    if not nets:
        raise ParameterError("need at least one network")
    d = nets[0].input_dim
    depth = nets[0].depth
    for n in nets:
        if n.input_dim != d:
            raise ParameterError("all networks must share the input dimension")
        if n.depth != depth:
            raise ParameterError("pad networks to equal depth before stacking")
    if depth == 0:
        W = np.vstack([n.output_layer.weights for n in nets])
        b = np.concatenate([n.output_layer.bias for n in nets])
        return Network(d, (), Layer(W, b, IDENTITY))
    hidden = []
    for k in range(depth):
        blocks = [n.hidden_layers[k] for n in nets]
        tags = {bl.activation for bl in blocks}
        if len(tags) != 1:
            raise ParameterError("cannot merge layers with mixed activations")
        if k == 0:
            W = np.vstack([bl.weights for bl in blocks])
        else:
            sizes_in = [bl.in_dim for bl in blocks]
            W = np.zeros((sum(bl.out_dim for bl in blocks), sum(sizes_in)))
            r = c = 0
            for bl in blocks:
                W[r:r + bl.out_dim, c:c + bl.in_dim] = bl.weights
                r += bl.out_dim
                c += bl.in_dim
        b = np.concatenate([bl.bias for bl in blocks])
        hidden.append(Layer(W, b, blocks[0].activation))
    outs = [n.output_layer for n in nets]
    W = np.zeros((sum(o.out_dim for o in outs), sum(o.in_dim for o in outs)))
    r = c = 0
    for o in outs:
        W[r:r + o.out_dim, c:c + o.in_dim] = o.weights
        r += o.out_dim
        c += o.in_dim
    b = np.concatenate([o.bias for o in outs])
    return Network(d, tuple(hidden), Layer(W, b, IDENTITY))
