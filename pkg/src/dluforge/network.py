"""Core data model: activations, layers, fully connected networks.

Conventions used throughout the package:

* depth  = number of hidden (activated) layers; the output layer is a bare
  affine map and does not count towards depth,
* width  = maximum hidden-layer dimension (0 for affine-only networks),
* number of weights = count of entries that are not exactly 0.0 across all
  weight matrices and bias vectors, output layer included.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ParameterError(ValueError):
    """A constructor or operation received an invalid parameter."""


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class ShapeError(ValueError):
    """Vector/matrix dimensions do not chain."""


class ParseError(ValueError):
    """A serialized document is malformed; the message carries a location."""


class ConstructionError(RuntimeError):
    """A network construction could not be completed."""


class UnsupportedNetworkError(ValueError):
    """The network uses features an analysis routine cannot handle."""


_ACTIVATION_TAGS = ("dlu", "relu", "identity", "leaky_relu", "elu")


@dataclass(frozen=True)
class ActivationKind:
    """Componentwise activation. DLU is x for x >= 0 and x/(1-x) for x < 0."""

    tag: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.tag not in _ACTIVATION_TAGS:
            raise ParameterError(f"unknown activation tag {self.tag!r}")
        if self.tag in ("leaky_relu", "elu"):
            if self.param is None or not math.isfinite(self.param):
                raise ParameterError(f"{self.tag} requires a finite parameter")
        elif self.param is not None:
            raise ParameterError(f"{self.tag} takes no parameter")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Vectorized activation; branch-free so no spurious warnings."""
        x = np.asarray(x, dtype=np.float64)
        if self.tag == "identity":
            return x
        pos = np.maximum(x, 0.0)
        neg = np.minimum(x, 0.0)
        if self.tag == "dlu":
            return pos + neg / (1.0 - neg)
        if self.tag == "relu":
            return pos
        if self.tag == "leaky_relu":
            return pos + self.param * neg
        # elu
        return pos + self.param * np.expm1(neg)


DLU = ActivationKind("dlu")
RELU = ActivationKind("relu")
IDENTITY = ActivationKind("identity")


def leaky_relu(slope: float) -> ActivationKind:
    return ActivationKind("leaky_relu", float(slope))


def elu(alpha: float) -> ActivationKind:
    return ActivationKind("elu", float(alpha))


def activate(kind: ActivationKind, x: float) -> float:
    """Scalar activation with domain validation."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"activation input must be finite, got {x!r}")
    return float(kind.apply(np.float64(x)))


@dataclass(frozen=True)
class Layer:
    """One affine map plus activation. weights has shape (out_dim, in_dim)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: ActivationKind

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        b = np.array(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeError(
                f"bias shape {b.shape} does not match weight rows {w.shape[0]}"
            )
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def nonzero_weights(self) -> int:
        return int(np.count_nonzero(self.weights) + np.count_nonzero(self.bias))


@dataclass(frozen=True)
class Network:
    """Immutable fully connected network: hidden layers plus affine output."""

    input_dim: int
    hidden_layers: tuple
    output_layer: Layer

    def __post_init__(self):
        if self.input_dim < 1:
            raise ParameterError("input_dim must be >= 1")
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        if self.output_layer.activation.tag != "identity":
            raise ParameterError("output layer must be affine (identity activation)")
        prev = self.input_dim
        for i, layer in enumerate(self.hidden_layers):
            if layer.in_dim != prev:
                raise ShapeError(
                    f"layer {i} expects {layer.in_dim} inputs, previous width is {prev}"
                )
            prev = layer.out_dim
        if self.output_layer.in_dim != prev:
            raise ShapeError(
                f"output layer expects {self.output_layer.in_dim} inputs, "
                f"previous width is {prev}"
            )

    @property
    def output_dim(self) -> int:
        return self.output_layer.out_dim

    @property
    def depth(self) -> int:
        return len(self.hidden_layers)

    @property
    def width(self) -> int:
        return max((l.out_dim for l in self.hidden_layers), default=0)

    @property
    def nonzero_weights(self) -> int:
        n = sum(l.nonzero_weights for l in self.hidden_layers)
        return n + self.output_layer.nonzero_weights

    def forward(self, x) -> np.ndarray:
        """Evaluate at a single point; x has shape (input_dim,)."""
        y = np.asarray(x, dtype=np.float64)
        if y.shape != (self.input_dim,):
            raise ShapeError(f"expected input of shape ({self.input_dim},), got {y.shape}")
        if not np.all(np.isfinite(y)):
            raise DomainError("network input must be finite")
        for layer in self.hidden_layers:
            y = layer.activation.apply(layer.weights @ y + layer.bias)
        return self.output_layer.weights @ y + self.output_layer.bias


def forward(net: Network, x) -> np.ndarray:
    return net.forward(x)


def evaluate(net: Network, points) -> np.ndarray:
    """Batched forward pass.

    points has shape (n, input_dim); returns shape (n,) for scalar-output
    networks and (n, output_dim) otherwise.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != net.input_dim:
        raise ShapeError(
            f"expected points of shape (n, {net.input_dim}), got {X.shape}"
        )
    Y = X
    for layer in net.hidden_layers:
        Y = layer.activation.apply(Y @ layer.weights.T + layer.bias)
    Y = Y @ net.output_layer.weights.T + net.output_layer.bias
    if Y.shape[1] == 1:
        return Y[:, 0]
    return Y


@dataclass(frozen=True)
class StructuralAudit:
    """Measured structure of a network against a claimed budget."""

    depth: int
    width: int
    nonzero_weights: int
    claimed_depth: int
    claimed_width: int
    claimed_weights: int

    @property
    def within_budget(self) -> bool:
        return (
            self.depth <= self.claimed_depth
            and self.width <= self.claimed_width
            and self.nonzero_weights <= self.claimed_weights
        )

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "width": self.width,
            "nonzero_weights": self.nonzero_weights,
            "claimed_depth": self.claimed_depth,
            "claimed_width": self.claimed_width,
            "claimed_weights": self.claimed_weights,
            "within_budget": self.within_budget,
        }


def audit(net: Network, claimed) -> StructuralAudit:
    """Count depth/width/nonzero weights and compare with (depth, width, weights)."""
    cd, cw, cn = (int(v) for v in claimed)
    return StructuralAudit(
        depth=net.depth,
        width=net.width,
        nonzero_weights=net.nonzero_weights,
        claimed_depth=cd,
        claimed_width=cw,
        claimed_weights=cn,
    )


# -- serialization -----------------------------------------------------------

def _layer_doc(layer: Layer) -> dict:
    params = {}
    if layer.activation.param is not None:
        key = "slope" if layer.activation.tag == "leaky_relu" else "alpha"
        params[key] = layer.activation.param
    return {
        "rows": layer.out_dim,
        "cols": layer.in_dim,
        "weights": [float(v) for v in layer.weights.ravel()],
        "bias": [float(v) for v in layer.bias],
        "activation": {"tag": layer.activation.tag, "params": params},
    }


def serialize(net: Network) -> str:
    """JSON document; floats round-trip bit-exactly (shortest repr)."""
    doc = {
        "input_dim": net.input_dim,
        "layers": [_layer_doc(l) for l in net.hidden_layers]
        + [_layer_doc(net.output_layer)],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _parse_layer(doc, where: str) -> Layer:
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object")
    for key in ("rows", "cols", "weights", "bias", "activation"):
        if key not in doc:
            raise ParseError(f"{where}: missing field {key!r}")
    rows, cols = doc["rows"], doc["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows >= 1 and cols >= 1):
        raise ParseError(f"{where}: rows/cols must be positive integers")
    w = doc["weights"]
    if len(w) != rows * cols:
        raise ParseError(f"{where}.weights: expected {rows * cols} values, got {len(w)}")
    b = doc["bias"]
    if len(b) != rows:
        raise ParseError(f"{where}.bias: expected {rows} values, got {len(b)}")
    act = doc["activation"]
    if not isinstance(act, dict) or "tag" not in act:
        raise ParseError(f"{where}.activation: expected an object with a tag")
    params = act.get("params", {})
    param = None
    if params:
        param = float(next(iter(params.values())))
    try:
        kind = ActivationKind(act["tag"], param)
    except ParameterError as exc:
        raise ParseError(f"{where}.activation: {exc}") from exc
    try:
        return Layer(
            np.array(w, dtype=np.float64).reshape(rows, cols),
            np.array(b, dtype=np.float64),
            kind,
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def deserialize(text: str) -> Network:
    """Parse a serialized network; the last layer is the affine output layer."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    if "input_dim" not in doc or "layers" not in doc:
        raise ParseError("top level: missing input_dim or layers")
    layers = doc["layers"]
    if not isinstance(layers, list) or not layers:
        raise ParseError("layers: expected a non-empty list")
    parsed = [_parse_layer(l, f"layers[{i}]") for i, l in enumerate(layers)]
    out = parsed[-1]
    if out.activation.tag != "identity":
        raise ParseError("layers[-1]: output layer must have identity activation")
    try:
        return Network(int(doc["input_dim"]), tuple(parsed[:-1]), out)
    except (ParameterError, ShapeError) as exc:
        raise ParseError(str(exc)) from exc


def save(net: Network, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(net))


def load(path) -> Network:
    with open(path) as fh:
        return deserialize(fh.read())
