"""Exact algebraic gadgets built from the DLU activation.

The negative branch x/(1-x) is a Moebius map, which lets small fixed networks
realize squares, products, reciprocals and divisions exactly on bounded
domains.  Every constructor returns an immutable Network; behavior outside the
stated domain is defined (the net still evaluates) but not exact.
"""

from __future__ import annotations

import numpy as np

from .network import DLU, Network, ParameterError
from .wiring import Affine, NetBuilder

# claimed (depth, width, nonzero weights) budgets for the structural audits
SQUARE_CLAIM = (2, 3, 13)
PRODUCT_CLAIM = (2, 9, 45)
RECIPROCAL_CLAIM = (1, 1, 4)
DIVISION_CLAIM = (3, 9, 51)
IDENTITY_CLAIM = (2, 1, 5)


def _square_pre_a(t: Affine) -> list[Affine]:
    # branches of 12 rho(1 - 12 rho(-t-1) + 12 rho(-t-2)) + 11 rho((11 - 5 rho(t+1))/11)
    return [-t - 1.0, -t - 2.0, t + 1.0]


def _square_pre_b(u: list[Affine]) -> list[Affine]:
    u1, u2, u3 = u
    return [1.0 - 12.0 * u1 + 12.0 * u2, (11.0 - 5.0 * u3) / 11.0]


def _square_value(v: list[Affine]) -> Affine:
    v1, v2 = v
    return 12.0 * v1 + 11.0 * v2


def _product_pre_a(x: Affine, y: Affine, M: float) -> list[Affine]:
    pres = []
    for t in ((x + y) / (2.0 * M), x / (2.0 * M), y / (2.0 * M)):
        pres.extend(_square_pre_a(t))
    return pres


def _product_pre_b(u: list[Affine]) -> list[Affine]:
    pres = []
    for i in range(3):
        pres.extend(_square_pre_b(u[3 * i:3 * i + 3]))
    return pres


def _product_value(v: list[Affine], M: float) -> Affine:
    s = _square_value(v[0:2]) - _square_value(v[2:4]) - _square_value(v[4:6])
    return 2.0 * M * M * s


def square_gate() -> Network:
    """x^2 exactly for x in [-1, 1]; depth 2, width 3, 13 weights."""
    b = NetBuilder(1)
    (x,) = b.inputs()
    u = b.add_layer(DLU, _square_pre_a(x))
    v = b.add_layer(DLU, _square_pre_b(u))
    return b.finish([_square_value(v)])


def product_gate(M: float) -> Network:
    """x*y exactly for x, y in [-M, M]; depth 2, width 9, <= 45 weights."""
    M = float(M)
    if M <= 0:
        raise ParameterError("product gate needs M > 0")
    b = NetBuilder(2)
    x, y = b.inputs()
    u = b.add_layer(DLU, _product_pre_a(x, y, M))
    v = b.add_layer(DLU, _product_pre_b(u))
    return b.finish([_product_value(v, M)])


def reciprocal_gate(a: float) -> Network:
    """1/x exactly for x >= a > 0; depth 1, width 1, 4 weights."""
    a = float(a)
    if a <= 0:
        raise ParameterError("reciprocal gate needs a > 0")
    b = NetBuilder(1)
    (x,) = b.inputs()
    (u,) = b.add_layer(DLU, [1.0 - x / a])
    return b.finish([(u + 1.0) / a])


def division_gate(a: float, M: float) -> Network:
    """y/x exactly for x in [a, M], y in [-M, M]; depth 3, width 9, <= 51 weights."""
    a, M = float(a), float(M)
    if a <= 0 or a >= M:
        raise ParameterError("division gate needs 0 < a < M")
    b = NetBuilder(2)
    x, y = b.inputs()
    value = _emit_division(b, y, x, a, M)
    return b.finish([value])


def _emit_division(b: NetBuilder, y: Affine, x: Affine, a: float, M: float) -> Affine:
    """Reciprocal layer feeding a product gate; y rides layer 1 on a shift."""
    u, t = b.add_layer(DLU, [1.0 - x / a, y + (M + 1.0)])
    z = (u + 1.0) / a          # 1/x
    w = t - (M + 1.0)          # y back from the positive-branch carry
    Mp = max(M, 1.0 / a)
    uu = b.add_layer(DLU, _product_pre_a(z, w, Mp))
    vv = b.add_layer(DLU, _product_pre_b(uu))
    return _product_value(vv, Mp)


def identity_gadget(lower_bound: float) -> Network:
    """x carried through two activated layers, exact for x >= lower_bound - 1."""
    lb = float(lower_bound)
    shift = 1.0 - lb
    b = NetBuilder(1)
    (x,) = b.inputs()
    (u,) = b.add_layer(DLU, [x + shift])
    (v,) = b.add_layer(DLU, [u])
    return b.finish([v - shift])


def relu_surrogate(n: int, m: int = 1) -> Network:
    """Approximate max(x, 0) by an m-fold composition of rho(n x)/n.

    Equals x for x >= 0; equals x/(1 - m n x) for x < 0, so the sup error
    over the reals is 1/(m n).  m = 1 gives rho(n x)/n; n = 1 gives the pure
    m-fold DLU composition with weights in {0, 1}.
    """
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise ParameterError("relu surrogate needs n >= 1 and m >= 1")
    b = NetBuilder(1)
    (x,) = b.inputs()
    (h,) = b.add_layer(DLU, [float(n) * x])
    for _ in range(m - 1):
        (h,) = b.add_layer(DLU, [h * 1.0])
    return b.finish([h / float(n)])


def indicator_gadget(n: int) -> Network:
    """rho(n x) - rho(n x - 1): equals 1 exactly for x >= 1/n, tends to the
    step indicator of [0, inf) pointwise for x < 0 as n grows."""
    n = int(n)
    if n < 1:
        raise ParameterError("indicator gadget needs n >= 1")
    b = NetBuilder(1)
    (x,) = b.inputs()
    u1, u2 = b.add_layer(DLU, [float(n) * x, float(n) * x - 1.0])
    return b.finish([u1 - u2])
