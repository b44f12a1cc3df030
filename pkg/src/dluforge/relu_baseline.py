"""ReLU-side constructions and lower-bound certificates.

Contains the classical interpolation-based squaring and product networks, a
ReLU version of the polynomial recurrence pipeline, exact symbolic breakpoint
extraction for univariate ReLU networks, and piecewise-linear lower-bound
certificates for approximating convex functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .network import (RELU, Network, ParameterError, UnsupportedNetworkError)
from .wiring import NetBuilder, affine_network, chain, pad_depth, parallel_shared, prepend_affine, append_affine

YAROTSKY_SQUARE_CLAIM = lambda m: (m, 4, 10 * m)
YAROTSKY_PRODUCT_CLAIM = lambda m: (m + 1, 12, 30 * m + 17)


def yarotsky_square(m: int) -> Network:
    """Piecewise-linear interpolant of x^2 on 2^m + 1 uniform points of [0, 1].

    Sup error on [0, 1] is exactly 2^-(2m+2), attained at the cell midpoints.
    The tent-map iteration g(t) = 2 sigma(t) - 4 sigma(t - 1/2) stays in
    [0, 1], so the third classical sigma(t - 1) term is identically zero on
    the domain and is not emitted.
    """
    m = int(m)
    if m < 1:
        raise ParameterError("need m >= 1")
    b = NetBuilder(1)
    (x,) = b.inputs()
    a1, b1 = b.add_layer(RELU, [x * 1.0, x - 0.5])
    if m == 1:
        return b.finish([a1 / 2.0 + b1])
    a, bb = a1, b1
    u4 = None
    for s in range(2, m + 1):
        g = 2.0 * a - 4.0 * bb
        if s == 2:
            u4_pre = a / 2.0 + bb          # x - g_1/4
        else:
            u4_pre = u4 - g / (4.0 ** (s - 1))
        a, bb, u4 = b.add_layer(RELU, [g, g - 0.5, u4_pre])
    return b.finish([u4 - (2.0 * a - 4.0 * bb) / (4.0 ** m)])


def yarotsky_product(m: int, M: float) -> Network:
    """ReLU approximation of x*y on [-M, M]^2 with error <= 3 M^2 / 2^(2m+1)."""
    m = int(m)
    M = float(M)
    if m < 1 or M <= 0:
        raise ParameterError("need m >= 1 and M > 0")
    b = NetBuilder(2)
    x, y = b.inputs()
    units = b.add_layer(RELU, [x + y, -x - y, x * 1.0, -x, y * 1.0, -y])
    ts = [(units[0] + units[1]) / (2.0 * M),
          (units[2] + units[3]) / (2.0 * M),
          (units[4] + units[5]) / (2.0 * M)]
    blocks = []
    pres = []
    for t in ts:
        pres.extend([t * 1.0, t - 0.5])
    cur = b.add_layer(RELU, pres)
    state = [{"a": cur[2 * i], "b": cur[2 * i + 1], "u4": None} for i in range(3)]
    for s in range(2, m + 1):
        pres = []
        for st in state:
            g = 2.0 * st["a"] - 4.0 * st["b"]
            u4_pre = st["a"] / 2.0 + st["b"] if s == 2 else st["u4"] - g / (4.0 ** (s - 1))
            pres.extend([g, g - 0.5, u4_pre])
        cur = b.add_layer(RELU, pres)
        for i, st in enumerate(state):
            st["a"], st["b"], st["u4"] = cur[3 * i:3 * i + 3]
    outs = []
    for st in state:
        if m == 1:
            outs.append(st["a"] / 2.0 + st["b"])
        else:
            outs.append(st["u4"] - (2.0 * st["a"] - 4.0 * st["b"]) / (4.0 ** m))
    return b.finish([2.0 * M * M * (outs[0] - outs[1] - outs[2])])


# -- ReLU polynomial pipeline -------------------------------------------------

@dataclass(frozen=True)
class ReluPolyResult:
    network: Network
    theoretical_bound: float
    warning: Optional[str] = None


def relu_poly_claim(n: int, m: int) -> tuple:
    return (n * (m + 1), 18, n * (36 * m + 29))


def _relu_id(d: int, row, const: float, lower_bound: float, depth: int) -> Network:
    net = affine_network([row], [const], input_dim=d)
    return pad_depth(net, depth, [lower_bound], activation=RELU)


def relu_poly_approx(coefficients, m: int) -> ReluPolyResult:
    """Legendre-coefficient polynomial on [0, 1] realized with ReLU products.

    The recurrence pipeline of the exact compiler with every product gate
    replaced by the interpolation product; reports the headline error bound
    max|c| / 2^(2m - 2n + 3), with a warning when it is vacuous.
    """
    from .polynomials import LEGENDRE

    gamma = np.atleast_1d(np.asarray(coefficients, dtype=np.float64))
    if gamma.size == 0 or not np.all(np.isfinite(gamma)):
        raise ParameterError("coefficients must be non-empty and finite")
    m = int(m)
    if m < 1:
        raise ParameterError("need m >= 1")
    nz = np.nonzero(gamma)[0]
    n = int(nz[-1]) if nz.size else 0
    gamma = gamma[: n + 1]
    Mc = float(np.max(np.abs(gamma))) if gamma.size else 0.0
    exponent = 2 * m - 2 * n + 3
    bound = Mc / (2.0 ** exponent)
    warning = None
    if exponent <= 0 or bound >= Mc:
        warning = f"bound {bound:g} is vacuous: m = {m} is too small for degree {n}"
    if n <= 1:
        W = [[gamma[1] if n == 1 else 0.0]]
        return ReluPolyResult(affine_network(W, [gamma[0]]), 0.0, None)

    Mgate = 1.1
    gsum = float(np.sum(np.abs(gamma))) + 1.0
    prod = yarotsky_product(m, Mgate)
    depth = prod.depth
    state = affine_network([[1.0], [1.0], [0.0], [0.0]], [0.0, 0.0, 1.0, gamma[0]])
    for k in range(2, n + 1):
        a, bc, c = LEGENDRE.coefficients(k)
        # slots: (x, p_{k-1}, p_{k-2}, P_{k-2})
        sel_xp = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
        prod_k = prepend_affine(prod, sel_xp, [0.0, 0.0])
        rec = parallel_shared([
            prod_k,
            _relu_id(4, [0, 1.0, 0, 0], 0.0, -Mgate, depth),
            _relu_id(4, [0, 0, 1.0, 0], 0.0, -Mgate, depth),
        ])
        rec = append_affine(rec, [[a, bc, -c]], [0.0])
        stage = parallel_shared([
            _relu_id(4, [1.0, 0, 0, 0], 0.0, 0.0, depth),
            rec,
            _relu_id(4, [0, 1.0, 0, 0], 0.0, -Mgate, depth),
            _relu_id(4, [0, gamma[k - 1], 0, 1.0], 0.0, -gsum, depth),
        ])
        state = chain(stage, state)
    net = append_affine(state, [[0.0, gamma[n], 0.0, 1.0]], [0.0])
    return ReluPolyResult(net, bound, warning)


# -- exact breakpoint extraction ----------------------------------------------

class _PL:
    """Continuous piecewise-linear function on the whole line."""

    __slots__ = ("xs", "ys", "slope_lo", "slope_hi", "intercept")

    def __init__(self, xs, ys, slope_lo, slope_hi, intercept=0.0):
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        self.slope_lo = float(slope_lo)
        self.slope_hi = float(slope_hi)
        self.intercept = float(intercept)  # used only when xs is empty

    @classmethod
    def from_affine(cls, slope: float, intercept: float) -> "_PL":
        return cls([], [], slope, slope, intercept)

    def eval(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if self.xs.size == 0:
            return self.slope_lo * t + self.intercept
        out = np.interp(t, self.xs, self.ys)
        left = t < self.xs[0]
        right = t > self.xs[-1]
        out[left] = self.ys[0] + self.slope_lo * (t[left] - self.xs[0])
        out[right] = self.ys[-1] + self.slope_hi * (t[right] - self.xs[-1])
        return out

    def scale(self, c: float) -> "_PL":
        return _PL(self.xs, self.ys * c, self.slope_lo * c, self.slope_hi * c,
                   self.intercept * c)

    def add_const(self, c: float) -> "_PL":
        return _PL(self.xs, self.ys + c, self.slope_lo, self.slope_hi,
                   self.intercept + c)

    def add(self, other: "_PL") -> "_PL":
        if self.xs.size == 0 and other.xs.size == 0:
            return _PL.from_affine(self.slope_lo + other.slope_lo,
                                   self.intercept + other.intercept)
        xs = np.union1d(self.xs, other.xs)
        xs = _coalesce(xs)
        ys = self.eval(xs) + other.eval(xs)
        return _PL(xs, ys, self.slope_lo + other.slope_lo,
                   self.slope_hi + other.slope_hi)

    def relu(self) -> "_PL":
        if self.xs.size == 0:
            a, b = self.slope_lo, self.intercept
            if a == 0.0:
                return _PL.from_affine(0.0, max(b, 0.0))
            root = -b / a
            return _PL([root], [0.0], a if a < 0 else 0.0, a if a > 0 else 0.0)
        xs = list(self.xs)
        ys = list(self.ys)
        roots = []
        if self.slope_lo != 0.0 and ys[0] * self.slope_lo > 0.0:
            roots.append(xs[0] - ys[0] / self.slope_lo)
        for i in range(len(xs) - 1):
            if ys[i] * ys[i + 1] < 0.0:
                roots.append(xs[i] + ys[i] * (xs[i + 1] - xs[i]) / (ys[i] - ys[i + 1]))
        if self.slope_hi != 0.0 and ys[-1] * self.slope_hi < 0.0:
            roots.append(xs[-1] - ys[-1] / self.slope_hi)
        allx = _coalesce(np.union1d(np.asarray(xs), np.asarray(roots)))
        vals = np.maximum(self.eval(allx), 0.0)
        far_left_positive = self.slope_lo < 0.0
        far_right_positive = self.slope_hi > 0.0
        return _PL(allx, vals,
                   self.slope_lo if far_left_positive else 0.0,
                   self.slope_hi if far_right_positive else 0.0)


def _coalesce(xs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Merge breakpoints closer than tol (absolute)."""
    if xs.size <= 1:
        return xs
    keep = [xs[0]]
    for v in xs[1:]:
        if v - keep[-1] > tol:
            keep.append(v)
    return np.asarray(keep)


@dataclass(frozen=True)
class PiecewiseLinear1D:
    """Continuous piecewise-linear function restricted to [0, 1].

    breakpoints lie strictly inside (0, 1); segment_slopes has one entry per
    segment of the induced partition of [0, 1], and y0 anchors the value at 0.
    """

    breakpoints: np.ndarray
    segment_slopes: np.ndarray
    y0: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        sl = np.asarray(self.segment_slopes, dtype=np.float64)
        if bp.size and not np.all(np.diff(bp) > 0):
            raise ParameterError("breakpoints must be strictly increasing")
        if np.any(bp <= 0.0) or np.any(bp >= 1.0):
            raise ParameterError("breakpoints must lie strictly inside (0, 1)")
        if sl.size != bp.size + 1:
            raise ParameterError("need one slope per segment")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segment_slopes", sl)

    @property
    def count(self) -> int:
        return int(self.breakpoints.size)

    def knots(self) -> np.ndarray:
        return np.concatenate([[0.0], self.breakpoints, [1.0]])

    def knot_values(self) -> np.ndarray:
        edges = self.knots()
        vals = [self.y0]
        for i, s in enumerate(self.segment_slopes):
            vals.append(vals[-1] + s * (edges[i + 1] - edges[i]))
        return np.asarray(vals)

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return np.interp(t, self.knots(), self.knot_values())


def extract_breakpoints(net: Network, kink_tolerance: float = 1e-13) -> PiecewiseLinear1D:
    """Exact symbolic piecewise-linear form of a univariate ReLU network.

    Propagates breakpoint lists through every layer; each ReLU inserts its
    zero crossings.  Zero-weight connections contribute nothing, and final
    breakpoints whose slope change is below kink_tolerance (relative) are
    dropped as floating-point noise.
    """
    if net.input_dim != 1:
        raise UnsupportedNetworkError("breakpoint extraction needs input_dim = 1")
    for layer in list(net.hidden_layers):
        if layer.activation.tag not in ("relu", "identity"):
            raise UnsupportedNetworkError(
                f"unsupported activation {layer.activation.tag!r}"
            )
    pls = [_PL.from_affine(1.0, 0.0)]
    for layer in net.hidden_layers:
        new = []
        for i in range(layer.out_dim):
            acc = _PL.from_affine(0.0, float(layer.bias[i]))
            for j in range(layer.in_dim):
                w = float(layer.weights[i, j])
                if w != 0.0:
                    acc = acc.add(pls[j].scale(w))
            if layer.activation.tag == "relu":
                acc = acc.relu()
            new.append(acc)
        pls = new
    out = net.output_layer
    if out.out_dim != 1:
        raise UnsupportedNetworkError("breakpoint extraction needs scalar output")
    acc = _PL.from_affine(0.0, float(out.bias[0]))
    for j in range(out.in_dim):
        w = float(out.weights[0, j])
        if w != 0.0:
            acc = acc.add(pls[j].scale(w))
    return _to_unit_interval(acc, kink_tolerance)


def _to_unit_interval(pl: _PL, kink_tolerance: float) -> PiecewiseLinear1D:
    inner = [float(v) for v in pl.xs if 1e-12 < v < 1.0 - 1e-12]
    edges = np.array([0.0] + inner + [1.0])
    vals = pl.eval(edges)
    slopes = np.diff(vals) / np.diff(edges)
    keep = []
    for i in range(len(inner)):
        ds = abs(slopes[i + 1] - slopes[i])
        scale = max(1.0, abs(slopes[i + 1]), abs(slopes[i]))
        if ds > kink_tolerance * scale:
            keep.append(i)
    bp = np.array([inner[i] for i in keep])
    edges = np.concatenate([[0.0], bp, [1.0]])
    vals = pl.eval(edges)
    slopes = np.diff(vals) / np.diff(edges)
    return PiecewiseLinear1D(bp, slopes, float(vals[0]))


def breakpoint_budget(hidden_widths) -> int:
    """Layer-by-layer kink budget: d1 * prod over later layers of 3 d_i.

    One hidden layer of width d yields at most d kinks; each further layer of
    width d multiplies the budget by 3d.  This is the tight form of the
    3^(L-1) prod d_i counting argument.
    """
    widths = [int(w) for w in hidden_widths]
    if not widths:
        return 0
    budget = widths[0]
    for w in widths[1:]:
        budget *= 3 * w
    return budget


def sup_error_vs_square(pl: PiecewiseLinear1D) -> float:
    """Exact sup of |t^2 - pl(t)| over [0, 1] via per-segment vertex analysis."""
    edges = pl.knots()
    vals = pl.knot_values()
    best = 0.0
    for i in range(len(edges) - 1):
        u, v = edges[i], edges[i + 1]
        a = pl.segment_slopes[i]
        c = vals[i] - a * u
        cands = [u, v]
        vertex = a / 2.0
        if u < vertex < v:
            cands.append(vertex)
        for t in cands:
            best = max(best, abs(t * t - (a * t + c)))
    return best


# -- lower-bound certificates --------------------------------------------------

@dataclass(frozen=True)
class LowerBoundCertificate:
    value: float
    breakpoint_budget: int
    method: str
    overflow: bool = False
    uniform_partition_only: bool = False


def lower_bound_certificate(L: int, W: int, k: Optional[int] = None,
                            f: Optional[Callable] = None,
                            grid: int = 64) -> LowerBoundCertificate:
    """Certified approximation floor for depth-L width-W ReLU networks on [0, 1].

    Such a network is piecewise linear with at most m = 3^L W^L breakpoints.
    For f(x) = x^k the floor is (1/2 - 2^-k) (m+1)^-k with the uniform
    partition optimal; for a generic convex evaluator the secant-tangent gap
    is maximized over a uniform partition only, and the result is flagged
    accordingly.
    """
    L, W = int(L), int(W)
    if L < 1 or W < 1:
        raise ParameterError("need L >= 1 and W >= 1")
    m = (3 ** L) * (W ** L)
    if k is not None:
        k = int(k)
        if k < 2:
            raise ParameterError("closed form needs k >= 2")
        if k * math.log2(m + 1) > 1000.0:
            return LowerBoundCertificate(0.0, m, "closed-form-x^k", overflow=True)
        value = (0.5 - 2.0 ** (-k)) * float(m + 1) ** (-k)
        return LowerBoundCertificate(value, m, "closed-form-x^k", overflow=value == 0.0)
    if f is None:
        raise ParameterError("provide k for x^k or a convex evaluator f")
    if m + 1 > 10 ** 6:
        return LowerBoundCertificate(0.0, m, "uniform-secant-gap", overflow=True,
                                     uniform_partition_only=True)
    edges = np.linspace(0.0, 1.0, m + 2)
    best = 0.0
    for i in range(m + 1):
        u, v = edges[i], edges[i + 1]
        ts = np.linspace(u, v, grid)
        fu, fv = float(f(np.array([u]))[0]), float(f(np.array([v]))[0])
        secant = fu + (fv - fu) * (ts - u) / (v - u)
        gap = np.max(secant - f(ts))
        best = max(best, float(gap) / 2.0)
    return LowerBoundCertificate(best, m, "uniform-secant-gap",
                                 uniform_partition_only=True)
