"""Theorem-level compilers: exp(-|x|), tensor expansions, Bernstein nets,
rank-one tensors and piecewise-smooth compositions.

All constructions reduce to the exact gates and the recurrence pipeline; the
approximation content lives in the mathematical objects they realize (smoothed
absolute values, truncated expansions, Bernstein polynomials, rational fits),
not in the network arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iter_product
from typing import Callable, Optional

import numpy as np

from .network import (DLU, ConstructionError, Network, ParameterError,
                      ShapeError, evaluate)
from .wiring import NetBuilder, affine_network, chain, pad_depth, parallel_shared, prepend_affine
from . import gates
from .polynomials import (BasisPolynomial, CHEBYSHEV, _ChebPipeline,
                          _emit_product_tree, _run_pipelines, compile_polynomial)


@dataclass(frozen=True)
class TargetFunction:
    """A reference function on an axis-aligned box.

    evaluator is vectorized: it maps an (n, dim) array to an (n,) array.
    """

    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    domain: tuple
    smoothness_hint: Optional[tuple] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(dom) != self.dim or any(lo >= hi for lo, hi in dom):
            raise ParameterError("domain must be dim intervals (lo, hi)")
        object.__setattr__(self, "domain", dom)

    def __call__(self, points) -> np.ndarray:
        X = np.asarray(points, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.dim:
            raise ShapeError(f"expected points of shape (n, {self.dim})")
        out = np.asarray(self.evaluator(X), dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise ConstructionError(f"target {self.name!r} returned non-finite values")
        return out


@dataclass(frozen=True)
class ExpansionSpec:
    """Truncation rule for tensor Chebyshev expansions.

    kind "cube" keeps indices with max norm <= N; kind "hyperbolic" keeps
    indices with prod max(1, n_j) <= N.
    """

    kind: str
    N: int

    def __post_init__(self):
        if self.kind not in ("cube", "hyperbolic"):
            raise ParameterError("truncation kind must be 'cube' or 'hyperbolic'")
        if self.N < 1:
            raise ParameterError("N must be >= 1")

    def indices(self, dim: int) -> list:
        if self.kind == "cube":
            return [tuple(n) for n in iter_product(range(self.N + 1), repeat=dim)]
        return hyperbolic_indices(dim, self.N)


def hyperbolic_indices(dim: int, N: int) -> list:
    """All n in Z_+^dim with prod max(1, n_j) <= N, enumerated exactly."""
    if dim < 1 or N < 1:
        raise ParameterError("need dim >= 1 and N >= 1")
    out = []

    def rec(prefix, budget):
        if len(prefix) == dim:
            out.append(tuple(prefix))
            return
        for nj in range(0, N + 1):
            if max(1, nj) > budget:
                break
            rec(prefix + [nj], budget // max(1, nj))

    rec([], N)
    return out


# -- exp(-|x|) ---------------------------------------------------------------

def exp_abs_claim(n: int, d: int) -> tuple:
    return (2 * n + 4, max(12, 2 * d), 122 * n + 4 * d + 51)


def exp_abs_bound(n: int) -> float:
    """Headline error target for the exp construction (depends on an optimal
    denominator that is not constructed here; reported, not asserted)."""
    return 3.0 ** (1 - n)


def smoothed_abs(x, lam: float) -> np.ndarray:
    """psi(x) = (rho(lam x) + rho(-lam x))/lam; 0 <= psi <= |x| <= psi + 1/lam."""
    x = np.asarray(x, dtype=np.float64)
    return (DLU.apply(lam * x) + DLU.apply(-lam * x)) / lam


def build_exp_abs(n: int, d: int = 1, domain_radius: float = 31.0) -> Network:
    """Approximate exp(-||x||_1) on R^d.

    Realizes 1/q(psi_d(x)) with psi_d the sum of smoothed absolute values at
    sharpness lam = 3^n d, and q the degree-n truncated exponential series
    (positive and increasing on [0, inf)).  The rational stage is exact while
    psi_d stays below d * domain_radius; error is measured on grids inside
    that box.
    """
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise ParameterError("need n >= 1 and d >= 1")
    lam = (3.0 ** n) * d
    T = float(domain_radius) * d
    qc = np.array([1.0 / math.factorial(k) for k in range(n + 1)])
    # q on [0, T] re-parameterized to s in [-1, 1]
    comp = np.polynomial.Polynomial(qc)(np.polynomial.Polynomial([T / 2.0, T / 2.0]))
    gamma = np.polynomial.chebyshev.poly2cheb(comp.coef)
    sgrid = np.linspace(-1.0, 1.0, 2001)
    qvals = CHEBYSHEV.evaluate(gamma, sgrid)
    if qvals.min() <= 0:
        raise ConstructionError("denominator is not positive on the working range")

    b = NetBuilder(d)
    xs = b.inputs()
    pres = []
    for x in xs:
        pres.extend([lam * x, -lam * x])
    units = b.add_layer(DLU, pres)
    psi = units[0] * 0.0
    for u in units:
        psi = psi + u
    psi = psi / lam
    s = (2.0 / T) * psi - 1.0
    if n == 1:
        q_aff = gamma[0] + gamma[1] * s
        level_units = None
    else:
        pipe = _ChebPipeline(gamma, CHEBYSHEV, s)
        _run_pipelines(b, [pipe])
        q_aff = pipe.final_affine()
    # reciprocal tail: q >= q(0) = 1 on [0, inf)
    (u,) = b.add_layer(DLU, [1.0 - q_aff])
    return b.finish([u + 1.0])


# -- tensor Chebyshev expansions --------------------------------------------

def expand(f: TargetFunction, spec: ExpansionSpec) -> dict:
    """Chebyshev tensor coefficients of f on [-1, 1]^d.

    Uses the cosine-substitution quadrature with 4N+1 Gauss-Chebyshev nodes
    per axis; indices above the truncation set are dropped.  Aliasing from
    coefficients beyond index 2N is assumed negligible for the smooth targets
    this is used on.
    """
    d = f.dim
    for lo, hi in f.domain:
        if abs(lo + 1.0) > 1e-12 or abs(hi - 1.0) > 1e-12:
            raise ParameterError("expansion requires the domain [-1, 1]^d")
    N = spec.N
    K = 4 * N + 1
    theta = (np.arange(K) + 0.5) * np.pi / K
    nodes = np.cos(theta)
    grids = np.meshgrid(*([nodes] * d), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    F = f(pts).reshape((K,) * d)
    fac = np.cos(np.outer(np.arange(N + 1), theta)) / K  # (N+1, K)
    T = F
    for _ in range(d):
        T = np.tensordot(T, fac.T, axes=([0], [0]))
    coeffs = {}
    for n_idx in spec.indices(d):
        scale = float(np.prod([2.0 if nj > 0 else 1.0 for nj in n_idx]))
        coeffs[n_idx] = float(T[n_idx]) * scale
    return coeffs


def compile_expansion(coeffs: dict, basis=CHEBYSHEV, domain: str = "[-1,1]") -> Network:
    """Exact realization of sum c_n prod T_{n_j}(x_j) on [-1, 1]^d.

    domain "[0,1]" prepends the affine rescale x -> 2x - 1.
    """
    if basis.name != "chebyshev":
        raise ParameterError("expansion compilation is defined for the Chebyshev basis")
    if not coeffs:
        raise ParameterError("empty coefficient map")
    d = len(next(iter(coeffs)))
    items = sorted(coeffs.items())
    if d == 1:
        degree = max(n[0] for n, _ in items)
        vec = np.zeros(degree + 1)
        for n, c in items:
            vec[n[0]] = c
        net = compile_polynomial(BasisPolynomial(CHEBYSHEV, vec))
        return _rescale_unit_box(net, domain)

    # networks for every univariate T_k(x_j) that some term needs
    needed = sorted({(j, nj) for n, _ in items for j, nj in enumerate(n) if nj >= 1})
    value_nets = []
    for j, k in needed:
        vec = np.zeros(k + 1)
        vec[k] = 1.0
        sub = compile_polynomial(BasisPolynomial(CHEBYSHEV, vec))
        sel = np.zeros((1, d))
        sel[0, j] = 1.0
        value_nets.append(prepend_affine(sub, sel, [0.0]))
    depth = max(net.depth for net in value_nets)
    value_nets = [pad_depth(net, depth, [-1.0]) for net in value_nets]
    values_block = parallel_shared(value_nets)
    slot = {jk: i for i, jk in enumerate(needed)}

    term_nets = []
    term_coeffs = []
    const = 0.0
    for n, c in items:
        active = [slot[(j, nj)] for j, nj in enumerate(n) if nj >= 1]
        if not active:
            const += c
            continue
        nb = NetBuilder(len(needed))
        ins = nb.inputs()
        vals = [ins[i] for i in active]
        out = _emit_product_tree(nb, vals, 1.0) if len(vals) > 1 else vals[0] * 1.0
        if len(vals) == 1:
            term_nets.append(affine_network(_one_hot(len(needed), active[0]), [0.0]))
        else:
            term_nets.append(nb.finish([out]))
        term_coeffs.append(c)
    if not term_nets:
        net = affine_network([[0.0] * d], [const])
        return _rescale_unit_box(net, domain)
    tdepth = max(net.depth for net in term_nets)
    term_nets = [pad_depth(net, tdepth, [-1.0]) for net in term_nets]
    terms_block = parallel_shared(term_nets)
    full = chain(terms_block, values_block)
    W = np.array([term_coeffs])
    out = Network(full.input_dim, full.hidden_layers,
                  _combine_output(full, W, const))
    return _rescale_unit_box(out, domain)


def _one_hot(n: int, i: int) -> np.ndarray:
    row = np.zeros((1, n))
    row[0, i] = 1.0
    return row


def _combine_output(net: Network, W, const: float):
    from .network import IDENTITY, Layer
    out = net.output_layer
    W = np.asarray(W, dtype=np.float64)
    return Layer(W @ out.weights, W @ out.bias + const, IDENTITY)


def _rescale_unit_box(net: Network, domain: str) -> Network:
    if domain == "[-1,1]":
        return net
    if domain != "[0,1]":
        raise ParameterError("domain must be '[-1,1]' or '[0,1]'")
    d = net.input_dim
    return prepend_affine(net, 2.0 * np.eye(d), -np.ones(d))


# -- rank-one tensors --------------------------------------------------------

@dataclass(frozen=True)
class RationalFit:
    """Chebyshev-basis numerator/denominator fitted to a univariate target."""

    p: np.ndarray
    q: np.ndarray
    sup_error: float
    degree: int


def fit_rational(evaluator: Callable[[np.ndarray], np.ndarray], degree: int,
                 root_tolerance: float = 1e-6) -> RationalFit:
    """Least-squares rational fit of type (n, n) on [-1, 1].

    Linearized objective f*q - p on Chebyshev nodes with q(0) normalized to 1,
    re-weighted twice by the current denominator; denominator positivity is
    required, with one retry at a reduced degree before failing.
    """
    for n in (int(degree), int(degree) - 1):
        if n < 0:
            break
        K = max(16 * (n + 1), 128)
        nodes = np.cos((np.arange(K) + 0.5) * np.pi / K)
        fv = np.asarray(evaluator(nodes), dtype=np.float64)
        V = np.polynomial.chebyshev.chebvander(nodes, max(n, 1))
        weights = np.ones(K)
        sol = None
        for _ in range(3):
            A = np.hstack([V[:, : n + 1], -fv[:, None] * V[:, 1: n + 1]])
            rhs = fv
            Aw = A * weights[:, None]
            sol, *_ = np.linalg.lstsq(Aw, rhs * weights, rcond=None)
            qv = 1.0 + V[:, 1: n + 1] @ sol[n + 1:]
            if np.min(np.abs(qv)) < 1e-12:
                break
            weights = 1.0 / np.abs(qv)
        p = sol[: n + 1]
        q = np.concatenate([[1.0], sol[n + 1:]])
        fine = np.linspace(-1.0, 1.0, 2001)
        qv = np.polynomial.chebyshev.chebval(fine, q)
        if np.min(qv) <= root_tolerance:
            continue  # poles on the interval: retry once at lower degree
        rv = np.polynomial.chebyshev.chebval(fine, p) / qv
        err = float(np.max(np.abs(rv - evaluator(fine))))
        return RationalFit(p, q, err, n)
    raise ConstructionError(
        "rational fit has poles on the interval even after degree reduction"
    )


@dataclass(frozen=True)
class RankOneResult:
    network: Network
    factor_errors: tuple
    error_bound: float


def build_rank_one_tensor(factors, n: int,
                          fit=fit_rational) -> RankOneResult:
    """Product of univariate factors on [0, 1]^d via per-factor rational fits.

    Each factor (sup norm <= 1 on [0, 1]) is approximated by a type-(n, n)
    rational function from the pluggable fit provider, compiled exactly, and
    the factors are joined by a product-gate tree.  The returned error_bound
    telescopes the per-factor fit errors.
    """
    factors = list(factors)
    if not factors:
        raise ParameterError("need at least one factor")
    d = len(factors)
    for f in factors:
        if f.dim != 1:
            raise ParameterError("factors must be univariate")
    fits = []
    for f in factors:
        def on_unit(s, _f=f):
            return _f(((np.asarray(s) + 1.0) / 2.0)[:, None])
        fits.append(fit(on_unit, n))
    sub_nets = []
    sups = []
    for j, rf in enumerate(fits):
        from .polynomials import compile_rational
        sub = compile_rational(BasisPolynomial(CHEBYSHEV, rf.p),
                               BasisPolynomial(CHEBYSHEV, rf.q))
        sel = np.zeros((1, d))
        sel[0, j] = 2.0
        sub_nets.append(prepend_affine(sub, sel, [-1.0]))
        fine = np.linspace(-1.0, 1.0, 2001)
        sups.append(float(np.max(np.abs(
            np.polynomial.chebyshev.chebval(fine, rf.p)
            / np.polynomial.chebyshev.chebval(fine, rf.q)))))
    depth = max(net.depth for net in sub_nets)
    lows = [-s for s in sups]
    sub_nets = [pad_depth(net, depth, [lows[i]]) for i, net in enumerate(sub_nets)]
    block = parallel_shared(sub_nets)
    M = max(1.0, *sups) * 1.05
    if d == 1:
        net = block
    else:
        nb = NetBuilder(d)
        out = _emit_product_tree(nb, nb.inputs(), M)
        tree = nb.finish([out])
        net = chain(tree, block)
    errs = tuple(rf.sup_error for rf in fits)
    bound = 0.0
    for i in range(d):
        term = errs[i]
        for kk in range(i + 1, d):
            term *= 1.0 + errs[kk]
        bound += term
    return RankOneResult(net, errs, float(bound))


# -- Bernstein realization ---------------------------------------------------

def bernstein_claim(s: int, d: int) -> tuple:
    depth = int(np.ceil(2 * np.log2(s + 2))) + 4 * (int(np.ceil(np.log2(d))) if d > 1 else 0) + 1
    width = 10 * d * (s + 1) ** d
    weights = int(np.ceil(126.0 * d * (s + 1) ** d * np.log2(s + 2)))
    return (depth, width, weights)


def build_bernstein(f: TargetFunction, s: int) -> Network:
    """Exact realization of the degree-s Bernstein polynomial of f on [0, 1]^d.

    Basis values C(s,k) x^k (1-x)^{s-k} come from two-variable monomial gates
    on (x_i, 1 - x_i); multi-index terms are joined by product trees and the
    lattice values f(k/s) enter only in the output combination.
    """
    s = int(s)
    if s < 1:
        raise ParameterError("need s >= 1")
    d = f.dim
    for lo, hi in f.domain:
        if abs(lo) > 1e-12 or abs(hi - 1.0) > 1e-12:
            raise ParameterError("Bernstein realization requires the domain [0, 1]^d")
    from .polynomials import compile_monomial

    # per-axis basis nets b_k(x_i) = x_i^k (1 - x_i)^{s-k} (binomial folded later)
    value_nets = []
    for j in range(d):
        sel = np.zeros((2, d))
        sel[0, j] = 1.0
        sel[1, j] = -1.0
        for k in range(s + 1):
            mono = compile_monomial((k, s - k))
            value_nets.append(prepend_affine(mono, sel, [0.0, 1.0]))
    depth = max(net.depth for net in value_nets)
    value_nets = [pad_depth(net, depth, [0.0]) for net in value_nets]
    block = parallel_shared(value_nets)

    lattice = np.array(list(iter_product(range(s + 1), repeat=d)), dtype=np.float64)
    fvals = f(lattice / s)
    binom = np.array([math.comb(s, k) for k in range(s + 1)], dtype=np.float64)
    if d == 1:
        W = (fvals * binom)[None, :]
        return Network(block.input_dim, block.hidden_layers,
                       _combine_output(block, W, 0.0))
    term_nets = []
    weights = []
    for idx, kvec in enumerate(lattice.astype(int)):
        nb = NetBuilder((s + 1) * d)
        ins = nb.inputs()
        vals = [ins[j * (s + 1) + kvec[j]] for j in range(d)]
        out = _emit_product_tree(nb, vals, 1.0)
        term_nets.append(nb.finish([out]))
        weights.append(fvals[idx] * float(np.prod(binom[kvec])))
    tdepth = max(net.depth for net in term_nets)
    term_nets = [pad_depth(net, tdepth, [0.0]) for net in term_nets]
    terms = parallel_shared(term_nets)
    full = chain(terms, block)
    W = np.array([weights])
    return Network(full.input_dim, full.hidden_layers, _combine_output(full, W, 0.0))


def modulus_of_continuity(f: TargetFunction, t: float, points: int = 10_000) -> float:
    """Grid estimate of sup |f(x) - f(y)| over |x - y| <= t (univariate)."""
    if f.dim != 1:
        raise ParameterError("modulus helper is univariate")
    lo, hi = f.domain[0]
    xs = np.linspace(lo, hi, points)
    fv = f(xs[:, None])
    h = (hi - lo) / (points - 1)
    max_shift = int(np.floor(t / h + 1e-9))
    best = 0.0
    for shift in range(1, max_shift + 1):
        best = max(best, float(np.max(np.abs(fv[shift:] - fv[:-shift]))))
    return best


def bernstein_error_bound(f: TargetFunction, s: int) -> float:
    """(5/4) sum_i w_f^i(1/s): the headline modulus bound for build_bernstein."""
    if f.dim != 1:
        raise ParameterError("bound helper currently univariate")
    return 1.25 * modulus_of_continuity(f, 1.0 / s)


# -- piecewise composition ---------------------------------------------------

@dataclass(frozen=True)
class PiecewiseResult:
    network: Network
    smooth_errors: dict
    transition_halfwidth: float
    product_bound: float


def _as_network(component, d: int, default_s: int = 16) -> tuple:
    if isinstance(component, Network):
        return component, 0.0
    if isinstance(component, TargetFunction):
        net = build_bernstein(component, default_s)
        pts = np.random.default_rng(0).uniform(0.0, 1.0, (2048, d))
        err = float(np.max(np.abs(evaluate(net, pts) - component(pts))))
        return net, err
    raise ParameterError("components must be Networks or TargetFunctions")


def build_piecewise(f1, f2, h, p, n: int, bound: Optional[float] = None,
                    surrogate_sharpness: Optional[int] = None) -> PiecewiseResult:
    """Approximate f1 + f2 * indicator{h <= p} on [0, 1]^d.

    The indicator gadget rho(n t) - rho(n t - 1) is applied to t = p - h
    directly: the gadget equals 1 exactly where p - h >= 1/n and decays like
    1/(n(h-p))^2 outside, so the composite converges to the target as n grows.
    Passing surrogate_sharpness additionally routes t through rho(m t)/m
    first; note the surrogate clamps the indicator argument to (-1/m, inf),
    which freezes the outside decay once n(h-p) is large, so it is off by
    default.
    """
    n = int(n)
    if n < 1:
        raise ParameterError("need sharpness n >= 1")
    comps = [f1, f2, h, p]
    dims = {c.input_dim if isinstance(c, Network) else c.dim for c in comps}
    if len(dims) != 1:
        raise ParameterError("components must share one input dimension")
    d = dims.pop()
    nets = []
    errs = {}
    for label, comp in zip(("f1", "f2", "h", "p"), comps):
        net, err = _as_network(comp, d)
        if net.output_dim != 1:
            raise ParameterError(f"component {label} must have scalar output")
        nets.append(net)
        errs[label] = err
    depth = max(net.depth for net in nets)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.0, 1.0, (512, d))
    padded = []
    for net in nets:
        vals = evaluate(net, pts)
        lb = float(vals.min()) - max(1.0, float(vals.max() - vals.min()))
        padded.append(pad_depth(net, depth, [lb]))
    block = parallel_shared(padded)
    f2_vals = evaluate(nets[1], pts)
    M = bound if bound is not None else max(1.0, float(np.max(np.abs(f2_vals))) * 1.05)
    if M < 1.0:
        raise ParameterError("product bound must be >= 1")

    b = NetBuilder(4)
    v_f1, v_f2, v_h, v_p = b.inputs()
    t = v_p - v_h
    if surrogate_sharpness is not None:
        m = int(surrogate_sharpness)
        shift_f1, shift_f2 = 2.0 * M + 1.0, 2.0 * M + 1.0
        u = b.add_layer(DLU, [m * t, v_f1 + shift_f1, v_f2 + shift_f2])
        t = u[0] / m
        v_f1 = u[1] - shift_f1
        v_f2 = u[2] - shift_f2
    shift = 2.0 * M + 1.0
    u = b.add_layer(DLU, [n * t, n * t - 1.0, v_f1 + shift, v_f2 + shift])
    chi = u[0] - u[1]
    v_f1 = u[2] - shift
    v_f2 = u[3] - shift
    pres = gates._product_pre_a(v_f2, chi, M)
    pres.append(v_f1 + shift)
    u = b.add_layer(DLU, pres)
    pres = gates._product_pre_b(u[:9])
    pres.append(u[9] * 1.0)
    u = b.add_layer(DLU, pres)
    prod = gates._product_value(u[:6], M)
    head = b.finish([prod + (u[6] - shift)])
    net = chain(head, block)
    return PiecewiseResult(net, errs, 1.0 / n, float(M))
