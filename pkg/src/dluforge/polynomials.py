"""Compile polynomials, rational functions and monomials into DLU networks.

Univariate polynomials are expressed in a three-term-recurrence basis
p*_k = (a_k x + b_k) p*_{k-1} - c_k p*_{k-2} with p*_0 = 1, p*_1 = x and are
realized exactly on [-1, 1] by a pipeline that carries, per two-layer stage,
the input x, the two most recent basis values, and a running partial sum.
Stage packing notes:

* per stage one product gate computes x * p*_{k-1}; the square of x that the
  three-squares product formula needs is computed once and carried as a unit,
  so a stage costs 47 nonzero weights against the budget of 61 per degree;
* the u3 = rho(s + 1) branch of a square gate is affine on the domain, which
  both removes one unit per square and condenses the current basis value into
  a single unit for the following stage;
* the partial sum rides the shifted accumulation gadget
  rho(rho(t - b)) + b with b below the minimum of the partial sum on [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .network import DLU, DomainError, Network, ParameterError
from .wiring import Affine, NetBuilder, affine_network
from . import gates

POLY_WIDTH_CLAIM = 12
POLY_WEIGHTS_PER_DEGREE = 61
RATIONAL_WIDTH_CLAIM = 24  # two parallel degree pipelines


@dataclass(frozen=True)
class RecurrenceBasis:
    """Three-term recurrence family, bounded by 1 in sup norm on [-1, 1]."""

    name: str
    coeff_fn: Callable[[int], tuple]

    def coefficients(self, k: int) -> tuple:
        """(a_k, b_k, c_k) for p*_k = (a_k x + b_k) p*_{k-1} - c_k p*_{k-2}."""
        if k < 2:
            raise ParameterError("recurrence coefficients start at k = 2")
        return self.coeff_fn(k)

    def values(self, degree: int, x) -> np.ndarray:
        """All p*_0 .. p*_degree at the given points, shape (degree+1, n)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        out = np.empty((degree + 1, x.size))
        out[0] = 1.0
        if degree >= 1:
            out[1] = x
        for k in range(2, degree + 1):
            a, b, c = self.coefficients(k)
            out[k] = (a * x + b) * out[k - 1] - c * out[k - 2]
        return out

    def evaluate(self, coefficients, x) -> np.ndarray:
        coeffs = np.asarray(coefficients, dtype=np.float64)
        vals = self.values(len(coeffs) - 1, x)
        return coeffs @ vals


LEGENDRE = RecurrenceBasis(
    "legendre", lambda k: ((2.0 * k - 1.0) / k, 0.0, (k - 1.0) / k)
)
CHEBYSHEV = RecurrenceBasis("chebyshev", lambda k: (2.0, 0.0, 1.0))
MONOMIAL = RecurrenceBasis("monomial", lambda k: (None, None, None))

_MAX_CONVERSION_DEGREE = 64


def basis_by_name(name: str) -> RecurrenceBasis:
    table = {"legendre": LEGENDRE, "chebyshev": CHEBYSHEV, "monomial": MONOMIAL}
    try:
        return table[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown basis {name!r}") from None


@dataclass(frozen=True)
class BasisPolynomial:
    """Sum of c_k p*_k over a recurrence basis."""

    basis: RecurrenceBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=np.float64))
        if c.size == 0:
            raise ParameterError("coefficient vector must be non-empty")
        if not np.all(np.isfinite(c)):
            raise ParameterError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coefficients)[0]
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x) -> np.ndarray:
        if self.basis.name == "monomial":
            return np.polynomial.polynomial.polyval(
                np.asarray(x, dtype=np.float64), self.coefficients
            )
        return self.basis.evaluate(self.coefficients, x)


def _to_chebyshev(poly: BasisPolynomial) -> BasisPolynomial:
    """Monomial coefficients -> Chebyshev, capped to keep conditioning sane."""
    if poly.degree > _MAX_CONVERSION_DEGREE:
        raise ParameterError(
            f"monomial conversion capped at degree {_MAX_CONVERSION_DEGREE}"
        )
    cheb = np.polynomial.chebyshev.poly2cheb(poly.coefficients)
    return BasisPolynomial(CHEBYSHEV, cheb)


def accumulation_shift(values: np.ndarray) -> float:
    """A safe lower bound for grid-sampled values of a smooth function.

    The grid minimum can sit above the true minimum by about
    h^2 |f''| / 8; subtract a second-difference estimate of that gap so the
    accumulation gadget's pre-activation never goes negative.  Under-shooting
    is free: the gadget is exact for any shift below the true minimum.
    """
    v = np.asarray(values, dtype=np.float64)
    slack = 0.0
    if v.size >= 3:
        slack = float(np.max(np.abs(v[:-2] - 2.0 * v[1:-1] + v[2:]))) / 8.0
    return float(v.min()) - 1e-9 - slack


class _ChebPipeline:
    """Emits the recurrence pipeline for one coefficient vector.

    Drives stages k = 2..n; each stage is two layers.  Several pipelines can
    share a NetBuilder by interleaving their per-stage unit lists.
    """

    def __init__(self, gamma, basis: RecurrenceBasis, x_aff: Affine):
        self.gamma = np.asarray(gamma, dtype=np.float64)
        self.n = len(self.gamma) - 1
        if self.n < 2:
            raise ParameterError("pipeline needs degree >= 2")
        self.basis = basis
        self.x0 = x_aff
        # shifts for the accumulation gadget: s_j <= min of partial sum P_j
        grid = np.linspace(-1.0, 1.0, 1001)
        vals = basis.values(self.n, grid)
        self.shifts = {}
        for j in range(1, self.n - 1):
            partial = self.gamma[: j + 1] @ vals[: j + 1]
            self.shifts[j] = accumulation_shift(partial)
        # reps, populated as stages advance
        self.x = None        # affine for x over the current top layer
        self.x2 = None       # affine for x^2
        self.p_cur = None    # affine for p*_{k-1} entering stage k's product
        self.p_unit = None   # unit with value p*_{k-1}/2 + 1 (stage k's b3)
        self.p_carry = None  # unit with value p*_{k-2}/2 + 1 (stage k's b6)
        self.acc = None      # affine for the partial sum carried so far

    def stages(self):
        return range(2, self.n + 1)

    def pre_a(self, k: int) -> list[Affine]:
        if k == 2:
            x = self.x0
            return [-x - 1.0, -x - 2.0, x + 2.0]
        p, x = self.p_cur, self.x
        s_plus = (x + p) / 2.0
        s_p = p / 2.0
        pres = [-s_plus - 1.0, -s_plus - 2.0, -s_p - 1.0, -s_p - 2.0, s_p + 1.0,
                self.x_unit * 1.0, self.x2_pre]
        if k >= 4:
            pres.append(self.p_unit * 1.0)  # carry p*_{k-2} one more stage
        if k == 3:
            acc_pre = self.gamma[1] * self.x + self.gamma[0] - self.shifts[1]
        else:
            acc_pre = (
                self.gamma[k - 2] * (2.0 * self.p_unit - 2.0)
                + self.acc - self.shifts[k - 2]
            )
        if self.n >= 4:  # no accumulator needed when the output affine catches up
            pres.append(acc_pre)
        elif k == 3 and self.n == 3:
            pass  # degree 3: output affine adds gamma_2, gamma_3 directly
        return pres

    def on_a(self, k: int, units: list[Affine]):
        self._a_units = units

    def pre_b(self, k: int) -> list[Affine]:
        u = self._a_units
        if k == 2:
            return [1.0 - 12.0 * u[0] + 12.0 * u[1], u[2] * 1.0]
        pres = [1.0 - 12.0 * u[0] + 12.0 * u[1], 1.0 - 12.0 * u[2] + 12.0 * u[3],
                u[4] * 1.0, u[5] * 1.0, u[6] * 1.0]
        idx = 7
        if k >= 4:
            pres.append(u[idx] * 1.0)
            idx += 1
        if self.n >= 4:
            pres.append(u[idx] * 1.0)
        return pres

    def on_b(self, k: int, units: list[Affine]):
        if k == 2:
            v1x, xb = units
            self.x_unit = xb
            self.x = xb - 2.0
            self.x2 = 12.0 * v1x - 5.0 * xb + 16.0
            self.x2_pre = self.x2  # condensed into a unit at stage 3's layer A
            a, b, c = self.basis.coefficients(2)
            self.p_cur = a * self.x2 + b * self.x - c
            self.acc = None
            return
        b1, b2, b3, xb, x2b = units[0], units[1], units[2], units[3], units[4]
        idx = 5
        b6 = None
        if k >= 4:
            b6 = units[idx]
            idx += 1
        acc_unit = units[idx] if self.n >= 4 else None
        sigma = 24.0 * b1 - 24.0 * b2 - 5.0 * xb - 0.5 * x2b + 10.0  # x * p*_{k-1}
        a, bc, c = self.basis.coefficients(k)
        p_km1 = 2.0 * b3 - 2.0
        p_km2 = (xb - 2.0) if k == 3 else (2.0 * b6 - 2.0)
        new_p = a * sigma + bc * p_km1 - c * p_km2
        self.x_unit = xb
        self.x = xb - 2.0
        self.x2 = x2b * 1.0
        self.x2_pre = self.x2
        self.p_cur = new_p
        self.p_unit = b3
        if acc_unit is not None:
            self.acc = acc_unit + self.shifts[k - 2]

    def final_affine(self) -> Affine:
        g = self.gamma
        n = self.n
        if n == 2:
            return g[0] + g[1] * self.x + g[2] * self.p_cur
        if n == 3:
            base = g[0] + g[1] * self.x
        else:
            base = self.acc  # P_{n-2}
        return base + g[n - 1] * (2.0 * self.p_unit - 2.0) + g[n] * self.p_cur


def _run_pipelines(builder: NetBuilder, pipes: list[_ChebPipeline]):
    """Advance all pipelines stage by stage through shared layers."""
    n = pipes[0].n
    for k in range(2, n + 1):
        pres = []
        counts = []
        for p in pipes:
            block = p.pre_a(k)
            counts.append(len(block))
            pres.extend(block)
        units = builder.add_layer(DLU, pres)
        pos = 0
        for p, c in zip(pipes, counts):
            p.on_a(k, units[pos:pos + c])
            pos += c
        pres = []
        counts = []
        for p in pipes:
            block = p.pre_b(k)
            counts.append(len(block))
            pres.extend(block)
        units = builder.add_layer(DLU, pres)
        pos = 0
        for p, c in zip(pipes, counts):
            p.on_b(k, units[pos:pos + c])
            pos += c


def poly_claim(degree: int) -> tuple:
    return (2 * degree, POLY_WIDTH_CLAIM, POLY_WEIGHTS_PER_DEGREE * max(degree, 1))


def compile_polynomial(poly: BasisPolynomial) -> Network:
    """Exact realization of the polynomial on [-1, 1].

    Fits the budget (2n, 12, 61n) for degree n.  Moebius-basis polynomials are
    converted to Chebyshev form first.
    """
    if poly.basis.name == "monomial":
        poly = _to_chebyshev(poly)
    gamma = poly.coefficients[: poly.degree + 1]
    n = len(gamma) - 1
    if n == 0:
        return affine_network([[0.0]], [gamma[0]])
    if n == 1:
        return affine_network([[gamma[1]]], [gamma[0]])
    b = NetBuilder(1)
    (x,) = b.inputs()
    pipe = _ChebPipeline(gamma, poly.basis, x)
    _run_pipelines(b, [pipe])
    return b.finish([pipe.final_affine()])


def rational_claim(max_degree: int) -> tuple:
    return (2 * max_degree + 3, RATIONAL_WIDTH_CLAIM, 122 * max(max_degree, 1) + 51)


def compile_rational(p: BasisPolynomial, q: BasisPolynomial,
                     root_tolerance: float = 1e-6) -> Network:
    """Exact p(x)/q(x) on [-1, 1]; q must be root-free there.

    Two parallel recurrence pipelines feed a division gate.  The denominator
    is checked for roots on a fine grid (minimum magnitude >= root_tolerance
    plus a sign-change scan); a detected root raises DomainError with the
    approximate location.
    """
    if p.basis.name == "monomial":
        p = _to_chebyshev(p)
    if q.basis.name == "monomial":
        q = _to_chebyshev(q)
    grid = np.linspace(-1.0, 1.0, 2001)
    qv = q(grid)
    i = int(np.argmin(np.abs(qv)))
    if np.abs(qv[i]) < root_tolerance:
        raise DomainError(
            f"denominator vanishes near x = {grid[i]:.6g} "
            f"(|q| = {abs(qv[i]):.3g} < {root_tolerance:g})"
        )
    sign_changes = np.nonzero(np.diff(np.sign(qv)))[0]
    if sign_changes.size:
        j = sign_changes[0]
        raise DomainError(
            f"denominator changes sign in [{grid[j]:.6g}, {grid[j + 1]:.6g}]"
        )
    pc = np.array(p.coefficients[: p.degree + 1])
    qc = np.array(q.coefficients[: q.degree + 1])
    if qv[0] < 0:  # the division gate needs a positive denominator
        pc, qc = -pc, -qc
        qv = -qv
    pv = BasisPolynomial(p.basis, pc)(grid)

    ell = max(len(pc), len(qc)) - 1
    if ell == 0:
        return affine_network([[0.0]], [pc[0] / qc[0]])
    a_div = 0.5 * float(qv.min())
    M_div = 2.0 * max(1.0, float(np.abs(pv).max()), float(qv.max()))
    if ell == 1:
        b = NetBuilder(1)
        (x,) = b.inputs()
        pa = (pc[1] if len(pc) > 1 else 0.0) * x + pc[0]
        qa = (qc[1] if len(qc) > 1 else 0.0) * x + qc[0]
        value = gates._emit_division(b, pa, qa, a_div, M_div)
        return b.finish([value])
    pc = np.pad(pc, (0, ell + 1 - len(pc)))
    qc = np.pad(qc, (0, ell + 1 - len(qc)))
    b = NetBuilder(1)
    (x,) = b.inputs()
    pipe_p = _ChebPipeline(pc, p.basis, x)
    pipe_q = _ChebPipeline(qc, q.basis, x)
    _run_pipelines(b, [pipe_p, pipe_q])
    value = gates._emit_division(b, pipe_p.final_affine(), pipe_q.final_affine(),
                                 a_div, M_div)
    return b.finish([value])


# -- monomials ---------------------------------------------------------------

def _ceil_log2(v: int) -> int:
    return int(np.ceil(np.log2(v))) if v > 1 else 0


def monomial_product_claim(d: int) -> tuple:
    if d <= 1:
        return (0, 0, 1)
    if d == 2:
        return gates.PRODUCT_CLAIM
    weights = int(np.ceil(90.0 * np.log2(d) * np.log2(np.log2(d)))) if d > 2 else 45
    return (2 * _ceil_log2(d), 5 * d, max(weights, 1))


def _emit_product_level(builder: NetBuilder, values: list[Affine], M: float) -> list[Affine]:
    """One tree level: pair adjacent values with product gates, carry leftovers."""
    pres = []
    pair_count = len(values) // 2
    for i in range(pair_count):
        pres.extend(gates._product_pre_a(values[2 * i], values[2 * i + 1], M))
    carry = None
    if len(values) % 2:
        carry = values[-1] + (1.0 + M)  # stays on the identity branch
        pres.append(carry)
    units = builder.add_layer(DLU, pres)
    pres_b = []
    for i in range(pair_count):
        pres_b.extend(gates._product_pre_b(units[9 * i:9 * i + 9]))
    if carry is not None:
        pres_b.append(units[-1] * 1.0)
    units_b = builder.add_layer(DLU, pres_b)
    out = []
    for i in range(pair_count):
        out.append(gates._product_value(units_b[6 * i:6 * i + 6], M))
    if carry is not None:
        out.append(units_b[-1] - (1.0 + M))
    return out


def _emit_product_tree(builder: NetBuilder, values: list[Affine], M: float) -> Affine:
    while len(values) > 1:
        values = _emit_product_level(builder, values, M)
    return values[0]


def compile_monomial_product(d: int) -> Network:
    """Exact product of all d coordinates on [-1, 1]^d via a binary gate tree."""
    d = int(d)
    if d < 1:
        raise ParameterError("need d >= 1")
    if d == 1:
        return affine_network([[1.0]], [0.0])
    b = NetBuilder(d)
    value = _emit_product_tree(b, b.inputs(), 1.0)
    return b.finish([value])


def monomial_claim(exponents) -> tuple:
    beta = [int(v) for v in exponents]
    d = len(beta)
    n = sum(beta)
    if n == 0:
        return (0, 0, 1)
    depth = 2 * _ceil_log2(n + d) + 2 * _ceil_log2(d)
    tree_w = int(np.ceil(90.0 * np.log2(d) * np.log2(np.log2(d)))) if d > 2 else 45
    weights = int(np.ceil(13.0 * d * np.log2((n + d) / d))) + tree_w
    return (depth, 5 * d, max(weights, 1))


def compile_monomial(exponents) -> Network:
    """Exact prod x_i^{beta_i} on [0, 1]^d.

    Per-coordinate square-and-multiply chains run in lockstep (square and
    accumulate gates share each two-layer level), then a product tree joins
    the coordinates.
    """
    beta = [int(v) for v in exponents]
    if not beta:
        raise ParameterError("need at least one exponent")
    if any(v < 0 for v in beta):
        raise ParameterError("exponents must be nonnegative")
    d = len(beta)
    if sum(beta) == 0:
        return affine_network([[0.0] * d], [1.0])
    b = NetBuilder(d)
    xs = b.inputs()
    chains = []  # per active coordinate: dict(s=..., acc=..., bits=...)
    for i, bb in enumerate(beta):
        if bb == 0:
            continue
        bits = [(bb >> j) & 1 for j in range(bb.bit_length())]
        chains.append({"s": xs[i], "acc": None, "bits": bits, "pos": 0})
    # level loop: each two-layer level squares s and folds one bit into acc
    while True:
        for c in chains:
            # a bare top bit means the power already sits in s
            if _chain_pending(c) and c["pos"] == len(c["bits"]) - 1 and c["acc"] is None:
                c["pos"] += 1
        if not any(_chain_pending(c) for c in chains):
            break
        pres = []
        plan = []
        for c in chains:
            if not _chain_pending(c):
                pres.append(c["s"] + 1.0)  # finished: ride the level out
                plan.append((c, "carry_s", 1))
                continue
            j = c["pos"]
            last = j == len(c["bits"]) - 1
            if last:  # top bit with a pending accumulator: final product
                pres.extend(gates._product_pre_a(c["acc"], c["s"], 1.0))
                plan.append((c, "finish_mul", 9))
            elif c["bits"][j]:
                pres.extend(gates._square_pre_a(c["s"]))
                if c["acc"] is None:
                    pres.append(c["s"] + 1.0)
                    plan.append((c, "square+seed", 4))
                else:
                    pres.extend(gates._product_pre_a(c["acc"], c["s"], 1.0))
                    plan.append((c, "square+mul", 12))
            else:
                pres.extend(gates._square_pre_a(c["s"]))
                if c["acc"] is None:
                    plan.append((c, "square", 3))
                else:
                    pres.append(c["acc"] + 1.0)
                    plan.append((c, "square+carry", 4))
        units = b.add_layer(DLU, pres)
        pres_b = []
        plan_b = []
        pos = 0
        for c, kind, width in plan:
            u = units[pos:pos + width]
            pos += width
            if kind == "carry_s":
                pres_b.append(u[0] * 1.0)
                plan_b.append((c, kind, 1))
            elif kind == "finish_mul":
                pres_b.extend(gates._product_pre_b(u))
                plan_b.append((c, kind, 6))
            elif kind == "square":
                pres_b.extend(gates._square_pre_b(u))
                plan_b.append((c, kind, 2))
            elif kind in ("square+seed", "square+carry"):
                pres_b.extend(gates._square_pre_b(u[:3]))
                pres_b.append(u[3] * 1.0)
                plan_b.append((c, kind, 3))
            else:  # square+mul
                pres_b.extend(gates._square_pre_b(u[:3]))
                pres_b.extend(gates._product_pre_b(u[3:12]))
                plan_b.append((c, kind, 8))
        units = b.add_layer(DLU, pres_b)
        pos = 0
        for c, kind, width in plan_b:
            u = units[pos:pos + width]
            pos += width
            if kind == "carry_s":
                c["s"] = u[0] - 1.0
            elif kind == "finish_mul":
                c["s"] = gates._product_value(u, 1.0)
                c["acc"] = None
                c["pos"] += 1
            elif kind == "square":
                c["s"] = gates._square_value(u)
                c["pos"] += 1
            elif kind in ("square+seed", "square+carry"):
                c["s"] = gates._square_value(u[:2])
                c["acc"] = u[2] - 1.0
                c["pos"] += 1
            else:  # square+mul
                c["s"] = gates._square_value(u[:2])
                c["acc"] = gates._product_value(u[2:8], 1.0)
                c["pos"] += 1
    values = [c["s"] for c in chains]
    value = _emit_product_tree(b, values, 1.0) if len(values) > 1 else values[0]
    return b.finish([value])


def _chain_pending(c) -> bool:
    return c["pos"] < len(c["bits"])
