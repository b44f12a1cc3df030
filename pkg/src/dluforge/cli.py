"""Command-line front end.

Exit codes: 0 all checks pass, 2 asserted bound violated, 3 structural budget
missed, 4 construction error.  The DLU_FORGE_SEED environment variable
overrides the default Monte-Carlo seed.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import gates, polynomials as poly, constructions as cons, relu_baseline as relu
from .network import (ConstructionError, DomainError, Network, ParameterError,
                      ParseError, audit, evaluate, forward, load, save)
from .targets import get_target, target_names
from .verify import (GridSpec, default_grid, default_seed, load_report,
                     measure_error, sweep, write_report)
from .wiring import affine_network

EXIT_OK = 0
EXIT_BOUND = 2
EXIT_BUDGET = 3
EXIT_CONSTRUCTION = 4


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> list:
    return [int(v) for v in text.replace(",", " ").split()]


def _parse_range(text: str) -> tuple:
    # "n=2..8" or "m=2,4,6"
    name, _, spec = text.partition("=")
    if not spec:
        raise ParameterError("expected name=a..b or name=v1,v2,...")
    if ".." in spec:
        a, b = spec.split("..")
        values = list(range(int(a), int(b) + 1))
    else:
        values = [int(v) for v in spec.split(",")]
    return name, values


def _component_net(name: str, s: int) -> Network:
    """Piecewise components: exact affine nets for the simple named targets,
    Bernstein compilations otherwise."""
    simple = {
        "zero": ([[0.0]], [0.0]),
        "one": ([[0.0]], [1.0]),
        "half": ([[0.0]], [0.5]),
        "ramp": ([[1.0]], [0.0]),
    }
    if name in simple:
        return affine_network(*simple[name])
    return cons.build_bernstein(get_target(name), s)


# -- build families ------------------------------------------------------------

def _build_net(args) -> tuple:
    """Returns (network, claim or None, notes)."""
    fam = args.family
    if fam == "square":
        return gates.square_gate(), gates.SQUARE_CLAIM, ""
    if fam == "product":
        return gates.product_gate(args.M), gates.PRODUCT_CLAIM, f"M={args.M}"
    if fam == "reciprocal":
        return gates.reciprocal_gate(args.a), gates.RECIPROCAL_CLAIM, f"a={args.a}"
    if fam == "division":
        return gates.division_gate(args.a, args.M), gates.DIVISION_CLAIM, \
            f"a={args.a} M={args.M}"
    if fam == "identity":
        return gates.identity_gadget(args.lower_bound), gates.IDENTITY_CLAIM, ""
    if fam == "relu-surrogate":
        net = gates.relu_surrogate(args.n, args.m)
        return net, (args.m, 1, args.m + 2), f"n={args.n} m={args.m}"
    if fam == "indicator":
        return gates.indicator_gadget(args.n), (1, 2, 5), f"n={args.n}"
    if fam == "poly":
        basis = poly.basis_by_name(args.basis)
        p = poly.BasisPolynomial(basis, _floats(args.coeffs))
        return poly.compile_polynomial(p), poly.poly_claim(p.degree), \
            f"degree={p.degree}"
    if fam == "rational":
        basis = poly.basis_by_name(args.basis)
        pnum = poly.BasisPolynomial(basis, _floats(args.p))
        pden = poly.BasisPolynomial(basis, _floats(args.q))
        ell = max(pnum.degree, pden.degree)
        return poly.compile_rational(pnum, pden), poly.rational_claim(ell), \
            f"max-degree={ell}"
    if fam == "monomial-product":
        return poly.compile_monomial_product(args.d), \
            poly.monomial_product_claim(args.d), f"d={args.d}"
    if fam == "monomial":
        beta = _ints(args.exponents)
        return poly.compile_monomial(beta), poly.monomial_claim(beta), \
            f"exponents={beta}"
    if fam == "exp":
        net = cons.build_exp_abs(args.n, args.dim)
        return net, cons.exp_abs_claim(args.n, args.dim), \
            f"n={args.n} dim={args.dim} headline-bound={cons.exp_abs_bound(args.n):g}"
    if fam == "expansion":
        target = get_target(args.target)
        spec = cons.ExpansionSpec(args.trunc, args.N)
        coeffs = cons.expand(target, spec)
        return cons.compile_expansion(coeffs), None, \
            f"target={args.target} terms={len(coeffs)}"
    if fam == "bernstein":
        target = get_target(args.target)
        net = cons.build_bernstein(target, args.s)
        return net, cons.bernstein_claim(args.s, target.dim), \
            f"target={args.target} s={args.s}"
    if fam == "piecewise":
        parts = [_component_net(n, args.s) for n in
                 (args.f1, args.f2, args.h, args.p)]
        res = cons.build_piecewise(*parts, args.n)
        return res.network, None, f"n={args.n} product-bound={res.product_bound:g}"
    raise ParameterError(f"unknown build family {fam!r}")


def _cmd_build(args) -> int:
    net, claim, notes = _build_net(args)
    code = EXIT_OK
    print(f"built {args.family}: input_dim={net.input_dim} depth={net.depth} "
          f"width={net.width} weights={net.nonzero_weights}"
          + (f" ({notes})" if notes else ""))
    if claim is not None:
        a = audit(net, claim)
        flag = "within budget" if a.within_budget else "BUDGET MISS"
        print(f"audit vs claim (depth,width,weights)={claim}: {flag}")
        if not a.within_budget:
            code = EXIT_BUDGET
    if args.output:
        save(net, args.output)
        print(f"wrote {args.output}")
    return code


def _cmd_eval(args) -> int:
    net = load(args.net)
    x = _floats(args.at)
    y = forward(net, x)
    print(" ".join(repr(float(v)) for v in y))
    return EXIT_OK


def _cmd_audit(args) -> int:
    net = load(args.net)
    claim = _ints(args.claim)
    if len(claim) != 3:
        raise ParameterError("--claim needs depth,width,weights")
    a = audit(net, claim)
    print(f"depth {a.depth} (claim {a.claimed_depth}), width {a.width} "
          f"(claim {a.claimed_width}), weights {a.nonzero_weights} "
          f"(claim {a.claimed_weights}): "
          + ("within budget" if a.within_budget else "BUDGET MISS"))
    return EXIT_OK if a.within_budget else EXIT_BUDGET


def _cmd_measure(args) -> int:
    net = load(args.net)
    target = get_target(args.target)
    seed = args.seed if args.seed is not None else default_seed()
    if args.grid is not None:
        kind = "monte-carlo" if target.dim >= 3 else "uniform"
        grid = GridSpec(kind, args.grid, seed if kind == "monte-carlo" else None)
    else:
        grid = default_grid(target.dim)
        if grid.kind == "monte-carlo":
            grid = GridSpec(grid.kind, grid.points, seed)
    report = measure_error(net, target, args.norm, grid, p=args.p,
                           weighted=args.weighted, theoretical_bound=args.bound)
    bound_txt = "" if args.bound is None else f" (bound {args.bound:g})"
    print(f"{args.norm} error of {args.net} vs {args.target}: "
          f"{report.measured_error:.6e}{bound_txt}")
    if args.report:
        write_report(report, args.report, args.format)
        print(f"wrote {args.report}")
    if args.bound is not None and args.bound_exact:
        if report.measured_error > max(1e-10, args.bound):
            print("BOUND VIOLATION")
            return EXIT_BOUND
    return EXIT_OK


SWEEP_FAMILIES = {
    "exp": dict(
        builder=lambda v: cons.build_exp_abs(int(v), 1),
        target="exp-neg-abs", rate="geometric",
        bound=lambda v: cons.exp_abs_bound(int(v)),
        claim=lambda v: cons.exp_abs_claim(int(v), 1),
        asserted=False,
    ),
    "yarotsky-square": dict(
        builder=lambda v: relu.yarotsky_square(int(v)),
        target="square", rate="geometric",
        bound=lambda v: 2.0 ** (-(2 * int(v) + 2)),
        claim=lambda v: relu.YAROTSKY_SQUARE_CLAIM(int(v)),
        asserted=True,
    ),
    "yarotsky-product": dict(
        builder=lambda v: relu.yarotsky_product(int(v), 1.0),
        target="xy", rate="geometric",
        bound=lambda v: 3.0 / 2.0 ** (2 * int(v) + 1),
        claim=lambda v: relu.YAROTSKY_PRODUCT_CLAIM(int(v)),
        asserted=True,
    ),
    "expansion": dict(
        builder=lambda v: cons.compile_expansion(
            cons.expand(get_target("exp"), cons.ExpansionSpec("cube", int(v)))),
        target="exp", rate="geometric", bound=None, claim=None, asserted=False,
    ),
    "relu-surrogate": dict(
        builder=lambda v: gates.relu_surrogate(int(v), 1),
        target="ramp", rate="geometric",
        bound=lambda v: 1.0 / int(v), claim=None, asserted=True,
    ),
}


def _cmd_sweep(args) -> int:
    if args.family not in SWEEP_FAMILIES:
        raise ParameterError(
            f"sweepable families: {', '.join(sorted(SWEEP_FAMILIES))}")
    fam = SWEEP_FAMILIES[args.family]
    name, values = _parse_range(args.param)
    target = get_target(args.target or fam["target"])
    seed = args.seed if args.seed is not None else default_seed()
    grid = default_grid(target.dim)
    if grid.kind == "monte-carlo":
        grid = GridSpec(grid.kind, grid.points, seed)
    result = sweep(fam["builder"], name, values, target, args.norm, grid,
                   rate_method=fam["rate"], bound_fn=fam["bound"],
                   claim_fn=fam["claim"])
    for rep in result.reports:
        bound_txt = "" if rep.theoretical_bound is None else \
            f" bound {rep.theoretical_bound:.3e}"
        print(f"{name}={rep.parameter:g}: measured {rep.measured_error:.6e}"
              f"{bound_txt}")
    if result.rate is not None:
        print(f"fitted {result.rate_method} rate: {result.rate:.4f}")
    code = EXIT_OK
    if result.failure:
        print(f"sweep aborted: {result.failure}")
        code = EXIT_CONSTRUCTION
    for rep in result.reports:
        if rep.audit is not None and not rep.audit.within_budget:
            print(f"BUDGET MISS at {name}={rep.parameter:g}")
            code = EXIT_BUDGET
    if fam["asserted"] and fam["bound"] is not None:
        for rep in result.reports:
            if rep.measured_error > max(1e-10, rep.theoretical_bound):
                print(f"BOUND VIOLATION at {name}={rep.parameter:g}")
                code = EXIT_BOUND
    if args.csv:
        write_report(result, args.csv, "csv")
        print(f"wrote {args.csv}")
    if args.json:
        write_report(result, args.json, "json")
        print(f"wrote {args.json}")
    return code


def _cmd_compare(args) -> int:
    target = get_target(args.target)
    if target.dim != 1:
        raise ParameterError("comparison is univariate")
    lo, hi = target.domain[0]
    grid = np.linspace(lo, hi, 2001)
    V = poly.LEGENDRE.values(args.degree, grid).T
    coeffs, *_ = np.linalg.lstsq(V, target(grid[:, None]), rcond=None)
    dlu_net = poly.compile_polynomial(poly.BasisPolynomial(poly.LEGENDRE, coeffs))
    relu_res = relu.relu_poly_approx(coeffs, args.m)
    rows = []
    for label, net in (("dlu", dlu_net), ("relu", relu_res.network)):
        err = float(np.max(np.abs(evaluate(net, grid) - target(grid[:, None]))))
        rows.append((label, err, net.depth, net.width, net.nonzero_weights))
        print(f"{label:5s} sup error {err:.6e} depth {net.depth} "
              f"width {net.width} weights {net.nonzero_weights}")
    if args.csv:
        import csv as _csv
        with open(args.csv, "w", newline="") as fh:
            w = _csv.writer(fh, lineterminator="\n")
            w.writerow(["activation", "sup_error", "depth", "width", "weights"])
            for row in rows:
                w.writerow([row[0], repr(row[1]), row[2], row[3], row[4]])
        print(f"wrote {args.csv}")
    return EXIT_OK


def _cmd_relu(args) -> int:
    if args.relu_cmd == "square":
        net = relu.yarotsky_square(args.m)
        a = audit(net, relu.YAROTSKY_SQUARE_CLAIM(args.m))
        print(f"depth {a.depth} width {a.width} weights {a.nonzero_weights}: "
              + ("within budget" if a.within_budget else "BUDGET MISS"))
        if args.output:
            save(net, args.output)
            print(f"wrote {args.output}")
        return EXIT_OK if a.within_budget else EXIT_BUDGET
    if args.relu_cmd == "product":
        net = relu.yarotsky_product(args.m, args.M)
        a = audit(net, relu.YAROTSKY_PRODUCT_CLAIM(args.m))
        print(f"depth {a.depth} width {a.width} weights {a.nonzero_weights}: "
              + ("within budget" if a.within_budget else "BUDGET MISS"))
        if args.output:
            save(net, args.output)
            print(f"wrote {args.output}")
        return EXIT_OK if a.within_budget else EXIT_BUDGET
    if args.relu_cmd == "poly":
        res = relu.relu_poly_approx(_floats(args.coeffs), args.m)
        print(f"depth {res.network.depth} width {res.network.width} "
              f"weights {res.network.nonzero_weights} "
              f"bound {res.theoretical_bound:.3e}")
        if res.warning:
            print(f"warning: {res.warning}")
        if args.output:
            save(res.network, args.output)
            print(f"wrote {args.output}")
        return EXIT_OK
    if args.relu_cmd == "breakpoints":
        net = load(args.net)
        pl = relu.extract_breakpoints(net)
        budget = relu.breakpoint_budget([l.out_dim for l in net.hidden_layers])
        print(f"breakpoints in (0,1): {pl.count} (budget {budget})")
        for v in pl.breakpoints:
            print(repr(float(v)))
        return EXIT_OK
    if args.relu_cmd == "lowerbound":
        cert = relu.lower_bound_certificate(args.L, args.W, k=args.k)
        flags = []
        if cert.overflow:
            flags.append("overflow")
        if cert.uniform_partition_only:
            flags.append("uniform-partition certificate")
        txt = f" [{', '.join(flags)}]" if flags else ""
        print(f"m = {cert.breakpoint_budget}, lower bound {cert.value:.6e} "
              f"({cert.method}){txt}")
        return EXIT_OK
    raise ParameterError(f"unknown relu subcommand {args.relu_cmd!r}")


def _cmd_report(args) -> int:
    payload = load_report(args.input)
    write_report(payload, args.output, args.format)
    print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dluforge",
        description="Build and verify exact DLU network constructions.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("build", help="construct a network family")
    bs = b.add_subparsers(dest="family", required=True)
    for fam in ("square", "product", "reciprocal", "division", "identity",
                "relu-surrogate", "indicator", "poly", "rational",
                "monomial-product", "monomial", "exp", "expansion",
                "bernstein", "piecewise"):
        f = bs.add_parser(fam)
        f.add_argument("-o", "--output", help="write the network JSON here")
        if fam in ("product", "division"):
            f.add_argument("--M", type=float, default=1.0)
        if fam in ("reciprocal", "division"):
            f.add_argument("--a", type=float, default=0.5)
        if fam == "identity":
            f.add_argument("--lower-bound", type=float, default=-1.0)
        if fam == "relu-surrogate":
            f.add_argument("--n", type=int, default=1)
            f.add_argument("--m", type=int, default=1)
        if fam == "indicator":
            f.add_argument("--n", type=int, required=True)
        if fam == "poly":
            f.add_argument("--basis", default="legendre",
                           choices=("legendre", "chebyshev", "monomial"))
            f.add_argument("--coeffs", required=True,
                           help="comma-separated basis coefficients c0,c1,...")
        if fam == "rational":
            f.add_argument("--basis", default="monomial",
                           choices=("legendre", "chebyshev", "monomial"))
            f.add_argument("--p", required=True, help="numerator coefficients")
            f.add_argument("--q", required=True, help="denominator coefficients")
        if fam == "monomial-product":
            f.add_argument("--d", type=int, required=True)
        if fam == "monomial":
            f.add_argument("--exponents", required=True,
                           help="comma-separated nonnegative exponents")
        if fam == "exp":
            f.add_argument("--n", type=int, required=True)
            f.add_argument("--dim", type=int, default=1)
        if fam == "expansion":
            f.add_argument("--target", required=True, choices=target_names())
            f.add_argument("--trunc", default="cube", choices=("cube", "hyperbolic"))
            f.add_argument("--N", type=int, required=True)
        if fam == "bernstein":
            f.add_argument("--target", required=True, choices=target_names())
            f.add_argument("--s", type=int, required=True)
        if fam == "piecewise":
            f.add_argument("--f1", required=True)
            f.add_argument("--f2", required=True)
            f.add_argument("--h", required=True)
            f.add_argument("--p", required=True)
            f.add_argument("--n", type=int, required=True)
            f.add_argument("--s", type=int, default=16,
                           help="Bernstein degree for non-affine components")

    e = sub.add_parser("eval", help="evaluate a stored network")
    e.add_argument("net")
    e.add_argument("--at", required=True, help="comma-separated input vector")

    a = sub.add_parser("audit", help="audit a stored network against a claim")
    a.add_argument("net")
    a.add_argument("--claim", required=True, help="depth,width,weights")

    mm = sub.add_parser("measure", help="measure error against a named target")
    mm.add_argument("net")
    mm.add_argument("--target", required=True)
    mm.add_argument("--norm", default="sup", choices=("sup", "l1", "l2", "lp"))
    mm.add_argument("--p", type=float, default=None)
    mm.add_argument("--grid", type=int, default=None)
    mm.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    mm.add_argument("--weighted", action="store_true")
    mm.add_argument("--bound", type=float, default=None)
    mm.add_argument("--bound-exact", action="store_true",
                    help="exit 2 if measured > max(1e-10, bound)")
    mm.add_argument("--report", help="write an ErrorReport file here")
    mm.add_argument("--format", default="json", choices=("json", "csv"))

    sw = sub.add_parser("sweep", help="sweep a family parameter")
    sw.add_argument("family")
    sw.add_argument("--param", required=True, help="name=a..b or name=v1,v2,...")
    sw.add_argument("--target", default=None)
    sw.add_argument("--norm", default="sup", choices=("sup", "l1", "l2"))
    sw.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    sw.add_argument("--csv")
    sw.add_argument("--json")

    cp = sub.add_parser("compare", help="compare activations on one target")
    cp.add_argument("mode", choices=("dlu-vs-relu",))
    cp.add_argument("--target", required=True)
    cp.add_argument("--degree", type=int, default=6)
    cp.add_argument("--m", type=int, default=8)
    cp.add_argument("--csv")

    r = sub.add_parser("relu", help="ReLU baseline constructions")
    rs = r.add_subparsers(dest="relu_cmd", required=True)
    rq = rs.add_parser("square")
    rq.add_argument("--m", type=int, required=True)
    rq.add_argument("-o", "--output")
    rp = rs.add_parser("product")
    rp.add_argument("--m", type=int, required=True)
    rp.add_argument("--M", type=float, default=1.0)
    rp.add_argument("-o", "--output")
    rpo = rs.add_parser("poly")
    rpo.add_argument("--coeffs", required=True)
    rpo.add_argument("--m", type=int, required=True)
    rpo.add_argument("-o", "--output")
    rb = rs.add_parser("breakpoints")
    rb.add_argument("net")
    rl = rs.add_parser("lowerbound")
    rl.add_argument("--k", type=int, required=True)
    rl.add_argument("--L", type=int, required=True)
    rl.add_argument("--W", type=int, required=True)

    rep = sub.add_parser("report", help="convert a stored report")
    rep.add_argument("input")
    rep.add_argument("--format", default="csv", choices=("json", "csv"))
    rep.add_argument("-o", "--output", required=True)
    return ap


_HANDLERS = {
    "build": _cmd_build,
    "eval": _cmd_eval,
    "audit": _cmd_audit,
    "measure": _cmd_measure,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "relu": _cmd_relu,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.cmd](args)
    except (ParameterError, DomainError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except ConstructionError as exc:
        print(f"construction error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION


if __name__ == "__main__":
    sys.exit(main())
