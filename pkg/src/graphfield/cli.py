"""Command line front end.

Every command writes one document to stdout (``--format json|csv|text``)
and exits with 0 on success, 1 when a verification fails and 2 on a usage
error.  Options may also come from a JSON file given by ``--config``; the
keys are the long option names (``max-arity`` or ``max_arity``).  Explicit
flags win over the file, and the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from fractions import Fraction
from typing import Any, Callable

from . import faceoperad, graphs, integrator, polyfields, propagators, theory
from .graphs import DecoratedGraph, parse_graph
from .polyfields import Grading, PolyField, format_polyfield, parse_polyfield

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsing

def parse_count(text: str | int | float) -> int:
    """``1e7``, ``10000000`` or ``2.5e6`` -> int."""
    if isinstance(text, int):
        return text
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"not a sample count: {text!r}") from None
    if value <= 0 or value != int(value):
        raise UsageError(f"sample count must be a positive integer, got {text!r}")
    return int(value)


SPACE_ALIASES = {"cn": "plane", "plane": "plane", "cn0": "half-plane", "cn,0": "half-plane",
                 "half-plane": "half-plane", "halfplane": "half-plane"}


def parse_space(text: str) -> str:
    try:
        return SPACE_ALIASES[text.strip().lower()]
    except KeyError:
        raise UsageError(f"unknown space {text!r}; use Cn or Cn0") from None


def parse_propagator(text: str, t: float | None = None) -> tuple[propagators.Propagator, str | None]:
    """``kontsevich``, ``kontsevich-outer``, ``family_t:0.3-inner`` ..."""
    side = None
    for suffix in ("-outer", "-inner"):
        if text.endswith(suffix):
            text, side = text[: -len(suffix)], suffix[1:]
    try:
        return propagators.get_propagator(text, t), side
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_grading(text: str | None, d: int) -> Grading:
    if not text:
        return Grading.even(d)
    try:
        degs = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"grading must be comma separated integers, got {text!r}") from None
    return Grading(degs)


def parse_field(text: str, grading: Grading) -> PolyField:
    try:
        return parse_polyfield(text, grading)
    except ValueError as exc:
        raise UsageError(f"bad polyvector field {text!r}: {exc}") from None


def graph_arg(text: str | None) -> DecoratedGraph:
    if not text:
        raise UsageError("--graph is required")
    try:
        return parse_graph(text)
    except ValueError as exc:
        raise UsageError(f"malformed graph {text!r}: {exc}") from None


def _num(v: Any) -> Any:
    """JSON-friendly number: exact rationals as strings, complex as pairs."""
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, complex):
        return [v.real, v.imag] if v.imag else v.real
    if hasattr(v, "item"):
        return _num(v.item())
    return v


def estimate_record(est: integrator.WeightEstimate, **extra: Any) -> dict:
    v = complex(est.value)
    rec = dict(extra)
    rec.update({
        "samples": est.samples,
        "shards": est.shards,
        "seed": est.seed,
        "value_re": v.real,
        "value_im": v.imag,
        "std_error": est.stderr,
        "rejected_samples": est.rejected,
        "method": est.method,
    })
    return rec


# ---------------------------------------------------------------------------
# tables

def load_table(args: argparse.Namespace, space: str) -> theory.WeightTable:
    """``--table omega0|shoikhet|zero`` or ``--table-file rows.json`` or a
    Monte Carlo table from ``--propagator``.

    A table file is a list of ``{graph, value}`` rows, or an object with
    ``rows`` and an optional ``default``; without a default, graphs missing
    from the file are an error.
    """
    if args.table_file:
        try:
            with open(args.table_file) as fh:
                rows = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read table: {exc}") from None
        default = None
        if isinstance(rows, dict):
            if rows.get("default") is not None:
                default = Fraction(rows["default"])
            rows = rows.get("rows", [])
        table = theory.WeightTable("file", space, default=default, provenance=args.table_file)
        for row in rows:
            value = row["value"]
            value = Fraction(value) if isinstance(value, (str, int)) else value
            table.set(graph_arg(row["graph"]), value, float(row.get("std_error", 0.0)))
        return table
    name = args.table
    if name == "omega0":
        return theory.omega0_table(space)
    if name == "shoikhet":
        return theory.shoikhet_table()
    if name == "zero":
        return theory.WeightTable("zero", space, default=Fraction(0), provenance="zero")
    if name == "mc":
        prop, side = parse_propagator(args.propagator, args.t)
        return theory.mc_table(prop, space, samples=args.samples, seed=args.seed,
                               side=side or "outer", map=args.map)
    raise UsageError(f"unknown table {name!r}")


# ---------------------------------------------------------------------------
# commands

def cmd_graphs(args) -> tuple[dict, int]:
    mode = {"directed": "G", "undirected": "B"}.get(args.mode, args.mode)
    classes = graphs.enumerate_graphs(args.n, args.l, mode, labeled=not args.unlabeled)
    rows = []
    for cls in classes:
        g = cls.representative
        rows.append({"graph": g.to_string(),
                     "automorphisms": graphs.automorphism_count(g) if g.directed else None})
    return {"command": "graphs", "n": args.n, "l": args.l, "mode": mode,
            "count": len(rows), "rows": rows}, EXIT_OK


def cmd_operad_ddcheck(args) -> tuple[dict, int]:
    rep = faceoperad.check_d_squared(args.max_arity)
    quotient = faceoperad.leibniz_quotient_check(3)
    ok = rep.passed and quotient.in_ideal
    doc = {"command": "operad-ddcheck", "max_arity": args.max_arity,
           "generators_checked": rep.n_checked, "d_squared_zero": rep.passed,
           "witness": list(rep.witness) if rep.witness else None,
           "leibniz_relation": faceoperad.format_sum(quotient.relation),
           "quotient_image": faceoperad.format_sum(quotient.image),
           "quotient_in_ideal": quotient.in_ideal, "passed": ok}
    return doc, EXIT_OK if ok else EXIT_FAIL


def _weight_of(args, g: DecoratedGraph) -> integrator.WeightEstimate:
    prop, side = parse_propagator(args.propagator, args.t)
    space = parse_space(args.space)
    if prop.inner.singular and not args.experimental_singular:
        raise UsageError(f"{prop.name} is singular on collapsing points; pass --experimental-singular")
    return integrator.weight(g, prop, space, samples=args.samples, seed=args.seed,
                             side=side or args.side, map=args.map, shards=args.shards,
                             workers=args.workers)


def cmd_weight(args) -> tuple[dict, int]:
    g = graph_arg(args.graph)
    est = _weight_of(args, g)
    space = parse_space(args.space)
    mode = None if space == "plane" else (args.map or parse_propagator(args.propagator, args.t)[0].default_map)
    return estimate_record(est, command="weight", graph=g.to_string(), propagator=args.propagator,
                           space=space, map=mode), EXIT_OK


def cmd_weight_table(args) -> tuple[dict, int]:
    space = parse_space(args.space)
    l = args.l if args.l is not None else integrator.space_dimension(space, args.n)
    rows = []
    for cls in graphs.enumerate_graphs(args.n, l, "G", labeled=False, skip_odd=True):
        est = _weight_of(args, cls.representative)
        rows.append(estimate_record(est, graph=cls.representative.to_string()))
    return {"command": "weight-table", "propagator": args.propagator, "space": space,
            "n": args.n, "l": l, "rows": rows}, EXIT_OK


def _fields(args, grading: Grading) -> list[PolyField]:
    return [parse_field(f, grading) for f in (args.field or [])]


def cmd_schouten(args) -> tuple[dict, int]:
    grading = parse_grading(args.grading, args.dim)
    fs = _fields(args, grading)
    if len(fs) != 2:
        raise UsageError("schouten needs exactly two --field arguments")
    out = polyfields.schouten(fs[0], fs[1])
    return {"command": "schouten", "inputs": [format_polyfield(f) for f in fs],
            "result": format_polyfield(out)}, EXIT_OK


def cmd_phi(args) -> tuple[dict, int]:
    grading = parse_grading(args.grading, args.dim)
    g = graph_arg(args.graph)
    fs = _fields(args, grading)
    try:
        out = polyfields.phi_sym(g, fs) if not g.directed else polyfields.phi(g, fs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return {"command": "phi", "graph": g.to_string(), "inputs": [format_polyfield(f) for f in fs],
            "result": format_polyfield(out)}, EXIT_OK


def _manifest(op: theory.GraphOperation, n: int) -> list[dict]:
    return [{"graph": g.to_string(), "weight": _num(w)} for g, w in op.terms.get(n, [])]


def cmd_mu(args) -> tuple[dict, int]:
    grading = parse_grading(args.grading, args.dim)
    fs = _fields(args, grading)
    if len(fs) < 2:
        raise UsageError("mu needs at least two --field arguments")
    table = load_table(args, "plane")
    mu = theory.build_mu(table, len(fs))
    out = mu(*fs)
    return {"command": "mu", "arity": len(fs), "table": table.family,
            "graphs": _manifest(mu, len(fs)), "result": format_polyfield(out)}, EXIT_OK


def cmd_morphism(args) -> tuple[dict, int]:
    grading = parse_grading(args.grading, args.dim)
    fs = _fields(args, grading)
    if not fs:
        raise UsageError("morphism needs at least one --field argument")
    table = load_table(args, "half-plane")
    F = theory.build_morphism(table, len(fs))
    out = F(*fs)
    return {"command": "morphism", "arity": len(fs), "table": table.family,
            "graphs": _manifest(F, len(fs)), "result": format_polyfield(out)}, EXIT_OK


def _series_doc(s: theory.HbarSeries) -> dict:
    return {str(k): format_polyfield(f) for k, f in sorted(s.coeffs.items())}


def cmd_transform(args) -> tuple[dict, int]:
    grading = parse_grading(args.grading, args.dim)
    fs = _fields(args, grading)
    if len(fs) != 1:
        raise UsageError("transform needs exactly one --field (the bivector alpha)")
    table = load_table(args, "half-plane")
    try:
        image = theory.transform_mc(table, fs[0], args.order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    defect = theory.series_bracket(image, image, args.order)
    flat = defect.is_zero()
    doc = {"command": "transform", "order": args.order, "table": table.family,
           "image": _series_doc(image), "bracket_defect": _series_doc(defect),
           "maurer_cartan": flat}
    status = EXIT_OK if (flat or not args.check) else EXIT_FAIL
    return doc, status


def _duflo_inputs(args) -> tuple[PolyField, PolyField]:
    if args.algebra == "so3":
        g2 = theory.linear_poisson(theory.so3_structure(), 3)
        gamma0 = args.gamma0 or "x1^2 + x2^2 + x3^2"
        return g2, parse_field(gamma0, g2.grading)
    if not args.gamma2 or not args.gamma0:
        raise UsageError("give --algebra so3 or both --gamma2 and --gamma0")
    grading = parse_grading(args.grading, args.dim)
    return parse_field(args.gamma2, grading), parse_field(args.gamma0, grading)


def cmd_duflo(args) -> tuple[dict, int]:
    g2, g0 = _duflo_inputs(args)
    routes = ("trace", "wheels") if args.route == "both" else (args.route,)
    results = {}
    try:
        for r in routes:
            results[r] = theory.duflo_transform(g2, g0, args.order, args.variant, route=r)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"command": "duflo", "order": args.order, "variant": args.variant,
           "gamma2": format_polyfield(g2), "gamma0": format_polyfield(g0),
           "exponent": {str(n): _num(theory.duflo_coefficient(n, args.variant))
                        for n in range(2, args.order + 1)}}
    for r, s in results.items():
        doc[r] = _series_doc(s)
    status = EXIT_OK
    if len(results) == 2:
        agree = results["trace"] == results["wheels"]
        doc["routes_agree"] = agree
        status = EXIT_OK if agree else EXIT_FAIL
    return doc, status


def cmd_flow(args) -> tuple[dict, int]:
    if args.algebra == "so3" and not args.field:
        alpha = theory.linear_poisson(theory.so3_structure(), 3)
    else:
        fs = _fields(args, parse_grading(args.grading, args.dim))
        if len(fs) != 1:
            raise UsageError("flow needs one --field or --algebra so3")
        alpha = fs[0]
    try:
        second = theory.tetrahedron_flow(alpha) - theory.tetrahedron_flow(alpha, False)
        flow = theory.tetrahedron_flow(alpha, not args.first_term_only)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tangent = polyfields.schouten(alpha, flow)
    doc = {"command": "flow", "alpha": format_polyfield(alpha), "flow": format_polyfield(flow),
           "second_term": format_polyfield(second), "bracket_with_alpha": format_polyfield(tangent),
           "tangent": tangent.is_zero()}
    return doc, EXIT_FAIL if args.check and not tangent.is_zero() else EXIT_OK


def cmd_zeta(args) -> tuple[dict, int]:
    if args.n < 2:
        raise UsageError("the box integral diverges for n < 2")
    est = integrator.zeta_box_integral(args.n, args.samples, args.seed, args.shards,
                                       workers=args.workers)
    series = integrator.zeta_partial(args.n)
    rel = abs(est.value - series) / series
    doc = estimate_record(est, command="zeta", n=args.n, series=series, relative_error=rel)
    return doc, EXIT_OK


# verification commands --------------------------------------------------

def verify_stokes(max_n: int = 4) -> dict:
    """Weight identities of the dArg theory: the structure identity on
    ``n`` vertices and ``2n - 4`` edges, and the boundary identity on
    ``2n - 3`` edges with the same table inside and outside."""
    w = theory.omega0_table("plane")
    rows = []
    for n in range(3, max_n + 1):
        for cls in graphs.enumerate_graphs(n, 2 * n - 4, "G", labeled=True):
            r = theory.structure_identity_residual(cls.representative, w)
            rows.append({"identity": "structure", "graph": cls.representative.to_string(),
                         "residual": _num(r.value), "zero": r.value == 0})
    return {"rows": rows, "passed": all(r["zero"] for r in rows), "checked": len(rows)}


def verify_gluings(max_edges: int = 3, d: int = 2, seed: int = 0) -> dict:
    """Graph operator composition on every pair of graphs and insertion set
    with at most ``max_edges`` edges in total."""
    import random
    rng = random.Random(seed)
    grading = Grading.even(d)
    rows = []
    for n1 in range(1, 4):
        for n2 in range(2, 4):
            n = n1 + n2 - 1
            for l1 in range(0, max_edges + 1):
                for l2 in range(0, max_edges + 1 - l1):
                    if n1 == 1 and l1:
                        continue
                    outers = [c.representative for c in graphs.enumerate_graphs(n1, l1, "G", labeled=False)]
                    inners = [c.representative for c in graphs.enumerate_graphs(n2, l2, "G", labeled=False)]
                    for outer, inner in itertools.product(outers, inners):
                        for a in itertools.combinations(range(1, n + 1), n2):
                            gammas = [polyfields.random_polyfield(rng, grading, rng.randint(0, 2), 2, 3)
                                      for _ in range(n)]
                            defect = polyfields.composition_identity_check(outer, inner, a, gammas)
                            rows.append({"outer": outer.to_string(), "inner": inner.to_string(),
                                         "subset": list(a), "zero": defect.is_zero()})
    return {"rows": rows, "passed": all(r["zero"] for r in rows), "checked": len(rows)}


def cmd_verify_stokes(args) -> tuple[dict, int]:
    ids = verify_stokes(args.max_n)
    glue = verify_gluings(3, seed=args.seed if args.seed is not None else 0)
    ok = ids["passed"] and glue["passed"]
    doc = {"command": "verify-stokes", "max_n": args.max_n,
           "identities_checked": ids["checked"], "identities_zero": ids["passed"],
           "gluings_checked": glue["checked"], "gluings_zero": glue["passed"],
           "failures": [r for r in ids["rows"] + glue["rows"] if not r["zero"]], "passed": ok}
    return doc, EXIT_OK if ok else EXIT_FAIL


def _within(est: integrator.WeightEstimate, target: float, rel: float, sigmas: float) -> bool:
    return abs(complex(est.value) - target) <= max(rel * abs(target), sigmas * est.stderr)


def cmd_verify_appendix4(args) -> tuple[dict, int]:
    rows = []
    ok = True
    exact_ok = True
    for text in theory.FOUR_POINT_POSITIVE + theory.FOUR_POINT_ZERO:
        exact = theory.analytic_weight_appendix4(text)
        target = Fraction(1, 12) if text in theory.FOUR_POINT_POSITIVE else Fraction(0)
        exact_ok &= exact == target
        row = {"graph": text, "analytic": _num(exact), "expected": _num(target)}
        if args.samples:
            est = integrator.weight(text, "kontsevich", "plane", samples=args.samples, seed=args.seed,
                                    shards=args.shards, workers=args.workers)
            passed = _within(est, float(target), 0.02 if target else 0.0, 3.0)
            row.update(value=est.real, std_error=est.stderr, samples=est.samples, mc_ok=passed)
            ok &= passed
        rows.append(row)
    doc = {"command": "verify-appendix4", "seed": args.seed, "rows": rows, "analytic_ok": exact_ok}
    ok &= exact_ok
    if args.samples and args.relations:
        rel = four_point_relations(args.samples, args.seed, args.shards, args.workers)
        doc["relations"] = rel["rows"]
        ok &= rel["passed"]
    doc["passed"] = ok
    return doc, EXIT_OK if ok else EXIT_FAIL


def four_point_relations(samples: int, seed: int | None, shards: int = 1, workers: int = 1,
                        sigmas: float = 3.0) -> dict:
    """Outer plane weights against half-plane weights of the two
    three-vertex graphs (Kontsevich propagator, renormalized map)."""
    g1, g2, g3 = theory.FOUR_POINT_POSITIVE
    kw = dict(samples=samples, seed=seed, shards=shards, workers=workers)
    c1, c2, c3 = (integrator.weight(g, "kontsevich", "plane", **kw) for g in (g1, g2, g3))
    cp = integrator.weight(theory.GAMMA_PRIME, "kontsevich", "half-plane", map="renormalized", **kw)
    cpp = integrator.weight(theory.GAMMA_DOUBLE_PRIME, "kontsevich", "half-plane", map="renormalized", **kw)

    def row(name, lhs, rhs, err):
        diff = float(lhs - rhs)
        return {"relation": name, "lhs": float(lhs), "rhs": float(rhs), "difference": diff,
                "combined_error": err, "holds": abs(diff) <= sigmas * err}

    rows = [
        row("c2 = (c1 + c3)/2", c2.real, (c1.real + c3.real) / 2,
            math.hypot(c2.stderr, c1.stderr / 2, c3.stderr / 2)),
        row("c1 = 2 C'", c1.real, 2 * cp.real, math.hypot(c1.stderr, 2 * cp.stderr)),
        row("c3 = 2 C''", c3.real, 2 * cpp.real, math.hypot(c3.stderr, 2 * cpp.stderr)),
        row("c2 = C' + C''", c2.real, cp.real + cpp.real, math.hypot(c2.stderr, cp.stderr, cpp.stderr)),
    ]
    return {"rows": rows, "passed": all(r["holds"] for r in rows)}


def verify_wheels(samples: int, seed: int | None, shards: int = 1, workers: int = 1) -> dict:
    rows = []
    for n in (2, 4, 6):
        z = theory.wheel_weight_closed_form(n, "zeta")
        b = theory.wheel_weight_closed_form(n, "bernoulli")
        rows.append({"check": f"closed forms n={n}", "zeta": _num(complex(z)), "bernoulli": _num(b),
                     "holds": abs(z - float(b)) < 1e-12})
    rows.append({"check": "n=2 equals 1/24",
                 "holds": theory.wheel_weight_closed_form(2, "bernoulli") == Fraction(1, 24)})
    z3 = theory.wheel_weight_closed_form(3, "zeta")
    rows.append({"check": "n=3 purely imaginary", "zeta": _num(complex(z3)),
                 "holds": z3.real == 0 and abs(z3) > 0})
    g2 = theory.linear_poisson(theory.so3_structure(), 3)
    g0 = parse_polyfield("x1^2 + x2^2 + x3^2", g2.grading)
    g0 = g0 * g0
    tr = theory.duflo_transform(g2, g0, 4, "bernoulli", route="trace")
    wh = theory.duflo_transform(g2, g0, 4, "bernoulli", route="wheels")
    rows.append({"check": "so3 trace route = wheel route through hbar^4", "holds": tr == wh})
    rows.append({"check": "hbar^2 exponent coefficient = 1/48",
                 "value": _num(theory.duflo_coefficient(2)),
                 "holds": theory.duflo_coefficient(2) == Fraction(1, 48)})
    if samples:
        est = integrator.weight(graphs.wheel(2), "half_k_anti", "half-plane", samples=samples,
                                seed=seed, shards=shards, workers=workers)
        rows.append(estimate_record(est, check="MC wheel n=2, half_k_anti, plain map, 5% of 1/24",
                                    holds=_within(est, 1 / 24, 0.05, 0.0)))
    return {"rows": rows, "passed": all(r["holds"] for r in rows)}


def cmd_verify_wheels(args) -> tuple[dict, int]:
    res = verify_wheels(args.samples if args.mc else 0, args.seed, args.shards, args.workers)
    return {"command": "verify-wheels", "rows": res["rows"], "passed": res["passed"]}, \
        EXIT_OK if res["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument handling

DEFAULTS: dict[str, Any] = {
    "format": "json", "seed": None, "samples": 10 ** 6, "shards": 1, "workers": 1,
    "dim": 2, "grading": None, "order": 2, "tolerance": 1e-12, "propagator": "kontsevich",
    "space": "half-plane", "side": "outer", "map": None, "t": None, "graph": None, "field": None,
    "n": 3, "l": None, "mode": "G", "unlabeled": False, "max_arity": 5, "table": "omega0",
    "table_file": None, "check": False, "algebra": None, "gamma2": None, "gamma0": None,
    "variant": "bernoulli", "route": "both", "first_term_only": False, "max_n": 4,
    "relations": False, "mc": False, "experimental_singular": False,
}

COMMANDS: dict[str, Callable] = {
    "graphs": cmd_graphs,
    "operad-ddcheck": cmd_operad_ddcheck,
    "weight": cmd_weight,
    "weight-table": cmd_weight_table,
    "schouten": cmd_schouten,
    "phi": cmd_phi,
    "mu": cmd_mu,
    "morphism": cmd_morphism,
    "transform": cmd_transform,
    "duflo": cmd_duflo,
    "flow": cmd_flow,
    "zeta": cmd_zeta,
    "verify-stokes": cmd_verify_stokes,
    "verify-appendix4": cmd_verify_appendix4,
    "verify-wheels": cmd_verify_wheels,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with option defaults")
    p.add_argument("--format", choices=("json", "csv", "text"), default=S)
    p.add_argument("--seed", type=int, default=S, help="default: $GRAPHFIELD_SEED or a fixed seed")
    p.add_argument("--samples", default=S, help="sample count, scientific notation allowed")
    p.add_argument("--shards", type=int, default=S)
    p.add_argument("--workers", type=int, default=S, help="threads running shards")
    p.add_argument("--tolerance", type=float, default=S)


def _algebra_opts(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("-d", "--dim", type=int, default=S)
    p.add_argument("--grading", default=S, help="comma separated degrees of x^1..x^d")
    p.add_argument("--field", action="append", default=S, help="polyvector field, repeatable")


def _table_opts(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--table", choices=("omega0", "shoikhet", "zero", "mc"), default=S)
    p.add_argument("--table-file", default=S, help="JSON rows {graph, value}")
    p.add_argument("--propagator", default=S)
    p.add_argument("--t", type=float, default=S)
    p.add_argument("--map", choices=propagators.MAPS, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="graphfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("graphs", help="enumerate graph classes")
    _common(p)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--l", type=int, default=S)
    p.add_argument("--mode", choices=("G", "fG", "B", "directed", "undirected"), default=S)
    p.add_argument("--unlabeled", action="store_true", default=S)

    p = sub.add_parser("operad-ddcheck", help="check d^2 = 0 on corollas")
    _common(p)
    p.add_argument("--max-arity", type=int, default=S)

    for name in ("weight", "weight-table"):
        p = sub.add_parser(name, help="Monte Carlo graph weight" if name == "weight" else "weights of a family")
        _common(p)
        p.add_argument("--graph", default=S)
        p.add_argument("--n", type=int, default=S)
        p.add_argument("--l", type=int, default=S)
        p.add_argument("--propagator", default=S)
        p.add_argument("--t", type=float, default=S)
        p.add_argument("--space", default=S, help="Cn (plane) or Cn0 (half-plane)")
        p.add_argument("--side", choices=("inner", "outer"), default=S)
        p.add_argument("--map", choices=propagators.MAPS, default=S)
        p.add_argument("--experimental-singular", action="store_true", default=S,
                       help="allow the half propagators (convergence not guaranteed)")

    for name in ("schouten", "phi"):
        p = sub.add_parser(name)
        _common(p)
        _algebra_opts(p)
        if name == "phi":
            p.add_argument("--graph", default=S)

    for name in ("mu", "morphism", "transform"):
        p = sub.add_parser(name)
        _common(p)
        _algebra_opts(p)
        _table_opts(p)
        if name == "transform":
            p.add_argument("--order", type=int, default=S)
            p.add_argument("--check", action="store_true", default=S,
                           help="exit 1 unless the image is Maurer-Cartan")

    p = sub.add_parser("duflo")
    _common(p)
    _algebra_opts(p)
    p.add_argument("--algebra", choices=("so3",), default=S)
    p.add_argument("--gamma2", default=S)
    p.add_argument("--gamma0", default=S)
    p.add_argument("--order", type=int, default=S)
    p.add_argument("--variant", choices=("bernoulli", "zeta"), default=S)
    p.add_argument("--route", choices=("trace", "wheels", "both"), default=S)

    p = sub.add_parser("flow", help="tetrahedral flow of a bivector")
    _common(p)
    _algebra_opts(p)
    p.add_argument("--algebra", choices=("so3",), default=S)
    p.add_argument("--first-term-only", action="store_true", default=S)
    p.add_argument("--check", action="store_true", default=S)

    p = sub.add_parser("zeta", help="box integral for zeta(n)")
    _common(p)
    p.add_argument("--n", type=int, default=S)

    p = sub.add_parser("verify-stokes")
    _common(p)
    p.add_argument("--max-n", type=int, default=S)

    p = sub.add_parser("verify-appendix4")
    _common(p)
    p.add_argument("--relations", action="store_true", default=S)

    p = sub.add_parser("verify-wheels")
    _common(p)
    p.add_argument("--mc", action="store_true", default=S)
    return parser


def resolve(argv: list[str] | None) -> argparse.Namespace:
    """Parse flags, then fill gaps from the config file and the defaults."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if not getattr(ns, "command", None):
        raise UsageError(f"choose a command: {', '.join(COMMANDS)}")
    given = vars(ns)
    merged = dict(DEFAULTS)
    if given.get("config"):
        try:
            with open(given["config"]) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {k!r}")
            merged[key] = v
    merged.update({k: v for k, v in given.items() if k != "config"})
    out = argparse.Namespace(**merged)
    out.samples = parse_count(out.samples)
    if out.seed is None:
        out.seed = integrator.default_seed()
    if out.tolerance <= 0:
        raise UsageError("tolerance must be positive")
    if isinstance(out.field, str):
        out.field = [out.field]
    return out


# ---------------------------------------------------------------------------
# output

def _flatten(doc: dict) -> list[dict]:
    if isinstance(doc.get("rows"), list) and doc["rows"]:
        top = {k: v for k, v in doc.items() if not isinstance(v, (list, dict))}
        return [{**top, **{k: v for k, v in r.items()}} for r in doc["rows"]]
    return [{k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in doc.items()}]


def _fmt_scalar(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=False, default=_num) + "\n"
    if fmt == "csv":
        rows = _flatten(doc)
        keys: list[str] = []
        for r in rows:
            keys.extend(k for k in r if k not in keys)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
        return buf.getvalue()
    lines = []
    for k, v in doc.items():
        if k == "value_re":
            val = complex(doc["value_re"], doc.get("value_im", 0.0))
            shown = f"{val.real:.6g}" if not val.imag else f"{val.real:.6g}{val.imag:+.6g}i"
            lines.append(f"value: {shown} +/- {doc['std_error']:.2g} "
                         f"(samples {doc['samples']:.1e}, seed {doc['seed']}, shards {doc['shards']})")
        elif k in ("value_im", "std_error"):
            continue
        elif k == "rows":
            for r in v:
                lines.append("  " + "  ".join(f"{a}={_fmt_scalar(b)}" for a, b in r.items()))
        elif isinstance(v, dict):
            lines.append(f"{k}:")
            lines.extend(f"  {a}: {_fmt_scalar(b)}" for a, b in v.items())
        else:
            lines.append(f"{k}: {_fmt_scalar(v)}")
    return "\n".join(lines) + "\n"


def run(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    fmt = "json"
    try:
        args = resolve(argv)
        fmt = args.format
        doc, status = COMMANDS[args.command](args)
    except UsageError as exc:
        out.write(render({"error": str(exc), "status": EXIT_USAGE}, fmt))
        return EXIT_USAGE
    except theory.MissingWeight as exc:
        out.write(render({"error": f"missing table entry: {exc}", "status": EXIT_USAGE}, fmt))
        return EXIT_USAGE
    except ValueError as exc:
        out.write(render({"error": str(exc), "status": EXIT_USAGE}, fmt))
        return EXIT_USAGE
    out.write(render(doc, fmt))
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
