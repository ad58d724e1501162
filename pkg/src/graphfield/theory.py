"""Weight tables, the identities they satisfy, and the induced operations.

A :class:`WeightTable` stores one value per isomorphism class of oriented
graphs; lookups of any labeled graph return the class value times the
orientation sign.  Classes with an orientation reversing automorphism read 0.

From tables one builds

* :func:`build_mu`: ``mu_n = sum_{labeled Gamma, n vertices, 2n-3 edges} c_Gamma Phi_Gamma``
* :func:`build_morphism`: ``F_n = sum_{labeled Gamma, n vertices, 2n-2 edges} C_Gamma Phi_Gamma``
* :func:`transform_mc`: the action on Maurer-Cartan series
* :func:`wheel_series`, :func:`duflo_transform`: the wheel part of that action
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

from .graphs import (DecoratedGraph, automorphism_count, canonical_form, complete_subgraph,
                     enumerate_graphs, is_admissible, koszul_sign, ordered_partitions,
                     parse_graph, permutation_sign, quotient_graph, quotient_partition,
                     subsets_of, wheel)
from .integrator import WeightEstimate, bernoulli, weight, zeta_partial
from .polyfields import (Grading, PolyField, bivector_components, koszul_shuffle_sign, phi,
                         schouten)


# ---------------------------------------------------------------------------
# weight tables

class MissingWeight(KeyError):
    pass


class WeightTable:
    """Class values of graph weights.

    ``space`` is ``"plane"`` (weights ``c``) or ``"half-plane"`` (weights ``C``).
    ``default`` is returned for classes with no entry (``None``: raise).
    ``source`` computes missing entries on demand and caches them.
    """

    def __init__(self, family: str, space: str, default: Any = None,
                 source: Callable[[DecoratedGraph], Any] | None = None,
                 provenance: str = ""):
        self.family = family
        self.space = space
        self.default = default
        self.source = source
        self.provenance = provenance
        self.values: dict[tuple, Any] = {}
        self.errors: dict[tuple, float] = {}

    @staticmethod
    def _key(cf) -> tuple:
        return (cf.n, cf.key)

    def set(self, graph: DecoratedGraph | str, value: Any, stderr: float = 0.0) -> None:
        if isinstance(graph, str):
            graph = parse_graph(graph)
        if isinstance(value, WeightEstimate):
            stderr = value.stderr
            value = value.exact if value.exact is not None and value.method != "mc" else value.value
        cf = canonical_form(graph)
        if cf.odd:
            return
        self.values[self._key(cf)] = value * cf.sign
        self.errors[self._key(cf)] = stderr

    def _fetch(self, graph: DecoratedGraph) -> tuple[Any, float, int]:
        if self.space == "half-plane" and graph.n == 1 and graph.l == 0:
            return Fraction(graph.parity), 0.0, 1
        cf = canonical_form(graph)
        if cf.odd:
            return Fraction(0), 0.0, 1
        key = self._key(cf)
        if key not in self.values:
            if self.source is not None:
                canon = cf.graph()
                self.set(canon, self.source(canon))
            elif self.default is not None:
                return self.default, 0.0, 1
            else:
                raise MissingWeight(f"no weight for {cf.text()} in table {self.family}")
        return self.values[key], self.errors.get(key, 0.0), cf.sign

    def get(self, graph: DecoratedGraph | str) -> Any:
        if isinstance(graph, str):
            graph = parse_graph(graph)
        value, _, sign = self._fetch(graph)
        return value * sign

    def get_with_error(self, graph: DecoratedGraph | str) -> tuple[Any, float]:
        if isinstance(graph, str):
            graph = parse_graph(graph)
        value, err, sign = self._fetch(graph)
        return value * sign, err

    def __contains__(self, graph) -> bool:
        if isinstance(graph, str):
            graph = parse_graph(graph)
        cf = canonical_form(graph)
        return cf.odd or self._key(cf) in self.values

    def nonzero_classes(self) -> list[tuple[DecoratedGraph, Any]]:
        out = []
        for (n, key), v in sorted(self.values.items()):
            if v != 0:
                out.append((DecoratedGraph(n, key), v))
        return out

    def rows(self) -> list[dict]:
        out = []
        for (n, key), v in sorted(self.values.items()):
            g = DecoratedGraph(n, key)
            out.append({"graph": g.to_string(), "value": v, "stderr": self.errors.get((n, key), 0.0)})
        return out


def omega0_table(space: str = "plane") -> WeightTable:
    """Weights of ``dArg``: 1 on a single edge between two points, 0 on
    every other plane graph (the plane vanishing lemma for n >= 3)."""
    t = WeightTable("omega0", space, default=Fraction(0), provenance="analytic")
    t.set(parse_graph("2;1;1>2"), Fraction(1))
    return t


FOUR_POINT_POSITIVE = ("4;5;3>1,3>2,4>1,4>2,2>1",
                      "4;5;4>2,4>3,3>1,2>1,3>2",
                      "4;5;4>1,3>1,4>2,3>2,4>3")
FOUR_POINT_ZERO = ("4;5;4>2,4>3,4>1,2>1,3>1",
                  "4;5;4>2,4>3,4>1,2>1,3>2",
                  "4;5;3>1,4>3,4>1,2>1,3>2")

# three-vertex half-plane graphs whose weights pair with the first and third
# positive graph above through the Stokes identity (edge order matters)
GAMMA_PRIME = "3;4;3>1,1>3,2>3,2>1"
GAMMA_DOUBLE_PRIME = "3;4;1>3,3>1,3>2,1>2"


def four_point_integral() -> Fraction:
    """``pi^-5 int_pi^{2 pi} (3 pi^2 / 2 - pi x)^2 dx`` evaluated exactly."""
    import sympy
    x = sympy.symbols("x")
    val = sympy.integrate((3 * sympy.pi ** 2 / 2 - sympy.pi * x) ** 2, (x, sympy.pi, 2 * sympy.pi))
    ratio = sympy.nsimplify(sympy.simplify(val / sympy.pi ** 5))
    return Fraction(int(ratio.p), int(ratio.q))


def analytic_weight_appendix4(graph: DecoratedGraph | str) -> Fraction:
    """Closed-form outer Kontsevich weight for the six four-vertex graphs
    treated analytically; raises for other graphs."""
    if isinstance(graph, str):
        graph = parse_graph(graph)
    cf = canonical_form(graph)
    for text in FOUR_POINT_POSITIVE:
        ref = canonical_form(parse_graph(text))
        if ref.key == cf.key:
            return four_point_integral() * cf.sign * ref.sign
    for text in FOUR_POINT_ZERO:
        if canonical_form(parse_graph(text)).key == cf.key:
            return Fraction(0)
    raise ValueError(f"no closed form known for {graph}")


def shoikhet_table() -> WeightTable:
    """Outer Kontsevich weights on the plane for up to four vertices, from
    the closed forms (other entries default to 0)."""
    t = WeightTable("kontsevich-outer", "plane", default=Fraction(0), provenance="analytic")
    t.set(parse_graph("2;1;1>2"), Fraction(1))
    for text in FOUR_POINT_POSITIVE + FOUR_POINT_ZERO:
        t.set(parse_graph(text), analytic_weight_appendix4(text))
    return t


def mc_table(propagator, space: str, samples: int = 10 ** 6, seed: int | None = None,
             side: str = "outer", map: str | None = None) -> WeightTable:
    """Table that computes missing entries by Monte Carlo."""
    from .propagators import get_propagator
    prop = get_propagator(propagator) if isinstance(propagator, str) else propagator

    def source(g: DecoratedGraph):
        return weight(g, prop, space, samples=samples, seed=seed, side=side, map=map)

    label = f"{prop.name}-{side}" if space == "plane" else prop.name
    return WeightTable(label, space, source=source, provenance=f"monte carlo, N={samples:.0e}")


# ---------------------------------------------------------------------------
# identities among weights

@dataclass
class Residual:
    value: Any
    stderr: float
    terms: list[tuple[str, Any]]

    def is_zero(self, sigmas: float = 0.0, atol: float = 0.0) -> bool:
        return abs(self.value) <= max(atol, sigmas * self.stderr)


def _prod_err(vals: Sequence[tuple[Any, float]]) -> tuple[Any, float]:
    value: Any = Fraction(1)
    for v, _ in vals:
        value = value * v
    var = 0.0
    for k, (v, e) in enumerate(vals):
        if e:
            rest = 1.0
            for m, (w, _) in enumerate(vals):
                if m != k:
                    rest *= abs(complex(w))
            var += (e * rest) ** 2
    return value, math.sqrt(var)


def stokes_identity_residual(graph: DecoratedGraph | str, c_in: WeightTable, c_out: WeightTable,
                             C: WeightTable) -> Residual:
    """For a graph with ``n`` vertices and ``2n - 3`` edges,

    ``- sum_A sgn c_in(Gamma_A) C(Gamma/Gamma_A) + sum_P sgn c_out(Gamma/P) prod C(Gamma_B)``

    over admissible collapses ``A`` (``A`` may be the whole vertex set) and
    admissible partitions ``P`` with at least two blocks.
    """
    if isinstance(graph, str):
        graph = parse_graph(graph)
    n = graph.n
    if graph.l != 2 * n - 3:
        raise ValueError(f"need 2n-3 = {2 * n - 3} edges, got {graph.l}")
    total: Any = Fraction(0)
    var = 0.0
    terms: list[tuple[str, Any]] = []
    for a in subsets_of(n, 2, n):
        if not is_admissible(graph, a, "collapse-2n-3"):
            continue
        s = koszul_sign(graph, a)
        ci = c_in.get_with_error(complete_subgraph(graph, a))
        if ci[0] == 0:
            continue
        cq = C.get_with_error(quotient_graph(graph, a))
        val, err = _prod_err([ci, cq])
        total = total - s * val
        var += err ** 2
        terms.append((f"collapse {a}", -s * val))
    for part in ordered_partitions(n, 2):
        if not is_admissible(graph, part, "partition"):
            continue
        s = koszul_sign(graph, part)
        co = c_out.get_with_error(quotient_partition(graph, part))
        if co[0] == 0:
            continue
        factors = [co] + [C.get_with_error(complete_subgraph(graph, b)) for b in part]
        val, err = _prod_err(factors)
        total = total + s * val
        var += err ** 2
        terms.append((f"partition {part}", s * val))
    return Residual(total, math.sqrt(var), terms)


def structure_identity_residual(graph: DecoratedGraph | str, c: WeightTable) -> Residual:
    """``sum_A sgn c(Gamma_A) c(Gamma/Gamma_A)`` over admissible ``A``,
    ``2 <= #A <= n-1``, for a graph with ``n`` vertices and ``2n-4`` edges."""
    if isinstance(graph, str):
        graph = parse_graph(graph)
    n = graph.n
    total: Any = Fraction(0)
    var = 0.0
    terms = []
    for a in subsets_of(n, 2, n - 1):
        if not is_admissible(graph, a, "collapse-2n-4"):
            continue
        s = koszul_sign(graph, a)
        val, err = _prod_err([c.get_with_error(complete_subgraph(graph, a)),
                              c.get_with_error(quotient_graph(graph, a))])
        if val == 0:
            continue
        total = total + s * val
        var += err ** 2
        terms.append((f"collapse {a}", s * val))
    return Residual(total, math.sqrt(var), terms)


# ---------------------------------------------------------------------------
# graph sums

def labeled_support(table: WeightTable, n: int, l: int) -> list[tuple[DecoratedGraph, Any]]:
    """Labeled graphs (sorted edges, each once) with nonzero weight."""
    out = []
    if table.source is None and table.default == 0:
        for rep, val in table.nonzero_classes():
            if rep.n != n or rep.l != l:
                continue
            seen = set()
            for perm in itertools.permutations(range(1, n + 1)):
                g = rep.relabel(perm)
                order = sorted(range(l), key=lambda k: g.edges[k])
                key = tuple(g.edges[k] for k in order)
                if key in seen:
                    continue
                seen.add(key)
                lab = DecoratedGraph(n, key)
                w = table.get(lab)
                if w != 0:
                    out.append((lab, w))
        return out
    for cls in enumerate_graphs(n, l, "G", labeled=True):
        w = table.get(cls.representative)
        if w != 0:
            out.append((cls.representative, w))
    return out


def _zero_like(gammas: Sequence[PolyField]) -> PolyField:
    return PolyField.zero(gammas[0].grading)


@dataclass
class GraphOperation:
    """``op_n(g_1..g_n) = sum_Gamma w_Gamma Phi_Gamma(g_1..g_n)``."""
    terms: dict[int, list[tuple[DecoratedGraph, Any]]]
    symmetric: bool = True
    identity_arity_one: bool = False

    def __call__(self, *gammas: PolyField) -> PolyField:
        n = len(gammas)
        if n == 1 and self.identity_arity_one:
            return gammas[0]
        out = _zero_like(gammas)
        for g, w in self.terms.get(n, []):
            out = out + phi(g, gammas).scale(w)
        return out

    def arity(self, n: int) -> Callable[..., PolyField]:
        return lambda *gs: self(*gs) if len(gs) == n else _raise_arity(n, len(gs))


def _raise_arity(n: int, m: int):
    raise ValueError(f"expected {n} arguments, got {m}")


def build_mu(table: WeightTable, n_max: int) -> GraphOperation:
    terms = {n: labeled_support(table, n, 2 * n - 3) for n in range(2, n_max + 1)}
    return GraphOperation(terms, symmetric=True)


def build_morphism(table: WeightTable, n_max: int) -> GraphOperation:
    terms = {n: labeled_support(table, n, 2 * n - 2) for n in range(2, n_max + 1)}
    return GraphOperation(terms, symmetric=True, identity_arity_one=True)


def leib_infty_defect(mu: Callable[..., PolyField], gammas: Sequence[PolyField]) -> PolyField:
    """``sum_{A, #A >= 2, A != [n]} sgn mu(g_1..g_{a-1}, mu(g_A), g_rest)`` with
    ``sgn = (-1)^{sum_{k<a} |g_k|}`` times the Koszul sign of the shuffle."""
    n = len(gammas)
    degs = []
    for g in gammas:
        d = g.homogeneous_degree()
        if d is None:
            raise ValueError("arguments must be homogeneous")
        degs.append(d)
    out = _zero_like(gammas)
    for a in subsets_of(n, 2, n - 1):
        first = a[0]
        before = list(range(1, first))
        rest = [v for v in range(first + 1, n + 1) if v not in a]
        sgn = -1 if sum(degs[v - 1] for v in before) % 2 else 1
        sgn *= koszul_shuffle_sign(degs, [v - 1 for v in a], [v - 1 for v in rest])
        inner = mu(*[gammas[v - 1] for v in a])
        if inner.is_zero():
            continue
        args = [gammas[v - 1] for v in before] + [inner] + [gammas[v - 1] for v in rest]
        out = out + mu(*args).scale(sgn)
    return out


leib_infty_relation = leib_infty_defect


# ---------------------------------------------------------------------------
# hbar series

class HbarSeries:
    """Truncated power series ``sum_k hbar^k f_k`` with PolyField coefficients."""

    def __init__(self, grading: Grading, coeffs: Mapping[int, PolyField] | None = None, order: int | None = None):
        self.grading = grading
        self.order = order
        self.coeffs: dict[int, PolyField] = {}
        for k, f in (coeffs or {}).items():
            if order is not None and k > order:
                continue
            if not f.is_zero():
                self.coeffs[k] = f

    @classmethod
    def constant(cls, f: PolyField, order: int | None = None) -> "HbarSeries":
        return cls(f.grading, {0: f}, order)

    def __getitem__(self, k: int) -> PolyField:
        return self.coeffs.get(k, PolyField.zero(self.grading))

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        out = dict(self.coeffs)
        for k, f in other.coeffs.items():
            out[k] = out[k] + f if k in out else f
        return HbarSeries(self.grading, out, _min_order(self.order, other.order))

    def __sub__(self, other: "HbarSeries") -> "HbarSeries":
        return self + other.scale(-1)

    def scale(self, c: Any) -> "HbarSeries":
        return HbarSeries(self.grading, {k: f.scale(c) for k, f in self.coeffs.items()}, self.order)

    def shift(self, k: int) -> "HbarSeries":
        return HbarSeries(self.grading, {m + k: f for m, f in self.coeffs.items()},
                          None if self.order is None else self.order + k)

    def truncate(self, order: int) -> "HbarSeries":
        return HbarSeries(self.grading, self.coeffs, order)

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.coeffs.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, HbarSeries):
            return NotImplemented
        return (self - other).is_zero()

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"hbar^{k}*({f})" for k, f in sorted(self.coeffs.items()))


def _min_order(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def series_multilinear(op: Callable[..., PolyField], args: Sequence[HbarSeries], order: int) -> HbarSeries:
    """Extend a multilinear operation to series arguments, truncated at ``order``."""
    grading = args[0].grading
    out: dict[int, PolyField] = {}
    powers = [sorted(a.coeffs) for a in args]
    for combo in itertools.product(*powers):
        k = sum(combo)
        if k > order:
            continue
        val = op(*[a.coeffs[p] for a, p in zip(args, combo)])
        out[k] = out[k] + val if k in out else val
    return HbarSeries(grading, out, order)


def series_bracket(a: HbarSeries, b: HbarSeries, order: int) -> HbarSeries:
    return series_multilinear(schouten, [a, b], order)


# ---------------------------------------------------------------------------
# action on Maurer-Cartan elements

def _as_series(alpha, order: int) -> HbarSeries:
    return alpha if isinstance(alpha, HbarSeries) else HbarSeries.constant(alpha, order)


def transform_mc(table: WeightTable, alpha: PolyField | HbarSeries, order: int,
                 via: str = "classes") -> HbarSeries:
    """``F(alpha) = alpha + sum_{n>=2} hbar^{n-1} sum_Gamma C_Gamma / #Aut Phi_Gamma(alpha^n)``
    truncated at ``hbar^order``.  ``via="labeled"`` uses the equivalent sum
    ``hbar^{n-1}/n! sum_{labeled Gamma} C_Gamma Phi_Gamma``."""
    alpha = _as_series(alpha, order)
    for f in alpha.coeffs.values():
        if f.homogeneous_degree() != 2:
            raise ValueError("Maurer-Cartan candidates have degree 2")
    result = alpha.truncate(order)
    for n in range(2, order + 2):
        if via == "labeled":
            pairs = [(g, Fraction(w) / math.factorial(n) if isinstance(w, (int, Fraction)) else w / math.factorial(n))
                     for g, w in labeled_support(table, n, 2 * n - 2)]
        else:
            pairs = []
            for g, w in _class_support(table, n, 2 * n - 2):
                aut = automorphism_count(g)
                pairs.append((g, Fraction(w) / aut if isinstance(w, (int, Fraction)) else w / aut))
        for g, w in pairs:
            val = series_multilinear(lambda *gs, g=g: phi(g, gs), [alpha] * n, order - (n - 1))
            result = result + val.scale(w).shift(n - 1)
    return result.truncate(order)


def _class_support(table: WeightTable, n: int, l: int) -> list[tuple[DecoratedGraph, Any]]:
    if table.source is None and table.default == 0:
        return [(g, v) for g, v in table.nonzero_classes() if g.n == n and g.l == l]
    out = []
    for cls in enumerate_graphs(n, l, "G", labeled=False, skip_odd=True):
        w = table.get(cls.representative)
        if w != 0:
            out.append((cls.representative, w))
    return out


def mc_preservation_defect(table: WeightTable, alpha: PolyField | HbarSeries, order: int) -> HbarSeries:
    """``[F(alpha), F(alpha)]`` truncated at ``hbar^order``."""
    f = transform_mc(table, alpha, order)
    return series_bracket(f, f, order)


def quadratic_relation_defect(table: WeightTable, alpha: PolyField, n: int) -> PolyField:
    """``sum_{p+q=n} [F_p(alpha^p), F_q(alpha^q)] / (p! q!)``."""
    F = build_morphism(table, n)
    out = PolyField.zero(alpha.grading)
    for p in range(1, n):
        q = n - p
        a = F(*([alpha] * p))
        b = F(*([alpha] * q))
        out = out + schouten(a, b).scale(Fraction(1, math.factorial(p) * math.factorial(q)))
    return out


# ---------------------------------------------------------------------------
# wheels

def wheel_weight_closed_form(n: int, variant: str = "zeta"):
    """Weight of the wheel ``w_n``: ``(-1)^{n(n-1)/2} zeta(n) / (2 pi i)^n``.

    ``variant="bernoulli"`` returns the exact rational
    ``-(-1)^{n(n-1)/2} B_n / (2 n!)`` (equal for even ``n``, zero for odd
    ``n > 1``); ``variant="zeta"`` returns a complex float.  The aliases
    ``half_k`` and ``bernoulli_even`` are accepted, the latter for even ``n``
    only.
    """
    if n < 2:
        raise ValueError("wheels start at n = 2")
    if variant == "half_k":
        variant = "zeta"
    elif variant == "bernoulli_even":
        if n % 2:
            raise ValueError("bernoulli_even needs an even n")
        variant = "bernoulli"
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    if variant == "bernoulli":
        return -sign * bernoulli(n) / (2 * math.factorial(n))
    if variant == "zeta":
        return sign * zeta_partial(n) / (2j * math.pi) ** n
    raise ValueError("variant must be 'zeta' or 'bernoulli'")


def duflo_coefficient(n: int, variant: str = "bernoulli"):
    """Exponent coefficient of ``hbar^n Tr(ad^n)`` in the wheel action."""
    if variant == "bernoulli":
        return bernoulli(n) / (2 * n * math.factorial(n))
    w = wheel_weight_closed_form(n, variant)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return -sign * w / n


def wheel_union(sizes: Sequence[int]) -> DecoratedGraph:
    """Wheels with the given rim sizes sharing one center (the last vertex)."""
    total = sum(sizes)
    center = total + 1
    edges: list[tuple[int, int]] = []
    offset = 0
    for n in sizes:
        w = wheel(n)
        mapping = {k: offset + k for k in range(1, n + 1)}
        mapping[n + 1] = center
        edges.extend((mapping[s], mapping[t]) for s, t in w.edges)
        offset += n
    return DecoratedGraph(center, tuple(edges))


def wheel_phi_closed_form(n: int, gamma: PolyField) -> PolyField:
    """``-(-1)^{n(n-1)/2} 1/2 sum d^n g^{ij}/dx^{k_1..k_n} prod_a dg^{k_a l_a}/dx^{l_{a+1}} psi_i psi_j``."""
    g = gamma.grading
    d = g.d
    comps = bivector_components(gamma)
    first = {}
    for (k, l), f in comps.items():
        for m in range(1, d + 1):
            first[(k, l, m)] = f.dx(m)
    out = PolyField.zero(g)
    for ks in itertools.product(range(1, d + 1), repeat=n):
        for ls in itertools.product(range(1, d + 1), repeat=n):
            chain = PolyField.constant(g, 1)
            for a in range(n):
                chain = chain * first[(ks[a], ls[a], ls[(a + 1) % n])]
                if chain.is_zero():
                    break
            if chain.is_zero():
                continue
            for i in range(1, d + 1):
                for j in range(1, d + 1):
                    top = comps[(i, j)]
                    for k in ks:
                        top = top.dx(k)
                    if top.is_zero():
                        continue
                    out = out + top * chain * PolyField.psi(g, i) * PolyField.psi(g, j)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return out.scale(Fraction(-sign, 2))


def wheel_series(alpha: PolyField, order: int, coefficients: Mapping[int, Any] | str = "bernoulli") -> HbarSeries:
    """``alpha + sum_{n=2}^{order} hbar^n C_{w_n} / n Phi_{w_n}(alpha^{n+1})``."""
    bivector_components(alpha)
    coeffs = _wheel_coefficients(coefficients, order)
    out = {0: alpha}
    for n in range(2, order + 1):
        c = coeffs.get(n, 0)
        if c == 0:
            continue
        val = phi(wheel(n), [alpha] * (n + 1)).scale(_div(c, n))
        out[n] = out[n] + val if n in out else val
    return HbarSeries(alpha.grading, out, order)


def _div(c, n: int):
    return Fraction(c) / n if isinstance(c, (int, Fraction)) else c / n


def _wheel_coefficients(coefficients, order: int) -> dict[int, Any]:
    if isinstance(coefficients, str):
        return {n: wheel_weight_closed_form(n, coefficients) for n in range(2, order + 1)}
    return dict(coefficients)


# ---------------------------------------------------------------------------
# linear Poisson structures and the Duflo-type series

def linear_poisson(structure: Mapping[tuple[int, int, int], Any], d: int) -> PolyField:
    """``1/2 sum a^{ij}_k x^k psi_i psi_j`` from structure constants ``a[(i, j, k)]``."""
    g = Grading.even(d)
    out = PolyField.zero(g)
    for (i, j, k), c in structure.items():
        if c == 0:
            continue
        out = out + (PolyField.x(g, k) * PolyField.psi(g, i) * PolyField.psi(g, j)).scale(Fraction(c) / 2
                                                                                        if isinstance(c, int) else c / 2)
    return out


def so3_structure() -> dict[tuple[int, int, int], int]:
    eps = {}
    for i, j, k in itertools.permutations((1, 2, 3)):
        eps[(i, j, k)] = permutation_sign((i - 1, j - 1, k - 1))
    return eps


def structure_from_linear(gamma: PolyField) -> dict[tuple[int, int, int], Any]:
    d = gamma.grading.d
    comps = bivector_components(gamma)
    out = {}
    for (i, j), f in comps.items():
        for k in range(1, d + 1):
            c = f.dx(k)
            val = c.terms.get((0,) * (2 * d), 0)
            if val != 0:
                out[(i, j, k)] = val
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c != 0}


def trace_ad_symbol(structure: Mapping[tuple[int, int, int], Any], d: int, n: int) -> dict:
    """``Tr(M(xi)^n)`` with ``M(xi)^l_{l'} = sum_k xi_k a^{kl}_{l'}``, as a
    polynomial ``{exponent tuple: coefficient}`` in ``xi``."""
    M = [[{} for _ in range(d)] for _ in range(d)]
    for (k, l, lp), c in structure.items():
        e = [0] * d
        e[k - 1] = 1
        key = tuple(e)
        M[l - 1][lp - 1][key] = M[l - 1][lp - 1].get(key, 0) + c
    P = [[{(0,) * d: Fraction(1)} if a == b else {} for b in range(d)] for a in range(d)]
    for _ in range(n):
        Q = [[{} for _ in range(d)] for _ in range(d)]
        for a in range(d):
            for b in range(d):
                acc: dict = {}
                for m in range(d):
                    for mono, c in _poly_mul(P[a][m], M[m][b]).items():
                        acc[mono] = acc.get(mono, 0) + c
                Q[a][b] = {mo: c for mo, c in acc.items() if c != 0}
        P = Q
    tr: dict = {}
    for a in range(d):
        for mono, c in P[a][a].items():
            tr[mono] = tr.get(mono, 0) + c
    return {m: c for m, c in tr.items() if c != 0}


def apply_symbol(symbol: Mapping[tuple[int, ...], Any], f: PolyField) -> PolyField:
    """Replace ``xi_k`` by ``d/dx^k`` and apply to ``f``."""
    out = PolyField.zero(f.grading)
    for mono, c in symbol.items():
        g = f
        for k, e in enumerate(mono, start=1):
            for _ in range(e):
                g = g.dx(k)
        out = out + g.scale(c)
    return out


def duflo_transform(gamma2: PolyField, gamma0: PolyField, order: int,
                    variant: str = "bernoulli", route: str = "trace") -> HbarSeries:
    """Image of ``gamma2 + gamma0`` (linear Poisson plus a function).

    ``route="trace"``: ``gamma2 + exp(sum_n c_n hbar^n Tr(ad^n)) gamma0``.
    ``route="wheels"``: sum over unions of wheels sharing the center
    (the center carries ``gamma0``) with weights ``prod C_{w_n}`` and
    automorphism factors.
    """
    d = gamma2.grading.d
    for comp in bivector_components(gamma2).values():
        if any(sum(m) != 1 for m in comp.terms):
            raise ValueError("gamma2 must be linear in x")
    if not schouten(gamma2, gamma0).is_zero():
        raise ValueError("gamma0 is not invariant: [gamma2, gamma0] != 0")
    if route == "trace":
        structure = structure_from_linear(gamma2)
        exponent = {n: duflo_coefficient(n, variant) for n in range(2, order + 1)}
        symbols = {n: trace_ad_symbol(structure, d, n) for n in exponent}
        # exp of a sum of commuting operators, truncated
        terms = {0: gamma0}
        current = {0: gamma0}
        for m in range(1, order // 2 + 1):
            nxt: dict[int, PolyField] = {}
            for k, f in current.items():
                for n, c in exponent.items():
                    if k + n > order or c == 0:
                        continue
                    val = apply_symbol(symbols[n], f).scale(_div(c, m))
                    nxt[k + n] = nxt[k + n] + val if k + n in nxt else val
            for k, f in nxt.items():
                terms[k] = terms[k] + f if k in terms else f
            current = nxt
        series = HbarSeries(gamma2.grading, terms, order)
        return series + HbarSeries.constant(gamma2, order)
    if route != "wheels":
        raise ValueError("route must be 'trace' or 'wheels'")
    weights = {n: wheel_weight_closed_form(n, variant) for n in range(2, order + 1)}
    field_ = gamma2 + gamma0
    out = {0: field_}
    for sizes in _wheel_partitions(order):
        total = sum(sizes)
        w: Any = Fraction(1)
        for s in sizes:
            w = w * weights[s]
        if w == 0:
            continue
        aut = 1
        for s in sizes:
            aut *= s
        for s in set(sizes):
            aut *= math.factorial(sizes.count(s))
        g = wheel_union(sizes)
        val = phi(g, [field_] * g.n).scale(_div(w, aut))
        out[total] = out[total] + val if total in out else val
    return HbarSeries(gamma2.grading, out, order)


def _wheel_partitions(order: int) -> list[tuple[int, ...]]:
    """Multisets of rim sizes >= 2 with total at most ``order``."""
    out = []

    def rec(prefix: list[int], smallest: int, left: int):
        if prefix:
            out.append(tuple(prefix))
        for s in range(smallest, left + 1):
            rec(prefix + [s], s, left - s)

    rec([], 2, order)
    return out


# ---------------------------------------------------------------------------
# tetrahedral flow

def tetrahedron_flow(alpha: PolyField, include_second_term: bool = True) -> PolyField:
    """Quartic graph flow on bivectors.

    First term:  ``d^3 a^{ij}/dx^k dx^l dx^m  da^{kk'}/dx^{l'} da^{ll'}/dx^{m'} da^{mm'}/dx^{k'} psi_i psi_j``
    Second term: ``4/3 d^2 a^{im}/dx^k dx^l  da^{kk'}/dx^{l'} da^{ll'}/dx^{m'} d^2 a^{jm'}/dx^{k'} dx^m psi_i psi_j``
    """
    g = alpha.grading
    d = g.d
    A = bivector_components(alpha)
    idx = range(1, d + 1)
    D1 = {(i, j, k): A[(i, j)].dx(k) for i in idx for j in idx for k in idx}
    D2 = {(i, j, k, l): D1[(i, j, k)].dx(l) for i in idx for j in idx for k in idx for l in idx}
    out = PolyField.zero(g)
    for k, l, m, kp, lp, mp in itertools.product(idx, repeat=6):
        mid = D1[(k, kp, lp)] * D1[(l, lp, mp)]
        if mid.is_zero():
            continue
        tri = mid * D1[(m, mp, kp)]
        if not tri.is_zero():
            for i in idx:
                for j in idx:
                    top = D2[(i, j, k, l)].dx(m)
                    if top.is_zero():
                        continue
                    out = out + top * tri * PolyField.psi(g, i) * PolyField.psi(g, j)
        if include_second_term:
            for i in idx:
                left = D2[(i, m, k, l)]
                if left.is_zero():
                    continue
                for j in idx:
                    right = D2[(j, mp, kp, m)]
                    if right.is_zero():
                        continue
                    term = left * mid * right * PolyField.psi(g, i) * PolyField.psi(g, j)
                    out = out + term.scale(Fraction(4, 3))
    return out
