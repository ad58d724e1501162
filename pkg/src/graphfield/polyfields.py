"""Polynomial polyvector fields on a graded vector space.

Coordinates are ``x^1..x^d`` and the dual odd-shifted ``psi_1..psi_d`` with
``|psi_a| = 1 - |x^a|``.  A :class:`PolyField` is a finite sum of monomials
with exact coefficients (``Fraction`` by default; any ring type with ``+``,
``*`` and ``== 0`` works, e.g. sympy numbers).

Variables of odd degree anticommute.  Derivatives act from the left.

Graph operators: for a directed graph on ``n`` vertices every vertex gets its
own copy of the coordinates, each edge ``i -> j`` acts by
``sum_a d/dx_(j)^a d/dpsi_(i)a`` (operators applied in stored edge order,
the first edge outermost) and the copies are identified at the end.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

from .graphs import DecoratedGraph

Monomial = tuple[int, ...]


def _is_zero(c: Any) -> bool:
    try:
        return bool(c == 0)
    except TypeError:
        return False


@dataclass(frozen=True)
class Grading:
    """Degrees of the ``x`` coordinates; ``psi_a`` gets ``1 - |x^a|``."""
    x_degrees: tuple[int, ...]

    @classmethod
    def even(cls, d: int) -> "Grading":
        return cls((0,) * d)

    @property
    def d(self) -> int:
        return len(self.x_degrees)

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.x_degrees + tuple(1 - g for g in self.x_degrees)

    @property
    def parities(self) -> tuple[int, ...]:
        return tuple(g % 2 for g in self.degrees)

    def copies(self, n: int) -> "Grading":
        """Grading of ``n`` independent copies, variables ordered
        ``x_(1), ..., x_(n), psi_(1), ..., psi_(n)``."""
        return Grading(self.x_degrees * n)


def _mono_mul(m1: Monomial, m2: Monomial, par: Sequence[int]) -> tuple[Monomial, int]:
    """Product of two ordered monomials; sign 0 means the product vanishes."""
    sign = 1
    odd_after = 0
    # walk from the top variable down, counting odd variables of m1 above v
    for v in range(len(m1) - 1, -1, -1):
        if par[v]:
            if m1[v] and m2[v]:
                return m1, 0
            if m2[v] and odd_after % 2:
                sign = -sign
            if m1[v]:
                odd_after += 1
    return tuple(a + b for a, b in zip(m1, m2)), sign


def _mono_diff(m: Monomial, v: int, par: Sequence[int]) -> tuple[Monomial, int]:
    """Left derivative; returns (monomial, integer factor)."""
    e = m[v]
    if e == 0:
        return m, 0
    if par[v]:
        before = sum(m[u] for u in range(v) if par[u])
        factor = -1 if before % 2 else 1
    else:
        factor = e
    return m[:v] + (e - 1,) + m[v + 1:], factor


def _mono_degree(m: Monomial, degrees: Sequence[int]) -> int:
    return sum(e * g for e, g in zip(m, degrees))


class PolyField:
    __slots__ = ("grading", "terms")

    def __init__(self, grading: Grading, terms: Mapping[Monomial, Any] | None = None):
        self.grading = grading
        clean: dict[Monomial, Any] = {}
        if terms:
            size = 2 * grading.d
            par = grading.parities
            for m, c in terms.items():
                if len(m) != size:
                    raise ValueError("monomial length does not match the grading")
                if any(par[v] and m[v] > 1 for v in range(size)):
                    continue
                if not _is_zero(c):
                    clean[tuple(m)] = c
        self.terms = clean

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, grading: Grading) -> "PolyField":
        return cls(grading)

    @classmethod
    def constant(cls, grading: Grading, c: Any = 1) -> "PolyField":
        return cls(grading, {(0,) * (2 * grading.d): Fraction(c) if isinstance(c, int) else c})

    @classmethod
    def x(cls, grading: Grading, a: int) -> "PolyField":
        m = [0] * (2 * grading.d)
        m[a - 1] = 1
        return cls(grading, {tuple(m): Fraction(1)})

    @classmethod
    def psi(cls, grading: Grading, a: int) -> "PolyField":
        m = [0] * (2 * grading.d)
        m[grading.d + a - 1] = 1
        return cls(grading, {tuple(m): Fraction(1)})

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "PolyField") -> None:
        if self.grading != other.grading:
            raise ValueError("polyvector fields live on different gradings")

    def __add__(self, other: "PolyField") -> "PolyField":
        if not isinstance(other, PolyField):
            if _is_zero(other):
                return self
            return self + PolyField.constant(self.grading, other)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return PolyField(self.grading, out)

    __radd__ = __add__

    def __neg__(self) -> "PolyField":
        return PolyField(self.grading, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "PolyField") -> "PolyField":
        return self + (-other)

    def scale(self, c: Any) -> "PolyField":
        if isinstance(c, int):
            c = Fraction(c)
        return PolyField(self.grading, {m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, PolyField):
            return self.scale(other)
        self._check(other)
        par = self.grading.parities
        out: dict[Monomial, Any] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m, s = _mono_mul(m1, m2, par)
                if s == 0:
                    continue
                c = c1 * c2 if s > 0 else -(c1 * c2)
                out[m] = out[m] + c if m in out else c
        return PolyField(self.grading, out)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other) -> bool:
        if isinstance(other, PolyField):
            return self.grading == other.grading and (self - other).is_zero()
        if _is_zero(other):
            return self.is_zero()
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.grading, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.terms.values())

    def map_coefficients(self, f: Callable[[Any], Any]) -> "PolyField":
        return PolyField(self.grading, {m: f(c) for m, c in self.terms.items()})

    # grading ------------------------------------------------------------
    def degrees(self) -> set[int]:
        g = self.grading.degrees
        return {_mono_degree(m, g) for m in self.terms}

    def homogeneous_degree(self) -> int | None:
        """Degree of a homogeneous field; ``None`` for zero or mixed fields."""
        ds = self.degrees()
        return ds.pop() if len(ds) == 1 else None

    def component(self, degree: int) -> "PolyField":
        g = self.grading.degrees
        return PolyField(self.grading, {m: c for m, c in self.terms.items()
                                        if _mono_degree(m, g) == degree})

    def psi_degree_component(self, k: int) -> "PolyField":
        d = self.grading.d
        return PolyField(self.grading, {m: c for m, c in self.terms.items()
                                        if sum(m[d:]) == k})

    # calculus -----------------------------------------------------------
    def diff_var(self, v: int) -> "PolyField":
        par = self.grading.parities
        out: dict[Monomial, Any] = {}
        for m, c in self.terms.items():
            m2, f = _mono_diff(m, v, par)
            if f == 0:
                continue
            val = c * f
            out[m2] = out[m2] + val if m2 in out else val
        return PolyField(self.grading, out)

    def dx(self, a: int) -> "PolyField":
        return self.diff_var(a - 1)

    def dpsi(self, a: int) -> "PolyField":
        return self.diff_var(self.grading.d + a - 1)

    def __repr__(self) -> str:
        return f"PolyField({format_polyfield(self)!r})"

    def __str__(self) -> str:
        return format_polyfield(self)


# ---------------------------------------------------------------------------
# text form

def _coef_str(c: Any) -> str:
    return str(c)


def format_polyfield(f: PolyField) -> str:
    if f.is_zero():
        return "0"
    d = f.grading.d
    pieces = []
    for m in sorted(f.terms, key=lambda m: (sum(m[d:]), sum(m[:d]), m)):
        c = f.terms[m]
        factors = []
        for a in range(d):
            if m[a] == 1:
                factors.append(f"x{a + 1}")
            elif m[a] > 1:
                factors.append(f"x{a + 1}^{m[a]}")
        for a in range(d):
            e = m[d + a]
            if e == 1:
                factors.append(f"psi{a + 1}")
            elif e > 1:
                factors.append(f"psi{a + 1}^{e}")
        cs = _coef_str(c)
        negative = cs.startswith("-")
        if negative:
            cs = cs[1:]
        if factors:
            body = "*".join(factors) if cs == "1" else f"{cs}*" + "*".join(factors)
        else:
            body = cs
        if "+" in cs or (" " in cs):
            body = f"({cs})*" + "*".join(factors) if factors else f"({cs})"
        pieces.append(("- " if negative else "+ ") + body)
    text = " ".join(pieces)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<var>x|psi)(?P<idx>\d+)(?:\^(?P<pow>\d+))?|(?P<op>[+\-*]))")


def _tokens(text: str) -> list[re.Match]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            raise ValueError(f"cannot parse polyvector field near {text[pos:]!r}")
        out.append(mt)
        pos = mt.end()
    return out


def parse_polyfield(text: str, grading: Grading | int) -> PolyField:
    """Parse sums of products like ``x1*psi2 - 1/2*x1^2*psi1*psi2``."""
    if isinstance(grading, int):
        grading = Grading.even(grading)
    toks = _tokens(text)
    if len(toks) == 1 and toks[0].group("num") == "0":
        return PolyField.zero(grading)

    def factor(mt: re.Match) -> PolyField:
        if mt.group("num"):
            return PolyField.constant(grading, Fraction(mt.group("num")))
        if mt.group("var") is None:
            raise ValueError("expected a factor")
        a = int(mt.group("idx"))
        if not 1 <= a <= grading.d:
            raise ValueError(f"index {a} outside 1..{grading.d}")
        base = PolyField.x(grading, a) if mt.group("var") == "x" else PolyField.psi(grading, a)
        out = base
        for _ in range(int(mt.group("pow") or 1) - 1):
            out = out * base
        return out

    total = PolyField.zero(grading)
    i = 0
    if not toks:
        raise ValueError("empty expression")
    while i < len(toks):
        sign = 1
        while i < len(toks) and toks[i].group("op") in ("+", "-"):
            if toks[i].group("op") == "-":
                sign = -sign
            i += 1
        if i >= len(toks):
            raise ValueError("expression ends with an operator")
        term = factor(toks[i])
        i += 1
        while i < len(toks) and toks[i].group("op") == "*":
            if i + 1 >= len(toks):
                raise ValueError("expression ends with '*'")
            term = term * factor(toks[i + 1])
            i += 2
        if i < len(toks) and toks[i].group("op") not in ("+", "-"):
            raise ValueError("missing operator between factors")
        total = total + term.scale(sign)
    return total


# ---------------------------------------------------------------------------
# Delta, Schouten bracket

def delta(f: PolyField) -> PolyField:
    """``sum_a (-1)^{|x^a|} d^2/(dx^a dpsi_a)``."""
    out = PolyField.zero(f.grading)
    for a, g in enumerate(f.grading.x_degrees, start=1):
        term = f.dpsi(a).dx(a)
        out = out + (term if g % 2 == 0 else -term)
    return out


def _degree_of(f: PolyField, name: str) -> int:
    g = f.homogeneous_degree()
    if g is None:
        if f.is_zero():
            return 0
        raise ValueError(f"{name} is not homogeneous")
    return g


def schouten(g1: PolyField, g2: PolyField) -> PolyField:
    """``Delta(g1 g2) - Delta(g1) g2 - (-1)^{|g1|} g1 Delta(g2)``; extended
    bilinearly to inhomogeneous arguments."""
    if g1.homogeneous_degree() is None and not g1.is_zero():
        out = PolyField.zero(g1.grading)
        for k in sorted(g1.degrees()):
            out = out + schouten(g1.component(k), g2)
        return out
    s = _degree_of(g1, "first argument")
    tail = g1 * delta(g2)
    return delta(g1 * g2) - delta(g1) * g2 - (tail if s % 2 == 0 else -tail)


# ---------------------------------------------------------------------------
# graph operators

def _embed(f: PolyField, big: Grading, copy: int, n: int) -> PolyField:
    d = f.grading.d
    terms = {}
    for m, c in f.terms.items():
        bm = [0] * (2 * n * d)
        bm[copy * d: copy * d + d] = m[:d]
        bm[n * d + copy * d: n * d + copy * d + d] = m[d:]
        terms[tuple(bm)] = c
    return PolyField(big, terms)


def _identify(f: PolyField, small: Grading, n: int) -> PolyField:
    d = small.d
    par = small.parities
    out: dict[Monomial, Any] = {}
    for m, c in f.terms.items():
        acc: Monomial = (0,) * (2 * d)
        sign = 1
        for k in range(n):
            piece = m[k * d: k * d + d] + m[n * d + k * d: n * d + k * d + d]
            acc, s = _mono_mul(acc, piece, par)
            if s == 0:
                sign = 0
                break
            sign *= s
        if sign == 0:
            continue
        val = c if sign > 0 else -c
        out[acc] = out[acc] + val if acc in out else val
    return PolyField(small, out)


def _edge_operator(f: PolyField, src: int, dst: int, n: int, d: int) -> PolyField:
    """``sum_a d/dx_(dst)^a d/dpsi_(src)a`` with 1-based vertices."""
    out = PolyField.zero(f.grading)
    for a in range(d):
        psi_var = n * d + (src - 1) * d + a
        x_var = (dst - 1) * d + a
        out = out + f.diff_var(psi_var).diff_var(x_var)
    return out


def _tensor(gammas: Sequence[PolyField]) -> tuple[PolyField, Grading]:
    small = gammas[0].grading
    n = len(gammas)
    big = small.copies(n)
    prod = PolyField.constant(big, 1)
    for k, g in enumerate(gammas):
        if g.grading != small:
            raise ValueError("arguments live on different gradings")
        prod = prod * _embed(g, big, k, n)
    return prod, big


def _apply_edges(prod: PolyField, edges: Sequence[tuple[int, int]], n: int, d: int) -> PolyField:
    for s, t in reversed(edges):
        prod = _edge_operator(prod, s, t, n, d)
        if prod.is_zero():
            break
    return prod


def phi(graph: DecoratedGraph, gammas: Sequence[PolyField]) -> PolyField:
    """The graph operator applied to ``gammas`` (one per vertex, in vertex order)."""
    if not graph.directed:
        raise ValueError("phi needs a directed graph; use phi_sym for undirected ones")
    if len(gammas) != graph.n:
        raise ValueError(f"graph has {graph.n} vertices but {len(gammas)} arguments were given")
    small = gammas[0].grading
    prod, _ = _tensor(gammas)
    prod = _apply_edges(prod, graph.edges, graph.n, small.d)
    res = _identify(prod, small, graph.n)
    return res if graph.parity > 0 else -res


def _sym_edge_operator(f: PolyField, i: int, j: int, n: int, d: int) -> PolyField:
    return _edge_operator(f, i, j, n, d) + _edge_operator(f, j, i, n, d)


def phi_sym(graph: DecoratedGraph, gammas: Sequence[PolyField]) -> PolyField:
    """Symmetrized operator of an undirected graph: average over the ``n!``
    vertex labelings with each edge acting by both orientations."""
    if graph.directed:
        raise ValueError("phi_sym needs an undirected graph")
    n = graph.n
    if len(gammas) != n:
        raise ValueError(f"graph has {n} vertices but {len(gammas)} arguments were given")
    small = gammas[0].grading
    prod0, _ = _tensor(gammas)
    total = PolyField.zero(small)
    for perm in itertools.permutations(range(1, n + 1)):
        prod = prod0
        for u, v in reversed(graph.edges):
            prod = _sym_edge_operator(prod, perm[u - 1], perm[v - 1], n, small.d)
            if prod.is_zero():
                break
        total = total + _identify(prod, small, n)
    total = total.scale(Fraction(1, math.factorial(n)))
    return total if graph.parity > 0 else -total


def koszul_shuffle_sign(degrees: Sequence[int], first: Sequence[int], second: Sequence[int]) -> int:
    """Sign of reordering positions ``sorted(first + second)`` into ``first``
    followed by ``second`` for objects of the given degrees (0-based)."""
    sign = 1
    for r in second:
        for s in first:
            if r < s and degrees[r] % 2 and degrees[s] % 2:
                sign = -sign
    return sign


def composition_terms(outer: DecoratedGraph, inner: DecoratedGraph,
                      subset: Sequence[int]) -> list[DecoratedGraph]:
    """Graphs obtained by inserting ``inner`` at the vertex ``min(subset)`` of
    ``outer`` and reattaching the edges at that vertex to vertices of ``subset``.

    Edge order: the edges of ``outer`` then those of ``inner``.
    """
    a = sorted(subset)
    n = outer.n + len(a) - 1
    rest = [v for v in range(1, n + 1) if v not in a]
    # outer vertex label -> final vertex (the merged vertex gets None)
    slots = sorted(rest + [a[0]])
    outer_map = {}
    for lab, v in enumerate(slots, start=1):
        outer_map[lab] = None if v == a[0] else v
    merged_label = slots.index(a[0]) + 1
    incident = [k for k, (s, t) in enumerate(outer.edges) if merged_label in (s, t)]
    inner_edges = [(a[s - 1], a[t - 1]) for s, t in inner.edges]
    out = []
    for choice in itertools.product(a, repeat=len(incident)):
        pick = dict(zip(incident, choice))
        edges = []
        for k, (s, t) in enumerate(outer.edges):
            s2 = pick[k] if s == merged_label else outer_map[s]
            t2 = pick[k] if t == merged_label else outer_map[t]
            edges.append((s2, t2))
        if any(s == t for s, t in edges):
            # an edge inside the merged block: both ends at the merged vertex
            continue
        out.append(DecoratedGraph(n, tuple(edges) + tuple(inner_edges), True,
                                  outer.parity * inner.parity))
    return out


def composition_identity_check(outer: DecoratedGraph, inner: DecoratedGraph,
                               subset: Sequence[int], gammas: Sequence[PolyField]) -> PolyField:
    """Defect ``LHS - RHS`` of inserting one graph operator into another.

    LHS: ``phi(outer)(g_1..g_{a-1}, phi(inner)(g_A), g_rest)``.
    RHS: Koszul sign times the sum of ``phi`` over :func:`composition_terms`.
    """
    a = sorted(subset)
    n = len(gammas)
    if outer.n + len(a) - 1 != n or inner.n != len(a):
        raise ValueError("arity mismatch")
    degs = [_degree_of(g, f"argument {k + 1}") for k, g in enumerate(gammas)]
    inner_val = phi(inner, [gammas[v - 1] for v in a])
    before = [v for v in range(1, a[0])]
    rest = [v for v in range(a[0] + 1, n + 1) if v not in a]
    args = [gammas[v - 1] for v in before] + [inner_val] + [gammas[v - 1] for v in rest]
    lhs = phi(outer, args)
    sign = -1 if (inner.l * sum(degs[v - 1] for v in before)) % 2 else 1
    sign *= koszul_shuffle_sign(degs, [v - 1 for v in a], [v - 1 for v in rest])
    rhs = PolyField.zero(gammas[0].grading)
    for g in composition_terms(outer, inner, a):
        rhs = rhs + phi(g, gammas)
    return lhs - (rhs if sign > 0 else -rhs)


# ---------------------------------------------------------------------------
# bivectors

def bivector_components(f: PolyField) -> dict[tuple[int, int], PolyField]:
    """``f = sum_{i<j} f^{ij} psi_i psi_j``; returns the antisymmetric matrix
    of coefficient functions (as fields with no psi), 1-based indices."""
    g = f.grading
    d = g.d
    comps: dict[tuple[int, int], PolyField] = {}
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            comps[(i, j)] = PolyField.zero(g)
    for m, c in f.terms.items():
        psis = [a for a in range(d) if m[d + a]]
        if sum(m[d:]) != 2 or len(psis) != 2:
            raise ValueError("not a bivector field")
        i, j = psis[0] + 1, psis[1] + 1
        base = m[:d] + (0,) * d
        piece = PolyField(g, {base: c})
        comps[(i, j)] = comps[(i, j)] + piece
        comps[(j, i)] = comps[(j, i)] - piece
    return comps


def bivector_from_components(comps: Mapping[tuple[int, int], PolyField], grading: Grading) -> PolyField:
    """``1/2 sum_{ij} c^{ij} psi_i psi_j``."""
    out = PolyField.zero(grading)
    for (i, j), c in comps.items():
        if c.is_zero():
            continue
        out = out + c * PolyField.psi(grading, i) * PolyField.psi(grading, j) * Fraction(1, 2)
    return out


def random_polyfield(rng, grading: Grading, psi_degree: int, max_x_degree: int = 2,
                     n_terms: int = 4, coef_range: int = 3) -> PolyField:
    """Random field with a fixed number of ``psi`` factors per term.

    ``rng`` is a ``random.Random`` or ``numpy.random.Generator``.
    """
    d = grading.d
    par = grading.parities
    terms: dict[Monomial, Fraction] = {}
    choose = getattr(rng, "integers", None)

    def randint(lo: int, hi: int) -> int:
        return int(choose(lo, hi + 1)) if choose is not None else rng.randint(lo, hi)

    for _ in range(n_terms):
        m = [0] * (2 * d)
        budget = randint(0, max_x_degree)
        for _ in range(budget):
            a = randint(0, d - 1)
            if par[a] and m[a]:
                continue
            m[a] += 1
        placed = 0
        tries = 0
        while placed < psi_degree and tries < 50:
            tries += 1
            a = randint(0, d - 1)
            if par[d + a] and m[d + a]:
                continue
            m[d + a] += 1
            placed += 1
        if placed < psi_degree:
            continue
        c = Fraction(randint(-coef_range, coef_range))
        if c == 0:
            c = Fraction(1)
        key = tuple(m)
        terms[key] = terms.get(key, 0) + c
    return PolyField(grading, terms)
