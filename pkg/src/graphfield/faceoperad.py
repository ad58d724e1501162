"""Free operad on white, black and dashed corollas with its differential.

Colours:
  ``W`` solid white corolla, arity >= 2, degree 3 - 2n (odd)
  ``B`` black corolla, arity >= 1, degree 2 - 2n (even)
  ``D`` dashed white corolla, arity >= 2, degree 3 - 2n (odd)

Corollas with permuted legs are distinct generators, so a planar tree with
labeled leaves is already a basis element.  Formal sums are dictionaries
``tree -> Fraction``.  A tree stands for the product of its vertices listed
in preorder; the differential is a derivation that picks up a Koszul sign
from the odd vertices preceding it.

Text form: ``W3(1,W2(2,3),4)``, ``B2(1,2)``, ``D2(B1(1),B1(2))``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence, Union

from .graphs import set_partitions

COLOURS = ("W", "B", "D")


@dataclass(frozen=True)
class Node:
    colour: str
    children: tuple["Tree", ...]

    def __post_init__(self) -> None:
        if self.colour not in COLOURS:
            raise ValueError(f"unknown colour {self.colour!r}")
        low = 1 if self.colour == "B" else 2
        if len(self.children) < low:
            raise ValueError(f"{self.colour} corolla needs arity >= {low}")

    @property
    def arity(self) -> int:
        return len(self.children)

    @property
    def vertex_degree(self) -> int:
        n = self.arity
        return 2 - 2 * n if self.colour == "B" else 3 - 2 * n

    def __str__(self) -> str:
        return format_tree(self)


Tree = Union[int, Node]
FormalSum = dict


def corolla(colour: str, n: int) -> Node:
    return Node(colour, tuple(range(1, n + 1)))


def format_tree(t: Tree) -> str:
    if isinstance(t, int):
        return str(t)
    return f"{t.colour}{t.arity}(" + ",".join(format_tree(c) for c in t.children) + ")"


_TREE_TOKEN = re.compile(r"\s*(?:(?P<node>[WBD])(?P<ar>\d+)\(|(?P<leaf>\d+)|(?P<close>\))|(?P<comma>,))")


def parse_tree(text: str) -> Tree:
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        mt = _TREE_TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            raise ValueError(f"cannot parse tree near {text[pos:]!r}")
        toks.append(mt)
        pos = mt.end()
    idx = 0

    def parse_at() -> Tree:
        nonlocal idx
        if idx >= len(toks):
            raise ValueError("unexpected end of tree")
        mt = toks[idx]
        idx += 1
        if mt.group("leaf"):
            return int(mt.group("leaf"))
        if not mt.group("node"):
            raise ValueError("expected a leaf or a corolla")
        children = [parse_at()]
        while idx < len(toks) and toks[idx].group("comma"):
            idx += 1
            children.append(parse_at())
        if idx >= len(toks) or not toks[idx].group("close"):
            raise ValueError("missing ')'")
        idx += 1
        if len(children) != int(mt.group("ar")):
            raise ValueError(f"{mt.group('node')}{mt.group('ar')} has {len(children)} children")
        return Node(mt.group("node"), tuple(children))

    tree = parse_at()
    if idx != len(toks):
        raise ValueError("trailing input after tree")
    return tree


def leaves(t: Tree) -> list[int]:
    if isinstance(t, int):
        return [t]
    out: list[int] = []
    for c in t.children:
        out.extend(leaves(c))
    return out


def vertices(t: Tree) -> list[Node]:
    """Vertices in preorder."""
    if isinstance(t, int):
        return []
    out = [t]
    for c in t.children:
        out.extend(vertices(c))
    return out


def tree_degree(t: Tree) -> int:
    return sum(v.vertex_degree for v in vertices(t))


def check_grammar(t: Tree, parent: str | None = None) -> None:
    """Solid white and black corollas take leaves or solid white inputs;
    dashed corollas take dashed or black inputs."""
    if isinstance(t, int):
        if parent == "D":
            raise ValueError("a dashed corolla cannot take a leaf")
        return
    if parent in ("W", "B") and t.colour != "W":
        raise ValueError(f"{parent} corolla cannot take a {t.colour} input")
    if parent == "D" and t.colour not in ("D", "B"):
        raise ValueError("a dashed corolla only takes dashed or black inputs")
    for c in t.children:
        check_grammar(c, t.colour)


# ---------------------------------------------------------------------------
# formal sums

def add_to(acc: FormalSum, t: Tree, c) -> None:
    v = acc.get(t, 0) + c
    if v == 0:
        acc.pop(t, None)
    else:
        acc[t] = v


def format_sum(s: FormalSum) -> str:
    if not s:
        return "0"
    parts = []
    for t in sorted(s, key=format_tree):
        c = s[t]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else f"{mag}*"
        parts.append(f"{sign} {coef}{format_tree(t)}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


# ---------------------------------------------------------------------------
# differential on a single corolla

# sign conventions, exposed so tests can perturb them
SignRule = Callable[[str, str, tuple], int]


def default_sign_rule(colour: str, kind: str, data: tuple) -> int:
    """Coefficient in front of each term of the corolla differential, before
    Koszul reordering.  ``kind`` is ``"collapse"`` or ``"split"``."""
    if colour == "B" and kind == "collapse":
        return -1
    return 1


@dataclass(frozen=True)
class _Tagged:
    """Vertex with a tag, used to follow vertices through a rewrite."""
    tag: object
    colour: str
    children: tuple


def _tag(t: Tree, counter: list[int]):
    if isinstance(t, int):
        return t
    counter[0] += 1
    tag = counter[0]
    return _Tagged(tag, t.colour, tuple(_tag(c, counter) for c in t.children))


def _untag(t) -> Tree:
    if isinstance(t, int):
        return t
    return Node(t.colour, tuple(_untag(c) for c in t.children))


def _preorder(t) -> list:
    if isinstance(t, int):
        return []
    out = [t]
    for c in t.children:
        out.extend(_preorder(c))
    return out


def _parity(v) -> int:
    n = len(v.children)
    deg = 2 - 2 * n if v.colour == "B" else 3 - 2 * n
    return deg % 2


def _reorder_sign(derived: list, actual: list) -> int:
    """Koszul sign of rearranging odd vertices from ``derived`` to ``actual``."""
    odd_derived = [v.tag for v in derived if _parity(v)]
    pos = {tag: k for k, tag in enumerate(odd_derived)}
    seq = [pos[v.tag] for v in actual if _parity(v)]
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


def _corolla_terms(v: _Tagged, rule: SignRule) -> Iterator[tuple[int, object, list]]:
    """Terms of d(v) as (coefficient, new subtree, derived vertex order)."""
    kids = v.children
    n = len(kids)
    colour = v.colour
    tag = v.tag
    if colour in ("W", "D"):
        for size in range(2, n):
            for a in itertools.combinations(range(n), size):
                inner = _Tagged((tag, "in"), colour, tuple(kids[k] for k in a))
                first = a[0]
                outer_kids = list(kids[:first]) + [inner] + [kids[k] for k in range(first + 1, n) if k not in a]
                outer = _Tagged((tag, "out"), colour, tuple(outer_kids))
                yield rule(colour, "collapse", a), outer, [outer, inner]
        return
    # black corolla
    for size in range(2, n + 1):
        for a in itertools.combinations(range(n), size):
            inner = _Tagged((tag, "in"), "W", tuple(kids[k] for k in a))
            first = a[0]
            outer_kids = list(kids[:first]) + [inner] + [kids[k] for k in range(first + 1, n) if k not in a]
            outer = _Tagged((tag, "out"), "B", tuple(outer_kids))
            yield rule(colour, "collapse", a), outer, [outer, inner]
    for part in set_partitions(list(range(n))):
        if len(part) < 2:
            continue
        part = sorted(part, key=lambda b: b[0])
        blacks = [_Tagged((tag, "blk", k), "B", tuple(kids[i] for i in b)) for k, b in enumerate(part)]
        top = _Tagged((tag, "top"), "D", tuple(blacks))
        yield rule(colour, "split", tuple(part)), top, [top] + blacks


def _replace(t, target_tag, new):
    if isinstance(t, int):
        return t
    if t.tag == target_tag:
        return new
    return _Tagged(t.tag, t.colour, tuple(_replace(c, target_tag, new) for c in t.children))


def differential(x: Tree | FormalSum, rule: SignRule = default_sign_rule) -> FormalSum:
    """Differential of a tree or a formal sum of trees."""
    if not isinstance(x, dict):
        x = {x: Fraction(1)}
    out: FormalSum = {}
    for tree, coeff in x.items():
        tagged = _tag(tree, [0])
        order = _preorder(tagged)
        odd_before = 0
        for idx, v in enumerate(order):
            pre_sign = -1 if odd_before % 2 else 1
            for c, sub, local in _corolla_terms(v, rule):
                if c == 0:
                    continue
                new_tree = _replace(tagged, v.tag, sub)
                derived = order[:idx] + local + order[idx + 1:]
                sign = _reorder_sign(derived, _preorder(new_tree))
                add_to(out, _untag(new_tree), coeff * c * sign * pre_sign)
            odd_before += _parity(v)
    return out


def compose(outer: Tree, position: int, inner: Tree) -> Tree:
    """Graft ``inner`` on the leaf labeled ``position``."""
    if isinstance(outer, int):
        return inner if outer == position else outer
    return Node(outer.colour, tuple(compose(c, position, inner) for c in outer.children))


@dataclass
class DSquaredReport:
    passed: bool
    n_checked: int
    witness: tuple[str, str] | None = None

    def __bool__(self) -> bool:
        return self.passed


def check_d_squared(n_max: int, rule: SignRule = default_sign_rule,
                    colours: Sequence[str] = COLOURS) -> DSquaredReport:
    """Check ``d(d(c)) = 0`` on every generating corolla of arity <= n_max."""
    checked = 0
    for colour in colours:
        low = 1 if colour == "B" else 2
        for n in range(low, n_max + 1):
            c = corolla(colour, n)
            dd = differential(differential(c, rule), rule)
            checked += 1
            if dd:
                tree, coef = sorted(dd.items(), key=lambda kv: format_tree(kv[0]))[0]
                return DSquaredReport(False, checked, (format_tree(c), f"{coef}*{format_tree(tree)}"))
    return DSquaredReport(True, checked)


# ---------------------------------------------------------------------------
# quotient by corollas of arity >= 3: the Leibniz relation

def kill_higher_whites(s: FormalSum) -> FormalSum:
    """Image under the morphism sending every white corolla of arity >= 3 to 0."""
    out: FormalSum = {}
    for t, c in s.items():
        if all(not (v.colour == "W" and v.arity >= 3) for v in vertices(t)):
            add_to(out, t, c)
    return out


def leibniz_relation() -> FormalSum:
    """Image of ``d W3``: the three-term relation among binary white corollas."""
    return kill_higher_whites(differential(corolla("W", 3)))


def _binary_trees(labels: Sequence[int]) -> Iterator[Tree]:
    """All planar binary white trees whose leaves are a permutation of labels."""
    labels = list(labels)
    if len(labels) == 1:
        yield labels[0]
        return
    for perm in itertools.permutations(labels):
        yield from _binary_shapes(list(perm))


def _binary_shapes(seq: list[int]) -> Iterator[Tree]:
    if len(seq) == 1:
        yield seq[0]
        return
    for k in range(1, len(seq)):
        for left in _binary_shapes(seq[:k]):
            for right in _binary_shapes(seq[k:]):
                yield Node("W", (left, right))


def _relabel(t: Tree, mapping: dict[int, int]) -> Tree:
    if isinstance(t, int):
        return mapping[t]
    return Node(t.colour, tuple(_relabel(c, mapping) for c in t.children))


def _sum_relabel(s: FormalSum, mapping: dict[int, int]) -> FormalSum:
    return {_relabel(t, mapping): c for t, c in s.items()}


def ideal_in_arity(n: int) -> list[FormalSum]:
    """Spanning set of the operadic ideal generated by the Leibniz relation,
    arity ``n``, leaves ``1..n``.  Only binary white trees are involved."""
    rel = leibniz_relation()
    spans: list[FormalSum] = []
    if n < 3:
        return spans
    # relation with arbitrary binary trees plugged in its three leaves,
    # grafted into arbitrary binary trees
    labels = list(range(1, n + 1))
    # plug binary trees into the three inputs, then graft into binary trees
    for blocks in _ordered_set_partitions(labels, 3):
        plugs = [list(_binary_trees(b)) for b in blocks]
        for choice in itertools.product(*plugs):
            mapping_tree = {k + 1: choice[k] for k in range(3)}
            piece: FormalSum = {}
            for t, c in rel.items():
                add_to(piece, _substitute(t, mapping_tree), c)
            if not piece:
                continue
            spans.extend(_graft_everywhere(piece, labels, set(itertools.chain(*blocks))))
    return spans


def _substitute(t: Tree, mapping: dict[int, Tree]) -> Tree:
    if isinstance(t, int):
        return mapping[t]
    return Node(t.colour, tuple(_substitute(c, mapping) for c in t.children))


def _ordered_set_partitions(labels: list[int], k: int) -> Iterator[list[tuple[int, ...]]]:
    """Ordered k-tuples of disjoint nonempty blocks (not necessarily covering)."""
    for total in range(k, len(labels) + 1):
        for chosen in itertools.combinations(labels, total):
            for assignment in itertools.product(range(k), repeat=total):
                if set(assignment) != set(range(k)):
                    continue
                blocks = [tuple(v for v, a in zip(chosen, assignment) if a == j) for j in range(k)]
                yield blocks


def _graft_everywhere(piece: FormalSum, labels: list[int], used: set[int]) -> list[FormalSum]:
    rest = [v for v in labels if v not in used]
    if not rest:
        return [piece]
    out = []
    marker = max(labels) + 1
    for outer in _binary_trees(rest + [marker]):
        grafted: FormalSum = {}
        for t, c in piece.items():
            add_to(grafted, compose(outer, marker, t), c)
        out.append(grafted)
    return out


def in_span(target: FormalSum, spans: list[FormalSum]) -> bool:
    """Exact rational linear algebra: is ``target`` a combination of ``spans``?"""
    if not target:
        return True
    basis_index: dict[Tree, int] = {}
    rows = []
    for s in spans + [target]:
        for t in s:
            basis_index.setdefault(t, len(basis_index))
    for s in spans:
        row = [Fraction(0)] * len(basis_index)
        for t, c in s.items():
            row[basis_index[t]] = Fraction(c)
        rows.append(row)
    tgt = [Fraction(0)] * len(basis_index)
    for t, c in target.items():
        tgt[basis_index[t]] = Fraction(c)
    return _rank(rows + [tgt]) == _rank(rows)


def _rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    if not m:
        return 0
    cols = len(m[0])
    for col in range(cols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


@dataclass
class LeibnizReport:
    relation: FormalSum
    arity: int
    image: FormalSum
    in_ideal: bool


def leibniz_quotient_check(n: int = 3) -> LeibnizReport:
    """Image of ``d W_n`` after killing white corollas of arity >= 3, and
    whether it lies in the ideal generated by the Leibniz relation."""
    image = kill_higher_whites(differential(corolla("W", n)))
    rel = leibniz_relation()
    ok = in_span(image, ideal_in_arity(n))
    return LeibnizReport(rel, n, image, ok)
