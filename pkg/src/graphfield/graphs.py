"""Decorated graphs: parsing, enumeration, canonical forms, subgraphs and quotients.

A graph lives on vertices ``1..n`` and keeps its edges in a stored order.
The stored order is the orientation: the graph stands for
``parity * e_1 ^ e_2 ^ ... ^ e_l``.  Swapping two stored edges is the same
oriented graph with the parity flipped.

Text form::

    4;5;3>1,3>2,4>1,4>2,2>1      directed
    3;3;1-2,2-3,1-3              undirected
    -2;1;1>2                     leading minus: parity -1
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Edge = tuple[int, int]

FAMILIES = ("G", "fG", "B")

CONTEXTS = ("collapse-2n-4", "collapse-2n-3", "partition")


def permutation_sign(perm: Sequence[int]) -> int:
    """Sign of a permutation of ``0..k-1`` given as a sequence."""
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class DecoratedGraph:
    n: int
    edges: tuple[Edge, ...]
    directed: bool = True
    parity: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("a graph needs at least one vertex")
        if self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        for s, t in self.edges:
            if not (1 <= s <= self.n and 1 <= t <= self.n):
                raise ValueError(f"edge {s}->{t} leaves the vertex range 1..{self.n}")
            if s == t:
                raise ValueError(f"tadpole {s}->{t} is not allowed")
        if not self.directed:
            object.__setattr__(self, "edges", tuple((min(e), max(e)) for e in self.edges))

    @property
    def l(self) -> int:
        return len(self.edges)

    def opposite(self) -> "DecoratedGraph":
        return DecoratedGraph(self.n, self.edges, self.directed, -self.parity)

    def with_parity(self, parity: int) -> "DecoratedGraph":
        return DecoratedGraph(self.n, self.edges, self.directed, parity)

    def reorder(self, order: Sequence[int]) -> "DecoratedGraph":
        """Same oriented graph with edges stored as ``[edges[k] for k in order]``."""
        new_edges = tuple(self.edges[k] for k in order)
        return DecoratedGraph(self.n, new_edges, self.directed,
                              self.parity * permutation_sign(order))

    def relabel(self, mapping: dict[int, int] | Sequence[int]) -> "DecoratedGraph":
        """Apply a vertex bijection.  A sequence ``m`` maps vertex ``v`` to ``m[v-1]``."""
        if not isinstance(mapping, dict):
            mapping = {v + 1: w for v, w in enumerate(mapping)}
        edges = tuple((mapping[s], mapping[t]) for s, t in self.edges)
        return DecoratedGraph(self.n, edges, self.directed, self.parity)

    def to_string(self) -> str:
        return format_graph(self)

    def __str__(self) -> str:
        return format_graph(self)


@dataclass(frozen=True)
class GraphClass:
    representative: DecoratedGraph
    family: str = "G"
    labeled: bool = True


def parse_graph(text: str) -> DecoratedGraph:
    text = text.strip()
    parity = 1
    if text.startswith("-"):
        parity, text = -1, text[1:]
    elif text.startswith("+"):
        text = text[1:]
    parts = text.split(";")
    if len(parts) != 3:
        raise ValueError(f"expected 'n;l;edges', got {text!r}")
    n, l = int(parts[0]), int(parts[1])
    body = parts[2].strip()
    tokens = [tok.strip() for tok in body.split(",") if tok.strip()] if body else []
    if len(tokens) != l:
        raise ValueError(f"declared {l} edges but found {len(tokens)}")
    edges: list[Edge] = []
    kinds = set()
    for tok in tokens:
        if ">" in tok:
            s, t = tok.split(">")
            kinds.add(">")
        elif "-" in tok:
            s, t = tok.split("-")
            kinds.add("-")
        else:
            raise ValueError(f"bad edge token {tok!r}")
        edges.append((int(s), int(t)))
    if len(kinds) > 1:
        raise ValueError("mixed directed and undirected edges")
    directed = kinds != {"-"}
    return DecoratedGraph(n, tuple(edges), directed, parity)


def format_graph(g: DecoratedGraph) -> str:
    sep = ">" if g.directed else "-"
    body = ",".join(f"{s}{sep}{t}" for s, t in g.edges)
    sign = "-" if g.parity < 0 else ""
    return f"{sign}{g.n};{g.l};{body}"


def _pairs(n: int, directed: bool) -> list[Edge]:
    if directed:
        return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def iter_labeled_graphs(n: int, l: int, directed: bool = True) -> Iterator[DecoratedGraph]:
    """All labeled multigraphs with ``l`` edges, each once with sorted edge list."""
    for combo in itertools.combinations_with_replacement(_pairs(n, directed), l):
        yield DecoratedGraph(n, combo, directed)


def enumerate_graphs(n: int, l: int, mode: str = "G", labeled: bool = True,
                     skip_odd: bool = False) -> list[GraphClass]:
    """Graphs with ``n`` vertices and ``l`` edges.

    ``mode`` is ``"G"`` (directed), ``"fG"`` (directed, same as G as a set) or
    ``"B"`` (undirected).  With ``labeled=True`` every labeled multigraph is
    returned once; with ``labeled=False`` one canonical representative per
    isomorphism class.  ``skip_odd`` drops classes with an orientation
    reversing automorphism (they vanish in any weight table).
    """
    if mode not in FAMILIES:
        raise ValueError(f"mode must be one of {FAMILIES}")
    if n < 1 or l < 0:
        raise ValueError("need n >= 1 and l >= 0")
    directed = mode != "B"
    out: list[GraphClass] = []
    if labeled:
        for g in iter_labeled_graphs(n, l, directed):
            if skip_odd and canonical_form(g).odd:
                continue
            out.append(GraphClass(g, mode, True))
        return out
    seen: set[tuple[Edge, ...]] = set()
    for g in iter_labeled_graphs(n, l, directed):
        cf = canonical_form(g)
        if cf.key in seen:
            continue
        seen.add(cf.key)
        if skip_odd and cf.odd:
            continue
        rep = DecoratedGraph(n, cf.key, directed)
        out.append(GraphClass(rep, mode, False))
    return out


@dataclass(frozen=True)
class CanonicalForm:
    """``g == sign * DecoratedGraph(n, key)`` up to relabeling.

    ``odd`` marks classes carrying an orientation reversing automorphism;
    for those ``sign`` is meaningless and every weight vanishes.
    """
    n: int
    key: tuple[Edge, ...]
    directed: bool
    sign: int
    odd: bool

    def graph(self) -> DecoratedGraph:
        return DecoratedGraph(self.n, self.key, self.directed)

    def text(self) -> str:
        return format_graph(self.graph())


def _sorted_with_sign(edges: Sequence[Edge]) -> tuple[tuple[Edge, ...], int, bool]:
    order = sorted(range(len(edges)), key=lambda k: edges[k])
    srt = tuple(edges[k] for k in order)
    repeated = any(srt[k] == srt[k + 1] for k in range(len(srt) - 1))
    return srt, permutation_sign(order), repeated


def canonical_form(g: DecoratedGraph) -> CanonicalForm:
    best: tuple[Edge, ...] | None = None
    best_signs: set[int] = set()
    repeated = False
    for perm in itertools.permutations(range(1, g.n + 1)):
        relabeled = g.relabel(perm)
        key, sgn, rep = _sorted_with_sign(relabeled.edges)
        repeated = rep
        if best is None or key < best:
            best, best_signs = key, {sgn}
        elif key == best:
            best_signs.add(sgn)
    assert best is not None
    odd = repeated or len(best_signs) > 1
    sign = g.parity * next(iter(best_signs))
    return CanonicalForm(g.n, best, g.directed, sign, odd)


def are_isomorphic(g1: DecoratedGraph, g2: DecoratedGraph) -> bool:
    return canonical_form(g1).key == canonical_form(g2).key


def automorphism_count(g: DecoratedGraph, labels_forgotten: bool = True) -> int:
    """Vertex permutations preserving the edge multiset (orientation ignored)."""
    if not labels_forgotten:
        return 1
    target = sorted(g.edges)
    count = 0
    for perm in itertools.permutations(range(1, g.n + 1)):
        if sorted(g.relabel(perm).edges) == target:
            count += 1
    return count


def wheel(n: int) -> DecoratedGraph:
    """Wheel with rim ``1..n`` and center ``n+1``.

    Edges: rim edges ``k+1 -> k``, then the spokes ``k -> n+1``, then the
    closing rim edge ``1 -> n``.
    """
    if n < 2:
        raise ValueError("wheel needs n >= 2")
    rim: list[Edge] = [(k + 1, k) for k in range(1, n)]
    spokes = [(k, n + 1) for k in range(1, n + 1)]
    return DecoratedGraph(n + 1, tuple(rim + spokes + [(1, n)]))


def _check_subset(g: DecoratedGraph, subset: Iterable[int]) -> tuple[int, ...]:
    a = tuple(sorted(set(subset)))
    if not a or a[0] < 1 or a[-1] > g.n:
        raise ValueError(f"subset {a} is not inside 1..{g.n}")
    return a


def internal_edge_indices(g: DecoratedGraph, subset: Iterable[int]) -> list[int]:
    a = set(subset)
    return [k for k, (s, t) in enumerate(g.edges) if s in a and t in a]


def complete_subgraph(g: DecoratedGraph, subset: Iterable[int]) -> DecoratedGraph:
    """Full subgraph on ``subset``, relabeled ``1..#A`` in increasing order."""
    a = _check_subset(g, subset)
    rank = {v: i + 1 for i, v in enumerate(a)}
    edges = tuple((rank[g.edges[k][0]], rank[g.edges[k][1]])
                  for k in internal_edge_indices(g, a))
    return DecoratedGraph(len(a), edges, g.directed)


def _block_map(n: int, blocks: Sequence[Sequence[int]]) -> dict[int, int]:
    """Vertex -> quotient label for a partition, blocks ranked by their minimum."""
    ordered = sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0])
    mapping: dict[int, int] = {}
    for label, b in enumerate(ordered, start=1):
        for v in b:
            if v in mapping:
                raise ValueError("blocks overlap")
            mapping[v] = label
    if sorted(mapping) != list(range(1, n + 1)):
        raise ValueError("blocks do not cover the vertex set")
    return mapping


def quotient_partition(g: DecoratedGraph, blocks: Sequence[Sequence[int]]) -> DecoratedGraph:
    """Contract each block to a point; edges inside a block are dropped."""
    mapping = _block_map(g.n, blocks)
    edges = tuple((mapping[s], mapping[t]) for s, t in g.edges if mapping[s] != mapping[t])
    return DecoratedGraph(max(mapping.values()), edges, g.directed)


def singleton_completion(n: int, subset: Iterable[int]) -> list[tuple[int, ...]]:
    a = tuple(sorted(set(subset)))
    return [a] + [(v,) for v in range(1, n + 1) if v not in a]


def quotient_graph(g: DecoratedGraph, subset: Iterable[int]) -> DecoratedGraph:
    """Contract ``subset`` to one vertex placed at position ``min(subset)``."""
    a = _check_subset(g, subset)
    return quotient_partition(g, singleton_completion(g.n, a))


def koszul_sign(g: DecoratedGraph, subsets: Sequence[int] | Sequence[Sequence[int]],
                context: str | None = None) -> int:
    """Sign of the permutation from the stored edge order to
    (quotient edges, edges of block 1, edges of block 2, ...).

    ``subsets`` is either one subset ``A`` or a partition.  With ``context``
    the input is first checked for admissibility.
    """
    blocks = _as_blocks(g, subsets)
    if context is not None and not is_admissible(g, subsets, context):
        raise ValueError(f"{subsets} is not admissible for {format_graph(g)} in context {context}")
    mapping = _block_map(g.n, blocks)
    quotient = [k for k, (s, t) in enumerate(g.edges) if mapping[s] != mapping[t]]
    order = list(quotient)
    for b in sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]):
        order.extend(internal_edge_indices(g, b))
    return permutation_sign(order)


def _as_blocks(g: DecoratedGraph, subsets) -> list[tuple[int, ...]]:
    subsets = list(subsets)
    if subsets and isinstance(subsets[0], int):
        return singleton_completion(g.n, subsets)
    return [tuple(sorted(b)) for b in subsets]


def is_admissible(g: DecoratedGraph, subsets, context: str) -> bool:
    """Admissibility of a collapse (``subsets`` = one set) or of a partition.

    ``collapse-2n-4``: g has 2n-4 edges, 2 <= #A <= n-1 and A spans 2#A-3 edges.
    ``collapse-2n-3``: g has 2n-3 edges, #A >= 2 and A spans 2#A-3 edges.
    ``partition``: at least two blocks, each spanning 2#B-2 edges.
    """
    if context not in CONTEXTS:
        raise ValueError(f"context must be one of {CONTEXTS}")
    n, l = g.n, g.l
    if context == "partition":
        blocks = _as_blocks(g, subsets)
        _block_map(n, blocks)
        if len(blocks) < 2:
            return False
        return all(len(internal_edge_indices(g, b)) == 2 * len(b) - 2 for b in blocks)
    a = _check_subset(g, subsets)
    if context == "collapse-2n-4":
        if l != 2 * n - 4:
            raise ValueError(f"context {context} needs 2n-4 = {2 * n - 4} edges, graph has {l}")
        if not (2 <= len(a) <= n - 1):
            return False
    else:
        if l != 2 * n - 3:
            raise ValueError(f"context {context} needs 2n-3 = {2 * n - 3} edges, graph has {l}")
        if len(a) < 2:
            return False
    return len(internal_edge_indices(g, a)) == 2 * len(a) - 3


def subsets_of(n: int, min_size: int = 2, max_size: int | None = None) -> Iterator[tuple[int, ...]]:
    top = n if max_size is None else max_size
    for size in range(min_size, top + 1):
        yield from itertools.combinations(range(1, n + 1), size)


def set_partitions(items: Sequence[int]) -> Iterator[list[tuple[int, ...]]]:
    """All set partitions, blocks listed by increasing minimum."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [(first,)] + part
        for k in range(len(part)):
            merged = tuple(sorted((first,) + part[k]))
            yield part[:k] + [merged] + part[k + 1:]


def ordered_partitions(n: int, min_blocks: int = 2) -> list[list[tuple[int, ...]]]:
    out = []
    for p in set_partitions(range(1, n + 1)):
        if len(p) >= min_blocks:
            out.append(sorted(p, key=lambda b: b[0]))
    return out
