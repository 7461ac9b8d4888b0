"""Stallings core graphs for finitely generated subgroups of free groups.

A core graph is a folded, basepointed graph with edges labeled by
generators.  Folding the bouquet of generator loops and pruning hanging
trees yields a canonical automaton for the subgroup: words trace along
labeled edges (forward for a generator, backward for its inverse) and the
subgroup consists of the loops at the basepoint.

Vertices are renumbered by a breadth-first traversal that scans labels in
increasing order, forward edges before backward ones, so equal subgroups
produce byte-identical graphs regardless of how their generators were
presented.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

from .errors import MalformedInputError, RankMismatchError
from .words import Word, letter_name


class IndexReport(NamedTuple):
    finite: bool
    value: int | None


class CoreGraph:
    """Folded basepointed labeled graph; the basepoint is vertex 0."""

    __slots__ = ("rank", "fwd", "bwd", "_key")

    def __init__(self, rank: int, fwd: Sequence[dict], bwd: Sequence[dict]):
        self.rank = rank
        self.fwd = tuple(fwd)
        self.bwd = tuple(bwd)
        self._key = (
            rank,
            len(self.fwd),
            tuple(
                (u, lab, v)
                for u in range(len(self.fwd))
                for lab, v in sorted(self.fwd[u].items())
            ),
        )

    @property
    def n_vertices(self) -> int:
        return len(self.fwd)

    @property
    def n_edges(self) -> int:
        return sum(len(d) for d in self.fwd)

    def edges(self):
        """Yield (origin, label, target) triples in canonical order."""
        for u in range(self.n_vertices):
            for lab, v in sorted(self.fwd[u].items()):
                yield u, lab, v

    def step(self, v: int, letter: int) -> int | None:
        """Follow one letter from a vertex, or None when the edge is absent."""
        if letter > 0:
            return self.fwd[v].get(letter)
        return self.bwd[v].get(-letter)

    def trace(self, start: int, letters: Iterable[int]) -> int | None:
        v = start
        for x in letters:
            v = self.step(v, x)
            if v is None:
                return None
        return v

    def __eq__(self, other) -> bool:
        return isinstance(other, CoreGraph) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"CoreGraph(rank={self.rank}, vertices={self.n_vertices}, edges={self.n_edges})"

    def describe(self) -> str:
        """Multi-line rendering, one edge per line."""
        lines = [f"rank {self.rank}, {self.n_vertices} vertices, basepoint 0"]
        for u, lab, v in self.edges():
            lines.append(f"  {u} --{letter_name(lab)}--> {v}")
        return "\n".join(lines)

    @property
    def is_complete(self) -> bool:
        """Does every vertex carry every label in both directions?"""
        return all(
            len(self.fwd[v]) == self.rank and len(self.bwd[v]) == self.rank
            for v in range(self.n_vertices)
        )


def trivial(rank: int) -> CoreGraph:
    return CoreGraph(rank, ({},), ({},))


def fold(generators: Iterable[Word], rank: int) -> CoreGraph:
    """Core graph of the subgroup generated by the given words.

    Builds the bouquet of generator loops at the basepoint, folds to a
    fixpoint, prunes hanging trees, and canonicalizes.
    """
    edges: list[tuple[int, int, int]] = []
    n = 1
    for w in generators:
        letters = Word(w).letters
        if any(abs(x) > rank for x in letters):
            raise RankMismatchError(f"generator {Word(w)} falls outside rank {rank}")
        prev = 0
        for i, x in enumerate(letters):
            nxt = 0 if i == len(letters) - 1 else n
            if nxt != 0:
                n += 1
            if x > 0:
                edges.append((prev, x, nxt))
            else:
                edges.append((nxt, -x, prev))
            prev = nxt
    return _finish(n, edges, rank)


def _finish(n: int, edges: list[tuple[int, int, int]], rank: int) -> CoreGraph:
    """Fold, prune, and canonicalize a raw edge list with basepoint 0."""
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            # Keep the basepoint's class rooted at 0.
            if ry == find(0):
                rx, ry = ry, rx
            parent[ry] = rx

    merged = True
    while merged:
        merged = False
        seen_out: dict[tuple[int, int], int] = {}
        seen_in: dict[tuple[int, int], int] = {}
        for u, lab, v in edges:
            fu, fv = find(u), find(v)
            w = seen_out.get((fu, lab))
            if w is None:
                seen_out[(fu, lab)] = v
            elif find(w) != fv:
                union(w, v)
                merged = True
            w = seen_in.get((fv, lab))
            if w is None:
                seen_in[(fv, lab)] = u
            elif find(w) != fu:
                union(w, u)
                merged = True

    folded = {(find(u), lab, find(v)) for u, lab, v in edges}

    # Prune hanging trees: drop non-basepoint vertices of degree at most 1.
    base = find(0)
    degree: dict[int, int] = {}
    incident: dict[int, set] = {}
    for e in folded:
        u, _, v = e
        for x in (u, v):
            degree[x] = degree.get(x, 0) + 1
            incident.setdefault(x, set()).add(e)
    degree.setdefault(base, 0)
    incident.setdefault(base, set())
    queue = [v for v, d in degree.items() if d <= 1 and v != base]
    while queue:
        v = queue.pop()
        if v == base or v not in degree or degree[v] > 1:
            continue
        for e in list(incident[v]):
            u, _, w = e
            other = w if u == v else u
            folded.discard(e)
            incident[v].discard(e)
            if other != v:
                degree[other] -= 1
                incident[other].discard(e)
                if degree[other] <= 1 and other != base:
                    queue.append(other)
        del degree[v]
        del incident[v]

    fwd: dict[int, dict[int, int]] = {v: {} for v in degree}
    bwd: dict[int, dict[int, int]] = {v: {} for v in degree}
    for u, lab, v in folded:
        fwd[u][lab] = v
        bwd[v][lab] = u
    return _canonicalize(rank, base, fwd, bwd)


def _canonicalize(rank: int, base: int, fwd: dict, bwd: dict) -> CoreGraph:
    order: dict[int, int] = {base: 0}
    queue = [base]
    while queue:
        v = queue.pop(0)
        for lab in range(1, rank + 1):
            for table in (fwd, bwd):
                w = table[v].get(lab)
                if w is not None and w not in order:
                    order[w] = len(order)
                    queue.append(w)
    if len(order) != len(fwd):
        # Folding keeps everything reachable from the basepoint, so this
        # would mean a bug upstream.
        raise AssertionError("core graph is not connected")
    new_fwd = [dict() for _ in order]
    new_bwd = [dict() for _ in order]
    for v, d in fwd.items():
        for lab, w in sorted(d.items()):
            new_fwd[order[v]][lab] = order[w]
            new_bwd[order[w]][lab] = order[v]
    return CoreGraph(rank, new_fwd, new_bwd)


def membership(core: CoreGraph, w: Word) -> bool:
    """Is the word an element of the subgroup (a loop at the basepoint)?"""
    return core.trace(0, Word(w).letters) == 0


def index(core: CoreGraph) -> IndexReport:
    """Finite exactly when the graph is a complete cover of the rose."""
    if core.is_complete:
        return IndexReport(True, core.n_vertices)
    return IndexReport(False, None)


def _spanning_data(core: CoreGraph):
    """Spanning tree rooted at the basepoint, in canonical traversal order.

    Returns (vertex -> tree word, tree edge set, non-tree edges in the
    order that numbers the free basis).
    """
    tree_word: dict[int, Word] = {0: Word()}
    tree_edges: set[tuple[int, int, int]] = set()
    queue = [0]
    while queue:
        v = queue.pop(0)
        for lab in range(1, core.rank + 1):
            for sign, table in ((1, core.fwd), (-1, core.bwd)):
                w = table[v].get(lab)
                if w is not None and w not in tree_word:
                    tree_word[w] = tree_word[v] * Word([sign * lab])
                    edge = (v, lab, w) if sign > 0 else (w, lab, v)
                    tree_edges.add(edge)
                    queue.append(w)
    non_tree = [e for e in core.edges() if e not in tree_edges]
    return tree_word, tree_edges, non_tree


def generating_set(core: CoreGraph) -> list[Word]:
    """A free basis read off a spanning tree.

    Tree edges follow the canonical traversal; every non-tree edge
    contributes the loop through it.
    """
    tree_word, _, non_tree = _spanning_data(core)
    return [tree_word[u] * Word([lab]) * ~tree_word[v]
            for u, lab, v in non_tree]


def express_in_basis(core: CoreGraph, w: Word) -> tuple[int, ...]:
    """Rewrite a subgroup element over the generating_set basis.

    Returns signed indices into generating_set(core): tracing w through
    the graph, tree edges contribute nothing and each non-tree crossing
    emits that basis element.  Because the basis is free, the reduced
    result is the unique expression of w.
    """
    _, _, non_tree = _spanning_data(core)
    number = {edge: i + 1 for i, edge in enumerate(non_tree)}
    pos = 0
    out: list[int] = []
    for letter in w.letters:
        nxt = core.step(pos, letter)
        if nxt is None:
            raise MalformedInputError(f"{w} is not an element of the subgroup")
        lab = abs(letter)
        edge = (pos, lab, nxt) if letter > 0 else (nxt, lab, pos)
        idx = number.get(edge)
        if idx is not None:
            signed = idx if letter > 0 else -idx
            if out and out[-1] == -signed:
                out.pop()
            else:
                out.append(signed)
        pos = nxt
    if pos != 0:
        raise MalformedInputError(f"{w} is not an element of the subgroup")
    return tuple(out)


def conjugate_core(core: CoreGraph, h: Word) -> CoreGraph:
    """Core graph of the conjugate subgroup h^-1 (subgroup) h."""
    return fold([g.conjugate_by(h) for g in generating_set(core)], core.rank)


def _product_component(c1: CoreGraph, c2: CoreGraph):
    """Component of the basepoint pair in the label-synchronized product."""
    if c1.rank != c2.rank:
        raise RankMismatchError("fiber product needs a common ambient rank")
    base = (0, 0)
    seen = {base: 0}
    verts = [base]
    queue = [base]
    edges = []
    while queue:
        u1, u2 = pair = queue.pop(0)
        for lab in range(1, c1.rank + 1):
            v1, v2 = c1.fwd[u1].get(lab), c2.fwd[u2].get(lab)
            if v1 is not None and v2 is not None:
                nxt = (v1, v2)
                if nxt not in seen:
                    seen[nxt] = len(verts)
                    verts.append(nxt)
                    queue.append(nxt)
                edges.append((seen[pair], lab, seen[nxt]))
            v1, v2 = c1.bwd[u1].get(lab), c2.bwd[u2].get(lab)
            if v1 is not None and v2 is not None:
                nxt = (v1, v2)
                if nxt not in seen:
                    seen[nxt] = len(verts)
                    verts.append(nxt)
                    queue.append(nxt)
                edges.append((seen[nxt], lab, seen[pair]))
    return verts, sorted(set(edges))


def fiber_product(c1: CoreGraph, c2: CoreGraph) -> CoreGraph:
    """Core graph of the intersection of two subgroups."""
    verts, edges = _product_component(c1, c2)
    return _finish(len(verts), edges, c1.rank)


def relative_index(c1: CoreGraph, c2: CoreGraph) -> IndexReport:
    """Index of (first subgroup intersect second) inside the second.

    Finite exactly when the basepoint component of the product covers the
    second graph completely; the sheet count is then the index.
    """
    verts, edges = _product_component(c1, c2)
    has = set()
    for u, lab, v in edges:
        has.add((u, lab, "f"))
        has.add((v, lab, "b"))
    for i, (u1, u2) in enumerate(verts):
        for lab in range(1, c2.rank + 1):
            if c2.fwd[u2].get(lab) is not None and (i, lab, "f") not in has:
                return IndexReport(False, None)
            if c2.bwd[u2].get(lab) is not None and (i, lab, "b") not in has:
                return IndexReport(False, None)
    sheets, rem = divmod(len(verts), c2.n_vertices)
    if rem:
        raise AssertionError("complete cover with uneven fibers")
    return IndexReport(True, sheets)


def reads(core: CoreGraph, letters: Iterable[int]) -> bool:
    """Can the path be read from some vertex, ignoring the basepoint?"""
    letters = tuple(letters)
    return any(
        core.trace(v, letters) is not None for v in range(core.n_vertices)
    )


def longest_readable_factor(core: CoreGraph, letters: Sequence[int]) -> int:
    """Length of the longest contiguous factor readable from some vertex.

    One left-to-right sweep: since folded graphs step by partial
    injections, it suffices to carry, per vertex, the length of the
    longest readable suffix ending there.
    """
    best = 0
    suffix = dict.fromkeys(range(core.n_vertices), 0)
    for x in letters:
        nxt = dict.fromkeys(range(core.n_vertices), 0)
        for v, ln in suffix.items():
            w = core.step(v, x)
            if w is not None:
                nxt[w] = ln + 1
                if ln + 1 > best:
                    best = ln + 1
        suffix = nxt
    return best


def max_carried_length(core: CoreGraph, f, seed: int, n: int,
                       cap: int = None) -> int:
    """Longest factor of the n-th leaf segment at ``seed`` readable in the graph.

    The map must be a rose map whose edges match the ambient rank, so edge
    paths and words coincide.
    """
    from .traintrack import leaf_segment
    from .words import DEFAULT_LENGTH_CAP

    if not f.is_rose or f.n_edges != core.rank:
        raise RankMismatchError(
            "carried-length scans need a rose map matching the graph's rank"
        )
    segment = leaf_segment(f, seed, n, cap if cap is not None else DEFAULT_LENGTH_CAP)
    return longest_readable_factor(core, segment)
