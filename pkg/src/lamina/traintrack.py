"""Self-maps of marked graphs, their transition matrices, and leaf data.

A marked graph map carries a finite graph (edges come with a reversal
involution, encoded by sign: ``k`` is the k-th edge forward, ``-k``
backward) and a graph self-map given by a vertex table and one edge path
per edge.  Iterating edge images produces leaf segments; directions that
eventually repeat produce eigenrays; reading length-L windows off long
segments produces the leaf language.

Cancellation while iterating means the map is not a train track map for
these purposes, and the operations that need reduced iterates say so by
raising ``NotTrainTrackError``.  Positive maps can never cancel and are
exempt from the check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateRayError,
    LengthCapExceededError,
    MalformedInputError,
    NotPrimitiveError,
    NotTrainTrackError,
    ResourceCapError,
)
from .words import DEFAULT_LENGTH_CAP, Automorphism, Word, letter_name

#: How many iterates the constructor checks for cancellation.
DEFAULT_CHECK_DEPTH = 8

EdgePath = tuple[int, ...]


def _reverse_path(path: EdgePath) -> EdgePath:
    return tuple(-e for e in reversed(path))


class MarkedGraphMap:
    """A graph self-map with named vertices and edges.

    ``origin[k-1]`` and ``terminus[k-1]`` give the endpoints of edge k as
    vertex indices; ``edge_images[k-1]`` is the image path of edge k.  The
    image of a reversed edge is the reversed image, always.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        edge_names: Sequence[str],
        origin: Sequence[int],
        terminus: Sequence[int],
        edge_images: Sequence[Iterable[int]],
        vertex_image: Sequence[int] | None = None,
        check_depth: int = DEFAULT_CHECK_DEPTH,
    ):
        self.vertices = tuple(vertices)
        self.edge_names = tuple(edge_names)
        self.origin = tuple(origin)
        self.terminus = tuple(terminus)
        self.n_edges = len(self.edge_names)
        if len(set(self.edge_names)) != self.n_edges:
            raise MalformedInputError("duplicate edge names")
        if len(set(self.vertices)) != len(self.vertices):
            raise MalformedInputError("duplicate vertex names")
        if not (len(self.origin) == len(self.terminus) == self.n_edges):
            raise MalformedInputError("edge endpoint tables have the wrong length")
        self.edge_images = tuple(tuple(p) for p in edge_images)
        if len(self.edge_images) != self.n_edges:
            raise MalformedInputError("need exactly one image path per edge")
        for path in self.edge_images:
            if not path:
                raise MalformedInputError("edge images must be nonempty paths")
            for e in path:
                if e == 0 or abs(e) > self.n_edges:
                    raise MalformedInputError(f"image letter {e} is not an edge")
            self._require_path(path)
        self.vertex_image = (
            tuple(vertex_image) if vertex_image is not None
            else self._infer_vertex_image()
        )
        self._check_endpoints()
        self._seg_cache: dict[tuple[int, int], EdgePath] = {}
        self.check_depth = check_depth
        self.train_track_ok, self.train_track_witness = self._check_train_track()

    # -- structure ---------------------------------------------------------

    def edge_index(self, name: str) -> int:
        try:
            return self.edge_names.index(name) + 1
        except ValueError:
            raise MalformedInputError(f"no edge named {name!r}")

    def direction_name(self, e: int) -> str:
        name = self.edge_names[abs(e) - 1]
        return name if e > 0 else name + "^-1"

    def o(self, e: int) -> int:
        """Origin vertex of an oriented edge."""
        return self.origin[e - 1] if e > 0 else self.terminus[-e - 1]

    def t(self, e: int) -> int:
        return self.terminus[e - 1] if e > 0 else self.origin[-e - 1]

    def image(self, e: int) -> EdgePath:
        """Image path of an oriented edge, respecting reversal."""
        if e > 0:
            return self.edge_images[e - 1]
        return _reverse_path(self.edge_images[-e - 1])

    @property
    def directions(self) -> tuple[int, ...]:
        return tuple(
            d for k in range(1, self.n_edges + 1) for d in (k, -k)
        )

    @property
    def is_rose(self) -> bool:
        return len(self.vertices) == 1

    @property
    def is_positive(self) -> bool:
        return all(e > 0 for path in self.edge_images for e in path)

    def _require_path(self, path: EdgePath) -> None:
        for x, y in zip(path, path[1:]):
            if self.t(x) != self.o(y):
                raise MalformedInputError(
                    f"image path breaks at {self.direction_name(x)} "
                    f"-> {self.direction_name(y)}"
                )

    def _infer_vertex_image(self) -> tuple[int, ...]:
        vimg: dict[int, int] = {}
        for k in range(1, self.n_edges + 1):
            img = self.edge_images[k - 1]
            for v, w in ((self.o(k), self.o(img[0])), (self.t(k), self.t(img[-1]))):
                if vimg.setdefault(v, w) != w:
                    raise MalformedInputError(
                        f"vertex {self.vertices[v]!r} has conflicting images"
                    )
        missing = set(range(len(self.vertices))) - set(vimg)
        if missing:
            names = ", ".join(self.vertices[v] for v in sorted(missing))
            raise MalformedInputError(f"isolated vertices not allowed: {names}")
        return tuple(vimg[v] for v in range(len(self.vertices)))

    def _check_endpoints(self) -> None:
        if len(self.vertex_image) != len(self.vertices):
            raise MalformedInputError("vertex image table has the wrong length")
        for k in range(1, self.n_edges + 1):
            img = self.edge_images[k - 1]
            if (self.vertex_image[self.o(k)] != self.o(img[0])
                    or self.vertex_image[self.t(k)] != self.t(img[-1])):
                raise MalformedInputError(
                    f"image of edge {self.edge_names[k - 1]!r} does not "
                    "connect the image vertices"
                )

    def _check_train_track(self):
        if self.is_positive:
            return True, None
        try:
            for k in range(1, self.n_edges + 1):
                self._segment(k, self.check_depth, DEFAULT_LENGTH_CAP)
        except NotTrainTrackError as err:
            return False, (err.edge, err.power)
        except LengthCapExceededError:
            # Images too large to check in full; treat what was seen as fine.
            pass
        return True, None

    # -- iteration ---------------------------------------------------------

    def _segment(self, e: int, n: int, cap: int) -> EdgePath:
        """Image of the oriented edge e under the n-th iterate, reduced or bust."""
        if n == 0:
            return (e,)
        key = (e, n)
        hit = self._seg_cache.get(key)
        if hit is not None:
            return hit
        out: list[int] = []
        for x in self.image(e):
            piece = self._segment(x, n - 1, cap)
            if out and out[-1] == -piece[0]:
                raise NotTrainTrackError(
                    f"cancellation while iterating edge {self.direction_name(e)} "
                    f"at power {n}",
                    edge=e,
                    power=n,
                )
            out.extend(piece)
            if len(out) > cap:
                raise LengthCapExceededError(
                    f"iterated edge image exceeded {cap} letters", len(out), cap
                )
        path = tuple(out)
        self._seg_cache[key] = path
        self._seg_cache[(-e, n)] = _reverse_path(path)
        return path

    def power(self, n: int) -> "MarkedGraphMap":
        """The n-th iterate as a map of its own (n >= 1)."""
        if n < 1:
            raise MalformedInputError("map powers need n >= 1")
        vimg = list(range(len(self.vertices)))
        for _ in range(n):
            vimg = [self.vertex_image[v] for v in vimg]
        images = [
            self._segment(k, n, DEFAULT_LENGTH_CAP)
            for k in range(1, self.n_edges + 1)
        ]
        return MarkedGraphMap(
            self.vertices, self.edge_names, self.origin, self.terminus,
            images, vimg, check_depth=self.check_depth,
        )

    # -- marking -----------------------------------------------------------

    def _spanning_tree(self):
        """BFS tree from vertex 0 preferring the lowest edge index.

        Returns (tree_edge_set, generator_index) where generator_index maps
        each non-tree edge to 1..rank in edge order.
        """
        visited = {0}
        tree: set[int] = set()
        queue = [0]
        while queue:
            v = queue.pop(0)
            for k in range(1, self.n_edges + 1):
                for d in (k, -k):
                    if self.o(d) == v and self.t(d) not in visited:
                        visited.add(self.t(d))
                        tree.add(k)
                        queue.append(self.t(d))
        if len(visited) != len(self.vertices):
            raise MalformedInputError("graph is not connected")
        gens = {}
        for k in range(1, self.n_edges + 1):
            if k not in tree:
                gens[k] = len(gens) + 1
        return tree, gens

    @property
    def marking_rank(self) -> int:
        return self.n_edges if self.is_rose else \
            self.n_edges - len(self.vertices) + 1

    def path_to_word(self, path: Iterable[int]) -> Word:
        """Read a reduced edge path as a word via the marking.

        On a rose the k-th edge is the k-th generator.  Otherwise the word
        results from collapsing a deterministic spanning tree.
        """
        path = tuple(path)
        if self.is_rose:
            return Word(path)
        _, gens = self._spanning_tree()
        letters = []
        for e in path:
            g = gens.get(abs(e))
            if g is not None:
                letters.append(g if e > 0 else -g)
        return Word(letters)


def from_automorphism(phi: Automorphism,
                      check_depth: int = DEFAULT_CHECK_DEPTH) -> MarkedGraphMap:
    """The rose map induced by an automorphism table (forward images only)."""
    names = [letter_name(k) for k in range(1, phi.rank + 1)]
    return MarkedGraphMap(
        vertices=("*",),
        edge_names=names,
        origin=[0] * phi.rank,
        terminus=[0] * phi.rank,
        edge_images=[w.letters for w in phi.images],
        check_depth=check_depth,
    )


def parse_direction(f: MarkedGraphMap, text: str) -> int:
    """Parse ``a`` or ``a^-1`` (or uppercase ``A``) into an oriented edge."""
    token = text.strip()
    if token.endswith("^-1"):
        return -f.edge_index(token[:-3].strip())
    if len(token) == 1 and token.isupper():
        return -f.edge_index(token.lower())
    return f.edge_index(token)


def parse_graph_map(text: str,
                    check_depth: int = DEFAULT_CHECK_DEPTH) -> MarkedGraphMap:
    """Parse a marked graph map from its textual description.

    Recognized lines (``#`` starts a comment):

    * ``vertices: u v`` declares vertex names (optional, inferred otherwise).
    * ``edge a: u -> v`` declares an edge with its endpoints.
    * ``image a -> a b^-1`` gives the image path of an edge.
    * ``vertex u -> v`` pins a vertex image (optional, inferred otherwise).
    * a bare ``a -> a b`` line is shorthand for an image line; a file of
      only such lines describes a rose with one loop per named edge.
    """
    vertex_names: list[str] = []
    edge_decls: list[tuple[str, str, str]] = []
    image_lines: dict[str, str] = {}
    vertex_lines: dict[str, str] = {}

    def arrow(rest: str, lineno: int) -> tuple[str, str]:
        if "->" not in rest:
            raise MalformedInputError(f"line {lineno}: expected '->'")
        left, right = rest.split("->", 1)
        return left.strip(), right.strip()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("vertices:"):
            vertex_names.extend(line[len("vertices:"):].split())
        elif line.startswith("edge "):
            decl, rest = line[len("edge "):].split(":", 1)
            u, v = arrow(rest, lineno)
            edge_decls.append((decl.strip(), u, v))
        elif line.startswith("image "):
            name, path = arrow(line[len("image "):], lineno)
            image_lines[name] = path
        elif line.startswith("vertex "):
            u, v = arrow(line[len("vertex "):], lineno)
            vertex_lines[u] = v
        elif "->" in line:
            name, path = arrow(line, lineno)
            image_lines[name] = path
        else:
            raise MalformedInputError(f"line {lineno}: cannot parse {line!r}")

    if not image_lines:
        raise MalformedInputError("graph map needs at least one image line")

    if not edge_decls:
        # Rose shorthand: loops at a single vertex, edges in name order.
        names = sorted(image_lines)
        vertex_names = vertex_names or ["*"]
        if len(vertex_names) != 1:
            raise MalformedInputError("rose shorthand allows a single vertex")
        edge_decls = [(n, vertex_names[0], vertex_names[0]) for n in names]

    if not vertex_names:
        seen = []
        for _, u, v in edge_decls:
            for name in (u, v):
                if name not in seen:
                    seen.append(name)
        vertex_names = seen
    vindex = {name: i for i, name in enumerate(vertex_names)}

    edge_names, origin, terminus = [], [], []
    for name, u, v in edge_decls:
        if len(name) != 1 or not name.islower():
            raise MalformedInputError(f"edge name {name!r} must be one lowercase letter")
        if u not in vindex or v not in vindex:
            raise MalformedInputError(f"edge {name!r} uses an undeclared vertex")
        edge_names.append(name)
        origin.append(vindex[u])
        terminus.append(vindex[v])
    eindex = {name: k + 1 for k, name in enumerate(edge_names)}

    def parse_path(s: str) -> list[int]:
        out = []
        for token in s.split():
            if token.endswith("^-1"):
                sign, token = -1, token[:-3]
            else:
                sign = 1
            if len(token) != 1:
                if sign < 0:
                    raise MalformedInputError(
                        f"cannot apply ^-1 to the multi-edge token {token!r}"
                    )
                for ch in token:
                    if ch.lower() not in eindex:
                        raise MalformedInputError(f"unknown edge {ch!r} in path")
                    out.append(-eindex[ch.lower()] if ch.isupper() else eindex[ch])
                continue
            ch = token
            if ch.isupper():
                sign, ch = -sign, ch.lower()
            if ch not in eindex:
                raise MalformedInputError(f"unknown edge {ch!r} in path")
            out.append(sign * eindex[ch])
        return out

    missing = set(edge_names) - set(image_lines)
    if missing:
        raise MalformedInputError(f"missing image for edges: {sorted(missing)}")
    extra = set(image_lines) - set(edge_names)
    if extra:
        raise MalformedInputError(f"image for unknown edges: {sorted(extra)}")
    images = [parse_path(image_lines[n]) for n in edge_names]

    vertex_image = None
    if vertex_lines:
        vimg = {}
        for u, v in vertex_lines.items():
            if u not in vindex or v not in vindex:
                raise MalformedInputError(f"vertex line uses unknown name {u!r} or {v!r}")
            vimg[vindex[u]] = vindex[v]
        if len(vimg) != len(vertex_names):
            raise MalformedInputError("vertex lines must cover every vertex or none")
        vertex_image = [vimg[i] for i in range(len(vertex_names))]

    return MarkedGraphMap(
        vertex_names, edge_names, origin, terminus, images, vertex_image,
        check_depth=check_depth,
    )


# -- transition matrices ---------------------------------------------------

def transition_matrix(f: MarkedGraphMap) -> np.ndarray:
    """Edge-crossing counts: entry (i, j) counts edge i in the image of j.

    Columns index source edges, rows the edges crossed, in either direction.
    """
    m = np.zeros((f.n_edges, f.n_edges), dtype=np.int64)
    for j in range(1, f.n_edges + 1):
        for e in f.edge_images[j - 1]:
            m[abs(e) - 1, j - 1] += 1
    return m


class PrimitivityCheck(NamedTuple):
    primitive: bool
    witness_power: int | None


def is_primitive(matrix: np.ndarray) -> PrimitivityCheck:
    """Does some power of the nonnegative matrix have all entries positive?

    Only powers up to the Wielandt bound (n-1)^2 + 1 need checking; the
    witness returned is the least positive power.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MalformedInputError("transition matrix must be square")
    if (m < 0).any():
        raise MalformedInputError("transition matrix entries must be nonnegative")
    n = m.shape[0]
    bound = (n - 1) ** 2 + 1
    adj = m > 0
    reach = adj.copy()
    for k in range(1, bound + 1):
        if k > 1:
            reach = (reach @ adj) > 0
        if reach.all():
            return PrimitivityCheck(True, k)
    return PrimitivityCheck(False, None)


def pf_data(matrix: np.ndarray, tol: float = 1e-9,
            max_iter: int = 10**4) -> tuple[float, np.ndarray]:
    """Perron-Frobenius eigenvalue and eigenvector by power iteration.

    Stops when successive Rayleigh quotients differ by less than ``tol``.
    The eigenvector is normalized to sum 1.  Requires a primitive matrix.
    """
    m = np.asarray(matrix, dtype=float)
    if not is_primitive(m).primitive:
        raise NotPrimitiveError("matrix is not primitive, no spectral gap promised")
    v = np.ones(m.shape[0]) / m.shape[0]
    previous = None
    for _ in range(max_iter):
        mv = m @ v
        rayleigh = float(v @ mv) / float(v @ v)
        v = mv / mv.sum()
        if previous is not None and abs(rayleigh - previous) < tol:
            return rayleigh, v / v.sum()
        previous = rayleigh
    raise ResourceCapError(
        f"power iteration did not converge in {max_iter} iterations"
    )


# -- leaves ----------------------------------------------------------------

def leaf_segment(f: MarkedGraphMap, edge: int, n: int,
                 cap: int = DEFAULT_LENGTH_CAP) -> EdgePath:
    """The image of an oriented edge under the n-th iterate, as a reduced path.

    Raises NotTrainTrackError on cancellation and LengthCapExceededError
    past the letter cap.
    """
    if n < 0:
        raise MalformedInputError("leaf segments use n >= 0")
    if edge == 0 or abs(edge) > f.n_edges:
        raise MalformedInputError(f"no oriented edge {edge}")
    if not f.train_track_ok:
        e, p = f.train_track_witness
        raise NotTrainTrackError(
            f"map failed the train-track check at edge {f.direction_name(e)}, "
            f"power {p}",
            edge=e,
            power=p,
        )
    return f._segment(edge, n, cap)


def periodic_directions(f: MarkedGraphMap) -> list[tuple[int, int]]:
    """Directions whose iterated image starts with themselves, with period.

    The first letter of the image defines a self-map of directions; a
    direction is periodic exactly when it lies on a cycle, and the period
    is the cycle length (at most the number of directions).
    """
    first = {d: f.image(d)[0] for d in f.directions}
    out = []
    for d in f.directions:
        cur, steps = d, 0
        while True:
            cur = first[cur]
            steps += 1
            if cur == d:
                out.append((d, steps))
                break
            if steps > len(first):
                break
    return out


@dataclass
class EigenRay:
    """A periodic direction together with its nested prefix generator."""

    direction: int
    period: int
    base_vertex: str
    _map: MarkedGraphMap = field(repr=False, compare=False)

    @property
    def degenerate(self) -> bool:
        """True when the ray is eventually constant instead of infinite."""
        return len(leaf_segment(self._map, self.direction, self.period)) == 1

    def prefix(self, length: int, cap: int = DEFAULT_LENGTH_CAP) -> EdgePath:
        """A reduced initial segment of the ray with ``length`` edges."""
        if length < 1:
            raise MalformedInputError("prefix length must be positive")
        prev = (self.direction,)
        k = 0
        while len(prev) < length:
            k += 1
            cur = leaf_segment(self._map, self.direction, k * self.period, cap)
            if cur[:len(prev)] != prev:
                raise NotTrainTrackError(
                    "eigenray prefixes failed to nest",
                    edge=self.direction,
                    power=k * self.period,
                )
            if len(cur) == len(prev):
                raise DegenerateRayError(
                    f"ray at {self._map.direction_name(self.direction)} is "
                    f"eventually constant with {len(cur)} edges",
                    path=cur,
                )
            prev = cur
        return prev[:length]


def eigenray(f: MarkedGraphMap, direction: int) -> EigenRay:
    periods = dict(periodic_directions(f))
    if direction not in periods:
        raise MalformedInputError(
            f"direction {f.direction_name(direction)} is not periodic"
        )
    return EigenRay(
        direction=direction,
        period=periods[direction],
        base_vertex=f.vertices[f.o(direction)],
        _map=f,
    )


def eigenray_prefix(f: MarkedGraphMap, direction: int, length: int,
                    cap: int = DEFAULT_LENGTH_CAP) -> EdgePath:
    """Initial segment of the eigenray at a periodic direction."""
    return eigenray(f, direction).prefix(length, cap)


def diagonal_pairs(f: MarkedGraphMap) -> list[tuple[EigenRay, EigenRay]]:
    """Unordered pairs of distinct periodic directions at a common vertex."""
    rays: dict[int, EigenRay] = {}
    by_vertex: dict[int, list[int]] = {}
    for d, _ in periodic_directions(f):
        rays[d] = eigenray(f, d)
        by_vertex.setdefault(f.o(d), []).append(d)
    pairs = []
    for _, dirs in sorted(by_vertex.items()):
        for i, d1 in enumerate(dirs):
            for d2 in dirs[i + 1:]:
                pairs.append((rays[d1], rays[d2]))
    return pairs


@dataclass(frozen=True)
class LeafLanguage:
    """Length-L window inventory of iterated edge images."""

    length: int
    n_max: int
    factors: frozenset
    stabilized_at: int | None


def leaf_language(f: MarkedGraphMap, length: int, n_max: int,
                  cap: int = DEFAULT_LENGTH_CAP) -> LeafLanguage:
    """All length-L factors of the n-th iterates of every direction.

    Windows are collected from both orientations, so the set is closed
    under path reversal.  ``stabilized_at`` is the first n whose window set
    already equals everything seen through n_max, or None when the sets
    were still growing at the budget.
    """
    if length < 1:
        raise MalformedInputError("window length must be positive")
    sets: list[frozenset] = []
    for n in range(n_max + 1):
        windows = set()
        for d in f.directions:
            seg = leaf_segment(f, d, n, cap)
            for i in range(len(seg) - length + 1):
                windows.add(seg[i:i + length])
        sets.append(frozenset(windows))
    stabilized_at = None
    for n in range(1, n_max + 1):
        if sets[n] == sets[n - 1] and all(s == sets[n] for s in sets[n:]):
            stabilized_at = n
            break
    return LeafLanguage(length, n_max, sets[-1], stabilized_at)
