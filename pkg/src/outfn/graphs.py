"""Marked graphs, reduced edge paths, circuits, and core-subgraph carrying.

The currency of every operation in this package is the *oriented edge*:
a pair ``(edge_id, sign)`` with ``sign`` equal to +1 for the edge's chosen
orientation and -1 for its reversal.  Words are tuples of oriented edges.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

OEdge = tuple[str, int]
Word = tuple[OEdge, ...]


class StructureError(ValueError):
    """Raised for malformed graphs, paths, or maps."""


class TrivialClassError(ValueError):
    """Raised when a word reduces to the trivial conjugacy class."""


# ---------------------------------------------------------------------------
# word helpers


def rev(oe: OEdge) -> OEdge:
    return (oe[0], -oe[1])


def rev_word(word: Sequence[OEdge]) -> Word:
    return tuple((e, -s) for (e, s) in reversed(word))


def reduce_word(word: Sequence[OEdge]) -> Word:
    """Free reduction of a word, ignoring graph structure."""
    out: list[OEdge] = []
    for oe in word:
        if out and out[-1][0] == oe[0] and out[-1][1] == -oe[1]:
            out.pop()
        else:
            out.append(oe)
    return tuple(out)


def cyclic_reduce_word(word: Sequence[OEdge]) -> Word:
    w = reduce_word(word)
    while len(w) >= 2 and w[0][0] == w[-1][0] and w[0][1] == -w[-1][1]:
        w = w[1:-1]
    return w


def _oedge_key(oe: OEdge) -> tuple[str, int]:
    return (oe[0], 0 if oe[1] > 0 else 1)


def canonical_rotation(word: Sequence[OEdge]) -> Word:
    """Lexicographically least rotation under the fixed oriented-edge order."""
    w = tuple(word)
    if not w:
        return w
    key = lambda rot: tuple(_oedge_key(x) for x in rot)
    return min((w[i:] + w[:i] for i in range(len(w))), key=key)


def fmt_oedge(oe: OEdge) -> str:
    return oe[0] if oe[1] > 0 else oe[0] + "^-1"


def fmt_word(word: Sequence[OEdge]) -> str:
    return " ".join(fmt_oedge(oe) for oe in word) if word else "1"


def parse_word(text: str) -> Word:
    """Parse a whitespace-separated edge word, reversal written ``e^-1``."""
    out = []
    for tok in text.split():
        if tok == "1":
            continue
        if tok.endswith("^-1"):
            out.append((tok[:-3], -1))
        elif tok.endswith("^1"):
            out.append((tok[:-2], 1))
        else:
            out.append((tok, 1))
    return tuple(out)


def is_subword(needle: Sequence[OEdge], hay: Sequence[OEdge]) -> bool:
    n, h = tuple(needle), tuple(hay)
    if not n:
        return True
    return any(h[i : i + len(n)] == n for i in range(len(h) - len(n) + 1))


def occurrences(needle: Sequence[OEdge], hay: Sequence[OEdge]) -> list[int]:
    n, h = tuple(needle), tuple(hay)
    if not n:
        return []
    return [i for i in range(len(h) - len(n) + 1) if h[i : i + len(n)] == n]


# ---------------------------------------------------------------------------
# marked graphs


class MarkedGraph:
    """A finite connected graph with no valence-1 vertices, marked by F_n.

    The marking sends each rose generator to a loop, based at a common
    basepoint, given as a reduced edge word.  Internal constructions
    (fold quotients, restrictions) may carry ``marking=None``.
    """

    def __init__(
        self,
        vertices: Iterable[str],
        edges: dict[str, tuple[str, str]],
        rank: Optional[int] = None,
        marking: Optional[dict[str, Word]] = None,
        basepoint: Optional[str] = None,
        check: bool = True,
    ):
        self.vertices = frozenset(vertices)
        self.edges = dict(edges)
        self.rank = (
            rank if rank is not None else len(self.edges) - len(self.vertices) + 1
        )
        self.marking = dict(marking) if marking is not None else None
        self.basepoint = basepoint
        if self.marking is not None and self.basepoint is None:
            for w in self.marking.values():
                if w:
                    self.basepoint = self.edges[w[0][0]][0 if w[0][1] > 0 else 1]
                    break
        if check:
            self._check()
        self._adj: Optional[dict[str, list[OEdge]]] = None

    # -- structure ----------------------------------------------------------

    def _check(self) -> None:
        for e, (u, v) in self.edges.items():
            if u not in self.vertices or v not in self.vertices:
                raise StructureError(f"edge {e} has endpoint outside vertex set")
        if len(self.edges) - len(self.vertices) != self.rank - 1:
            raise StructureError(
                f"Euler characteristic mismatch: {len(self.edges)} edges, "
                f"{len(self.vertices)} vertices, rank {self.rank}"
            )
        if not self._connected():
            raise StructureError("graph is not connected")
        for v in self.vertices:
            if self.valence(v) == 1:
                raise StructureError(f"vertex {v} has valence 1")
        if self.marking is not None:
            if set(self.marking) != {f"x{i}" for i in range(1, self.rank + 1)} and len(
                self.marking
            ) != self.rank:
                raise StructureError("marking must assign every rose generator")
            for g, w in self.marking.items():
                if reduce_word(w) != tuple(w):
                    raise StructureError(f"marking of {g} is not reduced")
                p = self.path(w) if w else None
                if p is not None and (
                    p.start != self.basepoint or p.end != self.basepoint
                ):
                    raise StructureError(
                        f"marking of {g} is not a loop at the basepoint"
                    )

    def _connected(self) -> bool:
        if not self.vertices:
            return False
        seen = {next(iter(self.vertices))}
        frontier = list(seen)
        while frontier:
            v = frontier.pop()
            for e, (a, b) in self.edges.items():
                for x, y in ((a, b), (b, a)):
                    if x == v and y not in seen:
                        seen.add(y)
                        frontier.append(y)
        return seen == self.vertices

    def valence(self, v: str) -> int:
        n = 0
        for u, w in self.edges.values():
            n += (u == v) + (w == v)
        return n

    def init(self, oe: OEdge) -> str:
        u, v = self.edges[oe[0]]
        return u if oe[1] > 0 else v

    def term(self, oe: OEdge) -> str:
        u, v = self.edges[oe[0]]
        return v if oe[1] > 0 else u

    def directions(self, v: str) -> list[OEdge]:
        """Oriented edges emanating from v, in sorted order."""
        if self._adj is None:
            adj: dict[str, list[OEdge]] = {u: [] for u in self.vertices}
            for e in sorted(self.edges):
                u, w = self.edges[e]
                adj[u].append((e, 1))
                adj[w].append((e, -1))
            for u in adj:
                adj[u].sort(key=_oedge_key)
            self._adj = adj
        return self._adj[v]

    def all_directions(self) -> list[OEdge]:
        return [d for v in sorted(self.vertices) for d in self.directions(v)]

    # -- paths ---------------------------------------------------------------

    def composable(self, word: Sequence[OEdge]) -> bool:
        for x, y in zip(word, word[1:]):
            if self.term(x) != self.init(y):
                return False
        return all(e in self.edges for (e, _) in word)

    def path(self, word: Sequence[OEdge], base: Optional[str] = None) -> "EdgePath":
        return EdgePath(self, tuple(word), base=base)

    def trivial_path(self, base: str) -> "EdgePath":
        return EdgePath(self, (), base=base)

    def circuit(self, word: Sequence[OEdge]) -> "Circuit":
        return Circuit(self, tuple(word))

    # -- marking -------------------------------------------------------------

    def rose_generators(self) -> list[str]:
        if self.marking is None:
            raise StructureError("graph carries no marking")
        return sorted(self.marking)

    def spanning_tree(self, root: Optional[str] = None) -> dict[str, Word]:
        """Map each vertex to the tree path (edge word) from the root."""
        root = root or self.basepoint or min(self.vertices)
        paths: dict[str, Word] = {root: ()}
        frontier = [root]
        while frontier:
            v = frontier.pop(0)
            for oe in self.directions(v):
                w = self.term(oe)
                if w not in paths:
                    paths[w] = paths[v] + (oe,)
                    frontier.append(w)
        return paths

    def loop_word(self, path_word: Sequence[OEdge]) -> Word:
        """Close up a path into a loop at the basepoint through a spanning tree."""
        tree = self.spanning_tree()
        if not path_word:
            return ()
        u = self.init(path_word[0])
        v = self.term(path_word[-1])
        return reduce_word(tree[u] + tuple(path_word) + rev_word(tree[v]))

    @staticmethod
    def rose(labels: Sequence[str], vertex: str = "v") -> "MarkedGraph":
        """The rose on the given edge labels with the identity marking."""
        edges = {a: (vertex, vertex) for a in labels}
        marking = {a: ((a, 1),) for a in labels}
        return MarkedGraph([vertex], edges, rank=len(labels), marking=marking,
                           basepoint=vertex)


# ---------------------------------------------------------------------------
# paths and circuits


@dataclass(frozen=True)
class EdgePath:
    """A reduced edge path.  Trivial paths carry an explicit basepoint."""

    graph: MarkedGraph = field(compare=False)
    edges: Word = ()
    base: Optional[str] = None

    def __post_init__(self):
        if not self.graph.composable(self.edges):
            raise StructureError(f"non-composable edge sequence {fmt_word(self.edges)}")
        if reduce_word(self.edges) != self.edges:
            raise StructureError(f"path {fmt_word(self.edges)} is not reduced")
        if not self.edges and self.base is None:
            raise StructureError("trivial path needs a basepoint")
        if not self.edges and self.base not in self.graph.vertices:
            raise StructureError(f"basepoint {self.base} is not a vertex")

    @property
    def start(self) -> str:
        return self.graph.init(self.edges[0]) if self.edges else self.base  # type: ignore[return-value]

    @property
    def end(self) -> str:
        return self.graph.term(self.edges[-1]) if self.edges else self.base  # type: ignore[return-value]

    def __len__(self) -> int:
        return len(self.edges)

    def is_trivial(self) -> bool:
        return not self.edges

    def reverse(self) -> "EdgePath":
        return EdgePath(self.graph, rev_word(self.edges), base=self.base)

    def concat(self, other: "EdgePath") -> "EdgePath":
        if self.end != other.start:
            raise StructureError("paths do not concatenate")
        return tighten(self.graph, self.edges + other.edges, base=self.start)

    def vertex_at(self, i: int) -> str:
        """Vertex after the first i edges."""
        if i == 0:
            return self.start
        return self.graph.term(self.edges[i - 1])

    def subpath(self, i: int, j: int) -> "EdgePath":
        return EdgePath(self.graph, self.edges[i:j], base=self.vertex_at(i))

    def is_subpath_of(self, other: "EdgePath") -> bool:
        if self.is_trivial():
            return True
        return is_subword(self.edges, other.edges)

    def __str__(self) -> str:
        return fmt_word(self.edges) if self.edges else f"1@{self.base}"


@dataclass(frozen=True)
class Circuit:
    """A cyclically reduced circuit stored in its canonical rotation."""

    graph: MarkedGraph = field(compare=False)
    edges: Word = ()

    def __post_init__(self):
        w = tuple(self.edges)
        if not w:
            raise TrivialClassError("trivial conjugacy class has no circuit")
        if cyclic_reduce_word(w) != w or canonical_rotation(w) != w:
            raise StructureError("circuit must be cyclically reduced and canonical")
        if not self.graph.composable(w) or self.graph.term(w[-1]) != self.graph.init(w[0]):
            raise StructureError("circuit edges do not close up")

    def __len__(self) -> int:
        return len(self.edges)

    def reverse(self) -> "Circuit":
        return cyclic_tighten(self.graph, rev_word(self.edges))

    def rotations(self) -> Iterator[Word]:
        w = self.edges
        for i in range(len(w)):
            yield w[i:] + w[:i]

    def as_path(self, rotation: int = 0) -> EdgePath:
        w = self.edges[rotation:] + self.edges[:rotation]
        return EdgePath(self.graph, w)

    def __str__(self) -> str:
        return fmt_word(self.edges)


def tighten(
    graph: MarkedGraph, word: Sequence[OEdge], base: Optional[str] = None
) -> EdgePath:
    """Reduce a composable edge word to the unique reduced path [w].

    A totally cancelling word yields the trivial path at its initial vertex
    (or at ``base`` when the input word is already empty).
    """
    w = tuple(word)
    if w and not graph.composable(w):
        raise StructureError(f"non-composable edge sequence {fmt_word(w)}")
    if w and base is None:
        base = graph.init(w[0])
    return EdgePath(graph, reduce_word(w), base=base)


def cyclic_tighten(graph: MarkedGraph, word: Sequence[OEdge]) -> Circuit:
    """Reduce a closed edge word to the canonical cyclically reduced circuit."""
    w = tuple(word)
    if w and not graph.composable(w):
        raise StructureError(f"non-composable edge sequence {fmt_word(w)}")
    if w and graph.term(w[-1]) != graph.init(w[0]):
        raise StructureError("word does not close up")
    w = cyclic_reduce_word(w)
    if not w:
        raise TrivialClassError("word reduces to the trivial class")
    return Circuit(graph, canonical_rotation(w))


# ---------------------------------------------------------------------------
# subgraphs and immersions


@dataclass(frozen=True)
class Subgraph:
    """An edge subset of a marked graph, with derived component data."""

    graph: MarkedGraph = field(compare=False)
    edge_ids: frozenset[str] = frozenset()

    def vertex_set(self) -> frozenset[str]:
        vs = set()
        for e in self.edge_ids:
            u, v = self.graph.edges[e]
            vs.add(u)
            vs.add(v)
        return frozenset(vs)

    def components(self) -> list[frozenset[str]]:
        """Edge sets of the connected components."""
        remaining = set(self.edge_ids)
        comps = []
        while remaining:
            seed = remaining.pop()
            comp = {seed}
            verts = set(self.graph.edges[seed])
            changed = True
            while changed:
                changed = False
                for e in list(remaining):
                    u, v = self.graph.edges[e]
                    if u in verts or v in verts:
                        comp.add(e)
                        verts.update((u, v))
                        remaining.discard(e)
                        changed = True
            comps.append(frozenset(comp))
        return comps

    def component_ranks(self) -> list[int]:
        ranks = []
        for comp in self.components():
            vs = set()
            for e in comp:
                vs.update(self.graph.edges[e])
            ranks.append(len(comp) - len(vs) + 1)
        return ranks

    def is_core(self) -> bool:
        verts = self.vertex_set()
        for v in verts:
            n = 0
            for e in self.edge_ids:
                u, w = self.graph.edges[e]
                n += (u == v) + (w == v)
            if n == 1:
                return False
        return True

    def core(self) -> "Subgraph":
        """The unique core subgraph: iteratively strip valence-1 vertices,
        then drop contractible components."""
        edges = set(self.edge_ids)
        while True:
            val: dict[str, int] = {}
            for e in edges:
                u, v = self.graph.edges[e]
                val[u] = val.get(u, 0) + 1
                val[v] = val.get(v, 0) + 1
            hanging = {v for v, n in val.items() if n == 1}
            if not hanging:
                break
            edges = {
                e
                for e in edges
                if not (set(self.graph.edges[e]) & hanging)
            }
        sub = Subgraph(self.graph, frozenset(edges))
        keep = set()
        for comp, rank in zip(sub.components(), sub.component_ranks()):
            if rank > 0:
                keep |= comp
        return Subgraph(self.graph, frozenset(keep))


class CoreSubgraph(Subgraph):
    """A subgraph with no valence-1 vertices."""

    def __post_init__(self):
        if not self.is_core():
            raise StructureError("subgraph has a valence-1 vertex")


@dataclass
class Immersion:
    """A finite graph K together with a locally injective map into G.

    Each K-edge is sent to a nontrivial reduced path in G; isolated
    K-vertices are sent to G-vertices.  Local injectivity means the initial
    directions of the outgoing image paths are pairwise distinct at every
    K-vertex.
    """

    graph: MarkedGraph
    k_vertices: frozenset[str]
    k_edges: dict[str, tuple[str, str]]
    edge_images: dict[str, Word]
    vertex_images: dict[str, str]

    def __post_init__(self):
        for ke, (u, v) in self.k_edges.items():
            w = self.edge_images[ke]
            if not w:
                raise StructureError(f"K-edge {ke} has trivial image")
            if self.graph.init(w[0]) != self.vertex_images[u] or self.graph.term(
                w[-1]
            ) != self.vertex_images[v]:
                raise StructureError(f"K-edge {ke} image has wrong endpoints")
            if reduce_word(w) != tuple(w):
                raise StructureError(f"K-edge {ke} image is not reduced")
        for kv in self.k_vertices:
            dirs = [img[0] for (_, img) in self._outgoing(kv)]
            if len(dirs) != len(set(dirs)):
                raise StructureError(f"map is not an immersion at K-vertex {kv}")

    def _outgoing(self, kv: str) -> list[tuple[OEdge, Word]]:
        """Outgoing K-directions at kv as (K-oriented-edge, image word)."""
        out = []
        for ke, (u, v) in sorted(self.k_edges.items()):
            if u == kv:
                out.append(((ke, 1), self.edge_images[ke]))
            if v == kv:
                out.append(((ke, -1), rev_word(self.edge_images[ke])))
        return out

    def vertices_over(self, gv: str) -> list[str]:
        return [kv for kv in sorted(self.k_vertices) if self.vertex_images[kv] == gv]

    def lift_path(self, word: Word, start: str) -> Optional[str]:
        """Greedy unique lift of a reduced G-word from K-vertex ``start``.

        Returns the terminal K-vertex of the lift, or None if the word does
        not lift to a K-path decomposing into full K-edge images.
        """
        kv = start
        i = 0
        n = len(word)
        while i < n:
            step = None
            for koe, img in self._outgoing(kv):
                if img[0] == word[i]:
                    step = (koe, img)
                    break
            if step is None:
                return None
            koe, img = step
            if tuple(word[i : i + len(img)]) != tuple(img):
                return None
            i += len(img)
            ke, s = koe
            u, v = self.k_edges[ke]
            kv = v if s > 0 else u
        return kv

    def carries_path(self, word: Word, start_gv: str) -> bool:
        return any(
            self.lift_path(word, kv) is not None for kv in self.vertices_over(start_gv)
        )

    def carries_circuit(self, c: Circuit) -> bool:
        for rot in c.rotations():
            base = self.graph.init(rot[0])
            for kv in self.vertices_over(base):
                if self.lift_path(rot, kv) == kv:
                    return True
        return False

    @staticmethod
    def from_subgraph(sub: Subgraph) -> "Immersion":
        g = sub.graph
        kvs = sub.vertex_set()
        kes = {e: g.edges[e] for e in sub.edge_ids}
        return Immersion(
            graph=g,
            k_vertices=kvs,
            k_edges=kes,
            edge_images={e: ((e, 1),) for e in sub.edge_ids},
            vertex_images={v: v for v in kvs},
        )


def stallings_fold_immersion(
    graph: MarkedGraph, loops: Sequence[Word], base: str
) -> Immersion:
    """Fold a wedge of loops (words in G read as G-labelled paths) into an
    immersed graph over G.  The result represents the subgroup the loops
    generate, Stallings style: edges are labelled by single G-edges.
    """
    # Build the wedge: vertices are ints, edges labelled by a single OEdge.
    nxt = itertools.count()
    basev = next(nxt)
    edges: dict[int, tuple[int, int, OEdge]] = {}
    eid = itertools.count()
    for w in loops:
        prev = basev
        for i, oe in enumerate(w):
            end = basev if i == len(w) - 1 else next(nxt)
            edges[next(eid)] = (prev, end, oe)
            prev = end

    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    changed = True
    while changed:
        changed = False
        # collect directions per vertex: (label) -> list of (edge id, sign)
        dirs: dict[tuple[int, OEdge], list[tuple[int, int]]] = {}
        dead = set()
        for i, (u, v, lab) in edges.items():
            ru, rv = find(u), find(v)
            if ru == rv and lab == lab:  # keep loops, nothing special
                pass
            dirs.setdefault((ru, lab), []).append((i, 1))
            dirs.setdefault((rv, rev(lab)), []).append((i, -1))
        for (_, _), incident in dirs.items():
            if len(incident) > 1:
                # fold: identify the far endpoints, delete duplicates
                (i0, s0), (i1, s1) = incident[0], incident[1]
                if i0 == i1:
                    continue
                u0, v0, _ = edges[i0]
                u1, v1, _ = edges[i1]
                far0 = v0 if s0 > 0 else u0
                far1 = v1 if s1 > 0 else u1
                union(far0, far1)
                dead.add(i1)
                changed = True
                break
        for i in dead:
            del edges[i]

    kvname = lambda r: f"k{r}"
    k_edges = {}
    edge_images = {}
    kvs = {find(basev)}
    for i, (u, v, lab) in edges.items():
        ru, rv = find(u), find(v)
        kvs.update((ru, rv))
        k_edges[f"e{i}"] = (kvname(ru), kvname(rv))
        edge_images[f"e{i}"] = (lab,)
    vertex_images = {}
    # Recover G-vertices by walking the loops again is unnecessary: each
    # folded vertex touches some edge whose label pins its G-image.
    for i, (u, v, lab) in edges.items():
        vertex_images[kvname(find(u))] = graph.init(lab)
        vertex_images[kvname(find(v))] = graph.term(lab)
    vertex_images.setdefault(kvname(find(basev)), base)
    return Immersion(
        graph=graph,
        k_vertices=frozenset(kvname(r) for r in kvs),
        k_edges=k_edges,
        edge_images=edge_images,
        vertex_images=vertex_images,
    )


def carries_class(sub: Immersion | Subgraph, c: Circuit) -> bool:
    """True iff the circuit lifts to a closed loop in the immersed graph."""
    imm = Immersion.from_subgraph(sub) if isinstance(sub, Subgraph) else sub
    return imm.carries_circuit(c)
