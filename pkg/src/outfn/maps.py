"""Topological representatives f: G -> G' and the induced machinery.

Covers the induced path map f#, the direction map Df, turn legality,
bounded cancellation constants via fold factorization, and the
double-sharp operator f## computed by bounded extension enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import freegroup
from .graphs import (
    Circuit,
    EdgePath,
    MarkedGraph,
    OEdge,
    StructureError,
    Word,
    cyclic_tighten,
    fmt_word,
    reduce_word,
    rev_word,
    tighten,
)


class NotHomotopyEquivalence(ValueError):
    pass


class GrowthGuard(RuntimeError):
    """Raised when an iterated image exceeds the configured blowup bound."""


@dataclass(frozen=True)
class Direction:
    vertex: str
    edge: OEdge

    def __post_init__(self):
        pass  # initial-vertex coherence is checked by GraphMap.direction


class GraphMap:
    """A map of marked graphs taking vertices to vertices and edges to
    nontrivial reduced paths."""

    def __init__(
        self,
        domain: MarkedGraph,
        codomain: MarkedGraph,
        edge_images: dict[str, Word],
        vertex_images: Optional[dict[str, str]] = None,
        check: bool = True,
    ):
        self.domain = domain
        self.codomain = codomain
        self.edge_images = {e: tuple(w) for e, w in edge_images.items()}
        if vertex_images is None:
            vertex_images = self._derive_vertex_images()
        self.vertex_images = dict(vertex_images)
        if check:
            self._check()

    def _derive_vertex_images(self) -> dict[str, str]:
        vimg: dict[str, str] = {}
        for e, (u, v) in self.domain.edges.items():
            w = self.edge_images.get(e)
            if not w:
                continue
            for vert, img in ((u, self.codomain.init(w[0])), (v, self.codomain.term(w[-1]))):
                if vert in vimg and vimg[vert] != img:
                    raise StructureError(
                        f"inconsistent vertex image at {vert}: {vimg[vert]} vs {img}"
                    )
                vimg[vert] = img
        for v in self.domain.vertices:
            if v not in vimg:
                raise StructureError(f"vertex image of {v} cannot be derived")
        return vimg

    def _check(self) -> None:
        for e in self.domain.edges:
            w = self.edge_images.get(e)
            if not w:
                raise StructureError(f"edge {e} has trivial image")
            if reduce_word(w) != w:
                raise StructureError(f"image of {e} is not reduced")
            if not self.codomain.composable(w):
                raise StructureError(f"image of {e} is not composable")
            u, v = self.domain.edges[e]
            if (
                self.codomain.init(w[0]) != self.vertex_images[u]
                or self.codomain.term(w[-1]) != self.vertex_images[v]
            ):
                raise StructureError(f"image of {e} has incoherent endpoints")

    # -- basic induced maps ---------------------------------------------------

    def image_of(self, oe: OEdge) -> Word:
        w = self.edge_images[oe[0]]
        return w if oe[1] > 0 else rev_word(w)

    def map_word(self, word: Word, guard: Optional[int] = None) -> Word:
        out: list[OEdge] = []
        for oe in word:
            for x in self.image_of(oe):
                if out and out[-1][0] == x[0] and out[-1][1] == -x[1]:
                    out.pop()
                else:
                    out.append(x)
            if guard is not None and len(out) > guard:
                raise GrowthGuard(f"image exceeded {guard} edges")
        return tuple(out)

    def map_path(self, p: EdgePath, guard: Optional[int] = None) -> EdgePath:
        if p.is_trivial():
            return self.codomain.trivial_path(self.vertex_images[p.base])
        return tighten(
            self.codomain,
            self.map_word(p.edges, guard=guard),
            base=self.vertex_images[p.start],
        )

    def map_circuit(self, c: Circuit, guard: Optional[int] = None) -> Circuit:
        return cyclic_tighten(self.codomain, self.map_word(c.edges, guard=guard))

    def iterate_path(self, p: EdgePath, k: int, guard: Optional[int] = None) -> EdgePath:
        if self.domain is not self.codomain:
            raise StructureError("iteration needs a self map")
        for _ in range(k):
            p = self.map_path(p, guard=guard)
        return p

    def iterate_circuit(self, c: Circuit, k: int, guard: Optional[int] = None) -> Circuit:
        for _ in range(k):
            c = self.map_circuit(c, guard=guard)
        return c

    # -- directions and turns ---------------------------------------------------

    def direction(self, oe: OEdge) -> Direction:
        return Direction(self.domain.init(oe), oe)

    def derivative(self, d: OEdge | Direction) -> Direction:
        oe = d.edge if isinstance(d, Direction) else d
        img = self.image_of(oe)
        return Direction(self.codomain.init(img[0]), img[0])

    def d_edge(self, oe: OEdge) -> OEdge:
        return self.image_of(oe)[0]

    def is_legal_turn(self, turn: Iterable[OEdge]) -> bool:
        """A turn is legal iff no Df iterate makes it degenerate."""
        if self.domain is not self.codomain:
            raise StructureError("legality needs a self map")
        d1, d2 = tuple(turn)
        seen = set()
        limit = 1 + len(self.domain.edges) * (2 * len(self.domain.edges) + 1) * 2
        for _ in range(limit):
            if d1 == d2:
                return False
            key = frozenset((d1, d2))
            if key in seen:
                return True
            seen.add(key)
            d1, d2 = self.d_edge(d1), self.d_edge(d2)
        return True

    def taken_turns(self, word: Word) -> list[frozenset[OEdge]]:
        """Turns {reverse of incoming, outgoing} taken at interior points."""
        return [
            frozenset(((word[i][0], -word[i][1]), word[i + 1]))
            for i in range(len(word) - 1)
        ]

    # -- homotopy equivalence & marking ---------------------------------------

    def rose_endomorphism(self) -> dict[str, Word]:
        """The induced endomorphism on rose generators (outer-class tag).

        Requires markings on both sides.  The image of a generator is read
        by pushing its marking loop through the map, closing up at the
        codomain basepoint through a spanning tree, and rewriting in terms
        of the codomain marking basis.
        """
        dom, cod = self.domain, self.codomain
        if dom.marking is None or cod.marking is None:
            raise StructureError("rose endomorphism needs markings")
        tree = cod.spanning_tree()
        nontree = sorted(e for e in cod.edges if (e, 1) not in _tree_edges(tree))
        basis = {e: i for i, e in enumerate(nontree)}

        def treeword(w: Word, start: str) -> Word:
            """Rewrite a loop at the codomain basepoint in the tree basis."""
            out: list[OEdge] = []
            for oe in w:
                if oe[0] in basis:
                    out.append((f"b{basis[oe[0]]}", oe[1]))
            return reduce_word(tuple(out))

        # marking images of rose generators, in the tree basis
        gen_words = {}
        for g in sorted(cod.marking):
            gen_words[g] = treeword(cod.marking[g], cod.basepoint)
        gens = sorted(gen_words)
        witness = freegroup.invert_generating_tuple(
            [f"b{i}" for i in range(len(nontree))], [gen_words[g] for g in gens]
        )
        if witness is None:
            raise NotHomotopyEquivalence("codomain marking is not a marking")
        ysub = {f"y{i+1}": ((g, 1),) for i, g in enumerate(gens)}

        out: dict[str, Word] = {}
        base_path = dom.spanning_tree()[dom.basepoint]  # trivial
        for g in sorted(dom.marking):
            loop = dom.marking[g]
            img = self.map_word(loop)
            # close up at cod basepoint through the tree
            start = self.vertex_images[dom.basepoint]
            ctree = cod.spanning_tree()
            closed = reduce_word(ctree[start] + img + rev_word(ctree[start]))
            bword = treeword(closed, cod.basepoint)
            out[g] = freegroup.express_word(witness, ysub, bword)
        return out

    def verify_homotopy_equivalence(self) -> bool:
        """Check the induced rose endomorphism is an automorphism."""
        try:
            rose = self.rose_endomorphism()
        except NotHomotopyEquivalence:
            return False
        gens = sorted(rose)
        return freegroup.invert_generating_tuple(gens, [rose[g] for g in gens]) is not None

    def check_marking_roundtrip(self) -> bool:
        """For self maps: the rose endomorphism applied to each generator is
        well defined; for marking validation use verify_homotopy_equivalence."""
        return self.verify_homotopy_equivalence()

    # -- composition ------------------------------------------------------------

    def compose(self, inner: "GraphMap") -> "GraphMap":
        """self ∘ inner."""
        if inner.codomain is not self.domain:
            raise StructureError("maps do not compose")
        images = {
            e: self.map_word(inner.edge_images[e]) for e in inner.domain.edges
        }
        vimg = {v: self.vertex_images[inner.vertex_images[v]] for v in inner.domain.vertices}
        for e, w in images.items():
            if not w:
                raise StructureError(
                    f"composition collapses edge {e}; not a topological representative"
                )
        return GraphMap(inner.domain, self.codomain, images, vimg)

    def power(self, k: int) -> "GraphMap":
        if self.domain is not self.codomain:
            raise StructureError("powers need a self map")
        if k < 1:
            raise ValueError("power must be >= 1")
        out = self
        for _ in range(k - 1):
            out = self.compose(out)
        return out

    def max_image_length(self) -> int:
        return max(len(w) for w in self.edge_images.values())

    def is_immersion(self) -> bool:
        for v in sorted(self.domain.vertices):
            dirs = [self.d_edge(d) for d in self.domain.directions(v)]
            if len(dirs) != len(set(dirs)):
                return False
        return True

    def is_graph_isomorphism(self) -> bool:
        if any(len(w) != 1 for w in self.edge_images.values()):
            return False
        targets = {w[0][0] for w in self.edge_images.values()}
        return targets == set(self.codomain.edges) and len(targets) == len(
            self.edge_images
        )

    @staticmethod
    def identity(g: MarkedGraph) -> "GraphMap":
        return GraphMap(g, g, {e: ((e, 1),) for e in g.edges}, {v: v for v in g.vertices})

    @staticmethod
    def on_rose(rose: MarkedGraph, images: dict[str, str | Word]) -> "GraphMap":
        from .graphio import parse_edge_word

        eimg = {
            e: (parse_edge_word(w) if isinstance(w, str) else tuple(w))
            for e, w in images.items()
        }
        v = next(iter(rose.vertices))
        return GraphMap(rose, rose, eimg, {v: v})

    def __repr__(self):
        ims = ", ".join(f"{e}->{fmt_word(w)}" for e, w in sorted(self.edge_images.items()))
        return f"GraphMap({ims})"


def _tree_edges(tree: dict[str, Word]) -> set[OEdge]:
    out: set[OEdge] = set()
    for w in tree.values():
        for oe in w:
            out.add(oe)
            out.add((oe[0], -oe[1]))
    return out


# ---------------------------------------------------------------------------
# bounded cancellation


def bcc(f: GraphMap, step_budget: int = 10_000) -> int:
    """A sound bounded cancellation constant for f.

    Computed from the Stallings factorization: each single-edge fold cancels
    at most one edge per junction in its own codomain, and the remaining
    composite stretches that by at most its maximal edge-image length.  The
    sum of those bounds is a valid BCC(f); identity maps, isomorphisms and
    immersions get 0.
    """
    from .folds import stallings_factorize

    if f.is_immersion():
        return 0
    result = stallings_factorize(f, step_budget=step_budget)
    if not result.terminal.is_graph_isomorphism() and not result.terminal.is_immersion():
        raise NotHomotopyEquivalence(
            "fold factorization did not terminate in an immersion"
        )
    total = 0
    for step in result.steps:
        total += step.remaining_max_image_length
    return total


# ---------------------------------------------------------------------------
# double sharp


def _max_junction_cancellation(
    f: GraphMap, target: Word, forbidden_first: OEdge, bound: int
) -> int:
    """max over reduced words mu with |mu| <= bound, first letter != forbidden,
    of the common prefix length of f#(mu) with ``target``.

    Implements the extension side of f##: ``target`` is the image f#(beta)
    read from the relevant end.  Pruned soundly by bounded cancellation: once
    f#(mu) diverges from target at depth m with more than ``bound`` surplus
    edges, no extension of mu can affect the match.
    """
    g = f.domain
    best = 0
    target = tuple(target)

    def common(u: Word) -> int:
        n = 0
        for a, b in zip(u, target):
            if a != b:
                break
            n += 1
        return n

    def dfs(last: Optional[OEdge], depth: int, image: Word) -> None:
        nonlocal best
        if depth >= bound:
            return
        v = g.term(last) if last is not None else g.init(forbidden_first)
        for oe in g.directions(v):
            if last is not None and oe == (last[0], -last[1]):
                continue
            if last is None and oe == forbidden_first:
                continue
            img = reduce_word(image + f.image_of(oe))
            m = common(img)
            if m > best:
                best = m
            # prune: junction cancellation of any continuation is <= bound
            if len(img) - bound > m:
                continue
            dfs(oe, depth + 1, img)

    dfs(None, 0, ())
    return min(best, len(target))


def double_sharp(f: GraphMap, beta: EdgePath, bound: Optional[int] = None) -> EdgePath:
    """The maximal subpath of f#(beta) surviving in f#(gamma) for every
    extension gamma of beta.

    Extensions are enumerated up to ``bound`` edges per side (default: a
    sound bcc(f)); by bounded cancellation no longer extension can remove
    more of f#(beta).
    """
    if beta.is_trivial():
        raise StructureError("double_sharp needs a nontrivial path")
    B = bcc(f) if bound is None else bound
    img = f.map_path(beta)
    if img.is_trivial():
        return img
    w = img.edges
    # left cancellation: extensions delta * beta; mu = delta^{-1} must not
    # start with beta's first edge.
    left = _max_junction_cancellation(f, w, beta.edges[0], B)
    # right cancellation: extensions beta * delta; delta must not start with
    # the inverse of beta's last edge.
    lb = beta.edges[-1]
    right = _max_junction_cancellation(
        f, rev_word(w), (lb[0], -lb[1]), B
    )
    if left + right >= len(w):
        cut = min(left, len(w))
        return f.codomain.trivial_path(
            f.codomain.init(w[cut]) if cut < len(w) else f.codomain.term(w[-1])
        )
    return EdgePath(f.codomain, w[left : len(w) - right])


def double_sharp_window(f: GraphMap, beta: EdgePath, bound: Optional[int] = None) -> tuple[int, int]:
    """(left, right) edges trimmed from f#(beta) to form f##(beta)."""
    if beta.is_trivial():
        raise StructureError("double_sharp needs a nontrivial path")
    B = bcc(f) if bound is None else bound
    img = f.map_path(beta)
    if img.is_trivial():
        return (0, 0)
    w = img.edges
    left = _max_junction_cancellation(f, w, beta.edges[0], B)
    lb = beta.edges[-1]
    right = _max_junction_cancellation(f, rev_word(w), (lb[0], -lb[1]), B)
    return (left, right)
