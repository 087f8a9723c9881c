"""Stallings fold factorization and fold classification.

A factorization step subdivides (when the identified segments are proper)
so that every elementary identification glues two whole edges with equal
images.  Each fold strictly reduces the total edge-image length of the
remaining map, so factorization terminates; for homotopy equivalences the
terminal immersion is a graph isomorphism.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .graphs import (
    EdgePath,
    MarkedGraph,
    OEdge,
    StructureError,
    Word,
    fmt_word,
    reduce_word,
    rev_word,
)
from .maps import GraphMap


class NotFoldable(StructureError):
    pass


class FactorizationBudget(RuntimeError):
    def __init__(self, partial: "FoldSequence"):
        super().__init__("fold factorization exceeded its step budget")
        self.partial = partial


@dataclass
class FoldStep:
    """One fold: the turn folded, its classification, and the quotient data."""

    turn: frozenset[OEdge]
    klass: str  # "partial" | "full-improper" | "full-proper"
    folds_over: Optional[tuple[str, str]]  # (E_i, E_j): E_i folds properly over E_j
    alpha1: Word  # identified initial segments, as words in the subdivided graph
    alpha2: Word
    common_image: Word
    quotient_map: GraphMap  # previous graph -> quotient (subdivision included)
    quotient_graph: MarkedGraph
    induced: GraphMap  # quotient -> codomain
    remaining_max_image_length: int


@dataclass
class FoldSequence:
    original: GraphMap
    steps: list[FoldStep]
    terminal: GraphMap

    def recompose(self) -> GraphMap:
        comp = self.terminal
        for step in reversed(self.steps):
            comp = comp.compose(step.quotient_map)
        return comp

    def recomposition_matches(self) -> bool:
        comp = self.recompose()
        return all(
            comp.edge_images[e] == self.original.edge_images[e]
            for e in self.original.domain.edges
        )


# ---------------------------------------------------------------------------
# elementary operations


_fresh = itertools.count()


def subdivide(m: GraphMap, cuts: dict[str, list[int]]) -> tuple[GraphMap, GraphMap]:
    """Subdivide domain edges of m at interior image positions.

    Returns (q, m') with q: domain -> subdivided graph an edge-to-path map and
    m': subdivided -> codomain, so that m = m' ∘ q edgewise.
    """
    g = m.domain
    vertices = set(g.vertices)
    edges: dict[str, tuple[str, str]] = {}
    q_images: dict[str, Word] = {}
    new_images: dict[str, Word] = {}
    for e, (u, v) in g.edges.items():
        pos = sorted(cuts.get(e, []))
        w = m.edge_images[e]
        if not pos:
            edges[e] = (u, v)
            q_images[e] = ((e, 1),)
            new_images[e] = w
            continue
        if any(p <= 0 or p >= len(w) for p in pos) or len(set(pos)) != len(pos):
            raise StructureError(f"bad subdivision positions {pos} for edge {e}")
        bounds = [0] + pos + [len(w)]
        piece_ids = [f"{e}.{i}" for i in range(len(bounds) - 1)]
        inner = []
        for i in range(1, len(bounds) - 1):
            name = f"{e}_{i}"
            while name in vertices or name in inner:
                name += "'"
            inner.append(name)
        vertices.update(inner)
        chain = [u] + inner + [v]
        for i, pid in enumerate(piece_ids):
            edges[pid] = (chain[i], chain[i + 1])
            new_images[pid] = w[bounds[i] : bounds[i + 1]]
        q_images[e] = tuple((pid, 1) for pid in piece_ids)
    sub = MarkedGraph(
        vertices,
        edges,
        rank=g.rank,
        marking=None,
        basepoint=g.basepoint,
        check=False,
    )
    q = GraphMap(g, sub, q_images, {v: v for v in g.vertices}, check=False)
    if g.marking is not None:
        sub.marking = {x: q.map_word(w) for x, w in g.marking.items()}
    m2 = GraphMap(sub, m.codomain, new_images, check=False)
    return q, m2


def identify(m: GraphMap, keep: OEdge, drop: OEdge) -> tuple[GraphMap, GraphMap]:
    """Identify the oriented edge ``drop`` with ``keep`` (same initial vertex,
    same image).  Returns (q, m') with m = m' ∘ q."""
    g = m.domain
    if keep[0] == drop[0]:
        raise StructureError("cannot identify an edge with itself")
    if g.init(keep) != g.init(drop):
        raise StructureError("identified edges must share their initial vertex")
    if m.image_of(keep) != m.image_of(drop):
        raise StructureError("identified edges must have equal images")
    vkeep, vdrop = g.term(keep), g.term(drop)
    rename = lambda v: vkeep if v == vdrop else v
    vertices = {rename(v) for v in g.vertices}
    edges = {
        e: (rename(u), rename(v))
        for e, (u, v) in g.edges.items()
        if e != drop[0]
    }
    quotient = MarkedGraph(
        vertices,
        edges,
        rank=g.rank,
        marking=None,
        basepoint=rename(g.basepoint) if g.basepoint else None,
        check=False,
    )
    q_images = {e: ((e, 1),) for e in edges}
    q_images[drop[0]] = ((keep[0], keep[1] * drop[1]),)
    q = GraphMap(
        g, quotient, q_images, {v: rename(v) for v in g.vertices}, check=False
    )
    if g.marking is not None:
        quotient.marking = {x: q.map_word(w) for x, w in g.marking.items()}
    m2 = GraphMap(
        quotient,
        m.codomain,
        {e: m.edge_images[e] for e in edges},
        check=False,
    )
    return q, m2


# ---------------------------------------------------------------------------
# fold classification and execution


def _common_prefix_len(w1: Word, w2: Word) -> int:
    n = 0
    for a, b in zip(w1, w2):
        if a != b:
            break
        n += 1
    return n


def find_foldable_turn(m: GraphMap) -> Optional[tuple[OEdge, OEdge]]:
    """Deterministically pick a nondegenerate turn with degenerate image:
    smallest vertex id, then smallest oriented-edge pair."""
    for v in sorted(m.domain.vertices):
        dirs = m.domain.directions(v)
        for i in range(len(dirs)):
            for j in range(i + 1, len(dirs)):
                if m.d_edge(dirs[i]) == m.d_edge(dirs[j]):
                    return dirs[i], dirs[j]
    return None


def classify_fold(m: GraphMap, turn: tuple[OEdge, OEdge]) -> FoldStep:
    """Perform the fold determined by m and the turn; classify it."""
    d1, d2 = turn
    if d1 == d2:
        raise NotFoldable("turn is degenerate")
    if m.domain.init(d1) != m.domain.init(d2):
        raise NotFoldable("turn directions are at different vertices")
    w1, w2 = m.image_of(d1), m.image_of(d2)
    if w1[0] != w2[0]:
        raise NotFoldable("turn has nondegenerate image; not foldable")
    c = _common_prefix_len(w1, w2)
    full1, full2 = c == len(w1), c == len(w2)
    if full1 and full2:
        klass = "full-improper"
        folds_over = None
    elif full1 or full2:
        klass = "full-proper"
        # E_i folds properly over E_j when f(E_j) is a proper prefix of f(E_i)
        folds_over = (d2[0], d1[0]) if full1 else (d1[0], d2[0])
    else:
        klass = "partial"
        folds_over = None

    same_edge = d1[0] == d2[0]
    cuts: dict[str, list[int]] = {}
    if same_edge:
        # the two ends of one edge fold together; split into <=3 pieces
        w = m.edge_images[d1[0]]
        if 2 * c > len(w):
            raise NotFoldable("overlapping self-identification; not a homotopy equivalence")
        pos = sorted({p for p in (c, len(w) - c) if 0 < p < len(w)})
        cuts[d1[0]] = pos
    else:
        if not full1:
            cuts[d1[0]] = [c if d1[1] > 0 else len(m.edge_images[d1[0]]) - c]
        if not full2:
            cuts[d2[0]] = [c if d2[1] > 0 else len(m.edge_images[d2[0]]) - c]

    prev = m
    if cuts:
        q_sub, m_sub = subdivide(m, cuts)
    else:
        q_sub, m_sub = GraphMap.identity(m.domain), m

    def seg(d: OEdge) -> OEdge:
        """The subdivided single edge covering the identified initial segment
        of direction d."""
        word = q_sub.image_of(d)
        return word[0]

    e1, e2 = seg(d1), seg(d2)
    alpha1, alpha2 = (e1,), (e2,)
    q_fold, m_next = identify(m_sub, e1, e2)
    q_total = q_fold.compose(q_sub)
    step = FoldStep(
        turn=frozenset((d1, d2)),
        klass=klass,
        folds_over=folds_over,
        alpha1=alpha1,
        alpha2=alpha2,
        common_image=w1[:c],
        quotient_map=q_total,
        quotient_graph=m_next.domain,
        induced=m_next,
        remaining_max_image_length=m_next.max_image_length(),
    )
    total_before = sum(len(w) for w in prev.edge_images.values())
    total_after = sum(len(w) for w in m_next.edge_images.values())
    if total_after >= total_before:
        raise StructureError("fold did not reduce complexity")
    return step


def stallings_factorize(f: GraphMap, step_budget: int = 10_000) -> FoldSequence:
    """Factor f into folds followed by an immersion.

    The composite of the fold maps followed by the terminal immersion equals
    f up to homotopy rel vertices, verified by tightened edge images.
    """
    steps: list[FoldStep] = []
    m = f
    while True:
        turn = find_foldable_turn(m)
        if turn is None:
            break
        if len(steps) >= step_budget:
            raise FactorizationBudget(FoldSequence(f, steps, m))
        step = classify_fold(m, turn)
        steps.append(step)
        m = step.induced
    return FoldSequence(f, steps, m)


def generalized_fold(
    m: GraphMap, edge: OEdge, sigma: Word
) -> tuple[GraphMap, GraphMap]:
    """The generalized fold identifying an initial segment of ``edge`` with
    the path ``sigma`` (whose m-image equals the segment's image).

    Returns (q, m') with q the quotient map from m's domain and m' the
    induced map, so m ≃ m' ∘ q rel vertices.  Used by the EG Nielsen path
    axiom verifier; never emitted by stallings_factorize.
    """
    g = m.domain
    imgs = [m.image_of(oe) for oe in sigma]
    total = sum(len(w) for w in imgs)
    w_edge = m.image_of(edge)
    if tuple(w_edge[:total]) != tuple(x for w in imgs for x in w):
        raise NotFoldable("segment and path do not have equal images")
    if any(oe[0] == edge[0] for oe in sigma):
        raise NotFoldable("path must be disjoint from the folded edge")
    # subdivide the edge so the segment splits along sigma's edges
    bounds = list(itertools.accumulate(len(w) for w in imgs))
    if bounds and bounds[-1] == len(w_edge):
        cuts_here = bounds[:-1]
    else:
        cuts_here = bounds
    cuts_pos = (
        cuts_here if edge[1] > 0 else [len(w_edge) - p for p in cuts_here]
    )
    if cuts_pos:
        q_sub, m_cur = subdivide(m, {edge[0]: sorted(set(cuts_pos))})
    else:
        q_sub, m_cur = GraphMap.identity(g), m
    q_total = q_sub
    pieces = q_sub.image_of(edge)  # oriented pieces covering the edge
    for piece, s_oe in zip(pieces, sigma):
        s_now = q_total.map_word((s_oe,))
        if len(s_now) != 1:
            raise NotFoldable("path edge was subdivided during folding")
        q_step, m_cur = identify(m_cur, s_now[0], piece)
        q_total = q_step.compose(q_total)
    return q_total, m_cur
