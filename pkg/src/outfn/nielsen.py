"""Bounded search and verification for periodic (indivisible) Nielsen paths,
and the combinatorial geometricity classification of EG strata.

EG candidates are generated by growing the two legal halves of the would-be
path at an illegal turn: a height-r indivisible periodic Nielsen path has
the form rho = u^{-1} v with f#(u) = c u and f#(v) = c v for a common
overlap c, so the pair (u, v) is iterated until it stabilizes, branching
over single-edge extensions whenever one side is consumed.  NEG strata are
tested directly in the form E w^j E^{-1}.  Searches are capped and report
whether they exhausted the candidate space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .graphs import (
    EdgePath,
    OEdge,
    StructureError,
    Subgraph,
    Word,
    reduce_word,
    rev_word,
)
from .maps import GraphMap
from .strata import Filtration, classify_matrix, transition_matrix


@dataclass(frozen=True)
class NielsenPath:
    path: EdgePath
    period: int
    height: int
    indivisible: bool
    closed: bool
    eg_split: Optional[tuple[Word, Word]] = None  # (alpha, beta) halves

    def word(self) -> Word:
        return self.path.edges


@dataclass
class NielsenCatalog:
    f: GraphMap
    filt: Filtration
    entries: list[NielsenPath] = field(default_factory=list)
    complete_heights: set[int] = field(default_factory=set)
    notes: list[str] = field(default_factory=list)

    def of_height(self, r: int) -> list[NielsenPath]:
        return [n for n in self.entries if n.height == r]

    def indivisible_of_height(self, r: int) -> list[NielsenPath]:
        return [n for n in self.entries if n.height == r and n.indivisible]

    def indivisible(self) -> list[NielsenPath]:
        return [n for n in self.entries if n.indivisible]

    def words_with_reversals(self) -> list[Word]:
        out = []
        for n in self.entries:
            out.append(n.word())
            out.append(rev_word(n.word()))
        return out

    def merged_with(self, other: "NielsenCatalog") -> "NielsenCatalog":
        seen = {n.word() for n in self.entries} | {
            rev_word(n.word()) for n in self.entries
        }
        merged = list(self.entries)
        for n in other.entries:
            if n.word() not in seen and rev_word(n.word()) not in seen:
                merged.append(n)
                seen.add(n.word())
        return NielsenCatalog(
            self.f,
            self.filt,
            merged,
            self.complete_heights & other.complete_heights,
            self.notes + other.notes,
        )


def is_periodic_nielsen(
    f: GraphMap, p: EdgePath, period_cap: int
) -> Optional[int]:
    """The period k <= period_cap with f^k_#(p) = p, or None."""
    if p.is_trivial():
        return None
    cur = p
    for k in range(1, period_cap + 1):
        cur = f.map_path(cur)
        if cur == p:
            return k
    return None


def is_indivisible(f: GraphMap, p: EdgePath, period_cap: int) -> bool:
    """No splitting at an interior vertex into two periodic Nielsen paths."""
    for i in range(1, len(p)):
        a, b = p.subpath(0, i), p.subpath(i, len(p))
        if (
            is_periodic_nielsen(f, a, period_cap) is not None
            and is_periodic_nielsen(f, b, period_cap) is not None
        ):
            return False
    return True


def _make_entry(
    f: GraphMap, filt: Filtration, w: Word, period: int, period_cap: int,
    eg_split: Optional[tuple[Word, Word]] = None,
) -> NielsenPath:
    p = EdgePath(f.domain, w)
    return NielsenPath(
        path=p,
        period=period,
        height=filt.height_of_word(w),
        indivisible=is_indivisible(f, p, period_cap),
        closed=p.start == p.end,
        eg_split=eg_split,
    )


def _search_eg_turn(
    fk: GraphMap, d1: OEdge, d2: OEdge, length_cap: int
) -> tuple[list[tuple[Word, Word]], bool]:
    """Grow legs (u, v) from the illegal turn until fk#(u) = c·u and
    fk#(v) = c·v stabilize.  Returns (stable pairs, exhausted?)."""
    g = fk.domain
    results: list[tuple[Word, Word]] = []
    exhausted = True
    seen: set[tuple[Word, Word]] = set()
    stack: list[tuple[Word, Word]] = [(((d1),), ((d2),))]

    def extensions(w: Word) -> list[Word]:
        end = g.term(w[-1])
        back = (w[-1][0], -w[-1][1])
        return [w + (oe,) for oe in g.directions(end) if oe != back]

    while stack:
        u, v = stack.pop()
        if (u, v) in seen:
            continue
        seen.add((u, v))
        if len(u) > length_cap or len(v) > length_cap:
            exhausted = False
            continue
        U, V = fk.map_word(u), fk.map_word(v)
        c = 0
        for a, b in zip(U, V):
            if a != b:
                break
            c += 1
        u2, v2 = U[c:], V[c:]
        if u2 == u and v2 == v:
            results.append((u, v))
            continue
        if not u2 and not v2:
            for ext in extensions(u):
                stack.append((ext, v))
            for ext in extensions(v):
                stack.append((u, ext))
        elif not u2:
            for ext in extensions(u):
                stack.append((ext, v))
        elif not v2:
            for ext in extensions(v):
                stack.append((u, ext))
        else:
            if u2[0] == d1 and v2[0] == d2:
                stack.append((u2, v2))
            # otherwise the branch cannot carry a fixed pair: drop it
    return results, exhausted


def nielsen_search(
    f: GraphMap,
    filt: Filtration,
    r: int,
    length_cap: Optional[int] = None,
    period_cap: int = 4,
) -> NielsenCatalog:
    """Catalog the (indivisible) periodic Nielsen paths of height r.

    EG strata assume the single-illegal-turn structure of relative train
    track maps; NEG strata are tested in the exceptional form E w^j E^-1;
    fixed edges are reported as period-1 Nielsen paths.
    """
    if length_cap is None:
        length_cap = 4 * len(f.domain.edges)
    cat = NielsenCatalog(f, filt)
    stratum = sorted(filt.stratum(r))
    _, m = transition_matrix(f, stratum)
    kind = classify_matrix(m)
    heights = filt.heights
    complete = True

    def add(w: Word, period: int, eg_split=None) -> None:
        if filt.height_of_word(w) != r:
            return
        for n in cat.entries:
            if n.word() == w or n.word() == rev_word(w):
                return
        cat.entries.append(_make_entry(f, filt, w, period, period_cap, eg_split))

    if kind == "zero":
        cat.complete_heights.add(r)
        return cat

    # fixed edges
    for e in stratum:
        if f.edge_images[e] == ((e, 1),):
            add(((e, 1),), 1)

    if kind == "NEG":
        for e in stratum:
            img = f.edge_images[e]
            if len(img) >= 2 and img[0] == (e, 1):
                u = img[1:]
                g = f.domain
                if g.init(u[0]) == g.term(u[-1]):
                    w = _root_of(u)
                    j = 1
                    while True:
                        cand = ((e, 1),) + tuple(w) * j + ((e, -1),)
                        if len(cand) > length_cap:
                            break
                        k = is_periodic_nielsen(f, EdgePath(g, reduce_word(cand)), period_cap)
                        if k is not None:
                            add(reduce_word(cand), k)
                        cand2 = ((e, 1),) + rev_word(tuple(w) * j) + ((e, -1),)
                        k2 = is_periodic_nielsen(f, EdgePath(g, reduce_word(cand2)), period_cap)
                        if k2 is not None:
                            add(reduce_word(cand2), k2)
                        j += 1
                    cat.notes.append(
                        f"height {r}: exceptional family E w^j E^-1 truncated at length {length_cap}"
                    )
                    complete = False
        if complete:
            cat.complete_heights.add(r)
        return cat

    # EG stratum: grow legs at each height-r turn with degenerate Df^k image
    in_stratum = set(stratum)
    dirs = [
        d
        for d in f.domain.all_directions()
        if d[0] in in_stratum
    ]
    for k in range(1, period_cap + 1):
        fk = f.power(k)
        for i in range(len(dirs)):
            for j in range(i + 1, len(dirs)):
                d1, d2 = dirs[i], dirs[j]
                if f.domain.init(d1) != f.domain.init(d2):
                    continue
                if fk.d_edge(d1) != fk.d_edge(d2):
                    continue
                pairs, exhausted = _search_eg_turn(fk, d1, d2, length_cap)
                complete = complete and exhausted
                for (u, v) in pairs:
                    w = reduce_word(rev_word(u) + v)
                    if not w or len(w) != len(u) + len(v):
                        continue
                    p = EdgePath(f.domain, w)
                    kk = is_periodic_nielsen(f, p, period_cap)
                    if kk is not None:
                        add(w, kk, eg_split=(rev_word(u), v))
    if complete:
        cat.complete_heights.add(r)
    else:
        cat.notes.append(f"height {r}: EG leg search hit the length cap {length_cap}")
    return cat


def _root_of(w: Word) -> Word:
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w == w[:d] * (n // d):
            return w[:d]
    return w


def full_catalog(
    f: GraphMap,
    filt: Filtration,
    length_cap: Optional[int] = None,
    period_cap: int = 4,
) -> NielsenCatalog:
    cat = NielsenCatalog(f, filt)
    cat.complete_heights = set(range(1, len(filt) + 1))
    for r in range(1, len(filt) + 1):
        cat = cat.merged_with(nielsen_search(f, filt, r, length_cap, period_cap))
    return cat


def eg_uniqueness_check(catalog: NielsenCatalog, r: int) -> tuple[bool, list[NielsenPath]]:
    """At most one indivisible Nielsen path of EG height r, up to reversal.
    Returns (ok, witnesses); a False is a bug-or-axiom-violation witness."""
    inps = catalog.indivisible_of_height(r)
    distinct: list[NielsenPath] = []
    for n in inps:
        if not any(
            n.word() == m.word() or n.word() == rev_word(m.word()) for m in distinct
        ):
            distinct.append(n)
    return len(distinct) <= 1, distinct


def classify_geometry(
    filt: Filtration, r: int, catalog: NielsenCatalog
) -> str:
    """'geometric' | 'nongeometric' | 'no-iNp' | 'inconclusive' for an EG
    stratum, by the crossing-count criterion on its indivisible Nielsen path."""
    inps = catalog.indivisible_of_height(r)
    if not inps:
        return "no-iNp" if r in catalog.complete_heights else "inconclusive"
    ok, distinct = eg_uniqueness_check(catalog, r)
    if not ok:
        return "inconclusive"
    rho = distinct[0]
    counts = {e: 0 for e in filt.stratum(r)}
    for (e, _) in rho.word():
        if e in counts:
            counts[e] += 1
    lower_vertices = filt.prefix(r - 1).vertex_set() if r > 1 else frozenset()
    if (
        rho.closed
        and all(c == 2 for c in counts.values())
        and rho.path.start not in lower_vertices
    ):
        return "geometric"
    if not rho.closed and any(c == 1 for c in counts.values()):
        return "nongeometric"
    return "inconclusive"
