"""Invariant filtrations, stratum classification, transition matrices,
and Perron-Frobenius eigen-data.

The EG/NEG dichotomy is decided exactly on the integer matrix: an
irreducible nonnegative integer matrix has PF value 1 iff it is the
permutation matrix of a single cycle, iff every row sum equals 1.
Floating eigen-data comes from power iteration on M + I (primitive for
irreducible M) with Collatz-Wielandt bracketing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .graphs import MarkedGraph, OEdge, StructureError, Subgraph, Word, reduce_word, rev_word
from .maps import GraphMap

Matrix = tuple[tuple[int, ...], ...]


class ReducibleMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class Filtration:
    """Ordered strata (edge-id sets), lowest first; heights are 1-based."""

    graph: MarkedGraph = field(compare=False)
    strata: tuple[frozenset[str], ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        for s in self.strata:
            if seen & s:
                raise StructureError("strata are not disjoint")
            seen |= s
        if seen != set(self.graph.edges):
            raise StructureError("strata do not partition the edges")

    @property
    def heights(self) -> dict[str, int]:
        return {e: r for r, s in enumerate(self.strata, 1) for e in s}

    def height_of_edge(self, e: str) -> int:
        return self.heights[e]

    def height_of_word(self, w: Word) -> int:
        return max((self.heights[e] for (e, _) in w), default=0)

    def stratum(self, r: int) -> frozenset[str]:
        return self.strata[r - 1]

    def prefix(self, r: int) -> Subgraph:
        """The subgraph G_r spanned by all strata of height <= r."""
        edges: set[str] = set()
        for s in self.strata[:r]:
            edges |= s
        return Subgraph(self.graph, frozenset(edges))

    def __len__(self) -> int:
        return len(self.strata)

    def check_invariance(self, f: GraphMap) -> Optional[tuple[str, str]]:
        """None when f-invariant; else a witness (edge, offending image edge)."""
        h = self.heights
        for e in self.graph.edges:
            r = h[e]
            for (x, _) in f.edge_images[e]:
                if h[x] > r:
                    return (e, x)
        return None


def transition_digraph(f: GraphMap) -> nx.DiGraph:
    d = nx.DiGraph()
    d.add_nodes_from(f.domain.edges)
    for e, w in f.edge_images.items():
        for (x, _) in w:
            d.add_edge(e, x)
    return d


def compute_filtration(f: GraphMap) -> Filtration:
    """The maximal refinement of an f-invariant filtration into irreducible
    and zero strata, via SCCs of the edge-transition digraph in topological
    order (images point downward)."""
    if f.domain is not f.codomain:
        raise StructureError("filtrations need a self map")
    d = transition_digraph(f)
    comps = [frozenset(c) for c in nx.strongly_connected_components(d)]
    cond = nx.condensation(d, scc=comps)
    order = list(nx.topological_sort(cond))
    # images point downward, so strata sort by increasing depth-from-sink,
    # breaking ties deterministically by smallest member edge id
    ordered = sorted(
        order,
        key=lambda n: (_topo_rank(cond, n, order), min(cond.nodes[n]["members"])),
    )
    strata = tuple(frozenset(cond.nodes[n]["members"]) for n in ordered)
    filt = Filtration(f.domain, strata)
    witness = filt.check_invariance(f)
    if witness is not None:
        raise StructureError(f"filtration is not invariant at {witness}")
    return filt


def _topo_rank(cond: nx.DiGraph, node, order: list) -> int:
    # longest path depth from node (sinks get 0): ranks strata by height
    memo: dict = {}

    def depth(n) -> int:
        if n not in memo:
            memo[n] = 1 + max((depth(s) for s in cond.successors(n)), default=-1)
        return memo[n]

    return depth(node)


def transition_matrix(f: GraphMap, stratum: Sequence[str]) -> tuple[list[str], Matrix]:
    """Rows/cols indexed by sorted stratum edges; entry (i, j) counts
    occurrences of edge j or its reversal in the image of edge i."""
    edges = sorted(stratum)
    idx = {e: i for i, e in enumerate(edges)}
    m = [[0] * len(edges) for _ in edges]
    for i, e in enumerate(edges):
        for (x, _) in f.edge_images[e]:
            j = idx.get(x)
            if j is not None:
                m[i][j] += 1
    return edges, tuple(tuple(row) for row in m)


def is_irreducible(m: Matrix) -> bool:
    n = len(m)
    if n == 0:
        return False
    if n == 1:
        return m[0][0] > 0
    d = nx.DiGraph()
    d.add_nodes_from(range(n))
    for i in range(n):
        for j in range(n):
            if m[i][j]:
                d.add_edge(i, j)
    return nx.is_strongly_connected(d)


def is_zero(m: Matrix) -> bool:
    return all(v == 0 for row in m for v in row)


def classify_matrix(m: Matrix) -> str:
    """'EG' | 'NEG' | 'zero' | 'reducible', decided exactly."""
    if is_zero(m):
        return "zero"
    if not is_irreducible(m):
        return "reducible"
    if all(sum(row) == 1 for row in m):
        return "NEG"
    return "EG"


def is_aperiodic(m: Matrix) -> bool:
    n = len(m)
    d = nx.DiGraph()
    for i in range(n):
        for j in range(n):
            if m[i][j]:
                d.add_edge(i, j)
    return nx.is_strongly_connected(d) and nx.is_aperiodic(d)


def pf(m: Matrix, tol: float = 1e-12, max_iter: int = 200_000) -> tuple[float, tuple[float, ...]]:
    """Perron-Frobenius eigenvalue and unit-sum positive eigenvector of an
    irreducible nonnegative matrix, via power iteration on M + I with
    Collatz-Wielandt bracketing.  Residual satisfies |Mv - λv|∞ <= tol·λ."""
    lam, v, _ = pf_with_bounds(m, tol=tol, max_iter=max_iter)
    return lam, v


def pf_with_bounds(
    m: Matrix, tol: float = 1e-12, max_iter: int = 200_000
) -> tuple[float, tuple[float, ...], tuple[float, float]]:
    if not is_irreducible(m):
        raise ReducibleMatrixError("matrix is not irreducible")
    a = np.array(m, dtype=float)
    n = a.shape[0]
    shifted = a + np.eye(n)
    x = np.ones(n) / n
    lo, hi = 0.0, float("inf")
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / y.sum()
        if hi - lo <= tol * max(lo, 1.0):
            break
    lam = (lo + hi) / 2.0 - 1.0
    return lam, tuple(float(v) for v in x), (lo - 1.0, hi - 1.0)


@dataclass(frozen=True)
class NegNormalForm:
    """Cyclically ordered NEG stratum edges with f(E_i) = E_{i+1} u_i."""

    edges: tuple[OEdge, ...]  # oriented: f(edges[i]) = edges[i+1] * suffixes[i]
    suffixes: tuple[Word, ...]
    subdivided: bool = False
    replacement: Optional[GraphMap] = None  # the subdivided map, when needed


@dataclass(frozen=True)
class StratumReport:
    height: int
    kind: str  # EG | NEG-fixed | NEG-nonfixed | NEG-linear | zero
    edges: tuple[str, ...]
    matrix: Matrix
    pf_value: Optional[float] = None
    pf_vector: Optional[tuple[float, ...]] = None
    pf_bounds: Optional[tuple[float, float]] = None
    aperiodic: Optional[bool] = None
    normal_form: Optional[NegNormalForm] = None
    enveloped_by: Optional[int] = None  # EG height enveloping a zero stratum

    def as_dict(self) -> dict:
        return {
            "height": self.height,
            "kind": self.kind,
            "edges": list(self.edges),
            "matrix": [list(r) for r in self.matrix],
            "pf_value": self.pf_value,
            "pf_vector": list(self.pf_vector) if self.pf_vector else None,
            "aperiodic": self.aperiodic,
            "enveloped_by": self.enveloped_by,
        }


def neg_normal_form(f: GraphMap, filt: Filtration, r: int) -> NegNormalForm:
    """Extract the NEG normal form f(E_i) = E_{i+1} u_i with u_i of lower
    height, renumbering and reorienting as needed.

    When no orientation assignment removes the prefixes, each stratum edge
    is subdivided into two and the form is re-extracted on the subdivided
    map (returned in ``replacement``); the subdivision either keeps a single
    stratum or splits it into a pair.
    """
    stratum = sorted(filt.stratum(r))
    edges, m = transition_matrix(f, stratum)
    if classify_matrix(m) != "NEG":
        raise StructureError(f"stratum {r} is not NEG")
    h = filt.heights

    def decomposition(e: str) -> tuple[Word, OEdge, Word]:
        w = f.edge_images[e]
        pos = [i for i, (x, _) in enumerate(w) if x in set(stratum)]
        if len(pos) != 1:
            raise StructureError("NEG edge image crosses the stratum twice")
        i = pos[0]
        return w[:i], w[i], w[i + 1 :]

    # try orientations: eta[e] in {+1,-1}; requirement for eta[e] = +1 is
    # prefix-free image (a trivial), for -1 suffix-free (b trivial), and the
    # crossed edge's orientation must match its own eta.
    sigma = {}
    for e in stratum:
        a, mid, b = decomposition(e)
        sigma[e] = (a, mid, b)

    def solve() -> Optional[dict[str, int]]:
        eta: dict[str, int] = {}
        first = stratum[0]
        for start in (1, -1):
            eta = {first: start}
            stack = [first]
            ok = True
            while stack and ok:
                e = stack.pop()
                a, mid, b = sigma[e]
                if eta[e] > 0:
                    if a:
                        ok = False
                        break
                    want = mid[1]
                else:
                    if b:
                        ok = False
                        break
                    want = -mid[1]
                nxt = mid[0]
                if nxt in eta:
                    if eta[nxt] != want:
                        ok = False
                else:
                    eta[nxt] = want
                    stack.append(nxt)
            if ok and len(eta) == len(stratum):
                return eta
        return None

    eta = solve()
    if eta is not None:
        # read off the cycle
        oedges = []
        suffixes = []
        e = stratum[0]
        for _ in stratum:
            a, mid, b = sigma[e]
            if eta[e] > 0:
                oedges.append((e, 1))
                suffixes.append(b)
            else:
                oedges.append((e, -1))
                suffixes.append(rev_word(a))
            e = mid[0]
        return NegNormalForm(tuple(oedges), tuple(suffixes))

    # subdivision convention: split each stratum edge E into E.0, E.1 at a
    # point mapping to the split point of the next edge in the cycle, so
    # that each piece's image starts with a stratum piece in its canonical
    # orientation (E.1 forward, E.0 backward)
    g = f.domain
    vertices = set(g.vertices)
    edges: dict[str, tuple[str, str]] = {}
    q_images: dict[str, Word] = {}
    in_stratum = set(stratum)
    for e, (u, v) in g.edges.items():
        if e not in in_stratum:
            edges[e] = (u, v)
            q_images[e] = ((e, 1),)
            continue
        mid = f"{e}_m"
        while mid in vertices:
            mid += "'"
        vertices.add(mid)
        edges[f"{e}.0"] = (u, mid)
        edges[f"{e}.1"] = (mid, v)
        q_images[e] = ((f"{e}.0", 1), (f"{e}.1", 1))
    sub = MarkedGraph(vertices, edges, rank=g.rank, marking=None,
                      basepoint=g.basepoint, check=False)
    q = GraphMap(g, sub, q_images, {v: v for v in g.vertices}, check=False)
    if g.marking is not None:
        sub.marking = {x: q.map_word(w) for x, w in g.marking.items()}
    images: dict[str, Word] = {}
    for e in g.edges:
        if e not in in_stratum:
            images[e] = q.map_word(f.edge_images[e])
    for e in stratum:
        a, mid, b = sigma[e]
        nxt, s = mid
        if s > 0:
            images[f"{e}.0"] = reduce_word(q.map_word(a) + ((f"{nxt}.0", 1),))
            images[f"{e}.1"] = reduce_word(((f"{nxt}.1", 1),) + q.map_word(b))
        else:
            images[f"{e}.0"] = reduce_word(q.map_word(a) + ((f"{nxt}.1", -1),))
            images[f"{e}.1"] = reduce_word(((f"{nxt}.0", -1),) + q.map_word(b))
    f_new = GraphMap(sub, sub, images)
    filt_new = compute_filtration(f_new)
    pieces = {f"{e}.0" for e in stratum} | {f"{e}.1" for e in stratum}
    for rr in range(1, len(filt_new) + 1):
        st = filt_new.stratum(rr)
        if st & pieces:
            _, m2 = transition_matrix(f_new, sorted(st))
            if classify_matrix(m2) == "NEG":
                nf = neg_normal_form(f_new, filt_new, rr)
                return NegNormalForm(
                    nf.edges, nf.suffixes, subdivided=True, replacement=f_new
                )
    raise StructureError("subdivision convention failed to produce a normal form")


def _is_periodic_nielsen(f: GraphMap, w: Word, period_cap: int = 4) -> bool:
    from .graphs import tighten

    if not w:
        return False
    base = f.domain.init(w[0])
    p = tighten(f.domain, w, base=base)
    cur = p
    for _ in range(period_cap):
        cur = f.map_path(cur)
        if cur == p:
            return True
    return False


def _root_free(w: Word) -> Word:
    """The root of a closed word: shortest u with w = u^k."""
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w == w[:d] * (n // d):
            return w[:d]
    return w


def stratum_report(
    f: GraphMap, filt: Filtration, r: int, period_cap: int = 4
) -> StratumReport:
    edges, m = transition_matrix(f, sorted(filt.stratum(r)))
    kind = classify_matrix(m)
    if kind == "reducible":
        raise StructureError(f"stratum {r} is not irreducible or zero")
    if kind == "zero":
        env = _enveloping_stratum(f, filt, r)
        return StratumReport(r, "zero", tuple(edges), m, enveloped_by=env)
    if kind == "EG":
        lam, vec, bounds = pf_with_bounds(m)
        return StratumReport(
            r,
            "EG",
            tuple(edges),
            m,
            pf_value=lam,
            pf_vector=vec,
            pf_bounds=bounds,
            aperiodic=is_aperiodic(m),
        )
    nf = neg_normal_form(f, filt, r)
    if all(not u for u in nf.suffixes) and len(nf.edges) == 1:
        kind = "NEG-fixed"
    elif nf.subdivided:
        kind = "NEG-nonfixed"
    else:
        kind = "NEG-nonfixed"
        if len(nf.edges) == 1 and nf.suffixes[0]:
            u = nf.suffixes[0]
            g = f.domain
            closed = g.init(u[0]) == g.term(u[-1])
            if closed:
                w = _root_free(reduce_word(u))
                if _is_periodic_nielsen(f, w, period_cap):
                    kind = "NEG-linear"
    return StratumReport(
        r,
        kind,
        tuple(edges),
        m,
        pf_value=1.0,
        aperiodic=is_aperiodic(m),
        normal_form=nf,
    )


def _enveloping_stratum(f: GraphMap, filt: Filtration, z: int) -> Optional[int]:
    """The EG height s enveloping the zero stratum H_z: the strata strictly
    between the nearest lower irreducible stratum and s are all zero strata
    and components of G_{s-1}, H_s is EG with noncontractible G_s
    components, and H_z vertices have valence >= 2 in G_s."""

    def kind_of(i: int) -> str:
        _, mi = transition_matrix(f, sorted(filt.stratum(i)))
        return classify_matrix(mi)

    n = len(filt)
    s = next((i for i in range(z + 1, n + 1) if kind_of(i) != "zero"), None)
    u = next((i for i in range(z - 1, 0, -1) if kind_of(i) != "zero"), None)
    if s is None or u is None or kind_of(s) != "EG":
        return None
    comps_below = filt.prefix(s - 1).components()
    for i in range(u + 1, s):
        if kind_of(i) != "zero" or frozenset(filt.stratum(i)) not in comps_below:
            return None
    gs = filt.prefix(s)
    if any(rank == 0 for rank in gs.component_ranks()):
        return None
    stratum_edges = filt.stratum(z)
    verts = Subgraph(f.domain, stratum_edges).vertex_set()
    for v in verts:
        deg = sum(
            (f.domain.edges[e][0] == v) + (f.domain.edges[e][1] == v)
            for e in gs.edge_ids
        )
        if deg < 2:
            return None
    return s


def all_reports(f: GraphMap, filt: Filtration) -> list[StratumReport]:
    return [stratum_report(f, filt, r) for r in range(1, len(filt) + 1)]
