"""Text format for marked graphs and graph maps.

One declaration per line, '#' starts a comment:

    vertex <id>
    edge <id> <from> <to>
    marking <rose-gen> = <edge word>
    map
    <edge> -> <edge word>
    vmap <v> -> <v>

Edge words are whitespace separated edge ids, reversal written ``<id>^-1``.
Roses whose marking lines are omitted get the identity marking.
"""

from __future__ import annotations

from .graphs import MarkedGraph, StructureError, Word, parse_word, fmt_word
from .maps import GraphMap

parse_edge_word = parse_word


def loads(text: str) -> tuple[MarkedGraph, GraphMap | None]:
    vertices: list[str] = []
    edges: dict[str, tuple[str, str]] = {}
    marking: dict[str, Word] = {}
    edge_images: dict[str, Word] = {}
    vertex_images: dict[str, str] = {}
    in_map = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "vertex":
                vertices.append(toks[1])
            elif toks[0] == "edge":
                edges[toks[1]] = (toks[2], toks[3])
            elif toks[0] == "marking":
                gen, _, word = line.partition("=")
                marking[gen.split()[1]] = parse_word(word)
            elif toks[0] == "map":
                in_map = True
            elif toks[0] == "vmap":
                src, _, dst = line[4:].partition("->")
                vertex_images[src.strip()] = dst.strip()
            elif in_map and "->" in line:
                src, _, word = line.partition("->")
                edge_images[src.strip()] = parse_word(word)
            else:
                raise StructureError(f"unrecognized declaration: {line!r}")
        except IndexError:
            raise StructureError(f"line {lineno}: malformed declaration {line!r}")

    if not marking and len(vertices) == 1:
        marking = {e: ((e, 1),) for e in edges}
    graph = MarkedGraph(
        vertices,
        edges,
        marking=marking or None,
        basepoint=vertices[0] if len(vertices) == 1 else None,
    )
    gmap = None
    if edge_images:
        missing = set(edges) - set(edge_images)
        if missing:
            raise StructureError(f"map lacks images for edges {sorted(missing)}")
        gmap = GraphMap(graph, graph, edge_images, vertex_images or None)
    return graph, gmap


def load(path: str) -> tuple[MarkedGraph, GraphMap | None]:
    with open(path) as fh:
        return loads(fh.read())


def dumps(graph: MarkedGraph, gmap: GraphMap | None = None) -> str:
    lines = []
    for v in sorted(graph.vertices):
        lines.append(f"vertex {v}")
    for e in sorted(graph.edges):
        u, w = graph.edges[e]
        lines.append(f"edge {e} {u} {w}")
    if graph.marking is not None:
        for g in sorted(graph.marking):
            lines.append(f"marking {g} = {fmt_word(graph.marking[g])}")
    if gmap is not None:
        lines.append("map")
        for e in sorted(gmap.edge_images):
            lines.append(f"{e} -> {fmt_word(gmap.edge_images[e])}")
        for v in sorted(gmap.vertex_images):
            lines.append(f"vmap {v} -> {gmap.vertex_images[v]}")
    return "\n".join(lines) + "\n"
