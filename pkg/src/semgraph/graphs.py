"""Build, aggregate, and export interpretable semantic graphs.

Directed graphs keep one node per (word, time segment) and connect object
pairs through action/state nodes as object -> action -> object chains,
reading along time. Undirected graphs keep one node per word and connect
any pair whose feature cosine clears the threshold. Exports go to DOT (for
external renderers) or JSON (lossless round trip).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .assignment import SelectedNode
from .core import (
    DataError,
    GraphEdge,
    GraphNode,
    Role,
    SemanticGraph,
    atomic_write_text,
    dump_json,
)
from .lexicon import default_lexicon

_SUFFIX_RULES = ("ing", "ed")

MIN_NODE_SIZE = 0.3
MAX_NODE_SIZE = 1.5


def classify_word_role(word: str, lexicon: dict[str, Role] | None = None) -> Role:
    """Role from explicit lookup, then suffix heuristics, then the default."""
    if not word:
        raise DataError("cannot classify an empty word")
    lex = lexicon if lexicon is not None else default_lexicon()
    if word in lex:
        return lex[word]
    for suffix in _SUFFIX_RULES:
        if word.endswith(suffix) and len(word) > len(suffix) + 1:
            return Role.ACTION_STATE
    return Role.OTHER


def _cosine(a: np.ndarray, b: np.ndarray) -> float | None:
    """Cosine similarity, or None when either vector has no direction."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return None
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def build_directed_graph(
    nodes: list[SelectedNode],
    lexicon: dict[str, Role] | None = None,
    tau: float = 0.5,
    time_window: int = 2,
) -> SemanticGraph:
    """Chain object pairs through temporally compatible action/state nodes.

    For objects o1, o2 and an action a with t(o1) <= t(a) <= t(o2), both at
    most `time_window` segments from a, the chain o1 -> a -> o2 is added
    when min(cos(o1, a), cos(a, o2)) >= tau; both chain edges carry that
    minimum cosine and the action word. Same-segment object pairs orient
    from the lower to the higher node index.
    """
    records = sorted(nodes, key=lambda n: (n.time_segment, n.word))
    graph_nodes = []
    for i, rec in enumerate(records):
        if rec.time_segment is None:
            raise DataError(f"directed graph node {rec.word!r} is missing time_segment")
        graph_nodes.append(
            GraphNode(
                id=i,
                word=rec.word,
                time_segment=rec.time_segment,
                importance=rec.activation,
                role=classify_word_role(rec.word, lexicon),
                feature=rec.feature,
            )
        )
    objects = [n for n in graph_nodes if n.role == Role.OBJECT]
    actions = [n for n in graph_nodes if n.role == Role.ACTION_STATE]
    edge_weights: dict[tuple[int, int], tuple[float, str]] = {}
    for a in actions:
        for o1 in objects:
            if not (o1.time_segment <= a.time_segment <= o1.time_segment + time_window):
                continue
            for o2 in objects:
                if o2.id == o1.id:
                    continue
                if not (a.time_segment <= o2.time_segment <= a.time_segment + time_window):
                    continue
                if o1.time_segment > o2.time_segment:
                    continue
                if o1.time_segment == o2.time_segment and o1.id > o2.id:
                    continue
                cos_in = _cosine(o1.feature, a.feature)
                cos_out = _cosine(a.feature, o2.feature)
                if cos_in is None or cos_out is None:
                    continue
                weight = min(cos_in, cos_out)
                if weight < tau:
                    continue
                for key in ((o1.id, a.id), (a.id, o2.id)):
                    old = edge_weights.get(key)
                    if old is None or weight > old[0]:
                        edge_weights[key] = (weight, a.word)
    edges = [
        GraphEdge(src_id=src, dst_id=dst, weight=w, relation_word=word)
        for (src, dst), (w, word) in sorted(edge_weights.items())
    ]
    graph = SemanticGraph(
        directed=True, nodes=graph_nodes, edges=edges, tau=tau, time_window=time_window
    )
    graph.validate()
    return graph


def build_undirected_graph(nodes: list[SelectedNode], tau: float = 0.5) -> SemanticGraph:
    """All words become nodes; pairs with cosine >= tau become edges."""
    records = sorted(nodes, key=lambda n: n.word)
    graph_nodes = []
    for i, rec in enumerate(records):
        if rec.time_segment is not None:
            raise DataError(f"undirected graph node {rec.word!r} carries time_segment")
        graph_nodes.append(
            GraphNode(
                id=i,
                word=rec.word,
                time_segment=None,
                importance=rec.activation,
                role=classify_word_role(rec.word),
                feature=rec.feature,
            )
        )
    edges = []
    for i, u in enumerate(graph_nodes):
        for v in graph_nodes[i + 1 :]:
            weight = _cosine(u.feature, v.feature)
            if weight is not None and weight >= tau:
                edges.append(GraphEdge(src_id=u.id, dst_id=v.id, weight=weight))
    graph = SemanticGraph(directed=False, nodes=graph_nodes, edges=edges, tau=tau)
    graph.validate()
    return graph


def aggregate_graphs(
    g1: SemanticGraph, g2: SemanticGraph, lexicon: dict[str, Role] | None = None
) -> SemanticGraph:
    """Merge two graphs of equal directedness.

    Nodes with equal (word [, time]) keys merge by summing importance and
    averaging features; edges are recomputed from the merged features with
    g1's thresholds.
    """
    if g1.directed != g2.directed:
        raise DataError("cannot aggregate graphs of different directedness")

    def key(node: GraphNode):
        return (node.word, node.time_segment) if g1.directed else node.word

    merged: dict = {}
    for node in list(g1.nodes) + list(g2.nodes):
        prev = merged.get(key(node))
        if prev is None:
            merged[key(node)] = (node.importance, node.feature.copy(), 1)
        else:
            imp, feat, count = prev
            merged[key(node)] = (imp + node.importance, feat + node.feature, count + 1)

    records = []
    for k, (importance, feat_sum, count) in merged.items():
        word, t = (k if g1.directed else (k, None))
        records.append(
            SelectedNode(
                word=word,
                time_segment=t,
                feature=feat_sum / count,
                activation=importance,
            )
        )
    if g1.directed:
        return build_directed_graph(records, lexicon, tau=g1.tau, time_window=g1.time_window)
    return build_undirected_graph(records, tau=g1.tau)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------


def node_size(importance: float, max_importance: float) -> float:
    """Rendered node size, scaled into [MIN_NODE_SIZE, MAX_NODE_SIZE]."""
    if max_importance <= 0:
        return MIN_NODE_SIZE
    frac = min(max(importance / max_importance, 0.0), 1.0)
    return MIN_NODE_SIZE + (MAX_NODE_SIZE - MIN_NODE_SIZE) * frac


_ROLE_FILL = {
    Role.OBJECT: "lightblue",
    Role.ACTION_STATE: "lightpink",
    Role.OTHER: "lightgray",
}


def graph_to_dot(g: SemanticGraph) -> str:
    g.validate()
    max_imp = max((n.importance for n in g.nodes), default=0.0)
    kind = "digraph" if g.directed else "graph"
    arrow = "->" if g.directed else "--"
    lines = [f"{kind} semantic_graph {{"]
    lines.append('  node [shape="circle", style="filled"];')
    for n in sorted(g.nodes, key=lambda n: n.id):
        label = n.word if n.time_segment is None else f"{n.word}@{n.time_segment}"
        size = node_size(n.importance, max_imp)
        # border darkens with importance; HSV with zero saturation is gray
        shade = 0.85 - 0.55 * (n.importance / max_imp if max_imp > 0 else 0.0)
        lines.append(
            f'  {n.id} [label="{label}", width={size:.4f}, height={size:.4f}, '
            f'fillcolor="{_ROLE_FILL[n.role]}", color="0.0000 0.0000 {shade:.4f}"];'
        )
    for e in sorted(g.edges, key=lambda e: (e.src_id, e.dst_id)):
        pen = 0.5 + 3.0 * abs(e.weight)
        attrs = f"penwidth={pen:.4f}"
        if e.relation_word:
            attrs += f', label="{e.relation_word}"'
        lines.append(f"  {e.src_id} {arrow} {e.dst_id} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(g: SemanticGraph, meta: dict | None = None) -> str:
    g.validate()
    payload = {
        "directed": g.directed,
        "tau": g.tau,
        "time_window": g.time_window,
        "nodes": [
            {
                "id": n.id,
                "word": n.word,
                "time_segment": n.time_segment,
                "importance": n.importance,
                "role": n.role.value,
                "feature": [float(x) for x in n.feature],
            }
            for n in sorted(g.nodes, key=lambda n: n.id)
        ],
        "edges": [
            {
                "src_id": e.src_id,
                "dst_id": e.dst_id,
                "weight": e.weight,
                "relation_word": e.relation_word,
            }
            for e in sorted(g.edges, key=lambda e: (e.src_id, e.dst_id))
        ],
    }
    if meta:
        payload["meta"] = meta
    return dump_json(payload)


def export_graph(
    g: SemanticGraph, fmt: str, path: str | Path, meta: dict | None = None
) -> None:
    """Write the graph as DOT or JSON; identical graphs export byte-identically."""
    if fmt == "dot":
        atomic_write_text(path, graph_to_dot(g))
    elif fmt == "json":
        atomic_write_text(path, graph_to_json(g, meta))
    else:
        raise DataError(f"unknown export format {fmt!r}")


def import_graph(path: str | Path) -> SemanticGraph:
    g, _ = import_graph_with_meta(path)
    return g


def import_graph_with_meta(path: str | Path) -> tuple[SemanticGraph, dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing graph file: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable graph JSON {path}: {exc}") from exc
    try:
        nodes = [
            GraphNode(
                id=int(n["id"]),
                word=n["word"],
                time_segment=None if n["time_segment"] is None else int(n["time_segment"]),
                importance=float(n["importance"]),
                role=Role(n["role"]),
                feature=np.array(n["feature"], dtype=np.float64),
            )
            for n in payload["nodes"]
        ]
        edges = [
            GraphEdge(
                src_id=int(e["src_id"]),
                dst_id=int(e["dst_id"]),
                weight=float(e["weight"]),
                relation_word=e.get("relation_word"),
            )
            for e in payload["edges"]
        ]
        graph = SemanticGraph(
            directed=bool(payload["directed"]),
            nodes=nodes,
            edges=edges,
            tau=float(payload.get("tau", 0.5)),
            time_window=int(payload.get("time_window", 2)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed graph JSON {path}: {exc}") from exc
    graph.validate()
    return graph, payload.get("meta", {})
