"""JSON-lines graph files."""
from __future__ import annotations

import json
from typing import IO, Iterable, Iterator

from .extract import NOBUG, Candidate, CodeGraph, Entity, EntityKind, Relation


class MalformedGraphError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


def graph_to_json(g: CodeGraph) -> dict:
    return {
        "function": g.function,
        "nodes": [{"id": n.id, "kind": n.kind.value, "label": n.label} for n in g.nodes],
        "edges": [[s, r.value, d] for s, r, d in g.edges],
        "candidates": [
            {"location": list(c.location), "kind": c.kind, "payload": c.payload, "node_id": c.node_id, "meta": list(c.meta)}
            for c in g.candidates
        ],
        "nobug_id": g.nobug_id,
        "target": NOBUG if g.target == NOBUG else {
            "location": list(g.target[0]), "kind": g.target[1], "payload": g.target[2]
        },
    }


def graph_from_json(obj: dict) -> CodeGraph:
    nodes = [Entity(int(n["id"]), EntityKind(n["kind"]), str(n["label"])) for n in obj["nodes"]]
    for i, n in enumerate(nodes):
        if n.id != i:
            raise ValueError(f"node ids must be dense and ordered, found {n.id} at {i}")
    edges = [(int(s), Relation(r), int(d)) for s, r, d in obj["edges"]]
    for s, _, d in edges:
        if not (0 <= s < len(nodes) and 0 <= d < len(nodes)):
            raise ValueError(f"edge endpoint out of range: {s} -> {d}")
    cands = [
        Candidate(tuple(c["location"]), c["kind"], c["payload"], int(c["node_id"]), tuple(c.get("meta", ())))
        for c in obj["candidates"]
    ]
    if obj.get("nobug_id", len(nodes)) != len(nodes):
        raise ValueError("nobug_id must equal the node count")
    t = obj.get("target", NOBUG)
    target = NOBUG if t == NOBUG else (tuple(t["location"]), t["kind"], t["payload"])
    g = CodeGraph(nodes, edges, cands, target, obj.get("function", ""))
    g.target_index()
    return g


def serialize_graph(g: CodeGraph) -> bytes:
    return (json.dumps(graph_to_json(g), separators=(",", ":"), ensure_ascii=True) + "\n").encode("ascii")


def _decode_line(line: bytes, base: int) -> CodeGraph:
    try:
        text = line.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedGraphError(f"invalid utf-8: {e.reason}", base + e.start) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedGraphError(f"invalid JSON: {e.msg}", base + len(text[: e.pos].encode("utf-8"))) from None
    try:
        return graph_from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedGraphError(f"invalid graph record: {e}", base) from None


def deserialize_graph(data: bytes) -> CodeGraph:
    graphs = list(iter_graphs(data))
    if len(graphs) != 1:
        raise MalformedGraphError(f"expected one graph, found {len(graphs)}", 0 if not graphs else len(data))
    return graphs[0]


def iter_graphs(data: bytes) -> Iterator[CodeGraph]:
    """Decode a JSON-lines byte string; a missing final newline means truncation."""
    pos = 0
    while pos < len(data):
        end = data.find(b"\n", pos)
        if end < 0:
            raise MalformedGraphError("truncated record (no terminating newline)", len(data))
        line = data[pos:end]
        if line.strip():
            yield _decode_line(line, pos)
        pos = end + 1


def write_graphs(graphs: Iterable[CodeGraph], fp: IO[bytes]) -> int:
    count = 0
    for g in graphs:
        fp.write(serialize_graph(g))
        count += 1
    return count


def read_graphs(path: str) -> list[CodeGraph]:
    with open(path, "rb") as fp:
        return list(iter_graphs(fp.read()))
