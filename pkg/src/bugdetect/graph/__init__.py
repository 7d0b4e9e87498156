"""Code graphs: entities, relations, dataflow, token projection, files."""
from .dataflow import DataflowResult, Event, analyze, build_event_graph
from .extract import (
    NOBUG,
    RELATIONS,
    Candidate,
    CodeGraph,
    Entity,
    EntityKind,
    Relation,
    control_flow,
    extract_graph,
    graph_stats,
    node_location_map,
)
from .samples import CorpusFunction, corpus_functions
from .project import TokenProjection, project_tokens
from .serialize import (
    MalformedGraphError,
    deserialize_graph,
    graph_from_json,
    graph_to_json,
    iter_graphs,
    read_graphs,
    serialize_graph,
    write_graphs,
)

__all__ = [
    "Candidate", "CodeGraph", "CorpusFunction", "corpus_functions", "DataflowResult", "Entity", "EntityKind", "Event", "MalformedGraphError",
    "NOBUG", "RELATIONS", "Relation", "TokenProjection", "analyze", "build_event_graph", "control_flow",
    "deserialize_graph", "extract_graph", "graph_from_json", "graph_stats", "graph_to_json", "iter_graphs",
    "node_location_map", "project_tokens", "read_graphs", "serialize_graph", "write_graphs",
]
