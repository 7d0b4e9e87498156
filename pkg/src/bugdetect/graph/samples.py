"""Training/evaluation samples: a function, its rewrites, and their graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from ..lang.parser import parse
from ..lang.printer import to_source
from ..lang.symbols import SymbolTable, resolve_function
from ..lang.tree import Node, SourceUnit
from ..rewrite.engine import apply, enumerate_rewrites, invert
from ..rewrite.rules import PotentialRewrite
from .extract import CodeGraph, extract_graph


@dataclass
class CorpusFunction:
    """Function ``index`` of ``unit``; sibling functions give call context."""

    unit: SourceUnit
    index: int
    name: str = field(init=False)

    def __post_init__(self) -> None:
        self.name = self.fn.child(1).token

    @property
    def fn(self) -> Node:
        return self.unit.functions[self.index]

    @cached_property
    def table(self) -> SymbolTable:
        return resolve_function(self.fn, self.unit.function_names())

    @cached_property
    def candidates(self) -> list[PotentialRewrite]:
        return enumerate_rewrites(self.fn, self.table)

    @cached_property
    def clean_graph(self) -> CodeGraph:
        return extract_graph(self.fn, self.table, self.candidates, self.unit)

    def source(self) -> str:
        return to_source(self.fn)

    def variant(self, pr: PotentialRewrite) -> CodeGraph:
        """Graph of the function with ``pr`` applied, re-extracted from printed
        text, targeting the repairing inverse rewrite."""
        if pr.is_identity:
            return self.clean_graph
        after = apply(self.fn, pr)
        inv = invert(pr, after)
        reparsed = parse(to_source(after)).functions[0]
        unit = self.unit.replace_function(self.index, reparsed)
        tbl = resolve_function(reparsed, unit.function_names())
        return extract_graph(reparsed, tbl, enumerate_rewrites(reparsed, tbl), unit, target=inv)


def corpus_functions(units: list[SourceUnit]) -> list[CorpusFunction]:
    return [CorpusFunction(u, i) for u in units for i in range(len(u.functions))]
