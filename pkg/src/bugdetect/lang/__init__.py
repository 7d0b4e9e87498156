"""Parsing, printing and symbol resolution for the supported Python subset."""
from .parser import ParseError, parse, parse_function
from .printer import PrintedToken, function_tokens, render, to_source
from .symbols import (
    MODULE_SCOPE,
    NotANameLocationError,
    Symbol,
    SymbolKind,
    SymbolTable,
    in_scope_before,
    resolve_function,
    resolve_symbols,
)
from .tree import (
    GrammarPositionError,
    InvalidLocationError,
    Location,
    Node,
    NodeKind,
    SourceUnit,
    allowed_child,
    leaf,
    node,
    node_at,
    replace_at,
)

__all__ = [
    "GrammarPositionError", "InvalidLocationError", "Location", "MODULE_SCOPE", "Node", "NodeKind",
    "NotANameLocationError", "ParseError", "PrintedToken", "SourceUnit", "Symbol", "SymbolKind",
    "SymbolTable", "allowed_child", "function_tokens", "in_scope_before", "leaf", "node", "node_at",
    "parse", "parse_function", "render", "replace_at", "resolve_function", "resolve_symbols", "to_source",
]
