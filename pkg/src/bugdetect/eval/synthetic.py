"""Seeded program generators.

``idiom_corpus`` instantiates small, regular coding idioms with randomized
names, comments and helper functions; it is the training/evaluation corpus.
``random_function`` builds structurally random functions for property tests.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..lang.parser import parse
from ..lang.tree import SourceUnit

# role -> candidate spellings; each placeholder role in a template draws one
# spelling, distinct from the spellings already drawn for other roles
NAMES = {
    "xs": ["xs", "items", "values", "nums", "data", "elements", "entries", "seq"],
    "i": ["i", "j", "idx", "pos", "k", "index"],
    "count": ["count", "total", "n", "hits", "matches", "tally"],
    "target": ["target", "needle", "wanted", "key", "query"],
    "x": ["x", "value", "val", "num", "amount", "score"],
    "lo": ["lo", "low", "lower", "min_value", "floor"],
    "hi": ["hi", "high", "upper", "max_value", "ceiling"],
    "a": ["a", "left", "first", "lhs", "p"],
    "b": ["b", "right", "second", "rhs", "q"],
    "best": ["best", "largest", "top", "current_max"],
    "v": ["v", "item", "elem", "cur", "candidate"],
    "total": ["total", "acc", "running", "sum_value"],
    "result": ["result", "res", "out", "product"],
    "size": ["size", "length", "span", "width"],
    "start": ["start", "begin", "first_index"],
    "stop": ["stop", "end", "last_index"],
    "self": ["self"],
    "amount": ["amount", "deposit", "delta"],
    "value": ["value", "maybe_value", "given"],
    "default": ["default", "fallback", "alternative"],
    "word": ["word", "text", "line", "name"],
    "vowels": ["vowels", "letters", "allowed", "charset"],
    "n": ["n", "num", "steps", "limit"],
    "d": ["d", "diff", "delta", "gap"],
    "base": ["base", "width", "rate"],
    "exponent": ["exponent", "height", "periods"],
    "offset": ["offset", "bias", "extra"],
    "numerator": ["numerator", "dividend", "top_value"],
    "denominator": ["denominator", "divisor", "bottom_value"],
    "ratio": ["ratio", "quotient", "share"],
}

FUNC_NAMES = {
    "count_eq": ["count_matching", "count_equal", "occurrences", "count_of"],
    "clamp": ["clamp", "bound", "limit_to_range", "clip_value"],
    "absval": ["absolute", "magnitude", "abs_value"],
    "safediv": ["safe_divide", "checked_div", "divide_or_zero"],
    "inrange": ["in_range", "within", "is_between"],
    "maxof": ["max_of", "largest_item", "find_max"],
    "contains": ["contains", "has_item", "includes"],
    "sumof": ["sum_of", "total_of", "add_all"],
    "power": ["power", "repeat_multiply", "raise_to"],
    "usepower": ["scaled_power", "power_plus", "shifted_power"],
    "isempty": ["is_empty", "empty", "has_no_items"],
    "sign": ["sign", "signum", "direction"],
    "spanlen": ["span_length", "range_size", "width_of"],
    "countin": ["count_in_range", "count_between", "num_within"],
    "depositfn": ["deposit", "add_funds", "credit"],
    "orelse": ["or_default", "value_or", "coalesce"],
    "countvowels": ["count_vowels", "count_allowed", "num_special"],
    "minof": ["min_of", "smaller", "lesser"],
    "factorial": ["factorial", "fact", "product_down"],
    "distance": ["distance", "abs_diff", "gap_between"],
    "divide": ["divide", "ratio_of", "split_evenly"],
    "usedivide": ["average_ratio", "fraction", "portion"],
}

COMMENTS = ["# simple linear scan", "# guard against bad input", "# keep going until done",
            "# early exit", "# accumulate the result", "# TODO: handle edge cases"]

TEMPLATES: list[tuple[str, str]] = [
    ("count_eq", '''def {fn}({xs}, {target}):
  """Count how many items equal the target."""
  {count} = 0
  {i} = 0
  while {i} < len({xs}):
    if get({xs}, {i}) == {target}:
      {count} += 1
    {i} += 1
  return {count}
'''),
    ("clamp", '''def {fn}({x}, {lo}, {hi}):
  if {x} < {lo}:
    return {lo}
  if {x} > {hi}:
    return {hi}
  return {x}
'''),
    ("absval", '''def {fn}({x}):
  if {x} < 0:
    return -{x}
  return {x}
'''),
    ("safediv", '''def {fn}({a}, {b}):
  if {b} == 0:
    return 0
  return {a} / {b}
'''),
    ("inrange", '''def {fn}({x}, {lo}, {hi}):
  return {lo} <= {x} and {x} < {hi}
'''),
    ("maxof", '''def {fn}({xs}):
  {best} = get({xs}, 0)
  {i} = 1
  while {i} < len({xs}):
    {v} = get({xs}, {i})
    if {v} > {best}:
      {best} = {v}
    {i} += 1
  return {best}
'''),
    ("contains", '''def {fn}({xs}, {target}):
  {i} = 0
  while {i} < len({xs}):
    if get({xs}, {i}) == {target}:
      return True
    {i} += 1
  return False
'''),
    ("sumof", '''def {fn}({xs}):
  {total} = 0
  {i} = 0
  while {i} < len({xs}):
    {total} += get({xs}, {i})
    {i} += 1
  return {total}
'''),
    ("power", '''def {fn}({base}, {exponent}):
  """Multiply base by itself exponent times."""
  {result} = 1
  while {exponent} > 0:
    {result} *= {base}
    {exponent} -= 1
  return {result}
'''),
    ("isempty", '''def {fn}({xs}):
  return len({xs}) == 0
'''),
    ("sign", '''def {fn}({x}):
  if {x} > 0:
    return 1
  elif {x} < 0:
    return -1
  else:
    return 0
'''),
    ("spanlen", '''def {fn}({start}, {stop}):
  {size} = {stop} - {start}
  if {size} < 0:
    {size} = 0
  return {size}
'''),
    ("countin", '''def {fn}({xs}, {lo}, {hi}):
  {count} = 0
  {i} = 0
  while {i} < len({xs}):
    {v} = get({xs}, {i})
    if {v} >= {lo} and {v} <= {hi}:
      {count} += 1
    {i} += 1
  return {count}
'''),
    ("depositfn", '''def {fn}({self}, {amount}):
  if {amount} <= 0:
    return False
  {self}.balance += {amount}
  return True
'''),
    ("orelse", '''def {fn}({value}, {default}):
  if {value} is None:
    return {default}
  return {value}
'''),
    ("countvowels", '''def {fn}({word}, {vowels}):
  {count} = 0
  {i} = 0
  while {i} < len({word}):
    if char_at({word}, {i}) in {vowels}:
      {count} += 1
    {i} += 1
  return {count}
'''),
    ("minof", '''def {fn}({a}, {b}):
  if {a} < {b}:
    return {a}
  return {b}
'''),
    ("factorial", '''def {fn}({n}):
  {result} = 1
  while {n} > 1:
    {result} *= {n}
    {n} -= 1
  return {result}
'''),
    ("distance", '''def {fn}({a}, {b}):
  {d} = {a} - {b}
  if {d} < 0:
    {d} = -{d}
  return {d}
'''),
]

# (helper template, caller template) pairs: the caller passes locals named
# like the helper's parameters, which makes argument order learnable
PAIRED: list[tuple[str, str, str, str]] = [
    ("power", TEMPLATES[8][1], "usepower", '''def {fn}({base}, {exponent}, {offset}):
  {result} = {helper}({base}, {exponent})
  return {result} + {offset}
'''),
    ("divide", '''def {fn}({numerator}, {denominator}):
  """Divide numerator by denominator."""
  return {numerator} / {denominator}
''', "usedivide", '''def {fn}({numerator}, {denominator}):
  if {denominator} == 0:
    return 0
  {ratio} = {helper}({numerator}, {denominator})
  return {ratio}
'''),
]


@dataclass
class _NamePicker:
    rng: random.Random

    def __post_init__(self) -> None:
        self.chosen: dict[str, str] = {}
        self.used: set[str] = set()

    def __getitem__(self, role: str) -> str:
        if role not in self.chosen:
            options = [n for n in NAMES[role] if n not in self.used] or [f"{NAMES[role][0]}_{len(self.used)}"]
            name = self.rng.choice(options)
            self.chosen[role] = name
            self.used.add(name)
        return self.chosen[role]


class _Fmt(dict):
    def __init__(self, picker: _NamePicker, fixed: dict[str, str]):
        super().__init__(fixed)
        self.picker = picker

    def __missing__(self, key: str) -> str:
        return self.picker[key]


def _decorate(text: str, rng: random.Random, comment_p: float) -> str:
    """Randomly add a comment line or drop the docstring."""
    lines = text.rstrip("\n").split("\n")
    if rng.random() < 0.5:
        lines = [ln for ln in lines if '"""' not in ln]
    if rng.random() < comment_p and len(lines) > 2:
        at = rng.randrange(1, len(lines))
        indent = len(lines[at]) - len(lines[at].lstrip())
        lines.insert(at, " " * indent + rng.choice(COMMENTS))
    return "\n".join(lines) + "\n"


def _fn_name(key: str, rng: random.Random, taken: set[str]) -> str:
    base = rng.choice(FUNC_NAMES[key])
    name = base
    while name in taken:
        name = f"{base}_{rng.randrange(2, 100)}"
    taken.add(name)
    return name


def idiom_unit(rng: random.Random, comment_p: float = 0.3) -> SourceUnit:
    """One source unit: a single idiom, or a helper plus a caller."""
    taken: set[str] = set()
    if rng.random() < 0.2:
        hkey, htext, ckey, ctext = rng.choice(PAIRED)
        picker = _NamePicker(rng)
        helper = _fn_name(hkey, rng, taken)
        first = htext.format_map(_Fmt(picker, {"fn": helper}))
        picker2 = _NamePicker(rng)
        picker2.chosen = {k: v for k, v in picker.chosen.items()}
        picker2.used = set(picker.used)
        second = ctext.format_map(_Fmt(picker2, {"fn": _fn_name(ckey, rng, taken), "helper": helper}))
        text = _decorate(first, rng, comment_p) + "\n" + _decorate(second, rng, comment_p)
    else:
        key, tmpl = rng.choice(TEMPLATES)
        text = _decorate(tmpl.format_map(_Fmt(_NamePicker(rng), {"fn": _fn_name(key, rng, taken)})), rng, comment_p)
    return parse(text)


def idiom_corpus(n_units: int, seed: int) -> list[SourceUnit]:
    rng = random.Random(seed)
    return [idiom_unit(rng) for _ in range(n_units)]


# -- structurally random programs --------------------------------------------

_ARITH = ["+", "-", "*", "/", "//", "%"]
_CMP = ["<", "<=", ">", ">=", "==", "!=", "in", "not in", "is", "is not"]
_AUG = ["+=", "-=", "*=", "/=", "//=", "%="]
_LITS = ["-2", "-1", "0", "1", "2", "True", "False", "7", "'s'"]


class _RandomProgram:
    def __init__(self, rng: random.Random, max_branches: int, max_stmts: int):
        self.rng = rng
        self.branches_left = max_branches
        self.stmts_left = max_stmts
        self.lines: list[str] = []

    def atom(self, scope: list[str], depth: int = 1) -> str:
        r = self.rng.random()
        if scope and r < 0.6:
            name = self.rng.choice(scope)
            return f"{name}.attr" if self.rng.random() < 0.05 else name
        if r < 0.8 or depth <= 0:
            return self.rng.choice(_LITS)
        args = ", ".join(self.expr(scope, depth - 1) for _ in range(self.rng.randrange(0, 4)))
        return f"{self.rng.choice(['f', 'g', 'len', 'obj.meth'])}({args})"

    def expr(self, scope: list[str], depth: int = 2) -> str:
        if depth <= 0 or self.rng.random() < 0.4:
            return self.atom(scope, depth)
        r = self.rng.random()
        if r < 0.4:
            return f"({self.expr(scope, depth - 1)} {self.rng.choice(_ARITH)} {self.expr(scope, depth - 1)})"
        if r < 0.6:
            return f"({self.expr(scope, depth - 1)} {self.rng.choice(['and', 'or'])} {self.expr(scope, depth - 1)})"
        if r < 0.85:
            return f"({self.expr(scope, depth - 1)} {self.rng.choice(_CMP)} {self.expr(scope, depth - 1)})"
        return f"({self.rng.choice(['not ', '-'])}{self.expr(scope, depth - 1)})"

    def block(self, indent: int, scope: list[str], n: int) -> None:
        for _ in range(n):
            self.statement(indent, scope)

    def statement(self, indent: int, scope: list[str]) -> None:
        pad = "  " * indent
        self.stmts_left -= 1
        r = self.rng.random()
        if r < 0.2 and self.branches_left > 0 and self.stmts_left > 1:
            self.branches_left -= 1
            kw = self.rng.choice(["if", "if", "while"])
            self.lines.append(f"{pad}{kw} {self.expr(scope)}:")
            self.block(indent + 1, list(scope), self.rng.randrange(1, 3))
            if kw == "if" and self.rng.random() < 0.6:
                self.lines.append(f"{pad}else:")
                self.block(indent + 1, list(scope), self.rng.randrange(1, 3))
        elif r < 0.55 or not scope:
            name = self.rng.choice(["x", "y", "z", "acc", "tmp"] + scope[:2])
            self.lines.append(f"{pad}{name} = {self.expr(scope)}")
            if name not in scope:
                scope.append(name)
        elif r < 0.7:
            self.lines.append(f"{pad}{self.rng.choice(scope)} {self.rng.choice(_AUG)} {self.expr(scope)}")
        elif r < 0.8:
            self.lines.append(f"{pad}# note {self.rng.randrange(100)}")
            self.lines.append(f"{pad}{self.atom(scope)}")
        elif r < 0.9 and indent > 1:
            self.lines.append(f"{pad}return {self.expr(scope)}")
        else:
            args = ", ".join(self.expr(scope, 1) for _ in range(self.rng.randrange(1, 4)))
            self.lines.append(f"{pad}f({args})")


def random_function_source(rng: random.Random, max_branches: int = 3, max_stmts: int = 8) -> str:
    params = rng.sample(["a", "b", "c", "d", "p"], rng.randrange(0, 4))
    ps = ", ".join(params + (["k=0"] if rng.random() < 0.2 else []))
    gen = _RandomProgram(rng, max_branches, max_stmts)
    head = [f"def fn{rng.randrange(1000)}({ps}):"]
    if rng.random() < 0.2:
        head.append('  """Docstring."""')
    scope = list(params)
    gen.block(1, scope, rng.randrange(1, 5))
    if rng.random() < 0.7:
        gen.lines.append(f"  return {gen.expr(scope)}")
    return "\n".join(head + gen.lines) + "\n"


def random_function(rng: random.Random, max_branches: int = 3, max_stmts: int = 8):
    """A parsed random FunctionDef; the generator only emits supported syntax."""
    return parse(random_function_source(rng, max_branches, max_stmts)).functions[0]
