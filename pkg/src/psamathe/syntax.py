"""Abstract syntax for Psamathe programs.

AST nodes are frozen dataclasses. Source positions live in a ``span`` field
that is excluded from equality, so two parses of equivalent text compare
equal regardless of layout.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

from psamathe.quantity import TypeQuant


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    length: int
    offset: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _span():
    return field(default=None, compare=False, repr=False, kw_only=True)


class Modifier(Enum):
    FUNGIBLE = "fungible"
    UNIQUE = "unique"
    IMMUTABLE = "immutable"
    CONSUMABLE = "consumable"
    ASSET = "asset"

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Bool:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class Nat:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class Named:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Table:
    keys: tuple[str, ...]
    elem: Type

    def __str__(self) -> str:
        if not self.keys:
            return f"list {self.elem}"
        return f"table({', '.join(self.keys)}) {self.elem}"


@dataclass(frozen=True)
class Record:
    fields: tuple[tuple[str, Type], ...]

    def field_type(self, name: str) -> Optional[Type]:
        for fname, ftype in self.fields:
            if fname == name:
                return ftype
        return None

    def __str__(self) -> str:
        inner = ", ".join(f"{n} : {t}" for n, t in self.fields)
        return "{" + inner + "}"


BaseType = Union[Bool, Nat, Named, Table, Record]


@dataclass(frozen=True)
class Type:
    """A quantity paired with a base type.

    ``quant`` is None only in freshly parsed programs where the quantity was
    omitted; the checker fills it in before use.
    """

    quant: Optional[TypeQuant]
    base: BaseType

    def __str__(self) -> str:
        if self.quant is None:
            return str(self.base)
        return f"{self.quant} {self.base}"


# ---------------------------------------------------------------------------
# Locators


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class NatLit:
    value: int
    hex: bool = False
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Field:
    of: Locator
    field: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class VarDef:
    name: str
    declared: BaseType
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ListLit:
    elems: tuple[Locator, ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class RecordLit:
    members: tuple[tuple[str, Type, Locator], ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Copy:
    inner: Locator
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Zip:
    parts: tuple[Locator, ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Select:
    source: Locator
    key: Locator
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Hole:
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Filter:
    source: Locator
    quant: TypeQuant
    predicate: str
    args: tuple[Arg, ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Consume:
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class BinOp:
    """Pure natural-number arithmetic or comparison."""

    op: str
    left: Locator
    right: Locator
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Length:
    arg: Locator
    span: Optional[Span] = _span()


Locator = Union[
    BoolLit, NatLit, Var, Field, VarDef, ListLit, RecordLit, Copy, Zip,
    Select, Filter, Consume, BinOp, Length,
]
Arg = Union[Locator, Hole]

PURE = (BinOp, Length)
ARITH_OPS = ("+", "-", "*", "/")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")


# ---------------------------------------------------------------------------
# Statements and declarations


@dataclass(frozen=True)
class New:
    type_name: str
    args: tuple[Arg, ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Arg, ...]
    span: Optional[Span] = _span()


TransformerCall = Union[New, Call]


@dataclass(frozen=True)
class Flow:
    source: Locator
    dest: Locator
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class FlowTransform:
    """``source --> call --> dest``; ``dest`` is None when the result is dropped."""

    source: Locator
    call: TransformerCall
    dest: Optional[Locator]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TryCatch:
    try_body: tuple[Stmt, ...]
    catch_body: tuple[Stmt, ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Revert:
    """Runtime-only marker; never produced by the parser."""

    span: Optional[Span] = _span()


Stmt = Union[Flow, FlowTransform, TryCatch, Revert]


@dataclass(frozen=True)
class Param:
    name: str
    type: Type
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TransformerDecl:
    name: str
    params: tuple[Param, ...]
    ret: Param
    body: tuple[Stmt, ...]
    span: Optional[Span] = _span()

    @property
    def aux_params(self) -> tuple[Param, ...]:
        return self.params[:-1]

    @property
    def flowing_param(self) -> Optional[Param]:
        return self.params[-1] if self.params else None


@dataclass(frozen=True)
class TypeDecl:
    name: str
    modifiers: tuple[Modifier, ...]
    base: BaseType
    span: Optional[Span] = _span()


Decl = Union[TransformerDecl, TypeDecl]


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...]
    body: tuple[Stmt, ...]

    @property
    def type_decls(self) -> dict[str, TypeDecl]:
        return {d.name: d for d in self.decls if isinstance(d, TypeDecl)}

    @property
    def transformers(self) -> dict[str, TransformerDecl]:
        return {d.name: d for d in self.decls if isinstance(d, TransformerDecl)}


# ---------------------------------------------------------------------------
# Named-type resolution

# builtin aliases: names that behave as nat without being declared
BUILTIN_ALIASES = {"address": Nat(), "uint256": Nat()}


class UnknownType(Exception):
    def __init__(self, name: str):
        super().__init__(f"unknown type {name}")
        self.name = name


class CyclicTypeDefinition(Exception):
    def __init__(self, name: str):
        super().__init__(f"type {name} is defined in terms of itself")
        self.name = name


def resolve_named(
    type_decls: Mapping[str, TypeDecl], base: BaseType
) -> tuple[frozenset[Modifier], BaseType]:
    """Follow a chain of named types to the first structural base type.

    Returns the union of modifiers seen along the chain. ``consumable``
    implies ``asset``.
    """
    mods: set[Modifier] = set()
    seen: list[str] = []
    while isinstance(base, Named):
        name = base.name
        if name in seen:
            raise CyclicTypeDefinition(name)
        seen.append(name)
        if name in type_decls:
            decl = type_decls[name]
            mods.update(decl.modifiers)
            base = decl.base
        elif name in BUILTIN_ALIASES:
            base = BUILTIN_ALIASES[name]
        else:
            raise UnknownType(name)
    if Modifier.CONSUMABLE in mods:
        mods.add(Modifier.ASSET)
    return frozenset(mods), base


# ---------------------------------------------------------------------------
# Pretty printing


def show_type(t: Type) -> str:
    return str(t)


def show_base(b: BaseType) -> str:
    return str(b)


def show_arg(a: Arg) -> str:
    if isinstance(a, Hole):
        return "_"
    return show_locator(a)


_PREC = {"==": 1, "!=": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
         "+": 2, "-": 2, "*": 3, "/": 3}


def show_locator(loc: Locator, prec: int = 0) -> str:
    if isinstance(loc, BoolLit):
        return "true" if loc.value else "false"
    if isinstance(loc, NatLit):
        return f"0x{loc.value:X}" if loc.hex else str(loc.value)
    if isinstance(loc, Var):
        return loc.name
    if isinstance(loc, Field):
        return f"{show_locator(loc.of, 9)}.{loc.field}"
    if isinstance(loc, VarDef):
        return f"var {loc.name} : {loc.declared}"
    if isinstance(loc, ListLit):
        return "[" + ", ".join(show_locator(e) for e in loc.elems) + "]"
    if isinstance(loc, RecordLit):
        members = ", ".join(
            f"{n} : {t} |-> {show_locator(v)}" for n, t, v in loc.members
        )
        return "{" + members + "}"
    if isinstance(loc, Copy):
        return f"copy({show_locator(loc.inner)})"
    if isinstance(loc, Zip):
        return "zip(" + ", ".join(show_locator(p) for p in loc.parts) + ")"
    if isinstance(loc, Select):
        return f"{show_locator(loc.source, 9)}[{show_locator(loc.key)}]"
    if isinstance(loc, Filter):
        args = ", ".join(show_arg(a) for a in loc.args)
        return f"{show_locator(loc.source, 9)}[{loc.quant} st {loc.predicate}({args})]"
    if isinstance(loc, Consume):
        return "consume"
    if isinstance(loc, Length):
        return f"length({show_locator(loc.arg)})"
    if isinstance(loc, BinOp):
        p = _PREC[loc.op]
        # left-associative: the right operand needs strictly higher precedence
        text = f"{show_locator(loc.left, p)} {loc.op} {show_locator(loc.right, p + 1)}"
        return f"({text})" if p < prec else text
    raise TypeError(f"not a locator: {loc!r}")


def show_call(c: TransformerCall) -> str:
    args = ", ".join(show_arg(a) for a in c.args)
    if isinstance(c, New):
        return f"new {c.type_name}({args})"
    return f"{c.name}({args})"


def show_stmt(s: Stmt, indent: str = "") -> str:
    if isinstance(s, Flow):
        return f"{indent}{show_locator(s.source)} --> {show_locator(s.dest)}"
    if isinstance(s, FlowTransform):
        text = f"{indent}{show_locator(s.source)} --> {show_call(s.call)}"
        if s.dest is not None:
            text += f" --> {show_locator(s.dest)}"
        return text
    if isinstance(s, TryCatch):
        inner = indent + "    "
        lines = [f"{indent}try {{"]
        lines += [show_stmt(t, inner) for t in s.try_body]
        lines.append(f"{indent}}} catch {{")
        lines += [show_stmt(t, inner) for t in s.catch_body]
        lines.append(f"{indent}}}")
        return "\n".join(lines)
    if isinstance(s, Revert):
        return f"{indent}revert"
    raise TypeError(f"not a statement: {s!r}")


def show_decl(d: Decl) -> str:
    if isinstance(d, TypeDecl):
        mods = "".join(f"{m} " for m in d.modifiers)
        return f"type {d.name} is {mods}{d.base}"
    params = ", ".join(f"{p.name} : {p.type}" for p in d.params)
    lines = [f"transformer {d.name}({params}) -> {d.ret.name} : {d.ret.type} {{"]
    lines += [show_stmt(s, "    ") for s in d.body]
    lines.append("}")
    return "\n".join(lines)


def pretty(prog: Program) -> str:
    parts = [show_decl(d) for d in prog.decls]
    parts += [show_stmt(s) for s in prog.body]
    return "\n".join(parts) + "\n"


def strip_quantities(node):
    """Copy of an AST with every optional type quantity removed.

    Filter quantities are part of the selection, not annotations, and stay.
    """
    if isinstance(node, Type):
        return Type(None, strip_quantities(node.base))
    if isinstance(node, tuple):
        return tuple(strip_quantities(n) for n in node)
    if dataclasses.is_dataclass(node) and not isinstance(node, Span):
        changes = {f.name: strip_quantities(getattr(node, f.name))
                   for f in dataclasses.fields(node) if f.name != "span"}
        return dataclasses.replace(node, **changes)
    return node
