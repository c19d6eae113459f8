"""Resolved type descriptors shared by the checker and the interpreter.

A :class:`TypeTable` elaborates omitted quantities, erases builtin aliases and
answers the modifier questions (is this an asset? numeric? unique?) that both
the statics and the dynamics ask.
"""

from __future__ import annotations

from functools import cached_property
from typing import Mapping, Optional

from psamathe import syntax as ast
from psamathe.quantity import ANY, ONE, TypeQuant
from psamathe.syntax import BUILTIN_ALIASES, Modifier, resolve_named

# contexts for omitted quantities
PARAM, ELEM, FIELD = "param", "elem", "field"


class TypeInfo:
    """Everything the semantics needs to know about one base type."""

    def __init__(self, table: TypeTable, base: ast.BaseType):
        self.table = table
        self.base = base
        self.modifiers, self.resolved = table.resolve(base)

    def __repr__(self) -> str:
        return f"TypeInfo({self.name})"

    @property
    def kind(self) -> str:
        r = self.resolved
        if isinstance(r, ast.Nat):
            return "nat"
        if isinstance(r, ast.Bool):
            return "bool"
        if isinstance(r, ast.Record):
            return "record"
        return "table"

    @cached_property
    def name(self) -> str:
        return display_name(self.base)

    @cached_property
    def chain(self) -> tuple[str, ...]:
        names = []
        base = self.base
        while isinstance(base, ast.Named):
            names.append(base.name)
            decl = self.table.type_decls.get(base.name)
            if decl is None:
                break
            base = decl.base
        return tuple(names)

    @cached_property
    def hex(self) -> bool:
        return "address" in self.chain

    @property
    def fungible(self) -> bool:
        return Modifier.FUNGIBLE in self.modifiers

    @property
    def unique(self) -> bool:
        return Modifier.UNIQUE in self.modifiers

    @property
    def immutable(self) -> bool:
        return Modifier.IMMUTABLE in self.modifiers

    @cached_property
    def numeric(self) -> bool:
        """Values merge by addition: builtin naturals and fungible nat types."""
        if self.kind != "nat":
            return False
        declared = any(n in self.table.type_decls for n in self.chain)
        return self.fungible or not declared

    @cached_property
    def asset(self) -> bool:
        return self.table.is_asset(self.base)

    @cached_property
    def consumable(self) -> bool:
        if Modifier.CONSUMABLE in self.modifiers:
            return True
        if self.kind == "table":
            return self.elem.consumable
        return False

    # -- composite structure ---------------------------------------------

    @cached_property
    def keys(self) -> tuple[str, ...]:
        assert isinstance(self.resolved, ast.Table)
        return self.resolved.keys

    @cached_property
    def elem_type(self) -> ast.Type:
        assert isinstance(self.resolved, ast.Table)
        return self.table.normalize(self.resolved.elem, ELEM)

    @cached_property
    def elem(self) -> TypeInfo:
        return self.table.info(self.elem_type.base)

    @cached_property
    def is_map(self) -> bool:
        """A keyed table whose elements are not records: ``m[k]`` names a cell."""
        return self.kind == "table" and bool(self.keys) and self.elem.kind != "record"

    @cached_property
    def fields(self) -> dict[str, ast.Type]:
        assert isinstance(self.resolved, ast.Record)
        return {n: self.table.normalize(t, FIELD) for n, t in self.resolved.fields}

    def field_info(self, name: str) -> TypeInfo:
        return self.table.info(self.fields[name].base)


def display_name(base: ast.BaseType) -> str:
    if isinstance(base, ast.Table):
        elem = display_name(base.elem.base)
        if not base.keys:
            return f"list {elem}"
        return f"table({', '.join(base.keys)}) {elem}"
    if isinstance(base, ast.Record):
        return "{" + ", ".join(f"{n} : {display_name(t.base)}" for n, t in base.fields) + "}"
    return str(base)


class TypeTable:
    def __init__(self, type_decls: Mapping[str, ast.TypeDecl]):
        self.type_decls = dict(type_decls)
        self._infos: dict[ast.BaseType, TypeInfo] = {}
        self._asset_busy: set[ast.BaseType] = set()

    def resolve(self, base: ast.BaseType):
        return resolve_named(self.type_decls, base)

    def info(self, base: ast.BaseType) -> TypeInfo:
        base = self.canon(base)
        ti = self._infos.get(base)
        if ti is None:
            ti = self._infos[base] = TypeInfo(self, base)
        return ti

    def is_asset(self, base: ast.BaseType) -> bool:
        base = self.canon(base)
        if base in self._asset_busy:
            return False
        self._asset_busy.add(base)
        try:
            mods, resolved = self.resolve(base)
            if Modifier.ASSET in mods:
                return True
            if isinstance(resolved, ast.Table):
                return self.is_asset(resolved.elem.base)
            if isinstance(resolved, ast.Record):
                return any(self.is_asset(t.base) for _, t in resolved.fields)
            return False
        finally:
            self._asset_busy.discard(base)

    def default_quant(self, base: ast.BaseType, context: str) -> TypeQuant:
        if context == ELEM:
            ti = self.info(base)
            return ANY if ti.numeric else ONE
        return ANY

    def canon(self, base: ast.BaseType) -> ast.BaseType:
        """Fill omitted nested quantities; keep the outer name for display."""
        if isinstance(base, ast.Table):
            return ast.Table(base.keys, self.normalize(base.elem, ELEM))
        if isinstance(base, ast.Record):
            return ast.Record(tuple((n, self.normalize(t, FIELD)) for n, t in base.fields))
        return base

    def normalize(self, t: ast.Type, context: str = PARAM) -> ast.Type:
        base = self.canon(t.base)
        quant = t.quant if t.quant is not None else self.default_quant(base, context)
        return ast.Type(quant, base)

    def same_base(self, a: ast.BaseType, b: ast.BaseType) -> bool:
        """Structural equality with builtin aliases erased to nat."""
        return erase_aliases(self.canon(a)) == erase_aliases(self.canon(b))


def erase_aliases(base: ast.BaseType) -> ast.BaseType:
    if isinstance(base, ast.Named) and base.name in BUILTIN_ALIASES:
        return BUILTIN_ALIASES[base.name]
    if isinstance(base, ast.Table):
        return ast.Table(base.keys, ast.Type(base.elem.quant, erase_aliases(base.elem.base)))
    if isinstance(base, ast.Record):
        return ast.Record(tuple(
            (n, ast.Type(t.quant, erase_aliases(t.base))) for n, t in base.fields))
    return base


def find_cycle(type_decls: Mapping[str, ast.TypeDecl]) -> Optional[str]:
    """Name of a type whose definition is a bare chain back to itself, if any."""
    for name in type_decls:
        try:
            resolve_named(type_decls, ast.Named(name))
        except ast.CyclicTypeDefinition as e:
            return e.name
        except ast.UnknownType:
            pass
    return None
