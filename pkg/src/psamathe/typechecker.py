"""Type-quantity checker.

Implements the locator judgement ``Γ ⊢_M f; L : τ ⊣ Δ`` as
:meth:`Checker.type_locator`, statement well-formedness as
:meth:`Checker.check_stmt` and declaration well-formedness as
:meth:`Checker.check_transformer` / :meth:`Checker.check_type_decl`.

Type environments are plain dicts from names to fully elaborated
:class:`~psamathe.syntax.Type` values and are never mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from psamathe import syntax as ast
from psamathe.diagnostics import Diagnostic
from psamathe.quantity import (
    ANY, EMPTY, ONE, Add, Id, Sub, Updater, With,
    quant_add, quant_approx, quant_join, quant_leq, quant_mul, quant_sub,
)
from psamathe.syntax import Modifier, Span
from psamathe.typeinfo import ELEM, FIELD, PARAM, TypeInfo, TypeTable

TypeEnv = dict[str, ast.Type]


class Mode(Enum):
    SOURCE = "S"
    DEST = "D"


class Code(str, Enum):
    UNBOUND_VARIABLE = "UnboundVariable"
    IMMUTABLE_MUTATION = "ImmutableMutation"
    MODE_MISMATCH = "ModeMismatch"
    BASE_TYPE_MISMATCH = "BaseTypeMismatch"
    QUANTITY_MISMATCH = "QuantityMismatch"
    DUPLICATE_BINDING = "DuplicateBinding"
    UNSUPPORTED_CONSTRUCT = "UnsupportedConstruct"
    NOT_CONSUMABLE = "NotConsumable"
    UNKNOWN_TRANSFORMER = "UnknownTransformer"
    UNKNOWN_TYPE = "UnknownType"
    UNKNOWN_FIELD = "UnknownField"
    CYCLIC_TYPE = "CyclicTypeDefinition"
    ARITY_MISMATCH = "ArityMismatch"
    HOLE_MISUSE = "HoleMisuse"
    INVALID_SELECTION = "InvalidSelection"
    INVALID_TABLE = "InvalidTable"
    NOT_A_PREDICATE = "NotAPredicate"
    BRANCH_ENV_MISMATCH = "BranchEnvMismatch"
    ASSET_NOT_CONSUMED = "AssetNotConsumed"
    AUXILIARY_TYPE_CHANGED = "AuxiliaryTypeChanged"
    RETURN_TYPE_MISMATCH = "ReturnTypeMismatch"
    CONFLICTING_MODIFIERS = "ConflictingModifiers"
    FUNGIBLE_NON_NUMERIC = "FungibleNonNumeric"
    UNUSED_ASSET = "UnusedAsset"

    def __str__(self) -> str:
        return self.value


MESSAGES = {
    Code.UNBOUND_VARIABLE: "variable {name} is not defined",
    Code.IMMUTABLE_MUTATION: "{what} has immutable type {type} and cannot be changed",
    Code.MODE_MISMATCH: "{what} cannot be used as a {mode}",
    Code.BASE_TYPE_MISMATCH: "cannot flow {actual} into {expected}",
    Code.QUANTITY_MISMATCH: "{what} has type {actual}, but {expected} is required",
    Code.DUPLICATE_BINDING: "{name} is already defined",
    Code.UNSUPPORTED_CONSTRUCT: "unsupported construct: {what}",
    Code.NOT_CONSUMABLE: "cannot consume {type}: only consumable assets may be consumed",
    Code.UNKNOWN_TRANSFORMER: "transformer {name} is not defined",
    Code.UNKNOWN_TYPE: "type {name} is not defined",
    Code.UNKNOWN_FIELD: "type {type} has no field {name}",
    Code.CYCLIC_TYPE: "type {name} is defined in terms of itself",
    Code.ARITY_MISMATCH: "{what} expects {expected} argument(s), got {actual}",
    Code.HOLE_MISUSE: "{what}",
    Code.INVALID_SELECTION: "cannot select {what} from {type}",
    Code.INVALID_TABLE: "{what}",
    Code.NOT_A_PREDICATE: "transformer {name} cannot be used as a filter predicate: {why}",
    Code.BRANCH_ENV_MISMATCH: "variable {name} has type {a} after try but {b} after catch",
    Code.ASSET_NOT_CONSUMED: "variable {name} has type {type}, not empty {base}",
    Code.AUXILIARY_TYPE_CHANGED: "argument {name} has type {after} at the end of {fn}, but was {before}",
    Code.RETURN_TYPE_MISMATCH: "return variable {name} has type {actual}, but {expected} was declared",
    Code.CONFLICTING_MODIFIERS: "type {name} cannot be both fungible and unique",
    Code.FUNGIBLE_NON_NUMERIC: "type {name} is fungible but its base type {base} is not nat",
    Code.UNUSED_ASSET: "variable {name} has type {type}, not empty {base}",
}


@dataclass(frozen=True)
class TypeDiagnostic(Diagnostic):
    expected: Optional[ast.Type] = None
    actual: Optional[ast.Type] = None


class CheckError(Exception):
    def __init__(self, diag: TypeDiagnostic):
        super().__init__(diag.message)
        self.diag = diag


def diagnostic(code: Code, span: Optional[Span], *, expected=None, actual=None, **kw) -> TypeDiagnostic:
    if expected is not None:
        kw.setdefault("expected", expected)
    if actual is not None:
        kw.setdefault("actual", actual)
    return TypeDiagnostic(
        MESSAGES[code].format(**kw), span, code=code.value,
        expected=expected if isinstance(expected, ast.Type) else None,
        actual=actual if isinstance(actual, ast.Type) else None,
    )


def error(code: Code, span: Optional[Span], **kw) -> CheckError:
    return CheckError(diagnostic(code, span, **kw))


# ---------------------------------------------------------------------------
# Updaters beyond id/⊕/⊖/with, used for selections inside composites


@dataclass(frozen=True)
class Keep(Updater):
    """Leaves the type unchanged, but the located value is written to."""

    def __call__(self, t: ast.Type) -> ast.Type:
        return t


@dataclass(frozen=True, eq=False)
class Lift(Updater):
    fn: Callable[[ast.Type], ast.Type]
    label: str = "lift"

    def __call__(self, t: ast.Type) -> ast.Type:
        return self.fn(t)


def is_id(f: Updater) -> bool:
    return isinstance(f, Id)


WITH_EMPTY = With(EMPTY)

# the element type of `[]`, compatible with every table
_UNKNOWN_ELEM = ast.Type(ANY, ast.Named("?"))
EMPTY_LIST = ast.Table((), _UNKNOWN_ELEM)


def is_empty_list(base: ast.BaseType) -> bool:
    return isinstance(base, ast.Table) and base.elem is _UNKNOWN_ELEM or base == EMPTY_LIST


def show(t: ast.Type) -> str:
    from psamathe.typeinfo import display_name
    return f"{t.quant} {display_name(t.base)}"


# ---------------------------------------------------------------------------


@dataclass
class TransformerInfo:
    decl: ast.TransformerDecl
    params: tuple[ast.Type, ...]
    ret: ast.Type
    flow_ok: bool = True
    predicate_ok: bool = False
    predicate_why: str = ""


@dataclass
class CheckResult:
    diagnostics: list[TypeDiagnostic]
    final_env: TypeEnv
    env_trace: list[TypeEnv] = field(default_factory=list)
    rules_hit: set[str] = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


class Checker:
    def __init__(self, program: ast.Program):
        self.program = program
        self.types = TypeTable(program.type_decls)
        self.decls = program.transformers
        self.infos: dict[str, TransformerInfo] = {}
        self._in_progress: set[str] = set()
        self.diagnostics: list[TypeDiagnostic] = []
        self.rules_hit: set[str] = set()
        self.def_spans: dict[str, Optional[Span]] = {}

    # -- type helpers ------------------------------------------------------

    def info(self, base: ast.BaseType, span: Optional[Span] = None) -> TypeInfo:
        try:
            return self.types.info(base)
        except ast.UnknownType as e:
            raise error(Code.UNKNOWN_TYPE, span, name=e.name) from None
        except ast.CyclicTypeDefinition as e:
            raise error(Code.CYCLIC_TYPE, span, name=e.name) from None

    def normalize(self, t: ast.Type, context: str = PARAM, span: Optional[Span] = None) -> ast.Type:
        self.validate_base(t.base, span)
        return self.types.normalize(t, context)

    def validate_base(self, base: ast.BaseType, span: Optional[Span]) -> None:
        if isinstance(base, ast.Named):
            self.info(base, span)
        elif isinstance(base, ast.Table):
            self.validate_base(base.elem.base, span)
            elem = self.info(base.elem.base, span)
            if elem.kind == "record":
                missing = [k for k in base.keys if k not in elem.fields]
                if missing:
                    raise error(Code.INVALID_TABLE, span,
                                what=f"key {missing[0]} is not a field of {elem.name}")
            elif len(base.keys) > 1:
                raise error(Code.INVALID_TABLE, span,
                            what="a table of non-record elements takes at most one key")
        elif isinstance(base, ast.Record):
            names = [n for n, _ in base.fields]
            for n in names:
                if names.count(n) > 1:
                    raise error(Code.DUPLICATE_BINDING, span, name=n)
            for _, t in base.fields:
                self.validate_base(t.base, span)

    def same_base(self, a: ast.BaseType, b: ast.BaseType) -> bool:
        if is_empty_list(a):
            return isinstance(self.info(b).resolved, ast.Table)
        if is_empty_list(b):
            return isinstance(self.info(a).resolved, ast.Table)
        return self.types.same_base(a, b)

    def coercible(self, src: ast.BaseType, dst: ast.BaseType) -> bool:
        """Whether ``new`` may re-tag a ``src`` value as ``dst``."""
        if self.same_base(src, dst):
            return True
        if is_empty_list(src) or is_empty_list(dst):
            return False
        a, b = self.info(src), self.info(dst)
        return a.kind == b.kind and a.kind in ("nat", "bool")

    def is_asset(self, t: ast.Type) -> bool:
        return not is_empty_list(t.base) and self.info(t.base).asset

    # -- locators ----------------------------------------------------------

    def peek(self, env: TypeEnv, mode: Mode, loc: ast.Locator) -> ast.Type:
        return self.type_locator(env, mode, Id(), loc)[0]

    def type_locator(self, env: TypeEnv, mode: Mode, f: Updater,
                     loc: ast.Locator) -> tuple[ast.Type, TypeEnv]:
        span = getattr(loc, "span", None)
        if isinstance(loc, ast.NatLit):
            self.require_source(mode, "a number", span)
            self.rules_hit.add("Nat")
            return ast.Type(quant_approx(loc.value), ast.Nat()), env
        if isinstance(loc, ast.BoolLit):
            self.require_source(mode, "a boolean", span)
            self.rules_hit.add("Bool")
            return ast.Type(ONE, ast.Bool()), env
        if isinstance(loc, ast.Var):
            if loc.name not in env:
                raise error(Code.UNBOUND_VARIABLE, span, name=loc.name)
            t = env[loc.name]
            if not is_id(f) and not is_empty_list(t.base) and self.info(t.base).immutable:
                raise error(Code.IMMUTABLE_MUTATION, span, what=f"variable {loc.name}", type=show(t))
            self.rules_hit.add("Var")
            return t, {**env, loc.name: f(t)}
        if isinstance(loc, ast.VarDef):
            if mode is not Mode.DEST:
                raise error(Code.MODE_MISMATCH, span, what="a variable definition", mode="source")
            if loc.name in env:
                raise error(Code.DUPLICATE_BINDING, span, name=loc.name)
            self.validate_base(loc.declared, span)
            t = ast.Type(EMPTY, self.types.canon(loc.declared))
            self.rules_hit.add("VarDef")
            self.def_spans[loc.name] = span
            return t, {**env, loc.name: f(t)}
        if isinstance(loc, ast.Field):
            return self.type_field(env, mode, f, loc)
        if isinstance(loc, ast.Select):
            return self.type_select(env, mode, f, loc)
        if isinstance(loc, ast.Filter):
            return self.type_filter(env, mode, f, loc)
        if isinstance(loc, ast.ListLit):
            return self.type_list(env, mode, loc)
        if isinstance(loc, ast.RecordLit):
            return self.type_record_lit(env, mode, loc)
        if isinstance(loc, ast.Consume):
            raise error(Code.MODE_MISMATCH, span, what="consume", mode="source")
        if isinstance(loc, (ast.Copy, ast.Zip)):
            what = "copy" if isinstance(loc, ast.Copy) else "zip"
            raise error(Code.UNSUPPORTED_CONSTRUCT, span, what=what)
        if isinstance(loc, ast.BinOp):
            return self.type_binop(env, mode, loc)
        if isinstance(loc, ast.Length):
            self.require_source(mode, "an expression", span)
            t = self.peek(env, Mode.SOURCE, loc.arg)
            ti = None if is_empty_list(t.base) else self.info(t.base)
            if ti is not None and ti.kind not in ("table", "nat"):
                raise error(Code.INVALID_SELECTION, span, what="a length", type=show(t))
            return ast.Type(ANY, ast.Nat()), env
        raise TypeError(f"not a locator: {loc!r}")

    def require_source(self, mode: Mode, what: str, span) -> None:
        if mode is not Mode.SOURCE:
            raise error(Code.MODE_MISMATCH, span, what=what, mode="destination")

    def type_field(self, env, mode, f, loc: ast.Field):
        span = loc.span
        parent = self.peek(env, mode, loc.of)
        ti = self.info(parent.base, span)
        if ti.kind != "record":
            raise error(Code.INVALID_SELECTION, span, what=f"field {loc.field}", type=show(parent))
        if loc.field not in ti.fields:
            raise error(Code.UNKNOWN_FIELD, span, type=ti.name, name=loc.field)
        declared = ti.fields[loc.field]
        fi = self.info(declared.base, span)
        if not is_id(f) and fi.immutable:
            raise error(Code.IMMUTABLE_MUTATION, span, what=f"field {loc.field}", type=show(declared))
        after = f(declared)
        if not quant_leq(after.quant, declared.quant):
            raise error(Code.QUANTITY_MISMATCH, span, what=f"field {loc.field}",
                        actual=show(after), expected=show(declared))
        _, env = self.type_locator(env, mode, Id() if is_id(f) else Keep(), loc.of)
        return declared, env

    def type_select(self, env, mode, f, loc: ast.Select):
        span = loc.span
        parent = self.peek(env, mode, loc.source)
        ti = self.info(parent.base, span)
        if ti.kind == "table":
            if len(ti.keys) != 1:
                what = "by key" if not ti.keys else "by a multi-part key"
                raise error(Code.INVALID_SELECTION, span, what=what, type=show(parent))
            elem = ti.elem_type
            if not is_id(f) and ti.elem.immutable:
                raise error(Code.IMMUTABLE_MUTATION, span, what="table element", type=show(elem))
            after = f(elem)
            if ti.is_map:
                if not quant_leq(after.quant, elem.quant):
                    raise error(Code.QUANTITY_MISMATCH, span, what="table element",
                                actual=show(after), expected=show(elem))
                if is_id(f):
                    g: Updater = Id()
                elif mode is Mode.DEST:
                    # a missing key is created on demand
                    g = Lift(lambda t: ast.Type(quant_join(t.quant, quant_add(t.quant, ONE)), t.base))
                else:
                    g = Keep()
            else:
                if is_id(f):
                    g = Id()
                elif mode is Mode.SOURCE and after.quant is EMPTY:
                    g = Sub(ONE)
                elif after == elem:
                    g = Keep()
                else:
                    raise error(Code.MODE_MISMATCH, span, what="a table row",
                                mode="destination; flow into the table itself")
            _, env = self.type_locator(env, mode, g, loc.source)
            key = self.peek(env, Mode.SOURCE, loc.key)
            if is_empty_list(key.base) or self.info(key.base).kind not in ("nat", "bool"):
                raise error(Code.INVALID_SELECTION, span, what=f"with a key of type {show(key)}",
                            type=show(parent))
            _, env = self.type_locator(env, Mode.SOURCE, Id(), loc.key)
            return elem, env
        if ti.numeric:
            if mode is Mode.DEST and not is_id(f):
                raise error(Code.MODE_MISMATCH, span, what="an amount selection", mode="destination")
            amount = self.peek(env, Mode.SOURCE, loc.key)
            if is_empty_list(amount.base) or not self.info(amount.base).numeric:
                raise error(Code.INVALID_SELECTION, span, what=f"an amount of type {show(amount)}",
                            type=show(parent))
            selected = ast.Type(amount.quant, parent.base)
            if is_id(f):
                g = Id()
            else:
                rest = f(selected).quant
                g = Lift(lambda t: ast.Type(quant_add(quant_sub(t.quant, amount.quant), rest), t.base))
            _, env = self.type_locator(env, mode, g, loc.source)
            _, env = self.type_locator(env, Mode.SOURCE, Id(), loc.key)
            return selected, env
        raise error(Code.INVALID_SELECTION, span, what="a part", type=show(parent))

    def type_filter(self, env, mode, f, loc: ast.Filter):
        span = loc.span
        if mode is not Mode.SOURCE:
            raise error(Code.MODE_MISMATCH, span, what="a filter", mode="destination")
        parent = self.peek(env, mode, loc.source)
        ti = self.info(parent.base, span)
        if ti.kind != "table":
            raise error(Code.INVALID_SELECTION, span, what="by a predicate", type=show(parent))
        info = self.transformer_info(loc.predicate, span)
        decl = info.decl
        self.check_hole(loc.args, len(decl.params), f"predicate {decl.name}", span)
        y = info.params[-1]
        if not self.same_base(ti.elem_type.base, y.base):
            raise error(Code.BASE_TYPE_MISMATCH, span, actual=show(ti.elem_type), expected=show(y))
        if not info.predicate_ok:
            raise error(Code.NOT_A_PREDICATE, span, name=decl.name, why=info.predicate_why)
        result = ti.elem_type if loc.quant is ONE else ast.Type(loc.quant, parent.base)
        after = f(result)
        if is_id(f):
            g: Updater = Id()
        elif after == result and not isinstance(f, With):
            g = Keep()
        elif after.quant is EMPTY:
            g = Sub(loc.quant)
        else:
            raise error(Code.MODE_MISMATCH, span, what="a filter", mode="destination")
        _, env = self.type_locator(env, mode, g, loc.source)
        env = self.check_aux_args(env, decl, info.params[:-1], loc.args[:-1])
        return result, env

    def type_list(self, env, mode, loc: ast.ListLit):
        self.require_source(mode, "a list literal", loc.span)
        if not loc.elems:
            return ast.Type(EMPTY, EMPTY_LIST), env
        base = None
        for e in loc.elems:
            t, env = self.type_locator(env, Mode.SOURCE, WITH_EMPTY, e)
            if base is None:
                base = t.base
            elif not self.same_base(base, t.base):
                raise error(Code.BASE_TYPE_MISMATCH, getattr(e, "span", None),
                            actual=show(t), expected=f"list elements of type {base}")
            elem_q = self.types.default_quant(t.base, ELEM)
            if not quant_leq(t.quant, elem_q):
                raise error(Code.QUANTITY_MISMATCH, getattr(e, "span", None), what="list element",
                            actual=show(t), expected=f"{elem_q} {t.base}")
        elem = ast.Type(self.types.default_quant(base, ELEM), base)
        return ast.Type(quant_approx(len(loc.elems)), ast.Table((), elem)), env

    def type_record_lit(self, env, mode, loc: ast.RecordLit):
        self.require_source(mode, "a record literal", loc.span)
        fields = []
        seen = set()
        for name, declared, member in loc.members:
            if name in seen:
                raise error(Code.DUPLICATE_BINDING, loc.span, name=name)
            seen.add(name)
            declared = self.normalize(declared, FIELD, loc.span)
            t, env = self.type_locator(env, Mode.SOURCE, WITH_EMPTY, member)
            if not self.same_base(t.base, declared.base):
                raise error(Code.BASE_TYPE_MISMATCH, loc.span, actual=show(t), expected=show(declared))
            if not quant_leq(t.quant, declared.quant):
                raise error(Code.QUANTITY_MISMATCH, loc.span, what=f"field {name}",
                            actual=show(t), expected=show(declared))
            fields.append((name, declared))
        return ast.Type(ONE, ast.Record(tuple(fields))), env

    def type_binop(self, env, mode, loc: ast.BinOp):
        self.require_source(mode, "an expression", loc.span)
        kinds = []
        for side in (loc.left, loc.right):
            t = self.peek(env, Mode.SOURCE, side)
            kinds.append(None if is_empty_list(t.base) else self.info(t.base).kind)
        if loc.op in ast.ARITH_OPS or loc.op not in ("==", "!="):
            ok = kinds == ["nat", "nat"]
        else:
            ok = kinds[0] == kinds[1] and kinds[0] in ("nat", "bool")
        if not ok:
            raise error(Code.BASE_TYPE_MISMATCH, loc.span,
                        actual=f"{kinds[0]} {loc.op} {kinds[1]}", expected="natural operands")
        if loc.op in ast.ARITH_OPS:
            return ast.Type(ANY, ast.Nat()), env
        return ast.Type(ONE, ast.Bool()), env

    # -- calls -------------------------------------------------------------

    def transformer_info(self, name: str, span: Optional[Span]) -> TransformerInfo:
        if name in self.infos:
            return self.infos[name]
        decl = self.decls.get(name)
        if decl is None:
            raise error(Code.UNKNOWN_TRANSFORMER, span, name=name)
        if name in self._in_progress:
            # recursive use: trust the signature for now
            return self.signature(decl)
        self.check_transformer(decl)
        return self.infos[name]

    def signature(self, decl: ast.TransformerDecl) -> TransformerInfo:
        params = tuple(self.normalize(p.type, PARAM, p.span) for p in decl.params)
        ret = self.normalize(decl.ret.type, PARAM, decl.ret.span)
        return TransformerInfo(decl, params, ret, flow_ok=True, predicate_ok=True)

    def check_hole(self, args, arity: int, what: str, span) -> None:
        if len(args) != arity:
            raise error(Code.ARITY_MISMATCH, span, what=what, expected=arity, actual=len(args))
        holes = [i for i, a in enumerate(args) if isinstance(a, ast.Hole)]
        if holes != [arity - 1]:
            raise error(Code.HOLE_MISUSE, span,
                        what=f"{what} needs exactly one '_', in the last argument position")

    def check_aux_args(self, env: TypeEnv, decl: ast.TransformerDecl,
                       params: tuple[ast.Type, ...], args) -> TypeEnv:
        """Auxiliary arguments are passed by reference."""
        for param, arg in zip(params, args):
            span = getattr(arg, "span", None)
            if isinstance(arg, ast.Hole):
                raise error(Code.HOLE_MISUSE, span, what="'_' may only stand for the flowing argument")
            t = self.peek(env, Mode.SOURCE, arg)
            if not self.same_base(t.base, param.base):
                raise error(Code.BASE_TYPE_MISMATCH, span, actual=show(t), expected=show(param))
            if not quant_leq(t.quant, param.quant):
                raise error(Code.QUANTITY_MISMATCH, span, what=f"argument to {decl.name}",
                            actual=show(t), expected=show(param))
            place = isinstance(arg, (ast.Var, ast.Field, ast.Select))
            upd: Updater = Id() if t.quant is param.quant or not place else With(param.quant)
            _, env = self.type_locator(env, Mode.SOURCE, upd, arg)
        return env

    def type_call(self, env: TypeEnv, src: ast.Type, call, span) -> tuple[ast.Type, TypeEnv]:
        """Type of what ``src --> call`` produces, after typing the auxiliary arguments."""
        src_info = None if is_empty_list(src.base) else self.info(src.base, span)
        if isinstance(call, ast.New):
            target = ast.Named(call.type_name)
            ti = self.info(target, call.span)
            if ti.kind == "record":
                names = list(ti.fields)
                slots = [ti.fields[n] for n in names]
            else:
                slots = [ast.Type(ANY, ti.resolved)]
            holes = [i for i, a in enumerate(call.args) if isinstance(a, ast.Hole)]
            if len(call.args) != len(slots):
                raise error(Code.ARITY_MISMATCH, call.span, what=f"new {ti.name}",
                            expected=len(slots), actual=len(call.args))
            if len(holes) != 1:
                raise error(Code.HOLE_MISUSE, call.span, what=f"new {ti.name} needs exactly one '_'")
            hole = slots[holes[0]]
            per_elem = self.split(src, src_info, hole.base, coerce=True, span=span)
            for arg, slot in zip(call.args, slots):
                if isinstance(arg, ast.Hole):
                    continue
                t, env = self.type_locator(env, Mode.SOURCE, WITH_EMPTY, arg)
                if not self.coercible(t.base, slot.base):
                    raise error(Code.BASE_TYPE_MISMATCH, getattr(arg, "span", None),
                                actual=show(t), expected=show(slot))
            if ti.kind != "record" and ti.numeric:
                q = src.quant if not per_elem else quant_mul(src.quant, src_info.elem_type.quant)
            else:
                q = ONE if not per_elem else src.quant
            self.rules_hit.add("New")
            return ast.Type(q, target), env

        info = self.transformer_info(call.name, call.span)
        decl = info.decl
        self.check_hole(call.args, len(decl.params), f"transformer {decl.name}", call.span)
        y = info.params[-1]
        per_elem = self.split(src, src_info, y.base, coerce=False, span=span)
        elem = src_info.elem_type if per_elem else src
        if not quant_leq(elem.quant, y.quant):
            raise error(Code.QUANTITY_MISMATCH, span, what=f"argument to {decl.name}",
                        actual=show(elem), expected=show(y))
        if not info.flow_ok:
            raise error(Code.ASSET_NOT_CONSUMED, call.span, name=decl.params[-1].name,
                        type=f"a value of {show(y)} left behind by {decl.name}",
                        base=self.info(y.base).name)
        env = self.check_aux_args(env, decl, info.params[:-1], call.args[:-1])
        q = info.ret.quant if not per_elem else quant_mul(src.quant, info.ret.quant)
        self.rules_hit.add("Ok-Transformer-Call")
        return ast.Type(q, info.ret.base), env

    def split(self, src: ast.Type, src_info, target: ast.BaseType, coerce: bool, span) -> bool:
        """Decide whether a call applies to ``src`` as a whole or to each element."""
        match = self.coercible if coerce else self.same_base
        if src_info is None or match(src.base, target):
            return False
        if src_info.kind == "table" and match(src_info.elem_type.base, target):
            return True
        raise error(Code.BASE_TYPE_MISMATCH, span, actual=show(src),
                    expected=display_of(self, target))

    # -- statements --------------------------------------------------------

    def flow_updater(self, src: ast.Type, dest: ast.Type, span) -> Updater:
        if self.same_base(src.base, dest.base):
            return Add(src.quant)
        if not is_empty_list(dest.base):
            di = self.info(dest.base, span)
            if di.kind == "table" and not di.is_map and self.same_base(src.base, di.elem_type.base):
                # each nonzero value becomes one row
                return Add(src.quant)
        raise error(Code.BASE_TYPE_MISMATCH, span, actual=show(src), expected=show(dest))

    def flow_into(self, env: TypeEnv, src: ast.Type, dest: ast.Locator, span) -> TypeEnv:
        if isinstance(dest, ast.Consume):
            if self.is_asset(src) and not self.info(src.base).consumable:
                raise error(Code.NOT_CONSUMABLE, span, type=show(src))
            return env
        target = self.peek(env, Mode.DEST, dest)
        upd = self.flow_updater(src, target, span)
        return self.type_locator(env, Mode.DEST, upd, dest)[1]

    def check_stmt(self, env: TypeEnv, s: ast.Stmt) -> TypeEnv:
        if isinstance(s, ast.Flow):
            t, env = self.type_locator(env, Mode.SOURCE, WITH_EMPTY, s.source)
            env = self.flow_into(env, t, s.dest, s.span)
            self.rules_hit.add("Ok-Flow")
            return env
        if isinstance(s, ast.FlowTransform):
            t, env = self.type_locator(env, Mode.SOURCE, WITH_EMPTY, s.source)
            result, env = self.type_call(env, t, s.call, s.span)
            if s.dest is None:
                if self.is_asset(result) and result.quant is not EMPTY:
                    raise error(Code.UNUSED_ASSET, s.span, name=f"result of {ast.show_call(s.call)}",
                                type=show(result), base=self.info(result.base).name)
            else:
                env = self.flow_into(env, result, s.dest, s.span)
            self.rules_hit.add("Ok-FlowTransform")
            return env
        if isinstance(s, ast.TryCatch):
            after_try = self.check_block(env, s.try_body)
            after_catch = self.check_block(env, s.catch_body)
            self.rules_hit.add("Ok-Try")
            return self.merge(after_try, after_catch, s.span)
        if isinstance(s, ast.Revert):
            return env
        raise TypeError(f"not a statement: {s!r}")

    def check_block(self, env: TypeEnv, body, trace: Optional[list] = None) -> TypeEnv:
        for s in body:
            try:
                env = self.check_stmt(env, s)
            except CheckError as e:
                self.diagnostics.append(e.diag)
            if trace is not None:
                trace.append(dict(env))
        return env

    def merge(self, a: TypeEnv, b: TypeEnv, span) -> TypeEnv:
        out: TypeEnv = {}
        for name in list(a) + [n for n in b if n not in a]:
            if name in a and name in b:
                ta, tb = a[name], b[name]
                if not self.same_base(ta.base, tb.base):
                    raise error(Code.BRANCH_ENV_MISMATCH, span, name=name, a=show(ta), b=show(tb))
                out[name] = ast.Type(quant_join(ta.quant, tb.quant), ta.base)
            else:
                t = a.get(name) or b[name]
                if self.is_asset(t) and t.quant is not EMPTY:
                    sides = {"a": show(t) if name in a else "unbound",
                             "b": show(t) if name in b else "unbound"}
                    raise error(Code.BRANCH_ENV_MISMATCH, span, name=name, **sides)
        return out

    # -- declarations ------------------------------------------------------

    def check_transformer(self, decl: ast.TransformerDecl) -> TransformerInfo:
        self._in_progress.add(decl.name)
        start = len(self.diagnostics)
        try:
            info = self._check_transformer(decl)
        except CheckError as e:
            self.diagnostics.append(e.diag)
            info = TransformerInfo(decl, (), ast.Type(ANY, ast.Bool()), flow_ok=False)
            info.predicate_why = "its declaration is ill-typed"
        finally:
            self._in_progress.discard(decl.name)
        if len(self.diagnostics) > start:
            info.flow_ok = info.flow_ok and bool(info.params)
        self.infos[decl.name] = info
        self.rules_hit.add("Ok-Transformer")
        return info

    def _check_transformer(self, decl: ast.TransformerDecl) -> TransformerInfo:
        if not decl.params:
            raise error(Code.ARITY_MISMATCH, decl.span, what=f"transformer {decl.name}",
                        expected="at least 1", actual=0)
        info = self.signature(decl)
        env: TypeEnv = {}
        for p, t in zip(decl.params, info.params):
            if p.name in env:
                raise error(Code.DUPLICATE_BINDING, p.span, name=p.name)
            env[p.name] = t
        z = decl.ret.name
        if z in env:
            raise error(Code.DUPLICATE_BINDING, decl.ret.span, name=z)
        env[z] = ast.Type(EMPTY, info.ret.base)
        saved_defs = self.def_spans
        self.def_spans = {}
        try:
            final = self.check_block(env, decl.body)
        finally:
            local_defs, self.def_spans = self.def_spans, saved_defs

        for p, t in zip(decl.aux_params, info.params):
            if final.get(p.name) != t:
                self.diagnostics.append(diagnostic(
                    Code.AUXILIARY_TYPE_CHANGED, p.span, name=p.name, fn=decl.name,
                    before=show(t), after=show(final[p.name]) if p.name in final else "unbound"))
        got = final.get(z)
        if got is None or not self.same_base(got.base, info.ret.base) or not quant_leq(got.quant, info.ret.quant):
            self.diagnostics.append(diagnostic(
                Code.RETURN_TYPE_MISMATCH, decl.ret.span, name=z,
                actual=show(got) if got else "unbound", expected=show(info.ret)))

        aux = {p.name for p in decl.aux_params} | {z}
        y = decl.params[-1].name
        leftovers = [(n, t) for n, t in final.items()
                     if n not in aux and self.is_asset(t) and t.quant is not EMPTY]
        info.flow_ok = not leftovers
        others = [(n, t) for n, t in leftovers if n != y]
        returns_bool = self.info(info.ret.base).kind == "bool"
        y_kept = final.get(y) == info.params[-1]
        info.predicate_ok = returns_bool and y_kept and not others
        if not returns_bool:
            info.predicate_why = "it does not return bool"
        elif not y_kept:
            info.predicate_why = f"it changes the type of {y}"
        elif others:
            info.predicate_why = f"it leaves {others[0][0]} unconsumed"
        if not info.flow_ok and not info.predicate_ok:
            for n, t in leftovers:
                span = local_defs.get(n) or decl.span
                self.diagnostics.append(diagnostic(
                    Code.ASSET_NOT_CONSUMED, span, name=n, type=show(t),
                    base=self.info(t.base).name))
        return info

    def check_type_decl(self, decl: ast.TypeDecl) -> None:
        mods = set(decl.modifiers)
        if Modifier.FUNGIBLE in mods and Modifier.UNIQUE in mods:
            raise error(Code.CONFLICTING_MODIFIERS, decl.span, name=decl.name)
        ti = self.info(ast.Named(decl.name), decl.span)
        self.validate_base(decl.base, decl.span)
        if ti.fungible and ti.kind != "nat":
            raise error(Code.FUNGIBLE_NON_NUMERIC, decl.span, name=decl.name,
                        base=display_of(self, decl.base))
        self.rules_hit.add("Ok-Type")

    def check_program(self, trace: Optional[list] = None) -> TypeEnv:
        seen: set[str] = set()
        for d in self.program.decls:
            if d.name in seen:
                self.diagnostics.append(diagnostic(Code.DUPLICATE_BINDING, d.span, name=d.name))
            seen.add(d.name)
        bad_types = False
        for d in self.program.decls:
            if isinstance(d, ast.TypeDecl):
                try:
                    self.check_type_decl(d)
                except CheckError as e:
                    self.diagnostics.append(e.diag)
                    bad_types |= e.diag.code in (Code.UNKNOWN_TYPE, Code.CYCLIC_TYPE,
                                                 Code.INVALID_TABLE, Code.DUPLICATE_BINDING)
        if bad_types:
            return {}
        for d in self.program.decls:
            if isinstance(d, ast.TransformerDecl) and d.name not in self.infos:
                self.check_transformer(d)
        self.def_spans = {}
        env = self.check_block({}, self.program.body, trace)
        for name, t in env.items():
            if not self.is_asset(t) or t.quant is EMPTY:
                continue
            if self.info(t.base).kind in ("table", "record"):
                # persistent contract storage
                continue
            self.diagnostics.append(diagnostic(
                Code.UNUSED_ASSET, self.def_spans.get(name), name=name, type=show(t),
                base=self.info(t.base).name))
        return env


def display_of(checker: Checker, base: ast.BaseType) -> str:
    from psamathe.typeinfo import display_name
    return display_name(base)


def check(program: ast.Program) -> CheckResult:
    """Typecheck ``program``; an empty diagnostic list means it is well-typed."""
    checker = Checker(program)
    trace: list[TypeEnv] = []
    final = checker.check_program(trace)
    return CheckResult(checker.diagnostics, final, trace, checker.rules_hit)


def check_program(program: ast.Program) -> list[TypeDiagnostic]:
    return check(program).diagnostics
