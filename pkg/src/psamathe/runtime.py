"""Interpreter for checked programs.

State is a pair ``(mu, rho)``: ``mu`` maps variable names to locations and
``rho`` maps locations to :class:`Resource` values. Locators evaluate to
lists of ``(parent, StorageVal)`` pairs which :meth:`Interpreter.take` and
:meth:`Interpreter.put` turn into resource subtraction and addition.

Every mutation goes through a journal of undo records, so a failing flow can
be rolled back to the enclosing ``try`` or to the start of the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Union

from psamathe import syntax as ast
from psamathe.quantity import ANY, ONE, contains
from psamathe.typeinfo import PARAM, TypeInfo, TypeTable, display_name

MAX_AMOUNT = 2**256 - 1


class ErrorKind(Enum):
    INSUFFICIENT_SOURCE = "InsufficientSource"
    DESTINATION_OVERFLOW = "DestinationOverflow"
    UNIQUENESS_VIOLATION = "UniquenessViolation"
    KEY_NOT_FOUND = "KeyNotFound"
    SELECTOR_UNSATISFIED = "SelectorUnsatisfied"
    EXPLICIT_REVERT = "ExplicitRevert"
    ARITHMETIC_ERROR = "ArithmeticError"


def format_flow_error(qty: str, type_name: str, src: str, dst: str, reason: str) -> str:
    return f"Cannot flow {qty} {type_name} from {src} to {dst}:\n    {reason}."


class FlowError(Exception):
    """A failed flow; unwinds to the nearest ``try`` or reverts the run."""

    def __init__(self, kind: ErrorKind, message: str):
        super().__init__(message)
        self.kind = kind
        self.message = message


class _Fail(Exception):
    """A failure before source and destination descriptions are known."""

    def __init__(self, kind: ErrorKind, reason: str, qty: str, type_name: str):
        super().__init__(reason)
        self.kind, self.reason, self.qty, self.type_name = kind, reason, qty, type_name


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class Loc:
    n: int


@dataclass(frozen=True)
class Amount:
    n: int


StorageVal = Union[Loc, Amount]
Pair = tuple[int, StorageVal]


@dataclass(frozen=True)
class Key:
    value: Union[int, bool]
    hex: bool = field(default=False, compare=False)

    def __str__(self) -> str:
        return show_scalar(self.value, self.hex)


@dataclass(frozen=True)
class RecordVal:
    fields: tuple[tuple[str, int], ...]
    present: bool = True

    def field(self, name: str) -> int:
        return dict(self.fields)[name]


@dataclass(frozen=True)
class TableVal:
    rows: tuple[int, ...] = ()
    # parallel to rows for tables whose elements are not records
    keys: Optional[tuple[Key, ...]] = None


# numeric nat -> int; other nat -> int or None; bool -> bool or None
Value = Union[int, bool, None, RecordVal, TableVal]


@dataclass(frozen=True)
class Resource:
    base: ast.BaseType
    value: Value


def show_scalar(v, hex_: bool = False) -> str:
    if v is None:
        return "empty"
    if isinstance(v, bool):
        return "true" if v else "false"
    return f"0x{v:X}" if hex_ else str(v)


# transient contents of a flow, between take and put
@dataclass(frozen=True)
class BAmount:
    n: int


@dataclass(frozen=True)
class BScalar:
    v: Union[int, bool]


@dataclass(frozen=True)
class BRows:
    rows: tuple[int, ...]
    keys: Optional[tuple[Key, ...]] = None


@dataclass(frozen=True)
class BRes:
    loc: int


Bundle = Union[BAmount, BScalar, BRows, BRes, None]


# ---------------------------------------------------------------------------
# Journaled store


class Store:
    """``rho`` plus the uniqueness registry, the trace and an undo journal."""

    def __init__(self):
        self.rho: dict[int, Resource] = {}
        self.registry: dict[str, set] = {}
        self.trace: list[str] = []
        self.journal: list[Callable[[], None]] = []
        self._next = 0

    def savepoint(self) -> int:
        return len(self.journal)

    def rollback(self, sp: int) -> None:
        while len(self.journal) > sp:
            self.journal.pop()()

    def alloc(self, res: Resource) -> int:
        loc = self._next
        self._next += 1  # never reused, even across rollbacks
        self.rho[loc] = res
        self.journal.append(lambda: self.rho.pop(loc))
        return loc

    def set(self, loc: int, value: Value) -> None:
        old = self.rho[loc]
        self.rho[loc] = Resource(old.base, value)
        self.journal.append(lambda: self.rho.__setitem__(loc, old))

    def drop(self, loc: int) -> None:
        old = self.rho.pop(loc)
        self.journal.append(lambda: self.rho.__setitem__(loc, old))

    def bind(self, frame: dict[str, int], name: str, loc: int) -> None:
        assert name not in frame
        frame[name] = loc
        self.journal.append(lambda: frame.pop(name))

    def witness(self, type_name: str, value) -> bool:
        """Record a unique value; False if it was already witnessed."""
        seen = self.registry.setdefault(type_name, set())
        if value in seen:
            return False
        seen.add(value)
        self.journal.append(lambda: seen.discard(value))
        return True

    def log(self, line: str) -> None:
        self.trace.append(line)
        self.journal.append(self.trace.pop)


def empty_value(ti: TypeInfo) -> Value:
    if ti.kind == "nat":
        return 0 if ti.numeric else None
    if ti.kind == "bool":
        return None
    return TableVal(keys=() if ti.is_map else None)


def empty_resource(store: Store, types: TypeTable, base: ast.BaseType) -> Resource:
    """A resource holding nothing; records get freshly allocated empty fields."""
    base = types.canon(base)
    ti = types.info(base)
    if ti.kind == "record":
        fields = tuple((n, store.alloc(empty_resource(store, types, t.base))) for n, t in ti.fields.items())
        return Resource(base, RecordVal(fields, present=False))
    return Resource(base, empty_value(ti))


@dataclass
class FinalState:
    lines: list[str]

    def render(self) -> str:
        return "".join(line + "\n" for line in self.lines)


Qty = Union[int, str]


def _sum_qty(qs: list[Qty]) -> Qty:
    if len(qs) == 1:
        return qs[0]
    if all(isinstance(q, int) for q in qs):
        return sum(qs)
    return "any"


@dataclass
class RunResult:
    final: FinalState
    error: Optional[FlowError] = None
    trace: list[str] = field(default_factory=list)
    rules_hit: set[str] = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return self.error is None


class Interpreter:
    def __init__(self, program: ast.Program,
                 hook: Optional[Callable[[int, "Interpreter"], None]] = None):
        self.program = program
        self.types = TypeTable(program.type_decls)
        self.decls = program.transformers
        self.store = Store()
        self.globals: dict[str, int] = {}
        self.mu = self.globals
        self.temps: list[int] = []
        self.rules_hit: set[str] = set()
        self.hook = hook

    # -- inspection --------------------------------------------------------

    @property
    def rho(self) -> dict[int, Resource]:
        return self.store.rho

    def info(self, loc_or_base) -> TypeInfo:
        base = self.rho[loc_or_base].base if isinstance(loc_or_base, int) else loc_or_base
        return self.types.info(base)

    def count(self, loc: int) -> int:
        """The natural a resource's quantity describes."""
        res = self.rho[loc]
        ti = self.info(res.base)
        v = res.value
        if isinstance(v, TableVal):
            return len(v.rows)
        if isinstance(v, RecordVal):
            return int(v.present)
        if ti.numeric:
            return v
        return 0 if v is None else 1

    def render(self, loc: int) -> str:
        res = self.rho[loc]
        ti = self.info(res.base)
        v = res.value
        if isinstance(v, RecordVal):
            if not v.present:
                return "empty"
            return "{" + ", ".join(f"{n}: {self.render(f)}" for n, f in v.fields) + "}"
        if isinstance(v, TableVal):
            if v.keys is not None:
                return "[" + ", ".join(f"{k}: {self.render(r)}" for k, r in zip(v.keys, v.rows)) + "]"
            return "[" + ", ".join(self.render(r) for r in v.rows) + "]"
        return show_scalar(v, ti.hex)

    def final_state(self) -> FinalState:
        return FinalState([f"{name} : {display_name(self.rho[loc].base)} = {self.render(loc)}"
                           for name, loc in self.globals.items()])

    def temp(self, res: Resource) -> int:
        loc = self.store.alloc(res)
        self.temps.append(loc)
        return loc

    def fresh(self, base: ast.BaseType) -> int:
        return self.store.alloc(empty_resource(self.store, self.types, base))

    def free(self, loc: int) -> None:
        v = self.rho[loc].value
        if isinstance(v, RecordVal):
            for _, f in v.fields:
                self.free(f)
        elif isinstance(v, TableVal):
            for r in v.rows:
                self.free(r)
        self.store.drop(loc)

    def free_bundle(self, b: Bundle) -> None:
        if isinstance(b, BRes):
            self.free(b.loc)
        elif isinstance(b, BRows):
            for r in b.rows:
                self.free(r)

    # -- resource subtraction and addition ---------------------------------

    def take(self, pair: Pair) -> tuple[Bundle, Qty, str]:
        """Remove the selected part of a resource and return it (``ρ(n) − R``)."""
        n, sel = pair
        res = self.rho[n]
        ti = self.info(res.base)
        if isinstance(sel, Amount):
            if sel.n > res.value:
                raise _Fail(ErrorKind.INSUFFICIENT_SOURCE,
                            f"source only has {res.value} {ti.name}", sel.n, ti.name)
            self.store.set(n, res.value - sel.n)
            return BAmount(sel.n), show_scalar(sel.n, True) if ti.hex else sel.n, ti.name
        if sel.n != n:
            # a row of the table at n
            tv: TableVal = res.value
            i = tv.rows.index(sel.n)
            keys = None if tv.keys is None else tv.keys[:i] + tv.keys[i + 1:]
            self.store.set(n, TableVal(tv.rows[:i] + tv.rows[i + 1:], keys))
            row_keys = None if tv.keys is None else (tv.keys[i],)
            return BRows((sel.n,), row_keys), 1, self.info(sel.n).name
        v = res.value
        if isinstance(v, TableVal):
            self.store.set(n, TableVal(keys=() if v.keys is not None else None))
            return BRows(v.rows, v.keys), len(v.rows), ti.elem.name
        if isinstance(v, RecordVal):
            if not v.present:
                return None, 0, ti.name
            moved = self.store.alloc(Resource(res.base, v))
            self.store.set(n, empty_resource(self.store, self.types, res.base).value)
            return BRes(moved), "one", ti.name
        if ti.numeric:
            self.store.set(n, 0)
            return BAmount(v), show_scalar(v, True) if ti.hex else v, ti.name
        if v is None:
            return None, 0, ti.name
        self.store.set(n, None)
        return BScalar(v), "one", ti.name

    def bundle_value(self, b: Bundle, ti: TypeInfo):
        """Scalar content of a bundle; frees any resources it carried."""
        if b is None:
            return None
        if isinstance(b, BAmount):
            return b.n
        if isinstance(b, BScalar):
            return b.v
        locs = (b.loc,) if isinstance(b, BRes) else b.rows
        vals = [self.rho[l].value for l in locs]
        for l in locs:
            self.free(l)
        if ti.numeric:
            return sum(v or 0 for v in vals)
        return vals[0] if vals else None

    def put(self, pair: Pair, b: Bundle, qty: Qty, tname: str) -> None:
        """Add a bundle to the destination (``ρ(m) + R``)."""
        if b is None:
            return
        m, k = pair
        target = k.n if isinstance(k, Loc) else m
        res = self.rho[target]
        ti = self.info(res.base)
        if ti.kind in ("nat", "bool"):
            v = self.bundle_value(b, ti)
            if ti.numeric:
                total = res.value + (v or 0)
                if total > MAX_AMOUNT:
                    raise _Fail(ErrorKind.DESTINATION_OVERFLOW,
                                f"destination would exceed the maximum {ti.name} amount", qty, tname)
                self.store.set(target, total)
            elif v is not None:
                if res.value is not None:
                    raise _Fail(ErrorKind.DESTINATION_OVERFLOW,
                                "destination already holds a value", qty, tname)
                self.store.set(target, v)
            return
        if ti.kind == "record":
            if isinstance(b, BRows):
                if not b.rows:
                    return
                src = b.rows[0]
            else:
                src = b.loc
            incoming: RecordVal = self.rho[src].value
            if not incoming.present:
                self.free(src)
                return
            if res.value.present:
                raise _Fail(ErrorKind.DESTINATION_OVERFLOW,
                            "destination already holds a value", qty, tname)
            for _, f in res.value.fields:
                self.free(f)
            self.store.set(target, incoming)
            self.store.drop(src)
            return
        for row, key in self.as_rows(b, ti):
            self.append_row(target, ti, row, key, qty, tname)

    def as_rows(self, b: Bundle, ti: TypeInfo) -> list[tuple[int, Optional[Key]]]:
        if isinstance(b, BRows):
            keys = b.keys if b.keys is not None else (None,) * len(b.rows)
            return list(zip(b.rows, keys))
        if isinstance(b, BRes):
            return [(b.loc, None)]
        v = b.n if isinstance(b, BAmount) else b.v
        if isinstance(b, BAmount) and v == 0:
            return []
        return [(self.store.alloc(Resource(ti.elem_type.base, v)), None)]

    def append_row(self, table: int, ti: TypeInfo, row: int, key: Optional[Key],
                   qty: Qty, tname: str) -> None:
        tv: TableVal = self.rho[table].value
        elem = ti.elem
        if ti.is_map:
            if key is None:
                raise TypeError("rows of a keyed table need keys")
            if key in tv.keys:
                raise _Fail(ErrorKind.UNIQUENESS_VIOLATION,
                            f"key {key} already exists in destination", qty, tname)
        elif ti.keys:
            kv = self.row_key(row, ti)
            if any(self.row_key(r, ti) == kv for r in tv.rows):
                raise _Fail(ErrorKind.UNIQUENESS_VIOLATION,
                            f"key {kv} already exists in destination", qty, tname)
        if elem.unique and elem.kind in ("nat", "bool"):
            v = self.rho[row].value
            if any(self.rho[r].value == v for r in tv.rows):
                raise _Fail(ErrorKind.UNIQUENESS_VIOLATION,
                            "value already exists in destination", qty, tname)
            self.store.witness(elem.name, v)
        keys = None if tv.keys is None else tv.keys + (key,)
        self.store.set(table, TableVal(tv.rows + (row,), keys))

    def row_key(self, row: int, ti: TypeInfo) -> Key:
        f = self.rho[row].value.field(ti.keys[0])
        return Key(self.rho[f].value, self.info(f).hex)

    # -- locators ----------------------------------------------------------

    @staticmethod
    def target(pair: Pair) -> int:
        n, sel = pair
        return sel.n if isinstance(sel, Loc) else n

    def eval_locator(self, loc: ast.Locator, dest: bool = False) -> tuple[list[Pair], ast.BaseType]:
        """Evaluate to storage-value pairs plus the base type they denote."""
        if isinstance(loc, ast.NatLit):
            base = ast.Named("address") if loc.hex else ast.Nat()
            m = self.temp(Resource(base, loc.value))
            self.rules_hit.add("Loc-Nat")
            return [(m, Amount(loc.value))], base
        if isinstance(loc, ast.BoolLit):
            m = self.temp(Resource(ast.Bool(), loc.value))
            self.rules_hit.add("Loc-Bool")
            return [(m, Loc(m))], ast.Bool()
        if isinstance(loc, ast.Var):
            n = self.mu[loc.name]
            self.rules_hit.add("Loc-Id")
            return [(n, Loc(n))], self.rho[n].base
        if isinstance(loc, ast.VarDef):
            n = self.fresh(loc.declared)
            self.store.bind(self.mu, loc.name, n)
            self.rules_hit.add("Loc-VarDef")
            return [(n, Loc(n))], self.rho[n].base
        if isinstance(loc, ast.Field):
            pairs, _ = self.eval_locator(loc.of, dest)
            rec = self.target(pairs[0])
            f = self.rho[rec].value.field(loc.field)
            return [(f, Loc(f))], self.rho[f].base
        if isinstance(loc, ast.Select):
            return self.eval_select(loc, dest)
        if isinstance(loc, ast.Filter):
            return self.eval_filter(loc)
        if isinstance(loc, ast.ListLit):
            return self.eval_list(loc)
        if isinstance(loc, ast.RecordLit):
            return self.eval_record(loc)
        if isinstance(loc, ast.PURE):
            v = self.value_of(loc)
            if isinstance(v, bool):
                m = self.temp(Resource(ast.Bool(), v))
                return [(m, Loc(m))], ast.Bool()
            m = self.temp(Resource(ast.Nat(), v))
            return [(m, Amount(v))], ast.Nat()
        raise NotImplementedError(f"cannot evaluate {type(loc).__name__}")

    def eval_select(self, loc: ast.Select, dest: bool):
        pairs, _ = self.eval_locator(loc.source, dest)
        p = self.target(pairs[0])
        res = self.rho[p]
        ti = self.info(res.base)
        if ti.kind != "table":
            return [(p, Amount(self.value_of(loc.key)))], res.base
        key = self.key_of(loc.key)
        tv: TableVal = res.value
        elem = ti.elem_type.base
        if ti.is_map:
            if key in tv.keys:
                cell = tv.rows[tv.keys.index(key)]
                return [(cell, Loc(cell))], self.rho[cell].base
            if dest:
                cell = self.fresh(elem)
                self.store.set(p, TableVal(tv.rows + (cell,), tv.keys + (key,)))
            else:
                # reading a missing key sees an empty cell
                cell = self.temp(empty_resource(self.store, self.types, elem))
            return [(cell, Loc(cell))], self.rho[cell].base
        for r in tv.rows:
            if self.row_key(r, ti) == key:
                return [(p, Loc(r))], self.rho[r].base
        raise _Fail(ErrorKind.KEY_NOT_FOUND, f"no row has key {key}", "one", ti.elem.name)

    def eval_filter(self, loc: ast.Filter):
        pairs, base = self.eval_locator(loc.source)
        p = self.target(pairs[0])
        ti = self.info(p)
        decl = self.decls[loc.predicate]
        aux = [self.arg_loc(a) for a in loc.args[:-1]]
        chosen = [r for r in self.rho[p].value.rows if self.call_predicate(decl, aux, r)]
        if not contains(loc.quant, len(chosen)):
            raise _Fail(ErrorKind.SELECTOR_UNSATISFIED,
                        f"selected {len(chosen)} {ti.elem.name}, expected {loc.quant}",
                        str(loc.quant), ti.elem.name)
        if loc.quant is ONE:
            return [(p, Loc(chosen[0]))], self.rho[chosen[0]].base
        return [(p, Loc(r)) for r in chosen], self.rho[p].base

    def eval_list(self, loc: ast.ListLit):
        parts = [self.eval_locator(e) for e in loc.elems]
        elem = parts[0][1] if parts else ast.Nat()
        base = self.types.canon(ast.Table((), ast.Type(ANY, elem)))
        m = self.temp(Resource(base, TableVal()))
        for pairs, _ in parts:
            for pair in pairs:
                b, q, t = self.take(pair)
                self.put((m, Loc(m)), b, q, t)
        return [(m, Loc(m))], base

    def eval_record(self, loc: ast.RecordLit):
        fields = []
        for name, declared, member in loc.members:
            declared = self.types.canon(declared.base)
            f = self.fresh(declared)
            pairs, _ = self.eval_locator(member)
            for pair in pairs:
                b, q, t = self.take(pair)
                self.put((f, Loc(f)), b, q, t)
            fields.append((name, f))
        base = self.types.canon(ast.Record(tuple((n, t) for n, t, _ in loc.members)))
        m = self.temp(Resource(base, RecordVal(tuple(fields), True)))
        return [(m, Loc(m))], base

    def arg_loc(self, arg: ast.Locator) -> int:
        """Location passed by reference for an auxiliary argument."""
        pairs, _ = self.eval_locator(arg)
        return self.target(pairs[0])

    def key_of(self, loc: ast.Locator) -> Key:
        if isinstance(loc, ast.NatLit):
            return Key(loc.value, loc.hex)
        if isinstance(loc, ast.PURE) or isinstance(loc, ast.BoolLit):
            return Key(self.value_of(loc))
        pairs, _ = self.eval_locator(loc)
        n = self.target(pairs[0])
        return Key(self.read(pairs[0]), self.info(n).hex)

    def read(self, pair: Pair):
        n, sel = pair
        if isinstance(sel, Amount):
            return sel.n
        v = self.rho[sel.n].value
        if isinstance(v, TableVal):
            return len(v.rows)
        if v is None or isinstance(v, RecordVal):
            raise _Fail(ErrorKind.ARITHMETIC_ERROR, "operand is empty", "any", "nat")
        return v

    def value_of(self, loc: ast.Locator):
        """Value of a pure expression, without moving anything."""
        if isinstance(loc, (ast.NatLit, ast.BoolLit)):
            return loc.value
        if isinstance(loc, ast.Length):
            pairs, _ = self.eval_locator(loc.arg)
            if len(pairs) != 1 or self.target(pairs[0]) != pairs[0][0]:
                return len(pairs)
            return self.read(pairs[0])
        if isinstance(loc, ast.BinOp):
            a, b = self.value_of(loc.left), self.value_of(loc.right)
            return arith(loc.op, a, b)
        pairs, _ = self.eval_locator(loc)
        if len(pairs) != 1:
            return len(pairs)
        return self.read(pairs[0])

    # -- descriptions for messages and traces ------------------------------

    def peek(self, loc: ast.Locator) -> Optional[int]:
        """Location a locator names, without side effects; None if unknown."""
        if isinstance(loc, (ast.Var, ast.VarDef)):
            return self.mu.get(loc.name)
        if isinstance(loc, ast.Field):
            n = self.peek(loc.of)
            if n is None or not isinstance(self.rho.get(n, Resource(None, None)).value, RecordVal):
                return None
            return self.rho[n].value.field(loc.field)
        if isinstance(loc, ast.Select):
            n = self.peek(loc.source)
            if n is None or n not in self.rho:
                return None
            ti = self.info(n)
            if ti.kind != "table":
                return n
            tv = self.rho[n].value
            try:
                key = Key(self.peek_value(loc.key))
            except Exception:
                return None
            if ti.is_map:
                return tv.rows[tv.keys.index(key)] if key in tv.keys else None
            return next((r for r in tv.rows if self.row_key(r, ti) == key), None)
        return None

    def peek_value(self, loc: ast.Locator):
        if isinstance(loc, (ast.NatLit, ast.BoolLit)):
            return loc.value
        n = self.peek(loc)
        if n is None:
            raise LookupError(loc)
        v = self.rho[n].value
        if v is None or isinstance(v, (RecordVal, TableVal)):
            raise LookupError(loc)
        return v

    def describe(self, loc: Optional[ast.Locator]) -> str:
        """Pretty-print a locator with current key values substituted."""
        if loc is None:
            return "nothing"
        if isinstance(loc, ast.Select):
            parent = self.peek(loc.source)
            if parent is not None and parent in self.rho and self.info(parent).numeric:
                return self.describe(loc.source)
            return f"{self.describe(loc.source)}[{self.describe_key(loc.key)}]"
        if isinstance(loc, ast.Field):
            return f"{self.describe(loc.of)}.{loc.field}"
        if isinstance(loc, ast.Filter):
            args = ", ".join(ast.show_arg(a) for a in loc.args)
            return f"{self.describe(loc.source)}[{loc.quant} st {loc.predicate}({args})]"
        return ast.show_locator(loc)

    def describe_key(self, key: ast.Locator) -> str:
        if isinstance(key, (ast.NatLit, ast.BoolLit)):
            return ast.show_locator(key)
        try:
            v = self.peek_value(key)
        except LookupError:
            return ast.show_locator(key)
        return show_scalar(v, self.info(self.peek(key)).hex)


    # -- statements --------------------------------------------------------

    def exec_block(self, body) -> None:
        for s in body:
            self.exec_stmt(s)

    def exec_stmt(self, s: ast.Stmt) -> None:
        sp = self.store.savepoint()
        mark = len(self.temps)
        try:
            if isinstance(s, ast.Flow):
                self.exec_flow_stmt(s)
            elif isinstance(s, ast.FlowTransform):
                self.exec_transform(s)
            elif isinstance(s, ast.TryCatch):
                self.exec_try(s)
            elif isinstance(s, ast.Revert):
                raise FlowError(ErrorKind.EXPLICIT_REVERT, "revert")
            else:
                raise TypeError(f"not a statement: {s!r}")
        except _Fail as e:
            self.store.rollback(sp)
            del self.temps[mark:]
            self.rules_hit.add("Flow-Error")
            src = self.describe(s.source)
            dst = self.describe(s.dest) if not isinstance(s.dest, ast.Consume) else "consume"
            if isinstance(s, ast.FlowTransform):
                src = f"{src} --> {ast.show_call(s.call)}"
            raise FlowError(e.kind, format_flow_error(str(e.qty), e.type_name, src, dst, e.reason)) from None
        except FlowError:
            del self.temps[mark:]
            raise
        for t in self.temps[mark:]:
            if t in self.rho:
                self.free(t)
        del self.temps[mark:]

    def exec_flow_stmt(self, s: ast.Flow) -> None:
        src_pairs, _ = self.eval_locator(s.source)
        if isinstance(s.dest, ast.Consume):
            qs, tname = [], ""
            for pair in src_pairs:
                b, q, tname = self.take(pair)
                qs.append(q)
                self.free_bundle(b)
            self.rules_hit.add("Flow")
            self.store.log(f"flow {_sum_qty(qs) if qs else 0} {tname}: {self.describe(s.source)} --> consume")
            return
        dst_pairs, _ = self.eval_locator(s.dest, dest=True)
        self.exec_flow(src_pairs, dst_pairs[0], s.source, s.dest)

    def exec_flow(self, src: list[Pair], dst: Pair,
                  src_loc: Optional[ast.Locator] = None, dst_loc: Optional[ast.Locator] = None) -> None:
        """Rule Flow: subtract each selected resource and add it to the destination."""
        qs, tname = [], ""
        for pair in src:
            b, q, tname = self.take(pair)
            self.put(dst, b, q, tname)
            qs.append(q)
        if not src:
            tname = self.info(dst[0]).name
        self.rules_hit.add("Flow")
        self.store.log(f"flow {_sum_qty(qs) if qs else 0} {tname}: "
                       f"{self.describe(src_loc)} --> {self.describe(dst_loc)}")

    def exec_try(self, s: ast.TryCatch) -> None:
        sp = self.store.savepoint()
        mark = len(self.temps)
        try:
            self.exec_block(s.try_body)
        except FlowError:
            self.store.rollback(sp)
            del self.temps[mark:]
            self.exec_block(s.catch_body)

    def exec_transform(self, s: ast.FlowTransform) -> None:
        src_pairs, src_base = self.eval_locator(s.source)
        call = s.call
        if isinstance(call, ast.New):
            target = self.types.info(ast.Named(call.type_name))
            if target.kind == "record":
                slots = list(target.fields.values())
            else:
                slots = [ast.Type(ANY, target.resolved)]
            hole = next(i for i, a in enumerate(call.args) if isinstance(a, ast.Hole))
            per_elem = not self.coercible(src_base, slots[hole].base)
            arg_pairs = [None if isinstance(a, ast.Hole) else self.eval_locator(a)[0] for a in call.args]
        else:
            decl = self.decls[call.name]
            y = self.types.normalize(decl.params[-1].type, PARAM)
            per_elem = not self.types.same_base(src_base, y.base)
            aux = [self.arg_loc(a) for a in call.args[:-1]]
        dest = s.dest
        dst_pairs = None
        if dest is not None and not isinstance(dest, ast.Consume):
            dst_pairs, _ = self.eval_locator(dest, dest=True)

        taken = [self.take(p) for p in src_pairs]
        qty = _sum_qty([q for _, q, _ in taken]) if taken else 0
        tname = taken[-1][2] if taken else display_name(src_base)
        elements = self.elements([b for b, _, _ in taken], per_elem)
        results = []
        for e in elements:
            if isinstance(call, ast.New):
                results.append(self.construct(target, hole, e, arg_pairs))
            else:
                results.append(self.call_transformer(decl, aux, e))
        for r, q, t in results:
            if dst_pairs is None:
                self.free_bundle(r)
            else:
                self.put(dst_pairs[0], r, q, t)
        self.rules_hit.add("Flow")
        tail = f" --> {self.describe(dest)}" if dest is not None else ""
        self.store.log(f"flow {qty} {tname}: {self.describe(s.source)} --> {ast.show_call(call)}{tail}")

    def coercible(self, src: ast.BaseType, dst: ast.BaseType) -> bool:
        if self.types.same_base(src, dst):
            return True
        a, b = self.types.info(src), self.types.info(dst)
        return a.kind == b.kind and a.kind in ("nat", "bool")

    def elements(self, bundles: list[Bundle], per_elem: bool) -> list[Bundle]:
        if per_elem:
            out = []
            for b in bundles:
                if isinstance(b, BRows):
                    keys = b.keys or (None,) * len(b.rows)
                    out.extend(BRows((r,), None if k is None else (k,)) for r, k in zip(b.rows, keys))
                elif b is not None:
                    out.append(b)
            return out
        present = [b for b in bundles if b is not None]
        if len(present) <= 1:
            return [present[0] if present else None]
        if all(isinstance(b, BAmount) for b in present):
            return [BAmount(sum(b.n for b in present))]
        rows, keys = [], []
        for b in present:
            rows.extend(b.rows if isinstance(b, BRows) else (b.loc,))
            keys.extend(b.keys if isinstance(b, BRows) and b.keys else (None,) * (1 if isinstance(b, BRes) else len(b.rows)))
        return [BRows(tuple(rows), None if None in keys else tuple(keys))]

    # -- allocation and calls ----------------------------------------------

    def construct(self, ti: TypeInfo, hole: int, elem: Bundle, arg_pairs) -> tuple[Bundle, Qty, str]:
        """``new t(...)``: build a fresh resource of type t."""
        if ti.kind != "record":
            v = self.bundle_value(elem, ti)
            if ti.numeric:
                return BAmount(v or 0), v or 0, ti.name
            if v is None:
                return None, 0, ti.name
            self.check_unique(ti, v)
            return BScalar(v), "one", ti.name
        fields = []
        for i, (name, declared) in enumerate(ti.fields.items()):
            f = self.fresh(declared.base)
            if i == hole:
                self.put((f, Loc(f)), elem, "one", ti.name)
            else:
                for pair in arg_pairs[i]:
                    b, q, t = self.take(pair)
                    self.put((f, Loc(f)), b, q, t)
            fi = self.info(f)
            if fi.unique and self.rho[f].value is not None and fi.kind in ("nat", "bool"):
                self.check_unique(fi, self.rho[f].value)
            fields.append((name, f))
        rec = self.store.alloc(Resource(self.types.canon(ti.base), RecordVal(tuple(fields), True)))
        return BRes(rec), "one", ti.name

    def check_unique(self, ti: TypeInfo, v) -> None:
        if ti.unique and not self.store.witness(ti.name, v):
            raise _Fail(ErrorKind.UNIQUENESS_VIOLATION,
                        f"unique value {show_scalar(v, ti.hex)} already exists", "one", ti.name)

    def enter(self, decl: ast.TransformerDecl, aux: list[int]) -> tuple[dict, dict, int]:
        frame: dict[str, int] = {}
        saved = self.mu
        self.mu = frame
        for p, loc in zip(decl.aux_params, aux):
            self.store.bind(frame, p.name, loc)
        z = self.fresh(self.types.normalize(decl.ret.type).base)
        return frame, saved, z

    def leave(self, frame: dict, keep: set[str]) -> None:
        for name, loc in frame.items():
            if name not in keep and loc in self.rho:
                self.free(loc)

    def call_transformer(self, decl: ast.TransformerDecl, aux: list[int],
                         flowing: Bundle) -> tuple[Bundle, Qty, str]:
        frame, saved, z = self.enter(decl, aux)
        try:
            y = self.fresh(self.types.normalize(decl.params[-1].type).base)
            self.put((y, Loc(y)), flowing, "one", self.info(y).name)
            self.store.bind(frame, decl.params[-1].name, y)
            self.store.bind(frame, decl.ret.name, z)
            self.exec_block(decl.body)
            result = self.take((z, Loc(z)))
            self.leave(frame, {p.name for p in decl.aux_params})
        finally:
            self.mu = saved
        return result

    def call_predicate(self, decl: ast.TransformerDecl, aux: list[int], row: int) -> bool:
        frame, saved, z = self.enter(decl, aux)
        try:
            self.store.bind(frame, decl.params[-1].name, row)
            self.store.bind(frame, decl.ret.name, z)
            self.exec_block(decl.body)
            verdict = self.rho[z].value is True
            self.leave(frame, {p.name for p in decl.params})
        finally:
            self.mu = saved
        return verdict

    # -- whole programs ----------------------------------------------------

    def run(self) -> RunResult:
        sp = self.store.savepoint()
        try:
            for i, s in enumerate(self.program.body):
                self.exec_stmt(s)
                if self.hook is not None:
                    self.hook(i, self)
        except FlowError as e:
            self.store.rollback(sp)
            self.rules_hit.add("Flow-Error")
            return RunResult(self.final_state(), e, list(self.store.trace), self.rules_hit)
        return RunResult(self.final_state(), None, list(self.store.trace), self.rules_hit)


def arith(op: str, a, b):
    def fail(reason):
        return _Fail(ErrorKind.ARITHMETIC_ERROR, reason, "any", "nat")

    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if isinstance(a, bool) or isinstance(b, bool):
        raise fail(f"cannot apply {op} to booleans")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "-":
        if b > a:
            raise fail("result would be negative")
        return a - b
    if op == "/":
        if b == 0:
            raise fail("division by zero")
        return a // b
    r = a + b if op == "+" else a * b
    if r > MAX_AMOUNT:
        raise fail("result would exceed the maximum nat amount")
    return r


def run_program(program: ast.Program, hook=None) -> RunResult:
    """Execute a checked program as one transaction."""
    return Interpreter(program, hook).run()
