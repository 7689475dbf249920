"""Terms, rules, programs and the pattern algebra used by every other module.

Expressions double as patterns: a standard pattern is an expression built
from variables, constructors and literals only, a functional pattern may
additionally contain operation applications.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import count
from typing import Iterable, Iterator, Optional


WILDCARD_PREFIX = "_"


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Variable(Expr):
    name: str

    @property
    def is_wildcard(self) -> bool:
        return self.name.startswith(WILDCARD_PREFIX)


@dataclass(frozen=True)
class ConApp(Expr):
    constructor: str
    args: tuple = ()


@dataclass(frozen=True)
class OpApp(Expr):
    """Application of a defined operation; fewer args than the arity is a partial application."""

    operation: str
    args: tuple = ()


@dataclass(frozen=True)
class Apply(Expr):
    """Application of a function-valued expression (higher-order call)."""

    fn: Expr
    args: tuple


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class CharLit(Expr):
    value: str


@dataclass(frozen=True)
class Lambda(Expr):
    param: str
    body: Expr


@dataclass(frozen=True)
class Let(Expr):
    bindings: tuple  # of (name, Expr)
    body: Expr


@dataclass(frozen=True)
class SetApp(Expr):
    operation: str
    args: tuple


@dataclass(frozen=True)
class IfThenElse(Expr):
    cond: Expr
    then: Expr
    else_: Expr


@dataclass(frozen=True)
class Failed(Expr):
    pass


@dataclass(frozen=True)
class SetValue(Expr):
    """A computed set (multiset) of values; only produced by evaluation."""

    elements: tuple


@dataclass(frozen=True)
class Closure(Expr):
    """An opaque function value produced by evaluation."""

    text: str = "<function>"


TRUE = ConApp("True")
FALSE = ConApp("False")
UNIT = ConApp("()")
NIL = ConApp("[]")


def cons(head: Expr, tail: Expr) -> ConApp:
    return ConApp(":", (head, tail))


def make_list(items: Iterable[Expr], tail: Expr = NIL) -> Expr:
    items = list(items)
    for item in reversed(items):
        tail = cons(item, tail)
    return tail


def make_string(text: str) -> Expr:
    return make_list(CharLit(c) for c in text)


def tuple_con(n: int) -> str:
    return "(" + "," * (n - 1) + ")"


def make_tuple(items: Iterable[Expr]) -> Expr:
    items = tuple(items)
    if not items:
        return UNIT
    if len(items) == 1:
        return items[0]
    return ConApp(tuple_con(len(items)), items)


def conj(*conds: Optional[Expr]) -> Optional[Expr]:
    """Right-nested ``&&`` of the given conditions, skipping ``None``."""
    conds = [c for c in conds if c is not None]
    if not conds:
        return None
    result = conds[-1]
    for c in reversed(conds[:-1]):
        result = OpApp("&&", (c, result))
    return result


# ---------------------------------------------------------------------------
# rules and programs


@dataclass(frozen=True)
class Rule:
    operation: str
    lhs: tuple
    rhs: Expr
    condition: Optional[Expr] = None
    free_vars: tuple = ()
    is_default: bool = False
    # set by the transformations on rules that stem from a default rule
    from_default: bool = False

    @property
    def arity(self) -> int:
        return len(self.lhs)


@dataclass
class OperationDef:
    name: str
    arity: int
    standard_rules: list = field(default_factory=list)
    default_rule: Optional[Rule] = None

    @property
    def rules(self) -> list:
        extra = [self.default_rule] if self.default_rule is not None else []
        return list(self.standard_rules) + extra


@dataclass(frozen=True)
class ConDecl:
    name: str
    arg_types: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.arg_types)


@dataclass(frozen=True)
class DataDecl:
    name: str
    params: tuple
    constructors: tuple


LIST_TYPE = "[]"
UNIT_TYPE = "()"
INT_TYPE = "Int"
CHAR_TYPE = "Char"

_BUILTIN_TYPES = {
    LIST_TYPE: (("[]", 0), (":", 2)),
    UNIT_TYPE: (("()", 0),),
}


@dataclass
class Program:
    data_decls: list = field(default_factory=list)
    operations: dict = field(default_factory=dict)
    # declarations visible to this program but not part of its own source
    prelude: Optional["Program"] = None

    def __post_init__(self):
        self._con_index = None

    # -- constructors and types

    def _index(self) -> dict:
        if self._con_index is None:
            index = {}
            decls = list(self.prelude.data_decls) if self.prelude else []
            for decl in decls + list(self.data_decls):
                for c in decl.constructors:
                    index[c.name] = (decl.name, c.arity)
            self._con_index = index
        return self._con_index

    def invalidate(self) -> None:
        self._con_index = None

    def constructor_info(self, name: str) -> Optional[tuple]:
        """Return ``(type name, arity)`` of a constructor or ``None``."""
        if name in ("[]", ":"):
            return LIST_TYPE, 0 if name == "[]" else 2
        if name == "()":
            return UNIT_TYPE, 0
        if name.startswith("(,") and name.endswith(")"):
            return name, len(name) - 1
        return self._index().get(name)

    def constructors_of(self, type_name: str) -> tuple:
        """All ``(constructor, arity)`` pairs of a type, in declaration order."""
        if type_name in _BUILTIN_TYPES:
            return _BUILTIN_TYPES[type_name]
        if type_name.startswith("(,"):
            return ((type_name, len(type_name) - 1),)
        for decl in self.all_data_decls():
            if decl.name == type_name:
                return tuple((c.name, c.arity) for c in decl.constructors)
        raise KeyError(type_name)

    def all_data_decls(self) -> list:
        decls = list(self.prelude.data_decls) if self.prelude else []
        return decls + list(self.data_decls)

    # -- operations

    def lookup(self, name: str) -> Optional[OperationDef]:
        op = self.operations.get(name)
        if op is None and self.prelude is not None:
            op = self.prelude.operations.get(name)
        return op

    def all_operations(self) -> dict:
        ops = dict(self.prelude.operations) if self.prelude else {}
        ops.update(self.operations)
        return ops

    def with_operations(self, operations: dict) -> "Program":
        return Program(list(self.data_decls), dict(operations), self.prelude)


# ---------------------------------------------------------------------------
# traversal helpers


def children(e: Expr) -> tuple:
    if isinstance(e, (ConApp, OpApp, SetApp)):
        return e.args
    if isinstance(e, Apply):
        return (e.fn,) + e.args
    if isinstance(e, Lambda):
        return (e.body,)
    if isinstance(e, Let):
        return tuple(b for _, b in e.bindings) + (e.body,)
    if isinstance(e, IfThenElse):
        return (e.cond, e.then, e.else_)
    if isinstance(e, SetValue):
        return e.elements
    return ()


def iter_vars(e: Expr, bound: frozenset = frozenset()) -> Iterator[str]:
    """Free variable occurrences of ``e`` in left-to-right order (with repeats)."""
    if isinstance(e, Variable):
        if e.name not in bound:
            yield e.name
    elif isinstance(e, Lambda):
        yield from iter_vars(e.body, bound | {e.param})
    elif isinstance(e, Let):
        names = frozenset(n for n, _ in e.bindings)
        for _, b in e.bindings:
            yield from iter_vars(b, bound)
        yield from iter_vars(e.body, bound | names)
    else:
        for c in children(e):
            yield from iter_vars(c, bound)


def variables(*exprs: Expr) -> list:
    """Distinct free variables of the expressions, in order of first occurrence."""
    seen = {}
    for e in exprs:
        for v in iter_vars(e):
            seen.setdefault(v, None)
    return list(seen)


def contains_operation(e: Expr) -> bool:
    if isinstance(e, (OpApp, SetApp, Apply, Failed, Let, Lambda, IfThenElse)):
        return True
    return any(contains_operation(c) for c in children(e))


def is_constructor_pattern(e: Expr) -> bool:
    return not contains_operation(e)


def apply_subst(e: Expr, subst: dict) -> Expr:
    """Apply a substitution; names bound by lambdas/lets are left alone."""
    if not subst:
        return e
    if isinstance(e, Variable):
        return subst.get(e.name, e)
    if isinstance(e, ConApp):
        return ConApp(e.constructor, tuple(apply_subst(a, subst) for a in e.args))
    if isinstance(e, OpApp):
        return OpApp(e.operation, tuple(apply_subst(a, subst) for a in e.args))
    if isinstance(e, SetApp):
        return SetApp(e.operation, tuple(apply_subst(a, subst) for a in e.args))
    if isinstance(e, Apply):
        return Apply(apply_subst(e.fn, subst), tuple(apply_subst(a, subst) for a in e.args))
    if isinstance(e, Lambda):
        inner = {k: v for k, v in subst.items() if k != e.param}
        return Lambda(e.param, apply_subst(e.body, inner))
    if isinstance(e, Let):
        names = {n for n, _ in e.bindings}
        inner = {k: v for k, v in subst.items() if k not in names}
        return Let(tuple((n, apply_subst(b, subst)) for n, b in e.bindings),
                   apply_subst(e.body, inner))
    if isinstance(e, IfThenElse):
        return IfThenElse(apply_subst(e.cond, subst), apply_subst(e.then, subst),
                          apply_subst(e.else_, subst))
    if isinstance(e, SetValue):
        return SetValue(tuple(apply_subst(a, subst) for a in e.elements))
    return e


def compose(first: dict, second: dict) -> dict:
    """The substitution ``second . first``: apply ``first``, then ``second``."""
    result = {k: apply_subst(v, second) for k, v in first.items()}
    for k, v in second.items():
        result.setdefault(k, v)
    return {k: v for k, v in result.items() if v != Variable(k)}


def rename_rule(rule: Rule, renaming: dict) -> Rule:
    """Rename variables of a rule (``renaming`` maps names to names)."""
    subst = {k: Variable(v) for k, v in renaming.items()}
    return replace(
        rule,
        lhs=tuple(apply_subst(p, subst) for p in rule.lhs),
        rhs=apply_subst(rule.rhs, subst),
        condition=None if rule.condition is None else apply_subst(rule.condition, subst),
        free_vars=tuple(renaming.get(v, v) for v in rule.free_vars),
    )


def rule_vars(rule: Rule) -> list:
    exprs = list(rule.lhs)
    if rule.condition is not None:
        exprs.append(rule.condition)
    exprs.append(rule.rhs)
    names = variables(*exprs)
    for v in rule.free_vars:
        if v not in names:
            names.append(v)
    return names


class FreshNames:
    """Generates variable names that avoid a given set of used names."""

    def __init__(self, used: Iterable[str] = ()):
        self.used = set(used)
        self._wild = count(1)

    def name(self, base: str) -> str:
        candidate = base
        n = 1
        while candidate in self.used:
            candidate = f"{base}{n}"
            n += 1
        self.used.add(candidate)
        return candidate

    def prime(self, base: str) -> str:
        candidate = base + "'"
        while candidate in self.used:
            candidate += "'"
        self.used.add(candidate)
        return candidate

    def wildcard(self) -> str:
        while True:
            candidate = f"{WILDCARD_PREFIX}{next(self._wild)}"
            if candidate not in self.used:
                self.used.add(candidate)
                return candidate


# ---------------------------------------------------------------------------
# matching and unification


def match(pattern: Expr, subject: Expr, subst: Optional[dict] = None) -> Optional[dict]:
    """Syntactic matching of a standard pattern against an expression.

    Returns the substitution ``s`` with ``s(pattern) == subject`` or ``None`` on
    a constructor or literal clash. The subject is never evaluated, so an
    operation-rooted subterm only matches a variable.
    """
    subst = {} if subst is None else subst
    if isinstance(pattern, Variable):
        bound = subst.get(pattern.name)
        if bound is None:
            subst[pattern.name] = subject
            return subst
        return subst if bound == subject else None
    if isinstance(pattern, ConApp):
        if not isinstance(subject, ConApp) or subject.constructor != pattern.constructor \
                or len(subject.args) != len(pattern.args):
            return None
        for p, s in zip(pattern.args, subject.args):
            if match(p, s, subst) is None:
                return None
        return subst
    if isinstance(pattern, (IntLit, CharLit)):
        return subst if pattern == subject else None
    raise ValueError(f"not a standard pattern: {pattern!r}")


def match_args(patterns: Iterable[Expr], subjects: Iterable[Expr]) -> Optional[dict]:
    patterns, subjects = tuple(patterns), tuple(subjects)
    if len(patterns) != len(subjects):
        return None
    subst = {}
    for p, s in zip(patterns, subjects):
        if match(p, s, subst) is None:
            return None
    return subst


def _walk(e: Expr, subst: dict) -> Expr:
    while isinstance(e, Variable) and e.name in subst:
        e = subst[e.name]
    return e


def _occurs(name: str, e: Expr, subst: dict) -> bool:
    e = _walk(e, subst)
    if isinstance(e, Variable):
        return e.name == name
    return any(_occurs(name, c, subst) for c in children(e))


def _unify(p: Expr, q: Expr, subst: dict) -> bool:
    p, q = _walk(p, subst), _walk(q, subst)
    if isinstance(p, Variable) and isinstance(q, Variable) and p.name == q.name:
        return True
    if isinstance(p, Variable):
        if _occurs(p.name, q, subst):
            return False
        subst[p.name] = q
        return True
    if isinstance(q, Variable):
        return _unify(q, p, subst)
    if isinstance(p, ConApp) and isinstance(q, ConApp):
        if p.constructor != q.constructor or len(p.args) != len(q.args):
            return False
        return all(_unify(a, b, subst) for a, b in zip(p.args, q.args))
    if isinstance(p, (IntLit, CharLit)) or isinstance(q, (IntLit, CharLit)):
        return p == q
    raise ValueError(f"cannot unify non-constructor terms {p!r} and {q!r}")


def _resolve(subst: dict) -> dict:
    def full(e):
        e = _walk(e, subst)
        if isinstance(e, ConApp):
            return ConApp(e.constructor, tuple(full(a) for a in e.args))
        return e
    return {k: full(v) for k, v in subst.items()}


def unify(p: Expr, q: Expr) -> Optional[dict]:
    """Most general unifier of two standard patterns, or ``None``.

    The result is idempotent: no variable in its domain occurs in its range.
    """
    subst = {}
    if not _unify(p, q, subst):
        return None
    return _resolve(subst)


def unify_args(ps: Iterable[Expr], qs: Iterable[Expr]) -> Optional[dict]:
    ps, qs = tuple(ps), tuple(qs)
    if len(ps) != len(qs):
        return None
    subst = {}
    for p, q in zip(ps, qs):
        if not _unify(p, q, subst):
            return None
    return _resolve(subst)


# ---------------------------------------------------------------------------
# rule normalization


def _fresh_for(rule: Rule) -> FreshNames:
    return FreshNames(rule_vars(rule))


def desugar_functional_patterns(rule: Rule) -> Rule:
    """Move functional patterns of the left-hand side into the condition.

    Each argument containing an operation becomes a fresh variable ``v`` and
    ``v == <functional pattern>`` is prepended to the condition. Variables of
    the functional pattern that do not occur in a standard argument become
    free variables of the rule.
    """
    if all(is_constructor_pattern(p) for p in rule.lhs):
        return rule
    fresh = _fresh_for(rule)
    standard_vars = set()
    for p in rule.lhs:
        if is_constructor_pattern(p):
            standard_vars.update(variables(p))
    lhs, equations, new_free = [], [], []
    for p in rule.lhs:
        if is_constructor_pattern(p):
            lhs.append(p)
            continue
        v = fresh.name("p")
        lhs.append(Variable(v))
        equations.append(OpApp("==", (Variable(v), p)))
        for name in variables(p):
            if name not in standard_vars and name not in new_free:
                new_free.append(name)
    free = tuple(rule.free_vars) + tuple(n for n in new_free if n not in rule.free_vars)
    return replace(rule, lhs=tuple(lhs), condition=conj(*equations, rule.condition),
                   free_vars=free)


def linearize_rule(rule: Rule) -> Rule:
    """Rename repeated left-hand side variables and equate them in the condition."""
    seen = set()
    fresh = _fresh_for(rule)
    equations = []

    def walk(p):
        if isinstance(p, Variable):
            if p.name in seen:
                new = fresh.prime(p.name)
                equations.append(OpApp("==", (Variable(p.name), Variable(new))))
                return Variable(new)
            seen.add(p.name)
            return p
        if isinstance(p, ConApp):
            return ConApp(p.constructor, tuple(walk(a) for a in p.args))
        return p

    lhs = tuple(walk(p) for p in rule.lhs)
    if not equations:
        return rule
    return replace(rule, lhs=lhs, condition=conj(*equations, rule.condition))


def normalize_rule(rule: Rule) -> Rule:
    return linearize_rule(desugar_functional_patterns(rule))


def is_linear(patterns: Iterable[Expr]) -> bool:
    occurrences = [v for p in patterns for v in iter_vars(p)]
    return len(occurrences) == len(set(occurrences))


# ---------------------------------------------------------------------------
# alpha-equivalence


def _canonical_rule(rule: Rule) -> tuple:
    exprs = list(rule.lhs)
    if rule.condition is not None:
        exprs.append(rule.condition)
    exprs.append(rule.rhs)
    order = []
    for e in exprs:
        for name in _binder_order(e):
            if name not in order:
                order.append(name)
    for v in rule.free_vars:
        if v not in order:
            order.append(v)
    renaming = {name: f"v{i}" for i, name in enumerate(order)}
    renamed = _rename_all(rule, renaming)
    return (renamed.operation, renamed.lhs, renamed.condition, renamed.rhs,
            frozenset(renamed.free_vars), renamed.is_default)


def _binder_order(e: Expr) -> Iterator[str]:
    # every variable name (bound or free) in traversal order
    if isinstance(e, Variable):
        yield e.name
    elif isinstance(e, Lambda):
        yield e.param
        yield from _binder_order(e.body)
    elif isinstance(e, Let):
        for n, b in e.bindings:
            yield n
            yield from _binder_order(b)
        yield from _binder_order(e.body)
    else:
        for c in children(e):
            yield from _binder_order(c)


def _rename_everything(e: Expr, ren: dict) -> Expr:
    if isinstance(e, Variable):
        return Variable(ren.get(e.name, e.name))
    if isinstance(e, ConApp):
        return ConApp(e.constructor, tuple(_rename_everything(a, ren) for a in e.args))
    if isinstance(e, OpApp):
        return OpApp(e.operation, tuple(_rename_everything(a, ren) for a in e.args))
    if isinstance(e, SetApp):
        return SetApp(e.operation, tuple(_rename_everything(a, ren) for a in e.args))
    if isinstance(e, Apply):
        return Apply(_rename_everything(e.fn, ren), tuple(_rename_everything(a, ren) for a in e.args))
    if isinstance(e, Lambda):
        return Lambda(ren.get(e.param, e.param), _rename_everything(e.body, ren))
    if isinstance(e, Let):
        return Let(tuple((ren.get(n, n), _rename_everything(b, ren)) for n, b in e.bindings),
                   _rename_everything(e.body, ren))
    if isinstance(e, IfThenElse):
        return IfThenElse(*(_rename_everything(c, ren) for c in (e.cond, e.then, e.else_)))
    return e


def _rename_all(rule: Rule, ren: dict) -> Rule:
    return replace(
        rule,
        lhs=tuple(_rename_everything(p, ren) for p in rule.lhs),
        rhs=_rename_everything(rule.rhs, ren),
        condition=None if rule.condition is None else _rename_everything(rule.condition, ren),
        free_vars=tuple(ren.get(v, v) for v in rule.free_vars),
    )


def rules_alpha_equivalent(r1: Rule, r2: Rule) -> bool:
    return _canonical_rule(r1) == _canonical_rule(r2)


def alpha_equivalent(p1: Program, p2: Program, ordered: bool = True) -> bool:
    """Compare two programs up to variable renaming.

    With ``ordered=False`` the rules of each operation are compared as multisets.
    """
    if [d for d in p1.data_decls] != [d for d in p2.data_decls]:
        return False
    if set(p1.operations) != set(p2.operations):
        return False
    for name, op1 in p1.operations.items():
        op2 = p2.operations[name]
        if op1.arity != op2.arity:
            return False
        c1 = [_canonical_rule(r) for r in op1.rules]
        c2 = [_canonical_rule(r) for r in op2.rules]
        if not ordered:
            c1, c2 = sorted(c1, key=repr), sorted(c2, key=repr)
        if c1 != c2:
            return False
    return True
