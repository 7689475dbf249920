"""Lazy needed-narrowing evaluator with call-time choice and set functions.

Every alternative of the search owns a heap of cells (copied when it forks),
so a shared subterm is evaluated at most once per alternative. A set function
call is evaluated by a nested search whose heaps are layered on top of the
heap of its owner. Whenever the nested search demands a cell that belongs to
an enclosing level it is suspended; the owner evaluates (or narrows) that cell
in its own search, where any non-determinism or failure belongs, and then
resumes the nested search.
"""

from __future__ import annotations

import sys
from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import count
from typing import Optional

from .core import (
    CHAR_TYPE, INT_TYPE, Apply, CharLit, Closure, ConApp, Expr, Failed, IfThenElse, IntLit,
    Lambda, Let, OpApp, Program, SetApp, SetValue, Variable, normalize_rule, variables,
)
from .deftree import BranchNode, DefTreeError, ExemptNode, NotSequential, RuleNode, build_tree
from .prelude import BUILTINS
from .pretty import print_expr

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class EvalError(Exception):
    pass


class UnboundedGenerator(EvalError):
    pass


class BudgetExceeded(EvalError):
    pass


class StepLimitExceeded(EvalError):
    pass


@dataclass
class EvalConfig:
    strategy: str = "bfs"
    value_limit: int = 100
    step_limit: int = 100_000
    int_range: Optional[tuple] = None
    # total inner steps allowed for one set-function evaluation
    set_budget: int = 1_000_000
    # total steps of the whole run (all alternatives, all levels)
    max_total_steps: int = 5_000_000
    quantum: int = 64

    def __post_init__(self):
        if self.strategy not in ("bfs", "dfs"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        for name in ("value_limit", "step_limit", "set_budget", "max_total_steps", "quantum"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.int_range is not None and self.int_range[0] > self.int_range[1]:
            raise ValueError("empty integer range")


@dataclass
class Counters:
    steps: int = 0
    rule_apps_standard: int = 0
    rule_apps_default: int = 0
    set_evals: int = 0
    generator_instantiations: int = 0
    rule_apps_by_op: Counter = field(default_factory=Counter)

    @property
    def rule_apps(self) -> int:
        return self.rule_apps_standard + self.rule_apps_default


# ---------------------------------------------------------------------------
# heap contents


class Con:
    __slots__ = ("name", "args")

    def __init__(self, name, args=()):
        self.name = name
        self.args = args

    def refs(self):
        return self.args

    def remap(self, f):
        return Con(self.name, tuple(f(a) for a in self.args)) if self.args else self


class Lit:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def refs(self):
        return ()

    def remap(self, f):
        return self


class Free:
    __slots__ = ()

    def refs(self):
        return ()

    def remap(self, f):
        return Free()


class Fn:
    """Partial application of an operation."""

    __slots__ = ("op", "args")

    def __init__(self, op, args):
        self.op = op
        self.args = args

    def refs(self):
        return self.args

    def remap(self, f):
        return Fn(self.op, tuple(f(a) for a in self.args))


class Clo:
    __slots__ = ("param", "body", "env")

    def __init__(self, param, body, env):
        self.param = param
        self.body = body
        self.env = env

    def refs(self):
        return tuple(self.env.values())

    def remap(self, f):
        return Clo(self.param, self.body, {k: f(v) for k, v in self.env.items()})


class SetV:
    __slots__ = ("elems", "cut")

    def __init__(self, elems, cut=False):
        self.elems = elems
        self.cut = cut

    def refs(self):
        return self.elems

    def remap(self, f):
        return SetV(tuple(f(e) for e in self.elems), self.cut)


class Ind:
    __slots__ = ("target",)

    def __init__(self, target):
        self.target = target

    def refs(self):
        return (self.target,)

    def remap(self, f):
        return Ind(f(self.target))


class App:
    __slots__ = ("op", "args", "alt")

    def __init__(self, op, args, alt=None):
        self.op = op
        self.args = args
        self.alt = alt

    def refs(self):
        return self.args

    def remap(self, f):
        return App(self.op, tuple(f(a) for a in self.args), self.alt)


class Ap:
    __slots__ = ("fn", "args")

    def __init__(self, fn, args):
        self.fn = fn
        self.args = args

    def refs(self):
        return (self.fn,) + self.args

    def remap(self, f):
        return Ap(f(self.fn), tuple(f(a) for a in self.args))


class SetCall:
    __slots__ = ("op", "args")

    def __init__(self, op, args):
        self.op = op
        self.args = args

    def refs(self):
        return self.args

    def remap(self, f):
        return SetCall(self.op, tuple(f(a) for a in self.args))


class SetProgress:
    """A partially evaluated set-function call."""

    __slots__ = ("op", "args", "found", "frontier", "cut", "spent", "owner", "used_default")

    def __init__(self, op, args, found, frontier, cut, spent, owner, used_default):
        self.op = op
        self.args = args
        self.found = found
        self.frontier = frontier
        self.cut = cut
        self.spent = spent
        self.owner = owner
        self.used_default = used_default

    def refs(self):
        return self.args + self.found

    def remap(self, f):
        return SetCall(self.op, tuple(f(a) for a in self.args))


class Cond:
    __slots__ = ("cond", "rhs", "env")

    def __init__(self, cond, rhs, env):
        self.cond = cond
        self.rhs = rhs
        self.env = env

    def refs(self):
        return (self.cond,) + tuple(self.env.values())

    def remap(self, f):
        return Cond(f(self.cond), self.rhs, {k: f(v) for k, v in self.env.items()})


class ITE:
    __slots__ = ("cond", "then", "else_", "env")

    def __init__(self, cond, then, else_, env):
        self.cond = cond
        self.then = then
        self.else_ = else_
        self.env = env

    def refs(self):
        return (self.cond,) + tuple(self.env.values())

    def remap(self, f):
        return ITE(f(self.cond), self.then, self.else_, {k: f(v) for k, v in self.env.items()})


HNF_TYPES = (Con, Lit, Free, Fn, Clo, SetV)
THUNK_TYPES = (App, Ap, SetCall, SetProgress, Cond, ITE)
TRUE_C = Con("True")
FALSE_C = Con("False")

# evaluation demands
HNF, FIRST, NF = 0, 1, 2


class Heap:
    """Persistent cell store: a private write layer over shared frozen layers.

    Forking freezes the write layer, so the children share everything written
    so far; frozen layers are merged geometrically to keep lookups short.
    """

    __slots__ = ("local", "layers", "rlayers")

    def __init__(self, local=None, layers=()):
        self.local = {} if local is None else local
        self.layers = layers
        self.rlayers = layers[::-1]

    def get(self, c):
        x = self.local.get(c)
        if x is None:
            for layer in self.rlayers:
                x = layer.get(c)
                if x is not None:
                    return x
        return x

    def __getitem__(self, c):
        x = self.get(c)
        if x is None:
            raise KeyError(c)
        return x

    def __setitem__(self, c, x):
        self.local[c] = x

    def __contains__(self, c):
        return self.get(c) is not None

    def fork(self) -> "Heap":
        if self.local:
            layers = list(self.layers)
            layers.append(self.local)
            while len(layers) >= 2 and 2 * len(layers[-1]) >= len(layers[-2]):
                top = layers.pop()
                merged = dict(layers.pop())
                merged.update(top)
                layers.append(merged)
            self.layers = tuple(layers)
            self.rlayers = self.layers[::-1]
            self.local = {}
        return Heap({}, self.layers)


class State:
    """One alternative of the search: its own heap layer and demand stack."""

    __slots__ = ("heap", "stack", "steps", "root", "used_default", "incomplete")

    def __init__(self, heap=None, stack=None, steps=0, root=None):
        self.heap = Heap() if heap is None else heap
        self.stack = [] if stack is None else stack
        self.steps = steps
        self.root = root
        self.used_default = False
        self.incomplete = False

    def clone(self) -> "State":
        s = State(self.heap.fork(), list(self.stack), self.steps, self.root)
        s.used_default = self.used_default
        s.incomplete = self.incomplete
        return s


class _Done:
    pass


class _Fail:
    pass


class _Yield:
    pass


class _Cut:
    pass


DONE, FAIL, YIELD, CUT = _Done(), _Fail(), _Yield(), _Cut()


class Fork:
    __slots__ = ("children",)

    def __init__(self, children):
        self.children = children


class Need:
    """A nested search demands a cell owned by an enclosing level."""

    __slots__ = ("cell", "level", "type_name")

    def __init__(self, cell, level, type_name):
        self.cell = cell
        self.level = level
        self.type_name = type_name


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Answer:
    value: Expr
    bindings: dict
    used_default: bool = False

    @property
    def value_text(self) -> str:
        return print_expr(self.value)

    @property
    def bindings_text(self) -> str:
        if not self.bindings:
            return ""
        return "{" + ", ".join(f"{k}={print_expr(v)}" for k, v in self.bindings.items()) + "}"

    @property
    def text(self) -> str:
        b = self.bindings_text
        return f"{b} {self.value_text}" if b else self.value_text


@dataclass
class EvalResult:
    answers: list
    exhausted: bool
    cut: bool
    counters: Counters

    def canonical(self) -> list:
        """Answer texts in canonical sorted order."""
        return sorted(a.text for a in self.answers)

    def values(self) -> list:
        return sorted(a.value_text for a in self.answers)


@dataclass(frozen=True)
class ValueSet:
    elements: tuple
    exhausted: bool = True

    def is_empty(self) -> bool:
        return not self.elements

    def texts(self) -> list:
        return sorted(print_expr(e) for e in self.elements)


# ---------------------------------------------------------------------------
# compiled definitional trees


class _CBranch:
    __slots__ = ("position", "type_name", "children")

    def __init__(self, position, type_name, children):
        self.position = position
        self.type_name = type_name
        self.children = children  # constructor name or literal value -> node


class _CRules:
    __slots__ = ("rules",)

    def __init__(self, rules):
        self.rules = rules


_EXEMPT = object()


def _compile_tree(node):
    if isinstance(node, ExemptNode):
        return _EXEMPT
    if isinstance(node, RuleNode):
        return _CRules(tuple(node.rules))
    children = {}
    for child in node.children:
        sub = child.pattern
        e = sub[node.position[0]]
        for i in node.position[1:]:
            e = e.args[i]
        key = e.constructor if isinstance(e, ConApp) else e.value
        children[key] = _compile_tree(child)
    return _CBranch(node.position, node.type_name, children)


# ---------------------------------------------------------------------------
# the machine


class Machine:
    def __init__(self, program: Program, config: Optional[EvalConfig] = None):
        self.program = program
        self.cfg = config or EvalConfig()
        self.counters = Counters()
        self._ids = count(1)
        self._trees = {}
        self._arity = dict(BUILTINS)
        for name, op in program.all_operations().items():
            if op.default_rule is not None:
                raise EvalError(f"operation {name} still has a default rule; "
                                f"apply a transformation scheme first")
            self._arity[name] = op.arity
        self._builtins = {
            "==": self._b_equal, "+": self._b_arith, "-": self._b_arith, "*": self._b_arith,
            "div": self._b_arith, "mod": self._b_arith, "<": self._b_arith,
            "<=": self._b_arith, ">": self._b_arith, ">=": self._b_arith,
            "abs": self._b_abs, "isDigit": self._b_isdigit, "isEmpty": self._b_isempty,
            "chooseValue": self._b_choose, "failed": self._b_failed,
        }
        user_ops = program.operations
        for name in list(self._builtins):
            if name in user_ops and name != "failed":
                del self._builtins[name]

    # -- compilation

    def trees(self, op: str) -> list:
        t = self._trees.get(op)
        if t is None:
            opdef = self.program.lookup(op)
            if opdef is None:
                raise EvalError(f"unknown operation {op}")
            rules = [normalize_rule(r) for r in opdef.standard_rules]
            try:
                t = [_compile_tree(build_tree(op, opdef.arity, rules, self.program))]
            except NotSequential:
                # evaluate each rule as an alternative of its own
                t = [_compile_tree(build_tree(op, opdef.arity, [r], self.program)) for r in rules]
            except DefTreeError as exc:
                raise EvalError(str(exc)) from None
            self._trees[op] = t
        return t

    def arity(self, op: str) -> int:
        a = self._arity.get(op)
        if a is None:
            raise EvalError(f"unknown operation {op}")
        return a

    # -- heap access

    def new(self, st: State, content) -> int:
        cid = next(self._ids)
        st.heap[cid] = content
        return cid

    @staticmethod
    def lookup(st: State, chain: tuple, c: int):
        """Follow indirections; returns ``(cell, content, level)``."""
        heap = st.heap
        level = len(chain)
        hops = None
        while True:
            x = heap.get(c)
            lv = level
            if x is None:
                for lv in range(level - 1, -1, -1):
                    x = chain[lv].get(c)
                    if x is not None:
                        break
                if x is None:
                    raise EvalError(f"dangling cell {c}")
            if type(x) is Ind:
                if lv == level:
                    if hops is None:
                        hops = [c]
                    else:
                        hops.append(c)
                c = x.target
                continue
            if hops is not None and len(hops) > 1:
                # path compression, only in this level's own heap
                short = Ind(c)
                for h in hops:
                    heap[h] = short
            return c, x, lv

    # -- building terms

    def build(self, st: State, e: Expr, env: dict) -> int:
        if type(e) is Variable:
            try:
                return env[e.name]
            except KeyError:
                raise EvalError(f"unbound variable {e.name}") from None
        cid = next(self._ids)
        st.heap[cid] = None
        self.build_into(st, cid, e, env)
        return cid

    def build_into(self, st: State, c: int, e: Expr, env: dict) -> None:
        t = type(e)
        if t is Variable:
            target = self.build(st, e, env)
            st.heap[c] = Ind(target)
        elif t is ConApp:
            st.heap[c] = Con(e.constructor, tuple(self.build(st, a, env) for a in e.args)) \
                if e.args else Con(e.constructor)
        elif t is IntLit or t is CharLit:
            st.heap[c] = Lit(e.value)
        elif t is OpApp:
            args = tuple(self.build(st, a, env) for a in e.args)
            if len(args) < self.arity(e.operation):
                st.heap[c] = Fn(e.operation, args)
            else:
                st.heap[c] = App(e.operation, args)
        elif t is Apply:
            fn = self.build(st, e.fn, env)
            st.heap[c] = Ap(fn, tuple(self.build(st, a, env) for a in e.args))
        elif t is Lambda:
            st.heap[c] = Clo(e.param, e.body, env)
        elif t is Let:
            inner = dict(env)
            for name, b in e.bindings:
                inner[name] = self.build(st, b, env)
            self.build_into(st, c, e.body, inner)
        elif t is SetApp:
            self.arity(e.operation)
            st.heap[c] = SetCall(e.operation, tuple(self.build(st, a, env) for a in e.args))
        elif t is IfThenElse:
            st.heap[c] = ITE(self.build(st, e.cond, env), e.then, e.else_, env)
        elif t is Failed:
            st.heap[c] = App("failed", ())
        else:
            raise EvalError(f"cannot evaluate {e!r}")

    # -- the reduction loop

    def run(self, st: State, chain: tuple, quantum: int):
        level = len(chain)
        stack = st.stack
        limit = self.cfg.step_limit
        stop = st.steps + quantum
        lookup = self.lookup
        while stack:
            if st.steps >= stop:
                return YIELD
            if st.steps > limit:
                return CUT
            kind, c0 = stack[-1]
            c, x, lv = lookup(st, chain, c0)
            tx = type(x)
            if tx in HNF_TYPES:
                stack.pop()
                if kind == NF and tx is Con and x.args:
                    for a in reversed(x.args):
                        stack.append((NF, a))
                continue
            if lv < level:
                return Need(c, lv, None)
            if kind == NF:
                stack.append((HNF, c))
                continue
            if tx is App:
                handler = self._builtins.get(x.op)
                out = handler(st, chain, c, x) if handler else self.rewrite(st, chain, c, x)
            elif tx is SetCall or tx is SetProgress:
                out = self.eval_set(st, chain, c, x, kind == FIRST)
            elif tx is Ap:
                out = self.apply(st, chain, c, x)
            elif tx is Cond:
                out = self.guard(st, chain, c, x, x.rhs, None)
            elif tx is ITE:
                out = self.guard(st, chain, c, x, x.then, x.else_)
            else:
                raise EvalError(f"unexpected heap content {x!r}")
            if out is not None:
                return out
        return DONE

    def step(self, st: State) -> None:
        st.steps += 1
        self.counters.steps += 1
        if self.counters.steps > self.cfg.max_total_steps:
            raise _TotalBudget()

    def _demand(self, st, chain, c, lv, kind=HNF):
        if lv < len(chain):
            return Need(c, lv, None)
        st.stack.append((kind, c))
        return None

    # -- operations defined by rules

    def rewrite(self, st: State, chain: tuple, c: int, x: App):
        trees = self.trees(x.op)
        if len(trees) > 1 and x.alt is None:
            self.step(st)
            children = []
            for i in range(len(trees)):
                s2 = st.clone()
                s2.heap[c] = App(x.op, x.args, i)
                children.append(s2)
            return Fork(children)
        node = trees[x.alt or 0]
        level = len(chain)
        lookup = self.lookup
        while True:
            if type(node) is _CBranch:
                pos = node.position
                cell = x.args[pos[0]]
                for i in pos[1:]:
                    cell = lookup(st, chain, cell)[1].args[i]
                sc, sx, slv = lookup(st, chain, cell)
                t = type(sx)
                if t is Con:
                    node = node.children[sx.name]
                elif t is Lit:
                    node = node.children.get(sx.value, _EXEMPT)
                elif t is Free:
                    if slv < level:
                        return Need(sc, slv, node.type_name)
                    return self.narrow(st, sc, node.type_name)
                elif t in THUNK_TYPES:
                    return self._demand(st, chain, sc, slv)
                else:
                    raise EvalError(f"{x.op}: cannot pattern match on a function or set value")
            elif node is _EXEMPT:
                return FAIL
            else:
                rules = node.rules
                if len(rules) == 1:
                    self.apply_rule(st, chain, c, x.args, rules[0])
                    return None
                self.step(st)
                children = []
                for r in rules:
                    s2 = st.clone()
                    self.apply_rule(s2, chain, c, x.args, r)
                    children.append(s2)
                return Fork(children)

    def apply_rule(self, st: State, chain: tuple, c: int, args: tuple, rule) -> None:
        env = {}
        for p, a in zip(rule.lhs, args):
            self._bind_pattern(st, chain, p, a, env)
        for v in rule.free_vars:
            env[v] = self.new(st, Free())
        self.step(st)
        ctr = self.counters
        if rule.from_default:
            ctr.rule_apps_default += 1
            st.used_default = True
        else:
            ctr.rule_apps_standard += 1
        ctr.rule_apps_by_op[rule.operation] += 1
        if rule.condition is not None:
            st.heap[c] = Cond(self.build(st, rule.condition, env), rule.rhs, env)
        else:
            self.build_into(st, c, rule.rhs, env)

    def _bind_pattern(self, st, chain, p, cell, env):
        if type(p) is Variable:
            env[p.name] = cell
        elif type(p) is ConApp and p.args:
            x = self.lookup(st, chain, cell)[1]
            for q, a in zip(p.args, x.args):
                self._bind_pattern(st, chain, q, a, env)

    def guard(self, st, chain, c, x, then, else_):
        cc, cx, clv = self.lookup(st, chain, x.cond)
        t = type(cx)
        if t in THUNK_TYPES:
            return self._demand(st, chain, cc, clv)
        if t is Free:
            if clv < len(chain):
                return Need(cc, clv, "Bool")
            return self.narrow(st, cc, "Bool")
        if t is Con and cx.name == "True":
            self.step(st)
            self.build_into(st, c, then, x.env)
            return None
        if t is Con and cx.name == "False":
            if else_ is None:
                return FAIL
            self.step(st)
            self.build_into(st, c, else_, x.env)
            return None
        raise EvalError("condition is not a Boolean value")

    def apply(self, st, chain, c, x: Ap):
        fc, fx, flv = self.lookup(st, chain, x.fn)
        t = type(fx)
        if t in THUNK_TYPES:
            return self._demand(st, chain, fc, flv)
        self.step(st)
        if t is Fn:
            total = fx.args + x.args
            n = self.arity(fx.op)
            if len(total) < n:
                st.heap[c] = Fn(fx.op, total)
            elif len(total) == n:
                st.heap[c] = App(fx.op, total)
            else:
                st.heap[c] = Ap(self.new(st, App(fx.op, total[:n])), total[n:])
            return None
        if t is Clo:
            env = dict(fx.env)
            env[fx.param] = x.args[0]
            if len(x.args) == 1:
                self.build_into(st, c, fx.body, env)
            else:
                st.heap[c] = Ap(self.build(st, fx.body, env), x.args[1:])
            return None
        raise EvalError("cannot apply a non-function value")

    # -- generators

    def narrow(self, st: State, v: int, type_name: str):
        self.counters.generator_instantiations += 1
        self.step(st)
        children = []
        if type_name == INT_TYPE:
            rng = self.cfg.int_range
            if rng is None:
                raise UnboundedGenerator("an integer free variable is demanded; "
                                         "use an integer range to enumerate it")
            for value in range(rng[0], rng[1] + 1):
                s2 = st.clone()
                s2.heap[v] = Lit(value)
                children.append(s2)
            return Fork(children)
        if type_name == CHAR_TYPE:
            raise UnboundedGenerator("a character free variable is demanded")
        try:
            constructors = self.program.constructors_of(type_name)
        except KeyError:
            raise EvalError(f"unknown type {type_name}") from None
        for name, arity in constructors:
            s2 = st.clone()
            args = tuple(self.new(s2, Free()) for _ in range(arity))
            s2.heap[v] = Con(name, args)
            children.append(s2)
        return Fork(children)

    # -- builtins

    def _hnf_args(self, st, chain, x, narrow_type=None):
        """Head normal forms of all arguments, or an outcome to return first."""
        out = []
        for a in x.args:
            ac, ax, alv = self.lookup(st, chain, a)
            t = type(ax)
            if t in THUNK_TYPES:
                return None, self._demand(st, chain, ac, alv)
            if t is Free and narrow_type is not None:
                if alv < len(chain):
                    return None, Need(ac, alv, narrow_type)
                return None, self.narrow(st, ac, narrow_type)
            out.append((ac, ax, alv))
        return out, None

    def _b_failed(self, st, chain, c, x):
        return FAIL

    def _b_arith(self, st, chain, c, x):
        vals, out = self._hnf_args(st, chain, x, INT_TYPE)
        if vals is None:
            return out
        (_, a, _), (_, b, _) = vals
        if type(a) is not Lit or type(b) is not Lit:
            raise EvalError(f"{x.op}: arguments must be numbers or characters")
        p, q = a.value, b.value
        op = x.op
        if op in ("<", "<=", ">", ">="):
            if type(p) is not type(q):
                raise EvalError(f"{op}: cannot compare values of different types")
            result = {"<": p < q, "<=": p <= q, ">": p > q, ">=": p >= q}[op]
            content = TRUE_C if result else FALSE_C
        else:
            if not isinstance(p, int) or not isinstance(q, int):
                raise EvalError(f"{op}: arguments must be integers")
            if op in ("div", "mod") and q == 0:
                return FAIL
            content = Lit({"+": lambda: p + q, "-": lambda: p - q, "*": lambda: p * q,
                           "div": lambda: p // q, "mod": lambda: p % q}[op]())
        self.step(st)
        st.heap[c] = content
        return None

    def _b_abs(self, st, chain, c, x):
        vals, out = self._hnf_args(st, chain, x, INT_TYPE)
        if vals is None:
            return out
        a = vals[0][1]
        if type(a) is not Lit or not isinstance(a.value, int):
            raise EvalError("abs: argument must be an integer")
        self.step(st)
        st.heap[c] = Lit(abs(a.value))
        return None

    def _b_isdigit(self, st, chain, c, x):
        vals, out = self._hnf_args(st, chain, x, CHAR_TYPE)
        if vals is None:
            return out
        a = vals[0][1]
        if type(a) is not Lit or not isinstance(a.value, str):
            raise EvalError("isDigit: argument must be a character")
        self.step(st)
        st.heap[c] = TRUE_C if a.value in "0123456789" else FALSE_C
        return None

    def _b_equal(self, st, chain, c, x):
        level = len(chain)
        a, b = x.args
        ac, ax, alv = self.lookup(st, chain, a)
        if type(ax) in THUNK_TYPES:
            return self._demand(st, chain, ac, alv)
        bc, bx, blv = self.lookup(st, chain, b)
        if type(bx) in THUNK_TYPES:
            return self._demand(st, chain, bc, blv)
        ta, tb = type(ax), type(bx)
        if ta is Free or tb is Free:
            if ta is Free and tb is Free:
                if ac != bc:
                    if alv == level:
                        st.heap[ac] = Ind(bc)
                    elif blv == level:
                        st.heap[bc] = Ind(ac)
                    else:
                        raise EvalError("cannot unify two free variables of an enclosing "
                                        "level inside a set function")
                result = TRUE_C
            else:
                vc, vlv, other = (ac, alv, bx) if ta is Free else (bc, blv, ax)
                if type(other) is Lit:
                    if vlv < level:
                        return Need(vc, vlv, CHAR_TYPE if isinstance(other.value, str)
                                    else INT_TYPE)
                    st.heap[vc] = Lit(other.value)
                    result = TRUE_C
                elif type(other) is Con:
                    type_name = self.program.constructor_info(other.name)[0]
                    if vlv < level:
                        return Need(vc, vlv, type_name)
                    return self.narrow(st, vc, type_name)
                else:
                    raise EvalError("==: cannot compare functions or sets")
        elif ta is Con and tb is Con:
            if ax.name != bx.name or len(ax.args) != len(bx.args):
                result = FALSE_C
            elif not ax.args:
                result = TRUE_C
            else:
                self.step(st)
                eqs = [self.new(st, App("==", (p, q))) for p, q in zip(ax.args, bx.args)]
                top = eqs[-1]
                for e in reversed(eqs[:-1]):
                    top = self.new(st, App("&&", (e, top)))
                st.heap[c] = Ind(top)
                return None
        elif ta is Lit and tb is Lit:
            result = TRUE_C if (type(ax.value) is type(bx.value) and ax.value == bx.value) \
                else FALSE_C
        else:
            raise EvalError("==: cannot compare functions or sets")
        self.step(st)
        st.heap[c] = result
        return None

    def _b_isempty(self, st, chain, c, x):
        sc, sx, slv = self.lookup(st, chain, x.args[0])
        t = type(sx)
        if t is SetV:
            empty = not sx.elems
        elif t is SetProgress and sx.found:
            empty = False
        elif t in THUNK_TYPES:
            return self._demand(st, chain, sc, slv, FIRST)
        else:
            raise EvalError("isEmpty: argument is not a set")
        self.step(st)
        st.heap[c] = TRUE_C if empty else FALSE_C
        return None

    def _b_choose(self, st, chain, c, x):
        sc, sx, slv = self.lookup(st, chain, x.args[0])
        t = type(sx)
        if t in THUNK_TYPES:
            return self._demand(st, chain, sc, slv)
        if t is not SetV:
            raise EvalError("chooseValue: argument is not a set")
        if sx.cut:
            st.incomplete = True
        self.step(st)
        children = []
        for e in sx.elems:
            s2 = st.clone()
            s2.heap[c] = Ind(e)
            children.append(s2)
        return Fork(children) if children else FAIL

    # -- set functions

    def eval_set(self, st: State, chain: tuple, c: int, x, first: bool):
        level = len(chain)
        bfs = self.cfg.strategy == "bfs"
        if type(x) is SetCall:
            self.counters.set_evals += 1
            inner = State()
            inner.root = self.new(inner, App(x.op, x.args))
            inner.stack.append((NF, inner.root))
            frontier = deque([inner])
            found, cut, spent, used_default = [], False, 0, False
        else:
            if first and x.found:
                st.stack.pop()
                return None
            if x.owner is st:
                frontier = deque(x.frontier)
            else:
                frontier = deque(s.clone() for s in x.frontier)
            found, cut, spent, used_default = list(x.found), x.cut, x.spent, x.used_default
        inner_chain = chain + (st.heap,)
        used = 0
        allowance = self.cfg.quantum * 4

        def suspend():
            st.heap[c] = SetProgress(x.op, x.args, tuple(found), tuple(frontier), cut, spent,
                                     st, used_default)

        while frontier:
            if first and found:
                break
            if spent >= self.cfg.set_budget:
                cut = True
                frontier.clear()
                break
            if used >= allowance:
                suspend()
                return YIELD
            s = frontier.popleft() if bfs else frontier.pop()
            before = self.counters.steps
            out = self.run(s, inner_chain, self.cfg.quantum)
            delta = self.counters.steps - before
            spent += delta
            used += delta
            used_default = used_default or s.used_default
            if out is DONE:
                found.append(self.export(s, st))
                if s.incomplete:
                    cut = True
            elif out is FAIL:
                pass
            elif out is YIELD:
                frontier.append(s)
            elif out is CUT:
                cut = True
            elif type(out) is Fork:
                frontier.extend(out.children if bfs else reversed(out.children))
            elif type(out) is Need:
                if bfs:
                    frontier.appendleft(s)
                else:
                    frontier.append(s)
                suspend()
                if out.level == level:
                    return self.handle_need(st, out)
                return out
            else:
                raise EvalError(f"unexpected outcome {out!r}")
        if used_default:
            st.used_default = True
        if frontier:
            suspend()
            st.stack.pop()
            return None
        if first and not found and cut:
            # emptiness could not be decided within the budget
            return CUT
        st.heap[c] = SetV(tuple(found), cut)
        if cut:
            st.incomplete = True
        return None

    def handle_need(self, st: State, need: Need):
        sc, sx = self._own(st, need.cell)
        t = type(sx)
        if t is Free:
            if need.type_name is None:
                raise EvalError("free variable demanded without a known type")
            return self.narrow(st, sc, need.type_name)
        if t in THUNK_TYPES:
            st.stack.append((HNF, sc))
        return None

    @staticmethod
    def _own(st: State, c: int):
        while True:
            x = st.heap[c]
            if type(x) is Ind:
                c = x.target
                continue
            return c, x

    def export(self, inner: State, owner: State) -> int:
        """Copy a computed element from an inner heap into its owner's heap."""
        src = inner.heap
        root = inner.root
        mapping = {}
        order = []
        todo = [root]
        while todo:
            cid = todo.pop()
            if cid in mapping or cid not in src:
                continue
            x = src[cid]
            if type(x) is Ind:
                mapping[cid] = None
                order.append(cid)
                todo.append(x.target)
                continue
            mapping[cid] = next(self._ids)
            order.append(cid)
            todo.extend(x.refs())

        def target(cid):
            while cid in mapping and mapping[cid] is None:
                cid = src[cid].target
            return mapping.get(cid, cid)

        for cid in order:
            new = mapping[cid]
            if new is not None:
                owner.heap[new] = src[cid].remap(target)
        return target(root)

    # -- read back

    def readback(self, st: State, c: int, names: dict) -> Expr:
        c, x, _ = self.lookup(st, (), c)
        t = type(x)
        if t is Con:
            if x.name == ":":
                items = []
                while t is Con and x.name == ":":
                    items.append(self.readback(st, x.args[0], names))
                    c, x, _ = self.lookup(st, (), x.args[1])
                    t = type(x)
                tail = self.readback(st, c, names)
                for item in reversed(items):
                    tail = ConApp(":", (item, tail))
                return tail
            return ConApp(x.name, tuple(self.readback(st, a, names) for a in x.args))
        if t is Lit:
            return CharLit(x.value) if isinstance(x.value, str) else IntLit(x.value)
        if t is Free:
            if c not in names:
                names[c] = _var_name(len(names))
            return Variable(names[c])
        if t is SetV:
            elems = [self.readback(st, e, names) for e in x.elems]
            return SetValue(tuple(sorted(elems, key=print_expr)))
        if t in (Fn, Clo):
            return Closure()
        raise EvalError("value is not in normal form")

    # -- top level

    def enumerate(self, goal: Expr) -> EvalResult:
        cfg = self.cfg
        st = State()
        goal_vars = variables(goal)
        env = {v: self.new(st, Free()) for v in goal_vars}
        st.root = self.build(st, goal, env)
        for v in reversed(goal_vars):
            st.stack.append((NF, env[v]))
        st.stack.append((NF, st.root))
        frontier = deque([st])
        bfs = cfg.strategy == "bfs"
        answers, cut = [], False
        try:
            while frontier and len(answers) < cfg.value_limit:
                s = frontier.popleft() if bfs else frontier.pop()
                out = self.run(s, (), cfg.quantum)
                if out is DONE:
                    names = {}
                    bindings = {v: self.readback(s, env[v], names) for v in goal_vars}
                    value = self.readback(s, s.root, names)
                    answers.append(Answer(value, bindings, s.used_default))
                    cut = cut or s.incomplete
                elif out is FAIL:
                    pass
                elif out is YIELD:
                    frontier.append(s)
                elif out is CUT:
                    cut = True
                elif type(out) is Fork:
                    frontier.extend(out.children if bfs else reversed(out.children))
                else:
                    raise EvalError(f"unexpected outcome {out!r}")
        except _TotalBudget:
            cut = True
            frontier.clear()
            frontier.append(None)
        exhausted = not frontier and not cut
        return EvalResult(answers, exhausted, cut, self.counters)


class _TotalBudget(Exception):
    pass


def _var_name(i: int) -> str:
    letters = "abcdefghijklmnopqrstuvwxyz"
    name = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        name = letters[r] + name
    return "_" + name


# ---------------------------------------------------------------------------
# public entry points


def enumerate_values(goal: Expr, program: Program, config: Optional[EvalConfig] = None) -> EvalResult:
    """All values of ``goal`` (with bindings of its free variables)."""
    return Machine(program, config).enumerate(goal)


def evaluate(program: Program, goal_text: str, config: Optional[EvalConfig] = None) -> EvalResult:
    from .parser import parse_expr

    return enumerate_values(parse_expr(goal_text, program), program, config)


def eval_set_function(op: str, args: list, program: Program,
                      config: Optional[EvalConfig] = None) -> list:
    """The sets computed by ``op'S args``, one per alternative of the arguments."""
    result = enumerate_values(SetApp(op, tuple(args)), program, config)
    sets = []
    for a in result.answers:
        v = a.value
        sets.append(ValueSet(v.elements if isinstance(v, SetValue) else (v,),
                             not result.cut))
    return sets


def instantiate_free_variable(v: str, type_name: str, program: Program,
                              config: Optional[EvalConfig] = None) -> list:
    """Generator alternatives ``(substitution, instance)`` for a free variable."""
    cfg = config or EvalConfig()
    if type_name == INT_TYPE:
        if cfg.int_range is None:
            raise UnboundedGenerator("an integer free variable needs an integer range")
        return [({v: IntLit(i)}, IntLit(i)) for i in range(cfg.int_range[0], cfg.int_range[1] + 1)]
    if type_name == CHAR_TYPE:
        raise UnboundedGenerator("character free variables cannot be enumerated")
    from .core import FreshNames

    fresh = FreshNames({v})
    out = []
    for name, arity in program.constructors_of(type_name):
        inst = ConApp(name, tuple(Variable(fresh.name(v)) for _ in range(arity)))
        out.append(({v: inst}, inst))
    return out


def builtin_equal(lhs: Expr, rhs: Expr, program: Program,
                  config: Optional[EvalConfig] = None) -> list:
    """Boolean alternatives of strict equality, each with its bindings."""
    result = enumerate_values(OpApp("==", (lhs, rhs)), program, config)
    return [(a.value, a.bindings) for a in result.answers]
