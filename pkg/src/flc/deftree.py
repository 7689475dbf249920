"""Definitional trees: construction, classification and rendering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .core import (
    CHAR_TYPE, INT_TYPE, CharLit, ConApp, Expr, FreshNames, IntLit, OperationDef, Program,
    Variable, match_args, normalize_rule,
)
from .pretty import print_expr, print_lhs, print_rule


class DefTreeError(Exception):
    pass


class NotSequential(DefTreeError):
    """No inductive position exists for a set of non-variant rules."""

    def __init__(self, operation: str, witness: str):
        super().__init__(f"{operation} is not inductively sequential: {witness}")
        self.operation = operation
        self.witness = witness


class MixedTypes(DefTreeError):
    def __init__(self, operation: str, position: tuple, types: list):
        pos = format_position(position)
        super().__init__(f"{operation}: constructors of different types {types} at position {pos}")
        self.operation = operation
        self.position = position
        self.types = types


Path = tuple


@dataclass(frozen=True)
class BranchNode:
    pattern: tuple
    position: Path
    type_name: str
    children: tuple
    has_literal_complement: bool = False


@dataclass(frozen=True)
class RuleNode:
    pattern: tuple
    rules: tuple


@dataclass(frozen=True)
class ExemptNode:
    pattern: tuple


DefinitionalTree = Union[BranchNode, RuleNode, ExemptNode]


@dataclass(frozen=True)
class DefinitionalTreeRoot:
    """A tree together with the operation it belongs to."""

    operation: str
    tree: DefinitionalTree


def format_position(path: Path) -> str:
    return ".".join(str(i + 1) for i in path)


# ---------------------------------------------------------------------------
# paths into argument tuples


def subterm(args: tuple, path: Path) -> Expr:
    e = args[path[0]]
    for i in path[1:]:
        e = e.args[i]
    return e


def _replace_in(e: Expr, path: Path, new: Expr) -> Expr:
    if not path:
        return new
    args = list(e.args)
    args[path[0]] = _replace_in(args[path[0]], path[1:], new)
    return ConApp(e.constructor, tuple(args))


def replace_at(args: tuple, path: Path, new: Expr) -> tuple:
    out = list(args)
    out[path[0]] = _replace_in(out[path[0]], path[1:], new)
    return tuple(out)


def variable_paths(args: tuple) -> list:
    """Paths of variable occurrences, leftmost-outermost first."""
    paths = []

    def walk(e, path):
        if isinstance(e, Variable):
            paths.append(path)
        elif isinstance(e, ConApp):
            for i, a in enumerate(e.args):
                walk(a, path + (i,))

    for i, a in enumerate(args):
        walk(a, (i,))
    return paths


# ---------------------------------------------------------------------------
# construction


def _literal_type(e: Expr) -> Optional[str]:
    if isinstance(e, IntLit):
        return INT_TYPE
    if isinstance(e, CharLit):
        return CHAR_TYPE
    return None


class _Builder:
    def __init__(self, operation: str, program: Program):
        self.operation = operation
        self.program = program

    def type_of(self, e: Expr) -> str:
        lit = _literal_type(e)
        if lit is not None:
            return lit
        info = self.program.constructor_info(e.constructor)
        if info is None:
            raise DefTreeError(f"unknown constructor {e.constructor}")
        return info[0]

    def build(self, pattern: tuple, rules: list, fresh: FreshNames) -> DefinitionalTree:
        if not rules:
            return ExemptNode(pattern)
        substs = []
        for r in rules:
            s = match_args(pattern, r.lhs)
            if s is None:
                raise DefTreeError(f"rule {print_rule(r)} does not instantiate the node pattern")
            substs.append(s)
        if all(all(isinstance(v, Variable) for v in s.values()) for s in substs):
            return RuleNode(pattern, tuple(rules))

        position = None
        for path in variable_paths(pattern):
            name = subterm(pattern, path).name
            if all(not isinstance(s[name], Variable) for s in substs):
                position = path
                break
        if position is None:
            witness = "; ".join(print_rule(r) for r in rules)
            raise NotSequential(self.operation,
                                f"no position is demanded by all of the rules {witness}")

        var = subterm(pattern, position).name
        heads = [s[var] for s in substs]
        types = []
        for h in heads:
            t = self.type_of(h)
            if t not in types:
                types.append(t)
        if len(types) > 1:
            raise MixedTypes(self.operation, position, types)
        type_name = types[0]

        children = []
        if type_name in (INT_TYPE, CHAR_TYPE):
            literals = []
            for h in heads:
                if h not in literals:
                    literals.append(h)
            for lit in literals:
                child_rules = [r for r, h in zip(rules, heads) if h == lit]
                children.append(self.build(replace_at(pattern, position, lit), child_rules, fresh))
            return BranchNode(pattern, position, type_name, tuple(children), True)

        for cname, arity in self.program.constructors_of(type_name):
            child_rules = [r for r, h in zip(rules, heads) if h.constructor == cname]
            sample = next((h for h in heads if h.constructor == cname), None)
            names = []
            for i in range(arity):
                arg = sample.args[i] if sample is not None else None
                if isinstance(arg, Variable) and not arg.is_wildcard and arg.name not in fresh.used:
                    fresh.used.add(arg.name)
                    names.append(arg.name)
                else:
                    names.append(fresh.wildcard())
            child = replace_at(pattern, position,
                               ConApp(cname, tuple(Variable(n) for n in names)))
            children.append(self.build(child, child_rules, fresh))
        return BranchNode(pattern, position, type_name, tuple(children), False)


def _root_pattern(arity: int, rules: list) -> tuple:
    fresh = FreshNames()
    args = []
    for i in range(arity):
        name = None
        if rules:
            first = rules[0].lhs[i]
            if isinstance(first, Variable) and not first.is_wildcard:
                name = first.name
        if name is None or name in fresh.used:
            name = fresh.wildcard()
        fresh.used.add(name)
        args.append(Variable(name))
    return tuple(args), fresh


def build_tree(operation: str, arity: int, rules: list, program: Program) -> DefinitionalTree:
    """Minimal definitional tree of already normalized rules."""
    pattern, fresh = _root_pattern(arity, rules)
    return _Builder(operation, program).build(pattern, list(rules), fresh)


def build_definitional_tree(op: OperationDef, program: Program) -> DefinitionalTreeRoot:
    """Minimal definitional tree of the (normalized) standard rules of ``op``."""
    rules = [normalize_rule(r) for r in op.standard_rules]
    return DefinitionalTreeRoot(op.name, build_tree(op.name, op.arity, rules, program))


# ---------------------------------------------------------------------------
# queries


def _tree(t) -> DefinitionalTree:
    return t.tree if isinstance(t, DefinitionalTreeRoot) else t


def nodes(t) -> Iterator[DefinitionalTree]:
    t = _tree(t)
    yield t
    if isinstance(t, BranchNode):
        for c in t.children:
            yield from nodes(c)


def exempt_patterns(t) -> list:
    """Patterns of all exempt nodes in left-to-right order."""
    return [n.pattern for n in nodes(t) if isinstance(n, ExemptNode)]


def has_literal_complement(t) -> bool:
    return any(isinstance(n, BranchNode) and n.has_literal_complement for n in nodes(t))


def tree_rules(t) -> list:
    return [r for n in nodes(t) if isinstance(n, RuleNode) for r in n.rules]


def is_minimal(t) -> bool:
    for n in nodes(t):
        if isinstance(n, BranchNode) and not any(isinstance(m, RuleNode) for m in nodes(n)):
            return False
    return True


@dataclass(frozen=True)
class Leaf:
    """A leaf region of a tree: a rule node, an exempt node or a literal complement."""

    kind: str  # "rule" | "exempt" | "complement"
    pattern: tuple
    position: Optional[Path] = None
    excluded: tuple = ()

    def matches(self, args: tuple) -> bool:
        s = match_args(self.pattern, args)
        if s is None:
            return False
        if self.kind != "complement":
            return True
        value = subterm(args, self.position)
        return _literal_type(value) is not None and value not in self.excluded


def leaves(t) -> list:
    out = []

    def walk(n):
        if isinstance(n, RuleNode):
            out.append(Leaf("rule", n.pattern))
        elif isinstance(n, ExemptNode):
            out.append(Leaf("exempt", n.pattern))
        else:
            for c in n.children:
                walk(c)
            if n.has_literal_complement:
                lits = tuple(subterm(c.pattern, n.position) for c in n.children)
                out.append(Leaf("complement", n.pattern, n.position, lits))

    walk(_tree(t))
    return out


def find_leaf(t, args: tuple) -> list:
    """All leaves whose region contains the ground argument tuple."""
    return [leaf for leaf in leaves(t) if leaf.matches(args)]


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class OpClassification:
    kind: str
    witness: Optional[str] = None

    def __str__(self) -> str:
        return self.kind if self.witness is None else f"{self.kind}: {self.witness}"


INDUCTIVELY_SEQUENTIAL = OpClassification("InductivelySequential")
OVERLAPPING = OpClassification("OverlappingInductivelySequential")


def classify_rules(operation: str, arity: int, rules: list, program: Program) -> OpClassification:
    try:
        t = build_tree(operation, arity, [normalize_rule(r) for r in rules], program)
    except DefTreeError as exc:
        return OpClassification("NotSequential", str(exc))
    if any(isinstance(n, RuleNode) and len(n.rules) > 1 for n in nodes(t)):
        return OVERLAPPING
    return INDUCTIVELY_SEQUENTIAL


def classify_operation(op: OperationDef, program: Program) -> OpClassification:
    return classify_rules(op.name, op.arity, op.standard_rules, program)


# ---------------------------------------------------------------------------
# rendering


def render_tree(t, operation: Optional[str] = None) -> str:
    if isinstance(t, DefinitionalTreeRoot):
        operation, t = t.operation, t.tree
    lines = []

    def head(pattern):
        return print_lhs(operation, pattern)

    def walk(n, depth):
        pad = "  " * depth
        if isinstance(n, BranchNode):
            lines.append(f"{pad}branch {head(n.pattern)} on {format_position(n.position)}")
            for c in n.children:
                walk(c, depth + 1)
            if n.has_literal_complement:
                lits = ", ".join(print_expr(subterm(c.pattern, n.position)) for c in n.children)
                lines.append(f"{pad}  exempt {head(n.pattern)} otherwise (not {lits})")
        elif isinstance(n, RuleNode):
            for r in n.rules:
                lines.append(f"{pad}rule {print_rule(r)}")
        else:
            lines.append(f"{pad}exempt {head(n.pattern)}")

    walk(t, 0)
    return "\n".join(lines) + "\n"


__all__ = [
    "BranchNode", "RuleNode", "ExemptNode", "DefinitionalTreeRoot", "DefTreeError",
    "NotSequential", "MixedTypes", "OpClassification", "Leaf",
    "build_definitional_tree", "build_tree", "exempt_patterns", "has_literal_complement",
    "classify_operation", "classify_rules", "leaves", "find_leaf", "render_tree",
    "is_minimal", "tree_rules", "nodes", "format_position",
]
