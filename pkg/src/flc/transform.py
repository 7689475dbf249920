"""Elimination of default rules by source-to-source transformation.

Three schemes are provided: the basic scheme based on a test operation and
an emptiness check of its set function, the continuation scheme that collects
the right-hand sides of applicable standard rules as closures, and the
replacement of the default rule by ordinary rules derived from the exempt
nodes of a definitional tree.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from .core import (
    UNIT, Apply, Failed, FreshNames, IfThenElse, Lambda, Let, OpApp, OperationDef, Program,
    Rule, SetApp, Variable, apply_subst, children, conj, desugar_functional_patterns, iter_vars,
    normalize_rule, rename_rule, rule_vars, unify_args, variables,
)
from .deftree import (
    DefTreeError, RuleNode, build_tree, exempt_patterns, has_literal_complement, nodes,
)

TEST, INIT, DFLT, TESTC = "'TEST", "'INIT", "'DFLT", "'TESTC"
GENERATED_SUFFIXES = (TEST, INIT, DFLT, TESTC)
SCHEMES = ("basic", "cont", "replace")


class TransformError(Exception):
    pass


class ReservedName(TransformError):
    pass


class InapplicableLiteralComplement(TransformError):
    pass


class InapplicableOverlap(TransformError):
    pass


class NoDefault(TransformError):
    pass


class ReplacementError(TransformError):
    """Replacement is inapplicable to some operations (fallback disabled)."""

    def __init__(self, report: list):
        reasons = "; ".join(r.reason for r in report if r.reason)
        super().__init__(f"replacement not applicable: {reasons}")
        self.report = report


@dataclass(frozen=True)
class ReportLine:
    operation: str
    scheme: str
    reason: str = ""

    def __str__(self) -> str:
        return f"{self.operation}\t{self.scheme}\t{self.reason}".rstrip("\t")


def _params(k: int) -> list:
    return ["x", "y", "z"][:k] if k <= 3 else [f"x{i}" for i in range(1, k + 1)]


def _check_reserved(p: Program) -> None:
    defaults = [op for op in p.operations.values() if op.default_rule is not None]
    if not defaults:
        return
    for builtin in ("isEmpty", "chooseValue"):
        if builtin in p.operations:
            raise ReservedName(f"{builtin} is redefined but is needed to implement default rules")
    for op in defaults:
        for suffix in GENERATED_SUFFIXES:
            if op.name + suffix in p.operations:
                raise ReservedName(f"{op.name}{suffix} is a reserved name (generated for the "
                                   f"default rule of {op.name})")


def _call(name: str, args) -> OpApp:
    return OpApp(name, tuple(args))


def _free_in(rule: Rule) -> tuple:
    """Declared free variables that still occur in the rule."""
    exprs = [rule.rhs] + ([rule.condition] if rule.condition is not None else [])
    used = set(variables(*exprs))
    return tuple(v for v in rule.free_vars if v in used)


def _anonymize_singletons(rule: Rule) -> Rule:
    # free variables used only once carry no information: write them as `_`
    exprs = list(rule.lhs) + [rule.rhs] + ([rule.condition] if rule.condition is not None else [])
    counts = Counter(v for e in exprs for v in iter_vars(e))
    fresh = FreshNames(rule_vars(rule))
    renaming = {v: fresh.wildcard() for v in rule.free_vars
                if counts[v] == 1 and not v.startswith("_")}
    return rename_rule(rule, renaming) if renaming else rule


def _placeholder(name: str, arity: int) -> Rule:
    # an operation without rules still needs a printable definition
    fresh = FreshNames()
    return Rule(name, tuple(Variable(fresh.wildcard()) for _ in range(arity)), Failed())


def _test_rule(name: str, r: Rule, rhs=UNIT) -> Rule:
    t = Rule(name, r.lhs, rhs, r.condition, ())
    return replace(t, free_vars=_free_in(replace(t, free_vars=r.free_vars)))


def _named_default(d: Rule) -> Rule:
    """The default rule with its wildcards turned into named variables."""
    d = replace(desugar_functional_patterns(d), is_default=False)
    fresh = FreshNames(rule_vars(d))
    params = _params(len(d.lhs))
    renaming = {}
    for i, a in enumerate(d.lhs):
        if isinstance(a, Variable) and a.is_wildcard:
            base = params[i]
            renaming[a.name] = base if base not in fresh.used else fresh.name(base)
            fresh.used.add(renaming[a.name])
    for name in variables(*d.lhs):
        if name.startswith("_") and name not in renaming:
            renaming[name] = fresh.name("w")
    return rename_rule(d, renaming) if renaming else d


def _fill_empty(ops: dict) -> None:
    for gen in ops.values():
        if not gen.standard_rules:
            gen.standard_rules.append(_placeholder(gen.name, gen.arity))


def _dispatcher(op: OperationDef, body) -> OperationDef:
    xs = [Variable(v) for v in _params(op.arity)]
    return OperationDef(op.name, op.arity, [Rule(op.name, tuple(xs), body(xs))])


def basic_parts(op: OperationDef) -> dict:
    """The operations emitted by the basic scheme for one operation."""
    f, k = op.name, op.arity
    test = OperationDef(f + TEST, k, [_test_rule(f + TEST, r) for r in op.standard_rules])
    init = OperationDef(f + INIT, k, [replace(r, operation=f + INIT) for r in op.standard_rules])
    d = _named_default(op.default_rule)
    guard = OpApp("isEmpty", (SetApp(f + TEST, d.lhs),))
    dflt_rule = replace(d, operation=f + DFLT, condition=conj(guard, d.condition),
                        from_default=True)
    dflt = OperationDef(f + DFLT, k, [dflt_rule])
    main = _dispatcher(op, lambda xs: OpApp("?", (_call(f + INIT, xs), _call(f + DFLT, xs))))
    parts = {test.name: test, init.name: init, dflt.name: dflt}
    _fill_empty(parts)
    parts[f] = main
    return parts


def cont_parts(op: OperationDef) -> dict:
    """The operations emitted by the continuation scheme for one operation."""
    f, k = op.name, op.arity
    testc = OperationDef(f + TESTC, k, [
        _test_rule(f + TESTC, r, Lambda("_", r.rhs)) for r in op.standard_rules])
    for i, r in enumerate(testc.standard_rules):
        testc.standard_rules[i] = replace(r, free_vars=op.standard_rules[i].free_vars)
    d = op.default_rule
    dflt = OperationDef(f + DFLT, k, [replace(d, operation=f + DFLT, is_default=False,
                                              from_default=True)])

    def body(xs):
        cs = Variable("cs")
        return Let((("cs", SetApp(f + TESTC, tuple(xs))),),
                   IfThenElse(OpApp("isEmpty", (cs,)), _call(f + DFLT, xs),
                              _apply_choice(cs)))

    parts = {testc.name: testc, dflt.name: dflt}
    _fill_empty(parts)
    parts[f] = _dispatcher(op, body)
    return parts


def _apply_choice(cs):
    return Apply(OpApp("chooseValue", (cs,)), (UNIT,))


def _rebuild(p: Program, per_op) -> Program:
    ops = {}
    for name, op in p.operations.items():
        if op.default_rule is None:
            ops[name] = op
        else:
            ops.update(per_op(op))
    return p.with_operations(ops)


def transform_basic(p: Program) -> Program:
    _check_reserved(p)
    return _rebuild(p, basic_parts)


def transform_cont(p: Program) -> Program:
    _check_reserved(p)
    return _rebuild(p, cont_parts)


# ---------------------------------------------------------------------------
# replacement


def replace_default_rule(op: OperationDef, program: Program) -> tuple:
    """Standard rules replacing the default rule of ``op``.

    Returns ``(rules, test_ops)`` where ``test_ops`` are the per-leaf test
    operations needed for conditional standard rules.
    """
    if op.default_rule is None:
        raise NoDefault(f"{op.name} has no default rule")
    rules = [normalize_rule(r) for r in op.standard_rules]
    try:
        tree = build_tree(op.name, op.arity, rules, program)
    except DefTreeError as exc:
        raise InapplicableOverlap(f"{op.name}: standard rules are not inductively "
                                  f"sequential ({exc})") from None
    if has_literal_complement(tree):
        raise InapplicableLiteralComplement(
            f"{op.name}: the definitional tree has a literal complement region "
            f"(literal patterns), which has no constructor pattern")
    leaves = [n for n in nodes(tree) if isinstance(n, RuleNode)]
    if any(len(n.rules) > 1 for n in leaves):
        raise InapplicableOverlap(f"{op.name}: standard rules overlap")

    d = normalize_rule(replace(op.default_rule, is_default=False))
    emitted = []

    def instantiate(pattern, extra_condition=None):
        used = set(variables(*pattern))
        fresh = FreshNames(used | set(rule_vars(d)))
        renaming = {v: fresh.name(v.lstrip("_") or "v") if v in used else v
                    for v in rule_vars(d)}
        dd = rename_rule(d, {k: v for k, v in renaming.items() if k != v})
        sigma = unify_args(dd.lhs, pattern)
        if sigma is None:
            return None
        cond = conj(extra_condition and apply_subst(extra_condition, sigma),
                    dd.condition and apply_subst(dd.condition, sigma))
        return Rule(op.name, tuple(apply_subst(a, sigma) for a in dd.lhs),
                    apply_subst(dd.rhs, sigma), cond, dd.free_vars, from_default=True)

    for pattern in exempt_patterns(tree):
        r = instantiate(pattern)
        if r is not None:
            emitted.append(r)

    conditional = [n.rules[0] for n in leaves if n.rules[0].condition is not None]
    tests = {}
    for i, leaf in enumerate(conditional, start=1):
        name = op.name + TEST if len(conditional) == 1 else f"{op.name}{TEST}{i}"
        test = _anonymize_singletons(_test_rule(name, leaf))
        tests[name] = OperationDef(name, op.arity, [test])
        guard = OpApp("isEmpty", (SetApp(name, leaf.lhs),))
        r = instantiate(leaf.lhs, guard)
        if r is not None:
            emitted.append(r)
    return emitted, tests


def transform_replace_with_report(p: Program, fallback: bool = False) -> tuple:
    _check_reserved(p)
    ops, report, failed = {}, [], False
    for name, op in p.operations.items():
        if op.default_rule is None:
            ops[name] = op
            continue
        try:
            rules, tests = replace_default_rule(op, p)
        except (InapplicableLiteralComplement, InapplicableOverlap) as exc:
            if not fallback:
                failed = True
                report.append(ReportLine(name, "none", str(exc)))
                continue
            report.append(ReportLine(name, "basic", str(exc)))
            ops.update(basic_parts(op))
            continue
        ops.update(tests)
        ops[name] = OperationDef(name, op.arity, list(op.standard_rules) + rules)
        report.append(ReportLine(name, "replace"))
    if failed:
        raise ReplacementError(report)
    return p.with_operations(ops), report


def transform_replace(p: Program, fallback: bool = False) -> Program:
    return transform_replace_with_report(p, fallback)[0]


def transform(p: Program, scheme: str = "basic", fallback: bool = False) -> Program:
    if scheme == "basic":
        return transform_basic(p)
    if scheme == "cont":
        return transform_cont(p)
    if scheme == "replace":
        return transform_replace(p, fallback)
    raise ValueError(f"unknown scheme {scheme!r}")


def strip_defaults(p: Program) -> Program:
    """The program with every default rule deleted."""
    ops = {n: OperationDef(n, op.arity, list(op.standard_rules)) for n, op in p.operations.items()}
    return p.with_operations(ops)


def count_set_apps(p: Program) -> int:
    def walk(e):
        return (1 if isinstance(e, SetApp) else 0) + sum(walk(c) for c in children(e))

    total = 0
    for op in p.operations.values():
        for r in op.rules:
            total += sum(walk(e) for e in r.lhs) + walk(r.rhs)
            if r.condition is not None:
                total += walk(r.condition)
    return total


__all__ = [
    "transform_basic", "transform_cont", "transform_replace", "transform_replace_with_report",
    "replace_default_rule", "transform", "strip_defaults", "count_set_apps", "ReportLine",
    "TransformError", "ReservedName", "InapplicableLiteralComplement", "InapplicableOverlap",
    "NoDefault", "ReplacementError", "SCHEMES",
]
