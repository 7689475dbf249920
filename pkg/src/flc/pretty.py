"""Pretty printer producing re-parsable surface syntax."""

from __future__ import annotations

from collections import Counter

from .core import (
    Apply, CharLit, Closure, ConApp, Expr, Failed, FreshNames, IfThenElse, IntLit, Lambda,
    Let, OpApp, Program, Rule, SetApp, SetValue, Variable, iter_vars, rename_rule, rule_vars,
)

_INFIX = {
    "?": (0, "right"), "||": (2, "right"), "&&": (3, "right"),
    "==": (4, "none"), "/=": (4, "none"), "<": (4, "none"), "<=": (4, "none"),
    ">": (4, "none"), ">=": (4, "none"),
    ":": (5, "right"), "++": (5, "right"),
    "+": (6, "left"), "-": (6, "left"), "*": (7, "left"),
}
_APP = 10
_ATOM = 11
_CHAR_ESCAPES = {"\n": "\\n", "\t": "\\t", "\\": "\\\\", "\0": "\\0"}


def _is_symbolic(name: str) -> bool:
    return not name[0].isalpha() and name[0] != "_"


def _list_items(e: ConApp):
    items = []
    while isinstance(e, ConApp) and e.constructor == ":":
        items.append(e.args[0])
        e = e.args[1]
    if isinstance(e, ConApp) and e.constructor == "[]":
        return items
    return None


def _char(c: str, quote: str) -> str:
    if c == quote:
        return "\\" + c
    return _CHAR_ESCAPES.get(c, c)


def _paren(text: str, needed: bool) -> str:
    return f"({text})" if needed else text


def print_expr(e: Expr, prec: int = 0) -> str:
    """Render an expression; ``prec`` is the binding strength of the context."""
    if isinstance(e, Variable):
        # generated wildcards print as `_`; unbound variables of answers keep `_a` names
        return "_" if e.is_wildcard and not e.name[1:].isalpha() else e.name
    if isinstance(e, IntLit):
        # `x:-1` would lex as one operator
        return _paren(str(e.value), e.value < 0 and prec > 4)
    if isinstance(e, CharLit):
        return "'" + _char(e.value, "'") + "'"
    if isinstance(e, Failed):
        return "failed"
    if isinstance(e, Closure):
        return e.text
    if isinstance(e, SetValue):
        return "{" + ",".join(print_expr(x) for x in e.elements) + "}"
    if isinstance(e, ConApp):
        return _print_con(e, prec)
    if isinstance(e, OpApp):
        return _print_call(e.operation, e.args, prec)
    if isinstance(e, SetApp):
        return _print_call(e.operation + "'S", e.args, prec, symbolic_ok=False)
    if isinstance(e, Apply):
        fn = e.fn
        if isinstance(fn, (OpApp, SetApp, ConApp)) and fn.args or isinstance(fn, Apply):
            head = f"({print_expr(fn)})"
        else:
            head = print_expr(fn, _ATOM)
        args = " ".join(print_expr(a, _ATOM) for a in e.args)
        return _paren(f"{head} {args}", prec > _APP)
    if isinstance(e, Lambda):
        param = "_" if e.param.startswith("_") else e.param
        return _paren(f"\\{param} -> {print_expr(e.body)}", prec > 0)
    if isinstance(e, Let):
        binds = "; ".join(f"{n} = {print_expr(b)}" for n, b in e.bindings)
        return _paren(f"let {binds} in {print_expr(e.body)}", prec > 0)
    if isinstance(e, IfThenElse):
        text = (f"if {print_expr(e.cond)} then {print_expr(e.then)} "
                f"else {print_expr(e.else_)}")
        return _paren(text, prec > 0)
    raise TypeError(f"cannot print {e!r}")


def _print_con(e: ConApp, prec: int) -> str:
    name = e.constructor
    if name == ":":
        items = _list_items(e)
        if items is not None:
            if items and all(isinstance(x, CharLit) for x in items):
                return '"' + "".join(_char(x.value, '"') for x in items) + '"'
            return "[" + ",".join(print_expr(x) for x in items) + "]"
        p = _INFIX[":"][0]
        return _paren(f"{print_expr(e.args[0], p + 1)}:{print_expr(e.args[1], p)}", prec > p)
    if name.startswith("(,"):
        return "(" + ",".join(print_expr(x) for x in e.args) + ")"
    if not e.args:
        return name
    args = " ".join(print_expr(a, _ATOM) for a in e.args)
    return _paren(f"{name} {args}", prec > _APP)


def _print_infix(op: str, lhs: Expr, rhs: Expr, prec: int) -> str:
    p, assoc = _INFIX[op]
    lp = p if assoc == "left" else p + 1
    rp = p if assoc == "right" else p + 1
    text = f"{print_expr(lhs, lp)} {op} {print_expr(rhs, rp)}"
    return _paren(text, prec > p)


def _print_call(name: str, args: tuple, prec: int, symbolic_ok: bool = True) -> str:
    if symbolic_ok and name in _INFIX and len(args) == 2:
        return _print_infix(name, args[0], args[1], prec)
    head = f"({name})" if _is_symbolic(name) else name
    if not args:
        return head
    text = head + " " + " ".join(print_expr(a, _ATOM) for a in args)
    return _paren(text, prec > _APP)


def _name_shared_wildcards(rule: Rule) -> Rule:
    # a wildcard-named variable that occurs more than once must get a real name
    exprs = list(rule.lhs) + ([rule.condition] if rule.condition is not None else []) + [rule.rhs]
    counts = Counter(v for e in exprs for v in iter_vars(e))
    shared = [v for v, n in counts.items() if v.startswith("_") and n > 1]
    if not shared:
        return rule
    fresh = FreshNames(rule_vars(rule))
    renaming = {v: fresh.name("w") for v in shared}

    return rename_rule(rule, renaming)


def print_lhs(operation: str, args: tuple, is_default: bool = False) -> str:
    """Render a rule head ``f p1 ... pn`` (infix for binary operators)."""
    if _is_symbolic(operation) and len(args) == 2 and not is_default:
        p = _INFIX.get(operation, (9, "none"))[0]
        return f"{print_expr(args[0], p + 1)} {operation} {print_expr(args[1], p + 1)}"
    name = f"({operation})" if _is_symbolic(operation) else operation
    if is_default:
        name += "'default"
    return " ".join([name] + [print_expr(a, _ATOM) for a in args])


def print_rule(rule: Rule) -> str:
    rule = _name_shared_wildcards(rule)
    text = print_lhs(rule.operation, rule.lhs, rule.is_default)
    if rule.condition is not None:
        text += f" | {print_expr(rule.condition)}"
    text += f" = {print_expr(rule.rhs)}"
    free = [v for v in rule.free_vars if not v.startswith("_")]
    if free:
        text += " where " + ", ".join(free) + " free"
    return text


def pretty_print(program: Program) -> str:
    """Render the program's own data declarations and operations."""
    blocks = []
    for decl in program.data_decls:
        alts = " | ".join(" ".join((c.name,) + tuple(c.arg_types)) for c in decl.constructors)
        head = " ".join((decl.name,) + tuple(decl.params))
        blocks.append(f"data {head} = {alts}")
    for op in program.operations.values():
        lines = [print_rule(r) for r in op.rules]
        if lines:
            blocks.append("\n".join(lines))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


__all__ = ["print_expr", "print_lhs", "print_rule", "pretty_print"]
