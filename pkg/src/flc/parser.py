"""Concrete syntax: tokenizer, declaration parser and name resolution.

Layout is line based: a declaration starts in the first column and every
indented line continues the previous declaration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .core import (
    Apply, CharLit, ConApp, ConDecl, DataDecl, Expr, Failed, FreshNames, IfThenElse,
    IntLit, Lambda, Let, NIL, OpApp, OperationDef, Program, Rule, SetApp, Variable,
    make_list, make_string, make_tuple, variables,
)
from .prelude import BUILTINS


class ParseError(Exception):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# precedence and associativity of the infix operators
OPERATORS = {
    "?": (0, "right"),
    "||": (2, "right"),
    "&&": (3, "right"),
    "==": (4, "none"),
    "/=": (4, "none"),
    "<": (4, "none"),
    "<=": (4, "none"),
    ">": (4, "none"),
    ">=": (4, "none"),
    ":": (5, "right"),
    "++": (5, "right"),
    "+": (6, "left"),
    "-": (6, "left"),
    "*": (7, "left"),
    "`div`": (7, "left"),
    "`mod`": (7, "left"),
}

KEYWORDS = {"data", "where", "free", "let", "in", "if", "then", "else"}
DEFAULT_SUFFIX = "'default"
SET_SUFFIX = "'S"

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>--[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<char>'(?:\\.|[^'\\\n])')
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<name>[A-Za-z][A-Za-z0-9_]*(?:'[A-Za-z0-9_]*)*)
  | (?P<wild>_(?![A-Za-z0-9_']))
  | (?P<tick>`[a-z][A-Za-z0-9_]*`)
  | (?P<sym>[-+*/<>=&|?:!.$%^~@\#]+)
  | (?P<punct>[()\[\],;\\])
""", re.VERBOSE)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"', "0": "\0"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def _unescape(body: str) -> str:
    out, i = [], 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def tokenize(text: str) -> list:
    tokens, pos, line, line_start = [], 0, 1, 0
    text = re.sub(r"\{-.*?-\}", lambda m: re.sub(r"[^\n]", " ", m.group(0)), text, flags=re.S)
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(0), line, pos - line_start + 1))
        pos = m.end()
    return tokens


def _split_declarations(tokens: list) -> list:
    decls = []
    for tok in tokens:
        if tok.col == 1 or not decls:
            decls.append([])
        decls[-1].append(tok)
    return decls


# ---------------------------------------------------------------------------
# raw syntax trees: tuples ``(kind, pos, *fields)``


class _Parser:
    STOP = {"=", "|", "->", ")", "]", ",", ";"}

    def __init__(self, tokens: list, end_pos: tuple):
        self.toks = tokens
        self.i = 0
        self.end_pos = end_pos

    # -- token helpers

    def peek(self, offset: int = 0) -> Optional[Token]:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def pos(self) -> tuple:
        tok = self.peek()
        return (tok.line, tok.col) if tok else self.end_pos

    def error(self, message: str, pos: Optional[tuple] = None):
        line, col = pos or self.pos()
        raise ParseError(message, line, col)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text and tok.kind != "string"

    def expect(self, text: str) -> Token:
        if not self.at(text):
            tok = self.peek()
            found = repr(tok.text) if tok else "end of input"
            self.error(f"expected {text!r}, found {found}")
        return self.next()

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    # -- expressions

    def starts_atom(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind in ("int", "char", "string", "wild"):
            return True
        if tok.kind == "name":
            return tok.text not in KEYWORDS
        return tok.text in ("(", "[")

    def expr(self) -> tuple:
        return self.op_expr(0)

    def operand(self) -> tuple:
        tok = self.peek()
        if tok is None:
            self.error("expected expression")
        if tok.text == "\\":
            return self.lambda_()
        if tok.kind == "name" and tok.text == "let":
            return self.let_()
        if tok.kind == "name" and tok.text == "if":
            return self.if_()
        if tok.kind == "sym" and tok.text == "-":
            pos = self.pos()
            self.next()
            return ("neg", pos, self.application())
        return self.application()

    def op_expr(self, min_prec: int) -> tuple:
        lhs = self.operand()
        while True:
            tok = self.peek()
            if tok is None or tok.kind not in ("sym", "tick"):
                break
            if tok.text in self.STOP:
                break
            if tok.text not in OPERATORS:
                self.error(f"unknown operator {tok.text!r}")
            prec, assoc = OPERATORS[tok.text]
            if prec < min_prec:
                break
            self.next()
            if self.peek() is None or not (self.starts_atom() or self.peek().text in ("\\", "-", "let", "if")):
                self.error(f"expected expression after {tok.text!r}", (tok.line, tok.col))
            rhs = self.op_expr(prec if assoc == "right" else prec + 1)
            op = tok.text.strip("`")
            lhs = ("bin", (tok.line, tok.col), op, lhs, rhs)
            if assoc == "none":
                nxt = self.peek()
                if nxt is not None and nxt.text in OPERATORS and OPERATORS[nxt.text][0] == prec:
                    self.error(f"non-associative operator {nxt.text!r} cannot be chained")
        return lhs

    def application(self) -> tuple:
        pos = self.pos()
        head = self.atom()
        args = []
        while self.starts_atom():
            args.append(self.atom())
        if args:
            return ("app", pos, head, args)
        return head

    def atom(self) -> tuple:
        tok = self.peek()
        if tok is None:
            self.error("expected expression")
        pos = (tok.line, tok.col)
        if tok.kind == "int":
            self.next()
            return ("int", pos, int(tok.text))
        if tok.kind == "char":
            self.next()
            return ("char", pos, _unescape(tok.text[1:-1]))
        if tok.kind == "string":
            self.next()
            return ("str", pos, _unescape(tok.text[1:-1]))
        if tok.kind == "wild":
            self.next()
            return ("wild", pos)
        if tok.kind == "name" and tok.text not in KEYWORDS:
            self.next()
            return ("name", pos, tok.text)
        if tok.text == "(":
            self.next()
            if self.at(")"):
                self.next()
                return ("tuple", pos, [])
            nxt = self.peek()
            if nxt is not None and nxt.kind in ("sym", "tick") and nxt.text in OPERATORS \
                    and self.peek(1) is not None and self.peek(1).text == ")":
                self.next()
                self.next()
                return ("opref", pos, nxt.text.strip("`"))
            items = [self.expr()]
            while self.at(","):
                self.next()
                items.append(self.expr())
            self.expect(")")
            if len(items) == 1:
                return ("paren", pos, items[0])
            return ("tuple", pos, items)
        if tok.text == "[":
            self.next()
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.at(","):
                    self.next()
                    items.append(self.expr())
            self.expect("]")
            return ("list", pos, items)
        self.error(f"unexpected {tok.text!r}")

    def lambda_(self) -> tuple:
        pos = self.pos()
        self.expect("\\")
        tok = self.next()
        if tok.kind == "wild":
            param = "_"
        elif tok.kind == "name" and tok.text[0].islower() and tok.text not in KEYWORDS:
            param = tok.text
        else:
            self.error("expected lambda parameter", (tok.line, tok.col))
        self.expect("->")
        return ("lam", pos, param, self.expr())

    def let_(self) -> tuple:
        pos = self.pos()
        self.next()
        binds = []
        while True:
            tok = self.next()
            if tok.kind != "name" or not tok.text[0].islower() or tok.text in KEYWORDS:
                self.error("expected binding name", (tok.line, tok.col))
            self.expect("=")
            binds.append((tok.text, self.expr(), (tok.line, tok.col)))
            if self.at(";"):
                self.next()
                continue
            break
        self.expect("in")
        return ("let", pos, binds, self.expr())

    def if_(self) -> tuple:
        pos = self.pos()
        self.next()
        cond = self.expr()
        self.expect("then")
        then = self.expr()
        self.expect("else")
        return ("if", pos, cond, then, self.expr())


# ---------------------------------------------------------------------------
# declarations


def _split_top(tokens: list, sep: str) -> list:
    parts, depth, cur = [], 0, []
    for tok in tokens:
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
        if depth == 0 and tok.text == sep and tok.kind == "sym":
            parts.append(cur)
            cur = []
        else:
            cur.append(tok)
    parts.append(cur)
    return parts


def _group_text(tokens: list) -> list:
    groups, depth, cur = [], 0, []
    for tok in tokens:
        cur.append(tok.text)
        if tok.text in ("(", "["):
            depth += 1
        elif tok.text in (")", "]"):
            depth -= 1
        if depth == 0:
            groups.append(" ".join(cur).replace("( ", "(").replace(" )", ")")
                          .replace("[ ", "[").replace(" ]", "]"))
            cur = []
    return groups


def _parse_data(tokens: list) -> DataDecl:
    head = _split_top(tokens[1:], "=")
    if len(head) != 2 or not head[0]:
        tok = tokens[0]
        raise ParseError("malformed data declaration", tok.line, tok.col)
    name_tok = head[0][0]
    if name_tok.kind != "name" or not name_tok.text[0].isupper():
        raise ParseError("expected type name", name_tok.line, name_tok.col)
    params = tuple(t.text for t in head[0][1:])
    cons = []
    for alt in _split_top(head[1], "|"):
        if not alt or alt[0].kind != "name" or not alt[0].text[0].isupper():
            tok = alt[0] if alt else tokens[0]
            raise ParseError("expected constructor name", tok.line, tok.col)
        cons.append(ConDecl(alt[0].text, tuple(_group_text(alt[1:]))))
    return DataDecl(name_tok.text, params, tuple(cons))


@dataclass
class _RawRule:
    name: str
    is_default: bool
    args: list
    cond: Optional[tuple]
    rhs: tuple
    free: list
    pos: tuple


def _split_rule_name(name: str) -> tuple:
    if name.endswith(DEFAULT_SUFFIX):
        return name[: -len(DEFAULT_SUFFIX)], True
    return name, False


def _parse_rule(tokens: list, end_pos: tuple) -> _RawRule:
    p = _Parser(tokens, end_pos)
    start = p.pos()
    lhs = p.expr()
    cond = None
    if p.at("|"):
        p.next()
        cond = p.expr()
    p.expect("=")
    rhs = p.expr()
    free = []
    if p.at("where"):
        p.next()
        while True:
            tok = p.next()
            if tok.kind != "name" or not tok.text[0].islower() or tok.text in KEYWORDS:
                p.error("expected free variable name", (tok.line, tok.col))
            free.append(tok.text)
            if p.at(","):
                p.next()
                continue
            break
        p.expect("free")
    if not p.at_end():
        p.error(f"unexpected {p.peek().text!r}")

    if lhs[0] == "paren":
        lhs = lhs[2]
    if lhs[0] == "bin" and lhs[2] != ":":
        name, args = lhs[2], [lhs[3], lhs[4]]
    elif lhs[0] == "app" and lhs[2][0] == "name" and lhs[2][2][0].islower():
        name, args = lhs[2][2], lhs[3]
    elif lhs[0] == "app" and lhs[2][0] == "opref":
        name, args = lhs[2][2], lhs[3]
    elif lhs[0] == "name" and lhs[2][0].islower():
        name, args = lhs[2], []
    elif lhs[0] == "opref":
        name, args = lhs[2], []
    else:
        raise ParseError("invalid rule head", *start)
    name, is_default = _split_rule_name(name)
    return _RawRule(name, is_default, args, cond, rhs, free, start)


# ---------------------------------------------------------------------------
# name resolution


class _Resolver:
    def __init__(self, program: Program, arities: dict, goal: bool = False):
        self.program = program
        self.arities = arities
        self.goal = goal
        self.fresh = FreshNames()
        self.anonymous = []   # fresh free variables introduced by `_` in expressions
        self.goal_vars = []

    def arity(self, name: str) -> Optional[int]:
        return self.arities.get(name)

    def con_arity(self, name: str, pos: tuple) -> int:
        info = self.program.constructor_info(name)
        if info is None:
            raise ParseError(f"unknown constructor {name}", *pos)
        return info[1]

    def make_con(self, name: str, args: list, pos: tuple) -> Expr:
        arity = self.con_arity(name, pos)
        if len(args) != arity:
            raise ParseError(f"arity mismatch: constructor {name} expects {arity} "
                             f"argument(s), got {len(args)}", *pos)
        return ConApp(name, tuple(args))

    def saturate(self, name: str, args: list, pos: tuple) -> Expr:
        arity = self.arity(name)
        if len(args) <= arity:
            return OpApp(name, tuple(args))
        return Apply(OpApp(name, tuple(args[:arity])), tuple(args[arity:]))

    def literal(self, raw: tuple, rec) -> Optional[Expr]:
        kind = raw[0]
        if kind == "int":
            return IntLit(raw[2])
        if kind == "char":
            return CharLit(raw[2])
        if kind == "str":
            return make_string(raw[2])
        if kind == "list":
            return make_list(rec(x) for x in raw[2])
        if kind == "tuple":
            return make_tuple(rec(x) for x in raw[2])
        if kind == "paren":
            return rec(raw[2])
        if kind == "neg":
            inner = raw[2]
            if inner[0] == "int":
                return IntLit(-inner[2])
            return None
        return None

    # -- patterns

    def pattern(self, raw: tuple) -> Expr:
        kind, pos = raw[0], raw[1]
        lit = self.literal(raw, self.pattern)
        if lit is not None:
            return lit
        if kind == "wild":
            return Variable(self.fresh.wildcard())
        if kind == "name":
            name = raw[2]
            if name[0].isupper():
                return self.make_con(name, [], pos)
            self.fresh.used.add(name)
            return Variable(name)
        if kind == "app" and raw[2][0] == "name":
            name = raw[2][2]
            args = [self.pattern(a) for a in raw[3]]
            if name[0].isupper():
                return self.make_con(name, args, pos)
            if self.arity(name) is None:
                raise ParseError(f"unknown operation {name} in functional pattern", *pos)
            return self.saturate(name, args, pos)
        if kind == "bin":
            op, l, r = raw[2], self.pattern(raw[3]), self.pattern(raw[4])
            if op == ":":
                return ConApp(":", (l, r))
            if self.arity(op) is None:
                raise ParseError(f"unknown operator {op}", *pos)
            return OpApp(op, (l, r))
        raise ParseError("invalid pattern", *pos)

    # -- expressions

    def expr(self, raw: tuple, scope: frozenset) -> Expr:
        kind, pos = raw[0], raw[1]
        lit = self.literal(raw, lambda x: self.expr(x, scope))
        if lit is not None:
            return lit
        if kind == "neg":
            return OpApp("-", (IntLit(0), self.expr(raw[2], scope)))
        if kind == "wild":
            name = self.fresh.wildcard()
            self.anonymous.append(name)
            return Variable(name)
        if kind == "name":
            return self.name(raw[2], [], scope, pos)
        if kind == "opref":
            return self.name(raw[2], [], scope, pos)
        if kind == "app":
            args = [self.expr(a, scope) for a in raw[3]]
            head = raw[2]
            if head[0] in ("name", "opref"):
                return self.name(head[2], args, scope, pos)
            return Apply(self.expr(head, scope), tuple(args))
        if kind == "bin":
            op = raw[2]
            l, r = self.expr(raw[3], scope), self.expr(raw[4], scope)
            if op == ":":
                return ConApp(":", (l, r))
            return self.name(op, [l, r], scope, pos)
        if kind == "lam":
            param = raw[2]
            if param == "_":
                param = self.fresh.wildcard()
            return Lambda(param, self.expr(raw[3], scope | {param}))
        if kind == "let":
            binds = []
            for name, b, bpos in raw[2]:
                binds.append((name, self.expr(b, scope)))
            names = frozenset(n for n, _ in binds)
            return Let(tuple(binds), self.expr(raw[3], scope | names))
        if kind == "if":
            return IfThenElse(self.expr(raw[2], scope), self.expr(raw[3], scope),
                              self.expr(raw[4], scope))
        raise ParseError(f"unexpected {kind}", *pos)

    def name(self, name: str, args: list, scope: frozenset, pos: tuple) -> Expr:
        if name in scope:
            var = Variable(name)
            return Apply(var, tuple(args)) if args else var
        if name[0].isupper():
            return self.make_con(name, args, pos)
        if name == "failed":
            if args:
                raise ParseError("failed takes no arguments", *pos)
            return Failed()
        if name.endswith(SET_SUFFIX) and self.arity(name[: -len(SET_SUFFIX)]) is not None:
            base = name[: -len(SET_SUFFIX)]
            arity = self.arity(base)
            if len(args) < arity:
                raise ParseError(f"set function {name} must be applied to {arity} argument(s)", *pos)
            call = SetApp(base, tuple(args[:arity]))
            return Apply(call, tuple(args[arity:])) if len(args) > arity else call
        if self.arity(name) is not None:
            return self.saturate(name, args, pos)
        if self.goal and name[0].islower() and "'" not in name:
            if name not in self.goal_vars:
                self.goal_vars.append(name)
            var = Variable(name)
            return Apply(var, tuple(args)) if args else var
        raise ParseError(f"unbound variable or unknown operation {name}", *pos)


def _arity_table(program: Program) -> dict:
    table = dict(BUILTINS)
    for name, op in program.all_operations().items():
        table[name] = op.arity
    return table


def parse_program(text: str, use_prelude: bool = True) -> Program:
    """Parse source text into a :class:`Program`."""
    from .prelude import prelude

    tokens = tokenize(text)
    lines = text.split("\n")
    end_pos = (len(lines), len(lines[-1]) + 1 if lines[-1] else 1)
    if lines and not lines[-1] and len(lines) > 1:
        end_pos = (len(lines) - 1, len(lines[-2]) + 1)
    program = Program(prelude=prelude() if use_prelude else None)
    raw_rules = []
    for decl in _split_declarations(tokens):
        first = decl[0]
        if first.kind == "name" and first.text == "data":
            program.data_decls.append(_parse_data(decl))
            continue
        if first.kind == "name" and first.text in ("infixl", "infixr", "infix", "type",
                                                   "import", "module"):
            continue
        if any(t.text == "::" for t in _split_top(decl, "=")[0]) and not any(
                t.text == "=" for t in decl if t.kind == "sym"):
            continue  # type signature
        if any(t.text == "::" for t in decl) and _is_signature(decl):
            continue
        last = decl[-1]
        raw_rules.append(_parse_rule(decl, (last.line, last.col + len(last.text))))
    program.invalidate()

    seen = set()
    for decl in program.all_data_decls():
        for c in decl.constructors:
            if c.name in seen and decl in program.data_decls:
                raise ParseError(f"duplicate constructor {c.name}")
            seen.add(c.name)

    arities = _arity_table(program.prelude) if program.prelude else dict(BUILTINS)
    own = {}
    for r in raw_rules:
        prev = own.get(r.name)
        if prev is not None and prev != len(r.args):
            raise ParseError(f"arity mismatch: {r.name} defined with {prev} and "
                             f"{len(r.args)} argument(s)", *r.pos)
        own[r.name] = len(r.args)
    arities.update(own)

    for r in raw_rules:
        resolver = _Resolver(program, arities)
        lhs = tuple(resolver.pattern(a) for a in r.args)
        pattern_vars = variables(*lhs)
        scope = frozenset(pattern_vars) | frozenset(r.free)
        resolver.fresh.used.update(r.free)
        cond = resolver.expr(r.cond, scope) if r.cond is not None else None
        rhs = resolver.expr(r.rhs, scope)
        rule = Rule(r.name, lhs, rhs, cond, tuple(r.free) + tuple(resolver.anonymous),
                    is_default=r.is_default)
        op = program.operations.get(r.name)
        if op is None:
            op = program.operations[r.name] = OperationDef(r.name, len(r.args))
        if r.is_default:
            if op.default_rule is not None:
                raise ParseError(f"duplicate default rule for {r.name}", *r.pos)
            op.default_rule = rule
        else:
            op.standard_rules.append(rule)
    return program


def _is_signature(decl: list) -> bool:
    for t in decl:
        if t.kind == "sym" and t.text == "=":
            return False
        if t.text == "::":
            return True
    return False


def parse_expr(text: str, program: Optional[Program] = None) -> Expr:
    """Parse a goal expression; unknown lowercase names become free variables."""
    from .prelude import prelude

    if program is None:
        program = Program(prelude=prelude())
    tokens = tokenize(text)
    end = (1, len(text) + 1)
    if tokens:
        last = tokens[-1]
        end = (last.line, last.col + len(last.text))
    p = _Parser(tokens, end)
    raw = p.expr()
    if not p.at_end():
        p.error(f"unexpected {p.peek().text!r}")
    resolver = _Resolver(program, _arity_table(program), goal=True)
    return resolver.expr(raw, frozenset())


def goal_variables(goal: Expr) -> list:
    """Free variables of a goal in order of first occurrence."""
    return variables(goal)


from .pretty import pretty_print, print_expr, print_rule  # noqa: E402,F401
