"""The standard prelude and the table of primitive operations."""

from __future__ import annotations

from functools import lru_cache

# primitive operations implemented directly by the evaluator, with arities
BUILTINS = {
    "==": 2,
    "+": 2,
    "-": 2,
    "*": 2,
    "<": 2,
    "<=": 2,
    ">": 2,
    ">=": 2,
    "div": 2,
    "mod": 2,
    "abs": 1,
    "isDigit": 1,
    "isEmpty": 1,
    "chooseValue": 1,
}

# names the transformations emit and therefore rely on
TRANSFORM_BUILTINS = ("isEmpty", "chooseValue", "&&", "?")

PRELUDE_SOURCE = """\
data Bool = True | False
data Maybe a = Nothing | Just a

x ? _ = x
_ ? y = y

True && x = x
False && _ = False

True || _ = True
False || x = x

not True = False
not False = True

x /= y = not (x == y)

[] ++ ys = ys
(x:xs) ++ ys = x : (xs ++ ys)

length [] = 0
length (_:xs) = 1 + length xs

all _ [] = True
all p (x:xs) = p x && all p xs

map _ [] = []
map f (x:xs) = f x : map f xs

null [] = True
null (_:_) = False

head (x:_) = x
tail (_:xs) = xs

id x = x
"""


@lru_cache(maxsize=1)
def prelude():
    from .parser import parse_program

    return parse_program(PRELUDE_SOURCE, use_prelude=False)
