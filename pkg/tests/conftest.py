import itertools

import pytest

from flc import parse_program
from flc.cli import CORPUS_DIR
from flc.evaluator import EvalConfig, evaluate
from flc.transform import strip_defaults, transform


def corpus(name):
    return parse_program((CORPUS_DIR / f"{name}.flc").read_text())


def run(program, goal, scheme="basic", **cfg):
    cfg.setdefault("max_total_steps", 3_000_000)
    if scheme == "none":
        q = strip_defaults(program)
    elif scheme is None:
        q = program
    else:
        q = transform(program, scheme, fallback=True)
    return evaluate(q, goal, EvalConfig(**cfg))


def values(program, goal, scheme="basic", **cfg):
    r = run(program, goal, scheme, **cfg)
    assert r.exhausted, f"{goal} under {scheme} was cut"
    return r.canonical()


def ground_lists(elements, max_len):
    for n in range(max_len + 1):
        yield from (list(t) for t in itertools.product(elements, repeat=n))


@pytest.fixture
def load():
    return corpus


# ground argument tuples for the brute-force oracles: lists up to length 3
# over {0,1,2}, booleans, and lists of optional values
def _int_lists():
    from flc.core import IntLit, make_list

    return [make_list([IntLit(i) for i in xs]) for xs in ground_lists((0, 1, 2), 3)]


def _maybe_lists():
    from flc.core import ConApp, IntLit, make_list

    items = [ConApp("Nothing", ())] + [ConApp("Just", (IntLit(i),)) for i in (0, 1, 2)]
    return [make_list(xs) for xs in ground_lists(items, 3)]


def _bools():
    from flc.core import FALSE, TRUE

    return [TRUE, FALSE]


ORACLE_OPS = {
    "++": ("append", lambda: itertools.product(_int_lists(), _int_lists())),
    "zip": ("zip", lambda: itertools.product(_int_lists(), _int_lists())),
    "and": ("and", lambda: itertools.product(_bools(), _bools())),
    "last": ("last", lambda: ((xs,) for xs in _int_lists())),
    "catMaybes": ("catmaybes", lambda: ((xs,) for xs in _maybe_lists())),
}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
