from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from flc import parse_program
from flc.core import FALSE, TRUE, UNIT, IntLit, OpApp, Variable, make_tuple
from flc.evaluator import (
    EvalConfig, EvalError, UnboundedGenerator, builtin_equal, eval_set_function, evaluate,
    instantiate_free_variable,
)
from flc.transform import transform

from conftest import corpus, run, values

BASE = parse_program("""
decOrInc x = (x-1) ? (x+1)
pair x = (x,x)
loop = loop
g x = failed
nonBool x | 1 = x
inf = 1 : inf
data Color = Red | Green
colour = Red ? Green
coin = 0 ? 1
twice x = x + x
""")


def ev(goal, program=BASE, **cfg):
    cfg.setdefault("max_total_steps", 200_000)
    return evaluate(program, goal, EvalConfig(**cfg))


def test_call_time_choice():
    assert ev("pair (0?1)").canonical() == ["(0,0)", "(1,1)"]
    assert ev("twice coin").canonical() == ["0", "2"]


def test_bfs_is_fair():
    r = ev("(0 ? loop) ? 1")
    assert r.canonical() == ["0", "1"]
    assert not r.exhausted


def test_dfs_strategy_finds_values():
    assert ev("decOrInc 3", strategy="dfs").canonical() == ["2", "4"]


def test_set_function_collects_inner_choices():
    assert ev("decOrInc'S 3").canonical() == ["{2,4}"]


def test_set_function_does_not_encapsulate_arguments():
    assert ev("decOrInc'S (2?5)").canonical() == ["{1,3}", "{4,6}"]


def test_outer_failure_propagates_out_of_a_set():
    r = ev("isEmpty (decOrInc'S failed)")
    assert r.answers == [] and r.exhausted


def test_inner_failure_gives_an_empty_set():
    assert ev("isEmpty (g'S 1)").canonical() == ["True"]


def test_choose_value_enumerates_the_multiset():
    assert ev("chooseValue (decOrInc'S 3)").canonical() == ["2", "4"]


def test_set_of_constructors():
    assert ev("colour'S").canonical() == ["{Green,Red}"]


def test_undecidable_emptiness_is_a_cut_not_empty():
    r = ev("isEmpty (loop'S)", set_budget=5_000)
    assert r.answers == []
    assert r.cut and not r.exhausted


def test_step_limit_cuts_an_alternative():
    r = ev("length inf", step_limit=1_000)
    assert r.answers == [] and r.cut


def test_condition_must_be_boolean():
    with pytest.raises(EvalError, match="Boolean"):
        ev("nonBool 2")


def test_integer_variable_needs_a_range():
    with pytest.raises(UnboundedGenerator):
        ev("x + 1 == 3")
    r = ev("x + 1 == 3", int_range=(0, 4))
    assert [a.text for a in r.answers if a.value_text == "True"] == ["{x=2} True"]


def test_narrowing_boolean_variables():
    assert ev("not x").canonical() == ["{x=False} True", "{x=True} False"]


def test_unbound_variables_are_shared_in_answers():
    assert ev("(x,y,x)").canonical() == ["{x=_a, y=_b} (_a,_b,_a)"]


def test_strict_equality():
    assert ev("[1,1] == [1,1]").canonical() == ["True"]
    assert ev("[1] == [1,2]").canonical() == ["False"]
    assert ev("(2,v) == (2,14)").canonical() == ["{v=14} True"]
    assert ev("x == ()").canonical() == ["{x=()} True"]


def test_builtin_equal_function():
    alts = builtin_equal(make_tuple([IntLit(2), Variable("v")]),
                         make_tuple([IntLit(2), IntLit(14)]), BASE)
    assert alts == [(TRUE, {"v": IntLit(14)})]


def test_instantiate_free_variable():
    assert instantiate_free_variable("v", "Bool", BASE) == [({"v": TRUE}, TRUE),
                                                           ({"v": FALSE}, FALSE)]
    alts = instantiate_free_variable("v", "[]", BASE)
    assert [s["v"].constructor for s, _ in alts] == ["[]", ":"]
    w, ws = alts[1][1].args
    assert isinstance(w, Variable) and isinstance(ws, Variable) and w != ws
    with pytest.raises(UnboundedGenerator):
        instantiate_free_variable("v", "Int", BASE)
    ints = instantiate_free_variable("v", "Int", BASE, EvalConfig(int_range=(1, 3)))
    assert [e for _, e in ints] == [IntLit(1), IntLit(2), IntLit(3)]


def test_eval_set_function_per_argument_alternative():
    sets = eval_set_function("decOrInc", [OpApp("?", (IntLit(2), IntLit(5)))], BASE)
    assert [s.texts() for s in sets] == [["1", "3"], ["4", "6"]]


def test_test_set_decided_by_second_argument_only():
    q = transform(corpus("f"), "basic")
    sets = eval_set_function("f'TEST", [OpApp("loop", ()), IntLit(2)], q)
    assert [s.elements for s in sets] == [(UNIT,)]


def test_default_rules_must_be_eliminated_first():
    with pytest.raises(EvalError, match="default"):
        evaluate(corpus("f"), "f 1 2")


def test_laziness_first_argument_untouched():
    for scheme in ("basic", "cont"):
        r = run(corpus("f"), "f loop 2", scheme, step_limit=10_000)
        assert r.canonical() == ["2"]
        assert r.counters.rule_apps_by_op["loop"] == 0


def test_counters_are_recorded():
    r = run(corpus("zip"), "zip [1,2] [3]")
    c = r.counters
    assert c.steps > 0 and c.set_evals > 0
    assert c.rule_apps == c.rule_apps_standard + c.rule_apps_default
    assert c.rule_apps_default > 0


def test_generator_instantiations_counted():
    r = ev("not x")
    assert r.counters.generator_instantiations >= 1


def test_value_limit():
    r = ev("decOrInc 3", value_limit=1)
    assert len(r.answers) == 1


@pytest.mark.parametrize("bad", [dict(value_limit=0), dict(step_limit=-1),
                                 dict(strategy="random"), dict(int_range=(3, 1))])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        EvalConfig(**bad)


# ---------------------------------------------------------------------------
# Soundness and completeness with respect to the default-free program

GOALS = [
    ("isset", "isSet [1,1]"), ("isset", "isSet [0,1]"), ("zip", "zip ([1]?[]) [2]"),
    ("lookup", "lookup (2?3) [(3,17)]"), ("lookup", "lookup 2 [(2,14),(3,17),(2,18)]"),
    ("isunit", "isUnit x"), ("last", "last [1,2,3]"), ("catmaybes", "catMaybes [Just 1, Nothing]"),
    ("remred", "remred [Red,Green,Red]"), ("f", "f (0?1) (1?2?3)"),
]


@pytest.mark.parametrize("name,goal", GOALS)
@pytest.mark.parametrize("scheme", ["basic", "cont", "replace"])
def test_completeness_and_soundness(name, goal, scheme):
    p = corpus(name)
    plain = run(p, goal, "none")
    full = run(p, goal, scheme)
    assert plain.exhausted and full.exhausted
    with_default = Counter(a.text for a in full.answers)
    assert not Counter(a.text for a in plain.answers) - with_default
    plain_texts = set(a.text for a in plain.answers)
    for a in full.answers:
        assert a.text in plain_texts or a.used_default


# ---------------------------------------------------------------------------
# properties against Python reference implementations

small_lists = st.lists(st.integers(0, 3), max_size=5)


def _lit(xs):
    return "[" + ",".join(map(str, xs)) + "]"


@settings(max_examples=30, deadline=None)
@given(small_lists)
def test_isset_agrees_with_python(xs):
    expected = str(len(set(xs)) == len(xs))
    # one derivation per pair of equal elements, all with the same value
    assert set(values(corpus("isset"), f"isSet {_lit(xs)}")) == {expected}


@settings(max_examples=30, deadline=None)
@given(small_lists)
def test_dup_agrees_with_python(xs):
    counts = Counter(xs)
    # one derivation per pair of equal positions
    expected = sorted(str(x) for x, n in counts.items() for _ in range(n * (n - 1) // 2))
    assert values(corpus("dup"), f"dup {_lit(xs)}") == expected


@settings(max_examples=30, deadline=None)
@given(small_lists, small_lists)
def test_zip_agrees_with_python(xs, ys):
    expected = "[" + ",".join(f"({a},{b})" for a, b in zip(xs, ys)) + "]"
    assert values(corpus("zip"), f"zip {_lit(xs)} {_lit(ys)}") == [expected]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=4), st.integers(0, 2))
def test_lookup_agrees_with_python(keys, key):
    assoc = [(k, 10 + i) for i, k in enumerate(keys)]
    hits = sorted(f"Just {v}" for k, v in assoc if k == key)
    text = "[" + ",".join(f"({k},{v})" for k, v in assoc) + "]"
    assert values(corpus("lookup"), f"lookup {key} {text}") == (hits or ["Nothing"])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=3))
def test_set_function_of_choice_is_the_multiset_of_values(xs):
    prog = parse_program("pick = " + " ? ".join(f"({x})" for x in xs))
    (s,) = eval_set_function("pick", [], prog)
    assert sorted(e.value for e in s.elements) == sorted(xs)
    # the plain call enumerates the same values
    assert sorted(int(v) for v in ev("pick", prog).values()) == sorted(xs)

