from collections import Counter

import pytest

from flc import parse_program
from flc.cli import CORPUS_DIR
from flc.core import normalize_rule
from flc.deftree import (
    BranchNode, ExemptNode, MixedTypes, NotSequential, RuleNode, build_definitional_tree,
    classify_operation, exempt_patterns, find_leaf, has_literal_complement, is_minimal,
    render_tree, tree_rules,
)
from flc.pretty import print_lhs
from flc.prelude import prelude

from conftest import ORACLE_OPS, corpus


def tree(name, op):
    p = corpus(name)
    return build_definitional_tree(p.operations[op], p)


def fixture(name):
    return (CORPUS_DIR / "trees" / f"{name}.txt").read_text()


def test_append_tree_branches_on_first_argument():
    t = tree("append", "++").tree
    assert isinstance(t, BranchNode) and t.position == (0,)
    assert [type(c) for c in t.children] == [RuleNode, RuleNode]
    assert exempt_patterns(t) == []


def test_zip_tree_has_two_exempt_leaves():
    t = tree("zip", "zip")
    assert [print_lhs("zip", p) for p in exempt_patterns(t)] == ["zip [] _", "zip (x:xs) []"]
    assert render_tree(t) == fixture("zip")


def test_isempty_minimal_tree():
    t = tree("isempty", "isEmptyList").tree
    assert isinstance(t, BranchNode)
    assert isinstance(t.children[0], RuleNode)
    assert isinstance(t.children[1], ExemptNode)


def test_last_exempt_patterns():
    t = tree("last", "last")
    assert [print_lhs("last", p) for p in exempt_patterns(t)] == ["last []", "last (x:_:_)"]
    assert not has_literal_complement(t)


def test_literal_positions_have_a_complement():
    t = tree("f", "f")
    assert has_literal_complement(t)
    assert render_tree(t) == fixture("f")


def test_berry_is_not_sequential():
    p = corpus("berry")
    with pytest.raises(NotSequential):
        build_definitional_tree(p.operations["berry"], p)
    assert classify_operation(p.operations["berry"], p).kind == "NotSequential"


def test_classification():
    pre = prelude()
    assert classify_operation(pre.operations["?"], pre).kind == "OverlappingInductivelySequential"
    assert classify_operation(pre.operations["++"], pre).kind == "InductivelySequential"
    assert classify_operation(pre.operations["&&"], pre).kind == "InductivelySequential"


def test_mixed_types():
    p = parse_program("g True = 1\ng Nothing = 2")
    with pytest.raises(MixedTypes):
        build_definitional_tree(p.operations["g"], p)


def test_build_is_deterministic():
    assert tree("zip", "zip") == tree("zip", "zip")


CORPUS = sorted(p.stem for p in CORPUS_DIR.glob("*.flc"))


def _sequential_ops():
    for name in CORPUS:
        p = corpus(name)
        for op in p.operations.values():
            if op.standard_rules and classify_operation(op, p).kind != "NotSequential":
                yield name, op.name


@pytest.mark.parametrize("name,op", list(_sequential_ops()))
def test_corpus_trees_are_minimal_and_keep_their_rules(name, op):
    p = corpus(name)
    od = p.operations[op]
    t = build_definitional_tree(od, p)
    assert is_minimal(t)
    expected = Counter(repr(normalize_rule(r)) for r in od.standard_rules)
    assert Counter(repr(r) for r in tree_rules(t)) == expected


@pytest.mark.parametrize("op", sorted(ORACLE_OPS))
def test_leaves_partition_ground_arguments(op):
    name, domain = ORACLE_OPS[op]
    t = tree(name, op)
    for args in domain():
        assert len(find_leaf(t, args)) == 1, args


def test_literal_complement_region_is_a_leaf():
    from flc.core import IntLit

    t = tree("f", "f")
    kinds = [leaf.kind for leaf in find_leaf(t, (IntLit(5), IntLit(7)))]
    assert kinds == ["complement"]
    assert [leaf.kind for leaf in find_leaf(t, (IntLit(0), IntLit(1)))] == ["rule"]
