"""
Tests for 2D SLP/RLSLP grammars: parsing, validation, expansion, grammar
trees, the explicit family grammars and the exact smallest-grammar search.
Run: pytest test_grammar2d.py
"""

import math
import os

import pytest

from repet2d import families
from repet2d.core2d import Matrix2D, random_matrix
from repet2d.errors import (
    EXIT_BUDGET,
    BudgetExceeded,
    CycleDetected,
    DanglingVariable,
    DimMismatch,
    DuplicateRHS,
    ParseError,
    TooLarge,
)
from repet2d.grammar2d import (
    PRIMARY,
    RUN_LEAF,
    SECONDARY,
    SYMBOL,
    Grammar2D,
    Horiz,
    RunH,
    Terminal,
    Vert,
    bit_size,
    build_bk_grammar,
    build_ek_grammar,
    build_zeros_rlslp,
    expand,
    g_exact,
    grammar_tree,
    load_grammar,
    normalize,
    parse_tree_size,
    random_grammar,
    read_grammar,
    validate,
    write_grammar,
)

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')


def fixture(name):
    return load_grammar(os.path.join(FIXTURES, name))


def test_fixture_slp():
    G = fixture('fig_slp.grammar')
    info = validate(G)
    assert info.dims['S'] == (4, 6)
    assert G.size == 12
    assert not G.is_runlength
    assert parse_tree_size(G) == 71
    assert expand(G) == families.alt(4, 6)


def test_fixture_rlslp():
    G = fixture('fig_rlslp.grammar')
    assert G.is_runlength
    assert G.size == 8
    assert bit_size(G) == 8 + 2 + 2
    assert parse_tree_size(G) == 64
    assert expand(G) == expand(fixture('fig_slp.grammar'))


def test_corrupted_fixture_names_the_rule():
    G = fixture(os.path.join('broken', 'corrupted.grammar'))
    with pytest.raises(DimMismatch) as exc:
        validate(G)
    assert exc.value.context['rule'] == 'S'
    assert 'rule S' in exc.value.message


def test_validation_errors():
    with pytest.raises(DanglingVariable):
        validate(Grammar2D.of({'S': Horiz('A', 'B'), 'A': Terminal('0')}, 'S'))
    with pytest.raises(CycleDetected):
        validate(Grammar2D.of({'S': Horiz('A', 'A'), 'A': Vert('S', 'S')}, 'S'))
    with pytest.raises(DuplicateRHS):
        validate(Grammar2D.of({'S': Horiz('A', 'B'), 'A': Terminal('0'), 'B': Terminal('0')}, 'S'))
    with pytest.raises(DimMismatch):
        validate(Grammar2D.of({'S': Vert('A', 'B'), 'A': Horiz('X', 'X'), 'B': Terminal('1'),
                               'X': Terminal('0')}, 'S'))


def test_parse_errors():
    with pytest.raises(ParseError) as exc:
        read_grammar("axiom S\nS = h A B\nA = term 0\n")
    assert exc.value.line == 2
    assert exc.value.column == 9

    with pytest.raises(ParseError) as exc:
        read_grammar("axiom S rl\nS = rh 1 A\nA = term 0\n")
    assert exc.value.line == 2

    with pytest.raises(ParseError):
        read_grammar("S = term 0\n")


def test_text_round_trip():
    G = fixture('fig_rlslp.grammar')
    assert read_grammar(write_grammar(G)) == G
    assert write_grammar(G).splitlines()[0] == 'axiom S rl'


def test_grammar_tree_of_slp():
    tree = grammar_tree(fixture('fig_slp.grammar'))
    assert len(tree.nodes) == 13
    assert tree.count(PRIMARY) == 7
    assert tree.count(SECONDARY) == 4
    assert tree.count(SYMBOL) == 2
    assert tree.root.rect == (1, 1, 4, 6)
    secondary = sorted(node.rect for node in tree.nodes if node.kind == SECONDARY)
    assert secondary == [(1, 3, 4, 4), (1, 5, 4, 6), (2, 1, 2, 2), (3, 1, 4, 2)]
    assert all(node.copy_of == (1, 1) for node in tree.nodes if node.kind == SECONDARY)


def test_grammar_tree_of_rlslp():
    tree = grammar_tree(fixture('fig_rlslp.grammar'))
    runs = sorted(node.rect for node in tree.nodes if node.kind == RUN_LEAF)
    assert runs == [(1, 3, 4, 6), (2, 1, 4, 2)]


@pytest.mark.parametrize('k', range(1, 11))
def test_ek_grammar(k):
    G = build_ek_grammar(k)
    assert G.size == 10 * k - 6
    assert G.size <= 10 * k
    assert expand(G) == families.ek(k)


@pytest.mark.parametrize('k', [1, 2, 3, 4])
def test_bk_grammar(k):
    assert expand(build_bk_grammar(k)) == families.bk(k)


def test_zeros_rlslp():
    G = build_zeros_rlslp(64)
    assert G.size == 5
    assert expand(G) == families.zeros(64, 64)


def test_normalize_keeps_expansion():
    G = fixture('fig_slp.grammar')
    N = normalize(G)
    assert expand(N) == expand(G)
    assert N.axiom == f"V{len(N.rules)}"


@pytest.mark.parametrize('seed', range(20))
def test_random_grammars_are_valid(seed):
    G = random_grammar(seed)
    info = validate(G)
    M = expand(G)
    assert M.shape == info.dims[G.axiom]


def test_g_exact_alt():
    M = families.alt(4, 6)
    G = g_exact(M)
    assert G.size == 12
    assert expand(G) == M
    R = g_exact(M, allow_runlength=True)
    assert R.size == 8
    assert expand(R) == M


def test_g_exact_single_cell():
    G = g_exact(Matrix2D.from_strings(['a']))
    assert G.size == 1
    assert expand(G) == Matrix2D.from_strings(['a'])


def test_g_exact_variable_lower_bound():
    for seed in range(8):
        M = random_matrix(2, 3, 2, seed)
        G = g_exact(M)
        binary = sum(1 for _, rule in G.rules if rule.kind != 'term')
        assert binary >= math.ceil(math.log2(M.size))
        assert g_exact(M, allow_runlength=True).size <= G.size


def test_g_exact_work_limit_keeps_best():
    M = families.alt(2, 2)
    with pytest.raises(BudgetExceeded) as exc:
        g_exact(M, work_limit=0)
    assert exc.value.exit_code == EXIT_BUDGET
    assert expand(exc.value.best) == M


def test_g_exact_factor_limit():
    with pytest.raises(TooLarge):
        g_exact(random_matrix(4, 4, 2, seed=1), factor_limit=3)


def test_run_rules():
    G = Grammar2D.of({'S': RunH(3, 'A'), 'A': Terminal('x')}, 'S')
    assert expand(G) == Matrix2D.from_strings(['xxx'])
    assert bit_size(G) == G.size + 2
