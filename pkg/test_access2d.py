"""
Tests for heavy-path direct access on grammar-compressed matrices.
Run: pytest test_access2d.py
"""

import math
import os

import pytest

from repet2d import access2d
from repet2d.access2d import (
    RIGHT,
    HeavyEdge,
    access,
    build_index,
    heavy_forest,
    hop_bound_check,
    hop_histogram,
    verify_all,
)
from repet2d.errors import HopBoundExceeded, OutOfBounds
from repet2d.grammar2d import (
    HORIZ,
    TERM,
    Grammar2D,
    Horiz,
    Terminal,
    build_bk_grammar,
    build_ek_grammar,
    build_zeros_rlslp,
    expand,
    load_grammar,
    random_grammar,
)

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')

GRAMMARS = {
    'ek10': lambda: build_ek_grammar(10),
    'zeros64': lambda: build_zeros_rlslp(64),
    'bk3': lambda: build_bk_grammar(3),
    'fig_slp': lambda: load_grammar(os.path.join(FIXTURES, 'fig_slp.grammar')),
    'fig_rlslp': lambda: load_grammar(os.path.join(FIXTURES, 'fig_rlslp.grammar')),
}


@pytest.mark.parametrize('name', sorted(GRAMMARS))
def test_every_cell_matches_expansion(name):
    idx = build_index(GRAMMARS[name]())
    assert verify_all(idx) is None


@pytest.mark.parametrize('name', sorted(GRAMMARS))
def test_hops_within_log_bound(name):
    idx = build_index(GRAMMARS[name]())
    m, n = idx.shape
    bound = hop_bound_check(idx)
    assert bound.ok
    assert bound.worst <= math.floor(math.log2(m * n)) == bound.limit


def test_ek10_hop_bound():
    idx = build_index(build_ek_grammar(10))
    assert idx.shape == (10, 1024)
    assert hop_bound_check(idx).worst <= 13


def test_histogram_covers_every_cell():
    idx = build_index(build_bk_grammar(2))
    m, n = idx.shape
    assert sum(hop_histogram(idx).values()) == m * n


def test_debug_checks_hold():
    G = load_grammar(os.path.join(FIXTURES, 'fig_slp.grammar'))
    idx = build_index(G)
    M = expand(G)
    for y in range(1, 5):
        for x in range(1, 7):
            assert access(idx, y, x, debug=True).token == M.at(y, x)


def test_out_of_bounds_query():
    idx = build_index(build_zeros_rlslp(4))
    with pytest.raises(OutOfBounds):
        access(idx, 5, 1)
    with pytest.raises(OutOfBounds):
        access(idx, 1, 0)


def test_heavy_paths_end_at_terminals():
    G = build_ek_grammar(4)
    idx = build_index(G)
    variables = G.variables
    for info in idx.paths.values():
        assert variables[info.path[-1]].kind == TERM
        assert len(info.up) == len(info.path)
        rows, cols = info.dims
        y0, x0 = info.heavy_occ
        assert info.up[-1] == y0 - 1 and info.down[-1] == rows - y0
        assert info.left[-1] == x0 - 1 and info.right[-1] == cols - x0
    forest = heavy_forest(idx)
    assert set(forest) == {name for name, rule in G.rules if rule.kind == TERM}
    assert sum(len(edges) for edges in forest.values()) == len(idx.heavy)


@pytest.mark.parametrize('seed', range(30))
def test_random_grammars(seed):
    idx = build_index(random_grammar(seed))
    assert verify_all(idx) is None


def _chain_grammar(length):
    '''1 x (length+1) row "a b b ... b" built as a left-deep chain.'''
    rules = [('A', Terminal('a')), ('B', Terminal('b')), ('X1', Horiz('A', 'B'))]
    rules += [(f"X{i}", Horiz(f"X{i - 1}", 'B')) for i in range(2, length + 1)]
    return Grammar2D.of(list(reversed(rules)), f"X{length}")


@pytest.fixture
def light_index(monkeypatch):
    '''Index whose paths follow the lighter child of every h rule.'''
    heavy_edge = access2d._heavy_edge

    def light_edge(name, rule, dims):
        if rule.kind != HORIZ:
            return heavy_edge(name, rule, dims)
        first, second = rule.children
        if dims[first][1] >= dims[second][1]:
            return HeavyEdge(name, second, RIGHT, dims[first][1], 0, 0, 0)
        return heavy_edge(name, rule, dims)

    monkeypatch.setattr(access2d, '_heavy_edge', light_edge)
    return build_index(_chain_grammar(8))


def test_chain_grammar_stays_within_bound():
    idx = build_index(_chain_grammar(8))
    bound = hop_bound_check(idx)
    assert bound.ok and bound.limit == 3
    assert verify_all(idx) is None


def test_hop_bound_violation_is_reported(light_index):
    assert light_index.shape == (1, 9)
    assert access(light_index, 1, 1).token == 'a'
    assert access(light_index, 1, 1).hops == 8
    bound = hop_bound_check(light_index)
    assert not bound
    assert (bound.worst, bound.limit, bound.cell) == (8, 3, (1, 1))


def test_verify_all_fails_on_hop_bound(light_index):
    with pytest.raises(HopBoundExceeded) as exc:
        verify_all(light_index)
    assert exc.value.context['hops'] == 8
    assert (exc.value.context['y'], exc.value.context['x']) == (1, 1)
