"""
Tests for 2D macro schemes: validation, decoding, constructions and the
exact search.
Run: pytest test_macroscheme.py
"""

import os

import pytest

from repet2d import families
from repet2d.core2d import Matrix2D, random_matrix
from repet2d.errors import CyclicMap, NotPartition, OutOfBounds, OutOfBoundsSource, ParseError, TooLarge
from repet2d.grammar2d import expand, g_exact, load_grammar, random_grammar
from repet2d.macroscheme import (
    MacroScheme2D,
    Phrase,
    b_exact,
    decode,
    from_grammar,
    identity_scheme,
    is_valid,
    literal_scheme,
    load_scheme,
    phrase_lower_bound,
    read_scheme,
    unique_square_certificate,
    validate_scheme,
    write_scheme,
)

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')


@pytest.mark.parametrize('n', [3, 7, 64, 1024])
def test_identity_scheme(n):
    s = identity_scheme(n)
    assert s.size == 6
    assert decode(s) == families.identity(n)


@pytest.mark.parametrize('n', [1, 2])
def test_small_identity_schemes_are_literal(n):
    s = identity_scheme(n)
    assert not s.phrases
    assert decode(s) == families.identity(n)


def test_identity_fixture():
    s = load_scheme(os.path.join(FIXTURES, 'identity3.scheme'))
    assert s == identity_scheme(3)
    assert read_scheme(write_scheme(s)) == s


def test_literal_scheme():
    M = random_matrix(3, 4, 3, seed=2)
    s = literal_scheme(M)
    assert s.size == 12
    assert decode(s) == M


def test_from_grammar_fixtures():
    slp = load_grammar(os.path.join(FIXTURES, 'fig_slp.grammar'))
    rlslp = load_grammar(os.path.join(FIXTURES, 'fig_rlslp.grammar'))
    s = from_grammar(slp)
    assert decode(s) == expand(slp)
    assert (len(s.explicit), len(s.phrases)) == (2, 4)
    r = from_grammar(rlslp)
    assert decode(r) == expand(rlslp)
    assert (len(r.explicit), len(r.phrases)) == (2, 2)
    assert r.size <= rlslp.size


@pytest.mark.parametrize('seed', range(40))
def test_from_random_grammars(seed):
    G = random_grammar(seed)
    s = from_grammar(G)
    assert decode(s) == expand(G)
    assert s.size <= G.size


def _scheme(rows, cols, explicit, phrases):
    return MacroScheme2D(rows, cols, tuple(explicit), tuple(Phrase(*p) for p in phrases))


def test_gap_and_overlap():
    with pytest.raises(NotPartition):
        validate_scheme(_scheme(1, 3, [((1, 1), 'a')], [(1, 2, 1, 2, 1, 1)]))
    with pytest.raises(NotPartition):
        validate_scheme(_scheme(1, 2, [((1, 1), 'a'), ((1, 2), 'a')], [(1, 2, 1, 2, 1, 1)]))


def test_bad_sources():
    with pytest.raises(OutOfBoundsSource):
        validate_scheme(_scheme(1, 3, [((1, 1), 'a')], [(1, 2, 1, 3, 1, 3)]))
    with pytest.raises(OutOfBounds):
        validate_scheme(_scheme(1, 2, [((1, 1), 'a'), ((1, 2), 'a')], [(1, 3, 1, 3, 1, 1)]))
    with pytest.raises(CyclicMap):
        validate_scheme(_scheme(1, 2, [((1, 1), 'a')], [(1, 2, 1, 2, 1, 2)]))


def test_copy_cycle():
    s = _scheme(1, 2, [], [(1, 1, 1, 1, 1, 2), (1, 2, 1, 2, 1, 1)])
    with pytest.raises(CyclicMap):
        validate_scheme(s)
    assert not is_valid(s)


def test_overlapping_self_copy_is_valid():
    s = _scheme(1, 5, [((1, 1), 'a')], [(1, 2, 1, 5, 1, 1)])
    assert decode(s) == Matrix2D.from_strings(['aaaaa'])


def test_b_exact_small():
    assert b_exact(Matrix2D.from_strings(['a'])).size == 1
    s = b_exact(families.zeros(2, 2))
    assert s.size == 3
    assert decode(s) == families.zeros(2, 2)


def test_b_exact_below_grammars():
    for seed in range(10):
        M = random_matrix(2, 3, 2, seed)
        s = b_exact(M)
        assert decode(s) == M
        assert s.size <= g_exact(M, allow_runlength=True).size


def test_b_exact_limit():
    with pytest.raises(TooLarge):
        b_exact(families.zeros(4, 4))


def test_unique_square_certificate():
    unique, bound = unique_square_certificate(families.bk(3), 3)
    assert unique
    assert bound == 16
    assert phrase_lower_bound(families.alt(2, 4), 1) is None


def test_scheme_parse_errors():
    with pytest.raises(ParseError):
        read_scheme("exp 1 1 a\nscheme 1 1\n")
    with pytest.raises(ParseError) as exc:
        read_scheme("scheme 1 2\nexp 1 1 a\nphr 1 2 1 x 1 1\n")
    assert exc.value.line == 3
