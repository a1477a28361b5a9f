"""
Tests for the matrix type, concatenation, factors and the text format.
Run: pytest test_core2d.py
"""

import os

import numpy as np
import pytest

from repet2d import families
from repet2d.core2d import (
    Matrix2D,
    WorkBudget,
    concat_h,
    concat_v,
    distinct_factors,
    exact_shape_labels,
    exact_width_labels,
    factor_count,
    load_matrix,
    naive_window_labels,
    read_matrix,
    random_matrix,
    submatrix,
    substring_complexity_table,
    window_labels,
    write_matrix,
)
from repet2d.errors import EXIT_PARSE, BudgetExceeded, ColMismatch, OutOfBounds, ParseError, RowMismatch, ShapeTooLarge

FACTOR_EXAMPLE = Matrix2D.from_strings(['aabb'] * 5)
FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')
A = load_matrix(os.path.join(FIXTURES, 'concat_a.txt'))
B = load_matrix(os.path.join(FIXTURES, 'concat_b.txt'))
C = load_matrix(os.path.join(FIXTURES, 'concat_c.txt'))


def test_horizontal_concatenation():
    assert concat_h(A, B) == Matrix2D.from_strings(['ababbab', 'abbbbbb'])


def test_vertical_concatenation():
    assert concat_v(A, C) == Matrix2D.from_strings(['aba', 'abb', 'aaa', 'aab', 'abb'])


def test_concatenation_mismatches():
    with pytest.raises(ColMismatch):
        concat_v(A, B)
    with pytest.raises(RowMismatch):
        concat_h(A, C)


def test_concatenation_merges_alphabets():
    left = Matrix2D.from_strings(['0'])
    right = Matrix2D.from_strings(['x'])
    joined = concat_h(left, right)
    assert joined.to_rows() == [['0', 'x']]
    assert set(joined.alphabet) == {'0', 'x'}


def test_submatrix_extracts_factor():
    F1 = submatrix(FACTOR_EXAMPLE, 2, 2, 4, 3)
    assert F1 == Matrix2D.from_strings(['ab', 'ab', 'ab'])


def test_submatrix_out_of_bounds():
    with pytest.raises(OutOfBounds):
        submatrix(FACTOR_EXAMPLE, 0, 1, 2, 2)
    with pytest.raises(OutOfBounds):
        submatrix(FACTOR_EXAMPLE, 1, 1, 6, 2)


def test_at_is_one_based():
    assert A.at(1, 1) == 'a'
    assert A.at(2, 3) == 'b'
    with pytest.raises(OutOfBounds):
        A.at(3, 1)


def test_factor_count_example():
    assert factor_count(FACTOR_EXAMPLE, (2, 2)) == 3
    assert factor_count(FACTOR_EXAMPLE, (2, 2), method='naive') == 3


def test_distinct_factors_partition_windows():
    groups = distinct_factors(FACTOR_EXAMPLE, (2, 2))
    assert len(groups) == 3
    assert sum(len(g.positions) for g in groups) == (5 - 1) * (4 - 1)
    contents = {tuple(g.content.row_string(i) for i in (1, 2)) for g in groups}
    assert contents == {('aa', 'aa'), ('bb', 'bb'), ('ab', 'ab')}
    for g in groups:
        for i, j in g.positions:
            assert submatrix(FACTOR_EXAMPLE, i, j, i + 1, j + 1) == g.content


def test_shape_too_large():
    with pytest.raises(ShapeTooLarge):
        factor_count(FACTOR_EXAMPLE, (6, 1))
    with pytest.raises(ShapeTooLarge):
        factor_count(FACTOR_EXAMPLE, (1, 0))


def test_full_shape_has_one_factor():
    M = random_matrix(5, 7, 3, seed=1)
    assert factor_count(M, (5, 7)) == 1
    assert factor_count(M, (1, 1)) == len(M.symbols_used())


@pytest.mark.parametrize('seed', range(25))
def test_hash_and_naive_agree(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 13)), int(rng.integers(1, 13))
    M = random_matrix(m, n, int(rng.integers(1, 4)), seed)
    for k1 in range(1, m + 1):
        for k2 in range(1, n + 1):
            assert factor_count(M, (k1, k2)) == factor_count(M, (k1, k2), method='naive')


def test_window_labels_match_content():
    M = random_matrix(6, 6, 2, seed=3)
    labels, count = window_labels(M, (2, 3))
    assert labels.shape == (5, 4)
    assert labels.max() + 1 == count
    seen = {}
    for i in range(5):
        for j in range(4):
            content = submatrix(M, i + 1, j + 1, i + 2, j + 3)
            seen.setdefault(int(labels[i, j]), content)
            assert seen[int(labels[i, j])] == content


def test_complexity_table_square_only():
    M = random_matrix(3, 5, 2, seed=2)
    full = substring_complexity_table(M)
    square = substring_complexity_table(M, square_only=True)
    assert set(full) == {(k1, k2) for k1 in range(1, 4) for k2 in range(1, 6)}
    assert set(square) == {(1, 1), (2, 2), (3, 3)}
    assert all(full[s] == square[s] for s in square)


def test_budget_exceeded():
    M = random_matrix(10, 10, 2, seed=0)
    with pytest.raises(BudgetExceeded) as exc:
        factor_count(M, (3, 3), budget=5)
    assert exc.value.exit_code == 3
    assert exc.value.context['limit'] == 5


def test_budget_accumulates():
    budget = WorkBudget(10_000)
    M = random_matrix(4, 4, 2, seed=0)
    factor_count(M, (2, 2), budget=budget)
    used = budget.used
    factor_count(M, (2, 2), budget=budget)
    assert budget.used == 2 * used > 0


def test_read_write_round_trip_keeps_tokens():
    text = "# comment\n2d 2 3\nx yy x\n\\# \\# \\#\n"
    M = read_matrix(text)
    assert M.to_rows() == [['x', 'yy', 'x'], ['#', '#', '#']]
    assert read_matrix(write_matrix(M)) == M


def test_comment_lines_inside_body_are_skipped():
    M = read_matrix("2d 2 3\n# a b\na b c\n#x y z\nc b a\n")
    assert M.to_rows() == [['a', 'b', 'c'], ['c', 'b', 'a']]


def test_comment_line_does_not_count_as_row():
    with pytest.raises(ParseError) as exc:
        read_matrix("2d 2 3\na b c\n# b c\n")
    assert exc.value.line == 4


def test_hash_symbols_are_escaped():
    M = families.cmblocks(4)
    text = write_matrix(M)
    assert text.splitlines()[2] == '\\# \\# \\# \\#'
    assert read_matrix(text) == M
    backslash = Matrix2D.from_rows([['\\a', 'b']])
    assert read_matrix(write_matrix(backslash)).to_rows() == [['\\a', 'b']]


def test_parse_error_positions():
    with pytest.raises(ParseError) as exc:
        read_matrix("2d 2 3\na b\n")
    assert exc.value.line == 2
    assert exc.value.column == 4
    assert exc.value.exit_code == EXIT_PARSE

    with pytest.raises(ParseError) as exc:
        read_matrix("2d 1 2\na b c\n")
    assert (exc.value.line, exc.value.column) == (2, 5)

    with pytest.raises(ParseError) as exc:
        read_matrix("matrix 1 1\n0\n")
    assert exc.value.line == 1

    with pytest.raises(ParseError):
        read_matrix("2d 3 1\n0\n1\n")


def test_random_matrix_is_seeded():
    assert random_matrix(4, 5, 3, seed=9) == random_matrix(4, 5, 3, seed=9)
    assert random_matrix(4, 5, 3, seed=9).alphabet == ('0', '1', '2')


@pytest.mark.parametrize('seed', range(6))
def test_exact_shape_labels_match_naive_grouping(seed):
    M = random_matrix(4, 6, 2 + seed % 2, seed=seed)
    shapes = [(k1, k2) for k1 in range(1, 5) for k2 in range(1, 7)]
    seen = []
    for shape, labels, count in exact_shape_labels(M, shapes):
        naive, naive_count = naive_window_labels(M, shape)
        assert count == naive_count
        # same partition of the windows, whatever the numbering
        assert np.array_equal(labels[:, :, None] == labels.ravel()[None, None, :],
                              naive[:, :, None] == naive.ravel()[None, None, :])
        seen.append(shape)
    assert sorted(seen) == sorted(shapes)


def test_exact_width_labels_work_is_one_pass_per_width():
    values = np.array([[0, 1, 1, 0, 1, 0, 0, 1]])
    budget = WorkBudget(100)
    widths = [(w, count) for w, _, count in exact_width_labels(values, 1, 8, budget)]
    assert widths[0] == (1, 2)
    assert widths[-1] == (8, 1)
    assert budget.used == sum(9 - w for w in range(1, 9))


def test_exact_width_labels_rejects_wide_windows():
    with pytest.raises(ShapeTooLarge):
        next(exact_width_labels(np.zeros((2, 3), dtype=np.int32), 0, 3))
