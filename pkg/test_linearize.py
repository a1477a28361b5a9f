"""
Tests for row-major and Peano-Hilbert linearizations.
Run: pytest test_linearize.py
"""

from fractions import Fraction

import pytest

from repet2d import families, linearize
from repet2d.core2d import Matrix2D
from repet2d.errors import BadParam, NotPowerOfTwoSquare
from repet2d.measures import delta, gamma_lower_bound_unique, is_attractor


def test_rlin_and_back():
    M = families.identity(2)
    S = linearize.rlin(M)
    assert S.row_string(1) == '1001'
    assert linearize.unrlin(S, 2) == M
    with pytest.raises(BadParam):
        linearize.unrlin(S, 3)


def test_phlin_of_small_identity():
    assert linearize.phlin(families.identity(2)).row_string(1) == '1010'
    assert linearize.phlin(families.identity(4)).row_string(1) == '1010' + '0000' + '1010' + '0000'


@pytest.mark.parametrize('kind', linearize.SCAN_KINDS)
@pytest.mark.parametrize('side', [2, 4, 8, 16])
def test_scans_are_continuous_paths(kind, side):
    order = linearize.scan_order(side, kind)
    assert len(set(order)) == side * side
    for (y1, x1), (y2, x2) in zip(order, order[1:]):
        assert abs(y1 - y2) + abs(x1 - x2) == 1


def test_hilbert_index_inverts_coords():
    side = 8
    for index in range(1, side * side + 1):
        y, x = linearize.hilbert_coords(index, side)
        assert linearize.hilbert_index(y, x, side) == index
    with pytest.raises(BadParam):
        linearize.hilbert_coords(0, side)


def test_scan_needs_power_of_two_square():
    with pytest.raises(NotPowerOfTwoSquare):
        linearize.phlin(families.identity(3))
    with pytest.raises(NotPowerOfTwoSquare):
        linearize.phlin(families.zeros(2, 4))
    with pytest.raises(BadParam):
        linearize.scan_order(4, 'zigzag')


@pytest.mark.parametrize('k', range(1, 6))
def test_identity_scans_agree(k):
    I = families.identity(2 ** k)
    assert linearize.scan(I, linearize.DS) == linearize.scan(I, linearize.RS)


@pytest.mark.parametrize('k', [1, 2, 3, 4])
def test_onerun_certificate(k):
    S = linearize.phlin(families.identity(2 ** k))
    assert linearize.onerun_certificate(S, k)


def test_onerun_certificate_without_ones():
    assert not linearize.onerun_certificate(Matrix2D.from_strings(['0000']), 1)


@pytest.mark.parametrize('k', range(1, 9))
def test_ek_rlin_attractor(k):
    M = families.ek(k)
    points = linearize.ek_rlin_attractor(k)
    assert len(points) == 3 * k - 1
    assert is_attractor(linearize.rlin(M), points)
    assert gamma_lower_bound_unique(M, [(k, 1)]) >= 2 ** k


def test_rlin_attractor_check_stays_within_quadratic_work():
    # 1 x 2048 string: one pass over the windows of each of the 2048 widths
    S = linearize.rlin(families.ek(8))
    assert S.shape == (1, 2048)
    assert is_attractor(S, linearize.ek_rlin_attractor(8), budget=10 ** 7)


@pytest.mark.parametrize('n', [8, 16])
def test_staircase_row_linearization(n):
    M = families.staircase(n)
    assert delta(M).value <= 6
    assert delta(linearize.rlin(M)).value >= Fraction(n - 1, 2)
