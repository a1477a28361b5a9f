"""
Row-major and Peano-Hilbert linearizations of matrices, plus the two 1D
certificates used when comparing a matrix with its linearization.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import List, Sequence, Set, Tuple

import numpy as np

from repet2d.core2d import Matrix2D
from repet2d.errors import BadParam, NotPowerOfTwoSquare

logger = logging.getLogger(__name__)

LS, RS, US, DS = 'ls', 'rs', 'us', 'ds'
SCAN_KINDS = (LS, RS, US, DS)

# quadrant order and the scan applied to each quadrant, per scan kind
_RECURSION = {
    RS: (('UL', DS), ('UR', RS), ('LR', RS), ('LL', US)),
    DS: (('UL', RS), ('LL', DS), ('LR', DS), ('UR', LS)),
    US: (('LR', LS), ('UR', US), ('UL', US), ('LL', RS)),
    LS: (('LR', US), ('LL', LS), ('UL', LS), ('UR', DS)),
}
_OFFSET = {'UL': (0, 0), 'UR': (0, 1), 'LL': (1, 0), 'LR': (1, 1)}


def rlin(M: Matrix2D) -> Matrix2D:
    """Rows concatenated into a single 1×mn row."""
    return Matrix2D(M.data.reshape(1, -1), M.alphabet)


def unrlin(S: Matrix2D, n: int) -> Matrix2D:
    if S.rows != 1 or n < 1 or S.cols % n:
        raise BadParam(f"cannot fold a {S.rows}x{S.cols} string into rows of length {n}")
    return Matrix2D(S.data.reshape(-1, n), S.alphabet)


def _side(M: Matrix2D) -> int:
    side = M.rows
    if M.rows != M.cols or side & (side - 1):
        raise NotPowerOfTwoSquare(f"expected a 2^i x 2^i matrix, got {M.rows}x{M.cols}", rows=M.rows, cols=M.cols)
    return side


@lru_cache(maxsize=64)
def scan_order(side: int, kind: str) -> Tuple[Tuple[int, int], ...]:
    '''
    0-based cells of a side×side grid in the order the scan visits them,
    unrolled with an explicit stack over (kind, top, left, side) frames.
    '''
    if kind not in _RECURSION:
        raise BadParam(f"unknown scan {kind!r}; expected one of {SCAN_KINDS}")
    if side < 1 or side & (side - 1):
        raise NotPowerOfTwoSquare(f"scan side must be a power of two, got {side}", side=side)
    order: List[Tuple[int, int]] = []
    stack = [(kind, 0, 0, side)]
    while stack:
        k, top, left, s = stack.pop()
        if s == 1:
            order.append((top, left))
            continue
        half = s // 2
        for quadrant, sub in reversed(_RECURSION[k]):
            dy, dx = _OFFSET[quadrant]
            stack.append((sub, top + dy * half, left + dx * half, half))
    return tuple(order)


def scan(M: Matrix2D, kind: str) -> Matrix2D:
    side = _side(M)
    ys, xs = np.array(scan_order(side, kind)).T
    return Matrix2D(M.data[ys, xs].reshape(1, -1), M.alphabet)


def phlin_kind(side: int) -> str:
    """rs when side = 2^i with i odd, ds when i is even."""
    return RS if (side.bit_length() - 1) % 2 else DS


def phlin(M: Matrix2D) -> Matrix2D:
    '''
    Business: Peano-Hilbert linearization of a 2^i × 2^i matrix
    Args: M - square matrix with power-of-two side
    Returns: 1×N string, rs(M) for odd i and ds(M) for even i
    '''
    return scan(M, phlin_kind(_side(M)))


def hilbert_coords(index: int, side: int) -> Tuple[int, int]:
    """1-based (y, x) of the index-th (1-based) symbol of phlin on a side×side grid."""
    order = scan_order(side, phlin_kind(side))
    if not 1 <= index <= len(order):
        raise BadParam(f"index {index} outside 1..{len(order)}")
    y, x = order[index - 1]
    return y + 1, x + 1


def hilbert_index(y: int, x: int, side: int) -> int:
    inverse = _inverse_order(side)
    if not (1 <= y <= side and 1 <= x <= side):
        raise BadParam(f"cell ({y}, {x}) outside {side}x{side}")
    return int(inverse[y - 1, x - 1]) + 1


@lru_cache(maxsize=16)
def _inverse_order(side: int) -> np.ndarray:
    ys, xs = np.array(scan_order(side, phlin_kind(side))).T
    inverse = np.empty((side, side), dtype=np.int64)
    inverse[ys, xs] = np.arange(side * side)
    inverse.setflags(write=False)
    return inverse


def ek_rlin_attractor(k: int) -> Set[Tuple[int, int]]:
    '''
    Attractor of rlin(E_k) as 1-based positions (1, p): for every row i the
    first cell of the row, the first 1 and the end of the first 0/1 block.
    '''
    if k < 1:
        raise BadParam(f"k must be >= 1, got {k}")
    points: Set[int] = set()
    for i in range(1, k + 1):
        base = (i - 1) * 2 ** k
        points.update({base + 1, base + 1 + 2 ** (i - 1), base + 2 ** i})
    return {(1, p) for p in points}


def _ones_gap(ones: Sequence[int], gap: int) -> bool:
    return any(b - a == gap + 1 for a, b in zip(ones, ones[1:]))


def onerun_certificate(S: Matrix2D, k: int) -> bool:
    '''
    True iff 1 0^t 1 occurs in S for every t = (4^l - 1) / 3, l = 1..k.
    Two such substrings can share a position only pairwise, so a true
    certificate forces an attractor of size about k/2.
    '''
    if S.rows != 1:
        raise BadParam(f"expected a 1xN string, got {S.rows}x{S.cols}")
    if '1' not in S.alphabet:
        return False
    one = S.alphabet.index('1')
    ones = np.flatnonzero(S.data[0] == one).tolist()
    return all(_ones_gap(ones, (4 ** level - 1) // 3) for level in range(1, k + 1))
