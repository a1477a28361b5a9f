"""
Deterministic generators for the matrix families the repetitiveness
separations are stated on.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Sequence, Set, Tuple

import numpy as np

from repet2d.core2d import Matrix2D, random_matrix
from repet2d.errors import BadParam

BINARY = ('0', '1')


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise BadParam(message)


def identity(n: int) -> Matrix2D:
    _require(n >= 1, f"identity needs n >= 1, got {n}")
    return Matrix2D(np.eye(n, dtype=np.int32), BINARY)


def diagpad(m: int, n: int) -> Matrix2D:
    """Identity block of side min(m, n) in the top-left corner, zeros elsewhere."""
    _require(m >= 1 and n >= 1, f"diagpad needs m, n >= 1, got {m}, {n}")
    return Matrix2D(np.eye(m, n, dtype=np.int32), BINARY)


def zeros(m: int, n: int) -> Matrix2D:
    _require(m >= 1 and n >= 1, f"zeros needs m, n >= 1, got {m}, {n}")
    return Matrix2D(np.zeros((m, n), dtype=np.int32), ('0',))


def alt(m: int, n: int) -> Matrix2D:
    """Every row is 0101..."""
    _require(m >= 1 and n >= 1, f"alt needs m, n >= 1, got {m}, {n}")
    row = np.arange(n, dtype=np.int32) % 2
    return Matrix2D(np.tile(row, (m, 1)), BINARY)


def ek(k: int) -> Matrix2D:
    '''
    k × 2^k matrix whose column i holds i-1 in binary, least significant bit
    in the top row.
    '''
    _require(1 <= k <= 20, f"ek needs 1 <= k <= 20, got {k}")
    cols = np.arange(2 ** k, dtype=np.int64)
    bits = (cols[None, :] >> np.arange(k, dtype=np.int64)[:, None]) & 1
    return Matrix2D(bits.astype(np.int32), BINARY)


def debruijn_word(k: int) -> List[int]:
    '''
    Lexicographically least binary de Bruijn cycle of order k (concatenation
    of the Lyndon words whose length divides k, in lexicographic order),
    linearized by repeating its first k-1 symbols.
    '''
    _require(1 <= k <= 20, f"de Bruijn order must be in 1..20, got {k}")
    cycle: List[int] = []
    word = [-1]
    while word:
        word[-1] += 1
        period = len(word)
        if k % period == 0:
            cycle.extend(word)
        while len(word) < k:
            word.append(word[-period])
        while word and word[-1] == 1:
            word.pop()
    return cycle + cycle[:k - 1]


def debruijn1d(k: int) -> Matrix2D:
    return Matrix2D(np.array([debruijn_word(k)], dtype=np.int32), BINARY)


def pair_alphabet(d: int) -> Tuple[str, ...]:
    """Tokens for d-tuples of bits; id = the tuple read as a binary number."""
    return tuple(format(v, f'0{d}b') for v in range(2 ** d))


def bk(k: int) -> Matrix2D:
    """B_k[i][j] = <D_k[i], D_k[j]>, encoded as 2*D_k[i] + D_k[j]."""
    _require(1 <= k <= 12, f"bk needs 1 <= k <= 12, got {k}")
    word = np.array(debruijn_word(k), dtype=np.int32)
    return Matrix2D(2 * word[:, None] + word[None, :], pair_alphabet(2))


def bdk(d: int, k: int):
    """d-dimensional de Bruijn hypercube as an NdString."""
    from repet2d.multidim import NdString

    _require(d >= 1 and k >= 1 and d * k <= 24, f"bdk needs d, k >= 1 and d*k <= 24, got d={d}, k={k}")
    word = np.array(debruijn_word(k), dtype=np.int64)
    n = word.size
    data = np.zeros((n,) * d, dtype=np.int64)
    for axis in range(d):
        shape = [1] * d
        shape[axis] = n
        data = data + word.reshape(shape) * (1 << (d - 1 - axis))
    return NdString(data, pair_alphabet(d))


def staircase(n: int) -> Matrix2D:
    '''
    I_{n-1} with a row of zeros appended below and then a column of ones
    appended on the right.
    '''
    _require(n >= 2, f"staircase needs n >= 2, got {n}")
    data = np.zeros((n, n), dtype=np.int32)
    data[:n - 1, :n - 1] = np.eye(n - 1, dtype=np.int32)
    data[:, n - 1] = 1
    return Matrix2D(data, BINARY)


def cmblocks(n: int) -> Matrix2D:
    '''
    n×n matrix whose first row is B_1 B_2 ... B_{sqrt(n)/2} with
    B_i = 1^i 0^(2 sqrt(n) - i); all other rows are '#'.
    '''
    root = math.isqrt(n) if n >= 0 else 0
    _require(n >= 4 and root * root == n and root % 2 == 0,
             f"cmblocks needs an even perfect square n >= 4, got {n}")
    alphabet = ('#', '0', '1')
    first: List[int] = []
    for i in range(1, root // 2 + 1):
        first.extend([2] * i + [1] * (2 * root - i))
    data = np.zeros((n, n), dtype=np.int32)
    data[0] = first
    return Matrix2D(data, alphabet)


def diagpad_attractor(m: int, n: int) -> Set[Tuple[int, int]]:
    '''
    Explicit attractor of diagpad(m, n): the inner diagonal plus the two
    corners of the identity block and the cell right after (or below) it.
    Size min(m, n) + 1 when m != n and n when m == n.
    '''
    _require(min(m, n) >= 3, f"diagpad attractor is defined for min(m, n) >= 3, got {m}x{n}")
    side = min(m, n)
    points = {(i, i) for i in range(2, side)} | {(1, side), (side, 1)}
    if m < n:
        points.add((m, m + 1))
    elif m > n:
        points.add((n + 1, n))
    return points


def identity_square_attractor(m: int) -> Set[Tuple[int, int]]:
    """Two-point attractor for the square factors of I_m."""
    _require(m >= 1, f"identity needs m >= 1, got {m}")
    centre = (m + 1) // 2
    return {(m, 1), (centre, centre)}


FAMILIES: Dict[str, Tuple[int, Callable]] = {
    'identity': (1, identity),
    'zeros': (2, zeros),
    'alt': (2, alt),
    'ek': (1, ek),
    'debruijn1d': (1, debruijn1d),
    'bk': (1, bk),
    'bdk': (2, bdk),
    'diagpad': (2, diagpad),
    'staircase': (1, staircase),
    'cmblocks': (1, cmblocks),
    'random': (4, random_matrix),
}


def family(name: str, params: Sequence[int]):
    '''
    Build a family instance by name.
    Args: name - one of FAMILIES
          params - integer parameters (random takes m, n, sigma, seed)
    Returns: Matrix2D, or NdString for bdk
    '''
    if name not in FAMILIES:
        raise BadParam(f"unknown family {name!r}; expected one of {sorted(FAMILIES)}")
    arity, builder = FAMILIES[name]
    if len(params) != arity:
        raise BadParam(f"family {name} takes {arity} parameter(s), got {len(params)}")
    return builder(*[int(p) for p in params])
