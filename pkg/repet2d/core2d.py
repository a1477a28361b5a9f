"""
2D strings: the matrix type, horizontal/vertical concatenation, factors and
the exact substring-complexity engine every measure is built on.

Positions are 1-based and inclusive throughout the public API.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from repet2d import config
from repet2d.errors import (
    BadParam,
    BudgetExceeded,
    ColMismatch,
    OutOfBounds,
    ParseError,
    RowMismatch,
    ShapeTooLarge,
)

logger = logging.getLogger(__name__)

MAX_ALPHABET = 2 ** 16

# two independent moduli below 2**31 keep every product inside int64
MOD1 = 2_147_483_647
MOD2 = 1_000_000_007
BASE1 = 911_382_323
BASE2 = 972_663_749

Token = Union[str, int]


@dataclass(frozen=True, eq=False)
class Matrix2D:
    """Immutable m×n matrix of symbol ids with a token table."""

    data: np.ndarray
    alphabet: Tuple[str, ...]
    _tokens: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.int32, copy=True)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise BadParam(f"matrix must be 2D with m, n >= 1, got shape {data.shape}")
        alphabet = tuple(str(t) for t in self.alphabet)
        if not alphabet or len(alphabet) > MAX_ALPHABET:
            raise BadParam(f"alphabet size {len(alphabet)} out of range")
        if len(set(alphabet)) != len(alphabet):
            raise BadParam("alphabet tokens must be pairwise distinct")
        for token in alphabet:
            if not token or any(ch.isspace() for ch in token):
                raise BadParam(f"invalid token {token!r}")
        if data.min() < 0 or data.max() >= len(alphabet):
            raise BadParam("symbol id outside the alphabet")
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'alphabet', alphabet)
        object.__setattr__(self, '_tokens', np.array(alphabet, dtype=object))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Token]], alphabet: Optional[Sequence[Token]] = None) -> 'Matrix2D':
        rows = [[str(t) for t in row] for row in rows]
        if not rows or not rows[0]:
            raise BadParam("matrix needs at least one row and one column")
        width = len(rows[0])
        for i, row in enumerate(rows, start=1):
            if len(row) != width:
                raise BadParam(f"row {i} has {len(row)} tokens, expected {width}")
        if alphabet is None:
            alphabet = sorted({t for row in rows for t in row})
        alphabet = [str(t) for t in alphabet]
        index = {t: i for i, t in enumerate(alphabet)}
        try:
            data = [[index[t] for t in row] for row in rows]
        except KeyError as e:
            raise BadParam(f"token {e.args[0]!r} not in alphabet")
        return cls(np.array(data, dtype=np.int32), tuple(alphabet))

    @classmethod
    def from_strings(cls, lines: Iterable[str], alphabet: Optional[Sequence[Token]] = None) -> 'Matrix2D':
        """One character per cell, e.g. ``["0101", "0011"]``."""
        return cls.from_rows([list(line) for line in lines], alphabet)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def cells(self) -> np.ndarray:
        return self.data.ravel()

    def at(self, i: int, j: int) -> str:
        if not (1 <= i <= self.rows and 1 <= j <= self.cols):
            raise OutOfBounds(f"position ({i}, {j}) outside {self.rows}x{self.cols}", i=i, j=j)
        return self.alphabet[int(self.data[i - 1, j - 1])]

    def id_at(self, i: int, j: int) -> int:
        if not (1 <= i <= self.rows and 1 <= j <= self.cols):
            raise OutOfBounds(f"position ({i}, {j}) outside {self.rows}x{self.cols}", i=i, j=j)
        return int(self.data[i - 1, j - 1])

    def tokens(self) -> np.ndarray:
        return self._tokens[self.data]

    def to_rows(self) -> List[List[str]]:
        return [[self.alphabet[v] for v in row] for row in self.data.tolist()]

    def row_string(self, i: int, sep: str = '') -> str:
        return sep.join(self.alphabet[v] for v in self.data[i - 1].tolist())

    def symbols_used(self) -> List[str]:
        return [self.alphabet[v] for v in np.unique(self.data).tolist()]

    def transpose(self) -> 'Matrix2D':
        return Matrix2D(self.data.T, self.alphabet)

    def with_alphabet(self, alphabet: Sequence[str]) -> 'Matrix2D':
        """Re-encode over a superset alphabet (token identity preserved)."""
        index = {t: i for i, t in enumerate(alphabet)}
        missing = [t for t in self.alphabet if t not in index]
        if missing:
            raise BadParam(f"tokens {missing} missing from target alphabet")
        remap = np.array([index[t] for t in self.alphabet], dtype=np.int32)
        return Matrix2D(remap[self.data], tuple(alphabet))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix2D):
            return NotImplemented
        if self.shape != other.shape:
            return False
        if self.alphabet == other.alphabet:
            return bool(np.array_equal(self.data, other.data))
        return bool(np.array_equal(self.tokens(), other.tokens()))

    def __hash__(self) -> int:
        return hash((self.shape, tuple(self.tokens().ravel().tolist())))

    def __repr__(self) -> str:
        body = ' / '.join(self.row_string(i + 1, ' ') for i in range(min(self.rows, 4)))
        more = ' / ...' if self.rows > 4 else ''
        return f"Matrix2D({self.rows}x{self.cols}: {body}{more})"


class FactorGroup(NamedTuple):
    content: Matrix2D
    positions: List[Tuple[int, int]]


class WorkBudget:
    """Accumulates elementary steps and raises once the limit is crossed."""

    def __init__(self, limit: Optional[int] = None):
        self.limit = config.BUDGET if limit is None else int(limit)
        self.used = 0

    @classmethod
    def of(cls, budget: Union[None, int, 'WorkBudget']) -> 'WorkBudget':
        if isinstance(budget, WorkBudget):
            return budget
        return cls(budget)

    def charge(self, steps: int, what: str = 'work') -> None:
        self.used += int(steps)
        if self.used > self.limit:
            raise BudgetExceeded(
                f"work budget of {self.limit} steps exceeded while computing {what}",
                used=self.used,
                limit=self.limit,
            )


def merge_alphabets(a: Sequence[str], b: Sequence[str]) -> Tuple[str, ...]:
    merged = list(a)
    seen = set(a)
    for t in b:
        if t not in seen:
            merged.append(t)
            seen.add(t)
    return tuple(merged)


def _aligned(A: Matrix2D, B: Matrix2D) -> Tuple[np.ndarray, np.ndarray, Tuple[str, ...]]:
    if A.alphabet == B.alphabet:
        return A.data, B.data, A.alphabet
    alphabet = merge_alphabets(A.alphabet, B.alphabet)
    return A.data, B.with_alphabet(alphabet).data, alphabet


def concat_h(A: Matrix2D, B: Matrix2D) -> Matrix2D:
    """A ⊘ B: B glued to the right of A."""
    if A.rows != B.rows:
        raise RowMismatch(f"horizontal concatenation needs equal rows, got {A.rows} and {B.rows}",
                          left_rows=A.rows, right_rows=B.rows)
    a, b, alphabet = _aligned(A, B)
    return Matrix2D(np.hstack([a, b]), alphabet)


def concat_v(A: Matrix2D, B: Matrix2D) -> Matrix2D:
    """A ⊖ B: B glued below A."""
    if A.cols != B.cols:
        raise ColMismatch(f"vertical concatenation needs equal cols, got {A.cols} and {B.cols}",
                          up_cols=A.cols, down_cols=B.cols)
    a, b, alphabet = _aligned(A, B)
    return Matrix2D(np.vstack([a, b]), alphabet)


def submatrix(M: Matrix2D, i1: int, j1: int, i2: int, j2: int) -> Matrix2D:
    if not (1 <= i1 <= i2 <= M.rows and 1 <= j1 <= j2 <= M.cols):
        raise OutOfBounds(f"region [{i1}..{i2}][{j1}..{j2}] outside {M.rows}x{M.cols}",
                          i1=i1, j1=j1, i2=i2, j2=j2)
    return Matrix2D(M.data[i1 - 1:i2, j1 - 1:j2], M.alphabet)


# ---------------------------------------------------------------------------
# window labelling engine


@lru_cache(maxsize=32)
def _powers(length: int, base: int, mod: int) -> Tuple[np.ndarray, np.ndarray]:
    pw = np.empty(length + 1, dtype=np.int64)
    inv = np.empty(length + 1, dtype=np.int64)
    base_inv = pow(base, mod - 2, mod)
    p = q = 1
    for t in range(length + 1):
        pw[t] = p
        inv[t] = q
        p = p * base % mod
        q = q * base_inv % mod
    pw.setflags(write=False)
    inv.setflags(write=False)
    return pw, inv


def _rolling(moved: np.ndarray, width: int, base: int, mod: int) -> np.ndarray:
    """Normalized polynomial hash of every width-window along the last axis."""
    length = moved.shape[-1]
    pw, inv = _powers(length, base, mod)
    terms = (moved * pw[:length]) % mod
    prefix = np.zeros(moved.shape[:-1] + (length + 1,), dtype=np.int64)
    np.cumsum(terms, axis=-1, out=prefix[..., 1:])
    prefix %= mod
    count = length - width + 1
    diff = (prefix[..., width:] - prefix[..., :count]) % mod
    return diff * inv[:count] % mod


def dense_labels(keys: np.ndarray) -> Tuple[np.ndarray, int]:
    """Relabel arbitrary keys to 0..P-1 in order of first (row-major) occurrence."""
    flat = keys.ravel()
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first, kind='stable')
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse.ravel()].reshape(keys.shape), int(order.size)


def _exact_labels(windows: np.ndarray, lead_shape: Tuple[int, ...]) -> Tuple[np.ndarray, int]:
    width = windows.shape[-1]
    flat = windows.reshape(-1, width)
    _, first, inverse = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind='stable')
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse.ravel()].reshape(lead_shape), int(order.size)


def _groups_consistent(windows: np.ndarray, labels: np.ndarray, count: int) -> bool:
    lead_shape = labels.shape
    flat_labels = labels.ravel()
    _, rep = np.unique(flat_labels, return_index=True)
    width = windows.shape[-1]
    chunk = max(1, (1 << 22) // max(width, 1))
    for start in range(0, flat_labels.size, chunk):
        idx = np.arange(start, min(start + chunk, flat_labels.size))
        mine = windows[np.unravel_index(idx, lead_shape)]
        theirs = windows[np.unravel_index(rep[flat_labels[idx]], lead_shape)]
        if not np.array_equal(mine, theirs):
            return False
    return True


def axis_labels(values: np.ndarray, axis: int, width: int, verify: bool = True,
                budget: Optional[WorkBudget] = None) -> Tuple[np.ndarray, int]:
    '''
    Exact-or-hashed label of every width-long window along one axis of an
    integer array of any dimension.
    Args: values - non-negative integer array (symbols or labels of a previous pass)
          axis - axis to slide along
          width - window extent on that axis
          verify - re-compare windows inside every hash group, falling back
                   to exact grouping on a collision
    Returns: (labels with the axis shrunk to length-width+1, number of distinct windows)
    '''
    length = values.shape[axis]
    if width < 1 or width > length:
        raise ShapeTooLarge(f"window width {width} does not fit axis of length {length}",
                            axis=axis, width=width, length=length)
    budget = WorkBudget.of(budget)
    out_shape = list(values.shape)
    out_shape[axis] = length - width + 1
    windows_n = int(np.prod(out_shape))
    budget.charge(values.size + (windows_n * width if verify and width > 1 else 0), 'window labels')

    if width == 1:
        return dense_labels(values)

    moved = np.moveaxis(values, axis, -1).astype(np.int64) + 1
    keys = (_rolling(moved, width, BASE1, MOD1) << 31) | _rolling(moved, width, BASE2, MOD2)
    keys = np.moveaxis(keys, -1, axis)
    labels, count = dense_labels(keys)
    if not verify:
        return labels, count

    windows = sliding_window_view(values, width, axis=axis)
    if _groups_consistent(windows, labels, count):
        return labels, count
    logger.warning("hash collision at width %d on axis %d, regrouping exactly", width, axis)
    return _exact_labels(windows, tuple(out_shape))


def exact_width_labels(values: np.ndarray, axis: int, max_width: int,
                       budget: Union[None, int, WorkBudget] = None) -> Iterator[Tuple[int, np.ndarray, int]]:
    '''
    Exact labels of every window along one axis for widths 1..max_width.
    The width-w label is the dense label of the pair (width w-1 label, last
    cell), so each width costs one pass over its windows and no hashing.
    Yields: (width, labels with the axis shrunk to length-width+1, distinct count)
    '''
    length = values.shape[axis]
    if max_width < 1 or max_width > length:
        raise ShapeTooLarge(f"window width {max_width} does not fit axis of length {length}",
                            axis=axis, width=max_width, length=length)
    budget = WorkBudget.of(budget)
    budget.charge(values.size, 'window labels')
    base, sigma = dense_labels(values)
    yield 1, base, sigma
    cells = np.moveaxis(base, axis, -1)
    current = cells
    for width in range(2, max_width + 1):
        keys = current[..., :length - width + 1].astype(np.int64) * sigma + cells[..., width - 1:]
        budget.charge(keys.size, 'window labels')
        current, count = dense_labels(keys)
        yield width, np.moveaxis(current, -1, axis), count


def _check_shape(M: Matrix2D, k1: int, k2: int) -> None:
    if not (1 <= k1 <= M.rows and 1 <= k2 <= M.cols):
        raise ShapeTooLarge(f"shape {k1}x{k2} does not fit in {M.rows}x{M.cols}", k1=k1, k2=k2)


def exact_shape_labels(M: Matrix2D, shapes: Iterable[Tuple[int, int]],
                       budget: Union[None, int, WorkBudget] = None) -> Iterator[Tuple[Tuple[int, int], np.ndarray, int]]:
    """Exact window labels for each requested shape, width by width then height by height."""
    wanted: Dict[int, Set[int]] = {}
    for k1, k2 in shapes:
        _check_shape(M, k1, k2)
        wanted.setdefault(k2, set()).add(k1)
    if not wanted:
        return
    budget = WorkBudget.of(budget)
    for k2, row_labels, _ in exact_width_labels(M.data, 1, max(wanted), budget):
        heights = wanted.get(k2)
        if not heights:
            continue
        for k1, labels, count in exact_width_labels(row_labels, 0, max(heights), budget):
            if k1 in heights:
                yield (k1, k2), labels, count


def _verify_default(M: Matrix2D, verify: Optional[bool]) -> bool:
    return M.size <= config.VERIFY_MAX_CELLS if verify is None else verify


def window_labels(M: Matrix2D, shape: Tuple[int, int], verify: Optional[bool] = None,
                  budget: Union[None, int, WorkBudget] = None) -> Tuple[np.ndarray, int]:
    """Label of every k1×k2 window (row pass, then column pass over row labels)."""
    k1, k2 = shape
    _check_shape(M, k1, k2)
    verify = _verify_default(M, verify)
    budget = WorkBudget.of(budget)
    row_labels, _ = axis_labels(M.data, 1, k2, verify, budget)
    return axis_labels(row_labels, 0, k1, verify, budget)


def naive_window_labels(M: Matrix2D, shape: Tuple[int, int]) -> Tuple[np.ndarray, int]:
    k1, k2 = shape
    _check_shape(M, k1, k2)
    windows = sliding_window_view(M.data, (k1, k2))
    lead = windows.shape[:2]
    return _exact_labels(windows.reshape(lead + (k1 * k2,)), lead)


def factor_count(M: Matrix2D, shape: Tuple[int, int], method: str = 'hash',
                 verify: Optional[bool] = None, budget: Union[None, int, WorkBudget] = None) -> int:
    """P_M(k1, k2): number of distinct k1×k2 factors."""
    if method == 'naive':
        return naive_window_labels(M, shape)[1]
    if method != 'hash':
        raise BadParam(f"unknown method {method!r}")
    return window_labels(M, shape, verify, budget)[1]


def groups_from_labels(labels: np.ndarray, count: int) -> List[np.ndarray]:
    """Flat window indices per label, each in row-major order."""
    flat = labels.ravel()
    order = np.argsort(flat, kind='stable')
    bounds = np.cumsum(np.bincount(flat, minlength=count))
    return np.split(order, bounds[:-1])


def distinct_factors(M: Matrix2D, shape: Tuple[int, int], method: str = 'hash',
                     verify: Optional[bool] = None,
                     budget: Union[None, int, WorkBudget] = None) -> List[FactorGroup]:
    k1, k2 = shape
    if method == 'naive':
        labels, count = naive_window_labels(M, shape)
    else:
        labels, count = window_labels(M, shape, verify, budget)
    width = labels.shape[1]
    result = []
    for members in groups_from_labels(labels, count):
        positions = [(int(f) // width + 1, int(f) % width + 1) for f in members]
        i, j = positions[0]
        result.append(FactorGroup(submatrix(M, i, j, i + k1 - 1, j + k2 - 1), positions))
    return result


def substring_complexity_table(M: Matrix2D, square_only: bool = False, verify: Optional[bool] = None,
                               budget: Union[None, int, WorkBudget] = None) -> Dict[Tuple[int, int], int]:
    '''
    P_M for every shape (or every square shape), sharing the row pass across
    all heights of the same width.
    '''
    verify = _verify_default(M, verify)
    budget = WorkBudget.of(budget)
    table: Dict[Tuple[int, int], int] = {}
    for k2 in range(1, M.cols + 1):
        heights = [k2] if square_only else range(1, M.rows + 1)
        heights = [k1 for k1 in heights if k1 <= M.rows]
        if not heights:
            continue
        row_labels, _ = axis_labels(M.data, 1, k2, verify, budget)
        for k1 in heights:
            table[(k1, k2)] = axis_labels(row_labels, 0, k1, verify, budget)[1]
    logger.debug("complexity table: %d shapes, %d steps", len(table), budget.used)
    return table


# ---------------------------------------------------------------------------
# text format


def escape_token(token: str) -> str:
    """Tokens starting with '#' or '\\' get a leading backslash in text formats."""
    return '\\' + token if token[:1] in ('#', '\\') else token


def unescape_token(token: str) -> str:
    return token[1:] if token.startswith('\\') else token


def read_matrix(text: str) -> Matrix2D:
    '''
    Parse the ``2d <m> <n>`` text format.
    Lines whose first token starts with ``#`` are comments everywhere; a
    symbol starting with ``#`` is written as ``\\#`` (see escape_token).
    '''
    header = None
    rows: List[List[str]] = []
    m = n = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        spans = [(t.group(), t.start() + 1) for t in re.finditer(r'\S+', raw)]
        tokens = [t for t, _ in spans]
        if not tokens or tokens[0].startswith('#'):
            continue
        if header is None:
            if tokens[0] != '2d' or len(tokens) != 3:
                raise ParseError("expected header '2d <m> <n>'", lineno, 1)
            try:
                m, n = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise ParseError("matrix dimensions must be integers", lineno, spans[1][1])
            if m < 1 or n < 1:
                raise ParseError("matrix dimensions must be positive", lineno, spans[1][1])
            header = (m, n)
            continue
        if len(rows) >= m:
            raise ParseError(f"unexpected extra row (matrix declares {m} rows)", lineno, 1)
        if len(tokens) == n:
            rows.append([unescape_token(t) for t in tokens])
            continue
        column = len(raw.rstrip()) + 1 if len(tokens) < n else spans[n][1]
        kind = 'short' if len(tokens) < n else 'long'
        raise ParseError(f"row too {kind}: {len(tokens)} tokens, expected {n}", lineno, column)
    if header is None:
        raise ParseError("missing header", 1, 1)
    if len(rows) < m:
        raise ParseError(f"expected {m} rows, found {len(rows)}", len(text.splitlines()) + 1, 1)
    return Matrix2D.from_rows(rows)


def write_matrix(M: Matrix2D) -> str:
    lines = [f"2d {M.rows} {M.cols}"]
    for row in M.to_rows():
        lines.append(' '.join(escape_token(t) for t in row))
    return '\n'.join(lines) + '\n'


def load_matrix(path: str) -> Matrix2D:
    with open(path, 'r', encoding='utf-8') as f:
        return read_matrix(f.read())


def save_matrix(M: Matrix2D, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(write_matrix(M))


def random_matrix(m: int, n: int, sigma: int = 2, seed: int = 0) -> Matrix2D:
    """Seeded uniform matrix over tokens '0'..str(sigma-1)."""
    if m < 1 or n < 1 or sigma < 1:
        raise BadParam(f"random_matrix needs m, n, sigma >= 1, got {m}, {n}, {sigma}")
    rng = np.random.default_rng(seed)
    return Matrix2D(rng.integers(0, sigma, size=(m, n)), tuple(str(i) for i in range(sigma)))
