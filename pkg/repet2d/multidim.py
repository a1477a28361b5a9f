"""
d-dimensional strings: axis concatenation, dD SLP/RLSLP validation and
expansion, dD substring complexity and delta, attractor checks and macro
schemes with box phrases. A 2D matrix embeds as the d = 2 case with
axis 1 = rows and axis 2 = columns.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from repet2d.core2d import Matrix2D, WorkBudget, axis_labels, escape_token, merge_alphabets, unescape_token
from repet2d.errors import (
    AxisMismatch,
    BadParam,
    CyclicMap,
    DimMismatch,
    DuplicateRHS,
    NotPartition,
    OutOfBounds,
    OutOfBoundsSource,
    ParseError,
)
from repet2d.grammar2d import HORIZ, RUN_H, RUN_V, TERM, VERT, Grammar2D, _topological, slp_1d
from repet2d.measures import AttractorVerdict, DeltaResult

logger = logging.getLogger(__name__)

CAT, RUN = 'cat', 'run'
Index = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class NdString:
    data: np.ndarray
    alphabet: Tuple[str, ...]

    def __post_init__(self):
        data = np.array(self.data, dtype=np.int32, copy=True)
        if data.ndim < 1 or min(data.shape) < 1:
            raise BadParam(f"dD string needs d >= 1 and every n_i >= 1, got shape {data.shape}")
        alphabet = tuple(str(t) for t in self.alphabet)
        if data.min() < 0 or data.max() >= len(alphabet):
            raise BadParam("symbol id outside the alphabet")
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'alphabet', alphabet)

    @property
    def d(self) -> int:
        return self.data.ndim

    @property
    def dims(self) -> Index:
        return tuple(int(v) for v in self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def at(self, *index: int) -> str:
        if len(index) != self.d or not all(1 <= i <= n for i, n in zip(index, self.dims)):
            raise OutOfBounds(f"index {index} outside {self.dims}", index=str(index))
        return self.alphabet[int(self.data[tuple(i - 1 for i in index)])]

    def tokens(self) -> np.ndarray:
        return np.array(self.alphabet, dtype=object)[self.data]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NdString):
            return NotImplemented
        if self.dims != other.dims:
            return False
        if self.alphabet == other.alphabet:
            return bool(np.array_equal(self.data, other.data))
        return bool(np.array_equal(self.tokens(), other.tokens()))

    def __hash__(self) -> int:
        return hash((self.dims, tuple(self.tokens().ravel().tolist())))

    def __repr__(self) -> str:
        return f"NdString(d={self.d}, dims={self.dims})"


def embed_2d(M: Matrix2D) -> NdString:
    return NdString(M.data, M.alphabet)


def to_2d(S: NdString) -> Matrix2D:
    if S.d != 2:
        raise AxisMismatch(f"expected a 2D string, got d={S.d}", d=S.d)
    return Matrix2D(S.data, S.alphabet)


def concat_axis(A: NdString, B: NdString, axis: int) -> NdString:
    '''
    Concatenation along axis (1-based): dims add on that axis and must agree
    on every other one.
    '''
    if A.d != B.d:
        raise AxisMismatch(f"cannot concatenate d={A.d} with d={B.d}", left=A.d, right=B.d)
    if not 1 <= axis <= A.d:
        raise AxisMismatch(f"axis {axis} outside 1..{A.d}", axis=axis)
    for k, (a, b) in enumerate(zip(A.dims, B.dims), start=1):
        if k != axis and a != b:
            raise AxisMismatch(f"dims differ on axis {k}: {a} vs {b}", axis=k, left=a, right=b)
    alphabet = merge_alphabets(A.alphabet, B.alphabet)
    index = {t: i for i, t in enumerate(alphabet)}
    remap_b = np.array([index[t] for t in B.alphabet], dtype=np.int32)
    return NdString(np.concatenate([A.data, remap_b[B.data]], axis=axis - 1), alphabet)


# ---------------------------------------------------------------------------
# text format


def read_nd(text: str) -> NdString:
    '''
    ``nd <d> <n1> ... <nd>`` followed by the cells in row-major order (last
    axis fastest), any whitespace layout; ``#`` lines are comments.
    '''
    header: Optional[Index] = None
    cells: List[str] = []
    total = 0
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        spans = [(t.group(), t.start() + 1) for t in re.finditer(r'\S+', raw)]
        if not spans or spans[0][0].startswith('#'):
            continue
        last_line = lineno
        if header is None:
            tokens = [t for t, _ in spans]
            if tokens[0] != 'nd' or len(tokens) < 3 or not all(t.isdigit() for t in tokens[1:]):
                raise ParseError("expected header 'nd <d> <n1> ... <nd>'", lineno, 1)
            d = int(tokens[1])
            dims = tuple(int(t) for t in tokens[2:])
            if d < 1 or len(dims) != d or min(dims) < 1:
                raise ParseError(f"header declares d={d} but lists {len(dims)} positive extents", lineno, spans[1][1])
            header = dims
            total = int(np.prod(dims))
            continue
        for token, col in spans:
            if len(cells) == total:
                raise ParseError(f"more than {total} cells", lineno, col)
            cells.append(unescape_token(token))
    if header is None:
        raise ParseError("missing header", 1, 1)
    if len(cells) < total:
        raise ParseError(f"expected {total} cells, found {len(cells)}", last_line + 1, 1)
    alphabet = tuple(sorted(set(cells)))
    index = {t: i for i, t in enumerate(alphabet)}
    data = np.array([index[t] for t in cells], dtype=np.int32).reshape(header)
    return NdString(data, alphabet)


def write_nd(S: NdString) -> str:
    lines = [f"nd {S.d} " + ' '.join(str(n) for n in S.dims)]
    rows = S.data.reshape(-1, S.dims[-1])
    lines.extend(' '.join(escape_token(S.alphabet[v]) for v in row) for row in rows.tolist())
    return '\n'.join(lines) + '\n'


def load_nd(path: str) -> NdString:
    with open(path, 'r', encoding='utf-8') as f:
        return read_nd(f.read())


# ---------------------------------------------------------------------------
# dD grammars


@dataclass(frozen=True)
class RuleNd:
    kind: str
    axis: int = 0
    children: Tuple[str, ...] = ()
    symbol: Optional[str] = None
    count: int = 1

    @property
    def size(self) -> int:
        return 1 if self.kind == TERM else 2

    def text(self) -> str:
        if self.kind == TERM:
            return f"term {self.symbol}"
        if self.kind == RUN:
            return f"run {self.axis} {self.count} {self.children[0]}"
        return f"cat {self.axis} {self.children[0]} {self.children[1]}"


@dataclass(frozen=True)
class GrammarNd:
    rules: Tuple[Tuple[str, RuleNd], ...]
    axiom: str
    d: int

    @property
    def variables(self) -> Dict[str, RuleNd]:
        return dict(self.rules)

    @property
    def size(self) -> int:
        return sum(rule.size for _, rule in self.rules)


class NdInfo(NamedTuple):
    dims: Dict[str, Index]
    size: int
    order: List[str]


def validate_nd(G: GrammarNd) -> NdInfo:
    """Same checks as the 2D validator, with per-axis compatibility."""
    if G.d < 1:
        raise BadParam(f"grammar dimension must be >= 1, got {G.d}")
    order = _topological(G)
    variables = G.variables
    seen: Dict[RuleNd, str] = {}
    for name, rule in G.rules:
        if rule in seen:
            raise DuplicateRHS(f"variables {seen[rule]} and {name} share the right-hand side '{rule.text()}'",
                               rule=name, other=seen[rule])
        seen[rule] = name
        if rule.kind != TERM and not 1 <= rule.axis <= G.d:
            raise BadParam(f"rule {name} uses axis {rule.axis} outside 1..{G.d}", rule=name)
        if rule.kind == RUN and rule.count < 2:
            raise BadParam(f"run rule {name} needs a count >= 2, got {rule.count}", rule=name)
    dims: Dict[str, Index] = {}
    for name in order:
        rule = variables[name]
        if rule.kind == TERM:
            dims[name] = (1,) * G.d
            continue
        a = rule.axis - 1
        first = list(dims[rule.children[0]])
        if rule.kind == RUN:
            first[a] *= rule.count
        elif rule.kind == CAT:
            second = dims[rule.children[1]]
            for k in range(G.d):
                if k != a and first[k] != second[k]:
                    raise DimMismatch(f"rule {name}: children differ on axis {k + 1} ({first[k]} vs {second[k]})",
                                      rule=name, axis=k + 1)
            first[a] += second[a]
        else:
            raise BadParam(f"rule {name} has unknown kind {rule.kind!r}", rule=name)
        dims[name] = tuple(first)
    return NdInfo(dims, G.size, order)


def expand_nd(G: GrammarNd, budget: Union[None, int, WorkBudget] = None) -> NdString:
    info = validate_nd(G)
    budget = WorkBudget.of(budget)
    variables = G.variables
    alphabet = tuple(sorted({rule.symbol for _, rule in G.rules if rule.kind == TERM}))
    index = {t: i for i, t in enumerate(alphabet)}
    out: Dict[str, np.ndarray] = {}
    for name in info.order:
        budget.charge(int(np.prod(info.dims[name])), 'dD expansion')
        rule = variables[name]
        if rule.kind == TERM:
            out[name] = np.full((1,) * G.d, index[rule.symbol], dtype=np.int32)
        elif rule.kind == CAT:
            out[name] = np.concatenate([out[rule.children[0]], out[rule.children[1]]], axis=rule.axis - 1)
        else:
            reps = [1] * G.d
            reps[rule.axis - 1] = rule.count
            out[name] = np.tile(out[rule.children[0]], reps)
    return NdString(out[G.axiom], alphabet)


def write_grammar_nd(G: GrammarNd) -> str:
    lines = [f"axiom {G.axiom} d={G.d}"] + [f"{name} = {rule.text()}" for name, rule in G.rules]
    return '\n'.join(lines) + '\n'


_FROM_2D = {HORIZ: (CAT, 2), VERT: (CAT, 1), RUN_H: (RUN, 2), RUN_V: (RUN, 1)}


def grammar_from_2d(G: Grammar2D) -> GrammarNd:
    """Lossless embedding: horizontal rules act on axis 2, vertical on axis 1."""
    rules = []
    for name, rule in G.rules:
        if rule.kind == TERM:
            rules.append((name, RuleNd(TERM, symbol=rule.symbol)))
        else:
            kind, axis = _FROM_2D[rule.kind]
            rules.append((name, RuleNd(kind, axis, rule.children, None, rule.count)))
    return GrammarNd(tuple(rules), G.axiom, 2)


def _shifted(G: GrammarNd, symbol_prefix: str, name_prefix: str) -> List[Tuple[str, RuleNd]]:
    """Copy of G one dimension up: axes move by one and terminals gain a leading bit."""
    rules = []
    for name, rule in G.rules:
        if rule.kind == TERM:
            rules.append((name_prefix + name, RuleNd(TERM, symbol=symbol_prefix + rule.symbol)))
        else:
            children = tuple(name_prefix + c for c in rule.children)
            rules.append((name_prefix + name, RuleNd(rule.kind, rule.axis + 1, children, None, rule.count)))
    return rules


def build_bdk_grammar(d: int, k: int) -> GrammarNd:
    '''
    Business: SLP for the d-dimensional de Bruijn hypercube B_{d,k}
    Args: d - dimension; k - de Bruijn order; d*k <= 18
    Returns: GrammarNd built by doubling: the (d-1)-dimensional grammar is
             copied with a leading 0 and a leading 1 on every terminal, and the
             1D grammar of D_k is lifted onto axis 1 over the two copies
    '''
    if d < 1 or k < 1 or d * k > 18:
        raise BadParam(f"bdk grammar needs d, k >= 1 and d*k <= 18, got d={d}, k={k}")
    from repet2d.families import debruijn_word

    base = slp_1d([str(b) for b in debruijn_word(k)], HORIZ)
    line = GrammarNd(tuple((name, RuleNd(TERM, symbol=rule.symbol) if rule.kind == TERM
                            else RuleNd(CAT, 1, rule.children)) for name, rule in base.rules), base.axiom, 1)
    grammar = line
    for dim in range(2, d + 1):
        zero = _shifted(grammar, '0', 'Z_')
        one = _shifted(grammar, '1', 'O_')
        axioms = {'0': 'Z_' + grammar.axiom, '1': 'O_' + grammar.axiom}
        replace = {name: axioms[rule.symbol] for name, rule in line.rules if rule.kind == TERM}
        lifted = [('L_' + name, RuleNd(CAT, 1, tuple(replace.get(c, 'L_' + c) for c in rule.children)))
                  for name, rule in line.rules if rule.kind != TERM]
        grammar = GrammarNd(tuple(zero + one + lifted), 'L_' + line.axiom, dim)
    logger.debug("bdk grammar d=%d k=%d: %d rules, size %d", d, k, len(grammar.rules), grammar.size)
    return grammar


# ---------------------------------------------------------------------------
# complexity and delta


def _window_labels_nd(S: NdString, shape: Sequence[int], verify: bool,
                      budget: WorkBudget) -> Tuple[np.ndarray, int]:
    if len(shape) != S.d or not all(1 <= k <= n for k, n in zip(shape, S.dims)):
        raise BadParam(f"shape {tuple(shape)} does not fit {S.dims}")
    labels, count = S.data, 0
    for axis in reversed(range(S.d)):
        labels, count = axis_labels(labels, axis, int(shape[axis]), verify, budget)
    return labels, count


def factor_count_nd(S: NdString, shape: Sequence[int], verify: bool = True,
                    budget: Union[None, int, WorkBudget] = None) -> int:
    """Distinct sub-boxes of the given extents; passes run from the last axis to the first."""
    return _window_labels_nd(S, shape, verify, WorkBudget.of(budget))[1]


def delta_nd(S: NdString, verify: bool = True, keep_table: bool = False,
             budget: Union[None, int, WorkBudget] = None) -> DeltaResult:
    '''
    Business: exact delta of a dD string
    Args: S - dD string; budget - caps the window work over the whole shape lattice
    Returns: DeltaResult; passes over the last axes are shared by every
             extent choice on the earlier axes; ties go to the smaller volume,
             then the lexicographically smaller shape
    '''
    budget = WorkBudget.of(budget)
    table: Dict[Index, int] = {}
    stack: List[Tuple[np.ndarray, int, Index]] = [(S.data, S.d - 1, ())]
    while stack:
        values, axis, suffix = stack.pop()
        for w in range(1, S.dims[axis] + 1):
            labels, count = axis_labels(values, axis, w, verify, budget)
            if axis == 0:
                table[(w,) + suffix] = count
            else:
                stack.append((labels, axis - 1, (w,) + suffix))
    best_value, best_shape = None, None
    for shape in sorted(table, key=lambda s: (int(np.prod(s)), s)):
        value = Fraction(table[shape], int(np.prod(shape)))
        if best_value is None or value > best_value:
            best_value, best_shape = value, shape
    return DeltaResult(best_value, best_shape, table if keep_table else None)


def all_boxes_unique(S: NdString, side: int, budget: Union[None, int, WorkBudget] = None) -> bool:
    """Every side^d sub-box occurs once."""
    labels, count = _window_labels_nd(S, (side,) * S.d, True, WorkBudget.of(budget))
    return count == labels.size


def is_attractor_nd(S: NdString, positions: Iterable[Sequence[int]],
                    budget: Union[None, int, WorkBudget] = None) -> AttractorVerdict:
    '''
    dD attractor check over every box shape, smallest volume first.
    Returns: AttractorVerdict naming the first box without an attracted occurrence
    '''
    budget = WorkBudget.of(budget)
    marks = np.zeros(S.dims, dtype=np.int32)
    for pos in positions:
        pos = tuple(int(p) for p in pos)
        if len(pos) != S.d or not all(1 <= p <= n for p, n in zip(pos, S.dims)):
            raise OutOfBounds(f"attractor position {pos} outside {S.dims}", position=str(pos))
        marks[tuple(p - 1 for p in pos)] = 1
    shapes = sorted(itertools.product(*(range(1, n + 1) for n in S.dims)), key=lambda s: (int(np.prod(s)), s))
    for shape in shapes:
        labels, count = _window_labels_nd(S, shape, True, budget)
        budget.charge(labels.size * int(np.prod(shape)), 'attractor boxes')
        hits = sliding_window_view(marks, shape).sum(axis=tuple(range(S.d, 2 * S.d))) > 0
        covered = np.zeros(count, dtype=bool)
        covered[labels[hits]] = True
        if covered.all():
            continue
        missing = int(np.flatnonzero(~covered)[0])
        first = np.argwhere(labels == missing)[0]
        position = tuple(int(v) + 1 for v in first)
        box = S.data[tuple(slice(p - 1, p - 1 + k) for p, k in zip(position, shape))]
        return AttractorVerdict(False, tuple(shape), position, NdString(box, S.alphabet))
    return AttractorVerdict(True)


# ---------------------------------------------------------------------------
# dD macro schemes


class BoxPhrase(NamedTuple):
    lo: Index
    hi: Index
    source: Index

    @property
    def extents(self) -> Index:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))


@dataclass(frozen=True)
class MacroSchemeNd:
    dims: Index
    explicit: Tuple[Tuple[Index, str], ...]
    phrases: Tuple[BoxPhrase, ...] = field(default_factory=tuple)

    @property
    def size(self) -> int:
        return len(self.explicit) + len(self.phrases)


def scheme_to_nd(s) -> MacroSchemeNd:
    """Embed a 2D MacroScheme2D."""
    return MacroSchemeNd((s.rows, s.cols), tuple(s.explicit),
                         tuple(BoxPhrase((p.i1, p.j1), (p.i2, p.j2), (p.si, p.sj)) for p in s.phrases))


def validate_scheme_nd(s: MacroSchemeNd) -> np.ndarray:
    '''
    Partition and decodability check with box phrases.
    Returns: flat index of the explicit cell every cell resolves to
    '''
    dims = tuple(s.dims)
    d = len(dims)
    cover = np.zeros(dims, dtype=np.int32)
    pointer = np.full(int(np.prod(dims)), -1, dtype=np.int64)
    for pos, _ in s.explicit:
        if len(pos) != d or not all(1 <= p <= n for p, n in zip(pos, dims)):
            raise OutOfBounds(f"explicit cell {pos} outside {dims}", cell=str(pos))
        cell = tuple(p - 1 for p in pos)
        cover[cell] += 1
        flat = int(np.ravel_multi_index(cell, dims))
        pointer[flat] = flat
    for p in s.phrases:
        if len(p.lo) != d or not all(1 <= l <= h <= n for l, h, n in zip(p.lo, p.hi, dims)):
            raise OutOfBounds(f"phrase box {p.lo}-{p.hi} outside {dims}", phrase=str(p))
        if not all(1 <= src and src + e - 1 <= n for src, e, n in zip(p.source, p.extents, dims)):
            raise OutOfBoundsSource(f"source {p.source} of box {p.extents} leaves the grid", phrase=str(p))
        if tuple(p.source) == tuple(p.lo):
            raise CyclicMap(f"box at {p.lo} copies itself", cell=str(p.lo))
        cover[tuple(slice(l - 1, h) for l, h in zip(p.lo, p.hi))] += 1
        offsets = np.indices(p.extents).reshape(d, -1)
        targets = np.ravel_multi_index(tuple(offsets + np.array(p.lo)[:, None] - 1), dims)
        sources = np.ravel_multi_index(tuple(offsets + np.array(p.source)[:, None] - 1), dims)
        pointer[targets] = sources
    bad = np.argwhere(cover != 1)
    if bad.size:
        cell = tuple(int(v) + 1 for v in bad[0])
        raise NotPartition(f"cell {cell} is covered {int(cover[tuple(bad[0])])} times", cell=str(cell))
    root = pointer.copy()
    for _ in range(int(root.size).bit_length() + 1):
        root = root[root]
    stuck = np.flatnonzero(pointer[root] != root)
    if stuck.size:
        cell = tuple(int(v) + 1 for v in np.unravel_index(int(stuck[0]), dims))
        raise CyclicMap(f"copy map from {cell} never reaches an explicit cell", cell=str(cell))
    return root


def decode_nd(s: MacroSchemeNd) -> NdString:
    root = validate_scheme_nd(s)
    tokens = sorted({t for _, t in s.explicit})
    index = {t: i for i, t in enumerate(tokens)}
    ids = np.zeros(root.size, dtype=np.int32)
    for pos, token in s.explicit:
        ids[int(np.ravel_multi_index(tuple(p - 1 for p in pos), s.dims))] = index[token]
    return NdString(ids[root].reshape(s.dims), tuple(tokens))
