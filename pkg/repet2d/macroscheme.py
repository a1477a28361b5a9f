"""
2D bidirectional macro schemes: the grid is split into explicit cells and
rectangular phrases copied from a source position; a scheme is valid when
following the copy map from any cell ends at an explicit cell.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from repet2d import config
from repet2d.core2d import Matrix2D, WorkBudget, window_labels
from repet2d.errors import BadParam, CyclicMap, NotPartition, OutOfBounds, OutOfBoundsSource, ParseError, TooLarge
from repet2d.grammar2d import SECONDARY, SYMBOL, TERM, Grammar2D, grammar_tree

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]


class Phrase(NamedTuple):
    i1: int
    j1: int
    i2: int
    j2: int
    si: int
    sj: int

    @property
    def rows(self) -> int:
        return self.i2 - self.i1 + 1

    @property
    def cols(self) -> int:
        return self.j2 - self.j1 + 1


@dataclass(frozen=True)
class MacroScheme2D:
    rows: int
    cols: int
    explicit: Tuple[Tuple[Cell, str], ...]
    phrases: Tuple[Phrase, ...]

    @property
    def size(self) -> int:
        return len(self.explicit) + len(self.phrases)


def scheme_size(s: MacroScheme2D) -> int:
    return s.size


def _flat(s: MacroScheme2D, i: int, j: int) -> int:
    return (i - 1) * s.cols + (j - 1)


def _cell(s: MacroScheme2D, f: int) -> Cell:
    return (f // s.cols + 1, f % s.cols + 1)


def _pointers(s: MacroScheme2D) -> np.ndarray:
    '''
    Copy map as flat indices; explicit cells point to themselves.
    Raises NotPartition / OutOfBounds / OutOfBoundsSource / CyclicMap for a
    phrase sourced at its own top-left.
    '''
    m, n = s.rows, s.cols
    if m < 1 or n < 1:
        raise BadParam(f"scheme dimensions must be positive, got {m}x{n}")
    cover = np.zeros((m, n), dtype=np.int32)
    pointer = np.full(m * n, -1, dtype=np.int64)
    for (i, j), _ in s.explicit:
        if not (1 <= i <= m and 1 <= j <= n):
            raise OutOfBounds(f"explicit cell ({i}, {j}) outside {m}x{n}", i=i, j=j)
        cover[i - 1, j - 1] += 1
        pointer[_flat(s, i, j)] = _flat(s, i, j)
    for p in s.phrases:
        if not (1 <= p.i1 <= p.i2 <= m and 1 <= p.j1 <= p.j2 <= n):
            raise OutOfBounds(f"phrase target {p[:4]} outside {m}x{n}", phrase=str(p))
        if not (1 <= p.si and p.si + p.rows - 1 <= m and 1 <= p.sj and p.sj + p.cols - 1 <= n):
            raise OutOfBoundsSource(f"source ({p.si}, {p.sj}) of a {p.rows}x{p.cols} phrase leaves the grid",
                                    phrase=str(p))
        if (p.si, p.sj) == (p.i1, p.j1):
            raise CyclicMap(f"phrase at ({p.i1}, {p.j1}) copies itself", cell=str((p.i1, p.j1)))
        cover[p.i1 - 1:p.i2, p.j1 - 1:p.j2] += 1
        ys, xs = np.mgrid[0:p.rows, 0:p.cols]
        targets = (p.i1 - 1 + ys) * n + (p.j1 - 1 + xs)
        sources = (p.si - 1 + ys) * n + (p.sj - 1 + xs)
        pointer[targets.ravel()] = sources.ravel()
    gaps = np.argwhere(cover == 0)
    if gaps.size:
        i, j = gaps[0] + 1
        raise NotPartition(f"cell ({i}, {j}) is not covered", cell=str((int(i), int(j))))
    overlaps = np.argwhere(cover > 1)
    if overlaps.size:
        i, j = overlaps[0] + 1
        raise NotPartition(f"cell ({i}, {j}) is covered {int(cover[i - 1, j - 1])} times",
                           cell=str((int(i), int(j))))
    return pointer


def _cycle_witness(pointer: np.ndarray, start: int) -> List[int]:
    seen: Dict[int, int] = {}
    path: List[int] = []
    f = start
    while f not in seen:
        seen[f] = len(path)
        path.append(f)
        f = int(pointer[f])
    return path[seen[f]:]


def validate_scheme(s: MacroScheme2D) -> np.ndarray:
    '''
    Business: decodability check of a macro scheme
    Args: s - scheme to check
    Returns: for every cell (flat, row-major) the explicit cell its copy chain
             ends at; raises NotPartition, OutOfBoundsSource or CyclicMap
    '''
    pointer = _pointers(s)
    # pointer doubling: after ceil(log2 N)+1 rounds every acyclic chain is resolved
    root = pointer.copy()
    for _ in range(max(1, int(root.size).bit_length()) + 1):
        root = root[root]
    fixed = root[root] == root
    explicit = pointer[root] == root
    bad = np.flatnonzero(~(fixed & explicit))
    if bad.size:
        cycle = _cycle_witness(pointer, int(bad[0]))
        witness = [_cell(s, f) for f in cycle[:8]]
        raise CyclicMap(f"copy map cycles through {witness[0]} (cycle length {len(cycle)})",
                        cell=str(witness[0]), witness=str(witness))
    return root


def is_valid(s: MacroScheme2D) -> bool:
    try:
        validate_scheme(s)
    except (NotPartition, CyclicMap, OutOfBoundsSource, OutOfBounds):
        return False
    return True


def decode(s: MacroScheme2D) -> Matrix2D:
    """The unique matrix consistent with a valid scheme."""
    root = validate_scheme(s)
    tokens = sorted({t for _, t in s.explicit})
    index = {t: k for k, t in enumerate(tokens)}
    ids = np.zeros(s.rows * s.cols, dtype=np.int32)
    for (i, j), token in s.explicit:
        ids[_flat(s, i, j)] = index[token]
    return Matrix2D(ids[root].reshape(s.rows, s.cols), tuple(tokens))


def literal_scheme(M: Matrix2D) -> MacroScheme2D:
    explicit = tuple(((i, j), M.at(i, j)) for i in range(1, M.rows + 1) for j in range(1, M.cols + 1))
    return MacroScheme2D(M.rows, M.cols, explicit, ())


def identity_scheme(n: int) -> MacroScheme2D:
    '''
    Six pieces for I_n, n >= 3: explicit 1 at (1,1) and 0 at (1,2), (2,1);
    the rest of row 1 copied from (1,2), the rest of column 1 from (2,1), and
    the lower-right (n-1)×(n-1) block copied from (1,1).
    '''
    if n < 1:
        raise BadParam(f"identity scheme needs n >= 1, got {n}")
    if n <= 2:
        from repet2d.families import identity

        return literal_scheme(identity(n))
    explicit = (((1, 1), '1'), ((1, 2), '0'), ((2, 1), '0'))
    phrases = (
        Phrase(1, 3, 1, n, 1, 2),
        Phrase(3, 1, n, 1, 2, 1),
        Phrase(2, 2, n, n, 1, 1),
    )
    return MacroScheme2D(n, n, explicit, phrases)


def from_grammar(G: Grammar2D) -> MacroScheme2D:
    '''
    Scheme read off the grammar tree: symbol leaves and secondary terminal
    variables become explicit cells, other secondary leaves copy their primary
    occurrence, collapsed run leaves copy the first copy of the run.
    '''
    tree = grammar_tree(G)
    variables = G.variables
    explicit: List[Tuple[Cell, str]] = []
    phrases: List[Phrase] = []
    for node in tree.leaves():
        i1, j1, i2, j2 = node.rect
        if node.kind == SYMBOL:
            explicit.append(((i1, j1), node.symbol))
        elif node.kind == SECONDARY and variables[node.var].kind == TERM:
            explicit.append(((i1, j1), variables[node.var].symbol))
        else:
            phrases.append(Phrase(i1, j1, i2, j2, *node.copy_of))
    rows, cols = tree.root.rect[2], tree.root.rect[3]
    logger.debug("scheme from grammar: %d explicit cells, %d phrases", len(explicit), len(phrases))
    return MacroScheme2D(rows, cols, tuple(sorted(explicit)), tuple(sorted(phrases)))


# ---------------------------------------------------------------------------
# exact b on tiny matrices


def _acyclic(pointer: Sequence[int]) -> bool:
    state = [0] * len(pointer)
    for start in range(len(pointer)):
        path = []
        f = start
        while state[f] == 0 and pointer[f] != f:
            state[f] = 1
            path.append(f)
            f = pointer[f]
        if state[f] == 1:
            return False
        for g in path:
            state[g] = 2
    return True


def b_exact(M: Matrix2D, cell_limit: Optional[int] = None,
            budget: Union[None, int, WorkBudget] = None) -> MacroScheme2D:
    '''
    Business: smallest valid macro scheme of a tiny matrix
    Args: M - matrix with at most cell_limit cells
    Returns: MacroScheme2D of minimum size; sizes are tried in increasing order
             starting from the number of distinct symbols
    '''
    limit = config.B_CELL_LIMIT if cell_limit is None else cell_limit
    if M.size > limit:
        raise TooLarge(f"exact macro-scheme search limited to {limit} cells, matrix has {M.size}",
                       cells=M.size, limit=limit)
    budget = WorkBudget.of(budget)
    m, n = M.rows, M.cols
    data = M.data
    N = m * n

    # every rectangle of at least two cells with every valid source
    options: Dict[int, List[Phrase]] = {f: [] for f in range(N)}
    for i in range(m):
        for j in range(n):
            for h in range(1, m - i + 1):
                for w in range(1, n - j + 1):
                    if h * w < 2:
                        continue
                    block = data[i:i + h, j:j + w]
                    for si in range(m - h + 1):
                        for sj in range(n - w + 1):
                            if (si, sj) != (i, j) and np.array_equal(data[si:si + h, sj:sj + w], block):
                                options[i * n + j].append(Phrase(i + 1, j + 1, i + h, j + w, si + 1, sj + 1))

    covered = [False] * N
    pointer = list(range(N))
    pieces: List[Union[Phrase, Cell]] = []

    def _cell_of(f: int) -> Cell:
        return (f // n + 1, f % n + 1)

    def search(start: int, left: int) -> bool:
        while start < N and covered[start]:
            start += 1
        if start == N:
            return _acyclic(pointer)
        if left == 0:
            return False
        budget.charge(1, 'macro scheme search')
        covered[start] = True
        pointer[start] = start
        pieces.append(_cell_of(start))
        if search(start + 1, left - 1):
            return True
        pieces.pop()
        for p in options[start]:
            cells = [(y - 1) * n + (x - 1) for y in range(p.i1, p.i2 + 1) for x in range(p.j1, p.j2 + 1)]
            if any(covered[f] for f in cells[1:]):
                continue
            for f in cells:
                covered[f] = True
                y, x = divmod(f, n)
                pointer[f] = (p.si - 1 + y - (p.i1 - 1)) * n + (p.sj - 1 + x - (p.j1 - 1))
            pieces.append(p)
            if search(start + 1, left - 1):
                return True
            pieces.pop()
            for f in cells:
                covered[f] = False
                pointer[f] = f
        covered[start] = False
        return False

    target = len(M.symbols_used())
    while not search(0, target):
        logger.debug("no macro scheme of size %d", target)
        target += 1
    explicit = tuple(sorted((piece, M.at(*piece)) for piece in pieces if not isinstance(piece, Phrase)))
    phrases = tuple(sorted(piece for piece in pieces if isinstance(piece, Phrase)))
    return MacroScheme2D(m, n, explicit, phrases)


def unique_square_certificate(M: Matrix2D, k: int,
                              budget: Union[None, int, WorkBudget] = None) -> Tuple[bool, int]:
    '''
    Whether every k×k factor occurs at most once.
    Returns: (unique, ceil(m/k) * ceil(n/k)) where the second value is the
             phrase lower bound for square-phrase schemes, meaningful only
             when unique is True
    '''
    if not (1 <= k <= min(M.rows, M.cols)):
        raise BadParam(f"k must be in 1..{min(M.rows, M.cols)}, got {k}")
    labels, count = window_labels(M, (k, k), True, budget)
    bound = -(-M.rows // k) * -(-M.cols // k)
    return count == labels.size, bound


def phrase_lower_bound(M: Matrix2D, k: int, budget: Union[None, int, WorkBudget] = None) -> Optional[int]:
    unique, bound = unique_square_certificate(M, k, budget)
    return bound if unique else None


# ---------------------------------------------------------------------------
# text format


def read_scheme(text: str) -> MacroScheme2D:
    header = None
    explicit: List[Tuple[Cell, str]] = []
    phrases: List[Phrase] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        spans = [(t.group(), t.start() + 1) for t in re.finditer(r'\S+', raw)]
        if not spans or spans[0][0].startswith('#'):
            continue
        tokens = [t for t, _ in spans]
        expected = {'scheme': 3, 'exp': 4, 'phr': 7}
        if tokens[0] not in expected or len(tokens) != expected[tokens[0]]:
            raise ParseError(f"malformed scheme line starting with {tokens[0]!r}", lineno, 1)
        if (tokens[0] == 'scheme') != (header is None):
            raise ParseError("the 'scheme <m> <n>' header must come first, exactly once", lineno, 1)
        numeric = tokens[1:3] if tokens[0] == 'exp' else tokens[1:]
        for t, (_, col) in zip(numeric, spans[1:]):
            if not t.isdigit():
                raise ParseError(f"expected a positive integer, got {t!r}", lineno, col)
        if tokens[0] == 'scheme':
            header = (int(tokens[1]), int(tokens[2]))
        elif tokens[0] == 'exp':
            explicit.append(((int(tokens[1]), int(tokens[2])), tokens[3]))
        else:
            phrases.append(Phrase(*(int(t) for t in tokens[1:])))
    if header is None:
        raise ParseError("missing header", 1, 1)
    return MacroScheme2D(header[0], header[1], tuple(explicit), tuple(phrases))


def write_scheme(s: MacroScheme2D) -> str:
    lines = [f"scheme {s.rows} {s.cols}"]
    lines.extend(f"exp {i} {j} {token}" for (i, j), token in s.explicit)
    lines.extend("phr " + ' '.join(str(v) for v in p) for p in s.phrases)
    return '\n'.join(lines) + '\n'


def load_scheme(path: str) -> MacroScheme2D:
    with open(path, 'r', encoding='utf-8') as f:
        return read_scheme(f.read())
