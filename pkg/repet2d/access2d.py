"""
Direct access to single cells of a grammar-compressed matrix through a
heavy-path decomposition of the grammar.

Every variable stores the path obtained by always descending into its
heaviest child (largest expansion, ties to the left/upper child, first copy
for run-length rules) together with the up/down/left/right size sequences:
how many rows above/below and columns left/right of the i-th path variable
lie inside the expansion of the path start. A query locates, with
predecessor searches on those sequences, the last path variable whose
rectangle still holds the cell, then hops into the light child.
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from repet2d.core2d import WorkBudget
from repet2d.errors import HopBoundExceeded, OutOfBounds
from repet2d.grammar2d import HORIZ, RUN_H, RUN_V, TERM, VERT, Grammar2D, terminal_alphabet, validate

logger = logging.getLogger(__name__)

LEFT, RIGHT, UP, DOWN = 'L', 'R', 'U', 'D'


class HeavyEdge(NamedTuple):
    parent: str
    child: str
    side: str
    w_l: int
    w_r: int
    w_u: int
    w_d: int


@dataclass
class HeavyPathInfo:
    var: str
    dims: Tuple[int, int]
    heavy_symbol: int
    heavy_occ: Tuple[int, int]
    path: List[str]
    up: List[int]
    down: List[int]
    left: List[int]
    right: List[int]

    @property
    def length(self) -> int:
        return len(self.path) - 1


@dataclass
class AccessIndex:
    grammar: Grammar2D
    dims: Dict[str, Tuple[int, int]]
    alphabet: Tuple[str, ...]
    heavy: Dict[str, HeavyEdge]
    paths: Dict[str, HeavyPathInfo] = field(default_factory=dict)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.dims[self.grammar.axiom]


class AccessResult(NamedTuple):
    symbol: int
    token: str
    hops: int


def _heavy_edge(name: str, rule, dims: Dict[str, Tuple[int, int]]) -> HeavyEdge:
    if rule.kind in (HORIZ, VERT):
        first, second = rule.children
        (r1, c1), (r2, c2) = dims[first], dims[second]
        first_heavy = r1 * c1 >= r2 * c2
        if rule.kind == HORIZ:
            if first_heavy:
                return HeavyEdge(name, first, LEFT, 0, c2, 0, 0)
            return HeavyEdge(name, second, RIGHT, c1, 0, 0, 0)
        if first_heavy:
            return HeavyEdge(name, first, UP, 0, 0, 0, r2)
        return HeavyEdge(name, second, DOWN, 0, 0, r1, 0)
    child = rule.children[0]
    r, c = dims[child]
    if rule.kind == RUN_H:
        return HeavyEdge(name, child, LEFT, 0, (rule.count - 1) * c, 0, 0)
    return HeavyEdge(name, child, UP, 0, 0, 0, (rule.count - 1) * r)


def build_index(G: Grammar2D) -> AccessIndex:
    '''
    Business: heavy-path index for cell queries on an SLP or RLSLP
    Args: G - valid grammar
    Returns: AccessIndex with one materialized heavy path per variable
    '''
    info = validate(G)
    variables = G.variables
    alphabet = terminal_alphabet(G)
    symbol_id = {t: i for i, t in enumerate(alphabet)}
    heavy: Dict[str, HeavyEdge] = {}
    for name in info.order:
        rule = variables[name]
        if rule.kind != TERM:
            heavy[name] = _heavy_edge(name, rule, info.dims)
    index = AccessIndex(G, info.dims, alphabet, heavy)

    # children-first order lets every path reuse its heavy child's path
    for name in info.order:
        rule = variables[name]
        if rule.kind == TERM:
            index.paths[name] = HeavyPathInfo(name, (1, 1), symbol_id[rule.symbol], (1, 1), [name], [0], [0], [0], [0])
            continue
        edge = heavy[name]
        below = index.paths[edge.child]
        index.paths[name] = HeavyPathInfo(
            var=name,
            dims=info.dims[name],
            heavy_symbol=below.heavy_symbol,
            heavy_occ=(below.heavy_occ[0] + edge.w_u, below.heavy_occ[1] + edge.w_l),
            path=[name] + below.path,
            up=[0] + [u + edge.w_u for u in below.up],
            down=[0] + [d + edge.w_d for d in below.down],
            left=[0] + [v + edge.w_l for v in below.left],
            right=[0] + [v + edge.w_r for v in below.right],
        )
    logger.debug("access index: %d variables, longest heavy path %d", len(index.paths),
                 max(p.length for p in index.paths.values()))
    return index


def heavy_forest(idx: AccessIndex) -> Dict[str, List[HeavyEdge]]:
    """Reversed heavy edges grouped by tree root (one trie per terminal variable)."""
    forest: Dict[str, List[HeavyEdge]] = {}
    for name, path in idx.paths.items():
        root = path.path[-1]
        forest.setdefault(root, [])
        if name in idx.heavy:
            forest[root].append(idx.heavy[name])
    return forest


def _last_not_above(seq: List[int], value: int) -> int:
    """Largest i with seq[i] <= value (seq non-decreasing, seq[0] = 0)."""
    return bisect_right(seq, value) - 1


def access(idx: AccessIndex, y: int, x: int, debug: bool = False) -> AccessResult:
    '''
    Symbol at row y, column x (1-based) of the expansion of the axiom.
    Returns: AccessResult(symbol id, token, number of heavy-path switches)
    '''
    m, n = idx.shape
    if not (1 <= y <= m and 1 <= x <= n):
        raise OutOfBounds(f"cell ({y}, {x}) outside {m}x{n}", y=y, x=x)
    variables = idx.grammar.variables
    var = idx.grammar.axiom
    hops = 0
    while True:
        info = idx.paths[var]
        rows, cols = info.dims
        y0, x0 = info.heavy_occ
        if (y, x) == (y0, x0):
            return AccessResult(info.heavy_symbol, idx.alphabet[info.heavy_symbol], hops)
        k = info.length
        if y > y0:
            i = _last_not_above(info.down, rows - y)
        elif y < y0:
            i = _last_not_above(info.up, y - 1)
        else:
            i = k
        if x > x0:
            j = _last_not_above(info.right, cols - x)
        elif x < x0:
            j = _last_not_above(info.left, x - 1)
        else:
            j = k
        step = min(i, j)
        if debug:
            inside = info.up[step] + 1 <= y <= rows - info.down[step] and info.left[step] + 1 <= x <= cols - info.right[step]
            nxt = step + 1
            deeper = info.up[nxt] + 1 <= y <= rows - info.down[nxt] and info.left[nxt] + 1 <= x <= cols - info.right[nxt]
            assert inside and not deeper, f"path step {step} does not separate ({y}, {x}) in {var}"
        node = info.path[step]
        ly, lx = y - info.up[step], x - info.left[step]
        rule = variables[node]
        edge = idx.heavy[node]
        if rule.kind == HORIZ:
            first, second = rule.children
            if edge.side == LEFT:
                var, y, x = second, ly, lx - idx.dims[first][1]
            else:
                var, y, x = first, ly, lx
        elif rule.kind == VERT:
            first, second = rule.children
            if edge.side == UP:
                var, y, x = second, ly - idx.dims[first][0], lx
            else:
                var, y, x = first, ly, lx
        elif rule.kind == RUN_H:
            child = rule.children[0]
            var, y, x = child, ly, 1 + (lx - 1) % idx.dims[child][1]
        else:
            child = rule.children[0]
            var, y, x = child, 1 + (ly - 1) % idx.dims[child][0], lx
        hops += 1


def hop_histogram(idx: AccessIndex, budget: Union[None, int, WorkBudget] = None) -> Counter:
    """hops -> number of cells, over the whole grid."""
    m, n = idx.shape
    WorkBudget.of(budget).charge(m * n, 'hop scan')
    histogram: Counter = Counter()
    for y in range(1, m + 1):
        for x in range(1, n + 1):
            histogram[access(idx, y, x).hops] += 1
    return histogram


class HopBound(NamedTuple):
    worst: int
    limit: int
    cell: Optional[Tuple[int, int]] = None

    @property
    def ok(self) -> bool:
        return self.worst <= self.limit

    def __bool__(self) -> bool:
        return self.ok


def hop_limit(idx: AccessIndex) -> int:
    """floor(log2 N) for the N cells of the expansion."""
    m, n = idx.shape
    return (m * n).bit_length() - 1


def hop_bound_check(idx: AccessIndex, budget: Union[None, int, WorkBudget] = None) -> HopBound:
    '''
    Heavy-path switches over all cells against floor(log2 N).
    Returns: HopBound, falsy when some cell needs more switches; cell is
             the first cell (row-major) reaching the worst count
    '''
    m, n = idx.shape
    WorkBudget.of(budget).charge(m * n, 'hop scan')
    worst, cell = -1, None
    for y in range(1, m + 1):
        for x in range(1, n + 1):
            hops = access(idx, y, x).hops
            if hops > worst:
                worst, cell = hops, (y, x)
    verdict = HopBound(worst, hop_limit(idx), cell)
    if not verdict.ok:
        logger.warning("cell %s needs %d hops, above floor(log2 N) = %d", cell, worst, verdict.limit)
    return verdict


def verify_all(idx: AccessIndex, budget: Union[None, int, WorkBudget] = None) -> Optional[Tuple[int, int]]:
    '''
    Compare every cell against the full expansion and hold every query to
    floor(log2 N) heavy-path switches.
    Returns: first mismatching cell, or None
    Raises: HopBoundExceeded on the first cell over the hop limit
    '''
    from repet2d.grammar2d import expand

    M = expand(idx.grammar, budget)
    limit = hop_limit(idx)
    for y in range(1, M.rows + 1):
        for x in range(1, M.cols + 1):
            result = access(idx, y, x, debug=True)
            if result.hops > limit:
                raise HopBoundExceeded(f"cell ({y}, {x}) needs {result.hops} hops, limit floor(log2 N) = {limit}",
                                       y=y, x=x, hops=result.hops, limit=limit)
            if result.token != M.at(y, x):
                return (y, x)
    return None
