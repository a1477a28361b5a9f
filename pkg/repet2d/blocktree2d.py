"""
Row-major-order 2D Block Tree: the (padded) matrix is split into c×c blocks
level by level, and a block whose content already occurs at an earlier
top-left corner in row-major order becomes a pruned leaf pointing there.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from repet2d.core2d import Matrix2D, WorkBudget, window_labels
from repet2d.errors import BadParam

logger = logging.getLogger(__name__)

INTERNAL, PRUNED, SYMBOL_LEAF = 'internal', 'pruned', 'symbol'
SENTINEL = '$'


@dataclass(frozen=True)
class Block:
    top: int
    left: int
    side: int
    status: str
    source: Optional[Tuple[int, int]] = None


@dataclass
class BlockTree:
    arity: int
    size: int
    original_shape: Tuple[int, int]
    padded: Matrix2D
    levels: List[List[Block]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def _padded(M: Matrix2D, c: int) -> Tuple[Matrix2D, int]:
    size = 1
    while size < max(M.rows, M.cols):
        size *= c
    if (size, size) == M.shape:
        return M, size
    sentinel = SENTINEL
    while sentinel in M.alphabet:
        sentinel += '$'
    data = np.full((size, size), len(M.alphabet), dtype=np.int32)
    data[:M.rows, :M.cols] = M.data
    return Matrix2D(data, M.alphabet + (sentinel,)), size


def build_blocktree(M: Matrix2D, c: int = 2, budget: Union[None, int, WorkBudget] = None) -> BlockTree:
    '''
    Business: top-down Block Tree construction with row-major pruning
    Args: M - matrix, padded bottom/right to the next power of c with a fresh sentinel
          c - arity per side (c×c children per internal block)
    Returns: BlockTree; occurrences touching sentinel cells never serve as sources
    '''
    if c < 2:
        raise BadParam(f"arity must be >= 2, got {c}")
    budget = WorkBudget.of(budget)
    padded, size = _padded(M, c)
    sentinel_id = len(M.alphabet) if padded is not M else None
    tree = BlockTree(c, size, M.shape, padded)

    tree.levels.append([Block(1, 1, size, SYMBOL_LEAF if size == 1 else INTERNAL)])
    side = size
    while side > 1:
        parents = [b for b in tree.levels[-1] if b.status == INTERNAL]
        side //= c
        if not parents:
            break
        labels, count = window_labels(padded, (side, side), True, budget)
        width = labels.shape[1]
        flat = labels.ravel()
        valid = np.ones(flat.size, dtype=bool)
        if sentinel_id is not None:
            hits = np.cumsum(np.cumsum(np.pad(padded.data == sentinel_id, ((1, 0), (1, 0))), axis=0), axis=1)
            inside = hits[side:, side:] - hits[:-side, side:] - hits[side:, :-side] + hits[:-side, :-side]
            valid = (inside == 0).ravel()
        first = np.full(count, np.iinfo(np.int64).max, dtype=np.int64)
        positions = np.flatnonzero(valid)
        np.minimum.at(first, flat[positions], positions)

        level: List[Block] = []
        for parent in parents:
            for di in range(c):
                for dj in range(c):
                    top, left = parent.top + di * side, parent.left + dj * side
                    if side == 1:
                        level.append(Block(top, left, 1, SYMBOL_LEAF))
                        continue
                    f = (top - 1) * width + (left - 1)
                    earliest = int(first[flat[f]])
                    if earliest < f:
                        level.append(Block(top, left, side, PRUNED, (earliest // width + 1, earliest % width + 1)))
                    else:
                        level.append(Block(top, left, side, INTERNAL))
        tree.levels.append(level)
    logger.debug("block tree: arity %d, padded side %d, %d levels", c, size, len(tree.levels))
    return tree


def node_count(bt: BlockTree) -> Tuple[int, List[int]]:
    """(total, per level) node counts, one node per block."""
    per_level = [len(level) for level in bt.levels]
    return sum(per_level), per_level


def pruned_in_region(bt: BlockTree, min_side: int = 1) -> int:
    """Pruned blocks of side >= min_side lying fully inside the unpadded matrix."""
    m, n = bt.original_shape
    return sum(1 for level in bt.levels for b in level
               if b.status == PRUNED and b.side >= min_side
               and b.top + b.side - 1 <= m and b.left + b.side - 1 <= n)


def expand_blocktree(bt: BlockTree) -> Matrix2D:
    '''
    Rebuild the padded matrix from the tree alone: symbol leaves give cells,
    every cell of a pruned block points to the matching cell of its source.
    Sources start earlier in row-major order, so each pointer moves to a
    smaller flat index and the chains end at symbol leaves.
    '''
    size = bt.size
    pointer = np.arange(size * size, dtype=np.int64)
    values = np.full(size * size, -1, dtype=np.int64)
    for level in bt.levels:
        for b in level:
            if b.status == SYMBOL_LEAF:
                f = (b.top - 1) * size + (b.left - 1)
                values[f] = bt.padded.data[b.top - 1, b.left - 1]
            elif b.status == PRUNED:
                si, sj = b.source
                ys, xs = np.mgrid[0:b.side, 0:b.side]
                targets = (b.top - 1 + ys) * size + (b.left - 1 + xs)
                pointer[targets.ravel()] = ((si - 1 + ys) * size + (sj - 1 + xs)).ravel()
    for _ in range(int(pointer.size).bit_length() + 1):
        pointer = pointer[pointer]
    resolved = values[pointer]
    if (resolved < 0).any():
        raise BadParam("block tree leaves do not cover the matrix")
    return Matrix2D(resolved.reshape(size, size).astype(np.int32), bt.padded.alphabet)


def to_rows(bt: BlockTree) -> List[Dict[str, int]]:
    '''
    One row per level for CSV output.
    Returns: dicts with level, side, nodes, internal, pruned, symbol
    '''
    rows = []
    side = bt.size
    for depth, level in enumerate(bt.levels):
        counts = {INTERNAL: 0, PRUNED: 0, SYMBOL_LEAF: 0}
        for b in level:
            counts[b.status] += 1
        rows.append({'level': depth, 'side': side, 'nodes': len(level),
                     'internal': counts[INTERNAL], 'pruned': counts[PRUNED], 'symbol': counts[SYMBOL_LEAF]})
        side //= bt.arity
    return rows
