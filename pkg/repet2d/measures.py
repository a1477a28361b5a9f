"""
Repetitiveness measures on 2D strings: delta and its square variant,
attractor verification, exact minimum attractors and a unique-occurrence
lower bound. A 1×n matrix gives the one-dimensional measures.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np

from repet2d import config
from repet2d.core2d import (
    Matrix2D,
    WorkBudget,
    exact_shape_labels,
    exact_width_labels,
    groups_from_labels,
    submatrix,
    substring_complexity_table,
    window_labels,
)
from repet2d.errors import OutOfBounds, TooLarge

logger = logging.getLogger(__name__)

Position = Tuple[int, int]
Shape = Tuple[int, int]


@dataclass(frozen=True)
class DeltaResult:
    value: Fraction
    argmax_shape: Shape
    table: Optional[Dict[Shape, int]] = None

    @property
    def count(self) -> int:
        k1, k2 = self.argmax_shape
        return int(self.value * k1 * k2)


class AttractorVerdict(NamedTuple):
    ok: bool
    shape: Optional[Shape] = None
    position: Optional[Position] = None
    content: Optional[Matrix2D] = None

    def __bool__(self) -> bool:
        return self.ok


def _best(table: Dict[Shape, int]) -> DeltaResult:
    best_value = None
    best_shape = None
    # area first, then height: the first strict maximum wins ties
    for (k1, k2) in sorted(table, key=lambda s: (s[0] * s[1], s[0])):
        value = Fraction(table[(k1, k2)], k1 * k2)
        if best_value is None or value > best_value:
            best_value, best_shape = value, (k1, k2)
    return DeltaResult(best_value, best_shape)


def delta(M: Matrix2D, keep_table: bool = False, verify: Optional[bool] = None,
          budget: Union[None, int, WorkBudget] = None) -> DeltaResult:
    """max over all shapes of P_M(k1, k2) / (k1 k2), as an exact fraction."""
    table = substring_complexity_table(M, square_only=False, verify=verify, budget=budget)
    result = _best(table)
    logger.info("delta(%dx%d) = %s at %s", M.rows, M.cols, result.value, result.argmax_shape)
    return DeltaResult(result.value, result.argmax_shape, table if keep_table else None)


def delta_square(M: Matrix2D, keep_table: bool = False, verify: Optional[bool] = None,
                 budget: Union[None, int, WorkBudget] = None) -> DeltaResult:
    table = substring_complexity_table(M, square_only=True, verify=verify, budget=budget)
    result = _best(table)
    return DeltaResult(result.value, result.argmax_shape, table if keep_table else None)


def delta_1d_oracle(tokens: Sequence) -> Fraction:
    """Independent 1D delta over a plain token sequence."""
    n = len(tokens)
    best = Fraction(0)
    for k in range(1, n + 1):
        distinct = len({tuple(tokens[i:i + k]) for i in range(n - k + 1)})
        best = max(best, Fraction(distinct, k))
    return best


def _shapes(M: Matrix2D, square_only: bool) -> List[Shape]:
    if square_only:
        return [(k, k) for k in range(1, min(M.rows, M.cols) + 1)]
    return sorted(((k1, k2) for k1 in range(1, M.rows + 1) for k2 in range(1, M.cols + 1)),
                  key=lambda s: (s[0] * s[1], s[0]))


def _check_positions(M: Matrix2D, positions: Iterable[Position]) -> List[Position]:
    points = sorted(set((int(i), int(j)) for i, j in positions))
    for i, j in points:
        if not (1 <= i <= M.rows and 1 <= j <= M.cols):
            raise OutOfBounds(f"attractor position ({i}, {j}) outside {M.rows}x{M.cols}", i=i, j=j)
    return points


def is_attractor(M: Matrix2D, positions: Iterable[Position], square_only: bool = False,
                 budget: Union[None, int, WorkBudget] = None) -> AttractorVerdict:
    '''
    Check that every distinct factor (square factors only when asked) has an
    occurrence whose rectangle contains a point of the set.
    Labels are exact and grown one column, then one row, at a time, so the
    work is one pass over the windows of each shape.
    Returns: AttractorVerdict; on failure it names the first uncovered factor
             (smallest area, then height, then first occurrence).
    '''
    points = _check_positions(M, positions)
    budget = WorkBudget.of(budget)
    marks = np.zeros((M.rows + 1, M.cols + 1), dtype=np.int64)
    for i, j in points:
        marks[i, j] = 1
    prefix = marks.cumsum(axis=0).cumsum(axis=1)

    failure: Optional[Tuple[int, int, int, int, int]] = None
    max_width = min(M.rows, M.cols) if square_only else M.cols
    for k2, row_labels, _ in exact_width_labels(M.data, 1, max_width, budget):
        low, top = (k2, k2) if square_only else (1, M.rows)
        # the smallest shape of this width only grows with k2
        if failure is not None and (low * k2, low) >= failure[:2]:
            break
        for k1, labels, count in exact_width_labels(row_labels, 0, top, budget):
            if square_only and k1 != k2:
                continue
            if failure is not None and (k1 * k2, k1) >= failure[:2]:
                break
            rows, cols = labels.shape
            hits = (prefix[k1:k1 + rows, k2:k2 + cols] - prefix[:rows, k2:k2 + cols]
                    - prefix[k1:k1 + rows, :cols] + prefix[:rows, :cols]) > 0
            covered = np.zeros(count, dtype=bool)
            covered[labels[hits]] = True
            if covered.all():
                continue
            # the first window of an uncovered factor is that factor's first occurrence
            flat = int(np.flatnonzero(~covered[labels.ravel()])[0])
            failure = (k1 * k2, k1, k2, flat // cols + 1, flat % cols + 1)
            break
    if failure is None:
        return AttractorVerdict(True)
    _, k1, k2, i, j = failure
    logger.debug("factor %dx%d at (%d, %d) not attracted", k1, k2, i, j)
    return AttractorVerdict(False, (k1, k2), (i, j), submatrix(M, i, j, i + k1 - 1, j + k2 - 1))


# ---------------------------------------------------------------------------
# exact minimum attractor


def _rect_mask(i: int, j: int, k1: int, k2: int, n: int) -> int:
    row = ((1 << k2) - 1) << j
    mask = 0
    for r in range(i, i + k1):
        mask |= row << (r * n)
    return mask


def attractor_constraints(M: Matrix2D, square_only: bool = False,
                          budget: Union[None, int, WorkBudget] = None) -> List[int]:
    '''
    One bitmask per distinct factor: the union of its occurrence rectangles
    (bit r*n + c for 0-based cell (r, c)). Duplicates and dominated masks
    (a superset of another mask) are dropped.
    '''
    budget = WorkBudget.of(budget)
    n = M.cols
    masks: Set[int] = set()
    for k1, k2 in _shapes(M, square_only):
        labels, count = window_labels(M, (k1, k2), True, budget)
        width = labels.shape[1]
        for members in groups_from_labels(labels, count):
            mask = 0
            for f in members.tolist():
                mask |= _rect_mask(f // width, f % width, k1, k2, n)
            masks.add(mask)
    ordered = sorted(masks, key=lambda s: (bin(s).count('1'), s))
    kept: List[int] = []
    for mask in ordered:
        if not any(other & mask == other for other in kept):
            kept.append(mask)
    return kept


def _disjoint_bound(masks: Sequence[int]) -> int:
    used = 0
    bound = 0
    for mask in masks:
        if mask & used == 0:
            used |= mask
            bound += 1
    return bound


def min_hitting_set(masks: List[int], universe: int) -> List[int]:
    '''
    Minimum set of element indices hitting every mask; cardinality is raised
    one step at a time from a packing lower bound, so the first solution found
    is minimum and lexicographically least among branch orders.
    '''
    masks = sorted(masks, key=lambda s: (bin(s).count('1'), s))
    if not masks:
        return []
    failed: Set[Tuple[int, int]] = set()

    def search(unhit: Tuple[int, ...], chosen: List[int], left: int) -> Optional[List[int]]:
        if not unhit:
            return list(chosen)
        if left == 0:
            return None
        remaining = [masks[t] for t in unhit]
        if _disjoint_bound(remaining) > left:
            return None
        state = (sum(1 << e for e in chosen), left)
        if state in failed:
            return None
        pivot = remaining[0]
        for e in range(universe):
            if not (pivot >> e) & 1:
                continue
            chosen.append(e)
            result = search(tuple(t for t in unhit if not (masks[t] >> e) & 1), chosen, left - 1)
            chosen.pop()
            if result is not None:
                return result
        failed.add(state)
        return None

    target = max(1, _disjoint_bound(masks))
    while True:
        failed.clear()
        solution = search(tuple(range(len(masks))), [], target)
        if solution is not None:
            return sorted(solution)
        logger.debug("no hitting set of size %d", target)
        target += 1


def gamma_exact(M: Matrix2D, square_only: bool = False, cell_limit: Optional[int] = None,
                budget: Union[None, int, WorkBudget] = None) -> Set[Position]:
    '''
    Business: smallest attractor (or square attractor) of a tiny matrix
    Args: M - matrix with at most cell_limit cells
          square_only - attract square factors only (gamma square)
    Returns: a minimum-cardinality attractor as 1-based positions
    '''
    limit = config.GAMMA_CELL_LIMIT if cell_limit is None else cell_limit
    if M.size > limit:
        raise TooLarge(f"exact attractor search limited to {limit} cells, matrix has {M.size}",
                       cells=M.size, limit=limit)
    masks = attractor_constraints(M, square_only, budget)
    chosen = min_hitting_set(masks, M.size)
    return {(e // M.cols + 1, e % M.cols + 1) for e in chosen}


def _disjoint_greedy(candidates: Sequence[Tuple[int, int, int, int, int]], rows: int,
                     cols: int) -> List[Tuple[int, int, int, int]]:
    taken = np.zeros((rows + 1, cols + 1), dtype=bool)
    family = []
    for _, i, j, k1, k2 in candidates:
        block = taken[i:i + k1, j:j + k2]
        if block.any():
            continue
        block[:] = True
        family.append((i, j, k1, k2))
    return family


def unique_occurrences(M: Matrix2D, shapes: Optional[Sequence[Shape]] = None,
                       budget: Union[None, int, WorkBudget] = None) -> List[Tuple[int, int, int, int]]:
    '''
    Family of pairwise-disjoint occurrences of factors that occur once.
    Scanned shapes: every k×1 and 1×k plus the caller's shapes. The greedy
    pass (smallest area first) runs over all candidates and over each shape
    alone; the largest family wins, the all-shapes one on ties.
    Returns: rectangles (i, j, k1, k2)
    '''
    scanned = [(k, 1) for k in range(1, M.rows + 1)] + [(1, k) for k in range(2, M.cols + 1)]
    for shape in shapes or ():
        shape = (int(shape[0]), int(shape[1]))
        if shape not in scanned and shape[0] <= M.rows and shape[1] <= M.cols:
            scanned.append(shape)
    by_shape: Dict[Shape, List[Tuple[int, int, int, int, int]]] = {}
    for (k1, k2), labels, count in exact_shape_labels(M, scanned, budget):
        width = labels.shape[1]
        occurrences = np.bincount(labels.ravel(), minlength=count)
        unique = np.flatnonzero(occurrences[labels.ravel()] == 1)
        by_shape[(k1, k2)] = [(k1 * k2, f // width + 1, f % width + 1, k1, k2) for f in unique.tolist()]
    best = _disjoint_greedy(sorted(c for group in by_shape.values() for c in group), M.rows, M.cols)
    for shape, group in by_shape.items():
        family = _disjoint_greedy(group, M.rows, M.cols)
        if len(family) > len(best):
            logger.debug("shape %s alone gives %d disjoint unique occurrences", shape, len(family))
            best = family
    return best


def gamma_lower_bound_unique(M: Matrix2D, shapes: Optional[Sequence[Shape]] = None,
                             budget: Union[None, int, WorkBudget] = None) -> int:
    """Every disjoint unique occurrence needs its own attractor position."""
    return len(unique_occurrences(M, shapes, budget))
