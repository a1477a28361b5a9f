"""
Named experiments: each one sweeps a parameter over a range and produces one
CSV row per instance with the quantities the corresponding separation is
stated on. Rows are sorted by parameter, so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from repet2d import families, linearize
from repet2d.blocktree2d import build_blocktree, node_count, pruned_in_region
from repet2d.errors import BadParam, Repet2DError
from repet2d.grammar2d import build_bk_grammar, build_ek_grammar, g_exact
from repet2d.macroscheme import decode, from_grammar, identity_scheme, unique_square_certificate
from repet2d.measures import delta, delta_square, gamma_lower_bound_unique, is_attractor

logger = logging.getLogger(__name__)

Row = Dict[str, Any]


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    columns: Tuple[str, ...]
    default_range: Tuple[int, int]
    row: Callable[[int], Row]
    values: Callable[[int, int], List[int]] = field(default=lambda lo, hi: list(range(lo, hi + 1)))
    description: str = ''


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: List[Row]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(self.spec.columns) + ['status'], lineterminator='\n')
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return buffer.getvalue()

    @property
    def failed(self) -> int:
        return sum(1 for row in self.rows if row['status'] != 'ok')


def _fmt(value: Fraction) -> str:
    return str(value)


def _gap_gamma_vs_delta(n: int) -> Row:
    M = families.diagpad(n, n + 1)
    points = families.diagpad_attractor(n, n + 1)
    d = delta(M)
    return {'n': n, 'rows': n, 'cols': n + 1, 'N': M.size, 'delta': _fmt(d.value),
            'attractor_size': len(points), 'attractor_ok': bool(is_attractor(M, points)),
            'delta_le_2': d.value <= 2}


def _gap_g_vs_delta(k: int) -> Row:
    G = build_ek_grammar(k)
    d = delta(families.ek(k))
    bound = Fraction(2 ** k, k)
    return {'k': k, 'grammar_size': G.size, 'delta': _fmt(d.value), 'bound': _fmt(bound),
            'delta_ge_bound': d.value >= bound, 'size_le_10k': G.size <= 10 * k}


def _blocktree_vs_g(k: int) -> Row:
    M = families.bk(k)
    bt = build_blocktree(M, 2)
    total, per_level = node_count(bt)
    G = build_bk_grammar(k)
    return {'k': k, 'n': M.rows, 'padded': bt.size, 'nodes': total,
            'per_level': ' '.join(str(c) for c in per_level),
            'pruned_in_region_side_ge_k': pruned_in_region(bt, k), 'grammar_size': G.size,
            'delta_square': _fmt(delta_square(M).value)}


def _linearization_row(n: int) -> Row:
    M = families.staircase(n)
    d2 = delta(M).value
    d1 = delta(linearize.rlin(M)).value
    bound = Fraction(n - 1, 2)
    return {'n': n, 'delta_2d': _fmt(d2), 'delta_rlin': _fmt(d1), 'bound': _fmt(bound),
            'delta_2d_le_6': d2 <= 6, 'delta_rlin_ge_bound': d1 >= bound}


def _linearization_ek(k: int) -> Row:
    M = families.ek(k)
    points = linearize.ek_rlin_attractor(k)
    unique = gamma_lower_bound_unique(M, [(k, 1)])
    return {'k': k, 'attractor_size': len(points), 'expected_size': 3 * k - 1,
            'attractor_ok': bool(is_attractor(linearize.rlin(M), points)),
            'gamma_2d_lower_bound': unique, 'lower_bound_ge_2k': unique >= 2 ** k}


def _linearization_hilbert(k: int) -> Row:
    side = 2 ** k
    I = families.identity(side)
    rs = linearize.scan(I, linearize.RS)
    ds = linearize.scan(I, linearize.DS)
    S = linearize.phlin(I)
    half = linearize.phlin(families.identity(side // 2)).row_string(1)
    zeros = '0' * (4 ** (k - 1))
    recurrence = S.row_string(1) == half + zeros + half + zeros
    return {'k': k, 'side': side, 'ds_equals_rs': rs == ds, 'recurrence_ok': recurrence,
            'onerun_certificate': linearize.onerun_certificate(S, k),
            'delta_phlin': _fmt(delta(S).value) if side <= 16 else ''}


def _b_vs_grl_identity(n: int) -> Row:
    s = identity_scheme(n)
    row = {'n': n, 'N': n * n, 'scheme_size': s.size, 'decodes_to_identity': decode(s) == families.identity(n),
           'grl_exact': ''}
    if n <= 4:
        row['grl_exact'] = g_exact(families.identity(n), allow_runlength=True).size
    return row


def _powers_of_two(lo: int, hi: int) -> List[int]:
    values = {lo} if lo <= hi else set()
    p = 1
    while p <= hi:
        if p >= lo:
            values.add(p)
        p *= 2
    return sorted(values)


def _bsq_vs_b(k: int) -> Row:
    M = families.bk(k)
    unique, bound = unique_square_certificate(M, k)
    G = build_bk_grammar(k)
    return {'k': k, 'n': M.rows, 'unique_kxk': unique, 'square_phrase_lower_bound': bound if unique else '',
            'scheme_from_grammar': from_grammar(G).size, 'grammar_size': G.size,
            'delta_square': _fmt(delta_square(M).value)}


EXPERIMENTS: Dict[str, ExperimentSpec] = {
    spec.name: spec for spec in [
        ExperimentSpec('gap-gamma-vs-delta',
                       ('n', 'rows', 'cols', 'N', 'delta', 'attractor_size', 'attractor_ok', 'delta_le_2'),
                       (3, 8), _gap_gamma_vs_delta,
                       description='diagpad(n, n+1): delta stays <= 2 while the attractor grows with n'),
        ExperimentSpec('gap-g-vs-delta',
                       ('k', 'grammar_size', 'delta', 'bound', 'delta_ge_bound', 'size_le_10k'),
                       (2, 6), _gap_g_vs_delta,
                       description='E_k: grammar of size O(k) against delta >= 2^k/k'),
        ExperimentSpec('blocktree-vs-g',
                       ('k', 'n', 'padded', 'nodes', 'per_level', 'pruned_in_region_side_ge_k', 'grammar_size',
                        'delta_square'),
                       (2, 4), _blocktree_vs_g,
                       description='B_k: block tree nodes against the de Bruijn grammar'),
        ExperimentSpec('linearization-row',
                       ('n', 'delta_2d', 'delta_rlin', 'bound', 'delta_2d_le_6', 'delta_rlin_ge_bound'),
                       (8, 32), _linearization_row, _powers_of_two,
                       description='staircase(n): delta of the matrix against delta of its row linearization'),
        ExperimentSpec('linearization-ek',
                       ('k', 'attractor_size', 'expected_size', 'attractor_ok', 'gamma_2d_lower_bound',
                        'lower_bound_ge_2k'),
                       (1, 6), _linearization_ek,
                       description='E_k: small attractor of rlin(E_k) against a large 2D lower bound'),
        ExperimentSpec('linearization-hilbert',
                       ('k', 'side', 'ds_equals_rs', 'recurrence_ok', 'onerun_certificate', 'delta_phlin'),
                       (1, 6), _linearization_hilbert,
                       description='I_{2^k}: Peano-Hilbert linearization certificates'),
        ExperimentSpec('b-vs-grl-identity',
                       ('n', 'N', 'scheme_size', 'decodes_to_identity', 'grl_exact'),
                       (3, 1024), _b_vs_grl_identity, _powers_of_two,
                       description='I_n: constant-size macro scheme'),
        ExperimentSpec('bsq-vs-b',
                       ('k', 'n', 'unique_kxk', 'square_phrase_lower_bound', 'scheme_from_grammar', 'grammar_size',
                        'delta_square'),
                       (2, 4), _bsq_vs_b,
                       description='B_k: unique k x k windows force many square phrases'),
    ]
}


def _run_row(name: str, value: int) -> Row:
    spec = EXPERIMENTS[name]
    try:
        row = spec.row(value)
        row['status'] = 'ok'
    except Repet2DError as e:
        logger.warning("%s at %d: %s", name, value, e.message)
        row = {spec.columns[0]: value, 'status': type(e).__name__}
    return row


def run_experiment(name: str, lo: Optional[int] = None, hi: Optional[int] = None,
                   jobs: int = 1) -> ExperimentResult:
    '''
    Business: run one named experiment over a parameter range
    Args: name - key of EXPERIMENTS
          lo, hi - inclusive range (defaults per experiment); lo > hi gives no rows
          jobs - worker processes for the rows
    Returns: ExperimentResult with rows sorted by parameter
    '''
    if name not in EXPERIMENTS:
        raise BadParam(f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    spec = EXPERIMENTS[name]
    lo = spec.default_range[0] if lo is None else lo
    hi = spec.default_range[1] if hi is None else hi
    values = spec.values(lo, hi) if lo <= hi else []
    logger.info("experiment %s over %d value(s)", name, len(values))
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_row, [name] * len(values), values))
    else:
        rows = [_run_row(name, v) for v in values]
    rows.sort(key=lambda row: row[spec.columns[0]])
    return ExperimentResult(spec, rows)


def summarize(result: ExperimentResult) -> List[str]:
    """Human-readable lines: one per row plus a verdict on every boolean column."""
    lines = [f"📊 {result.spec.name}: {len(result.rows)} row(s)"]
    ok_rows = [r for r in result.rows if r['status'] == 'ok']
    checks = [c for c in result.spec.columns
              if ok_rows and all(isinstance(r.get(c), bool) for r in result.rows if r['status'] == 'ok')]
    for column in checks:
        bad = [r[result.spec.columns[0]] for r in result.rows if r['status'] == 'ok' and not r[column]]
        marker = '✅' if not bad else '❌'
        lines.append(f"{marker} {column}: " + ('holds on every row' if not bad else f"fails at {bad}"))
    if result.failed:
        lines.append(f"⚠️  {result.failed} row(s) did not complete")
    return lines


def write_csv(result: ExperimentResult, path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(result.to_csv())
