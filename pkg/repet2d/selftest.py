"""
Acceptance run for the whole library
Run: python3 -m repet2d selftest [--quick] [--fixtures DIR]
"""

import glob
import json
import logging
import os
from datetime import datetime
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from repet2d import config, families, linearize, multidim
from repet2d.access2d import build_index, hop_bound_check, verify_all
from repet2d.blocktree2d import build_blocktree, pruned_in_region
from repet2d.core2d import concat_h, concat_v, factor_count, load_matrix, random_matrix, submatrix, window_labels
from repet2d.errors import Repet2DError
from repet2d.grammar2d import (build_bk_grammar, build_ek_grammar, build_zeros_rlslp, expand, g_exact,
                               load_grammar, random_grammar, validate)
from repet2d.macroscheme import b_exact, decode, from_grammar, identity_scheme
from repet2d.measures import delta, delta_square, gamma_exact, gamma_lower_bound_unique, is_attractor

logger = logging.getLogger(__name__)

Check = Dict[str, Any]


class Colors:
    GREEN = '\033[92m'
    RED = '\033[91m'
    YELLOW = '\033[93m'
    BLUE = '\033[94m'
    BOLD = '\033[1m'
    END = '\033[0m'


def print_header(text: str):
    print(f"\n{Colors.BOLD}{Colors.BLUE}{'=' * 70}{Colors.END}")
    print(f"{Colors.BOLD}{Colors.BLUE}{text}{Colors.END}")
    print(f"{Colors.BOLD}{Colors.BLUE}{'=' * 70}{Colors.END}\n")


def print_success(text: str):
    print(f"{Colors.GREEN}✅ {text}{Colors.END}")


def print_fail(text: str):
    print(f"{Colors.RED}❌ {text}{Colors.END}")


def print_warning(text: str):
    print(f"{Colors.YELLOW}⚠️  {text}{Colors.END}")


def print_info(text: str):
    print(f"   {text}")


def _run(name: str, fn: Callable[[], Tuple[bool, str]]) -> Check:
    '''Run one check; library errors count as failures, not crashes.'''
    print_info(f"{name}...")
    try:
        passed, details = fn()
    except Repet2DError as e:
        passed, details = False, f"{type(e).__name__}: {e.message}"
    except OSError as e:
        passed, details = False, f"{type(e).__name__}: {e}"
    if passed:
        print_success(f"{name}: {details}")
    else:
        print_fail(f"{name}: {details}")
    return {'status': 'passed' if passed else 'failed', 'details': details}


def _completed(tests: Dict[str, Check]) -> Dict[str, Any]:
    return {'status': 'completed', 'tests': tests}


# ---------------------------------------------------------------------------
# categories


def test_fixtures(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def factor_example():
        count = factor_count(load_matrix(os.path.join(fixture_dir, 'factor_example.txt')), (2, 2))
        return count == 3, f"P(2,2) = {count}"

    tests['factor_example'] = _run('2x2 factors of the example matrix', factor_example)
    paths = sorted(glob.glob(os.path.join(fixture_dir, '*.grammar')))
    for path in paths:
        name = os.path.basename(path)

        def check(path=path):
            G = load_grammar(path)
            info = validate(G)
            M = expand(G)
            s = from_grammar(G)
            ok = decode(s) == M and s.size <= G.size
            return ok, f"{info.dims[G.axiom][0]}x{info.dims[G.axiom][1]}, |G| = {G.size}, scheme {s.size}"

        tests[name] = _run(f"fixture {name}", check)
    if not paths:
        tests['grammar_fixtures'] = {'status': 'failed', 'details': f"no *.grammar files in {fixture_dir}"}
        print_fail(f"no grammar fixtures found in {fixture_dir}")
    return _completed(tests)


def test_exact_values(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def phlin_i2():
        s = linearize.phlin(families.identity(2)).row_string(1)
        return s == '1010', f"phlin(I_2) = {s}"

    tests['phlin_i2'] = _run('phlin(I_2)', phlin_i2)
    if not quick:
        def g_alt():
            M = families.alt(4, 6)
            g, grl = g_exact(M).size, g_exact(M, allow_runlength=True).size
            return (g, grl) == (12, 8), f"g = {g}, g_rl = {grl}"

        tests['g_exact_alt_4x6'] = _run('exact grammars of alt(4,6)', g_alt)
    return _completed(tests)


def test_attractors(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def identity_gamma():
        # I_2 needs a third point: its two diagonals each hold a single symbol
        expected = {2: 3, 3: 3, 4: 4}
        sizes = {n: len(gamma_exact(families.identity(n))) for n in expected}
        return sizes == expected, f"gamma(I_n) = {sizes}"

    def identity_gamma_square():
        sizes = {n: len(gamma_exact(families.identity(n), square_only=True)) for n in (3, 4)}
        return all(v == 2 for v in sizes.values()), f"gamma_square(I_n) = {sizes}"

    def diagpad():
        bad = []
        for m, n in ((4, 6), (6, 4), (5, 5)):
            M = families.diagpad(m, n)
            if not is_attractor(M, families.diagpad_attractor(m, n)) or delta(M).value > 2:
                bad.append((m, n))
        return not bad, 'all shapes hold' if not bad else f"fails on {bad}"

    tests['gamma_identity'] = _run('minimum attractors of I_n', identity_gamma)
    tests['gamma_square_identity'] = _run('minimum square attractors of I_n', identity_gamma_square)
    tests['diagpad_attractor'] = _run('diagpad attractor and delta <= 2', diagpad)
    return _completed(tests)


def _corpus(count: int, max_side: int, seed: int) -> List:
    rng = np.random.default_rng(seed)
    corpus = []
    for s in range(count):
        m, n = int(rng.integers(1, max_side + 1)), int(rng.integers(1, max_side + 1))
        corpus.append(random_matrix(m, n, int(rng.integers(1, 4)), seed + s))
    return corpus


def test_ordering(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def measures_chain():
        corpus = _corpus(20 if quick else 200, 4, 7)
        corpus += [families.identity(n) for n in (1, 2, 3, 4)] + [families.alt(m, n) for m in (1, 2, 4) for n in (2, 4)]
        corpus += [families.diagpad(m, n) for m, n in ((3, 4), (4, 3), (4, 4))] + [families.ek(2), families.zeros(3, 4)]
        violations = 0
        for M in corpus:
            d, dsq = delta(M).value, delta_square(M).value
            g, gsq = len(gamma_exact(M)), len(gamma_exact(M, square_only=True))
            if not (dsq <= d <= g and gsq <= g):
                violations += 1
        return violations == 0, f"{len(corpus)} matrices, {violations} violation(s)"

    def compression_chain():
        corpus = _corpus(6 if quick else 40, 3, 11) + [families.identity(3), families.zeros(3, 3), families.alt(2, 3)]
        violations = 0
        for M in corpus:
            b = b_exact(M).size
            grl, g = g_exact(M, allow_runlength=True).size, g_exact(M).size
            if not b <= grl <= g:
                violations += 1
        return violations == 0, f"{len(corpus)} matrices, {violations} violation(s)"

    tests['delta_gamma_order'] = _run('delta_square <= delta <= gamma, gamma_square <= gamma', measures_chain)
    tests['b_grl_g_order'] = _run('b <= g_rl <= g', compression_chain)
    return _completed(tests)


def test_round_trips(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def ek_grammars():
        top = 6 if quick else 10
        bad = [k for k in range(1, top + 1) if expand(build_ek_grammar(k)) != families.ek(k)]
        return not bad, f"k = 1..{top}" if not bad else f"fails at k = {bad}"

    def bk_grammars():
        bad = [k for k in range(2, 5) if expand(build_bk_grammar(k)) != families.bk(k)]
        return not bad, 'k = 2..4' if not bad else f"fails at k = {bad}"

    def random_schemes():
        count = 20 if quick else 100
        bad = []
        for seed in range(count):
            G = random_grammar(seed)
            s = from_grammar(G)
            if decode(s) != expand(G) or s.size > G.size:
                bad.append(seed)
        return not bad, f"{count} random grammars" if not bad else f"fails at seeds {bad[:5]}"

    def identity_schemes():
        sizes = (3, 64) if quick else (3, 64, 1024)
        bad = [n for n in sizes
               if identity_scheme(n).size != 6 or decode(identity_scheme(n)) != families.identity(n)]
        return not bad, f"n in {sizes}, size 6" if not bad else f"fails at n = {bad}"

    tests['ek_grammar'] = _run('expand(E_k grammar) = E_k', ek_grammars)
    tests['bk_grammar'] = _run('expand(B_k grammar) = B_k', bk_grammars)
    tests['grammar_to_scheme'] = _run('decode(from_grammar(G)) = expand(G)', random_schemes)
    tests['identity_scheme'] = _run('six-piece identity scheme', identity_schemes)
    return _completed(tests)


def test_access(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}
    grammars = [('E_6' if quick else 'E_10', build_ek_grammar(6 if quick else 10)),
                ('zeros_64', build_zeros_rlslp(64)), ('B_3', build_bk_grammar(3))]
    for path in sorted(glob.glob(os.path.join(fixture_dir, 'fig_*.grammar'))):
        grammars.append((os.path.basename(path), load_grammar(path)))
    for name, G in grammars:
        def check(G=G):
            idx = build_index(G)
            m, n = idx.shape
            # a cell over floor(log2 N) hops raises HopBoundExceeded, which _run reports
            mismatch = verify_all(idx)
            if mismatch is not None:
                return False, f"cell {mismatch} differs from the expansion"
            bound = hop_bound_check(idx)
            return bound.ok, f"{m}x{n}, max hops {bound.worst} at {bound.cell} (limit {bound.limit})"

        tests[name] = _run(f"direct access on {name}", check)
    return _completed(tests)


def test_separations(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def ek_gap():
        bad = [k for k in range(2, 7)
               if delta(families.ek(k)).value < Fraction(2 ** k, k) or build_ek_grammar(k).size > 10 * k]
        return not bad, 'k = 2..6' if not bad else f"fails at k = {bad}"

    def bk_unique():
        bad = []
        for k in (2, 3, 4):
            labels, count = window_labels(families.bk(k), (k, k))
            if count != labels.size:
                bad.append(k)
        return not bad, 'every k x k window unique for k = 2..4' if not bad else f"repeats at k = {bad}"

    def bk_blocktree():
        bt = build_blocktree(families.bk(3), 2)
        pruned = pruned_in_region(bt, 3)
        return bt.size == 16 and pruned == 0, f"padded {bt.size}, pruned in region {pruned}"

    def bk_delta_square():
        value = delta_square(families.bk(3)).value
        return value >= Fraction(64, 9), f"delta_square(B_3) = {value}"

    tests['ek_gap'] = _run('delta(E_k) >= 2^k/k with small grammars', ek_gap)
    tests['bk_unique_windows'] = _run('unique windows of B_k', bk_unique)
    tests['bk_blocktree'] = _run('block tree of B_3', bk_blocktree)
    tests['bk_delta_square'] = _run('delta_square(B_3) >= 64/9', bk_delta_square)
    return _completed(tests)


def test_linearization(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def staircase():
        bad = []
        for n in ((8, 16) if quick else (8, 16, 32)):
            M = families.staircase(n)
            if delta(M).value > 6 or delta(linearize.rlin(M)).value < Fraction(n - 1, 2):
                bad.append(n)
        return not bad, 'row linearization blows delta up' if not bad else f"fails at n = {bad}"

    def ek_attractor():
        bad = []
        for k in range(1, (5 if quick else 8) + 1):
            M = families.ek(k)
            points = linearize.ek_rlin_attractor(k)
            if (len(points) != 3 * k - 1 or not is_attractor(linearize.rlin(M), points)
                    or gamma_lower_bound_unique(M, [(k, 1)]) < 2 ** k):
                bad.append(k)
        return not bad, 'attractor 3k-1 against 2D bound 2^k' if not bad else f"fails at k = {bad}"

    def hilbert():
        bad = []
        for k in range(1, 7):
            side = 2 ** k
            I = families.identity(side)
            S = linearize.phlin(I)
            half = linearize.phlin(families.identity(side // 2)).row_string(1)
            zeros = '0' * (4 ** (k - 1))
            if (linearize.scan(I, linearize.DS) != linearize.scan(I, linearize.RS)
                    or S.row_string(1) != half + zeros + half + zeros
                    or not linearize.onerun_certificate(S, k)):
                bad.append(k)
        return not bad, 'ds = rs, recurrence and certificate for k = 1..6' if not bad else f"fails at k = {bad}"

    tests['staircase'] = _run('staircase row linearization', staircase)
    tests['ek_rlin_attractor'] = _run('attractor of rlin(E_k)', ek_attractor)
    tests['hilbert'] = _run('Peano-Hilbert linearization of I_{2^k}', hilbert)
    return _completed(tests)


def test_multidim(quick: bool, fixture_dir: str) -> Dict[str, Any]:
    tests = {}

    def embedding():
        corpus = _corpus(10 if quick else 50, 5, 23)
        bad = []
        for s, M in enumerate(corpus):
            S = multidim.embed_2d(M)
            same = (delta(M).value == multidim.delta_nd(S).value
                    and factor_count(M, (1, 1)) == multidim.factor_count_nd(S, (1, 1))
                    and multidim.to_2d(S) == M)
            # splitting and gluing back agrees with concat_v / concat_h on both sides
            for axis, size, glue in ((1, M.rows, concat_v), (2, M.cols, concat_h)):
                if size < 2 or not same:
                    continue
                cut = size // 2
                if axis == 1:
                    head, tail = submatrix(M, 1, 1, cut, M.cols), submatrix(M, cut + 1, 1, M.rows, M.cols)
                else:
                    head, tail = submatrix(M, 1, 1, M.rows, cut), submatrix(M, 1, cut + 1, M.rows, M.cols)
                glued = multidim.concat_axis(multidim.embed_2d(head), multidim.embed_2d(tail), axis)
                same = glued == S and glue(head, tail) == M
            G = random_grammar(s)
            same = same and multidim.expand_nd(multidim.grammar_from_2d(G)) == multidim.embed_2d(expand(G))
            if not same:
                bad.append(s)
        details = f"mismatches at {bad}" if bad else "measures, concatenations and grammars agree"
        return not bad, f"{len(corpus)} matrices: {details}"

    def bdk():
        S = families.bdk(3, 2)
        unique = multidim.all_boxes_unique(S, 2)
        expands = multidim.expand_nd(multidim.build_bdk_grammar(3, 2)) == S
        return unique and expands, f"2x2x2 boxes unique: {unique}, grammar expands: {expands}"

    tests['embedding'] = _run('2D operations equal their dD liftings', embedding)
    tests['bdk'] = _run('B_{3,2}', bdk)
    return _completed(tests)


CATEGORIES: List[Tuple[str, Callable[[bool, str], Dict[str, Any]]]] = [
    ('Fixtures', test_fixtures),
    ('Exact values', test_exact_values),
    ('Attractors', test_attractors),
    ('Measure ordering', test_ordering),
    ('Round trips', test_round_trips),
    ('Direct access', test_access),
    ('Separations', test_separations),
    ('Linearization', test_linearization),
    ('Multidimensional', test_multidim),
]


def print_summary(total: int, passed: int):
    print_header("📊 SUMMARY")
    success_rate = (passed / total * 100) if total > 0 else 0
    print(f"Total checks: {total}")
    print(f"Passed: {passed}")
    print(f"Failed: {total - passed}")
    print(f"Success rate: {success_rate:.1f}%")
    print()
    if passed == total:
        print_success("🎉 all acceptance checks pass")
    else:
        print_fail("🚨 acceptance checks failed")


def save_report(results: Dict[str, Any], report_dir: str) -> str:
    filename = os.path.join(report_dir, f"selftest_report_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json")
    try:
        with open(filename, 'w', encoding='utf-8') as f:
            json.dump(results, f, indent=2, ensure_ascii=False, default=str)
        print()
        print_success(f"Report saved: {filename}")
    except OSError as e:
        print_warning(f"Could not save report: {e}")
        return ''
    return filename


def run_selftest(quick: bool = False, fixture_dir: Optional[str] = None, report_dir: Optional[str] = None) -> Dict[str, Any]:
    '''
    Business: run every acceptance category and write a JSON report
    Args: quick - reduced corpora and parameter ranges
          fixture_dir - directory with fixture matrices and grammars
          report_dir - where the JSON report goes (None disables it)
    Returns: results dict with passed/failed totals and per-category checks
    '''
    fixture_dir = fixture_dir or config.FIXTURE_DIR
    print_header("🚀 REPET2D SELFTEST" + (" (quick)" if quick else ""))
    print(f"Started: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    results: Dict[str, Any] = {'timestamp': datetime.now().isoformat(), 'quick': quick, 'categories': {}}
    total = passed = 0
    for category_name, test_func in CATEGORIES:
        print_header(f"📋 {category_name.upper()}")
        category_result = test_func(quick, fixture_dir)
        results['categories'][category_name] = category_result
        cat_passed = sum(1 for t in category_result['tests'].values() if t['status'] == 'passed')
        cat_total = len(category_result['tests'])
        total += cat_total
        passed += cat_passed
        if cat_passed == cat_total:
            print_success(f"Category passed: {cat_passed}/{cat_total}")
        else:
            print_warning(f"Category: {cat_passed}/{cat_total} checks")
    results['passed'], results['failed'] = passed, total - passed
    print_summary(total, passed)
    if report_dir is not None or config.REPORT_DIR:
        results['report_path'] = save_report(results, report_dir or config.REPORT_DIR)
    return results
