"""
Command-line front end. Every subcommand is a handler taking the parsed
arguments and returning a response envelope {'exitCode': int, 'body': dict};
an optional 'output' string is printed verbatim (matrix or grammar text).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from repet2d import config
from repet2d.core2d import Matrix2D, distinct_factors, factor_count, load_matrix, write_matrix
from repet2d.errors import EXIT_OK, EXIT_VALIDATION, BadParam, BudgetExceeded, Repet2DError
from repet2d.families import FAMILIES, family

logger = logging.getLogger(__name__)

Response = Dict[str, Any]


def ok(body: Dict[str, Any], output: Optional[str] = None) -> Response:
    response: Response = {'exitCode': EXIT_OK, 'body': body}
    if output is not None:
        response['output'] = output
    return response


def write_table(path: Optional[str], columns: Sequence[str], rows: List[Dict[str, Any]]) -> None:
    if not path:
        return
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d row(s) to %s", len(rows), path)


def _family_instance(name: str, raw: Sequence[str], seed: int):
    try:
        params = [int(p) for p in raw]
    except ValueError:
        raise BadParam(f"family parameters must be integers, got {list(raw)}")
    if name == 'random' and len(params) == 3:
        params.append(seed)
    return family(name, params)


def _input_matrix(args: argparse.Namespace) -> Matrix2D:
    if getattr(args, 'input', None):
        return load_matrix(args.input)
    if getattr(args, 'family', None):
        M = _family_instance(args.family, args.params, args.seed)
        if not isinstance(M, Matrix2D):
            raise BadParam(f"family {args.family} is not two-dimensional; use the nd command")
        return M
    raise BadParam("give an input matrix with --in FILE or --family NAME --params P...")


def _positions(text: str) -> List[tuple]:
    '''"1,2;3,4" -> [(1, 2), (3, 4)]'''
    points = []
    for part in text.split(';'):
        part = part.strip()
        if part:
            points.append(tuple(int(v) for v in part.split(',')))
    return points


def _shapes(values: Optional[Sequence[int]]) -> List[tuple]:
    if not values:
        return []
    if len(values) % 2:
        raise BadParam(f"--shapes takes pairs K1 K2, got {len(values)} value(s)")
    return [(int(values[i]), int(values[i + 1])) for i in range(0, len(values), 2)]


# ---------------------------------------------------------------------------
# handlers


def handle_gen(args: argparse.Namespace) -> Response:
    result = _family_instance(args.family, args.params, args.seed)
    if isinstance(result, Matrix2D):
        text = write_matrix(result)
        body = {'family': args.family, 'rows': result.rows, 'cols': result.cols}
    else:
        from repet2d.multidim import write_nd

        text = write_nd(result)
        body = {'family': args.family, 'dims': list(result.dims)}
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text)
        body['out'] = args.out
        return ok(body)
    return ok(body, text)


def handle_measure(args: argparse.Namespace) -> Response:
    from repet2d import measures

    M = _input_matrix(args)
    requested = [flag for flag in ('delta', 'delta_square', 'gamma_exact', 'unique')
                 if getattr(args, flag)]
    if args.pm:
        requested.append('pm')
    if args.attractor is not None:
        requested.append('attractor')
    if not requested:
        requested = ['delta']
    body: Dict[str, Any] = {'rows': M.rows, 'cols': M.cols, 'measures': requested}
    # one table per run: the first requested measure that has one
    table: Optional[tuple] = None

    for name, fn in (('delta', measures.delta), ('delta_square', measures.delta_square)):
        if name not in requested:
            continue
        result = fn(M, keep_table=True)
        body[name] = str(result.value)
        body[f"{name}_float"] = float(result.value)
        body[f"{name}_argmax"] = list(result.argmax_shape)
        if table is None:
            table = (('k1', 'k2', 'count'),
                     [{'k1': k1, 'k2': k2, 'count': c} for (k1, k2), c in sorted(result.table.items())])
    if 'gamma_exact' in requested:
        points = measures.gamma_exact(M, square_only=args.square)
        key = 'gamma_square' if args.square else 'gamma'
        body[key] = len(points)
        body[f"{key}_attractor"] = sorted(list(p) for p in points)
    if 'pm' in requested:
        shape = tuple(int(v) for v in args.pm)
        body['pm'] = {'shape': list(shape), 'count': factor_count(M, shape, method=args.method)}
        if table is None:
            groups = distinct_factors(M, shape, method=args.method)
            table = (('factor', 'occurrences', 'first'),
                     [{'factor': ' / '.join(g.content.row_string(i, ' ') for i in range(1, g.content.rows + 1)),
                       'occurrences': len(g.positions), 'first': f"{g.positions[0][0]},{g.positions[0][1]}"}
                      for g in groups])
    if 'attractor' in requested:
        verdict = measures.is_attractor(M, _positions(args.attractor), square_only=args.square)
        check: Dict[str, Any] = {'ok': verdict.ok, 'square': args.square}
        if not verdict.ok:
            check.update(shape=list(verdict.shape), position=list(verdict.position),
                         factor=[verdict.content.row_string(i, ' ') for i in range(1, verdict.content.rows + 1)])
        body['attractor_check'] = check
    if 'unique' in requested:
        family_ = measures.unique_occurrences(M, _shapes(args.shapes) or None)
        body['unique_lower_bound'] = len(family_)
        body['unique_occurrences'] = [list(r) for r in family_]

    if table is not None:
        write_table(args.csv, *table)
    return ok(body)


def handle_grammar(args: argparse.Namespace) -> Response:
    from repet2d import grammar2d

    action = args.action
    if action == 'family':
        builders: Dict[str, Callable] = {'ek': grammar2d.build_ek_grammar, 'bk': grammar2d.build_bk_grammar,
                                         'zeros': grammar2d.build_zeros_rlslp}
        if args.target not in builders:
            raise BadParam(f"unknown grammar family {args.target!r}; expected one of {sorted(builders)}")
        G = builders[args.target](int(args.k))
        return ok({'family': args.target, 'k': int(args.k), 'size': G.size, 'rules': len(G.rules)},
                  grammar2d.write_grammar(G))
    if action == 'minimize':
        M = _input_matrix(args)
        try:
            G = grammar2d.g_exact(M, allow_runlength=args.rl)
        except BudgetExceeded as e:
            if e.best is not None:
                e.context['best'] = grammar2d.write_grammar(e.best)
            raise
        return ok({'size': G.size, 'runlength': args.rl, 'optimal': True}, grammar2d.write_grammar(G))
    if not args.grammar:
        raise BadParam(f"grammar {action} needs --grammar FILE")
    G = grammar2d.load_grammar(args.grammar)
    info = grammar2d.validate(G)
    rows, cols = info.dims[G.axiom]
    body = {'axiom': G.axiom, 'rows': rows, 'cols': cols, 'size': info.size, 'rules': len(G.rules),
            'runlength': G.is_runlength, 'bit_size': grammar2d.bit_size(G),
            'parse_tree_size': grammar2d.parse_tree_size(G)}
    if action == 'validate':
        tree = grammar2d.grammar_tree(G)
        body['grammar_tree_nodes'] = len(tree.nodes)
        return ok(body)
    if action == 'expand':
        return ok(body, write_matrix(grammar2d.expand(G)))
    if action == 'tree':
        tree = grammar2d.grammar_tree(G)
        rows = [{'node': idx, 'kind': node.kind, 'var': node.var or '', 'i1': node.rect[0], 'j1': node.rect[1],
                 'i2': node.rect[2], 'j2': node.rect[3], 'children': ' '.join(map(str, node.children)),
                 'symbol': node.symbol or '',
                 'copy_of': f"{node.copy_of[0]},{node.copy_of[1]}" if node.copy_of else ''}
                for idx, node in enumerate(tree.nodes)]
        columns = ('node', 'kind', 'var', 'i1', 'j1', 'i2', 'j2', 'children', 'symbol', 'copy_of')
        write_table(args.csv, columns, rows)
        body.update(nodes=len(tree.nodes), primary=tree.count(grammar2d.PRIMARY),
                    secondary=tree.count(grammar2d.SECONDARY), run_leaves=tree.count(grammar2d.RUN_LEAF),
                    leaves=len(tree.leaves()))
        lines = [f"{r['node']} {r['kind']} {r['var'] or r['symbol']} {r['i1']},{r['j1']}-{r['i2']},{r['j2']}"
                 for r in rows]
        return ok(body, '\n'.join(lines) + '\n')
    raise BadParam(f"unknown grammar action {action!r}")


def handle_access(args: argparse.Namespace) -> Response:
    from repet2d import access2d
    from repet2d.grammar2d import load_grammar

    idx = access2d.build_index(load_grammar(args.grammar))
    m, n = idx.shape
    body: Dict[str, Any] = {'rows': m, 'cols': n}
    if args.query:
        y, x = (int(v) for v in args.query)
        result = access2d.access(idx, y, x)
        body.update(y=y, x=x, symbol=result.token, hops=result.hops)
    if args.verify_all:
        mismatch = access2d.verify_all(idx)
        histogram = access2d.hop_histogram(idx)
        worst = max(histogram)
        limit = access2d.hop_limit(idx)
        body.update(matches=mismatch is None, max_hops=worst, hop_limit=limit, within_limit=worst <= limit)
        if mismatch is not None:
            body['first_mismatch'] = list(mismatch)
        write_table(args.csv, ('hops', 'cells'),
                    [{'hops': h, 'cells': histogram[h]} for h in sorted(histogram)])
    return ok(body)


def handle_macro(args: argparse.Namespace) -> Response:
    from repet2d import macroscheme

    action = args.action
    if action == 'identity':
        s = macroscheme.identity_scheme(int(args.n))
        return ok({'n': int(args.n), 'size': s.size}, macroscheme.write_scheme(s))
    if action == 'from-grammar':
        from repet2d.grammar2d import load_grammar

        if not args.grammar:
            raise BadParam("macro from-grammar needs --grammar FILE")
        G = load_grammar(args.grammar)
        s = macroscheme.from_grammar(G)
        return ok({'size': s.size, 'explicit': len(s.explicit), 'phrases': len(s.phrases), 'grammar_size': G.size},
                  macroscheme.write_scheme(s))
    if action == 'minimize':
        M = _input_matrix(args)
        s = macroscheme.b_exact(M)
        return ok({'b': s.size, 'explicit': len(s.explicit), 'phrases': len(s.phrases)},
                  macroscheme.write_scheme(s))
    if not args.scheme:
        raise BadParam(f"macro {action} needs --scheme FILE")
    s = macroscheme.load_scheme(args.scheme)
    if action == 'validate':
        macroscheme.validate_scheme(s)
        return ok({'valid': True, 'size': s.size})
    if action == 'decode':
        return ok({'size': s.size, 'rows': s.rows, 'cols': s.cols}, write_matrix(macroscheme.decode(s)))
    raise BadParam(f"unknown macro action {action!r}")


def handle_blocktree(args: argparse.Namespace) -> Response:
    from repet2d import blocktree2d

    M = _input_matrix(args)
    bt = blocktree2d.build_blocktree(M, args.arity)
    total, per_level = blocktree2d.node_count(bt)
    rows = blocktree2d.to_rows(bt)
    write_table(args.csv, ('level', 'side', 'nodes', 'internal', 'pruned', 'symbol'), rows)
    return ok({'arity': args.arity, 'padded': bt.size, 'nodes': total, 'per_level': per_level})


def handle_linearize(args: argparse.Namespace) -> Response:
    from repet2d import linearize

    M = _input_matrix(args)
    S = linearize.rlin(M) if args.method == 'row' else linearize.phlin(M)
    text = write_matrix(S)
    body = {'method': args.method, 'length': S.cols}
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text)
        body['out'] = args.out
        return ok(body)
    return ok(body, text)


def handle_nd(args: argparse.Namespace) -> Response:
    from repet2d import multidim

    action = args.action
    if action == 'gen':
        S = family('bdk', [args.d, args.k])
        return ok({'family': 'bdk', 'dims': list(S.dims)}, multidim.write_nd(S))
    if action == 'grammar':
        G = multidim.build_bdk_grammar(args.d, args.k)
        info = multidim.validate_nd(G)
        matches = multidim.expand_nd(G) == family('bdk', [args.d, args.k])
        return ok({'d': args.d, 'k': args.k, 'size': info.size, 'rules': len(G.rules),
                   'dims': list(info.dims[G.axiom]), 'expands_to_bdk': matches},
                  multidim.write_grammar_nd(G))
    if action == 'measure':
        if not args.input:
            raise BadParam("nd measure needs --in FILE")
        S = multidim.load_nd(args.input)
        body: Dict[str, Any] = {'d': S.d, 'dims': list(S.dims)}
        if args.shape:
            shape = tuple(int(v) for v in args.shape)
            body.update(shape=list(shape), count=multidim.factor_count_nd(S, shape))
        else:
            result = multidim.delta_nd(S, keep_table=True)
            body.update(delta=str(result.value), float=float(result.value), argmax=list(result.argmax_shape))
            columns = [f"k{i}" for i in range(1, S.d + 1)] + ['count']
            rows = [dict(zip(columns, list(shape) + [c])) for shape, c in sorted(result.table.items())]
            write_table(args.csv, columns, rows)
        return ok(body)
    raise BadParam(f"unknown nd action {action!r}")


def handle_experiment(args: argparse.Namespace) -> Response:
    from repet2d import experiments

    if args.list or not args.name:
        return ok({'experiments': {name: spec.description for name, spec in sorted(experiments.EXPERIMENTS.items())}})
    lo, hi = (args.range if args.range else (None, None))
    result = experiments.run_experiment(args.name, lo, hi, jobs=args.jobs)
    if args.csv:
        experiments.write_csv(result, args.csv)
    body = {'experiment': args.name, 'rows': len(result.rows), 'failed': result.failed,
            'summary': experiments.summarize(result)}
    return ok(body, None if args.csv else result.to_csv())


def handle_selftest(args: argparse.Namespace) -> Response:
    from repet2d import selftest

    report = selftest.run_selftest(quick=args.quick, fixture_dir=args.fixtures)
    code = EXIT_OK if report['failed'] == 0 else 1
    return {'exitCode': code, 'body': {'passed': report['passed'], 'failed': report['failed'],
                                       'report': report.get('report_path')}}


def handle_preview(args: argparse.Namespace) -> Response:
    from repet2d.preview import save_preview

    M = _input_matrix(args)
    width, height = save_preview(M, args.out, args.scale, args.caption)
    return ok({'out': args.out, 'width': width, 'height': height})


HANDLERS: Dict[str, Callable[[argparse.Namespace], Response]] = {
    'gen': handle_gen,
    'measure': handle_measure,
    'grammar': handle_grammar,
    'access': handle_access,
    'macro': handle_macro,
    'blocktree': handle_blocktree,
    'linearize': handle_linearize,
    'nd': handle_nd,
    'experiment': handle_experiment,
    'selftest': handle_selftest,
    'preview': handle_preview,
}


# ---------------------------------------------------------------------------
# parser


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument('--in', dest='input', help='matrix file in the "2d m n" format')
    p.add_argument('--family', metavar='NAME',
                   help=f"generate the input instead: one of {', '.join(sorted(FAMILIES))}")
    p.add_argument('--params', nargs='*', default=[], metavar='P', help='integer parameters of --family')


def _add_csv(p: argparse.ArgumentParser) -> None:
    # accepted after the subcommand too; SUPPRESS keeps the global value when absent
    p.add_argument('--csv', default=argparse.SUPPRESS, help='write the command table to this CSV file')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='repet2d', description='Repetitiveness measures for 2D strings')
    parser.add_argument('--csv', help='write the command table to this CSV file')
    parser.add_argument('--budget', type=int, help='work budget in elementary steps (overrides REPET2D_BUDGET)')
    parser.add_argument('--seed', type=int, default=0, help='seed for random instances')
    parser.add_argument('--json', action='store_true', help='print the response body as JSON')
    parser.add_argument('--log-level', default=None, help='logging level (default REPET2D_LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen', help='generate a family instance')
    p.add_argument('--family', required=True, choices=sorted(FAMILIES))
    p.add_argument('--params', nargs='*', default=[], metavar='P')
    p.add_argument('--out')

    p = sub.add_parser('measure', help='delta, gamma, factor counts, attractor checks')
    _add_input(p)
    _add_csv(p)
    p.add_argument('--delta', action='store_true', help='substring complexity over all shapes (default)')
    p.add_argument('--delta-square', action='store_true', help='substring complexity over square shapes')
    p.add_argument('--gamma-exact', action='store_true', help='smallest attractor (tiny matrices only)')
    p.add_argument('--square', action='store_true', help='square factors only for --gamma-exact and --attractor')
    p.add_argument('--pm', nargs=2, type=int, metavar=('K1', 'K2'), help='number of distinct K1xK2 factors')
    p.add_argument('--method', choices=['hash', 'naive'], default='hash', help='factor counting method for --pm')
    p.add_argument('--attractor', metavar='POSITIONS', help='check the positions "i,j;i,j;..." as an attractor')
    p.add_argument('--unique', action='store_true', help='disjoint unique occurrences (lower bound on gamma)')
    p.add_argument('--shapes', nargs='+', type=int, metavar='K',
                   help='extra K1 K2 pairs for --unique, added to every k x 1 and 1 x k')

    p = sub.add_parser('grammar', help='validate, expand, draw, minimize or build 2D grammars')
    p.add_argument('action', choices=['validate', 'expand', 'tree', 'minimize', 'family'])
    p.add_argument('--grammar')
    p.add_argument('--target', help='ek, bk or zeros (family)')
    p.add_argument('--k', type=int, default=2)
    p.add_argument('--rl', action='store_true', help='allow run-length rules (minimize)')
    _add_input(p)
    _add_csv(p)

    p = sub.add_parser('access', help='direct access on a grammar-compressed matrix')
    p.add_argument('--grammar', required=True)
    p.add_argument('--query', nargs=2, type=int, metavar=('Y', 'X'))
    p.add_argument('--verify-all', action='store_true')
    _add_csv(p)

    p = sub.add_parser('macro', help='macro schemes')
    p.add_argument('action', choices=['validate', 'decode', 'from-grammar', 'minimize', 'identity'])
    p.add_argument('--scheme')
    p.add_argument('--grammar')
    p.add_argument('--n', type=int, default=3)
    _add_input(p)

    p = sub.add_parser('blocktree', help='2D Block Tree node counts')
    p.add_argument('--arity', type=int, default=2)
    _add_input(p)
    _add_csv(p)

    p = sub.add_parser('linearize', help='row or Peano-Hilbert linearization')
    p.add_argument('--method', choices=['row', 'hilbert'], default='row')
    p.add_argument('--out')
    _add_input(p)

    p = sub.add_parser('nd', help='d-dimensional strings')
    p.add_argument('action', choices=['gen', 'measure', 'grammar'])
    p.add_argument('--d', type=int, default=2)
    p.add_argument('--k', type=int, default=2)
    p.add_argument('--in', dest='input')
    p.add_argument('--shape', nargs='+', type=int)
    _add_csv(p)

    p = sub.add_parser('experiment', help='run a named experiment')
    p.add_argument('name', nargs='?')
    p.add_argument('--range', nargs=2, type=int, metavar=('LO', 'HI'))
    p.add_argument('--jobs', type=int, default=1)
    p.add_argument('--list', action='store_true')
    _add_csv(p)

    p = sub.add_parser('selftest', help='acceptance run with a JSON report')
    p.add_argument('--quick', action='store_true')
    p.add_argument('--fixtures', help='fixture directory (default REPET2D_FIXTURE_DIR)')

    p = sub.add_parser('preview', help='render a matrix as PNG')
    _add_input(p)
    p.add_argument('--out', required=True)
    p.add_argument('--scale', type=int, default=8)
    p.add_argument('--caption')
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> Response:
    '''
    Business: parse arguments and run one command
    Args: argv - argument list without the program name
    Returns: response envelope; expected errors become error bodies with
             their exit code instead of tracebacks
    '''
    args = build_parser().parse_args(argv)
    return run(args)


def run(args: argparse.Namespace) -> Response:
    settings = config.load_settings(budget=args.budget)
    config.BUDGET = settings.budget
    config.VERIFY_MAX_CELLS = settings.verify_max_cells
    logging.basicConfig(level=(args.log_level or settings.log_level).upper(),
                        format='%(asctime)s - %(levelname)s - %(message)s')
    try:
        return HANDLERS[args.command](args)
    except Repet2DError as e:
        logger.debug("%s failed: %s", args.command, e.message)
        return {'exitCode': e.exit_code, 'body': e.to_dict()}
    except OSError as e:
        return {'exitCode': EXIT_VALIDATION, 'body': {'error': str(e), 'kind': type(e).__name__}}


def _print_body(body: Dict[str, Any]) -> None:
    for line in body.get('summary', []):
        print(line)
    for key, value in body.items():
        if key != 'summary':
            print(f"   {key}: {value}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    response = run(args)
    body = response['body']
    if args.json:
        print(json.dumps(body, ensure_ascii=False, indent=2, default=str))
    elif response['exitCode'] != EXIT_OK:
        print(f"❌ {body.get('error', 'failed')}", file=sys.stderr)
        if 'best' in body:
            print(body['best'], end='')
    elif response.get('output') is not None:
        sys.stdout.write(response['output'])
    else:
        _print_body(body)
    return response['exitCode']
