"""
Tests for the repet2d command line: response envelopes, exit codes and
the files the commands write.
Run: pytest test_cli.py
"""

import json
import os

import pytest

from repet2d import cli, config, families
from repet2d.core2d import write_matrix
from repet2d.errors import EXIT_BUDGET, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')


def fixture(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    monkeypatch.delenv('REPET2D_BUDGET', raising=False)
    monkeypatch.setattr(config, 'BUDGET', config.BUDGET)
    monkeypatch.setattr(config, 'VERIFY_MAX_CELLS', config.VERIFY_MAX_CELLS)


def test_gen_prints_matrix():
    response = cli.dispatch(['gen', '--family', 'identity', '--params', '3'])
    assert response['exitCode'] == EXIT_OK
    assert response['body'] == {'family': 'identity', 'rows': 3, 'cols': 3}
    assert response['output'] == write_matrix(families.identity(3))


def test_gen_writes_file(tmp_path):
    out = tmp_path / 'e3.txt'
    response = cli.dispatch(['gen', '--family', 'ek', '--params', '3', '--out', str(out)])
    assert response['body']['out'] == str(out)
    assert out.read_text(encoding='utf-8').startswith('2d 3 8\n')


def test_gen_bad_params():
    assert cli.dispatch(['gen', '--family', 'diagpad', '--params', '3'])['exitCode'] == EXIT_VALIDATION
    assert cli.dispatch(['gen', '--family', 'identity', '--params', 'x'])['exitCode'] == EXIT_VALIDATION


def test_gen_requires_family():
    with pytest.raises(SystemExit):
        cli.dispatch(['gen', '--params', '3'])


def test_measure_delta_with_table(tmp_path):
    table = tmp_path / 'delta.csv'
    response = cli.dispatch(['measure', '--in', fixture('factor_example.txt'), '--delta', '--csv', str(table)])
    assert response['exitCode'] == EXIT_OK
    assert response['body']['delta'] == '2'
    lines = table.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'k1,k2,count'
    assert '2,2,3' in lines
    assert len(lines) == 1 + 5 * 4


def test_measure_global_csv_flag(tmp_path):
    table = tmp_path / 'delta.csv'
    cli.dispatch(['--csv', str(table), 'measure', '--in', fixture('factor_example.txt')])
    assert table.read_text(encoding='utf-8').startswith('k1,k2,count\n')


def test_measure_defaults_to_delta():
    body = cli.dispatch(['measure', '--family', 'identity', '--params', '4'])['body']
    assert body['measures'] == ['delta']
    assert body['delta'] == '2'


def test_measure_delta_square():
    body = cli.dispatch(['measure', '--family', 'identity', '--params', '4', '--delta', '--delta-square'])['body']
    assert body['delta'] == '2'
    assert body['delta_square'] == '2'
    assert body['delta_square_argmax'] == [1, 1]


def test_measure_pm():
    for method in ('hash', 'naive'):
        response = cli.dispatch(['measure', '--in', fixture('factor_example.txt'),
                                 '--pm', '2', '2', '--method', method])
        assert response['body']['pm'] == {'shape': [2, 2], 'count': 3}


def test_measure_pm_table(tmp_path):
    table = tmp_path / 'pm.csv'
    cli.dispatch(['measure', '--in', fixture('factor_example.txt'), '--pm', '2', '2', '--csv', str(table)])
    lines = table.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'factor,occurrences,first'
    assert len(lines) == 1 + 3


def test_measure_needs_input():
    response = cli.dispatch(['measure', '--delta'])
    assert response['exitCode'] == EXIT_VALIDATION
    assert response['body']['kind'] == 'BadParam'


def test_measure_gamma_exact():
    body = cli.dispatch(['measure', '--family', 'identity', '--params', '3', '--gamma-exact'])['body']
    assert body['gamma'] == 3
    assert len(body['gamma_attractor']) == 3
    body = cli.dispatch(['measure', '--family', 'identity', '--params', '2', '--gamma-exact'])['body']
    assert body['gamma'] == 3


def test_measure_gamma_exact_square():
    body = cli.dispatch(['measure', '--family', 'zeros', '--params', '2', '3', '--gamma-exact', '--square'])['body']
    assert body['gamma_square'] == 1
    assert 'gamma' not in body


def test_measure_attractor():
    body = cli.dispatch(['measure', '--family', 'identity', '--params', '3', '--attractor', ''])['body']
    assert body['attractor_check']['ok'] is False
    assert body['attractor_check']['shape'] == [1, 1]
    found = cli.dispatch(['measure', '--family', 'identity', '--params', '3', '--gamma-exact'])['body']
    points = ';'.join(f"{i},{j}" for i, j in found['gamma_attractor'])
    body = cli.dispatch(['measure', '--family', 'identity', '--params', '3', '--attractor', points])['body']
    assert body['attractor_check'] == {'ok': True, 'square': False}


def test_measure_unique_with_extra_shapes():
    plain = cli.dispatch(['measure', '--family', 'ek', '--params', '3', '--unique'])['body']
    assert plain['unique_lower_bound'] >= 8
    extra = cli.dispatch(['measure', '--family', 'ek', '--params', '3', '--unique', '--shapes', '3', '1'])['body']
    assert extra['unique_lower_bound'] == plain['unique_lower_bound']
    odd = cli.dispatch(['measure', '--family', 'ek', '--params', '3', '--unique', '--shapes', '3'])
    assert odd['exitCode'] == EXIT_VALIDATION


def test_budget_exit_code():
    response = cli.dispatch(['--budget', '1', 'measure', '--delta', '--family', 'random', '--params', '6', '6', '2'])
    assert response['exitCode'] == EXIT_BUDGET
    assert response['body']['kind'] == 'BudgetExceeded'


def test_grammar_validate():
    response = cli.dispatch(['grammar', 'validate', '--grammar', fixture('fig_slp.grammar')])
    body = response['body']
    assert (body['rows'], body['cols'], body['size']) == (4, 6, 12)
    assert body['parse_tree_size'] == 71
    assert body['grammar_tree_nodes'] == 13


def test_grammar_validate_corrupted():
    response = cli.dispatch(['grammar', 'validate', '--grammar', fixture(os.path.join('broken', 'corrupted.grammar'))])
    assert response['exitCode'] == EXIT_VALIDATION
    assert response['body']['kind'] == 'DimMismatch'
    assert response['body']['rule'] == 'S'


def test_grammar_parse_error(tmp_path):
    path = tmp_path / 'bad.grammar'
    path.write_text("axiom S\nS = h A B\nA = term 0\n", encoding='utf-8')
    response = cli.dispatch(['grammar', 'expand', '--grammar', str(path)])
    assert response['exitCode'] == EXIT_PARSE
    assert response['body']['line'] == 2


def test_grammar_family_and_expand(tmp_path):
    response = cli.dispatch(['grammar', 'family', '--target', 'ek', '--k', '4'])
    assert response['body']['size'] == 34
    path = tmp_path / 'e4.grammar'
    path.write_text(response['output'], encoding='utf-8')
    expanded = cli.dispatch(['grammar', 'expand', '--grammar', str(path)])
    assert expanded['output'] == write_matrix(families.ek(4))


def test_grammar_unknown_family():
    response = cli.dispatch(['grammar', 'family', '--target', 'identity', '--k', '3'])
    assert response['exitCode'] == EXIT_VALIDATION


def test_grammar_tree(tmp_path):
    table = tmp_path / 'tree.csv'
    response = cli.dispatch(['grammar', 'tree', '--grammar', fixture('fig_slp.grammar'), '--csv', str(table)])
    body = response['body']
    assert body['nodes'] == 13
    output = response['output'].splitlines()
    assert len(output) == 13
    assert output[0].startswith('0 primary S 1,1-4,6')
    lines = table.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'node,kind,var,i1,j1,i2,j2,children,symbol,copy_of'
    assert len(lines) == 1 + 13


def test_grammar_tree_runs():
    body = cli.dispatch(['grammar', 'tree', '--grammar', fixture('fig_rlslp.grammar')])['body']
    assert body['run_leaves'] >= 1


def test_grammar_minimize():
    response = cli.dispatch(['grammar', 'minimize', '--family', 'alt', '--params', '4', '6', '--rl'])
    assert response['body']['size'] == 8
    assert response['body']['optimal'] is True


def test_missing_file():
    response = cli.dispatch(['grammar', 'validate', '--grammar', fixture('missing.grammar')])
    assert response['exitCode'] == EXIT_VALIDATION


def test_access(tmp_path):
    table = tmp_path / 'hops.csv'
    response = cli.dispatch(['--csv', str(table), 'access', '--grammar', fixture('fig_slp.grammar'),
                             '--query', '2', '3', '--verify-all'])
    body = response['body']
    assert body['symbol'] == '0'
    assert body['matches'] and body['within_limit']
    assert table.read_text(encoding='utf-8').startswith('hops,cells\n')


def test_macro_commands(tmp_path):
    assert cli.dispatch(['macro', 'identity', '--n', '64'])['body']['size'] == 6
    decoded = cli.dispatch(['macro', 'decode', '--scheme', fixture('identity3.scheme')])
    assert decoded['output'] == write_matrix(families.identity(3))
    converted = cli.dispatch(['macro', 'from-grammar', '--grammar', fixture('fig_rlslp.grammar')])
    assert converted['body']['size'] == 4
    bad = tmp_path / 'cycle.scheme'
    bad.write_text("scheme 1 2\nexp 1 1 a\nphr 1 2 1 2 1 2\n", encoding='utf-8')
    response = cli.dispatch(['macro', 'validate', '--scheme', str(bad)])
    assert response['exitCode'] == EXIT_VALIDATION
    assert response['body']['kind'] == 'CyclicMap'


def test_macro_minimize():
    response = cli.dispatch(['macro', 'minimize', '--family', 'zeros', '--params', '2', '2'])
    assert response['body']['b'] == 3


def test_blocktree_table(tmp_path):
    table = tmp_path / 'bt.csv'
    response = cli.dispatch(['--csv', str(table), 'blocktree', '--family', 'zeros', '--params', '4', '4'])
    assert response['body']['nodes'] == 9
    assert table.read_text(encoding='utf-8').splitlines()[0] == 'level,side,nodes,internal,pruned,symbol'


def test_linearize():
    response = cli.dispatch(['linearize', '--method', 'hilbert', '--family', 'identity', '--params', '2'])
    assert response['output'] == '2d 1 4\n1 0 1 0\n'
    response = cli.dispatch(['linearize', '--method', 'hilbert', '--family', 'identity', '--params', '3'])
    assert response['exitCode'] == EXIT_VALIDATION


def test_nd_commands(tmp_path):
    grammar = cli.dispatch(['nd', 'grammar', '--d', '3', '--k', '2'])
    assert grammar['body']['expands_to_bdk'] is True
    assert grammar['body']['dims'] == [5, 5, 5]
    cube = tmp_path / 'cube.txt'
    cube.write_text(cli.dispatch(['nd', 'gen', '--d', '2', '--k', '2'])['output'], encoding='utf-8')
    measured = cli.dispatch(['nd', 'measure', '--in', str(cube), '--shape', '2', '2'])
    assert measured['body']['count'] == 16


def test_experiment_list_and_run():
    listed = cli.dispatch(['experiment', '--list'])
    assert 'gap-g-vs-delta' in listed['body']['experiments']
    response = cli.dispatch(['experiment', 'gap-g-vs-delta', '--range', '2', '3'])
    assert response['body']['rows'] == 2
    assert len(response['output'].splitlines()) == 3


def test_unknown_experiment():
    assert cli.dispatch(['experiment', 'nope'])['exitCode'] == EXIT_VALIDATION


def test_preview(tmp_path):
    out = tmp_path / 'id.png'
    response = cli.dispatch(['preview', '--family', 'identity', '--params', '4', '--out', str(out), '--scale', '5'])
    assert response['exitCode'] == EXIT_OK
    assert out.exists()


def test_main_json(capsys):
    code = cli.main(['--json', 'macro', 'identity', '--n', '8'])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {'n': 8, 'size': 6}


def test_main_error_goes_to_stderr(capsys):
    code = cli.main(['gen', '--family', 'diagpad', '--params', '3'])
    assert code == EXIT_VALIDATION
    captured = capsys.readouterr()
    assert captured.err.startswith('❌')
    assert captured.out == ''


def _matches(expected, actual):
    if expected == 'number':
        return isinstance(actual, (int, float)) and not isinstance(actual, bool)
    if expected == 'string':
        return isinstance(actual, str)
    return expected == actual


with open(os.path.join(os.path.dirname(os.path.abspath(__file__)), 'repet2d', 'tests.json'), encoding='utf-8') as f:
    CASES = json.load(f)['tests']


@pytest.mark.parametrize('case', CASES, ids=[case['name'] for case in CASES])
def test_cli_cases(case, monkeypatch):
    monkeypatch.chdir(os.path.dirname(FIXTURES))
    response = cli.dispatch(case['args'])
    assert response['exitCode'] == case['expectedExit']
    body = response['body']
    for key, value in case['expectedBody'].items():
        assert key in body
        assert _matches(value, body[key]), f"{key}: expected {value!r}, got {body[key]!r}"
