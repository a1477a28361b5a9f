"""
Tests for settings loading and the selftest fixture checks and report.
Run: pytest test_selftest.py
"""

import json
import os

from repet2d import access2d, config, selftest
from repet2d.access2d import HeavyEdge
from repet2d.grammar2d import HORIZ, VERT

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')


def test_settings_from_environment():
    settings = config.load_settings({'REPET2D_BUDGET': '500', 'REPET2D_LOG_LEVEL': 'debug'})
    assert settings.budget == 500
    assert settings.log_level == 'DEBUG'
    assert settings.verify_max_cells == config.DEFAULT_VERIFY_MAX_CELLS
    assert config.load_settings({'REPET2D_BUDGET': '500'}, budget=7).budget == 7
    assert config.load_settings({}).budget == config.DEFAULT_BUDGET


def test_fixture_checks_pass():
    result = selftest.test_fixtures(True, FIXTURES)
    assert result['status'] == 'completed'
    assert {'factor_example', 'fig_slp.grammar', 'fig_rlslp.grammar'} <= set(result['tests'])
    assert all(check['status'] == 'passed' for check in result['tests'].values())


def test_corrupted_fixture_fails_with_rule_name():
    result = selftest.test_fixtures(True, os.path.join(FIXTURES, 'broken'))
    check = result['tests']['corrupted.grammar']
    assert check['status'] == 'failed'
    assert 'DimMismatch' in check['details']
    assert 'rule S' in check['details']


def test_empty_fixture_dir_fails(tmp_path):
    result = selftest.test_fixtures(True, str(tmp_path))
    assert result['tests']['factor_example']['status'] == 'failed'
    assert result['tests']['grammar_fixtures']['status'] == 'failed'


def test_exact_values_quick():
    result = selftest.test_exact_values(True, FIXTURES)
    assert all(check['status'] == 'passed' for check in result['tests'].values())


def test_report_is_json(tmp_path):
    results = {'quick': True, 'categories': {}, 'passed': 1, 'failed': 0}
    path = selftest.save_report(results, str(tmp_path))
    assert os.path.basename(path).startswith('selftest_report_')
    with open(path, encoding='utf-8') as f:
        assert json.load(f) == results


def test_exact_values_expect_three_points_for_identity_two():
    result = selftest.test_exact_values(True, FIXTURES)
    assert "2: 3" in result['tests']['gamma_identity']['details']


def test_multidim_checks_quick():
    result = selftest.test_multidim(True, FIXTURES)
    embedding = result['tests']['embedding']
    assert embedding['status'] == 'passed'
    assert 'concatenations and grammars agree' in embedding['details']
    assert all(check['status'] == 'passed' for check in result['tests'].values())


def test_access_checks_quick():
    result = selftest.test_access(True, FIXTURES)
    assert {'E_6', 'zeros_64', 'B_3', 'fig_slp.grammar'} <= set(result['tests'])
    assert all(check['status'] == 'passed' for check in result['tests'].values())


def test_access_checks_fail_over_hop_bound(monkeypatch):
    heavy_edge = access2d._heavy_edge

    def light_edge(name, rule, dims):
        # descend into the smaller child of every binary rule
        if rule.kind not in (HORIZ, VERT):
            return heavy_edge(name, rule, dims)
        first, second = rule.children
        (r1, c1), (r2, c2) = dims[first], dims[second]
        if r1 * c1 < r2 * c2:
            if rule.kind == HORIZ:
                return HeavyEdge(name, first, access2d.LEFT, 0, c2, 0, 0)
            return HeavyEdge(name, first, access2d.UP, 0, 0, 0, r2)
        if rule.kind == HORIZ:
            return HeavyEdge(name, second, access2d.RIGHT, c1, 0, 0, 0)
        return HeavyEdge(name, second, access2d.DOWN, 0, 0, r1, 0)

    monkeypatch.setattr(access2d, '_heavy_edge', light_edge)
    result = selftest.test_access(True, FIXTURES)
    check = result['tests']['E_6']
    assert check['status'] == 'failed'
    assert 'HopBoundExceeded' in check['details']
