import asyncio

import pytest

from scr.simulation.figures import year_config
from scr.simulation.sim_engine import run_scenarios
from scr.trust.trust_core import TrustParams, equilibrium_trust
from scr.verification import (
    CheckResult,
    check_calibration,
    check_ceiling,
    check_convergence,
    check_figures,
    check_honesty_condition,
    check_safe_size,
    check_year_run,
    largest_drop,
)


@pytest.fixture(scope='module')
def year_results():
    params = TrustParams()
    results = asyncio.run(run_scenarios(year_config(params)))
    return {r.name: r for r in results}


def test_check_line_format():
    assert CheckResult(3, "потолок", False, "x").line() == "[FAIL] 3. потолок: x"


def test_calibration_check():
    assert check_calibration().passed


def test_figures_check():
    result = check_figures()
    assert result.passed, result.detail


def test_ceiling_check(params):
    result = check_ceiling(7, params)
    assert result.passed, result.detail


def test_convergence_check(params):
    result = check_convergence(params)
    assert result.passed, result.detail
    assert "540" in result.detail


def test_honesty_condition_check(params):
    result = check_honesty_condition(7, params)
    assert result.passed, result.detail


def test_year_trajectories(year_results, params):
    result = check_year_run(year_results, params)
    assert result.passed, result.detail


def test_year_end_levels(year_results, params):
    t_star = equilibrium_trust(params)
    final = {name: r.trust_at_day(365) / t_star for name, r in year_results.items()}
    assert final['blue'] == pytest.approx(0.9906, abs=2e-3)
    assert final['red'] == pytest.approx(0.9796, abs=2e-3)
    assert final['green'] == pytest.approx(0.9655, abs=2e-3)
    assert final['blue'] > final['red'] > final['green']


def test_blue_reaches_ninety_percent_at_half_year(year_results, t_star):
    assert year_results['blue'].trust_at_day(180) == pytest.approx(0.9 * t_star, rel=1e-6)


def test_red_miss_costs_most(year_results):
    drops = year_results['red'].log.bridge_drops()
    red = drops[drops['peer_id'] == 'red']
    worst = red.loc[red['drop'].idxmax()]
    assert worst['k_minus_b'] > 1000
    assert worst['drop'] == pytest.approx(597, rel=0.05)


def test_safe_size_check(params):
    result = check_safe_size(7, params)
    assert result.passed, result.detail


def test_deviation_month_drops_are_ordered(year_results):
    red_miss = largest_drop(year_results['red'])
    green_late = largest_drop(year_results['green'], 90, 120)
    red_early = largest_drop(year_results['red'], 90, 120)
    assert green_late == pytest.approx(31, rel=0.15)
    assert red_early < 10
    assert red_miss > green_late > red_early


def test_late_bridging_falls_behind_blue(year_results):
    assert year_results['green'].trust_at_day(120) < year_results['blue'].trust_at_day(120)
    assert year_results['green'].trust_at_day(89) == pytest.approx(year_results['blue'].trust_at_day(89))
