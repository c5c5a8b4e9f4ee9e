import asyncio

import pandas as pd
import pytest

import main as cli
from main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from scr.verification import CheckResult

SMALL_CONFIG = """[simulation]
horizon_steps = 600
seed = 3
sample_stride = 100

[scenario steady]
bridge_interval = 48

[scenario shaky]
bridge_interval = 24
miss_at = 250
unmatched_duration = 20
matching = random
"""


def run(*argv) -> int:
    return asyncio.run(main(list(argv)))


def test_params_reference_calibration(capsys):
    assert run('params', '--months', '6') == EXIT_OK
    out = capsys.readouterr().out
    assert "beta = 0.9999111696" in out
    assert "идеальных бриджей до 90% T* = 540" in out


def test_params_twelve_months(capsys):
    assert run('params', '--months', '12') == EXIT_OK
    assert "beta = 0.9999555838" in capsys.readouterr().out


def test_params_out_of_domain(capsys):
    assert run('params', '--pct', '150') == EXIT_USAGE
    assert "--pct" in capsys.readouterr().err


def test_unknown_command_is_usage_error():
    assert run('bogus') == EXIT_USAGE
    assert run() == EXIT_USAGE


def test_invalid_override_is_usage_error():
    assert run('replay', 'fig3', '--beta', '1.5') == EXIT_USAGE


def test_replay_single_figure(tmp_path, capsys):
    path = tmp_path / 'fig4.csv'
    assert run('replay', 'fig4', '--output', str(path)) == EXIT_OK
    table = pd.read_csv(path, keep_default_na=False)
    assert list(table.columns) == ['k', 'b', 'k_minus_b', 's_m', 'calc']
    assert table['k'].tolist() == list(range(98, 114))
    row = table[table['k'] == 107].iloc[0]
    assert row['s_m'] == ''
    assert "fig4: 16 строк совпали" in capsys.readouterr().out


def test_replay_all_into_directory(tmp_path):
    directory = tmp_path / 'figures'
    assert run('replay', 'all', '--output', str(directory)) == EXIT_OK
    assert sorted(p.name for p in directory.iterdir()) == ['fig3.csv', 'fig4.csv', 'fig5.csv']


def test_replay_default_output_dir(output_dir):
    assert run('replay', 'fig3') == EXIT_OK
    assert (output_dir / 'fig3.csv').exists()


def test_simulate_writes_outputs(tmp_path, capsys):
    config = tmp_path / 'small.cfg'
    config.write_text(SMALL_CONFIG, encoding='utf-8')
    out_dir = tmp_path / 'run'
    assert run('simulate', str(config), '--output-dir', str(out_dir)) == EXIT_OK

    trajectory = (out_dir / 'trajectory.csv').read_text(encoding='utf-8').splitlines()
    assert trajectory[0] == "peer_id,k,day,raw_trust,fractional_trust"
    events = pd.read_csv(out_dir / 'events.csv')
    assert events.columns[-1] == 'scenario'
    assert set(events['scenario']) == {'steady', 'shaky'}
    summary = pd.read_csv(out_dir / 'summary.csv')
    assert summary['peer_id'].tolist() == ['shaky', 'steady']
    assert summary.loc[summary['peer_id'] == 'shaky', 'misses'].item() == 1

    out = capsys.readouterr().out
    assert "steady: доверие" in out


def test_simulate_is_deterministic(tmp_path):
    config = tmp_path / 'small.cfg'
    config.write_text(SMALL_CONFIG, encoding='utf-8')
    first, second = tmp_path / 'a', tmp_path / 'b'
    assert run('simulate', str(config), '--output-dir', str(first)) == EXIT_OK
    assert run('simulate', str(config), '--output-dir', str(second)) == EXIT_OK
    for name in ('trajectory.csv', 'events.csv', 'summary.csv'):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_simulate_prime_override_keeps_horizon_in_days(tmp_path):
    config = tmp_path / 'days.cfg'
    config.write_text("[simulation]\nhorizon_days = 2\n[scenario steady]\n", encoding='utf-8')
    out_dir = tmp_path / 'run'
    assert run('simulate', str(config), '--prime-min', '5', '--output-dir', str(out_dir)) == EXIT_OK
    trajectory = pd.read_csv(out_dir / 'trajectory.csv')
    assert trajectory['k'].max() == 576
    assert trajectory['day'].max() == pytest.approx(2.0)
    assert len(trajectory) == 2 * 288 // 48


def test_simulate_invalid_override_is_usage_error(tmp_path):
    config = tmp_path / 'days.cfg'
    config.write_text("[simulation]\nhorizon_days = 2\n[scenario steady]\n", encoding='utf-8')
    assert run('simulate', str(config), '--prime-min', '0', '--output-dir', str(tmp_path / 'run')) == EXIT_USAGE


def test_simulate_zero_horizon_writes_header_only(tmp_path):
    config = tmp_path / 'zero.cfg'
    config.write_text("[simulation]\nhorizon_steps = 0\n[scenario s]\n", encoding='utf-8')
    out_dir = tmp_path / 'run'
    assert run('simulate', str(config), '--output-dir', str(out_dir)) == EXIT_OK
    lines = (out_dir / 'trajectory.csv').read_text(encoding='utf-8').splitlines()
    assert lines == ["peer_id,k,day,raw_trust,fractional_trust"]


def test_simulate_empty_config(tmp_path, capsys):
    config = tmp_path / 'empty.cfg'
    config.write_text("", encoding='utf-8')
    assert run('simulate', str(config), '--output-dir', str(tmp_path / 'run')) == EXIT_USAGE
    assert "ошибка конфигурации" in capsys.readouterr().err


def test_simulate_bad_value_reports_line(tmp_path, capsys):
    config = tmp_path / 'bad.cfg'
    config.write_text("[simulation]\nhorizon_steps = 10\n[scenario s]\nbridge_interval = 0\n", encoding='utf-8')
    assert run('simulate', str(config), '--output-dir', str(tmp_path / 'run')) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "строка 4" in err
    assert "bridge_interval" in err


def test_incentive_random_sweep(tmp_path, capsys):
    records = tmp_path / 'incentive.csv'
    assert run('incentive', '--random', '200', '--seed', '7', '--output', str(records)) == EXIT_OK
    assert "200/200 agree, 0 counterexamples" in capsys.readouterr().out
    assert len(pd.read_csv(records)) == 200


def test_incentive_rejects_zero_scenarios():
    assert run('incentive', '--random', '0') == EXIT_USAGE


def test_incentive_bound(t_star, capsys):
    assert run('incentive', '--bound', '--total-trust', repr(100 * t_star)) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith(": 100")


def test_incentive_bound_needs_total(capsys):
    assert run('incentive', '--bound') == EXIT_USAGE


def test_incentive_average_bound(t_star, capsys):
    assert run('incentive', '--avg-trust', repr(t_star), '--peers', '50') == EXIT_OK
    assert capsys.readouterr().out.strip().endswith(": 50")


def test_incentive_safe_size_sweep(capsys):
    assert run('incentive', '--safe-size', '5', '--seed', '2') == EXIT_OK


@pytest.mark.parametrize("passed, expected", [(True, EXIT_OK), (False, EXIT_FAILED)])
def test_verify_reports_checks(monkeypatch, output_dir, capsys, passed, expected):
    async def fake_acceptance(seed=7, params=None):
        return [CheckResult(1, "калибровка beta", True, "ok"),
                CheckResult(2, "трассы рисунков", passed, "detail")]

    monkeypatch.setattr(cli, 'run_acceptance', fake_acceptance)
    assert run('verify') == expected
    out = capsys.readouterr().out
    assert "[PASS] 1. калибровка beta: ok" in out
    report = (output_dir / 'verify.txt').read_text(encoding='utf-8')
    assert report.count("\n") == 2
