from pathlib import Path

import pytest
from openpyxl import Workbook

from scr.errors import ConfigError
from scr.simulation.policies import Phase
from scr.simulation.scenario_config import (
    ScenarioConfig,
    get_scenarios_config_from_excel,
    load_config,
    load_scenario_config,
    parse_phases,
    parse_steps,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'

BASE = """[simulation]
horizon_days = 2
"""


def write_config(tmp_path, text: str) -> Path:
    path = tmp_path / 'scenarios.cfg'
    path.write_text(text, encoding='utf-8')
    return path


def test_load_bundled_config():
    config = load_scenario_config(CONFIG_DIR / 'fig6.cfg')
    assert config.horizon_steps == 52560
    assert config.sample_stride is None
    assert config.stride == 144
    assert [s.name for s in config.scenarios] == ['blue', 'red', 'green']
    red = config.scenario('red')
    assert red.phases == [Phase(90, 120, 24)]
    assert red.miss_at == [17281]
    assert red.unmatched_duration == 1008
    green = config.scenario('green')
    assert green.phases == [Phase(90, 120, 54), Phase(120, 150, 18)]
    assert green.miss_at == []
    assert config.source.endswith('fig6.cfg')


def test_defaults_for_minimal_scenario(tmp_path):
    config = load_scenario_config(write_config(tmp_path, BASE + "[scenario only]\n"))
    scenario = config.scenario('only')
    assert scenario.list_size == 3
    assert scenario.bridge_interval == 48
    assert scenario.matching == 'fresh'
    assert scenario.filler_pool == 4
    assert config.horizon_steps == 288
    assert config.stride == 144


def test_overrides_apply_before_horizon_conversion():
    config = load_config(CONFIG_DIR / 'fig6.cfg', {'prime_step_minutes': 5, 'beta': None})
    assert config.params.prime_step_minutes == 5
    assert config.params.beta == pytest.approx(0.9999111696)
    assert config.horizon_steps == 365 * 288
    assert config.stride == 288


def test_overrides_reject_unknown_keys():
    with pytest.raises(ConfigError) as e:
        load_config(CONFIG_DIR / 'fig6.cfg', {'prime_min': 5})
    assert e.value.field == 'prime_min'


def test_empty_file(tmp_path):
    with pytest.raises(ConfigError, match="пуста"):
        load_scenario_config(write_config(tmp_path, ""))


def test_error_reports_line_and_field(tmp_path):
    text = BASE + "[scenario bad]\nbridge_interval = 0\n"
    with pytest.raises(ConfigError) as error:
        load_scenario_config(write_config(tmp_path, text))
    assert error.value.line == 4
    assert error.value.field == 'bridge_interval'
    assert 'scenarios.cfg' in str(error.value)


@pytest.mark.parametrize("scenario_body, field", [
    ("colour = red\n", 'colour'),
    ("list_size = 2\n", 'list_size'),
    ("matching = greedy\n", 'matching'),
    ("phases = 90-120:24, 110-130:18\n", 'phases'),
    ("phases = ninety\n", 'phases'),
    ("miss_at = 0\n", 'miss_at'),
    ("miss_at = soon\n", 'miss_at'),
    ("filler_pool = 1\n", 'filler_pool'),
])
def test_scenario_value_errors(tmp_path, scenario_body, field):
    with pytest.raises(ConfigError) as error:
        load_scenario_config(write_config(tmp_path, BASE + "[scenario s]\n" + scenario_body))
    assert error.value.field == field
    assert error.value.line == 4


def test_both_horizons_rejected(tmp_path):
    text = "[simulation]\nhorizon_days = 1\nhorizon_steps = 10\n[scenario s]\n"
    with pytest.raises(ConfigError) as error:
        load_scenario_config(write_config(tmp_path, text))
    assert error.value.field == 'horizon_steps'
    assert error.value.line == 3


def test_missing_horizon(tmp_path):
    with pytest.raises(ConfigError, match="горизонт"):
        load_scenario_config(write_config(tmp_path, "[simulation]\nseed = 1\n[scenario s]\n"))


def test_invalid_beta_is_attributed(tmp_path):
    text = "[simulation]\nhorizon_steps = 10\nbeta = 1.5\n[scenario s]\n"
    with pytest.raises(ConfigError) as error:
        load_scenario_config(write_config(tmp_path, text))
    assert error.value.field == 'beta'
    assert error.value.line == 3


def test_zero_horizon_allowed(tmp_path):
    config = load_scenario_config(write_config(tmp_path, "[simulation]\nhorizon_days = 0\n[scenario s]\n"))
    assert config.horizon_steps == 0


@pytest.mark.parametrize("text, message", [
    ("horizon_days = 1\n", "вне секции"),
    (BASE, "ни одного сценария"),
    ("[scenario s]\n", "simulation"),
    (BASE + "[other]\n", "неизвестная секция"),
    (BASE + "[scenario s]\n[scenario s]\n", "повторяющаяся"),
])
def test_structure_errors(tmp_path, text, message):
    with pytest.raises(ConfigError, match=message):
        load_scenario_config(write_config(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario_config(tmp_path / 'absent.cfg')


def test_parse_helpers():
    assert parse_phases("90-120:24, 120-150:18") == [Phase(90, 120, 24), Phase(120, 150, 18)]
    assert parse_phases("") == []
    assert parse_steps("17281, 20000") == [17281, 20000]
    assert parse_steps(5) == [5]


def test_scenario_info_and_policy(params):
    scenario = ScenarioConfig(name='red', phases=[Phase(90, 120, 24)], miss_at=[17281], matching='random')
    assert scenario.get_scenario_info() == "[red: лист 3, интервал 48, random, пул 4]"
    assert scenario.has_random_matching()
    blue = ScenarioConfig(name='blue', filler_pool=2)
    assert not blue.has_random_matching()
    assert blue.get_scenario_info() == "[blue: лист 3, интервал 48, fresh]"
    policy = scenario.build_policy(params)
    assert policy.interval_at(100 * 144) == 24
    assert policy.interval_at(10) == 48
    assert policy.is_miss(17281)


def excel_config(tmp_path, rows) -> Path:
    wb = Workbook()
    sheet = wb.active
    for row in rows:
        sheet.append(row)
    path = tmp_path / 'scenarios.xlsx'
    wb.save(path)
    return path


def test_excel_config(tmp_path):
    path = excel_config(tmp_path, [
        ['параметр', 'blue', 'red'],
        ['horizon_days', 365, 365],
        ['bridge_interval', 48, 48],
        ['phases', None, '90-120:24'],
        ['miss_at', None, 17281],
        ['unmatched_duration', None, 1008],
    ])
    config = load_config(path)
    assert config.horizon_steps == 52560
    assert [s.name for s in config.scenarios] == ['blue', 'red']
    assert config.scenario('blue').phases == []
    red = config.scenario('red')
    assert red.phases == [Phase(90, 120, 24)]
    assert red.miss_at == [17281]
    assert red.unmatched_duration == 1008


def test_excel_overrides(tmp_path):
    path = excel_config(tmp_path, [
        ['параметр', 'blue'],
        ['horizon_days', 2],
        ['delta', 48],
    ])
    config = get_scenarios_config_from_excel(path, {'prime_step_minutes': 5, 'delta': 24})
    assert config.params.delta == 24
    assert config.horizon_steps == 2 * 288


def test_excel_inconsistent_simulation_value(tmp_path):
    path = excel_config(tmp_path, [
        ['параметр', 'blue', 'red'],
        ['horizon_days', 365, 180],
    ])
    with pytest.raises(ConfigError) as error:
        get_scenarios_config_from_excel(path)
    assert error.value.line == 2
    assert error.value.field == 'horizon_days'


def test_excel_value_error_points_to_row(tmp_path):
    path = excel_config(tmp_path, [
        ['параметр', 'blue'],
        ['horizon_steps', 100],
        ['list_size', 2],
    ])
    with pytest.raises(ConfigError) as error:
        get_scenarios_config_from_excel(path)
    assert error.value.line == 3
    assert error.value.field == 'list_size'


def test_load_config_dispatches_on_suffix(tmp_path):
    cfg = load_config(write_config(tmp_path, BASE + "[scenario s]\n"))
    assert cfg.scenario('s').name == 's'
