from pathlib import Path

import pandas as pd
import pytest

from scr.consensus.event_log import TraceRow
from scr.errors import NotFoundError
from scr.simulation.figures import FIGURES, FigureReplay, replay_figure, year_config
from scr.simulation.scenario_config import load_scenario_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


@pytest.mark.parametrize("figure", FIGURES)
def test_replay_matches_expected_table(figure):
    replay = replay_figure(figure)
    assert replay.first_mismatch() is None
    assert replay.matches


def test_perfect_bridging_table():
    table = replay_figure('fig3').table()
    assert table['k'].tolist() == list(range(98, 153))
    first = table.iloc[0]
    assert (first['k'], first['b'], first['k_minus_b'], first['s_m']) == (98, 52, 46, 46)
    calcs = table[table['calc'] != '']
    assert calcs['k'].tolist() == [100, 148]
    assert set(calcs['calc']) == {"T_i^-*beta^{48} + 48(1)"}
    last = table.iloc[-1]
    assert (last['k'], last['b'], last['k_minus_b'], last['s_m']) == (152, 148, 4, 4)


def test_early_and_missed_bridging_table():
    table = replay_figure('fig4').table().set_index('k')
    assert table.loc[103, 'calc'] == "T_i^-*beta^{3} + 3(3/Delta)"
    assert table.loc[112, 'calc'] == "T_i^-*beta^{9} + 3(9/Delta)"
    for k, elapsed in [(107, 4), (108, 5), (109, 6)]:
        assert table.loc[k, 'b'] == 103
        assert table.loc[k, 'k_minus_b'] == elapsed
        assert table.loc[k, 's_m'] is pd.NA
    assert (table.loc[110, 'k_minus_b'], table.loc[110, 's_m']) == (7, 1)
    assert (table.loc[113, 'b'], table.loc[113, 'k_minus_b'], table.loc[113, 's_m']) == (112, 1, 1)


def test_late_bridging_table():
    table = replay_figure('fig5').table().set_index('k')
    assert table.loc[148, 's_m'] == 48
    assert (table.loc[149, 'k_minus_b'], table.loc[149, 's_m']) == (49, 1)
    assert table.loc[152, 'calc'] == "T_i^-*beta^{52} + 4(1)"
    assert (table.loc[154, 'b'], table.loc[154, 'k_minus_b'], table.loc[154, 's_m']) == (152, 2, 2)
    assert table.loc[148, 'calc'] == ''


def test_mismatch_names_first_differing_row():
    replay = replay_figure('fig3')
    rows = list(replay.rows)
    rows[5] = TraceRow(rows[5].k, rows[5].b, rows[5].k_minus_b, 0)
    broken = FigureReplay(figure='fig3', rows=rows, calcs=replay.calcs)
    mismatch = broken.first_mismatch()
    assert mismatch is not None
    assert f"k={rows[5].k}" in mismatch
    assert not broken.matches


def test_unknown_figure():
    with pytest.raises(NotFoundError):
        replay_figure('fig9')


def test_bundled_config_matches_builtin_scenarios():
    bundled = load_scenario_config(CONFIG_DIR / 'fig6.cfg')
    builtin = year_config()
    assert bundled.horizon_steps == builtin.horizon_steps == 52560
    assert bundled.params == builtin.params
    for expected in builtin.scenarios:
        loaded = bundled.scenario(expected.name)
        assert loaded.bridge_interval == expected.bridge_interval
        assert loaded.phases == expected.phases
        assert loaded.miss_at == expected.miss_at
        assert loaded.unmatched_duration == expected.unmatched_duration
        assert loaded.matching == expected.matching
