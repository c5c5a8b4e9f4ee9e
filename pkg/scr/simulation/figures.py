"""
Воспроизведение эталонных трасс одного пира: идеальные бриджи, ранний бридж
с пропуском праймари и поздний бридж.

Все трассы начинаются с листа, сформированного на шаге 52 (b = 52, доверие 0);
таблица показывает строки с шага 98.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import pandas as pd

from scr.consensus.event_log import BridgeCalc, TraceRow
from scr.errors import NotFoundError
from scr.simulation.policies import Phase, ScriptedPolicy
from scr.simulation.scenario_config import ScenarioConfig, SimulationConfig
from scr.simulation.sim_engine import SimulationEngine
from scr.trust.trust_core import TrustParams

FIGURES = ('fig3', 'fig4', 'fig5')
REPLAY_START = 52
FIRST_ROW = 98
SUBJECT = 'i'
TABLE_COLUMNS = ['k', 'b', 'k_minus_b', 's_m', 'calc']


@dataclass(frozen=True)
class FigureScript:
    bridge_at: Tuple[int, ...]
    end: int
    miss_at: Tuple[int, ...] = ()
    reform_at: Tuple[int, ...] = ()


SCRIPTS: Dict[str, FigureScript] = {
    'fig3': FigureScript(bridge_at=(100, 148), end=152),
    'fig4': FigureScript(bridge_at=(100, 103, 112), end=113, miss_at=(107,), reform_at=(109,)),
    'fig5': FigureScript(bridge_at=(100, 152), end=154),
}


def _run(k_from: int, k_to: int, b: int, s_m_first: Optional[int]) -> List[TraceRow]:
    """Отрезок строк с постоянным b; S_M растёт на 1 за шаг или отсутствует."""
    return [
        TraceRow(k, b, k - b, None if s_m_first is None else s_m_first + (k - k_from))
        for k in range(k_from, k_to + 1)
    ]


# Ожидаемые таблицы (k, b, k-b, S_M) и строки расчёта (k, показатель, S_M)
EXPECTED_ROWS: Dict[str, List[TraceRow]] = {
    'fig3': _run(98, 100, 52, 46) + _run(101, 148, 100, 1) + _run(149, 152, 148, 1),
    'fig4': (_run(98, 100, 52, 46) + _run(101, 103, 100, 1) + _run(104, 106, 103, 1)
             + _run(107, 109, 103, None) + _run(110, 112, 103, 1) + _run(113, 113, 112, 1)),
    'fig5': _run(98, 100, 52, 46) + _run(101, 148, 100, 1) + _run(149, 152, 100, 1) + _run(153, 154, 152, 1),
}

EXPECTED_CALCS: Dict[str, List[Tuple[int, int, int]]] = {
    'fig3': [(100, 48, 48), (148, 48, 48)],
    'fig4': [(100, 48, 48), (103, 3, 3), (112, 9, 3)],
    'fig5': [(100, 48, 48), (152, 52, 4)],
}


@dataclass(frozen=True)
class FigureReplay:
    figure: str
    rows: List[TraceRow]
    calcs: List[BridgeCalc]

    def table(self) -> pd.DataFrame:
        calc_by_k = {c.k: c.expression for c in self.calcs}
        df = pd.DataFrame(
            [(r.k, r.b, r.k_minus_b, r.s_m, calc_by_k.get(r.k, '')) for r in self.rows],
            columns=TABLE_COLUMNS,
        )
        df['s_m'] = df['s_m'].astype('Int64')
        return df

    def first_mismatch(self) -> Optional[str]:
        """Первое расхождение с ожидаемой таблицей или None."""
        expected = EXPECTED_ROWS[self.figure]
        for got, want in zip(self.rows, expected):
            if got != want:
                return f"строка k={want.k}: ожидалось {_fmt(want)}, получено {_fmt(got)}"
        if len(self.rows) != len(expected):
            return f"число строк: ожидалось {len(expected)}, получено {len(self.rows)}"

        got_calcs = [(c.k, c.exponent, c.s_m) for c in self.calcs]
        for got, want in zip(got_calcs, EXPECTED_CALCS[self.figure]):
            if got != want:
                return f"расчёт после k={want[0]}: ожидалось {want}, получено {got}"
        if len(got_calcs) != len(EXPECTED_CALCS[self.figure]):
            return f"число бриджей: ожидалось {len(EXPECTED_CALCS[self.figure])}, получено {len(got_calcs)}"
        return None

    @property
    def matches(self) -> bool:
        return self.first_mismatch() is None


def _fmt(row: TraceRow) -> str:
    s_m = '-' if row.s_m is None else row.s_m
    return f"(k={row.k}, b={row.b}, k-b={row.k_minus_b}, S_M={s_m})"


def replay_figure(which: str, params: Optional[TrustParams] = None) -> FigureReplay:
    """
    Прогоняет сценарий рисунка через движок и восстанавливает таблицу трассы пира.

    Raises:
        NotFoundError: неизвестный идентификатор рисунка
    """
    which = which.lower()
    if which not in SCRIPTS:
        raise NotFoundError(f"неизвестный рисунок {which}, доступны: {', '.join(FIGURES)}")
    params = params or TrustParams()
    script = SCRIPTS[which]
    engine = SimulationEngine(
        params=params,
        policy=ScriptedPolicy(bridge_at=frozenset(script.bridge_at),
                              miss_at=frozenset(script.miss_at),
                              reform_at=frozenset(script.reform_at)),
        subject=SUBJECT,
        start=REPLAY_START,
    )
    result = engine.run(script.end - REPLAY_START)
    rows, calcs = result.log.trace_table(SUBJECT, params.delta, k_from=FIRST_ROW, k_to=script.end)
    return FigureReplay(figure=which, rows=rows, calcs=calcs)


# Годовая траектория трёх пиров: идеальный, ранний с пропуском и недельным
# простоем, поздний затем ранний
YEAR_HORIZON_DAYS = 365
YEAR_MISS_STEP = 17281
YEAR_UNMATCHED_STEPS = 1008


def year_config(params: Optional[TrustParams] = None) -> SimulationConfig:
    """Встроенная копия configs/fig6.cfg."""
    params = params or TrustParams()
    return SimulationConfig(
        horizon_steps=round(YEAR_HORIZON_DAYS * params.steps_per_day),
        params=params,
        scenarios=[
            ScenarioConfig(name='blue'),
            ScenarioConfig(name='red', phases=[Phase(90, 120, 24)],
                           miss_at=[YEAR_MISS_STEP], unmatched_duration=YEAR_UNMATCHED_STEPS),
            ScenarioConfig(name='green', phases=[Phase(90, 120, 54), Phase(120, 150, 18)]),
        ],
    )
