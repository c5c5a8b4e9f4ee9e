"""
Пошаговый движок симуляции.

Каждый prime step идёт в три фазы: праймари и пропуски, затем бриджи, затем
формирование листов. Состояние меняется только функциями машины состояний;
один прогон - один писатель. Независимые сценарии считаются параллельно.
"""
import asyncio
import math
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from scr.consensus.event_log import EVENT_COLUMNS, EventKind, EventLog
from scr.consensus.state_machine import (
    MIN_LIST_SIZE,
    SystemState,
    bridge_sync,
    form_sync_list,
    log_unmatched,
    miss_primary,
    primary_sync,
)
from scr.errors import InvariantViolation, PreconditionError
from scr.logger import logger
from scr.simulation.policies import BehaviorPolicy
from scr.simulation.scenario_config import ScenarioConfig, SimulationConfig
from scr.trust.trust_core import TrustParams, equilibrium_trust

TRAJECTORY_COLUMNS = ['peer_id', 'k', 'day', 'raw_trust', 'fractional_trust']
SUMMARY_COLUMNS = [
    'peer_id', 'final_trust', 'fraction_of_equilibrium', 'max_drawdown',
    'largest_bridge_drop', 'bridges', 'misses',
]

# Допуск на округление при проверке потолка T*
CEILING_TOLERANCE = 1e-12


@dataclass
class SimulationResult:
    name: str
    params: TrustParams
    trajectory: pd.DataFrame
    state: SystemState
    tracked: Tuple[str, ...]

    @property
    def log(self) -> EventLog:
        return self.state.log

    def events(self) -> pd.DataFrame:
        return self.log.to_dataframe()

    def trust_at_day(self, day: float, peer_id: Optional[str] = None) -> float:
        """Сырое доверие пира на конец суток day (последняя выборка не позже этого шага)."""
        peer_id = peer_id or self.tracked[0]
        k = day * self.params.steps_per_day
        samples = self.trajectory[(self.trajectory['peer_id'] == peer_id) & (self.trajectory['k'] <= k)]
        if samples.empty:
            return 0.0
        return float(samples['raw_trust'].iloc[-1])


class SimulationEngine:
    """
    Ведёт одного отслеживаемого пира (subject) через политику поведения.

    Напарники по листу - всегда честные заполнители: новые при каждом
    формировании (matching='fresh') или случайные из пула свободных
    (matching='random', генератор numpy с заданным seed).
    """

    def __init__(self,
                 params: TrustParams,
                 policy: BehaviorPolicy,
                 subject: str = 'subject',
                 list_size: int = MIN_LIST_SIZE,
                 matching: str = 'fresh',
                 filler_pool: Optional[int] = None,
                 seed: Union[int, np.random.SeedSequence] = 0,
                 start: int = 0,
                 sample_stride: Optional[int] = None,
                 check_invariants: bool = True):
        if list_size < MIN_LIST_SIZE:
            raise PreconditionError(f"размер листа не меньше {MIN_LIST_SIZE}: {list_size}")
        if start < 0:
            raise PreconditionError(f"начальный шаг не может быть отрицательным: {start}")
        self.params = params
        self.policy = policy
        self.subject = subject
        self.list_size = list_size
        self.matching = matching
        self.start = start
        self.stride = sample_stride or max(1, round(params.steps_per_day))
        self.check_invariants = check_invariants
        self.rng = np.random.default_rng(seed)
        self.t_star = equilibrium_trust(params)
        self._fillers = 0
        self._rejoin_at: Optional[int] = None
        self._samples: List[Tuple[str, int, float, float, float]] = []
        self._log = logger.bind(scenario=subject)

        self.state = SystemState(params=params, clock=start)
        self.state.add_peer(subject)
        self._pool: List[str] = []
        if matching == 'random':
            pool_size = filler_pool if filler_pool is not None else 2 * (list_size - 1)
            if pool_size < list_size - 1:
                raise PreconditionError(f"пул заполнителей {pool_size} меньше {list_size - 1}")
            self._pool = [self._new_filler() for _ in range(pool_size)]
        elif matching != 'fresh':
            raise PreconditionError(f"неизвестный режим подбора: {matching}")
        self._form_subject_list()

    def _new_filler(self) -> str:
        self._fillers += 1
        peer_id = f"{self.subject}-f{self._fillers}"
        self.state.add_peer(peer_id)
        return peer_id

    def _pick_fillers(self) -> List[str]:
        needed = self.list_size - 1
        if self.matching == 'fresh':
            return [self._new_filler() for _ in range(needed)]
        idle = [pid for pid in self._pool if self.state.peers[pid].list_id is None]
        chosen = self.rng.choice(len(idle), size=needed, replace=False)
        return [idle[i] for i in sorted(chosen.tolist())]

    def _form_subject_list(self) -> None:
        form_sync_list(self.state, [self.subject, *self._pick_fillers()])

    def step(self, k: int) -> bool:
        """Один prime step; возвращает True, если у отслеживаемого пира был бридж."""
        state = self.state
        state.advance_clock(k)
        if state.peers[self.subject].list_id is None:
            log_unmatched(state, [self.subject])

        for list_id in sorted(state.lists):
            sync_list = state.lists[list_id]
            if self.subject in sync_list.members and self.policy.is_miss(k):
                miss_primary(state, list_id, saboteur=self.subject)
                self._rejoin_at = self.policy.rejoin_step(k)
                continue
            primary_sync(state, list_id)

        bridged = False
        for list_id in sorted(state.lists):
            sync_list = state.lists[list_id]
            if self.policy.should_bridge(sync_list.primaries, k):
                bridge_sync(state, list_id)
                bridged = bridged or self.subject in sync_list.members
                if self.check_invariants:
                    self._check_ceiling(sync_list.members, k)

        if (state.peers[self.subject].list_id is None
                and self._rejoin_at is not None and k >= self._rejoin_at):
            self._form_subject_list()
            self._rejoin_at = None

        if self.check_invariants:
            self._check_counters(k)
        if bridged or k % self.stride == 0:
            self._sample(k)
        return bridged

    def _sample(self, k: int) -> None:
        trust = self.state.peers[self.subject].trust
        total = math.fsum(p.trust for p in self.state.peers.values())
        fraction = trust / total if total > 0 else math.nan
        self._samples.append((self.subject, k, k / self.params.steps_per_day, trust, fraction))

    def _check_ceiling(self, members: Sequence[str], k: int) -> None:
        for pid in members:
            trust = self.state.peers[pid].trust
            if trust < 0 or trust > self.t_star * (1 + CEILING_TOLERANCE):
                self._log.error("Доверие вышло за пределы [0, T*]", k=k, peer_id=pid,
                                trust=trust, t_star=self.t_star)
                raise InvariantViolation("доверие вне [0, T*]", k,
                                         {'peer_id': pid, 'trust': trust, 't_star': self.t_star})

    def _check_counters(self, k: int) -> None:
        for sync_list in self.state.lists.values():
            if not 0 <= sync_list.s_m <= self.params.delta:
                self._log.error("Счётчик праймари вне [0, delta]", k=k,
                                list_id=sync_list.list_id, s_m=sync_list.s_m)
                raise InvariantViolation("s_m вне [0, delta]", k,
                                         {'list_id': sync_list.list_id, 's_m': sync_list.s_m})

    def _check_log(self) -> None:
        stray = [r for r in self.state.log.trust_mutations() if r.event is not EventKind.BRIDGE]
        if stray:
            first = stray[0]
            raise InvariantViolation("доверие изменилось вне бриджа", first.k,
                                     {'peer_id': first.peer_id, 'event': first.event.value})

    def run(self, horizon: int) -> SimulationResult:
        """Прогон шагов start+1 .. start+horizon."""
        if horizon < 0:
            raise PreconditionError(f"горизонт не может быть отрицательным: {horizon}")
        self._log.info("Запуск симуляции", start=self.start, horizon=horizon)
        for k in range(self.start + 1, self.start + horizon + 1):
            self.step(k)
        if self.check_invariants:
            self._check_log()

        trajectory = pd.DataFrame(self._samples, columns=TRAJECTORY_COLUMNS)
        self._log.info("Симуляция завершена", steps=horizon, samples=len(trajectory),
                       final_trust=self.state.peers[self.subject].trust)
        return SimulationResult(name=self.subject, params=self.params, trajectory=trajectory,
                                state=self.state, tracked=(self.subject,))


def scenario_seed(config: SimulationConfig, scenario: ScenarioConfig) -> np.random.SeedSequence:
    """Seed сценария зависит только от общего seed и имени сценария."""
    return np.random.SeedSequence(config.seed, spawn_key=(zlib.crc32(scenario.name.encode('utf-8')),))


def run_scenario(config: SimulationConfig, scenario: ScenarioConfig) -> SimulationResult:
    engine = SimulationEngine(
        params=config.params,
        policy=scenario.build_policy(config.params),
        subject=scenario.name,
        list_size=scenario.list_size,
        matching=scenario.matching,
        filler_pool=scenario.filler_pool if scenario.has_random_matching() else None,
        seed=scenario_seed(config, scenario),
        sample_stride=config.stride,
    )
    return engine.run(config.horizon_steps)


async def run_scenarios(config: SimulationConfig) -> List[SimulationResult]:
    """Независимые сценарии считаются параллельно; результат упорядочен по имени."""
    logger.info("Запуск сценариев", horizon_steps=config.horizon_steps,
                scenarios=[s.get_scenario_info() for s in config.scenarios])
    tasks = [
        asyncio.create_task(asyncio.to_thread(run_scenario, config, scenario))
        for scenario in config.scenarios
    ]
    results = await asyncio.gather(*tasks)
    return sorted(results, key=lambda r: r.name)


def summarize(result: SimulationResult) -> pd.DataFrame:
    """
    Сводка по отслеживаемым пирам: итоговое доверие, доля от T*, максимальная
    просадка траектории, наибольшее падение за один бридж, число бриджей и пропусков.
    """
    events = result.events()
    tracked = events[events['peer_id'].isin(result.tracked)]
    counts = (tracked.groupby(['peer_id', 'event']).size()
              .unstack(fill_value=0)
              .reindex(index=list(result.tracked), columns=[e.value for e in EventKind], fill_value=0))
    saboteur_misses = (tracked[(tracked['event'] == EventKind.MISS.value)
                               & (tracked['saboteur'] == tracked['peer_id'])]
                       .groupby('peer_id').size())

    drops = result.log.bridge_drops()
    drops = drops[drops['peer_id'].isin(result.tracked)].groupby('peer_id')['drop'].max()

    t_star = equilibrium_trust(result.params)
    rows = []
    for peer_id in result.tracked:
        raw = result.trajectory.loc[result.trajectory['peer_id'] == peer_id, 'raw_trust']
        drawdown = float((raw.cummax() - raw).max()) if not raw.empty else 0.0
        final = result.state.peers[peer_id].trust
        rows.append({
            'peer_id': peer_id,
            'final_trust': final,
            'fraction_of_equilibrium': final / t_star,
            'max_drawdown': drawdown,
            'largest_bridge_drop': max(0.0, float(drops.get(peer_id, 0.0))),
            'bridges': int(counts.loc[peer_id, EventKind.BRIDGE.value]),
            'misses': int(saboteur_misses.get(peer_id, 0)),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def merge_results(results: Sequence[SimulationResult]) -> Dict[str, pd.DataFrame]:
    """Сводит результаты сценариев в три таблицы: траектории, журнал событий и сводку."""
    trajectories = [r.trajectory for r in results]
    events = []
    for result in results:
        frame = result.events()
        frame['scenario'] = result.name
        events.append(frame)
    summaries = [summarize(r) for r in results]
    return {
        'trajectory': (pd.concat(trajectories, ignore_index=True) if trajectories
                       else pd.DataFrame(columns=TRAJECTORY_COLUMNS)),
        'events': (pd.concat(events, ignore_index=True) if events
                   else pd.DataFrame(columns=[*EVENT_COLUMNS, 'scenario'])),
        'summary': (pd.concat(summaries, ignore_index=True) if summaries
                    else pd.DataFrame(columns=SUMMARY_COLUMNS)),
    }
