"""Политики поведения отслеживаемого пира: когда делать бридж, когда пропускать праймари."""
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Optional, Tuple

from scr.errors import ConfigError

REFERENCE_INTERVAL = 48


@dataclass(frozen=True)
class Phase:
    """Окно [start_day, end_day), в котором действует свой интервал бриджей."""
    start_day: float
    end_day: float
    interval: int

    def __post_init__(self):
        if self.interval < 1:
            raise ConfigError(f"интервал бриджей должен быть >= 1: {self.interval}", field='phases')
        if not 0 <= self.start_day < self.end_day:
            raise ConfigError(f"окно фазы пусто или отрицательно: {self.start_day}-{self.end_day}",
                              field='phases')

    def covers(self, day: float) -> bool:
        return self.start_day <= day < self.end_day


def _frozen_steps(steps: Iterable[int], name: str) -> FrozenSet[int]:
    result = frozenset(int(k) for k in steps)
    if any(k < 0 for k in result):
        raise ConfigError("шаги не могут быть отрицательными", field=name)
    return result


class BehaviorPolicy:
    """Общий интерфейс политики; движок спрашивает её на каждом шаге."""

    def is_miss(self, k: int) -> bool:
        raise NotImplementedError

    def should_bridge(self, primaries: int, k: int) -> bool:
        raise NotImplementedError

    def rejoin_step(self, miss_k: int) -> Optional[int]:
        """Шаг, в конце которого пир снова формирует лист; None - больше не формирует."""
        raise NotImplementedError


@dataclass(frozen=True)
class PhasedPolicy(BehaviorPolicy):
    """
    Бриджи через фиксированное число праймари, своё для каждой фазы.

    Args:
        default_interval: Интервал вне фаз (48 - идеальный режим)
        phases: Упорядоченные непересекающиеся окна в днях
        miss_at: Шаги, на которых пир пропускает праймари
        unmatched_duration: Сколько шагов пир остаётся без листа после пропуска, >= 1
        steps_per_day: Prime steps в сутках
    """
    default_interval: int = REFERENCE_INTERVAL
    phases: Tuple[Phase, ...] = ()
    miss_at: FrozenSet[int] = field(default_factory=frozenset)
    unmatched_duration: int = 1
    steps_per_day: float = 144.0

    def __post_init__(self):
        if self.default_interval < 1:
            raise ConfigError(f"интервал бриджей должен быть >= 1: {self.default_interval}",
                              field='bridge_interval')
        if self.unmatched_duration < 1:
            raise ConfigError(f"длительность без листа должна быть >= 1: {self.unmatched_duration}",
                              field='unmatched_duration')
        phases = tuple(sorted(self.phases, key=lambda p: p.start_day))
        for previous, current in zip(phases, phases[1:]):
            if current.start_day < previous.end_day:
                raise ConfigError(
                    f"фазы пересекаются: {previous.start_day}-{previous.end_day} и "
                    f"{current.start_day}-{current.end_day}", field='phases')
        object.__setattr__(self, 'phases', phases)
        object.__setattr__(self, 'miss_at', _frozen_steps(self.miss_at, 'miss_at'))

    def interval_at(self, k: int) -> int:
        day = k / self.steps_per_day
        for phase in self.phases:
            if phase.covers(day):
                return phase.interval
        return self.default_interval

    def is_miss(self, k: int) -> bool:
        return k in self.miss_at

    def should_bridge(self, primaries: int, k: int) -> bool:
        return primaries >= self.interval_at(k)

    def rejoin_step(self, miss_k: int) -> Optional[int]:
        return miss_k + self.unmatched_duration - 1


@dataclass(frozen=True)
class ScriptedPolicy(BehaviorPolicy):
    """Явный сценарий: шаги бриджей, пропусков и повторного формирования листа."""
    bridge_at: FrozenSet[int] = field(default_factory=frozenset)
    miss_at: FrozenSet[int] = field(default_factory=frozenset)
    reform_at: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, 'bridge_at', _frozen_steps(self.bridge_at, 'bridge_at'))
        object.__setattr__(self, 'miss_at', _frozen_steps(self.miss_at, 'miss_at'))
        object.__setattr__(self, 'reform_at', _frozen_steps(self.reform_at, 'reform_at'))
        clash = self.bridge_at & self.miss_at
        if clash:
            raise ConfigError(f"бридж и пропуск на одном шаге: {sorted(clash)}", field='bridge_at')

    def is_miss(self, k: int) -> bool:
        return k in self.miss_at

    def should_bridge(self, primaries: int, k: int) -> bool:
        return k in self.bridge_at and primaries >= 1

    def rejoin_step(self, miss_k: int) -> Optional[int]:
        later = [k for k in self.reform_at if k >= miss_k]
        return min(later) if later else None
