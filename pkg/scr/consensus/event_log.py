"""Журнал переходов машины состояний (только добавление)."""
from dataclasses import dataclass, fields
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

import pandas as pd


class EventKind(str, Enum):
    FORM = "form"
    PRIMARY = "primary"
    BRIDGE = "bridge"
    MISS = "miss"
    DISSOLVE = "dissolve"
    UNMATCHED = "unmatched"


# Колонки CSV журнала в порядке вывода
EVENT_COLUMNS = [
    'k', 'event', 'list_id', 'peer_id', 'b', 'k_minus_b', 's_m',
    'trust_before', 'trust_after', 'saboteur',
]

# Строки таблицы трассы: состояние пира после праймари шага k
TRACE_ROW_KINDS = (EventKind.PRIMARY, EventKind.MISS, EventKind.UNMATCHED)


@dataclass(frozen=True, slots=True)
class EventRecord:
    """
    Одна запись журнала на одного пира.

    Для бриджа b и k_minus_b относятся к моменту до обновления, s_m -
    зачтённые праймари. Для пропуска и несопоставленных шагов s_m = None.
    """
    k: int
    event: EventKind
    list_id: Optional[str]
    peer_id: str
    b: int
    k_minus_b: int
    s_m: Optional[int]
    trust_before: float
    trust_after: float
    saboteur: Optional[str] = None

    def as_row(self) -> Dict[str, object]:
        row = {name: getattr(self, name) for name in _RECORD_FIELDS}
        row['event'] = self.event.value
        return row


_RECORD_FIELDS = tuple(f.name for f in fields(EventRecord))


@dataclass(frozen=True)
class TraceRow:
    """Строка таблицы трассы: (k, b, k-b, S_M); S_M = None для несопоставленного пира."""
    k: int
    b: int
    k_minus_b: int
    s_m: Optional[int]


@dataclass(frozen=True)
class BridgeCalc:
    """Строка расчёта между шагами k и k+1: показатель затухания и множитель награды."""
    k: int
    exponent: int
    s_m: int
    delta: int

    @property
    def is_full_reward(self) -> bool:
        return self.exponent >= self.delta

    @property
    def expression(self) -> str:
        if self.is_full_reward:
            factor = "(1)"
        else:
            factor = f"({self.exponent}/Delta)"
        return f"T_i^-*beta^{{{self.exponent}}} + {self.s_m}{factor}"


class EventLog:
    """Журнал событий; записи только добавляются."""

    def __init__(self):
        self._records: List[EventRecord] = []

    def append(self, record: EventRecord) -> None:
        self._records.append(record)

    @property
    def records(self) -> Tuple[EventRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[EventRecord]:
        return iter(tuple(self._records))

    def for_peer(self, peer_id: str) -> List[EventRecord]:
        return [r for r in self._records if r.peer_id == peer_id]

    def trust_mutations(self) -> List[EventRecord]:
        """Записи, где доверие изменилось; допускаются только бриджи."""
        return [r for r in self._records if r.trust_before != r.trust_after]

    def trace_table(self, peer_id: str, delta: int,
                    k_from: int = 0, k_to: Optional[int] = None) -> Tuple[List[TraceRow], List[BridgeCalc]]:
        """
        Восстанавливает таблицу трассы пира: строки (k, b, k-b, S_M) после
        праймари каждого шага и строки расчёта для каждого бриджа.
        """
        rows: List[TraceRow] = []
        calcs: List[BridgeCalc] = []
        for record in self._records:
            if record.peer_id != peer_id or record.k < k_from:
                continue
            if k_to is not None and record.k > k_to:
                continue
            if record.event in TRACE_ROW_KINDS:
                rows.append(TraceRow(record.k, record.b, record.k_minus_b, record.s_m))
            elif record.event is EventKind.BRIDGE:
                calcs.append(BridgeCalc(record.k, record.k_minus_b, record.s_m, delta))
        return rows, calcs

    def to_dataframe(self) -> pd.DataFrame:
        df = pd.DataFrame([r.as_row() for r in self._records], columns=EVENT_COLUMNS)
        # Int64 хранит пропуски в s_m без перехода к float
        df['s_m'] = df['s_m'].astype('Int64')
        return df

    def bridge_drops(self) -> pd.DataFrame:
        """Бриджи с изменением доверия: drop > 0 означает падение."""
        df = self.to_dataframe()
        bridges = df[df['event'] == EventKind.BRIDGE.value].copy()
        bridges['drop'] = bridges['trust_before'] - bridges['trust_after']
        return bridges
