"""
Машина состояний пиров и синк-листов: формирование, праймари, бридж,
пропуск праймари и роспуск по запросу.

Состояние системы изменяет один писатель; все переходы идут через функции
этого модуля и фиксируются в журнале.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

from scr.consensus.event_log import EventKind, EventLog, EventRecord
from scr.errors import (
    ConflictError,
    ListSizeError,
    NotFoundError,
    PreconditionError,
    ProtocolError,
)
from scr.logger import logger
from scr.trust.trust_core import BridgeObservation, RawTrust, TrustParams, update_trust

# Пир объединяется "с двумя или более другими пирами"
MIN_LIST_SIZE = 3


class PeerState(str, Enum):
    UNMATCHED = "unmatched"
    MATCHED = "matched"


@dataclass
class PeerLedger:
    peer_id: str
    trust: RawTrust = 0.0
    last_bridge: int = 0
    list_id: Optional[str] = None

    @property
    def state(self) -> PeerState:
        return PeerState.UNMATCHED if self.list_id is None else PeerState.MATCHED


@dataclass
class SyncList:
    """
    Синк-лист.

    s_m - общий счётчик праймари, ограниченный delta правилом (s_m mod delta) + 1.
    primaries - праймари с формирования или бриджа без ограничения; нужен
    политикам поведения и в формулу доверия не входит.
    """
    list_id: str
    members: Tuple[str, ...]
    formed_at: int
    s_m: int = 0
    primaries: int = 0
    last_event: EventKind = EventKind.FORM


@dataclass(frozen=True)
class SystemSnapshot:
    clock: int
    trusts: Dict[str, RawTrust]
    last_bridges: Dict[str, int]
    lists: Dict[str, Tuple[str, ...]]


@dataclass
class SystemState:
    params: TrustParams = field(default_factory=TrustParams)
    min_list_size: int = MIN_LIST_SIZE
    clock: int = 0
    peers: Dict[str, PeerLedger] = field(default_factory=dict)
    lists: Dict[str, SyncList] = field(default_factory=dict)
    log: EventLog = field(default_factory=EventLog)
    _list_counter: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        if self.min_list_size < MIN_LIST_SIZE:
            raise ListSizeError(f"минимальный размер синк-листа не меньше {MIN_LIST_SIZE}")

    def add_peer(self, peer_id: str, trust: RawTrust = 0.0, last_bridge: Optional[int] = None) -> PeerLedger:
        """Новый пир входит в систему с нулевым доверием, если не указано иное."""
        if peer_id in self.peers:
            raise ConflictError(f"пир {peer_id} уже существует")
        if trust < 0:
            raise PreconditionError(f"доверие не может быть отрицательным: {trust}")
        b = self.clock if last_bridge is None else last_bridge
        if b > self.clock:
            raise PreconditionError(f"последний бридж {b} позже текущего шага {self.clock}")
        ledger = PeerLedger(peer_id=peer_id, trust=trust, last_bridge=b)
        self.peers[peer_id] = ledger
        return ledger

    def advance_clock(self, k: int) -> None:
        if k < self.clock:
            raise PreconditionError(f"часы не могут идти назад: {self.clock} -> {k}")
        self.clock = k

    def peer(self, peer_id: str) -> PeerLedger:
        try:
            return self.peers[peer_id]
        except KeyError:
            raise NotFoundError(f"пир {peer_id} не найден") from None

    def sync_list(self, list_id: str) -> SyncList:
        try:
            return self.lists[list_id]
        except KeyError:
            raise NotFoundError(f"синк-лист {list_id} не найден") from None

    def next_list_id(self) -> str:
        while True:
            self._list_counter += 1
            candidate = f"L{self._list_counter}"
            if candidate not in self.lists:
                return candidate

    def unmatched_peers(self) -> List[str]:
        return [pid for pid, p in self.peers.items() if p.list_id is None]

    def total_trust(self) -> float:
        return sum(p.trust for p in self.peers.values())

    def snapshot(self) -> SystemSnapshot:
        """Копия только для чтения; безопасно передавать конкурентным читателям."""
        return SystemSnapshot(
            clock=self.clock,
            trusts={pid: p.trust for pid, p in self.peers.items()},
            last_bridges={pid: p.last_bridge for pid, p in self.peers.items()},
            lists={lid: tuple(sl.members) for lid, sl in self.lists.items()},
        )


def _record(state: SystemState, kind: EventKind, sync_list: Optional[SyncList], peer: PeerLedger,
            s_m: Optional[int], trust_before: float, trust_after: float,
            saboteur: Optional[str] = None, b: Optional[int] = None) -> EventRecord:
    last_bridge = peer.last_bridge if b is None else b
    return EventRecord(
        k=state.clock,
        event=kind,
        list_id=sync_list.list_id if sync_list is not None else None,
        peer_id=peer.peer_id,
        b=last_bridge,
        k_minus_b=state.clock - last_bridge,
        s_m=s_m,
        trust_before=trust_before,
        trust_after=trust_after,
        saboteur=saboteur,
    )


def form_sync_list(state: SystemState, peer_ids: Iterable[str], list_id: Optional[str] = None) -> SyncList:
    """
    Формирование синк-листа из несопоставленных пиров; S_M = 0.

    Raises:
        ListSizeError: пиров меньше минимального размера
        ConflictError: пир уже в другом синк-листе или идентификатор листа занят
        NotFoundError: неизвестный пир
    """
    members = tuple(dict.fromkeys(peer_ids))
    if len(members) < state.min_list_size:
        raise ListSizeError(
            f"синк-лист из {len(members)} пиров меньше минимума {state.min_list_size}")
    ledgers = [state.peer(pid) for pid in members]
    busy = [p.peer_id for p in ledgers if p.list_id is not None]
    if busy:
        raise ConflictError(f"пиры уже в синк-листах: {', '.join(busy)}")
    list_id = list_id or state.next_list_id()
    if list_id in state.lists:
        raise ConflictError(f"синк-лист {list_id} уже существует")

    sync_list = SyncList(list_id=list_id, members=members, formed_at=state.clock)
    state.lists[list_id] = sync_list
    for ledger in ledgers:
        ledger.list_id = list_id
        state.log.append(_record(state, EventKind.FORM, sync_list, ledger, 0, ledger.trust, ledger.trust))

    logger.debug("Синк-лист сформирован", k=state.clock, list_id=list_id, members=list(members))
    return sync_list


def primary_sync(state: SystemState, list_id: str) -> SyncList:
    """Праймари: S_M = (S_M mod delta) + 1; превышение delta сбрасывает счётчик к 1."""
    sync_list = state.sync_list(list_id)
    sync_list.s_m = (sync_list.s_m % state.params.delta) + 1
    sync_list.primaries += 1
    sync_list.last_event = EventKind.PRIMARY
    for pid in sync_list.members:
        ledger = state.peers[pid]
        state.log.append(_record(state, EventKind.PRIMARY, sync_list, ledger,
                                 sync_list.s_m, ledger.trust, ledger.trust))
    return sync_list


def bridge_sync(state: SystemState, list_id: str) -> SystemState:
    """
    Бридж: доверие каждого участника обновляется, b = k, затем S_M = 0.

    Raises:
        NotFoundError: неизвестный синк-лист
        ProtocolError: с формирования или прошлого бриджа не было праймари
    """
    sync_list = state.sync_list(list_id)
    if sync_list.s_m < 1:
        raise ProtocolError(f"синк-лист {list_id} не выполнил ни одного праймари с последнего бриджа")

    # все наблюдения проверяются до первого изменения доверия
    observations = [
        (state.peers[pid], BridgeObservation(k=state.clock, b=state.peers[pid].last_bridge, s_m=sync_list.s_m))
        for pid in sync_list.members
    ]
    for ledger, obs in observations:
        before = ledger.trust
        ledger.trust = update_trust(before, obs, state.params)
        state.log.append(_record(state, EventKind.BRIDGE, sync_list, ledger,
                                 sync_list.s_m, before, ledger.trust, b=obs.b))
        ledger.last_bridge = state.clock

    logger.debug("Бридж выполнен", k=state.clock, list_id=list_id, s_m=sync_list.s_m)
    sync_list.s_m = 0
    sync_list.primaries = 0
    sync_list.last_event = EventKind.BRIDGE
    return state


def _disband(state: SystemState, sync_list: SyncList, kind: EventKind, saboteur: Optional[str]) -> None:
    del state.lists[sync_list.list_id]
    for pid in sync_list.members:
        ledger = state.peers[pid]
        ledger.list_id = None
        state.log.append(_record(state, kind, sync_list, ledger, None,
                                 ledger.trust, ledger.trust, saboteur=saboteur))


def miss_primary(state: SystemState, list_id: str, saboteur: Optional[str] = None) -> SystemState:
    """
    Пропуск праймари: лист распускается, доверие и b участников не меняются.

    Затухание за пропущенное время проявится на следующем бридже пира.
    saboteur нужен только для журнала; эффект протокола тот же.
    """
    sync_list = state.sync_list(list_id)
    if saboteur is not None and saboteur not in sync_list.members:
        raise PreconditionError(f"пир {saboteur} не состоит в синк-листе {list_id}")
    _disband(state, sync_list, EventKind.MISS, saboteur)
    logger.debug("Праймари пропущен, синк-лист распущен",
                 k=state.clock, list_id=list_id, saboteur=saboteur)
    return state


def request_dissolution(state: SystemState, list_id: str) -> SystemState:
    """
    Роспуск по запросу сразу после успешного бриджа.

    Raises:
        ProtocolError: последнее событие листа не бридж
    """
    sync_list = state.sync_list(list_id)
    if sync_list.last_event is not EventKind.BRIDGE:
        raise ProtocolError(f"синк-лист {list_id} может запросить роспуск только после бриджа")
    _disband(state, sync_list, EventKind.DISSOLVE, None)
    logger.debug("Синк-лист распущен по запросу", k=state.clock, list_id=list_id)
    return state


def log_unmatched(state: SystemState, peer_ids: Iterable[str]) -> None:
    """Отмечает в журнале шаг, на котором отслеживаемые пиры не состоят в листе."""
    for pid in peer_ids:
        ledger = state.peer(pid)
        if ledger.list_id is None:
            state.log.append(_record(state, EventKind.UNMATCHED, None, ledger, None,
                                     ledger.trust, ledger.trust))
