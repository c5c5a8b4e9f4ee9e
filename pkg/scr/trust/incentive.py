"""
Модель саботажа: полезность честного поведения и саботажа, условие
честности |M| * T_bar <= 1, границы безопасного размера синк-листа и
переборная проверка, сравнивающая полезности напрямую.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scr.errors import InconclusiveError, PreconditionError, UndefinedFractionError
from scr.trust.trust_core import (
    BOUND_SLACK,
    FractionalTrust,
    RawTrust,
    TrustParams,
    equilibrium_trust,
)

# Относительный допуск, в пределах которого полезности считаются равными
UTILITY_TOLERANCE = 1e-12
# Допуск, в пределах которого |M| * T_bar считается равным 1
BOUNDARY_TOLERANCE = 1e-12


class Action(str, Enum):
    HONEST = "honest"
    SABOTAGE = "sabotage"


@dataclass(frozen=True)
class SabotageScenario:
    """
    Снимок системы в момент несостоявшегося бриджа.

    Доверия уже гипотетические (после затухания); модуль затухание повторно
    не применяет. Доверие пиров вне листа считается постоянным.

    Args:
        member_trusts: T_bar всех участников синк-листа
        outside_trust: Суммарное T_bar пиров вне листа
        s_m: Успешные праймари, поставленные на кон
        target: Индекс рассматриваемого пира в member_trusts
    """
    member_trusts: Tuple[float, ...]
    outside_trust: float
    s_m: int
    target: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'member_trusts', tuple(float(t) for t in self.member_trusts))
        if not self.member_trusts:
            raise PreconditionError("синк-лист без участников")
        if any(t < 0 for t in self.member_trusts) or self.outside_trust < 0:
            raise PreconditionError("доверие не может быть отрицательным")
        if self.s_m < 0:
            raise PreconditionError(f"s_m не может быть отрицательным: {self.s_m}")
        if not 0 <= self.target < len(self.member_trusts):
            raise PreconditionError(f"индекс цели {self.target} вне синк-листа")

    @classmethod
    def from_totals(cls, target_trust: float, rest_of_list: float, outside: float,
                    s_m: int, list_size: int) -> 'SabotageScenario':
        """Сценарий по суммам: остаток листа делится поровну между остальными участниками."""
        if list_size < 1:
            raise PreconditionError(f"размер листа должен быть >= 1: {list_size}")
        if list_size == 1 and rest_of_list != 0:
            raise PreconditionError("у листа из одного пира нет других участников")
        others = [rest_of_list / (list_size - 1)] * (list_size - 1) if list_size > 1 else []
        return cls(member_trusts=(target_trust, *others), outside_trust=outside, s_m=s_m, target=0)

    @classmethod
    def from_system(cls, trusts: Sequence[RawTrust], members: Sequence[int],
                    target: int, s_m: int) -> 'SabotageScenario':
        """Сценарий из снимка системы: members - индексы участников, target - индекс пира системы."""
        members = list(dict.fromkeys(members))
        if target not in members:
            raise PreconditionError(f"пир {target} не входит в синк-лист")
        member_set = set(members)
        member_trusts = [float(trusts[i]) for i in members]
        outside = math.fsum(float(t) for i, t in enumerate(trusts) if i not in member_set)
        return cls(member_trusts=tuple(member_trusts), outside_trust=outside,
                   s_m=s_m, target=members.index(target))

    @property
    def list_size(self) -> int:
        return len(self.member_trusts)

    @property
    def target_trust(self) -> float:
        return self.member_trusts[self.target]

    @property
    def rest_of_list(self) -> float:
        """T_bar_M: остальные участники листа."""
        return math.fsum(t for i, t in enumerate(self.member_trusts) if i != self.target)

    @property
    def total(self) -> float:
        """L: суммарное гипотетическое доверие системы."""
        return self.target_trust + self.rest_of_list + self.outside_trust

    @property
    def hypothetical_fraction(self) -> FractionalTrust:
        if self.total <= 0:
            raise UndefinedFractionError("суммарное доверие системы равно нулю")
        return self.target_trust / self.total


@dataclass(frozen=True)
class IncentiveReport:
    honest_utility: float
    sabotage_utility: float
    honesty_predicted: bool
    agree: bool
    list_size: int
    hypothetical_fraction: float

    @property
    def sabotage_profitable(self) -> bool:
        return _utility_sign(self.honest_utility, self.sabotage_utility) < 0

    def as_row(self) -> Dict[str, object]:
        return {
            'list_size': self.list_size,
            'hypothetical_fraction': self.hypothetical_fraction,
            'honest_utility': self.honest_utility,
            'sabotage_utility': self.sabotage_utility,
            'honesty_predicted': self.honesty_predicted,
            'agree': self.agree,
        }


def utility(scenario: SabotageScenario, action: Action) -> FractionalTrust:
    """
    Полезность пира - его доля доверия после выбранного действия.

    Честно: (T1 + S) / (T1 + |M|*S + T_M + T_s); каждый участник получает S.
    Саботаж: T1 / (T1 + T_M + T_s).

    Raises:
        UndefinedFractionError: нулевой знаменатель
    """
    action = Action(action)
    t1 = scenario.target_trust
    rest = scenario.rest_of_list + scenario.outside_trust
    if action is Action.HONEST:
        numerator = t1 + scenario.s_m
        denominator = t1 + scenario.list_size * scenario.s_m + rest
    else:
        numerator = t1
        denominator = t1 + rest
    if denominator <= 0:
        raise UndefinedFractionError("суммарное доверие системы равно нулю, полезность не определена")
    return numerator / denominator


def is_honesty_incentivized(frac_hyp: FractionalTrust, list_size: int) -> bool:
    """Честность выгодна тогда и только тогда, когда |M| * T_bar <= 1."""
    if list_size < 1:
        raise PreconditionError(f"размер листа должен быть >= 1: {list_size}")
    if not 0.0 <= frac_hyp <= 1.0:
        raise PreconditionError(f"доля доверия вне [0, 1]: {frac_hyp}")
    return list_size * frac_hyp <= 1.0 + BOUNDARY_TOLERANCE


def _floor_bound(value: float) -> int:
    return max(0, math.floor(value + BOUND_SLACK))


def max_safe_list_size(total_trust: RawTrust, params: TrustParams) -> int:
    """floor(L * (1 - beta**delta) / delta) = floor(L / T*): листы не больше этого безопасны."""
    if total_trust <= 0:
        raise PreconditionError(f"суммарное доверие должно быть > 0: {total_trust}")
    return _floor_bound(total_trust / equilibrium_trust(params))


def max_safe_list_size_avg(n_peers: int, avg_trust: RawTrust, params: TrustParams) -> int:
    """floor(|N| * T_ave / T*); та же граница при L = |N| * T_ave."""
    if n_peers < 1:
        raise PreconditionError(f"число пиров должно быть >= 1: {n_peers}")
    if avg_trust < 0:
        raise PreconditionError(f"среднее доверие не может быть отрицательным: {avg_trust}")
    if avg_trust == 0:
        return 0
    return max_safe_list_size(n_peers * avg_trust, params)


def normalized_average_trust(avg_trust: RawTrust, params: TrustParams) -> float:
    return avg_trust / equilibrium_trust(params)


def _utility_sign(honest: float, sabotage: float) -> int:
    scale = max(abs(honest), abs(sabotage))
    diff = honest - sabotage
    if abs(diff) <= UTILITY_TOLERANCE * scale:
        return 0
    return 1 if diff > 0 else -1


def _prediction_sign(list_size: int, fraction: float) -> int:
    margin = 1.0 - list_size * fraction
    if abs(margin) <= BOUNDARY_TOLERANCE:
        return 0
    return 1 if margin > 0 else -1


def brute_force_incentive_check(scenario: SabotageScenario) -> IncentiveReport:
    """
    Сравнивает полезности честности и саботажа напрямую и сверяет результат
    с условием |M| * T_bar <= 1.

    Raises:
        InconclusiveError: s_m = 0, обе полезности совпадают по определению
    """
    if scenario.s_m == 0:
        raise InconclusiveError("при S_M = 0 сравнение честности и саботажа не имеет смысла")
    honest = utility(scenario, Action.HONEST)
    sabotage = utility(scenario, Action.SABOTAGE)
    fraction = scenario.hypothetical_fraction
    prediction = is_honesty_incentivized(fraction, scenario.list_size)
    agree = _utility_sign(honest, sabotage) == _prediction_sign(scenario.list_size, fraction)
    return IncentiveReport(
        honest_utility=honest,
        sabotage_utility=sabotage,
        honesty_predicted=prediction,
        agree=agree,
        list_size=scenario.list_size,
        hypothetical_fraction=fraction,
    )


def random_scenario(rng: np.random.Generator, params: TrustParams,
                    min_size: int = 2, max_size: int = 20) -> SabotageScenario:
    """Случайный сценарий: |M| в [min_size, max_size], доверия в [0, T*], вне листа 0..30 пиров."""
    t_star = equilibrium_trust(params)
    size = int(rng.integers(min_size, max_size + 1))
    members = rng.uniform(0.0, t_star, size=size)
    # цель не нулевая, иначе доля гипотетического доверия вырождается
    members[0] = rng.uniform(0.01 * t_star, t_star)
    outside_peers = int(rng.integers(0, 31))
    outside = float(rng.uniform(0.0, t_star, size=outside_peers).sum())
    s_m = int(rng.integers(1, params.delta + 1))
    return SabotageScenario(member_trusts=tuple(members.tolist()), outside_trust=outside,
                            s_m=s_m, target=0)


def boundary_scenario(rng: np.random.Generator, params: TrustParams,
                      min_size: int = 2, max_size: int = 20) -> SabotageScenario:
    """
    Сценарий точно на границе |M| * T_bar = 1. Доверия целочисленные, поэтому
    L = |M| * T1 представимо без округления.
    """
    size = int(rng.integers(min_size, max_size + 1))
    t1 = int(rng.integers(1, int(equilibrium_trust(params)) + 1))
    remainder = (size - 1) * t1
    # делим остаток L - T1 между другими участниками и пирами вне листа
    cut = int(rng.integers(0, remainder + 1))
    others = _split_integer(rng, cut, size - 1)
    outside = remainder - cut
    s_m = int(rng.integers(1, params.delta + 1))
    return SabotageScenario(member_trusts=(float(t1), *map(float, others)),
                            outside_trust=float(outside), s_m=s_m, target=0)


def _split_integer(rng: np.random.Generator, total: int, parts: int) -> List[int]:
    if parts <= 0:
        return []
    cuts = np.sort(rng.integers(0, total + 1, size=parts - 1))
    bounds = np.concatenate(([0], cuts, [total]))
    return np.diff(bounds).astype(int).tolist()


@dataclass(frozen=True)
class SweepSummary:
    checked: int
    agreements: int
    counterexamples: int
    boundary_cases: int
    records: pd.DataFrame

    @property
    def passed(self) -> bool:
        return self.counterexamples == 0 and self.agreements == self.checked

    def summary_line(self) -> str:
        return (f"{self.agreements}/{self.checked} agree, "
                f"{self.counterexamples} counterexamples ({self.boundary_cases} boundary cases)")


def incentive_sweep(count: int, seed: int, params: Optional[TrustParams] = None,
                    boundary_cases: int = 10) -> SweepSummary:
    """
    Проверяет условие честности на count сценариях: сначала boundary_cases
    граничных, остальные случайные. Каждый сценарий получает свой seed из
    SeedSequence, так что результат не зависит от порядка вычисления.
    """
    if count < 1:
        raise PreconditionError(f"число сценариев должно быть >= 1: {count}")
    params = params or TrustParams()
    boundary_cases = min(boundary_cases, count)
    children = np.random.SeedSequence(seed).spawn(count)

    rows = []
    agreements = 0
    for index, child in enumerate(children):
        rng = np.random.default_rng(child)
        is_boundary = index < boundary_cases
        scenario = boundary_scenario(rng, params) if is_boundary else random_scenario(rng, params)
        report = brute_force_incentive_check(scenario)
        agreements += int(report.agree)
        rows.append({'scenario': index, 'boundary': is_boundary, 's_m': scenario.s_m,
                     **report.as_row()})

    records = pd.DataFrame(rows)
    return SweepSummary(checked=count, agreements=agreements, counterexamples=count - agreements,
                        boundary_cases=boundary_cases, records=records)


@dataclass(frozen=True)
class SafeSizeSummary:
    systems: int
    checks: int
    profitable_deviations: int
    witnesses_found: int
    records: pd.DataFrame

    @property
    def passed(self) -> bool:
        return self.profitable_deviations == 0 and self.witnesses_found == self.systems

    def summary_line(self) -> str:
        return (f"{self.systems} systems, {self.checks} checks, "
                f"{self.profitable_deviations} profitable deviations, "
                f"{self.witnesses_found}/{self.systems} witnesses")


def safe_size_sweep(systems: int, seed: int, params: Optional[TrustParams] = None,
                    min_peers: int = 20, max_peers: int = 60) -> SafeSizeSummary:
    """
    Для каждой случайной системы (доверие пиров в [0, T*]) перебирает все
    размеры листа до floor(L / T*). Лист составлен из пиров с наибольшим
    доверием, саботажником по очереди выступает каждый участник. Прибыльных
    отклонений быть не должно. Дополнительно строится свидетель: лист размера
    floor(1 / T_bar_max) + 1 вокруг самого доверенного пира, где саботаж выгоден.
    """
    if systems < 1:
        raise PreconditionError(f"число систем должно быть >= 1: {systems}")
    params = params or TrustParams()
    t_star = equilibrium_trust(params)
    children = np.random.SeedSequence(seed).spawn(systems)

    rows = []
    checks = 0
    profitable = 0
    witnesses = 0
    for index, child in enumerate(children):
        rng = np.random.default_rng(child)
        n_peers = int(rng.integers(min_peers, max_peers + 1))
        trusts = rng.uniform(0.0, t_star, size=n_peers)
        order = np.argsort(-trusts, kind='stable')
        bound = max_safe_list_size(float(trusts.sum()), params)
        s_m = int(rng.integers(1, params.delta + 1))

        for size in range(1, min(bound, n_peers) + 1):
            members = order[:size].tolist()
            for target in members:
                report = brute_force_incentive_check(
                    SabotageScenario.from_system(trusts, members, target, s_m))
                checks += 1
                if report.sabotage_profitable:
                    profitable += 1

        top = int(order[0])
        top_fraction = float(trusts[top] / trusts.sum())
        witness_size = math.floor(1.0 / top_fraction) + 1
        witness_found = False
        if witness_size <= n_peers:
            members = order[:witness_size].tolist()
            report = brute_force_incentive_check(
                SabotageScenario.from_system(trusts, members, top, s_m))
            witness_found = report.sabotage_profitable and not report.honesty_predicted
        witnesses += int(witness_found)
        rows.append({'system': index, 'peers': n_peers, 'total_trust': float(trusts.sum()),
                     'bound': bound, 'witness_size': witness_size, 'witness_found': witness_found})

    return SafeSizeSummary(systems=systems, checks=checks, profitable_deviations=profitable,
                           witnesses_found=witnesses, records=pd.DataFrame(rows))
