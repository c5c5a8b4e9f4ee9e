"""
Формулы доверия: обновление при бридже, доли доверия, гипотетическое доверие,
равновесное доверие и калибровка beta.

Все функции чистые, без логирования и общего состояния.
"""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from scr.errors import (
    CalibrationDomainError,
    InvalidParamsError,
    PreconditionError,
    UndefinedFractionError,
)

# Эталонные параметры цепи
REFERENCE_BETA = 0.9999111696
REFERENCE_DELTA = 48
REFERENCE_PRIME_STEP_MINUTES = 10.0
REFERENCE_MONTHS = 6.0
REFERENCE_FRACTION = 0.9

MINUTES_PER_DAY = 60 * 24
DAYS_PER_MONTH = 30
MINUTES_PER_MONTH = MINUTES_PER_DAY * DAYS_PER_MONTH

# Допуск при округлении границ вниз: L = 100*T* в float может дать 99.999...
BOUND_SLACK = 1e-9

RawTrust = float
FractionalTrust = float


@dataclass(frozen=True)
class TrustParams:
    """
    Константы цепи.

    Args:
        beta: База экспоненциального затухания за один prime step, 0 < beta < 1
        delta: Максимальный интервал между бриджами в prime steps
        prime_step_minutes: Длина prime step K в минутах
    """
    beta: float = REFERENCE_BETA
    delta: int = REFERENCE_DELTA
    prime_step_minutes: float = REFERENCE_PRIME_STEP_MINUTES

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise InvalidParamsError(f"beta должна лежать в (0, 1), получено {self.beta}")
        if isinstance(self.delta, bool) or int(self.delta) != self.delta or self.delta < 1:
            raise InvalidParamsError(f"delta должна быть целым >= 1, получено {self.delta}")
        if not (self.prime_step_minutes > 0):
            raise InvalidParamsError(
                f"prime_step_minutes должна быть > 0, получено {self.prime_step_minutes}")
        object.__setattr__(self, 'delta', int(self.delta))

    @classmethod
    def calibrated(cls,
                   months: float = REFERENCE_MONTHS,
                   fraction: float = REFERENCE_FRACTION,
                   prime_step_minutes: float = REFERENCE_PRIME_STEP_MINUTES,
                   delta: int = REFERENCE_DELTA) -> 'TrustParams':
        """Параметры с beta, подобранной так, чтобы fraction*T* достигалось за months месяцев."""
        beta = calibrate_beta(months, fraction, prime_step_minutes)
        return cls(beta=beta, delta=delta, prime_step_minutes=prime_step_minutes)

    @property
    def log_beta(self) -> float:
        return math.log(self.beta)

    @property
    def steps_per_day(self) -> float:
        return MINUTES_PER_DAY / self.prime_step_minutes

    @property
    def steps_per_month(self) -> float:
        return DAYS_PER_MONTH * self.steps_per_day

    @property
    def equilibrium(self) -> RawTrust:
        return equilibrium_trust(self)


@dataclass(frozen=True)
class BridgeObservation:
    """
    Наблюдение в момент бриджа.

    Args:
        k: Текущий prime step
        b: Шаг последнего бриджа пира
        s_m: Успешные праймари синк-листа с последнего бриджа
    """
    k: int
    b: int
    s_m: int

    def __post_init__(self):
        if self.k < 0 or self.b < 0 or self.s_m < 0:
            raise PreconditionError(
                f"k, b и s_m неотрицательны: k={self.k}, b={self.b}, s_m={self.s_m}")
        if self.k <= self.b:
            raise PreconditionError(f"бридж должен быть строго после предыдущего: k={self.k}, b={self.b}")
        if self.s_m > self.k - self.b:
            raise PreconditionError(
                f"s_m={self.s_m} превышает число прошедших шагов k-b={self.k - self.b}")

    @property
    def elapsed(self) -> int:
        return self.k - self.b


def decay_factor(elapsed: int, params: TrustParams) -> float:
    """beta**elapsed через exp(elapsed*ln beta); устойчиво для elapsed до ~10**6."""
    return math.exp(elapsed * params.log_beta)


def reward_term(s_m: int, elapsed: int, delta: int) -> float:
    """Награда s_m * min(1, elapsed/delta); ранний бридж получает меньше."""
    return s_m * min(1.0, elapsed / delta)


def update_trust(prev: RawTrust, obs: BridgeObservation, params: TrustParams) -> RawTrust:
    """
    Рекурсивное обновление доверия при бридже.

    T := T^- * beta**(k-b) + s_m * min(1, (k-b)/delta)

    Raises:
        PreconditionError: prev < 0
    """
    if prev < 0:
        raise PreconditionError(f"доверие не может быть отрицательным: {prev}")
    return prev * decay_factor(obs.elapsed, params) + reward_term(obs.s_m, obs.elapsed, params.delta)


def hypothetical_trust(prev: RawTrust, k: int, b: int, params: TrustParams) -> RawTrust:
    """Доверие, которое было бы записано при бридже без успешных праймари (s_m = 0)."""
    return update_trust(prev, BridgeObservation(k=k, b=b, s_m=0), params)


def fractional_trusts(all_trusts: Sequence[RawTrust]) -> np.ndarray:
    """
    Доли доверия всех пиров в снимке системы.

    Raises:
        PreconditionError: пустой список или отрицательное доверие
        UndefinedFractionError: суммарное доверие равно нулю
    """
    trusts = np.asarray(all_trusts, dtype=float)
    if trusts.size == 0:
        raise PreconditionError("список доверий пуст")
    if np.any(trusts < 0):
        raise PreconditionError("доверие не может быть отрицательным")
    total = math.fsum(trusts.tolist())
    if total <= 0:
        raise UndefinedFractionError("суммарное доверие системы равно нулю, доля не определена")
    return trusts / total


def fractional_trust(all_trusts: Sequence[RawTrust], i: int) -> FractionalTrust:
    """Доля доверия пира i: T_i / sum(T)."""
    if not 0 <= i < len(all_trusts):
        raise PreconditionError(f"индекс пира {i} вне диапазона 0..{len(all_trusts) - 1}")
    return float(fractional_trusts(all_trusts)[i])


def hypothetical_fractional_trust(hyp_trusts: Sequence[RawTrust], i: int) -> FractionalTrust:
    """Доля гипотетического доверия; та же арифметика, что и для обычной доли."""
    return fractional_trust(hyp_trusts, i)


def equilibrium_trust(params: TrustParams) -> RawTrust:
    """T* = delta / (1 - beta**delta)."""
    return params.delta / -math.expm1(params.delta * params.log_beta)


def perfect_step(prev: RawTrust, params: TrustParams) -> RawTrust:
    """Один идеальный бридж в форме T + (1 - beta**delta) * (T* - T)."""
    return prev + -math.expm1(params.delta * params.log_beta) * (equilibrium_trust(params) - prev)


def trust_after_perfect_bridges(n: int, params: TrustParams, start: RawTrust = 0.0) -> RawTrust:
    """Замкнутая форма после n идеальных бриджей: T* - (T* - start) * beta**(n*delta)."""
    t_star = equilibrium_trust(params)
    return t_star - (t_star - start) * decay_factor(n * params.delta, params)


def calibrate_beta(m_months: float, P: float, prime_step_minutes: float) -> float:
    """
    beta = (1 - P) ** (K / (m * 60 * 24 * 30))

    Raises:
        CalibrationDomainError: P вне (0, 1), m <= 0 или K <= 0
    """
    if not (0.0 < P < 1.0):
        raise CalibrationDomainError(f"P должна лежать в (0, 1), получено {P}")
    if not (m_months > 0):
        raise CalibrationDomainError(f"число месяцев должно быть > 0, получено {m_months}")
    if not (prime_step_minutes > 0):
        raise CalibrationDomainError(f"длина prime step должна быть > 0, получено {prime_step_minutes}")
    return (1.0 - P) ** (prime_step_minutes / (m_months * MINUTES_PER_MONTH))


def months_to_fraction(P: float, params: TrustParams) -> float:
    """Обратная калибровка: за сколько месяцев идеальный пир достигает P*T*."""
    if not (0.0 < P < 1.0):
        raise CalibrationDomainError(f"P должна лежать в (0, 1), получено {P}")
    return params.prime_step_minutes * math.log1p(-P) / (params.log_beta * MINUTES_PER_MONTH)


def bridges_to_fraction(P: float, params: TrustParams) -> int:
    """Минимальное число идеальных бриджей от нуля, после которого доверие >= P*T*."""
    if not (0.0 < P < 1.0):
        raise CalibrationDomainError(f"P должна лежать в (0, 1), получено {P}")
    n = math.ceil(math.log1p(-P) / (params.delta * params.log_beta) - BOUND_SLACK)
    return max(n, 0)
