"""Иерархия исключений библиотеки доверия."""
from typing import Any, Dict, Optional


class TrustLedgerError(Exception):
    """Базовое исключение для всех ошибок библиотеки."""


class InvalidParamsError(TrustLedgerError, ValueError):
    """Параметры цепи (beta, delta, K) вне допустимой области."""


class CalibrationDomainError(InvalidParamsError):
    """Калибровка beta с P вне (0, 1) или неположительными m, K."""


class PreconditionError(TrustLedgerError, ValueError):
    """Нарушено предусловие операции (например, k <= b)."""


class UndefinedFractionError(TrustLedgerError, ZeroDivisionError):
    """Доля доверия не определена: суммарное доверие равно нулю."""


class ConflictError(TrustLedgerError):
    """Пир уже состоит в другом синк-листе или идентификатор занят."""


class ListSizeError(TrustLedgerError, ValueError):
    """Синк-лист меньше минимального размера."""


class NotFoundError(TrustLedgerError, LookupError):
    """Неизвестный синк-лист или пир."""


class ProtocolError(TrustLedgerError):
    """Переход не разрешён машиной состояний."""


class InconclusiveError(TrustLedgerError):
    """Сравнение стимулов не имеет смысла при S_M = 0."""


class ConfigError(TrustLedgerError, ValueError):
    """Ошибка конфигурации сценария с указанием файла, строки и поля."""

    def __init__(self, message: str, source: Optional[str] = None,
                 line: Optional[int] = None, field: Optional[str] = None):
        self.source = source
        self.line = line
        self.field = field
        self.reason = message
        super().__init__(self._render())

    def _render(self) -> str:
        context = []
        if self.source:
            context.append(str(self.source))
        if self.line is not None:
            context.append(f"строка {self.line}")
        if self.field:
            context.append(f"поле '{self.field}'")
        if not context:
            return self.reason
        return f"{', '.join(context)}: {self.reason}"


class InvariantViolation(TrustLedgerError, RuntimeError):
    """Инвариант нарушен во время прогона симуляции."""

    def __init__(self, message: str, k: int, diagnostic: Optional[Dict[str, Any]] = None):
        self.k = k
        self.diagnostic = diagnostic or {}
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostic.items())
        super().__init__(f"k={k}: {message}" + (f" ({details})" if details else ""))
