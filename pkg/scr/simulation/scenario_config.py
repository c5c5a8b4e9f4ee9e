"""
Загрузка конфигурации сценариев.

Текстовый формат (.cfg) - INI-секции [simulation] и [scenario ИМЯ].
Excel (.xlsx) - первая колонка с именами параметров, по колонке на сценарий.
Ошибки сообщают файл, строку и поле.
"""
import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from openpyxl import load_workbook

from scr.errors import ConfigError, InvalidParamsError
from scr.logger import logger
from scr.simulation.policies import REFERENCE_INTERVAL, Phase, PhasedPolicy
from scr.trust.trust_core import (
    REFERENCE_BETA,
    REFERENCE_DELTA,
    REFERENCE_PRIME_STEP_MINUTES,
    TrustParams,
)

SIMULATION_SECTION = 'simulation'
SCENARIO_PREFIX = 'scenario'
MATCHING_MODES = ('fresh', 'random')

SIMULATION_KEYS = (
    'horizon_days', 'horizon_steps', 'beta', 'delta', 'prime_step_minutes', 'seed', 'sample_stride',
)
SCENARIO_KEYS = (
    'list_size', 'bridge_interval', 'phases', 'miss_at', 'unmatched_duration', 'matching', 'filler_pool',
)

_PHASE_RE = re.compile(r'^\s*(\d+(?:\.\d+)?)\s*-\s*(\d+(?:\.\d+)?)\s*:\s*(\d+)\s*$')
_SECTION_RE = re.compile(r'^\s*\[(?P<name>[^\]]+)\]')
_KEY_RE = re.compile(r'^\s*(?P<key>[^=:;#\s][^=:]*?)\s*[=:]')

Locator = Callable[[str], Optional[int]]


class ScenarioConfig:
    def __init__(self,
                 name: str,
                 list_size: int = 3,
                 bridge_interval: int = REFERENCE_INTERVAL,
                 phases: Optional[List[Phase]] = None,
                 miss_at: Optional[List[int]] = None,
                 unmatched_duration: int = 1,
                 matching: str = 'fresh',
                 filler_pool: Optional[int] = None):
        self.name = name
        self.list_size = int(list_size)
        self.bridge_interval = int(bridge_interval)
        self.phases = list(phases or [])
        self.miss_at = sorted(miss_at or [])
        self.unmatched_duration = int(unmatched_duration)
        self.matching = matching
        self.filler_pool = filler_pool if filler_pool is not None else 2 * (self.list_size - 1)

    def get_scenario_info(self) -> str:
        """Краткое описание сценария для логов"""
        matching = f"{self.matching}, пул {self.filler_pool}" if self.has_random_matching() else self.matching
        return f"[{self.name}: лист {self.list_size}, интервал {self.bridge_interval}, {matching}]"

    def has_random_matching(self) -> bool:
        return self.matching == 'random'

    def build_policy(self, params: TrustParams) -> PhasedPolicy:
        return PhasedPolicy(
            default_interval=self.bridge_interval,
            phases=tuple(self.phases),
            miss_at=frozenset(self.miss_at),
            unmatched_duration=self.unmatched_duration,
            steps_per_day=params.steps_per_day,
        )


@dataclass
class SimulationConfig:
    horizon_steps: int
    params: TrustParams = field(default_factory=TrustParams)
    seed: int = 0
    sample_stride: Optional[int] = None
    scenarios: List[ScenarioConfig] = field(default_factory=list)
    source: Optional[str] = None

    @property
    def stride(self) -> int:
        if self.sample_stride is not None:
            return self.sample_stride
        return max(1, round(self.params.steps_per_day))

    def scenario(self, name: str) -> ScenarioConfig:
        for scenario in self.scenarios:
            if scenario.name == name:
                return scenario
        raise ConfigError(f"сценарий {name} не найден", source=self.source)


def parse_phases(text: str) -> List[Phase]:
    """'90-120:24, 120-150:18' -> [Phase(90, 120, 24), Phase(120, 150, 18)]"""
    phases = []
    for chunk in filter(None, (part.strip() for part in str(text).split(','))):
        match = _PHASE_RE.match(chunk)
        if not match:
            raise ConfigError(f"ожидалось 'начало-конец:интервал', получено '{chunk}'")
        start, end, interval = match.groups()
        phases.append(Phase(float(start), float(end), int(interval)))
    return phases


def parse_steps(text: Any) -> List[int]:
    if isinstance(text, (int, float)):
        return [int(text)]
    return [int(part) for part in filter(None, (p.strip() for p in str(text).split(',')))]


def _as_int(value: Any, name: str, minimum: Optional[int] = None) -> int:
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"ожидалось целое число, получено '{value}'", field=name) from None
    if not as_float.is_integer():
        raise ConfigError(f"ожидалось целое число, получено '{value}'", field=name)
    result = int(as_float)
    if minimum is not None and result < minimum:
        raise ConfigError(f"значение должно быть >= {minimum}, получено {result}", field=name)
    return result


def _as_float(value: Any, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"ожидалось число, получено '{value}'", field=name) from None


def _with_context(error: ConfigError, source: Optional[str], locate: Locator) -> ConfigError:
    line = error.line if error.line is not None else (locate(error.field) if error.field else None)
    return ConfigError(error.reason, source=source, line=line, field=error.field)


def _with_overrides(values: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    # переопределения применяются до перевода горизонта в шаги
    if not overrides:
        return values
    unknown = sorted(set(overrides) - set(SIMULATION_KEYS))
    if unknown:
        raise ConfigError("неизвестный параметр переопределения", field=unknown[0])
    return {**values, **{key: value for key, value in overrides.items() if value is not None}}


def _build_simulation(values: Dict[str, Any], source: Optional[str], locate: Locator) -> SimulationConfig:
    unknown = sorted(set(values) - set(SIMULATION_KEYS))
    if unknown:
        raise ConfigError("неизвестный параметр симуляции", source=source,
                          line=locate(unknown[0]), field=unknown[0])
    try:
        delta = _as_int(values.get('delta', REFERENCE_DELTA), 'delta', minimum=1)
        prime_step = _as_float(values.get('prime_step_minutes', REFERENCE_PRIME_STEP_MINUTES),
                               'prime_step_minutes')
        if not prime_step > 0:
            raise ConfigError(f"длина prime step должна быть > 0, получено {prime_step}",
                              field='prime_step_minutes')
        try:
            params = TrustParams(beta=_as_float(values.get('beta', REFERENCE_BETA), 'beta'),
                                 delta=delta, prime_step_minutes=prime_step)
        except InvalidParamsError as e:
            raise ConfigError(str(e), field='beta') from e

        if 'horizon_days' in values and 'horizon_steps' in values:
            raise ConfigError("укажите только одно из horizon_days и horizon_steps", field='horizon_steps')
        if 'horizon_steps' in values:
            horizon = _as_int(values['horizon_steps'], 'horizon_steps', minimum=0)
        elif 'horizon_days' in values:
            days = _as_float(values['horizon_days'], 'horizon_days')
            if days < 0:
                raise ConfigError(f"горизонт не может быть отрицательным: {days}", field='horizon_days')
            horizon = round(days * params.steps_per_day)
        else:
            raise ConfigError("не задан горизонт: horizon_days или horizon_steps", field='horizon_days')

        seed = _as_int(values.get('seed', 0), 'seed', minimum=0)
        stride = values.get('sample_stride')
        stride = _as_int(stride, 'sample_stride', minimum=1) if stride is not None else None
    except ConfigError as e:
        raise _with_context(e, source, locate) from e

    return SimulationConfig(horizon_steps=horizon, params=params, seed=seed,
                            sample_stride=stride, source=source)


def _build_scenario(name: str, values: Dict[str, Any], source: Optional[str], locate: Locator) -> ScenarioConfig:
    unknown = sorted(set(values) - set(SCENARIO_KEYS))
    if unknown:
        raise ConfigError(f"неизвестный параметр сценария {name}", source=source,
                          line=locate(unknown[0]), field=unknown[0])
    try:
        list_size = _as_int(values.get('list_size', 3), 'list_size', minimum=3)
        bridge_interval = _as_int(values.get('bridge_interval', REFERENCE_INTERVAL), 'bridge_interval', minimum=1)
        try:
            phases = parse_phases(values['phases']) if values.get('phases') not in (None, '') else []
        except ConfigError as e:
            raise ConfigError(e.reason, field='phases') from e
        try:
            miss_at = parse_steps(values['miss_at']) if values.get('miss_at') not in (None, '') else []
        except ValueError:
            raise ConfigError(f"ожидался список шагов, получено '{values['miss_at']}'", field='miss_at') from None
        if any(k < 1 for k in miss_at):
            raise ConfigError("шаг пропуска должен быть >= 1", field='miss_at')
        unmatched = _as_int(values.get('unmatched_duration', 1), 'unmatched_duration', minimum=1)
        matching = str(values.get('matching', 'fresh')).strip().lower()
        if matching not in MATCHING_MODES:
            raise ConfigError(f"режим подбора должен быть одним из {MATCHING_MODES}, получено '{matching}'",
                              field='matching')
        pool = values.get('filler_pool')
        pool = _as_int(pool, 'filler_pool', minimum=list_size - 1) if pool not in (None, '') else None

        scenario = ScenarioConfig(name=name, list_size=list_size, bridge_interval=bridge_interval,
                                  phases=phases, miss_at=miss_at, unmatched_duration=unmatched,
                                  matching=matching, filler_pool=pool)
        # проверка фаз на пересечение
        scenario.build_policy(TrustParams())
    except ConfigError as e:
        raise _with_context(e, source, locate) from e
    return scenario


def _text_locator(lines: List[str]) -> Callable[[Optional[str]], Locator]:
    def for_section(section: Optional[str]) -> Locator:
        def locate(key: str) -> Optional[int]:
            current = None
            for number, line in enumerate(lines, start=1):
                header = _SECTION_RE.match(line)
                if header:
                    current = header.group('name').strip()
                    if key is None and current == section:
                        return number
                    continue
                found = _KEY_RE.match(line)
                if current == section and found and found.group('key').strip().lower() == key:
                    return number
            return None
        return locate
    return for_section


def load_scenario_config(path: Union[str, Path],
                         overrides: Optional[Dict[str, Any]] = None) -> SimulationConfig:
    """
    Читает текстовую конфигурацию сценариев.

    overrides заменяют значения секции [simulation], например beta или
    prime_step_minutes из командной строки.

    Raises:
        ConfigError: файл пуст, синтаксическая ошибка или недопустимое значение
    """
    path = Path(path)
    source = str(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"не удалось прочитать файл: {e}", source=source) from e

    parser = configparser.ConfigParser(inline_comment_prefixes=(';', '#'), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("параметр вне секции", source=source, line=e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError("синтаксическая ошибка", source=source, line=line) from e
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError("повторяющаяся секция или параметр", source=source, line=e.lineno) from e
    except configparser.Error as e:
        raise ConfigError(str(e), source=source, line=getattr(e, 'lineno', None)) from e

    locator = _text_locator(text.splitlines())
    if not parser.sections():
        raise ConfigError("конфигурация пуста", source=source)
    if not parser.has_section(SIMULATION_SECTION):
        raise ConfigError(f"нет секции [{SIMULATION_SECTION}]", source=source)

    values = _with_overrides(dict(parser.items(SIMULATION_SECTION)), overrides)
    config = _build_simulation(values, source, locator(SIMULATION_SECTION))
    for section in parser.sections():
        if section == SIMULATION_SECTION:
            continue
        prefix, _, name = section.partition(' ')
        name = name.strip()
        if prefix != SCENARIO_PREFIX or not name:
            raise ConfigError(f"неизвестная секция [{section}]", source=source,
                              line=locator(section)(None))
        config.scenarios.append(_build_scenario(name, dict(parser.items(section)), source, locator(section)))

    _check_scenarios(config)
    logger.info("Конфигурация сценариев загружена", source=source,
                scenarios=[s.name for s in config.scenarios], horizon_steps=config.horizon_steps)
    return config


def get_scenarios_config_from_excel(filename: Union[str, Path],
                                    overrides: Optional[Dict[str, Any]] = None) -> SimulationConfig:
    """Читает конфигурацию сценариев из Excel файла: строки - параметры, колонки - сценарии"""
    source = str(filename)
    try:
        wb = load_workbook(filename=filename, read_only=True)
    except Exception as e:
        logger.error("❌ Ошибка при чтении конфигурации из Excel файла", source=source, error=str(e))
        raise ConfigError(f"не удалось открыть книгу: {e}", source=source) from e

    try:
        sheet = wb.active
        rows = [tuple(cell for cell in row) for row in sheet.iter_rows(values_only=True)]
    finally:
        wb.close()

    if not rows or len(rows[0]) < 2:
        raise ConfigError("конфигурация пуста", source=source)

    # Заголовки - имена сценариев
    names = [(idx, str(value).strip()) for idx, value in enumerate(rows[0]) if idx > 0 and value]
    if not names:
        raise ConfigError("нет ни одного сценария", source=source, line=1)

    param_rows: Dict[str, Tuple[int, tuple]] = {}
    for row_idx, row in enumerate(rows[1:], start=2):
        if not row or row[0] is None:
            continue
        param_rows[str(row[0]).strip().lower()] = (row_idx, row)

    def locate(key: str) -> Optional[int]:
        return param_rows[key][0] if key in param_rows else None

    unknown = sorted(set(param_rows) - set(SIMULATION_KEYS) - set(SCENARIO_KEYS))
    if unknown:
        raise ConfigError("неизвестный параметр", source=source, line=locate(unknown[0]), field=unknown[0])

    simulation_values = {}
    for key in SIMULATION_KEYS:
        if key not in param_rows:
            continue
        row_idx, row = param_rows[key]
        found = {row[idx] for idx, _ in names if idx < len(row) and row[idx] not in (None, '')}
        if len(found) > 1:
            raise ConfigError("значение параметра симуляции различается между сценариями",
                              source=source, line=row_idx, field=key)
        if found:
            simulation_values[key] = found.pop()

    config = _build_simulation(_with_overrides(simulation_values, overrides), source, locate)
    for idx, name in names:
        values = {}
        for key in SCENARIO_KEYS:
            if key in param_rows:
                row = param_rows[key][1]
                if idx < len(row) and row[idx] not in (None, ''):
                    values[key] = row[idx]
        config.scenarios.append(_build_scenario(name, values, source, locate))

    _check_scenarios(config)
    logger.info("Конфигурация сценариев загружена из Excel", source=source,
                scenarios=[s.name for s in config.scenarios], horizon_steps=config.horizon_steps)
    return config


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> SimulationConfig:
    """Выбирает загрузчик по расширению файла."""
    if Path(path).suffix.lower() in ('.xlsx', '.xlsm'):
        return get_scenarios_config_from_excel(path, overrides)
    return load_scenario_config(path, overrides)


def _check_scenarios(config: SimulationConfig) -> None:
    if not config.scenarios:
        raise ConfigError("не задано ни одного сценария", source=config.source)
    seen = set()
    for scenario in config.scenarios:
        if scenario.name in seen:
            raise ConfigError(f"сценарий {scenario.name} задан дважды", source=config.source)
        seen.add(scenario.name)
        # фазы проверяются повторно с реальной длиной суток
        scenario.build_policy(config.params)
