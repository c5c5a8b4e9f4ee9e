import json
import logging
import os
import time
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Optional, Union

import structlog

LOG_FILE = 'trust_ledger.log'
DEFAULT_LOG_DIR = 'logs'
DAYS_TO_KEEP = 10

# Поля контекста, которые идут в записи первыми
LEADING_FIELDS = ('scenario', 'k', 'list_id', 'peer_id')


def ledger_json(event_dict, **kwargs) -> str:
    # кириллица в сообщениях пишется как есть
    return json.dumps(event_dict, ensure_ascii=False, separators=(',', ':'), default=str)


def leading_context_first(logger, method_name, event_dict):
    head = {key: event_dict.pop(key) for key in LEADING_FIELDS if key in event_dict}
    return {**head, **event_dict}


def drop_empty_fields(logger, method_name, event_dict):
    return {key: value for key, value in event_dict.items() if value is not None and value != ''}


def add_timestamp(logger, method_name, event_dict):
    event_dict['timestamp'] = time.strftime("%Y-%m-%d %H:%M:%S %z", time.localtime())
    return event_dict


class WarningsOnly(logging.Filter):
    def filter(self, record):
        return record.levelno in (logging.WARNING, logging.ERROR)


def cleanup_old_logs(log_directory: Path, days_to_keep: int = DAYS_TO_KEEP) -> None:
    """Удаляет ротированные файлы старше days_to_keep дней."""
    cutoff = time.time() - days_to_keep * 24 * 3600
    for path in log_directory.glob(f'{LOG_FILE}.*'):
        if path.is_file() and path.stat().st_mtime < cutoff:
            path.unlink()


def _resolve_level(log_level: Union[int, str, None]) -> int:
    if isinstance(log_level, int):
        return log_level
    name = (log_level or os.environ.get('SYNCTRUST_LOG_LEVEL', 'INFO')).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def configure_logging(log_directory: Optional[Union[str, Path]] = None,
                      log_level: Union[int, str, None] = None):
    """
    Настраивает structlog поверх стандартного logging.

    Файл ротируется в полночь и пишется в JSON, в консоль попадают только
    предупреждения и ошибки. Каталог и уровень по умолчанию берутся из
    SYNCTRUST_LOG_DIR и SYNCTRUST_LOG_LEVEL. Повторный вызов заменяет
    обработчики, а не добавляет новые.
    """
    directory = Path(log_directory or os.environ.get('SYNCTRUST_LOG_DIR') or DEFAULT_LOG_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    level = _resolve_level(log_level)

    file_handler = TimedRotatingFileHandler(
        directory / LOG_FILE,
        when="midnight",
        interval=1,
        backupCount=DAYS_TO_KEEP,
        encoding='utf-8'
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(structlog.stdlib.ProcessorFormatter(
        processor=structlog.processors.JSONRenderer(serializer=ledger_json)))

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.WARNING)
    console_handler.addFilter(WarningsOnly())
    console_handler.setFormatter(structlog.stdlib.ProcessorFormatter(
        processor=structlog.dev.ConsoleRenderer(colors=True)))

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in list(root_logger.handlers):
        if getattr(handler, '_synctrust', False):
            root_logger.removeHandler(handler)
            handler.close()
    for handler in (file_handler, console_handler):
        handler._synctrust = True
        root_logger.addHandler(handler)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            add_timestamp,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            leading_context_first,
            drop_empty_fields,
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    cleanup_old_logs(directory)
    return structlog.get_logger("synctrust")


# Глобальный логгер
logger = configure_logging()
