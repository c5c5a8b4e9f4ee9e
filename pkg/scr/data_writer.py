import asyncio
import os
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from scr.logger import logger

# 12 значащих цифр, точка как разделитель, без разделителей тысяч
FLOAT_FORMAT = "%.12g"
DEFAULT_OUTPUT_DIR = 'output'


def output_directory(override: Optional[Union[str, Path]] = None) -> Path:
    """Каталог вывода: аргумент, затем SYNCTRUST_OUTPUT_DIR, затем 'output'."""
    directory = Path(override or os.getenv('SYNCTRUST_OUTPUT_DIR') or DEFAULT_OUTPUT_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_csv(
        df: pd.DataFrame,
        path: Union[str, Path],
        columns: Optional[List[str]] = None
) -> Path:
    """
    Записывает DataFrame в CSV.

    Args:
        df: pandas DataFrame с данными для записи
        path: Путь к файлу; каталог создаётся при необходимости
        columns: Порядок колонок; отсутствующие колонки выводятся пустыми

    Returns:
        Path: путь к записанному файлу
    """
    path = Path(path)
    logger.info("Запуск записи CSV", path=str(path), dataframe_shape=df.shape)

    if columns is not None:
        missing_columns = [col for col in columns if col not in df.columns]
        if missing_columns:
            logger.warning("Указанные колонки отсутствуют в DataFrame", missing_columns=missing_columns)
        df = df.reindex(columns=columns)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # Пропуски (S_M несопоставленного пира, доля при нулевом доверии) - пустые поля
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='')
    except OSError as e:
        logger.error("Ошибка при записи CSV", path=str(path), error=str(e))
        raise

    logger.info("Данные успешно записаны", path=str(path), rows=len(df))
    return path


async def write_csv_async(
        df: pd.DataFrame,
        path: Union[str, Path],
        columns: Optional[List[str]] = None
) -> Path:
    """Та же запись в отдельном потоке, чтобы не блокировать цикл событий."""
    return await asyncio.to_thread(write_csv, df, path, columns)


def write_report(lines: List[str], path: Union[str, Path]) -> Path:
    """Текстовый отчёт: одна запись на строку."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding='utf-8')
    logger.info("Отчёт записан", path=str(path), lines=len(lines))
    return path
