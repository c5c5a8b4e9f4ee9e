import argparse
import asyncio
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from scr.consensus.event_log import EVENT_COLUMNS
from scr.data_writer import output_directory, write_csv_async, write_report
from scr.errors import (
    CalibrationDomainError,
    ConfigError,
    InvalidParamsError,
    NotFoundError,
    PreconditionError,
    TrustLedgerError,
)
from scr.logger import logger
from scr.simulation.figures import FIGURES, replay_figure
from scr.simulation.scenario_config import SimulationConfig, load_config
from scr.simulation.sim_engine import (
    SUMMARY_COLUMNS,
    TRAJECTORY_COLUMNS,
    merge_results,
    run_scenarios,
)
from scr.trust.incentive import (
    incentive_sweep,
    max_safe_list_size,
    max_safe_list_size_avg,
    normalized_average_trust,
    safe_size_sweep,
)
from scr.trust.trust_core import (
    REFERENCE_BETA,
    REFERENCE_DELTA,
    REFERENCE_MONTHS,
    REFERENCE_PRIME_STEP_MINUTES,
    TrustParams,
    bridges_to_fraction,
    calibrate_beta,
    decay_factor,
    equilibrium_trust,
    months_to_fraction,
)
from scr.verification import run_acceptance

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ожидалось целое число, получено '{value}'") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"значение должно быть >= 1, получено {number}")
    return number


def chain_overrides() -> argparse.ArgumentParser:
    """Общие флаги параметров цепи; по умолчанию эталонные значения."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--beta', type=float, default=None, help=f"база затухания (по умолчанию {REFERENCE_BETA})")
    parent.add_argument('--delta', type=int, default=None, help=f"максимальный интервал бриджей ({REFERENCE_DELTA})")
    parent.add_argument('--prime-min', type=float, default=None,
                        help=f"длина prime step в минутах ({REFERENCE_PRIME_STEP_MINUTES:g})")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='synctrust', description="Модель доверия синк-листов")
    sub = parser.add_subparsers(dest='command', required=True)
    overrides = chain_overrides()

    params = sub.add_parser('params', parents=[overrides], help="калибровка beta и производные константы")
    params.add_argument('--months', type=float, default=REFERENCE_MONTHS, help="месяцы до P*T*")
    params.add_argument('--pct', type=float, default=90.0, help="P в процентах")

    replay = sub.add_parser('replay', parents=[overrides], help="трасса пира для рисунка")
    replay.add_argument('figure', choices=[*FIGURES, 'all'])
    replay.add_argument('--output', type=Path, default=None, help="CSV файл (для all - каталог)")

    simulate = sub.add_parser('simulate', parents=[overrides], help="прогон сценариев из конфигурации")
    simulate.add_argument('config', type=Path, help=".cfg или .xlsx")
    simulate.add_argument('--output-dir', type=Path, default=None)

    incentive = sub.add_parser('incentive', parents=[overrides], help="проверка условия честности")
    incentive.add_argument('--random', type=positive_int, default=None, help="число случайных сценариев")
    incentive.add_argument('--seed', type=int, default=7)
    incentive.add_argument('--safe-size', type=positive_int, default=None,
                           help="число случайных систем для проверки безопасного размера листа")
    incentive.add_argument('--bound', action='store_true', help="безопасный размер листа по суммарному доверию")
    incentive.add_argument('--total-trust', type=float, default=None)
    incentive.add_argument('--avg-trust', type=float, default=None)
    incentive.add_argument('--peers', type=positive_int, default=None)
    incentive.add_argument('--output', type=Path, default=None, help="CSV с записями по сценариям")

    verify = sub.add_parser('verify', parents=[overrides], help="приёмочные проверки")
    verify.add_argument('--seed', type=int, default=7)
    return parser


def resolve_params(args: argparse.Namespace) -> TrustParams:
    """Флаги поверх эталонных параметров; проверка - правила TrustParams."""
    base = TrustParams()
    return TrustParams(
        beta=args.beta if args.beta is not None else base.beta,
        delta=args.delta if args.delta is not None else base.delta,
        prime_step_minutes=args.prime_min if args.prime_min is not None else base.prime_step_minutes,
    )


def cmd_params(args: argparse.Namespace) -> int:
    prime = args.prime_min if args.prime_min is not None else REFERENCE_PRIME_STEP_MINUTES
    fraction = args.pct / 100.0
    try:
        beta = args.beta if args.beta is not None else calibrate_beta(args.months, fraction, prime)
        params = TrustParams(beta=beta, delta=args.delta if args.delta is not None else REFERENCE_DELTA,
                            prime_step_minutes=prime)
        months = months_to_fraction(fraction, params)
        bridges = bridges_to_fraction(fraction, params)
    except CalibrationDomainError as e:
        logger.warning("Недопустимые входные данные калибровки", error=str(e))
        print(f"ошибка: {e}\nподсказка: --pct в (0, 100), --months > 0, --prime-min > 0", file=sys.stderr)
        return EXIT_USAGE

    print(f"beta = {params.beta:.10f}")
    print(f"T* = {equilibrium_trust(params):.6f}")
    print(f"beta^Delta = {decay_factor(params.delta, params):.10f}")
    print(f"prime steps в сутках = {params.steps_per_day:g}")
    print(f"месяцев до {args.pct:g}% T* = {months:.4f}")
    print(f"идеальных бриджей до {args.pct:g}% T* = {bridges}")
    return EXIT_OK


async def cmd_replay(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    figures = FIGURES if args.figure == 'all' else (args.figure,)
    status = EXIT_OK
    for figure in figures:
        replay = replay_figure(figure, params)
        if args.output is None:
            path = output_directory() / f"{figure}.csv"
        elif args.figure == 'all':
            path = output_directory(args.output) / f"{figure}.csv"
        else:
            path = args.output
        await write_csv_async(replay.table(), path)

        mismatch = replay.first_mismatch()
        if mismatch:
            logger.error("Трасса не совпала с ожидаемой таблицей", figure=figure, mismatch=mismatch)
            print(f"{figure}: расхождение, {mismatch}", file=sys.stderr)
            status = EXIT_FAILED
        else:
            print(f"{figure}: {len(replay.rows)} строк совпали, {path}")
    return status


async def cmd_simulate(args: argparse.Namespace) -> int:
    # флаги проверяются до чтения файла
    resolve_params(args)
    overrides = {'beta': args.beta, 'delta': args.delta, 'prime_step_minutes': args.prime_min}
    config: SimulationConfig = await asyncio.to_thread(load_config, args.config, overrides)

    results = await run_scenarios(config)
    merged = merge_results(results)
    directory = output_directory(args.output_dir)
    await asyncio.gather(
        write_csv_async(merged['trajectory'], directory / 'trajectory.csv', TRAJECTORY_COLUMNS),
        write_csv_async(merged['events'], directory / 'events.csv', [*EVENT_COLUMNS, 'scenario']),
        write_csv_async(merged['summary'], directory / 'summary.csv', SUMMARY_COLUMNS),
    )

    summary: pd.DataFrame = merged['summary']
    for row in summary.itertuples(index=False):
        print(f"{row.peer_id}: доверие {row.final_trust:.6f} ({row.fraction_of_equilibrium:.4f} T*), "
              f"просадка {row.max_drawdown:.6f}, бриджей {row.bridges}, пропусков {row.misses}")
    print(f"результаты: {directory}")
    return EXIT_OK


async def cmd_incentive(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    status = EXIT_OK
    ran = False

    if args.bound or args.total_trust is not None:
        if args.total_trust is None:
            print("ошибка: --bound требует --total-trust", file=sys.stderr)
            return EXIT_USAGE
        print(f"безопасный размер листа при L={args.total_trust:g}: "
              f"{max_safe_list_size(args.total_trust, params)}")
        ran = True

    if args.avg_trust is not None or args.peers is not None:
        if args.avg_trust is None or args.peers is None:
            print("ошибка: --avg-trust и --peers задаются вместе", file=sys.stderr)
            return EXIT_USAGE
        print(f"безопасный размер листа при |N|={args.peers}, T_ave={args.avg_trust:g} "
              f"(T_ave/T* = {normalized_average_trust(args.avg_trust, params):.4f}): "
              f"{max_safe_list_size_avg(args.peers, args.avg_trust, params)}")
        ran = True

    if args.safe_size is not None:
        safe_size = await asyncio.to_thread(safe_size_sweep, args.safe_size, args.seed, params)
        print(safe_size.summary_line())
        if not safe_size.passed:
            logger.error("Найдено выгодное отклонение в безопасном листе", summary=safe_size.summary_line())
            status = EXIT_FAILED
        ran = True

    if args.random is not None or not ran:
        count = args.random or 1000
        sweep = await asyncio.to_thread(incentive_sweep, count, args.seed, params)
        print(sweep.summary_line())
        if args.output is not None:
            await write_csv_async(sweep.records, args.output)
        if not sweep.passed:
            logger.error("Условие честности разошлось с прямым сравнением", summary=sweep.summary_line())
            status = EXIT_FAILED
    return status


async def cmd_verify(args: argparse.Namespace) -> int:
    checks = await run_acceptance(seed=args.seed, params=resolve_params(args))
    lines = [check.line() for check in checks]
    for line in lines:
        print(line)
    write_report(lines, output_directory() / 'verify.txt')
    return EXIT_OK if all(check.passed for check in checks) else EXIT_FAILED


async def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    cli_logger = logger.bind(scenario=args.command)
    try:
        if args.command == 'params':
            return cmd_params(args)
        if args.command == 'replay':
            return await cmd_replay(args)
        if args.command == 'simulate':
            return await cmd_simulate(args)
        if args.command == 'incentive':
            return await cmd_incentive(args)
        return await cmd_verify(args)
    except ConfigError as e:
        cli_logger.error("Ошибка конфигурации", source=e.source, line=e.line, field=e.field, reason=e.reason)
        print(f"ошибка конфигурации: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParamsError, PreconditionError, NotFoundError) as e:
        cli_logger.error("Недопустимые аргументы", error=str(e))
        print(f"ошибка: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrustLedgerError as e:
        cli_logger.exception("Ошибка выполнения", error=str(e))
        print(f"ошибка: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
