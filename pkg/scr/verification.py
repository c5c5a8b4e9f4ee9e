"""
Приёмочные проверки: калибровка beta, трассы рисунков, потолок T*,
сходимость к равновесию, годовая траектория, условие честности и
безопасный размер листа.
"""
import asyncio
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from scr.logger import logger
from scr.simulation.figures import FIGURES, replay_figure, year_config
from scr.simulation.sim_engine import SimulationResult, run_scenarios
from scr.trust.incentive import incentive_sweep, safe_size_sweep
from scr.trust.trust_core import (
    REFERENCE_FRACTION,
    BridgeObservation,
    TrustParams,
    calibrate_beta,
    equilibrium_trust,
    perfect_step,
    update_trust,
)

RELATIVE_TOLERANCE = 1e-12
# Допуск согласия трёх годовых траекторий на 365-й день
YEAR_AGREEMENT = 0.03
YEAR_DAY_TOLERANCE = 1e-3
# Месяц, в котором red и green отходят от бриджей каждые 8 часов
DEVIATION_DAYS = (90, 120)


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.criterion}. {self.name}: {self.detail}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def check_calibration() -> CheckResult:
    six = calibrate_beta(6, 0.9, 10)
    twelve = calibrate_beta(12, 0.9, 10)
    passed = abs(six - 0.9999111696) <= 1e-9 and abs(twelve - 0.9999555838) <= 1e-9
    return CheckResult(1, "калибровка beta", passed, f"6 мес: {six:.10f}, 12 мес: {twelve:.10f}")


def check_figures() -> CheckResult:
    failures = []
    for figure in FIGURES:
        mismatch = replay_figure(figure).first_mismatch()
        if mismatch:
            failures.append(f"{figure}: {mismatch}")
    detail = "; ".join(failures) if failures else f"{len(FIGURES)} таблицы совпали"
    return CheckResult(2, "трассы рисунков", not failures, detail)


def check_ceiling(seed: int, params: TrustParams) -> CheckResult:
    rng = np.random.default_rng(seed)
    t_star = equilibrium_trust(params)
    delta = params.delta

    def perfect(trust: float) -> float:
        return update_trust(trust, BridgeObservation(k=delta, b=0, s_m=delta), params)

    fixed_point = _rel(perfect(t_star), t_star) <= RELATIVE_TOLERANCE

    increasing = 0
    for prev in rng.uniform(0.0, t_star, size=10_000):
        updated = perfect(float(prev))
        if updated > prev and _rel(updated, perfect_step(float(prev), params)) <= RELATIVE_TOLERANCE:
            increasing += 1

    bounded = 0
    for _ in range(100_000):
        b = int(rng.integers(0, 10_000))
        elapsed = int(rng.integers(1, 5 * delta))
        s_m = int(rng.integers(0, min(elapsed, delta) + 1))
        prev = float(rng.uniform(0.0, t_star))
        result = update_trust(prev, BridgeObservation(k=b + elapsed, b=b, s_m=s_m), params)
        if result <= t_star * (1 + RELATIVE_TOLERANCE):
            bounded += 1

    passed = fixed_point and increasing == 10_000 and bounded == 100_000
    return CheckResult(3, "потолок T*", passed,
                       f"неподвижная точка: {fixed_point}, рост {increasing}/10000, "
                       f"ограничено {bounded}/100000")


def check_convergence(params: TrustParams) -> CheckResult:
    t_star = equilibrium_trust(params)
    trust = 0.0
    reached = None
    for n in range(1, 20_001):
        trust = update_trust(trust, BridgeObservation(k=params.delta, b=0, s_m=params.delta), params)
        if reached is None and trust >= REFERENCE_FRACTION * t_star:
            reached = n
    converged = _rel(trust, t_star) <= 1e-9
    target = round(6 * params.steps_per_month / params.delta)
    passed = converged and reached is not None and abs(reached - target) <= 1
    return CheckResult(4, "сходимость к равновесию", passed,
                       f"T*={t_star:.6f}, 0.9*T* за {reached} бриджей (ожидалось {target})")


def largest_drop(result: SimulationResult, start_day: Optional[float] = None,
                 end_day: Optional[float] = None) -> float:
    """Наибольшее падение доверия пира за один бридж; окно [start_day, end_day) по желанию."""
    bridges = result.log.bridge_drops()
    bridges = bridges[bridges['peer_id'] == result.name]
    steps_per_day = result.params.steps_per_day
    if start_day is not None:
        bridges = bridges[bridges['k'] >= start_day * steps_per_day]
    if end_day is not None:
        bridges = bridges[bridges['k'] < end_day * steps_per_day]
    return float(bridges['drop'].max()) if not bridges.empty else 0.0


def check_year_run(results: Dict[str, SimulationResult], params: TrustParams) -> CheckResult:
    t_star = equilibrium_trust(params)
    blue = results['blue']

    raw = blue.trajectory['raw_trust']
    monotone = bool((raw.diff().dropna() >= 0).all())
    day180 = blue.trust_at_day(180)
    on_time = day180 >= REFERENCE_FRACTION * t_star * (1 - YEAR_DAY_TOLERANCE)
    calibrated = _rel(day180, REFERENCE_FRACTION * t_star) <= YEAR_DAY_TOLERANCE

    drops = {name: largest_drop(result) for name, result in results.items()}
    red_largest = drops['red'] == max(drops.values())

    # пропуск праймари дороже поздних бриджей, поздние дороже ранних
    green_late = largest_drop(results['green'], *DEVIATION_DAYS)
    red_early = largest_drop(results['red'], *DEVIATION_DAYS)
    ordered = drops['red'] > green_late > red_early
    end_day = DEVIATION_DAYS[1]
    green_behind = results['green'].trust_at_day(end_day) < blue.trust_at_day(end_day)

    final = {name: r.trust_at_day(365) for name, r in results.items()}
    agree = all(_rel(value, final['blue']) <= YEAR_AGREEMENT for value in final.values())

    passed = monotone and on_time and calibrated and red_largest and ordered and green_behind and agree
    finals = ", ".join(f"{name}={value / t_star:.4f}T*" for name, value in sorted(final.items()))
    return CheckResult(5, "годовая траектория", passed,
                       f"монотонность: {monotone}, день 180: {day180 / t_star:.6f}T*, "
                       f"падение red наибольшее: {red_largest}, "
                       f"падения red/green/red-рано: {drops['red']:.1f}/{green_late:.1f}/{red_early:.1f}, "
                       f"green ниже blue на день {end_day}: {green_behind}, день 365: {finals}")


def check_honesty_condition(seed: int, params: TrustParams) -> CheckResult:
    sweep = incentive_sweep(1000, seed, params)
    passed = sweep.passed and sweep.boundary_cases >= 10
    return CheckResult(6, "условие честности", passed, sweep.summary_line())


def check_safe_size(seed: int, params: TrustParams) -> CheckResult:
    sweep = safe_size_sweep(100, seed, params)
    return CheckResult(7, "безопасный размер листа", sweep.passed, sweep.summary_line())


async def run_acceptance(seed: int = 7, params: Optional[TrustParams] = None) -> List[CheckResult]:
    """Все проверки; годовая траектория и переборные проверки идут параллельно."""
    params = params or TrustParams()
    verify_logger = logger.bind(scenario='verify')
    verify_logger.info("Запуск приёмочных проверок", seed=seed)

    year_run = asyncio.create_task(run_scenarios(year_config(params)))
    sync_checks = await asyncio.gather(
        asyncio.to_thread(check_calibration),
        asyncio.to_thread(check_figures),
        asyncio.to_thread(check_ceiling, seed, params),
        asyncio.to_thread(check_convergence, params),
        asyncio.to_thread(check_honesty_condition, seed, params),
        asyncio.to_thread(check_safe_size, seed, params),
    )
    year_results = {r.name: r for r in await year_run}
    checks = sorted([*sync_checks, check_year_run(year_results, params)], key=lambda c: c.criterion)

    for check in checks:
        if not check.passed:
            verify_logger.warning("Проверка не пройдена", criterion=check.criterion, detail=check.detail)
    verify_logger.info("Приёмочные проверки завершены", passed=sum(c.passed for c in checks), total=len(checks))
    return checks
