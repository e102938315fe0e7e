"""
Sweep Orchestration Service
Ties together: grid point → bounds / expansion / simulation → CsvRow list.
Grid points fan out over a thread pool; rows are sorted before writing, so
output order never depends on scheduling.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

from app.config.simulation import settings as sim_settings
from app.config.solver import settings as solver_settings
from app.services.bounds import lower_bound_service as lower
from app.services.bounds import upper_bound_service as upper
from app.services.lownoise import low_noise_service as lownoise
from app.services.simulation import sim_rate_service as sim
from app.utils.console import log, warn
from app.utils.validators import ChannelParams, CsvRow, SweepConfig

SIM_QUANTITIES = ("sim_rate", "sim_hy", "sim_hyx")


def _row(point: ChannelParams, quantity: str, value: float, tol: float, L: Optional[int] = None,
         aux: str = "", converged: bool = True) -> CsvRow:
    return CsvRow(p_i=point.p_i, p_d=point.p_d, quantity=quantity, L=L, value=value,
                  aux=aux, converged=converged, tol=tol)


def _series_tol(config: SweepConfig) -> float:
    return min(config.tol, solver_settings.series_tol)


# ──────────────────────────────────────────────────────────
# Per-Quantity Row Builders
# ──────────────────────────────────────────────────────────

def lower_rows(point: ChannelParams, config: SweepConfig, quantities: Sequence[str]) -> List[CsvRow]:
    params = point.interior()
    rows = []
    if "lower" in quantities:
        lb = lower.lower_bound(params, _series_tol(config))
        rows.append(_row(point, "lower", lb.value, config.tol, aux=f"{lb.alpha_opt:.10g}"))
    if "iud_lower" in quantities:
        iud = lower.iud_lower_bound(params, _series_tol(config))
        rows.append(_row(point, "iud_lower", iud.value, config.tol, aux=str(iud.series_terms_used)))
    if "genie" in quantities:
        rows.append(_row(point, "genie", lower.genie_erasure(params), config.tol))
    return rows


def upper_rows(point: ChannelParams, config: SweepConfig) -> List[CsvRow]:
    params = point.interior()
    rows = []
    for entry in upper.upper_bound_sequence(params, config.L, config.bitsym, config.tol):
        result = entry["result"]
        aux = f"iterations={result.iterations};gap={result.duality_gap:.3e}"
        if entry["nonmonotone"]:
            aux += ";nonmonotone"
        rows.append(_row(point, "upper_L", result.value, config.tol, L=entry["L"], aux=aux,
                         converged=result.converged))
    return rows


def expansion_rows(point: ChannelParams, config: SweepConfig) -> List[CsvRow]:
    if not point.is_symmetric or point.p_i > 0.5:
        warn("Sweep", f"expansion skipped at p_i={point.p_i} p_d={point.p_d} (needs p_i = p_d <= 0.5)")
        return []
    result = lownoise.expansion(point.p_i, _series_tol(config))
    return [_row(point, "expansion", result.value, config.tol, aux=str(result.K))]


def resolve_alpha(point: ChannelParams, config: SweepConfig) -> float:
    if config.alpha == "opt":
        return lower.lower_bound(point.interior(), _series_tol(config)).alpha_opt
    return float(config.alpha)


def sim_rows(point: ChannelParams, config: SweepConfig, quantities: Sequence[str],
             threads: Optional[int] = None) -> List[CsvRow]:
    params = point.interior()
    alpha = resolve_alpha(point, config)
    hy, hyx, rate = sim.estimate_rates(params, alpha, config.n, config.samples, config.seed, threads)
    rows = []
    for quantity, estimate in (("sim_rate", rate), ("sim_hy", hy), ("sim_hyx", hyx)):
        if quantity in quantities:
            rows.append(_row(point, quantity, estimate.mean, config.tol,
                             aux=f"{estimate.half_width:.10g}"))
    return rows


def trivial_rows(point: ChannelParams, config: SweepConfig) -> List[CsvRow]:
    params = point.interior()
    rows = []
    for L in config.L:
        if L < 2:
            warn("Sweep", f"trivializing input needs L >= 2; skipping L={L}")
            continue
        result = upper.trivializing_input(params, L)
        if result.feasible:
            rows.append(_row(point, "trivial", result.objective, config.tol, L=L,
                             aux=f"not_stationary={str(result.not_stationary).lower()}"))
        else:
            rows.append(_row(point, "trivial", 0.0, config.tol, L=L, aux="infeasible", converged=False))
    return rows


# ──────────────────────────────────────────────────────────
# Grid Pipeline
# ──────────────────────────────────────────────────────────

def point_rows(point: ChannelParams, config: SweepConfig, quantities: Sequence[str],
               sim_threads: Optional[int] = None) -> List[CsvRow]:
    rows: List[CsvRow] = []
    if any(q in quantities for q in ("lower", "iud_lower", "genie")):
        rows.extend(lower_rows(point, config, quantities))
    if "upper_L" in quantities:
        rows.extend(upper_rows(point, config))
    if "expansion" in quantities:
        rows.extend(expansion_rows(point, config))
    if any(q in quantities for q in SIM_QUANTITIES):
        rows.extend(sim_rows(point, config, quantities, sim_threads))
    if "trivial" in quantities:
        rows.extend(trivial_rows(point, config))
    return rows


def run_grid(config: SweepConfig, quantities: Optional[Sequence[str]] = None,
             task: Optional[Callable[[ChannelParams], List[CsvRow]]] = None) -> List[CsvRow]:
    """Evaluate every grid point (in parallel) and return all rows, sorted."""
    quantities = list(quantities or config.quantities)
    points = config.grid()
    workers = max(1, min(config.threads or sim_settings.threads, len(points)))
    start = time.time()
    log("Sweep", f"{len(points)} grid points x {', '.join(quantities)} on {workers} workers")

    # simulation samples use the pool only when the grid itself does not
    sim_threads = config.threads if workers == 1 else 1
    work = task or (lambda point: point_rows(point, config, quantities, sim_threads))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        batches = list(pool.map(work, points))

    rows = sorted((row for batch in batches for row in batch), key=CsvRow.sort_key)
    log("Sweep", f"{len(rows)} rows in {time.time() - start:.2f}s")
    return rows
