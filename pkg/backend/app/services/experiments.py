"""
Ladder experiments: convergence, accuracy/time trade-off and pointwise errors.

Spectra are computed once per configuration by the forward oracle; each (scheme, M)
cell then runs one recovery. Cells are independent and may run in a process pool.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from app.core.config import settings
from app.core.exceptions import HgtibError, ReferenceUnavailableError
from app.models.enums import KernelMode, SplitMode, SweepMode
from app.models.potential import CSV_FLOAT_FORMAT, rmse
from app.models.scheme import GridConfig, SchemeSpec
from app.models.signal import ClosedForm
from app.models.spectral import SpectralData
from app.schemas.experiment import ExperimentConfig
from app.services.glme import recover
from app.services.spectral import time_reverse
from app.services.zs_oracle import left_spectrum, make_signal

logger = logging.getLogger(__name__)

TIMING_COLUMNS = ["kernel_time", "sweep_time", "wall_time"]


@dataclass
class Spectra:
    left: SpectralData
    right: Optional[SpectralData]
    signal: ClosedForm
    synthesis_time: float


@dataclass(frozen=True)
class CellTask:
    scheme: str
    M_out: int
    L: float
    split: SplitMode
    sweep_mode: SweepMode
    kernel_mode: KernelMode
    keep_errors: bool = False


def approximation_order(rmse_coarse: float, rmse_fine: float) -> float:
    """log2 of the error ratio across one grid doubling."""
    if not (rmse_coarse > 0 and rmse_fine > 0):
        return math.nan
    return math.log2(rmse_coarse / rmse_fine)


def build_spectra(cfg: ExperimentConfig) -> Spectra:
    """Left spectrum of the configured signal and, in split mode, of its reversal."""
    start = time.perf_counter()
    signal = cfg.signal.to_closed_form()
    samples = make_signal(signal, cfg.L, max(cfg.ladder))
    oracle = partial(left_spectrum, M_xi=cfg.M_xi, L_xi=cfg.L_xi, method=cfg.scatter_method)
    left = oracle(samples, cfg.dispersion)
    right = None
    if cfg.split is SplitMode.SPLIT_AT_ZERO:
        right = time_reverse(samples, cfg.dispersion, oracle)
    elapsed = time.perf_counter() - start
    logger.info(
        f"Spectra for {signal.describe()} ({cfg.dispersion.value}): "
        f"{len(left.discrete)} eigenvalues, {elapsed:.2f}s"
    )
    return Spectra(left=left, right=right, signal=signal, synthesis_time=elapsed)


def run_cell(task: CellTask, spectra: Spectra) -> Dict[str, Any]:
    """One recovery; failures become a row with status 'failed'."""
    row: Dict[str, Any] = {"scheme": task.scheme, "M": task.M_out}
    start = time.perf_counter()
    try:
        grid = GridConfig(L=task.L, M_out=task.M_out, split=task.split)
        reference = spectra.signal(grid.t_grid)
        potential = recover(
            spectra.left,
            spectra.right,
            grid,
            SchemeSpec.from_family(task.scheme),
            sweep_mode=task.sweep_mode,
            kernel_mode=task.kernel_mode,
            reference=reference,
        )
        eps = potential.errors()
        row.update(
            status="ok",
            rmse=rmse(eps),
            max_eps=float(np.max(eps)),
            kernel_time=potential.diagnostics["kernel_time"],
            sweep_time=potential.diagnostics["sweep_time"],
            error="",
        )
        if task.keep_errors:
            row["t"] = grid.t_grid
            row["eps"] = eps
    except HgtibError as e:
        logger.warning(f"Cell {task.scheme} M={task.M_out} failed: {e.message}")
        row.update(
            status="failed",
            rmse=math.nan,
            max_eps=math.nan,
            kernel_time=math.nan,
            sweep_time=math.nan,
            error=f"{type(e).__name__}: {e.message}",
        )
    row["wall_time"] = time.perf_counter() - start
    return row


def run_cells(cfg: ExperimentConfig, spectra: Spectra, keep_errors: bool = False) -> List[Dict]:
    tasks = [
        CellTask(
            scheme=scheme.value,
            M_out=M,
            L=cfg.L,
            split=cfg.split,
            sweep_mode=cfg.sweep_mode,
            kernel_mode=cfg.kernel_mode,
            keep_errors=keep_errors,
        )
        for scheme in cfg.schemes
        for M in cfg.ladder
    ]
    rows: List[Dict] = []
    if cfg.workers <= 1:
        for task in tqdm(tasks, desc="cells", disable=None):
            rows.append(run_cell(task, spectra))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_cell, task, spectra) for task in tasks]
            progress = tqdm(as_completed(futures), total=len(futures), desc="cells", disable=None)
            for future in progress:
                rows.append(future.result())

    order = {(task.scheme, task.M_out): i for i, task in enumerate(tasks)}
    rows.sort(key=lambda r: order[(r["scheme"], r["M"])])
    for row in rows:
        row["synthesis_time"] = spectra.synthesis_time
    return rows


def _provenance(frame: pd.DataFrame, cfg: ExperimentConfig) -> pd.DataFrame:
    frame.insert(2, "dispersion", cfg.dispersion.value)
    frame.insert(3, "signal", cfg.signal.kind.value)
    frame["seed"] = cfg.seed
    frame["version"] = settings.VERSION
    return frame


def _with_orders(frame: pd.DataFrame) -> pd.DataFrame:
    orders = []
    for _, group in frame.groupby("scheme", sort=False):
        values = group["rmse"].to_numpy()
        orders.append(
            pd.Series(
                [math.nan] + [approximation_order(a, b) for a, b in zip(values, values[1:])],
                index=group.index,
            )
        )
    frame["order"] = pd.concat(orders).sort_index() if orders else []
    return frame


def run_convergence(cfg: ExperimentConfig, spectra: Optional[Spectra] = None) -> pd.DataFrame:
    """RMSE, approximation order and timings per (scheme, M)."""
    spectra = spectra or build_spectra(cfg)
    frame = pd.DataFrame(run_cells(cfg, spectra))
    frame = _with_orders(frame)
    columns = ["scheme", "M", "status", "rmse", "order", "max_eps", *TIMING_COLUMNS,
               "synthesis_time", "error"]
    frame = _provenance(frame[columns].copy(), cfg)
    for scheme, group in frame.groupby("scheme", sort=False):
        mean_order = group["order"].mean()
        logger.info(f"{scheme}: mean order {mean_order:.2f} over {len(group)} rungs")
    return frame


def pareto_summary(frame: pd.DataFrame, accuracy_target: float) -> Dict[str, Any]:
    """Fastest scheme reaching the target, and the fastest scheme on the coarsest rung."""
    ok = frame[frame["status"] == "ok"]
    summary: Dict[str, Any] = {"accuracy_target": accuracy_target}

    reached = ok[ok["rmse"] <= accuracy_target]
    if reached.empty:
        summary["fastest_at_target"] = None
    else:
        best = reached.loc[reached["wall_time"].idxmin()]
        summary["fastest_at_target"] = {
            "scheme": best["scheme"], "M": int(best["M"]), "wall_time": float(best["wall_time"]),
            "rmse": float(best["rmse"]),
        }

    if ok.empty:
        summary["fastest_on_coarsest"] = None
    else:
        coarse = ok[ok["M"] == ok["M"].min()]
        best = coarse.loc[coarse["wall_time"].idxmin()]
        summary["fastest_on_coarsest"] = {
            "scheme": best["scheme"], "M": int(best["M"]), "wall_time": float(best["wall_time"]),
            "rmse": float(best["rmse"]),
        }
    return summary


def run_pareto(
    cfg: ExperimentConfig, spectra: Optional[Spectra] = None
) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """(RMSE, wall time) per scheme and M plus a fastest-scheme summary."""
    if len(cfg.schemes) < 2:
        logger.warning("Pareto comparison with a single scheme has nothing to compare")
    spectra = spectra or build_spectra(cfg)
    frame = pd.DataFrame(run_cells(cfg, spectra))
    columns = ["scheme", "M", "status", "rmse", *TIMING_COLUMNS, "error"]
    frame = _provenance(frame[columns].copy(), cfg)
    summary = pareto_summary(frame, cfg.accuracy_target)
    logger.info(f"Pareto summary: {summary}")
    return frame, summary


def run_pointwise(
    cfg: ExperimentConfig, spectra: Optional[Spectra] = None
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    eps(t) per scheme and M, and the per-t order between consecutive rungs.

    The order at coarse node t_j compares eps_M(t_j) with eps_2M(t_2j).

    Raises:
        ReferenceUnavailableError: The exact signal is identically zero
    """
    signal = cfg.signal.to_closed_form()
    probe = signal(GridConfig(L=cfg.L, M_out=min(cfg.ladder), split=cfg.split).t_grid)
    if not np.any(np.abs(probe) > 0):
        raise ReferenceUnavailableError(
            "Pointwise errors need a non-zero exact signal", {"signal": signal.describe()}
        )

    spectra = spectra or build_spectra(cfg)
    rows = run_cells(cfg, spectra, keep_errors=True)

    errors = []
    for row in rows:
        if row["status"] != "ok":
            continue
        errors.append(pd.DataFrame({"scheme": row["scheme"], "M": row["M"], "t": row["t"],
                                    "eps": row["eps"]}))
    error_frame = pd.concat(errors, ignore_index=True) if errors else pd.DataFrame(
        columns=["scheme", "M", "t", "eps"]
    )

    orders = []
    by_cell = {(r["scheme"], r["M"]): r for r in rows if r["status"] == "ok"}
    for scheme in cfg.schemes:
        for coarse, fine in zip(cfg.ladder, cfg.ladder[1:]):
            a, b = by_cell.get((scheme.value, coarse)), by_cell.get((scheme.value, fine))
            if a is None or b is None:
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                order = np.log2(a["eps"] / b["eps"][:: fine // coarse])
            orders.append(pd.DataFrame({"scheme": scheme.value, "M": coarse, "t": a["t"],
                                        "order": order}))
    order_frame = pd.concat(orders, ignore_index=True) if orders else pd.DataFrame(
        columns=["scheme", "M", "t", "order"]
    )
    for frame in (error_frame, order_frame):
        frame["seed"] = cfg.seed
        frame["version"] = settings.VERSION
    return error_frame, order_frame


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def failed_cells(frame: pd.DataFrame) -> int:
    return int((frame["status"] == "failed").sum()) if "status" in frame else 0


__all__ = [
    "CellTask",
    "Spectra",
    "approximation_order",
    "build_spectra",
    "failed_cells",
    "pareto_summary",
    "run_cell",
    "run_cells",
    "run_convergence",
    "run_pareto",
    "run_pointwise",
    "write_table",
]
