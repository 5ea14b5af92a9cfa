# eval_suite/report.py
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from diffusion.ensemble import ForecastEnsemble
from errors import DataError
from eval_suite.metrics import DEFAULT_ALPHA, METRICS, ensemble_scores

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["model", "T_p", "T_h", "metric", "value"]


def score_ensembles(
    ensembles: Sequence[ForecastEnsemble],
    model: str,
    alpha: float = DEFAULT_ALPHA,
    cumulative: bool = True,
) -> pd.DataFrame:
    """Per-window scores in long form (window_id, metric, value)."""
    rows = []
    for ens in ensembles:
        for metric, value in ensemble_scores(ens, alpha, cumulative).items():
            rows.append({"model": model, "window_id": ens.window_id, "metric": metric, "value": value})
    return pd.DataFrame(rows, columns=["model", "window_id", "metric", "value"])


def summarize(
    ensembles: Sequence[ForecastEnsemble],
    model: str,
    t_p: int,
    t_h: int,
    alpha: float = DEFAULT_ALPHA,
    cumulative: bool = True,
) -> pd.DataFrame:
    """One row per metric, averaged over windows."""
    if not ensembles:
        raise DataError(f"no {model} ensembles to score")
    per_window = score_ensembles(ensembles, model, alpha, cumulative)
    means = per_window.groupby("metric", sort=False)["value"].mean()
    rows = [
        {"model": model, "T_p": t_p, "T_h": t_h, "metric": m, "value": float(means[m])}
        for m in METRICS
        if m in means.index
    ]
    logger.info(
        "%s (T_p=%d, T_h=%d): %s", model, t_p, t_h,
        ", ".join(f"{r['metric']}={r['value']:.4g}" for r in rows),
    )
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def combine(frames: Iterable[pd.DataFrame]) -> pd.DataFrame:
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=REPORT_COLUMNS)
    return pd.concat(frames, ignore_index=True)[REPORT_COLUMNS]


def write_report(path: str | Path, report: pd.DataFrame) -> None:
    report[REPORT_COLUMNS].to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def read_report(path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = set(REPORT_COLUMNS) - set(frame.columns)
    if missing:
        raise DataError(f"{path}: not a metrics report, missing {sorted(missing)}")
    return frame


def pivot_report(report: pd.DataFrame) -> pd.DataFrame:
    """Wide table: one row per (T_p, T_h, metric), one column per model."""
    wide = report.pivot_table(
        index=["T_p", "T_h", "metric"], columns="model", values="value", aggfunc="first"
    ).reset_index()
    wide.columns.name = None
    wide["_order"] = wide["metric"].map({m: i for i, m in enumerate(METRICS)})
    return wide.sort_values(["T_p", "T_h", "_order"]).drop(columns="_order").reset_index(drop=True)


def relative_to(report: pd.DataFrame, baseline: str) -> pd.Series:
    """Each model's value divided by the baseline's, per (T_p, T_h, metric)."""
    wide = report.pivot_table(index=["T_p", "T_h", "metric"], columns="model", values="value")
    if baseline not in wide.columns:
        raise DataError(f"baseline {baseline!r} not in report")
    with np.errstate(divide="ignore", invalid="ignore"):
        return wide.drop(columns=baseline).div(wide[baseline], axis=0).stack()
