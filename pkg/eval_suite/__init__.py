from eval_suite.grw import GRWParams, fit_grw, grw_forecast, simulate_grw
from eval_suite.metrics import (
    METRICS,
    crps,
    crps_ensemble,
    ensemble_scores,
    interval_score,
    mae,
    mis,
    prediction_interval,
    rmse,
)
from eval_suite.report import read_report, summarize, write_report

__all__ = [
    "GRWParams",
    "METRICS",
    "crps",
    "crps_ensemble",
    "ensemble_scores",
    "fit_grw",
    "grw_forecast",
    "interval_score",
    "mae",
    "mis",
    "prediction_interval",
    "read_report",
    "rmse",
    "simulate_grw",
    "summarize",
    "write_report",
]
