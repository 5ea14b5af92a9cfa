# pages/dashboard_io.py
"""Cached artifact loading shared by the dashboard pages."""
import os
from pathlib import Path

import pandas as pd
import streamlit as st

from diffusion.ensemble import ForecastEnsemble, frame_to_ensembles
from eval_suite.report import read_report

RUNS_DIR = Path(os.environ.get("UGNN_RUNS_DIR", "runs"))


def list_csv(kind: str) -> list[Path]:
    """CSV artifacts under the runs folder whose header matches ``kind``."""
    if not RUNS_DIR.is_dir():
        return []
    wanted = {"ensembles": "window_id", "metrics": "metric"}[kind]
    out = []
    for path in sorted(RUNS_DIR.glob("**/*.csv")):
        with open(path, encoding="utf-8") as fh:
            if wanted in fh.readline().split(","):
                out.append(path)
    return out


@st.cache_data(show_spinner=False)
def load_ensembles(path: str, mtime: float) -> dict[int, ForecastEnsemble]:
    return {e.window_id: e for e in frame_to_ensembles(pd.read_csv(path))}


@st.cache_data(show_spinner=False)
def load_report(path: str, mtime: float) -> pd.DataFrame:
    return read_report(path)


def mtime(path: Path) -> float:
    return path.stat().st_mtime
