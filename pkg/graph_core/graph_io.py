# graph_core/graph_io.py
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from errors import DataError
from graph_core.sampling import SelectionMatrix


def read_adjacency_csv(path: str | Path) -> tuple[np.ndarray, list[str] | None]:
    """
    Load a dense adjacency matrix.

    Returns
    -------
    tuple
        ``(matrix, labels)``; ``labels`` is the header row when the file has
        one, else ``None``.
    """
    raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    if raw.empty:
        raise DataError(f"{path}: empty adjacency file")
    labels = None
    first = pd.to_numeric(raw.iloc[0], errors="coerce")
    if first.isna().any():
        labels = [str(v) for v in raw.iloc[0]]
        raw = raw.iloc[1:]
    values = raw.apply(pd.to_numeric, errors="coerce")
    if values.isna().to_numpy().any():
        raise DataError(f"{path}: adjacency holds non-numeric cells")
    return values.to_numpy(dtype=np.float64), labels


def write_adjacency_csv(
    path: str | Path, matrix: np.ndarray, labels: Sequence[str] | None = None
) -> None:
    frame = pd.DataFrame(np.asarray(matrix, dtype=np.float64))
    frame.to_csv(
        path,
        header=list(labels) if labels is not None else False,
        index=False,
        float_format="%.17g",
        lineterminator="\n",
    )


def write_selections(path: str | Path, selections: Sequence[SelectionMatrix]) -> None:
    """One line per level: ``n_in`` followed by the kept indices."""
    lines = [f"{s.n_in}: {s.to_line()}" for s in selections]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_selections(path: str | Path) -> list[SelectionMatrix]:
    selections = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        head, _, body = line.partition(":")
        try:
            n_in = int(head)
        except ValueError as exc:
            raise DataError(f"{path}: bad selection header {head!r}") from exc
        selections.append(SelectionMatrix.from_line(body, n_in))
    return selections
