# market/windows.py
"""Sliding conditioning/target windows and leakage-free chunked splits."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from errors import ArgumentError, DataError, StructuralError

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.90, 0.05, 0.05)


@dataclass(frozen=True, eq=False)
class WindowPair:
    """
    One training/evaluation example.

    ``past`` is N x (T_p * U), day-major (all U features of the first
    conditioning day, then the next day...). ``future`` is N x T_h.
    ``origin`` is (chunk id, offset of the first past day inside the series).
    """

    past: np.ndarray
    future: np.ndarray
    origin: tuple[int, int]

    @property
    def start(self) -> int:
        return self.origin[1]


@dataclass(frozen=True)
class Chunk:
    chunk_id: int
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


def window_count(length: int, t_p: int, t_h: int, stride: int = 1) -> int:
    if length < t_p + t_h:
        return 0
    return (length - (t_p + t_h)) // stride + 1


def window_dataset(
    returns,
    features=None,
    t_p: int = 20,
    t_h: int = 10,
    stride: int = 1,
    chunk_id: int = 0,
    offset: int = 0,
) -> list[WindowPair]:
    """
    Slide a (T_p + T_h)-day window over ``returns`` (days x N).

    ``features`` (days x N x U) defaults to the returns alone. Series
    shorter than one window give an empty list.
    """
    if t_p < 1 or t_h < 1 or stride < 1:
        raise ArgumentError(f"need T_p, T_h, stride >= 1, got ({t_p}, {t_h}, {stride})")
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2:
        raise StructuralError(f"returns must be days x N, got shape {r.shape}")
    feats = r[:, :, None] if features is None else np.asarray(features, dtype=np.float64)
    if feats.ndim != 3 or feats.shape[:2] != r.shape:
        raise StructuralError(f"features {feats.shape} do not align with returns {r.shape}")

    count = window_count(r.shape[0], t_p, t_h, stride)
    if count == 0:
        logger.warning("series of %d days is shorter than T_p + T_h = %d", r.shape[0], t_p + t_h)
        return []
    n = r.shape[1]
    out = []
    for w in range(count):
        s = w * stride
        past = feats[s : s + t_p].transpose(1, 0, 2).reshape(n, -1)
        future = r[s + t_p : s + t_p + t_h].T
        out.append(WindowPair(past.copy(), future.copy(), (chunk_id, offset + s)))
    return out


def chunk_split(
    series,
    chunk_len: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> dict[str, list[Chunk]]:
    """
    Cut the day axis into contiguous chunks, shuffle them with ``seed`` and
    deal out floor(ratio * n) chunks to validation and test (at least one
    each); the rest go to training. Trailing days short of a chunk are dropped.
    """
    length = series if isinstance(series, (int, np.integer)) else len(series)
    if chunk_len < 1:
        raise ArgumentError(f"chunk_len must be >= 1, got {chunk_len}")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ArgumentError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    n = length // chunk_len
    if n < 3:
        raise DataError(f"{length} days give {n} chunks of {chunk_len}; need at least 3")
    if length % chunk_len:
        logger.info("dropping %d trailing days that do not fill a chunk", length % chunk_len)

    n_val = max(1, math.floor(ratios[1] * n))
    n_test = max(1, math.floor(ratios[2] * n))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise DataError(f"{n} chunks leave nothing for training")

    order = np.random.default_rng(seed).permutation(n)
    cuts = {"train": order[:n_train], "val": order[n_train : n_train + n_val], "test": order[n_train + n_val :]}
    return {
        name: [Chunk(int(c), int(c) * chunk_len, (int(c) + 1) * chunk_len) for c in sorted(ids)]
        for name, ids in cuts.items()
    }


def split_windows(
    returns,
    features,
    chunks: dict[str, list[Chunk]],
    t_p: int,
    t_h: int,
    stride: int = 1,
) -> dict[str, list[WindowPair]]:
    """Windows per split, each confined to one chunk."""
    r = np.asarray(returns, dtype=np.float64)
    feats = r[:, :, None] if features is None else np.asarray(features, dtype=np.float64)
    out: dict[str, list[WindowPair]] = {}
    for name in SPLITS:
        pairs = []
        for c in chunks.get(name, []):
            if len(c) < t_p + t_h:
                raise ArgumentError(f"chunk length {len(c)} is shorter than T_p + T_h = {t_p + t_h}")
            pairs.extend(
                window_dataset(r[c.start : c.stop], feats[c.start : c.stop], t_p, t_h, stride, c.chunk_id, c.start)
            )
        out[name] = pairs
    logger.info(
        "windows: %s", ", ".join(f"{k}={len(v)}" for k, v in out.items())
    )
    return out
