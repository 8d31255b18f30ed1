"""SMOTE oversampling of minority labels.

Synthetic points interpolate between a minority record and one of its ``k``
nearest same-label neighbours, in z-scored feature space.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..bendsem import LABELS
from ..featex import BOOLEAN_DIMS, INTEGER_DIMS, FeatureRecord
from ..model import DomainError
from .rng import SplitMix64


@dataclass
class SmoteDraw:
    """Provenance of one synthetic sample (indices refer to the input records)."""

    label: int
    base: int
    neighbour: int
    u: float
    z: np.ndarray  # standardized, before rounding


@dataclass
class SmoteResult:
    records: list[FeatureRecord]
    draws: list[SmoteDraw]
    mean: np.ndarray
    scale: np.ndarray
    neighbours: dict  # record index -> list of its k nearest same-label indices


def _round_valid(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    for d in BOOLEAN_DIMS:
        x[d] = float(np.clip(np.floor(x[d] + 0.5), 0, 1))
    for d, (lo, hi) in INTEGER_DIMS.items():
        x[d] = float(np.clip(np.floor(x[d] + 0.5), lo, hi if hi is not None else np.inf))
    return x


def smote_detailed(records: Sequence[FeatureRecord], k: int = 5, target_ratio: float = 1.0,
                   seed: int = 0) -> SmoteResult:
    if k < 1:
        raise DomainError("k must be >= 1")
    records = list(records)
    if not records:
        return SmoteResult([], [], np.zeros(0), np.zeros(0), {})
    X = np.array([r.values for r in records], dtype=float)
    y = np.array([r.label.value for r in records])
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale

    counts = np.bincount(y, minlength=len(LABELS))
    majority = counts.max()
    target = math.ceil(target_ratio * majority)
    rng = SplitMix64(seed)
    out = list(records)
    draws: list[SmoteDraw] = []
    neighbours: dict = {}
    for c in range(len(LABELS)):
        need = target - counts[c]
        if need <= 0:
            continue
        members = np.flatnonzero(y == c)
        if len(members) == 0:
            warnings.warn(f"label {LABELS[c].name} has no samples; cannot oversample it")
            continue
        if len(members) == 1:
            raise DomainError(f"label {LABELS[c].name} has a single sample; SMOTE needs a neighbour")
        kk = k
        if k > len(members) - 1:
            kk = len(members) - 1
            warnings.warn(f"k={k} too large for label {LABELS[c].name} ({len(members)} samples); using {kk}")
        Zc = Z[members]
        sq = (Zc ** 2).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * Zc @ Zc.T
        np.fill_diagonal(d2, np.inf)
        nn = np.argsort(d2, axis=1, kind="stable")[:, :kk]
        for a, row in enumerate(nn):
            neighbours[int(members[a])] = [int(members[b]) for b in row]
        for _ in range(need):
            a = rng.randbelow(len(members))
            b = int(nn[a, rng.randbelow(kk)])
            u = rng.random()
            z = Zc[a] + u * (Zc[b] - Zc[a])
            x = _round_valid(z * scale + mean)
            draws.append(SmoteDraw(c, int(members[a]), int(members[b]), u, z))
            out.append(FeatureRecord(None, -1, tuple(float(v) for v in x), LABELS[c], synthetic=True))
    return SmoteResult(out, draws, mean, scale, neighbours)


def smote(records: Sequence[FeatureRecord], k: int = 5, target_ratio: float = 1.0,
          seed: int = 0) -> list[FeatureRecord]:
    """Originals followed by synthetic minority records until every label reaches
    ``target_ratio`` times the majority count."""
    return smote_detailed(records, k, target_ratio, seed).records
