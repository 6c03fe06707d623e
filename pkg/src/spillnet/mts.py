"""Multivariate time-series container, stationarity diagnostics, and preprocessing.

Everything here is a pure function over immutable inputs; callers may share
objects freely across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

TIMESTAMP_COLUMN = "timestamp"


@dataclass(frozen=True)
class MTS:
    """A T x d panel of real-valued observations with one label per component."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("values must be a 2D array of shape (T, d)")
        t, d = vals.shape
        if t < 2:
            raise ValueError(f"need at least 2 observations, got T={t}")
        if d < 2:
            raise ValueError(f"need at least 2 components, got d={d}")
        labels = tuple(str(lab) for lab in self.labels)
        if len(labels) != d:
            raise ValueError(f"got {len(labels)} labels for {d} components")
        if len(set(labels)) != len(labels):
            raise ValueError("component labels must be distinct")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values contain non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StationarityReport:
    """Eigenvalue magnitudes of the companion matrix, sorted descending."""

    eigen_moduli: tuple[float, ...]
    is_stationary: bool
    max_modulus: float


def read_csv(path: str | Path) -> MTS:
    """Load an MTS from CSV: header row of labels, one observation per row.

    A leading column named ``timestamp`` is parsed and ignored; lines starting
    with ``#`` are treated as comments (the writers in this package emit a
    provenance comment).
    """
    frame = pd.read_csv(path, comment="#")
    if frame.shape[1] >= 1 and frame.columns[0].strip().lower() == TIMESTAMP_COLUMN:
        frame = frame.drop(columns=frame.columns[0])
    labels = tuple(str(c).strip() for c in frame.columns)
    values = frame.to_numpy(dtype=float)
    return MTS(values=values, labels=labels)


def write_csv(x: MTS, path: str | Path, provenance: dict | None = None) -> None:
    """Write an MTS as CSV, optionally with a leading ``#`` provenance line."""
    lines = []
    if provenance is not None:
        lines.append("# " + json.dumps(provenance, sort_keys=True))
    lines.append(",".join(x.labels))
    for row in x.values:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def first_difference(x: MTS) -> MTS:
    """Row-to-row differences; output has T-1 rows and the same labels."""
    if x.T < 2:
        raise ValueError("differencing needs at least 2 observations")
    return MTS(values=np.diff(x.values, axis=0), labels=x.labels)


def zscore(x: MTS) -> MTS:
    """Standardize each component to zero mean and unit variance."""
    sd = x.values.std(axis=0, ddof=0)
    if np.any(sd == 0):
        dead = [lab for lab, s in zip(x.labels, sd) if s == 0]
        raise ValueError(f"cannot z-score constant component(s): {dead}")
    return MTS(values=(x.values - x.values.mean(axis=0)) / sd, labels=x.labels)


def companion_matrix(coeffs: Sequence[np.ndarray]) -> np.ndarray:
    """Stack lag coefficient matrices into the (p*d) x (p*d) companion form."""
    mats = [np.asarray(c, dtype=float) for c in coeffs]
    if not mats:
        raise ValueError("need at least one coefficient matrix")
    d = mats[0].shape[0]
    for c in mats:
        if c.ndim != 2 or c.shape != (d, d):
            raise ValueError(f"coefficient matrices must all be {d}x{d}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficient matrices contain non-finite entries")
    p = len(mats)
    comp = np.zeros((p * d, p * d))
    comp[:d, :] = np.hstack(mats)
    if p > 1:
        comp[d:, : (p - 1) * d] = np.eye((p - 1) * d)
    return comp


def check_stationarity(coeffs: Sequence[np.ndarray]) -> StationarityReport:
    """Stationarity of a lag polynomial via companion-matrix eigenvalue moduli.

    A single d x d array is accepted as shorthand for a one-lag model.
    """
    if isinstance(coeffs, np.ndarray) and coeffs.ndim == 2:
        coeffs = [coeffs]
    comp = companion_matrix(coeffs)
    moduli = np.sort(np.abs(np.linalg.eigvals(comp)))[::-1]
    max_mod = float(moduli[0])
    return StationarityReport(
        eigen_moduli=tuple(float(m) for m in moduli),
        is_stationary=bool(max_mod < 1.0),
        max_modulus=max_mod,
    )
