"""Spillover graphs over posterior draws: edge construction, horizon search,
network measures, and credible intervals.

Edges are indexed [source][target] in percent: entry (k, j) is the share of
j's forecast-error variance explained by shocks to k, averaged over draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .fevd import FevdAccumulator
from .posterior import PosteriorDraws

EDGE_SUM_TOL = 1e-6


class Estimate(NamedTuple):
    """Posterior mean with the bounds of its highest-density interval."""

    mean: float
    hpdi_lo: float
    hpdi_hi: float


@dataclass(frozen=True)
class SpilloverGraph:
    """Posterior-mean edge matrix at one horizon plus the per-draw samples."""

    mean_edges: np.ndarray    # (d, d), [source][target], percent
    edge_samples: np.ndarray  # (M, d, d)
    h: int
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        m, d, _ = self.edge_samples.shape
        if self.mean_edges.shape != (d, d) or len(self.labels) != d:
            raise ValueError("inconsistent edge/label dimensions")
        col_sums = self.edge_samples.sum(axis=1)
        if np.abs(col_sums - 100.0).max() > EDGE_SUM_TOL:
            raise ValueError("per-draw incoming edges must sum to 100 for every target")

    @property
    def d(self) -> int:
        return self.mean_edges.shape[0]

    @property
    def M(self) -> int:
        return self.edge_samples.shape[0]


@dataclass(frozen=True)
class NetworkMeasures:
    """System-wide spillover index and per-node vulnerability/influence scores."""

    spillover_index: Estimate
    vulnerability: tuple[Estimate, ...]
    influence: tuple[Estimate, ...]
    h: int
    labels: tuple[str, ...]
    influence_excluded: int = 0


@dataclass(frozen=True)
class HorizonTrace:
    """Mean edge matrices for h = 1..h_star and the convergence verdict."""

    per_h_mean_edges: tuple[np.ndarray, ...]
    h_star: int
    converged: bool
    epsilon: float


def hpdi(samples: Sequence[float] | np.ndarray, mass: float) -> tuple[float, float]:
    """Shortest contiguous interval of sorted samples holding ceil(mass * M)
    points; ties go to the earliest window."""
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    n = s.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must lie strictly between 0 and 1")
    # back off one ulp-ish so e.g. 0.6 * 5 == 3.0000000000000004 still gives 3
    width = max(int(np.ceil(mass * n - 1e-9)), 1)
    spans = s[width - 1 :] - s[: n - width + 1]
    i = int(np.argmin(spans))
    return float(s[i]), float(s[i + width - 1])


def _mean_edges_percent(normalized: np.ndarray) -> np.ndarray:
    return 100.0 * normalized.transpose(0, 2, 1).mean(axis=0)


def build_graph(
    draws: PosteriorDraws, h: int, labels: Sequence[str] | None = None
) -> SpilloverGraph:
    """Spillover graph at horizon h: per-draw normalized variance shares in
    percent, transposed to [source][target], averaged across draws."""
    if h < 1:
        raise ValueError("horizon must be >= 1")
    if labels is None:
        labels = tuple(f"z{i + 1}" for i in range(draws.d))
    labels = tuple(labels)
    if len(labels) != draws.d:
        raise ValueError(f"got {len(labels)} labels for {draws.d} components")
    acc = FevdAccumulator(draws.phis, draws.sigmas)
    while acc.h < h:
        acc.step()
    edge_samples = 100.0 * acc.normalized().transpose(0, 2, 1)
    return SpilloverGraph(
        mean_edges=edge_samples.mean(axis=0),
        edge_samples=edge_samples,
        h=h,
        labels=labels,
    )


def find_h_star(draws: PosteriorDraws, h_max: int, epsilon: float) -> HorizonTrace:
    """Sweep horizons until every mean edge moves less than epsilon
    (percentage points) from the previous horizon.

    Returns the first such horizon, or h_max with ``converged=False`` if the
    sweep never settles.
    """
    if h_max < 2:
        raise ValueError("h_max must be >= 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    acc = FevdAccumulator(draws.phis, draws.sigmas)
    trace = [_mean_edges_percent(acc.normalized())]
    while acc.h < h_max:
        acc.step()
        trace.append(_mean_edges_percent(acc.normalized()))
        if np.abs(trace[-1] - trace[-2]).max() < epsilon:
            return HorizonTrace(
                per_h_mean_edges=tuple(trace),
                h_star=acc.h,
                converged=True,
                epsilon=float(epsilon),
            )
    return HorizonTrace(
        per_h_mean_edges=tuple(trace),
        h_star=h_max,
        converged=False,
        epsilon=float(epsilon),
    )


def network_measures(g: SpilloverGraph, mass: float = 0.95) -> NetworkMeasures:
    """Per-draw spillover index, vulnerability, and influence, summarized by
    posterior means and highest-density intervals.

    Draws whose spillover index is zero leave influence undefined; they are
    excluded from the influence summaries and counted.
    """
    es = g.edge_samples
    m, d, _ = es.shape
    diag = np.einsum("mkk->mk", es)
    received = es.sum(axis=1) - diag   # vulnerability of each target, per draw
    emitted = es.sum(axis=2) - diag    # outgoing spillover of each source, per draw
    index = emitted.sum(axis=1)

    valid = index > 0
    excluded = int(m - valid.sum())
    if valid.any():
        influence_samples = 100.0 * emitted[valid] / index[valid, None]
        influence = tuple(
            Estimate(float(influence_samples[:, k].mean()), *hpdi(influence_samples[:, k], mass))
            if influence_samples.shape[0] >= 2
            else Estimate(float(influence_samples[0, k]), float(influence_samples[0, k]), float(influence_samples[0, k]))
            for k in range(d)
        )
    else:
        influence = tuple(Estimate(float("nan"), float("nan"), float("nan")) for _ in range(d))

    vulnerability = tuple(
        Estimate(float(received[:, j].mean()), *hpdi(received[:, j], mass)) for j in range(d)
    )
    return NetworkMeasures(
        spillover_index=Estimate(float(index.mean()), *hpdi(index, mass)),
        vulnerability=vulnerability,
        influence=influence,
        h=g.h,
        labels=g.labels,
        influence_excluded=excluded,
    )


def rank_nodes(measures: NetworkMeasures, by: str = "influence") -> tuple[str, ...]:
    """Labels sorted by mean score descending; ties break lexicographically."""
    if by == "influence":
        scores = [e.mean for e in measures.influence]
    elif by == "vulnerability":
        scores = [e.mean for e in measures.vulnerability]
    else:
        raise ValueError(f"unknown ranking measure: {by!r}")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], measures.labels[i]))
    return tuple(measures.labels[i] for i in order)


def graph_to_json_dict(
    g: SpilloverGraph,
    measures: NetworkMeasures | None = None,
    mass: float = 0.95,
    extras: dict | None = None,
) -> dict:
    """JSON-ready view: nodes with score triples, directed edges with
    credible intervals.  Self-shares are reported per node, not as edges."""
    if measures is None:
        measures = network_measures(g, mass)
    nodes = []
    for i, lab in enumerate(g.labels):
        nodes.append(
            {
                "label": lab,
                "self_share": float(g.mean_edges[i, i]),
                "influence": measures.influence[i]._asdict(),
                "vulnerability": measures.vulnerability[i]._asdict(),
            }
        )
    edges = []
    for k in range(g.d):
        for j in range(g.d):
            if j == k:
                continue
            lo, hi = hpdi(g.edge_samples[:, k, j], mass)
            edges.append(
                {
                    "source": g.labels[k],
                    "target": g.labels[j],
                    "h": g.h,
                    "mean": float(g.mean_edges[k, j]),
                    "hpdi_lo": lo,
                    "hpdi_hi": hi,
                }
            )
    out = {
        "h": g.h,
        "hpdi_mass": mass,
        "labels": list(g.labels),
        "nodes": nodes,
        "edges": edges,
        "spillover_index": measures.spillover_index._asdict(),
        "influence_excluded_draws": measures.influence_excluded,
    }
    if extras:
        out.update(extras)
    return out


def graph_to_dot(g: SpilloverGraph, percentile: float = 80.0) -> str:
    """DOT rendering of the off-diagonal edges: pen width scales with mean
    weight; edges at or below the given percentile of off-diagonal weights
    are omitted."""
    if not 0.0 <= percentile <= 100.0:
        raise ValueError("percentile must lie in [0, 100]")
    off_mask = ~np.eye(g.d, dtype=bool)
    off_vals = g.mean_edges[off_mask]
    threshold = float(np.percentile(off_vals, percentile)) if off_vals.size else 0.0
    top = float(off_vals.max()) if off_vals.size else 1.0
    lines = ["digraph spillover {", "  rankdir=LR;"]
    for lab in g.labels:
        lines.append(f'  "{lab}";')
    for k in range(g.d):
        for j in range(g.d):
            if j == k:
                continue
            w = float(g.mean_edges[k, j])
            if w <= threshold:
                continue
            pen = 0.5 + 4.5 * (w / top if top > 0 else 0.0)
            lines.append(
                f'  "{g.labels[k]}" -> "{g.labels[j]}" [penwidth={pen:.2f}, label="{w:.1f}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"
