"""Point-estimate VAR baseline graphs, classical centralities, and graded
ranking evaluation for the source/sink identification benchmarks.

The baseline recovers a static predictive-edge graph from per-coefficient
t-tests with Benjamini-Hochberg control, ranks nodes with standard graph
centralities, and is scored against spillover-graph rankings by NDCG.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
from scipy import stats

from .errors import NumericError
from .fevd import FevdAccumulator
from .graph import SpilloverGraph, network_measures
from .mts import MTS
from .posterior import build_design, fit, sample_posterior
from .simulate import ErrorSpec, GroundTruth, NetworkSpec, generate_network, simulate_var

logger = logging.getLogger("spillnet.benchmark")

VAR_METHODS = ("VAR-Between", "VAR-Closeness", "VAR-Degree", "VAR-Eigen")
TASKS = ("source", "sink")
SCORE_TIE_EPS = 1e-12


@dataclass(frozen=True)
class NgcGraph:
    """Boolean predictive-edge graph: adjacency[j, k] marks a surviving
    k -> j lag coefficient (self-lags are never tested)."""

    adjacency: np.ndarray
    weights: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.adjacency.shape != self.weights.shape:
            raise ValueError("adjacency and weights must have matching shapes")
        if np.any(self.adjacency & ~np.isfinite(self.weights)):
            raise ValueError("significant edges must carry finite weights")

    @property
    def d(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degenerate(self) -> bool:
        """True when no cross edges survive multiple testing."""
        off = self.adjacency & ~np.eye(self.d, dtype=bool)
        return not bool(off.any())


def benjamini_hochberg(pvalues: np.ndarray, q: float) -> np.ndarray:
    """Boolean rejection mask controlling the false-discovery rate at q."""
    p = np.asarray(pvalues, dtype=float).ravel()
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = q * (np.arange(1, m + 1) / m)
    passing = np.nonzero(p[order] <= thresholds)[0]
    mask = np.zeros(m, dtype=bool)
    if passing.size:
        mask[order[: passing[-1] + 1]] = True
    return mask


def fit_ngc(x: MTS, p: int = 1, fdr_q: float = 0.05) -> NgcGraph:
    """Least-squares VAR fit with two-sided t-tests per cross coefficient.

    Standard errors are the per-equation homoskedastic OLS ones; all d*(d-1)*p
    cross-lag hypotheses enter one Benjamini-Hochberg pass at level fdr_q.
    An edge k -> j is kept when any of its lags survives.
    """
    z, design = build_design(x, p)
    n, k = design.shape
    d = z.shape[1]
    dof = n - k
    if dof < 1:
        raise NumericError(f"too few observations for t-tests: {n} rows, {k} regressors")
    xtx = design.T @ design
    if np.linalg.cond(xtx) > 1e12:
        raise NumericError("singular design matrix")
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ design.T @ z
    resid = z - design @ beta
    sigma2 = (resid**2).sum(axis=0) / dof
    se = np.sqrt(np.outer(np.diag(xtx_inv), sigma2))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(se > 0, beta / se, np.inf)
    pvals = 2.0 * stats.t.sf(np.abs(tstats), df=dof)

    rows, targets, lag_p = [], [], []
    for lag in range(p):
        for src in range(d):
            row = 1 + lag * d + src
            for tgt in range(d):
                if src == tgt:
                    continue
                rows.append(row)
                targets.append(tgt)
                lag_p.append(pvals[row, tgt])
    keep = benjamini_hochberg(np.asarray(lag_p), fdr_q)

    adjacency = np.zeros((d, d), dtype=bool)
    weights = np.zeros((d, d))
    best_abs_t = np.full((d, d), -np.inf)
    for lag in range(p):
        block = beta[1 + lag * d : 1 + (lag + 1) * d, :].T  # [target][source]
        tblock = np.abs(tstats[1 + lag * d : 1 + (lag + 1) * d, :].T)
        better = tblock > best_abs_t
        weights = np.where(better, block, weights)
        best_abs_t = np.maximum(best_abs_t, tblock)
    for flag, row, tgt in zip(keep, rows, targets):
        if flag:
            src = (row - 1) % d
            adjacency[tgt, src] = True
    return NgcGraph(adjacency=adjacency, weights=weights, labels=x.labels)


def _eigencentrality(adjacency: np.ndarray) -> np.ndarray:
    """In-edge eigenvector centrality by power iteration; collapses to zeros
    when the graph is nilpotent (no meaningful ranking exists)."""
    d = adjacency.shape[0]
    a = adjacency.astype(float)
    vec = np.ones(d) / d
    for _ in range(200):
        nxt = a @ vec
        norm = np.linalg.norm(nxt)
        if norm < 1e-12:
            return np.zeros(d)
        vec = nxt / norm
    return vec


def centralities(g: NgcGraph) -> dict[str, np.ndarray]:
    """Standard directed-graph centralities; degenerate graphs score zero
    everywhere."""
    d = g.d
    names = ("in_degree", "out_degree", "eigen", "betweenness", "closeness")
    if g.degenerate:
        return {name: np.zeros(d) for name in names}
    off = g.adjacency & ~np.eye(d, dtype=bool)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(d))
    graph.add_edges_from((k, j) for j in range(d) for k in range(d) if off[j, k])
    between = nx.betweenness_centrality(graph, normalized=False)
    close = nx.closeness_centrality(graph)
    return {
        "in_degree": off.sum(axis=1).astype(float),
        "out_degree": off.sum(axis=0).astype(float),
        "eigen": _eigencentrality(off),
        "betweenness": np.array([between[i] for i in range(d)]),
        "closeness": np.array([close[i] for i in range(d)]),
    }


def ndcg(scores, relevance, cutoff: int | None = None) -> float:
    """Normalized discounted cumulative gain with graded relevance.

    Candidates are ordered by score descending; exact score ties are broken
    pessimistically (least relevant first), so the result is the worst NDCG
    attainable by any ordering consistent with the scores.
    """
    scores = np.asarray(scores, dtype=float)
    relevance = np.asarray(relevance, dtype=float)
    d = scores.size
    if relevance.size != d:
        raise ValueError("scores and relevance must have equal length")
    if not np.any(relevance > 0):
        raise ValueError("relevance grades are all zero; the task is undefined")
    if cutoff is None:
        cutoff = d
    if not 1 <= cutoff <= d:
        raise ValueError(f"cutoff must lie in [1, {d}]")
    order = sorted(range(d), key=lambda i: (-scores[i], relevance[i]))
    discounts = 1.0 / np.log2(np.arange(2, cutoff + 2))
    dcg = float(np.sum(relevance[order[:cutoff]] * discounts))
    ideal = np.sort(relevance)[::-1]
    idcg = float(np.sum(ideal[:cutoff] * discounts))
    return dcg / idcg


@dataclass(frozen=True)
class BenchmarkConfig:
    """One benchmark run: topology/error grids, replicate count, and the
    estimation settings shared by all methods."""

    topologies: tuple[str, ...] = ("dag", "cyclic", "bipartite")
    rhos: tuple[float, ...] = (0.0,)
    replicates: int = 5
    d: int = 20
    n_source: int = 5
    n_sink: int = 5
    T: int = 500
    p: int = 1
    M: int = 500
    h_values: tuple[int, ...] = (1, 5, 10)
    fdr_q: float = 0.05
    burn_in: int = 200
    seed: int = 0
    external_scores: str | None = None

    def layout_for(self, topology: str) -> tuple[int, int]:
        # Bipartite graphs have no intermediaries, so the split must cover d.
        if topology == "bipartite" and self.n_source + self.n_sink != self.d:
            return self.d // 2, self.d - self.d // 2
        return self.n_source, self.n_sink


@dataclass(frozen=True)
class CellStats:
    """NDCG values for one (config, method, task) cell plus exclusion counts."""

    values: tuple[float, ...] = ()
    n_degenerate: int = 0
    n_indistinguishable: int = 0
    n_failed: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def sd(self) -> float:
        if len(self.values) >= 2:
            return float(np.std(self.values, ddof=1))
        return 0.0 if self.values else float("nan")

    def formatted(self) -> str:
        if not self.values:
            if self.n_indistinguishable > max(self.n_degenerate, self.n_failed):
                return "†"
            return "---"
        return f"{self.mean:.3f} ± {self.sd:.3f}"


@dataclass(frozen=True)
class BenchmarkResult:
    config: BenchmarkConfig
    cells: dict[tuple[str, float, str, str], CellStats]

    def methods(self) -> list[str]:
        seen = {key[2] for key in self.cells}
        bsg = sorted((m for m in seen if m.startswith("BSG-h")), key=lambda m: int(m[5:]))
        var = [m for m in VAR_METHODS if m in seen]
        other = sorted(seen - set(bsg) - set(var))
        return bsg + var + other

    def to_table(self) -> pd.DataFrame:
        """Method rows by (topology, rho, task) columns of "mean ± sd" cells."""
        columns = []
        for topo in self.config.topologies:
            for rho in self.config.rhos:
                for task in TASKS:
                    columns.append((topo, rho, task))
        rows = {}
        for method in self.methods():
            rows[method] = [
                self.cells.get((t, r, method, task), CellStats()).formatted()
                for t, r, task in columns
            ]
        names = [f"{t} rho={r:g} {task}" for t, r, task in columns]
        frame = pd.DataFrame.from_dict(rows, orient="index", columns=names)
        frame.index.name = "method"
        return frame

    def to_details(self) -> pd.DataFrame:
        """Tidy full-precision view, one row per cell."""
        records = []
        for (topo, rho, method, task), cell in sorted(self.cells.items()):
            records.append(
                {
                    "topology": topo,
                    "rho": rho,
                    "method": method,
                    "task": task,
                    "mean": cell.mean,
                    "sd": cell.sd,
                    "n_valid": len(cell.values),
                    "n_degenerate": cell.n_degenerate,
                    "n_indistinguishable": cell.n_indistinguishable,
                    "n_failed": cell.n_failed,
                }
            )
        return pd.DataFrame.from_records(records)


def _bsg_scores(x: MTS, config: BenchmarkConfig, seed: int) -> dict[int, dict[str, np.ndarray]]:
    """Influence/vulnerability mean scores at every requested horizon from a
    single posterior sample and one horizon sweep."""
    post = fit(x, config.p)
    draws = sample_posterior(post, config.M, seed=seed)
    wanted = sorted(set(config.h_values))
    acc = FevdAccumulator(draws.phis, draws.sigmas)
    out: dict[int, dict[str, np.ndarray]] = {}
    while True:
        if acc.h in wanted:
            edge_samples = 100.0 * acc.normalized().transpose(0, 2, 1)
            g = SpilloverGraph(
                mean_edges=edge_samples.mean(axis=0),
                edge_samples=edge_samples,
                h=acc.h,
                labels=x.labels,
            )
            m = network_measures(g)
            out[acc.h] = {
                "source": np.array([e.mean for e in m.influence]),
                "sink": np.array([e.mean for e in m.vulnerability]),
            }
        if acc.h >= wanted[-1]:
            return out
        acc.step()


def _external_scores(
    directory: str, method: str, rep: int, labels: tuple[str, ...]
) -> np.ndarray | None:
    path = Path(directory) / f"{method}__rep{rep}.csv"
    if not path.exists():
        return None
    frame = pd.read_csv(path, comment="#")
    by_label = dict(zip(frame["node_label"].astype(str), frame["score"].astype(float)))
    if set(by_label) != set(labels):
        raise ValueError(f"external scores in {path} do not cover the node labels")
    return np.array([by_label[lab] for lab in labels])


def _external_methods(directory: str | None) -> list[str]:
    if not directory:
        return []
    return sorted({p.name.split("__rep")[0] for p in Path(directory).glob("*__rep*.csv")})


def run_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    """Score every method on every (topology, rho, replicate) cell.

    All methods see the same simulated panel within a replicate.  Baseline
    replicates whose recovered graph is degenerate, whose scores cannot
    distinguish nodes, or whose fit fails numerically are excluded from the
    cell mean and counted instead of raising.
    """
    if config.replicates < 1:
        raise ValueError("need at least one replicate")
    raw: dict[tuple[str, float, str, str], dict[str, list]] = {}

    def record(key, value=None, flag=None):
        slot = raw.setdefault(key, {"values": [], "deg": 0, "ind": 0, "fail": 0})
        if value is not None:
            slot["values"].append(float(value))
        else:
            slot[flag] += 1

    externals = _external_methods(config.external_scores)
    for ti, topo in enumerate(config.topologies):
        n_source, n_sink = config.layout_for(topo)
        for ri, rho in enumerate(config.rhos):
            for rep in range(config.replicates):
                t0 = time.perf_counter()
                seeds = np.random.SeedSequence(
                    entropy=config.seed, spawn_key=(ti, ri, rep)
                ).generate_state(3)
                truth = generate_network(
                    NetworkSpec(
                        topology=topo,
                        d=config.d,
                        n_source=n_source,
                        n_sink=n_sink,
                        seed=int(seeds[0]),
                    ),
                    ErrorSpec(rho=rho),
                )
                x = simulate_var(truth, config.T, burn_in=config.burn_in, seed=int(seeds[1]))
                rel = {task: truth.relevance_for(task) for task in TASKS}

                try:
                    scores_by_h = _bsg_scores(x, config, seed=int(seeds[2]))
                    for h, per_task in scores_by_h.items():
                        for task in TASKS:
                            record(
                                (topo, rho, f"BSG-h{h}", task),
                                ndcg(per_task[task], rel[task]),
                            )
                except NumericError:
                    for h in config.h_values:
                        for task in TASKS:
                            record((topo, rho, f"BSG-h{h}", task), flag="fail")

                try:
                    ngc = fit_ngc(x, config.p, config.fdr_q)
                    cent = centralities(ngc)
                    per_method = {
                        "VAR-Between": {"source": cent["betweenness"], "sink": cent["betweenness"]},
                        "VAR-Closeness": {"source": cent["closeness"], "sink": cent["closeness"]},
                        "VAR-Degree": {"source": cent["out_degree"], "sink": cent["in_degree"]},
                        "VAR-Eigen": {"source": cent["eigen"], "sink": cent["eigen"]},
                    }
                    for method, per_task in per_method.items():
                        for task in TASKS:
                            key = (topo, rho, method, task)
                            if ngc.degenerate:
                                record(key, flag="deg")
                            elif np.ptp(per_task[task]) < SCORE_TIE_EPS:
                                record(key, flag="ind")
                            else:
                                record(key, ndcg(per_task[task], rel[task]))
                except NumericError:
                    for method in VAR_METHODS:
                        for task in TASKS:
                            record((topo, rho, method, task), flag="fail")

                for method in externals:
                    scores = _external_scores(config.external_scores, method, rep, truth.labels)
                    for task in TASKS:
                        key = (topo, rho, method, task)
                        if scores is None:
                            record(key, flag="fail")
                        elif np.ptp(scores) < SCORE_TIE_EPS:
                            record(key, flag="ind")
                        else:
                            record(key, ndcg(scores, rel[task]))

                logger.info(
                    "cell topology=%s rho=%g rep=%d finished in %.2fs",
                    topo,
                    rho,
                    rep,
                    time.perf_counter() - t0,
                )

    cells = {
        key: CellStats(
            values=tuple(slot["values"]),
            n_degenerate=slot["deg"],
            n_indistinguishable=slot["ind"],
            n_failed=slot["fail"],
        )
        for key, slot in raw.items()
    }
    return BenchmarkResult(config=config, cells=cells)
