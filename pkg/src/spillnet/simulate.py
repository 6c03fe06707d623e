"""Ground-truth generators for benchmarks: structured VAR(1) networks
(acyclic, cyclic, bipartite), a five-node chain with a slow indirect route,
and a multispecies predator-prey system.

Generators are pure given (spec, seed); node labels are zero-padded so that
lexicographic and numeric orders agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError
from .mts import MTS, check_stationarity, write_csv

TOPOLOGIES = ("dag", "cyclic", "bipartite", "custom")
CYCLIC_RADIUS_CAP = 0.95


@dataclass(frozen=True)
class NetworkSpec:
    """Configuration for a structured random network."""

    topology: str
    d: int
    n_source: int
    n_sink: int
    autocorr: float = 0.5
    weight_dist: str = "uniform"
    seed: int = 0
    phi1: np.ndarray | None = None  # only for topology="custom"

    def __post_init__(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if self.weight_dist != "uniform":
            raise ValueError("only uniform(0,1) edge weights are supported")
        if self.d < 2:
            raise ValueError("need d >= 2 nodes")
        if self.n_source < 1 or self.n_sink < 1:
            raise ValueError("need at least one source and one sink")
        if self.n_source + self.n_sink > self.d:
            raise ValueError("n_source + n_sink must not exceed d")


@dataclass(frozen=True)
class ErrorSpec:
    """Equicorrelated shock covariance: unit-scale diagonal, common pairwise
    covariance rho."""

    sigma_diag: float = 1.0
    rho: float = 0.0

    def matrix(self, d: int) -> np.ndarray:
        if self.sigma_diag <= 0:
            raise ValueError("sigma_diag must be positive")
        if not (-1.0 / (d - 1) < self.rho < self.sigma_diag):
            raise ValueError(
                f"rho={self.rho} gives a non-positive-definite covariance for d={d}"
            )
        return self.rho * np.ones((d, d)) + (self.sigma_diag - self.rho) * np.eye(d)


@dataclass(frozen=True)
class GroundTruth:
    """A generating process plus the node roles used by ranking benchmarks.

    ``relevance`` holds the source-task grades (source 1, intermediary 0.5,
    sink 0); the sink task swaps the 1 and 0 grades.  ``phi1`` is None for
    nonlinear systems that have no linear coefficient matrix.
    """

    phi1: np.ndarray | None
    sigma_a: np.ndarray
    labels: tuple[str, ...]
    source_labels: frozenset[str]
    sink_labels: frozenset[str]
    relevance: tuple[float, ...]
    topology: str = "custom"

    def __post_init__(self) -> None:
        d = len(self.labels)
        if len(self.relevance) != d:
            raise ValueError("one relevance grade per node required")
        for lab, grade in zip(self.labels, self.relevance):
            if (grade == 1.0) != (lab in self.source_labels):
                raise ValueError("relevance grade 1 must mark exactly the source nodes")
            if (grade == 0.0) != (lab in self.sink_labels):
                raise ValueError("relevance grade 0 must mark exactly the sink nodes")

    @property
    def d(self) -> int:
        return len(self.labels)

    def relevance_for(self, task: str) -> np.ndarray:
        """Graded relevance vector for the 'source' or 'sink' ranking task."""
        grades = np.asarray(self.relevance, dtype=float)
        if task == "source":
            return grades
        if task == "sink":
            return 1.0 - grades
        raise ValueError(f"unknown task: {task!r}")


def _role_relevance(roles: list[str]) -> tuple[float, ...]:
    grade = {"source": 1.0, "intermediary": 0.5, "sink": 0.0}
    return tuple(grade[r] for r in roles)


def _sample_distinct(rng: np.random.Generator, candidates: list[int], count: int) -> list[int]:
    take = min(count, len(candidates))
    if take == 0:
        return []
    return list(rng.choice(candidates, size=take, replace=False))


INTERMEDIARY_IN_DEGREE = 2
SINK_IN_DEGREE = 6


def _layered_edges(
    rng: np.random.Generator, d: int, n_source: int, n_sink: int
) -> set[tuple[int, int]]:
    """Forward edges over topological positions 0..d-1 (source block first,
    sink block last).  Intermediaries relay: each draws 2 parent edges from
    the sources.  Sinks aggregate: each draws 6 parent edges from the
    non-sink positions, so receivers clearly out-receive relays.  Emitting
    degrees emerge from the draws (mean about 2 per non-sink node); the set
    is redrawn until every source emits at least once."""
    first_sink = d - n_sink
    inters = list(range(n_source, first_sink))
    sinks = list(range(first_sink, d))
    for _ in range(100):
        edges: set[tuple[int, int]] = set()
        for q in inters:
            for src in _sample_distinct(rng, list(range(n_source)), INTERMEDIARY_IN_DEGREE):
                edges.add((src, q))
        for t in sinks:
            for src in _sample_distinct(rng, list(range(first_sink)), SINK_IN_DEGREE):
                edges.add((src, t))
        emitting = {src for src, _ in edges}
        if all(s in emitting for s in range(n_source)):
            return edges
    raise NumericError("could not place edges with every source emitting")


def generate_network(spec: NetworkSpec, errors: ErrorSpec | None = None) -> GroundTruth:
    """Draw a stationary coefficient matrix with the requested topology.

    Edge weights are uniform on (0, 1).  Acyclic and bipartite graphs are
    nilpotent, hence stationary by construction; cyclic graphs add a common
    autocorrelation on the diagonal plus a two-cycle between intermediaries
    and are rescaled when the spectral radius exceeds 0.95.
    """
    errors = errors or ErrorSpec()
    rng = np.random.default_rng(spec.seed)
    d = spec.d
    order = rng.permutation(d)  # node index occupying each topological position

    if spec.topology == "custom":
        if spec.phi1 is None:
            raise ValueError("custom topology requires an explicit phi1")
        phi1 = np.asarray(spec.phi1, dtype=float)
        if phi1.shape != (d, d):
            raise ValueError(f"phi1 must be {d}x{d}")
        roles = []
        off = phi1 - np.diag(np.diag(phi1))
        for j in range(d):
            incoming = np.any(off[j, :] != 0)
            outgoing = np.any(off[:, j] != 0)
            if outgoing and not incoming:
                roles.append("source")
            elif incoming and not outgoing:
                roles.append("sink")
            else:
                roles.append("intermediary")
    elif spec.topology == "bipartite":
        if spec.n_source + spec.n_sink != d:
            raise ValueError("bipartite graphs need n_source + n_sink == d")
        phi1 = np.zeros((d, d))
        sources = order[: spec.n_source]
        sinks = order[spec.n_source :]
        if spec.n_source == spec.n_sink:
            # union of two disjoint matchings: every source emits exactly 2
            # edges and every sink receives exactly 2
            half = spec.n_source
            first = rng.permutation(half)
            while True:
                second = rng.permutation(half)
                if not np.any(first == second):
                    break
            for i in range(half):
                phi1[sinks[first[i]], sources[i]] = rng.uniform()
                phi1[sinks[second[i]], sources[i]] = rng.uniform()
        else:
            for j in sinks:
                for k in _sample_distinct(rng, list(sources), 2):
                    phi1[j, k] = rng.uniform()
            for k in sources:
                if not np.any(phi1[:, k] != 0):
                    phi1[rng.choice(sinks), k] = rng.uniform()
        roles_by_node = {int(n): "source" for n in sources}
        roles_by_node.update({int(n): "sink" for n in sinks})
        roles = [roles_by_node[j] for j in range(d)]
    else:
        if spec.topology == "cyclic" and d - spec.n_source - spec.n_sink < 2:
            raise ValueError("cyclic topology needs at least two intermediaries")
        positions = _layered_edges(rng, d, spec.n_source, spec.n_sink)
        if spec.topology == "cyclic":
            inters = list(range(spec.n_source, d - spec.n_sink))
            a, b = sorted(_sample_distinct(rng, inters, 2))
            positions.add((a, b))
            positions.add((b, a))
        phi1 = np.zeros((d, d))
        for src_pos, dst_pos in sorted(positions):
            phi1[order[dst_pos], order[src_pos]] = rng.uniform()
        if spec.topology == "cyclic":
            phi1[np.diag_indices(d)] = spec.autocorr
            radius = np.abs(np.linalg.eigvals(phi1)).max()
            if radius > CYCLIC_RADIUS_CAP:
                phi1 *= CYCLIC_RADIUS_CAP / radius
        role_of_pos = (
            ["source"] * spec.n_source
            + ["intermediary"] * (d - spec.n_source - spec.n_sink)
            + ["sink"] * spec.n_sink
        )
        roles = [""] * d
        for pos, node in enumerate(order):
            roles[node] = role_of_pos[pos]

    report = check_stationarity(phi1)
    if not report.is_stationary:
        raise NumericError(
            f"generated coefficients are not stationary (max modulus {report.max_modulus:.4f})"
        )
    labels = tuple(f"n{j + 1:02d}" for j in range(d))
    return GroundTruth(
        phi1=phi1,
        sigma_a=errors.matrix(d),
        labels=labels,
        source_labels=frozenset(labels[j] for j in range(d) if roles[j] == "source"),
        sink_labels=frozenset(labels[j] for j in range(d) if roles[j] == "sink"),
        relevance=_role_relevance(roles),
        topology=spec.topology,
    )


def simulate_var(truth: GroundTruth, T: int, burn_in: int = 200, seed: int = 0) -> MTS:
    """Forward-simulate the lag-1 recursion with Gaussian shocks, discarding
    the first ``burn_in`` rows."""
    if truth.phi1 is None:
        raise ValueError("ground truth carries no linear coefficient matrix")
    if T < 1:
        raise ValueError("T must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    report = check_stationarity(truth.phi1)
    if not report.is_stationary:
        raise NumericError(
            f"refusing to simulate a non-stationary system (max modulus {report.max_modulus:.4f})"
        )
    d = truth.d
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(truth.sigma_a + 0.0)
    state = rng.standard_normal(d)
    shocks = rng.standard_normal((burn_in + T, d)) @ chol.T
    out = np.empty((T, d))
    for t in range(burn_in + T):
        state = truth.phi1 @ state + shocks[t]
        if t >= burn_in:
            out[t - burn_in] = state
    return MTS(values=out, labels=truth.labels)


# Five-node chain: a hub feeds two neighbors, and a persistent node relays
# n3 -> n4 -> n5, so shocks to n3 reach n5 only at horizons >= 2 and keep
# accumulating while n3's own autocorrelation echoes.
CHAIN_PHI1 = np.array(
    [
        # n1    n2    n3    n4    n5      (source of the effect)
        [0.00, 0.00, 0.00, 0.00, 0.00],  # -> n1
        [0.50, 0.20, 0.00, 0.00, 0.00],  # -> n2
        [0.25, 0.00, 0.87, 0.00, 0.00],  # -> n3
        [0.00, 0.00, 0.95, 0.20, 0.00],  # -> n4
        [0.00, 0.00, 0.00, 0.95, 0.20],  # -> n5
    ]
)


def chain_scenario() -> GroundTruth:
    """The documented five-node chain used to study indirect spillover: n1 and
    n3 emit, n5 only receives, and the n3 -> n5 route runs through n4."""
    labels = ("n1", "n2", "n3", "n4", "n5")
    return GroundTruth(
        phi1=CHAIN_PHI1.copy(),
        sigma_a=np.eye(5),
        labels=labels,
        source_labels=frozenset({"n1", "n3"}),
        sink_labels=frozenset({"n5"}),
        relevance=(1.0, 0.5, 1.0, 0.5, 0.0),
        topology="custom",
    )


def simulate_lotka_volterra(
    d: int,
    params: tuple[float, float, float, float] = (1.2, 0.2, 1.1, 0.05),
    T: int = 1000,
    dt: float = 0.01,
    stride: int = 10,
    noise_sd: float = 0.0,
    seed: int = 0,
) -> tuple[MTS, GroundTruth]:
    """Multispecies predator-prey panel: d/2 predators and d/2 prey, each
    predator hunting two prey and each prey hunted by two predators, in a
    ring coupling.

    Parameters (alpha, beta, gamma, delta) are the prey growth, predation
    pressure, predator decay, and predation gain rates.  Integration is
    fixed-step fourth-order Runge-Kutta at ``dt``, sampled every ``stride``
    steps starting from the initial state; optional i.i.d. Gaussian
    observation noise is added to the sampled panel.  Predators count as
    sources and prey as sinks for ranking tasks.
    """
    if d < 2 or d % 2:
        raise ValueError("d must be an even number of species >= 2")
    alpha, beta, gamma, delta = (float(v) for v in params)
    if alpha <= 0 or gamma <= 0 or beta < 0 or delta < 0:
        raise ValueError("growth/decay rates must be positive, coupling non-negative")
    if T < 2 or dt <= 0 or stride < 1:
        raise ValueError("need T >= 2, dt > 0, stride >= 1")
    half = d // 2
    hunts = [sorted({j, (j + 1) % half}) for j in range(half)]  # prey per predator
    preyed_by = [[j for j in range(half) if i in hunts[j]] for i in range(half)]

    rng = np.random.default_rng(seed)
    # start near the coexistence point (or at unit populations when decoupled)
    prey_eq = gamma / (delta * 2) if delta > 0 else 1.0
    pred_eq = alpha / (beta * 2) if beta > 0 else 1.0
    pred = pred_eq * (1.0 + rng.uniform(-0.4, 0.4, size=half))
    prey = prey_eq * (1.0 + rng.uniform(-0.4, 0.4, size=half))

    prey_pressure = np.zeros((half, half))  # predator j's effect on prey i
    pred_gain = np.zeros((half, half))      # prey i's effect on predator j
    for j in range(half):
        for i in hunts[j]:
            prey_pressure[i, j] = 1.0
            pred_gain[j, i] = 1.0

    def deriv(state: np.ndarray) -> np.ndarray:
        y, x = state[:half], state[half:]
        dx = x * (alpha - beta * (prey_pressure @ y))
        dy = y * (-gamma + delta * (pred_gain @ x))
        return np.concatenate([dy, dx])

    state = np.concatenate([pred, prey])
    samples = np.empty((T, d))
    samples[0] = state
    for n in range(1, T):
        for _ in range(stride):
            k1 = deriv(state)
            k2 = deriv(state + 0.5 * dt * k1)
            k3 = deriv(state + 0.5 * dt * k2)
            k4 = deriv(state + dt * k3)
            state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(state)) or np.any(state <= 0) or np.any(state > 1e9):
                raise NumericError(f"population blow-up at time index {n}")
        samples[n] = state
    if noise_sd > 0:
        samples = samples + rng.normal(0.0, noise_sd, size=samples.shape)

    labels = tuple(f"pred{j + 1:02d}" for j in range(half)) + tuple(
        f"prey{i + 1:02d}" for i in range(half)
    )
    truth = GroundTruth(
        phi1=None,
        sigma_a=noise_sd**2 * np.eye(d),
        labels=labels,
        source_labels=frozenset(labels[:half]),
        sink_labels=frozenset(labels[half:]),
        relevance=(1.0,) * half + (0.0,) * half,
        topology="custom",
    )
    return MTS(values=samples, labels=labels), truth


def write_scenario(
    x: MTS,
    truth: GroundTruth,
    csv_path: str | Path,
    truth_path: str | Path,
    config: dict | None = None,
) -> None:
    """Persist a simulated panel and its ground truth as a CSV/JSON pair."""
    write_csv(x, csv_path, provenance=config)
    payload = {
        "phi1": None if truth.phi1 is None else truth.phi1.tolist(),
        "sigma_a": truth.sigma_a.tolist(),
        "labels": list(truth.labels),
        "source_labels": sorted(truth.source_labels),
        "sink_labels": sorted(truth.sink_labels),
        "relevance": list(truth.relevance),
        "topology": truth.topology,
        "config": config or {},
    }
    Path(truth_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_truth(path: str | Path) -> GroundTruth:
    payload = json.loads(Path(path).read_text())
    phi1 = payload["phi1"]
    return GroundTruth(
        phi1=None if phi1 is None else np.asarray(phi1, dtype=float),
        sigma_a=np.asarray(payload["sigma_a"], dtype=float),
        labels=tuple(payload["labels"]),
        source_labels=frozenset(payload["source_labels"]),
        sink_labels=frozenset(payload["sink_labels"]),
        relevance=tuple(payload["relevance"]),
        topology=payload["topology"],
    )
