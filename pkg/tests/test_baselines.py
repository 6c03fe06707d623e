import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spillnet import (
    ErrorSpec,
    MTS,
    NetworkSpec,
    benjamini_hochberg,
    centralities,
    fit_ngc,
    generate_network,
    ndcg,
    simulate_var,
)
from spillnet.baselines import BenchmarkConfig, CellStats, NgcGraph, run_benchmark


def graph_from_adjacency(adj):
    adj = np.asarray(adj, dtype=bool)
    d = adj.shape[0]
    return NgcGraph(
        adjacency=adj,
        weights=adj.astype(float),
        labels=tuple(f"n{i}" for i in range(d)),
    )


class TestBenjaminiHochberg:
    def test_hand_case(self):
        mask = benjamini_hochberg(np.array([0.001, 0.02, 0.8]), q=0.05)
        assert mask.tolist() == [True, True, False]

    def test_rejects_all_when_tiny(self):
        assert benjamini_hochberg(np.array([1e-9, 1e-8]), 0.05).all()

    def test_rejects_none_when_uniform_large(self):
        assert not benjamini_hochberg(np.array([0.9, 0.8, 0.95]), 0.05).any()

    def test_null_false_discovery_rate(self):
        # complete null: any rejection is a false discovery, so the rejection
        # frequency across replicates bounds the FDR
        rng = np.random.default_rng(0)
        hits = 0
        reps = 200
        for _ in range(reps):
            hits += benjamini_hochberg(rng.uniform(size=150), q=0.05).any()
        assert hits / reps <= 0.05 + 3 * np.sqrt(0.05 * 0.95 / reps)

    def test_bad_q(self):
        with pytest.raises(ValueError):
            benjamini_hochberg(np.array([0.5]), q=0.0)


class TestFitNgc:
    def test_strong_edge_detected(self):
        phi = np.zeros((3, 3))
        phi[1, 0] = 0.8
        truth_labels = ("a", "b", "c")
        rng = np.random.default_rng(2)
        z = rng.standard_normal(3)
        rows = []
        for _ in range(600):
            z = phi @ z + rng.standard_normal(3)
            rows.append(z.copy())
        x = MTS(values=np.asarray(rows)[100:], labels=truth_labels)
        g = fit_ngc(x, p=1, fdr_q=0.05)
        assert g.adjacency[1, 0]
        assert not g.degenerate
        assert g.weights[1, 0] == pytest.approx(0.8, abs=0.15)

    def test_pure_noise_rarely_finds_edges(self):
        rng = np.random.default_rng(3)
        hits = 0
        reps = 40
        for _ in range(reps):
            x = MTS(values=rng.standard_normal((150, 4)), labels=("a", "b", "c", "d"))
            hits += not fit_ngc(x, p=1, fdr_q=0.05).degenerate
        assert hits / reps <= 0.05 + 3 * np.sqrt(0.05 * 0.95 / reps)

    def test_diagonal_never_marked(self):
        rng = np.random.default_rng(4)
        x = MTS(values=rng.standard_normal((200, 3)), labels=("a", "b", "c"))
        assert not np.any(np.diag(fit_ngc(x, p=1).adjacency))

    def test_degenerate_flag_semantics(self):
        assert graph_from_adjacency(np.eye(3)).degenerate  # self-loops only
        adj = np.eye(3, dtype=bool)
        adj[0, 1] = True
        assert not graph_from_adjacency(adj).degenerate

    def test_too_short_series(self):
        rng = np.random.default_rng(5)
        x = MTS(values=rng.standard_normal((6, 4)), labels=("a", "b", "c", "d"))
        with pytest.warns(UserWarning):
            with pytest.raises(Exception):
                fit_ngc(x, p=1)


class TestCentralities:
    def test_star_graph(self):
        # hub n0 emits to everyone; no two-hop paths, so betweenness is zero
        adj = np.zeros((4, 4), dtype=bool)
        adj[1:, 0] = True
        cent = centralities(graph_from_adjacency(adj))
        assert cent["out_degree"][0] == 3
        assert np.all(cent["out_degree"][1:] == 0)
        assert np.all(cent["betweenness"] == 0.0)

    def test_path_betweenness(self):
        # a -> b -> c: b carries the single shortest path, unnormalized count 1
        adj = np.zeros((3, 3), dtype=bool)
        adj[1, 0] = True
        adj[2, 1] = True
        cent = centralities(graph_from_adjacency(adj))
        np.testing.assert_array_equal(cent["betweenness"], [0.0, 1.0, 0.0])

    def test_betweenness_matches_bruteforce(self, rng):
        d = 8
        adj = rng.uniform(size=(d, d)) < 0.25
        np.fill_diagonal(adj, False)
        cent = centralities(graph_from_adjacency(adj))

        # oracle: enumerate all shortest paths with breadth-first search
        succ = {k: [j for j in range(d) if adj[j, k]] for k in range(d)}
        between = np.zeros(d)
        for s in range(d):
            for t in range(d):
                if s == t:
                    continue
                # collect all shortest s -> t paths
                paths, frontier = [], [[s]]
                found_len = None
                while frontier and found_len is None:
                    nxt = []
                    for path in frontier:
                        for nb in succ[path[-1]]:
                            if nb in path:
                                continue
                            new = path + [nb]
                            if nb == t:
                                paths.append(new)
                            else:
                                nxt.append(new)
                    if paths:
                        found_len = len(paths[0])
                    frontier = nxt
                if not paths:
                    continue
                shortest = min(len(p) for p in paths)
                paths = [p for p in paths if len(p) == shortest]
                for v in range(d):
                    if v in (s, t):
                        continue
                    between[v] += sum(v in p for p in paths) / len(paths)
        np.testing.assert_allclose(cent["betweenness"], between, atol=1e-9)

    def test_degenerate_graph_scores_zero(self):
        cent = centralities(graph_from_adjacency(np.zeros((5, 5))))
        for vec in cent.values():
            assert np.all(vec == 0.0)

    def test_in_out_degree_transpose_symmetry(self, rng):
        adj = rng.uniform(size=(6, 6)) < 0.3
        np.fill_diagonal(adj, False)
        fwd = centralities(graph_from_adjacency(adj))
        rev = centralities(graph_from_adjacency(adj.T))
        np.testing.assert_array_equal(fwd["out_degree"], rev["in_degree"])
        np.testing.assert_array_equal(fwd["in_degree"], rev["out_degree"])

    def test_eigen_zero_on_nilpotent(self):
        adj = np.zeros((3, 3), dtype=bool)
        adj[1, 0] = True
        adj[2, 1] = True
        cent = centralities(graph_from_adjacency(adj))
        assert np.all(cent["eigen"] == 0.0)


class TestNdcg:
    def test_perfect_ordering_is_one(self):
        assert ndcg([5.0, 4.0, 3.0, 2.0], [1.0, 0.5, 0.5, 0.0]) == pytest.approx(1.0)

    def test_reversed_order_frozen_value(self):
        # hand evaluation: DCG = 0.5/log2(3) + 0.5/log2(4) + 1/log2(5),
        # IDCG = 1 + 0.5/log2(3) + 0.5/log2(4)
        value = ndcg([0.0, 1.0, 2.0, 3.0], [1.0, 0.5, 0.5, 0.0])
        assert value == pytest.approx(0.6363230818084125, abs=1e-12)

    def test_all_tied_scores_pessimistic(self):
        # frozen minimum over orderings of (1, 0.5, 0)
        value = ndcg([1.0, 1.0, 1.0], [1.0, 0.5, 0.0])
        assert value == pytest.approx(0.6199062332840657, abs=1e-12)

    def test_tied_minimum_matches_bruteforce(self, rng):
        rel = rng.choice([0.0, 0.5, 1.0], size=5)
        if not rel.any():
            rel[0] = 1.0
        tied = ndcg(np.zeros(5), rel)
        discounts = 1.0 / np.log2(np.arange(2, 7))
        ideal = np.sort(rel)[::-1] @ discounts
        worst = min(np.asarray(perm) @ discounts / ideal for perm in itertools.permutations(rel))
        assert tied == pytest.approx(worst, abs=1e-12)

    def test_cutoff(self):
        full = ndcg([4.0, 3.0, 2.0, 1.0], [0.0, 1.0, 0.0, 0.0], cutoff=1)
        assert full == pytest.approx(0.0)

    def test_rejects_all_zero_relevance(self):
        with pytest.raises(ValueError):
            ndcg([1.0, 2.0], [0.0, 0.0])

    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=10),
        st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_bounds_and_monotone_invariance(self, scores, seed):
        rng = np.random.default_rng(seed)
        rel = rng.choice([0.0, 0.5, 1.0], size=len(scores))
        if not rel.any():
            rel[0] = 0.5
        value = ndcg(scores, rel)
        assert 0.0 <= value <= 1.0 + 1e-12
        transformed = ndcg([3.0 * s + 7.0 for s in scores], rel)
        assert value == pytest.approx(transformed, abs=1e-12)


class TestRunBenchmark:
    def test_smoke_table_shape(self, tmp_path):
        cfg = BenchmarkConfig(
            topologies=("dag",),
            rhos=(0.0,),
            replicates=2,
            d=10,
            n_source=3,
            n_sink=3,
            T=200,
            M=50,
            h_values=(1, 5),
            seed=0,
        )
        result = run_benchmark(cfg)
        table = result.to_table()
        assert list(table.index) == ["BSG-h1", "BSG-h5", "VAR-Between", "VAR-Closeness", "VAR-Degree", "VAR-Eigen"]
        assert table.shape == (6, 2)
        details = result.to_details()
        assert set(details.columns) >= {"topology", "rho", "method", "task", "mean", "sd", "n_degenerate"}
        cell = result.cells[("dag", 0.0, "BSG-h5", "source")]
        assert len(cell.values) == 2
        assert 0.0 <= cell.mean <= 1.0

    def test_same_panel_shared_across_methods(self):
        # determinism: rerunning the config reproduces every cell exactly
        cfg = BenchmarkConfig(
            topologies=("dag",), rhos=(0.0,), replicates=2, d=8, n_source=2,
            n_sink=2, T=150, M=40, h_values=(5,), seed=3,
        )
        a = run_benchmark(cfg)
        b = run_benchmark(cfg)
        for key, cell in a.cells.items():
            assert b.cells[key].values == cell.values

    def test_external_scores_hook(self, tmp_path):
        labels = [f"n{i + 1:02d}" for i in range(8)]
        for rep in range(2):
            lines = ["node_label,score"] + [f"{lab},{8 - i}.0" for i, lab in enumerate(labels)]
            (tmp_path / f"Oracle-Ext__rep{rep}.csv").write_text("\n".join(lines) + "\n")
        cfg = BenchmarkConfig(
            topologies=("dag",), rhos=(0.0,), replicates=2, d=8, n_source=2,
            n_sink=2, T=150, M=40, h_values=(5,), seed=3, external_scores=str(tmp_path),
        )
        result = run_benchmark(cfg)
        assert ("dag", 0.0, "Oracle-Ext", "source") in result.cells
        assert "Oracle-Ext" in result.to_table().index

    def test_cell_formatting(self):
        assert CellStats(values=(0.9, 1.0)).formatted() == "0.950 ± 0.071"
        assert CellStats(values=(), n_degenerate=5).formatted() == "---"
        assert CellStats(values=(), n_indistinguishable=5).formatted() == "†"
