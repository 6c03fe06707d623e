import json

import numpy as np
import pytest

from spillnet import (
    ErrorSpec,
    NetworkSpec,
    NumericError,
    check_stationarity,
    chain_scenario,
    generate_network,
    simulate_lotka_volterra,
    simulate_var,
)
from spillnet.fevd import FevdAccumulator
from spillnet.simulate import GroundTruth, read_truth, write_scenario


def roles_of(truth):
    out = {}
    for lab, grade in zip(truth.labels, truth.relevance):
        out[lab] = {1.0: "source", 0.5: "intermediary", 0.0: "sink"}[grade]
    return out


class TestGenerateNetwork:
    def test_dag_triangular_under_topological_order(self):
        truth = generate_network(NetworkSpec("dag", d=20, n_source=5, n_sink=5, seed=0))
        report = check_stationarity(truth.phi1)
        assert report.max_modulus <= 1e-10
        assert np.all(np.diag(truth.phi1) == 0.0)
        # a zero-modulus matrix is nilpotent, i.e. triangular under some permutation
        assert np.linalg.matrix_power(truth.phi1, 20).max() == pytest.approx(0.0, abs=1e-12)

    def test_dag_source_sink_purity(self):
        truth = generate_network(NetworkSpec("dag", d=15, n_source=4, n_sink=4, seed=3))
        idx = {lab: i for i, lab in enumerate(truth.labels)}
        for lab in truth.source_labels:
            assert not np.any(truth.phi1[idx[lab], :] != 0), "sources receive nothing"
            assert np.any(truth.phi1[:, idx[lab]] != 0), "sources emit something"
        for lab in truth.sink_labels:
            assert not np.any(truth.phi1[:, idx[lab]] != 0), "sinks emit nothing"
            assert np.any(truth.phi1[idx[lab], :] != 0), "sinks receive something"

    def test_relevance_counts(self):
        truth = generate_network(NetworkSpec("dag", d=20, n_source=5, n_sink=6, seed=1))
        grades = np.asarray(truth.relevance)
        assert (grades == 1.0).sum() == 5
        assert (grades == 0.0).sum() == 6
        assert (grades == 0.5).sum() == 9

    def test_bipartite_block_structure(self):
        truth = generate_network(NetworkSpec("bipartite", d=20, n_source=10, n_sink=10, seed=2))
        idx = {lab: i for i, lab in enumerate(truth.labels)}
        sources = [idx[lab] for lab in truth.source_labels]
        sinks = [idx[lab] for lab in truth.sink_labels]
        mask = np.zeros((20, 20), dtype=bool)
        mask[np.ix_(sinks, sources)] = True
        assert not np.any(truth.phi1[~mask] != 0)
        out_degrees = (truth.phi1[:, sources] != 0).sum(axis=0)
        in_degrees = (truth.phi1[sinks, :] != 0).sum(axis=1)
        assert np.all(out_degrees == 2) and np.all(in_degrees == 2)

    def test_bipartite_requires_full_split(self):
        with pytest.raises(ValueError):
            generate_network(NetworkSpec("bipartite", d=20, n_source=5, n_sink=5, seed=0))

    def test_cyclic_diagonal_before_rescale(self):
        # small weights: no rescale needed, so the diagonal keeps the requested value
        spec = NetworkSpec("cyclic", d=8, n_source=2, n_sink=2, autocorr=0.3, seed=4)
        truth = generate_network(spec)
        report = check_stationarity(truth.phi1)
        assert report.max_modulus <= 0.95 + 1e-9
        diag = np.diag(truth.phi1)
        assert np.allclose(diag, diag[0])  # uniform autocorrelation, possibly rescaled
        if report.max_modulus < 0.95 - 1e-9:
            assert diag[0] == pytest.approx(0.3)

    def test_cyclic_contains_a_cycle(self):
        truth = generate_network(NetworkSpec("cyclic", d=12, n_source=3, n_sink=3, seed=5))
        off = truth.phi1.copy()
        np.fill_diagonal(off, 0.0)
        reach = (off != 0).astype(float)
        total = np.zeros_like(reach)
        power = np.eye(12)
        for _ in range(12):
            power = power @ reach
            total += power
        assert np.any(np.diag(total) > 0), "no directed cycle beyond self-loops"

    def test_cyclic_needs_intermediaries(self):
        with pytest.raises(ValueError):
            generate_network(NetworkSpec("cyclic", d=6, n_source=3, n_sink=3, seed=0))

    def test_custom_roles_derived(self):
        phi = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0]])
        truth = generate_network(NetworkSpec("custom", d=3, n_source=1, n_sink=1, phi1=phi))
        assert roles_of(truth) == {"n01": "source", "n02": "intermediary", "n03": "sink"}

    def test_every_generated_network_stationary(self):
        for seed in range(8):
            for topo, ns, nk in (("dag", 5, 5), ("cyclic", 5, 5), ("bipartite", 10, 10)):
                truth = generate_network(NetworkSpec(topo, d=20, n_source=ns, n_sink=nk, seed=seed))
                assert check_stationarity(truth.phi1).is_stationary

    def test_seed_reproducibility(self):
        a = generate_network(NetworkSpec("dag", d=10, n_source=3, n_sink=3, seed=9))
        b = generate_network(NetworkSpec("dag", d=10, n_source=3, n_sink=3, seed=9))
        np.testing.assert_array_equal(a.phi1, b.phi1)


class TestErrorSpec:
    @pytest.mark.parametrize("rho", [0.0, 0.1, 0.3, 0.5, 0.7, 0.9])
    def test_equicorrelation_spd(self, rho):
        sigma = ErrorSpec(rho=rho).matrix(20)
        eigvals = np.linalg.eigvalsh(sigma)
        assert eigvals.min() > 0
        if rho > 0:
            assert eigvals.min() == pytest.approx(1.0 - rho, abs=1e-12)

    def test_rejects_unusable_rho(self):
        with pytest.raises(ValueError):
            ErrorSpec(rho=-0.5).matrix(20)
        with pytest.raises(ValueError):
            ErrorSpec(rho=1.0).matrix(5)


class TestSimulateVar:
    def test_deterministic_under_seed(self):
        truth = generate_network(NetworkSpec("dag", d=6, n_source=2, n_sink=2, seed=0))
        a = simulate_var(truth, T=50, seed=4)
        b = simulate_var(truth, T=50, seed=4)
        np.testing.assert_array_equal(a.values, b.values)

    def test_shapes_and_labels(self):
        truth = generate_network(NetworkSpec("dag", d=6, n_source=2, n_sink=2, seed=0))
        x = simulate_var(truth, T=77, seed=1)
        assert x.values.shape == (77, 6)
        assert x.labels == truth.labels

    def test_vanishing_noise_decays_to_zero(self):
        phi = 0.5 * np.eye(2)
        truth = GroundTruth(
            phi1=phi,
            sigma_a=1e-24 * np.eye(2),
            labels=("a", "b"),
            source_labels=frozenset(),
            sink_labels=frozenset(),
            relevance=(0.5, 0.5),
        )
        x = simulate_var(truth, T=60, burn_in=0, seed=0)
        assert np.abs(x.values[-1]).max() < np.abs(x.values[0]).max() * 1e-6

    def test_ar_half_sample_autocorrelation(self):
        truth = GroundTruth(
            phi1=0.5 * np.eye(2),
            sigma_a=np.eye(2),
            labels=("a", "b"),
            source_labels=frozenset(),
            sink_labels=frozenset(),
            relevance=(0.5, 0.5),
        )
        x = simulate_var(truth, T=100_000, seed=8)
        v = x.values
        for j in range(2):
            lag1 = np.corrcoef(v[1:, j], v[:-1, j])[0, 1]
            assert lag1 == pytest.approx(0.5, abs=0.02)

    def test_rejects_nonstationary_truth(self):
        truth = GroundTruth(
            phi1=1.05 * np.eye(2),
            sigma_a=np.eye(2),
            labels=("a", "b"),
            source_labels=frozenset(),
            sink_labels=frozenset(),
            relevance=(0.5, 0.5),
        )
        with pytest.raises(NumericError, match="non-stationary"):
            simulate_var(truth, T=10)

    def test_rejects_truth_without_coefficients(self):
        _, truth = simulate_lotka_volterra(d=4, T=10)
        with pytest.raises(ValueError):
            simulate_var(truth, T=10)


class TestChainScenario:
    def test_structure(self):
        truth = chain_scenario()
        report = check_stationarity(truth.phi1)
        assert report.is_stationary
        assert report.max_modulus <= 1.0
        idx = {lab: i for i, lab in enumerate(truth.labels)}
        for src, dst in (("n1", "n2"), ("n1", "n3"), ("n3", "n4"), ("n4", "n5")):
            assert truth.phi1[idx[dst], idx[src]] != 0

    def test_terminal_node_gets_no_direct_input_from_origin(self):
        truth = chain_scenario()
        assert truth.phi1[4, 2] == 0.0  # the n3 -> n5 route exists only via n4

    def test_indirect_edge_grows_then_plateaus(self):
        truth = chain_scenario()
        acc = FevdAccumulator(truth.phi1[None, None], truth.sigma_a[None])
        shares = []
        for h in range(1, 26):
            if h > 1:
                acc.step()
            shares.append(100.0 * acc.normalized()[0].T[2, 4])
        assert shares[0] < 1.0
        assert all(shares[i + 1] > shares[i] for i in range(1, 9))
        assert abs(shares[-1] - shares[-2]) < 0.2

    def test_direct_edge_peaks_early_then_declines(self):
        truth = chain_scenario()
        acc = FevdAccumulator(truth.phi1[None, None], truth.sigma_a[None])
        e45 = []
        for h in range(1, 13):
            if h > 1:
                acc.step()
            e45.append(100.0 * acc.normalized()[0].T[3, 4])
        peak = int(np.argmax(e45))
        assert peak <= 4
        assert e45[-1] < e45[peak]


class TestLotkaVolterra:
    def test_classic_two_species_conserved_quantity(self):
        alpha, beta, gamma, delta = 1.2, 0.2, 1.1, 0.05
        x, _ = simulate_lotka_volterra(d=2, params=(alpha, beta, gamma, delta), T=150, seed=1)
        pred, prey = x.values[:, 0], x.values[:, 1]
        invariant = delta * prey - gamma * np.log(prey) + beta * pred - alpha * np.log(pred)
        drift = np.abs(invariant - invariant[0]) / abs(invariant[0])
        assert drift.max() < 0.01

    def test_multispecies_panel_positive_and_oscillatory(self):
        x, truth = simulate_lotka_volterra(d=20, T=1000, seed=2)
        assert x.values.shape == (1000, 20)
        assert np.all(x.values > 0)
        # every species should move through maxima and minima, not settle
        for j in range(20):
            col = x.values[:, j]
            assert col.max() > 1.2 * col.min()
        assert len(truth.source_labels) == 10
        assert all(lab.startswith("pred") for lab in truth.source_labels)
        assert all(lab.startswith("prey") for lab in truth.sink_labels)

    def test_zero_coupling_decouples(self):
        x, _ = simulate_lotka_volterra(d=2, params=(1.2, 0.0, 1.1, 0.0), T=20, seed=3)
        pred, prey = x.values[:, 0], x.values[:, 1]
        assert np.all(np.diff(prey) > 0), "prey grows exponentially"
        assert np.all(np.diff(pred) < 0), "predators decay"

    def test_blowup_reports_time_index(self):
        with pytest.raises(NumericError, match="time index"):
            simulate_lotka_volterra(d=2, params=(1.2, 0.2, 1.1, 0.05), T=50, dt=5.0, seed=0)

    def test_deterministic_under_seed(self):
        a, _ = simulate_lotka_volterra(d=6, T=50, seed=11)
        b, _ = simulate_lotka_volterra(d=6, T=50, seed=11)
        np.testing.assert_array_equal(a.values, b.values)

    def test_observation_noise_applied_after_integration(self):
        clean, _ = simulate_lotka_volterra(d=4, T=30, seed=5, noise_sd=0.0)
        noisy, _ = simulate_lotka_volterra(d=4, T=30, seed=5, noise_sd=0.5)
        assert not np.array_equal(clean.values, noisy.values)
        assert np.abs(noisy.values - clean.values).mean() < 2.0

    def test_rejects_odd_d(self):
        with pytest.raises(ValueError):
            simulate_lotka_volterra(d=5, T=10)


class TestScenarioFiles:
    def test_roundtrip(self, tmp_path):
        truth = generate_network(NetworkSpec("dag", d=8, n_source=2, n_sink=2, seed=6))
        x = simulate_var(truth, T=40, seed=6)
        csv_path = tmp_path / "panel.csv"
        truth_path = tmp_path / "panel_truth.json"
        write_scenario(x, truth, csv_path, truth_path, config={"seed": 6})
        back = read_truth(truth_path)
        np.testing.assert_allclose(back.phi1, truth.phi1)
        assert back.source_labels == truth.source_labels
        assert back.relevance == truth.relevance
        payload = json.loads(truth_path.read_text())
        assert payload["config"] == {"seed": 6}
