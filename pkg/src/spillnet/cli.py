"""Command-line pipeline: simulate benchmark panels, turn a CSV panel into a
spillover graph with uncertainty, and run the ranking benchmark.

Exit codes: 0 success, 1 user/config error, 2 numeric failure.  All output
files embed the resolved configuration (including seed and version) so any
run can be reproduced byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BenchmarkConfig, run_benchmark
from .errors import NumericError
from .graph import (
    build_graph,
    find_h_star,
    graph_to_dot,
    graph_to_json_dict,
    network_measures,
    rank_nodes,
)
from .mts import check_stationarity, first_difference, read_csv, zscore
from .posterior import fit, point_params, sample_posterior
from .simulate import (
    ErrorSpec,
    NetworkSpec,
    chain_scenario,
    generate_network,
    simulate_lotka_volterra,
    simulate_var,
    write_scenario,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract reserves 2 for
    # numeric failures, so remap usage errors to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def _resolved_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func" and not k.startswith("_")}
    cfg["version"] = __version__
    return cfg


def _spawn_seeds(seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def cmd_simulate(args: argparse.Namespace) -> int:
    _require(args.T >= 2, "--T must be at least 2")
    _require(args.seed >= 0, "--seed must be non-negative")
    cfg = _resolved_config(args)
    out = Path(args.out)
    net_seed, sim_seed = _spawn_seeds(args.seed, 2)

    if args.topology == "lv":
        x, truth = simulate_lotka_volterra(
            d=args.d, T=args.T, noise_sd=args.noise_sd, seed=sim_seed
        )
    elif args.topology == "chain":
        truth = chain_scenario()
        x = simulate_var(truth, T=args.T, burn_in=args.burn_in, seed=sim_seed)
    else:
        spec = NetworkSpec(
            topology=args.topology,
            d=args.d,
            n_source=args.n_source,
            n_sink=args.n_sink,
            autocorr=args.autocorr,
            seed=net_seed,
        )
        truth = generate_network(spec, ErrorSpec(rho=args.rho))
        x = simulate_var(truth, T=args.T, burn_in=args.burn_in, seed=sim_seed)

    csv_path = out.with_suffix(".csv")
    truth_path = out.parent / (out.name + "_truth.json")
    write_scenario(x, truth, csv_path, truth_path, config=cfg)
    print(f"wrote {csv_path} ({x.T}x{x.d}) and {truth_path}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    _require(args.p >= 1, "--p must be at least 1")
    _require(args.M >= 2, "--M must be at least 2")
    _require(args.h is None or args.h >= 1, "--h must be at least 1")
    _require(args.H_max >= 2, "--H-max must be at least 2")
    _require(args.epsilon > 0, "--epsilon must be positive")
    _require(0 < args.hpdi_mass < 1, "--hpdi-mass must lie in (0, 1)")
    _require(0 <= args.edge_percentile <= 100, "--edge-percentile must lie in [0, 100]")
    cfg = _resolved_config(args)

    x = read_csv(args.input)
    if args.zscore:
        x = zscore(x)
    if args.difference:
        x = first_difference(x)

    post = fit(x, args.p)
    report = check_stationarity(point_params(post).phis)
    if not report.is_stationary and not args.difference:
        print(
            f"warning: fitted dynamics look non-stationary "
            f"(max eigenvalue modulus {report.max_modulus:.3f}); consider --difference",
            file=sys.stderr,
        )

    draws = sample_posterior(post, args.M, seed=args.seed)
    h_star_info = None
    if args.find_h_star:
        trace = find_h_star(draws, h_max=args.H_max, epsilon=args.epsilon)
        h_used = trace.h_star
        h_star_info = {
            "h_star": trace.h_star,
            "converged": trace.converged,
            "epsilon": trace.epsilon,
            "H_max": args.H_max,
        }
        state = "converged" if trace.converged else "did not converge"
        print(f"horizon search {state}: h* = {trace.h_star} (epsilon = {args.epsilon})")
    else:
        h_used = args.h

    g = build_graph(draws, h_used, labels=x.labels)
    measures = network_measures(g, mass=args.hpdi_mass)

    extras = {
        "config": cfg,
        "stationarity": {
            "eigen_moduli": list(report.eigen_moduli),
            "is_stationary": report.is_stationary,
            "max_modulus": report.max_modulus,
        },
    }
    if h_star_info:
        extras["horizon_search"] = h_star_info

    out = Path(args.out)
    json_path = out.parent / (out.name + "_graph.json")
    dot_path = out.parent / (out.name + "_graph.dot")
    csv_path = out.parent / (out.name + "_measures.csv")
    payload = graph_to_json_dict(g, measures, mass=args.hpdi_mass, extras=extras)
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    dot_path.write_text(
        f"// {json.dumps(cfg, sort_keys=True)}\n" + graph_to_dot(g, percentile=args.edge_percentile)
    )

    lines = ["# " + json.dumps(cfg, sort_keys=True)]
    lines.append(
        "node,influence_mean,influence_hpdi_lo,influence_hpdi_hi,"
        "vulnerability_mean,vulnerability_hpdi_lo,vulnerability_hpdi_hi"
    )
    for i, lab in enumerate(g.labels):
        inf, vul = measures.influence[i], measures.vulnerability[i]
        lines.append(
            f"{lab},{inf.mean!r},{inf.hpdi_lo!r},{inf.hpdi_hi!r},"
            f"{vul.mean!r},{vul.hpdi_lo!r},{vul.hpdi_hi!r}"
        )
    csv_path.write_text("\n".join(lines) + "\n")

    top = rank_nodes(measures, by="influence")[0]
    top_share = measures.influence[g.labels.index(top)].mean
    print(f"h={h_used}: spillover index {measures.spillover_index.mean:.1f}")
    print(f"top influence: {top} ({top_share:.1f}% of total spillover)")
    print(f"wrote {json_path}, {dot_path}, {csv_path}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    _require(args.replicates >= 1, "--replicates must be at least 1")
    _require(0 < args.fdr_q < 1, "--fdr-q must lie in (0, 1)")
    _require(args.M >= 2, "--M must be at least 2")
    topologies = tuple(s.strip() for s in args.topologies.split(",") if s.strip())
    rhos = tuple(float(s) for s in args.rhos.split(",") if s.strip())
    h_values = tuple(int(s) for s in args.h_values.split(",") if s.strip())
    _require(all(h >= 1 for h in h_values), "--h-values must all be at least 1")
    cfg = _resolved_config(args)

    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    config = BenchmarkConfig(
        topologies=topologies,
        rhos=rhos,
        replicates=args.replicates,
        d=args.d,
        n_source=args.n_source,
        n_sink=args.n_sink,
        T=args.T,
        p=args.p,
        M=args.M,
        h_values=h_values,
        fdr_q=args.fdr_q,
        seed=args.seed,
        external_scores=args.external_scores,
    )
    result = run_benchmark(config)

    out = Path(args.out)
    provenance = "# " + json.dumps(cfg, sort_keys=True) + "\n"
    out.write_text(provenance + result.to_table().to_csv())
    details_path = out.parent / (out.stem + "_details" + out.suffix)
    details_path.write_text(provenance + result.to_details().to_csv(index=False))
    print(f"wrote {out} and {details_path}")

    if all(not cell.values for cell in result.cells.values()):
        print("error: every benchmark cell failed", file=sys.stderr)
        return 2
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="spillnet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spillnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a panel with known structure")
    sim.add_argument("--topology", required=True, choices=("dag", "cyclic", "bipartite", "chain", "lv"))
    sim.add_argument("--d", type=int, default=20)
    sim.add_argument("--T", type=int, default=500)
    sim.add_argument("--n-source", type=int, default=5, dest="n_source")
    sim.add_argument("--n-sink", type=int, default=5, dest="n_sink")
    sim.add_argument("--autocorr", type=float, default=0.5)
    sim.add_argument("--rho", type=float, default=0.0, help="pairwise shock covariance")
    sim.add_argument("--burn-in", type=int, default=200, dest="burn_in")
    sim.add_argument("--noise-sd", type=float, default=0.0, dest="noise_sd")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output prefix for CSV + truth JSON")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="fit a CSV panel and export its spillover graph")
    ana.add_argument("--input", required=True)
    ana.add_argument("--out", required=True, help="output prefix")
    ana.add_argument("--p", type=int, default=1)
    ana.add_argument("--M", type=int, default=500)
    ana.add_argument("--seed", type=int, default=0)
    horizon = ana.add_mutually_exclusive_group(required=True)
    horizon.add_argument("--h", type=int)
    horizon.add_argument("--find-h-star", action="store_true", dest="find_h_star")
    ana.add_argument("--H-max", type=int, default=50, dest="H_max")
    ana.add_argument("--epsilon", type=float, default=0.1)
    ana.add_argument("--hpdi-mass", type=float, default=0.95, dest="hpdi_mass")
    ana.add_argument("--difference", action="store_true")
    ana.add_argument("--zscore", action="store_true")
    ana.add_argument("--edge-percentile", type=float, default=80.0, dest="edge_percentile")
    ana.set_defaults(func=cmd_analyze)

    ben = sub.add_parser("benchmark", help="rank-accuracy benchmark on simulated networks")
    ben.add_argument("--topologies", default="dag,cyclic,bipartite")
    ben.add_argument("--rhos", default="0.0")
    ben.add_argument("--replicates", type=int, default=5)
    ben.add_argument("--d", type=int, default=20)
    ben.add_argument("--n-source", type=int, default=5, dest="n_source")
    ben.add_argument("--n-sink", type=int, default=5, dest="n_sink")
    ben.add_argument("--T", type=int, default=500)
    ben.add_argument("--p", type=int, default=1)
    ben.add_argument("--M", type=int, default=500)
    ben.add_argument("--h-values", default="1,5,10", dest="h_values")
    ben.add_argument("--fdr-q", type=float, default=0.05, dest="fdr_q")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--external-scores", default=None, dest="external_scores")
    ben.add_argument("--out", required=True)
    ben.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
