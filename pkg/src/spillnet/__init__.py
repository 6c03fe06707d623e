"""Multi-horizon spillover graphs from multivariate time series, with
Bayesian uncertainty for edges and systemic-risk node scores."""

__version__ = "0.1.0"

from .errors import NumericError
from .mts import MTS, StationarityReport, check_stationarity, first_difference, read_csv, write_csv
from .posterior import (
    NiwPosterior,
    NiwPrior,
    PosteriorDraws,
    VarParams,
    build_design,
    compute_posterior,
    fit,
    load_draws,
    point_params,
    sample_posterior,
    save_draws,
)
from .fevd import FevdMatrix, PsiSequence, fevd, ma_coefficients
from .graph import (
    Estimate,
    HorizonTrace,
    NetworkMeasures,
    SpilloverGraph,
    build_graph,
    find_h_star,
    graph_to_dot,
    graph_to_json_dict,
    hpdi,
    network_measures,
    rank_nodes,
)
from .simulate import (
    ErrorSpec,
    GroundTruth,
    NetworkSpec,
    chain_scenario,
    generate_network,
    simulate_lotka_volterra,
    simulate_var,
)
from .baselines import (
    BenchmarkConfig,
    BenchmarkResult,
    NgcGraph,
    benjamini_hochberg,
    centralities,
    fit_ngc,
    ndcg,
    run_benchmark,
)

__all__ = [
    "MTS",
    "NumericError",
    "StationarityReport",
    "check_stationarity",
    "first_difference",
    "read_csv",
    "write_csv",
    "NiwPrior",
    "NiwPosterior",
    "PosteriorDraws",
    "VarParams",
    "build_design",
    "compute_posterior",
    "fit",
    "point_params",
    "sample_posterior",
    "save_draws",
    "load_draws",
    "PsiSequence",
    "FevdMatrix",
    "ma_coefficients",
    "fevd",
    "Estimate",
    "SpilloverGraph",
    "NetworkMeasures",
    "HorizonTrace",
    "hpdi",
    "build_graph",
    "find_h_star",
    "network_measures",
    "rank_nodes",
    "graph_to_json_dict",
    "graph_to_dot",
    "NetworkSpec",
    "ErrorSpec",
    "GroundTruth",
    "generate_network",
    "simulate_var",
    "chain_scenario",
    "simulate_lotka_volterra",
    "NgcGraph",
    "benjamini_hochberg",
    "fit_ngc",
    "centralities",
    "ndcg",
    "BenchmarkConfig",
    "BenchmarkResult",
    "run_benchmark",
]
