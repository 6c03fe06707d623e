"""Bayesian VAR(p) estimation with a conjugate normal-inverse-Wishart prior.

The model for a d-dimensional series z_t is

    z_t = phi0 + sum_i phi_i z_{t-i} + a_t,      a_t ~ N(0, sigma_a)

stacked as Z = X beta + A with one row per usable observation.  The prior
sigma_a ~ IW(v0, n0), vec(beta) | sigma_a ~ N(vec(beta0), sigma_a (x) c^{-1})
is conjugate, so the posterior is available in closed form and joint i.i.d.
draws follow from inverse-Wishart then matrix-normal sampling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericError
from .mts import MTS

SYMMETRY_TOL = 1e-10


def _as_matrix(x) -> np.ndarray:
    return x.values if isinstance(x, MTS) else np.asarray(x, dtype=float)


def _check_spd(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {mat.shape}")
    if np.abs(mat - mat.T).max(initial=0.0) > SYMMETRY_TOL:
        raise ValueError(f"{name} is not symmetric within {SYMMETRY_TOL}")
    sym = (mat + mat.T) / 2.0
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive definite") from None
    return sym


@dataclass(frozen=True)
class VarParams:
    """One VAR parameter point: intercept, lag matrices, and error covariance."""

    phi0: np.ndarray
    phis: tuple[np.ndarray, ...]
    sigma_a: np.ndarray

    def __post_init__(self) -> None:
        phi0 = np.asarray(self.phi0, dtype=float).reshape(-1)
        d = phi0.shape[0]
        phis = tuple(np.asarray(m, dtype=float) for m in self.phis)
        if not phis:
            raise ValueError("need at least one lag matrix")
        for m in phis:
            if m.shape != (d, d):
                raise ValueError(f"lag matrices must be {d}x{d}, got {m.shape}")
        sigma = _check_spd(self.sigma_a, "sigma_a")
        if sigma.shape[0] != d:
            raise ValueError("sigma_a dimension does not match phi0")
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "sigma_a", sigma)

    @property
    def d(self) -> int:
        return self.phi0.shape[0]

    @property
    def p(self) -> int:
        return len(self.phis)


@dataclass(frozen=True)
class NiwPrior:
    """Hyperparameters: v0/n0 for the covariance, beta0/c for the coefficients."""

    v0: np.ndarray
    n0: float
    beta0: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        v0 = _check_spd(self.v0, "v0")
        c = _check_spd(self.c, "c")
        beta0 = np.asarray(self.beta0, dtype=float)
        if beta0.ndim != 2:
            raise ValueError("beta0 must be a (p*d+1) x d matrix")
        if beta0.shape != (c.shape[0], v0.shape[0]):
            raise ValueError(
                f"beta0 shape {beta0.shape} inconsistent with c {c.shape} and v0 {v0.shape}"
            )
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "beta0", beta0)

    @classmethod
    def vague(cls, d: int, p: int, c0: float = 1e6) -> "NiwPrior":
        """Weak default: identity covariance scale, n0 = d + 2 (keeps the
        inverse-Wishart mean defined), zero coefficient mean, c = I / c0."""
        k = p * d + 1
        return cls(v0=np.eye(d), n0=float(d + 2), beta0=np.zeros((k, d)), c=np.eye(k) / c0)


@dataclass(frozen=True)
class NiwPosterior:
    """Closed-form posterior parameters for (beta, sigma_a)."""

    v_post: np.ndarray
    n_post: float
    beta_tilde: np.ndarray
    precision: np.ndarray
    n_effective: int

    @property
    def d(self) -> int:
        return self.v_post.shape[0]

    @property
    def k(self) -> int:
        return self.precision.shape[0]

    @property
    def p(self) -> int:
        return (self.k - 1) // self.d


@dataclass(frozen=True)
class PosteriorDraws:
    """M i.i.d. joint posterior draws, stored draw-major.

    Behaves as a sequence of VarParams: ``draws[m]`` materializes draw m.
    """

    phi0s: np.ndarray   # (M, d)
    phis: np.ndarray    # (M, p, d, d)
    sigmas: np.ndarray  # (M, d, d)
    seed: int

    def __post_init__(self) -> None:
        if self.phi0s.ndim != 2 or self.phis.ndim != 4 or self.sigmas.ndim != 3:
            raise ValueError("draw arrays have inconsistent ranks")
        m, d = self.phi0s.shape
        if m < 2:
            raise ValueError(f"need at least 2 draws, got M={m}")
        if self.phis.shape[0] != m or self.phis.shape[2:] != (d, d):
            raise ValueError("phis shape inconsistent with phi0s")
        if self.sigmas.shape != (m, d, d):
            raise ValueError("sigmas shape inconsistent with phi0s")

    @property
    def M(self) -> int:
        return self.phi0s.shape[0]

    @property
    def d(self) -> int:
        return self.phi0s.shape[1]

    @property
    def p(self) -> int:
        return self.phis.shape[1]

    def __len__(self) -> int:
        return self.M

    def __getitem__(self, m: int) -> VarParams:
        return VarParams(
            phi0=self.phi0s[m],
            phis=tuple(self.phis[m, i] for i in range(self.p)),
            sigma_a=self.sigmas[m],
        )


def build_design(x, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Assemble (Z, X) for a lag-p fit: Z rows are observations from time p on,
    X rows are (1, z'_{t-1}, ..., z'_{t-p}) with the newest lag first."""
    values = _as_matrix(x)
    if values.ndim != 2:
        raise ValueError("series must be 2D (T, d)")
    t, d = values.shape
    if p < 1:
        raise ValueError("lag order p must be >= 1")
    if t <= p:
        raise ValueError(f"series length T={t} must exceed lag order p={p}")
    n = t - p
    k = p * d + 1
    if n < k:
        warnings.warn(
            f"only {n} usable rows for {k} regressors; the fit is under-determined",
            stacklevel=2,
        )
    z = values[p:, :]
    lags = [values[p - lag : t - lag, :] for lag in range(1, p + 1)]
    design = np.concatenate([np.ones((n, 1))] + lags, axis=1)
    spread = design[:, 1:].max(axis=0) - design[:, 1:].min(axis=0)
    if np.any(spread == 0):
        warnings.warn("design matrix has constant (degenerate) regressor columns", stacklevel=2)
    return z, design


def compute_posterior(z: np.ndarray, x: np.ndarray, prior: NiwPrior) -> NiwPosterior:
    """Update the prior with data (Z, X); with no rows the prior is returned intact."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if z.ndim != 2 or x.ndim != 2 or z.shape[0] != x.shape[0]:
        raise ValueError("Z and X must be 2D with matching row counts")
    n, d = z.shape
    k = x.shape[1]
    if prior.beta0.shape != (k, d):
        raise ValueError(f"prior shaped for beta {prior.beta0.shape}, data implies ({k}, {d})")

    xtx = x.T @ x
    precision = xtx + prior.c
    cond = np.linalg.cond(precision)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericError(
            f"X'X + C is numerically singular (condition number {cond:.3e})"
        )
    if n == 0:
        beta_hat = np.zeros((k, d))
    else:
        beta_hat = np.linalg.lstsq(x, z, rcond=None)[0]
    beta_tilde = np.linalg.solve(precision, xtx @ beta_hat + prior.c @ prior.beta0)

    resid = z - x @ beta_tilde
    dev = beta_tilde - prior.beta0
    s_tilde = resid.T @ resid + dev.T @ prior.c @ dev
    v_post = prior.v0 + (s_tilde + s_tilde.T) / 2.0
    return NiwPosterior(
        v_post=(v_post + v_post.T) / 2.0,
        n_post=float(prior.n0 + n),
        beta_tilde=beta_tilde,
        precision=(precision + precision.T) / 2.0,
        n_effective=n,
    )


def fit(x, p: int, prior: NiwPrior | None = None) -> NiwPosterior:
    """Convenience wrapper: design matrices plus posterior update in one call."""
    values = _as_matrix(x)
    if prior is None:
        prior = NiwPrior.vague(values.shape[1], p)
    z, design = build_design(values, p)
    return compute_posterior(z, design, prior)


def _beta_to_params(beta: np.ndarray, sigma: np.ndarray, p: int, d: int) -> VarParams:
    phis = tuple(beta[1 + i * d : 1 + (i + 1) * d, :].T for i in range(p))
    return VarParams(phi0=beta[0], phis=phis, sigma_a=sigma)


def point_params(post: NiwPosterior) -> VarParams:
    """Posterior-mean parameter point (beta_tilde, E[sigma_a])."""
    d = post.d
    if post.n_post <= d + 1:
        raise NumericError("posterior mean of sigma_a undefined: n_post <= d + 1")
    sigma = post.v_post / (post.n_post - d - 1)
    return _beta_to_params(post.beta_tilde, sigma, post.p, d)


def sample_posterior(post: NiwPosterior, M: int, seed: int) -> PosteriorDraws:
    """Draw M i.i.d. samples from the joint posterior.

    Each draw takes sigma_a from the inverse-Wishart marginal (Bartlett
    construction on the inverse-scale Cholesky factor) and then beta from the
    conditional matrix normal, using Cholesky factors of sigma_a and of the
    inverse precision rather than the full Kronecker covariance.

    Draw m consumes its own substream spawned from ``seed``, so results are
    reproducible and independent of how draws are scheduled.
    """
    if M < 2:
        raise ValueError("need M >= 2 draws")
    d, k, p = post.d, post.k, post.p
    if post.n_post <= d + 1:
        raise NumericError(
            f"inverse-Wishart mean undefined: n_post={post.n_post} <= d + 1 = {d + 1}"
        )

    v_inv = np.linalg.inv(post.v_post)
    scale_chol = np.linalg.cholesky((v_inv + v_inv.T) / 2.0)
    prec_chol = np.linalg.cholesky(post.precision)
    # row_root @ row_root.T equals the inverse precision.
    row_root = solve_triangular(prec_chol, np.eye(k), lower=True).T

    phi0s = np.empty((M, d))
    phis = np.empty((M, p, d, d))
    sigmas = np.empty((M, d, d))
    eye = np.eye(d)
    df = post.n_post - np.arange(d)
    lower_mask = np.tril(np.ones((d, d), dtype=bool), k=-1)

    for m, ss in enumerate(np.random.SeedSequence(seed).spawn(M)):
        rng = np.random.default_rng(ss)
        bartlett = np.zeros((d, d))
        bartlett[np.diag_indices(d)] = np.sqrt(rng.chisquare(df))
        bartlett[lower_mask] = rng.standard_normal(lower_mask.sum())
        q = scale_chol @ bartlett  # lower triangular; q q' ~ Wishart(v_post^{-1}, n_post)
        r = solve_triangular(q, eye, lower=True)
        sigma = r.T @ r
        sigma_chol = np.linalg.cholesky(sigma)
        beta = post.beta_tilde + row_root @ rng.standard_normal((k, d)) @ sigma_chol.T
        sigmas[m] = sigma
        phi0s[m] = beta[0]
        for i in range(p):
            phis[m, i] = beta[1 + i * d : 1 + (i + 1) * d, :].T
    return PosteriorDraws(phi0s=phi0s, phis=phis, sigmas=sigmas, seed=int(seed))


def save_draws(draws: PosteriorDraws, path: str | Path) -> None:
    """Persist draws to a .npz artifact (draw-major, with d/p/M/seed header)."""
    np.savez_compressed(
        Path(path),
        phi0s=draws.phi0s,
        phis=draws.phis,
        sigmas=draws.sigmas,
        d=np.int64(draws.d),
        p=np.int64(draws.p),
        M=np.int64(draws.M),
        seed=np.int64(draws.seed),
    )


def load_draws(path: str | Path) -> PosteriorDraws:
    with np.load(Path(path)) as data:
        draws = PosteriorDraws(
            phi0s=data["phi0s"],
            phis=data["phis"],
            sigmas=data["sigmas"],
            seed=int(data["seed"]),
        )
        if draws.M != int(data["M"]) or draws.d != int(data["d"]) or draws.p != int(data["p"]):
            raise ValueError("artifact header inconsistent with stored arrays")
    return draws
