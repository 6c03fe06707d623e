"""Moving-average coefficients and horizon-h forecast-error variance shares.

For one parameter point the share of component j's h-step forecast-error
variance attributable to shocks in component k is

    w[j, k] = sigma_kk^{-1} sum_{i<h} (e_j' psi_i sigma e_k)^2
              -----------------------------------------------
                    sum_{i<h} e_j' psi_i sigma psi_i' e_j

(the generalized, ordering-invariant form), then each row is normalized to
sum to one.  Shares are accumulated incrementally so sweeping h = 1..H costs
one recursion step per horizon, for a whole batch of draws at once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .posterior import VarParams

ROW_SUM_TOL = 1e-10


@dataclass(frozen=True)
class PsiSequence:
    """Moving-average matrices psi_0..psi_{h-1}; psi_0 is the identity."""

    psis: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class FevdMatrix:
    """Raw and row-normalized variance shares at one horizon."""

    raw: np.ndarray
    normalized: np.ndarray
    h: int

    def __post_init__(self) -> None:
        rows = self.normalized.sum(axis=1)
        if np.abs(rows - 1.0).max() > ROW_SUM_TOL:
            raise ValueError("normalized rows must each sum to 1")
        if self.normalized.min() < -1e-12 or self.normalized.max() > 1.0 + 1e-12:
            raise ValueError("normalized entries must lie in [0, 1]")


def ma_coefficients(params: VarParams, h: int) -> PsiSequence:
    """First h moving-average matrices of the lag polynomial.

    psi_0 = I and psi_i = sum_{l=1..min(i,p)} phi_l psi_{i-l}; for a one-lag
    model this reduces to matrix powers of phi_1.
    """
    if h < 1:
        raise ValueError("horizon must be >= 1")
    d, p = params.d, params.p
    psis = [np.eye(d)]
    for i in range(1, h):
        acc = np.zeros((d, d))
        for lag in range(1, min(i, p) + 1):
            acc += params.phis[lag - 1] @ psis[i - lag]
        psis.append(acc)
    return PsiSequence(psis=tuple(psis))


class FevdAccumulator:
    """Running variance-share sums for a batch of draws, advanced one horizon
    at a time.

    ``phis`` has shape (M, p, d, d) and ``sigmas`` (M, d, d); after
    construction the accumulator sits at h = 1.
    """

    def __init__(self, phis: np.ndarray, sigmas: np.ndarray) -> None:
        phis = np.asarray(phis, dtype=float)
        sigmas = np.asarray(sigmas, dtype=float)
        if phis.ndim != 4 or sigmas.ndim != 3:
            raise ValueError("expected phis (M,p,d,d) and sigmas (M,d,d)")
        m, _, d, _ = phis.shape
        if sigmas.shape != (m, d, d):
            raise ValueError("sigmas shape inconsistent with phis")
        self._phis = phis
        self._sigmas = sigmas
        self._sig_diag = np.einsum("mjj->mj", sigmas).copy()
        if np.any(self._sig_diag <= 0):
            m_bad, j_bad = np.argwhere(self._sig_diag <= 0)[0]
            raise NumericError(
                f"non-positive shock variance for component {j_bad} in draw {m_bad}"
            )
        self.h = 0
        self._hist: deque[np.ndarray] = deque(maxlen=phis.shape[1])
        self._num = np.zeros((m, d, d))
        self._den = np.zeros((m, d))
        eye = np.broadcast_to(np.eye(d), (m, d, d))
        self._accumulate(eye)

    def _accumulate(self, psi: np.ndarray) -> None:
        self._hist.append(psi)
        a = psi @ self._sigmas
        self._num += a**2 / self._sig_diag[:, None, :]
        self._den += np.einsum("mjk,mjk->mj", a, psi)
        self.h += 1

    def step(self) -> None:
        """Advance to the next horizon."""
        p = self._phis.shape[1]
        nxt = self._phis[:, 0] @ self._hist[-1]
        for lag in range(2, min(self.h, p) + 1):
            nxt = nxt + self._phis[:, lag - 1] @ self._hist[-lag]
        self._accumulate(nxt)

    def raw(self) -> np.ndarray:
        if np.any(self._den <= 0):
            m_bad, j_bad = np.argwhere(self._den <= 0)[0]
            raise NumericError(
                f"zero forecast-error variance for component {j_bad} in draw {m_bad}"
            )
        return self._num / self._den[:, :, None]

    def normalized(self) -> np.ndarray:
        raw = self.raw()
        row_sums = raw.sum(axis=2)
        if np.any(row_sums <= 0):
            m_bad, j_bad = np.argwhere(row_sums <= 0)[0]
            raise NumericError(
                f"degenerate zero-variance row for component {j_bad} in draw {m_bad}"
            )
        return raw / row_sums[:, :, None]


def fevd(params: VarParams, h: int) -> FevdMatrix:
    """Variance decomposition of a single parameter point at horizon h."""
    if h < 1:
        raise ValueError("horizon must be >= 1")
    acc = FevdAccumulator(
        np.stack(params.phis)[None, :, :, :], params.sigma_a[None, :, :]
    )
    while acc.h < h:
        acc.step()
    return FevdMatrix(raw=acc.raw()[0], normalized=acc.normalized()[0], h=h)
