"""Influence-based covariance estimation and confidence intervals.

Wald intervals serve the OR, IPW, and DR estimators. The clipped estimator's
limit is a non-linear transform of three jointly normal components, so its
interval comes from a parametric bootstrap: draw (Z_or, Z_ipw, Z_corr) from
N(0, Sigma_hat), transform each draw with

    W = Z_or + Z_ipw - clip(Z_corr, min(Z_or, Z_ipw), max(Z_or, Z_ipw)),

and read the empirical quantiles of W.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MaskedVector, as_masked
from .errors import FactorizationFailure
from .estimators import EstimateBundle
from .kernels import w_transform
from .util import norm_ppf

WALD = "wald"
PARAMETRIC_BOOTSTRAP = "parametric_bootstrap"

DEFAULT_B = 10000
DEFAULT_ALPHA = 0.05
_MIN_B = 1000


@dataclass(frozen=True)
class Interval:
    """Two-sided confidence interval at confidence ``level`` = 1 - alpha."""

    lo: float
    hi: float
    level: float
    method: str

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"lo {self.lo} > hi {self.hi}")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def influence_matrix(mu_hat, pi_hat, r, y, bundle: EstimateBundle) -> np.ndarray:
    """n x 3 matrix of centered per-observation contributions.

    Columns, in order: mu_hat(X_i) - OR, r_i y_i / pi_hat(X_i) - IPW, and
    r_i mu_hat(X_i) / pi_hat(X_i) - C. Each column sums to (numerically) zero.
    """
    mu_hat = np.asarray(mu_hat, dtype=float)
    pi_hat = np.asarray(pi_hat, dtype=float)
    r = np.asarray(r)
    n = r.size
    y = as_masked(y) if not isinstance(y, MaskedVector) else y
    labeled = r == 1
    inv = 1.0 / pi_hat[labeled]
    ipw_terms = np.zeros(n)
    ipw_terms[labeled] = y.take(labeled) * inv
    corr_terms = np.zeros(n)
    corr_terms[labeled] = mu_hat[labeled] * inv
    out = np.empty((n, 3))
    out[:, 0] = mu_hat - bundle.theta_or
    out[:, 1] = ipw_terms - bundle.theta_ipw
    out[:, 2] = corr_terms - bundle.correction
    return out


def covariance(infl: np.ndarray) -> np.ndarray:
    """3 x 3 covariance of the influence columns, normalized by n (not n-1)."""
    infl = np.asarray(infl, dtype=float)
    n = infl.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    return infl.T @ infl / n


def cholesky3(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular factor of a 3x3 PSD matrix.

    Tolerates exact semidefiniteness (zero pivots with zero columns). On
    failure, retries once with diagonal jitter 1e-12 * trace; if that also
    fails, raises FactorizationFailure.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (3, 3):
        raise ValueError("sigma must be 3x3")

    def attempt(s):
        ell = np.zeros((3, 3))
        for j in range(3):
            d = s[j, j] - np.dot(ell[j, :j], ell[j, :j])
            if d < 0.0:
                return None
            ell[j, j] = np.sqrt(d)
            for i in range(j + 1, 3):
                off = s[i, j] - np.dot(ell[i, :j], ell[j, :j])
                if ell[j, j] > 0.0:
                    ell[i, j] = off / ell[j, j]
                elif off != 0.0:
                    return None
        return ell

    ell = attempt(sigma)
    if ell is None:
        jitter = 1e-12 * np.trace(sigma)
        ell = attempt(sigma + jitter * np.eye(3))
    if ell is None:
        raise FactorizationFailure("covariance is not PSD even after jitter")
    return ell


def sample_W(sigma, b_count: int, rng: np.random.Generator) -> np.ndarray:
    """B draws of the clipped-combination limit variable W.

    Draws (Z_or, Z_ipw, Z_corr) ~ N(0, sigma) through the 3x3 factor and
    applies the clip transform; the hot path runs in the compiled kernel when
    it is available.
    """
    if b_count < _MIN_B:
        raise ValueError(f"b_count must be >= {_MIN_B}, got {b_count}")
    ell = cholesky3(sigma)
    normals = rng.standard_normal((int(b_count), 3))
    return w_transform(normals, ell)


def acc_interval(bundle: EstimateBundle, sigma, b_count: int, alpha: float,
                 rng: np.random.Generator) -> Interval:
    """Parametric-bootstrap interval for the clipped estimator.

    [theta_acc - q_{1-a/2}/sqrt(n), theta_acc - q_{a/2}/sqrt(n)] with q the
    empirical quantiles (linear interpolation) of the W draws.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    w = sample_W(sigma, b_count, rng)
    q_lo, q_hi = np.quantile(w, [alpha / 2.0, 1.0 - alpha / 2.0])
    root_n = np.sqrt(bundle.n)
    return Interval(
        lo=float(bundle.theta_acc - q_hi / root_n),
        hi=float(bundle.theta_acc - q_lo / root_n),
        level=1.0 - alpha,
        method=PARAMETRIC_BOOTSTRAP,
    )


def wald_interval(theta: float, phi, n: int, alpha: float) -> Interval:
    """Normal-approximation interval from a centered influence column.

    The variance uses the 1/n normalization; for the DR estimator pass the
    composed column phi_or + phi_ipw - phi_corr.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if n < 2:
        raise ValueError("need at least 2 observations")
    phi = np.asarray(phi, dtype=float)
    var = float(np.mean(phi * phi))
    half = norm_ppf(1.0 - alpha / 2.0) * np.sqrt(var / n)
    return Interval(lo=float(theta - half), hi=float(theta + half),
                    level=1.0 - alpha, method=WALD)
