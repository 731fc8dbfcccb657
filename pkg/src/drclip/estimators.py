"""Point estimators for a partially observed mean and for two-arm effects.

Given outcome predictions mu_hat and propensities pi_hat over n units with
labeling indicator r, the four estimators are

    OR  = mean(mu_hat)
    IPW = mean(r * y / pi_hat)
    C   = mean(r * mu_hat / pi_hat)          (correction term)
    DR  = OR + IPW - C
    ACC = OR + IPW - clip(C, OR, IPW)

Clipping the correction into the interval spanned by OR and IPW guarantees
ACC itself lies in that interval, so its error can never exceed the worse of
the two component estimators -- while leaving DR untouched whenever the
correction is already interior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MaskedVector, as_masked
from .errors import DimensionMismatch, EmptyArm, NonPositivePropensity
from .nuisance import OutcomeModel, predict_mu


def clip(x, a, b):
    """Limit x to the closed interval spanned by a and b (order-free bounds).

    Elementwise for array inputs. Exactly a median-of-three selection, so it
    is translation and positive-scale equivariant and 1-Lipschitz in x, with
    no rounding of its own.
    """
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return np.minimum(np.maximum(x, lo), hi)


@dataclass(frozen=True)
class EstimateBundle:
    """All point estimates computed from one sample."""

    theta_or: float
    theta_ipw: float
    correction: float
    theta_dr: float
    theta_acc: float
    lambda_hat: float
    n: int


def compute_bundle(mu_hat, pi_hat, r, y) -> EstimateBundle:
    """OR, IPW, correction, DR, clipped estimator, and its convex weight.

    ``y`` may be a MaskedVector (outcome readable only where r=1) or a plain
    fully observed array. Raises NonPositivePropensity if any pi_hat <= 0 and
    MaskedAccess if r claims an observation the mask does not back.
    """
    mu_hat = np.asarray(mu_hat, dtype=float)
    pi_hat = np.asarray(pi_hat, dtype=float)
    r = np.asarray(r)
    n = r.size
    if mu_hat.shape != (n,) or pi_hat.shape != (n,):
        raise DimensionMismatch("mu_hat, pi_hat, and r must have equal length")
    if not np.all((r == 0) | (r == 1)):
        raise ValueError("r entries must be 0 or 1")
    if np.any(pi_hat <= 0.0):
        raise NonPositivePropensity("pi_hat must be strictly positive")
    y = as_masked(y) if not isinstance(y, MaskedVector) else y
    if len(y) != n:
        raise DimensionMismatch("y length must match r")

    labeled = r == 1
    y_obs = y.take(labeled)
    inv = 1.0 / pi_hat[labeled]

    theta_or = float(np.mean(mu_hat))
    theta_ipw = float(np.sum(y_obs * inv) / n)
    correction = float(np.sum(mu_hat[labeled] * inv) / n)
    theta_dr = theta_or + theta_ipw - correction

    # Branch on the clip explicitly: the boundary cases assign the opposite
    # endpoint exactly (OR + IPW - min is max only in real arithmetic), and
    # the interior case reuses theta_dr bit-for-bit, re-clipped in case the
    # rounded sum landed a hair outside the interval.
    lo = min(theta_or, theta_ipw)
    hi = max(theta_or, theta_ipw)
    if correction <= lo:
        clipped_c = lo
        theta_acc = hi
    elif correction >= hi:
        clipped_c = hi
        theta_acc = lo
    else:
        clipped_c = correction
        theta_acc = float(clip(theta_dr, lo, hi))
    if theta_or == theta_ipw:
        # 0/0 in the weight formula; both components coincide so any weight
        # is consistent -- take 1 to keep the convex identity degenerate.
        lambda_hat = 1.0
    else:
        lambda_hat = (theta_or - clipped_c) / (theta_or - theta_ipw)
        lambda_hat = float(min(1.0, max(0.0, lambda_hat)))
    return EstimateBundle(
        theta_or=theta_or,
        theta_ipw=theta_ipw,
        correction=correction,
        theta_dr=theta_dr,
        theta_acc=theta_acc,
        lambda_hat=lambda_hat,
        n=int(n),
    )


@dataclass(frozen=True)
class AteEstimate:
    """Two one-arm bundles and their per-estimator differences (arm1 - arm0)."""

    arm1: EstimateBundle
    arm0: EstimateBundle
    ate_or: float
    ate_ipw: float
    ate_dr: float
    ate_acc: float


def estimate_ate(data, mu1: OutcomeModel, mu0: OutcomeModel, pi_hat) -> AteEstimate:
    """Two-arm effect: each arm is a one-arm mean problem.

    Arm 1 treats the treatment indicator as the labeling indicator with
    propensity pi_hat; arm 0 uses 1-treatment with propensity 1-pi_hat.
    Clipping is applied per arm, then the arms are differenced.
    """
    a = data.treatment
    n = data.n
    pi_hat = np.asarray(pi_hat, dtype=float)
    if pi_hat.shape != (n,):
        raise DimensionMismatch("pi_hat length must match the dataset")
    if int(a.sum()) == 0 or int(a.sum()) == n:
        raise EmptyArm("both arms must be nonempty")
    mu1_hat = predict_mu(mu1, data.covariates, arms=np.ones(n, dtype=np.int64))
    mu0_hat = predict_mu(mu0, data.covariates, arms=np.zeros(n, dtype=np.int64))
    arm1 = compute_bundle(mu1_hat, pi_hat, a, data.outcome)
    arm0 = compute_bundle(mu0_hat, 1.0 - pi_hat, 1 - a, data.outcome)
    return AteEstimate(
        arm1=arm1,
        arm0=arm0,
        ate_or=arm1.theta_or - arm0.theta_or,
        ate_ipw=arm1.theta_ipw - arm0.theta_ipw,
        ate_dr=arm1.theta_dr - arm0.theta_dr,
        ate_acc=arm1.theta_acc - arm0.theta_acc,
    )
