"""Benchmark data generator for the misspecification study.

Four latent standard normals drive a linear outcome (population mean 210) and
a logistic labeling mechanism. The analyst-visible covariates are fixed
nonlinear distortions of the latent variables: fitting the parametric
nuisance models on the distorted covariates misspecifies them, fitting on the
latent variables recovers correct specification.

Reproducibility contract: every replication's generator seed is a stateless
hash of (master_seed, cell indices, replication index), so results are
independent of worker count and execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import MaskedVector
from .errors import DegenerateSample
from .util import expit

THETA_STAR = 210.0
OUTCOME_COEF = np.array([27.4, 13.7, 13.7, 13.7])
PROPENSITY_COEF = np.array([-1.0, 0.5, -0.25, -0.1])

CORRECT = "correct"
INCORRECT = "incorrect"
_SPEC_CODE = {CORRECT: 0, INCORRECT: 1}


def derive_seed(*parts) -> int:
    """Stateless 64-bit seed from a tuple of nonnegative integers."""
    seq = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(seq.generate_state(1, np.uint64)[0])


def spec_code(spec: str) -> int:
    if spec not in _SPEC_CODE:
        raise ValueError(f"specification must be '{CORRECT}' or '{INCORRECT}', got {spec!r}")
    return _SPEC_CODE[spec]


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell: sample size, nuisance specifications, seed."""

    n: int
    outcome_spec: str
    propensity_spec: str
    seed: int

    def __post_init__(self):
        if self.n < 20:
            raise ValueError(f"n must be >= 20, got {self.n}")
        spec_code(self.outcome_spec)
        spec_code(self.propensity_spec)
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a nonnegative 64-bit integer")


@dataclass(frozen=True)
class SimulatedSample:
    """One generated sample, carrying both latent and distorted covariates."""

    latent: np.ndarray
    observed: np.ndarray
    response: np.ndarray
    outcome: MaskedVector
    true_propensity: np.ndarray
    theta_star: float = field(default=THETA_STAR)


def draw_latent(n: int, rng: np.random.Generator) -> np.ndarray:
    """n x 4 matrix of independent standard normals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.standard_normal((n, 4))


def gen_outcome(latent: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Linear outcome 210 + 27.4*T1 + 13.7*(T2+T3+T4) + N(0,1) noise."""
    return THETA_STAR + latent @ OUTCOME_COEF + rng.standard_normal(latent.shape[0])


def true_propensity(latent: np.ndarray) -> np.ndarray:
    """Labeling probability: inverse logit of -T1 + 0.5*T2 - 0.25*T3 - 0.1*T4."""
    return expit(latent @ PROPENSITY_COEF)


def transform_covariates(latent: np.ndarray) -> np.ndarray:
    """Deterministic nonlinear distortion of the latent variables."""
    t1, t2, t3, t4 = latent[:, 0], latent[:, 1], latent[:, 2], latent[:, 3]
    x1 = np.exp(t1 / 2.0)
    x2 = t2 / (1.0 + np.exp(t1)) + 10.0
    x3 = (t1 * t3 / 25.0 + 0.6) ** 3
    x4 = (t2 + t4 + 20.0) ** 2
    return np.column_stack([x1, x2, x3, x4])


def generate(config: ScenarioConfig) -> SimulatedSample:
    """Draw one sample; pure function of the config.

    Raises DegenerateSample when every unit is labeled or none is; the caller
    decides what to do (the study harness records it and moves on -- silent
    regeneration would bias the labeling distribution).
    """
    rng = np.random.default_rng(config.seed)
    latent = draw_latent(config.n, rng)
    y = gen_outcome(latent, rng)
    pi = true_propensity(latent)
    r = (rng.random(config.n) < pi).astype(np.int64)
    n_labeled = int(r.sum())
    if n_labeled == 0 or n_labeled == config.n:
        raise DegenerateSample(f"all units have r={r[0]} (seed {config.seed})")
    return SimulatedSample(
        latent=latent,
        observed=transform_covariates(latent),
        response=r,
        outcome=MaskedVector(y, mask=r == 1),
        true_propensity=pi,
    )


def design_for(sample: SimulatedSample, spec: str) -> tuple[np.ndarray, str]:
    """Design matrix handed to a nuisance fitter, with its provenance tag.

    Correct specification fits on the latent variables, incorrect on the
    distorted covariates.
    """
    if spec_code(spec) == 0:
        return sample.latent, "latent"
    return sample.observed, "observed"
