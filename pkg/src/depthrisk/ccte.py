"""Conditional tail expectation of costs over depth-based risk regions.

The target quantity is E[Y | X in L(alpha)]: the expected cost given that
the risk factors fall in the depth lower-level set.  The plug-in estimator
fits the depth model on one sample and averages the costs of a second,
independent sample over the estimated region:

    ccte_hat = sum_i Y_i 1{X_i in L_n(alpha)} / sum_i 1{X_i in L_n(alpha)}

with the convention 0/0 = 0 when no cost point lands in the region (the
estimate is then flagged degenerate rather than an error, since that event
has vanishing probability as samples grow).

Ground truth for synthetic populations comes from a large Monte Carlo ratio
estimate under the exact population model, with a delta-method standard
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .depth import DepthModel, fit_model
from .errors import DomainError, MissingCosts, NoMass
from .levelset import LevelSetSpec, in_lower_set
from .rng import RngStream
from .sampling import Sample, squared_norms

_ORACLE_BATCH = 1 << 20


@dataclass(frozen=True)
class CcteEstimate:
    """One tail-expectation estimate and its bookkeeping.

    ``hits`` counts cost points inside the estimated region; ``degenerate``
    marks the 0/0 convention (value forced to 0.0).
    """

    value: float
    n1: int
    n2: int
    alpha: float
    hits: int
    degenerate: bool

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "n1": self.n1,
            "n2": self.n2,
            "alpha": self.alpha,
            "hits": self.hits,
            "degenerate": self.degenerate,
        }


def ccte_under_model(
    model: DepthModel, cost_sample: Sample, alpha: float, n1: int
) -> CcteEstimate:
    """Tail-expectation ratio under a given depth model.

    This is the estimator's second stage (and a seam for tests and oracles):
    membership of the cost points is evaluated under ``model`` rather than a
    freshly fitted one.  ``n1`` is recorded as the size of whatever sample
    produced the model.
    """
    if cost_sample.costs is None:
        raise MissingCosts("cost sample has no costs attached")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    member = in_lower_set(cost_sample.points, LevelSetSpec(model, alpha))
    hits = int(np.count_nonzero(member))
    if hits == 0:
        return CcteEstimate(0.0, int(n1), cost_sample.n, alpha, 0, True)
    value = float(np.sum(cost_sample.costs[member]) / hits)
    return CcteEstimate(value, int(n1), cost_sample.n, alpha, hits, False)


def ccte_hat(level_sample: Sample, cost_sample: Sample, alpha: float) -> CcteEstimate:
    """Two-sample plug-in tail expectation estimate.

    Fits the depth model on ``level_sample`` and averages the costs of
    ``cost_sample`` over the estimated lower set.  The two samples must be
    drawn independently (caller contract).

    Raises
    ------
    DegenerateSample
        If the level sample cannot support a positive definite covariance.
    MissingCosts
        If the cost sample carries no costs.
    """
    model = fit_model(level_sample)
    return ccte_under_model(model, cost_sample, alpha, n1=level_sample.n)


def ccte_hat_split(sample: Sample, alpha: float) -> CcteEstimate:
    """Convenience mode with n1 = n2: one even-sized sample, split in half.

    The first half fits the model, the second half (with its costs)
    feeds the ratio, so the halves are independent when the sample is iid.
    """
    if sample.costs is None:
        raise MissingCosts("split estimation needs costs on the sample")
    if sample.n % 2 != 0 or sample.n < 2:
        raise DomainError("split estimation needs an even sample size")
    half = sample.n // 2
    level = Sample(sample.points[:half])
    cost = Sample(sample.points[half:], sample.costs[half:])
    return ccte_hat(level, cost, alpha)


@dataclass(frozen=True)
class Population:
    """A synthetic population: exact depth model plus a point sampler.

    ``draw(n, rng)`` returns an (n, d) array of iid draws from the law the
    model describes (or deterministically approximates).
    """

    model: DepthModel
    draw: Callable[[int, RngStream], np.ndarray]


def gaussian_population(model: DepthModel) -> Population:
    """Population wrapper for N(mu, Sigma) with its exact depth model."""
    from .sampling import sample_gaussian

    return Population(model, lambda n, rng: sample_gaussian(n, model, rng).points)


def estimate_population_model(
    draw: Callable[[int, RngStream], np.ndarray], n_mc: int, rng: RngStream
) -> DepthModel:
    """Approximate a population's (mu, Sigma) by a large Monte Carlo fit.

    Used for populations without closed-form moments.  Accumulates sums in
    fixed-size batches (deterministic order) and normalizes the covariance
    by 1/(n-1), matching :func:`~depthrisk.depth.fit_model`.
    """
    if n_mc < 2:
        raise DomainError("n_mc must be at least 2")
    total = 0
    sum_x = None
    sum_xx = None
    while total < n_mc:
        m = min(_ORACLE_BATCH, n_mc - total)
        pts = np.asarray(draw(m, rng), dtype=float)
        if sum_x is None:
            sum_x = pts.sum(axis=0)
            sum_xx = pts.T @ pts
        else:
            sum_x += pts.sum(axis=0)
            sum_xx += pts.T @ pts
        total += m
    mean = sum_x / total
    cov = (sum_xx - total * np.outer(mean, mean)) / (total - 1)
    from .linalg import build_spd

    return DepthModel(mean, build_spd(cov))


def ccte_true_oracle(
    population: Population, alpha: float, n_mc: int, rng: RngStream
) -> tuple[float, float]:
    """Monte Carlo ground truth for the tail expectation, with standard error.

    Draws ``n_mc`` points from the population, applies the noise-free cost
    map R(x) = |x|^2, and forms the ratio estimator over exact membership in
    L(alpha) under the population depth model.  The standard error is the
    delta-method expansion of the ratio.

    Raises
    ------
    NoMass
        If not a single draw lands in the region.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if n_mc < 100_000:
        raise DomainError("oracle needs n_mc >= 1e5 for a meaningful standard error")
    spec = LevelSetSpec(population.model, alpha)
    # accumulated over fixed-size batches in a fixed order: deterministic
    count_in = 0.0
    sum_cost = 0.0
    sum_cost_sq = 0.0
    total = 0
    while total < n_mc:
        m = min(_ORACLE_BATCH, n_mc - total)
        pts = np.asarray(population.draw(m, rng), dtype=float)
        member = in_lower_set(pts, spec)
        cost = squared_norms(pts[member])
        count_in += float(np.count_nonzero(member))
        sum_cost += float(np.sum(cost))
        sum_cost_sq += float(np.sum(cost * cost))
        total += m
    if count_in == 0:
        raise NoMass(f"no draw out of {n_mc} landed in the level set at alpha={alpha}")
    value = sum_cost / count_in
    # delta method for the ratio mean(R 1_A) / mean(1_A)
    p_in = count_in / total
    mean_y = sum_cost / total
    var_y = sum_cost_sq / total - mean_y * mean_y
    var_n = p_in * (1.0 - p_in)
    cov_yn = mean_y - mean_y * p_in
    var_ratio = (var_y - 2.0 * value * cov_yn + value * value * var_n) / (
        total * p_in * p_in
    )
    return value, float(np.sqrt(max(var_ratio, 0.0)))
