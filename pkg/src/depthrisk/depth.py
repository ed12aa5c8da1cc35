"""Mahalanobis depth: population form, plug-in empirical form, gradient.

The depth of a point x under a location mu and scatter Sigma is

    mhd(x) = 1 / (1 + (x - mu)' Sigma^{-1} (x - mu))

so it peaks at exactly 1 at mu and decays toward 0 along every ray.  The
empirical (plug-in) version evaluates the same formula at the fitted mean
and unbiased covariance of a sample.

The depth interface is deliberately small: a model is a (mu, Sigma) pair and
a depth is a map (point, model) -> (0, 1].  Level-set and tail-expectation
code depends only on that shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DegenerateSample, DimensionMismatch, DomainError, NotPositiveDefinite
from .linalg import SpdMatrix, build_spd, quad_forms
from .rng import RngStream, mix64

if TYPE_CHECKING:  # pragma: no cover
    from .sampling import Sample


class DepthModel:
    """Location vector plus SPD scatter matrix defining a Mahalanobis depth.

    Attributes
    ----------
    mu : ndarray, shape (d,), read-only
    sigma : SpdMatrix

    Immutable and shareable across threads.
    """

    __slots__ = ("mu", "sigma")

    def __init__(self, mu, sigma: SpdMatrix):
        loc = np.asarray(mu, dtype=float)
        if loc.ndim != 1:
            raise DimensionMismatch(f"mu must be a vector, got shape {loc.shape}")
        if loc.shape[0] != sigma.dim:
            raise DimensionMismatch(
                f"mu has length {loc.shape[0]} but sigma has dimension {sigma.dim}"
            )
        if not loc.flags.owndata:
            loc = loc.copy()
        loc.setflags(write=False)
        self.mu = loc
        self.sigma = sigma

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def __repr__(self) -> str:  # pragma: no cover
        return f"DepthModel(dim={self.dim})"

    def to_json(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.entries.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "DepthModel":
        if "mu" not in obj or "sigma" not in obj:
            raise DimensionMismatch("model JSON needs 'mu' and 'sigma' entries")
        return DepthModel(np.asarray(obj["mu"], dtype=float), build_spd(obj["sigma"]))


def _point_rows(x, model: DepthModel) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if pts.ndim not in (1, 2) or pts.shape[-1] != model.dim:
        raise DimensionMismatch(
            f"expected point(s) of dimension {model.dim}, got shape {pts.shape}"
        )
    return pts.reshape(-1, model.dim), single


def mahalanobis_sq(x, model: DepthModel):
    """Squared Mahalanobis distance(s) of x from the model location."""
    pts, single = _point_rows(x, model)
    d2 = quad_forms(model.sigma, pts - model.mu)
    return float(d2[0]) if single else d2


def mhd(x, model: DepthModel):
    """Mahalanobis depth of one point (shape (d,)) or many (shape (n, d)).

    Returns a float for a single point, an (n,) array for a batch.  Values
    lie in (0, 1], and equal 1 exactly when x == mu.
    """
    pts, single = _point_rows(x, model)
    val = 1.0 / (1.0 + quad_forms(model.sigma, pts - model.mu))
    return float(val[0]) if single else val


def mhd_gradient(x, model: DepthModel):
    """Gradient of the depth: -2 * mhd(x)^2 * Sigma^{-1} (x - mu).

    Zero exactly at x == mu, the unique critical point.
    """
    pts, single = _point_rows(x, model)
    centered = pts - model.mu
    depth = 1.0 / (1.0 + quad_forms(model.sigma, centered))
    grad = (-2.0 * depth * depth)[:, None] * model.sigma.solve_rows(centered)
    return grad[0] if single else grad


def fit_model(s: "Sample") -> DepthModel:
    """Fit the plug-in depth model: sample mean and unbiased covariance.

    The covariance uses the 1/(n-1) normalization.

    Raises
    ------
    DegenerateSample
        If n < d + 1, or the sample lies in an affine hyperplane so the
        covariance is not positive definite.
    """
    pts = s.points
    n, d = pts.shape
    if n < d + 1:
        raise DegenerateSample(f"need at least d+1 = {d + 1} points, got {n}")
    mu = pts.mean(axis=0)
    dev = pts - mu
    cov = (dev.T @ dev) / (n - 1)
    try:
        sigma = build_spd(cov)
    except NotPositiveDefinite as err:
        raise DegenerateSample(f"sample covariance is not positive definite: {err}") from err
    return DepthModel(mu, sigma)


@dataclass(frozen=True)
class ProbeGrid:
    """Probe set specification for sup-norm depth comparisons.

    The probe set is a tensor grid over the union of the two models' boxes
    mu +- box_sds * sqrt(diag(Sigma)), plus ``far_points`` random points at
    radius up to ``far_radius`` from the box center.  Depth differences
    localize near the centers and vanish at infinity, so the grid carries
    the maximum and the far points guard the tail.

    ``per_axis`` defaults by dimension (201 for d <= 2, 41 for d = 3, 9
    beyond) to keep the grid size bounded.  The far points come from a
    dedicated stream seeded by ``seed``, so distances are deterministic.
    """

    per_axis: int | None = None
    box_sds: float = 6.0
    far_points: int = 10_000
    far_radius: float = 1_000.0
    seed: int = 0x5EEDFA11

    def axis_count(self, dim: int) -> int:
        if self.per_axis is not None:
            return self.per_axis
        if dim <= 2:
            return 201
        if dim == 3:
            return 41
        return 9


def probe_points(a: DepthModel, b: DepthModel, probe: ProbeGrid) -> np.ndarray:
    """Materialize the probe set for a pair of models."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"model dimensions differ: {a.dim} vs {b.dim}")
    d = a.dim
    k = probe.axis_count(d)
    if k < 1 and probe.far_points < 1:
        raise DomainError("probe grid must contain at least one point")
    lows = np.empty(d)
    highs = np.empty(d)
    for i in range(d):
        spans = [
            (m.mu[i] - probe.box_sds * np.sqrt(m.sigma.entries[i, i]),
             m.mu[i] + probe.box_sds * np.sqrt(m.sigma.entries[i, i]))
            for m in (a, b)
        ]
        lows[i] = min(s[0] for s in spans)
        highs[i] = max(s[1] for s in spans)
    if k >= 1:
        axes = [np.linspace(lows[i], highs[i], k) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
    else:
        grid = np.empty((0, d))
    if probe.far_points <= 0:
        return grid
    stream = RngStream(probe.seed, mix64(d, probe.far_points))
    z = stream.normals(probe.far_points * d).reshape(probe.far_points, d)
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    norms[norms == 0.0] = 1.0
    radii = probe.far_radius * stream.uniforms(probe.far_points)
    center = 0.5 * (lows + highs)
    far = center + (radii / norms)[:, None] * z
    return np.vstack([grid, far])


def sup_norm_distance(a: DepthModel, b: DepthModel, probe: ProbeGrid = ProbeGrid()) -> float:
    """Max absolute depth gap over the probe set.

    A lower bound of the true sup-norm distance between the two depth
    surfaces; it converges to it as the probe grid refines.
    """
    pts = probe_points(a, b, probe)
    return float(np.max(np.abs(mhd(pts, a) - mhd(pts, b))))
