"""Point-cloud stability score for a candidate placement.

The score asks how many plausible centers of mass project inside the
support polygon.  Hypotheses are drawn from a Gaussian fitted to the posed
cloud; the inlier fraction is then mapped through a normalized logistic so
that a 50/50 split scores 0 and a unanimous vote scores 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateHull, DegenerateSupport, EmptyGeometry, InsufficientPoints, GeometryError
from .geometry import (
    PointCloud,
    Polygon2D,
    RigidPose,
    clip_convex_polygon,
    convex_hull_2d,
    frame_from_z,
    transform_points,
)

UP = np.array([0.0, 0.0, 1.0])
MIN_ELLIPSOID_POINTS = 10
MIN_SEMI_AXIS = 1e-6


@dataclass(frozen=True)
class StabilityParams:
    """Tunable parameters of the stability term.

    ``sigma_scale`` sets the standard deviation of the CoM hypotheses as a
    fraction of each ellipsoid semi-axis.  The logistic crosses 0.5 when
    ``p_in`` is about ``c``; for the 0.5 crossing to land near the physical
    tipping point the hypothesis spread must stay small, hence the default.
    """

    k: float = 12.0
    c: float = 0.75
    epsilon: float = 0.003
    samples: int = 2000
    sigma_scale: float = 0.05
    proximity: float = 0.25

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("logistic steepness k must be positive")
        if not 0.5 < self.c < 1.0:
            raise ValueError("logistic center c must lie in (0.5, 1.0)")
        if not self.epsilon > 0:
            raise ValueError("contact band epsilon must be positive")
        if int(self.samples) < 100:
            raise ValueError("at least 100 CoM samples are required")
        if not self.sigma_scale > 0:
            raise ValueError("sigma_scale must be positive")
        if not self.proximity > 0:
            raise ValueError("proximity must be positive")


@dataclass(frozen=True, eq=False)
class EllipsoidFit:
    mean: np.ndarray
    semi_axes: np.ndarray
    axes: np.ndarray  # columns: lateral, longitudinal, vertical

    def __post_init__(self):
        s = np.asarray(self.semi_axes, dtype=float)
        R = np.asarray(self.axes, dtype=float)
        if s.shape != (3,) or np.any(s <= 0):
            raise GeometryError("ellipsoid semi-axes must be strictly positive")
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-9:
            raise GeometryError("ellipsoid axes must be orthonormal")
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "semi_axes", s)
        object.__setattr__(self, "axes", R)


@dataclass(frozen=True, eq=False)
class ComHypothesisSet:
    samples: np.ndarray
    seed: int
    count: int

    def __post_init__(self):
        if len(self.samples) != self.count:
            raise ValueError("count must equal the number of samples")


@dataclass(frozen=True, eq=False)
class StabilityResult:
    """Outcome of one placement evaluation.

    ``support_polygon`` is None when contacts were degenerate or the support
    was clipped away entirely; the score is then 0.
    """

    support_polygon: Optional[Polygon2D]
    com_samples: Optional[ComHypothesisSet]
    inlier_fraction: float
    score: float
    contacts: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    @property
    def degenerate(self) -> bool:
        return self.support_polygon is None


def extract_support_contacts(cloud: PointCloud, epsilon: float, normal=UP) -> np.ndarray:
    """Points within ``epsilon`` of the lowest point along ``normal``."""
    p = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(p) == 0:
        raise EmptyGeometry("cannot extract contacts from an empty cloud")
    h = p @ np.asarray(normal, dtype=float)
    return p[h - h.min() <= epsilon]


def support_polygon(contacts) -> Polygon2D:
    """Convex hull of the contacts' vertical (xy) projections."""
    c = np.asarray(contacts, dtype=float).reshape(-1, 3)
    try:
        return convex_hull_2d(c[:, :2])
    except DegenerateHull as exc:
        raise DegenerateSupport(len(c)) from exc


def fit_com_ellipsoid(cloud: PointCloud, axes=None, proximity: float = 0.25) -> EllipsoidFit:
    """Fit the CoM ellipsoid to a cloud.

    The center is the point mean.  The lateral and longitudinal semi-axes are
    half the cloud's extent along the first two columns of ``axes``.  The
    vertical semi-axis only uses points whose in-plane distance to the mean is
    at most ``proximity`` times the mean lateral extent.
    """
    p = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(p) < MIN_ELLIPSOID_POINTS:
        raise InsufficientPoints(len(p), MIN_ELLIPSOID_POINTS)
    R = np.eye(3) if axes is None else np.asarray(axes, dtype=float)
    mu = p.mean(axis=0)
    q = (p - mu) @ R
    ext = q.max(axis=0) - q.min(axis=0)
    radius = proximity * 0.5 * (ext[0] + ext[1])
    near = np.hypot(q[:, 0], q[:, 1]) <= radius
    if near.sum() >= 2:
        vert = q[near, 2].max() - q[near, 2].min()
    else:
        vert = ext[2]
    semi = np.maximum(0.5 * np.array([ext[0], ext[1], vert]), MIN_SEMI_AXIS)
    return EllipsoidFit(mu, semi, R)


def sample_com_hypotheses(fit: EllipsoidFit, n: int, seed: int, sigma_scale: float = 0.05) -> ComHypothesisSet:
    """Draw ``n`` Gaussian CoM hypotheses with per-axis std ``sigma_scale * semi_axis``."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 3)) * (sigma_scale * fit.semi_axes)
    return ComHypothesisSet(fit.mean + z @ fit.axes.T, int(seed), int(n))


def inlier_fraction(samples: ComHypothesisSet, sp: Polygon2D) -> float:
    pts = samples.samples if isinstance(samples, ComHypothesisSet) else np.asarray(samples, dtype=float)
    if len(pts) == 0:
        raise ValueError("empty sample set")
    inside = sp.contains(pts[:, :2])
    return int(inside.sum()) / len(pts)


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def stability_score(p_in, params: StabilityParams = StabilityParams()):
    """Normalized logistic of the inlier fraction, clamped to [0, 1]."""
    k, c = params.k, params.c
    lo = _logistic(k * (0.5 - c))
    hi = _logistic(k * (1.0 - c))
    p = np.asarray(p_in, dtype=float)
    val = np.clip((_logistic(k * (p - c)) - lo) / (hi - lo), 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def evaluate_placement_stability(
    cloud: PointCloud,
    pose: RigidPose,
    params: StabilityParams = StabilityParams(),
    seed: int = 0,
    support_normal=UP,
    support_region: Optional[Polygon2D] = None,
) -> StabilityResult:
    """Score one placement of ``cloud`` (object frame) at world pose ``pose``.

    ``support_normal`` is the outward normal of the supporting surface
    (world +z for a level table).  ``support_region`` is the xy footprint of
    the supporting surface; when given, the contact polygon is clipped to it
    before the inlier test.
    """
    if len(cloud) == 0:
        raise EmptyGeometry("empty object cloud")
    posed = transform_points(pose, cloud)
    n = np.asarray(support_normal, dtype=float)
    n = n / np.linalg.norm(n)
    contacts = extract_support_contacts(posed, params.epsilon, n)
    try:
        sp = support_polygon(contacts)
    except DegenerateSupport:
        return StabilityResult(None, None, 0.0, 0.0, contacts)
    if support_region is not None:
        sp = clip_convex_polygon(sp, support_region)
        if sp is None:
            return StabilityResult(None, None, 0.0, 0.0, contacts)
    fit = fit_com_ellipsoid(posed, frame_from_z(n), params.proximity)
    hyp = sample_com_hypotheses(fit, int(params.samples), seed, params.sigma_scale)
    p_in = inlier_fraction(hyp, sp)
    return StabilityResult(sp, hyp, p_in, stability_score(p_in, params), contacts)
