"""Bayesian model families, their geometry, and consistency sets.

Four families are built in:

* ``Interval1D``: X, W ~ U[0, 1] independent, label 1 iff x >= w.
* ``HalfSpaceAngle2D``: X isotropic on the unit circle, W ~ U[0, 1) is the
  normalized angle of the decision boundary; label 1 iff the normalized angle
  of x lies in the half-turn [w, w + 1/2) (mod 1). This is a homogeneous
  half-plane classifier in R^2 (VC dimension 2) with a single free parameter.
* ``HalfSpaceUnitSphere(d)``: X and W isotropic on S^{d-1}, label 1 iff
  w.x >= 0. Parameters are stored in ambient coordinates; the family counts
  ``d - 1`` free parameters.
* ``GaussianLocation(sigma, tau)``: W ~ N(0, tau^2), Y = W + sigma * N(0, 1).
  Not realizable; used by the smooth-family formulas.

All entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple

import numpy as np
from scipy.special import digamma, gammaln

TWO_PI = 2.0 * math.pi


class Kind(str, Enum):
    INTERVAL_1D = "Interval1D"
    HALFSPACE_ANGLE_2D = "HalfSpaceAngle2D"
    HALFSPACE_SPHERE = "HalfSpaceUnitSphere"
    GAUSSIAN_LOCATION = "GaussianLocation"


class InconsistentDataError(ValueError):
    """No parameter in the family reproduces every training label."""


@dataclass(frozen=True)
class ModelFamily:
    kind: Kind
    d_w: int
    d_vc: int
    mu: float | None
    prior_entropy: float
    realizable: bool
    dim: int = 1
    sigma: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.d_w < 1 or self.d_vc < 1:
            raise ValueError("d_w and d_vc must be positive")
        if self.mu is not None and not self.mu > 0:
            raise ValueError("mu must be positive when present")

    @property
    def id(self) -> str:
        if self.kind is Kind.HALFSPACE_SPHERE:
            return f"HalfSpaceUnitSphere({self.dim})"
        if self.kind is Kind.GAUSSIAN_LOCATION:
            return f"GaussianLocation({self.sigma:g},{self.tau:g})"
        return self.kind.value

    @property
    def has_explicit_regions(self) -> bool:
        return self.kind in (Kind.INTERVAL_1D, Kind.HALFSPACE_ANGLE_2D)


def interval_1d() -> ModelFamily:
    return ModelFamily(Kind.INTERVAL_1D, d_w=1, d_vc=1, mu=1.0,
                       prior_entropy=0.0, realizable=True)


def halfspace_angle_2d() -> ModelFamily:
    # mu = 1/pi is the half-space sensitivity constant; W ~ U[0,1) has h = 0
    return ModelFamily(Kind.HALFSPACE_ANGLE_2D, d_w=1, d_vc=2, mu=1.0 / math.pi,
                       prior_entropy=0.0, realizable=True, dim=2)


def sphere_coordinate_entropy(d: int) -> float:
    """Differential entropy of the first d-1 coordinates of a uniform point on S^{d-1}.

    Those coordinates have density 2 / A_{d-1} * (1 - |u|^2)^{-1/2} on the unit
    ball, where A_{d-1} is the surface area of S^{d-1}; the factor 2 folds the
    two hemispheres.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    log_half_area = 0.5 * d * math.log(math.pi) - gammaln(0.5 * d)
    # E[log |x_d|] with x_d^2 ~ Beta(1/2, (d-1)/2)
    e_log_abs_last = 0.5 * (digamma(0.5) - digamma(0.5 * d))
    return float(log_half_area + e_log_abs_last)


def halfspace_sphere(d: int) -> ModelFamily:
    if d < 2:
        raise ValueError("HalfSpaceUnitSphere needs d >= 2")
    return ModelFamily(Kind.HALFSPACE_SPHERE, d_w=d - 1, d_vc=d, mu=1.0 / math.pi,
                       prior_entropy=sphere_coordinate_entropy(d), realizable=True,
                       dim=d)


def gaussian_location(sigma: float = 1.0, tau: float = 1.0) -> ModelFamily:
    if not (sigma > 0 and tau > 0):
        raise ValueError("sigma and tau must be positive")
    h = 0.5 * math.log(TWO_PI * math.e * tau * tau)
    return ModelFamily(Kind.GAUSSIAN_LOCATION, d_w=1, d_vc=1, mu=None,
                       prior_entropy=h, realizable=False, sigma=sigma, tau=tau)


def family_from_spec(spec: dict) -> ModelFamily:
    """Build a family from a config mapping such as ``{"kind": "HalfSpaceUnitSphere", "d": 3}``."""
    kind = Kind(spec["kind"])
    if kind is Kind.INTERVAL_1D:
        return interval_1d()
    if kind is Kind.HALFSPACE_ANGLE_2D:
        return halfspace_angle_2d()
    if kind is Kind.HALFSPACE_SPHERE:
        return halfspace_sphere(int(spec.get("d", 3)))
    return gaussian_location(float(spec.get("sigma", 1.0)), float(spec.get("tau", 1.0)))


def family_from_id(family_id: str) -> ModelFamily:
    """Inverse of :attr:`ModelFamily.id`."""
    if family_id.startswith("HalfSpaceUnitSphere("):
        return halfspace_sphere(int(family_id[len("HalfSpaceUnitSphere("):-1]))
    if family_id.startswith("GaussianLocation("):
        sigma, tau = family_id[len("GaussianLocation("):-1].split(",")
        return gaussian_location(float(sigma), float(tau))
    return family_from_spec({"kind": family_id})


# ---------------------------------------------------------------------------
# data containers


class Sample(NamedTuple):
    x: float | np.ndarray
    y: float


@dataclass(frozen=True)
class Dataset:
    """n samples drawn i.i.d. given one parameter draw.

    ``x`` has shape (n,) for 1-D families and (n, d) otherwise.
    """

    x: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def samples(self) -> Iterator[Sample]:
        for xi, yi in zip(self.x, self.y):
            yield Sample(xi, yi)

    @classmethod
    def empty(cls, family: ModelFamily) -> "Dataset":
        shape = (0,) if family.dim == 1 else (0, family.dim)
        return cls(np.zeros(shape), np.zeros(0, dtype=np.int8))


# ---------------------------------------------------------------------------
# sampling and labeling


def normalized_angle(x: np.ndarray) -> np.ndarray:
    """Angle of 2-D points measured from (1, 0), mapped to [0, 1)."""
    x = np.asarray(x, dtype=float)
    a = np.mod(np.arctan2(x[..., 1], x[..., 0]) / TWO_PI, 1.0)
    # np.mod(-tiny, 1.0) rounds to 1.0
    return np.where(a >= 1.0, 0.0, a)


def _unit_vectors(rng: np.random.Generator, size: int, d: int) -> np.ndarray:
    g = rng.standard_normal((size, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_prior(family: ModelFamily, rng: np.random.Generator, size: int | None = None):
    """Draw from P_W. With ``size`` given, returns a batch along axis 0."""
    m = 1 if size is None else size
    if family.kind in (Kind.INTERVAL_1D, Kind.HALFSPACE_ANGLE_2D):
        w = rng.random(m)
    elif family.kind is Kind.HALFSPACE_SPHERE:
        w = _unit_vectors(rng, m, family.dim)
    else:
        w = family.tau * rng.standard_normal(m)
    return w[0] if size is None else w


def sample_inputs(family: ModelFamily, n: int, rng: np.random.Generator) -> np.ndarray:
    if family.kind is Kind.INTERVAL_1D:
        return rng.random(n)
    if family.kind is Kind.HALFSPACE_ANGLE_2D:
        theta = TWO_PI * rng.random(n)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if family.kind is Kind.HALFSPACE_SPHERE:
        return _unit_vectors(rng, n, family.dim)
    return np.zeros(n)


def label(family: ModelFamily, x, w, rng: np.random.Generator | None = None):
    """Label input(s) ``x`` under parameter ``w``.

    Realizable families ignore ``rng``. Accepts a single input or a batch.
    """
    if family.kind is Kind.INTERVAL_1D:
        out = (np.asarray(x, dtype=float) >= w).astype(np.int8)
    elif family.kind is Kind.HALFSPACE_ANGLE_2D:
        out = (np.mod(normalized_angle(x) - w, 1.0) < 0.5).astype(np.int8)
    elif family.kind is Kind.HALFSPACE_SPHERE:
        out = (np.asarray(x, dtype=float) @ np.asarray(w, dtype=float) >= 0).astype(np.int8)
    else:
        if rng is None:
            raise ValueError("GaussianLocation labels need an rng")
        shape = np.shape(x)
        out = w + family.sigma * rng.standard_normal(shape)
    return out[()] if np.ndim(out) == 0 else out


def label_matrix(family: ModelFamily, x: np.ndarray, ws: np.ndarray) -> np.ndarray:
    """Labels of every input under every parameter: shape (len(ws), n), bool."""
    if family.kind is Kind.INTERVAL_1D:
        return np.asarray(x)[None, :] >= np.asarray(ws)[:, None]
    if family.kind is Kind.HALFSPACE_ANGLE_2D:
        a = normalized_angle(x)
        return np.mod(a[None, :] - np.asarray(ws)[:, None], 1.0) < 0.5
    if family.kind is Kind.HALFSPACE_SPHERE:
        return np.asarray(ws) @ np.asarray(x).T >= 0
    raise ValueError(f"{family.id} has no deterministic labeling")


def draw_dataset(family: ModelFamily, w, n: int, rng: np.random.Generator) -> Dataset:
    x = sample_inputs(family, n, rng)
    y = label(family, x, w, rng)
    return Dataset(x, np.atleast_1d(y))


# ---------------------------------------------------------------------------
# discrepancy sets and excess loss


def _check_parameter(family: ModelFamily, w) -> np.ndarray | float:
    if family.kind is Kind.INTERVAL_1D:
        w = float(w)
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"Interval1D parameter must lie in [0, 1], got {w}")
        return w
    if family.kind is Kind.HALFSPACE_ANGLE_2D:
        w = float(w)
        if not 0.0 <= w < 1.0:
            raise ValueError(f"HalfSpaceAngle2D parameter must lie in [0, 1), got {w}")
        return w
    if family.kind is Kind.HALFSPACE_SPHERE:
        w = np.asarray(w, dtype=float)
        if w.shape != (family.dim,) or not np.linalg.norm(w) > 0:
            raise ValueError(f"expected a nonzero vector of length {family.dim}")
        return w
    raise ValueError(f"{family.id} has no discrepancy set (not a classifier family)")


def circular_distance(w: float, v: float) -> float:
    d = abs(w - v) % 1.0
    return min(d, 1.0 - d)


def discrepancy_prob(family: ModelFamily, w, v) -> float:
    """P_X[X in E(w, v)]: mass of inputs labeled differently under w and v."""
    w = _check_parameter(family, w)
    v = _check_parameter(family, v)
    if family.kind is Kind.INTERVAL_1D:
        return abs(w - v)
    if family.kind is Kind.HALFSPACE_ANGLE_2D:
        # two boundary lines at angles w, v disagree on two antipodal arcs
        return 2.0 * circular_distance(w, v)
    cos = float(w @ v) / (np.linalg.norm(w) * np.linalg.norm(v))
    return math.acos(min(1.0, max(-1.0, cos))) / math.pi


@dataclass(frozen=True)
class ExcessLoss:
    value: float
    std_error: float = 0.0
    # (lower, upper) bracket (1 - 2 L(w)) P(E) <= D(w||v) <= P(E); None when undefined
    sandwich: tuple[float, float] | None = None
    exact: bool = True


def excess_loss(family, w, v, mc_budget: int = 100_000,
                rng: np.random.Generator | None = None) -> ExcessLoss:
    """D(w || v) = E_{Z ~ P_{Z|w}}[loss(Z; v) - loss(Z; w)].

    Realizable families: exact, equal to the discrepancy mass (0-1 loss).
    ``NoisyFamily``: Monte Carlo over the noisy test distribution with 0-1 loss.
    ``GaussianLocation``: Monte Carlo of the log-loss difference.
    """
    if isinstance(family, NoisyFamily):
        if mc_budget < 100:
            raise ValueError("mc_budget must be at least 100")
        if rng is None:
            raise ValueError("rng required for Monte Carlo excess loss")
        base = family.base
        p_e = discrepancy_prob(base, w, v)
        x = sample_inputs(base, mc_budget, rng)
        y_noisy = flip_labels(label(base, x, w), family.flip_prob, rng)
        diff = (label(base, x, v) != y_noisy).astype(float) - (label(base, x, w) != y_noisy)
        return ExcessLoss(float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(mc_budget)),
                          ((1.0 - 2.0 * family.flip_prob) * p_e, p_e), exact=False)
    if family.realizable:
        return ExcessLoss(discrepancy_prob(family, w, v), sandwich=None)
    if mc_budget < 100:
        raise ValueError("mc_budget must be at least 100")
    if rng is None:
        raise ValueError("rng required for Monte Carlo excess loss")
    y = w + family.sigma * rng.standard_normal(mc_budget)
    diff = ((y - v) ** 2 - (y - w) ** 2) / (2.0 * family.sigma ** 2)
    return ExcessLoss(float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(mc_budget)),
                      None, exact=False)


# ---------------------------------------------------------------------------
# consistency sets


@dataclass(frozen=True)
class ConsistencyRegion:
    """The set C(z^n) of parameters reproducing every training label.

    ``kind`` is ``"interval"`` (lo, hi with closed-ness flags), ``"arc"``
    (the circular arc (lo, lo + length] mod 1 with ``hi`` its closed end), or
    ``"implicit"`` (no closed form; use Monte Carlo membership).
    """

    kind: str
    lo: float = math.nan
    hi: float = math.nan
    lo_closed: bool = False
    hi_closed: bool = True
    length: float = math.nan

    @property
    def mass(self) -> float:
        if self.kind == "implicit":
            raise ValueError("implicit region has no closed-form mass")
        return self.length

    def midpoint(self) -> float:
        if self.kind == "interval":
            return 0.5 * (self.lo + self.hi)
        if self.kind == "arc":
            return (self.lo + 0.5 * self.length) % 1.0
        raise ValueError("implicit region has no midpoint")

    def infimum_point(self) -> float:
        """The lower endpoint if closed, else the next float inside the region."""
        if self.kind == "interval":
            return self.lo if self.lo_closed else float(np.nextafter(self.lo, np.inf))
        if self.kind == "arc":
            if self.length >= 1.0:
                return self.lo
            p = float(np.nextafter(self.lo, np.inf))
            return 0.0 if p >= 1.0 else p
        raise ValueError("implicit region has no endpoints")

    def contains(self, w: float) -> bool:
        if self.kind == "interval":
            above = w >= self.lo if self.lo_closed else w > self.lo
            below = w <= self.hi if self.hi_closed else w < self.hi
            return bool(above and below)
        if self.kind == "arc":
            if self.length >= 1.0:
                return 0.0 <= w < 1.0
            off = (w - self.lo) % 1.0
            return bool(0.0 < off <= self.length)
        raise ValueError("implicit region: test membership by labeling")


def consistency_region(family: ModelFamily, dataset: Dataset) -> ConsistencyRegion:
    """Closed-form C(z^n) where available; raises InconsistentDataError if empty."""
    if not family.realizable:
        raise ValueError("consistency sets are defined for realizable families only")
    y = np.asarray(dataset.y)
    if family.kind is Kind.INTERVAL_1D:
        x = np.asarray(dataset.x, dtype=float)
        zeros, ones = x[y == 0], x[y == 1]
        lo, lo_closed = (float(zeros.max()), False) if zeros.size else (0.0, True)
        hi = float(ones.min()) if ones.size else 1.0
        if (lo_closed and lo > hi) or (not lo_closed and lo >= hi):
            raise InconsistentDataError(
                f"threshold model cannot separate: max x(y=0)={lo} >= min x(y=1)={hi}")
        return ConsistencyRegion("interval", lo, hi, lo_closed, True, hi - lo)
    if family.kind is Kind.HALFSPACE_ANGLE_2D:
        if dataset.n == 0:
            return ConsistencyRegion("arc", 0.0, 0.0, True, True, 1.0)
        # each point requires psi in [w, w + 1/2) with psi its angle, shifted
        # by a half-turn for label 0
        psi = np.sort(np.mod(normalized_angle(dataset.x) + np.where(y == 1, 0.0, 0.5), 1.0))
        gaps = np.diff(np.concatenate([psi, [psi[0] + 1.0]]))
        k = int(np.argmax(gaps))
        length = float(gaps[k]) - 0.5
        if not length > 0:
            raise InconsistentDataError("no half-plane boundary reproduces these labels")
        first = float(psi[(k + 1) % len(psi)])
        lo = (first - length) % 1.0
        return ConsistencyRegion("arc", lo, first, False, True, length)
    return ConsistencyRegion("implicit")


def is_consistent(family: ModelFamily, dataset: Dataset, w) -> bool:
    """Membership of ``w`` in C(z^n), decided by relabeling the training inputs."""
    if dataset.n == 0:
        return True
    return bool(np.array_equal(np.atleast_1d(label(family, dataset.x, w)), dataset.y))


@dataclass(frozen=True)
class ConsistencyEstimate:
    prob: float
    std_error: float
    exact: bool
    hits: int = 0
    draws: int = 0
    flagged: bool = False


ZERO_HIT_ALPHA = 0.05


def zero_hit_upper_bound(draws: int, alpha: float = ZERO_HIT_ALPHA) -> float:
    """One-sided (1 - alpha) Clopper-Pearson upper bound after 0 hits in ``draws``."""
    return 1.0 - alpha ** (1.0 / draws)


def consistency_prob(family: ModelFamily, dataset: Dataset, inner_mc: int = 10_000,
                     rng: np.random.Generator | None = None,
                     chunk: int = 8192) -> ConsistencyEstimate:
    """Prior mass of C(z^n): closed form when possible, else Monte Carlo.

    Zero Monte Carlo hits return the zero-hit upper bound with ``flagged=True``.
    """
    if dataset.n == 0:
        return ConsistencyEstimate(1.0, 0.0, True)
    region = consistency_region(family, dataset)
    if region.kind != "implicit":
        return ConsistencyEstimate(region.mass, 0.0, True)
    if inner_mc < 1:
        raise ValueError("inner_mc must be positive")
    if rng is None:
        raise ValueError("rng required for Monte Carlo consistency mass")
    y = np.asarray(dataset.y, dtype=bool)
    hits = 0
    done = 0
    while done < inner_mc:
        m = min(chunk, inner_mc - done)
        vs = sample_prior(family, rng, m)
        hits += int(np.all(label_matrix(family, dataset.x, vs) == y[None, :], axis=1).sum())
        done += m
    if hits == 0:
        return ConsistencyEstimate(zero_hit_upper_bound(inner_mc), 0.0, False, 0, inner_mc,
                                   flagged=True)
    p = hits / inner_mc
    return ConsistencyEstimate(p, math.sqrt(p * (1.0 - p) / inner_mc), False, hits, inner_mc)


def labeling_cells(family: ModelFamily, x: np.ndarray):
    """Partition of the parameter space into cells of constant labeling of ``x``.

    Returns ``(masses, labels, midpoints)`` with ``labels[c]`` the labeling
    induced by cell ``c``, cells ordered by their lower end. Only for families
    with explicit regions.
    """
    if family.kind is Kind.INTERVAL_1D:
        cuts = np.sort(np.clip(np.asarray(x, dtype=float), 0.0, 1.0))
        edges = np.concatenate([[0.0], cuts, [1.0]])
        masses = np.diff(edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
    elif family.kind is Kind.HALFSPACE_ANGLE_2D:
        a = normalized_angle(x)
        if a.size == 0:
            return np.ones(1), np.zeros((1, 0), dtype=bool), np.array([0.5])
        cuts = np.sort(np.concatenate([a, np.mod(a + 0.5, 1.0)]))
        masses = np.diff(np.concatenate([cuts, [cuts[0] + 1.0]]))
        mids = np.mod(cuts + 0.5 * masses, 1.0)
    else:
        raise ValueError(f"{family.id} has no explicit labeling cells")
    return masses, label_matrix(family, x, mids), mids


# ---------------------------------------------------------------------------
# label noise


def flip_labels(y: np.ndarray, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    y = np.asarray(y)
    flips = rng.random(y.shape) < flip_prob
    return (y ^ flips).astype(np.int8)


@dataclass(frozen=True)
class NoisyFamily:
    """A realizable binary family whose labels flip i.i.d. with ``flip_prob``."""

    base: ModelFamily
    flip_prob: float
    realizable: bool = field(default=False, init=False)

    @property
    def margin(self) -> float:
        return 1.0 - 2.0 * self.flip_prob

    @property
    def id(self) -> str:
        return f"{self.base.id}+flip({self.flip_prob:g})"

    def draw(self, w, n: int, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
        """Returns (noisy dataset, clean dataset) sharing the same inputs."""
        clean = draw_dataset(self.base, w, n, rng)
        return Dataset(clean.x, flip_labels(clean.y, self.flip_prob, rng)), clean


def noisy_wrap(family: ModelFamily, flip_prob: float) -> NoisyFamily:
    if not family.realizable:
        raise ValueError("label noise wraps realizable binary families only")
    if not 0.0 <= flip_prob <= 0.5:
        raise ValueError(f"flip_prob must lie in [0, 1/2], got {flip_prob}")
    return NoisyFamily(family, float(flip_prob))
