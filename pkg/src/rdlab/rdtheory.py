"""Rate-distortion functions: analytic Shannon lower bounds and Blahut-Arimoto.

Rates are in nats. The Blahut-Arimoto solver works on a discretized prior and
a distortion matrix, parameterized by the Lagrange slope s < 0 of the curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .families import Kind, ModelFamily


@dataclass(frozen=True)
class SLBParams:
    prior_entropy: float
    d_w: int
    mu: float
    l_max: float = 0.0
    margin_t: float = 1.0

    def __post_init__(self):
        if self.d_w < 1:
            raise ValueError("d_w must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0.0 <= self.l_max < 0.5:
            raise ValueError("l_max must lie in [0, 1/2)")
        if not 0.0 < self.margin_t <= 1.0:
            raise ValueError("margin_t must lie in (0, 1]")

    @classmethod
    def from_family(cls, family: ModelFamily, l_max: float = 0.0,
                    margin_t: float = 1.0) -> "SLBParams":
        if family.mu is None:
            raise ValueError(f"{family.id} has no sensitivity constant")
        return cls(family.prior_entropy, family.d_w, family.mu, l_max, margin_t)


def slb_zero_one(params: SLBParams, D: float) -> float:
    """Shannon lower bound on R(D) under 0-1 loss for a mu-sensitive family.

    ``[h(W) - d_w log(2 e D / ((1 - 2 L_max) mu t))]^+``. With ``l_max = 0``
    and ``margin_t = 1`` this is the realizable bound.
    """
    if not D > 0:
        raise ValueError("D must be positive")
    scale = (1.0 - 2.0 * params.l_max) * params.mu * params.margin_t
    r = params.prior_entropy - params.d_w * math.log(2.0 * math.e * D / scale)
    return r if r > 0 else 0.0


def slb_halfspace(d: int, D: float) -> float:
    """Half-space bound in R^d: ``[(d - 1) log(1 / (4 pi e D))]^+``."""
    if not D > 0:
        raise ValueError("D must be positive")
    r = (d - 1) * -math.log(4.0 * math.pi * math.e * D)
    return r if r > 0 else 0.0


def slb_smooth(h_W: float, d_w: int, det_fisher_y: float, D: float) -> float:
    """Log-loss bound for smooth families, without its o_n(1) term.

    ``[h(W) - (d_w/2) log(4 pi e D / d_w) + (1/2) log det E[I_{Y|X,W}]]^+``;
    exact for Gaussian families.
    """
    if not (D > 0 and det_fisher_y > 0 and d_w >= 1):
        raise ValueError("D, det_fisher_y and d_w must be positive")
    r = (h_W - 0.5 * d_w * math.log(4.0 * math.pi * math.e * D / d_w)
         + 0.5 * math.log(det_fisher_y))
    return r if r > 0 else 0.0


# ---------------------------------------------------------------------------
# discrete problems


@dataclass(frozen=True)
class DiscreteRDProblem:
    prior: np.ndarray
    distortion: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prior, dtype=float)
        d = np.asarray(self.distortion, dtype=float)
        if p.ndim != 1 or d.ndim != 2 or d.shape[0] != p.size:
            raise ValueError("prior must be (m,) and distortion (m, k)")
        if np.any(p < 0) or not p.sum() > 0:
            raise ValueError("prior must be nonnegative with positive total")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distortion entries must be finite and nonnegative")
        if d.shape[0] == d.shape[1] and np.any(np.diag(d) != 0):
            raise ValueError("square distortion matrices need a zero diagonal")
        object.__setattr__(self, "prior", p / p.sum())
        object.__setattr__(self, "distortion", d)


def binary_hamming(p: float = 0.5) -> DiscreteRDProblem:
    return DiscreteRDProblem(np.array([p, 1.0 - p]), np.array([[0.0, 1.0], [1.0, 0.0]]))


def discretize_family(family: ModelFamily, grid: int) -> DiscreteRDProblem:
    """Uniform midpoint grid of the prior with excess-loss distortions."""
    if grid < 2:
        raise ValueError("grid must have at least 2 atoms")
    w = (np.arange(grid) + 0.5) / grid
    if family.kind is Kind.INTERVAL_1D:
        dist = np.abs(w[:, None] - w[None, :])
    elif family.kind is Kind.HALFSPACE_ANGLE_2D:
        dd = np.abs(w[:, None] - w[None, :])
        dist = 2.0 * np.minimum(dd, 1.0 - dd)
    else:
        raise ValueError(f"no grid discretization for {family.id}")
    return DiscreteRDProblem(np.full(grid, 1.0 / grid), dist)


def rd_dmax(problem: DiscreteRDProblem) -> float:
    """Smallest distortion reachable at zero rate (best constant reproduction)."""
    return float(np.min(problem.prior @ problem.distortion))


# ---------------------------------------------------------------------------
# Blahut-Arimoto


class RDMethod(str, Enum):
    SHANNON_LB = "ShannonLB"
    BLAHUT_ARIMOTO = "BlahutArimoto"


@dataclass(frozen=True)
class RDPoint:
    D: float
    R: float
    slope: float
    iterations: int = 0
    gap: float = 0.0


@dataclass
class RDCurve:
    points: list[RDPoint]
    method: RDMethod

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: (p.D, -p.R))

    @property
    def D(self) -> np.ndarray:
        return np.array([p.D for p in self.points])

    @property
    def R(self) -> np.ndarray:
        return np.array([p.R for p in self.points])

    def is_nonincreasing(self, atol: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.R) <= atol))

    def is_convex(self, atol: float = 1e-9) -> bool:
        """Chord test: every interior point lies on or below its neighbours' chord."""
        D, R = self.D, self.R
        for i in range(1, len(D) - 1):
            span = D[i + 1] - D[i - 1]
            if span <= 0:
                continue
            lam = (D[i] - D[i - 1]) / span
            if R[i] > (1 - lam) * R[i - 1] + lam * R[i + 1] + atol:
                return False
        return True


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, gap: float):
        super().__init__(msg)
        self.gap = gap


@dataclass
class BAState:
    """Result of one fixed-slope run, including the per-iteration objective."""

    point: RDPoint
    q: np.ndarray
    objective: list[float] = field(default_factory=list)


def ba_fixed_slope(problem: DiscreteRDProblem, slope: float, max_iter: int = 100_000,
                   tol: float = 1e-8, q0: np.ndarray | None = None,
                   track: bool = False) -> BAState:
    """Alternating minimization of I(W; What) - slope * E[d] at a fixed slope < 0.

    Stops when Blahut's gap ``max_j log c_j - sum_j q_j log c_j`` drops below
    ``tol``; that gap bounds the distance of the rate from the true curve.
    """
    if not slope < 0:
        raise ValueError("slope must be negative")
    if not tol > 0:
        raise ValueError("tol must be positive")
    p, d = problem.prior, problem.distortion
    support = p > 0
    p_s, d_s = p[support], d[support]
    q = np.full(d.shape[1], 1.0 / d.shape[1]) if q0 is None else np.asarray(q0, float).copy()
    objective = []
    gap = math.inf
    log_domain = slope * float(d_s.max(initial=0.0)) < -600.0
    A = None if log_domain else np.exp(slope * d_s)
    for it in range(1, max_iter + 1):
        if log_domain:
            with np.errstate(divide="ignore"):
                log_q = np.log(q)
            log_z = logsumexp(log_q[None, :] + slope * d_s, axis=1)
            # c_j = sum_i p_i exp(s d_ij) / Z_i
            log_c = logsumexp(slope * d_s - log_z[:, None], axis=0, b=p_s[:, None])
            c = np.exp(log_c - log_c.max())
            top = float(log_c.max())
        else:
            z = A @ q
            log_z = np.log(z)
            c = A.T @ (p_s / z)
            log_c = np.log(c)
            top = float(log_c.max())
        if track:
            objective.append(float(-p_s @ log_z))
        gap = float(top - q @ log_c)
        q = q * c
        q /= q.sum()
        if gap < tol:
            break
    else:
        raise ConvergenceError(f"Blahut-Arimoto did not converge in {max_iter} "
                               f"iterations at slope {slope} (gap {gap:.3g})", gap)
    # channel for the final marginal
    with np.errstate(divide="ignore"):
        M = np.log(q)[None, :] + slope * d_s
    log_cond = M - logsumexp(M, axis=1)[:, None]
    cond = np.exp(log_cond)
    D = float(p_s @ np.sum(cond * d_s, axis=1))
    log_out = logsumexp(log_cond, axis=0, b=p_s[:, None])
    with np.errstate(invalid="ignore"):
        terms = np.where(cond > 0, cond * (log_cond - log_out[None, :]), 0.0)
    R = max(0.0, float(p_s @ terms.sum(axis=1)))
    return BAState(RDPoint(D, R, slope, it, gap), q, objective)


def _warm(q: np.ndarray) -> np.ndarray:
    # pure warm starts stall on near-zero atoms; keep half the mass uniform
    return 0.5 * q + 0.5 / q.size


def blahut_arimoto(problem: DiscreteRDProblem, slopes, max_iter: int = 100_000,
                   tol: float = 1e-8) -> RDCurve:
    """R(D) points for each slope below ``rd_dmax``, plus the zero-rate point there."""
    dmax = rd_dmax(problem)
    points = []
    q = None
    for s in sorted(slopes):
        state = ba_fixed_slope(problem, s, max_iter, tol, q0=q)
        q = _warm(state.q)
        # at or past dmax the true rate is zero; keep only the exact endpoint
        if state.point.D < dmax:
            points.append(state.point)
    points.append(RDPoint(dmax, 0.0, 0.0))
    return RDCurve(points, RDMethod.BLAHUT_ARIMOTO)


def rd_at_distortion(problem: DiscreteRDProblem, D: float, max_iter: int = 100_000,
                     tol: float = 1e-8, d_rtol: float = 1e-4) -> RDPoint:
    """R at a target distortion by bisection over the slope.

    The last slope's tangent line is used to move the rate from the achieved
    distortion to the exact target.
    """
    dmax = rd_dmax(problem)
    if D >= dmax:
        return RDPoint(D, 0.0, 0.0)
    if not D > 0:
        raise ValueError("target distortion must be positive")
    lo = -1.0
    state = ba_fixed_slope(problem, lo, max_iter, tol)
    while state.point.D > D:
        lo *= 2.0
        state = ba_fixed_slope(problem, lo, max_iter, tol, q0=_warm(state.q))
        if lo < -1e6:
            raise ConvergenceError("cannot reach target distortion", state.point.D - D)
    lo_state = state
    hi = lo / 2.0 if lo < -1.0 else -1e-3
    best = lo_state
    for _ in range(200):
        if abs(best.point.D - D) <= d_rtol * D:
            break
        mid = -math.sqrt(lo * hi)
        state = ba_fixed_slope(problem, mid, max_iter, tol, q0=_warm(best.q))
        if state.point.D > D:
            hi = mid
        else:
            lo = mid
        if abs(state.point.D - D) < abs(best.point.D - D):
            best = state
    pt = best.point
    R = max(0.0, pt.R + pt.slope * (D - pt.D))
    return RDPoint(D, R, pt.slope, pt.iterations, pt.gap)


def slb_curve(params: SLBParams, distortions) -> RDCurve:
    pts = []
    for D in distortions:
        R = slb_zero_one(params, D)
        pts.append(RDPoint(float(D), R, -params.d_w / D if R > 0 else 0.0))
    return RDCurve(pts, RDMethod.SHANNON_LB)


__all__ = [
    "SLBParams", "slb_zero_one", "slb_halfspace", "slb_smooth", "DiscreteRDProblem",
    "binary_hamming", "discretize_family", "rd_dmax", "RDMethod", "RDPoint", "RDCurve",
    "ConvergenceError", "ba_fixed_slope", "blahut_arimoto", "rd_at_distortion",
    "slb_curve",
]
