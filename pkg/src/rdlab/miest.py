"""Mutual information I(Z^n; W) for realizable families: estimates and caps.

For a realizable family with X independent of W,

    I(Z^n; W) = H(Y^n | X^n) = -E[log P_{V ~ P_W}(V in C(Z^n))],

so a nested estimator draws (W, Z^n) in an outer loop and measures the prior
mass of the consistency set in an inner step (closed form when the family
has explicit regions, Monte Carlo otherwise). When the inner step is Monte
Carlo the estimator is biased upward: E[-log p_hat] >= -log p by Jensen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import partial

import numpy as np
from scipy.special import digamma, logsumexp

from .families import (ModelFamily, NoisyFamily, consistency_prob, draw_dataset,
                       label_matrix, labeling_cells, sample_prior)
from .seeding import (STREAM_MI, STREAM_NOISE_GAP, STREAM_NOISY_MI, check_seed,
                      child_rng, parallel_map)

EULER_GAMMA = float(np.euler_gamma)
UNRELIABLE_FLAG_FRACTION = 0.05


class MIMethod(str, Enum):
    NESTED_MC = "NestedMC"
    VC_BOUND = "VCBound"
    DIGAMMA_2D = "Digamma2D"
    CLARKE_BARRON = "ClarkeBarron"
    NOISE_GAP_MC = "NoiseGapMC"


@dataclass(frozen=True)
class MIEstimate:
    value: float
    std_error: float
    method: MIMethod
    n: int
    outer_mc: int = 0
    inner_mc: int = 0
    flagged_fraction: float = 0.0
    seed: int | None = None

    @property
    def unreliable(self) -> bool:
        return self.flagged_fraction > UNRELIABLE_FLAG_FRACTION


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


# ---------------------------------------------------------------------------
# nested Monte Carlo


def _nested_replicate(family: ModelFamily, n: int, inner_mc: int, seed: int,
                      index: int) -> tuple[float, bool]:
    rng = child_rng(seed, STREAM_MI, n, index)
    w = sample_prior(family, rng)
    data = draw_dataset(family, w, n, rng)
    est = consistency_prob(family, data, inner_mc, rng)
    return -math.log(est.prob), est.flagged


def mi_nested_mc(family: ModelFamily, n: int, outer_mc: int = 2000, inner_mc: int = 10_000,
                 seed: int = 0, workers: int = 1) -> MIEstimate:
    """Nested Monte Carlo estimate of I(Z^n; W) in nats.

    Replicates whose inner draws never hit the consistency set use the
    zero-hit upper bound on the mass and count toward ``flagged_fraction``;
    above 5% the estimate reports ``unreliable``.
    """
    if not family.realizable:
        raise ValueError("nested estimator needs a realizable family")
    if outer_mc < 100 or inner_mc < 100:
        raise ValueError("outer_mc and inner_mc must be at least 100")
    seed = check_seed(seed)
    inner = 0 if family.has_explicit_regions else inner_mc
    if n == 0:
        return MIEstimate(0.0, 0.0, MIMethod.NESTED_MC, 0, outer_mc, inner, 0.0, seed)
    fn = partial(_nested_replicate, family, n, inner_mc, seed)
    out = parallel_map(fn, range(outer_mc), workers)
    vals = np.array([v for v, _ in out])
    flagged = sum(f for _, f in out) / outer_mc
    mean, se = _mean_se(vals)
    return MIEstimate(mean, se, MIMethod.NESTED_MC, n, outer_mc, inner, flagged, seed)


# ---------------------------------------------------------------------------
# closed forms


def mi_vc_bound(d_vc: int, n: int) -> float:
    """Sauer-lemma cap on I(Z^n; W): d log(e n), sharpened to d log(e n / d) for n >= d."""
    if n < 1 or d_vc < 1:
        raise ValueError("n and d_vc must be positive")
    if n < d_vc:
        return d_vc * (1.0 + math.log(n))
    return d_vc * (1.0 + math.log(n / d_vc))


def mi_digamma_2d(n: int) -> float:
    """psi(n) + gamma, the minimum-angle cap for 2-D half-planes."""
    if n < 1:
        raise ValueError("n must be positive")
    return float(digamma(n)) + EULER_GAMMA


def mi_clarke_barron(d_w: int, n: int, expected_log_det_fisher_z: float, h_W: float) -> float:
    """Clarke-Barron expansion of I(Z^n; W) for smooth families, o_n(1) dropped.

    Only asymptotically valid in n.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    return (0.5 * d_w * math.log(n / (2.0 * math.pi * math.e))
            + 0.5 * expected_log_det_fisher_z + h_W)


def gaussian_location_fisher_logdet(sigma: float) -> float:
    """log det of the per-sample Fisher information of N(w, sigma^2) in w."""
    return -2.0 * math.log(sigma)


# ---------------------------------------------------------------------------
# mutual-information dimension


@dataclass(frozen=True)
class MIDimensionFit:
    points: list[tuple[int, MIEstimate]]
    slope: float
    intercept: float
    r_squared: float


def mi_dimension_fit(points, weighted: bool = False) -> MIDimensionFit:
    """Least-squares slope of I(Z^n; W) against log n (the d_I estimate).

    ``weighted`` uses 1/std_error^2 weights; closed-form points (zero error)
    make weighting undefined, so it is off by default.
    """
    points = sorted(((int(n), est) for n, est in points), key=lambda t: t[0])
    ns = np.array([n for n, _ in points], dtype=float)
    if len(set(ns)) < 3:
        raise ValueError("need at least 3 distinct n values")
    if ns.min() <= 0 or ns.max() / ns.min() < 8:
        raise ValueError("n values must span a factor of at least 8")
    x = np.log(ns)
    y = np.array([est.value for _, est in points])
    if weighted:
        se = np.array([est.std_error for _, est in points])
        if np.any(se <= 0):
            raise ValueError("weighted fit needs positive standard errors")
        wts = 1.0 / se ** 2
    else:
        wts = np.ones_like(x)
    X = np.column_stack([x, np.ones_like(x)])
    sw = np.sqrt(wts)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    ybar = np.average(y, weights=wts)
    ss_tot = float(np.sum(wts * (y - ybar) ** 2))
    r2 = 1.0 - float(np.sum(wts * resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return MIDimensionFit(points, float(coef[0]), float(coef[1]), r2)


# ---------------------------------------------------------------------------
# label noise


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log1p(-p))


def _log_noisy_likelihoods(k: np.ndarray, n: int, rho: float) -> np.ndarray:
    """log(rho^k (1 - rho)^(n - k)) for Hamming distances k."""
    if rho >= 0.5:
        return np.full(np.shape(k), n * math.log(0.5))
    return k * math.log(rho) + (n - k) * math.log1p(-rho)


def _noisy_log_marginal(family: ModelFamily, x, y_noisy, rho: float, inner_mc: int,
                        rng: np.random.Generator) -> float:
    """log p(y_noisy | x) = log E_V[rho^k(V) (1 - rho)^(n - k(V))]."""
    n = len(y_noisy)
    y = np.asarray(y_noisy, dtype=bool)
    if family.has_explicit_regions:
        masses, labels, _ = labeling_cells(family, x)
        k = np.sum(labels != y[None, :], axis=1)
        keep = masses > 0
        return float(logsumexp(np.log(masses[keep]) + _log_noisy_likelihoods(k[keep], n, rho)))
    vs = sample_prior(family, rng, inner_mc)
    k = np.sum(label_matrix(family, x, vs) != y[None, :], axis=1)
    return float(logsumexp(_log_noisy_likelihoods(k, n, rho)) - math.log(inner_mc))


def _posterior_label_entropy(family: ModelFamily, x, y_noisy, rho: float) -> float:
    """H(Y^n | x, y_noisy): entropy of the posterior over clean labelings."""
    n = len(y_noisy)
    masses, labels, _ = labeling_cells(family, x)
    keep = masses > 0
    masses, labels = masses[keep], labels[keep]
    uniq, inv = np.unique(labels, axis=0, return_inverse=True)
    inv = np.ravel(inv)
    log_mass = np.log(np.bincount(inv, weights=masses, minlength=len(uniq)))
    k = np.sum(uniq != np.asarray(y_noisy, dtype=bool)[None, :], axis=1)
    lw = log_mass + _log_noisy_likelihoods(k, n, rho)
    lw -= logsumexp(lw)
    return float(-np.sum(np.exp(lw) * lw))


def _noise_replicate(noisy: NoisyFamily, n: int, inner_mc: int, method: str, seed: int,
                     index: int) -> tuple[float, float, bool]:
    rng = child_rng(seed, STREAM_NOISE_GAP, n, index)
    base, rho = noisy.base, noisy.flip_prob
    w = sample_prior(base, rng)
    noisy_data, clean = noisy.draw(w, n, rng)
    est = consistency_prob(base, clean, inner_mc, rng)
    clean_term = -math.log(est.prob)
    if method == "posterior":
        gap = _posterior_label_entropy(base, clean.x, noisy_data.y, rho)
        return gap, clean_term - gap, est.flagged
    noisy_term = (-_noisy_log_marginal(base, clean.x, noisy_data.y, rho, inner_mc, rng)
                  - n * binary_entropy(rho))
    return clean_term - noisy_term, noisy_term, est.flagged


def _noise_sweep(noisy: NoisyFamily, n: int, outer_mc: int, inner_mc: int, seed: int,
                 workers: int, method: str):
    if outer_mc < 100 or inner_mc < 100:
        raise ValueError("outer_mc and inner_mc must be at least 100")
    if method not in ("two_term", "posterior"):
        raise ValueError(f"unknown method {method!r}")
    if method == "posterior" and not noisy.base.has_explicit_regions:
        raise ValueError("posterior method needs a family with explicit regions")
    fn = partial(_noise_replicate, noisy, n, inner_mc, method, seed)
    return parallel_map(fn, range(outer_mc), workers)


def noise_info_gap(noisy: NoisyFamily, n: int, outer_mc: int = 2000, inner_mc: int = 10_000,
                   seed: int = 0, workers: int = 1, method: str = "two_term") -> MIEstimate:
    """Information lost to label noise: I(Z^n; W) - I(X^n, Y~^n; W) = H(U^n | X^n, Y~^n).

    ``two_term`` estimates both informations on shared replicates: the clean
    one by the nested estimator and the noisy one as
    H(Y~^n | X^n) - n H_b(rho). Its per-replicate spread grows like sqrt(n).
    ``posterior`` (explicit-region families only) averages the exact posterior
    entropy of the clean labels given (x^n, y~^n); same mean, much lower
    variance.
    """
    if not noisy.base.realizable:
        raise ValueError("base family must be realizable")
    if not 0.0 < noisy.flip_prob <= 0.5:
        raise ValueError("flip_prob must lie in (0, 1/2]")
    seed = check_seed(seed)
    inner = 0 if noisy.base.has_explicit_regions else inner_mc
    if n == 0:
        return MIEstimate(0.0, 0.0, MIMethod.NOISE_GAP_MC, 0, outer_mc, inner, 0.0, seed)
    out = _noise_sweep(noisy, n, outer_mc, inner_mc, seed, workers, method)
    mean, se = _mean_se(np.array([g for g, _, _ in out]))
    flagged = sum(f for _, _, f in out) / outer_mc
    return MIEstimate(mean, se, MIMethod.NOISE_GAP_MC, n, outer_mc, inner, flagged, seed)


def mi_noisy_nested_mc(noisy: NoisyFamily, n: int, outer_mc: int = 2000,
                       inner_mc: int = 10_000, seed: int = 0, workers: int = 1) -> MIEstimate:
    """Estimate of I(X^n, Y~^n; W), the information carried by noisy labels."""
    seed = check_seed(seed)
    inner = 0 if noisy.base.has_explicit_regions else inner_mc
    if n == 0:
        return MIEstimate(0.0, 0.0, MIMethod.NESTED_MC, 0, outer_mc, inner, 0.0, seed)
    if outer_mc < 100 or inner_mc < 100:
        raise ValueError("outer_mc and inner_mc must be at least 100")
    fn = partial(_noisy_only_replicate, noisy, n, inner_mc, seed)
    vals = np.array(parallel_map(fn, range(outer_mc), workers))
    mean, se = _mean_se(vals)
    return MIEstimate(mean, se, MIMethod.NESTED_MC, n, outer_mc, inner, 0.0, seed)


def _noisy_only_replicate(noisy: NoisyFamily, n: int, inner_mc: int, seed: int,
                          index: int) -> float:
    rng = child_rng(seed, STREAM_NOISY_MI, n, index)
    w = sample_prior(noisy.base, rng)
    noisy_data, clean = noisy.draw(w, n, rng)
    return (-_noisy_log_marginal(noisy.base, clean.x, noisy_data.y, noisy.flip_prob,
                                 inner_mc, rng)
            - n * binary_entropy(noisy.flip_prob))
