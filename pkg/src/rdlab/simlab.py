"""End-to-end simulation of Bayesian learners against the excess-risk bounds.

Each trial draws W from the prior, a training set of size n (labels flipped
with probability rho when the training data are noisy), runs a learner, and
records the exact excess loss of its output:

* clean test distribution: D(W || What) = P_X[X in E(W, What)];
* noisy test distribution with i.i.d. flips: on the discrepancy set the true
  label agrees with W's prediction with probability 1 - rho and with What's
  with probability rho, and elsewhere both predictions coincide, so
  D(W || What) = (1 - rho - rho) P_X[E] = (1 - 2 rho) P_X[E].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial

import numpy as np

from .bounds import BoundReport, excess_lb_cor7, excess_lb_margin, vc_upper_reference
from .families import (Dataset, InconsistentDataError, Kind, ModelFamily, consistency_region,
                       discrepancy_prob, draw_dataset, excess_loss, flip_labels,
                       is_consistent, label, label_matrix, labeling_cells, noisy_wrap,
                       sample_prior)
from .seeding import STREAM_EXPERIMENT, check_seed, child_rng, parallel_map


class LearnerKind(str, Enum):
    POSTERIOR_SAMPLE = "PosteriorSample"
    CONSISTENT_MIDPOINT = "ConsistentMidpoint"
    FIRST_CONSISTENT = "FirstConsistent"


@dataclass(frozen=True)
class Learner:
    kind: LearnerKind
    max_rejections: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "kind", LearnerKind(self.kind))
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    rho: float = 0.0
    train_noisy: bool = False
    test_noisy: bool = False

    def __post_init__(self):
        if not 0.0 <= self.rho <= 0.5:
            raise ValueError("rho must lie in [0, 1/2]")

    @property
    def clean(self) -> bool:
        return self.rho == 0.0 or not (self.train_noisy or self.test_noisy)


CLEAN = NoiseSpec()


class RejectionLimitError(RuntimeError):
    def __init__(self, msg: str, mass_estimate: float):
        super().__init__(msg)
        self.mass_estimate = mass_estimate


class BracketViolation(AssertionError):
    def __init__(self, n: int, detail: str, results=None):
        super().__init__(f"bracket violated at n={n}: {detail}")
        self.n = n
        self.results = results


class IdentityViolation(AssertionError):
    pass


# ---------------------------------------------------------------------------
# learners


def _posterior_sample(family: ModelFamily, dataset: Dataset, learner: Learner,
                      rng: np.random.Generator):
    # uniform-prior rejection: exact draw from P_{W | z^n} for realizable data
    batch, tried = 64, 0
    y = np.asarray(dataset.y)
    while tried < learner.max_rejections:
        m = min(batch, learner.max_rejections - tried)
        vs = sample_prior(family, rng, m)
        if dataset.n == 0:
            return vs[0]
        ok = np.all(label_matrix(family, dataset.x, vs) == y.astype(bool)[None, :], axis=1)
        tried += m
        if ok.any():
            return vs[int(np.argmax(ok))]
        batch = min(2 * batch, 65536)
    raise RejectionLimitError(
        f"no consistent draw in {learner.max_rejections} proposals",
        mass_estimate=1.0 / learner.max_rejections)


def _first_consistent(family: ModelFamily, dataset: Dataset, region) -> float:
    w = region.infimum_point()
    for _ in range(64):
        if is_consistent(family, dataset, w):
            return w
        w = float(np.nextafter(w, np.inf))
    return region.midpoint()


def erm_fallback(family: ModelFamily, dataset: Dataset) -> float:
    """Minimizer of training 0-1 error; ties go to the first minimizing cell's midpoint."""
    if family.kind is Kind.INTERVAL_1D:
        order = np.argsort(dataset.x, kind="stable")
        xs = np.asarray(dataset.x, dtype=float)[order]
        ys = np.asarray(dataset.y)[order]
        # cell j = (xs[j-1], xs[j]]: points 0..j-1 get label 0, the rest label 1
        ones_before = np.concatenate([[0], np.cumsum(ys == 1)])
        zeros_after = np.concatenate([[0], np.cumsum(ys == 0)])
        zeros_after = zeros_after[-1] - zeros_after
        errors = ones_before + zeros_after
        j = int(np.argmin(errors))
        edges = np.concatenate([[0.0], xs, [1.0]])
        return 0.5 * (edges[j] + edges[j + 1])
    if family.kind is Kind.HALFSPACE_ANGLE_2D:
        masses, labels, mids = labeling_cells(family, dataset.x)
        errors = np.sum(labels != np.asarray(dataset.y, dtype=bool)[None, :], axis=1)
        c = int(np.argmin(np.where(masses > 0, errors, np.iinfo(np.int64).max)))
        return float(mids[c])
    raise ValueError(f"no ERM fallback for {family.id}")


def learn(learner: Learner, family: ModelFamily, dataset: Dataset,
          rng: np.random.Generator):
    """Run a learning rule; falls back to ERM when no parameter fits the data."""
    try:
        region = consistency_region(family, dataset)
    except InconsistentDataError:
        return erm_fallback(family, dataset)
    if learner.kind is LearnerKind.POSTERIOR_SAMPLE:
        return _posterior_sample(family, dataset, learner, rng)
    if region.kind == "implicit":
        raise ValueError(f"{learner.kind.value} needs an explicit consistency region")
    if learner.kind is LearnerKind.CONSISTENT_MIDPOINT:
        return region.midpoint()
    return _first_consistent(family, dataset, region)


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentResult:
    family: str
    learner: str
    noise: NoiseSpec
    n: int
    trials: int
    excess_mean: float
    excess_se: float
    train_err: float
    lower_bound: BoundReport | None
    upper_bound: BoundReport | None
    seed: int
    per_trial: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        lb, ub = self.lower_bound, self.upper_bound
        return {
            "family": self.family, "learner": self.learner, "rho": self.noise.rho,
            "train_noisy": self.noise.train_noisy, "test_noisy": self.noise.test_noisy,
            "n": self.n, "trials": self.trials, "excess_mean": self.excess_mean,
            "excess_se": self.excess_se, "train_err": self.train_err,
            "lb_name": lb.name.value if lb else "", "lb_value": lb.value if lb else None,
            "ub_name": ub.name.value if ub else "", "ub_value": ub.value if ub else None,
            "seed": self.seed,
        }


EXPERIMENT_COLUMNS = ("family", "learner", "rho", "train_noisy", "test_noisy", "n", "trials",
                      "excess_mean", "excess_se", "train_err", "lb_name", "lb_value",
                      "ub_name", "ub_value", "seed")


def _trial(family: ModelFamily, learner: Learner, n: int, noise: NoiseSpec,
           mc_check: int, seed: int, index: int) -> tuple[float, float, float]:
    """One trial: (excess loss, training error, test loss)."""
    rng = child_rng(seed, STREAM_EXPERIMENT, n, index)
    w = sample_prior(family, rng)
    data = draw_dataset(family, w, n, rng)
    if noise.train_noisy and noise.rho > 0:
        data = Dataset(data.x, flip_labels(data.y, noise.rho, rng))
    w_hat = learn(learner, family, data, rng)
    p_e = discrepancy_prob(family, w, w_hat)
    if noise.test_noisy:
        if mc_check:
            excess = excess_loss(noisy_wrap(family, noise.rho), w, w_hat, mc_check, rng).value
        else:
            excess = (1.0 - 2.0 * noise.rho) * p_e
        test_loss = noise.rho + excess
    else:
        excess = p_e
        test_loss = p_e
    if n:
        train_err = float(np.mean(np.atleast_1d(label(family, data.x, w_hat)) != data.y))
    else:
        train_err = 0.0
    return excess, train_err, test_loss


def matching_bounds(family: ModelFamily, n: int, noise: NoiseSpec = CLEAN):
    """Lower bound (Cor7, or Thm11 with margin 1 - 2 rho on noisy test data) and VC reference."""
    lb = ub = None
    if family.mu is not None and n >= family.d_vc:
        if noise.test_noisy and noise.rho > 0:
            t = 1.0 - 2.0 * noise.rho
            if t > 0:
                lb = excess_lb_margin(family.d_w, family.d_vc, n, family.mu,
                                      family.prior_entropy, t)
        else:
            lb = excess_lb_cor7(family.d_w, family.d_vc, n, family.mu, family.prior_entropy)
    if n >= 2:
        ub = vc_upper_reference(family.d_vc, n)
    return lb, ub


def run_experiment(family: ModelFamily, learner: Learner, n: int, trials: int,
                   noise: NoiseSpec = CLEAN, seed: int = 0, workers: int = 1,
                   mc_check: int = 0) -> ExperimentResult:
    """Monte Carlo excess Bayes risk of ``learner`` at sample size ``n``.

    ``mc_check > 0`` replaces the analytic noisy-test excess loss by a
    Monte Carlo estimate with that many test points per trial.
    """
    if trials < 100:
        raise ValueError("trials must be at least 100")
    if not family.realizable:
        raise ValueError("simulation needs a realizable family")
    seed = check_seed(seed)
    fn = partial(_trial, family, learner, n, noise, mc_check, seed)
    out = np.array(parallel_map(fn, range(trials), workers))
    excess, train_err, test_loss = out[:, 0], out[:, 1], out[:, 2]
    lb, ub = matching_bounds(family, n, noise)
    return ExperimentResult(
        family.id, learner.kind.value, noise, n, trials,
        float(excess.mean()), float(excess.std(ddof=1) / math.sqrt(trials)),
        float(train_err.mean()), lb, ub, seed,
        per_trial={"excess": excess, "train_err": train_err, "test_loss": test_loss})


@dataclass
class SweepResult:
    results: list[ExperimentResult]
    slope: float
    intercept: float


def loglog_slope(ns, values) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values)), 1)
    return float(slope), float(intercept)


def check_bracket(res: ExperimentResult, n_sigma: float = 3.0) -> None:
    hi = res.excess_mean + n_sigma * res.excess_se
    lo = res.excess_mean - n_sigma * res.excess_se
    if res.lower_bound is not None and res.lower_bound.value > hi:
        raise BracketViolation(res.n, f"lower bound {res.lower_bound.value:.6g} > "
                                      f"empirical + {n_sigma}se = {hi:.6g}")
    if res.upper_bound is not None and lo > res.upper_bound.value:
        raise BracketViolation(res.n, f"empirical - {n_sigma}se = {lo:.6g} > "
                                      f"upper bound {res.upper_bound.value:.6g}")


def sandwich_sweep(family: ModelFamily, learner: Learner, n_list, trials: int,
                   seed: int = 0, workers: int = 1, noise: NoiseSpec = CLEAN,
                   check: bool = True) -> SweepResult:
    """run_experiment over ``n_list`` plus the log-log rate of the empirical risk.

    Raises BracketViolation (carrying all results) when a bound is violated
    beyond 3 standard errors and ``check`` is set.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 4 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing with at least 4 values")
    if n_list[0] <= 0 or n_list[-1] / n_list[0] < 16:
        raise ValueError("n_list must span a factor of at least 16")
    results = [run_experiment(family, learner, n, trials, noise, seed, workers)
               for n in n_list]
    slope, intercept = loglog_slope(n_list, [r.excess_mean for r in results])
    sweep = SweepResult(results, slope, intercept)
    if check:
        for r in results:
            try:
                check_bracket(r)
            except BracketViolation as e:
                e.results = sweep
                raise
    return sweep


@dataclass(frozen=True)
class IdentityReport:
    status: str  # "pass" or "not_applicable"
    max_deviation: float
    trials: int
    reason: str = ""


def generalization_identity_check(family: ModelFamily, learner: Learner, n: int, trials: int,
                                  seed: int = 0, noise: NoiseSpec = CLEAN,
                                  workers: int = 1) -> IdentityReport:
    """Interpolating learners on clean realizable data: generalization gap == excess risk.

    The training error must be exactly zero in every trial; the maximum
    per-trial |gap - excess| is then exactly 0.
    """
    if not noise.clean:
        return IdentityReport("not_applicable", math.nan, 0,
                              "training or test labels are noisy; interpolation "
                              "identity does not apply")
    res = run_experiment(family, learner, n, trials, CLEAN, seed, workers)
    train_err = res.per_trial["train_err"]
    if np.any(train_err != 0.0):
        bad = int(np.flatnonzero(train_err)[0])
        raise IdentityViolation(f"trial {bad} has training error {train_err[bad]}")
    gap = res.per_trial["test_loss"] - train_err
    dev = float(np.max(np.abs(gap - res.per_trial["excess"])))
    return IdentityReport("pass", dev, trials)
