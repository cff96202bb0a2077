"""Excess-risk bounds built from R(D) lower bounds and I(Z^n; W) caps.

A learning rule reaching excess risk D needs R(D) <= I(Z^n; W); inverting a
lower bound on R at a cap on the information gives a lower bound on the
excess Bayes risk. Upper bounds from the literature are reported alongside
for sandwich plots and are tagged ``external``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .miest import EULER_GAMMA


class BoundName(str, Enum):
    INVERTED_RD = "InvertedRD"
    COR7 = "Cor7"
    THM11 = "Thm11"
    HALFSPACE_2D = "HalfSpace2D"
    MER_UB = "MER_UB"
    VC_UB = "VC_UB"
    SMOOTH_LB = "SmoothLB"


LOWER_BOUNDS = {BoundName.INVERTED_RD, BoundName.COR7, BoundName.THM11,
                BoundName.HALFSPACE_2D, BoundName.SMOOTH_LB}

# fixed column order for CSV output
INPUT_FIELDS = ("n", "d_w", "d_vc", "mu", "h_W", "t", "l_max", "det_fisher_y", "det_fisher_z")


@dataclass(frozen=True)
class BoundReport:
    name: BoundName
    value: float
    inputs: dict = field(default_factory=dict)
    external: bool = False
    nats: bool = True

    @property
    def is_lower(self) -> bool:
        return self.name in LOWER_BOUNDS


class NonMonotoneError(ValueError):
    pass


def invert_bound(rd_eval: Callable[[float], float], mi_value: float, d_lo: float,
                 d_hi: float, tol: float = 0.0, rtol: float = 1e-15,
                 max_iter: int = 2000) -> float:
    """Boundary D* between {D : R(D) > I} and {D : R(D) <= I} in [d_lo, d_hi].

    Every rule with excess risk below D* would need more than ``mi_value``
    nats, so D* is the excess-risk lower bound. The boundary is found by
    bisection (geometric when ``d_lo > 0``) until the bracket is within
    ``tol + rtol * D``. Returns ``d_lo`` if R(d_lo) <= I.
    """
    if not mi_value >= 0:
        raise ValueError("mi_value must be nonnegative")
    if not d_hi > d_lo >= 0:
        raise ValueError("need 0 <= d_lo < d_hi")
    samples = []

    def ev(D):
        r = rd_eval(D)
        samples.append((D, r))
        return r

    if ev(d_lo) <= mi_value:
        return d_lo
    if ev(d_hi) > mi_value:
        raise ValueError("rd_eval(d_hi) must not exceed mi_value")
    lo, hi = d_lo, d_hi
    for _ in range(max_iter):
        if hi - lo <= tol + rtol * hi:
            break
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if ev(mid) > mi_value:
            lo = mid
        else:
            hi = mid
    samples.sort()
    for (d0, r0), (d1, r1) in zip(samples, samples[1:]):
        if r1 > r0 + 1e-12 * max(1.0, abs(r0)):
            raise NonMonotoneError(f"rd_eval increases between D={d0} and D={d1}")
    return lo


def _vc_factor(d_vc: int, n: int, d_w: int) -> float:
    return (d_vc / (math.e * n)) ** (d_vc / d_w)


def excess_lb_cor7(d_w: int, d_vc: int, n: int, mu: float, h_W: float) -> BoundReport:
    """(d_vc / (e n))^(d_vc / d_w) * (mu / (2e)) * exp(h(W) / d_w), for n >= d_vc."""
    if n < d_vc:
        raise ValueError(f"need n >= d_vc, got n={n}, d_vc={d_vc}")
    value = _vc_factor(d_vc, n, d_w) * (mu / (2.0 * math.e)) * math.exp(h_W / d_w)
    return BoundReport(BoundName.COR7, value,
                       {"n": n, "d_w": d_w, "d_vc": d_vc, "mu": mu, "h_W": h_W})


def excess_lb_margin(d_w: int, d_vc: int, n: int, mu: float, h_W: float,
                     t: float) -> BoundReport:
    """Margin-t version: the Cor7 bound scaled by t."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"margin t must lie in (0, 1], got {t}")
    if n < d_vc:
        raise ValueError(f"need n >= d_vc, got n={n}, d_vc={d_vc}")
    value = t * excess_lb_cor7(d_w, d_vc, n, mu, h_W).value
    return BoundReport(BoundName.THM11, value,
                       {"n": n, "d_w": d_w, "d_vc": d_vc, "mu": mu, "h_W": h_W, "t": t})


HALFSPACE_2D_CONSTANT = 4.0 * math.pi * math.exp(EULER_GAMMA + 1.0)


def excess_lb_halfspace2d(n: int) -> BoundReport:
    """1 / (4 pi e^(gamma + 1) n), from the log n + gamma information cap."""
    if n < 1:
        raise ValueError("n must be positive")
    return BoundReport(BoundName.HALFSPACE_2D, 1.0 / (HALFSPACE_2D_CONSTANT * n),
                       {"n": n, "d_w": 1, "d_vc": 2, "mu": 1.0 / math.pi})


def mer_upper(d_vc: int, n: int) -> BoundReport:
    """Minimum-excess-risk cap 3 d_vc log(e n / d_vc) / n for realizable VC classes."""
    if n < d_vc:
        raise ValueError(f"need n >= d_vc, got n={n}, d_vc={d_vc}")
    return BoundReport(BoundName.MER_UB, 3.0 * d_vc * math.log(math.e * n / d_vc) / n,
                       {"n": n, "d_vc": d_vc})


def vc_upper_reference(d: int, n: int) -> BoundReport:
    """(3 d log n + 6) / n, a cited generalization bound for VC classes."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return BoundReport(BoundName.VC_UB, (3.0 * d * math.log(n) + 6.0) / n,
                       {"n": n, "d_vc": d}, external=True)


def smooth_excess_lb(d_w: int, n: int, det_fisher_y: float,
                     det_fisher_z: float) -> BoundReport:
    """(d_w / (2n)) (det E[I_{Y|X,W}] / det E[I_{Z|W}])^(1/d_w), (1 + o_n(1)) dropped."""
    if not (det_fisher_y > 0 and det_fisher_z > 0):
        raise ValueError("Fisher determinants must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    value = d_w / (2.0 * n) * (det_fisher_y / det_fisher_z) ** (1.0 / d_w)
    return BoundReport(BoundName.SMOOTH_LB, value,
                       {"n": n, "d_w": d_w, "det_fisher_y": det_fisher_y,
                        "det_fisher_z": det_fisher_z})


def inverted_rd(rd_eval: Callable[[float], float], mi_value: float, n: int,
                d_hi: float = 1.0, **inputs) -> BoundReport:
    """BoundReport wrapper around :func:`invert_bound` on (0, d_hi]."""
    value = invert_bound(rd_eval, mi_value, 1e-300, d_hi)
    return BoundReport(BoundName.INVERTED_RD, value, {"n": n, **inputs})
