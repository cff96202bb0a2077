"""rdlab: rate-distortion lower bounds on the excess Bayes risk of Bayesian learners.

Modules
-------
families   parametric model families, datasets, consistency sets, label noise
rdtheory   Shannon lower bounds and a Blahut-Arimoto solver
miest      estimators and closed-form caps for I(Z^n; W)
bounds     excess-risk lower bounds and reference upper bounds
simlab     Monte Carlo simulation of learners against the bounds
cli        config-driven command line front end (``rdlab`` / ``python -m rdlab``)
"""
__version__ = "0.1.0"  # keep in sync with pyproject.toml

from .bounds import (BoundName, BoundReport, excess_lb_cor7, excess_lb_halfspace2d,
                     excess_lb_margin, invert_bound, inverted_rd, mer_upper,
                     smooth_excess_lb, vc_upper_reference)
from .families import (Dataset, Kind, ModelFamily, consistency_prob, consistency_region,
                       family_from_id, family_from_spec, gaussian_location,
                       halfspace_angle_2d, halfspace_sphere, interval_1d, noisy_wrap)
from .miest import (MIEstimate, mi_clarke_barron, mi_digamma_2d, mi_dimension_fit,
                    mi_nested_mc, mi_vc_bound, noise_info_gap)
from .rdtheory import (DiscreteRDProblem, RDCurve, SLBParams, binary_hamming,
                       blahut_arimoto, discretize_family, rd_at_distortion, slb_halfspace,
                       slb_zero_one)
from .simlab import (Learner, LearnerKind, NoiseSpec, generalization_identity_check,
                     run_experiment, sandwich_sweep)

__all__ = [
    "__version__",
    "BoundName", "BoundReport", "excess_lb_cor7", "excess_lb_halfspace2d", "excess_lb_margin",
    "invert_bound", "inverted_rd", "mer_upper", "smooth_excess_lb", "vc_upper_reference",
    "Dataset", "Kind", "ModelFamily", "consistency_prob", "consistency_region",
    "family_from_id", "family_from_spec", "gaussian_location", "halfspace_angle_2d",
    "halfspace_sphere", "interval_1d", "noisy_wrap",
    "MIEstimate", "mi_clarke_barron", "mi_digamma_2d", "mi_dimension_fit", "mi_nested_mc",
    "mi_vc_bound", "noise_info_gap",
    "DiscreteRDProblem", "RDCurve", "SLBParams", "binary_hamming", "blahut_arimoto",
    "discretize_family", "rd_at_distortion", "slb_halfspace", "slb_zero_one",
    "Learner", "LearnerKind", "NoiseSpec", "generalization_identity_check", "run_experiment",
    "sandwich_sweep",
]
