"""Entropic central limit theorem for smoothed lattice sums, numerically.

Z_n = (X + X_1 + ... + X_n) / sqrt(n) with continuous noise X and an
integer-valued step law; densities, entropies, relative entropy to N(0, 1),
L2 and transport distances, and executable checks of the related inequalities.
"""

from .model import (
    LatticeLaw,
    ModelError,
    NoiseModel,
    Scenario,
    bernoulli,
    beta3_of,
    lattice_law,
    make_noise,
    noise_entropy,
)
from .reports import BoundReport
from .spectral import (
    CharFnCurve,
    GridDensity,
    GridSpec,
    exact_mixture_density,
    integral_conditions,
    invert_to_density,
    l2_distance,
    l2_distance_plancherel,
    smoothed_sum_cf,
    zero_condition,
)
from .entropy import (
    MomentSummary,
    differential_entropy,
    discrete_entropy,
    kl_decomposition,
    kl_to_std_normal,
    mc_entropy_oracle,
    psi,
    staircase,
    w2_to_std_normal,
)
from .lab import SweepResult, dichotomy_experiment, emit_outputs, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CharFnCurve",
    "GridDensity",
    "GridSpec",
    "LatticeLaw",
    "ModelError",
    "MomentSummary",
    "NoiseModel",
    "Scenario",
    "SweepResult",
    "bernoulli",
    "beta3_of",
    "dichotomy_experiment",
    "differential_entropy",
    "discrete_entropy",
    "emit_outputs",
    "exact_mixture_density",
    "integral_conditions",
    "invert_to_density",
    "kl_decomposition",
    "kl_to_std_normal",
    "l2_distance",
    "l2_distance_plancherel",
    "lattice_law",
    "make_noise",
    "mc_entropy_oracle",
    "noise_entropy",
    "psi",
    "run_sweep",
    "smoothed_sum_cf",
    "staircase",
    "w2_to_std_normal",
    "zero_condition",
]
