"""Self-similar branching Markov chains on finite point measures.

Simulation of populations in which an individual of size x lives an
exponential time of rate x^alpha and is replaced at death by daughters
of sizes given by random ratios of its own, together with the
statistical machinery to verify the model's structural identities:
intrinsic martingales, the size-biased tagged walk, the Lamperti time
change, exponential functionals, and the long-time scaling limits of
the population measure.

Subpackages:

* measures  finite point measures (population states)
* replaw    reproduction laws, moments, Malthusian exponents
* tree      marked genealogical trees and batched growth statistics
* tagged    the size-biased tagged individual and its limit objects
* limits    rescaled empirical measures and statistical test reports
* cli       command line entry points (solve, simulate, verify)
"""

__version__ = "0.1.0"

from .errors import (CapExceeded, ConfigError, InvalidLine,
                     NoMalthusianExponent, NotGrown, PathTooShort,
                     SSBranchError, UnsupportedRegime)
from .measures import FinitePointMeasure, pair, power_mass
from .replaw import (DeterministicBinary, DirichletScaled, DiscreteMixture,
                     MalthusianProfile, UniformBinary, kappa, kappa_prime,
                     law_from_spec, law_to_spec, malthusian_exponent, moment,
                     second_root, solve_profile, step_sampler)
from .tree import MarkedNode, MarkedTree, grow_to_generation, grow_to_time

__all__ = [
    "FinitePointMeasure", "pair", "power_mass",
    "DeterministicBinary", "UniformBinary", "DiscreteMixture",
    "DirichletScaled", "MalthusianProfile",
    "kappa", "kappa_prime", "malthusian_exponent", "second_root",
    "moment", "solve_profile", "step_sampler",
    "law_from_spec", "law_to_spec",
    "MarkedNode", "MarkedTree", "grow_to_generation", "grow_to_time",
    "SSBranchError", "ConfigError", "NoMalthusianExponent", "CapExceeded",
    "UnsupportedRegime", "NotGrown", "InvalidLine", "PathTooShort",
]
