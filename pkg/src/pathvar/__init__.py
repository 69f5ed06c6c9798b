"""Pathwise calculus for continuous paths sampled on uniform grids."""

from .paths import (PathError, SampledPath, StepPath, constant_path, generate_analytic,
                    generate_fbm, piecewise_constant_approx)
from .partitions import (CrossingCounts, Partition, PartitionSequence, ResolutionError,
                         crossing_counts, lebesgue_dyadic, oscillation, uniform_dyadic)
from .tensors import (GradedTensor, SymTensor, contract, is_positive, pairing, shuffles,
                      sym_outer, sym_power, symmetrize)
from .variation import (VariationProfile, convergence_diagnostic, pth_variation_scalar,
                        pth_variation_tensor, signed_pth_sums)
from .functions import SmoothFunction, function_from_spec
from .calculus import (CylindricalFunctional, IntegralProfile, change_of_variable_residual,
                       compensated_integral, functional_change_of_variable_residual,
                       functional_compensated_integral, isometry_check, rough_smooth_decompose)
from .localtime import (LocalTimeGrid, averaging_operator, conjecture_experiment,
                        local_time_raw, local_time_upcrossing, occupation_density,
                        tanaka_residual, weak_pairing)
from .roughpath import (ControlFunction, ControlledPath, ReducedRoughPath, canonical_lift,
                        check_reduced_chen, controlled_from_function, integral_equivalence_check,
                        linear_control, qvar_control, rough_integral)

__version__ = "0.1.0"
