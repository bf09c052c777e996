"""Simulator and partial-regularity diagnostics for the 1D surface growth
equation u_t + u_xxxx + (u_x^2)_xx = 0 on the torus.

Layers, bottom up:

* :mod:`sgm.fields`    periodic fields, spectral calculus, Sobolev norms
* :mod:`sgm.solver`    implicit Euler scheme, biharmonic flow, weak residual
* :mod:`sgm.cutoffs`   smooth compactly supported test functions, local
                       energy inequality
* :mod:`sgm.cylinders` parabolic cylinders, scale-invariant quantities,
                       Poincare and interpolation diagnostics
* :mod:`sgm.singular`  point classification, box-counting dimension,
                       coverings, parabolic Hausdorff content
* :mod:`sgm.campanato` oscillation seminorms and Holder exponent recovery
                       on raw sampled data
* :mod:`sgm.sgt1`      binary trajectory files; :mod:`sgm.cli` the CLI
"""

from .fields import (COEFF_TO_L2, FieldError, NormOrder, SpectralField,
                     cosine_mode, derivative, evaluate, from_coeffs,
                     from_function, from_samples, grid, integral,
                     interpolation_gap, l2_norm, random_field, resample,
                     sgm_nonlinearity, shift, sobolev_norm, wavenumbers,
                     zero_field)
from .solver import (NonConvergence, SolverConfig, Trajectory,
                     biharmonic_exact, biharmonic_trajectory,
                     constant_trajectory, implicit_euler_step,
                     interior_regularity_probe, simulate, weak_residual)
from .cutoffs import TestFunction, lei_shift_consistency, lei_slack, make_cutoff
from .cylinders import (CylinderStats, ParabolicCylinder, TooFewFrames,
                        corollary_poincare_residual, cyl_mean, decay_ratio,
                        default_sigma, interpolation_residuals,
                        poincare_residual, quantities, sigma_means,
                        write_stats_csv)
from .singular import (Classification, SuspectSet, Thresholds, box_dimension,
                       classify_point_A, classify_point_E, classify_point_Y,
                       contained_in_dilate, cylinder_counts,
                       hausdorff_p1_upper, neighbourhood_area,
                       regularity_report, scan_suspects, vitali_disjointify)
from .campanato import (AnisotropicCylinder, HolderFit, SampledField,
                        aniso_mean, average_comparison_check,
                        campanato_seminorm, field_from_trajectory,
                        holder_fit, holder_quotient)
from .config import RunConfig, build_initial_condition
from .sgt1 import read_sgt1, write_sgt1

__version__ = "0.1.0"
