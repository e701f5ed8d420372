"""Numerical lab for Bessel-Poisson semigroups, the Weinstein equation,
Carleson measures and BMO_o."""

from .specfun import BesselOrder, DomainError, bessel_j, gamma_fn, legendre_p
from .quadrature import (ConvergenceError, IntegrandError, QuadratureResult, QuadratureSpec,
                         TailPolicy, integrate, integrate_semi_infinite)
from .kernels import (KernelPoint, dt_poisson_kernel, dx_lambda_poisson_kernel, kernel_arrays,
                      kernel_bound_report, poisson_kernel)
from .hankel import GridFunction, dlambda_spectral, hankel_transform, poisson_spectral
from .field import (SolutionField, build_field, decay_probe, g_function, poisson_integral,
                    semigroup_check)
from .carleson import (BoxFamily, CarlesonBox, GridDensity, bmo_o_norm, carleson_norm,
                       interval_energy_functional, weighted_l1_check)
from .geometry import (HyperbolicBall, a_constant, calibrate_normalization, circle_integral,
                       mean_value_check, representation_kernel, subharmonic_check,
                       weinstein_residual)

__version__ = "0.1.0"
