"""Periodic EAM chain with quasi-nonlocal and local quasicontinuum couplings.

Library layout: :mod:`~eamchain.lattice` (grids, fields, difference
operators, norms, strain Fourier analysis), :mod:`~eamchain.potentials`
(scalar potential triples and assumption checks), :mod:`~eamchain.models`
(the three chain energies with exact gradients and Hessians),
:mod:`~eamchain.stability` (stability coefficients, spectra, critical
strains), :mod:`~eamchain.solver` (linearized solves, consistency residuals,
rate studies), and :mod:`~eamchain.cli` (batch experiment driver).
"""

from .lattice import (
    ChainGrid,
    PeriodicField,
    UniformDeformation,
    diff,
    displacement_from_strain,
    norm_l2eps,
    norm_region,
    strain_fourier,
)
from .models import (
    Deformation,
    ModelKind,
    RegionDecomposition,
    SymmetricBandedOperator,
    electron_density,
    energy,
    force_scale,
    gradient,
    hessian,
)
from .potentials import (
    AssumptionReport,
    EAMPotential,
    ScalarFunctionC2,
    check_assumptions,
    load_potential_file,
    shipped_potential,
    validate_derivatives,
)
from .solver import (
    ConvergenceRecord,
    DeadLoad,
    NotPositiveDefiniteError,
    consistency_residual,
    convergence_study,
    cosine_load,
    negative_norm,
    solve_linearized,
)
from .stability import (
    BracketError,
    SpectrumReport,
    StabilityCoefficients,
    coefficients,
    critical_strain,
    fourier_spectrum,
    lambda_cubic,
    min_eig_numeric,
    rayleigh_quotient,
    remark_test_functions,
)

__version__ = "0.1.0"
