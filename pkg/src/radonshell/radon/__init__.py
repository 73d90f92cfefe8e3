"""Radon transforms, exterior norms and decay experiments."""
from .experiments import (
    DecayReport,
    LayerwiseResult,
    cap_cylinder_value,
    check_part_a,
    decay_experiment,
    layer_norms,
    layerwise_sum,
    part_a_ratio_limit,
    quadrature_convergence,
    theoretical_slope,
)
from .norms import FieldGrid, LpNormResult, exterior_lp_norm, radial_angular_grid
from .profile import (
    Profile,
    axial_mass,
    cap_band_integral,
    cap_witness,
    gaussian_bump,
    sampled_grid,
    zonal_polynomial,
)
from .quadrature import SphereQuadrature, band_quadrature, sphere_quadrature
from .transform import (
    GaussianField,
    adjoint_radon,
    adjointness_check,
    radon_forward,
    zonal_adjoint_radon,
)

exterior_Lp_norm = exterior_lp_norm
