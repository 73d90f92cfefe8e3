"""Monte Carlo engine for the reciprocal-simplex shell integral."""
from ._backend import DEFAULT as default_backend, get_backend
from .engine import (
    CapSampler,
    LayerEstimate,
    MCEstimate,
    ScalingFit,
    fit_scaling,
    layer_edges,
    lower_bound_experiment,
    max_cap_angle,
    reciprocal_integral,
    reciprocal_integral_layered,
    sample_shell,
)

__all__ = [
    "CapSampler", "LayerEstimate", "MCEstimate", "ScalingFit", "default_backend",
    "fit_scaling", "get_backend", "layer_edges", "lower_bound_experiment",
    "max_cap_angle", "reciprocal_integral", "reciprocal_integral_layered", "sample_shell",
]
