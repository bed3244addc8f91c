"""Satellite clock-jump detection from inter-satellite ranges."""

from ._core import (
    BodyModel,
    ConfigError,
    NumericalError,
    OrbitalElements,
    build_edm,
    chi2_cdf,
    chi2_quantile,
    correlated_threshold,
    gcedm,
    gcedm_singular_values,
    imhof_cdf,
    link_visible,
    list_fault_detectable_5,
    list_k_cliques,
    load_config_normalized,
    noncentral_chi2_cdf,
    orbital_period_s,
    propagate,
    run_montecarlo,
    solve_kepler,
    solve_noncentrality,
    test_statistic,
)

__all__ = [
    "BodyModel",
    "ConfigError",
    "NumericalError",
    "OrbitalElements",
    "build_edm",
    "chi2_cdf",
    "chi2_quantile",
    "correlated_threshold",
    "gcedm",
    "gcedm_singular_values",
    "imhof_cdf",
    "link_visible",
    "list_fault_detectable_5",
    "list_k_cliques",
    "load_config_normalized",
    "noncentral_chi2_cdf",
    "orbital_period_s",
    "propagate",
    "run_montecarlo",
    "solve_kepler",
    "solve_noncentrality",
    "test_statistic",
]
