"""InGaAs/InP SAGCM SPAD simulator (Python bindings)."""

from ._core import (
    ConfigError,
    ConvergenceError,
    DeviceStack,
    DomainError,
    LayerRole,
    LayerSpec,
    MetricsError,
    NoBreakdownError,
    ValidationError,
    absorption_efficiency,
    bandgap,
    breakdown_voltage,
    channel_efficiency,
    figure_csv,
    figure_names,
    intrinsic_carrier_concentration,
    max_distance,
    metrics,
    p_ava,
    reference_stack,
    secure_key_rate,
    solve_field,
    tuned_reference_stack,
)

__all__ = [name for name in dir() if not name.startswith("_")]
