"""Rough transport noise for 2D Euler."""

from ._core import (
    Error,
    FormatError,
    InfeasibleLocalization,
    InvalidArgument,
    RoughPath,
    StepGuardViolation,
    __version__,
    biot_savart,
    config_hash,
    deposit,
    normalize_config,
    p_variation,
    pvar_csv,
    read_snapshot,
    run_experiment,
    sample_fbm,
    solve_euler,
    solve_viscous,
    write_snapshot,
)

__all__ = [
    "Error",
    "FormatError",
    "InfeasibleLocalization",
    "InvalidArgument",
    "RoughPath",
    "StepGuardViolation",
    "__version__",
    "biot_savart",
    "config_hash",
    "deposit",
    "normalize_config",
    "p_variation",
    "pvar_csv",
    "read_snapshot",
    "run_experiment",
    "sample_fbm",
    "solve_euler",
    "solve_viscous",
    "write_snapshot",
]
