"""Python front end of the nlc2 solver.

Fields are numpy arrays of shape (ny, nx) with row j at y_j = -pi + j h;
vector fields stack their components first, e.g. u has shape (2, ny, nx).
"""

from ._nlc2 import (
    ConfigError,
    Error,
    InconclusiveSegmentError,
    IoError,
    NumericalError,
    RunConfig,
    Simulation,
    State,
    calibrate_eps0,
    continuation_run,
    defaults_reference,
    derivative,
    energies,
    horizon_estimate,
    horizon_T0,
    horizon_tau0,
    initial_condition,
    laplacian,
    leray_project,
    load_config,
    local_energy_sup,
    parse_config,
    read_checkpoint,
    run_diagnostics,
    run_study,
    winding_number,
    write_checkpoint,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
