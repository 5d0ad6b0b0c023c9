"""Noisy quantum-annealing simulator for direct and boson-mediated chains."""

__version__ = "0.1.0"

from .hilbert import (
    EigensolverError,
    SpaceLayout,
    SparseOperator,
    StateVector,
    apply,
    boson_operator,
    extremal_eigs,
    parity_diagonal,
    spin_operator,
)
from .models import (
    AnnealSpec,
    CalibrationError,
    IsingParams,
    RampTable,
    SBParams,
    build_ising,
    build_spin_boson,
    calibrate_kappa,
    chain_bonds,
    ising_schedule,
    noise_coupling_operator,
    sb_schedule,
    scheduled_model,
)
