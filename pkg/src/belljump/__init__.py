"""Monte Carlo simulation and verification of Bell-type quantum jump processes."""

from .hilbert import (
    HermitianOperator,
    Povm,
    SpectralDecomposition,
    StateVector,
    ValidationError,
    basis_povm,
    matrix_element,
    povm_from_compression,
    propagate,
    quantum_weight,
    spectral_decompose,
)
from .models import ModelSpec, bell_lattice, compressed_povm_model, random_hermitian, two_level
from .rates import (
    CEMETERY,
    INFINITE,
    DistributionSnapshot,
    RateContext,
    admissible_set,
    destination_distribution,
    distribution,
    distribution_derivative,
    jump_rate,
    total_rate,
)
from .sampler import (
    FROZEN,
    SimulationParams,
    Trajectory,
    cumulative_hazard,
    first_node_time,
    position_at,
    sample_destination,
    sample_holding_time,
    simulate_trajectory,
)

__version__ = "0.1.0"
