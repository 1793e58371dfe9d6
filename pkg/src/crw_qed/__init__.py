"""Single-photon scattering, bound states and decay for an atom side-coupled to a coupled-resonator waveguide."""

from .bound_states import BoundState, solve_bound_state
from .decay import decay_rate_bound, decay_rate_scattering, decay_spectrum
from .dynamics import evolve, fit_decay, wavepacket_scatter
from .errors import (
    BandEdgeError,
    GeometryError,
    ModelViolationError,
    OutOfBandError,
    PhysicsError,
    SolverError,
    StiffnessError,
)
from .model import (
    BasisLabel,
    BathSpec,
    DissipationRates,
    HamiltonianMatrix,
    SystemParams,
    build_effective_hamiltonian,
    build_system_hamiltonian,
    build_total_hamiltonian,
    discretize_flat_bath,
)
from .oracle import diagonalize, extract_dressed_state
from .scattering import dispersion, dissipative_reflection, ideal_amplitudes, scan_spectrum

__version__ = "0.1.0"
