"""Recurrence-cycle dynamics of a state coupled to a discrete ladder."""
from .model import (Bare, Explicit, HomogeneousDeformation, MixingSublattices, ReservoirSpec,
                    SpecError, Sublattices, build_hamiltonian)
from .spectrum import solve_spectrum
from .dynamics import AmplitudeSeries, evolve_fourier, evolve_oracle, time_grid
from .echo import assemble_cycles, critical_cycle, partial_amplitude_bare
from .tls import TlsSpec, tls_evolve
from .chain import ChainSpec, chain_spectrum, impurity_amplitude
from .ensemble import EnsembleSpec, ensemble_dynamics

__version__ = "0.1.0"

__all__ = [
    "AmplitudeSeries", "Bare", "ChainSpec", "EnsembleSpec", "Explicit", "HomogeneousDeformation",
    "MixingSublattices", "ReservoirSpec", "SpecError", "Sublattices", "TlsSpec", "assemble_cycles",
    "build_hamiltonian", "chain_spectrum", "critical_cycle", "ensemble_dynamics", "evolve_fourier",
    "evolve_oracle", "impurity_amplitude", "partial_amplitude_bare", "solve_spectrum", "time_grid",
    "tls_evolve",
]
