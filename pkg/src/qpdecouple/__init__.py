"""Removing q-p correlations of Gaussian states with passive linear optics."""

__version__ = "0.1.0"

from .decoupler import (
    DecoupleOptions,
    DecoupleReport,
    EntryWitness,
    OddCycle,
    RPhase,
    Verdict,
    classify_entries,
    decouple,
    degenerate_block_search,
    is_trivial_gauge,
    solve_parity,
)
from .errors import DecouplingError
from .gaussian import (
    ComplexCov,
    PassiveOp,
    QuadCov,
    SymplecticOp,
    add_displacement_noise,
    apply_passive,
    apply_symplectic,
    beamsplitter,
    complex_to_quad,
    cross_corr_norm,
    is_physical,
    passive_to_symplectic,
    phase_shifter,
    preset_cccstate,
    preset_twomode,
    quad_to_complex,
    random_pure_state,
    random_state,
    squeezer,
    symplectic_eigenvalues,
    vacuum,
    xy_blocks,
)
from .interferometer import Beamsplitter, Network, PhaseShifter, decompose, reassemble
from .matcore import TakagiFactorization, takagi, takagi_equivalent
from .oracle import OracleResult, oracle_agreement, oracle_min_residual

__all__ = [name for name in dir() if not name.startswith("_")]
