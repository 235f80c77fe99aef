"""Stationary 1D scattering through piecewise-constant potentials, with
perfect-transmission resonance search and checks of the interior velocity /
tunneling-time relation <v>_{0,l} = l / tau at |T| = 1."""

__version__ = "0.1.0"

from .potential import (
    PotentialParseError,
    PotentialSpec,
    Segment,
    is_inversion_symmetric,
    load_potential,
    parse_potential,
    repeat_cell,
    serialize_potential,
    total_length,
)
from .scattering import (
    NumericalOverflowError,
    ScatteringState,
    TransferMatrix,
    WavefunctionGrid,
    evaluate_wavefunction,
    reconstruct_wavefunction,
    segment_wavevector,
    solve_scattering,
)
from .observables import (
    TunnelingTimes,
    current_uniformity,
    dwell_time,
    interior_current_integral,
    phase_delay_time,
    probability_current,
    time_from_velocity,
    velocity_expectation,
)
from .resonance import (
    NotAResonanceError,
    ResonanceRecord,
    find_resonances,
    scan_transmission,
    verify_identity,
)
