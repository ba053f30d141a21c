"""Remote magnon/superconducting-qubit entanglement toolkit.

Simulation and analysis of two fiber-coupled microwave cavities, each
hosting a magnon mode and a qubit, restricted to the single-excitation
manifold: closed-system dynamics, closed-form peak-entanglement results,
concurrence evaluation, and dissipative dynamics under non-Markovian
cavity baths.
"""

__version__ = "0.1.0"

from .params import (ChannelSpec, CouplingRatio, SystemParams, UnitMode,
                     ValidationError, channel_coupling, fiber_coupling_rate,
                     mhz_to_angular)
from .hilbert import (Frame, Mode, PureState, StateTrajectory, TimeGrid,
                      build_hamiltonian, initial_state, propagate, spectrum)
from .entanglement import (PAIRS, ConcurrenceSeries, TwoQubitDensity,
                           concurrence_series, concurrence_single_excitation,
                           concurrence_wootters, reduce_two_mode)
from .analytics import (eta, find_optimal_coupling, maximize_over_rq,
                        numeric_peak_search, peak_concurrence_m1q2,
                        peak_concurrence_mm, peak_concurrence_q1m2,
                        peak_concurrence_qq, resonant_optimum)
from .noise import NoisePath, ou_noise_path
from .opensys import (BathConfig, ConvergenceError, DensityTrajectory,
                      LConvention, ensemble_density, lindblad_solve,
                      matched_markov_rate, pseudomode_solve, qsd_ensemble,
                      qsd_trajectory)
from .results import ResultTable, read_csv, write_csv, write_json

__all__ = [
    "ChannelSpec", "CouplingRatio", "SystemParams", "UnitMode",
    "ValidationError", "channel_coupling", "fiber_coupling_rate",
    "mhz_to_angular",
    "Frame", "Mode", "PureState", "StateTrajectory", "TimeGrid",
    "build_hamiltonian", "initial_state", "propagate", "spectrum",
    "PAIRS", "ConcurrenceSeries", "TwoQubitDensity", "concurrence_series",
    "concurrence_single_excitation", "concurrence_wootters",
    "reduce_two_mode",
    "eta", "find_optimal_coupling", "maximize_over_rq",
    "numeric_peak_search", "peak_concurrence_m1q2", "peak_concurrence_mm",
    "peak_concurrence_q1m2", "peak_concurrence_qq", "resonant_optimum",
    "NoisePath", "ou_noise_path",
    "BathConfig", "ConvergenceError", "DensityTrajectory", "LConvention",
    "ensemble_density", "lindblad_solve", "matched_markov_rate",
    "pseudomode_solve", "qsd_ensemble", "qsd_trajectory",
    "ResultTable", "read_csv", "write_csv", "write_json",
    "__version__",
]
