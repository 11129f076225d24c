"""Entanglement spreading versus operator scrambling in collective and
long-range Ising spin chains: exact, classical, semiclassical and
closure-based dynamics side by side, at desk scale."""

__version__ = "0.1.0"

from .collective import (CollectiveOperator, DickeState, NumericalFailure,
                         build_floquet, build_lmg_hamiltonian, build_parity,
                         build_spin_operators, ground_state,
                         quench_initial_state)
from .dynamics import (QuenchPlan, evolve_kicked, evolve_quench,
                       magnetization_record, qfi, qfi_record, revival_time,
                       square_commutator, two_time_correlator)
from .entanglement import (BlockPartition, SymmetricRDM, block_entropy,
                           dicke_block_rdm, ergodic_tmi, mutual_information,
                           page_entropy, qfi_plateau_z, tmi,
                           von_neumann_entropy)
from .classical import (classical_energy, classical_ground_state,
                        dpt_order_parameter, integrate_flow, kicked_map,
                        lyapunov_benettin, poincare_section,
                        section_occupancy, separatrix_exponent,
                        tangent_poisson_bracket)
from .semiclassics import (DiscreteSpinEnsemble, collective_couplings,
                           dtwa_evolve, dtwa_magnetization, dtwa_qfi,
                           dtwa_sample, dtwa_square_commutator,
                           twa_observable, twa_sample,
                           twa_square_commutator)
from .closures import (cumulant_closure_c, ehrenfest_validity_window,
                       holstein_primakoff_c, initial_pair_commutators)
from .spectral import (FloquetSpectrum, R_POISSON, R_WIGNER_DYSON,
                       ehrenfest_estimate, floquet_spectrum,
                       level_spacing_ratio, spacing_ratio_mean)
from .fulled import (FullState, build_longrange_hamiltonian, coupling_matrix,
                     embed_dicke_state, full_evolve, full_magnetization,
                     full_qfi, full_square_commutator, min_tmi,
                     partition_tmi, reduced_density_matrix,
                     subsystem_entropy, symmetric_sector_isometry)
from .fitting import FitResult, fit_exponential, fit_power_law
from .records import TimeSeriesRecord
from .config import ExperimentConfig, parse_config
from .runner import run, run_figure
