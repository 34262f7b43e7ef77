"""Golden-free PCB tamper and counterfeit detection from simulated |S11| signatures."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DomainError, ModelError, ParseError, PdnVerifyError,
                     SingularityError)
from .circuit import (ComponentSpec, Coupling, FrequencyGrid, PdnModel, branch_impedance,
                      coupled_reflected_impedance, loop_inductance, mutual_inductance,
                      network_impedance, resonance_frequency)
from .sparams import (Trace, load_trace, magnitude, read_touchstone, s11_to_z, save_trace,
                      write_touchstone, z_to_s11)
from .dtw import AlignmentPath, DtwConfig, DtwResult, dtw_distance, dtw_distance_bruteforce, dtw_score
from .analysis import (Band, Resonance, average_traces, find_resonances, lowest_resonance,
                       select_band, slice_to_band)
from .verify import (DISSIMILAR, GENUINE, MarginReport, Verdict, build_golden, classify, compare,
                     cross_table, margin_factor, resolve_band, row_margins, suggest_threshold,
                     verify)
from .emulate import (AddComponent, Configuration, RemoveComponent, SuiteResult, VariationSpec,
                      apply_counterfeit, apply_tamper, counterfeit_detected, perturb,
                      run_experiment_suite, synthesize_measurement)
from .board import BoardDescription, dump_board, evaluation_board, load_board, parse_board, save_board

__all__ = [name for name in dir() if not name.startswith("_")]
