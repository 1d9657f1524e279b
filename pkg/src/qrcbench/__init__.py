"""Quantum reservoir computing with tunable-strength indirect measurements."""

from .benchmark import (
    CapacityReport,
    TaskSpec,
    TimeSeries,
    capacity,
    evaluate,
    gen_memory_series,
    load_santafe,
    make_target,
    performance_ratio,
    sum_capacity,
    train_readout,
)
from .measurement import (
    BackActionMask,
    MeasurementModel,
    apply_backaction,
    backaction_mask,
    basis_rotation,
    extract_features,
    measurement_kernel,
)
from .protocols import FeatureTable, FeedbackSpec, feedback_layer, run_feedback, run_olp, run_rsp
from .reservoir import ReservoirSpec, build_hamiltonian, encode_input, sample_couplings, step_map
from .resources import (
    apply_shot_noise,
    shots_rsp_equivalent,
    sigma_pair,
    sigma_single,
    time_olp,
    time_rsp,
)
from .states import OperatorMatrix, QuantumState, expectation, partial_trace_input, pauli_on_site, propagator
from .sweep import DESK_CONFIG, SweepConfig, emit_results, run_sweep

__version__ = "0.1.0"
