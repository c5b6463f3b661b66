"""drbench: layer-sampled and compiled-group benchmarking of Clifford
processors, with a Pauli-propagation simulator and decay-fit analysis."""

from .analysis import (
    BootstrapResult,
    BuildingBlockRates,
    DecayFit,
    RateSystem,
    average_success,
    binomial_weights,
    bootstrap,
    crb_rescale,
    drb_error_rate,
    extract_building_block_rates,
    fit_decay,
    predict_r_from_rates,
    solve_category_rates,
    theory_pm,
)
from .clifford import (
    Circuit,
    CliffordOp,
    GateLabel,
    PauliOp,
    StabilizerState,
    apply_clifford,
    circuit_to_clifford,
    compose,
    conjugate_pauli,
    invert,
    is_eigenstate,
    layer_to_clifford,
    one_qubit_clifford_table,
    standard_gate,
)
from .compiling import (
    CompileOptions,
    CompileStats,
    circuit_stats,
    compile_clifford,
    compile_cnot_circuit,
    compile_stabilizer_meas,
    compile_stabilizer_prep,
    fold_pauli_before_circuit,
    pauli_block,
)
from .device import DeviceSpec, all_to_all, ring, ring_center_edges, ring_with_center
from .protocols import (
    DEFAULT_CIRCUITS_PER_LENGTH,
    DEFAULT_LENGTHS,
    DEFAULT_SHOTS,
    BenchmarkCircuit,
    ExperimentDesign,
    generate_crb_circuit,
    generate_drb_circuit,
    generate_experiment,
)
from .sampling import (
    CategorySampler,
    PairingSampler,
    PCnotSampler,
    SamplerSpec,
    SpreadReport,
    clifford_count,
    cnot_placement_distribution,
    estimate_error_spreading,
    layer_probability,
    sample_clifford_uniform,
    sample_layer,
    sample_stabilizer_state_uniform,
    sample_symplectic_uniform,
    stabilizer_state_count,
    symplectic_from_index,
    symplectic_group_order,
)
from .simulate import (
    DataRow,
    Dataset,
    ErrorModel,
    build_model_crosstalk5,
    build_model_from_calibration,
    build_model_layer_depolarizing,
    build_model_main_sim,
    layer_error_rate,
    run_experiment,
    simulate_circuit,
)
from .streams import stream

__version__ = "0.1.0"

__all__ = [
    "BenchmarkCircuit",
    "BootstrapResult",
    "BuildingBlockRates",
    "CategorySampler",
    "Circuit",
    "CliffordOp",
    "CompileOptions",
    "CompileStats",
    "DataRow",
    "Dataset",
    "DecayFit",
    "DeviceSpec",
    "ErrorModel",
    "ExperimentDesign",
    "GateLabel",
    "PairingSampler",
    "PauliOp",
    "PCnotSampler",
    "RateSystem",
    "SamplerSpec",
    "SpreadReport",
    "StabilizerState",
    "DEFAULT_CIRCUITS_PER_LENGTH",
    "DEFAULT_LENGTHS",
    "DEFAULT_SHOTS",
    "all_to_all",
    "apply_clifford",
    "average_success",
    "binomial_weights",
    "bootstrap",
    "build_model_crosstalk5",
    "build_model_from_calibration",
    "build_model_layer_depolarizing",
    "build_model_main_sim",
    "circuit_stats",
    "circuit_to_clifford",
    "clifford_count",
    "cnot_placement_distribution",
    "compile_clifford",
    "compile_cnot_circuit",
    "compile_stabilizer_meas",
    "compile_stabilizer_prep",
    "compose",
    "conjugate_pauli",
    "crb_rescale",
    "drb_error_rate",
    "estimate_error_spreading",
    "extract_building_block_rates",
    "fit_decay",
    "fold_pauli_before_circuit",
    "generate_crb_circuit",
    "generate_drb_circuit",
    "generate_experiment",
    "invert",
    "is_eigenstate",
    "layer_error_rate",
    "layer_probability",
    "layer_to_clifford",
    "one_qubit_clifford_table",
    "pauli_block",
    "predict_r_from_rates",
    "ring",
    "ring_center_edges",
    "ring_with_center",
    "run_experiment",
    "sample_clifford_uniform",
    "sample_layer",
    "sample_stabilizer_state_uniform",
    "sample_symplectic_uniform",
    "simulate_circuit",
    "solve_category_rates",
    "stabilizer_state_count",
    "standard_gate",
    "stream",
    "symplectic_from_index",
    "symplectic_group_order",
    "theory_pm",
]
