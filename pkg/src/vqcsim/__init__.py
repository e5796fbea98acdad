"""State-vector and density-matrix simulator for variational quantum circuits."""
from .autodiff import (GradientResult, finite_difference_gradient, gradient_mixed, gradient_pure,
                       loss_mixed, loss_pure)
from .circuit import (Circuit, MeasurementOutcome, active_parameters, apply, apply_circuit,
                      fuse_gates, measure, outcome_probabilities, reset_parameters)
from .circuit_io import parse_circuit, read_circuit, write_circuit
from .gates import (ChannelOp, GateOp, Superoperator, amplitude_damping, channel_superoperator,
                    controlled_gate, depolarizing, gate_derivative, gate_inverse, make_channel,
                    make_gate, parametric_gate, phase_damping, row_major_to_column_major,
                    standard_channel, standard_gate)
from .kernels import ThreadConfig, apply_channel, apply_gate_fast, apply_gate_mixed, apply_gate_naive
from .observables import (PauliOperator, PauliTerm, apply_operator, expectation, expectation_mixed,
                          heisenberg_1d, read_operator, write_operator)
from .statespace import (COMPLEX_DOUBLE, COMPLEX_SINGLE, MixedState, PureState, basis_index,
                         mixed_state_from_entries, new_mixed_state, new_pure_state, norm,
                         pure_state_from_amplitudes, purify_index_view, read_state, trace,
                         write_state)

__all__ = [
    "GradientResult",
    "finite_difference_gradient",
    "gradient_mixed",
    "gradient_pure",
    "loss_mixed",
    "loss_pure",
    "Circuit",
    "MeasurementOutcome",
    "active_parameters",
    "apply",
    "apply_circuit",
    "fuse_gates",
    "measure",
    "outcome_probabilities",
    "reset_parameters",
    "parse_circuit",
    "read_circuit",
    "write_circuit",
    "ChannelOp",
    "GateOp",
    "Superoperator",
    "amplitude_damping",
    "channel_superoperator",
    "controlled_gate",
    "depolarizing",
    "gate_derivative",
    "gate_inverse",
    "make_channel",
    "make_gate",
    "parametric_gate",
    "phase_damping",
    "row_major_to_column_major",
    "standard_channel",
    "standard_gate",
    "ThreadConfig",
    "apply_channel",
    "apply_gate_fast",
    "apply_gate_mixed",
    "apply_gate_naive",
    "PauliOperator",
    "PauliTerm",
    "apply_operator",
    "expectation",
    "expectation_mixed",
    "heisenberg_1d",
    "read_operator",
    "write_operator",
    "COMPLEX_DOUBLE",
    "COMPLEX_SINGLE",
    "MixedState",
    "PureState",
    "basis_index",
    "mixed_state_from_entries",
    "new_mixed_state",
    "new_pure_state",
    "norm",
    "pure_state_from_amplitudes",
    "purify_index_view",
    "read_state",
    "trace",
    "write_state",
]

__version__ = "0.1.0"
