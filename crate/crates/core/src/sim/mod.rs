//! Dense state-vector and density-matrix simulation.

pub mod circuit;
pub mod density;
pub mod observable;
pub mod sampling;
pub mod state;
pub mod templates;

pub use circuit::{apply_circuit, Angle, AngleTerm, Circuit, Gate};
pub use density::{
    bloch_vector, gibbs_state, reduced_density_matrix, reduced_density_matrix_of, DensityMatrix,
    MAX_DENSITY_QUBITS,
};
pub use observable::{expectation, z_expectations, Observable, Pauli, PauliString};
pub use sampling::{most_probable_bitstring, sample_bitstrings, Bitstring};
pub use state::{amplitude_embed, amplitude_register_size, state_overlap, StateVector, C64, MAX_STATE_QUBITS};
pub use templates::{build_template, TemplateKind};
