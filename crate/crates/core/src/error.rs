use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("qubit index {index} out of range for a {qubits}-qubit register")]
    IndexOutOfRange { index: usize, qubits: usize },

    #[error("projection onto outcome {outcome} of qubit {index} has probability {probability:e}")]
    ImpossibleOutcome {
        index: usize,
        outcome: u8,
        probability: f64,
    },

    /// A pulse fired while the emitter was still in the excited state.
    #[error("pulse {pulse} fires at {fire:.6} before decay of pulse {previous} at {decay:.6} (t_lg units)")]
    PulseOverlap {
        pulse: usize,
        previous: usize,
        fire: f64,
        decay: f64,
    },

    #[error("integration did not converge at order {order}: last iterates {previous} and {last}")]
    Convergence {
        order: usize,
        previous: f64,
        last: f64,
    },

    #[error("fidelity {value} outside [0, 1] beyond roundoff")]
    OutOfRange { value: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
