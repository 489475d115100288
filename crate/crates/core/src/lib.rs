//! Rate functionals for quantum channel simulation on small systems.
//!
//! The crate evaluates certified upper bounds on the assisted and unassisted
//! simulation rates of a channel on a source state, the entanglement of
//! purification, and the Koashi-Imoto decomposition of a bipartite state, and
//! it checks the decoupling inequality on explicitly simulated protocols.

pub mod channels;
pub mod entropics;
pub mod error;
pub mod ki;
pub mod protocol;
pub mod rates;
pub mod tensor;

#[cfg(doctest)]
pub mod book;

pub use channels::QuantumChannel;
pub use error::{Error, Result};
pub use tensor::{DensityOperator, Ket, LinearOperator, SystemLabel, SystemLayout};
