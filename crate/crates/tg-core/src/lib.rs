//! Teacher-guided neural architecture search at desk scale.
//!
//! The crate searches discrete architecture spaces by scoring prematurely
//! trained candidate networks with a combination of validation performance
//! and representational similarity (RDM correlation) to a fixed teacher
//! network. It ships three search drivers (TPE, an LSTM REINFORCE
//! controller, and random search), a small CPU trainer with a procedurally
//! generated dataset, a deterministic surrogate benchmark for algorithm-only
//! tests, and a file-backed tracker that lets independent worker processes
//! share one run directory.

pub mod rsa;
pub mod space;
pub mod util;
