//! Offline side of the min-quadratic barrier toolkit: LMI synthesis with
//! posterior eigenvalue verification, bank and config file formats,
//! trajectory/region CSV export, and the `minquad` command-line interface.
//!
//! The runtime pieces (plants, barrier evaluation, supervisor, simulation)
//! live in `minquad-core`; this crate produces and checks the data they
//! consume.

// Linked for the BLAS/LAPACK backend of the PSD cone operations.
extern crate openblas_src;

pub mod bank;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod region;
pub mod scenario;
pub mod sdp;
pub mod synth;

pub use bank::BankFile;
pub use config::{GridSpec, JobConfig, PlantSpec};
pub use synth::{
    synthesize_bank, synthesize_barrier_pair, verify_certificate, Certificate, SynthesisConfig,
};
