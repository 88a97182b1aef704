//! Deterministic compressed sensing for millimeter-wave beam alignment.
//!
//! The library builds sparse binary sensing matrices as a Kronecker product
//! of two polynomial-graph (DeVore-style) matrices over finite fields, turns
//! their rows into multi-finger DFT beamforming codebooks, simulates the
//! training measurements over a clustered sparse channel, and recovers the
//! dominant path with orthogonal matching pursuit. A Monte Carlo harness
//! produces probability-of-correct-alignment and post-beamforming-SNR curves
//! for the deterministic scheme (`mbmkp`) against a random-permutation
//! baseline (`rdperm`).
//!
//! Modules:
//! - [`gf`]: arithmetic over GF(p^k), element/polynomial enumeration
//! - [`sensing`]: sensing-matrix construction and coherence/RIP analyzers
//! - [`channel`]: array responses, angle grids, virtual channel representation
//! - [`codebooks`]: measurement schedules and beamformer synthesis
//! - [`simulator`]: physical- and virtual-domain measurement generation
//! - [`recovery`]: OMP specialized to sparse binary columns
//! - [`experiments`]: reproducible Monte Carlo sweeps
//!
//! With the default `parallel` feature, sweeps and the heavier analyzers run
//! on rayon; disabling the feature gives a sequential build with identical
//! outputs.

pub mod channel;
pub mod codebooks;
pub mod experiments;
pub mod gf;
pub mod recovery;
pub mod sensing;
pub mod simulator;
