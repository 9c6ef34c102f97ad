//! Feasibility simulation of ground–satellite optical quantum links.
//!
//! The crate models the full chain of a satellite quantum communication
//! experiment: optical link loss (diffraction, pointing jitter, atmospheric
//! turbulence, telescope obstruction, atmospheric transmittance), background
//! photon rates for uplink and downlink receivers, truncated Fock-space
//! quantum-optics simulation of the sources and detection apparatus, and
//! finite-size secure-key / Bell-test / teleportation feasibility over
//! simulated orbital passes.
//!
//! # Module map
//!
//! - [`fockspace`] — truncated Fock-space engine producing detection
//!   statistics for SPDC, weak-coherent, Bell-test, and teleportation
//!   configurations
//! - [`linkbudget`] — scalar diffraction, beam-broadening convolutions, and
//!   end-to-end loss in dB
//! - [`atmosphere`] — transmittance table and detector-efficiency curve
//!   ingestion and interpolation
//! - [`background`] — sky brightness, moonlit-Earth reflection, and light
//!   pollution count-rate estimates
//! - [`orbit`] — idealized sun-synchronous pass generation and ephemeris
//!   import
//! - [`protocols`] — finite-size BBM92 / decoy-state BB84 key lengths, CHSH
//!   and teleportation verdicts
//! - [`pipeline`] — per-pass integration, parameter sweeps, and monthly
//!   aggregation with CSV output

pub mod atmosphere;
pub mod background;
pub mod constants;
pub mod fockspace;
pub mod linalg;
pub mod linkbudget;
pub mod orbit;
pub mod pipeline;
pub mod protocols;

pub use atmosphere::{AtmosphereTable, DetectorCurve};
pub use fockspace::{DetectionStats, DetectorModel, ModeLayout, MultimodeState};
pub use linkbudget::{LinkGeometry, RadialIntensityProfile, TelescopeSpec, TurbulenceProfile};
pub use orbit::{OrbitSpec, PassProfile};
pub use pipeline::ScenarioConfig;
pub use protocols::{KeyResult, SecurityParams};
