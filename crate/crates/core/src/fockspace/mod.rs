//! Truncated Fock-space quantum-optics engine.
//!
//! States live on a small set of optical modes, each truncated at a photon
//! cutoff. The density-operator representation ([`MultimodeState`]) is the
//! general workhorse; a pure-state path ([`statevector::PureState`]) backs
//! source construction and the teleportation circuit, where channel loss is
//! routed into explicit ancilla modes instead of a CPTP map.

mod evaluator;
mod measurement;
mod operators;
mod state;
mod statevector;

pub use evaluator::{
    simulate_teleportation, ChshEvaluator, EntangledLinkEvaluator, LinkWindowStats,
    SettingStats, TeleportOutcome, TeleportationConfig, TeleportationDistribution,
    TeleportationEvaluator, TeleportationResult, WcpLinkEvaluator, CHSH_ANGLES,
};
pub use measurement::{
    measure_bb84_analyzer, pattern_probability, subset_silent_table, AnalysisBasis,
    BoundDetector, DetectionStats, MeasurementContext, OccupationDistribution,
};
pub use operators::{
    annihilation, beamsplitter, creation, displacement, loss_kraus, mode_rotation, phase_shift,
    two_mode_squeezer,
};
pub use state::{make_entangled_pair, make_vacuum, MultimodeState};
pub use statevector::PureState;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on the Hilbert-space dimension of a density operator.
///
/// A density matrix at this dimension occupies
/// `dim^2 * 16` bytes (~400 MB at 5000); anything larger is a configuration
/// mistake rather than a physical model in this artifact.
pub const DEFAULT_MAX_DENSITY_DIM: usize = 5_000;

/// Truncation leakage above which operations flag a warning.
pub const LEAKAGE_WARN_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("invalid mode layout: {0}")]
    InvalidLayout(String),
    #[error(
        "Hilbert dimension {dim} exceeds the configured budget {budget} \
         ((cutoff+1)^n_modes is too large)"
    )]
    DimensionBudget { dim: usize, budget: usize },
    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("invalid operation parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "displacement |alpha|^2 = {mu:.4} leaves Poisson weight {tail:.2e} beyond cutoff \
         {cutoff} (limit 1e-5)"
    )]
    DisplacementTail { mu: f64, tail: f64, cutoff: usize },
    #[error("detector model invalid: {0}")]
    InvalidDetector(String),
    #[error("cutoff convergence failure: visibility shifted by {shift:.2e} raising cutoff {from} -> {to}")]
    CutoffNotConverged { shift: f64, from: usize, to: usize },
    #[error("measurement produced no conditioning events")]
    NoEvents,
}

/// Which party a mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    /// Auxiliary input (the WCP photon supplied for teleportation).
    Input,
    /// Loss/vacuum ancilla, never measured.
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    Horizontal,
    Vertical,
}

/// Per-mode (party, polarization) tag.
pub type ModeLabel = (Party, Polarization);

/// Shape of a truncated multimode Fock space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeLayout {
    n_modes: usize,
    cutoff: usize,
    labels: Vec<ModeLabel>,
}

impl ModeLayout {
    /// A layout with explicit per-mode labels.
    pub fn new(cutoff: usize, labels: Vec<ModeLabel>) -> Result<Self, FockError> {
        let n_modes = labels.len();
        if n_modes == 0 {
            return Err(FockError::InvalidLayout("n_modes must be >= 1".into()));
        }
        if cutoff == 0 {
            return Err(FockError::InvalidLayout("cutoff must be >= 1".into()));
        }
        Ok(Self {
            n_modes,
            cutoff,
            labels,
        })
    }

    /// Unlabeled layout (modes tagged Bob/H by default).
    pub fn unlabeled(n_modes: usize, cutoff: usize) -> Result<Self, FockError> {
        if n_modes == 0 {
            return Err(FockError::InvalidLayout("n_modes must be >= 1".into()));
        }
        Self::new(
            cutoff,
            vec![(Party::Bob, Polarization::Horizontal); n_modes],
        )
    }

    /// Two-party polarization layout: [Alice H, Alice V, Bob H, Bob V].
    ///
    /// The default cutoff of 6 (dimension 7 per mode) covers 0-6 photons,
    /// enough for multi-pair emission at the operating squeezing strengths.
    pub fn two_party(cutoff: usize) -> Self {
        Self::new(
            cutoff,
            vec![
                (Party::Alice, Polarization::Horizontal),
                (Party::Alice, Polarization::Vertical),
                (Party::Bob, Polarization::Horizontal),
                (Party::Bob, Polarization::Vertical),
            ],
        )
        .expect("static layout is valid")
    }

    /// Single-party polarization pair [H, V].
    pub fn single_party(cutoff: usize) -> Self {
        Self::new(
            cutoff,
            vec![
                (Party::Bob, Polarization::Horizontal),
                (Party::Bob, Polarization::Vertical),
            ],
        )
        .expect("static layout is valid")
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Levels per mode (cutoff + 1).
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    /// Total Hilbert dimension `(cutoff+1)^n_modes`, guarded against overflow.
    pub fn dim(&self) -> Result<usize, FockError> {
        let mut dim = 1usize;
        for _ in 0..self.n_modes {
            dim = dim
                .checked_mul(self.levels())
                .ok_or(FockError::DimensionBudget {
                    dim: usize::MAX,
                    budget: DEFAULT_MAX_DENSITY_DIM,
                })?;
        }
        Ok(dim)
    }

    /// Row stride of `mode` in the flattened index (mode 0 varies slowest).
    pub fn stride(&self, mode: usize) -> usize {
        self.levels().pow((self.n_modes - 1 - mode) as u32)
    }

    /// Occupation of `mode` encoded in flat index `idx`.
    pub fn occupation(&self, idx: usize, mode: usize) -> usize {
        (idx / self.stride(mode)) % self.levels()
    }
}

/// Bucket-detector description shared by all measurement configurations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Photon detection efficiency folded with optics and link, in [0,1].
    pub efficiency: f64,
    /// Dark count rate, counts/s.
    pub dark_rate_cps: f64,
    /// Coincidence/detection window, s.
    pub window_s: f64,
    /// Number of detectors in the passive analyzer (4 for BB84).
    pub n_detectors: usize,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), FockError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(FockError::InvalidDetector(format!(
                "efficiency {} outside [0,1]",
                self.efficiency
            )));
        }
        if self.dark_rate_cps < 0.0 || self.window_s <= 0.0 {
            return Err(FockError::InvalidDetector(
                "dark rate must be >= 0 and window > 0".into(),
            ));
        }
        let dark_prob = self.dark_rate_cps * self.window_s;
        if dark_prob >= 1.0 {
            return Err(FockError::InvalidDetector(format!(
                "dark probability per window {dark_prob} must be < 1"
            )));
        }
        if self.n_detectors == 0 {
            return Err(FockError::InvalidDetector("n_detectors must be >= 1".into()));
        }
        Ok(())
    }

    /// Dark click probability per window.
    pub fn dark_prob(&self) -> f64 {
        self.dark_rate_cps * self.window_s
    }
}

/// Misalignment rotation angle giving a target two-photon-subspace
/// visibility for the entangled source (V = cos 2*theta).
pub fn misalignment_angle_for_visibility(visibility: f64) -> f64 {
    0.5 * visibility.clamp(-1.0, 1.0).acos()
}
