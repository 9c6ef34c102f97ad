//! Density-operator states and the CPTP maps acting on them.

use ndarray::Array2;
use num_complex::Complex64;

use super::operators::{
    displacement, loss_kraus, mode_rotation, phase_shift, two_mode_squeezer,
};
use super::statevector::PureState;
use super::{FockError, ModeLayout, DEFAULT_MAX_DENSITY_DIM, LEAKAGE_WARN_THRESHOLD};
use crate::linalg::hermiticity_defect;

/// Density operator over a truncated multimode Fock space.
///
/// Operations are value-semantic: each returns a new state, leaving the
/// receiver untouched, so states can be fanned out across parallel sweeps.
#[derive(Debug, Clone)]
pub struct MultimodeState {
    layout: ModeLayout,
    rho: Array2<Complex64>,
    /// Trace deficit of the most recent sub-unitary application, before
    /// renormalization. Nonzero values measure truncation leakage.
    last_leakage: f64,
}

/// `make_vacuum` with the default density-dimension budget.
pub fn make_vacuum(layout: &ModeLayout) -> Result<MultimodeState, FockError> {
    MultimodeState::vacuum(layout, DEFAULT_MAX_DENSITY_DIM)
}

/// Entangled-pair source state: two SPDC squeezers permuted into a
/// singlet-correlated four-mode state, with a polarization misalignment
/// rotation applied to Bob's modes.
///
/// Multi-pair emission is retained up to the layout cutoff. With
/// `misalignment_angle = misalignment_angle_for_visibility(0.98)` the
/// lossless low-pumping visibility is 98%.
pub fn make_entangled_pair(
    epsilon: f64,
    misalignment_angle: f64,
    cutoff: usize,
) -> Result<MultimodeState, FockError> {
    let pure = PureState::entangled_pair(epsilon, misalignment_angle, cutoff)?;
    Ok(MultimodeState::from_pure(&pure))
}

impl MultimodeState {
    /// Vacuum state `|0...0><0...0|` on the given layout.
    pub fn vacuum(layout: &ModeLayout, max_dim: usize) -> Result<Self, FockError> {
        let dim = layout.dim()?;
        if dim > max_dim {
            return Err(FockError::DimensionBudget {
                dim,
                budget: max_dim,
            });
        }
        let mut rho = Array2::<Complex64>::zeros((dim, dim));
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            layout: layout.clone(),
            rho,
            last_leakage: 0.0,
        })
    }

    /// Density operator `|psi><psi|` of a pure state.
    pub fn from_pure(pure: &PureState) -> Self {
        let amps = pure.amplitudes();
        let dim = amps.len();
        let mut rho = Array2::<Complex64>::zeros((dim, dim));
        for i in 0..dim {
            if amps[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                rho[(i, j)] = amps[i] * amps[j].conj();
            }
        }
        Self {
            layout: pure.layout().clone(),
            rho,
            last_leakage: pure.accumulated_leakage(),
        }
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn rho(&self) -> &Array2<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).sum()
    }

    /// Photon-number populations (the density-matrix diagonal).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).collect()
    }

    /// Truncation leakage of the most recent unitary application.
    pub fn last_leakage(&self) -> f64 {
        self.last_leakage
    }

    /// True when the last operation leaked more than the warn threshold.
    pub fn leakage_warning(&self) -> bool {
        self.last_leakage > LEAKAGE_WARN_THRESHOLD
    }

    /// Mean photon number of one mode.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        let dim = self.rho.nrows();
        (0..dim)
            .map(|i| self.layout.occupation(i, mode) as f64 * self.rho[(i, i)].re)
            .sum()
    }

    /// Total mean photon number over all modes.
    pub fn total_mean_photon_number(&self) -> f64 {
        (0..self.layout.n_modes())
            .map(|m| self.mean_photon_number(m))
            .sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.rho)
    }

    /// Smallest eigenvalue of rho; test-path positivity diagnostic.
    /// Quadratically expensive, so only sensible at small dimensions.
    pub fn positivity_defect(&self) -> f64 {
        crate::linalg::min_eigenvalue_hermitian(&self.rho)
    }

    fn check_mode(&self, mode: usize) -> Result<(), FockError> {
        if mode >= self.layout.n_modes() {
            return Err(FockError::ModeOutOfRange {
                mode,
                n_modes: self.layout.n_modes(),
            });
        }
        Ok(())
    }

    /// Two-mode squeezing (the SPDC pair-production unitary).
    ///
    /// Applied from vacuum, the mean pair number is `2 sinh^2(eps)` up to
    /// truncation leakage; the state is renormalized after projection and
    /// the leakage recorded.
    pub fn apply_squeezer(
        &self,
        mode_a: usize,
        mode_b: usize,
        epsilon: f64,
    ) -> Result<Self, FockError> {
        if mode_a == mode_b {
            return Err(FockError::InvalidParameter(
                "squeezer modes must be distinct".into(),
            ));
        }
        if epsilon < 0.0 {
            return Err(FockError::InvalidParameter(
                "squeezing strength must be >= 0".into(),
            ));
        }
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        let u = two_mode_squeezer(self.layout.levels(), epsilon);
        Ok(self.applied_two_mode(mode_a, mode_b, &u))
    }

    /// Coherent displacement on one mode.
    ///
    /// Rejected when the Poisson weight beyond the cutoff exceeds 1e-5, so
    /// the truncated space demonstrably carries the coherent state.
    pub fn apply_displacement(&self, mode: usize, alpha: Complex64) -> Result<Self, FockError> {
        self.check_mode(mode)?;
        let mu = alpha.norm_sqr();
        let tail = poisson_tail(mu, self.layout.cutoff());
        if tail > 1e-5 {
            return Err(FockError::DisplacementTail {
                mu,
                tail,
                cutoff: self.layout.cutoff(),
            });
        }
        let u = displacement(self.layout.levels(), alpha);
        Ok(self.applied_one_mode(mode, &u))
    }

    /// Photon-loss channel with the given transmissivity on one mode.
    pub fn apply_loss(&self, mode: usize, transmissivity: f64) -> Result<Self, FockError> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(FockError::InvalidParameter(format!(
                "transmissivity {transmissivity} outside [0,1]"
            )));
        }
        self.check_mode(mode)?;
        let kraus = loss_kraus(self.layout.levels(), transmissivity);
        let dim = self.rho.nrows();
        let mut out = Array2::<Complex64>::zeros((dim, dim));
        for e in &kraus {
            // E rho E^dagger via two one-sided products.
            let left = self.one_mode_left(mode, e, &self.rho);
            let left_dag = conj_transpose(&left);
            let term = self.one_mode_left(mode, e, &left_dag);
            out = out + conj_transpose(&term);
        }
        Ok(Self {
            layout: self.layout.clone(),
            rho: out,
            last_leakage: 0.0,
        })
    }

    /// Two-mode beamsplitter with intensity transmissivity `t`.
    pub fn apply_beamsplitter(
        &self,
        mode_a: usize,
        mode_b: usize,
        transmissivity: f64,
    ) -> Result<Self, FockError> {
        if mode_a == mode_b {
            return Err(FockError::InvalidParameter(
                "beamsplitter modes must be distinct".into(),
            ));
        }
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(FockError::InvalidParameter(format!(
                "transmissivity {transmissivity} outside [0,1]"
            )));
        }
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        let u = super::operators::beamsplitter(self.layout.levels(), transmissivity);
        Ok(self.applied_two_mode(mode_a, mode_b, &u))
    }

    /// Polarization rotation by `theta` on an (H, V) mode pair.
    pub fn apply_rotation(
        &self,
        mode_h: usize,
        mode_v: usize,
        theta: f64,
    ) -> Result<Self, FockError> {
        if mode_h == mode_v {
            return Err(FockError::InvalidParameter(
                "rotation modes must be distinct".into(),
            ));
        }
        self.check_mode(mode_h)?;
        self.check_mode(mode_v)?;
        let u = mode_rotation(self.layout.levels(), theta);
        Ok(self.applied_two_mode(mode_h, mode_v, &u))
    }

    /// Single-mode phase shift `exp(i phi n)`.
    pub fn apply_phase(&self, mode: usize, phi: f64) -> Result<Self, FockError> {
        self.check_mode(mode)?;
        let u = phase_shift(self.layout.levels(), phi);
        Ok(self.applied_one_mode(mode, &u))
    }

    /// Fidelity-free overlap diagnostic `Tr(rho1 rho2)`.
    pub fn overlap(&self, other: &Self) -> f64 {
        let dim = self.rho.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                acc += self.rho[(i, j)] * other.rho[(j, i)];
            }
        }
        acc.re
    }

    /// U rho U^dagger for a two-mode unitary, renormalizing and recording
    /// truncation leakage.
    fn applied_two_mode(
        &self,
        mode_a: usize,
        mode_b: usize,
        u: &Array2<Complex64>,
    ) -> Self {
        let left = self.two_mode_left(mode_a, mode_b, u, &self.rho);
        let left_dag = conj_transpose(&left);
        let both = self.two_mode_left(mode_a, mode_b, u, &left_dag);
        let mut rho = conj_transpose(&both);
        let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
        let leakage = (1.0 - trace).max(0.0);
        if trace > 0.0 {
            rho.mapv_inplace(|v| v / trace);
        }
        Self {
            layout: self.layout.clone(),
            rho,
            last_leakage: leakage,
        }
    }

    fn applied_one_mode(&self, mode: usize, u: &Array2<Complex64>) -> Self {
        let left = self.one_mode_left(mode, u, &self.rho);
        let left_dag = conj_transpose(&left);
        let both = self.one_mode_left(mode, u, &left_dag);
        let mut rho = conj_transpose(&both);
        let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
        let leakage = (1.0 - trace).max(0.0);
        if trace > 0.0 {
            rho.mapv_inplace(|v| v / trace);
        }
        Self {
            layout: self.layout.clone(),
            rho,
            last_leakage: leakage,
        }
    }

    /// `(U x I_rest) m` where U acts on the pair (mode_a, mode_b) with index
    /// convention `n_a * levels + n_b`.
    fn two_mode_left(
        &self,
        mode_a: usize,
        mode_b: usize,
        u: &Array2<Complex64>,
        m: &Array2<Complex64>,
    ) -> Array2<Complex64> {
        let dim = m.nrows();
        let levels = self.layout.levels();
        let d2 = levels * levels;
        let stride_a = self.layout.stride(mode_a);
        let stride_b = self.layout.stride(mode_b);

        let mut offsets = Vec::with_capacity(d2);
        for na in 0..levels {
            for nb in 0..levels {
                offsets.push(na * stride_a + nb * stride_b);
            }
        }
        let rest: Vec<usize> = (0..dim)
            .filter(|&i| {
                self.layout.occupation(i, mode_a) == 0 && self.layout.occupation(i, mode_b) == 0
            })
            .collect();

        let mut out = Array2::<Complex64>::zeros((dim, dim));
        let mut fiber = vec![Complex64::new(0.0, 0.0); d2];
        for &base in &rest {
            for col in 0..dim {
                for (k, &off) in offsets.iter().enumerate() {
                    fiber[k] = m[(base + off, col)];
                }
                for (i, &off_i) in offsets.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &f) in fiber.iter().enumerate() {
                        let uik = u[(i, k)];
                        if uik.norm_sqr() > 0.0 {
                            acc += uik * f;
                        }
                    }
                    out[(base + off_i, col)] = acc;
                }
            }
        }
        out
    }

    fn one_mode_left(
        &self,
        mode: usize,
        u: &Array2<Complex64>,
        m: &Array2<Complex64>,
    ) -> Array2<Complex64> {
        let dim = m.nrows();
        let levels = self.layout.levels();
        let stride = self.layout.stride(mode);
        let rest: Vec<usize> = (0..dim)
            .filter(|&i| self.layout.occupation(i, mode) == 0)
            .collect();

        let mut out = Array2::<Complex64>::zeros((dim, dim));
        let mut fiber = vec![Complex64::new(0.0, 0.0); levels];
        for &base in &rest {
            for col in 0..dim {
                for k in 0..levels {
                    fiber[k] = m[(base + k * stride, col)];
                }
                for i in 0..levels {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &f) in fiber.iter().enumerate() {
                        acc += u[(i, k)] * f;
                    }
                    out[(base + i * stride, col)] = acc;
                }
            }
        }
        out
    }
}

fn conj_transpose(m: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = m.dim();
    let mut out = Array2::<Complex64>::zeros((c, r));
    for i in 0..r {
        for j in 0..c {
            out[(j, i)] = m[(i, j)].conj();
        }
    }
    out
}

/// Poisson probability mass beyond `cutoff` for mean `mu`.
pub fn poisson_tail(mu: f64, cutoff: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let mut term = (-mu).exp();
    let mut cdf = term;
    for n in 1..=cutoff {
        term *= mu / n as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}
