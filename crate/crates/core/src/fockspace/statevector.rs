//! Pure-state vectors over truncated multimode Fock spaces.
//!
//! Sources are unitary circuits on vacuum, so building them as state vectors
//! is exact and far cheaper than density-matrix evolution. Channel loss that
//! must act *before* further interference (the teleportation Bell-state
//! measurement) is routed into explicit vacuum ancilla modes with a
//! beamsplitter, which keeps the state pure while remaining an exact
//! representation of the CPTP loss channel.

use ndarray::Array2;
use num_complex::Complex64;

use super::operators::{
    beamsplitter, displacement, mode_rotation, phase_shift, two_mode_squeezer,
};
use super::{FockError, ModeLayout, Party, Polarization};

/// Pure multimode state with truncation-leakage tracking.
#[derive(Debug, Clone)]
pub struct PureState {
    layout: ModeLayout,
    amps: Vec<Complex64>,
    leakage: f64,
}

impl PureState {
    pub fn vacuum(layout: &ModeLayout) -> Result<Self, FockError> {
        let dim = layout.dim()?;
        // Vectors are cheap; still refuse absurd sizes.
        if dim > 50_000_000 {
            return Err(FockError::DimensionBudget {
                dim,
                budget: 50_000_000,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            layout: layout.clone(),
            amps,
            leakage: 0.0,
        })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Total truncation leakage accumulated over all operations so far.
    pub fn accumulated_leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| self.layout.occupation(i, mode) as f64 * a.norm_sqr())
            .sum()
    }

    /// Apply a two-mode operator (index convention `n_a * levels + n_b`),
    /// renormalizing and recording any trace deficit as leakage.
    ///
    /// The mode-operator unitaries conserve or pair-shift photon number, so
    /// their matrices are sparse; rows are precompiled to nonzero entries.
    pub fn apply_two_mode(&mut self, mode_a: usize, mode_b: usize, u: &Array2<Complex64>) {
        let levels = self.layout.levels();
        let d2 = levels * levels;
        let stride_a = self.layout.stride(mode_a);
        let stride_b = self.layout.stride(mode_b);
        let dim = self.amps.len();

        let mut offsets = Vec::with_capacity(d2);
        for na in 0..levels {
            for nb in 0..levels {
                offsets.push(na * stride_a + nb * stride_b);
            }
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(d2);
        for i in 0..d2 {
            let mut row = Vec::new();
            for k in 0..d2 {
                let v = u[(i, k)];
                if v.norm_sqr() > 1e-32 {
                    row.push((k, v));
                }
            }
            rows.push(row);
        }

        let mut fiber = vec![Complex64::new(0.0, 0.0); d2];
        for base in 0..dim {
            if self.layout.occupation(base, mode_a) != 0
                || self.layout.occupation(base, mode_b) != 0
            {
                continue;
            }
            for (k, &off) in offsets.iter().enumerate() {
                fiber[k] = self.amps[base + off];
            }
            for (i, &off_i) in offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(k, v) in &rows[i] {
                    acc += v * fiber[k];
                }
                self.amps[base + off_i] = acc;
            }
        }
        self.renormalize();
    }

    pub fn apply_one_mode(&mut self, mode: usize, u: &Array2<Complex64>) {
        let levels = self.layout.levels();
        let stride = self.layout.stride(mode);
        let dim = self.amps.len();
        let mut fiber = vec![Complex64::new(0.0, 0.0); levels];
        for base in 0..dim {
            if self.layout.occupation(base, mode) != 0 {
                continue;
            }
            for k in 0..levels {
                fiber[k] = self.amps[base + k * stride];
            }
            for i in 0..levels {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &f) in fiber.iter().enumerate() {
                    acc += u[(i, k)] * f;
                }
                self.amps[base + i * stride] = acc;
            }
        }
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let n2 = self.norm_sqr();
        self.leakage += (1.0 - n2).max(0.0);
        if n2 > 0.0 {
            let inv = 1.0 / n2.sqrt();
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    pub fn squeeze(&mut self, mode_a: usize, mode_b: usize, eps: f64) {
        let u = two_mode_squeezer(self.layout.levels(), eps);
        self.apply_two_mode(mode_a, mode_b, &u);
    }

    pub fn displace(&mut self, mode: usize, alpha: Complex64) {
        let u = displacement(self.layout.levels(), alpha);
        self.apply_one_mode(mode, &u);
    }

    pub fn rotate(&mut self, mode_h: usize, mode_v: usize, theta: f64) {
        let u = mode_rotation(self.layout.levels(), theta);
        self.apply_two_mode(mode_h, mode_v, &u);
    }

    pub fn split(&mut self, mode_a: usize, mode_b: usize, transmissivity: f64) {
        let u = beamsplitter(self.layout.levels(), transmissivity);
        self.apply_two_mode(mode_a, mode_b, &u);
    }

    pub fn phase(&mut self, mode: usize, phi: f64) {
        let u = phase_shift(self.layout.levels(), phi);
        self.apply_one_mode(mode, &u);
    }

    /// Singlet-correlated SPDC pair state on [Alice H, Alice V, Bob H, Bob V].
    ///
    /// Two squeezers pump the (A_H, B_V) and (A_V, B_H) mode pairs; a pi
    /// phase on Alice's V mode sets the relative sign so the two-photon
    /// subspace is the |Psi-> singlet. The misalignment rotation acts on
    /// Bob's modes only.
    pub fn entangled_pair(
        epsilon: f64,
        misalignment_angle: f64,
        cutoff: usize,
    ) -> Result<Self, FockError> {
        if epsilon < 0.0 {
            return Err(FockError::InvalidParameter(
                "squeezing strength must be >= 0".into(),
            ));
        }
        let layout = ModeLayout::two_party(cutoff);
        let mut state = Self::vacuum(&layout)?;
        state.squeeze(0, 3, epsilon); // A_H with B_V
        state.squeeze(1, 2, epsilon); // A_V with B_H
        state.phase(1, std::f64::consts::PI);
        if misalignment_angle != 0.0 {
            state.rotate(2, 3, misalignment_angle);
        }
        Ok(state)
    }

    /// Weak-coherent-pulse state |alpha> polarized H on [H, V], rotated by
    /// the channel misalignment angle.
    pub fn wcp_pulse(
        mean_photon_number: f64,
        misalignment_angle: f64,
        cutoff: usize,
    ) -> Result<Self, FockError> {
        let layout = ModeLayout::single_party(cutoff);
        let mut state = Self::vacuum(&layout)?;
        let tail = super::state::poisson_tail(mean_photon_number, cutoff);
        if tail > 1e-5 {
            return Err(FockError::DisplacementTail {
                mu: mean_photon_number,
                tail,
                cutoff,
            });
        }
        state.displace(0, Complex64::new(mean_photon_number.sqrt(), 0.0));
        if misalignment_angle != 0.0 {
            state.rotate(0, 1, misalignment_angle);
        }
        Ok(state)
    }

    /// Teleportation circuit state on six modes:
    /// [K_H, K_V, T_H, T_V, W_H, anc_H].
    ///
    /// K is the kept photon of the SPDC pair, T the photon transmitted
    /// through the lossy channel, W the H-polarized WCP input photon
    /// interfered with T in the Bell-state measurement. Only the H
    /// polarization needs coherent evolution: the channel loss on T_H is
    /// purified into the vacuum ancilla before the BSM beamsplitter, while
    /// T_V only ever meets vacuum ports (its loss and its 50:50 BSM split
    /// are multinomial routing, handled in the detector accounting).
    pub fn teleportation_circuit(
        epsilon: f64,
        alpha: f64,
        misalignment_angle: f64,
        channel_transmissivity: f64,
        cutoff: usize,
    ) -> Result<Self, FockError> {
        if epsilon < 0.0 || alpha < 0.0 {
            return Err(FockError::InvalidParameter(
                "source strengths must be >= 0".into(),
            ));
        }
        let layout = ModeLayout::new(
            cutoff,
            vec![
                (Party::Alice, Polarization::Horizontal),
                (Party::Alice, Polarization::Vertical),
                (Party::Bob, Polarization::Horizontal),
                (Party::Bob, Polarization::Vertical),
                (Party::Input, Polarization::Horizontal),
                (Party::Ancilla, Polarization::Horizontal),
            ],
        )?;
        let mut state = Self::vacuum(&layout)?;
        // SPDC singlet between K and T.
        state.squeeze(0, 3, epsilon);
        state.squeeze(1, 2, epsilon);
        state.phase(1, std::f64::consts::PI);
        // Link misalignment on the transmitted photon.
        if misalignment_angle != 0.0 {
            state.rotate(2, 3, misalignment_angle);
        }
        // WCP input photon, H polarized.
        state.displace(4, Complex64::new(alpha, 0.0));
        // Channel loss on T_H, then the H-polarization BSM beamsplitter
        // where it interferes with the WCP field.
        if channel_transmissivity < 1.0 {
            state.split(2, 5, channel_transmissivity);
        }
        state.split(2, 4, 0.5);
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entangled_pair_two_photon_subspace_is_singlet() {
        let state = PureState::entangled_pair(0.15, 0.0, 3).unwrap();
        let layout = state.layout();
        let idx = |na_h: usize, na_v: usize, nb_h: usize, nb_v: usize| {
            na_h * layout.stride(0)
                + na_v * layout.stride(1)
                + nb_h * layout.stride(2)
                + nb_v * layout.stride(3)
        };
        let hv = state.amplitudes()[idx(1, 0, 0, 1)];
        let vh = state.amplitudes()[idx(0, 1, 1, 0)];
        // |H_A V_B> - |V_A H_B>: equal magnitude, opposite sign.
        assert!(hv.re > 0.0);
        assert!((hv + vh).norm() < 1e-12, "hv={hv}, vh={vh}");
        // No same-polarization two-photon component.
        assert!(state.amplitudes()[idx(1, 0, 1, 0)].norm() < 1e-12);
    }

    #[test]
    fn entangled_pair_mean_photons() {
        let eps = 0.22;
        let state = PureState::entangled_pair(eps, 0.0, 6).unwrap();
        let total: f64 = (0..4).map(|m| state.mean_photon_number(m)).sum();
        let want = 2.0 * 2.0 * eps.sinh().powi(2); // two squeezers
        assert!((total - want).abs() < 1e-6);
    }

    #[test]
    fn wcp_pulse_polarization_rotation() {
        let state = PureState::wcp_pulse(0.5, 0.2, 6).unwrap();
        let n_h = state.mean_photon_number(0);
        let n_v = state.mean_photon_number(1);
        assert!((n_h + n_v - 0.5).abs() < 1e-4);
        let frac_v = n_v / (n_h + n_v);
        assert!((frac_v - 0.2f64.sin().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn teleportation_circuit_norm_and_loss() {
        let state = PureState::teleportation_circuit(0.3, 0.1, 0.0, 0.25, 4).unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        // The H-polarized transmitted mode loses 75% of its photons to the
        // ancilla; T_V's loss lives in the detector accounting instead.
        let into_anc = state.mean_photon_number(5);
        let t_h_photons = 0.3f64.sinh().powi(2);
        assert!(
            (into_anc - 0.75 * t_h_photons).abs() < 1e-4,
            "ancilla photons {into_anc} vs {}",
            0.75 * t_h_photons
        );
        // Kept photons are untouched by the channel.
        let kept = state.mean_photon_number(0) + state.mean_photon_number(1);
        assert!((kept - 2.0 * 0.3f64.sinh().powi(2)).abs() < 1e-4);
    }
}
