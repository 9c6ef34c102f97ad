//! Link-level detection evaluators used by the pass pipeline.
//!
//! Each evaluator precomputes the source state once, then maps a channel
//! operating point (total transmission, background rate) to window
//! statistics through the diagonal click accounting. The source state never
//! has to be rebuilt across a loss/background grid except for the
//! teleportation circuit, where channel loss participates in the Bell-state
//! interference and is baked into the state via ancilla modes.

use super::measurement::{
    matched_basis_coincidences, party_coincidence_probs, pattern_probability,
    rotated_distribution, subset_silent_table, BoundDetector, DetectionStats,
    OccupationDistribution,
};
use super::statevector::PureState;
use super::{DetectorModel, FockError};

/// Window statistics of a QKD link at one channel operating point.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinkWindowStats {
    /// Detection or coincidence events per second.
    pub rate: f64,
    /// Sifted (matched-basis) events per second.
    pub sifted_rate: f64,
    /// QBER among sifted events.
    pub qber: f64,
    /// Polarization visibility, 1 - 2 qber.
    pub visibility: f64,
    /// Per-pulse gain (prepare-and-measure sources).
    pub gain: f64,
}

/// Entangled (BBM92) source + passive analyzers on both sides.
pub struct EntangledLinkEvaluator {
    diag_zz: OccupationDistribution,
    diag_xx: OccupationDistribution,
    alice_efficiency: f64,
    /// Alice's local detector dark rate; her analyzer faces no channel.
    alice_dark_cps: f64,
    repetition_rate_hz: f64,
}

impl EntangledLinkEvaluator {
    pub fn new(
        epsilon: f64,
        misalignment_angle: f64,
        cutoff: usize,
        alice_efficiency: f64,
        repetition_rate_hz: f64,
    ) -> Result<Self, FockError> {
        let source = PureState::entangled_pair(epsilon, misalignment_angle, cutoff)?;
        let q = std::f64::consts::FRAC_PI_4;
        let diag_zz = rotated_distribution(&source, &[]);
        let diag_xx = rotated_distribution(&source, &[(0, 1, q), (2, 3, q)]);
        Ok(Self {
            diag_zz,
            diag_xx,
            alice_efficiency,
            alice_dark_cps: 20.0,
            repetition_rate_hz,
        })
    }

    /// Override Alice's local dark rate (default 20 cps).
    pub fn with_alice_dark_cps(mut self, dark_cps: f64) -> Self {
        self.alice_dark_cps = dark_cps;
        self
    }

    /// Statistics at a channel operating point.
    ///
    /// `eta_link` is Bob's total transmission probability per photon
    /// (geometry, atmosphere, optics and detector already folded in);
    /// `bg_cps` the background rate per channel-facing detector.
    pub fn window_stats(&self, eta_link: f64, bg_cps: f64, det: &DetectorModel) -> LinkWindowStats {
        let dark = self.alice_dark_cps * det.window_s;
        let noise_b = (det.dark_rate_cps + bg_cps) * det.window_s;
        let eta_a = self.alice_efficiency;

        let mut sifted = 0.0;
        let mut errors = 0.0;
        for diag in [&self.diag_zz, &self.diag_xx] {
            let c = matched_basis_coincidences(
                diag,
                [0, 1, 2, 3],
                [eta_a / 2.0, eta_a / 2.0, eta_link / 2.0, eta_link / 2.0],
                [dark, dark, noise_b, noise_b],
                true,
            );
            sifted += c.sifted;
            errors += c.errors;
        }

        let (p_a, _p_b, p_ab) = party_coincidence_probs(
            &self.diag_zz,
            [0, 1],
            [2, 3],
            eta_a,
            eta_link,
            dark,
            noise_b,
            det.n_detectors,
        );

        let conditional = if p_a > 0.0 { 1.0 / p_a } else { 0.0 };
        let windows = self.repetition_rate_hz * eta_a;
        let qber = if sifted > 0.0 { errors / sifted } else { 0.5 };
        LinkWindowStats {
            rate: windows * p_ab * conditional,
            sifted_rate: windows * sifted * conditional,
            qber,
            visibility: 1.0 - 2.0 * qber,
            gain: p_ab,
        }
    }
}

/// Weak-coherent-pulse source (one intensity) + Bob's passive analyzer.
pub struct WcpLinkEvaluator {
    diag: OccupationDistribution,
    repetition_rate_hz: f64,
}

impl WcpLinkEvaluator {
    pub fn new(
        mean_photon_number: f64,
        misalignment_angle: f64,
        cutoff: usize,
        repetition_rate_hz: f64,
    ) -> Result<Self, FockError> {
        let source = PureState::wcp_pulse(mean_photon_number, misalignment_angle, cutoff)?;
        Ok(Self {
            diag: rotated_distribution(&source, &[]),
            repetition_rate_hz,
        })
    }

    pub fn window_stats(&self, eta_link: f64, bg_cps: f64, det: &DetectorModel) -> LinkWindowStats {
        let noise = (det.dark_rate_cps + bg_cps) * det.window_s;
        let half = eta_link / 2.0;

        let dets = [
            BoundDetector::simple(0, half, noise),
            BoundDetector::simple(1, half, noise),
        ];
        let table = subset_silent_table(&self.diag, &dets);
        let p_correct = pattern_probability(&table, 0b01, 0b10);
        let p_wrong = pattern_probability(&table, 0b10, 0b01);
        let p_double = pattern_probability(&table, 0b11, 0b00);

        let any = BoundDetector {
            factors: vec![(0, eta_link), (1, eta_link)],
            noise_silent: (1.0 - noise).powi(det.n_detectors as i32),
        };
        let gain = 1.0 - subset_silent_table(&self.diag, &[any])[0b1];

        let sifted = p_correct + p_wrong + p_double;
        let errors = p_wrong + 0.5 * p_double;
        let qber = if sifted > 0.0 { errors / sifted } else { 0.5 };
        LinkWindowStats {
            rate: self.repetition_rate_hz * gain,
            sifted_rate: self.repetition_rate_hz * sifted,
            qber,
            visibility: 1.0 - 2.0 * qber,
            gain,
        }
    }
}

/// CHSH correlator statistics at one analyzer-angle setting pair.
#[derive(Debug, Clone, Copy)]
pub struct SettingStats {
    /// Correlator E in [-1, 1] from single-single coincidences.
    pub correlator: f64,
    /// Coincidence rate at this setting, events/s.
    pub rate: f64,
}

/// Entangled source measured at the four CHSH angle settings with active
/// two-detector analyzers.
pub struct ChshEvaluator {
    diags: [OccupationDistribution; 4],
    alice_efficiency: f64,
    alice_dark_cps: f64,
    repetition_rate_hz: f64,
}

/// Standard optimal CHSH polarization angles (a, a', b, b').
pub const CHSH_ANGLES: (f64, f64, f64, f64) = (
    0.0,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::PI / 8.0,
    3.0 * std::f64::consts::PI / 8.0,
);

impl ChshEvaluator {
    pub fn new(
        epsilon: f64,
        misalignment_angle: f64,
        cutoff: usize,
        alice_efficiency: f64,
        repetition_rate_hz: f64,
    ) -> Result<Self, FockError> {
        Self::with_angles(
            epsilon,
            misalignment_angle,
            cutoff,
            alice_efficiency,
            repetition_rate_hz,
            CHSH_ANGLES,
        )
    }

    pub fn with_angles(
        epsilon: f64,
        misalignment_angle: f64,
        cutoff: usize,
        alice_efficiency: f64,
        repetition_rate_hz: f64,
        angles: (f64, f64, f64, f64),
    ) -> Result<Self, FockError> {
        let source = PureState::entangled_pair(epsilon, misalignment_angle, cutoff)?;
        let (a, ap, b, bp) = angles;
        // Setting order: (a,b), (a,b'), (a',b), (a',b').
        let pairs = [(a, b), (a, bp), (ap, b), (ap, bp)];
        let diags = pairs.map(|(pa, pb)| {
            rotated_distribution(&source, &[(0, 1, pa), (2, 3, pb)])
        });
        Ok(Self {
            diags,
            alice_efficiency,
            alice_dark_cps: 20.0,
            repetition_rate_hz,
        })
    }

    /// Override Alice's local dark rate (default 20 cps).
    pub fn with_alice_dark_cps(mut self, dark_cps: f64) -> Self {
        self.alice_dark_cps = dark_cps;
        self
    }

    /// Per-setting correlators and rates at a channel operating point.
    pub fn setting_stats(
        &self,
        eta_link: f64,
        bg_cps: f64,
        det: &DetectorModel,
    ) -> [SettingStats; 4] {
        let dark = self.alice_dark_cps * det.window_s;
        let noise_b = (det.dark_rate_cps + bg_cps) * det.window_s;
        let eta_a = self.alice_efficiency;

        let mut out = [SettingStats {
            correlator: 0.0,
            rate: 0.0,
        }; 4];
        for (i, diag) in self.diags.iter().enumerate() {
            // Active analyzers: both detectors of the chosen basis at full
            // efficiency, two detectors of noise per party.
            let c = matched_basis_coincidences(
                diag,
                [0, 1, 2, 3],
                [eta_a, eta_a, eta_link, eta_link],
                [dark, dark, noise_b, noise_b],
                true,
            );
            let total: f64 = c.singles.iter().sum();
            // Correlation sign convention: ++ and -- positive.
            let corr = if total > 0.0 {
                (c.singles[0] - c.singles[1] - c.singles[2] + c.singles[3]) / total
            } else {
                0.0
            };
            let (p_a, _, p_ab) = party_coincidence_probs(
                diag,
                [0, 1],
                [2, 3],
                eta_a,
                eta_link,
                dark,
                noise_b,
                2,
            );
            let conditional = if p_a > 0.0 { p_ab / p_a } else { 0.0 };
            out[i] = SettingStats {
                correlator: corr,
                rate: self.repetition_rate_hz * eta_a * conditional,
            };
        }
        out
    }

    /// CHSH S parameter from the four setting correlators.
    pub fn s_parameter(stats: &[SettingStats; 4]) -> f64 {
        (stats[0].correlator - stats[1].correlator).abs()
            + (stats[2].correlator + stats[3].correlator).abs()
    }
}

/// Configuration of a teleportation simulation.
#[derive(Debug, Clone, Copy)]
pub struct TeleportationConfig {
    /// SPDC squeezing strength.
    pub epsilon: f64,
    /// WCP input amplitude (mean photon number alpha^2).
    pub alpha: f64,
    /// Channel loss applied to the transmitted photon, dB.
    pub channel_loss_db: f64,
    /// Background rate per BSM detector, counts/s.
    pub background_rate_cps: f64,
    /// Link misalignment rotation, rad.
    pub misalignment_angle: f64,
    /// Fock cutoff per mode (convergence is checked at cutoff + 1).
    pub cutoff: usize,
    /// Detection efficiency of the kept photon's local analyzer.
    pub local_efficiency: f64,
    /// Dark rate of the kept photon's local detectors, counts/s.
    pub local_dark_cps: f64,
    /// Source repetition rate, Hz.
    pub repetition_rate_hz: f64,
}

impl Default for TeleportationConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.55,
            alpha: 0.14,
            channel_loss_db: 45.0,
            background_rate_cps: 0.0,
            misalignment_angle: 0.0,
            cutoff: 3,
            local_efficiency: 0.25,
            local_dark_cps: 20.0,
            repetition_rate_hz: 1e8,
        }
    }
}

/// Outcome of a teleportation simulation.
#[derive(Debug, Clone)]
pub struct TeleportationResult {
    pub stats: DetectionStats,
    /// Visibility shift observed when raising the cutoff by one.
    pub cutoff_shift: f64,
    /// Probability per window of a successful Bell-state-measurement
    /// pattern coinciding with a kept-photon click.
    pub conditioning_prob: f64,
}

/// Teleportation evaluator; rebuildable per channel operating point.
pub struct TeleportationEvaluator {
    config: TeleportationConfig,
}

/// Conditioned detection probabilities of the teleportation circuit.
#[derive(Debug, Clone, Copy, Default)]
pub struct TeleportOutcome {
    pub visibility: f64,
    /// Probability per window of a Psi- pattern plus a kept-photon click.
    pub conditioning_prob: f64,
    pub n_expected: f64,
    pub n_unexpected: f64,
}

/// The teleportation circuit's occupation distribution at one channel
/// transmissivity, reusable across noise settings.
pub struct TeleportationDistribution {
    dist: OccupationDistribution,
    transmissivity: f64,
}

impl TeleportationDistribution {
    pub fn build(
        epsilon: f64,
        alpha: f64,
        misalignment_angle: f64,
        channel_loss_db: f64,
        cutoff: usize,
    ) -> Result<Self, FockError> {
        let t = 10f64.powf(-channel_loss_db / 10.0);
        let state =
            PureState::teleportation_circuit(epsilon, alpha, misalignment_angle, t, cutoff)?;
        Ok(Self {
            dist: OccupationDistribution::from_pure(&state),
            transmissivity: t,
        })
    }

    /// Detection accounting at a noise operating point.
    pub fn account(
        &self,
        detectors: &DetectorModel,
        local_efficiency: f64,
        local_dark_cps: f64,
        background_rate_cps: f64,
    ) -> TeleportOutcome {
        let eta_bsm = detectors.efficiency;
        let noise_bsm = (detectors.dark_rate_cps + background_rate_cps) * detectors.window_s;
        let dark_local = local_dark_cps * detectors.window_s;

        // Detector bits: 0 k_par(K_H), 1 k_perp(K_V),
        //                2 t_H, 3 t_V, 4 w_H, 5 w_V.
        // t_H and w_H watch the coherently-evolved BSM output modes; the V
        // polarization never interferes, so t_V and w_V share the T_V mode
        // through multinomial routing with the channel transmissivity and
        // the 50:50 split folded into their absorbed fractions.
        let routed_v = self.transmissivity * eta_bsm / 2.0;
        let dets = [
            BoundDetector::simple(0, local_efficiency, dark_local),
            BoundDetector::simple(1, local_efficiency, dark_local),
            BoundDetector::simple(2, eta_bsm, noise_bsm),
            BoundDetector::simple(3, routed_v, noise_bsm),
            BoundDetector::simple(4, eta_bsm, noise_bsm),
            BoundDetector::simple(3, routed_v, noise_bsm),
        ];
        let table = subset_silent_table(&self.dist, &dets);

        // Linear-optics Bell signatures on the four BSM detectors, with the
        // two non-participating detectors silent. Psi-: orthogonal
        // polarizations in opposite arms; Psi+: orthogonal polarizations in
        // the same arm. For input-basis polarization visibility both herald
        // the teleported state identically (the Psi+ phase flip is
        // invisible in the H/V statistics), so both count.
        let bsm_patterns: [(usize, usize); 4] = [
            (0b10_0100, 0b01_1000), // t_H & w_V click, t_V & w_H silent
            (0b01_1000, 0b10_0100), // t_V & w_H click, t_H & w_V silent
            (0b00_1100, 0b11_0000), // t_H & t_V click, w arm silent
            (0b11_0000, 0b00_1100), // w_H & w_V click, t arm silent
        ];

        // Kept-photon polarization relative to the WCP input: single clicks
        // carry the bit; double clicks are ambiguous and split evenly.
        let mut n_e = 0.0;
        let mut n_u = 0.0;
        for &(bsm_click, bsm_silent) in &bsm_patterns {
            let par = pattern_probability(&table, bsm_click | 0b01, bsm_silent | 0b10);
            let perp = pattern_probability(&table, bsm_click | 0b10, bsm_silent | 0b01);
            let both = pattern_probability(&table, bsm_click | 0b11, bsm_silent);
            n_e += par + 0.5 * both;
            n_u += perp + 0.5 * both;
        }

        let total = n_e + n_u;
        let visibility = if total > 0.0 { (n_e - n_u) / total } else { 0.0 };
        TeleportOutcome {
            visibility,
            conditioning_prob: total,
            n_expected: n_e,
            n_unexpected: n_u,
        }
    }
}

impl TeleportationEvaluator {
    pub fn new(config: TeleportationConfig) -> Self {
        Self { config }
    }

    fn outcome_at_cutoff(
        &self,
        cutoff: usize,
        detectors: &DetectorModel,
    ) -> Result<TeleportOutcome, FockError> {
        let cfg = &self.config;
        let dist = TeleportationDistribution::build(
            cfg.epsilon,
            cfg.alpha,
            cfg.misalignment_angle,
            cfg.channel_loss_db,
            cutoff,
        )?;
        Ok(dist.account(
            detectors,
            cfg.local_efficiency,
            cfg.local_dark_cps,
            cfg.background_rate_cps,
        ))
    }

    /// Run at the configured cutoff with a mandatory convergence sweep to
    /// cutoff + 1. A visibility shift above 1e-3 is an error, not a result.
    pub fn run(&self, detectors: &DetectorModel) -> Result<TeleportationResult, FockError> {
        detectors.validate()?;
        let base = self.outcome_at_cutoff(self.config.cutoff, detectors)?;
        let refined = self.outcome_at_cutoff(self.config.cutoff + 1, detectors)?;
        let shift = (refined.visibility - base.visibility).abs();
        if shift > 1e-3 {
            return Err(FockError::CutoffNotConverged {
                shift,
                from: self.config.cutoff,
                to: self.config.cutoff + 1,
            });
        }
        let qber = (1.0 - refined.visibility) / 2.0;
        let stats = DetectionStats {
            p_click: vec![],
            p_coinc: vec![refined.n_expected, refined.n_unexpected],
            visibility: refined.visibility,
            qber,
            rate: self.config.repetition_rate_hz * refined.conditioning_prob,
        };
        Ok(TeleportationResult {
            stats,
            cutoff_shift: shift,
            conditioning_prob: refined.conditioning_prob,
        })
    }
}

/// One-call teleportation simulation at the default reduced cutoff.
pub fn simulate_teleportation(
    epsilon: f64,
    alpha: f64,
    channel_loss_db: f64,
    background_rate_cps: f64,
    detectors: &DetectorModel,
    repetition_rate_hz: f64,
) -> Result<TeleportationResult, FockError> {
    let config = TeleportationConfig {
        epsilon,
        alpha,
        channel_loss_db,
        background_rate_cps,
        repetition_rate_hz,
        ..TeleportationConfig::default()
    };
    TeleportationEvaluator::new(config).run(detectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::misalignment_angle_for_visibility;

    fn det(eff: f64, dark: f64, window: f64) -> DetectorModel {
        DetectorModel {
            efficiency: eff,
            dark_rate_cps: dark,
            window_s: window,
            n_detectors: 4,
        }
    }

    /// Run teleportation, deepening the cutoff until the convergence sweep
    /// accepts it (strong squeezing needs more Fock levels).
    fn run_deepening(mut config: TeleportationConfig, det: &DetectorModel) -> TeleportationResult {
        loop {
            match TeleportationEvaluator::new(config).run(det) {
                Ok(r) => return r,
                Err(FockError::CutoffNotConverged { .. }) if config.cutoff < 7 => {
                    config.cutoff += 1;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn entangled_evaluator_matches_misalignment_visibility() {
        let theta = misalignment_angle_for_visibility(0.98);
        let ev = EntangledLinkEvaluator::new(0.01, theta, 4, 1.0, 1e8).unwrap();
        let stats = ev.window_stats(1.0, 0.0, &det(1.0, 0.0, 1e-9));
        assert!((stats.visibility - 0.98).abs() < 1e-3, "{}", stats.visibility);
    }

    #[test]
    fn entangled_multi_pair_degrades_visibility() {
        let theta = misalignment_angle_for_visibility(0.98);
        let weak = EntangledLinkEvaluator::new(0.05, theta, 6, 0.25, 1e8).unwrap();
        let strong = EntangledLinkEvaluator::new(0.45, theta, 6, 0.25, 1e8).unwrap();
        let d = det(0.5, 0.0, 1e-9);
        let v_weak = weak.window_stats(0.1, 0.0, &d).visibility;
        let v_strong = strong.window_stats(0.1, 0.0, &d).visibility;
        assert!(v_strong < v_weak - 0.01, "{v_strong} vs {v_weak}");
    }

    #[test]
    fn entangled_visibility_monotone_in_background_and_loss() {
        let theta = misalignment_angle_for_visibility(0.98);
        let ev = EntangledLinkEvaluator::new(0.22, theta, 4, 0.25, 1e8).unwrap();
        let d = det(1.0, 20.0, 1e-9);
        // Non-increasing in background at fixed loss.
        let mut prev = f64::INFINITY;
        for bg in [0.0, 100.0, 1000.0, 10000.0, 100000.0] {
            let v = ev.window_stats(1e-3, bg, &d).visibility;
            assert!(v <= prev + 1e-12, "bg {bg}: {v} > {prev}");
            prev = v;
        }
        // Non-increasing in loss at fixed nonzero background.
        let mut prev = f64::INFINITY;
        for loss_db in [10.0, 20.0, 30.0, 40.0, 50.0, 60.0] {
            let v = ev
                .window_stats(10f64.powf(-loss_db / 10.0), 300.0, &d)
                .visibility;
            assert!(v <= prev + 1e-12, "loss {loss_db}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn entangled_cutoff_convergence_at_operating_intensity() {
        let theta = misalignment_angle_for_visibility(0.98);
        let a = EntangledLinkEvaluator::new(0.22, theta, 6, 0.25, 1e8).unwrap();
        let b = EntangledLinkEvaluator::new(0.22, theta, 7, 0.25, 1e8).unwrap();
        let d = det(0.5, 20.0, 1e-9);
        let sa = a.window_stats(1e-2, 200.0, &d);
        let sb = b.window_stats(1e-2, 200.0, &d);
        assert!((sa.qber - sb.qber).abs() < 1e-4);
        assert!((sa.gain - sb.gain).abs() < 1e-4);
    }

    #[test]
    fn wcp_gain_close_to_poisson_click_probability() {
        let ev = WcpLinkEvaluator::new(0.5, 0.0, 6, 3e8).unwrap();
        let stats = ev.window_stats(0.3, 0.0, &det(1.0, 0.0, 1e-9));
        // Gain = 1 - exp(-eta mu) for a coherent pulse.
        let want = 1.0 - (-0.3f64 * 0.5).exp();
        assert!((stats.gain - want).abs() < 1e-6, "{} vs {want}", stats.gain);
    }

    #[test]
    fn wcp_cutoff_convergence() {
        let a = WcpLinkEvaluator::new(0.5, 0.1, 6, 3e8).unwrap();
        let b = WcpLinkEvaluator::new(0.5, 0.1, 7, 3e8).unwrap();
        let d = det(0.6, 20.0, 1e-9);
        let sa = a.window_stats(3e-3, 100.0, &d);
        let sb = b.window_stats(3e-3, 100.0, &d);
        assert!((sa.gain - sb.gain).abs() < 1e-4);
        assert!((sa.qber - sb.qber).abs() < 1e-4);
    }

    #[test]
    fn chsh_ideal_singlet_reaches_tsirelson() {
        // Vanishing pumping: the coincidence-conditioned state is the singlet.
        let ev = ChshEvaluator::new(1e-4, 0.0, 2, 1.0, 1e8).unwrap();
        let stats = ev.setting_stats(1.0, 0.0, &det(1.0, 0.0, 1e-9));
        let s = ChshEvaluator::s_parameter(&stats);
        assert!(
            (s - 2.0 * 2.0f64.sqrt()).abs() < 1e-6,
            "S = {s} vs 2*sqrt(2)"
        );
    }

    #[test]
    fn chsh_scales_linearly_with_misalignment_visibility() {
        for v_target in [0.95, 0.85, 0.75] {
            let theta = misalignment_angle_for_visibility(v_target);
            let ev = ChshEvaluator::new(1e-3, theta, 2, 1.0, 1e8).unwrap();
            let stats = ev.setting_stats(1.0, 0.0, &det(1.0, 0.0, 1e-9));
            let s = ChshEvaluator::s_parameter(&stats);
            let want = 2.0 * 2.0f64.sqrt() * v_target;
            assert!(
                (s - want).abs() / want < 0.01,
                "V={v_target}: S={s} vs {want}"
            );
        }
    }

    #[test]
    fn teleportation_ideal_regime_beats_cloner() {
        // At zero loss the double-pair background scales as tanh^4(eps)
        // while the signal needs the WCP photon, so the ideal regime wants
        // eps below alpha.
        let config = TeleportationConfig {
            epsilon: 0.05,
            alpha: 0.12,
            channel_loss_db: 0.0,
            background_rate_cps: 0.0,
            misalignment_angle: 0.0,
            cutoff: 3,
            local_efficiency: 0.6,
            local_dark_cps: 0.0,
            repetition_rate_hz: 1e8,
        };
        let result = TeleportationEvaluator::new(config)
            .run(&det(0.6, 0.0, 1e-9))
            .unwrap();
        assert!(
            result.stats.visibility > 2.0 / 3.0,
            "V = {}",
            result.stats.visibility
        );
        assert!(result.cutoff_shift < 1e-3);
    }

    #[test]
    fn teleportation_no_input_photon_no_conditioning() {
        // At the operating loss, removing the WCP input leaves only the
        // doubly-loss-suppressed double-pair floor.
        let loss_db = 45.0;
        let base = TeleportationConfig {
            epsilon: 0.55,
            alpha: 0.14,
            channel_loss_db: loss_db,
            background_rate_cps: 0.0,
            misalignment_angle: 0.0,
            cutoff: 3,
            local_efficiency: 0.25,
            local_dark_cps: 0.0,
            repetition_rate_hz: 1e8,
        };
        let detector = det(0.5, 0.0, 0.5e-9);
        let with_input = run_deepening(base, &detector);
        let without = run_deepening(
            TeleportationConfig {
                alpha: 0.0,
                ..base
            },
            &detector,
        );
        assert!(without.conditioning_prob < 1e-10);
        assert!(without.conditioning_prob < 1e-2 * with_input.conditioning_prob);
    }

    #[test]
    fn teleportation_uplink_operating_point_runs() {
        // The paper's uplink teleportation parameters at representative
        // loss; the squeezing is strong enough that the cutoff must deepen
        // past the default before the convergence sweep accepts it.
        let detector = det(0.5, 20.0, 0.5e-9);
        let result = run_deepening(
            TeleportationConfig {
                epsilon: 0.55,
                alpha: 0.14,
                channel_loss_db: 47.0,
                background_rate_cps: 300.0,
                cutoff: 3,
                local_efficiency: 0.25,
                local_dark_cps: 20.0,
                repetition_rate_hz: 1e8,
                misalignment_angle: 0.0,
            },
            &detector,
        );
        assert!(result.stats.visibility > 0.0 && result.stats.visibility <= 1.0);
        assert!(result.conditioning_prob > 0.0);
    }
}
