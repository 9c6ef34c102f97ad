//! Click-probability accounting for bucket detectors.
//!
//! Every detection configuration in the artifact reduces to expectations of
//! operators diagonal in the photon-number basis of the analyzed modes:
//! a bucket detector with efficiency `eta` watching a mode with `n` photons
//! stays silent with probability `(1-eta)^n`, and independent dark/background
//! clicks multiply in as `(1-p)` factors. Joint click-pattern probabilities
//! then follow from subset-silence tables by inclusion-exclusion.
//!
//! The passive four-detector BB84 analyzer is handled without extra modes:
//! each photon independently routes to one of the two basis arms of the
//! splitter, so a detector in the analyzed arm sees efficiency `eta/2` while
//! the probability that a photon escapes *all* detectors is `(1-eta)^n`
//! regardless of polarization basis. Both facts are exact for bucket
//! detection behind a balanced splitter.

use ndarray::Array2;
use num_complex::Complex64;

use super::state::MultimodeState;
use super::statevector::PureState;
use super::{DetectorModel, FockError, ModeLayout};

/// Maximum modes the occupation-distribution compression supports.
pub const MAX_MODES: usize = 8;

/// Compressed joint photon-number distribution over analysis modes.
///
/// Only configurations with non-negligible probability are retained; for the
/// squeezing strengths in play the support is a few thousand entries even on
/// eight modes.
#[derive(Debug, Clone)]
pub struct OccupationDistribution {
    n_modes: usize,
    entries: Vec<([u8; MAX_MODES], f64)>,
}

impl OccupationDistribution {
    pub fn from_pure(state: &PureState) -> Self {
        let layout = state.layout();
        Self::from_diagonal(
            layout,
            state.amplitudes().iter().map(|a| a.norm_sqr()),
        )
    }

    pub fn from_density(state: &MultimodeState) -> Self {
        let layout = state.layout().clone();
        Self::from_diagonal(&layout, state.diagonal().into_iter())
    }

    fn from_diagonal(layout: &ModeLayout, diag: impl Iterator<Item = f64>) -> Self {
        let n_modes = layout.n_modes();
        assert!(n_modes <= MAX_MODES);
        let mut entries = Vec::new();
        for (idx, p) in diag.enumerate() {
            if p <= 1e-18 {
                continue;
            }
            let mut occ = [0u8; MAX_MODES];
            for m in 0..n_modes {
                occ[m] = layout.occupation(idx, m) as u8;
            }
            entries.push((occ, p));
        }
        Self { n_modes, entries }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// `E[ prod_i survival_i^(n_{mode_i}) ]` over the distribution.
    pub fn survival_expectation(&self, factors: &[(usize, f64)]) -> f64 {
        self.entries
            .iter()
            .map(|(occ, p)| {
                let mut w = *p;
                for &(mode, s) in factors {
                    w *= s.powi(occ[mode] as i32);
                }
                w
            })
            .sum()
    }
}

/// A bucket detector bound to one or more analysis modes.
///
/// `factors` lists `(mode, absorbed_fraction)` pairs: the probability that
/// a photon in that mode ends up detected by this detector. Detectors may
/// share a mode (passive routing of one mode onto several detectors); the
/// accounting then sums the absorbed fractions of whichever detectors are
/// required silent, which is the exact multinomial-routing statistics of a
/// splitter with a vacuum partner port.
#[derive(Debug, Clone)]
pub struct BoundDetector {
    pub factors: Vec<(usize, f64)>,
    /// Silence probability of the independent noise (darks + background)
    /// over however many physical detectors this binding represents.
    pub noise_silent: f64,
}

impl BoundDetector {
    pub fn simple(mode: usize, efficiency: f64, noise_click: f64) -> Self {
        Self {
            factors: vec![(mode, efficiency)],
            noise_silent: 1.0 - noise_click,
        }
    }
}

/// `table[mask]` = probability that every detector in `mask` is silent
/// (photon-induced and noise clicks both absent), other detectors traced.
pub fn subset_silent_table(dist: &OccupationDistribution, detectors: &[BoundDetector]) -> Vec<f64> {
    let k = detectors.len();
    assert!(k <= 16);
    let size = 1usize << k;
    let n_modes = dist.n_modes;
    let max_n = dist
        .entries
        .iter()
        .flat_map(|(occ, _)| occ[..n_modes].iter())
        .copied()
        .max()
        .unwrap_or(0) as usize;

    // Per (mask, mode): survival weight (1 - sum of absorbed fractions of
    // the mask's detectors on that mode) raised to each occupation.
    let mut pow = vec![1.0f64; size * n_modes * (max_n + 1)];
    let mut noise = vec![1.0f64; size];
    for mask in 0..size {
        let mut absorbed = vec![0.0f64; n_modes];
        for (d, det) in detectors.iter().enumerate() {
            if mask >> d & 1 == 1 {
                noise[mask] *= det.noise_silent;
                for &(mode, frac) in &det.factors {
                    absorbed[mode] += frac;
                }
            }
        }
        for (mode, &a) in absorbed.iter().enumerate() {
            let survive = (1.0 - a).max(0.0);
            let base = (mask * n_modes + mode) * (max_n + 1);
            let mut w = 1.0;
            for n in 0..=max_n {
                pow[base + n] = w;
                w *= survive;
            }
        }
    }

    let mut table = vec![0.0f64; size];
    for (occ, p) in &dist.entries {
        for mask in 0..size {
            let mut w = *p;
            for mode in 0..n_modes {
                let n = occ[mode] as usize;
                if n > 0 {
                    w *= pow[(mask * n_modes + mode) * (max_n + 1) + n];
                }
            }
            table[mask] += w;
        }
    }
    for mask in 0..size {
        table[mask] *= noise[mask];
    }
    table
}

/// Probability of an exact click pattern: detectors in `click_mask` click,
/// detectors in `silent_mask` stay silent, all others are traced out.
pub fn pattern_probability(table: &[f64], click_mask: usize, silent_mask: usize) -> f64 {
    debug_assert_eq!(click_mask & silent_mask, 0);
    // Inclusion-exclusion over subsets of the click set.
    let mut p = 0.0;
    let mut sub = click_mask;
    loop {
        let sign = if (sub.count_ones() & 1) == 1 { -1.0 } else { 1.0 };
        p += sign * table[sub | silent_mask];
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & click_mask;
    }
    p.max(0.0)
}

/// Measurement basis of a polarization analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisBasis {
    /// H/V (computational) basis.
    Z,
    /// Diagonal/anti-diagonal basis.
    X,
}

impl AnalysisBasis {
    pub fn rotation_angle(self) -> f64 {
        match self {
            AnalysisBasis::Z => 0.0,
            AnalysisBasis::X => std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Source timing and conditioning context for converting per-window
/// probabilities into rates.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementContext {
    /// Source repetition rate (windows per second), Hz.
    pub repetition_rate_hz: f64,
    /// Background rate per channel-facing detector, counts/s.
    pub background_rate_cps: f64,
    /// For the entangled source: Alice's effective detection efficiency.
    /// Coincidence windows are heralded at `repetition_rate * this`, and
    /// Bob's statistics are conditioned on Alice's click. `None` for
    /// prepare-and-measure sources.
    pub alice_conditioning_efficiency: Option<f64>,
}

/// Per-window detection statistics of one analyzer configuration.
#[derive(Debug, Clone)]
pub struct DetectionStats {
    /// Per-detector click probability per window.
    pub p_click: Vec<f64>,
    /// Joint click probabilities per detector pairing. For two-party states
    /// these are the matched-basis single-single coincidences
    /// `[++, +-, -+, --]`; empty for single-party measurements.
    pub p_coinc: Vec<f64>,
    /// Polarization-correlation contrast in [-1, 1].
    pub visibility: f64,
    /// Quantum bit error ratio, = (1 - visibility) / 2.
    pub qber: f64,
    /// Detection (or coincidence) events per second.
    pub rate: f64,
}

impl DetectionStats {
    pub fn validate(&self) -> Result<(), FockError> {
        for &p in self.p_click.iter().chain(self.p_coinc.iter()) {
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(FockError::InvalidParameter(format!(
                    "probability {p} outside [0,1]"
                )));
            }
        }
        if (self.qber - (1.0 - self.visibility) / 2.0).abs() > 1e-12 {
            return Err(FockError::InvalidParameter(
                "qber/visibility identity violated".into(),
            ));
        }
        Ok(())
    }
}

/// Matched-basis coincidence bookkeeping for one basis setting.
///
/// Probabilities are per window, absolute (not conditioned). Double clicks
/// follow the squashing convention: a random bit, counted as half an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct BasisCoincidences {
    /// Sifted coincidence probability (>=1 click both sides, matched arms).
    pub sifted: f64,
    /// Error-weighted probability within the sifted events.
    pub errors: f64,
    /// Single-single pattern probabilities [++, +-, -+, --].
    pub singles: [f64; 4],
}

/// Accounting for a two-party matched-basis analyzer on modes
/// [A+, A-, B+, B-] of `dist`, with per-detector efficiencies already
/// including any passive-splitting factor.
///
/// `expect_anticorrelated` selects which single-single patterns count as
/// errors (true for the singlet source).
pub fn matched_basis_coincidences(
    dist: &OccupationDistribution,
    modes: [usize; 4],
    eta: [f64; 4],
    noise_click: [f64; 4],
    expect_anticorrelated: bool,
) -> BasisCoincidences {
    let detectors: Vec<BoundDetector> = (0..4)
        .map(|i| BoundDetector::simple(modes[i], eta[i], noise_click[i]))
        .collect();
    let table = subset_silent_table(dist, &detectors);

    // Bits: 0 = A+, 1 = A-, 2 = B+, 3 = B-.
    let patterns: [(usize, f64, bool); 9] = [
        // (click_mask, error_weight, _) single-single patterns first
        (0b0101, if expect_anticorrelated { 1.0 } else { 0.0 }, true), // A+ B+
        (0b1001, if expect_anticorrelated { 0.0 } else { 1.0 }, true), // A+ B-
        (0b0110, if expect_anticorrelated { 0.0 } else { 1.0 }, true), // A- B+
        (0b1010, if expect_anticorrelated { 1.0 } else { 0.0 }, true), // A- B-
        // double clicks on either side: random bit, half an error
        (0b1101, 0.5, false), // A+ with B double
        (0b1110, 0.5, false), // A- with B double
        (0b0111, 0.5, false), // B+ with A double
        (0b1011, 0.5, false), // B- with A double
        (0b1111, 0.5, false), // both double
    ];

    let mut out = BasisCoincidences::default();
    let mut single_idx = 0;
    for &(click, err_w, is_single) in &patterns {
        let silent = 0b1111 & !click;
        let p = pattern_probability(&table, click, silent);
        out.sifted += p;
        out.errors += err_w * p;
        if is_single {
            // order: ++, +-, -+, --
            out.singles[match click {
                0b0101 => 0,
                0b1001 => 1,
                0b0110 => 2,
                _ => 3,
            }] = p;
            single_idx += 1;
        }
    }
    debug_assert_eq!(single_idx, 4);
    out
}

/// Whole-party silence probabilities for rate bookkeeping:
/// returns (P(A clicks), P(B clicks), P(A and B click)) per window.
///
/// `eta_a`/`eta_b` are each party's full per-photon detection efficiency,
/// `noise_*` the per-detector noise click probability with `n_det` detectors
/// per party.
pub fn party_coincidence_probs(
    dist: &OccupationDistribution,
    a_modes: [usize; 2],
    b_modes: [usize; 2],
    eta_a: f64,
    eta_b: f64,
    noise_a: f64,
    noise_b: f64,
    n_det: usize,
) -> (f64, f64, f64) {
    let silent_noise_a = (1.0 - noise_a).powi(n_det as i32);
    let silent_noise_b = (1.0 - noise_b).powi(n_det as i32);
    let a_tot = BoundDetector {
        factors: vec![(a_modes[0], eta_a), (a_modes[1], eta_a)],
        noise_silent: silent_noise_a,
    };
    let b_tot = BoundDetector {
        factors: vec![(b_modes[0], eta_b), (b_modes[1], eta_b)],
        noise_silent: silent_noise_b,
    };
    let table = subset_silent_table(dist, &[a_tot, b_tot]);
    let p_a = 1.0 - table[0b01];
    let p_b = 1.0 - table[0b10];
    let p_ab = 1.0 - table[0b01] - table[0b10] + table[0b11];
    (p_a, p_b, p_ab.max(0.0))
}

/// Passive BB84 polarization analysis of a state through bucket detectors.
///
/// Accepts the four-mode two-party layout [A_H, A_V, B_H, B_V] or the
/// two-mode single-party layout [H, V]. For two-party states the
/// `DetectorModel` describes Bob's (channel-facing) detectors and the
/// context's conditioning efficiency describes Alice's; dark counts apply
/// to both parties, background only to Bob.
pub fn measure_bb84_analyzer(
    state: &MultimodeState,
    detectors: &DetectorModel,
    basis: AnalysisBasis,
    ctx: &MeasurementContext,
) -> Result<DetectionStats, FockError> {
    detectors.validate()?;
    let n = state.layout().n_modes();
    let angle = basis.rotation_angle();
    let dark = detectors.dark_prob();
    let bg_click = (detectors.dark_rate_cps + ctx.background_rate_cps) * detectors.window_s;

    match n {
        2 => {
            let rotated = if angle != 0.0 {
                state.apply_rotation(0, 1, angle)?
            } else {
                state.clone()
            };
            let dist = OccupationDistribution::from_density(&rotated);
            let eta = detectors.efficiency;
            // Matched-arm detectors at eta/2 (passive splitting), other arm
            // traced; expected bit is "+" (the prepared polarization).
            let half = eta / 2.0;
            let dets = [
                BoundDetector::simple(0, half, bg_click),
                BoundDetector::simple(1, half, bg_click),
            ];
            let table = subset_silent_table(&dist, &dets);
            let p_plus = pattern_probability(&table, 0b01, 0b10);
            let p_minus = pattern_probability(&table, 0b10, 0b01);
            let p_double = pattern_probability(&table, 0b11, 0b00);

            // Any-click gain over all four detectors.
            let any = BoundDetector {
                factors: vec![(0, eta), (1, eta)],
                noise_silent: (1.0 - bg_click).powi(detectors.n_detectors as i32),
            };
            let gain = 1.0 - subset_silent_table(&dist, &[any])[0b1];

            let sifted = p_plus + p_minus + p_double;
            let errors = p_minus + 0.5 * p_double;
            let qber = if sifted > 0.0 { errors / sifted } else { 0.0 };
            let visibility = 1.0 - 2.0 * qber;
            let stats = DetectionStats {
                p_click: vec![
                    1.0 - subset_silent_table(&dist, &dets[..1].to_vec())[1],
                    1.0 - subset_silent_table(&dist, &dets[1..].to_vec())[1],
                ],
                p_coinc: vec![],
                visibility,
                qber,
                rate: ctx.repetition_rate_hz * gain,
            };
            stats.validate()?;
            Ok(stats)
        }
        4 => {
            let alice_eff = ctx.alice_conditioning_efficiency.unwrap_or(1.0);
            let rotated = if angle != 0.0 {
                state.apply_rotation(0, 1, angle)?.apply_rotation(2, 3, angle)?
            } else {
                state.clone()
            };
            let dist = OccupationDistribution::from_density(&rotated);

            let coins = matched_basis_coincidences(
                &dist,
                [0, 1, 2, 3],
                [
                    alice_eff / 2.0,
                    alice_eff / 2.0,
                    detectors.efficiency / 2.0,
                    detectors.efficiency / 2.0,
                ],
                [dark, dark, bg_click, bg_click],
                true,
            );
            let (p_a, _p_b, p_ab) = party_coincidence_probs(
                &dist,
                [0, 1],
                [2, 3],
                alice_eff,
                detectors.efficiency,
                dark,
                bg_click,
                detectors.n_detectors,
            );

            let qber = if coins.sifted > 0.0 {
                coins.errors / coins.sifted
            } else {
                0.0
            };
            let visibility = 1.0 - 2.0 * qber;
            let conditional = if p_a > 0.0 { p_ab / p_a } else { 0.0 };
            let rate = match ctx.alice_conditioning_efficiency {
                Some(eff) => ctx.repetition_rate_hz * eff * conditional,
                None => ctx.repetition_rate_hz * p_ab,
            };

            let single_dets: Vec<BoundDetector> = [(0, alice_eff), (1, alice_eff)]
                .iter()
                .map(|&(m, e)| BoundDetector::simple(m, e / 2.0, dark))
                .chain(
                    [(2usize, detectors.efficiency), (3, detectors.efficiency)]
                        .iter()
                        .map(|&(m, e)| BoundDetector::simple(m, e / 2.0, bg_click)),
                )
                .collect();
            let p_click = single_dets
                .iter()
                .map(|d| 1.0 - subset_silent_table(&dist, std::slice::from_ref(d))[1])
                .collect();

            let stats = DetectionStats {
                p_click,
                p_coinc: coins.singles.to_vec(),
                visibility,
                qber,
                rate,
            };
            stats.validate()?;
            Ok(stats)
        }
        _ => Err(FockError::InvalidLayout(format!(
            "BB84 analyzer expects 2 or 4 modes, got {n}"
        ))),
    }
}

/// Rotate a pure state's analyzer frames and return the compressed
/// occupation distribution (used by the link evaluators).
pub(crate) fn rotated_distribution(
    source: &PureState,
    rotations: &[(usize, usize, f64)],
) -> OccupationDistribution {
    let mut state = source.clone();
    for &(h, v, theta) in rotations {
        if theta != 0.0 {
            state.rotate(h, v, theta);
        }
    }
    OccupationDistribution::from_pure(&state)
}

#[allow(unused)]
fn unused_complex_marker(_: &Array2<Complex64>) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::state::{make_entangled_pair, make_vacuum};
    use crate::fockspace::ModeLayout;

    fn detector(eff: f64, dark: f64, window: f64) -> DetectorModel {
        DetectorModel {
            efficiency: eff,
            dark_rate_cps: dark,
            window_s: window,
            n_detectors: 4,
        }
    }

    #[test]
    fn subset_table_single_photon() {
        // P(no click with eta=1) = P(n_0 = 0), the squeezer vacuum weight.
        let layout = ModeLayout::single_party(6);
        let mut state = PureState::vacuum(&layout).unwrap();
        state.squeeze(0, 1, 0.3); // pairs in both modes
        let dist = OccupationDistribution::from_pure(&state);
        let det = BoundDetector::simple(0, 1.0, 0.0);
        let table = subset_silent_table(&dist, &[det]);
        let want = 1.0 / 0.3f64.cosh().powi(2);
        assert!((table[1] - want).abs() < 1e-6, "{} vs {want}", table[1]);
    }

    #[test]
    fn pattern_probability_inclusion_exclusion() {
        // Two independent noise-only detectors, p = 0.2 each.
        let layout = ModeLayout::single_party(1);
        let state = PureState::vacuum(&layout).unwrap();
        let dist = OccupationDistribution::from_pure(&state);
        let dets = [
            BoundDetector::simple(0, 0.0, 0.2),
            BoundDetector::simple(1, 0.0, 0.2),
        ];
        let table = subset_silent_table(&dist, &dets);
        let both = pattern_probability(&table, 0b11, 0b00);
        let only_first = pattern_probability(&table, 0b01, 0b10);
        assert!((both - 0.04).abs() < 1e-12);
        assert!((only_first - 0.16).abs() < 1e-12);
    }

    #[test]
    fn vacuum_with_zero_darks_never_clicks() {
        let layout = ModeLayout::two_party(2);
        let vac = make_vacuum(&layout).unwrap();
        let stats = measure_bb84_analyzer(
            &vac,
            &detector(0.6, 0.0, 1e-9),
            AnalysisBasis::Z,
            &MeasurementContext {
                repetition_rate_hz: 1e8,
                background_rate_cps: 0.0,
                alice_conditioning_efficiency: Some(0.25),
            },
        )
        .unwrap();
        assert!(stats.p_click.iter().all(|&p| p == 0.0));
        assert_eq!(stats.rate, 0.0);
    }

    #[test]
    fn entangled_high_loss_coincidence_asymptote() {
        // eta_link -> 0: rate -> BG * 4 * (window/period) * alice_eff.
        let state = make_entangled_pair(0.22, 0.1, 3).unwrap();
        // Remove Bob's photons entirely.
        let lossy = state.apply_loss(2, 0.0).unwrap().apply_loss(3, 0.0).unwrap();
        let bg = 1000.0;
        let window = 1.0e-9;
        let period = 10.0e-9;
        let stats = measure_bb84_analyzer(
            &lossy,
            &detector(0.5, 0.0, window),
            AnalysisBasis::Z,
            &MeasurementContext {
                repetition_rate_hz: 1.0 / period,
                background_rate_cps: bg,
                alice_conditioning_efficiency: Some(0.25),
            },
        )
        .unwrap();
        let want = bg * 4.0 * (window / period) * 0.25;
        assert!(
            (stats.rate - want).abs() / want < 0.05,
            "rate {} vs asymptote {}",
            stats.rate,
            want
        );
        // Background-dominated coincidences are random: QBER -> 0.5.
        assert!((stats.qber - 0.5).abs() < 0.02);
    }

    #[test]
    fn wcp_high_loss_rate_asymptote() {
        // WCP at full loss: rate -> BG * 4 * (window/period).
        let layout = ModeLayout::single_party(6);
        let vac = make_vacuum(&layout).unwrap();
        let bg = 2000.0;
        let window = 1.0e-9;
        let period = 3.3e-9;
        let stats = measure_bb84_analyzer(
            &vac,
            &detector(0.5, 0.0, window),
            AnalysisBasis::Z,
            &MeasurementContext {
                repetition_rate_hz: 1.0 / period,
                background_rate_cps: bg,
                alice_conditioning_efficiency: None,
            },
        )
        .unwrap();
        let want = bg * 4.0 * (window / period);
        assert!(
            (stats.rate - want).abs() / want < 0.05,
            "rate {} vs {}",
            stats.rate,
            want
        );
    }

    #[test]
    fn entangled_ideal_visibility_matches_misalignment() {
        // Low pumping, no loss, no noise: V = cos(2 theta).
        let theta = crate::fockspace::misalignment_angle_for_visibility(0.98);
        let state = make_entangled_pair(0.02, theta, 3).unwrap();
        let stats = measure_bb84_analyzer(
            &state,
            &detector(1.0, 0.0, 1e-9),
            AnalysisBasis::Z,
            &MeasurementContext {
                repetition_rate_hz: 1e8,
                background_rate_cps: 0.0,
                alice_conditioning_efficiency: Some(1.0),
            },
        )
        .unwrap();
        assert!(
            (stats.visibility - 0.98).abs() < 2e-3,
            "visibility {}",
            stats.visibility
        );
        // X basis sees the same contrast for the singlet.
        let stats_x = measure_bb84_analyzer(
            &state,
            &detector(1.0, 0.0, 1e-9),
            AnalysisBasis::X,
            &MeasurementContext {
                repetition_rate_hz: 1e8,
                background_rate_cps: 0.0,
                alice_conditioning_efficiency: Some(1.0),
            },
        )
        .unwrap();
        assert!((stats_x.visibility - 0.98).abs() < 2e-3);
    }

    #[test]
    fn full_misalignment_scrambles_basis() {
        // 45 degrees of misalignment destroys correlations in the aligned basis.
        let state = make_entangled_pair(0.22, std::f64::consts::FRAC_PI_4, 3).unwrap();
        let stats = measure_bb84_analyzer(
            &state,
            &detector(1.0, 0.0, 1e-9),
            AnalysisBasis::Z,
            &MeasurementContext {
                repetition_rate_hz: 1e8,
                background_rate_cps: 0.0,
                alice_conditioning_efficiency: Some(1.0),
            },
        )
        .unwrap();
        assert!(stats.visibility.abs() < 0.02, "visibility {}", stats.visibility);
    }

    #[test]
    fn coincidence_bounded_by_singles() {
        let state = make_entangled_pair(0.22, 0.1, 3).unwrap();
        let stats = measure_bb84_analyzer(
            &state,
            &detector(0.4, 100.0, 1e-9),
            AnalysisBasis::Z,
            &MeasurementContext {
                repetition_rate_hz: 1e8,
                background_rate_cps: 500.0,
                alice_conditioning_efficiency: Some(0.25),
            },
        )
        .unwrap();
        // p_coinc[0] is A+B+ single-single; must not exceed either single.
        assert!(stats.p_coinc[0] <= stats.p_click[0] + 1e-12);
        assert!(stats.p_coinc[0] <= stats.p_click[2] + 1e-12);
        stats.validate().unwrap();
    }
}
