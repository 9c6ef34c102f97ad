//! Per-pass integration, sweeps, and monthly aggregation.
//!
//! A scenario resolves into elevation tables (loss and background are
//! functions of elevation alone for a circular orbit) plus precomputed
//! quantum detection grids over (loss, background). Pass evaluation then
//! reduces to cheap interpolation per one-second sample, accumulation over
//! the usable mask, and a protocol-level verdict on the totals. Everything
//! is analytic and seed-free, so identical inputs give bit-identical CSV.

mod config;

pub use config::{
    BackgroundConfig, DetectorConfig, Experiment, ReceiverConfig, ScenarioConfig, SourceConfig,
    TeleportConfig,
};

use thiserror::Error;

use crate::atmosphere::{self, AtmosphereTable, DetectorCurve};
use crate::background::{
    downlink_background, uplink_natural_background, uplink_pollution_background,
    LightPollutionGrid, ReceiverView,
};
use crate::fockspace::{
    ChshEvaluator, DetectorModel, EntangledLinkEvaluator, FockError, LinkWindowStats,
    TeleportationDistribution, WcpLinkEvaluator,
};
use crate::linkbudget::{self, LinkDirection, LinkGeometry, SourceKind};
use crate::orbit::{classify_passes, propagate_passes, PassProfile};
use crate::protocols::{
    bbm92_key_length, chsh_verdict, decoy_bb84_key_length, visibility_sigma, ChshSettingCounts,
    ChshVerdict, DecoyCounts, DecoyIntensities, KeyResult, KeyVerdict, ProtocolError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cannot resolve sweep axis '{0}'")]
    AxisResolution(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("interpolation spot-check failed: {0}")]
    Spotcheck(String),
    #[error(transparent)]
    Link(#[from] linkbudget::LinkError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Table(#[from] atmosphere::TableError),
    #[error(transparent)]
    Background(#[from] crate::background::BackgroundError),
    #[error(transparent)]
    Orbit(#[from] crate::orbit::OrbitError),
}

impl PipelineError {
    /// CLI exit-code class: 2 for validation, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::AxisResolution(_) => 2,
            _ => 3,
        }
    }
}

/// Loaded data tables shared by every scenario.
#[derive(Clone)]
pub struct DataTables {
    pub atmosphere: AtmosphereTable,
    pub thin_apd: DetectorCurve,
    pub thick_apd: DetectorCurve,
    pub pollution: LightPollutionGrid,
}

impl DataTables {
    /// The bundled representative tables.
    pub fn bundled() -> Self {
        Self {
            atmosphere: atmosphere::bundled_atmosphere(),
            thin_apd: atmosphere::bundled_thin_apd(),
            thick_apd: atmosphere::bundled_thick_apd(),
            pollution: crate::background::bundled_pollution_grid(),
        }
    }

    /// Load tables from a directory, falling back to bundled data for any
    /// missing file.
    pub fn from_dir(dir: &std::path::Path) -> Result<Self, PipelineError> {
        let mut tables = Self::bundled();
        let atm = dir.join("atmosphere_rural_sea_level.csv");
        if atm.exists() {
            tables.atmosphere = AtmosphereTable::load(&atm)?;
        }
        let pollution = dir.join("light_pollution_sample.csv");
        if pollution.exists() {
            let text = std::fs::read_to_string(&pollution)
                .map_err(|e| PipelineError::Data(e.to_string()))?;
            tables.pollution = LightPollutionGrid::parse(&text)?;
        }
        let thin = dir.join("detector_thin_apd.csv");
        if thin.exists() {
            let text =
                std::fs::read_to_string(&thin).map_err(|e| PipelineError::Data(e.to_string()))?;
            tables.thin_apd =
                DetectorCurve::parse(&text, atmosphere::DetectorKind::ThinApd)?;
        }
        let thick = dir.join("detector_thick_apd.csv");
        if thick.exists() {
            let text =
                std::fs::read_to_string(&thick).map_err(|e| PipelineError::Data(e.to_string()))?;
            tables.thick_apd =
                DetectorCurve::parse(&text, atmosphere::DetectorKind::ThickApd)?;
        }
        Ok(tables)
    }
}

/// 1-D table over elevation with linear interpolation.
#[derive(Debug, Clone)]
pub struct ElevationTable {
    elevations_rad: Vec<f64>,
    values: Vec<f64>,
}

impl ElevationTable {
    pub fn at(&self, elevation_rad: f64) -> f64 {
        let n = self.elevations_rad.len();
        let e = elevation_rad.clamp(self.elevations_rad[0], self.elevations_rad[n - 1]);
        let mut i = 0;
        while i + 2 < n && self.elevations_rad[i + 1] < e {
            i += 1;
        }
        let (e0, e1) = (self.elevations_rad[i], self.elevations_rad[i + 1]);
        let f = ((e - e0) / (e1 - e0)).clamp(0.0, 1.0);
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Elevation grid the loss/background tables are sampled on.
fn elevation_grid() -> Vec<f64> {
    (0..=20)
        .map(|i| (10.0 + 4.0 * i as f64).to_radians())
        .collect()
}

/// A scenario resolved against data tables: detector efficiency fixed,
/// loss and background reduced to elevation curves.
pub struct ScenarioContext {
    pub config: ScenarioConfig,
    pub detector_efficiency: f64,
    pub detector: DetectorModel,
    /// Total link loss (includes detector, atmosphere and analyzer), dB.
    pub loss_db: ElevationTable,
    /// Detected background rate per channel-facing detector, counts/s.
    pub bg_per_detector: ElevationTable,
    /// Background arrival rate at the telescope (pre-detection), counts/s.
    pub bg_arrival: ElevationTable,
    pub spotcheck: bool,
}

impl ScenarioContext {
    pub fn new(config: ScenarioConfig, tables: &DataTables) -> Result<Self, PipelineError> {
        config.validate()?;
        let detector_efficiency = match config.detector.efficiency_override {
            Some(e) => e,
            None => atmosphere::detector_efficiency(
                &tables.thin_apd,
                &tables.thick_apd,
                config.wavelength_nm,
            )?,
        };
        let detector = DetectorModel {
            efficiency: detector_efficiency,
            dark_rate_cps: config.detector.dark_rate_cps,
            window_s: config.detector.window_s,
            n_detectors: config.detector.n_detectors,
        };
        detector
            .validate()
            .map_err(|e| PipelineError::Validation(e.to_string()))?;

        let elevations = elevation_grid();
        let mut loss = Vec::with_capacity(elevations.len());
        let mut arrival = Vec::with_capacity(elevations.len());
        let mut detected = Vec::with_capacity(elevations.len());
        let view = ReceiverView {
            fov_rad: config.receiver.fov_rad,
            telescope_radius_m: config.rx_diameter_m / 2.0,
            filter_bandwidth_nm: config.receiver.filter_bandwidth_nm,
            window_s: config.detector.window_s,
        };
        // Background photons share the detector efficiency and analyzer
        // insertion loss, split across the four detectors.
        let analyzer = 10f64.powf(-linkbudget::ANALYZER_LOSS_DB / 10.0);
        let bg_derate = detector_efficiency * analyzer / detector.n_detectors as f64;

        for &elev in &elevations {
            let geometry =
                LinkGeometry::from_elevation(config.orbit.altitude_m, elev, config.direction);
            loss.push(total_loss_for(&config, tables, &geometry, detector_efficiency)?);
            let arr = background_arrival_for(&config, tables, &geometry, &view)?;
            arrival.push(arr);
            detected.push(arr * bg_derate);
        }
        Ok(Self {
            config,
            detector_efficiency,
            detector,
            loss_db: ElevationTable {
                elevations_rad: elevations.clone(),
                values: loss,
            },
            bg_per_detector: ElevationTable {
                elevations_rad: elevations.clone(),
                values: detected,
            },
            bg_arrival: ElevationTable {
                elevations_rad: elevations,
                values: arrival,
            },
            spotcheck: false,
        })
    }
}

/// Total loss at one geometry (adaptive internal radial grid).
fn total_loss_for(
    config: &ScenarioConfig,
    tables: &DataTables,
    geometry: &LinkGeometry,
    detector_efficiency: f64,
) -> Result<f64, PipelineError> {
    let tx = config.tx_spec();
    let rx = config.rx_spec();
    let lambda = config.wavelength_nm * 1e-9;
    // Estimate the final beam scale to size the radial grid.
    let w0 = tx.beam_fwhm_m / (2.0 * std::f64::consts::LN_2).sqrt();
    let sigma_diff = lambda * geometry.distance_m / (std::f64::consts::PI * w0) / 2.0;
    let sigma_point = linkbudget::pointing_sigma_m(config.pointing_rms_rad, geometry.distance_m);
    let sigma_turb = if config.direction == LinkDirection::Uplink {
        linkbudget::turbulence_sigma(geometry, config.wavelength_nm, &config.turbulence)?
    } else {
        0.0
    };
    let sigma_est =
        (sigma_diff * sigma_diff + sigma_point * sigma_point + sigma_turb * sigma_turb).sqrt();
    let span = (10.0 * sigma_est).max(8.0 * config.rx_diameter_m).max(10.0);
    let n_radii = 1200;

    let geo_db = linkbudget::geometric_loss_db(
        &tx,
        &rx,
        geometry,
        config.wavelength_nm,
        config.pointing_rms_rad,
        &config.turbulence,
        n_radii,
        span,
    )?;
    let eta_t = tables
        .atmosphere
        .transmittance(config.wavelength_nm, geometry.elevation_rad)?;
    let mut loss = geo_db - 10.0 * (eta_t * detector_efficiency).log10()
        + linkbudget::ANALYZER_LOSS_DB;
    if config.source.kind == SourceKind::Wcp {
        // A WCP source recovers aperture clipping as attenuation.
        loss -= linkbudget::wcp_clipping_rebate_db(&tx);
    }
    Ok(loss)
}

/// Background arrival rate at the receiving telescope, counts/s.
fn background_arrival_for(
    config: &ScenarioConfig,
    tables: &DataTables,
    geometry: &LinkGeometry,
    view: &ReceiverView,
) -> Result<f64, PipelineError> {
    match config.direction {
        LinkDirection::Downlink => Ok(downlink_background(
            &config.background.sky,
            view,
            config.wavelength_nm,
        )?),
        LinkDirection::Uplink => {
            let extinction_up = tables
                .atmosphere
                .transmittance(config.wavelength_nm, geometry.elevation_rad)?;
            let extinction_moon = tables
                .atmosphere
                .transmittance(config.wavelength_nm, config.background.moon.elevation_rad)?;
            let natural = uplink_natural_background(
                geometry,
                view,
                config.wavelength_nm,
                &config.background.moon,
                config.background.earth_albedo,
                extinction_moon,
                extinction_up,
            )?;
            let pollution = uplink_pollution_background(
                &tables.pollution,
                config.site.lat_deg,
                config.site.lon_deg,
                geometry,
                view,
                config.wavelength_nm,
                extinction_up,
            )?;
            Ok(crate::background::total_background(&[natural, pollution]))
        }
    }
}

/// Field-wise linear interpolation for grid cells.
trait Lerp: Clone {
    fn lerp(a: &Self, b: &Self, f: f64) -> Self;
}

impl Lerp for LinkWindowStats {
    fn lerp(a: &Self, b: &Self, f: f64) -> Self {
        let l = |x: f64, y: f64| x + (y - x) * f;
        Self {
            rate: l(a.rate, b.rate),
            sifted_rate: l(a.sifted_rate, b.sifted_rate),
            qber: l(a.qber, b.qber),
            visibility: l(a.visibility, b.visibility),
            gain: l(a.gain, b.gain),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BellCell {
    correlator: [f64; 4],
    rate: [f64; 4],
}

impl Lerp for BellCell {
    fn lerp(a: &Self, b: &Self, f: f64) -> Self {
        let mut out = Self::default();
        for i in 0..4 {
            out.correlator[i] = a.correlator[i] + (b.correlator[i] - a.correlator[i]) * f;
            out.rate[i] = a.rate[i] + (b.rate[i] - a.rate[i]) * f;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TeleportCell {
    /// Per-window probabilities of conditioned parallel/perpendicular
    /// detections.
    n_expected: f64,
    n_unexpected: f64,
}

impl Lerp for TeleportCell {
    fn lerp(a: &Self, b: &Self, f: f64) -> Self {
        Self {
            n_expected: a.n_expected + (b.n_expected - a.n_expected) * f,
            n_unexpected: a.n_unexpected + (b.n_unexpected - a.n_unexpected) * f,
        }
    }
}

/// Rectangular (loss dB x background) grid with bilinear interpolation.
struct Grid2<T> {
    loss_db: Vec<f64>,
    bg: Vec<f64>,
    values: Vec<T>,
}

impl<T: Lerp + Default> Grid2<T> {
    fn build(
        loss_db: Vec<f64>,
        bg: Vec<f64>,
        mut f: impl FnMut(f64, f64) -> Result<T, PipelineError>,
    ) -> Result<Self, PipelineError> {
        let mut values = Vec::with_capacity(loss_db.len() * bg.len());
        for &l in &loss_db {
            for &b in &bg {
                values.push(f(l, b)?);
            }
        }
        Ok(Self {
            loss_db,
            bg,
            values,
        })
    }

    fn at(&self, loss: f64, bg: f64) -> T {
        let (i, fx) = locate(&self.loss_db, loss);
        let (j, fy) = locate(&self.bg, bg);
        let nb = self.bg.len();
        let v00 = &self.values[i * nb + j];
        if self.loss_db.len() == 1 && nb == 1 {
            return v00.clone();
        }
        let i1 = (i + 1).min(self.loss_db.len() - 1);
        let j1 = (j + 1).min(nb - 1);
        let v10 = &self.values[i1 * nb + j];
        let v01 = &self.values[i * nb + j1];
        let v11 = &self.values[i1 * nb + j1];
        let a = T::lerp(v00, v10, fx);
        let b = T::lerp(v01, v11, fx);
        T::lerp(&a, &b, fy)
    }
}

fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    if n == 1 {
        return (0, 0.0);
    }
    let x = x.clamp(grid[0], grid[n - 1]);
    let mut i = 0;
    while i + 2 < n && grid[i + 1] < x {
        i += 1;
    }
    let f = ((x - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
    (i, f)
}

/// Default grid resolutions (loss step in dB, background steps).
const LOSS_STEP_DB: f64 = 0.5;
const BG_STEPS: usize = 10;
const TELEPORT_LOSS_STEP_DB: f64 = 2.0;

fn loss_axis(ctx: &ScenarioContext, step: f64) -> Vec<f64> {
    let lo = (ctx.loss_db.min() - 1.0).floor();
    let hi = (ctx.loss_db.max() + 1.0).ceil();
    let n = ((hi - lo) / step).ceil() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

fn bg_axis(ctx: &ScenarioContext) -> Vec<f64> {
    let lo = ctx.bg_per_detector.min().max(1e-3);
    let hi = ctx.bg_per_detector.max().max(lo * (1.0 + 1e-9));
    if (hi - lo) / hi < 1e-6 {
        return vec![lo];
    }
    (0..BG_STEPS)
        .map(|i| lo * (hi / lo).powf(i as f64 / (BG_STEPS - 1) as f64))
        .collect()
}

/// Precomputed quantum machinery for one scenario.
pub struct PassMachinery {
    inner: MachineryInner,
}

enum MachineryInner {
    EntangledQkd {
        grid: Grid2<LinkWindowStats>,
        evaluator: EntangledLinkEvaluator,
    },
    WcpQkd {
        grid_mu: Grid2<LinkWindowStats>,
        grid_nu: Grid2<LinkWindowStats>,
        evaluator_mu: WcpLinkEvaluator,
        evaluator_nu: WcpLinkEvaluator,
    },
    Bell {
        grid: Grid2<BellCell>,
        evaluator: ChshEvaluator,
    },
    Teleport {
        grid: Grid2<TeleportCell>,
    },
}

impl PassMachinery {
    pub fn build(ctx: &ScenarioContext) -> Result<Self, PipelineError> {
        Ok(Self {
            inner: MachineryInner::build(ctx)?,
        })
    }
}

impl MachineryInner {
    fn build(ctx: &ScenarioContext) -> Result<Self, PipelineError> {
        let cfg = &ctx.config;
        let misalignment =
            crate::fockspace::misalignment_angle_for_visibility(cfg.source.target_visibility);
        let det = ctx.detector;
        match cfg.experiment {
            Experiment::Qkd => match cfg.source.kind {
                SourceKind::Entangled => {
                    let evaluator = EntangledLinkEvaluator::new(
                        cfg.source.epsilon,
                        misalignment,
                        cfg.source.cutoff,
                        cfg.source.alice_efficiency,
                        cfg.source.rate_hz,
                    )?;
                    let grid = Grid2::build(loss_axis(ctx, LOSS_STEP_DB), bg_axis(ctx), |l, b| {
                        Ok(evaluator.window_stats(db_to_eta(l), b, &det))
                    })?;
                    Ok(Self::EntangledQkd { grid, evaluator })
                }
                SourceKind::Wcp => {
                    let evaluator_mu = WcpLinkEvaluator::new(
                        cfg.source.mu,
                        misalignment,
                        cfg.source.cutoff,
                        cfg.source.rate_hz,
                    )?;
                    let evaluator_nu = WcpLinkEvaluator::new(
                        cfg.source.nu,
                        misalignment,
                        cfg.source.cutoff,
                        cfg.source.rate_hz,
                    )?;
                    let grid_mu =
                        Grid2::build(loss_axis(ctx, LOSS_STEP_DB), bg_axis(ctx), |l, b| {
                            Ok(evaluator_mu.window_stats(db_to_eta(l), b, &det))
                        })?;
                    let grid_nu =
                        Grid2::build(loss_axis(ctx, LOSS_STEP_DB), bg_axis(ctx), |l, b| {
                            Ok(evaluator_nu.window_stats(db_to_eta(l), b, &det))
                        })?;
                    Ok(Self::WcpQkd {
                        grid_mu,
                        grid_nu,
                        evaluator_mu,
                        evaluator_nu,
                    })
                }
            },
            Experiment::Bell => {
                let evaluator = ChshEvaluator::new(
                    cfg.source.epsilon,
                    misalignment,
                    cfg.source.cutoff,
                    cfg.source.alice_efficiency,
                    cfg.source.rate_hz,
                )?;
                let grid = Grid2::build(loss_axis(ctx, LOSS_STEP_DB), bg_axis(ctx), |l, b| {
                    let stats = evaluator.setting_stats(db_to_eta(l), b, &det);
                    let mut cell = BellCell::default();
                    for k in 0..4 {
                        cell.correlator[k] = stats[k].correlator;
                        cell.rate[k] = stats[k].rate;
                    }
                    Ok(cell)
                })?;
                Ok(Self::Bell { grid, evaluator })
            }
            Experiment::Teleport => {
                let (epsilon, alpha) = cfg.teleport_strengths();
                let grid =
                    build_teleport_grid(ctx, epsilon, alpha, misalignment, &det)?;
                Ok(Self::Teleport { grid })
            }
        }
    }
}

fn db_to_eta(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Build the teleportation (loss x background) grid. The circuit state
/// depends on loss alone, so per loss point the distribution is built once
/// (deepening the Fock cutoff until the mandatory convergence sweep accepts
/// a sub-1e-3 visibility shift at the background extremes) and the noise
/// accounting fans out over the background axis.
fn build_teleport_grid(
    ctx: &ScenarioContext,
    epsilon: f64,
    alpha: f64,
    misalignment: f64,
    det: &DetectorModel,
) -> Result<Grid2<TeleportCell>, PipelineError> {
    let cfg = &ctx.config;
    let loss_db = loss_axis(ctx, TELEPORT_LOSS_STEP_DB);
    let bg = bg_axis(ctx);
    let local_eff = cfg.source.alice_efficiency;
    let local_dark = 20.0;
    let bg_probe = [bg[0], bg[bg.len() - 1]];

    let mut values = Vec::with_capacity(loss_db.len() * bg.len());
    for &l in &loss_db {
        let mut cutoff = cfg.teleport.cutoff;
        let accepted = loop {
            let base =
                TeleportationDistribution::build(epsilon, alpha, misalignment, l, cutoff)?;
            let refined =
                TeleportationDistribution::build(epsilon, alpha, misalignment, l, cutoff + 1)?;
            let shift = bg_probe
                .iter()
                .map(|&b| {
                    let va = base.account(det, local_eff, local_dark, b).visibility;
                    let vb = refined.account(det, local_eff, local_dark, b).visibility;
                    (va - vb).abs()
                })
                .fold(0.0f64, f64::max);
            if shift <= 1e-3 {
                break refined;
            }
            if cutoff >= 7 {
                return Err(FockError::CutoffNotConverged {
                    shift,
                    from: cutoff,
                    to: cutoff + 1,
                }
                .into());
            }
            cutoff += 1;
        };
        for &b in &bg {
            let outcome = accepted.account(det, local_eff, local_dark, b);
            values.push(TeleportCell {
                n_expected: outcome.n_expected,
                n_unexpected: outcome.n_unexpected,
            });
        }
    }
    Ok(Grid2 {
        loss_db,
        bg,
        values,
    })
}

/// Outcome of one pass under the configured experiment.
#[derive(Debug, Clone)]
pub enum PassOutcome {
    Key(KeyResult),
    Bell {
        verdict: Option<ChshVerdict>,
        min_distance_m: f64,
    },
    Teleport {
        visibility: f64,
        sigma: f64,
        pass: bool,
        events: f64,
        min_distance_m: f64,
    },
}

impl PassOutcome {
    pub fn secure_bits(&self) -> u64 {
        match self {
            PassOutcome::Key(k) => k.secure_bits,
            _ => 0,
        }
    }

    pub fn succeeded(&self) -> bool {
        match self {
            PassOutcome::Key(k) => k.secure_bits > 0,
            PassOutcome::Bell { verdict, .. } => verdict.map(|v| v.pass).unwrap_or(false),
            PassOutcome::Teleport { pass, .. } => *pass,
        }
    }
}

/// Integrate one pass: loss + background per sample feed the detection
/// grids; raw counts and errors accumulate over the usable mask; the
/// protocol verdict runs on the totals.
pub fn evaluate_pass(
    ctx: &ScenarioContext,
    machinery: &PassMachinery,
    pass: &PassProfile,
) -> Result<PassOutcome, PipelineError> {
    let dt = 1.0;
    let min_distance = pass.min_distance_m();

    match &machinery.inner {
        MachineryInner::EntangledQkd { grid, evaluator } => {
            // Per-sample window statistics, kept for QBER-ordered windowing:
            // noise-swamped low-elevation segments would otherwise poison
            // the whole-pass key, so the accumulation window is chosen to
            // maximize the finite-size key (the operator discards segments
            // whose announced error rate only destroys key).
            let mut samples: Vec<(f64, f64, f64, f64)> = Vec::new();
            for (i, (s, &usable)) in pass.samples.iter().zip(&pass.usable).enumerate() {
                if !usable {
                    continue;
                }
                let loss = ctx.loss_db.at(s.elevation_rad);
                let bg = ctx.bg_per_detector.at(s.elevation_rad);
                let w = grid.at(loss, bg);
                samples.push((w.qber, w.rate * dt, w.sifted_rate * dt, w.sifted_rate * w.qber * dt));
                if ctx.spotcheck && i % 97 == 0 {
                    let exact = evaluator.window_stats(db_to_eta(loss), bg, &ctx.detector);
                    check_spot(w.rate, exact.rate, "entangled rate")?;
                }
            }
            if samples.is_empty() {
                return Ok(PassOutcome::Key(KeyResult {
                    secure_bits: 0,
                    raw_bits: 0,
                    mean_qber: 0.5,
                    verdict: KeyVerdict::NoRawBits,
                    xi_formula: "",
                }));
            }
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut best: Option<KeyResult> = None;
            let n = samples.len();
            let step = (n / 24).max(1);
            let mut n_coinc = 0.0;
            let mut sifted = 0.0;
            let mut errors = 0.0;
            for (i, s) in samples.iter().enumerate() {
                n_coinc += s.1;
                sifted += s.2;
                errors += s.3;
                let last = i + 1 == n;
                if !last && (i + 1) % step != 0 {
                    continue;
                }
                if sifted <= 0.0 {
                    continue;
                }
                let qber = (errors / sifted).clamp(0.0, 0.5);
                let key =
                    bbm92_key_length(n_coinc.round() as u64, qber, &ctx.config.security)?;
                let better = match &best {
                    None => true,
                    Some(b) => {
                        key.secure_bits > b.secure_bits
                            || (key.secure_bits == b.secure_bits && last)
                    }
                };
                if better {
                    best = Some(key);
                }
            }
            Ok(PassOutcome::Key(best.expect("at least one prefix evaluated")))
        }
        MachineryInner::WcpQkd {
            grid_mu,
            grid_nu,
            evaluator_mu,
            evaluator_nu,
        } => {
            let rate = ctx.config.source.rate_hz;
            // (local signal qber, pulses, n_mu, err_mu, n_nu, err_nu)
            let mut samples: Vec<[f64; 6]> = Vec::new();
            // the first slot stays for symmetry with the entangled path
            for (i, (s, &usable)) in pass.samples.iter().zip(&pass.usable).enumerate() {
                if !usable {
                    continue;
                }
                let loss = ctx.loss_db.at(s.elevation_rad);
                let bg = ctx.bg_per_detector.at(s.elevation_rad);
                let wm = grid_mu.at(loss, bg);
                let wn = grid_nu.at(loss, bg);
                // Even signal/decoy split of the pulse train.
                let p_half = rate * dt / 2.0;
                samples.push([
                    wm.qber,
                    rate * dt,
                    wm.gain * p_half,
                    wm.gain * wm.qber * p_half,
                    wn.gain * p_half,
                    wn.gain * wn.qber * p_half,
                ]);
                if ctx.spotcheck && i % 97 == 0 {
                    let exact = evaluator_mu.window_stats(db_to_eta(loss), bg, &ctx.detector);
                    check_spot(wm.gain, exact.gain, "wcp signal gain")?;
                    let exact_nu = evaluator_nu.window_stats(db_to_eta(loss), bg, &ctx.detector);
                    check_spot(wn.gain, exact_nu.gain, "wcp decoy gain")?;
                }
            }
            if samples.is_empty() {
                return Ok(PassOutcome::Key(KeyResult {
                    secure_bits: 0,
                    raw_bits: 0,
                    mean_qber: 0.5,
                    verdict: KeyVerdict::NoRawBits,
                    xi_formula: "",
                }));
            }
            // The one-decoy finite-size analysis is a session-level recipe
            // (worst-case shifts on the session's gains and error rates),
            // so the whole usable mask forms one session.
            let mut acc = [0.0f64; 5]; // pulses, n_mu, err_mu, n_nu, err_nu
            for s in &samples {
                for (a, v) in acc.iter_mut().zip(&s[1..]) {
                    *a += v;
                }
            }
            if acc[1] < 1.0 {
                return Ok(PassOutcome::Key(KeyResult {
                    secure_bits: 0,
                    raw_bits: 0,
                    mean_qber: 0.5,
                    verdict: KeyVerdict::NoRawBits,
                    xi_formula: "",
                }));
            }
            let intensities = DecoyIntensities {
                mu: ctx.config.source.mu,
                nu: ctx.config.source.nu,
            };
            let counts = DecoyCounts {
                n_mu: acc[1],
                n_nu: acc[3],
                e_mu: (acc[2] / acc[1]).clamp(0.0, 0.5),
                e_nu: if acc[3] > 0.0 {
                    (acc[4] / acc[3]).clamp(0.0, 0.5)
                } else {
                    0.5
                },
            };
            Ok(PassOutcome::Key(decoy_bb84_key_length(
                &counts,
                &intensities,
                acc[0],
                &ctx.config.security,
            )?))
        }
        MachineryInner::Bell { grid, evaluator } => {
            // The pass time is divided evenly among the four settings.
            let mut counts = [0.0f64; 4];
            let mut corr_weighted = [0.0f64; 4];
            for (i, (s, &usable)) in pass.samples.iter().zip(&pass.usable).enumerate() {
                if !usable {
                    continue;
                }
                let loss = ctx.loss_db.at(s.elevation_rad);
                let bg = ctx.bg_per_detector.at(s.elevation_rad);
                let cell = grid.at(loss, bg);
                for k in 0..4 {
                    let n = cell.rate[k] * dt / 4.0;
                    counts[k] += n;
                    corr_weighted[k] += cell.correlator[k] * n;
                }
                if ctx.spotcheck && i % 97 == 0 {
                    let exact = evaluator.setting_stats(db_to_eta(loss), bg, &ctx.detector);
                    check_spot(cell.rate[0], exact[0].rate, "bell setting rate")?;
                }
            }
            if counts.iter().any(|&c| c <= 0.0) {
                return Ok(PassOutcome::Bell {
                    verdict: None,
                    min_distance_m: min_distance,
                });
            }
            let settings: [ChshSettingCounts; 4] = std::array::from_fn(|k| {
                ChshSettingCounts::from_correlator(corr_weighted[k] / counts[k], counts[k])
            });
            Ok(PassOutcome::Bell {
                verdict: Some(chsh_verdict(&settings)?),
                min_distance_m: min_distance,
            })
        }
        MachineryInner::Teleport { grid } => {
            let rate = ctx.config.source.rate_hz;
            let mut n_e = 0.0;
            let mut n_u = 0.0;
            for (s, &usable) in pass.samples.iter().zip(&pass.usable) {
                if !usable {
                    continue;
                }
                let loss = ctx.loss_db.at(s.elevation_rad);
                let bg = ctx.bg_per_detector.at(s.elevation_rad);
                let cell = grid.at(loss, bg);
                n_e += cell.n_expected * rate * dt;
                n_u += cell.n_unexpected * rate * dt;
            }
            let events = n_e + n_u;
            if events <= 0.0 {
                return Ok(PassOutcome::Teleport {
                    visibility: 0.0,
                    sigma: f64::INFINITY,
                    pass: false,
                    events,
                    min_distance_m: min_distance,
                });
            }
            let visibility = (n_e - n_u) / events;
            let sigma = visibility_sigma(n_e, n_u);
            Ok(PassOutcome::Teleport {
                visibility,
                sigma,
                pass: crate::protocols::teleportation_verdict(visibility, sigma),
                events,
                min_distance_m: min_distance,
            })
        }
    }
}

fn check_spot(interp: f64, exact: f64, what: &str) -> Result<(), PipelineError> {
    if exact.abs() < 1e-30 {
        return Ok(());
    }
    let rel = (interp - exact).abs() / exact.abs();
    if rel > 0.01 {
        return Err(PipelineError::Spotcheck(format!(
            "{what}: interpolated {interp} vs exact {exact} ({:.2}% off)",
            rel * 100.0
        )));
    }
    Ok(())
}

/// Monthly key accounting: per-pass secure bits summed per calendar month,
/// derated by the clear-sky fraction.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MonthlyKey {
    pub year: i32,
    pub month: u32,
    pub secure_bits: f64,
    pub passes: usize,
}

pub fn monthly_key(
    ctx: &ScenarioContext,
    machinery: &PassMachinery,
    passes: &[PassProfile],
) -> Result<Vec<MonthlyKey>, PipelineError> {
    use chrono::Datelike;
    let mut months: Vec<MonthlyKey> = Vec::new();
    let clear = 1.0 - ctx.config.cloud_fraction;
    for pass in passes {
        let t0 = pass.samples.first().map(|s| s.t_s).unwrap_or(0.0);
        let date = ctx.config.orbit.epoch + chrono::Duration::seconds(t0 as i64);
        let outcome = evaluate_pass(ctx, machinery, pass)?;
        let bits = outcome.secure_bits() as f64 * clear;
        match months
            .iter_mut()
            .find(|m| m.year == date.year() && m.month == date.month())
        {
            Some(m) => {
                m.secure_bits += bits;
                m.passes += 1;
            }
            None => months.push(MonthlyKey {
                year: date.year(),
                month: date.month(),
                secure_bits: bits,
                passes: 1,
            }),
        }
    }
    Ok(months)
}

/// Maximum over successful passes of the per-pass minimum ground-satellite
/// distance (the paper's figure of merit for Bell/teleportation reach).
pub fn max_successful_distance_m(
    ctx: &ScenarioContext,
    machinery: &PassMachinery,
    passes: &[PassProfile],
) -> Result<Option<f64>, PipelineError> {
    let mut best: Option<f64> = None;
    for pass in passes {
        let outcome = evaluate_pass(ctx, machinery, pass)?;
        if outcome.succeeded() {
            let d = match outcome {
                PassOutcome::Bell { min_distance_m, .. } => min_distance_m,
                PassOutcome::Teleport { min_distance_m, .. } => min_distance_m,
                PassOutcome::Key(_) => pass.min_distance_m(),
            };
            best = Some(best.map_or(d, |b: f64| b.max(d)));
        }
    }
    Ok(best)
}

/// Sweep axis/metric specification.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
    pub metric: SweepMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    /// Total link loss at the configured evaluation elevation, dB.
    LossDb,
    /// Secure bits from the upper-quartile pass.
    UpperQuartileKeyBits,
    /// Mean monthly secure bits over the simulated year.
    MonthlyKeyBitsMean,
    /// Maximum Bell-test distance, km.
    BellMaxDistanceKm,
    /// Maximum teleportation distance, km.
    TeleportMaxDistanceKm,
}

impl SweepMetric {
    pub fn parse(s: &str) -> Result<Self, PipelineError> {
        Ok(match s {
            "loss_db" => Self::LossDb,
            "upper_quartile_key_bits" => Self::UpperQuartileKeyBits,
            "monthly_key_bits_mean" => Self::MonthlyKeyBitsMean,
            "bell_max_distance_km" => Self::BellMaxDistanceKm,
            "teleport_max_distance_km" => Self::TeleportMaxDistanceKm,
            _ => {
                return Err(PipelineError::Validation(format!(
                    "unknown sweep metric '{s}'"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LossDb => "loss_db",
            Self::UpperQuartileKeyBits => "upper_quartile_key_bits",
            Self::MonthlyKeyBitsMean => "monthly_key_bits_mean",
            Self::BellMaxDistanceKm => "bell_max_distance_km",
            Self::TeleportMaxDistanceKm => "teleport_max_distance_km",
        }
    }
}

/// Evaluate one metric for a fully-resolved scenario.
pub fn evaluate_metric(
    config: &ScenarioConfig,
    tables: &DataTables,
    metric: SweepMetric,
    passes: &[PassProfile],
) -> Result<f64, PipelineError> {
    match metric {
        SweepMetric::LossDb => {
            let ctx = ScenarioContext::new(config.clone(), tables)?;
            Ok(ctx.loss_db.at(config.eval_elevation_deg.to_radians()))
        }
        SweepMetric::UpperQuartileKeyBits => {
            let ctx = ScenarioContext::new(config.clone(), tables)?;
            let machinery = PassMachinery::build(&ctx)?;
            let class = classify_passes(passes)?;
            let outcome = evaluate_pass(&ctx, &machinery, &class.upper_quartile)?;
            Ok(outcome.secure_bits() as f64)
        }
        SweepMetric::MonthlyKeyBitsMean => {
            let ctx = ScenarioContext::new(config.clone(), tables)?;
            let machinery = PassMachinery::build(&ctx)?;
            let months = monthly_key(&ctx, &machinery, passes)?;
            if months.is_empty() {
                return Ok(0.0);
            }
            Ok(months.iter().map(|m| m.secure_bits).sum::<f64>() / months.len() as f64)
        }
        SweepMetric::BellMaxDistanceKm | SweepMetric::TeleportMaxDistanceKm => {
            let mut cfg = config.clone();
            cfg.experiment = if metric == SweepMetric::BellMaxDistanceKm {
                Experiment::Bell
            } else {
                Experiment::Teleport
            };
            if cfg.experiment == Experiment::Bell || cfg.experiment == Experiment::Teleport {
                cfg.source.kind = SourceKind::Entangled;
                if cfg.source.rate_hz > 1e8 {
                    cfg.source.rate_hz = 1e8;
                }
            }
            let ctx = ScenarioContext::new(cfg, tables)?;
            let machinery = PassMachinery::build(&ctx)?;
            let d = max_successful_distance_m(&ctx, &machinery, passes)?;
            Ok(d.map(|m| m / 1000.0).unwrap_or(0.0))
        }
    }
}

/// Run a sweep: one CSV row per axis value. Pass profiles are rebuilt only
/// when the axis changes the orbit or site.
pub fn sweep(
    base: &ScenarioConfig,
    tables: &DataTables,
    spec: &SweepSpec,
    passes: &[PassProfile],
) -> Result<String, PipelineError> {
    if spec.values.is_empty() {
        return Err(PipelineError::Validation("empty sweep values".into()));
    }
    // Validate the axis up front.
    {
        let mut probe = base.clone();
        probe.set_path(&spec.axis, &format!("{}", spec.values[0]))?;
    }
    let orbit_axis = spec.axis.starts_with("orbit.") || spec.axis.starts_with("site.");
    let mut out = format!("{},{}\n", spec.axis, spec.metric.name());
    for &v in &spec.values {
        let mut cfg = base.clone();
        cfg.set_path(&spec.axis, &format!("{v}"))?;
        cfg.validate()?;
        let rebuilt;
        let pass_slice: &[PassProfile] = if orbit_axis {
            rebuilt = propagate_passes(&cfg.orbit, &cfg.site, 365)?;
            &rebuilt
        } else {
            passes
        };
        let result = evaluate_metric(&cfg, tables, spec.metric, pass_slice)?;
        out.push_str(&format!("{v},{result}\n"));
    }
    Ok(out)
}
