//! Scenario configuration: plain-text dotted-path key-value files, sweep
//! axis resolution, and the resolved-config JSON sidecar.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::background::{MoonState, SkyBrightness};
use crate::linkbudget::{LinkDirection, SourceKind, TelescopeSpec, TurbulenceProfile};
use crate::orbit::{GroundSite, OrbitSpec};
use crate::protocols::SecurityParams;

use super::PipelineError;

/// Which feasibility question a run answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    Qkd,
    Bell,
    Teleport,
}

/// Source configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SourceConfig {
    pub kind: SourceKind,
    /// Repetition rate (300 MHz WCP, 100 MHz entangled by default).
    pub rate_hz: f64,
    /// SPDC squeezing strength (entangled and Bell runs).
    pub epsilon: f64,
    /// WCP signal / decoy mean photon numbers.
    pub mu: f64,
    pub nu: f64,
    /// Alice's effective detection efficiency for heralding.
    pub alice_efficiency: f64,
    /// Lossless low-pumping visibility the misalignment is calibrated to.
    pub target_visibility: f64,
    /// Fock cutoff for the QKD/Bell simulations.
    pub cutoff: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Override of the wavelength-interpolated APD efficiency.
    pub efficiency_override: Option<f64>,
    pub dark_rate_cps: f64,
    pub window_s: f64,
    pub n_detectors: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub fov_rad: f64,
    pub filter_bandwidth_nm: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BackgroundConfig {
    pub sky: SkyBrightness,
    pub moon: MoonState,
    pub earth_albedo: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TeleportConfig {
    /// SPDC/WCP strengths; `None` selects the per-direction defaults
    /// (0.41/0.07 downlink, 0.55/0.14 uplink).
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub cutoff: usize,
}

/// Full scenario description; everything the pipeline needs to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    pub direction: LinkDirection,
    pub wavelength_nm: f64,
    pub tx_diameter_m: f64,
    pub tx_obstruction_ratio: f64,
    /// Transmit FWHM; `None` derives it from the source kind
    /// (diameter/2 entangled, diameter WCP).
    pub tx_beam_fwhm_m: Option<f64>,
    pub rx_diameter_m: f64,
    pub rx_obstruction_ratio: f64,
    pub pointing_rms_rad: f64,
    pub turbulence: TurbulenceProfile,
    pub orbit: OrbitSpec,
    pub site: GroundSite,
    pub source: SourceConfig,
    pub detector: DetectorConfig,
    pub receiver: ReceiverConfig,
    pub background: BackgroundConfig,
    pub teleport: TeleportConfig,
    pub security: SecurityParams,
    pub cloud_fraction: f64,
    /// Elevation used by single-geometry metrics (loss sweeps), deg.
    pub eval_elevation_deg: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Qkd,
            direction: LinkDirection::Downlink,
            wavelength_nm: 670.0,
            tx_diameter_m: 0.10,
            tx_obstruction_ratio: 0.0,
            tx_beam_fwhm_m: None,
            rx_diameter_m: 0.50,
            rx_obstruction_ratio: 0.0,
            pointing_rms_rad: 2e-6,
            turbulence: TurbulenceProfile::default(),
            orbit: OrbitSpec::default(),
            site: GroundSite::default(),
            source: SourceConfig {
                kind: SourceKind::Wcp,
                rate_hz: 300e6,
                epsilon: 0.22,
                mu: 0.5,
                nu: 0.1,
                alice_efficiency: 0.25,
                target_visibility: 0.98,
                cutoff: 6,
            },
            detector: DetectorConfig {
                efficiency_override: None,
                dark_rate_cps: 20.0,
                window_s: 0.5e-9,
                n_detectors: 4,
            },
            receiver: ReceiverConfig {
                fov_rad: 50e-6,
                filter_bandwidth_nm: 1.0,
            },
            background: BackgroundConfig {
                sky: crate::background::bundled_sky_brightness(),
                moon: MoonState::default(),
                earth_albedo: 0.3,
            },
            teleport: TeleportConfig {
                epsilon: None,
                alpha: None,
                cutoff: 3,
            },
            security: SecurityParams::default(),
            cloud_fraction: 0.5,
            eval_elevation_deg: 50.0,
        }
    }
}

impl ScenarioConfig {
    /// Downlink defaults: 670 nm, 10 cm transmitter on the satellite,
    /// 50 cm ground receiver.
    pub fn downlink_default(kind: SourceKind) -> Self {
        let mut cfg = Self::default();
        cfg.source.kind = kind;
        cfg.source.rate_hz = match kind {
            SourceKind::Wcp => 300e6,
            SourceKind::Entangled => 100e6,
        };
        cfg
    }

    /// Uplink defaults: 785 nm, 25 cm ground transmitter, 30 cm satellite
    /// receiver.
    pub fn uplink_default(kind: SourceKind) -> Self {
        let mut cfg = Self::downlink_default(kind);
        cfg.direction = LinkDirection::Uplink;
        cfg.wavelength_nm = 785.0;
        cfg.tx_diameter_m = 0.25;
        cfg.rx_diameter_m = 0.30;
        cfg
    }

    /// Effective transmit beam FWHM (per-source default when unset).
    pub fn beam_fwhm_m(&self) -> f64 {
        self.tx_beam_fwhm_m.unwrap_or(match self.source.kind {
            SourceKind::Entangled => self.tx_diameter_m / 2.0,
            SourceKind::Wcp => self.tx_diameter_m,
        })
    }

    pub fn tx_spec(&self) -> TelescopeSpec {
        TelescopeSpec {
            diameter_m: self.tx_diameter_m,
            obstruction_ratio: self.tx_obstruction_ratio,
            beam_fwhm_m: self.beam_fwhm_m(),
        }
    }

    pub fn rx_spec(&self) -> TelescopeSpec {
        TelescopeSpec {
            diameter_m: self.rx_diameter_m,
            obstruction_ratio: self.rx_obstruction_ratio,
            beam_fwhm_m: self.rx_diameter_m, // unused on receive
        }
    }

    /// Teleportation source strengths (paper operating points when unset).
    pub fn teleport_strengths(&self) -> (f64, f64) {
        let (eps_def, alpha_def) = match self.direction {
            LinkDirection::Downlink => (0.41, 0.07),
            LinkDirection::Uplink => (0.55, 0.14),
        };
        (
            self.teleport.epsilon.unwrap_or(eps_def),
            self.teleport.alpha.unwrap_or(alpha_def),
        )
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.wavelength_nm <= 0.0 {
            return Err(PipelineError::Validation(
                "wavelength must be > 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.cloud_fraction) {
            return Err(PipelineError::Validation(
                "cloud_fraction must be in [0,1]".into(),
            ));
        }
        if self.source.rate_hz <= 0.0 {
            return Err(PipelineError::Validation("source rate must be > 0".into()));
        }
        self.tx_spec()
            .validate()
            .map_err(|e| PipelineError::Validation(e.to_string()))?;
        self.security
            .validate()
            .map_err(|e| PipelineError::Validation(e.to_string()))?;
        Ok(())
    }

    /// Parse a plain-text config: one `dotted.path = value` per line,
    /// `#` comments. Unknown keys are errors.
    pub fn from_kv_text(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Validation(format!("line {}: expected 'key = value'", i + 1))
            })?;
            cfg.set_path(key.trim(), value.trim()).map_err(|e| {
                PipelineError::Validation(format!("line {}: {e}", i + 1))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one configuration field by its dotted path.
    pub fn set_path(&mut self, path: &str, value: &str) -> Result<(), PipelineError> {
        let bad_num = |p: &str, v: &str| {
            PipelineError::Validation(format!("bad numeric value '{v}' for '{p}'"))
        };
        let num = |v: &str, p: &str| -> Result<f64, PipelineError> {
            v.parse::<f64>().map_err(|_| bad_num(p, v))
        };
        match path {
            "experiment" => {
                self.experiment = match value {
                    "qkd" => Experiment::Qkd,
                    "bell" => Experiment::Bell,
                    "teleport" => Experiment::Teleport,
                    _ => {
                        return Err(PipelineError::Validation(format!(
                            "unknown experiment '{value}'"
                        )))
                    }
                }
            }
            "link.direction" => {
                self.direction = match value {
                    "downlink" => LinkDirection::Downlink,
                    "uplink" => LinkDirection::Uplink,
                    _ => {
                        return Err(PipelineError::Validation(format!(
                            "unknown direction '{value}'"
                        )))
                    }
                }
            }
            "link.wavelength_nm" => self.wavelength_nm = num(value, path)?,
            "tx.diameter_m" => self.tx_diameter_m = num(value, path)?,
            "tx.obstruction_ratio" => self.tx_obstruction_ratio = num(value, path)?,
            "tx.beam_fwhm_m" => {
                self.tx_beam_fwhm_m = if value == "auto" {
                    None
                } else {
                    Some(num(value, path)?)
                }
            }
            "rx.diameter_m" => self.rx_diameter_m = num(value, path)?,
            "rx.obstruction_ratio" => self.rx_obstruction_ratio = num(value, path)?,
            "pointing.rms_rad" => self.pointing_rms_rad = num(value, path)?,
            "turbulence.a_ground" => self.turbulence.a_ground = num(value, path)?,
            "turbulence.wind_speed" => self.turbulence.wind_speed = num(value, path)?,
            "orbit.altitude_m" => self.orbit.altitude_m = num(value, path)?,
            "orbit.epoch" => {
                self.orbit.epoch = NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|e| {
                    PipelineError::Validation(format!("bad epoch date '{value}': {e}"))
                })?
            }
            "site.lat_deg" => self.site.lat_deg = num(value, path)?,
            "site.lon_deg" => self.site.lon_deg = num(value, path)?,
            "source.kind" => {
                self.source.kind = match value {
                    "wcp" => SourceKind::Wcp,
                    "entangled" => SourceKind::Entangled,
                    _ => {
                        return Err(PipelineError::Validation(format!(
                            "unknown source kind '{value}'"
                        )))
                    }
                }
            }
            "source.rate_hz" => self.source.rate_hz = num(value, path)?,
            "source.epsilon" => self.source.epsilon = num(value, path)?,
            "source.mu" => self.source.mu = num(value, path)?,
            "source.nu" => self.source.nu = num(value, path)?,
            "source.alice_efficiency" => self.source.alice_efficiency = num(value, path)?,
            "source.target_visibility" => self.source.target_visibility = num(value, path)?,
            "source.cutoff" => self.source.cutoff = num(value, path)? as usize,
            "detector.efficiency" => {
                self.detector.efficiency_override = if value == "auto" {
                    None
                } else {
                    Some(num(value, path)?)
                }
            }
            "detector.dark_cps" => self.detector.dark_rate_cps = num(value, path)?,
            "detector.window_s" => self.detector.window_s = num(value, path)?,
            "receiver.fov_rad" => self.receiver.fov_rad = num(value, path)?,
            "receiver.filter_nm" => self.receiver.filter_bandwidth_nm = num(value, path)?,
            "background.h_natural" => self.background.sky.natural = num(value, path)?,
            "background.h_artificial" => self.background.sky.artificial = num(value, path)?,
            "background.moon_phase" => self.background.moon.phase_fraction = num(value, path)?,
            "background.moon_elevation_deg" => {
                self.background.moon.elevation_rad = num(value, path)?.to_radians()
            }
            "background.earth_albedo" => self.background.earth_albedo = num(value, path)?,
            "teleport.epsilon" => {
                self.teleport.epsilon = if value == "auto" {
                    None
                } else {
                    Some(num(value, path)?)
                }
            }
            "teleport.alpha" => {
                self.teleport.alpha = if value == "auto" {
                    None
                } else {
                    Some(num(value, path)?)
                }
            }
            "teleport.cutoff" => self.teleport.cutoff = num(value, path)? as usize,
            "security.eps_total" => self.security.eps_total = num(value, path)?,
            "security.eps_ec" => self.security.eps_ec = num(value, path)?,
            "security.f_ec" => self.security.f_ec = num(value, path)?,
            "security.q" => self.security.q_sift = num(value, path)?,
            "cloud_fraction" => self.cloud_fraction = num(value, path)?,
            "eval.elevation_deg" => self.eval_elevation_deg = num(value, path)?,
            _ => {
                return Err(PipelineError::AxisResolution(path.to_string()));
            }
        }
        Ok(())
    }

    /// Resolved-config JSON sidecar (the reproducibility record).
    pub fn to_json_sidecar(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_roundtrip_and_defaults() {
        let text = "\
# example scenario
link.direction = uplink
link.wavelength_nm = 785
tx.diameter_m = 0.25
rx.diameter_m = 0.30
source.kind = entangled
source.rate_hz = 1e8
detector.dark_cps = 100
";
        let cfg = ScenarioConfig::from_kv_text(text).unwrap();
        assert_eq!(cfg.direction, LinkDirection::Uplink);
        assert_eq!(cfg.wavelength_nm, 785.0);
        assert_eq!(cfg.source.kind, SourceKind::Entangled);
        assert_eq!(cfg.detector.dark_rate_cps, 100.0);
        // Entangled default beam FWHM: half the transmitter diameter.
        assert!((cfg.beam_fwhm_m() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_axis_resolution_error() {
        let mut cfg = ScenarioConfig::default();
        assert!(matches!(
            cfg.set_path("nonsense.key", "1.0"),
            Err(PipelineError::AxisResolution(_))
        ));
    }

    #[test]
    fn bad_value_is_validation_error() {
        assert!(ScenarioConfig::from_kv_text("link.wavelength_nm = banana").is_err());
        assert!(ScenarioConfig::from_kv_text("cloud_fraction = 1.4").is_err());
    }

    #[test]
    fn sidecar_serializes() {
        let cfg = ScenarioConfig::uplink_default(SourceKind::Wcp);
        let json = cfg.to_json_sidecar();
        assert!(json.contains("\"wavelength_nm\": 785.0"));
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.rx_diameter_m, 0.30);
    }

    #[test]
    fn wcp_beam_default_is_full_diameter() {
        let cfg = ScenarioConfig::downlink_default(SourceKind::Wcp);
        assert!((cfg.beam_fwhm_m() - cfg.tx_diameter_m).abs() < 1e-12);
    }
}
