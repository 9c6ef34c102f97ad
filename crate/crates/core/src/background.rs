//! Background photon rates at the receiver.
//!
//! Downlinks collect sky brightness (natural plus artificial) within the
//! receiver's field of view. Uplinks point the satellite telescope at the
//! nighttime Earth: the dominant terms are moonlight reflected off the
//! ground and upward-emitted light pollution, both scaled by the ground
//! footprint the receiver images and the solid angle it subtends. Radiance
//! is treated as flat over the narrow optical filter, so every rate is
//! linear in the filter bandwidth.

use thiserror::Error;

use crate::constants::{
    photon_energy, EARTH_MOON_DISTANCE, MOON_RADIUS, PLANCK, SPEED_OF_LIGHT, SUN_SOLID_ANGLE,
    SUN_TEMPERATURE,
};
use crate::linkbudget::LinkGeometry;

#[derive(Debug, Error)]
pub enum BackgroundError {
    #[error("invalid background parameter: {0}")]
    InvalidParameter(String),
    #[error("ground footprint outside light-pollution grid bounds")]
    FootprintOutsideGrid,
    #[error("grid parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Sky spectral radiance seen by a ground receiver, W m^-2 sr^-1 nm^-1.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SkyBrightness {
    pub natural: f64,
    pub artificial: f64,
}

impl SkyBrightness {
    pub fn validate(&self) -> Result<(), BackgroundError> {
        if self.natural < 0.0 || self.artificial < 0.0 {
            return Err(BackgroundError::InvalidParameter(
                "sky radiance must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Receiver view geometry and filtering.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ReceiverView {
    /// Field-of-view half angle, rad.
    pub fov_rad: f64,
    /// Telescope radius, m.
    pub telescope_radius_m: f64,
    /// Optical filter bandwidth, nm.
    pub filter_bandwidth_nm: f64,
    /// Detection window, s.
    pub window_s: f64,
}

impl Default for ReceiverView {
    fn default() -> Self {
        Self {
            fov_rad: 50e-6,
            telescope_radius_m: 0.25,
            filter_bandwidth_nm: 1.0,
            window_s: 0.5e-9,
        }
    }
}

impl ReceiverView {
    pub fn validate(&self) -> Result<(), BackgroundError> {
        if self.fov_rad <= 0.0 || self.filter_bandwidth_nm <= 0.0 || self.telescope_radius_m <= 0.0
        {
            return Err(BackgroundError::InvalidParameter(
                "fov, bandwidth and radius must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Downlink background rate into the ground receiver, counts/s:
/// `N = (H_nat + H_art) * pi FOV^2 * pi r^2 * bandwidth / E_photon`.
///
/// Valid while the satellite itself is unlit; the sky terms do not depend
/// on where the satellite is.
pub fn downlink_background(
    sky: &SkyBrightness,
    view: &ReceiverView,
    wavelength_nm: f64,
) -> Result<f64, BackgroundError> {
    sky.validate()?;
    view.validate()?;
    let solid_angle = std::f64::consts::PI * view.fov_rad * view.fov_rad;
    let area = std::f64::consts::PI * view.telescope_radius_m * view.telescope_radius_m;
    let radiance = sky.natural + sky.artificial;
    Ok(radiance * solid_angle * area * view.filter_bandwidth_nm / photon_energy(wavelength_nm))
}

/// Planck spectral radiance per wavelength, W m^-2 sr^-1 nm^-1.
pub fn planck_spectral_radiance(wavelength_nm: f64, temperature_k: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    let h = PLANCK;
    let c = SPEED_OF_LIGHT;
    let k = crate::constants::BOLTZMANN;
    let per_m = 2.0 * h * c * c / lambda.powi(5)
        / ((h * c / (lambda * k * temperature_k)).exp() - 1.0);
    per_m * 1e-9
}

/// Moon illumination state.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct MoonState {
    /// Illuminated phase fraction in [0,1]; 0.5 is a half moon.
    pub phase_fraction: f64,
    /// Elevation above the ground site's horizon, rad.
    pub elevation_rad: f64,
}

impl Default for MoonState {
    fn default() -> Self {
        Self {
            phase_fraction: 0.5,
            elevation_rad: 45f64.to_radians(),
        }
    }
}

/// Effective Moon reflectance vs phase fraction.
///
/// Piecewise-linear fit to the empirical lunar phase curve (brightness
/// relative to full moon folded into an effective albedo; the steep
/// opposition surge makes a half moon roughly a tenth of a full moon).
const MOON_ALBEDO_TABLE: [(f64, f64); 6] = [
    (0.00, 0.0),
    (0.25, 0.008),
    (0.50, 0.014),
    (0.75, 0.045),
    (0.90, 0.080),
    (1.00, 0.120),
];

pub fn moon_effective_albedo(phase_fraction: f64) -> f64 {
    let p = phase_fraction.clamp(0.0, 1.0);
    for w in MOON_ALBEDO_TABLE.windows(2) {
        let (p0, a0) = w[0];
        let (p1, a1) = w[1];
        if p <= p1 {
            return a0 + (a1 - a0) * (p - p0) / (p1 - p0);
        }
    }
    MOON_ALBEDO_TABLE[5].1
}

/// Ground footprint area imaged by the satellite receiver, m^2.
///
/// Circular cone of the FOV half-angle at the slant distance, stretched by
/// the projection onto the ground at the link elevation.
pub fn ground_footprint_area(view: &ReceiverView, geometry: &LinkGeometry) -> f64 {
    let radius = view.fov_rad * geometry.distance_m;
    std::f64::consts::PI * radius * radius / geometry.elevation_rad.sin().max(1e-6)
}

/// Solid angle of the satellite telescope seen from the ground, sr.
pub fn receiver_solid_angle(view: &ReceiverView, geometry: &LinkGeometry) -> f64 {
    std::f64::consts::PI * view.telescope_radius_m * view.telescope_radius_m
        / (geometry.distance_m * geometry.distance_m)
}

/// Natural uplink background: sunlight -> Moon -> ground -> satellite,
/// counts/s.
///
/// The chain keeps the blackbody-radiance form: solar spectral radiance at
/// the Sun's temperature, diluted by the Sun's solid angle, reflected by
/// the Moon (phase-dependent effective albedo, Lambertian), diluted by the
/// Moon's solid angle from Earth, reflected by the ground (albedo
/// `earth_albedo`, Lambertian), and collected from the footprint into the
/// receiver solid angle. `extinction` is the one-way atmospheric
/// transmittance on the ground-to-satellite path; the moon-to-ground leg
/// uses the same table at the Moon's elevation.
#[allow(clippy::too_many_arguments)]
pub fn uplink_natural_background(
    geometry: &LinkGeometry,
    view: &ReceiverView,
    wavelength_nm: f64,
    moon: &MoonState,
    earth_albedo: f64,
    extinction_moon_path: f64,
    extinction_up_path: f64,
) -> Result<f64, BackgroundError> {
    view.validate()?;
    if moon.elevation_rad <= 0.0 {
        return Ok(0.0);
    }
    if !(0.0..=1.0).contains(&earth_albedo) {
        return Err(BackgroundError::InvalidParameter(
            "earth albedo must be in [0,1]".into(),
        ));
    }

    // Spectral irradiance arriving at the Moon from the Sun.
    let solar = planck_spectral_radiance(wavelength_nm, SUN_TEMPERATURE) * SUN_SOLID_ANGLE;
    // Lambertian lunar radiance with the phase-dependent effective albedo.
    let moon_radiance =
        moon_effective_albedo(moon.phase_fraction) * solar / std::f64::consts::PI;
    // Irradiance on the ground: lunar radiance over the Moon's solid angle,
    // attenuated through the atmosphere, projected at the Moon's elevation.
    let moon_solid_angle = std::f64::consts::PI * MOON_RADIUS * MOON_RADIUS
        / (EARTH_MOON_DISTANCE * EARTH_MOON_DISTANCE);
    let ground_irradiance =
        moon_radiance * moon_solid_angle * extinction_moon_path * moon.elevation_rad.sin();
    // Lambertian ground radiance, then photons into the receiver.
    let ground_radiance = earth_albedo * ground_irradiance / std::f64::consts::PI;
    let footprint = ground_footprint_area(view, geometry);
    let omega = receiver_solid_angle(view, geometry);
    let power =
        extinction_up_path * ground_radiance * footprint * omega * view.filter_bandwidth_nm;
    Ok(power / photon_energy(wavelength_nm))
}

/// Upward light-pollution radiance map, W m^-2 sr^-1 nm^-1 per cell.
#[derive(Debug, Clone)]
pub struct LightPollutionGrid {
    lat_min_deg: f64,
    lat_max_deg: f64,
    lon_min_deg: f64,
    lon_max_deg: f64,
    n_lat: usize,
    n_lon: usize,
    /// Row-major, latitude rows from lat_min upward.
    radiance: Vec<f64>,
}

impl LightPollutionGrid {
    /// CSV format mirrors the atmosphere table:
    /// ```text
    /// # lat_deg: 44.8, 45.9
    /// # lon_deg: -76.5, -75.3
    /// # cells: 22, 24
    /// <n_lat rows of n_lon comma-separated radiances>
    /// ```
    pub fn parse(text: &str) -> Result<Self, BackgroundError> {
        let mut lat: Option<(f64, f64)> = None;
        let mut lon: Option<(f64, f64)> = None;
        let mut cells: Option<(usize, usize)> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                let parse_pair = |v: &str| -> Result<(f64, f64), BackgroundError> {
                    let nums: Vec<f64> = v
                        .split(',')
                        .map(|t| {
                            t.trim().parse::<f64>().map_err(|e| BackgroundError::Parse {
                                line: line_no,
                                msg: e.to_string(),
                            })
                        })
                        .collect::<Result<_, _>>()?;
                    if nums.len() != 2 {
                        return Err(BackgroundError::Parse {
                            line: line_no,
                            msg: "expected two values".into(),
                        });
                    }
                    Ok((nums[0], nums[1]))
                };
                if let Some(v) = rest.strip_prefix("lat_deg:") {
                    lat = Some(parse_pair(v)?);
                } else if let Some(v) = rest.strip_prefix("lon_deg:") {
                    lon = Some(parse_pair(v)?);
                } else if let Some(v) = rest.strip_prefix("cells:") {
                    let (a, b) = parse_pair(v)?;
                    cells = Some((a as usize, b as usize));
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|e| BackgroundError::Parse {
                        line: line_no,
                        msg: e.to_string(),
                    })
                })
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        let (lat_min, lat_max) = lat.ok_or(BackgroundError::Parse {
            line: 0,
            msg: "missing '# lat_deg:' header".into(),
        })?;
        let (lon_min, lon_max) = lon.ok_or(BackgroundError::Parse {
            line: 0,
            msg: "missing '# lon_deg:' header".into(),
        })?;
        let (n_lat, n_lon) = cells.ok_or(BackgroundError::Parse {
            line: 0,
            msg: "missing '# cells:' header".into(),
        })?;
        if rows.len() != n_lat || rows.iter().any(|r| r.len() != n_lon) {
            return Err(BackgroundError::Parse {
                line: 0,
                msg: format!("expected {n_lat} x {n_lon} matrix"),
            });
        }
        let mut radiance = Vec::with_capacity(n_lat * n_lon);
        for row in rows {
            for v in row {
                if v < 0.0 {
                    return Err(BackgroundError::InvalidParameter(
                        "radiance must be >= 0".into(),
                    ));
                }
                radiance.push(v);
            }
        }
        Ok(Self {
            lat_min_deg: lat_min,
            lat_max_deg: lat_max,
            lon_min_deg: lon_min,
            lon_max_deg: lon_max,
            n_lat,
            n_lon,
            radiance,
        })
    }

    /// Uniform grid constructor for tests and synthetic scenes.
    pub fn uniform(
        bounds: (f64, f64, f64, f64),
        n_lat: usize,
        n_lon: usize,
        radiance: f64,
    ) -> Self {
        Self {
            lat_min_deg: bounds.0,
            lat_max_deg: bounds.1,
            lon_min_deg: bounds.2,
            lon_max_deg: bounds.3,
            n_lat,
            n_lon,
            radiance: vec![radiance; n_lat * n_lon],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# lat_deg: {}, {}\n# lon_deg: {}, {}\n# cells: {}, {}\n",
            self.lat_min_deg,
            self.lat_max_deg,
            self.lon_min_deg,
            self.lon_max_deg,
            self.n_lat,
            self.n_lon
        ));
        for row in 0..self.n_lat {
            let cells: Vec<String> = (0..self.n_lon)
                .map(|c| format!("{:.6e}", self.radiance[row * self.n_lon + c]))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Mean radiance over a circular footprint centred at the site.
    pub fn mean_radiance(
        &self,
        site_lat_deg: f64,
        site_lon_deg: f64,
        footprint_radius_m: f64,
    ) -> Result<f64, BackgroundError> {
        let lat_span = self.lat_max_deg - self.lat_min_deg;
        let lon_span = self.lon_max_deg - self.lon_min_deg;
        if !(self.lat_min_deg..=self.lat_max_deg).contains(&site_lat_deg)
            || !(self.lon_min_deg..=self.lon_max_deg).contains(&site_lon_deg)
        {
            return Err(BackgroundError::FootprintOutsideGrid);
        }
        // Degrees per metre, locally.
        let m_per_deg_lat = 111_320.0;
        let m_per_deg_lon = 111_320.0 * site_lat_deg.to_radians().cos();
        let dlat = footprint_radius_m / m_per_deg_lat;
        let dlon = footprint_radius_m / m_per_deg_lon;
        if site_lat_deg - dlat < self.lat_min_deg
            || site_lat_deg + dlat > self.lat_max_deg
            || site_lon_deg - dlon < self.lon_min_deg
            || site_lon_deg + dlon > self.lon_max_deg
        {
            return Err(BackgroundError::FootprintOutsideGrid);
        }
        // Average all cells whose centres fall in the footprint; with a
        // footprint smaller than one cell this is the containing cell.
        let cell_lat = lat_span / self.n_lat as f64;
        let cell_lon = lon_span / self.n_lon as f64;
        let mut sum = 0.0;
        let mut count = 0usize;
        for row in 0..self.n_lat {
            let lat = self.lat_min_deg + (row as f64 + 0.5) * cell_lat;
            for col in 0..self.n_lon {
                let lon = self.lon_min_deg + (col as f64 + 0.5) * cell_lon;
                let dy = (lat - site_lat_deg) * m_per_deg_lat;
                let dx = (lon - site_lon_deg) * m_per_deg_lon;
                if dx * dx + dy * dy <= footprint_radius_m * footprint_radius_m {
                    sum += self.radiance[row * self.n_lon + col];
                    count += 1;
                }
            }
        }
        if count == 0 {
            // Footprint smaller than a cell: take the containing cell.
            let row = (((site_lat_deg - self.lat_min_deg) / cell_lat) as usize).min(self.n_lat - 1);
            let col = (((site_lon_deg - self.lon_min_deg) / cell_lon) as usize).min(self.n_lon - 1);
            return Ok(self.radiance[row * self.n_lon + col]);
        }
        Ok(sum / count as f64)
    }
}

/// Uplink light-pollution background, counts/s:
/// `N = e_n * (L_mean / E_photon) * footprint * Omega * bandwidth`.
pub fn uplink_pollution_background(
    grid: &LightPollutionGrid,
    site_lat_deg: f64,
    site_lon_deg: f64,
    geometry: &LinkGeometry,
    view: &ReceiverView,
    wavelength_nm: f64,
    extinction_up_path: f64,
) -> Result<f64, BackgroundError> {
    view.validate()?;
    let footprint = ground_footprint_area(view, geometry);
    let radius = (footprint / std::f64::consts::PI).sqrt();
    let mean = grid.mean_radiance(site_lat_deg, site_lon_deg, radius)?;
    let omega = receiver_solid_angle(view, geometry);
    Ok(
        extinction_up_path * mean * footprint * omega * view.filter_bandwidth_nm
            / photon_energy(wavelength_nm),
    )
}

/// Total background: sum of the per-direction contributions.
pub fn total_background(contributions: &[f64]) -> f64 {
    contributions.iter().sum()
}

/// Bundled synthetic light-pollution grid around the default ground site
/// (a Gaussian city glow 20 km from the site plus a rural floor).
pub fn bundled_pollution_grid() -> LightPollutionGrid {
    LightPollutionGrid::parse(include_str!("../data/light_pollution_sample.csv"))
        .expect("bundled pollution grid is valid")
}

/// Default sky radiances for the bundled downlink scenario
/// (moonlit rural sky near a city), W m^-2 sr^-1 nm^-1.
pub fn bundled_sky_brightness() -> SkyBrightness {
    SkyBrightness {
        natural: 6.0e-9,
        artificial: 9.0e-9,
    }
}
