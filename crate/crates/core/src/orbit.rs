//! Idealized satellite pass generation over a ground station.
//!
//! The propagator is a circular two-body orbit with secular J2 nodal
//! regression pinned to the sun-synchronous rate, which is all the pass
//! statistics need; the ascending node is set so the orbital plane tracks
//! local noon/midnight. Ephemeris import provides parity with runs driven
//! by an external high-fidelity propagator.

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use crate::constants::{EARTH_J2, EARTH_MU, EARTH_RADIUS, EARTH_RADIUS_EQ, TROPICAL_YEAR_S};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("invalid orbit parameter: {0}")]
    InvalidParameter(String),
    #[error("ephemeris parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ephemeris must contain at least two samples")]
    TooShort,
    #[error("ephemeris timestamps must be strictly increasing at line {0}")]
    NonMonotonicTime(usize),
    #[error("empty pass list")]
    EmptyPassList,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Circular sun-synchronous orbit specification.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct OrbitSpec {
    /// Altitude above the mean Earth radius, m.
    pub altitude_m: f64,
    /// Epoch date (UTC midnight) the year of passes starts from.
    pub epoch: NaiveDate,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        Self {
            altitude_m: 600e3,
            epoch: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        }
    }
}

impl OrbitSpec {
    pub fn validate(&self) -> Result<(), OrbitError> {
        if !(300e3..=2000e3).contains(&self.altitude_m) {
            return Err(OrbitError::InvalidParameter(format!(
                "altitude {} m outside LEO range [300 km, 2000 km]",
                self.altitude_m
            )));
        }
        Ok(())
    }

    pub fn semi_major_axis(&self) -> f64 {
        EARTH_RADIUS + self.altitude_m
    }

    /// Orbital period from Kepler's third law, s.
    pub fn period_s(&self) -> f64 {
        let a = self.semi_major_axis();
        2.0 * std::f64::consts::PI * (a * a * a / EARTH_MU).sqrt()
    }

    /// Mean motion, rad/s.
    pub fn mean_motion(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period_s()
    }

    /// Sun-synchronous inclination from the J2 regression rate, rad.
    pub fn sun_synchronous_inclination(&self) -> f64 {
        let a = self.semi_major_axis();
        let n = self.mean_motion();
        let node_rate = 2.0 * std::f64::consts::PI / TROPICAL_YEAR_S;
        let cos_i = -node_rate / (1.5 * EARTH_J2 * n * (EARTH_RADIUS_EQ / a).powi(2));
        cos_i.acos()
    }
}

/// Ground station location.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GroundSite {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl Default for GroundSite {
    fn default() -> Self {
        // Approximately 20 km outside Ottawa.
        Self {
            lat_deg: 45.3,
            lon_deg: -75.9,
        }
    }
}

/// One time sample of a pass.
#[derive(Debug, Clone, Copy)]
pub struct PassSample {
    /// Seconds since the epoch.
    pub t_s: f64,
    pub distance_m: f64,
    pub elevation_rad: f64,
}

/// Default usability threshold: elevation above 10 degrees.
pub const USABLE_ELEVATION_RAD: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Time series of one satellite pass over the site.
#[derive(Debug, Clone)]
pub struct PassProfile {
    pub samples: Vec<PassSample>,
    /// Mask of samples above the usability threshold.
    pub usable: Vec<bool>,
}

impl PassProfile {
    pub fn from_samples(samples: Vec<PassSample>) -> Self {
        let usable = samples
            .iter()
            .map(|s| s.elevation_rad > USABLE_ELEVATION_RAD)
            .collect();
        Self { samples, usable }
    }

    /// Usable duration in seconds (1 s cadence).
    pub fn duration_usable_s(&self) -> f64 {
        self.usable.iter().filter(|&&u| u).count() as f64
    }

    pub fn max_elevation_rad(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.elevation_rad)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum slant distance over the usable portion, m.
    pub fn min_distance_m(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.usable)
            .filter(|(_, &u)| u)
            .map(|(s, _)| s.distance_m)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<(), OrbitError> {
        for w in self.samples.windows(2) {
            if w[1].t_s <= w[0].t_s {
                return Err(OrbitError::InvalidParameter(
                    "sample times must be strictly increasing".into(),
                ));
            }
        }
        for s in &self.samples {
            if s.distance_m < 0.0 || s.elevation_rad > std::f64::consts::FRAC_PI_2 + 1e-9 {
                return Err(OrbitError::InvalidParameter("bad sample".into()));
            }
        }
        Ok(())
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Days since J2000.0 (2000-01-01 12:00 UTC) for an epoch date + offset.
fn days_since_j2000(epoch: NaiveDate, t_s: f64) -> f64 {
    let j2000 = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let days = (epoch - j2000).num_days() as f64 - 0.5;
    days + t_s / 86_400.0
}

/// Greenwich mean sidereal time, rad.
fn gmst_rad(days_j2000: f64) -> f64 {
    let deg = 280.460_618_37 + 360.985_647_366_29 * days_j2000;
    deg.rem_euclid(360.0).to_radians()
}

/// Low-precision solar right ascension/declination, rad.
fn sun_ra_dec(days_j2000: f64) -> (f64, f64) {
    let n = days_j2000;
    let l = (280.460 + 0.985_647_4 * n).rem_euclid(360.0);
    let g = (357.528 + 0.985_600_3 * n).rem_euclid(360.0).to_radians();
    let lambda = (l + 1.915 * g.sin() + 0.020 * (2.0 * g).sin()).to_radians();
    let eps = (23.439 - 4.0e-7 * n).to_radians();
    let ra = (eps.cos() * lambda.sin()).atan2(lambda.cos());
    let dec = (eps.sin() * lambda.sin()).asin();
    (ra, dec)
}

/// Solar elevation at the site, rad.
fn sun_elevation(site: &GroundSite, epoch: NaiveDate, t_s: f64) -> f64 {
    let d = days_since_j2000(epoch, t_s);
    let (ra, dec) = sun_ra_dec(d);
    let gmst = gmst_rad(d);
    let lst = gmst + site.lon_deg.to_radians();
    let h = lst - ra; // hour angle
    let lat = site.lat_deg.to_radians();
    (lat.sin() * dec.sin() + lat.cos() * dec.cos() * h.cos()).asin()
}

/// Satellite ECI position at time t for the circular sun-synchronous orbit.
struct Propagator {
    a: f64,
    n: f64,
    inclination: f64,
    raan0: f64,
    node_rate: f64,
    u0: f64,
}

impl Propagator {
    fn new(orbit: &OrbitSpec) -> Self {
        let inclination = orbit.sun_synchronous_inclination();
        // Noon/midnight orbit: align the ascending node with the Sun's
        // right ascension at epoch; sun-synchronous regression keeps it
        // there through the year.
        let (sun_ra, _) = sun_ra_dec(days_since_j2000(orbit.epoch, 0.0));
        Self {
            a: orbit.semi_major_axis(),
            n: orbit.mean_motion(),
            inclination,
            raan0: sun_ra,
            node_rate: 2.0 * std::f64::consts::PI / TROPICAL_YEAR_S,
            u0: 0.0,
        }
    }

    fn position_eci(&self, t_s: f64) -> [f64; 3] {
        let u = self.u0 + self.n * t_s;
        let raan = self.raan0 + self.node_rate * t_s;
        let (su, cu) = u.sin_cos();
        let (sr, cr) = raan.sin_cos();
        let (si, ci) = self.inclination.sin_cos();
        [
            self.a * (cu * cr - su * ci * sr),
            self.a * (cu * sr + su * ci * cr),
            self.a * su * si,
        ]
    }
}

fn site_eci(site: &GroundSite, epoch: NaiveDate, t_s: f64) -> [f64; 3] {
    let gmst = gmst_rad(days_since_j2000(epoch, t_s));
    let lat = site.lat_deg.to_radians();
    let lon = site.lon_deg.to_radians();
    let theta = gmst + lon;
    [
        EARTH_RADIUS * lat.cos() * theta.cos(),
        EARTH_RADIUS * lat.cos() * theta.sin(),
        EARTH_RADIUS * lat.sin(),
    ]
}

fn range_elevation(sat: [f64; 3], site: [f64; 3]) -> (f64, f64) {
    let rel = [sat[0] - site[0], sat[1] - site[1], sat[2] - site[2]];
    let d = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
    let up = unit(site);
    let elevation = (dot(rel, up) / d).clamp(-1.0, 1.0).asin();
    (d, elevation)
}

/// Generate all nighttime passes above the usability threshold for one
/// year from the orbit epoch, sampled at 1 s.
///
/// Nighttime means the site's solar elevation is below -6 degrees (civil
/// twilight ended) throughout the usable portion of the pass.
pub fn propagate_passes(
    orbit: &OrbitSpec,
    site: &GroundSite,
    days: u32,
) -> Result<Vec<PassProfile>, OrbitError> {
    orbit.validate()?;
    if site.lat_deg.abs() > 89.0 {
        return Err(OrbitError::InvalidParameter("site too close to pole".into()));
    }
    let prop = Propagator::new(orbit);
    let total_s = days as u64 * 86_400;

    let mut passes = Vec::new();
    let mut current: Vec<PassSample> = Vec::new();

    for t in 0..total_s {
        let t_f = t as f64;
        let sat = prop.position_eci(t_f);
        let site_pos = site_eci(site, orbit.epoch, t_f);
        let (d, elev) = range_elevation(sat, site_pos);
        if elev > 0.0 {
            current.push(PassSample {
                t_s: t_f,
                distance_m: d,
                elevation_rad: elev,
            });
        } else if !current.is_empty() {
            flush_pass(&mut passes, &mut current, site, orbit.epoch);
        }
    }
    if !current.is_empty() {
        flush_pass(&mut passes, &mut current, site, orbit.epoch);
    }
    Ok(passes)
}

fn flush_pass(
    passes: &mut Vec<PassProfile>,
    current: &mut Vec<PassSample>,
    site: &GroundSite,
    epoch: NaiveDate,
) {
    let samples = std::mem::take(current);
    let profile = PassProfile::from_samples(samples);
    if profile.duration_usable_s() == 0.0 {
        return;
    }
    // Night check across the usable portion.
    let night = profile
        .samples
        .iter()
        .zip(&profile.usable)
        .filter(|(_, &u)| u)
        .all(|(s, _)| sun_elevation(site, epoch, s.t_s) < (-6.0f64).to_radians());
    if night {
        passes.push(profile);
    }
}

/// Representative passes by usable-duration order statistics.
#[derive(Debug, Clone)]
pub struct PassClassification {
    pub best: PassProfile,
    pub upper_quartile: PassProfile,
    pub median: PassProfile,
}

/// Select the longest, upper-quartile and median passes by usable duration.
pub fn classify_passes(passes: &[PassProfile]) -> Result<PassClassification, OrbitError> {
    if passes.is_empty() {
        return Err(OrbitError::EmptyPassList);
    }
    let mut order: Vec<usize> = (0..passes.len()).collect();
    // Descending by usable duration.
    order.sort_by(|&a, &b| {
        passes[b]
            .duration_usable_s()
            .partial_cmp(&passes[a].duration_usable_s())
            .unwrap()
    });
    let best = passes[order[0]].clone();
    let upper_quartile = passes[order[passes.len() / 4]].clone();
    let median = passes[order[passes.len() / 2]].clone();
    Ok(PassClassification {
        best,
        upper_quartile,
        median,
    })
}

/// Export a pass as ephemeris CSV rows `utc_iso8601,lat_deg,lon_deg,alt_m`.
///
/// Positions are reconstructed on the idealized orbit, so a re-import
/// reproduces the same range/elevation series.
pub fn export_ephemeris(
    orbit: &OrbitSpec,
    pass: &PassProfile,
) -> Result<String, OrbitError> {
    let prop = Propagator::new(orbit);
    let epoch_dt = orbit
        .epoch
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc();
    let mut out = String::from("utc_iso8601,lat_deg,lon_deg,alt_m\n");
    for s in &pass.samples {
        let pos = prop.position_eci(s.t_s);
        let gmst = gmst_rad(days_since_j2000(orbit.epoch, s.t_s));
        let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
        let lat = (pos[2] / r).asin().to_degrees();
        let lon_raw = pos[1].atan2(pos[0]) - gmst;
        let lon = lon_raw.rem_euclid(2.0 * std::f64::consts::PI);
        let lon = if lon > std::f64::consts::PI {
            lon - 2.0 * std::f64::consts::PI
        } else {
            lon
        }
        .to_degrees();
        let alt = r - EARTH_RADIUS;
        let when = epoch_dt + chrono::Duration::milliseconds((s.t_s * 1000.0).round() as i64);
        out.push_str(&format!(
            "{},{lat:.6},{lon:.6},{alt:.1}\n",
            when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        ));
    }
    Ok(out)
}

/// Import an ephemeris CSV into site-relative pass profiles, applying the
/// same usability mask as the propagator.
pub fn import_ephemeris(text: &str, site: &GroundSite) -> Result<Vec<PassProfile>, OrbitError> {
    let mut rows: Vec<(DateTime<Utc>, f64, f64, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("utc_iso8601") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(OrbitError::Parse {
                line: line_no,
                msg: format!("expected 4 columns, got {}", parts.len()),
            });
        }
        let when = DateTime::parse_from_rfc3339(parts[0].trim())
            .map_err(|e| OrbitError::Parse {
                line: line_no,
                msg: format!("bad timestamp: {e}"),
            })?
            .with_timezone(&Utc);
        let nums: Vec<f64> = parts[1..]
            .iter()
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| OrbitError::Parse {
                    line: line_no,
                    msg: format!("bad number '{}': {e}", t.trim()),
                })
            })
            .collect::<Result<_, _>>()?;
        rows.push((when, nums[0], nums[1], nums[2]));
    }
    if rows.len() < 2 {
        return Err(OrbitError::TooShort);
    }
    for (i, w) in rows.windows(2).enumerate() {
        if w[1].0 <= w[0].0 {
            return Err(OrbitError::NonMonotonicTime(i + 2));
        }
    }

    let t0 = rows[0].0;
    let epoch = t0.date_naive();
    let day_start = epoch.and_hms_opt(0, 0, 0).unwrap().and_utc();
    let mut passes = Vec::new();
    let mut current: Vec<PassSample> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (when, lat, lon, alt) in rows {
        let t_s = (when - day_start).num_milliseconds() as f64 / 1000.0;
        // Satellite ECEF from geodetic-as-spherical coordinates, matching
        // the propagator's spherical-Earth convention.
        let latr = lat.to_radians();
        let lonr = lon.to_radians();
        let r = EARTH_RADIUS + alt;
        let sat = [
            r * latr.cos() * lonr.cos(),
            r * latr.cos() * lonr.sin(),
            r * latr.sin(),
        ];
        let slat = site.lat_deg.to_radians();
        let slon = site.lon_deg.to_radians();
        let site_pos = [
            EARTH_RADIUS * slat.cos() * slon.cos(),
            EARTH_RADIUS * slat.cos() * slon.sin(),
            EARTH_RADIUS * slat.sin(),
        ];
        let (d, elev) = range_elevation(sat, site_pos);
        let gap = t_s - last_t;
        last_t = t_s;
        if elev > 0.0 {
            if gap > 10.0 && !current.is_empty() {
                let p = PassProfile::from_samples(std::mem::take(&mut current));
                if p.duration_usable_s() > 0.0 {
                    passes.push(p);
                }
            }
            current.push(PassSample {
                t_s,
                distance_m: d,
                elevation_rad: elev,
            });
        } else if !current.is_empty() {
            let p = PassProfile::from_samples(std::mem::take(&mut current));
            if p.duration_usable_s() > 0.0 {
                passes.push(p);
            }
        }
    }
    if !current.is_empty() {
        let p = PassProfile::from_samples(current);
        if p.duration_usable_s() > 0.0 {
            passes.push(p);
        }
    }
    Ok(passes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kepler_period_at_600km() {
        let orbit = OrbitSpec::default();
        // 2 pi sqrt(a^3/mu) with a = 6371.23 + 600 km.
        let a: f64 = EARTH_RADIUS + 600e3;
        let oracle = 2.0 * std::f64::consts::PI * (a.powi(3) / EARTH_MU).sqrt();
        assert!((orbit.period_s() - oracle).abs() / oracle < 1e-3);
        assert!((orbit.period_s() - 5801.0).abs() / 5801.0 < 2e-3);
    }

    #[test]
    fn sun_sync_inclination_near_98_degrees() {
        let orbit = OrbitSpec::default();
        let i = orbit.sun_synchronous_inclination().to_degrees();
        assert!((i - 97.8).abs() < 0.3, "inclination {i}");
    }

    #[test]
    fn altitude_bounds_enforced() {
        let bad = OrbitSpec {
            altitude_m: 100e3,
            ..OrbitSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn law_of_cosines_consistency() {
        // d^2 = R^2 + r^2 - 2 R r cos(gamma) with elevation from geometry.
        let orbit = OrbitSpec::default();
        let site = GroundSite::default();
        let passes = propagate_passes(&orbit, &site, 3).unwrap();
        assert!(!passes.is_empty());
        let r_orb = orbit.semi_major_axis();
        for pass in &passes {
            for s in &pass.samples {
                // Central angle from the law of cosines, then the elevation
                // identity sin(elev) = (r cos(gamma) - R)/d.
                let cos_gamma =
                    (r_orb * r_orb + EARTH_RADIUS * EARTH_RADIUS - s.distance_m * s.distance_m)
                        / (2.0 * r_orb * EARTH_RADIUS);
                let sin_elev = (r_orb * cos_gamma - EARTH_RADIUS) / s.distance_m;
                let err = (sin_elev - s.elevation_rad.sin()).abs();
                assert!(err < 1e-3, "law-of-cosines violation {err}");
            }
        }
    }

    #[test]
    fn passes_are_time_symmetric() {
        let orbit = OrbitSpec::default();
        let site = GroundSite::default();
        let passes = propagate_passes(&orbit, &site, 5).unwrap();
        for pass in &passes {
            let n = pass.samples.len();
            let peak_idx = pass
                .samples
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.elevation_rad.partial_cmp(&b.1.elevation_rad).unwrap())
                .unwrap()
                .0;
            let before = peak_idx as f64;
            let after = (n - 1 - peak_idx) as f64;
            let asym = (before - after).abs() / n as f64;
            assert!(asym < 0.12, "pass asymmetry {asym}");
        }
    }

    #[test]
    fn zenith_pass_reaches_altitude_distance() {
        let orbit = OrbitSpec::default();
        let site = GroundSite::default();
        let passes = propagate_passes(&orbit, &site, 30).unwrap();
        let best = passes
            .iter()
            .max_by(|a, b| {
                a.max_elevation_rad()
                    .partial_cmp(&b.max_elevation_rad())
                    .unwrap()
            })
            .unwrap();
        // The best pass over a month should come close to zenith, where
        // minimum distance approaches the altitude.
        if best.max_elevation_rad() > 85f64.to_radians() {
            let min_d = best.min_distance_m();
            assert!((min_d - orbit.altitude_m) / orbit.altitude_m < 0.02);
        }
    }

    #[test]
    fn classify_orders_by_duration() {
        let mk = |dur: usize, t0: f64| {
            let samples: Vec<PassSample> = (0..dur)
                .map(|i| PassSample {
                    t_s: t0 + i as f64,
                    distance_m: 700e3,
                    elevation_rad: 0.5,
                })
                .collect();
            PassProfile::from_samples(samples)
        };
        let passes = vec![mk(100, 0.0), mk(300, 1e4), mk(200, 2e4)];
        let c = classify_passes(&passes).unwrap();
        assert_eq!(c.best.duration_usable_s(), 300.0);
        assert!(c.upper_quartile.duration_usable_s() >= c.median.duration_usable_s());
        assert!(classify_passes(&[]).is_err());
    }

    #[test]
    fn ephemeris_roundtrip_preserves_durations() {
        let orbit = OrbitSpec::default();
        let site = GroundSite::default();
        let passes = propagate_passes(&orbit, &site, 2).unwrap();
        let pass = &passes[0];
        let csv = export_ephemeris(&orbit, pass).unwrap();
        let re = import_ephemeris(&csv, &site).unwrap();
        assert_eq!(re.len(), 1);
        assert!(
            (re[0].duration_usable_s() - pass.duration_usable_s()).abs() <= 1.0,
            "roundtrip duration {} vs {}",
            re[0].duration_usable_s(),
            pass.duration_usable_s()
        );
    }

    #[test]
    fn ephemeris_single_row_rejected() {
        let text = "utc_iso8601,lat_deg,lon_deg,alt_m\n2015-01-01T00:00:00Z,45.0,-75.0,600000\n";
        assert!(matches!(
            import_ephemeris(text, &GroundSite::default()),
            Err(OrbitError::TooShort)
        ));
    }

    #[test]
    fn synthetic_overhead_track_hits_zenith() {
        // March the satellite straight over the site.
        let site = GroundSite {
            lat_deg: 45.0,
            lon_deg: -75.0,
        };
        let mut text = String::from("utc_iso8601,lat_deg,lon_deg,alt_m\n");
        for i in 0..120 {
            let lat = 42.0 + i as f64 * 0.05;
            text.push_str(&format!(
                "2015-06-01T03:{:02}:{:02}Z,{lat:.4},-75.0,600000\n",
                i / 60,
                i % 60
            ));
        }
        let passes = import_ephemeris(&text, &site).unwrap();
        assert_eq!(passes.len(), 1);
        let max_elev = passes[0].max_elevation_rad().to_degrees();
        assert!(max_elev > 89.0, "max elevation {max_elev}");
    }
}
