//! Atmospheric transmittance tables and detector-efficiency curves.
//!
//! Tables are precomputed radiative-transfer output (or representative
//! stand-ins) stored as CSV: two header lines giving the wavelength and
//! elevation grids, then a row-major transmittance matrix with one row per
//! wavelength. Queries interpolate bilinearly, which cannot overshoot the
//! [0,1] range the way splines can.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("table invariant violated: {0}")]
    Invariant(String),
    #[error("query ({wavelength_nm} nm, {elevation_deg} deg) outside table hull")]
    OutOfHull {
        wavelength_nm: f64,
        elevation_deg: f64,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Transmittance vs (wavelength, elevation) on a rectangular grid.
#[derive(Debug, Clone)]
pub struct AtmosphereTable {
    wavelengths_nm: Vec<f64>,
    elevations_rad: Vec<f64>,
    /// Row-major: `transmittance[iw * n_elev + ie]`.
    transmittance: Vec<f64>,
    provenance: String,
}

/// Slack allowed on the elevation-monotonicity check, absorbing
/// interpolation noise in digitized tables.
const MONOTONE_SLACK: f64 = 1e-3;

impl AtmosphereTable {
    /// Parse the two-line-header CSV format.
    ///
    /// ```text
    /// # wavelengths_nm: 405,532,670
    /// # elevations_deg: 10,20,...,90
    /// # provenance: free text            (optional)
    /// t(w0,e0), t(w0,e1), ...
    /// t(w1,e0), ...
    /// ```
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut wavelengths_nm: Option<Vec<f64>> = None;
        let mut elevations_deg: Option<Vec<f64>> = None;
        let mut provenance = String::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("wavelengths_nm:") {
                    wavelengths_nm = Some(parse_numbers(v, line_no)?);
                } else if let Some(v) = rest.strip_prefix("elevations_deg:") {
                    elevations_deg = Some(parse_numbers(v, line_no)?);
                } else if let Some(v) = rest.strip_prefix("provenance:") {
                    provenance = v.trim().to_string();
                }
                continue;
            }
            rows.push(parse_numbers(line, line_no)?);
        }

        let wavelengths_nm = wavelengths_nm.ok_or(TableError::Parse {
            line: 0,
            msg: "missing '# wavelengths_nm:' header".into(),
        })?;
        let elevations_deg = elevations_deg.ok_or(TableError::Parse {
            line: 0,
            msg: "missing '# elevations_deg:' header".into(),
        })?;
        if rows.len() != wavelengths_nm.len() {
            return Err(TableError::Parse {
                line: 0,
                msg: format!(
                    "expected {} rows (one per wavelength), found {}",
                    wavelengths_nm.len(),
                    rows.len()
                ),
            });
        }
        let n_elev = elevations_deg.len();
        let mut transmittance = Vec::with_capacity(rows.len() * n_elev);
        for (iw, row) in rows.iter().enumerate() {
            if row.len() != n_elev {
                return Err(TableError::Parse {
                    line: 0,
                    msg: format!(
                        "row {} has {} columns, expected {}",
                        iw + 1,
                        row.len(),
                        n_elev
                    ),
                });
            }
            transmittance.extend_from_slice(row);
        }
        let elevations_rad = elevations_deg.iter().map(|d| d.to_radians()).collect();
        let table = Self {
            wavelengths_nm,
            elevations_rad,
            transmittance,
            provenance,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), TableError> {
        if !is_strictly_increasing(&self.wavelengths_nm) {
            return Err(TableError::Invariant(
                "wavelength grid must be strictly increasing".into(),
            ));
        }
        if !is_strictly_increasing(&self.elevations_rad) {
            return Err(TableError::Invariant(
                "elevation grid must be strictly increasing".into(),
            ));
        }
        let ne = self.elevations_rad.len();
        for (i, &t) in self.transmittance.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(TableError::Invariant(format!(
                    "transmittance {t} at entry {i} outside [0,1]"
                )));
            }
        }
        // Longer air mass toward the horizon can only lose photons.
        for iw in 0..self.wavelengths_nm.len() {
            for ie in 1..ne {
                let lower = self.transmittance[iw * ne + ie - 1];
                let higher = self.transmittance[iw * ne + ie];
                if higher + MONOTONE_SLACK < lower {
                    return Err(TableError::Invariant(format!(
                        "transmittance decreases toward zenith at {} nm between \
                         elevation rows {} and {}",
                        self.wavelengths_nm[iw],
                        ie - 1,
                        ie
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn elevations_rad(&self) -> &[f64] {
        &self.elevations_rad
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Bilinear transmittance at (wavelength, elevation).
    pub fn transmittance(&self, wavelength_nm: f64, elevation_rad: f64) -> Result<f64, TableError> {
        let (iw, fw) = bracket(&self.wavelengths_nm, wavelength_nm).ok_or(TableError::OutOfHull {
            wavelength_nm,
            elevation_deg: elevation_rad.to_degrees(),
        })?;
        let (ie, fe) = bracket(&self.elevations_rad, elevation_rad).ok_or(TableError::OutOfHull {
            wavelength_nm,
            elevation_deg: elevation_rad.to_degrees(),
        })?;
        let ne = self.elevations_rad.len();
        let at = |w: usize, e: usize| self.transmittance[w * ne + e];
        let t0 = at(iw, ie) * (1.0 - fe) + at(iw, ie + 1) * fe;
        let t1 = at(iw + 1, ie) * (1.0 - fe) + at(iw + 1, ie + 1) * fe;
        Ok(t0 * (1.0 - fw) + t1 * fw)
    }
}

/// Detector quantum-efficiency curve vs wavelength.
#[derive(Debug, Clone)]
pub struct DetectorCurve {
    wavelengths_nm: Vec<f64>,
    efficiency: Vec<f64>,
    kind: DetectorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    ThinApd,
    ThickApd,
}

impl DetectorCurve {
    /// Same CSV shape as [`AtmosphereTable`] with a single matrix row; the
    /// elevation header is repurposed as the kind marker via provenance.
    pub fn parse(text: &str, kind: DetectorKind) -> Result<Self, TableError> {
        let mut wavelengths: Option<Vec<f64>> = None;
        let mut values: Option<Vec<f64>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("wavelengths_nm:") {
                    wavelengths = Some(parse_numbers(v, i + 1)?);
                }
                continue;
            }
            values = Some(parse_numbers(line, i + 1)?);
        }
        let wavelengths_nm = wavelengths.ok_or(TableError::Parse {
            line: 0,
            msg: "missing '# wavelengths_nm:' header".into(),
        })?;
        let efficiency = values.ok_or(TableError::Parse {
            line: 0,
            msg: "missing efficiency row".into(),
        })?;
        if wavelengths_nm.len() != efficiency.len() {
            return Err(TableError::Parse {
                line: 0,
                msg: "wavelength and efficiency lengths differ".into(),
            });
        }
        if !is_strictly_increasing(&wavelengths_nm) {
            return Err(TableError::Invariant(
                "wavelength grid must be strictly increasing".into(),
            ));
        }
        for &e in &efficiency {
            if !(0.0..=1.0).contains(&e) {
                return Err(TableError::Invariant(format!(
                    "efficiency {e} outside [0,1]"
                )));
            }
        }
        Ok(Self {
            wavelengths_nm,
            efficiency,
            kind,
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn efficiency(&self, wavelength_nm: f64) -> Result<f64, TableError> {
        let (i, f) = bracket(&self.wavelengths_nm, wavelength_nm).ok_or(TableError::OutOfHull {
            wavelength_nm,
            elevation_deg: f64::NAN,
        })?;
        Ok(self.efficiency[i] * (1.0 - f) + self.efficiency[i + 1] * f)
    }
}

/// Thin APDs cover wavelengths below this; thick APDs at and above it.
pub const APD_CROSSOVER_NM: f64 = 532.0;

/// Detector efficiency selecting thin/thick APD by wavelength.
pub fn detector_efficiency(
    thin: &DetectorCurve,
    thick: &DetectorCurve,
    wavelength_nm: f64,
) -> Result<f64, TableError> {
    if wavelength_nm < APD_CROSSOVER_NM {
        thin.efficiency(wavelength_nm)
    } else {
        thick.efficiency(wavelength_nm)
    }
}

/// Bundled representative rural sea-level transmittance table
/// (5 km visibility). See the provenance line in the data file.
pub fn bundled_atmosphere() -> AtmosphereTable {
    AtmosphereTable::parse(include_str!("../data/atmosphere_rural_sea_level.csv"))
        .expect("bundled atmosphere table is valid")
}

pub fn bundled_thin_apd() -> DetectorCurve {
    DetectorCurve::parse(
        include_str!("../data/detector_thin_apd.csv"),
        DetectorKind::ThinApd,
    )
    .expect("bundled thin APD curve is valid")
}

pub fn bundled_thick_apd() -> DetectorCurve {
    DetectorCurve::parse(
        include_str!("../data/detector_thick_apd.csv"),
        DetectorKind::ThickApd,
    )
    .expect("bundled thick APD curve is valid")
}

fn parse_numbers(s: &str, line: usize) -> Result<Vec<f64>, TableError> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|e| TableError::Parse {
                line,
                msg: format!("bad number '{}': {e}", tok.trim()),
            })
        })
        .collect()
}

fn is_strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

/// Locate `x` in a sorted grid: returns (left index, fraction).
fn bracket(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    if grid.len() < 2 || x < grid[0] || x > grid[grid.len() - 1] {
        return None;
    }
    let mut i = match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(i) => i - 1,
    };
    if i >= grid.len() - 1 {
        i = grid.len() - 2;
    }
    let f = (x - grid[i]) / (grid[i + 1] - grid[i]);
    Some((i, f))
}
