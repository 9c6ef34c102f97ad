//! Physical and astronomical constants used across the simulation.

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Earth gravitational parameter, m^3/s^2.
pub const EARTH_MU: f64 = 3.986_004_418e14;

/// Mean Earth radius used for ground-station geometry, m.
pub const EARTH_RADIUS: f64 = 6.371_230e6;

/// Earth equatorial radius (J2 oblateness reference), m.
pub const EARTH_RADIUS_EQ: f64 = 6.378_137e6;

/// Earth J2 zonal harmonic coefficient.
pub const EARTH_J2: f64 = 1.082_626_68e-3;

/// Earth sidereal rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_0e-5;

/// Mean solar year, s.
pub const TROPICAL_YEAR_S: f64 = 365.242_19 * 86_400.0;

/// Effective solar surface temperature, K.
pub const SUN_TEMPERATURE: f64 = 5778.0;

/// Solid angle subtended by the Sun at 1 au, sr.
pub const SUN_SOLID_ANGLE: f64 = 6.794e-5;

/// Moon mean radius, m.
pub const MOON_RADIUS: f64 = 1.737_4e6;

/// Mean Earth–Moon distance, m.
pub const EARTH_MOON_DISTANCE: f64 = 3.844e8;

/// Photon energy at a wavelength given in nanometres, J.
pub fn photon_energy(wavelength_nm: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}
