//! Exact SI defining constants (2019 redefinition).

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.62607015e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;
