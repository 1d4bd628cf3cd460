//! Physical constants (SI, 2019 redefinition where applicable).

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// NV electron gyromagnetic ratio (Hz/T), g = 2.0028.
pub const GAMMA_ELECTRON: f64 = 2.802_495_164e10;
/// ¹³C nuclear gyromagnetic ratio (Hz/T).
pub const GAMMA_C13: f64 = 1.070_84e7;
