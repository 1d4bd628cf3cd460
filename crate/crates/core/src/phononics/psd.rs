//! Thermal-motion displacement spectrum of a mechanical mode.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::phononics::modes::MechanicalMode;
use crate::trace::{AxisKind, Trace, TraceMeta};

/// Measurement-noise model for synthesized spectra.
#[derive(Debug, Clone, Copy)]
pub struct PsdNoise {
    /// White noise floor, relative to the noiseless peak height.
    pub floor: f64,
    /// Multiplicative per-point noise (relative sigma).
    pub relative: f64,
}

impl PsdNoise {
    pub const NONE: PsdNoise = PsdNoise {
        floor: 0.0,
        relative: 0.0,
    };
}

/// Lorentzian thermal spectrum of `mode` with quality factor `q_m` at
/// `temperature`, sampled on `freq_grid` (Hz). The line has full width
/// f_m / q_m and area x_zp^2 (2 n_th + 1); the floor and the seeded
/// multiplicative noise come from `noise`.
pub fn thermal_mech_psd(
    mode: &MechanicalMode,
    q_m: f64,
    temperature: f64,
    freq_grid: &[f64],
    noise: PsdNoise,
    rng_seed: u64,
) -> Result<Trace> {
    if !(q_m > 0.5) {
        return Err(Error::Domain(format!("q_m = {q_m} must be > 0.5")));
    }
    if freq_grid.len() < 2 || freq_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "frequency grid must be strictly increasing with >= 2 points".into(),
        ));
    }
    let f_m = mode.frequency;
    let n_th = crate::budget::thermal_occupation(f_m, temperature)?;
    let area = mode.x_zp * mode.x_zp * (2.0 * n_th + 1.0);
    let hwhm = f_m / q_m / 2.0;
    let peak = area / (std::f64::consts::PI * hwhm);
    let floor = noise.floor * peak;

    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut values = Vec::with_capacity(freq_grid.len());
    let mut sigma = Vec::with_capacity(freq_grid.len());
    for &f in freq_grid {
        let df = f - f_m;
        let clean = area * hwhm / std::f64::consts::PI / (df * df + hwhm * hwhm) + floor;
        let g: f64 = StandardNormal.sample(&mut rng);
        values.push(clean * (1.0 + noise.relative * g));
        sigma.push(clean * noise.relative);
    }

    let mut meta = TraceMeta {
        generator: "thermal_mech_psd".into(),
        seed: Some(rng_seed),
        params: Default::default(),
    };
    meta.params.insert("f_m_hz".into(), f_m);
    meta.params.insert("q_m".into(), q_m);
    meta.params.insert("temperature_k".into(), temperature);
    meta.params.insert("n_th".into(), n_th);
    meta.params.insert("noise_floor".into(), noise.floor);
    meta.params.insert("noise_relative".into(), noise.relative);
    Trace::new(AxisKind::Hertz, freq_grid.to_vec(), values, sigma, meta)
}

/// Uniform frequency grid spanning `span` half-widths around the mode line.
pub fn psd_grid(f_m: f64, q_m: f64, half_widths: f64, points: usize) -> Vec<f64> {
    let hw = f_m / q_m / 2.0 * half_widths;
    let lo = (f_m - hw).max(0.0);
    let hi = f_m + hw;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phononics::modes::MechanicalMode;
    use approx::assert_relative_eq;

    fn mode(f: f64) -> MechanicalMode {
        MechanicalMode {
            frequency: f,
            profile_x: vec![0.0, 1e-6, 2e-6],
            profile_u: vec![0.0, 1.0, 0.0],
            effective_mass: 1e-16,
            x_zp: (crate::consts::HBAR / (2.0 * 1e-16 * std::f64::consts::TAU * f)).sqrt(),
            localization: 1.0,
            defect_mode: true,
        }
    }

    fn fwhm_of(trace: &Trace) -> f64 {
        let max = trace.values.iter().cloned().fold(f64::MIN, f64::max);
        let half = max / 2.0;
        let above: Vec<usize> = (0..trace.len())
            .filter(|&i| trace.values[i] >= half)
            .collect();
        trace.axis[*above.last().unwrap()] - trace.axis[above[0]]
    }

    #[test]
    fn noiseless_width_is_f_over_q() {
        let m = mode(6e9);
        let q = 118.0;
        let grid = psd_grid(6e9, q, 6.0, 4001);
        let t = thermal_mech_psd(&m, q, 295.0, &grid, PsdNoise::NONE, 0).unwrap();
        let res = grid[1] - grid[0];
        let width = fwhm_of(&t);
        assert!((width - 6e9 / q).abs() < 2.0 * res, "width {width}");
        // f = 6 GHz, q = 118 -> ~50.8 MHz.
        assert_relative_eq!(6e9 / q, 50.85e6, max_relative = 1e-3);
    }

    #[test]
    fn area_doubles_with_temperature_in_classical_limit() {
        let m = mode(6e9);
        let grid = psd_grid(6e9, 118.0, 40.0, 20001);
        let t1 = thermal_mech_psd(&m, 118.0, 300.0, &grid, PsdNoise::NONE, 0).unwrap();
        let t2 = thermal_mech_psd(&m, 118.0, 600.0, &grid, PsdNoise::NONE, 0).unwrap();
        let area = |t: &Trace| -> f64 {
            let d = t.axis[1] - t.axis[0];
            t.values.iter().sum::<f64>() * d
        };
        assert_relative_eq!(area(&t2) / area(&t1), 2.0, max_relative = 1e-2);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = mode(6e9);
        let grid = psd_grid(6e9, 118.0, 6.0, 101);
        let noise = PsdNoise {
            floor: 0.05,
            relative: 0.03,
        };
        let a = thermal_mech_psd(&m, 118.0, 295.0, &grid, noise, 7).unwrap();
        let b = thermal_mech_psd(&m, 118.0, 295.0, &grid, noise, 7).unwrap();
        assert_eq!(a.values, b.values);
        let c = thermal_mech_psd(&m, 118.0, 295.0, &grid, noise, 8).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn low_q_rejected() {
        let m = mode(6e9);
        let grid = psd_grid(6e9, 118.0, 6.0, 11);
        assert!(thermal_mech_psd(&m, 0.4, 295.0, &grid, PsdNoise::NONE, 0).is_err());
    }
}
