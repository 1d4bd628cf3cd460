//! 1D layered-medium transfer-matrix model of the optical cavity.
//!
//! The patterned beam maps to a stack of effective-index layers (one per
//! half-cell) via volume-averaged permittivity; the measurement topology of
//! the reflection readout is a stack terminated by a perfect waveguide
//! mirror, so a lossless stack reflects everything and intrinsic loss carves
//! Lorentzian dips at the cavity resonances.

use num_complex::Complex;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::consts::SPEED_OF_LIGHT;
use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::fitting;
use crate::scalar::Real;
use crate::trace::{AxisKind, Trace, TraceMeta};

/// Sweep convention of the tunable-laser band (m).
pub const SWEEP_MIN: f64 = 1500e-9;
pub const SWEEP_MAX: f64 = 1630e-9;

/// Documented cap reported instead of dividing by zero in lossless stacks.
pub const Q_CAP: f64 = 1e12;

/// One effective-index layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalLayer<R> {
    /// Physical length (m).
    pub length: R,
    /// Complex effective index; imaginary part >= 0 models loss.
    pub index: Complex<R>,
}

/// Effective-index stack of a device, with the loss/coupling bookkeeping.
#[derive(Debug, Clone)]
pub struct OpticalStack {
    pub layers: Vec<OpticalLayer<f64>>,
    /// Index of the feeding waveguide (incidence medium).
    pub waveguide_index: f64,
    /// External coupling rate through the input mirror (Hz); populated by
    /// [`cavity_mode`], zero until then.
    pub input_coupling_rate: f64,
    /// Intrinsic loss rate implied by the imaginary index at the sweep
    /// center (Hz).
    pub intrinsic_loss_rate: f64,
}

/// Volume-averaged permittivity mixing rule for a fill fraction.
pub fn effective_index<R: Real>(fill: R, n_bulk: R) -> R {
    (fill * n_bulk * n_bulk + (R::one() - fill)).sqrt()
}

impl OpticalStack {
    /// Build the stack of a device: two layers per cell, loss proportional
    /// to the material fraction of each layer.
    pub fn from_device(spec: &DeviceSpec) -> Result<Self> {
        spec.validate()?;
        let n_bulk = spec.material.refractive_index;
        let loss = spec.material.optical_loss_index;
        let half = spec.lattice_constant / 2.0;
        let mut layers = Vec::with_capacity(2 * spec.cell_count());
        for fill in spec.segment_fills() {
            layers.push(OpticalLayer {
                length: half,
                index: Complex::new(effective_index(fill, n_bulk), loss * fill),
            });
        }
        // f/Q of a uniform absorber with index n: Q = Re(n) / (2 Im(n)).
        let f0 = SPEED_OF_LIGHT / (0.5 * (SWEEP_MIN + SWEEP_MAX));
        let intrinsic_loss_rate = if loss > 0.0 {
            f0 * 2.0 * loss / n_bulk
        } else {
            0.0
        };
        Ok(OpticalStack {
            layers,
            waveguide_index: n_bulk,
            input_coupling_rate: 0.0,
            intrinsic_loss_rate,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.length > 0.0) {
                return Err(Error::validation(
                    "stack.layers",
                    format!("layer {i} has non-positive length"),
                ));
            }
            if l.index.re < 1.0 || l.index.im < 0.0 {
                return Err(Error::validation(
                    "stack.layers",
                    format!("layer {i} index must have Re >= 1 and Im >= 0"),
                ));
            }
        }
        if self.input_coupling_rate < 0.0 || self.intrinsic_loss_rate < 0.0 {
            return Err(Error::validation("stack.rates", "rates must be >= 0"));
        }
        Ok(())
    }
}

/// Amplitude reflection and transmission of a bare stack between
/// semi-infinite media `n_in` and `n_out` at vacuum wavelength `lambda`.
pub fn stack_rt<R: Real>(
    layers: &[OpticalLayer<R>],
    n_in: R,
    n_out: R,
    lambda: R,
) -> (Complex<R>, Complex<R>) {
    let mut m = interface(Complex::new(n_in, R::zero()), first_index(layers, n_out));
    for (i, layer) in layers.iter().enumerate() {
        let delta = Complex::<R>::new(R::zero(), -R::two_pi() / lambda) * layer.index
            * Complex::new(layer.length, R::zero());
        let p = [delta.exp(), Complex::new(R::zero(), R::zero()), Complex::new(R::zero(), R::zero()), (-delta).exp()];
        m = mat_mul(m, p);
        let next = if i + 1 < layers.len() {
            layers[i + 1].index
        } else {
            Complex::new(n_out, R::zero())
        };
        m = mat_mul(m, interface(layer.index, next));
    }
    let r = m[2] / m[0];
    let t = m[0].inv();
    (r, t)
}

fn first_index<R: Real>(layers: &[OpticalLayer<R>], n_out: R) -> Complex<R> {
    layers
        .first()
        .map(|l| l.index)
        .unwrap_or(Complex::new(n_out, R::zero()))
}

fn interface<R: Real>(na: Complex<R>, nb: Complex<R>) -> [Complex<R>; 4] {
    let two = R::lit(2.0);
    let t = na * Complex::new(two, R::zero()) / (na + nb);
    let r = (na - nb) / (na + nb);
    [t.inv(), r / t, r / t, t.inv()]
}

fn mat_mul<R: Real>(a: [Complex<R>; 4], b: [Complex<R>; 4]) -> [Complex<R>; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Power reflectance of the stack terminated by a perfect waveguide mirror.
pub fn terminated_reflectance(stack: &OpticalStack, lambda: f64) -> f64 {
    // Terminate with amplitude reflection -1: (E+, E-)_exit = (1, -1) E.
    let mut m = interface(
        Complex::new(stack.waveguide_index, 0.0),
        first_index(&stack.layers, stack.waveguide_index),
    );
    for (i, layer) in stack.layers.iter().enumerate() {
        let delta = Complex::<f64>::new(0.0, -std::f64::consts::TAU / lambda)
            * layer.index
            * Complex::new(layer.length, 0.0);
        let p = [
            delta.exp(),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            (-delta).exp(),
        ];
        m = mat_mul(m, p);
        let next = if i + 1 < stack.layers.len() {
            stack.layers[i + 1].index
        } else {
            Complex::new(stack.waveguide_index, 0.0)
        };
        m = mat_mul(m, interface(layer.index, next));
    }
    let mirror = Complex::new(-1.0, 0.0);
    let e_in = m[0] + m[1] * mirror;
    let e_ref = m[2] + m[3] * mirror;
    (e_ref / e_in).norm_sqr()
}

/// Reflected-power spectrum over `wavelengths` (m) with optional seeded
/// additive noise of sigma `noise_floor` (relative to unit reflection).
pub fn reflection_spectrum(
    stack: &OpticalStack,
    wavelengths: &[f64],
    noise_floor: f64,
    rng_seed: u64,
) -> Result<Trace> {
    stack.validate()?;
    if wavelengths.len() < 2 || wavelengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "wavelengths must be strictly increasing with >= 2 points".into(),
        ));
    }
    if wavelengths[0] < SWEEP_MIN - 1e-12 || *wavelengths.last().unwrap() > SWEEP_MAX + 1e-12 {
        return Err(Error::Domain(format!(
            "wavelengths outside the [{:.0}, {:.0}] nm sweep band",
            SWEEP_MIN * 1e9,
            SWEEP_MAX * 1e9
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut values = Vec::with_capacity(wavelengths.len());
    let mut sigma = Vec::with_capacity(wavelengths.len());
    for &lambda in wavelengths {
        let clean = terminated_reflectance(stack, lambda);
        let g: f64 = StandardNormal.sample(&mut rng);
        values.push(clean + noise_floor * g);
        sigma.push(noise_floor);
    }
    let mut meta = TraceMeta {
        generator: "reflection_spectrum".into(),
        seed: Some(rng_seed),
        params: Default::default(),
    };
    meta.params.insert("noise_floor".into(), noise_floor);
    Trace::new(AxisKind::Meters, wavelengths.to_vec(), values, sigma, meta)
}

/// A located optical resonance.
#[derive(Debug, Clone, Serialize)]
pub struct OpticalMode {
    /// Resonance frequency (Hz).
    pub frequency: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
    pub q_total: f64,
    pub q_intrinsic: f64,
    /// Fractional dip depth in [0, 1].
    pub coupling_depth: f64,
    /// External coupling rate f/Q_e (Hz).
    pub coupling_rate: f64,
}

/// Search controls for [`cavity_mode`].
#[derive(Debug, Clone, Copy)]
pub struct CavitySearch {
    pub coarse_points: usize,
    pub refine_rounds: usize,
    pub refine_points: usize,
    /// Reflectance drop below baseline that counts as a dip.
    pub min_depth: f64,
}

impl Default for CavitySearch {
    fn default() -> Self {
        CavitySearch {
            coarse_points: 2048,
            refine_rounds: 4,
            refine_points: 257,
            min_depth: 0.02,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Find the deepest dip in the sweep band and fit it with a Lorentzian.
/// Returns `None` when the stack shows no dip (not an error).
pub fn cavity_mode(stack: &OpticalStack) -> Result<Option<OpticalMode>> {
    cavity_mode_with(stack, CavitySearch::default())
}

pub fn cavity_mode_with(stack: &OpticalStack, search: CavitySearch) -> Result<Option<OpticalMode>> {
    stack.validate()?;
    let mut grid = linspace(SWEEP_MIN, SWEEP_MAX, search.coarse_points);
    let mut values: Vec<f64> = grid
        .iter()
        .map(|&l| terminated_reflectance(stack, l))
        .collect();
    // Off-resonant level from the coarse scan; refinement windows shrink
    // below a linewidth and carry no baseline information.
    let baseline = median_high(&values);
    let mut spacing = grid[1] - grid[0];
    for _ in 0..search.refine_rounds {
        let imin = argmin(&values);
        let lo = (grid[imin] - 2.0 * spacing).max(SWEEP_MIN);
        let hi = (grid[imin] + 2.0 * spacing).min(SWEEP_MAX);
        grid = linspace(lo, hi, search.refine_points);
        values = grid
            .iter()
            .map(|&l| terminated_reflectance(stack, l))
            .collect();
        spacing = grid[1] - grid[0];
    }
    let imin = argmin(&values);
    let depth = baseline - values[imin];
    if depth < search.min_depth {
        return Ok(None);
    }
    let lambda0 = grid[imin];

    // Estimate the linewidth from the half-depth crossings, then fit a
    // Lorentzian on a window of several linewidths.
    let fwhm_est = half_depth_width(stack, grid[imin], values[imin], baseline, spacing);
    let lo = (lambda0 - 6.0 * fwhm_est).max(SWEEP_MIN);
    let hi = (lambda0 + 6.0 * fwhm_est).min(SWEEP_MAX);
    let window = linspace(lo, hi, 401);
    let wvals: Vec<f64> = window
        .iter()
        .map(|&l| terminated_reflectance(stack, l))
        .collect();
    let trace = Trace::new(
        AxisKind::Meters,
        window,
        wvals,
        vec![0.0; 401],
        TraceMeta {
            generator: "cavity_mode_window".into(),
            seed: None,
            params: Default::default(),
        },
    )?;
    let model = fitting::models::Lorentzian::<f64>::dip();
    let fit = fitting::fit(&model, &trace, None)?;
    let [offset, amp, center, fwhm] = [
        fit.parameters[0],
        fit.parameters[1],
        fit.parameters[2],
        fit.parameters[3],
    ];
    let wavelength = center;
    let frequency = SPEED_OF_LIGHT / wavelength;
    let q_total = if fwhm.abs() > 0.0 {
        (wavelength / fwhm.abs()).min(Q_CAP)
    } else {
        Q_CAP
    };
    let r_min = (offset + amp).max(0.0); // amp < 0 for a dip
    let r_base = offset.max(r_min + 1e-12);
    let s = (r_min / r_base).sqrt().min(1.0);
    // Undercoupled branch: kappa_i = kappa_t (1 + s)/2.
    let q_intrinsic = (q_total * 2.0 / (1.0 + s)).min(Q_CAP);
    let coupling_depth = ((r_base - r_min) / r_base).clamp(0.0, 1.0);
    let kappa_e = frequency / q_total - frequency / q_intrinsic;
    Ok(Some(OpticalMode {
        frequency,
        wavelength,
        q_total,
        q_intrinsic,
        coupling_depth,
        coupling_rate: kappa_e.max(0.0),
    }))
}

fn argmin(v: &[f64]) -> usize {
    let mut i = 0;
    for (j, &x) in v.iter().enumerate() {
        if x < v[i] {
            i = j;
        }
    }
    i
}

fn median_high(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s[s.len() * 3 / 4]
}

// Walk outward from the dip minimum until the reflectance recovers to the
// half-depth level, bisect the crossing on each side, and return the width.
fn half_depth_width(
    stack: &OpticalStack,
    lambda0: f64,
    r_min: f64,
    baseline: f64,
    start_step: f64,
) -> f64 {
    let half = 0.5 * (r_min + baseline);
    let crossing = |sign: f64| -> f64 {
        let mut d = start_step.max(1e-15);
        let limit = (SWEEP_MAX - SWEEP_MIN) / 2.0;
        while d < limit && terminated_reflectance(stack, lambda0 + sign * d) < half {
            d *= 2.0;
        }
        let mut lo = d / 2.0;
        let mut hi = d;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if terminated_reflectance(stack, lambda0 + sign * mid) < half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    crossing(1.0) + crossing(-1.0)
}

/// Figure-of-merit output of the genetic-search fitness kernel.
#[derive(Debug, Clone, Serialize)]
pub struct OptomechFigure {
    pub feasible: bool,
    pub q_optical: f64,
    pub epsilon_zp: f64,
    /// Q_0 * epsilon_zp; zero when infeasible.
    pub product: f64,
    pub mechanical_frequency: Option<f64>,
    pub optical_wavelength: Option<f64>,
    /// kappa / f_m > 1 (not sideband resolved), when both exist.
    pub sideband_unresolved: Option<bool>,
}

/// Resolution controls for the fitness kernel.
#[derive(Debug, Clone, Copy)]
pub struct FigureOptions {
    pub elements_per_cell: usize,
    pub cavity_search: CavitySearch,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            elements_per_cell: 32,
            cavity_search: CavitySearch::default(),
        }
    }
}

impl FigureOptions {
    /// Cheaper settings for inside optimization loops.
    pub fn fast() -> Self {
        FigureOptions {
            elements_per_cell: 12,
            cavity_search: CavitySearch {
                coarse_points: 1024,
                refine_rounds: 3,
                refine_points: 129,
                min_depth: 0.02,
            },
        }
    }
}

/// The GA fitness kernel: mechanical defect mode -> zero-point strain at the
/// NV site, optical dip -> Q_0, product Q_0 * epsilon_zp.
pub fn optomech_figure(spec: &DeviceSpec, opts: FigureOptions) -> Result<OptomechFigure> {
    spec.validate()?;
    let infeasible = |mech_f: Option<f64>, wl: Option<f64>| OptomechFigure {
        feasible: false,
        q_optical: 0.0,
        epsilon_zp: 0.0,
        product: 0.0,
        mechanical_frequency: mech_f,
        optical_wavelength: wl,
        sideband_unresolved: None,
    };

    let modes = match crate::phononics::localized_modes(spec, opts.elements_per_cell) {
        Ok(m) => m,
        Err(_) => return Ok(infeasible(None, None)),
    };
    let defect = crate::phononics::defect_modes(&modes);
    let Some(mode) = defect.first() else {
        return Ok(infeasible(None, None));
    };
    let epsilon_zp = mode.zero_point_strain(spec.nv_position)?;

    let stack = OpticalStack::from_device(spec)?;
    let Some(optical) = cavity_mode_with(&stack, opts.cavity_search)? else {
        return Ok(infeasible(Some(mode.frequency), None));
    };
    let kappa = optical.frequency / optical.q_total;
    Ok(OptomechFigure {
        feasible: true,
        q_optical: optical.q_total,
        epsilon_zp,
        product: optical.q_total * epsilon_zp,
        mechanical_frequency: Some(mode.frequency),
        optical_wavelength: Some(optical.wavelength),
        sideband_unresolved: Some(kappa / mode.frequency > 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::MaterialParams;
    use approx::assert_relative_eq;

    fn material(loss: f64) -> MaterialParams {
        MaterialParams {
            youngs_modulus: 1.05e12,
            density: 3515.0,
            refractive_index: 2.4,
            spin_stress_coupling: 2e10,
            orbital_strain_coupling: 1e15,
            stiffness_calibration: 1.0,
            optical_loss_index: loss,
        }
    }

    fn spec(loss: f64) -> DeviceSpec {
        DeviceSpec {
            lattice_constant: 382e-9,
            thickness: 200e-9,
            beam_width: 500e-9,
            mirror_cell_count: 6,
            transition_cell_count: 3,
            fill_mirror: [0.35, 0.95],
            fill_defect: [0.6, 0.8],
            defect_perturbation: 1.0,
            nv_position: 3.8e-6,
            material: material(loss),
        }
    }

    #[test]
    fn unpatterned_stack_reflects_everything() {
        let mut s = spec(0.0);
        s.fill_mirror = [0.8, 0.8];
        s.fill_defect = [0.8, 0.8];
        let stack = OpticalStack::from_device(&s).unwrap();
        for lambda in [1510e-9, 1564.2e-9, 1620e-9] {
            let r = terminated_reflectance(&stack, lambda);
            assert_relative_eq!(r, 1.0, max_relative = 1e-10);
        }
        assert!(cavity_mode(&stack).unwrap().is_none());
    }

    #[test]
    fn lossless_stack_conserves_energy() {
        let stack = OpticalStack::from_device(&spec(0.0)).unwrap();
        // Asymmetric sub-stack to exercise the general path.
        let layers = &stack.layers[..stack.layers.len() / 2 + 1];
        for lambda in [1500e-9, 1555e-9, 1601e-9] {
            let (r, t) = stack_rt(layers, 2.4, 2.4, lambda);
            let total = r.norm_sqr() + t.norm_sqr();
            assert!((total - 1.0).abs() < 1e-10, "R+T = {total} at {lambda}");
        }
    }

    #[test]
    fn lossless_reciprocity_under_layer_reversal() {
        let stack = OpticalStack::from_device(&spec(0.0)).unwrap();
        let mut reversed = stack.layers.clone();
        reversed.reverse();
        // Asymmetrize by dropping one edge layer.
        let fwd = &stack.layers[1..];
        let mut bwd = reversed.clone();
        bwd.truncate(bwd.len() - 1);
        for lambda in [1520e-9, 1560e-9, 1600e-9] {
            let (rf, _) = stack_rt(fwd, 2.4, 2.4, lambda);
            let (rb, _) = stack_rt(&bwd, 2.4, 2.4, lambda);
            assert!(
                (rf.norm_sqr() - rb.norm_sqr()).abs() < 1e-10,
                "at {lambda}: {} vs {}",
                rf.norm_sqr(),
                rb.norm_sqr()
            );
        }
    }

    #[test]
    fn lossy_stack_shows_a_dip_with_consistent_qs() {
        let stack = OpticalStack::from_device(&spec(2e-5)).unwrap();
        let mode = cavity_mode(&stack).unwrap().expect("expected a resonance");
        assert!(mode.wavelength > SWEEP_MIN && mode.wavelength < SWEEP_MAX);
        assert!(mode.q_total <= mode.q_intrinsic);
        assert!(mode.coupling_depth > 0.0 && mode.coupling_depth <= 1.0);
        assert_relative_eq!(
            mode.frequency * mode.wavelength,
            SPEED_OF_LIGHT,
            max_relative = 1e-12
        );
    }

    #[test]
    fn q_increases_with_mirror_cell_count() {
        let base = spec(1e-4);
        let mut more = base.clone();
        more.mirror_cell_count = base.mirror_cell_count * 2;
        // Keep the NV inside both beams.
        let q = |s: &DeviceSpec| {
            let stack = OpticalStack::from_device(s).unwrap();
            cavity_mode(&stack).unwrap().expect("resonance").q_total
        };
        assert!(q(&more) > q(&base));
    }

    #[test]
    fn spectrum_rejects_out_of_band_sweep() {
        let stack = OpticalStack::from_device(&spec(0.0)).unwrap();
        let bad = vec![1400e-9, 1500e-9];
        assert!(reflection_spectrum(&stack, &bad, 0.0, 0).is_err());
    }

    #[test]
    fn unpatterned_device_is_infeasible() {
        let mut s = spec(1e-5);
        s.fill_mirror = [1.0, 1.0];
        s.fill_defect = [1.0, 1.0];
        let fig = optomech_figure(&s, FigureOptions::fast()).unwrap();
        assert!(!fig.feasible);
        assert_eq!(fig.product, 0.0);
    }
}
