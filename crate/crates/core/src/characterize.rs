//! End-to-end measurement round trip: synthesize the six standard
//! characterization traces with seeded noise, fit each with the matching
//! model, and collect the headline numbers plus a cooperativity budget.

use serde::Serialize;

use crate::budget::{cooperativity, phonon_decoherence, CooperativityBudget};
use crate::error::{Error, Result};
use crate::fitting::models::{DecayingCosine, HahnEcho, Lorentzian, RamseyFringe};
use crate::fitting::{fit, q_from_lorentzian, FitResult};
use crate::phononics::modes::MechanicalMode;
use crate::phononics::psd::{psd_grid, thermal_mech_psd, PsdNoise};
use crate::seeding::{derive_seed, indexed_rng};
use crate::spinsim::traces::{
    hahn_trace, lower_branch_center, odmr_sweep, rabi_trace, ramsey_trace, DephasingModel,
};
use crate::spinsim::SpinConfig;
use crate::trace::{AxisKind, Trace, TraceMeta};
use rand_distr::{Distribution, StandardNormal};

/// Ground-truth values the synthesized traces are built from. The defaults
/// are the headline numbers of the reference device; a design run can
/// override the centers with its own mode frequencies.
#[derive(Debug, Clone, Serialize)]
pub struct SynthTargets {
    pub q_optical: f64,
    /// Fractional depth of the reflection dip at resonance.
    pub dip_depth: f64,
    pub optical_wavelength: f64,
    pub mech_frequency: f64,
    pub q_mechanical: f64,
    pub temperature: f64,
    /// Zero-point spin-strain coupling fed into the budget.
    pub g_hz: f64,
}

impl Default for SynthTargets {
    fn default() -> Self {
        SynthTargets {
            q_optical: 42_000.0,
            dip_depth: 0.4,
            optical_wavelength: 1564.2e-9,
            mech_frequency: 6.0e9,
            q_mechanical: 118.0,
            temperature: 295.0,
            g_hz: 200.0,
        }
    }
}

/// Knobs for the synthesis side of the round trip.
#[derive(Debug, Clone, Copy)]
pub struct CharacterizeOptions {
    /// When false every trace is noiseless and fits recover the inputs
    /// essentially exactly.
    pub noise: bool,
    /// Readout repetitions per spin-trace point.
    pub shots: u64,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        CharacterizeOptions {
            noise: true,
            shots: 2_000_000,
        }
    }
}

/// One fitted quantity with its 1-sigma curvature error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
    pub converged: bool,
}

impl Measured {
    fn from_fit(fit: &FitResult, value: f64, sigma: f64) -> Self {
        Measured {
            value,
            sigma,
            converged: fit.converged,
        }
    }
}

/// Headline results of one characterization run. A `None` field means that
/// fit failed to converge; the run is still a partial success.
#[derive(Debug, Clone, Serialize)]
pub struct CharacterizeSummary {
    pub q_optical: Option<Measured>,
    pub q_mechanical: Option<Measured>,
    pub odmr_center_hz: Option<Measured>,
    pub rabi_frequency_hz: Option<Measured>,
    pub t2_star_s: Option<Measured>,
    pub t2_s: Option<Measured>,
    /// Spin-projection budget from the fitted numbers; needs the T2 fit.
    pub budget: Option<CooperativityBudget>,
}

impl CharacterizeSummary {
    pub fn all_failed(&self) -> bool {
        self.q_optical.is_none()
            && self.q_mechanical.is_none()
            && self.odmr_center_hz.is_none()
            && self.rabi_frequency_hz.is_none()
            && self.t2_star_s.is_none()
            && self.t2_s.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct CharacterizeOutput {
    pub summary: CharacterizeSummary,
    /// Synthesized traces by short name, in generation order.
    pub traces: Vec<(&'static str, Trace)>,
}

const DIP_POINTS: usize = 401;
const DIP_RELATIVE_NOISE: f64 = 0.004;
const PSD_POINTS: usize = 601;
const ODMR_POINTS: usize = 401;
const ODMR_DRIVE_HZ: f64 = 1.0e6;
const RABI_DRIVE_HZ: f64 = 5.0e6;
const RABI_POINTS: usize = 201;
const RAMSEY_DETUNING_HZ: f64 = 2.5e6;
const RAMSEY_POINTS: usize = 241;
const HAHN_POINTS: usize = 151;

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Reflection dip of the optical cavity on a wavelength grid around the
/// target resonance, with multiplicative detector noise.
fn synth_optical_dip(t: &SynthTargets, noise: bool, seed: u64) -> Result<Trace> {
    let fwhm = t.optical_wavelength / t.q_optical;
    let grid = lin_grid(
        t.optical_wavelength - 6.0 * fwhm,
        t.optical_wavelength + 6.0 * fwhm,
        DIP_POINTS,
    );
    let rel = if noise { DIP_RELATIVE_NOISE } else { 0.0 };
    let mut rng = indexed_rng(seed, "characterize/dip", 0);
    let hwhm = fwhm / 2.0;
    let mut values = Vec::with_capacity(grid.len());
    let mut sigma = Vec::with_capacity(grid.len());
    for &wl in &grid {
        let d = wl - t.optical_wavelength;
        let clean = 1.0 - t.dip_depth * hwhm * hwhm / (d * d + hwhm * hwhm);
        let g: f64 = StandardNormal.sample(&mut rng);
        values.push(clean * (1.0 + rel * g));
        sigma.push(clean * rel);
    }
    let mut meta = TraceMeta {
        generator: "optical_dip".into(),
        seed: Some(seed),
        params: Default::default(),
    };
    meta.params.insert("q_optical".into(), t.q_optical);
    meta.params
        .insert("wavelength_m".into(), t.optical_wavelength);
    meta.params.insert("dip_depth".into(), t.dip_depth);
    Trace::new(AxisKind::Meters, grid, values, sigma, meta)
}

fn fit_q(trace: &Trace, dip: bool) -> Option<(FitResult, Measured)> {
    let model = if dip {
        Lorentzian::<f64>::dip()
    } else {
        Lorentzian::<f64>::peak()
    };
    let res = fit(&model, trace, None).ok()?;
    if !res.converged {
        return None;
    }
    let q = q_from_lorentzian(&res).ok()?;
    // q = center / fwhm, so the relative errors add in quadrature.
    let rc = res.std_errors[2] / res.parameters[2];
    let rw = res.std_errors[3] / res.parameters[3];
    let sigma = q * (rc * rc + rw * rw).sqrt();
    Some((res.clone(), Measured::from_fit(&res, q, sigma)))
}

/// Run the full synthesize-and-fit round trip. Every noise stream derives
/// from `seed`; a fit that fails leaves its summary field empty rather than
/// failing the run.
pub fn characterize(
    targets: &SynthTargets,
    spin: &SpinConfig,
    opts: &CharacterizeOptions,
    seed: u64,
) -> Result<CharacterizeOutput> {
    if !(targets.q_optical > 1.0)
        || !(targets.q_mechanical > 0.5)
        || !(targets.optical_wavelength > 0.0)
        || !(targets.mech_frequency > 0.0)
        || !(targets.dip_depth > 0.0 && targets.dip_depth <= 1.0)
        || !(targets.temperature >= 0.0)
    {
        return Err(Error::Domain(
            "characterization targets out of range".into(),
        ));
    }
    spin.validate()?;
    let shots = if opts.noise { opts.shots } else { 0 };
    let mut traces: Vec<(&'static str, Trace)> = Vec::new();

    // Optical reflection dip -> Q0.
    let dip = synth_optical_dip(targets, opts.noise, seed)?;
    let q_optical = fit_q(&dip, true).map(|(_, m)| m);
    traces.push(("optical_dip", dip));

    // Thermal displacement spectrum of the mechanical mode -> Qm. The mode
    // here is synthetic: only frequency and zero-point amplitude matter.
    let eff_mass = 1e-16;
    let x_zp =
        (crate::consts::HBAR / (2.0 * eff_mass * std::f64::consts::TAU * targets.mech_frequency))
            .sqrt();
    let mode = MechanicalMode {
        frequency: targets.mech_frequency,
        profile_x: vec![0.0, 1.0],
        profile_u: vec![0.0, 0.0],
        effective_mass: eff_mass,
        x_zp,
        localization: 1.0,
        defect_mode: true,
    };
    let psd_noise = if opts.noise {
        PsdNoise {
            floor: 0.03,
            relative: 0.04,
        }
    } else {
        PsdNoise::NONE
    };
    let grid = psd_grid(targets.mech_frequency, targets.q_mechanical, 6.0, PSD_POINTS);
    let psd = thermal_mech_psd(
        &mode,
        targets.q_mechanical,
        targets.temperature,
        &grid,
        psd_noise,
        derive_seed(seed, "characterize/psd"),
    )?;
    let q_mechanical = fit_q(&psd, false).map(|(_, m)| m);
    traces.push(("mechanical_psd", psd));

    // ODMR sweep -> center of the lower hyperfine branch. The fit window
    // isolates the central dip so a single Lorentzian applies.
    let center = lower_branch_center(spin)?;
    let half_span = 4.0 * spin.n14_a_parallel;
    let fgrid = lin_grid(center - half_span, center + half_span, ODMR_POINTS);
    let odmr = odmr_sweep(
        spin,
        ODMR_DRIVE_HZ,
        &fgrid,
        shots,
        derive_seed(seed, "characterize/odmr"),
    )?;
    let odmr_center_hz = fit_odmr_center(&odmr, spin, center);
    traces.push(("odmr", odmr));

    // Rabi flopping -> drive calibration.
    let durations = lin_grid(0.0, 6.0 / RABI_DRIVE_HZ, RABI_POINTS);
    let rabi = rabi_trace(
        spin,
        RABI_DRIVE_HZ,
        &durations,
        shots,
        derive_seed(seed, "characterize/rabi"),
    )?;
    let rabi_frequency_hz = fit_rabi(&rabi);
    traces.push(("rabi", rabi));

    // Ramsey fringes -> T2*. The detuning and hyperfine splitting are
    // experiment settings, so the fit starts from them.
    let taus = lin_grid(1e-9, 2.2 * spin.t2_star, RAMSEY_POINTS);
    let ramsey = ramsey_trace(
        spin,
        RAMSEY_DETUNING_HZ,
        &taus,
        shots,
        derive_seed(seed, "characterize/ramsey"),
        DephasingModel::Analytic,
    )?;
    let t2_star_s = fit_ramsey(&ramsey, spin);
    traces.push(("ramsey", ramsey));

    // Hahn echo -> T2, with the bath revival treated as a nuisance term.
    let times = lin_grid(1e-9, 2.1 * spin.t2, HAHN_POINTS);
    let hahn = hahn_trace(spin, &times, shots, derive_seed(seed, "characterize/hahn"))?;
    let t2_s = fit_hahn(&hahn, spin);
    traces.push(("hahn", hahn));

    // Budget from the fitted coherence, target coupling, and the fitted
    // mechanical linewidth.
    let budget = match (&t2_s, &q_mechanical) {
        (Some(t2), Some(qm)) if t2.value > 0.0 && qm.value > 0.5 => {
            let gamma_phonon =
                phonon_decoherence(targets.mech_frequency, qm.value, targets.temperature)?;
            cooperativity(targets.g_hz, 1.0 / t2.value, gamma_phonon).ok()
        }
        _ => None,
    };

    Ok(CharacterizeOutput {
        summary: CharacterizeSummary {
            q_optical,
            q_mechanical,
            odmr_center_hz,
            rabi_frequency_hz,
            t2_star_s,
            t2_s,
            budget,
        },
        traces,
    })
}

fn measured_param(res: &FitResult, idx: usize) -> Measured {
    Measured::from_fit(res, res.parameters[idx], res.std_errors[idx])
}

fn fit_odmr_center(trace: &Trace, spin: &SpinConfig, center: f64) -> Option<Measured> {
    // Restrict to the central hyperfine dip.
    let half = spin.n14_a_parallel / 2.0;
    let keep: Vec<usize> = (0..trace.len())
        .filter(|&i| (trace.axis[i] - center).abs() <= half)
        .collect();
    if keep.len() < 8 {
        return None;
    }
    let window = Trace::new(
        trace.axis_kind,
        keep.iter().map(|&i| trace.axis[i]).collect(),
        keep.iter().map(|&i| trace.values[i]).collect(),
        keep.iter().map(|&i| trace.sigma[i]).collect(),
        trace.meta.clone(),
    )
    .ok()?;
    let res = fit(&Lorentzian::<f64>::dip(), &window, None).ok()?;
    if !res.converged {
        return None;
    }
    Some(measured_param(&res, 2))
}

fn fit_rabi(trace: &Trace) -> Option<Measured> {
    let res = fit(&DecayingCosine::<f64>::new(), trace, None).ok()?;
    if !res.converged {
        return None;
    }
    Some(measured_param(&res, 2))
}

fn fit_ramsey(trace: &Trace, spin: &SpinConfig) -> Option<Measured> {
    let mean = trace.values.iter().sum::<f64>() / trace.len() as f64;
    let span = trace.axis[trace.len() - 1] - trace.axis[0];
    let init = [
        mean,
        spin.contrast / 2.0,
        RAMSEY_DETUNING_HZ,
        spin.n14_a_parallel,
        span / 2.0,
    ];
    let res = fit(&RamseyFringe::<f64>::new(), trace, Some(&init)).ok()?;
    if !res.converged {
        return None;
    }
    Some(measured_param(&res, 4))
}

fn fit_hahn(trace: &Trace, spin: &SpinConfig) -> Option<Measured> {
    let n = trace.len();
    let tail = trace.values[n - n / 5..].iter().sum::<f64>() / (n / 5) as f64;
    let span = trace.axis[n - 1] - trace.axis[0];
    let init = [
        tail,
        trace.values[0] - tail,
        span / 2.0,
        spin.c13_bath_depth.max(0.02),
        spin.c13_larmor(),
    ];
    let res = fit(&HahnEcho::<f64>::new(), trace, Some(&init)).ok()?;
    if !res.converged {
        return None;
    }
    Some(measured_param(&res, 2))
}
