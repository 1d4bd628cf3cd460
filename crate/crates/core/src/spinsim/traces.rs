//! Synthesized measurement records: ODMR sweep, Rabi flopping, Ramsey
//! fringes, and Hahn echo decay, all seeded and reproducible.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding::indexed_rng;
use crate::spinsim::{
    build_hamiltonian, fluorescence, initial_state, ms_populations, sample_readout, CMatrix,
    Drive, SpinConfig,
};
use crate::trace::{AxisKind, Trace, TraceMeta};

/// Dephasing treatment of the free-evolution generators.
#[derive(Debug, Clone, Copy)]
pub enum DephasingModel {
    /// Gaussian envelopes applied to the coherence directly (default).
    Analytic,
    /// Quasi-static Gaussian-detuning ensemble average; validates the
    /// analytic envelope at the cost of `samples` evaluations per point.
    QuasiStatic { samples: usize },
}

/// All electron transition frequencies (Hz), lower branch then upper,
/// computed from eigenvalue differences of the lab-frame Hamiltonian.
/// Within each electron block the nuclear eigenvalues are paired by sorted
/// order across blocks.
pub fn transition_frequencies(cfg: &SpinConfig) -> Result<Vec<f64>> {
    let h = build_hamiltonian(cfg, None)?;
    let nuc = cfg.dim() / 3;
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(3);
    for m in 0..3 {
        let sub = h.view((m * nuc, m * nuc), (nuc, nuc)).into_owned();
        let mut ev: Vec<f64> = sub.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        blocks.push(ev);
    }
    let mut lines = Vec::with_capacity(2 * nuc);
    for k in 0..nuc {
        lines.push(blocks[2][k] - blocks[1][k]); // m_s = 0 -> -1
    }
    for k in 0..nuc {
        lines.push(blocks[0][k] - blocks[1][k]); // m_s = 0 -> +1
    }
    lines.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(lines)
}

/// Center of the lower (m_s = 0 -> -1) transition manifold (Hz).
pub fn lower_branch_center(cfg: &SpinConfig) -> Result<f64> {
    let lines = transition_frequencies(cfg)?;
    let nuc = cfg.dim() / 3;
    let lower = &lines[..nuc];
    Ok(lower.iter().sum::<f64>() / nuc as f64)
}

fn validate_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.len() < 2 || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!(
            "{name} must be strictly increasing with >= 2 points"
        )));
    }
    Ok(())
}

fn meta(generator: &str, seed: u64, params: &[(&str, f64)]) -> TraceMeta {
    let mut m = TraceMeta {
        generator: generator.into(),
        seed: Some(seed),
        params: Default::default(),
    };
    for (k, v) in params {
        m.params.insert((*k).into(), *v);
    }
    m
}

fn noisy_trace(
    cfg: &SpinConfig,
    generator: &str,
    axis_kind: AxisKind,
    axis: &[f64],
    clean: Vec<f64>,
    shots: u64,
    seed: u64,
    params: &[(&str, f64)],
) -> Result<Trace> {
    let mut values = Vec::with_capacity(axis.len());
    let mut sigma = Vec::with_capacity(axis.len());
    for (i, s) in clean.into_iter().enumerate() {
        if shots == 0 {
            values.push(s);
            sigma.push(0.0);
        } else {
            let mut rng = indexed_rng(seed, generator, i as u64);
            let (_, v, sg) = sample_readout(cfg, s, shots, &mut rng);
            values.push(v);
            sigma.push(sg);
        }
    }
    let mut m = meta(generator, seed, params);
    m.params.insert("shots".into(), shots as f64);
    Trace::new(axis_kind, axis.to_vec(), values, sigma, m)
}

/// Continuous-wave ODMR: saturation-weighted Lorentzian dips at every
/// transition line, with power broadening from the drive.
pub fn odmr_sweep(
    cfg: &SpinConfig,
    drive_rabi: f64,
    freq_grid: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Trace> {
    cfg.validate()?;
    validate_axis(freq_grid, "freq_grid")?;
    if drive_rabi < 0.0 {
        return Err(Error::Domain("drive_rabi must be >= 0".into()));
    }
    let lines = transition_frequencies(cfg)?;
    let nuc = cfg.dim() / 3;
    let natural = 1.0 / (std::f64::consts::PI * cfg.t2_star);
    let fwhm = (natural * natural + 2.0 * drive_rabi * drive_rabi).sqrt();
    let hwhm = fwhm / 2.0;
    let sat = drive_rabi * drive_rabi / (drive_rabi * drive_rabi + natural * natural);
    let depth = cfg.contrast * sat / nuc as f64;
    let clean: Vec<f64> = freq_grid
        .iter()
        .map(|&f| {
            let mut s = 1.0;
            for &line in &lines {
                let d = f - line;
                s -= depth * hwhm * hwhm / (d * d + hwhm * hwhm);
            }
            s
        })
        .collect();
    noisy_trace(
        cfg,
        "odmr_sweep",
        AxisKind::Hertz,
        freq_grid,
        clean,
        shots,
        seed,
        &[("drive_rabi_hz", drive_rabi)],
    )
}

/// Coherent Rabi flopping at the lower-branch center, full product-space
/// unitary evolution so the detuned hyperfine lines beat against the drive.
pub fn rabi_trace(
    cfg: &SpinConfig,
    rabi_frequency: f64,
    durations: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Trace> {
    cfg.validate()?;
    validate_axis(durations, "durations")?;
    if !(rabi_frequency > 0.0) {
        return Err(Error::Domain("rabi_frequency must be > 0".into()));
    }
    if durations[0] < 0.0 {
        return Err(Error::Domain("durations must be >= 0".into()));
    }
    let f_d = lower_branch_center(cfg)?;
    let h = build_hamiltonian(
        cfg,
        Some(Drive {
            frequency: f_d,
            rabi_frequency,
            phase: 0.0,
        }),
    )?;
    let eig = h.symmetric_eigen();
    let rho0 = initial_state(cfg);
    // rho in the Hamiltonian eigenbasis; time evolution is then a phase map.
    let rho_e = eig.eigenvectors.adjoint() * &rho0 * &eig.eigenvectors;
    let dim = cfg.dim();
    let clean: Vec<f64> = durations
        .iter()
        .map(|&t| {
            let mut rho_t = CMatrix::zeros(dim, dim);
            for a in 0..dim {
                for b in 0..dim {
                    let ph = Complex64::from_polar(
                        1.0,
                        -std::f64::consts::TAU * (eig.eigenvalues[a] - eig.eigenvalues[b]) * t,
                    );
                    rho_t[(a, b)] = rho_e[(a, b)] * ph;
                }
            }
            let rho_lab = &eig.eigenvectors * rho_t * eig.eigenvectors.adjoint();
            fluorescence(cfg, &ms_populations(cfg, &rho_lab))
        })
        .collect();
    noisy_trace(
        cfg,
        "rabi_trace",
        AxisKind::Seconds,
        durations,
        clean,
        shots,
        seed,
        &[("rabi_hz", rabi_frequency), ("drive_freq_hz", f_d)],
    )
}

/// Ramsey fringes with ideal pi/2 pulses: three hyperfine tones at
/// |detuning + m_I A| under the Gaussian t2_star envelope (analytic mode)
/// or a quasi-static Gaussian-detuning ensemble average.
pub fn ramsey_trace(
    cfg: &SpinConfig,
    detuning: f64,
    taus: &[f64],
    shots: u64,
    seed: u64,
    model: DephasingModel,
) -> Result<Trace> {
    cfg.validate()?;
    validate_axis(taus, "taus")?;
    if taus[0] < 0.0 {
        return Err(Error::Domain("taus must be >= 0".into()));
    }
    let tones = [
        detuning - cfg.n14_a_parallel,
        detuning,
        detuning + cfg.n14_a_parallel,
    ];
    let coherence: Vec<f64> = match model {
        DephasingModel::Analytic => taus
            .iter()
            .map(|&tau| {
                let env = (-(tau / cfg.t2_star).powi(2)).exp();
                let fringe: f64 = tones
                    .iter()
                    .map(|&f| (std::f64::consts::TAU * f * tau).cos())
                    .sum::<f64>()
                    / 3.0;
                env * fringe
            })
            .collect(),
        DephasingModel::QuasiStatic { samples } => {
            if samples == 0 {
                return Err(Error::Domain("ensemble needs samples > 0".into()));
            }
            // Shot-to-shot static detuning with angular std sqrt(2)/t2_star
            // reproduces the exp(-(tau/t2_star)^2) envelope on average.
            let sigma_f = 2f64.sqrt() / cfg.t2_star / std::f64::consts::TAU;
            let draws: Vec<f64> = {
                let mut rng = indexed_rng(seed, "ramsey_ensemble", 0);
                (0..samples)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        sigma_f * g
                    })
                    .collect()
            };
            taus.iter()
                .map(|&tau| {
                    let mut acc = 0.0;
                    for &d in &draws {
                        for &f in &tones {
                            acc += (std::f64::consts::TAU * (f + d) * tau).cos();
                        }
                    }
                    acc / (3.0 * samples as f64)
                })
                .collect()
        }
    };
    let clean: Vec<f64> = coherence
        .iter()
        .map(|&m| fluorescence(cfg, &[0.0, (1.0 + m) / 2.0, 0.0]))
        .collect();
    noisy_trace(
        cfg,
        "ramsey_trace",
        AxisKind::Seconds,
        taus,
        clean,
        shots,
        seed,
        &[("detuning_hz", detuning), ("t2_star_s", cfg.t2_star)],
    )
}

/// Echo coherence of the resolved single 13C, from a full unitary
/// simulation of the pi/2 - tau/2 - pi - tau/2 - pi/2 sequence with ideal
/// pulses on the lower branch. `total_time` is the whole free evolution.
fn pair_echo_modulation(cfg: &SpinConfig, total_times: &[f64]) -> Result<Vec<f64>> {
    if cfg.c13.is_none() {
        return Ok(vec![1.0; total_times.len()]);
    }
    let f_d = lower_branch_center(cfg)?;
    let h = build_hamiltonian(
        cfg,
        Some(Drive {
            frequency: f_d,
            rabi_frequency: 0.0,
            phase: 0.0,
        }),
    )?;
    let dim = cfg.dim();
    let nuc = dim / 3;
    // Ideal rotations on the {m_s = 0, m_s = -1} pair, identity elsewhere.
    let rot = |theta: f64| -> CMatrix {
        let mut r = CMatrix::identity(dim, dim);
        let cth = Complex64::new((theta / 2.0).cos(), 0.0);
        let sth = Complex64::new(0.0, -(theta / 2.0).sin());
        for k in 0..nuc {
            let i0 = nuc + k;
            let i1 = 2 * nuc + k;
            r[(i0, i0)] = cth;
            r[(i1, i1)] = cth;
            r[(i0, i1)] = sth;
            r[(i1, i0)] = sth;
        }
        r
    };
    let half = rot(std::f64::consts::FRAC_PI_2);
    let pi = rot(std::f64::consts::PI);
    let eig = h.symmetric_eigen();
    let free = |t: f64| -> CMatrix {
        let mut u = CMatrix::zeros(dim, dim);
        for a in 0..dim {
            let ph = Complex64::from_polar(1.0, -std::f64::consts::TAU * eig.eigenvalues[a] * t);
            for i in 0..dim {
                for j in 0..dim {
                    u[(i, j)] +=
                        eig.eigenvectors[(i, a)] * ph * eig.eigenvectors[(j, a)].conj();
                }
            }
        }
        u
    };
    let rho0 = initial_state(cfg);
    Ok(total_times
        .iter()
        .map(|&t| {
            let u = free(t / 2.0);
            let seq = &half * &u * &pi * &u * &half;
            let rho = &seq * &rho0 * seq.adjoint();
            let p0 = ms_populations(cfg, &rho)[1];
            // Ideal pulses map coherence m to population (1 + m)/2.
            2.0 * p0 - 1.0
        })
        .collect())
}

/// Hahn echo decay sampled at total free-evolution times `total_times`
/// (the spec axis 2 tau): Gaussian t2 envelope x resolved-13C unitary
/// modulation x nuclear-bath revival factor peaking at multiples of the
/// 13C Larmor period.
pub fn hahn_trace(
    cfg: &SpinConfig,
    total_times: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Trace> {
    cfg.validate()?;
    validate_axis(total_times, "total_times")?;
    if total_times[0] < 0.0 {
        return Err(Error::Domain("total_times must be >= 0".into()));
    }
    let f_larmor = cfg.c13_larmor();
    let pair = pair_echo_modulation(cfg, total_times)?;
    let clean: Vec<f64> = total_times
        .iter()
        .zip(&pair)
        .map(|(&t, &m)| {
            let env = (-(t / cfg.t2).powi(2)).exp();
            let s = (std::f64::consts::PI * f_larmor * t).sin();
            let bath = 1.0 - cfg.c13_bath_depth * s.powi(4);
            let coh = env * m * bath;
            fluorescence(cfg, &[0.0, (1.0 + coh) / 2.0, 0.0])
        })
        .collect();
    noisy_trace(
        cfg,
        "hahn_trace",
        AxisKind::Seconds,
        total_times,
        clean,
        shots,
        seed,
        &[
            ("t2_s", cfg.t2),
            ("f_larmor_hz", f_larmor),
            ("bath_depth", cfg.c13_bath_depth),
        ],
    )
}
