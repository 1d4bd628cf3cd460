//! One function per subcommand. Each creates the output directory, writes
//! its data products deterministically, and finishes with a run manifest.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use strainforge_core::budget::{
    cooperativity, coupling_from_strain, phonon_decoherence, thermal_occupation,
};
use strainforge_core::characterize::{characterize, CharacterizeOptions, SynthTargets};
use strainforge_core::device::{load_device_config, DeviceSpec};
use strainforge_core::fitting::models::{DecayingCosine, HahnEcho, Lorentzian, RamseyFringe};
use strainforge_core::fitting::{fit, FitModel};
use strainforge_core::optimizer::{run_ga, GAConfig};
use strainforge_core::phononics::mirror_bands;
use strainforge_core::photonics::{
    optomech_figure, reflection_spectrum, FigureOptions, OpticalStack, SWEEP_MAX, SWEEP_MIN,
};
use strainforge_core::seeding::{derive_seed, task_rng};
use strainforge_core::spinsim::{run_sequence, PulseSequence, SpinConfig};
use strainforge_core::trace::{AxisKind, Trace};
use strainforge_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::{CommonArgs, Format, EXIT_FIT_FAILURE};

fn load_json_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn require_device(common: &CommonArgs) -> Result<(DeviceSpec, PathBuf)> {
    let path = common.config.as_ref().ok_or_else(|| {
        Error::validation("--config", "this subcommand needs a device config file")
    })?;
    Ok((load_device_config(path)?, path.clone()))
}

fn load_spin(common: &CommonArgs, manifest: &mut RunManifest) -> Result<SpinConfig> {
    match &common.spin_config {
        Some(path) => {
            manifest.add_config(path)?;
            let cfg: SpinConfig = load_json_config(path)?;
            cfg.validate()?;
            Ok(cfg)
        }
        None => Ok(SpinConfig::default()),
    }
}

fn prepare_out(common: &CommonArgs) -> Result<()> {
    std::fs::create_dir_all(&common.out)?;
    Ok(())
}

/// Write one trace in the flavor picked by `--format` and record it.
fn emit_trace(
    common: &CommonArgs,
    manifest: &mut RunManifest,
    name: &str,
    trace: &Trace,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> Result<()> {
    let path = match common.format {
        Format::Csv => {
            let p = common.out.join(format!("{name}.csv"));
            trace.save_csv(&p)?;
            p
        }
        Format::Json => {
            let p = common.out.join(format!("{name}.json"));
            save_json(trace, &p)?;
            p
        }
        Format::Svg => {
            let p = common.out.join(format!("{name}.svg"));
            crate::svg::save_trace_svg(trace, &p, title, x_label, y_label)?;
            p
        }
    };
    manifest.add_output(&path);
    Ok(())
}

/// Plain numeric CSV with the shared formatting rules (`%.12e`, LF).
fn write_csv_table(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(header.as_bytes());
    buf.push(b'\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(buf, "{}", line.join(",")).map_err(Error::Io)?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn cmd_bands(common: &CommonArgs) -> Result<u8> {
    prepare_out(common)?;
    let mut manifest = RunManifest::start("bands", common.seed, &common.out);
    let (spec, config_path) = require_device(common)?;
    manifest.add_config(&config_path)?;

    let bands = mirror_bands(&spec)?;
    let mut rows = Vec::new();
    for (i, &k) in bands.k_points.iter().enumerate() {
        for (b, &f) in bands.branches[i].iter().enumerate() {
            rows.push(vec![k, b as f64, f]);
        }
    }
    let bands_path = common.out.join("bands.csv");
    write_csv_table(&bands_path, "k,branch,frequency", &rows)?;
    manifest.add_output(&bands_path);

    let gap_rows: Vec<Vec<f64>> = bands.gaps.iter().map(|&(lo, hi)| vec![lo, hi]).collect();
    let gaps_path = common.out.join("gaps.csv");
    write_csv_table(&gaps_path, "low,high", &gap_rows)?;
    manifest.add_output(&gaps_path);

    // Noiseless reflection spectrum over the full sweep band.
    let stack = OpticalStack::from_device(&spec)?;
    let n = 1301;
    let wavelengths: Vec<f64> = (0..n)
        .map(|i| SWEEP_MIN + (SWEEP_MAX - SWEEP_MIN) * i as f64 / (n - 1) as f64)
        .collect();
    let refl = reflection_spectrum(
        &stack,
        &wavelengths,
        0.0,
        derive_seed(common.seed, "bands/reflection"),
    )?;
    emit_trace(
        common,
        &mut manifest,
        "reflection",
        &refl,
        "reflection spectrum",
        "wavelength (m)",
        "reflectance",
    )?;

    manifest.finish()?;
    Ok(0)
}

pub fn cmd_optimize(common: &CommonArgs, ga_config: Option<&Path>) -> Result<u8> {
    prepare_out(common)?;
    let mut manifest = RunManifest::start("optimize", common.seed, &common.out);
    let (base, config_path) = require_device(common)?;
    manifest.add_config(&config_path)?;

    let mut cfg: GAConfig = match ga_config {
        Some(path) => {
            manifest.add_config(path)?;
            load_json_config(path)?
        }
        None => GAConfig::default(),
    };
    cfg.rng_seed = common.seed;
    cfg.validate()?;

    let result = run_ga(&base, &cfg, FigureOptions::fast())?;

    let history_rows: Vec<Vec<f64>> = result
        .history
        .iter()
        .enumerate()
        .map(|(g, s)| vec![g as f64, s.best, s.median, s.worst])
        .collect();
    let history_path = common.out.join("history.csv");
    write_csv_table(&history_path, "generation,best,median,worst", &history_rows)?;
    manifest.add_output(&history_path);

    let best_path = common.out.join("best_device.json");
    result.best_spec.save_config(&best_path)?;
    manifest.add_output(&best_path);

    let summary_path = common.out.join("result.json");
    save_json(
        &json!({
            "best_fitness": result.best_fitness,
            "generations": result.history.len(),
            "evaluations": result.evaluations,
        }),
        &summary_path,
    )?;
    manifest.add_output(&summary_path);

    manifest.finish()?;
    Ok(0)
}

/// Targets for the round trip: the built-in reference numbers, overridden
/// by the device's own solved modes when a config is given.
fn characterize_targets(common: &CommonArgs, manifest: &mut RunManifest) -> Result<SynthTargets> {
    let mut targets = SynthTargets::default();
    if let Some(path) = &common.config {
        manifest.add_config(path)?;
        let spec = load_device_config(path)?;
        let fig = optomech_figure(&spec, FigureOptions::default())?;
        if !fig.feasible {
            return Err(Error::Numerical(
                "design has no detectable optical resonance or defect mode".into(),
            ));
        }
        targets.q_optical = fig.q_optical;
        if let Some(wl) = fig.optical_wavelength {
            targets.optical_wavelength = wl;
        }
        if let Some(fm) = fig.mechanical_frequency {
            targets.mech_frequency = fm;
        }
        targets.g_hz = coupling_from_strain(fig.epsilon_zp, spec.material.spin_stress_coupling)?;
    }
    Ok(targets)
}

pub fn cmd_characterize(common: &CommonArgs, no_noise: bool) -> Result<u8> {
    prepare_out(common)?;
    let mut manifest = RunManifest::start("characterize", common.seed, &common.out);
    let targets = characterize_targets(common, &mut manifest)?;
    let spin = load_spin(common, &mut manifest)?;
    let opts = CharacterizeOptions {
        noise: !no_noise,
        ..CharacterizeOptions::default()
    };

    let output = characterize(&targets, &spin, &opts, common.seed)?;
    for (name, trace) in &output.traces {
        let (x_label, y_label) = match trace.axis_kind {
            AxisKind::Seconds => ("time (s)", "signal"),
            AxisKind::Hertz => ("frequency (Hz)", "signal"),
            AxisKind::Meters => ("wavelength (m)", "reflectance"),
        };
        emit_trace(common, &mut manifest, name, trace, name, x_label, y_label)?;
    }

    let summary_path = common.out.join("summary.json");
    save_json(
        &json!({
            "targets": targets,
            "summary": output.summary,
        }),
        &summary_path,
    )?;
    manifest.add_output(&summary_path);
    let failed = output.summary.all_failed();
    manifest.finish()?;
    Ok(if failed { EXIT_FIT_FAILURE } else { 0 })
}

pub fn cmd_simulate_spin(common: &CommonArgs, sequence: &Path, shots: u64) -> Result<u8> {
    prepare_out(common)?;
    let mut manifest = RunManifest::start("simulate-spin", common.seed, &common.out);
    let spin = load_spin(common, &mut manifest)?;
    manifest.add_config(sequence)?;
    let seq: PulseSequence = load_json_config(sequence)?;
    seq.validate()?;

    let mut rng = task_rng(common.seed, "simulate-spin");
    let outcome = run_sequence(&spin, &seq, shots, &mut rng)?;
    let out_path = common.out.join("outcome.json");
    save_json(
        &json!({
            "shots": shots,
            "outcome": outcome,
        }),
        &out_path,
    )?;
    manifest.add_output(&out_path);
    manifest.finish()?;
    Ok(0)
}

fn model_by_id(id: &str) -> Result<(Box<dyn FitModel<f64>>, AxisKind)> {
    Ok(match id {
        "lorentzian_dip" => (Box::new(Lorentzian::<f64>::dip()), AxisKind::Hertz),
        "lorentzian_peak" => (Box::new(Lorentzian::<f64>::peak()), AxisKind::Hertz),
        "decaying_cosine" => (Box::new(DecayingCosine::<f64>::new()), AxisKind::Seconds),
        "ramsey_fringe" => (Box::new(RamseyFringe::<f64>::new()), AxisKind::Seconds),
        "hahn_echo" => (Box::new(HahnEcho::<f64>::new()), AxisKind::Seconds),
        other => {
            return Err(Error::validation(
                "--model",
                format!(
                    "unknown model `{other}`; expected lorentzian_dip, lorentzian_peak, \
                     decaying_cosine, ramsey_fringe, or hahn_echo"
                ),
            ))
        }
    })
}

pub fn cmd_fit(common: &CommonArgs, input: &Path, model_id: &str, init: Option<&str>) -> Result<u8> {
    prepare_out(common)?;
    let mut manifest = RunManifest::start("fit", common.seed, &common.out);
    let (model, axis_kind) = model_by_id(model_id)?;
    let trace = Trace::load_csv(input, axis_kind)?;
    manifest.add_config(input)?;
    let init_values: Option<Vec<f64>> = match init {
        Some(text) => Some(serde_json::from_str(text).map_err(|e| {
            Error::validation("--init", format!("must be a JSON array of numbers: {e}"))
        })?),
        None => None,
    };

    let result = fit(model.as_ref(), &trace, init_values.as_deref())?;
    let out_path = common.out.join("fit.json");
    save_json(&result, &out_path)?;
    manifest.add_output(&out_path);
    manifest.finish()?;
    Ok(if result.converged { 0 } else { EXIT_FIT_FAILURE })
}

pub struct BudgetArgs {
    pub g_hz: Option<f64>,
    pub t2_s: Option<f64>,
    pub fm_hz: f64,
    pub qm: f64,
    pub temp_k: f64,
    pub linewidth_hz: Option<f64>,
    pub from_design: bool,
}

pub fn cmd_budget(common: &CommonArgs, args: BudgetArgs) -> Result<u8> {
    prepare_out(common)?;
    let mut manifest = RunManifest::start("budget", common.seed, &common.out);

    // Coupling: either given directly or derived from a design's zero-point
    // strain with the material coupling constant of the chosen qubit.
    let orbital = args.linewidth_hz.is_some();
    let g_hz = if args.from_design {
        let (spec, config_path) = require_device(common)?;
        manifest.add_config(&config_path)?;
        let fig = optomech_figure(&spec, FigureOptions::default())?;
        if !fig.feasible {
            return Err(Error::Numerical(
                "design has no detectable optical resonance or defect mode".into(),
            ));
        }
        let coupling = if orbital {
            spec.material.orbital_strain_coupling
        } else {
            spec.material.spin_stress_coupling
        };
        coupling_from_strain(fig.epsilon_zp, coupling)?
    } else {
        args.g_hz
            .ok_or_else(|| Error::validation("--g-hz", "required unless --from-design is set"))?
    };

    // Qubit decoherence rate: orbital dephasing when a linewidth is given,
    // otherwise the spin-projection 1/T2.
    let gamma_qubit = match args.linewidth_hz {
        Some(lw) => std::f64::consts::TAU * lw,
        None => {
            let t2 = args.t2_s.ok_or_else(|| {
                Error::validation("--t2-s", "required unless --linewidth-hz is given")
            })?;
            if !(t2 > 0.0) {
                return Err(Error::validation("--t2-s", "must be > 0"));
            }
            1.0 / t2
        }
    };

    let gamma_phonon = phonon_decoherence(args.fm_hz, args.qm, args.temp_k)?;
    let n_th = thermal_occupation(args.fm_hz, args.temp_k)?;
    let budget = cooperativity(g_hz, gamma_qubit, gamma_phonon)?;

    // The zero-temperature orbital case is convention-sensitive: with the
    // occupation-free phonon rate it lands two sigma-figures above the
    // finite-temperature value, and published estimates differ on whether
    // to quote it. Flag it rather than silently pick a side.
    let note = if orbital && args.temp_k == 0.0 {
        Some(
            "zero-temperature orbital cooperativity is convention-dependent; \
             compare against a finite-temperature run before quoting it",
        )
    } else {
        None
    };

    let out_path = common.out.join("budget.json");
    save_json(
        &json!({
            "inputs": {
                "g_hz": g_hz,
                "mechanical_frequency_hz": args.fm_hz,
                "mechanical_q": args.qm,
                "temperature_k": args.temp_k,
                "qubit": if orbital { "orbital" } else { "spin" },
            },
            "n_th": n_th,
            "budget": budget,
            "c_gt_1": budget.cooperativity > 1.0,
            "note": note,
        }),
        &out_path,
    )?;
    manifest.add_output(&out_path);
    manifest.finish()?;
    Ok(0)
}
