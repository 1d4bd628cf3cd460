//! Parametric geometry and material configuration of the patterned nanobeam.
//!
//! Everything downstream (band structures, eigenmodes, optical stacks, the
//! genetic search) consumes the types defined here. All values are stored in
//! SI units internally; unit conversion happens once, at config load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Material constants plus the two documented model-calibration knobs.
///
/// The spin/orbital couplings per strain stand in for the stress-coupling
/// formalisms of the literature; they are configuration constants, not derived
/// quantities. `stiffness_calibration` scales the effective axial stiffness of
/// the reduced 1D elastic model and `optical_loss_index` is the imaginary part
/// added to the diamond refractive index to model intrinsic optical loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Young's modulus (Pa).
    pub youngs_modulus: f64,
    /// Mass density (kg/m^3).
    pub density: f64,
    /// Real refractive index of the bulk material.
    pub refractive_index: f64,
    /// Ground-state spin coupling per unit strain (Hz/strain).
    pub spin_stress_coupling: f64,
    /// Orbital excited-state coupling per unit strain (Hz/strain).
    pub orbital_strain_coupling: f64,
    /// Dimensionless factor on the effective axial stiffness of the 1D model.
    #[serde(default = "default_one")]
    pub stiffness_calibration: f64,
    /// Imaginary refractive-index component of the bulk material.
    #[serde(default)]
    pub optical_loss_index: f64,
}

fn default_one() -> f64 {
    1.0
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("material.youngs_modulus", self.youngs_modulus),
            ("material.density", self.density),
            ("material.refractive_index", self.refractive_index),
            ("material.spin_stress_coupling", self.spin_stress_coupling),
            (
                "material.orbital_strain_coupling",
                self.orbital_strain_coupling,
            ),
            ("material.stiffness_calibration", self.stiffness_calibration),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(name, "must be strictly positive"));
            }
        }
        if self.refractive_index <= 1.0 {
            return Err(Error::validation(
                "material.refractive_index",
                "must be > 1",
            ));
        }
        if self.optical_loss_index < 0.0 {
            return Err(Error::validation("material.optical_loss_index", "must be >= 0"));
        }
        Ok(())
    }

    /// Longitudinal sound speed sqrt(E/rho) of the bulk material (m/s).
    pub fn sound_speed(&self) -> f64 {
        (self.youngs_modulus / self.density).sqrt()
    }

    /// Effective sound speed of the reduced 1D model, including calibration.
    pub fn effective_sound_speed(&self) -> f64 {
        (self.stiffness_calibration * self.youngs_modulus / self.density).sqrt()
    }

    /// Effective Young's modulus of the reduced 1D model (Pa).
    pub fn effective_stiffness(&self) -> f64 {
        self.stiffness_calibration * self.youngs_modulus
    }
}

/// Parametric geometry of the patterned beam: mirror cells on both sides
/// ramping adiabatically through transition cells into a single defect cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    /// Unit-cell lattice constant (m).
    pub lattice_constant: f64,
    /// Out-of-plane thickness (m).
    pub thickness: f64,
    /// In-plane beam width (m).
    pub beam_width: f64,
    /// Mirror cells per side.
    pub mirror_cell_count: u32,
    /// Transition cells per side.
    pub transition_cell_count: u32,
    /// Per-segment area fill fractions of a mirror cell, in (0, 1].
    pub fill_mirror: [f64; 2],
    /// Per-segment area fill fractions the defect cell interpolates toward.
    pub fill_defect: [f64; 2],
    /// Amplitude of the mirror -> defect interpolation, in [0, 1].
    pub defect_perturbation: f64,
    /// NV site along the beam axis, measured from the left clamp (m).
    pub nv_position: f64,
    pub material: MaterialParams,
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        let positive = [
            ("geometry.lattice_constant", self.lattice_constant),
            ("geometry.thickness", self.thickness),
            ("geometry.beam_width", self.beam_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(name, "must be strictly positive"));
            }
        }
        if self.mirror_cell_count < 1 {
            return Err(Error::validation(
                "geometry.mirror_cell_count",
                "must be >= 1",
            ));
        }
        for (name, fills) in [
            ("geometry.fill_mirror", &self.fill_mirror),
            ("geometry.fill_defect", &self.fill_defect),
        ] {
            for f in fills.iter() {
                if !(*f > 0.0 && *f <= 1.0) {
                    return Err(Error::validation(name, "fill fractions must be in (0, 1]"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.defect_perturbation) {
            return Err(Error::validation(
                "geometry.defect_perturbation",
                "must be in [0, 1]",
            ));
        }
        let length = self.beam_length();
        if !(self.nv_position > 0.0 && self.nv_position < length) {
            return Err(Error::validation(
                "nv.position",
                format!("must lie inside the beam (0, {length:.3e})"),
            ));
        }
        Ok(())
    }

    /// Total number of unit cells: mirror | transition | defect | transition | mirror.
    pub fn cell_count(&self) -> usize {
        2 * self.mirror_cell_count as usize + 2 * self.transition_cell_count as usize + 1
    }

    pub fn beam_length(&self) -> f64 {
        self.cell_count() as f64 * self.lattice_constant
    }

    /// Interpolation weights of every cell along the beam; 0 = pure mirror,
    /// `defect_perturbation` at the center cell, linear ramp in between.
    pub fn cell_weights(&self) -> Vec<f64> {
        let m = self.mirror_cell_count as usize;
        let t = self.transition_cell_count as usize;
        let eta = self.defect_perturbation;
        let mut w = Vec::with_capacity(self.cell_count());
        w.extend(std::iter::repeat(0.0).take(m));
        for j in 1..=t {
            w.push(eta * j as f64 / (t + 1) as f64);
        }
        w.push(eta);
        for j in (1..=t).rev() {
            w.push(eta * j as f64 / (t + 1) as f64);
        }
        w.extend(std::iter::repeat(0.0).take(m));
        w
    }

    /// Fill fractions of the two segments of a cell with interpolation weight `w`.
    pub fn cell_fills(&self, w: f64) -> [f64; 2] {
        [
            self.fill_mirror[0] + w * (self.fill_defect[0] - self.fill_mirror[0]),
            self.fill_mirror[1] + w * (self.fill_defect[1] - self.fill_mirror[1]),
        ]
    }

    /// Fill fraction of every half-cell segment, left clamp to right clamp.
    /// The list is mirror-symmetric about the beam center: the left half
    /// lays each cell as [low, high] and the right half is its reflection,
    /// so the center cell is uniform at its low fill.
    pub fn segment_fills(&self) -> Vec<f64> {
        let weights = self.cell_weights();
        let center = weights.len() / 2;
        let mut left = Vec::with_capacity(weights.len());
        for &w in &weights[..center] {
            let [f0, f1] = self.cell_fills(w);
            left.push(f0);
            left.push(f1);
        }
        left.push(self.cell_fills(weights[center])[0]);
        let mut fills = left.clone();
        fills.extend(left.iter().rev());
        fills
    }

    /// Cross-sectional area of a segment with the given fill fraction (m^2).
    pub fn segment_area(&self, fill: f64) -> f64 {
        fill * self.beam_width * self.thickness
    }

    /// Span of the non-mirror (transition + defect) region, used as the
    /// localization window: (start, end) in meters from the left clamp.
    pub fn defect_region(&self) -> (f64, f64) {
        let m = self.mirror_cell_count as f64;
        let t = self.transition_cell_count as f64;
        let a = self.lattice_constant;
        (m * a, (m + 2.0 * t + 1.0) * a)
    }

    /// Scale all in-plane lengths by `factor`; thickness and fills unchanged.
    pub fn scale_geometry(&self, factor: f64) -> Result<DeviceSpec> {
        if !(0.5..=2.0).contains(&factor) {
            return Err(Error::Domain(format!(
                "scale factor {factor} outside [0.5, 2.0]"
            )));
        }
        let mut scaled = self.clone();
        scaled.lattice_constant *= factor;
        scaled.beam_width *= factor;
        scaled.nv_position *= factor;
        Ok(scaled)
    }

    /// Serialize as a normalized SI config (units block "m"/"Hz").
    pub fn to_config_json(&self) -> String {
        let cfg = DeviceConfigFile {
            units: UnitsBlock {
                length: LengthUnit::M,
                frequency: FrequencyUnit::Hz,
            },
            material: MaterialBlock {
                youngs_modulus: self.material.youngs_modulus,
                density: self.material.density,
                refractive_index: self.material.refractive_index,
                spin_stress_coupling: self.material.spin_stress_coupling,
                orbital_strain_coupling: self.material.orbital_strain_coupling,
                stiffness_calibration: self.material.stiffness_calibration,
                optical_loss_index: self.material.optical_loss_index,
            },
            geometry: GeometryBlock {
                lattice_constant: self.lattice_constant,
                thickness: self.thickness,
                beam_width: self.beam_width,
                mirror_cell_count: self.mirror_cell_count,
                transition_cell_count: self.transition_cell_count,
                fill_mirror: self.fill_mirror,
                fill_defect: self.fill_defect,
                defect_perturbation: self.defect_perturbation,
            },
            nv: NvBlock {
                position: self.nv_position,
            },
        };
        serde_json::to_string_pretty(&cfg).expect("device config serialization") + "\n"
    }

    pub fn save_config(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_json())?;
        Ok(())
    }
}

// --- config file schema -----------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum LengthUnit {
    #[serde(rename = "nm")]
    Nm,
    #[serde(rename = "um")]
    Um,
    #[serde(rename = "m")]
    M,
}

impl LengthUnit {
    fn to_meters(self) -> f64 {
        match self {
            LengthUnit::Nm => 1e-9,
            LengthUnit::Um => 1e-6,
            LengthUnit::M => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum FrequencyUnit {
    #[serde(rename = "GHz")]
    GHz,
    #[serde(rename = "Hz")]
    Hz,
}

impl FrequencyUnit {
    fn to_hertz(self) -> f64 {
        match self {
            FrequencyUnit::GHz => 1e9,
            FrequencyUnit::Hz => 1.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsBlock {
    length: LengthUnit,
    frequency: FrequencyUnit,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialBlock {
    youngs_modulus: f64,
    density: f64,
    refractive_index: f64,
    /// Scaled by the frequency unit (Hz/strain or GHz/strain).
    spin_stress_coupling: f64,
    orbital_strain_coupling: f64,
    #[serde(default = "default_one")]
    stiffness_calibration: f64,
    #[serde(default)]
    optical_loss_index: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryBlock {
    lattice_constant: f64,
    thickness: f64,
    beam_width: f64,
    mirror_cell_count: u32,
    transition_cell_count: u32,
    fill_mirror: [f64; 2],
    fill_defect: [f64; 2],
    defect_perturbation: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NvBlock {
    position: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceConfigFile {
    units: UnitsBlock,
    material: MaterialBlock,
    geometry: GeometryBlock,
    nv: NvBlock,
}

/// Parse and validate a device config; all units normalized to SI.
pub fn load_device_config(path: &Path) -> Result<DeviceSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_device_config(&text, &path.display().to_string())
}

/// Parse a device config from a JSON string (path used for error messages).
pub fn parse_device_config(text: &str, path: &str) -> Result<DeviceSpec> {
    let cfg: DeviceConfigFile = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: path.to_string(),
        message: format!("line {} column {}: {}", e.line(), e.column(), e),
    })?;
    let lm = cfg.units.length.to_meters();
    let fh = cfg.units.frequency.to_hertz();
    let spec = DeviceSpec {
        lattice_constant: cfg.geometry.lattice_constant * lm,
        thickness: cfg.geometry.thickness * lm,
        beam_width: cfg.geometry.beam_width * lm,
        mirror_cell_count: cfg.geometry.mirror_cell_count,
        transition_cell_count: cfg.geometry.transition_cell_count,
        fill_mirror: cfg.geometry.fill_mirror,
        fill_defect: cfg.geometry.fill_defect,
        defect_perturbation: cfg.geometry.defect_perturbation,
        nv_position: cfg.nv.position * lm,
        material: MaterialParams {
            youngs_modulus: cfg.material.youngs_modulus,
            density: cfg.material.density,
            refractive_index: cfg.material.refractive_index,
            spin_stress_coupling: cfg.material.spin_stress_coupling * fh,
            orbital_strain_coupling: cfg.material.orbital_strain_coupling * fh,
            stiffness_calibration: cfg.material.stiffness_calibration,
            optical_loss_index: cfg.material.optical_loss_index,
        },
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn sample_config_m() -> String {
        r#"{
            "units": {"length": "m", "frequency": "Hz"},
            "material": {
                "youngs_modulus": 1.05e12,
                "density": 3515.0,
                "refractive_index": 2.4,
                "spin_stress_coupling": 2e10,
                "orbital_strain_coupling": 1e15
            },
            "geometry": {
                "lattice_constant": 4.0e-7,
                "thickness": 2.0e-7,
                "beam_width": 5.0e-7,
                "mirror_cell_count": 6,
                "transition_cell_count": 3,
                "fill_mirror": [0.35, 0.95],
                "fill_defect": [0.6, 0.8],
                "defect_perturbation": 1.0
            },
            "nv": {"position": 3.8e-6}
        }"#
        .to_string()
    }

    fn sample_config_nm() -> String {
        sample_config_m()
            .replace(r#""length": "m""#, r#""length": "nm""#)
            .replace("4.0e-7", "400.0")
            .replace("2.0e-7", "200.0")
            .replace("5.0e-7", "500.0")
            .replace("3.8e-6", "3800.0")
    }

    #[test]
    fn loads_nominal_config_with_200nm_thickness() {
        let spec = parse_device_config(&sample_config_nm(), "test").unwrap();
        assert_relative_eq!(spec.thickness, 200e-9, max_relative = 1e-15);
    }

    #[test]
    fn unit_normalization_is_consistent() {
        let m = parse_device_config(&sample_config_m(), "m").unwrap();
        let nm = parse_device_config(&sample_config_nm(), "nm").unwrap();
        assert_relative_eq!(m.lattice_constant, nm.lattice_constant, max_relative = 1e-15);
        assert_relative_eq!(m.nv_position, nm.nv_position, max_relative = 1e-15);
        assert_relative_eq!(m.beam_width, nm.beam_width, max_relative = 1e-15);
    }

    #[test]
    fn zero_fill_fraction_is_rejected() {
        let bad = sample_config_m().replace("[0.35, 0.95]", "[0.0, 0.95]");
        let err = parse_device_config(&bad, "test").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = sample_config_m().replace(r#""nv""#, r#""extra": 1, "nv""#);
        let err = parse_device_config(&bad, "test").unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn load_serialize_load_is_a_fixed_point() {
        let spec = parse_device_config(&sample_config_m(), "test").unwrap();
        let text = spec.to_config_json();
        let again = parse_device_config(&text, "round").unwrap();
        // Bit-identical: serde_json round-trips f64 exactly and the SI config
        // applies unit factors of exactly 1.0.
        assert_eq!(spec, again);
        assert_eq!(text, again.to_config_json());
    }

    #[test]
    fn scale_identity_and_group_property() {
        let spec = parse_device_config(&sample_config_m(), "test").unwrap();
        assert_eq!(spec.scale_geometry(1.0).unwrap(), spec);

        let up = spec.scale_geometry(1.075).unwrap();
        assert_relative_eq!(up.lattice_constant, spec.lattice_constant * 1.075);
        assert_eq!(up.thickness, spec.thickness);

        let back = up.scale_geometry(1.0 / 1.075).unwrap();
        assert_relative_eq!(back.lattice_constant, spec.lattice_constant, max_relative = 1e-12);
        assert_relative_eq!(back.beam_width, spec.beam_width, max_relative = 1e-12);
        assert_relative_eq!(back.nv_position, spec.nv_position, max_relative = 1e-12);

        let ab = spec
            .scale_geometry(1.2)
            .unwrap()
            .scale_geometry(0.9)
            .unwrap();
        let prod = spec.scale_geometry(1.2 * 0.9).unwrap();
        assert_relative_eq!(ab.lattice_constant, prod.lattice_constant, max_relative = 1e-12);

        assert!(spec.scale_geometry(2.5).is_err());
    }

    #[test]
    fn cell_weights_are_symmetric_and_peak_at_center() {
        let spec = parse_device_config(&sample_config_m(), "test").unwrap();
        let w = spec.cell_weights();
        assert_eq!(w.len(), spec.cell_count());
        let n = w.len();
        for i in 0..n {
            assert_eq!(w[i], w[n - 1 - i]);
        }
        assert_eq!(w[n / 2], spec.defect_perturbation);
        assert_eq!(w[0], 0.0);
    }
}
