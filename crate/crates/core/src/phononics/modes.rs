//! Finite-structure eigenmodes of the patterned beam.
//!
//! The full structure (mirror | transition | defect | transition | mirror,
//! clamped ends) is meshed with piecewise-linear axial elements, assembled
//! into a tridiagonal stiffness/mass pencil, and solved with the bisection
//! eigensolver. Modes whose frequency falls inside a mirror band gap and
//! whose energy is mostly in the defect region are flagged as defect modes.

use serde::Serialize;

use crate::consts::HBAR;
use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::phononics::bands::{phononic_bands_with, BandScan, BandStructure, ElasticSegment};
use crate::phononics::eigen::{lowest_eigenpairs, Tridiag};

/// A mechanical eigenmode of the finite structure.
#[derive(Debug, Clone, Serialize)]
pub struct MechanicalMode {
    /// Eigenfrequency (Hz).
    pub frequency: f64,
    /// Node positions along the beam (m), clamps included.
    pub profile_x: Vec<f64>,
    /// Axial displacement at the nodes, normalized to max |u| = 1.
    pub profile_u: Vec<f64>,
    /// Modal mass under that normalization (kg).
    pub effective_mass: f64,
    /// Zero-point displacement sqrt(hbar / (2 m_eff omega)) (m).
    pub x_zp: f64,
    /// Fraction of mode energy inside the defect (non-mirror) region.
    pub localization: f64,
    /// Frequency lies in a mirror gap and localization > 0.5.
    pub defect_mode: bool,
}

/// Mirror-cell segments of a device (the repeating unit at weight 0).
pub fn mirror_cell(spec: &DeviceSpec) -> Vec<ElasticSegment<f64>> {
    cell_segments(spec, 0.0)
}

fn cell_segments(spec: &DeviceSpec, weight: f64) -> Vec<ElasticSegment<f64>> {
    let fills = spec.cell_fills(weight);
    let half = spec.lattice_constant / 2.0;
    fills
        .iter()
        .map(|&f| ElasticSegment {
            length: half,
            area: spec.segment_area(f),
            modulus: spec.material.effective_stiffness(),
            density: spec.material.density,
        })
        .collect()
}

/// All segments of the full structure, left clamp to right clamp; the fill
/// pattern is mirror-symmetric about the beam center.
pub fn full_structure(spec: &DeviceSpec) -> Vec<ElasticSegment<f64>> {
    let half = spec.lattice_constant / 2.0;
    spec.segment_fills()
        .iter()
        .map(|&f| ElasticSegment {
            length: half,
            area: spec.segment_area(f),
            modulus: spec.material.effective_stiffness(),
            density: spec.material.density,
        })
        .collect()
}

struct Mesh {
    /// Node coordinates, clamps included.
    x: Vec<f64>,
    /// Per-element area (m^2); element i spans nodes i..i+1.
    area: Vec<f64>,
    modulus: f64,
    density: f64,
}

fn build_mesh(spec: &DeviceSpec, elements_per_cell: usize) -> Result<Mesh> {
    if elements_per_cell < 8 {
        return Err(Error::Domain(format!(
            "elements_per_cell = {elements_per_cell} < 8"
        )));
    }
    let per_segment = elements_per_cell.div_ceil(2);
    let segments = full_structure(spec);
    for (i, s) in segments.iter().enumerate() {
        if !(s.area > 0.0) {
            return Err(Error::validation(
                "geometry",
                format!("zero-area segment {i} in assembly"),
            ));
        }
    }
    let mut x = vec![0.0];
    let mut area = Vec::new();
    for seg in &segments {
        let h = seg.length / per_segment as f64;
        let x0 = *x.last().unwrap();
        for e in 0..per_segment {
            x.push(x0 + (e + 1) as f64 * h);
            area.push(seg.area);
        }
    }
    Ok(Mesh {
        x,
        area,
        modulus: spec.material.effective_stiffness(),
        density: spec.material.density,
    })
}

fn assemble(mesh: &Mesh) -> (Tridiag, Tridiag) {
    // Interior DOFs only: clamped (u = 0) at both ends.
    let n_nodes = mesh.x.len();
    let n = n_nodes - 2;
    let mut kd = vec![0.0; n];
    let mut ko = vec![0.0; n - 1];
    let mut md = vec![0.0; n];
    let mut mo = vec![0.0; n - 1];
    for el in 0..mesh.area.len() {
        let h = mesh.x[el + 1] - mesh.x[el];
        let ke = mesh.modulus * mesh.area[el] / h;
        let me = mesh.density * mesh.area[el] * h / 6.0;
        for node in [el, el + 1] {
            if node >= 1 && node <= n_nodes - 2 {
                let i = node - 1;
                kd[i] += ke;
                md[i] += 2.0 * me;
            }
        }
        if el >= 1 && el + 1 <= n_nodes - 2 {
            let i = el - 1;
            ko[i] -= ke;
            mo[i] += me;
        }
    }
    (
        Tridiag { diag: kd, off: ko },
        Tridiag { diag: md, off: mo },
    )
}

/// Mechanical eigenmodes of the full clamped structure, sorted by frequency.
///
/// Modes are computed up to 1.25x the top of the highest mirror gap (or
/// 1.5x the first-gap-center frequency scale when the mirror has no gap).
pub fn localized_modes(spec: &DeviceSpec, elements_per_cell: usize) -> Result<Vec<MechanicalMode>> {
    spec.validate()?;
    let bands = mirror_bands(spec)?;
    localized_modes_with_bands(spec, elements_per_cell, &bands)
}

/// Band structure of the mirror cell with the default scan.
pub fn mirror_bands(spec: &DeviceSpec) -> Result<BandStructure> {
    phononic_bands_with(&mirror_cell(spec), 64, BandScan::default())
}

/// Same as [`localized_modes`] but reusing a precomputed mirror band structure.
pub fn localized_modes_with_bands(
    spec: &DeviceSpec,
    elements_per_cell: usize,
    bands: &BandStructure,
) -> Result<Vec<MechanicalMode>> {
    let mesh = build_mesh(spec, elements_per_cell)?;
    let (k, m) = assemble(&mesh);

    let c = spec.material.effective_sound_speed();
    let f_scale = c / (2.0 * spec.lattice_constant);
    let f_limit = bands
        .gaps
        .iter()
        .map(|g| g.1)
        .fold(0.0f64, f64::max)
        .max(f_scale)
        * 1.25;
    let omega_max = std::f64::consts::TAU * f_limit;
    let pairs = lowest_eigenpairs(&k, &m, omega_max * omega_max, 400)?;

    let (defect_lo, defect_hi) = spec.defect_region();
    let mut modes = Vec::with_capacity(pairs.len());
    for p in pairs {
        let frequency = p.lambda.sqrt() / std::f64::consts::TAU;
        // Embed the clamped DOFs back into the full node vector.
        let mut u = Vec::with_capacity(mesh.x.len());
        u.push(0.0);
        u.extend_from_slice(&p.vector);
        u.push(0.0);
        // Normalize to max |u| = 1 with the peak positive.
        let (mut imax, mut umax) = (0usize, 0.0f64);
        for (i, &v) in u.iter().enumerate() {
            if v.abs() > umax {
                umax = v.abs();
                imax = i;
            }
        }
        let sign = if u[imax] < 0.0 { -1.0 } else { 1.0 };
        u.iter_mut().for_each(|v| *v *= sign / umax);

        // Modal mass and localization from the element-wise energy integral
        // of rho A u^2 (consistent with the assembled mass matrix).
        let mut mass_total = 0.0;
        let mut mass_defect = 0.0;
        for el in 0..mesh.area.len() {
            let h = mesh.x[el + 1] - mesh.x[el];
            let me = mesh.density * mesh.area[el] * h / 6.0;
            let (u0, u1) = (u[el], u[el + 1]);
            let dm = me * (2.0 * u0 * u0 + 2.0 * u1 * u1 + 2.0 * u0 * u1);
            mass_total += dm;
            let xm = 0.5 * (mesh.x[el] + mesh.x[el + 1]);
            if xm > defect_lo && xm < defect_hi {
                mass_defect += dm;
            }
        }
        let localization = mass_defect / mass_total;
        let x_zp = (HBAR / (2.0 * mass_total * std::f64::consts::TAU * frequency)).sqrt();
        let defect_mode = bands.in_gap(frequency) && localization > 0.5;
        modes.push(MechanicalMode {
            frequency,
            profile_x: mesh.x.clone(),
            profile_u: u,
            effective_mass: mass_total,
            x_zp,
            localization,
            defect_mode,
        });
    }
    Ok(modes)
}

impl MechanicalMode {
    /// Axial strain of the zero-point motion at `position` (m from the left
    /// clamp): |du/dx| by central finite difference, times x_zp.
    pub fn zero_point_strain(&self, position: f64) -> Result<f64> {
        let x = &self.profile_x;
        let n = x.len();
        if !(position >= x[0] && position <= x[n - 1]) {
            return Err(Error::Domain(format!(
                "position {position:.3e} outside beam [{:.3e}, {:.3e}]",
                x[0],
                x[n - 1]
            )));
        }
        // Central-difference strain at interior nodes, linearly interpolated.
        let strain_at = |i: usize| -> f64 {
            if i == 0 {
                (self.profile_u[1] - self.profile_u[0]) / (x[1] - x[0])
            } else if i == n - 1 {
                (self.profile_u[n - 1] - self.profile_u[n - 2]) / (x[n - 1] - x[n - 2])
            } else {
                (self.profile_u[i + 1] - self.profile_u[i - 1]) / (x[i + 1] - x[i - 1])
            }
        };
        let j = match x.binary_search_by(|v| v.partial_cmp(&position).unwrap()) {
            Ok(j) => j,
            Err(j) => j.saturating_sub(1).min(n - 2),
        };
        let grad = if j >= n - 1 {
            strain_at(n - 1)
        } else {
            let t = (position - x[j]) / (x[j + 1] - x[j]);
            strain_at(j) * (1.0 - t) + strain_at(j + 1) * t
        };
        Ok(grad.abs() * self.x_zp)
    }
}

/// The flagged defect modes of a device, sorted by frequency.
pub fn defect_modes(modes: &[MechanicalMode]) -> Vec<&MechanicalMode> {
    modes.iter().filter(|m| m.defect_mode).collect()
}
