//! Unit-cell band structure of the 1D longitudinal elastic model.
//!
//! The state vector is (u, F) with F = E A du/dx; each piecewise-constant
//! segment contributes a 2x2 transfer matrix and the Bloch condition reads
//! cos(k a) = tr(T)/2. Frequencies where |tr(T)|/2 > 1 are evanescent at
//! every k, which is what the gap scan looks for.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One piecewise-constant segment of a unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticSegment<R> {
    /// Segment length (m).
    pub length: R,
    /// Cross-sectional area (m^2).
    pub area: R,
    /// Effective axial stiffness (Pa), calibration included.
    pub modulus: R,
    /// Mass density (kg/m^3).
    pub density: R,
}

impl<R: Real> ElasticSegment<R> {
    pub fn sound_speed(&self) -> R {
        (self.modulus / self.density).sqrt()
    }
}

/// Dispersion relation of a periodic patterned beam.
#[derive(Debug, Clone, Serialize)]
pub struct BandStructure {
    /// Bloch wavenumbers over [0, pi/a] (1/m).
    pub k_points: Vec<f64>,
    /// Per-k branch frequencies, sorted ascending (Hz).
    pub branches: Vec<Vec<f64>>,
    /// Non-overlapping (low, high) frequency intervals with no branch (Hz).
    pub gaps: Vec<(f64, f64)>,
    /// Upper edge of the scanned frequency window (Hz).
    pub f_max: f64,
}

impl BandStructure {
    pub fn in_gap(&self, f: f64) -> bool {
        self.gaps.iter().any(|&(lo, hi)| f > lo && f < hi)
    }
}

/// Scan parameters for the band/gap search.
#[derive(Debug, Clone, Copy)]
pub struct BandScan {
    /// Upper frequency of the scan (Hz); `None` picks c_min/a (twice the
    /// first-gap center of a two-segment cell).
    pub f_max: Option<f64>,
    /// Number of scan steps; the scan resolution is f_max / steps.
    pub steps: usize,
}

impl Default for BandScan {
    fn default() -> Self {
        BandScan {
            f_max: None,
            steps: 4096,
        }
    }
}

/// Half-trace of the unit-cell transfer matrix at frequency `f`.
pub fn dispersion_half_trace<R: Real>(cell: &[ElasticSegment<R>], f: R) -> R {
    // Running product of [[t00, t01], [t10, t11]], seeded with identity.
    let mut t00 = R::one();
    let mut t01 = R::zero();
    let mut t10 = R::zero();
    let mut t11 = R::one();
    let omega = R::two_pi() * f;
    for seg in cell {
        let c = seg.sound_speed();
        let k = omega / c;
        let ea = seg.modulus * seg.area;
        let phase = k * seg.length;
        let (s00, s01, s10, s11);
        if phase < R::lit(1e-9) {
            // k -> 0 limit: pure compliance L/(EA).
            s00 = R::one();
            s01 = seg.length / ea;
            s10 = -omega * omega * seg.density * seg.area * seg.length;
            s11 = R::one();
        } else {
            let (sin_p, cos_p) = phase.sin_cos();
            s00 = cos_p;
            s01 = sin_p / (k * ea);
            s10 = -k * ea * sin_p;
            s11 = cos_p;
        }
        let n00 = s00 * t00 + s01 * t10;
        let n01 = s00 * t01 + s01 * t11;
        let n10 = s10 * t00 + s11 * t10;
        let n11 = s10 * t01 + s11 * t11;
        t00 = n00;
        t01 = n01;
        t10 = n10;
        t11 = n11;
    }
    (t00 + t11) / R::lit(2.0)
}

fn validate_cell<R: Real>(cell: &[ElasticSegment<R>]) -> Result<()> {
    if cell.is_empty() {
        return Err(Error::validation("cell", "must contain at least 1 segment"));
    }
    for (i, seg) in cell.iter().enumerate() {
        if !(seg.length > R::zero()) {
            return Err(Error::validation(
                "cell.length",
                format!("segment {i} has non-positive length"),
            ));
        }
        if !(seg.area > R::zero() && seg.modulus > R::zero() && seg.density > R::zero()) {
            return Err(Error::validation(
                "cell.segment",
                format!("segment {i} has non-positive area, modulus, or density"),
            ));
        }
    }
    Ok(())
}

/// Compute the band structure of a unit cell with `n_k` Bloch points.
pub fn phononic_bands(cell: &[ElasticSegment<f64>], n_k: usize) -> Result<BandStructure> {
    phononic_bands_with(cell, n_k, BandScan::default())
}

pub fn phononic_bands_with(
    cell: &[ElasticSegment<f64>],
    n_k: usize,
    scan: BandScan,
) -> Result<BandStructure> {
    validate_cell(cell)?;
    if n_k < 16 {
        return Err(Error::Domain(format!("n_k = {n_k} < 16")));
    }
    let a: f64 = cell.iter().map(|s| s.length).sum();
    let c_min = cell
        .iter()
        .map(|s| s.sound_speed())
        .fold(f64::INFINITY, f64::min);
    let f_max = scan.f_max.unwrap_or(c_min / a);
    let steps = scan.steps.max(64);
    let df = f_max / steps as f64;

    // Precompute the half-trace on the scan grid.
    let delta: Vec<f64> = (0..=steps)
        .map(|i| dispersion_half_trace(cell, i as f64 * df))
        .collect();

    let gaps = scan_gaps(cell, &delta, df);

    let k_points: Vec<f64> = (0..n_k)
        .map(|i| std::f64::consts::PI / a * i as f64 / (n_k - 1) as f64)
        .collect();
    let branches = k_points
        .iter()
        .map(|&k| {
            let target = (k * a).cos();
            let mut roots = Vec::new();
            // The acoustic branch passes through (k=0, f=0) exactly.
            if k == 0.0 {
                roots.push(0.0);
            }
            for i in 0..steps {
                let g0 = delta[i] - target;
                let g1 = delta[i + 1] - target;
                if g0 == 0.0 && i > 0 {
                    roots.push(i as f64 * df);
                } else if g0 * g1 < 0.0 {
                    let f = bisect(
                        |f| dispersion_half_trace(cell, f) - target,
                        i as f64 * df,
                        (i + 1) as f64 * df,
                    );
                    roots.push(f);
                }
            }
            roots.dedup_by(|b, a| (*b - *a).abs() < df * 1e-6);
            roots
        })
        .collect();

    Ok(BandStructure {
        k_points,
        branches,
        gaps,
        f_max,
    })
}

/// Gap intervals: contiguous runs of the scan where |tr|/2 > 1, with edges
/// refined by bisection of |tr|/2 - 1.
fn scan_gaps(cell: &[ElasticSegment<f64>], delta: &[f64], df: f64) -> Vec<(f64, f64)> {
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for (i, &d) in delta.iter().enumerate() {
        let inside = d.abs() > 1.0;
        match (inside, open) {
            (true, None) => {
                let lo = if i == 0 {
                    0.0
                } else {
                    bisect(
                        |f| dispersion_half_trace(cell, f).abs() - 1.0,
                        (i - 1) as f64 * df,
                        i as f64 * df,
                    )
                };
                open = Some(lo);
            }
            (false, Some(lo)) => {
                let hi = bisect(
                    |f| dispersion_half_trace(cell, f).abs() - 1.0,
                    (i - 1) as f64 * df,
                    i as f64 * df,
                );
                gaps.push((lo, hi));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = open {
        gaps.push((lo, (delta.len() - 1) as f64 * df));
    }
    gaps
}

fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if glo * gm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform_cell() -> Vec<ElasticSegment<f64>> {
        vec![ElasticSegment {
            length: 400e-9,
            area: 1e-13,
            modulus: 1.05e12,
            density: 3515.0,
        }]
    }

    fn two_segment_cell(area_ratio: f64) -> Vec<ElasticSegment<f64>> {
        let base = ElasticSegment {
            length: 200e-9,
            area: 1e-13,
            modulus: 1.05e12,
            density: 3515.0,
        };
        vec![
            base,
            ElasticSegment {
                area: base.area * area_ratio,
                ..base
            },
        ]
    }

    #[test]
    fn uniform_cell_has_linear_dispersion_and_no_gap() {
        let cell = uniform_cell();
        let bands = phononic_bands(&cell, 32).unwrap();
        assert!(bands.gaps.is_empty(), "gaps: {:?}", bands.gaps);
        let c = (1.05e12f64 / 3515.0).sqrt();
        assert_relative_eq!(c, 17283.0, max_relative = 1e-4);
        // Acoustic branch f(k) = c k / (2 pi), closed-form oracle.
        for (i, &k) in bands.k_points.iter().enumerate() {
            let f_acoustic = bands.branches[i][0];
            let expect = c * k / std::f64::consts::TAU;
            if k == 0.0 {
                assert_eq!(f_acoustic, 0.0);
            } else {
                assert_relative_eq!(f_acoustic, expect, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn lowest_branch_starts_at_zero() {
        let bands = phononic_bands(&two_segment_cell(2.0), 16).unwrap();
        assert_eq!(bands.branches[0][0], 0.0);
    }

    #[test]
    fn area_contrast_opens_gap_near_half_wave_frequency() {
        let cell = two_segment_cell(2.0);
        let a = 400e-9;
        let c = (1.05e12f64 / 3515.0).sqrt();
        let bands = phononic_bands(&cell, 32).unwrap();
        assert!(!bands.gaps.is_empty());
        let (lo, hi) = bands.gaps[0];
        let center = 0.5 * (lo + hi);
        // Mid-gap of the symmetric two-segment cell sits at c/(2a) exactly.
        assert_relative_eq!(center, c / (2.0 * a), max_relative = 1e-3);

        // Oracle: brute-force dense scan of |tr|/2 crossing 1.
        let steps = 40_000usize;
        let f_max = bands.f_max;
        let df = f_max / steps as f64;
        let mut edges = Vec::new();
        let mut prev = dispersion_half_trace(&cell, 0.0).abs() - 1.0;
        for i in 1..=steps {
            let cur = dispersion_half_trace(&cell, i as f64 * df).abs() - 1.0;
            if prev * cur < 0.0 {
                edges.push(i as f64 * df);
            }
            prev = cur;
        }
        assert!(edges.len() >= 2);
        assert!((edges[0] - lo).abs() <= df + f_max / 4096.0);
        assert!((edges[1] - hi).abs() <= df + f_max / 4096.0);
    }

    #[test]
    fn branches_sorted_and_gaps_disjoint() {
        let bands = phononic_bands(&two_segment_cell(3.0), 24).unwrap();
        for b in &bands.branches {
            assert!(b.windows(2).all(|w| w[0] < w[1]));
        }
        for w in bands.gaps.windows(2) {
            assert!(w[0].1 <= w[1].0);
        }
        for &(lo, hi) in &bands.gaps {
            assert!(lo < hi);
        }
    }

    #[test]
    fn degenerate_segment_rejected() {
        let mut cell = uniform_cell();
        cell[0].length = 0.0;
        assert!(phononic_bands(&cell, 16).is_err());
    }

    #[test]
    fn half_trace_works_at_f32() {
        let cell = [ElasticSegment::<f32> {
            length: 400e-9,
            area: 1e-13,
            modulus: 1.05e12,
            density: 3515.0,
        }];
        let d = dispersion_half_trace(&cell, 1e9f32);
        let d64 = dispersion_half_trace(
            &[ElasticSegment::<f64> {
                length: 400e-9,
                area: 1e-13,
                modulus: 1.05e12,
                density: 3515.0,
            }],
            1e9,
        );
        assert!((d as f64 - d64).abs() < 1e-3, "{d} vs {d64}");
    }
}
