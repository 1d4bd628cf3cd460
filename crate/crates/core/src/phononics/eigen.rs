//! Generalized symmetric tridiagonal eigensolver for the assembled 1D
//! stiffness/mass pencil (K, M), M positive definite.
//!
//! Eigenvalues are isolated by bisection on the inertia of K - lambda M
//! (negative count of the LDL^T pivots of a tridiagonal matrix), then
//! eigenvectors are recovered by shifted inverse iteration with a pivoted
//! tridiagonal solve. Everything is deterministic: fixed starting vectors,
//! fixed iteration counts, fixed reduction order.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix: `diag` length n, `off` length n-1.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }
}

/// Number of eigenvalues of the pencil (K, M) strictly below `lambda`.
pub fn inertia_below(k: &Tridiag, m: &Tridiag, lambda: f64) -> usize {
    let n = k.n();
    let mut count = 0usize;
    let mut d_prev = 0.0f64;
    for i in 0..n {
        let a = k.diag[i] - lambda * m.diag[i];
        let mut d = a;
        if i > 0 {
            let e = k.off[i - 1] - lambda * m.off[i - 1];
            d -= e * e / d_prev;
        }
        if d == 0.0 {
            // Nudge exact zeros off the pivot; standard Sturm-count guard.
            d = f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
        d_prev = d;
    }
    count
}

/// The `index`-th (0-based) eigenvalue of the pencil within [0, hi].
fn bisect_eigenvalue(k: &Tridiag, m: &Tridiag, index: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if inertia_below(k, m, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solve (T) x = b for tridiagonal T given as (diag, off), with partial
/// pivoting between adjacent rows so near-singular shifts stay stable.
fn solve_tridiag(diag: &[f64], off: &[f64], b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Band storage: d = (i,i), e = (i,i+1), f = (i,i+2) fill-in from pivoting,
    // l = (i+1,i). e and f are zero-padded to length n.
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut f = vec![0.0; n];
    let mut l = off.to_vec();
    let mut rhs = b.to_vec();
    for i in 0..n - 1 {
        if l[i].abs() > d[i].abs() {
            // Swap rows i and i+1 over columns (i, i+1, i+2).
            let (ri_d, ri_e, ri_f) = (d[i], e[i], f[i]);
            d[i] = l[i];
            e[i] = d[i + 1];
            f[i] = e[i + 1];
            l[i] = ri_d;
            d[i + 1] = ri_e;
            e[i + 1] = ri_f;
            rhs.swap(i, i + 1);
        }
        let piv = if d[i] == 0.0 { f64::MIN_POSITIVE } else { d[i] };
        let factor = l[i] / piv;
        d[i + 1] -= factor * e[i];
        e[i + 1] -= factor * f[i];
        rhs[i + 1] -= factor * rhs[i];
    }
    // Back substitution.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= e[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= f[i] * x[i + 2];
        }
        let piv = if d[i] == 0.0 { f64::MIN_POSITIVE } else { d[i] };
        x[i] = v / piv;
    }
    x
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn m_inner(m: &Tridiag, x: &[f64], y: &[f64]) -> f64 {
    m.mul(x).iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Eigenpair of the generalized pencil.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// lambda = omega^2 (rad^2/s^2).
    pub lambda: f64,
    /// Eigenvector, Euclidean-normalized.
    pub vector: Vec<f64>,
}

/// Lowest eigenpairs of (K, M) with eigenvalue below `lambda_max`,
/// at most `max_modes` of them, sorted ascending.
pub fn lowest_eigenpairs(
    k: &Tridiag,
    m: &Tridiag,
    lambda_max: f64,
    max_modes: usize,
) -> Result<Vec<EigenPair>> {
    let n = k.n();
    if n == 0 {
        return Err(Error::Numerical("empty eigenproblem".into()));
    }
    if m.diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::validation("mass", "singular assembly: non-positive mass diagonal"));
    }
    let count = inertia_below(k, m, lambda_max).min(max_modes).min(n);
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(count);
    for j in 0..count {
        let lambda = bisect_eigenvalue(k, m, j, 0.0, lambda_max);
        // Shifted inverse iteration on (K - sigma M) x = M x.
        let sigma = lambda * (1.0 - 1e-9) - 1e-30;
        let sd: Vec<f64> = (0..n).map(|i| k.diag[i] - sigma * m.diag[i]).collect();
        let so: Vec<f64> = (0..n - 1).map(|i| k.off[i] - sigma * m.off[i]).collect();
        // Deterministic, mode-dependent start vector.
        let mut x: Vec<f64> = (0..n)
            .map(|i| (((i + 1) * (j + 2)) as f64 * 0.7548776662).sin() + 0.01)
            .collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        for _ in 0..4 {
            // Project out previously found near-degenerate modes (M-inner).
            for p in pairs.iter().rev() {
                if (p.lambda - lambda).abs() < 1e-6 * lambda.abs().max(1.0) {
                    let c = m_inner(m, &p.vector, &x) / m_inner(m, &p.vector, &p.vector);
                    x.iter_mut().zip(&p.vector).for_each(|(v, pv)| *v -= c * pv);
                } else {
                    break;
                }
            }
            let b = m.mul(&x);
            x = solve_tridiag(&sd, &so, &b);
            let nx = norm(&x);
            if !(nx.is_finite() && nx > 0.0) {
                return Err(Error::Numerical(format!(
                    "inverse iteration diverged at mode {j}"
                )));
            }
            x.iter_mut().for_each(|v| *v /= nx);
        }
        // Rayleigh quotient refines the bisected eigenvalue.
        let kx = k.mul(&x);
        let num: f64 = kx.iter().zip(&x).map(|(a, b)| a * b).sum();
        let den = m_inner(m, &x, &x);
        let lambda_rq = num / den;
        // Fixed sign convention: largest-magnitude entry positive.
        let (mut imax, mut vmax) = (0usize, 0.0f64);
        for (i, &v) in x.iter().enumerate() {
            if v.abs() > vmax {
                vmax = v.abs();
                imax = i;
            }
        }
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        pairs.push(EigenPair {
            lambda: lambda_rq,
            vector: x,
        });
    }
    pairs.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// Clamped-clamped uniform bar assembled with linear elements.
    fn bar_pencil(n_el: usize, length: f64, ea: f64, rho_a: f64) -> (Tridiag, Tridiag) {
        let h = length / n_el as f64;
        let n = n_el - 1; // interior nodes
        let mut kd = vec![0.0; n];
        let mut ko = vec![0.0; n.saturating_sub(1)];
        let mut md = vec![0.0; n];
        let mut mo = vec![0.0; n.saturating_sub(1)];
        let ke = ea / h;
        let me = rho_a * h / 6.0;
        for el in 0..n_el {
            // Global nodes el, el+1; interior index = node-1.
            for (local, node) in [(0usize, el), (1usize, el + 1)] {
                if node == 0 || node == n_el {
                    continue;
                }
                let i = node - 1;
                kd[i] += ke;
                md[i] += 2.0 * me;
                let _ = local;
            }
            if el >= 1 && el + 1 <= n_el - 1 {
                let i = el - 1;
                if i + 1 < n {
                    ko[i] += -ke;
                    mo[i] += me;
                }
            }
        }
        (
            Tridiag { diag: kd, off: ko },
            Tridiag { diag: md, off: mo },
        )
    }

    #[test]
    fn clamped_bar_matches_closed_form() {
        // f_n = n c / (2 L); default material, L = 10 um.
        let e: f64 = 1.05e12;
        let rho = 3515.0;
        let area = 1e-13;
        let length = 10e-6;
        let c = (e / rho).sqrt();
        let (k, m) = bar_pencil(64, length, e * area, rho * area);
        let omega_max = std::f64::consts::TAU * 5.0 * c / (2.0 * length);
        let pairs = lowest_eigenpairs(&k, &m, omega_max * omega_max, 8).unwrap();
        assert!(pairs.len() >= 4);
        for (n, p) in pairs.iter().take(4).enumerate() {
            let f = p.lambda.sqrt() / std::f64::consts::TAU;
            let expect = (n + 1) as f64 * c / (2.0 * length);
            assert_relative_eq!(f, expect, max_relative = 5e-3);
        }
        // Fundamental near 864 MHz.
        let f1 = pairs[0].lambda.sqrt() / std::f64::consts::TAU;
        assert_relative_eq!(f1, 8.641e8, max_relative = 5e-3);
    }

    #[test]
    fn matches_dense_eigensolver_oracle() {
        // Independent route: Cholesky-reduce the pencil and use nalgebra's
        // dense symmetric eigensolver.
        let (k, m) = bar_pencil(24, 5e-6, 1.05e12 * 2e-13, 3515.0 * 2e-13);
        let n = k.n();
        let to_dense = |t: &Tridiag| {
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = t.diag[i];
                if i + 1 < n {
                    a[(i, i + 1)] = t.off[i];
                    a[(i + 1, i)] = t.off[i];
                }
            }
            a
        };
        let kd = to_dense(&k);
        let md = to_dense(&m);
        let chol = md.clone().cholesky().unwrap();
        let linv = chol.l().try_inverse().unwrap();
        let a = &linv * kd * linv.transpose();
        let sym = nalgebra::SymmetricEigen::new(a);
        let mut dense: Vec<f64> = sym.eigenvalues.iter().copied().collect();
        dense.sort_by(|x, y| x.partial_cmp(y).unwrap());

        let lam_max = dense[7] * 1.001;
        let pairs = lowest_eigenpairs(&k, &m, lam_max, 8).unwrap();
        assert_eq!(pairs.len(), 8);
        for (p, d) in pairs.iter().zip(dense.iter()) {
            assert_relative_eq!(p.lambda, *d, max_relative = 1e-9);
        }
    }

    #[test]
    fn eigenvectors_are_mass_orthogonal() {
        let (k, m) = bar_pencil(48, 8e-6, 1.05e12 * 1e-13, 3515.0 * 1e-13);
        let pairs = lowest_eigenpairs(&k, &m, 1e22, 6).unwrap();
        for i in 0..pairs.len() {
            for j in 0..i {
                let cross = m_inner(&m, &pairs[i].vector, &pairs[j].vector).abs();
                let scale = (m_inner(&m, &pairs[i].vector, &pairs[i].vector)
                    * m_inner(&m, &pairs[j].vector, &pairs[j].vector))
                .sqrt();
                assert!(cross / scale < 1e-8, "modes {i},{j}: {}", cross / scale);
            }
        }
    }

    #[test]
    fn singular_mass_rejected() {
        let k = Tridiag {
            diag: vec![1.0, 1.0],
            off: vec![0.0],
        };
        let m = Tridiag {
            diag: vec![1.0, 0.0],
            off: vec![0.0],
        };
        assert!(lowest_eigenpairs(&k, &m, 10.0, 2).is_err());
    }
}
