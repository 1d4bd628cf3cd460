//! Weighted nonlinear least squares with analytic Jacobians, plus the model
//! library used to reduce synthesized traces to physical numbers.

pub mod models;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trace::Trace;

/// A parametric curve y(x; p) with analytic derivatives.
pub trait FitModel<R: Real> {
    fn name(&self) -> &'static str;
    fn parameter_names(&self) -> &'static [&'static str];
    fn eval(&self, p: &[R], x: R) -> R;
    /// dy/dp_i into `out` (length = parameter count).
    fn jacobian(&self, p: &[R], x: R, out: &mut [R]);
    /// Data-driven starting point.
    fn initial_guess(&self, axis: &[R], values: &[R]) -> Vec<R>;

    fn n_params(&self) -> usize {
        self.parameter_names().len()
    }
}

/// Converged (or best-effort) fit output.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: Vec<f64>,
    /// 1-sigma standard errors from the curvature at the optimum.
    pub std_errors: Vec<f64>,
    pub chi_squared: f64,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn reduced_chi_squared(&self) -> f64 {
        if self.dof > 0 {
            self.chi_squared / self.dof as f64
        } else {
            f64::NAN
        }
    }
}

const MAX_ITERS: usize = 200;
const GRAD_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;

/// Fit `model` to a trace; per-point sigma weights the residuals when any
/// sigma is positive, otherwise the fit is unweighted.
pub fn fit(model: &dyn FitModel<f64>, trace: &Trace, init: Option<&[f64]>) -> Result<FitResult> {
    let weighted = trace.sigma.iter().any(|&s| s > 0.0);
    let sigma: Option<&[f64]> = if weighted { Some(&trace.sigma) } else { None };
    fit_curve(model, &trace.axis, &trace.values, sigma, init)
}

/// Levenberg-Marquardt on raw arrays.
pub fn fit_curve(
    model: &dyn FitModel<f64>,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    init: Option<&[f64]>,
) -> Result<FitResult> {
    let n = x.len();
    let np = model.n_params();
    if n != y.len() {
        return Err(Error::Data("axis and values differ in length".into()));
    }
    if n <= np {
        return Err(Error::Data(format!(
            "{} points cannot constrain {np} parameters",
            n
        )));
    }
    let weights: Vec<f64> = match sigma {
        Some(s) => {
            if s.len() != n {
                return Err(Error::Data("sigma length mismatch".into()));
            }
            s.iter()
                .map(|&si| if si > 0.0 { 1.0 / si } else { 1.0 })
                .collect()
        }
        None => vec![1.0; n],
    };

    let mut p: Vec<f64> = match init {
        Some(p0) => {
            if p0.len() != np {
                return Err(Error::Data(format!(
                    "initial guess has {} parameters, model {} needs {np}",
                    p0.len(),
                    model.name()
                )));
            }
            p0.to_vec()
        }
        None => model.initial_guess(x, y),
    };
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite initial guess".into()));
    }

    let chi2 = |p: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let r = (y[i] - model.eval(p, x[i])) * weights[i];
            s += r * r;
        }
        s
    };

    let mut cost = chi2(&p);
    if !cost.is_finite() {
        return Err(Error::Numerical("initial residual is non-finite".into()));
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jrow = vec![0.0; np];

    for iter in 0..MAX_ITERS {
        iterations = iter + 1;
        // Build J^T W J and J^T W r at the current point.
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for i in 0..n {
            model.jacobian(&p, x[i], &mut jrow);
            let w = weights[i] * weights[i];
            let r = y[i] - model.eval(&p, x[i]);
            for a in 0..np {
                jtr[a] += w * jrow[a] * r;
                for b in a..np {
                    jtj[(a, b)] += w * jrow[a] * jrow[b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }

        // Scaled gradient test: each component measured against the
        // residual norm and that parameter's curvature, so the criterion
        // is invariant under rescaling of y or of individual parameters.
        let rnorm = cost.sqrt();
        let flat = (0..np)
            .all(|a| jtr[a].abs() <= GRAD_TOL * rnorm * jtj[(a, a)].sqrt().max(f64::MIN_POSITIVE));
        if flat || rnorm == 0.0 {
            converged = true;
            break;
        }

        // Column scaling: solve in units where the normal matrix has a unit
        // diagonal, so parameters of wildly different magnitudes (centers in
        // GHz next to amplitudes of 1e-30) damp evenly.
        let d: Vec<f64> = (0..np)
            .map(|a| {
                let v = jtj[(a, a)].sqrt();
                if v > 0.0 {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        let mut ahat = DMatrix::<f64>::zeros(np, np);
        for a in 0..np {
            for b in 0..np {
                ahat[(a, b)] = jtj[(a, b)] / (d[a] * d[b]);
            }
        }
        let ghat = DVector::<f64>::from_iterator(np, (0..np).map(|a| jtr[a] / d[a]));

        let mut stepped = false;
        for _ in 0..30 {
            let mut damped = ahat.clone();
            for a in 0..np {
                damped[(a, a)] += lambda;
            }
            let Some(chol) = Cholesky::new(damped) else {
                lambda *= 10.0;
                continue;
            };
            let mut step = chol.solve(&ghat);
            for a in 0..np {
                step[a] /= d[a];
            }
            let trial: Vec<f64> = (0..np).map(|a| p[a] + step[a]).collect();
            let trial_cost = chi2(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                // Relative to the parameter's own magnitude, so that
                // parameters far from O(1) neither stall nor spin.
                let rel_step = (0..np)
                    .map(|a| {
                        step[a].abs() / (p[a].abs() + step[a].abs() + f64::MIN_POSITIVE)
                    })
                    .fold(0.0, f64::max);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                if rel_step < STEP_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // No downhill direction at any damping: treat as converged.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    // Curvature-based standard errors at the optimum.
    let mut jtj = DMatrix::<f64>::zeros(np, np);
    for i in 0..n {
        model.jacobian(&p, x[i], &mut jrow);
        let w = weights[i] * weights[i];
        for a in 0..np {
            for b in a..np {
                jtj[(a, b)] += w * jrow[a] * jrow[b];
            }
        }
    }
    for a in 0..np {
        for b in 0..a {
            jtj[(a, b)] = jtj[(b, a)];
        }
    }
    let dof = n - np;
    // Without per-point sigma, scale by the residual variance.
    let scale = if sigma.is_some() {
        1.0
    } else {
        cost / dof.max(1) as f64
    };
    // Invert under the same column scaling used for the steps.
    let d: Vec<f64> = (0..np)
        .map(|a| {
            let v = jtj[(a, a)].sqrt();
            if v > 0.0 {
                v
            } else {
                1.0
            }
        })
        .collect();
    let mut ahat = DMatrix::<f64>::zeros(np, np);
    for a in 0..np {
        for b in 0..np {
            ahat[(a, b)] = jtj[(a, b)] / (d[a] * d[b]);
        }
    }
    let std_errors = match Cholesky::new(ahat) {
        Some(chol) => {
            let cov = chol.inverse();
            (0..np)
                .map(|a| (cov[(a, a)] * scale / (d[a] * d[a])).max(0.0).sqrt())
                .collect()
        }
        None => vec![f64::NAN; np],
    };

    Ok(FitResult {
        model: model.name().to_string(),
        parameters: p,
        std_errors,
        chi_squared: cost,
        dof,
        iterations,
        converged,
    })
}

/// A coherence time pulled out of a fit, flagged when the scan was too
/// short to bound it from above.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoherenceEstimate {
    pub value: f64,
    pub sigma: f64,
    /// True when the fitted time exceeds the scanned delay range, so the
    /// value is only a lower bound.
    pub lower_bound: bool,
}

/// Read parameter `index` of `fit` as a coherence time against the scanned
/// axis span.
pub fn extract_coherence(fit: &FitResult, index: usize, axis_span: f64) -> Result<CoherenceEstimate> {
    let value = *fit
        .parameters
        .get(index)
        .ok_or_else(|| Error::Data(format!("fit has no parameter {index}")))?;
    if !(value > 0.0) {
        return Err(Error::Numerical(format!(
            "fitted coherence time {value:.3e} is not positive"
        )));
    }
    Ok(CoherenceEstimate {
        value,
        sigma: fit.std_errors[index],
        lower_bound: value > axis_span,
    })
}

/// Quality factor center/width from a Lorentzian fit.
pub fn q_from_lorentzian(fit: &FitResult) -> Result<f64> {
    if fit.parameters.len() != 4 {
        return Err(Error::Data("not a Lorentzian parameter set".into()));
    }
    let center = fit.parameters[2];
    let fwhm = fit.parameters[3].abs();
    if fwhm == 0.0 {
        return Err(Error::Numerical("zero fitted linewidth".into()));
    }
    Ok((center / fwhm).abs())
}
