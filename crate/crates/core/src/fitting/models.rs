//! Line shapes and decay envelopes used by the characterization pipeline.

use std::marker::PhantomData;

use crate::fitting::FitModel;
use crate::scalar::Real;

fn mean<R: Real>(v: &[R]) -> R {
    v.iter().copied().sum::<R>() / R::from_usize_(v.len())
}

fn extent<R: Real>(v: &[R]) -> (R, R) {
    let mut lo = v[0];
    let mut hi = v[0];
    for &x in v {
        if x < lo {
            lo = x;
        }
        if x > hi {
            hi = x;
        }
    }
    (lo, hi)
}

/// offset + amp * (w/2)^2 / ((x - center)^2 + (w/2)^2); amp < 0 for a dip.
/// Parameters: [offset, amp, center, fwhm].
#[derive(Debug, Clone, Copy)]
pub struct Lorentzian<R> {
    dip: bool,
    _marker: PhantomData<R>,
}

impl<R: Real> Lorentzian<R> {
    pub fn dip() -> Self {
        Lorentzian {
            dip: true,
            _marker: PhantomData,
        }
    }

    pub fn peak() -> Self {
        Lorentzian {
            dip: false,
            _marker: PhantomData,
        }
    }
}

impl<R: Real> FitModel<R> for Lorentzian<R> {
    fn name(&self) -> &'static str {
        if self.dip {
            "lorentzian_dip"
        } else {
            "lorentzian_peak"
        }
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["offset", "amplitude", "center", "fwhm"]
    }

    fn eval(&self, p: &[R], x: R) -> R {
        let h = p[3] / R::lit(2.0);
        let d = x - p[2];
        p[0] + p[1] * h * h / (d * d + h * h)
    }

    fn jacobian(&self, p: &[R], x: R, out: &mut [R]) {
        let h = p[3] / R::lit(2.0);
        let d = x - p[2];
        let den = d * d + h * h;
        let l = h * h / den;
        out[0] = R::one();
        out[1] = l;
        out[2] = p[1] * h * h * R::lit(2.0) * d / (den * den);
        out[3] = p[1] * h * d * d / (den * den);
    }

    fn initial_guess(&self, axis: &[R], values: &[R]) -> Vec<R> {
        let (lo, hi) = extent(values);
        let offset = if self.dip { hi } else { lo };
        let target = if self.dip { lo } else { hi };
        let mut iext = 0;
        for (i, &v) in values.iter().enumerate() {
            if v == target {
                iext = i;
            }
        }
        let amp = target - offset;
        let half = offset + amp / R::lit(2.0);
        let crossed = |v: R| if self.dip { v <= half } else { v >= half };
        let mut left = axis[0];
        let mut right = *axis.last().unwrap();
        for i in (0..iext).rev() {
            if !crossed(values[i]) {
                left = axis[i];
                break;
            }
        }
        for i in iext..axis.len() {
            if !crossed(values[i]) {
                right = axis[i];
                break;
            }
        }
        let span = *axis.last().unwrap() - axis[0];
        let mut fwhm = right - left;
        if !(fwhm > R::zero()) {
            fwhm = span / R::lit(10.0);
        }
        vec![offset, amp, axis[iext], fwhm]
    }
}

/// Count of sign changes of the mean-subtracted signal, as a cycle-count
/// frequency estimate over the scanned span.
fn frequency_guess<R: Real>(axis: &[R], values: &[R]) -> R {
    let m = mean(values);
    let mut crossings = 0usize;
    let mut last = values[0] - m;
    for &v in &values[1..] {
        let cur = v - m;
        if cur * last < R::zero() {
            crossings += 1;
        }
        if cur != R::zero() {
            last = cur;
        }
    }
    let span = *axis.last().unwrap() - axis[0];
    let cycles = R::from_usize_(crossings.max(1)) / R::lit(2.0);
    cycles / span
}

/// offset + amp * cos(2 pi f x + phase) * exp(-x / tau).
/// Parameters: [offset, amp, frequency, phase, tau].
#[derive(Debug, Clone, Copy)]
pub struct DecayingCosine<R>(PhantomData<R>);

impl<R: Real> DecayingCosine<R> {
    pub fn new() -> Self {
        DecayingCosine(PhantomData)
    }
}

impl<R: Real> Default for DecayingCosine<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> FitModel<R> for DecayingCosine<R> {
    fn name(&self) -> &'static str {
        "decaying_cosine"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["offset", "amplitude", "frequency", "phase", "tau"]
    }

    fn eval(&self, p: &[R], x: R) -> R {
        let arg = R::two_pi() * p[2] * x + p[3];
        p[0] + p[1] * arg.cos() * (-x / p[4]).exp()
    }

    fn jacobian(&self, p: &[R], x: R, out: &mut [R]) {
        let arg = R::two_pi() * p[2] * x + p[3];
        let env = (-x / p[4]).exp();
        let c = arg.cos();
        let s = arg.sin();
        out[0] = R::one();
        out[1] = c * env;
        out[2] = -p[1] * s * R::two_pi() * x * env;
        out[3] = -p[1] * s * env;
        out[4] = p[1] * c * env * x / (p[4] * p[4]);
    }

    fn initial_guess(&self, axis: &[R], values: &[R]) -> Vec<R> {
        let (lo, hi) = extent(values);
        let span = *axis.last().unwrap() - axis[0];
        vec![
            mean(values),
            (hi - lo) / R::lit(2.0),
            frequency_guess(axis, values),
            R::zero(),
            span / R::lit(2.0),
        ]
    }
}

/// Three equally split tones under a Gaussian envelope:
/// offset + amp * exp(-(x/t2s)^2) * (1/3) sum_{k=-1,0,1} cos(2 pi (f + k d) x).
/// Parameters: [offset, amp, f_center, splitting, t2_star].
#[derive(Debug, Clone, Copy)]
pub struct RamseyFringe<R>(PhantomData<R>);

impl<R: Real> RamseyFringe<R> {
    pub fn new() -> Self {
        RamseyFringe(PhantomData)
    }
}

impl<R: Real> Default for RamseyFringe<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> FitModel<R> for RamseyFringe<R> {
    fn name(&self) -> &'static str {
        "ramsey_fringe"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["offset", "amplitude", "f_center", "splitting", "t2_star"]
    }

    fn eval(&self, p: &[R], x: R) -> R {
        let env = (-(x / p[4]) * (x / p[4])).exp();
        let third = R::lit(3.0).recip();
        let mut s = R::zero();
        for k in [-1.0, 0.0, 1.0] {
            s += (R::two_pi() * (p[2] + R::lit(k) * p[3]) * x).cos();
        }
        p[0] + p[1] * env * s * third
    }

    fn jacobian(&self, p: &[R], x: R, out: &mut [R]) {
        let u = x / p[4];
        let env = (-u * u).exp();
        let third = R::lit(3.0).recip();
        let mut s = R::zero();
        let mut ds_df = R::zero();
        let mut ds_dd = R::zero();
        for k in [-1.0, 0.0, 1.0] {
            let arg = R::two_pi() * (p[2] + R::lit(k) * p[3]) * x;
            s += arg.cos();
            ds_df -= arg.sin() * R::two_pi() * x;
            ds_dd -= arg.sin() * R::two_pi() * x * R::lit(k);
        }
        out[0] = R::one();
        out[1] = env * s * third;
        out[2] = p[1] * env * ds_df * third;
        out[3] = p[1] * env * ds_dd * third;
        out[4] = p[1] * env * s * third * R::lit(2.0) * x * x / (p[4] * p[4] * p[4]);
    }

    fn initial_guess(&self, axis: &[R], values: &[R]) -> Vec<R> {
        let (lo, hi) = extent(values);
        let span = *axis.last().unwrap() - axis[0];
        let f = frequency_guess(axis, values);
        vec![
            mean(values),
            (hi - lo) / R::lit(2.0),
            f,
            f / R::lit(10.0),
            span / R::lit(2.0),
        ]
    }
}

/// Gaussian echo envelope with a periodic revival dip:
/// offset + amp * exp(-(x/t2)^2) * (1 - depth * sin^4(pi f_mod x)).
/// Parameters: [offset, amp, t2, depth, f_mod].
#[derive(Debug, Clone, Copy)]
pub struct HahnEcho<R>(PhantomData<R>);

impl<R: Real> HahnEcho<R> {
    pub fn new() -> Self {
        HahnEcho(PhantomData)
    }
}

impl<R: Real> Default for HahnEcho<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> FitModel<R> for HahnEcho<R> {
    fn name(&self) -> &'static str {
        "hahn_echo"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["offset", "amplitude", "t2", "mod_depth", "mod_frequency"]
    }

    fn eval(&self, p: &[R], x: R) -> R {
        let u = x / p[2];
        let env = (-u * u).exp();
        let s = (R::pi() * p[4] * x).sin();
        let s2 = s * s;
        p[0] + p[1] * env * (R::one() - p[3] * s2 * s2)
    }

    fn jacobian(&self, p: &[R], x: R, out: &mut [R]) {
        let u = x / p[2];
        let env = (-u * u).exp();
        let arg = R::pi() * p[4] * x;
        let s = arg.sin();
        let c = arg.cos();
        let s2 = s * s;
        let m = R::one() - p[3] * s2 * s2;
        out[0] = R::one();
        out[1] = env * m;
        out[2] = p[1] * env * m * R::lit(2.0) * x * x / (p[2] * p[2] * p[2]);
        out[3] = -p[1] * env * s2 * s2;
        out[4] = -p[1] * env * p[3] * R::lit(4.0) * s2 * s * c * R::pi() * x;
    }

    fn initial_guess(&self, axis: &[R], values: &[R]) -> Vec<R> {
        let span = *axis.last().unwrap() - axis[0];
        let tail = values[values.len().saturating_sub(values.len() / 5).max(1) - 1..].to_vec();
        let offset = mean(&tail);
        let amp = values[0] - offset;
        vec![
            offset,
            amp,
            span / R::lit(2.0),
            R::lit(0.2),
            R::lit(2.0) / span,
        ]
    }
}
