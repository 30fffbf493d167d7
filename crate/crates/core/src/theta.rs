//! Numeric odd Jacobi theta function.
//!
//! theta(x) = sin(pi x)/pi * prod_{s=1..S} (1 - q^s e^{2 pi i x})
//!                                         (1 - q^s e^{-2 pi i x}) / (1 - q^s)^2
//! with q = e^{2 pi i tau}, Im tau > 0. This is odd, vanishes to first
//! order exactly on Z + Z tau, has derivative 1 at 0, and satisfies
//! theta(x+1) = -theta(x) exactly even after truncation. The second
//! quasi-period theta(x+tau) = exp(a + b x) theta(x) is *measured* at
//! construction time from three probe ratios and consistency-checked,
//! never transcribed.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default tau = 0.8i, comfortably inside the convergence region.
pub const DEFAULT_TAU_IM: f64 = 0.8;

/// Default truncation order S of the triple product.
pub const DEFAULT_TRUNCATION: usize = 48;

/// Default accuracy band: direct evaluation allowed for |Im x| <= 4 Im tau.
pub const DEFAULT_BAND_FACTOR: f64 = 4.0;

/// Probe points (relative to Im tau) at which the tau-quasi-period is
/// measured; chosen away from lattice points and from each other.
const PROBES: [(f64, f64); 3] = [(0.1372, 0.0831), (0.2459, 0.1176), (0.3141, 0.0577)];

/// Result of reducing x modulo Z + Z tau: x = x_red + m + n tau and
/// theta(x) = exp(log_factor) * theta(x_red).
#[derive(Clone, Copy, Debug)]
pub struct BandReduction {
    pub x_red: Complex64,
    pub m: i64,
    pub n: i64,
    pub log_factor: Complex64,
}

/// Immutable evaluation context: tau, q, truncation order, and the cached
/// quasi-period log-slope data. Construction is the only fallible step;
/// evaluation via `eval_reduced` is total.
#[derive(Clone, Debug)]
pub struct ThetaContext {
    pub tau: Complex64,
    pub q: Complex64,
    pub truncation: usize,
    band_factor: f64,
    /// theta(x+tau)/theta(x) = exp(qp_intercept + qp_slope * x).
    qp_intercept: Complex64,
    qp_slope: Complex64,
}

impl ThetaContext {
    pub fn new(tau: Complex64, truncation: usize) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.is_finite() {
            return Err(Error::Config(format!(
                "tau = {tau} must have positive imaginary part"
            )));
        }
        if truncation == 0 {
            return Err(Error::Config("truncation must be positive".into()));
        }
        let q = (Complex64::i() * 2.0 * PI * tau).exp();
        // |q|^(S+1) < 1e-16, checked in logs so tiny |q| cannot underflow.
        let tail_log = (truncation as f64 + 1.0) * q.norm().ln();
        if !(tail_log < -16.0 * std::f64::consts::LN_10) {
            return Err(Error::Config(format!(
                "truncation {truncation} too small for tau = {tau}: |q|^(S+1) >= 1e-16"
            )));
        }

        let mut ctx = ThetaContext {
            tau,
            q,
            truncation,
            band_factor: DEFAULT_BAND_FACTOR,
            qp_intercept: Complex64::new(0.0, 0.0),
            qp_slope: Complex64::new(0.0, 0.0),
        };

        // Measure theta(x+tau)/theta(x) = exp(a + b x) at three probes:
        // two determine (a, b), the third must agree to 1e-9 relative.
        let probe = |frac: (f64, f64)| Complex64::new(frac.0, frac.1 * tau.im);
        let x1 = probe(PROBES[0]);
        let x2 = probe(PROBES[1]);
        let x3 = probe(PROBES[2]);
        let r1 = ctx.raw_eval(x1 + tau) / ctx.raw_eval(x1);
        let r2 = ctx.raw_eval(x2 + tau) / ctx.raw_eval(x2);
        let r3 = ctx.raw_eval(x3 + tau) / ctx.raw_eval(x3);
        // |Im(b (x1 - x2))| < pi for any tau, so the principal log is safe.
        let b = (r1 / r2).ln() / (x1 - x2);
        let a = r1.ln() - b * x1;
        let predicted = (a + b * x3).exp();
        let rel = (predicted - r3).norm() / r3.norm().max(1e-14);
        if !(rel < 1e-9) {
            return Err(Error::Numeric(format!(
                "quasi-period probes disagree: relative error {rel:.3e} at third probe"
            )));
        }
        ctx.qp_intercept = a;
        ctx.qp_slope = b;
        Ok(ctx)
    }

    pub fn standard() -> Self {
        ThetaContext::new(Complex64::new(0.0, DEFAULT_TAU_IM), DEFAULT_TRUNCATION)
            .expect("default parameters are valid")
    }

    /// Widens or narrows the accuracy band (multiples of Im tau).
    pub fn with_band_factor(mut self, band_factor: f64) -> Self {
        self.band_factor = band_factor;
        self
    }

    /// Slope b of log(theta(x+tau)/theta(x)) = a + b x.
    pub fn quasi_period_slope(&self) -> Complex64 {
        self.qp_slope
    }

    /// Intercept a of log(theta(x+tau)/theta(x)) = a + b x.
    pub fn quasi_period_intercept(&self) -> Complex64 {
        self.qp_intercept
    }

    /// Truncated triple product, no band check. Private: accuracy is only
    /// guaranteed inside the band.
    fn raw_eval(&self, x: Complex64) -> Complex64 {
        let u = (Complex64::i() * 2.0 * PI * x).exp();
        let uinv = 1.0 / u;
        let mut acc = (PI * x).sin() / PI;
        let mut qs = Complex64::new(1.0, 0.0);
        for _ in 1..=self.truncation {
            qs *= self.q;
            let denom = 1.0 - qs;
            acc *= (1.0 - qs * u) / denom * ((1.0 - qs * uinv) / denom);
        }
        acc
    }

    /// Band-checked direct evaluation.
    pub fn theta(&self, x: Complex64) -> Result<Complex64> {
        if x.im.abs() > self.band_factor * self.tau.im {
            return Err(Error::Range(format!(
                "x = {x} outside the accuracy band |Im x| <= {} (reduce first)",
                self.band_factor * self.tau.im
            )));
        }
        Ok(self.raw_eval(x))
    }

    /// Reduction modulo Z + Z tau. The tau-shifts telescope to
    /// n a + b (n x_red + tau n(n-1)/2), the integer shift contributes
    /// i pi m; both hold for negative shifts as well.
    pub fn reduce(&self, x: Complex64) -> BandReduction {
        let n = (x.im / self.tau.im).round();
        let xp = x - self.tau * n;
        let m = xp.re.round();
        let x_red = xp - m;
        let nn = Complex64::new(n, 0.0);
        let log_factor = Complex64::new(0.0, PI * m)
            + nn * self.qp_intercept
            + self.qp_slope * (nn * x_red + self.tau * (n * (n - 1.0) / 2.0));
        BandReduction {
            x_red,
            m: m as i64,
            n: n as i64,
            log_factor,
        }
    }

    /// theta at arbitrary x: reduce, then evaluate. Total, and the
    /// workhorse for every coefficient evaluation.
    pub fn eval_reduced(&self, x: Complex64) -> Complex64 {
        let red = self.reduce(x);
        red.log_factor.exp() * self.raw_eval(red.x_red)
    }

    /// Distance from x to the period lattice (after reduction that is
    /// simply |x_red|); used for pole detection.
    pub fn lattice_distance(&self, x: Complex64) -> f64 {
        self.reduce(x).x_red.norm()
    }
}

/// Free-function form of [`ThetaContext::theta`].
pub fn theta_eval(x: Complex64, ctx: &ThetaContext) -> Result<Complex64> {
    ctx.theta(x)
}

/// Free-function form of [`ThetaContext::reduce`].
pub fn reduce_to_band(x: Complex64, ctx: &ThetaContext) -> BandReduction {
    ctx.reduce(x)
}

/// Relative error with absolute floor 1e-14; the comparison used by all
/// pointwise identity checks.
pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-14)
}
