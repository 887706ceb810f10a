//! Acceptance rate, L1 distance to the target and goodness-of-fit.

use std::cell::Cell;

use crate::envelope::Envelope;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special::{erfc, regularized_gamma_p};
use crate::target::LogConcaveTarget;

/// Absolute quadrature tolerance, relative to the envelope normalizer.
pub const L1_QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Slack below zero tolerated for `q - pi` before the envelope is deemed broken.
const DOMINANCE_SLACK: f64 = 1e-12;

/// Probability that a draw from the envelope passes the rejection test,
/// `c_pi / c_t`.
pub fn exact_acceptance_rate<T>(env: &Envelope, target: &T) -> Result<f64>
where
    T: LogConcaveTarget + ?Sized,
{
    let log_c_pi = target
        .known_log_normalizer()
        .ok_or(Error::Unavailable("target normalizer is unknown"))?;
    Ok((log_c_pi - env.log_normalizer()).exp())
}

/// `integral |q - pi|`. Under dominance this is `c_t - c_pi`, which is used
/// whenever the target normalizer is known.
pub fn l1_distance<T>(env: &Envelope, target: &T) -> Result<f64>
where
    T: LogConcaveTarget + ?Sized,
{
    match target.known_log_normalizer() {
        Some(log_c_pi) => Ok(env.log_normalizer().exp() - log_c_pi.exp()),
        None => l1_distance_quadrature(env, target),
    }
}

/// L1 distance by adaptive quadrature of `|q - pi|`, piece by piece.
pub fn l1_distance_quadrature<T>(env: &Envelope, target: &T) -> Result<f64>
where
    T: LogConcaveTarget + ?Sized,
{
    let c_t = env.log_normalizer().exp();
    let pieces = env.pieces();
    let tol = L1_QUADRATURE_TOLERANCE * c_t / pieces.len() as f64;
    let support = target.support();
    let mut total = 0.0;
    let dominance_ok = Cell::new(true);
    for p in pieces {
        let integrand = |x: f64| {
            if !support.is_interior(x) {
                return 0.0;
            }
            let q = p.eval(x).exp();
            let pi = target.log_density(x).exp();
            let d = q - pi;
            if d < -DOMINANCE_SLACK * q.max(1.0) {
                dominance_ok.set(false);
            }
            d.abs()
        };
        total += integrate(integrand, p.left, p.right, tol)?;
    }
    if !dominance_ok.get() {
        return Err(Error::InvalidArgument(
            "envelope falls below the target; it is not an upper hull".into(),
        ));
    }
    Ok(total)
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max(above - f).max(f - below);
    }
    Ok(d)
}

/// CDF of a centred Gaussian with variance `sigma2`.
pub fn gaussian_cdf(x: f64, sigma2: f64) -> f64 {
    0.5 * erfc(-x / (2.0 * sigma2).sqrt())
}

/// CDF of a Gamma law with the given shape and scale.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    regularized_gamma_p(shape, x / scale)
}

/// Snapshot of the diagnostics for one envelope and sampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    pub eta_exact: Option<f64>,
    pub eta_empirical: f64,
    pub l1_distance: Option<f64>,
    pub ks_statistic: Option<f64>,
}

impl DiagnosticsReport {
    pub const CSV_HEADER: &'static str = "eta_exact,eta_empirical,l1_distance,ks_statistic";

    pub fn new<T>(env: &Envelope, target: &T, accepted: u64, iterations: u64) -> Self
    where
        T: LogConcaveTarget + ?Sized,
    {
        DiagnosticsReport {
            eta_exact: exact_acceptance_rate(env, target).ok(),
            eta_empirical: if iterations == 0 {
                0.0
            } else {
                accepted as f64 / iterations as f64
            },
            l1_distance: l1_distance(env, target).ok(),
            ks_statistic: None,
        }
    }

    pub fn with_ks<F: Fn(f64) -> f64>(mut self, samples: &[f64], cdf: F) -> Result<Self> {
        self.ks_statistic = Some(ks_statistic(samples, cdf)?);
        Ok(self)
    }

    /// Comma-separated record matching [`Self::CSV_HEADER`]; absent values are empty.
    pub fn to_csv_record(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{}",
            opt(self.eta_exact),
            self.eta_empirical,
            opt(self.l1_distance),
            opt(self.ks_statistic)
        )
    }
}
