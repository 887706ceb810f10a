//! Unnormalized log-concave target densities.
//!
//! A target is described by its log-density `V(x) = log pi(x)`, the
//! derivative `V'(x)` and the interval it lives on. Samplers only ever
//! evaluate `V` and `V'`; the normalizer `c = integral of exp(V)` is
//! optional metadata for diagnostics.

use rand::Rng;

use crate::error::{Error, Result};
use crate::special::{erfc, ln_gamma, regularized_gamma_p};

/// Extended-real interval a target density is defined on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub const REAL_LINE: Support = Support {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::InvalidParameter(format!(
                "support bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Support { lower, upper })
    }

    /// Finite `x` in the closed interval.
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.lower <= x && x <= self.upper
    }

    /// Finite `x` strictly inside the interval; tangent nodes must be interior.
    pub fn is_interior(&self, x: f64) -> bool {
        x.is_finite() && self.lower < x && x < self.upper
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideSupport {
                x,
                lower: self.lower,
                upper: self.upper,
            })
        }
    }
}

/// An unnormalized density `pi(x) = exp(V(x))` with concave `V`.
///
/// Concavity is the implementor's responsibility; [`check_log_concavity`]
/// offers a randomized chord test. Evaluating outside [`support`] is a
/// contract violation.
///
/// [`support`]: LogConcaveTarget::support
pub trait LogConcaveTarget {
    fn log_density(&self, x: f64) -> f64;

    fn log_density_derivative(&self, x: f64) -> f64;

    fn support(&self) -> Support;

    /// `log c` with `c = integral of exp(V)`, when known in closed form.
    fn known_log_normalizer(&self) -> Option<f64> {
        None
    }
}

impl<T: LogConcaveTarget + ?Sized> LogConcaveTarget for &T {
    fn log_density(&self, x: f64) -> f64 {
        (**self).log_density(x)
    }
    fn log_density_derivative(&self, x: f64) -> f64 {
        (**self).log_density_derivative(x)
    }
    fn support(&self) -> Support {
        (**self).support()
    }
    fn known_log_normalizer(&self) -> Option<f64> {
        (**self).known_log_normalizer()
    }
}

/// `V(x) = -x^2 / (2 sigma2)` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    sigma2: f64,
}

impl Gaussian {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian variance must be positive and finite, got {sigma2}"
            )));
        }
        Ok(Gaussian { sigma2 })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// CDF of the normalized density.
    pub fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-x / (2.0 * self.sigma2).sqrt())
    }
}

impl LogConcaveTarget for Gaussian {
    #[inline]
    fn log_density(&self, x: f64) -> f64 {
        -x * x / (2.0 * self.sigma2)
    }

    #[inline]
    fn log_density_derivative(&self, x: f64) -> f64 {
        -x / self.sigma2
    }

    fn support(&self) -> Support {
        Support::REAL_LINE
    }

    fn known_log_normalizer(&self) -> Option<f64> {
        Some(0.5 * (2.0 * std::f64::consts::PI * self.sigma2).ln())
    }
}

/// `V(x) = (shape - 1) log x - x / scale` on `(0, inf)`.
///
/// Requires `shape > 1`; for smaller shapes the left-most tangent no
/// longer dominates near zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma {
    shape: f64,
    scale: f64,
}

impl Gamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 1.0) || !shape.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma shape must exceed 1 for log-concavity, got {shape}"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Gamma { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        regularized_gamma_p(self.shape, x.max(0.0) / self.scale)
    }
}

impl LogConcaveTarget for Gamma {
    #[inline]
    fn log_density(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - x / self.scale
    }

    #[inline]
    fn log_density_derivative(&self, x: f64) -> f64 {
        (self.shape - 1.0) / x - 1.0 / self.scale
    }

    fn support(&self) -> Support {
        Support {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    fn known_log_normalizer(&self) -> Option<f64> {
        Some(self.shape * self.scale.ln() + ln_gamma(self.shape))
    }
}

/// The targets that ship with the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinTarget {
    Gaussian(Gaussian),
    Gamma(Gamma),
}

impl BuiltinTarget {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            BuiltinTarget::Gaussian(g) => g.cdf(x),
            BuiltinTarget::Gamma(g) => g.cdf(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinTarget::Gaussian(_) => "gaussian",
            BuiltinTarget::Gamma(_) => "gamma",
        }
    }
}

impl From<Gaussian> for BuiltinTarget {
    fn from(g: Gaussian) -> Self {
        BuiltinTarget::Gaussian(g)
    }
}

impl From<Gamma> for BuiltinTarget {
    fn from(g: Gamma) -> Self {
        BuiltinTarget::Gamma(g)
    }
}

impl LogConcaveTarget for BuiltinTarget {
    #[inline]
    fn log_density(&self, x: f64) -> f64 {
        match self {
            BuiltinTarget::Gaussian(g) => g.log_density(x),
            BuiltinTarget::Gamma(g) => g.log_density(x),
        }
    }

    #[inline]
    fn log_density_derivative(&self, x: f64) -> f64 {
        match self {
            BuiltinTarget::Gaussian(g) => g.log_density_derivative(x),
            BuiltinTarget::Gamma(g) => g.log_density_derivative(x),
        }
    }

    fn support(&self) -> Support {
        match self {
            BuiltinTarget::Gaussian(g) => g.support(),
            BuiltinTarget::Gamma(g) => g.support(),
        }
    }

    fn known_log_normalizer(&self) -> Option<f64> {
        match self {
            BuiltinTarget::Gaussian(g) => g.known_log_normalizer(),
            BuiltinTarget::Gamma(g) => g.known_log_normalizer(),
        }
    }
}

/// A user-supplied target built from closures.
#[derive(Clone)]
pub struct FnTarget<V, D> {
    log_density: V,
    derivative: D,
    support: Support,
    log_normalizer: Option<f64>,
}

impl<V, D> FnTarget<V, D>
where
    V: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    pub fn new(log_density: V, derivative: D, support: Support) -> Self {
        FnTarget {
            log_density,
            derivative,
            support,
            log_normalizer: None,
        }
    }

    pub fn with_log_normalizer(mut self, log_normalizer: f64) -> Self {
        self.log_normalizer = Some(log_normalizer);
        self
    }
}

impl<V, D> LogConcaveTarget for FnTarget<V, D>
where
    V: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    fn log_density(&self, x: f64) -> f64 {
        (self.log_density)(x)
    }

    fn log_density_derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    fn support(&self) -> Support {
        self.support
    }

    fn known_log_normalizer(&self) -> Option<f64> {
        self.log_normalizer
    }
}

/// Slack allowed by the chord test.
pub const CHORD_TOLERANCE: f64 = 1e-9;

/// Randomized chord test of concavity on `[lo, hi]` (intersected with the
/// support): for sorted triples `a < b < c`, `V(b)` must not fall below the
/// chord through `(a, V(a))` and `(c, V(c))` by more than [`CHORD_TOLERANCE`].
pub fn check_log_concavity<T, R>(
    target: &T,
    lo: f64,
    hi: f64,
    trials: usize,
    rng: &mut R,
) -> Result<()>
where
    T: LogConcaveTarget + ?Sized,
    R: Rng + ?Sized,
{
    let support = target.support();
    let lo = lo.max(support.lower);
    let hi = hi.min(support.upper);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "chord window [{lo}, {hi}] is empty or unbounded"
        )));
    }
    for _ in 0..trials {
        let mut t = [0.0; 3];
        for v in t.iter_mut() {
            *v = lo + (hi - lo) * rng.random::<f64>();
        }
        t.sort_by(f64::total_cmp);
        let [a, b, c] = t;
        if !(a < b && b < c) || !support.is_interior(a) || !support.is_interior(c) {
            continue;
        }
        let chord = ((c - b) * target.log_density(a) + (b - a) * target.log_density(c)) / (c - a);
        if target.log_density(b) < chord - CHORD_TOLERANCE {
            return Err(Error::NotLogConcave { a, b, c });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn central_difference<T: LogConcaveTarget>(t: &T, x: f64) -> f64 {
        let h = 1e-5 * (1.0 + x.abs());
        (t.log_density(x + h) - t.log_density(x - h)) / (2.0 * h)
    }

    #[test]
    fn gaussian_values() {
        let g = Gaussian::new(0.5).unwrap();
        assert_eq!(g.log_density(0.0), 0.0);
        assert_eq!(g.log_density(1.0), -1.0);
        assert_eq!(g.log_density_derivative(1.0), -2.0);
        let c = g.known_log_normalizer().unwrap().exp();
        assert!((c - 1.772_453_850_905_516).abs() < 1e-12);
    }

    #[test]
    fn gamma_values() {
        let g = Gamma::new(2.0, 2.0).unwrap();
        assert!((g.log_density(2.0) - (2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((g.log_density(2.0) + 0.306_853).abs() < 1e-6);
        assert_eq!(g.log_density_derivative(2.0), 0.0);
        let c = g.known_log_normalizer().unwrap().exp();
        assert!((c - 4.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            Gaussian::new(0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Gaussian::new(-1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Gaussian::new(f64::NAN),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Gamma::new(1.0, 2.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Gamma::new(0.5, 2.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Gamma::new(2.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(Support::new(1.0, 1.0).is_err());
        assert!(Support::new(2.0, 1.0).is_err());
    }

    #[test]
    fn support_membership() {
        let s = Gamma::new(2.0, 2.0).unwrap().support();
        assert!(s.contains(0.0));
        assert!(!s.is_interior(0.0));
        assert!(s.is_interior(1e-300));
        assert!(!s.contains(-1e-12));
        assert!(!s.contains(f64::INFINITY));
        assert!(matches!(s.check(-1.0), Err(Error::OutsideSupport { .. })));
    }

    #[test]
    fn builtin_targets_pass_chord_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = BuiltinTarget::from(Gaussian::new(0.5).unwrap());
        check_log_concavity(&g, -10.0, 10.0, 10_000, &mut rng).unwrap();
        let gm = BuiltinTarget::from(Gamma::new(2.0, 2.0).unwrap());
        check_log_concavity(&gm, 0.0, 40.0, 10_000, &mut rng).unwrap();
        let gm = Gamma::new(1.3, 0.7).unwrap();
        check_log_concavity(&gm, 0.0, 1e-3, 10_000, &mut rng).unwrap();
    }

    #[test]
    fn chord_test_rejects_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = FnTarget::new(|x: f64| x * x, |x: f64| 2.0 * x, Support::REAL_LINE);
        assert!(matches!(
            check_log_concavity(&t, -1.0, 1.0, 100, &mut rng),
            Err(Error::NotLogConcave { .. })
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Gaussian::new(0.5).unwrap();
        let gm = Gamma::new(2.0, 2.0).unwrap();
        for _ in 0..100 {
            let x = -5.0 + 10.0 * rng.random::<f64>();
            let d = g.log_density_derivative(x);
            let fd = central_difference(&g, x);
            assert!((d - fd).abs() <= 1e-5 * d.abs().max(1e-3), "gaussian x={x}");

            let y = 0.05 + 20.0 * rng.random::<f64>();
            let d = gm.log_density_derivative(y);
            let fd = central_difference(&gm, y);
            assert!((d - fd).abs() <= 1e-5 * d.abs().max(1e-3), "gamma y={y}");
        }
    }

    #[test]
    fn cdfs_hit_known_points() {
        let g = Gaussian::new(0.5).unwrap();
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-15);
        // P(X <= 1) for sd = sqrt(1/2) equals Phi(sqrt 2)
        assert!((g.cdf(1.0) - 0.921_350_396_474_857_5).abs() < 1e-12);
        let gm = Gamma::new(2.0, 2.0).unwrap();
        // 1 - (1 + x/2) e^{-x/2}
        assert!((gm.cdf(2.0) - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-14);
        assert_eq!(gm.cdf(-1.0), 0.0);
    }
}
