//! The adaptive rejection loops.
//!
//! Both methods draw `x ~ q / c`, `u ~ U[0, 1)` and accept when
//! `log u <= V(x) - W(x)`. They differ only in what a rejection does:
//!
//! * [`Method::Ars`] adds the rejected point as a new node, so the envelope
//!   keeps tightening and the node count grows without bound.
//! * [`Method::Cars`] keeps exactly `M` nodes. The rejected point replaces
//!   its nearest node, but only if that strictly lowers the envelope
//!   normalizer; otherwise the node set is left alone.
//!
//! In both cases the sequence of normalizers is non-increasing.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::envelope::{log_sum_exp, Envelope, SupportSet, Tangent, DEDUP_EPSILON};
use crate::error::{Error, Result};
use crate::target::LogConcaveTarget;

/// Consecutive improper draws tolerated by [`initial_support`].
pub const MAX_INIT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ars,
    Cars,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ars => "ARS",
            Method::Cars => "CARS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ars" => Ok(Method::Ars),
            "cars" => Ok(Method::Cars),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

/// What happened during one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub sample: f64,
    pub accepted: bool,
    /// CARS only: a rejected draw was far enough from its nearest node to try a swap.
    pub swap_attempted: bool,
    pub swap_accepted: bool,
    /// `log c` of the envelope in force for the next iteration.
    pub log_normalizer_after: f64,
}

/// Summary of one call to [`Sampler::run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub method: Method,
    pub accepted: u64,
    pub iterations: u64,
    pub final_nodes: usize,
    pub final_log_normalizer: f64,
    /// `c_pi / c_T` when the target normalizer is known, else `accepted / iterations`.
    pub final_acceptance_rate: f64,
    pub empirical_acceptance_rate: f64,
    /// Wall time of the sampling loop only.
    pub elapsed: Duration,
}

/// Resumable ARS / CARS state.
pub struct Sampler<'t, T: ?Sized, R> {
    method: Method,
    target: &'t T,
    support: SupportSet,
    envelope: Envelope,
    iterations: u64,
    accepted: u64,
    node_budget: usize,
    rng: R,
    /// Tangents at the current nodes, in node order.
    tangents: Vec<Tangent>,
    scratch_tangents: Vec<Tangent>,
    scratch_areas: Vec<f64>,
    /// CARS: log-area of the pieces of tangents `k - 1 ..= k + 1` for each `k`,
    /// or empty when pieces and tangents do not line up one to one.
    window_log_areas: Vec<f64>,
}

impl<'t, T, R> Sampler<'t, T, R>
where
    T: LogConcaveTarget + ?Sized,
    R: Rng,
{
    /// For CARS the node budget is the size of the initial support set.
    pub fn new(method: Method, target: &'t T, support: SupportSet, rng: R) -> Result<Self> {
        let tangents = support
            .nodes()
            .iter()
            .map(|&s| Tangent::at(target, s))
            .collect::<Result<Vec<_>>>()?;
        let envelope = Envelope::from_tangents(&tangents, target.support())?;
        let mut sampler = Sampler {
            method,
            target,
            node_budget: support.len(),
            support,
            envelope,
            iterations: 0,
            accepted: 0,
            rng,
            scratch_tangents: Vec::with_capacity(tangents.len()),
            scratch_areas: Vec::with_capacity(tangents.len()),
            window_log_areas: Vec::new(),
            tangents,
        };
        sampler.refresh_windows();
        Ok(sampler)
    }

    fn refresh_windows(&mut self) {
        self.window_log_areas.clear();
        let pieces = self.envelope.pieces();
        if self.method != Method::Cars || pieces.len() != self.tangents.len() {
            return;
        }
        let m = pieces.len();
        for k in 0..m {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(m - 1));
            self.scratch_areas.clear();
            self.scratch_areas
                .extend(pieces[lo..=hi].iter().map(|p| p.log_area));
            self.window_log_areas.push(log_sum_exp(&self.scratch_areas));
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn node_budget(&self) -> usize {
        self.node_budget
    }

    pub fn target(&self) -> &'t T {
        self.target
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    pub fn into_rng(self) -> R {
        self.rng
    }

    /// One iteration of the loop for the configured method.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let (x, accepted) = self.propose()?;
        self.iterations += 1;
        if accepted {
            self.accepted += 1;
            return Ok(StepOutcome {
                sample: x,
                accepted: true,
                swap_attempted: false,
                swap_accepted: false,
                log_normalizer_after: self.envelope.log_normalizer(),
            });
        }
        let (swap_attempted, swap_accepted) = match self.method {
            Method::Ars => {
                self.insert_node(x);
                (false, false)
            }
            Method::Cars => match self.try_swap(x) {
                None => (false, false),
                Some(adopted) => (true, adopted),
            },
        };
        Ok(StepOutcome {
            sample: x,
            accepted: false,
            swap_attempted,
            swap_accepted,
            log_normalizer_after: self.envelope.log_normalizer(),
        })
    }

    /// Draws a candidate from the envelope and runs the rejection test.
    fn propose(&mut self) -> Result<(f64, bool)> {
        let (j, x) = self.envelope.sample_with_piece(&mut self.rng)?;
        let log_ratio = self.target.log_density(x) - self.envelope.pieces()[j].eval(x);
        let u: f64 = self.rng.random();
        Ok((x, u.ln() <= log_ratio))
    }

    /// ARS adaptation. Points within the dedup distance of a node, or that
    /// fail to produce a valid hull, are skipped.
    fn insert_node(&mut self, x: f64) -> bool {
        let mut grown = self.support.clone();
        if !grown.insert(x) {
            return false;
        }
        let Ok(t) = Tangent::at(self.target, x) else {
            return false;
        };
        let i = self.tangents.partition_point(|l| l.node < x);
        let mut lines = self.tangents.clone();
        lines.insert(i, t);
        match Envelope::from_tangents(&lines, self.target.support()) {
            Ok(env) => {
                self.support = grown;
                self.tangents = lines;
                self.envelope = env;
                true
            }
            Err(_) => false,
        }
    }

    /// CARS adaptation. `None` when the point is too close to its nearest
    /// node to form a new set; otherwise whether the swap was adopted.
    fn try_swap(&mut self, x: f64) -> Option<bool> {
        let nearest = self.support.closest(x);
        if (self.support.nodes()[nearest] - x).abs() <= DEDUP_EPSILON
            || !self.support.can_replace(nearest, x)
        {
            return None;
        }
        // An improper candidate has an infinite normalizer and never wins.
        let Ok(t) = Tangent::at(self.target, x) else {
            return Some(false);
        };
        let support = self.target.support();
        let lowers = match self.swap_lowers_locally(nearest, t) {
            Some(lowers) => lowers,
            None => {
                self.scratch_tangents.clear();
                self.scratch_tangents.extend_from_slice(&self.tangents);
                self.scratch_tangents[nearest] = t;
                Envelope::tangent_log_normalizer(
                    &self.scratch_tangents,
                    support,
                    &mut self.scratch_areas,
                )
                .is_ok_and(|log_c| log_c < self.envelope.log_normalizer())
            }
        };
        if !lowers {
            return Some(false);
        }
        self.scratch_tangents.clear();
        self.scratch_tangents.extend_from_slice(&self.tangents);
        self.scratch_tangents[nearest] = t;
        let (Ok(env), Some(candidate)) = (
            Envelope::from_tangents(&self.scratch_tangents, support),
            self.support.with_replaced(nearest, x),
        ) else {
            return Some(false);
        };
        if env.log_normalizer() >= self.envelope.log_normalizer() {
            return Some(false);
        }
        self.support = candidate;
        self.envelope = env;
        std::mem::swap(&mut self.tangents, &mut self.scratch_tangents);
        self.refresh_windows();
        Some(true)
    }

    /// Whether replacing tangent `k` by `t` lowers the normalizer, judged on
    /// the pieces whose bounds move (those of tangents `k - 1 ..= k + 1`).
    /// `None` when either hull has dropped or collapsed a piece, so pieces
    /// and tangents do not line up one to one.
    fn swap_lowers_locally(&mut self, k: usize, t: Tangent) -> Option<bool> {
        let &old = self.window_log_areas.get(k)?;
        let pieces = self.envelope.pieces();
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(pieces.len() - 1);
        self.scratch_tangents.clear();
        self.scratch_tangents
            .extend_from_slice(&self.tangents[lo..=hi]);
        self.scratch_tangents[k - lo] = t;
        let Ok(new) = Envelope::hull_log_area(
            &self.scratch_tangents,
            pieces[lo].left,
            pieces[hi].right,
            &mut self.scratch_areas,
        ) else {
            return Some(false);
        };
        if self.scratch_areas.len() != hi - lo + 1 {
            return None;
        }
        Some(new < old)
    }

    /// Iterates until `n_samples` more draws are accepted.
    pub fn run(&mut self, n_samples: usize) -> Result<(Vec<f64>, RunStats)> {
        self.run_with_hook(n_samples, |_| {})
    }

    /// As [`run`](Self::run), passing every step outcome to `hook`.
    pub fn run_with_hook<F>(
        &mut self,
        n_samples: usize,
        mut hook: F,
    ) -> Result<(Vec<f64>, RunStats)>
    where
        F: FnMut(&StepOutcome),
    {
        let start = Instant::now();
        let (start_accepted, start_iterations) = (self.accepted, self.iterations);
        let mut samples = Vec::with_capacity(n_samples);
        while samples.len() < n_samples {
            let outcome = self.step()?;
            if outcome.accepted {
                samples.push(outcome.sample);
            }
            hook(&outcome);
        }
        let elapsed = start.elapsed();
        let accepted = self.accepted - start_accepted;
        let iterations = self.iterations - start_iterations;
        let empirical = if iterations == 0 {
            1.0
        } else {
            accepted as f64 / iterations as f64
        };
        let final_log_normalizer = self.envelope.log_normalizer();
        let final_acceptance_rate = match self.target.known_log_normalizer() {
            Some(log_c_pi) => (log_c_pi - final_log_normalizer).exp(),
            None => empirical,
        };
        Ok((
            samples,
            RunStats {
                method: self.method,
                accepted,
                iterations,
                final_nodes: self.support.len(),
                final_log_normalizer,
                final_acceptance_rate,
                empirical_acceptance_rate: empirical,
                elapsed,
            },
        ))
    }
}

/// How the initial nodes are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRule {
    /// All nodes uniform on `[lo, hi]`.
    UniformWindow { lo: f64, hi: f64 },
    /// Nodes `lo` and `hi` fixed, the rest uniform on `(lo, hi)`.
    FixedEndpoints { lo: f64, hi: f64 },
}

impl InitialRule {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            InitialRule::UniformWindow { lo, hi } | InitialRule::FixedEndpoints { lo, hi } => {
                (lo, hi)
            }
        }
    }
}

/// Draws `count` initial nodes by `rule`, redrawing sets that would give an
/// improper envelope (or collide) up to [`MAX_INIT_ATTEMPTS`] times.
pub fn initial_support<T, R>(
    target: &T,
    rule: InitialRule,
    count: usize,
    rng: &mut R,
) -> Result<SupportSet>
where
    T: LogConcaveTarget + ?Sized,
    R: Rng + ?Sized,
{
    let (lo, hi) = rule.bounds();
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 initial nodes, got {count}"
        )));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "initial window [{lo}, {hi}] must be finite and non-empty"
        )));
    }
    if let InitialRule::FixedEndpoints { .. } = rule {
        // No amount of redrawing moves a fixed endpoint back into the support.
        let support = target.support();
        for x in [lo, hi] {
            if !support.is_interior(x) {
                return Err(Error::OutsideSupport {
                    x,
                    lower: support.lower,
                    upper: support.upper,
                });
            }
        }
    }
    for _ in 0..MAX_INIT_ATTEMPTS {
        let nodes: Vec<f64> = match rule {
            InitialRule::UniformWindow { .. } => (0..count)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            InitialRule::FixedEndpoints { .. } => {
                let mut v = Vec::with_capacity(count);
                v.push(lo);
                v.extend((0..count - 2).map(|_| lo + (hi - lo) * rng.random::<f64>()));
                v.push(hi);
                v
            }
        };
        if let Ok(set) = SupportSet::new(nodes, target) {
            return Ok(set);
        }
    }
    Err(Error::Initialization {
        attempts: MAX_INIT_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{FnTarget, Gamma, Gaussian, Support};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gauss() -> Gaussian {
        Gaussian::new(0.5).unwrap()
    }

    fn sampler<'t, T: LogConcaveTarget>(
        method: Method,
        t: &'t T,
        nodes: &[f64],
        seed: u64,
    ) -> Sampler<'t, T, ChaCha8Rng> {
        let s = SupportSet::new(nodes.to_vec(), t).unwrap();
        Sampler::new(method, t, s, ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn swap_that_raises_normalizer_is_refused() {
        let g = gauss();
        let mut s = sampler(Method::Cars, &g, &[-1.0, 0.0, 1.0], 0);
        assert_eq!(s.support().closest(0.5), 1);
        assert_eq!(s.try_swap(0.5), Some(false));
        assert_eq!(s.support().nodes(), &[-1.0, 0.0, 1.0]);
        assert!((s.envelope().log_normalizer() - 2f64.ln()).abs() < 1e-14);

        // The refused candidate {-1, 0.5, 1} has c_g = 2.169817.
        let cand = SupportSet::new(vec![-1.0, 0.5, 1.0], &g).unwrap();
        let env = Envelope::build(&g, &cand).unwrap();
        assert!((env.log_normalizer().exp() - 2.169_816_576).abs() < 1e-8);
    }

    #[test]
    fn swap_that_lowers_normalizer_is_adopted() {
        let g = gauss();
        let mut s = sampler(Method::Cars, &g, &[-1.5, -1.0, 1.8], 0);
        let before = s.envelope().log_normalizer();
        // Nearest node to 0.1 is -1.0.
        assert_eq!(s.try_swap(0.1), Some(true));
        assert_eq!(s.support().nodes(), &[-1.5, 0.1, 1.8]);
        assert!(s.envelope().log_normalizer() < before);
        assert_eq!(s.envelope(), &Envelope::build(&g, s.support()).unwrap());
    }

    #[test]
    fn improper_swap_is_refused() {
        // Replacing the only node with a negative slope would open the right tail.
        let g = gauss();
        let mut s = sampler(Method::Cars, &g, &[-1.0, 0.5], 0);
        assert_eq!(s.try_swap(-0.1), Some(false));
        assert_eq!(s.support().nodes(), &[-1.0, 0.5]);
    }

    #[test]
    fn swap_too_close_is_noop() {
        let g = gauss();
        let mut s = sampler(Method::Cars, &g, &[-1.0, 0.0, 1.0], 0);
        assert_eq!(s.try_swap(1e-10), None);
    }

    #[test]
    fn ars_insert_skips_duplicates() {
        let g = gauss();
        let mut s = sampler(Method::Ars, &g, &[-1.0, 0.0, 1.0], 0);
        assert!(!s.insert_node(5e-10));
        assert_eq!(s.support().len(), 3);
        let before = s.envelope().log_normalizer();
        assert!(s.insert_node(0.3));
        assert_eq!(s.support().nodes(), &[-1.0, 0.0, 0.3, 1.0]);
        assert!(s.envelope().log_normalizer() <= before);
    }

    #[test]
    fn exact_envelope_accepts_everything() {
        // Flat V on a bounded interval: the single tangent is the target.
        let t = FnTarget::new(|_| 0.0, |_| 0.0, Support::new(0.0, 5.0).unwrap());
        let mut s = sampler(Method::Ars, &t, &[1.0, 2.0], 3);
        let (xs, stats) = s.run(1).unwrap();
        assert_eq!(xs.len(), 1);
        assert_eq!(stats.iterations, 1);
        let (_, stats) = s.run(1000).unwrap();
        assert_eq!(stats.iterations, 1000);
    }

    #[test]
    fn node_draws_are_always_accepted() {
        // At a node the envelope touches V, so log u <= 0 always passes.
        let g = gauss();
        let env = Envelope::build(&g, &SupportSet::new(vec![-1.0, 0.0, 1.0], &g).unwrap()).unwrap();
        for &s in &[-1.0, 0.0, 1.0] {
            let w = env.log_eval(s).unwrap();
            assert!((g.log_density(s) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn step_outcome_flags_are_consistent() {
        let g = gauss();
        for method in [Method::Ars, Method::Cars] {
            let mut s = sampler(method, &g, &[-1.5, -1.0, 1.8], 9);
            let mut prev = s.envelope().log_normalizer();
            for _ in 0..5000 {
                let o = s.step().unwrap();
                assert!(!o.swap_accepted || o.swap_attempted);
                assert!(!o.swap_attempted || !o.accepted);
                assert!(o.log_normalizer_after <= prev);
                if o.swap_accepted {
                    assert!(o.log_normalizer_after < prev);
                }
                if o.accepted {
                    assert_eq!(o.log_normalizer_after, prev);
                }
                prev = o.log_normalizer_after;
                assert!(s.accepted() <= s.iterations());
                if method == Method::Cars {
                    assert_eq!(s.support().len(), 3);
                }
            }
        }
    }

    #[test]
    fn run_reports_stats() {
        let g = gauss();
        let mut s = sampler(Method::Cars, &g, &[-1.0, 0.0, 1.0], 1);
        let (xs, st) = s.run(2000).unwrap();
        assert_eq!(xs.len(), 2000);
        assert_eq!(st.accepted, 2000);
        assert!(st.iterations >= 2000);
        assert_eq!(st.final_nodes, 3);
        let exact = (g.known_log_normalizer().unwrap() - st.final_log_normalizer).exp();
        assert_eq!(st.final_acceptance_rate, exact);
        assert!(st.final_acceptance_rate >= std::f64::consts::PI.sqrt() / 2.0 - 1e-12);
    }

    #[test]
    fn empirical_rate_without_normalizer() {
        let t = FnTarget::new(|x: f64| -x * x, |x: f64| -2.0 * x, Support::REAL_LINE);
        let mut s = sampler(Method::Ars, &t, &[-1.0, 1.0], 1);
        let (_, st) = s.run(100).unwrap();
        assert_eq!(st.final_acceptance_rate, st.empirical_acceptance_rate);
    }

    #[test]
    fn same_seed_same_stream() {
        let g = gauss();
        let a = sampler(Method::Cars, &g, &[-1.5, -1.0, 1.8], 42)
            .run(3000)
            .unwrap();
        let b = sampler(Method::Cars, &g, &[-1.5, -1.0, 1.8], 42)
            .run(3000)
            .unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.iterations, b.1.iterations);
        assert_eq!(a.1.final_log_normalizer, b.1.final_log_normalizer);
    }

    #[test]
    fn initial_support_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = gauss();
        for _ in 0..200 {
            let s = initial_support(
                &g,
                InitialRule::UniformWindow { lo: -2.0, hi: 2.0 },
                3,
                &mut rng,
            )
            .unwrap();
            assert_eq!(s.len(), 3);
            assert!(g.log_density_derivative(s.first()) > 0.0);
            assert!(g.log_density_derivative(s.last()) < 0.0);
            assert!(s.nodes().iter().all(|x| (-2.0..=2.0).contains(x)));
        }
        let gm = Gamma::new(2.0, 2.0).unwrap();
        let s = initial_support(
            &gm,
            InitialRule::FixedEndpoints { lo: 0.01, hi: 4.0 },
            5,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.first(), 0.01);
        assert_eq!(s.last(), 4.0);
        assert!(s.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn initial_support_redraws_improper_sets() {
        // With two nodes on [-2, 2] roughly half the draws are one-sided.
        let g = gauss();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let s = initial_support(
                &g,
                InitialRule::UniformWindow { lo: -2.0, hi: 2.0 },
                2,
                &mut rng,
            )
            .unwrap();
            assert!(s.first() < 0.0 && s.last() > 0.0);
        }
    }

    #[test]
    fn initial_support_gives_up() {
        let g = gauss();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            initial_support(
                &g,
                InitialRule::UniformWindow { lo: 0.5, hi: 2.0 },
                3,
                &mut rng
            ),
            Err(Error::Initialization {
                attempts: MAX_INIT_ATTEMPTS
            })
        ));
        assert!(matches!(
            initial_support(
                &g,
                InitialRule::UniformWindow { lo: -2.0, hi: 2.0 },
                1,
                &mut rng
            ),
            Err(Error::InvalidArgument(_))
        ));
        let gm = Gamma::new(2.0, 2.0).unwrap();
        assert!(matches!(
            initial_support(
                &gm,
                InitialRule::FixedEndpoints { lo: 0.01, hi: 1.0 },
                4,
                &mut rng
            ),
            Err(Error::Initialization { .. })
        ));
        assert!(matches!(
            initial_support(
                &gm,
                InitialRule::FixedEndpoints { lo: 0.0, hi: 4.0 },
                4,
                &mut rng
            ),
            Err(Error::OutsideSupport { .. })
        ));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("ars".parse::<Method>().unwrap(), Method::Ars);
        assert_eq!("CARS".parse::<Method>().unwrap(), Method::Cars);
        assert!("gibbs".parse::<Method>().is_err());
    }
}
