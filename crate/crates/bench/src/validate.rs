//! A quick self-check of the sampler invariants, run by `ars-bench validate`.

use ars_core::diagnostics::{exact_acceptance_rate, l1_distance};
use ars_core::{
    initial_support, ks_statistic, BuiltinTarget, Envelope, Gamma, Gaussian, InitialRule,
    LogConcaveTarget, Method, Sampler,
};
use rand::Rng;

use crate::error::Result;
use crate::experiment::replica_rng;

/// Slack for the hull dominance check.
pub const DOMINANCE_SLACK: f64 = 1e-9;
/// KS threshold for 10^5 accepted draws.
pub const KS_THRESHOLD: f64 = 0.006;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Targets and their reference initial rules.
pub fn reference_targets() -> Vec<(BuiltinTarget, InitialRule)> {
    vec![
        (
            Gaussian::new(0.5).expect("valid").into(),
            InitialRule::UniformWindow { lo: -2.0, hi: 2.0 },
        ),
        (
            Gamma::new(2.0, 2.0).expect("valid").into(),
            InitialRule::FixedEndpoints { lo: 0.01, hi: 4.0 },
        ),
    ]
}

/// `min_x W(x) - V(x)` over `points` evenly spaced points spanning the
/// interesting part of the support.
pub fn min_hull_gap(env: &Envelope, target: &BuiltinTarget, points: usize) -> f64 {
    let (lo, hi) = match target {
        BuiltinTarget::Gaussian(_) => (-10.0, 10.0),
        BuiltinTarget::Gamma(_) => (1e-6, 60.0),
    };
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            env.log_eval(x).expect("grid is inside the support") - target.log_density(x)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn run_validation(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = replica_rng(seed);
    let mut out = Vec::new();

    for (target, rule) in reference_targets() {
        let name = target.name();

        let mut worst_gap = f64::INFINITY;
        let mut worst_identity: f64 = 0.0;
        for _ in 0..50 {
            let m = rng.random_range(2..12);
            let set = initial_support(&target, rule, m, &mut rng)?;
            let env = Envelope::build(&target, &set)?;
            worst_gap = worst_gap.min(min_hull_gap(&env, &target, 10_000));
            let eta = exact_acceptance_rate(&env, &target)?;
            let d = l1_distance(&env, &target)?;
            let c = env.log_normalizer().exp();
            worst_identity = worst_identity.max((eta + d / c - 1.0).abs());
        }
        out.push(check(
            &format!("{name}: hull dominance"),
            worst_gap >= -DOMINANCE_SLACK,
            format!("min W - V = {worst_gap:.3e}"),
        ));
        out.push(check(
            &format!("{name}: eta + D/c = 1"),
            worst_identity <= 1e-10,
            format!("max error {worst_identity:.3e}"),
        ));

        for method in [Method::Ars, Method::Cars] {
            let set = initial_support(&target, rule, 5, &mut rng)?;
            let mut sampler = Sampler::new(method, &target, set, replica_rng(rng.random()))?;
            let mut prev = sampler.envelope().log_normalizer();
            let mut violations = 0usize;
            let (samples, stats) = sampler.run_with_hook(100_000, |o| {
                if o.log_normalizer_after > prev {
                    violations += 1;
                }
                prev = o.log_normalizer_after;
            })?;
            out.push(check(
                &format!("{name}/{method}: monotone normalizer"),
                violations == 0,
                format!("{violations} increases over {} steps", stats.iterations),
            ));
            let ks = ks_statistic(&samples, |x| target.cdf(x))?;
            out.push(check(
                &format!("{name}/{method}: KS vs exact CDF"),
                ks < KS_THRESHOLD,
                format!("D = {ks:.5}"),
            ));
            if method == Method::Cars {
                out.push(check(
                    &format!("{name}/{method}: node budget"),
                    stats.final_nodes == 5,
                    format!("m_T = {}", stats.final_nodes),
                ));
            }
        }
    }
    Ok(out)
}
