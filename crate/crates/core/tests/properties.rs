use ars_core::quadrature::integrate;
use ars_core::{
    ks_statistic, BuiltinTarget, Envelope, Gamma, Gaussian, LogConcaveTarget, Method, Sampler,
    SupportSet,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian_case() -> impl Strategy<Value = (BuiltinTarget, Vec<f64>)> {
    (0.05f64..5.0, prop::collection::vec(-4.0f64..4.0, 2..15)).prop_filter_map(
        "improper",
        |(s2, nodes)| {
            let t: BuiltinTarget = Gaussian::new(s2).ok()?.into();
            SupportSet::new(nodes.clone(), &t).ok()?;
            Some((t, nodes))
        },
    )
}

fn gamma_case() -> impl Strategy<Value = (BuiltinTarget, Vec<f64>)> {
    (
        1.1f64..6.0,
        0.2f64..4.0,
        prop::collection::vec(0.01f64..20.0, 2..15),
    )
        .prop_filter_map("improper", |(shape, scale, nodes)| {
            let t: BuiltinTarget = Gamma::new(shape, scale).ok()?.into();
            SupportSet::new(nodes.clone(), &t).ok()?;
            Some((t, nodes))
        })
}

fn any_case() -> impl Strategy<Value = (BuiltinTarget, Vec<f64>)> {
    prop_oneof![gaussian_case(), gamma_case()]
}

fn build(t: &BuiltinTarget, nodes: &[f64]) -> Envelope {
    Envelope::build(t, &SupportSet::new(nodes.to_vec(), t).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hull_dominates_and_touches((t, nodes) in any_case(), probes in prop::collection::vec(0.0f64..1.0, 50)) {
        let env = build(&t, &nodes);
        let (lo, hi) = match t {
            BuiltinTarget::Gaussian(_) => (-12.0, 12.0),
            BuiltinTarget::Gamma(_) => (1e-4, 80.0),
        };
        for p in probes {
            let x = lo + p * (hi - lo);
            let gap = env.log_eval(x).unwrap() - t.log_density(x);
            prop_assert!(gap >= -1e-9 * (1.0 + t.log_density(x).abs()), "gap {gap} at {x}");
        }
        for &s in &nodes {
            let v = t.log_density(s);
            prop_assert!((env.log_eval(s).unwrap() - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn extra_node_never_loosens((t, nodes) in any_case(), frac in 0.0f64..1.0) {
        let env = build(&t, &nodes);
        let mut set = SupportSet::new(nodes.clone(), &t).unwrap();
        let x = set.first() + frac * (set.last() - set.first());
        if set.insert(x) {
            let grown = Envelope::build(&t, &set).unwrap();
            prop_assert!(grown.log_normalizer() <= env.log_normalizer() + 1e-12);
        }
    }

    #[test]
    fn normalized_envelope_integrates_to_one((t, nodes) in any_case()) {
        let env = build(&t, &nodes);
        let log_c = env.log_normalizer();
        let total: f64 = env
            .pieces()
            .iter()
            .map(|p| integrate(|x| (p.eval(x) - log_c).exp(), p.left, p.right, 1e-11).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-7, "total {total}");
    }

    #[test]
    fn envelope_cdf_is_monotone((t, nodes) in any_case(), mut probes in prop::collection::vec(-20.0f64..60.0, 30)) {
        let env = build(&t, &nodes);
        probes.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for x in probes {
            let f = env.cdf(x);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev - 1e-14);
            prev = f;
        }
        prop_assert_eq!(env.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn sampler_envelope_matches_rebuild((t, nodes) in any_case(), seed in 0u64..1000, cars in any::<bool>()) {
        let method = if cars { Method::Cars } else { Method::Ars };
        let set = SupportSet::new(nodes, &t).unwrap();
        let mut s = Sampler::new(method, &t, set, ChaCha8Rng::seed_from_u64(seed)).unwrap();
        s.run(500).unwrap();
        let rebuilt = Envelope::build(&t, s.support()).unwrap();
        prop_assert_eq!(&rebuilt, s.envelope());
    }
}

#[test]
fn envelope_draws_follow_envelope_cdf() {
    let t: BuiltinTarget = Gamma::new(2.0, 2.0).unwrap().into();
    let env = build(&t, &[0.3, 1.5, 2.0, 7.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| env.sample(&mut rng).unwrap())
        .collect();
    let d = ks_statistic(&xs, |x| env.cdf(x)).unwrap();
    assert!(d < 0.002, "KS {d}");
}
