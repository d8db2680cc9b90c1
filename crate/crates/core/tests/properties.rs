use ehpc::analysis::{asymptotic_sweep, Regime};
use ehpc::output::fmt_g;
use ehpc::reward::{hull_envelope, Hull};
use ehpc::sim::{simulate, Policy, PolicySpec};
use ehpc::spec::parse_number_list;
use ehpc::threshold::{
    bound_lower, bound_upper, c_star, c_star_auto, d_value, greedy_throughput, semi_bounds_awgn, throughput_upper,
};
use ehpc::{EnergyDistribution, FamilyName, RewardFunction};
use proptest::prelude::*;
use std::sync::Arc;

fn family() -> impl Strategy<Value = FamilyName> {
    prop::sample::select(FamilyName::ALL.to_vec())
}

fn bernoulli() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..3.0f64, 0.05..10.0f64, 0.02..0.98f64).prop_map(|(lo, gap, p)| (lo, lo + gap, p))
}

fn discrete() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (0.0..2.0f64, prop::collection::vec((0.1..3.0f64, 0.05..1.0f64), 1..6)).prop_map(|(start, steps)| {
        let total: f64 = steps.iter().map(|s| s.1).sum();
        let mut x = start;
        steps
            .into_iter()
            .map(|(gap, m)| {
                let atom = (x, m / total);
                x += gap;
                atom
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spec_display_round_trips(f in family(), mu in 0.05..50.0f64) {
        let d = f.with_mean(mu).unwrap();
        let again = EnergyDistribution::parse(&d.to_string()).unwrap();
        prop_assert_eq!(d.to_string(), again.to_string());
        prop_assert!((again.mean() - mu).abs() <= 1e-9 * mu);
    }

    #[test]
    fn discrete_round_trips(points in discrete()) {
        let d = EnergyDistribution::finite_discrete(points).unwrap();
        let again = EnergyDistribution::parse(&d.to_string()).unwrap();
        prop_assert_eq!(d.to_string(), again.to_string());
        let total: f64 = d.atoms().unwrap().map(|(_, m)| m).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone_and_strict(f in family(), mu in 0.1..20.0f64, a in 0.0..30.0f64, b in 0.0..30.0f64) {
        let d = f.with_mean(mu).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fa, fb) = (d.cdf_strict(lo), d.cdf_strict(hi));
        prop_assert!((0.0..=1.0).contains(&fa) && fa <= fb + 1e-15);
        prop_assert!((fa + d.survival(lo) - 1.0).abs() < 1e-12);
        prop_assert!(d.point_mass(lo) <= d.survival(lo) + 1e-15);
    }

    #[test]
    fn truncated_expect_of_one_is_cdf(f in family(), mu in 0.1..20.0f64, c in 0.01..40.0f64) {
        let d = f.with_mean(mu).unwrap();
        let v = d.truncated_expect(|_| 1.0, c).unwrap();
        prop_assert!((v - d.cdf_strict(c)).abs() < 1e-9, "{} vs {}", v, d.cdf_strict(c));
    }

    #[test]
    fn awgn_envelopes_bracket_derivative(lo in 0.0..5.0f64, width in 0.01..20.0f64, t in 0.0..1.0f64) {
        let r = RewardFunction::Awgn;
        let c = lo + width;
        let x = lo + t * width;
        let up = r.deriv_upper_concave_env(lo, c, x).unwrap();
        let down = r.deriv_lower_convex_env(lo, c, x).unwrap();
        prop_assert!(down <= r.derivative(x) + 1e-15 && r.derivative(x) <= up + 1e-15);
    }

    #[test]
    fn sampled_hull_matches_chord(lo in 0.0..5.0f64, width in 0.01..20.0f64, t in 0.0..1.0f64) {
        let r = RewardFunction::Awgn;
        let c = lo + width;
        let x = lo + t * width;
        let hull = hull_envelope(|y| r.derivative(y), lo, c, x, 4097, Hull::Upper);
        let chord = r.deriv_upper_concave_env(lo, c, x).unwrap();
        prop_assert!((hull - chord).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_bounds_are_ordered((lo, hi, p) in bernoulli()) {
        let d = EnergyDistribution::bernoulli(lo, hi, p).unwrap();
        let r = RewardFunction::Awgn;
        let cs = c_star(&d, &r).unwrap();
        let lower = bound_lower(&d, &r).unwrap();
        let upper = bound_upper(&d, &r).unwrap().finite().unwrap();
        let (semi_lower, semi_upper) = semi_bounds_awgn(lo, hi, d.mean()).unwrap();
        let slack = 1e-8;
        prop_assert!(semi_lower <= lower + slack && lower <= cs + slack);
        prop_assert!(cs <= upper + slack && upper <= semi_upper + slack && d.mean() < upper);
    }

    #[test]
    fn d_changes_sign_at_threshold(f in family(), mu in 0.1..10.0f64) {
        let d = f.with_mean(mu).unwrap();
        let r = RewardFunction::Awgn;
        let (cs, _) = c_star_auto(&d, &r).unwrap();
        prop_assert!(d_value(&d, &r, 0.5 * cs).unwrap() >= 0.0);
        prop_assert!(d_value(&d, &r, 1.5 * cs + 1e-6).unwrap() < 0.0);
    }

    #[test]
    fn throughput_bounds_are_ordered(f in family(), mu in 0.1..10.0f64, c in 0.01..20.0f64) {
        let d = f.with_mean(mu).unwrap();
        let r = RewardFunction::Awgn;
        prop_assert!(greedy_throughput(&d, &r, c).unwrap() <= throughput_upper(&d, &r, c).unwrap() + 1e-12);
    }

    #[test]
    fn fmt_g_keeps_twelve_digits(v in prop::num::f64::NORMAL) {
        let back: f64 = fmt_g(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-12 * v.abs());
    }

    #[test]
    fn policy_spec_round_trips(eps in 1e-3..10.0f64) {
        let spec = PolicySpec::Modified { eps };
        prop_assert_eq!(PolicySpec::parse(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn number_list_round_trips(values in prop::collection::vec(-1e6..1e6f64, 1..8)) {
        let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        prop_assert_eq!(parse_number_list(&text.join(",")).unwrap(), values);
    }

    #[test]
    fn parsers_never_panic(s in "\\PC{0,40}") {
        let _ = EnergyDistribution::parse(&s);
        let _ = RewardFunction::parse(&s);
        let _ = PolicySpec::parse(&s);
        let _ = parse_number_list(&s);
    }

    #[test]
    fn grammar_shaped_inputs_never_panic(
        name in prop::sample::select(vec!["bernoulli", "discrete", "geometric", "poisson", "uniform", "exponential", "rayleigh", "linear", "modified"]),
        pairs in prop::collection::vec(("[a-z]{1,6}", "-?[0-9.eE+-]{0,8}|nan|inf|[0-9:;]{0,10}"), 0..4),
    ) {
        let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let s = format!("{name}:{}", body.join(","));
        let _ = EnergyDistribution::parse(&s);
        let _ = RewardFunction::parse(&s);
        let _ = PolicySpec::parse(&s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn custom_policies_keep_battery_in_range(f in family(), mu in 0.2..5.0f64, c in 0.1..8.0f64, frac in 0.0..=1.0f64, seed: u64) {
        let d = f.with_mean(mu).unwrap();
        let policy = Policy::Custom(Arc::new(move |b| frac * b));
        let res = simulate(&policy, &d, &RewardFunction::Awgn, c, 2_000, seed).unwrap();
        prop_assert!((0.0..=c).contains(&res.final_battery));
        prop_assert!(res.avg_reward <= throughput_upper(&d, &RewardFunction::Awgn, c).unwrap() + 0.5);
    }

    #[test]
    fn sweep_rows_follow_input(f in family(), start in -3.0..-1.0f64) {
        let mus = [10f64.powf(start), 10f64.powf(start + 0.5), 10f64.powf(start + 1.0)];
        let rows = asymptotic_sweep(f, Regime::Small, &mus).unwrap();
        for (row, mu) in rows.iter().zip(mus) {
            prop_assert_eq!(row.mu, mu);
            prop_assert!(row.c_star > 0.0 && row.psi > 0.0 && row.ratio.is_finite());
        }
    }
}

#[test]
fn degenerate_reward_is_reported() {
    let d = EnergyDistribution::uniform(2.0).unwrap();
    let r = RewardFunction::linear(1.0).unwrap();
    assert!(matches!(c_star(&d, &r), Err(ehpc::Error::Degenerate { .. })));
}
