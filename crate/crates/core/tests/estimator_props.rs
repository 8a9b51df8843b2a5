use debsloc::estimator::{cost, effort, estimate_release, schedule, CocomoParams, ScheduleBasis};
use proptest::prelude::*;

fn packages() -> impl Strategy<Value = Vec<(String, u64)>> {
    prop::collection::vec(1u64..5_000_000, 2..20)
        .prop_map(|s| s.into_iter().enumerate().map(|(i, n)| (format!("p{i}"), n)).collect())
}

proptest! {
    #[test]
    fn whole_costs_more_than_parts(pkgs in packages()) {
        let p = CocomoParams::default();
        let split = estimate_release(&pkgs, &p, ScheduleBasis::PerPackageMax).unwrap();
        let mono = estimate_release(&pkgs, &p, ScheduleBasis::Monolithic).unwrap();
        prop_assert_eq!(split.total_sloc, mono.total_sloc);
        prop_assert!(mono.effort_pm > split.effort_pm);
        prop_assert!(mono.schedule_months >= split.schedule_months);
    }

    #[test]
    fn monotone_in_size(a in 0.0f64..1e6, d in 1e-3f64..1e5) {
        let p = CocomoParams::default();
        let (ea, eb) = (effort(a, &p).unwrap(), effort(a + d, &p).unwrap());
        prop_assert!(eb > ea);
        prop_assert!(schedule(eb, &p).unwrap() > schedule(ea, &p).unwrap());
        prop_assert!(cost(eb, &p).unwrap() > cost(ea, &p).unwrap());
    }

    #[test]
    fn person_years_are_months_over_twelve(pkgs in packages()) {
        let p = CocomoParams::default();
        let r = estimate_release(&pkgs, &p, ScheduleBasis::PerPackageMax).unwrap();
        prop_assert!((r.effort_py * 12.0 - r.effort_pm).abs() <= 1e-9 * r.effort_pm);
        let sum: f64 = r.per_package.iter().map(|e| e.effort_pm).sum();
        prop_assert!((sum - r.effort_pm).abs() <= 1e-9 * sum);
        // cost = py * salary * overhead
        let usd = r.effort_py * p.salary * p.overhead;
        prop_assert!((r.cost_usd - usd).abs() <= 1e-9 * usd);
    }
}
