use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use charmoment::bounds::{completion_identity_check, weil_check};
use charmoment::characters::{mult_char_of_order, AddChar};
use charmoment::constants::{c_const_with, ConstantCache, SeriesParams, TruncationPolicy};
use charmoment::field::{is_prime, PrimeFieldCtx};
use charmoment::harness::{
    from_csv, from_json, run_sweep, to_csv, to_json, ExperimentSpec, PolySpec, PrimeSelection,
};
use charmoment::moments::{scan_mult, verify_thm2, weighted_sum, Interval, VerifyOptions};
use charmoment::poly::ModPoly;

fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&p| is_prime(p)).collect()
}

fn sample_prime() -> impl Strategy<Value = u64> {
    proptest::sample::select(primes_between(11, 400))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweeps_are_deterministic_and_account_for_every_prime(lo in 3u64..300, width in 10u64..200, m in 0.1f64..1.0) {
        let spec = ExperimentSpec::thm1(PolySpec::Coeffs("1,1,0,1".into()), 3, m, PrimeSelection::Range { lo, hi: lo + width });
        let first = run_sweep(&spec);
        let second = run_sweep(&spec);
        match (first, second) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.records.len() + a.skipped.len(), a.total_primes);
                prop_assert_eq!(a.total_primes, primes_between(lo, lo + width).len());
                prop_assert_eq!(a.records.len(), b.records.len());
                for (x, y) in a.records.iter().zip(&b.records) {
                    let mut y = y.clone();
                    y.wall_ms = x.wall_ms;
                    prop_assert_eq!(x, &y);
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "runs disagree"),
        }
    }

    #[test]
    fn emitted_records_round_trip(lo in 50u64..500, m in 0.05f64..1.0) {
        let spec = ExperimentSpec::thm2(PolySpec::Coeffs("2,0,3,1".into()), 3, m, PrimeSelection::Range { lo, hi: lo + 60 });
        let out = run_sweep(&spec).unwrap();
        prop_assert_eq!(from_json(&to_json(&out.records)).unwrap(), out.records.clone());
        prop_assert_eq!(from_csv(&to_csv(&out.records).unwrap()).unwrap(), out.records);
    }

    #[test]
    fn moments_stay_within_trivial_bounds(p in sample_prime(), a in 1u64..1000, m in 0.05f64..1.0, start in 0u64..1000, len in 1u64..400) {
        let ctx = Arc::new(PrimeFieldCtx::new(p).unwrap());
        let psi = AddChar::new(ctx, a % p + 1).unwrap();
        let f = ModPoly::from_i64(&[1, 3, 0, 1], p);
        let iv = Interval::new(start % p, len.min(p), p).unwrap();
        let r = verify_thm2(&psi, &f, iv, m, &VerifyOptions::default(), &mut ConstantCache::new()).unwrap();
        prop_assert!(r.lhs >= 0.0);
        prop_assert!(r.lhs <= 4f64.powf(m) * iv.len as f64 + 1e-9);
        prop_assert!(r.constant < 4f64.powf(m));
        prop_assert_eq!(r.m1 + r.m2 + r.m3_count + r.both_noncoprime, iv.len);
    }

    #[test]
    fn full_period_mult_moment_matches_constant_for_linear_ratio(p in proptest::sample::select(primes_between(13, 600).into_iter().filter(|p| p % 3 == 1).collect::<Vec<_>>()), m in 0.1f64..1.0) {
        // F = X makes F(n+1)/F(n) run over every value except 0 and 1 once each.
        let ctx = Arc::new(PrimeFieldCtx::new(p).unwrap());
        let chi = mult_char_of_order(ctx, 3).unwrap();
        let f = ModPoly::new(vec![0, 1], p);
        let scan = scan_mult(&chi, &f, Interval::full(p)).unwrap();
        let lhs = weighted_sum(&scan.hist, 3, m);
        let c = c_const_with(&SeriesParams::new(m, 3).with_policy(TruncationPolicy::Truncate), &mut ConstantCache::new(), true).unwrap();
        let direct: f64 = (2..p)
            .map(|r| (Complex64::new(1.0, 0.0) - chi.eval_complex(r)).norm().powf(2.0 * m))
            .sum();
        prop_assert!((lhs - direct).abs() < 1e-9 * p as f64);
        // The p-2 ratios cover each coset (p-1)/3 times, minus the ratio 1 itself.
        let expect = c.oracle_value.unwrap() * (p - 1) as f64;
        prop_assert!((lhs - expect).abs() < 1e-8 * p as f64);
    }

    #[test]
    fn completion_matches_weil_for_full_interval(p in sample_prime(), a in 1u64..1000, c0 in 0u64..1000, c1 in 0u64..1000) {
        let ctx = Arc::new(PrimeFieldCtx::new(p).unwrap());
        let psi = AddChar::new(ctx, a % (p - 1) + 1).unwrap();
        let g = ModPoly::new(vec![c0 % p, c1 % p, 1], p);
        let comp = completion_identity_check(&psi, &g, Interval::full(p)).unwrap();
        let weil = weil_check(&psi, &g).unwrap();
        prop_assert!(comp.ok);
        prop_assert!((comp.direct().norm() - weil.lhs_mag).abs() < 1e-9);
    }
}
