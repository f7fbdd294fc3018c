//! Main-term constants `C(t, m)` and `D(p, m)` as truncated binomial series.
//!
//! Both constants have the shape `2^m · Σ_k (-1)^k c_k y_k` with
//! `c_k = binom(m, k)` and `y_k = 2^{-k} Σ_{2r ≡ k (mod M)} binom(k, r)`.
//! `y_k` is the probability that a ±1 random walk of `k` steps ends on a
//! multiple of `M`. It tends to `1/M` (odd M) or to `2/M` on even steps
//! (even M), and the series is summed with that limit split off in closed
//! form: the remaining terms decay geometrically.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::field::is_prime;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_K_MAX: u64 = 100_000;
/// The additive constant carries an oracle value only up to this prime.
pub const ORACLE_PRIME_LIMIT: u64 = 100_000;

const EXACT_K: u64 = 64;
// Lattice terms below e^-600 are never materialized.
const LN_CUTOFF: f64 = -600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstantError {
    #[error("exponent m = {0} outside (0, 1]")]
    InvalidExponent(f64),
    #[error("modulus {0} must be at least 2")]
    InvalidModulus(u64),
    #[error("order t = {0} must exceed 2")]
    OrderTooSmall(u64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("tolerance {0} must be positive")]
    InvalidTolerance(f64),
    #[error(
        "series did not reach tolerance {tol} within {k_max} terms (tail bound {tail_bound:e})"
    )]
    NoConvergence {
        k_max: u64,
        tol: f64,
        tail_bound: f64,
    },
}

/// What to do when the tail bound is still above `tol` at `k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationPolicy {
    #[default]
    Fail,
    /// Return the partial value with its honest tail bound.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub m: f64,
    pub modulus: u64,
    pub tol: f64,
    pub k_max: u64,
    pub policy: TruncationPolicy,
}

impl SeriesParams {
    pub fn new(m: f64, modulus: u64) -> Self {
        SeriesParams {
            m,
            modulus,
            tol: DEFAULT_TOL,
            k_max: DEFAULT_K_MAX,
            policy: TruncationPolicy::Fail,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_k_max(mut self, k_max: u64) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_policy(mut self, policy: TruncationPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self) -> Result<(), ConstantError> {
        if !(self.m > 0.0 && self.m <= 1.0) {
            return Err(ConstantError::InvalidExponent(self.m));
        }
        if self.modulus < 2 {
            return Err(ConstantError::InvalidModulus(self.modulus));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ConstantError::InvalidTolerance(self.tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub m: f64,
    pub modulus: u64,
    pub value: f64,
    /// Number of series terms consumed, `k = 0 .. k_used - 1`.
    pub k_used: u64,
    pub tail_bound: f64,
    pub oracle_value: Option<f64>,
    pub converged: bool,
}

/// `binom(m, k)` for real `m`.
pub fn binom_frac(m: f64, k: u64) -> f64 {
    (1..=k).fold(1.0, |c, j| c * (m - j as f64 + 1.0) / j as f64)
}

fn exact_qualifying_sum(modulus: u64, k: u64) -> BigUint {
    let mut total = BigUint::default();
    let mut b = BigUint::one();
    for r in 0..=k {
        if (2 * r) % modulus == k % modulus {
            total += &b;
        }
        b = b * (k - r) / (r + 1);
    }
    total
}

fn ln_binom(k: u64, r: u64) -> f64 {
    ln_gamma(k as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((k - r) as f64 + 1.0)
}

/// `y_k = 2^{-k} Σ_{0 ≤ r ≤ k, 2r ≡ k (mod M)} binom(k, r)`.
pub fn walk_return_probability(modulus: u64, k: u64) -> f64 {
    assert!(modulus >= 1);
    if k <= EXACT_K {
        return exact_qualifying_sum(modulus, k)
            .to_f64()
            .unwrap_or(f64::INFINITY)
            / 2f64.powi(k as i32);
    }
    let ln2k = k as f64 * std::f64::consts::LN_2;
    (0..=k)
        .filter(|r| (2 * r) % modulus == k % modulus)
        .map(|r| (ln_binom(k, r) - ln2k).exp())
        .sum()
}

fn coeff(m: f64, modulus: u64, k: u64) -> f64 {
    if k <= EXACT_K {
        let s = exact_qualifying_sum(modulus, k)
            .to_f64()
            .unwrap_or(f64::INFINITY);
        return binom_frac(m, k) * s;
    }
    let c = binom_frac(m, k);
    if c == 0.0 {
        return 0.0;
    }
    let y = walk_return_probability(modulus, k);
    if y == 0.0 {
        return 0.0;
    }
    c.signum() * (c.abs().ln() + y.ln() + k as f64 * std::f64::consts::LN_2).exp()
}

/// `u_k = c_k Σ_{2r ≡ k (mod t)} binom(k, r)`; overflows to ±inf for very large k.
pub fn u_coeff(m: f64, t: u64, k: u64) -> f64 {
    coeff(m, t, k)
}

/// `v_k`, the same sum with modulus `p`.
pub fn v_coeff(m: f64, p: u64, k: u64) -> f64 {
    coeff(m, p, k)
}

/// `(1/M) Σ_{j=0}^{M-1} |1 - e(j/M)|^{2m}`, summed directly.
pub fn roots_avg_oracle(m: f64, modulus: u64) -> f64 {
    assert!(modulus >= 1);
    let mf = modulus as f64;
    let mut acc = crate::numeric::NeumaierSum::default();
    for j in 0..modulus {
        acc.add((2.0 * (PI * j as f64 / mf).sin().abs()).powf(2.0 * m));
    }
    acc.total() / mf
}

#[derive(Debug, Clone)]
struct LatticeTerm {
    x: u64,
    // P_k(x) for the current k of matching parity
    k: u64,
    value: f64,
}

/// Lazily extended sequence `y_0, y_1, ...` for one modulus.
///
/// `y_k = P_k(0) + 2 Σ_{l ≥ 1} P_k(lM)` where `P_k(x)` is the probability of
/// the walk sitting at `x`; each lattice term follows the two-step recurrence
/// in `k` once it is large enough to matter.
#[derive(Debug, Clone)]
pub struct WalkProfile {
    modulus: u64,
    y: Vec<f64>,
    active: Vec<LatticeTerm>,
    next_l: u64,
}

impl WalkProfile {
    pub fn new(modulus: u64) -> Self {
        assert!(modulus >= 1);
        WalkProfile {
            modulus,
            y: Vec::new(),
            active: vec![LatticeTerm {
                x: 0,
                k: 0,
                value: 1.0,
            }],
            next_l: 1,
        }
    }

    /// The walk without lattice points other than 0. It coincides with
    /// `WalkProfile::new(M)` for `k <= k_max` whenever `M^2 >= 1200 k_max`,
    /// since `P_k(x) <= exp(-x^2/2k)`.
    pub fn central() -> Self {
        WalkProfile {
            modulus: 0,
            y: Vec::new(),
            active: vec![LatticeTerm {
                x: 0,
                k: 0,
                value: 1.0,
            }],
            next_l: 1,
        }
    }

    fn lattice_free_up_to(modulus: u64, k_max: u64) -> bool {
        let mf = modulus as f64;
        mf * mf >= -2.0 * LN_CUTOFF * k_max as f64
    }

    /// `y_0 ..= y_k`.
    pub fn prefix(&mut self, k: u64) -> &[f64] {
        while self.y.len() as u64 <= k {
            self.push_next();
        }
        &self.y[..=k as usize]
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn ln_p(k: u64, x: u64) -> f64 {
        ln_binom(k, (k + x) / 2) - k as f64 * std::f64::consts::LN_2
    }

    fn push_next(&mut self) {
        let k = self.y.len() as u64;
        let m = self.modulus;
        // activate further lattice points that have become visible
        if m != 0 {
            loop {
                let x = self.next_l * m;
                if x > k {
                    break;
                }
                if !(k - x).is_multiple_of(2) {
                    // retry at k + 1
                    break;
                }
                let lp = Self::ln_p(k, x);
                if lp <= LN_CUTOFF {
                    break;
                }
                self.active.push(LatticeTerm {
                    x,
                    k,
                    value: lp.exp(),
                });
                self.next_l += 1;
            }
        }
        let mut y = 0.0;
        for term in self.active.iter_mut() {
            if term.k != k {
                continue;
            }
            y += if term.x == 0 {
                term.value
            } else {
                2.0 * term.value
            };
            let kf = k as f64;
            let up = ((k + term.x) / 2 + 1) as f64;
            let down = ((k - term.x) / 2 + 1) as f64;
            term.value *= (kf + 1.0) * (kf + 2.0) / (4.0 * up * down);
            term.k += 2;
        }
        self.y.push(y);
    }

    /// `y_k`, extending the table as needed.
    pub fn get(&mut self, k: u64) -> f64 {
        while self.y.len() as u64 <= k {
            self.push_next();
        }
        self.y[k as usize]
    }
}

/// `(modulus, m bits, tol bits, k_max, policy)`
type CacheKey = (u64, u64, u64, u64, TruncationPolicy);

/// Memo for repeated constant evaluations; also keeps the most recent walk
/// profile, which does not depend on `m`.
#[derive(Debug, Default)]
pub struct ConstantCache {
    results: HashMap<CacheKey, Result<ConstantResult, ConstantError>>,
    profile: Option<WalkProfile>,
    central: Option<WalkProfile>,
}

impl ConstantCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    fn profile(&mut self, modulus: u64, k_max: u64) -> &mut WalkProfile {
        if WalkProfile::lattice_free_up_to(modulus, k_max) {
            return self.central.get_or_insert_with(WalkProfile::central);
        }
        if self.profile.as_ref().map(|p| p.modulus) != Some(modulus) {
            self.profile = Some(WalkProfile::new(modulus));
        }
        self.profile.as_mut().expect("profile just set")
    }

    pub fn series(&mut self, params: &SeriesParams) -> Result<ConstantResult, ConstantError> {
        let key = (
            params.modulus,
            params.m.to_bits(),
            params.tol.to_bits(),
            params.k_max,
            params.policy,
        );
        if let Some(r) = self.results.get(&key) {
            return r.clone();
        }
        let r = params
            .validate()
            .and_then(|_| sum_series(params, self.profile(params.modulus, params.k_max)));
        self.results.insert(key, r.clone());
        r
    }
}

/// Sums the series in `params` without an oracle.
pub fn series_constant(params: &SeriesParams) -> Result<ConstantResult, ConstantError> {
    ConstantCache::new().series(params)
}

fn sum_series(
    params: &SeriesParams,
    profile: &mut WalkProfile,
) -> Result<ConstantResult, ConstantError> {
    let m = params.m;
    let modulus = params.modulus;
    let mf = modulus as f64;
    let even = modulus.is_multiple_of(2);
    let eps = if even { 1.0 } else { 0.0 };
    let q = match modulus {
        0..=2 => 0.0,
        _ if even => (2.0 * PI / mf).cos(),
        _ => (PI / mf).cos(),
    };
    let two_m = 2f64.powf(m);
    let limit = (1.0 + eps) / mf;
    let mut ys = profile.prefix(params.k_max.min(256).saturating_sub(1));
    let mut partial = crate::numeric::NeumaierSum::default();
    let mut sum_c = crate::numeric::NeumaierSum::default();
    let mut c = 1.0;
    // R_K = |binom(m-1, K)| = Σ_{k>K} |c_k|
    let mut r = 1.0;
    let mut tail = f64::INFINITY;
    let mut k_used = 0;
    for k in 0..params.k_max {
        let kf = k as f64;
        if k > 0 {
            c *= (m - kf + 1.0) / kf;
            r *= (kf - m) / kf;
        }
        if k as usize >= ys.len() {
            // grow the profile geometrically
            ys = profile.prefix((2 * k).min(params.k_max - 1));
        }
        let y = ys[k as usize];
        partial.add(if k % 2 == 0 { c * y } else { -c * y });
        if even {
            sum_c.add(c);
        }
        k_used = k + 1;
        // the tail is checked at every step early on, then every 8th
        if k >= 64 && k % 8 != 7 && k + 1 != params.k_max {
            continue;
        }
        let k_even = k - k % 2;
        let wbar = (ys[k_even as usize] - limit).max(0.0) + 1e-15;
        let c_next = (c * (m - kf) / (kf + 1.0)).abs();
        let geo = if q < 1.0 {
            c_next * q.powi((k + 1 - k_even) as i32) / (1.0 - q)
        } else {
            f64::INFINITY
        };
        tail = two_m * wbar * r.abs().min(geo);
        if tail <= params.tol {
            break;
        }
    }
    let correction = (-r.abs() + eps * (two_m - sum_c.total())) / mf;
    let value = two_m * (partial.total() + correction);
    let converged = tail <= params.tol;
    if !converged && params.policy == TruncationPolicy::Fail {
        return Err(ConstantError::NoConvergence {
            k_max: params.k_max,
            tol: params.tol,
            tail_bound: tail,
        });
    }
    Ok(ConstantResult {
        m,
        modulus,
        value,
        k_used,
        tail_bound: tail,
        oracle_value: None,
        converged,
    })
}

/// `C(t, m)`, the multiplicative main-term constant; depends on χ only through its order.
pub fn c_const(m: f64, t: u64, tol: f64) -> Result<ConstantResult, ConstantError> {
    c_const_with(
        &SeriesParams::new(m, t).with_tol(tol),
        &mut ConstantCache::new(),
        true,
    )
}

/// `C(t, m)` through a cache; `with_oracle` attaches the direct roots-of-unity average.
pub fn c_const_with(
    params: &SeriesParams,
    cache: &mut ConstantCache,
    with_oracle: bool,
) -> Result<ConstantResult, ConstantError> {
    if params.modulus <= 2 {
        return Err(ConstantError::OrderTooSmall(params.modulus));
    }
    let mut r = cache.series(params)?;
    if with_oracle {
        r.oracle_value = Some(roots_avg_oracle(params.m, params.modulus));
    }
    Ok(r)
}

/// `D(p, m)`, the additive main-term constant.
pub fn d_const(m: f64, p: u64, tol: f64) -> Result<ConstantResult, ConstantError> {
    d_const_with(
        &SeriesParams::new(m, p).with_tol(tol),
        &mut ConstantCache::new(),
        true,
    )
}

/// `D(p, m)` through a cache; the oracle is attached only for `p <= ORACLE_PRIME_LIMIT`.
pub fn d_const_with(
    params: &SeriesParams,
    cache: &mut ConstantCache,
    with_oracle: bool,
) -> Result<ConstantResult, ConstantError> {
    let p = params.modulus;
    if p < 3 || !is_prime(p) {
        return Err(ConstantError::NotOddPrime(p));
    }
    let mut r = cache.series(params)?;
    if with_oracle && p <= ORACLE_PRIME_LIMIT {
        r.oracle_value = Some(roots_avg_oracle(params.m, p));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn binom_frac_examples() {
        assert_eq!(binom_frac(0.5, 0), 1.0);
        assert_eq!(binom_frac(0.5, 1), 0.5);
        assert_eq!(binom_frac(0.5, 2), -0.125);
        let asym = 1.0 / (gamma(-0.3) * 40f64.powf(1.3));
        let c = binom_frac(0.3, 40);
        assert!(((c - asym) / asym).abs() < 0.05, "{c} vs {asym}");
        assert_eq!(binom_frac(1.0, 2), 0.0);
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(u_coeff(0.5, 3, 1), 0.0);
        assert_eq!(u_coeff(0.7, 5, 0), 1.0);
        assert_eq!(u_coeff(0.5, 4, 2), -0.25);
        assert_eq!(v_coeff(0.5, 7, 2), -0.25);
        assert_eq!(v_coeff(0.5, 7, 1), 0.0);
        assert_eq!(v_coeff(0.3, 7, 0), 1.0);
    }

    #[test]
    fn coefficients_below_modulus_are_central() {
        let p = 101;
        for k in 0..100u64 {
            let expected = if k % 2 == 0 {
                binom_frac(0.4, k) * exact_qualifying_sum(1_000_000, k).to_f64().unwrap()
            } else {
                0.0
            };
            let v = v_coeff(0.4, p, k);
            assert!(
                (v - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn float_and_exact_coefficients_agree() {
        for t in [3u64, 4, 7, 12] {
            for k in 50..=EXACT_K {
                let exact = exact_qualifying_sum(t, k).to_f64().unwrap() / 2f64.powi(k as i32);
                let ln2k = k as f64 * std::f64::consts::LN_2;
                let float: f64 = (0..=k)
                    .filter(|r| (2 * r) % t == k % t)
                    .map(|r| (ln_binom(k, r) - ln2k).exp())
                    .sum();
                assert!((exact - float).abs() < 1e-10, "t={t} k={k}");
            }
        }
    }

    #[test]
    fn profile_matches_direct_sums() {
        for modulus in [3u64, 4, 5, 8, 13, 64, 101] {
            let mut prof = WalkProfile::new(modulus);
            for k in 0..400 {
                let direct = walk_return_probability(modulus, k);
                let y = prof.get(k);
                assert!(
                    (direct - y).abs() < 1e-12,
                    "M={modulus} k={k}: {direct} vs {y}"
                );
            }
        }
    }

    #[test]
    fn central_profile_matches_large_modulus() {
        let k_max = 20_000;
        let modulus = 4_903;
        assert!(WalkProfile::lattice_free_up_to(modulus, k_max));
        let mut a = WalkProfile::new(modulus);
        let mut b = WalkProfile::central();
        assert_eq!(a.prefix(k_max - 1), b.prefix(k_max - 1));
    }

    #[test]
    fn oracle_examples() {
        assert!((roots_avg_oracle(1.0, 9) - 2.0).abs() < 1e-12);
        assert!((roots_avg_oracle(0.5, 2) - 1.0).abs() < 1e-15);
        assert!((roots_avg_oracle(0.5, 3) - 2.0 * 3f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_examples() {
        let r = c_const(1.0, 5, DEFAULT_TOL).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.k_used, 2);
        assert_eq!(r.tail_bound, 0.0);
        let r = c_const(0.5, 3, DEFAULT_TOL).unwrap();
        assert!((r.value - 2.0 * 3f64.sqrt() / 3.0).abs() < 1e-9);
        let r = c_const(0.5, 4, DEFAULT_TOL).unwrap();
        assert!((r.value - (2.0 + 2.0 * 2f64.sqrt()) / 4.0).abs() < 1e-9);
        assert_eq!(d_const(1.0, 7, DEFAULT_TOL).unwrap().value, 2.0);
        let r = d_const(0.5, 7, DEFAULT_TOL).unwrap();
        let closed = 2.0 / 7.0 / (PI / 14.0).tan();
        assert!((r.value - closed).abs() < 1e-9, "{} vs {closed}", r.value);
    }

    #[test]
    fn large_prime_additive_constant() {
        let params = SeriesParams::new(0.5, 10007).with_policy(TruncationPolicy::Truncate);
        let r = d_const_with(&params, &mut ConstantCache::new(), true).unwrap();
        assert!((r.value - 4.0 / PI).abs() < 1e-3);
        let oracle = r.oracle_value.unwrap();
        assert!((r.value - oracle).abs() <= 1e-8 + r.tail_bound);
        assert!(matches!(
            d_const(0.5, 10007, DEFAULT_TOL),
            Err(ConstantError::NoConvergence { .. })
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(
            c_const(0.5, 2, 1e-9).unwrap_err(),
            ConstantError::OrderTooSmall(2)
        );
        assert_eq!(
            d_const(0.5, 9, 1e-9).unwrap_err(),
            ConstantError::NotOddPrime(9)
        );
        assert_eq!(
            c_const(0.0, 3, 1e-9).unwrap_err(),
            ConstantError::InvalidExponent(0.0)
        );
        assert_eq!(
            c_const(1.5, 3, 1e-9).unwrap_err(),
            ConstantError::InvalidExponent(1.5)
        );
        assert!(matches!(
            c_const(0.5, 3, 0.0),
            Err(ConstantError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn oracle_equivalence_orders() {
        let mut cache = ConstantCache::new();
        for t in 3..=64u64 {
            for i in 1..=9 {
                let m = i as f64 / 10.0;
                let r = c_const_with(&SeriesParams::new(m, t), &mut cache, true).unwrap();
                let o = r.oracle_value.unwrap();
                assert!((r.value - o).abs() <= 1e-9 + r.tail_bound, "t={t} m={m}");
                assert!(r.value < 2f64.powf(2.0 * m));
            }
        }
    }

    #[test]
    fn doubling_k_max_stays_within_tail() {
        for (m, modulus) in [(0.1, 331u64), (0.5, 97), (0.9, 997), (0.3, 64)] {
            let short = SeriesParams::new(m, modulus)
                .with_k_max(2000)
                .with_policy(TruncationPolicy::Truncate);
            let long = short.with_k_max(4000);
            let a = series_constant(&short).unwrap();
            let b = series_constant(&long).unwrap();
            assert!(
                (a.value - b.value).abs() <= a.tail_bound + 1e-12,
                "M={modulus} m={m}"
            );
            let o = roots_avg_oracle(m, modulus);
            assert!((a.value - o).abs() <= a.tail_bound + 1e-10);
        }
    }

    #[test]
    fn cache_is_transparent() {
        let mut cache = ConstantCache::new();
        let params = SeriesParams::new(0.37, 11);
        let a = c_const_with(&params, &mut cache, true).unwrap();
        let b = c_const_with(&params, &mut cache, true).unwrap();
        let c = c_const_with(&params, &mut ConstantCache::new(), true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(cache.len(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn series_matches_oracle(m in 0.01f64..1.0, t in 3u64..200) {
            let r = c_const_with(
                &SeriesParams::new(m, t).with_policy(TruncationPolicy::Truncate),
                &mut ConstantCache::new(),
                true,
            ).unwrap();
            let o = r.oracle_value.unwrap();
            prop_assert!((r.value - o).abs() <= 1e-8 + r.tail_bound);
            prop_assert!(r.value >= 0.0);
            prop_assert!(r.value < 2f64.powf(2.0 * m));
        }

        #[test]
        fn m_equal_one_terminates(t in 3u64..10_000) {
            let r = series_constant(&SeriesParams::new(1.0, t)).unwrap();
            prop_assert_eq!(r.value, 2.0);
            prop_assert_eq!(r.k_used, 2);
        }
    }
}
