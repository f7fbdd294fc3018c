//! Moment sums of consecutive character differences and their verifiers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characters::{AddChar, MultChar};
use crate::constants::{
    c_const_with, d_const_with, ConstantCache, ConstantError, ConstantResult, SeriesParams,
    TruncationPolicy, DEFAULT_K_MAX, DEFAULT_TOL,
};
use crate::numeric::NeumaierSum;
use crate::poly::{
    certify_not_tth_power_proportional, Certificate, InconclusiveReason, IntPoly, ModPoly,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("interval length {len} must lie in [1, {p}]")]
    BadInterval { len: u64, p: u64 },
    #[error("exponent m = {0} outside (0, 1]")]
    InvalidExponent(f64),
    #[error("character order {0} must exceed 2")]
    OrderTooSmall(u64),
    #[error("polynomial is over F_{poly} but the character is over F_{field}")]
    FieldMismatch { poly: u64, field: u64 },
    #[error(transparent)]
    Constant(#[from] ConstantError),
}

/// `start, start+1, ..., start+len-1`, reduced mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: u64,
    pub len: u64,
}

impl Interval {
    /// Accepts `1 <= len <= p`; a full period is allowed for the bound checks.
    pub fn new(start: u64, len: u64, p: u64) -> Result<Self, MomentError> {
        if len == 0 || len > p {
            return Err(MomentError::BadInterval { len, p });
        }
        Ok(Interval {
            start: start % p,
            len,
        })
    }

    /// `[lo, hi]` inclusive.
    pub fn from_bounds(lo: u64, hi: u64, p: u64) -> Result<Self, MomentError> {
        if hi < lo {
            return Err(MomentError::BadInterval { len: 0, p });
        }
        Self::new(lo, hi - lo + 1, p)
    }

    pub fn full(p: u64) -> Self {
        Interval { start: 0, len: p }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self, p: u64) -> impl Iterator<Item = u64> {
        let start = self.start;
        (0..self.len).map(move |i| (start + i) % p)
    }

    pub fn in_theorem_range(&self, p: u64) -> bool {
        let pf = p as f64;
        let n = self.len as f64;
        pf.sqrt() * pf.ln() < n && self.len < p
    }
}

/// `|e(a) - e(b)|^{2m}` for `a - b = delta/modulus`, as `(2 sin(π·delta/modulus))^{2m}`.
#[inline]
pub fn difference_term(delta: u64, modulus: u64, m: f64) -> f64 {
    if delta.is_multiple_of(modulus) {
        return 0.0;
    }
    (2.0 * (PI * delta as f64 / modulus as f64).sin().abs()).powf(2.0 * m)
}

/// Counts of `n ∈ I` by which of `F(n)`, `F(n+1)` vanish mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Decomposition {
    /// `F(n) ≢ 0`, `F(n+1) ≡ 0`
    pub m1: u64,
    /// `F(n) ≡ 0`, `F(n+1) ≢ 0`
    pub m2: u64,
    pub m3_count: u64,
    pub both_noncoprime: u64,
}

impl Decomposition {
    fn record(&mut self, a: u64, b: u64) {
        match (a == 0, b == 0) {
            (false, false) => self.m3_count += 1,
            (false, true) => self.m1 += 1,
            (true, false) => self.m2 += 1,
            (true, true) => self.both_noncoprime += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.m1 + self.m2 + self.m3_count + self.both_noncoprime
    }
}

fn check_field(f: &ModPoly, p: u64) -> Result<(), MomentError> {
    if f.p() != p {
        return Err(MomentError::FieldMismatch {
            poly: f.p(),
            field: p,
        });
    }
    Ok(())
}

fn check_m(m: f64) -> Result<(), MomentError> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(MomentError::InvalidExponent(m));
    }
    Ok(())
}

const DENSE_LIMIT: u64 = 1 << 24;

/// Counts indexed by a residue; dense below 2^24 bins, sparse above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Histogram {
    Dense(Vec<u64>),
    Sparse(BTreeMap<u64, u64>),
}

impl Histogram {
    pub fn with_bins(bins: u64) -> Self {
        if bins <= DENSE_LIMIT {
            Histogram::Dense(vec![0; bins as usize])
        } else {
            Histogram::Sparse(BTreeMap::new())
        }
    }

    #[inline]
    fn bump(&mut self, i: u64) {
        match self {
            Histogram::Dense(v) => v[i as usize] += 1,
            Histogram::Sparse(map) => *map.entry(i).or_insert(0) += 1,
        }
    }

    pub fn get(&self, i: u64) -> u64 {
        match self {
            Histogram::Dense(v) => v.get(i as usize).copied().unwrap_or(0),
            Histogram::Sparse(map) => map.get(&i).copied().unwrap_or(0),
        }
    }

    /// Nonzero bins in increasing order.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        match self {
            Histogram::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0)
                    .map(|(i, &c)| (i as u64, c)),
            ),
            Histogram::Sparse(map) => Box::new(map.iter().map(|(&i, &c)| (i, c))),
        }
    }

    pub fn total(&self) -> u64 {
        self.nonzero().map(|(_, c)| c).sum()
    }
}

/// One pass over the interval for a multiplicative character.
#[derive(Debug, Clone)]
pub struct MultScan {
    /// `hist[Δ]` counts `n` in the coprime part with `ind χ(F(n+1)) - ind χ(F(n)) ≡ Δ (mod t)`
    pub hist: Histogram,
    pub decomposition: Decomposition,
    /// `n` where `χ(F(n+1)) χ̄(F(n)) = ±1`
    pub flagged: Vec<u64>,
}

pub fn scan_mult(chi: &MultChar, f: &ModPoly, interval: Interval) -> Result<MultScan, MomentError> {
    let p = chi.ctx().p();
    check_field(f, p)?;
    let t = chi.order();
    let half = if t.is_multiple_of(2) {
        Some(t / 2)
    } else {
        None
    };
    let mut hist = Histogram::with_bins(t);
    let mut dec = Decomposition::default();
    let mut flagged = Vec::new();
    let mut values = f.consecutive_values(interval.start);
    let mut a = values.next().expect("value iterator is infinite");
    let mut ia = chi.index_mod_order(a);
    for i in 0..interval.len {
        let b = values.next().expect("value iterator is infinite");
        let ib = chi.index_mod_order(b);
        dec.record(a, b);
        if let (Some(x), Some(y)) = (ia, ib) {
            let delta = if y >= x { y - x } else { y + t - x };
            hist.bump(delta);
            if delta == 0 || Some(delta) == half {
                flagged.push((interval.start + i) % p);
            }
        }
        a = b;
        ia = ib;
    }
    Ok(MultScan {
        hist,
        decomposition: dec,
        flagged,
    })
}

pub fn weighted_sum(hist: &Histogram, modulus: u64, m: f64) -> f64 {
    let mut acc = NeumaierSum::default();
    for (delta, count) in hist.nonzero() {
        acc.add(count as f64 * difference_term(delta, modulus, m));
    }
    acc.total()
}

/// Σ over n ∈ I with F(n)F(n+1) ≢ 0 of |χ(F(n)) - χ(F(n+1))|^{2m}.
pub fn lhs_moment_mult(
    chi: &MultChar,
    f: &ModPoly,
    interval: Interval,
    m: f64,
) -> Result<f64, MomentError> {
    check_m(m)?;
    let scan = scan_mult(chi, f, interval)?;
    Ok(weighted_sum(&scan.hist, chi.order(), m))
}

/// `n ∈ I` with both values coprime to p and the ratio `χ(F(n+1)/F(n)) ∈ {1, -1}`.
pub fn check_condition_mult(
    chi: &MultChar,
    f: &ModPoly,
    interval: Interval,
) -> Result<Vec<u64>, MomentError> {
    Ok(scan_mult(chi, f, interval)?.flagged)
}

pub fn decomposition(f: &ModPoly, interval: Interval) -> Decomposition {
    let mut dec = Decomposition::default();
    let mut values = f.consecutive_values(interval.start);
    let mut a = values.next().expect("value iterator is infinite");
    for _ in 0..interval.len {
        let b = values.next().expect("value iterator is infinite");
        dec.record(a, b);
        a = b;
    }
    dec
}

/// One pass over the interval recording `F(n+1) - F(n)`; independent of the additive character.
#[derive(Debug, Clone)]
pub struct DifferenceScan {
    p: u64,
    /// bin `r` counts `n` with `F(n+1) - F(n) ≡ r (mod p)`
    pub raw: Histogram,
    pub decomposition: Decomposition,
    /// `n` with `F(n+1) ≡ F(n)`
    pub flagged: Vec<u64>,
}

impl DifferenceScan {
    /// Histogram of `a·(F(n+1) - F(n))` folded onto `0 <= r <= (p-1)/2`.
    pub fn folded(&self, a: u64) -> Histogram {
        let p = self.p;
        let half = (p - 1) / 2;
        let mut out = Histogram::with_bins(half + 1);
        for (r, c) in self.raw.nonzero() {
            let s = crate::field::mul_mod(a % p, r, p);
            let key = s.min(p - s);
            match &mut out {
                Histogram::Dense(v) => v[key as usize] += c,
                Histogram::Sparse(map) => *map.entry(key).or_insert(0) += c,
            }
        }
        out
    }
}

pub fn scan_differences(f: &ModPoly, interval: Interval) -> DifferenceScan {
    let p = f.p();
    let g = f.forward_difference();
    let mut raw = Histogram::with_bins(p);
    let mut flagged = Vec::new();
    let mut dec = Decomposition::default();
    let mut gv = g.consecutive_values(interval.start);
    let mut fv = f.consecutive_values(interval.start);
    let mut fa = fv.next().expect("value iterator is infinite");
    for i in 0..interval.len {
        let fb = fv.next().expect("value iterator is infinite");
        dec.record(fa, fb);
        fa = fb;
        let d = gv.next().expect("value iterator is infinite");
        if d == 0 {
            flagged.push((interval.start + i) % p);
        }
        raw.bump(d);
    }
    DifferenceScan {
        p,
        raw,
        decomposition: dec,
        flagged,
    }
}

/// One pass over the interval for an additive character.
#[derive(Debug, Clone)]
pub struct AddScan {
    /// bin `r` counts `n` with `a·(F(n+1) - F(n)) ≡ ±r (mod p)`, `0 <= r <= (p-1)/2`
    pub hist: Histogram,
    pub decomposition: Decomposition,
    /// `n` with `F(n+1) ≡ F(n)`
    pub flagged: Vec<u64>,
}

pub fn scan_add(psi: &AddChar, f: &ModPoly, interval: Interval) -> Result<AddScan, MomentError> {
    check_field(f, psi.ctx().p())?;
    let scan = scan_differences(f, interval);
    Ok(AddScan {
        hist: scan.folded(psi.parameter()),
        decomposition: scan.decomposition,
        flagged: scan.flagged,
    })
}

/// `ln(2 sin(πr/M))` for `0 <= r <= M/2`, so the weights for several `m` share one table.
#[derive(Debug, Clone)]
pub struct TermWeights {
    modulus: u64,
    ln_chord: Vec<f64>,
}

impl TermWeights {
    pub fn new(modulus: u64) -> Self {
        let mf = modulus as f64;
        TermWeights {
            modulus,
            ln_chord: (0..=modulus / 2)
                .map(|r| (2.0 * (PI * r as f64 / mf).sin()).ln())
                .collect(),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `(2 sin(πr/M))^{2m}` for `0 <= r <= M/2`.
    pub fn for_exponent(&self, m: f64) -> Vec<f64> {
        let mut w: Vec<f64> = self.ln_chord.iter().map(|&l| (2.0 * m * l).exp()).collect();
        w[0] = 0.0;
        w
    }
}

/// `Σ_r hist[r] w[min(r, M-r)]` for weights from [`TermWeights::for_exponent`].
pub fn weighted_sum_with(hist: &Histogram, weights: &[f64], modulus: u64) -> f64 {
    let mut acc = NeumaierSum::default();
    for (r, count) in hist.nonzero() {
        let key = r.min(modulus - r) as usize;
        acc.add(count as f64 * weights[key]);
    }
    acc.total()
}

/// Σ_{n ∈ I} |ψ(F(n)) - ψ(F(n+1))|^{2m}.
pub fn lhs_moment_add(
    psi: &AddChar,
    f: &ModPoly,
    interval: Interval,
    m: f64,
) -> Result<f64, MomentError> {
    check_m(m)?;
    let scan = scan_add(psi, f, interval)?;
    Ok(weighted_sum(&scan.hist, psi.ctx().p(), m))
}

/// Zeros of `F(X+1) - F(X)` inside I.
pub fn check_condition_add(f: &ModPoly, interval: Interval) -> Vec<u64> {
    let p = f.p();
    let g = f.forward_difference();
    g.consecutive_values(interval.start)
        .take(interval.len as usize)
        .enumerate()
        .filter(|&(_, v)| v == 0)
        .map(|(i, _)| (interval.start + i as u64) % p)
        .collect()
}

/// How the main-term constant is evaluated inside the verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub tol: f64,
    pub k_max: u64,
    pub policy: TruncationPolicy,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol: DEFAULT_TOL,
            k_max: DEFAULT_K_MAX,
            policy: TruncationPolicy::Truncate,
        }
    }
}

impl VerifyOptions {
    pub fn with_tol(tol: f64) -> Self {
        VerifyOptions {
            tol,
            ..Self::default()
        }
    }

    fn params(&self, m: f64, modulus: u64) -> SeriesParams {
        SeriesParams::new(m, modulus)
            .with_tol(self.tol)
            .with_k_max(self.k_max)
            .with_policy(self.policy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Thm1,
    Thm2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub theorem: Theorem,
    pub p: u64,
    pub n: u64,
    pub m: f64,
    /// Sum over the coprime part for the multiplicative case, over all of I for the additive one.
    pub lhs: f64,
    /// Sum over all of I with χ(0) = 0.
    pub lhs_full: f64,
    pub constant: f64,
    pub constant_tail_bound: f64,
    pub main_term: f64,
    pub abs_error: f64,
    pub normalized_error: f64,
    pub m1: u64,
    pub m2: u64,
    pub m3_count: u64,
    pub both_noncoprime: u64,
    pub condition_violations: u64,
    pub hypothesis: String,
    pub hypothesis_certified: bool,
    /// `√p ln p < N < p` fails.
    pub out_of_range: bool,
}

fn normalized(abs_error: f64, p: u64) -> f64 {
    let pf = p as f64;
    abs_error / (pf.sqrt() * pf.ln())
}

/// Multiplicative verifier for an integer polynomial.
pub fn verify_thm1(
    chi: &MultChar,
    f: &IntPoly,
    interval: Interval,
    m: f64,
    opts: &VerifyOptions,
    cache: &mut ConstantCache,
) -> Result<MomentReport, MomentError> {
    check_m(m)?;
    let t = chi.order();
    if t <= 2 {
        return Err(MomentError::OrderTooSmall(t));
    }
    let p = chi.ctx().p();
    let hypothesis = certify_not_tth_power_proportional(f, t, chi.ctx());
    let constant = c_const_with(&opts.params(m, t), cache, false)?;
    let fm = f.reduce(p);
    let scan = scan_mult(chi, &fm, interval)?;
    Ok(assemble_report(ReportParts {
        theorem: Theorem::Thm1,
        p,
        interval,
        m,
        lhs: weighted_sum(&scan.hist, t, m),
        constant: &constant,
        decomposition: scan.decomposition,
        violations: scan.flagged.len() as u64,
        hypothesis,
    }))
}

/// Everything a report is built from.
#[derive(Debug, Clone)]
pub struct ReportParts<'a> {
    pub theorem: Theorem,
    pub p: u64,
    pub interval: Interval,
    pub m: f64,
    pub lhs: f64,
    pub constant: &'a ConstantResult,
    pub decomposition: Decomposition,
    pub violations: u64,
    pub hypothesis: Certificate,
}

pub fn assemble_report(parts: ReportParts<'_>) -> MomentReport {
    let ReportParts {
        theorem,
        p,
        interval,
        m,
        lhs,
        constant,
        decomposition: dec,
        violations,
        hypothesis,
    } = parts;
    let main_term = constant.value * interval.len as f64;
    let abs_error = (lhs - main_term).abs();
    let lhs_full = match theorem {
        Theorem::Thm1 => lhs + (dec.m1 + dec.m2) as f64,
        Theorem::Thm2 => lhs,
    };
    MomentReport {
        theorem,
        p,
        n: interval.len,
        m,
        lhs,
        lhs_full,
        constant: constant.value,
        constant_tail_bound: constant.tail_bound,
        main_term,
        abs_error,
        normalized_error: normalized(abs_error, p),
        m1: dec.m1,
        m2: dec.m2,
        m3_count: dec.m3_count,
        both_noncoprime: dec.both_noncoprime,
        condition_violations: violations,
        hypothesis: hypothesis.to_string(),
        hypothesis_certified: hypothesis.is_certified(),
        out_of_range: !interval.in_theorem_range(p),
    }
}

/// Degree checks used as the additive hypothesis: `1 < deg F < p` after reduction.
pub fn additive_hypothesis(f: &ModPoly) -> Certificate {
    match f.degree() {
        None | Some(0) => Certificate::Inconclusive(InconclusiveReason::DegreeCollapse),
        Some(d) if d < 2 || d as u64 >= f.p() => {
            Certificate::Inconclusive(InconclusiveReason::DegreeOutOfRange)
        }
        Some(_) => Certificate::Certified,
    }
}

/// Additive verifier for a polynomial already reduced mod p.
pub fn verify_thm2(
    psi: &AddChar,
    f: &ModPoly,
    interval: Interval,
    m: f64,
    opts: &VerifyOptions,
    cache: &mut ConstantCache,
) -> Result<MomentReport, MomentError> {
    check_m(m)?;
    let p = psi.ctx().p();
    let hypothesis = additive_hypothesis(f);
    let constant = d_const_with(&opts.params(m, p), cache, false)?;
    let scan = scan_add(psi, f, interval)?;
    Ok(assemble_report(ReportParts {
        theorem: Theorem::Thm2,
        p,
        interval,
        m,
        lhs: weighted_sum(&scan.hist, p, m),
        constant: &constant,
        decomposition: scan.decomposition,
        violations: scan.flagged.len() as u64,
        hypothesis,
    }))
}

/// Additive verifier for an integer polynomial; a degree drop mod p is reported in the hypothesis.
pub fn verify_thm2_int(
    psi: &AddChar,
    f: &IntPoly,
    interval: Interval,
    m: f64,
    opts: &VerifyOptions,
    cache: &mut ConstantCache,
) -> Result<MomentReport, MomentError> {
    let fm = f.reduce(psi.ctx().p());
    let mut report = verify_thm2(psi, &fm, interval, m, opts, cache)?;
    if fm.degree() != f.degree() {
        report.hypothesis =
            Certificate::Inconclusive(InconclusiveReason::DegreeCollapse).to_string();
        report.hypothesis_certified = false;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::mult_char_of_order;
    use crate::field::PrimeFieldCtx;
    use crate::poly::binomial_poly;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn ctx(p: u64) -> Arc<PrimeFieldCtx> {
        Arc::new(PrimeFieldCtx::new(p).unwrap())
    }

    fn direct_mult(chi: &MultChar, f: &ModPoly, interval: Interval, m: f64) -> f64 {
        let p = chi.ctx().p();
        interval
            .iter(p)
            .filter(|&n| f.eval(n) != 0 && f.eval(n + 1) != 0)
            .map(|n| {
                (chi.eval_complex(f.eval(n)) - chi.eval_complex(f.eval(n + 1)))
                    .norm()
                    .powf(2.0 * m)
            })
            .sum()
    }

    fn direct_add(psi: &AddChar, f: &ModPoly, interval: Interval, m: f64) -> f64 {
        let p = psi.ctx().p();
        interval
            .iter(p)
            .map(|n| {
                (psi.eval_complex(f.eval(n)) - psi.eval_complex(f.eval(n + 1)))
                    .norm()
                    .powf(2.0 * m)
            })
            .sum()
    }

    #[test]
    fn small_mult_example() {
        let chi = mult_char_of_order(ctx(7), 3).unwrap();
        let f = ModPoly::new(vec![0, 0, 1], 7);
        let i = Interval::from_bounds(1, 2, 7).unwrap();
        let lhs = lhs_moment_mult(&chi, &f, i, 0.5).unwrap();
        assert!((lhs - 2.0 * 3f64.sqrt()).abs() < 1e-12, "{lhs}");
        assert!((lhs - direct_mult(&chi, &f, i, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn mult_second_moment_near_two() {
        let c = ctx(13);
        let chi = mult_char_of_order(c, 3).unwrap();
        let f = IntPoly::from_i64(&[1, 0, 1]);
        let i = Interval::from_bounds(1, 11, 13).unwrap();
        let r = verify_thm1(
            &chi,
            &f,
            i,
            1.0,
            &VerifyOptions::default(),
            &mut ConstantCache::new(),
        )
        .unwrap();
        assert_eq!(r.constant, 2.0);
        assert!(r.abs_error / r.n as f64 <= 2.0 * r.normalized_error + 1e-12);
        assert!((r.lhs - direct_mult(&chi, &f.reduce(13), i, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn small_add_example() {
        let psi = AddChar::new(ctx(5), 1).unwrap();
        let f = ModPoly::new(vec![0, 0, 1], 5);
        let lhs = lhs_moment_add(&psi, &f, Interval::new(1, 1, 5).unwrap(), 0.5).unwrap();
        let expected = (psi.eval_complex(1) - psi.eval_complex(4)).norm();
        assert!((lhs - expected).abs() < 1e-12);
        assert!((lhs - 1.902113032590307).abs() < 1e-9);
    }

    #[test]
    fn add_second_moment_quadratic() {
        let p = 101;
        let psi = AddChar::new(ctx(p), 1).unwrap();
        let f = ModPoly::new(vec![0, 0, 1], p);
        let i = Interval::new(0, p - 1, p).unwrap();
        let lhs = lhs_moment_add(&psi, &f, i, 1.0).unwrap();
        // 2(p-1) - 2 Re Σ_{n<p-1} e((2n+1)/p)
        let s: Complex64 = (0..p - 1).map(|n| psi.eval_complex(2 * n + 1)).sum();
        let expected = 2.0 * (p - 1) as f64 - 2.0 * s.re;
        assert!((lhs - expected).abs() < 1e-9, "{lhs} vs {expected}");
    }

    #[test]
    fn zero_term_when_values_repeat() {
        assert_eq!(difference_term(0, 7, 0.3), 0.0);
        assert_eq!(difference_term(14, 7, 0.9), 0.0);
        let psi = AddChar::new(ctx(7), 1).unwrap();
        let f = ModPoly::new(vec![0, 0, 1], 7);
        // F(4) = F(3) mod 7
        assert_eq!(
            lhs_moment_add(&psi, &f, Interval::new(3, 1, 7).unwrap(), 0.5).unwrap(),
            0.0
        );
    }

    #[test]
    fn condition_examples() {
        let chi = mult_char_of_order(ctx(7), 3).unwrap();
        let f = ModPoly::new(vec![0, 0, 1], 7);
        let i = Interval::from_bounds(1, 5, 7).unwrap();
        let flags = check_condition_mult(&chi, &f, i).unwrap();
        let oracle: Vec<u64> = (1..=5)
            .filter(|&n| chi.eval(f.eval(n + 1)).div(&chi.eval(f.eval(n))).is_one())
            .collect();
        assert_eq!(flags, oracle);
        assert_eq!(flags, vec![3]);

        assert_eq!(
            check_condition_add(&f, Interval::new(0, 6, 7).unwrap()),
            vec![3]
        );
        assert!(check_condition_add(&f, Interval::new(4, 3, 7).unwrap()).is_empty());
        assert!(check_condition_add(&ModPoly::new(vec![0, 1], 7), Interval::full(7)).is_empty());

        let c = ctx(199);
        let b = binomial_poly(3, &c).unwrap();
        assert!(check_condition_add(&b, Interval::from_bounds(5, 197, 199).unwrap()).is_empty());
    }

    #[test]
    fn minus_one_flags_only_for_even_order() {
        let c = ctx(13);
        for t in [3u64, 4, 6, 12] {
            let chi = mult_char_of_order(c.clone(), t).unwrap();
            let f = ModPoly::new(vec![1, 0, 1], 13);
            let i = Interval::from_bounds(1, 11, 13).unwrap();
            let flags = check_condition_mult(&chi, &f, i).unwrap();
            let minus: Vec<u64> = (1..=11)
                .filter(|&n| {
                    chi.eval(f.eval(n + 1))
                        .div(&chi.eval(f.eval(n)))
                        .is_minus_one()
                })
                .collect();
            if t % 2 == 1 {
                assert!(minus.is_empty());
            }
            assert!(minus.iter().all(|n| flags.contains(n)));
        }
    }

    #[test]
    fn decomposition_examples() {
        let f = ModPoly::new(vec![0, 0, 1], 7);
        let d = decomposition(&f, Interval::from_bounds(1, 5, 7).unwrap());
        assert_eq!(
            d,
            Decomposition {
                m1: 0,
                m2: 0,
                m3_count: 5,
                both_noncoprime: 0
            }
        );
        let d = decomposition(&f, Interval::full(7));
        assert_eq!(
            d,
            Decomposition {
                m1: 1,
                m2: 1,
                m3_count: 5,
                both_noncoprime: 0
            }
        );
        let g = ModPoly::new(vec![0, 1, 1], 7);
        // X(X+1) vanishes at 6 and at 0 = 6 + 1
        let d = decomposition(&g, Interval::full(7));
        assert_eq!(d.total(), 7);
        assert_eq!(d.both_noncoprime, 1);
    }

    #[test]
    fn term_identity_exhaustive() {
        for p in [7u64, 13, 31, 61, 101] {
            let c = ctx(p);
            for t in (3..p).filter(|t| (p - 1) % t == 0) {
                let chi = mult_char_of_order(c.clone(), t).unwrap();
                for x in 1..p {
                    for y in [1, 2, p - 1, (x * 5 + 3) % p] {
                        if y == 0 {
                            continue;
                        }
                        let ix = chi.index_mod_order(x).unwrap();
                        let iy = chi.index_mod_order(y).unwrap();
                        let delta = (iy + t - ix) % t;
                        for m in [0.1, 0.5, 0.75, 1.0] {
                            let direct = (chi.eval_complex(x) - chi.eval_complex(y))
                                .norm()
                                .powf(2.0 * m);
                            let via = difference_term(delta, t, m);
                            assert!((direct - via).abs() < 1e-12, "p={p} t={t} x={x} y={y}");
                            let cosform = (2.0 - 2.0 * (2.0 * PI * delta as f64 / t as f64).cos())
                                .max(0.0)
                                .powf(m);
                            assert!((cosform - via).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn weight_table_matches_direct_terms() {
        for modulus in [3u64, 4, 12, 101, 1000] {
            let w = TermWeights::new(modulus);
            for m in [0.1, 0.5, 1.0] {
                let table = w.for_exponent(m);
                for r in 0..modulus {
                    let key = r.min(modulus - r) as usize;
                    let direct = difference_term(r, modulus, m);
                    assert!(
                        (table[key] - direct).abs() <= 1e-13 * direct.max(1.0),
                        "M={modulus} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn difference_scan_serves_every_parameter() {
        let p = 211;
        let c = ctx(p);
        let f = ModPoly::new(vec![3, 0, 5, 1], p);
        let i = Interval::new(20, 150, p).unwrap();
        let scan = scan_differences(&f, i);
        let w = TermWeights::new(p).for_exponent(0.35);
        for a in [1u64, 2, 77, 210] {
            let psi = AddChar::new(c.clone(), a).unwrap();
            let via = weighted_sum_with(&scan.folded(a), &w, p);
            assert!((via - direct_add(&psi, &f, i, 0.35)).abs() < 1e-9);
        }
    }

    #[test]
    fn verify_thm2_binomial_has_no_violations() {
        let c = ctx(499);
        let psi = AddChar::new(c.clone(), 1).unwrap();
        let f = binomial_poly(2, &c).unwrap();
        let i = Interval::from_bounds(4, 497, 499).unwrap();
        let r = verify_thm2(
            &psi,
            &f,
            i,
            0.5,
            &VerifyOptions::default(),
            &mut ConstantCache::new(),
        )
        .unwrap();
        assert_eq!(r.condition_violations, 0);
        assert!(r.hypothesis_certified);
        assert!(!r.out_of_range);
    }

    #[test]
    fn single_point_interval() {
        let c = ctx(101);
        let psi = AddChar::new(c, 3).unwrap();
        let f = ModPoly::new(vec![5, 0, 2, 1], 101);
        let i = Interval::new(17, 1, 101).unwrap();
        let r = verify_thm2(
            &psi,
            &f,
            i,
            0.4,
            &VerifyOptions::default(),
            &mut ConstantCache::new(),
        )
        .unwrap();
        assert!((r.lhs - direct_add(&psi, &f, i, 0.4)).abs() < 1e-12);
        assert_eq!(r.main_term, r.constant);
        assert!(r.out_of_range);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Interval::new(0, 0, 7).is_err());
        assert!(Interval::new(0, 8, 7).is_err());
        let c = ctx(7);
        let chi = mult_char_of_order(c.clone(), 3).unwrap();
        let f = ModPoly::new(vec![1, 0, 1], 7);
        let i = Interval::new(1, 3, 7).unwrap();
        assert!(lhs_moment_mult(&chi, &f, i, 0.0).is_err());
        let g = ModPoly::new(vec![1, 0, 1], 11);
        assert!(matches!(
            lhs_moment_mult(&chi, &g, i, 0.5),
            Err(MomentError::FieldMismatch { .. })
        ));
        let quad = mult_char_of_order(c, 2).unwrap();
        assert_eq!(
            verify_thm1(
                &quad,
                &IntPoly::from_i64(&[1, 0, 1]),
                i,
                0.5,
                &VerifyOptions::default(),
                &mut ConstantCache::new()
            )
            .unwrap_err(),
            MomentError::OrderTooSmall(2)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn scans_match_direct_sums(
            coeffs in proptest::collection::vec(0u64..1000, 2..5),
            start in 0u64..103,
            len in 1u64..=103,
            m in 0.05f64..=1.0,
            a in 1u64..103,
        ) {
            let p = 103;
            let c = ctx(p);
            let f = ModPoly::new(coeffs, p);
            let i = Interval::new(start, len, p).unwrap();
            let chi = mult_char_of_order(c.clone(), 3).unwrap();
            let lm = lhs_moment_mult(&chi, &f, i, m).unwrap();
            prop_assert!((lm - direct_mult(&chi, &f, i, m)).abs() < 1e-9);
            let psi = AddChar::new(c, a).unwrap();
            let la = lhs_moment_add(&psi, &f, i, m).unwrap();
            prop_assert!((la - direct_add(&psi, &f, i, m)).abs() < 1e-9);
            prop_assert!(lm >= 0.0 && la >= 0.0);
        }

        #[test]
        fn decomposition_conserves(
            coeffs in proptest::collection::vec(0u64..1000, 1..6),
            start in 0u64..211,
            len in 1u64..=211,
        ) {
            let f = ModPoly::new(coeffs, 211);
            prop_assume!(!f.is_zero());
            let i = Interval::new(start, len, 211).unwrap();
            let d = decomposition(&f, i);
            prop_assert_eq!(d.total(), len);
            if let Some(deg) = f.degree() {
                prop_assert!(d.m1 + d.m2 <= 2 * deg as u64);
            }
        }

        #[test]
        fn coprime_count_lower_bound(
            coeffs in proptest::collection::vec(0u64..1000, 2..7),
            start in 0u64..401,
            len in 1u64..=401,
        ) {
            let g = ModPoly::new(coeffs, 401);
            prop_assume!(!g.is_zero());
            let i = Interval::new(start, len, 401).unwrap();
            let coprime = i.iter(401).filter(|&n| g.eval(n) != 0).count() as u64;
            prop_assert!(coprime + g.degree().unwrap() as u64 >= len);
        }
    }
}
