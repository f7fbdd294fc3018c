//! Numerical checks of the analytic inputs: Weil, completion, Fourier, sliding sums.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characters::{AddChar, MultChar};
use crate::field::mul_mod;
use crate::moments::Interval;
use crate::poly::ModPoly;

pub const DEFAULT_FOURIER_CAP: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("polynomial has degree {degree:?} modulo {p}; need 1 <= degree < p")]
    DegenerateDegree { degree: Option<usize>, p: u64 },
    #[error("interval length {len} outside (sqrt({p}), {p}]")]
    IntervalOutOfRange { len: u64, p: u64 },
    #[error("table size {p} exceeds the Fourier cap {cap}")]
    FourierCapExceeded { p: u64, cap: u64 },
    #[error("table length {len} does not match modulus {p}")]
    LengthMismatch { len: usize, p: u64 },
    #[error("polynomial is over F_{poly} but the character is over F_{field}")]
    FieldMismatch { poly: u64, field: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs_mag: f64,
    pub rhs: f64,
    /// Rounding allowance added to `rhs` before comparing.
    pub fp_slack: f64,
    pub ok: bool,
    pub context: String,
}

impl BoundCheck {
    fn new(lhs_mag: f64, rhs: f64, terms: u64, context: String) -> Self {
        let fp_slack = 1e-12 * terms.max(1) as f64;
        BoundCheck {
            lhs_mag,
            rhs,
            fp_slack,
            ok: lhs_mag <= rhs + fp_slack,
            context,
        }
    }
}

/// `e(k/p)` for `k = 0..p-1`.
#[derive(Debug, Clone)]
pub struct UnitRoots {
    table: Vec<Complex64>,
}

impl UnitRoots {
    pub fn new(p: u64) -> Self {
        let pf = p as f64;
        UnitRoots {
            table: (0..p)
                .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / pf))
                .collect(),
        }
    }

    #[inline]
    pub fn get(&self, k: u64) -> Complex64 {
        self.table[(k % self.table.len() as u64) as usize]
    }

    pub fn modulus(&self) -> u64 {
        self.table.len() as u64
    }
}

/// Values `φ(0), ..., φ(p-1)` of a function on `Z/pZ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicTable {
    values: Vec<Complex64>,
}

impl PeriodicTable {
    pub fn new(values: Vec<Complex64>, p: u64) -> Result<Self, BoundError> {
        if values.len() as u64 != p || p == 0 {
            return Err(BoundError::LengthMismatch {
                len: values.len(),
                p,
            });
        }
        Ok(PeriodicTable { values })
    }

    pub fn from_fn(p: u64, f: impl Fn(u64) -> Complex64) -> Self {
        PeriodicTable {
            values: (0..p).map(f).collect(),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, x: u64) -> Complex64 {
        self.values[(x % self.modulus()) as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn interval_sum(&self, interval: Interval) -> Complex64 {
        interval.iter(self.modulus()).map(|n| self.get(n)).sum()
    }
}

fn nondegenerate_degree(g: &ModPoly) -> Result<u64, BoundError> {
    match g.degree() {
        Some(d) if d >= 1 && (d as u64) < g.p() => Ok(d as u64),
        degree => Err(BoundError::DegenerateDegree { degree, p: g.p() }),
    }
}

fn check_field(g: &ModPoly, p: u64) -> Result<(), BoundError> {
    if g.p() != p {
        return Err(BoundError::FieldMismatch {
            poly: g.p(),
            field: p,
        });
    }
    Ok(())
}

/// `S(b/p) = Σ_{x mod p} ψ(G(x)) e(-bx/p)` for every `b`, by direct summation.
fn all_twisted_sums(psi: &AddChar, g: &ModPoly, roots: &UnitRoots) -> Vec<Complex64> {
    let p = psi.ctx().p();
    let values: Vec<u64> = g
        .consecutive_values(0)
        .take(p as usize)
        .map(|v| psi.index(v))
        .collect();
    (0..p)
        .map(|b| {
            let mut acc = Complex64::new(0.0, 0.0);
            // index of e(-bx/p) advances by p - b
            let step = (p - b % p) % p;
            let mut shift = 0u64;
            for &v in &values {
                let k = v + shift;
                acc += roots.get(if k >= p { k - p } else { k });
                shift += step;
                if shift >= p {
                    shift -= p;
                }
            }
            acc
        })
        .collect()
}

pub fn twisted_complete_sum(psi: &AddChar, g: &ModPoly, b: u64) -> Result<Complex64, BoundError> {
    let p = psi.ctx().p();
    check_field(g, p)?;
    let roots = UnitRoots::new(p);
    let neg_b = (p - b % p) % p;
    Ok((0..p)
        .map(|x| roots.get((psi.index(g.eval(x)) + mul_mod(neg_b, x, p)) % p))
        .sum())
}

/// `|Σ_x ψ(G(x))| <= (d_p - 1)√p`.
pub fn weil_check(psi: &AddChar, g: &ModPoly) -> Result<BoundCheck, BoundError> {
    let p = psi.ctx().p();
    check_field(g, p)?;
    let d = nondegenerate_degree(g)?;
    let lhs = twisted_complete_sum(psi, g, 0)?.norm();
    let rhs = (d - 1) as f64 * (p as f64).sqrt();
    Ok(BoundCheck::new(
        lhs,
        rhs,
        p,
        format!("weil p={p} a={} deg={d} G={g}", psi.parameter()),
    ))
}

/// `λ(b/p) = Σ_{n ∈ I} e(bn/p)` in closed form.
pub fn interval_kernel(b: u64, interval: Interval, roots: &UnitRoots) -> Complex64 {
    let p = roots.modulus();
    let b = b % p;
    if b == 0 {
        return Complex64::new(interval.len as f64, 0.0);
    }
    let first = roots.get(mul_mod(b, interval.start, p));
    let num = Complex64::new(1.0, 0.0) - roots.get(mul_mod(b, interval.len % p, p));
    let den = Complex64::new(1.0, 0.0) - roots.get(b);
    first * num / den
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub direct_re: f64,
    pub direct_im: f64,
    pub completed_re: f64,
    pub completed_im: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub ok: bool,
    pub context: String,
}

impl CompletionReport {
    pub fn direct(&self) -> Complex64 {
        Complex64::new(self.direct_re, self.direct_im)
    }

    pub fn completed(&self) -> Complex64 {
        Complex64::new(self.completed_re, self.completed_im)
    }
}

/// Compares `Σ_{n ∈ I} ψ(G(n))` with `(1/p) Σ_b λ(b/p) S(b/p)`.
pub fn completion_identity_check(
    psi: &AddChar,
    g: &ModPoly,
    interval: Interval,
) -> Result<CompletionReport, BoundError> {
    let p = psi.ctx().p();
    check_field(g, p)?;
    let roots = UnitRoots::new(p);
    let direct: Complex64 = interval
        .iter(p)
        .map(|n| roots.get(psi.index(g.eval(n))))
        .sum();
    Ok(completion_from_sums(
        direct,
        &all_twisted_sums(psi, g, &roots),
        interval,
        &roots,
        format!(
            "completion p={p} a={} G={g} I=[{}, +{})",
            psi.parameter(),
            interval.start,
            interval.len
        ),
    ))
}

fn completion_from_sums(
    direct: Complex64,
    sums: &[Complex64],
    interval: Interval,
    roots: &UnitRoots,
    context: String,
) -> CompletionReport {
    let p = roots.modulus();
    let completed: Complex64 = sums
        .iter()
        .enumerate()
        .map(|(b, s)| interval_kernel(b as u64, interval, roots) * s)
        .sum::<Complex64>()
        / p as f64;
    let difference = (direct - completed).norm();
    let tolerance = 1e-8 * (p as f64).sqrt();
    CompletionReport {
        direct_re: direct.re,
        direct_im: direct.im,
        completed_re: completed.re,
        completed_im: completed.im,
        difference,
        tolerance,
        ok: difference <= tolerance,
        context,
    }
}

/// Runs the completion identity for many intervals with one set of complete sums.
pub fn completion_identity_batch(
    psi: &AddChar,
    g: &ModPoly,
    intervals: &[Interval],
) -> Result<Vec<CompletionReport>, BoundError> {
    let p = psi.ctx().p();
    check_field(g, p)?;
    let roots = UnitRoots::new(p);
    let sums = all_twisted_sums(psi, g, &roots);
    let values: Vec<Complex64> = g
        .consecutive_values(0)
        .take(p as usize)
        .map(|v| roots.get(psi.index(v)))
        .collect();
    Ok(intervals
        .iter()
        .map(|&i| {
            let direct: Complex64 = i.iter(p).map(|n| values[n as usize]).sum();
            completion_from_sums(
                direct,
                &sums,
                i,
                &roots,
                format!(
                    "completion p={p} a={} G={g} I=[{}, +{})",
                    psi.parameter(),
                    i.start,
                    i.len
                ),
            )
        })
        .collect())
}

/// Distance from `x` to the nearest integer.
fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// `|Σ_{n ∈ I} ψ(G(n))|` against `(d_p - 1)√p(1 + ln p)`; linear G uses the geometric-sum bound.
pub fn incomplete_sum_bound_check(
    psi: &AddChar,
    g: &ModPoly,
    interval: Interval,
) -> Result<BoundCheck, BoundError> {
    let p = psi.ctx().p();
    check_field(g, p)?;
    let d = nondegenerate_degree(g)?;
    let roots = UnitRoots::new(p);
    let lhs = interval
        .iter(p)
        .map(|n| roots.get(psi.index(g.eval(n))))
        .sum::<Complex64>()
        .norm();
    let pf = p as f64;
    let rhs = if d == 1 {
        let slope = psi.index(g.coeffs()[1]);
        let dist = dist_to_int(slope as f64 / pf);
        (interval.len as f64).min(1.0 / (2.0 * dist))
    } else {
        (d - 1) as f64 * pf.sqrt() * (1.0 + pf.ln())
    };
    Ok(BoundCheck::new(
        lhs,
        rhs,
        interval.len,
        format!(
            "incomplete p={p} a={} deg={d} I=[{}, +{})",
            psi.parameter(),
            interval.start,
            interval.len
        ),
    ))
}

/// `φ̂(h) = p^{-1/2} Σ_x φ(x) e(hx/p)`, by direct summation.
pub fn normalized_fourier(phi: &PeriodicTable) -> PeriodicTable {
    let p = phi.modulus();
    let roots = UnitRoots::new(p);
    let scale = 1.0 / (p as f64).sqrt();
    PeriodicTable::from_fn(p, |h| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut k = 0u64;
        for v in phi.values() {
            acc += v * roots.get(k);
            k += h;
            if k >= p {
                k -= p;
            }
        }
        acc * scale
    })
}

/// `|Σ_{n ∈ I} φ(n)| <= c√p log(4e^8 |I|/√p)` with `c = max(|φ|_∞, |φ̂|_∞)`.
pub fn fkm_bound_check(phi: &PeriodicTable, interval: Interval) -> Result<BoundCheck, BoundError> {
    fkm_bound_check_capped(phi, interval, DEFAULT_FOURIER_CAP)
}

pub fn fkm_bound_check_capped(
    phi: &PeriodicTable,
    interval: Interval,
    cap: u64,
) -> Result<BoundCheck, BoundError> {
    let p = phi.modulus();
    if p > cap {
        return Err(BoundError::FourierCapExceeded { p, cap });
    }
    let hat = normalized_fourier(phi);
    fkm_with_transform(phi, &hat, interval)
}

/// The sliding-sum check given a precomputed transform.
pub fn fkm_with_transform(
    phi: &PeriodicTable,
    hat: &PeriodicTable,
    interval: Interval,
) -> Result<BoundCheck, BoundError> {
    let p = phi.modulus();
    let sqrt_p = (p as f64).sqrt();
    let len = interval.len;
    if (len as f64) <= sqrt_p || len > p {
        return Err(BoundError::IntervalOutOfRange { len, p });
    }
    let c = phi.sup_norm().max(hat.sup_norm());
    let lhs = phi.interval_sum(interval).norm();
    let rhs = c * sqrt_p * (4.0 * 8f64.exp() * len as f64 / sqrt_p).ln();
    Ok(BoundCheck::new(
        lhs,
        rhs,
        len,
        format!("fkm p={p} c={c:.6} I=[{}, +{len})", interval.start),
    ))
}

/// `φ(n) = χ(F(n+1)/F(n)) e(-bn/p)`, zero where `F(n)F(n+1) ≡ 0`.
pub fn ratio_table(chi: &MultChar, f: &ModPoly, b: u64) -> Result<PeriodicTable, BoundError> {
    let p = chi.ctx().p();
    check_field(f, p)?;
    let roots = UnitRoots::new(p);
    let t = chi.order();
    let neg_b = (p - b % p) % p;
    let vals: Vec<u64> = f.consecutive_values(0).take(p as usize + 1).collect();
    Ok(PeriodicTable::from_fn(p, |n| {
        let (a, c) = (vals[n as usize], vals[n as usize + 1]);
        match (chi.index_mod_order(a), chi.index_mod_order(c)) {
            (Some(ia), Some(ic)) => {
                let k = (ic + t - ia) % t;
                Complex64::from_polar(1.0, TAU * k as f64 / t as f64)
                    * roots.get(mul_mod(neg_b, n, p))
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }))
}

/// `Σ_{n ∈ I, F_num(n)F_den(n) ≢ 0} χ(F_num(n)/F_den(n)) e(-bn/p)`.
pub fn mixed_char_sum(
    chi: &MultChar,
    f_num: &ModPoly,
    f_den: &ModPoly,
    b: u64,
    interval: Interval,
) -> Result<Complex64, BoundError> {
    let p = chi.ctx().p();
    check_field(f_num, p)?;
    check_field(f_den, p)?;
    let t = chi.order();
    let roots = UnitRoots::new(p);
    let neg_b = (p - b % p) % p;
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, (a, c)) in interval.iter(p).zip(
        f_num
            .consecutive_values(interval.start)
            .zip(f_den.consecutive_values(interval.start)),
    ) {
        if let (Some(ia), Some(ic)) = (chi.index_mod_order(a), chi.index_mod_order(c)) {
            let k = (ia + t - ic) % t;
            acc += Complex64::from_polar(1.0, TAU * k as f64 / t as f64)
                * roots.get(mul_mod(neg_b, n, p));
        }
    }
    Ok(acc)
}
