//! Integer polynomials and their reductions modulo p.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::{mod_inv, mul_mod, pow_mod, PrimeFieldCtx};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("gcd of two zero polynomials is undefined")]
    BothZero,
    #[error("polynomial reduces to a constant modulo {p}")]
    DegreeCollapse { p: u64 },
    #[error("degree {degree} is not below the characteristic {p}")]
    DegreeTooLarge { degree: usize, p: u64 },
    #[error("(d+1)! with d = {d} is divisible by {p}")]
    FactorialDivisible { d: u64, p: u64 },
    #[error("moduli differ: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("cannot parse polynomial {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// Polynomial with arbitrary-precision integer coefficients, low degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    pub fn reduce(&self, p: u64) -> ModPoly {
        let pb = BigInt::from(p);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.mod_floor(&pb).to_u64().expect("residue fits in u64"))
            .collect();
        ModPoly::from_reduced(coeffs, p)
    }

    pub fn eval_mod(&self, n: u64, ctx: &PrimeFieldCtx) -> u64 {
        self.reduce(ctx.p()).eval(n % ctx.p())
    }

    /// `F(X+1)`, computed exactly.
    pub fn taylor_shift(&self) -> IntPoly {
        let mut out: Vec<BigInt> = Vec::with_capacity(self.coeffs.len());
        for c in self.coeffs.iter().rev() {
            // out <- out * (X + 1) + c
            out.push(BigInt::zero());
            for i in (1..out.len()).rev() {
                let lower = out[i - 1].clone();
                out[i] += lower;
            }
            out[0] += c;
        }
        IntPoly::new(out)
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_default();
                let b = other.coeffs.get(i).cloned().unwrap_or_default();
                a - b
            })
            .collect();
        IntPoly::new(coeffs)
    }

    /// `F(X+1) - F(X)`.
    pub fn forward_difference(&self) -> IntPoly {
        self.taylor_shift().sub(self)
    }

    /// Comma-separated coefficients, low degree first.
    pub fn to_coeff_string(&self) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        self.coeffs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromStr for IntPoly {
    type Err = PolyError;

    /// Parses the CLI format, e.g. `"1,0,1"` for `X^2 + 1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: String| PolyError::Parse {
            input: s.to_string(),
            reason,
        };
        if s.trim().is_empty() {
            return Err(err("empty coefficient list".into()));
        }
        let coeffs = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<BigInt>()
                    .map_err(|e| err(format!("{tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntPoly::new(coeffs))
    }
}

fn fmt_terms<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    terms: impl DoubleEndedIterator<Item = (usize, T, bool, bool)>,
) -> fmt::Result {
    // (degree, |coefficient|, negative, is_one)
    let mut first = true;
    for (deg, mag, neg, one) in terms.rev() {
        let sign = match (first, neg) {
            (true, true) => "-",
            (true, false) => "",
            (false, true) => " - ",
            (false, false) => " + ",
        };
        let coeff = if one && deg > 0 {
            String::new()
        } else {
            mag.to_string()
        };
        let var = match deg {
            0 => String::new(),
            1 => "X".to_string(),
            _ => format!("X^{deg}"),
        };
        write!(f, "{sign}{coeff}{var}")?;
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(
            f,
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i, c.abs(), c.is_negative(), c.abs().is_one())),
        )
    }
}

/// Polynomial over F_p, low degree first, leading coefficient nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModPoly {
    coeffs: Vec<u64>,
    p: u64,
}

impl ModPoly {
    /// Reduces arbitrary `u64` coefficients modulo `p`.
    pub fn new(coeffs: Vec<u64>, p: u64) -> Self {
        Self::from_reduced(coeffs.into_iter().map(|c| c % p).collect(), p)
    }

    pub fn from_i64(coeffs: &[i64], p: u64) -> Self {
        Self::from_reduced(
            coeffs
                .iter()
                .map(|&c| c.rem_euclid(p as i64) as u64)
                .collect(),
            p,
        )
    }

    fn from_reduced(mut coeffs: Vec<u64>, p: u64) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        ModPoly { coeffs, p }
    }

    pub fn zero(p: u64) -> Self {
        ModPoly { coeffs: vec![], p }
    }

    pub fn constant(c: u64, p: u64) -> Self {
        Self::new(vec![c], p)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree after reduction; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<u64> {
        self.coeffs.last().copied()
    }

    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let p = self.p;
        let x = x % p;
        if p <= u32::MAX as u64 {
            self.coeffs
                .iter()
                .rev()
                .fold(0u64, |acc, &c| (acc * x + c) % p)
        } else {
            self.coeffs
                .iter()
                .rev()
                .fold(0u64, |acc, &c| (mul_mod(acc, x, p) + c) % p)
        }
    }

    /// Values `F(start), F(start+1), ...` by forward differences; one
    /// modular addition per coefficient and step.
    pub fn consecutive_values(&self, start: u64) -> ConsecutiveValues {
        let d = self.coeffs.len().saturating_sub(1);
        let p = self.p;
        // table[j] = Δ^j F(start)
        let mut table: Vec<u64> = (0..=d as u64)
            .map(|i| self.eval((start % p + i % p) % p))
            .collect();
        for j in 1..=d {
            for i in (j..=d).rev() {
                let a = table[i];
                let b = table[i - 1];
                table[i] = if a >= b { a - b } else { a + p - b };
            }
        }
        if self.is_zero() {
            table = vec![0];
        }
        ConsecutiveValues { diffs: table, p }
    }

    pub fn scale(&self, c: u64) -> ModPoly {
        let c = c % self.p;
        Self::from_reduced(
            self.coeffs.iter().map(|&a| mul_mod(a, c, self.p)).collect(),
            self.p,
        )
    }

    pub fn monic(&self) -> ModPoly {
        match self.leading() {
            None => self.clone(),
            Some(lc) => self.scale(pow_mod(lc, self.p - 2, self.p)),
        }
    }

    pub fn derivative(&self) -> ModPoly {
        let p = self.p;
        Self::from_reduced(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| mul_mod(c, i as u64 % p, p))
                .collect(),
            p,
        )
    }

    pub fn add(&self, other: &ModPoly) -> ModPoly {
        debug_assert_eq!(self.p, other.p);
        let p = self.p;
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::from_reduced(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).copied().unwrap_or(0);
                    let b = other.coeffs.get(i).copied().unwrap_or(0);
                    (a + b) % p
                })
                .collect(),
            p,
        )
    }

    pub fn sub(&self, other: &ModPoly) -> ModPoly {
        self.add(&other.scale(self.p - 1))
    }

    pub fn mul(&self, other: &ModPoly) -> ModPoly {
        debug_assert_eq!(self.p, other.p);
        if self.is_zero() || other.is_zero() {
            return ModPoly::zero(self.p);
        }
        let p = self.p;
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = (out[i + j] + mul_mod(a, b, p)) % p;
            }
        }
        Self::from_reduced(out, p)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &ModPoly) -> (ModPoly, ModPoly) {
        let p = self.p;
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lc_inv = pow_mod(divisor.coeffs[dd], p - 2, p);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (ModPoly::zero(p), self.clone());
        }
        let mut quot = vec![0u64; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = mul_mod(rem[i], lc_inv, p);
            quot[i - dd] = c;
            if c == 0 {
                continue;
            }
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                let sub = mul_mod(c, b, p);
                let slot = &mut rem[i - dd + j];
                *slot = if *slot >= sub {
                    *slot - sub
                } else {
                    *slot + p - sub
                };
            }
        }
        rem.truncate(dd);
        (Self::from_reduced(quot, p), Self::from_reduced(rem, p))
    }

    /// `F(X+1)` over F_p.
    pub fn shift(&self) -> ModPoly {
        let p = self.p;
        let mut out: Vec<u64> = Vec::with_capacity(self.coeffs.len());
        for &c in self.coeffs.iter().rev() {
            out.push(0);
            for i in (1..out.len()).rev() {
                out[i] = (out[i] + out[i - 1]) % p;
            }
            out[0] = (out[0] + c) % p;
        }
        Self::from_reduced(out, p)
    }

    /// `F(X+1) - F(X)` over F_p.
    pub fn forward_difference(&self) -> ModPoly {
        self.shift().sub(self)
    }
}

impl fmt::Display for ModPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(
            f,
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| (i, c, false, c == 1)),
        )?;
        write!(f, " (mod {})", self.p)
    }
}

/// Iterator over consecutive polynomial values modulo p.
#[derive(Debug, Clone)]
pub struct ConsecutiveValues {
    diffs: Vec<u64>,
    p: u64,
}

impl Iterator for ConsecutiveValues {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        let out = self.diffs[0];
        let p = self.p;
        for i in 0..self.diffs.len() - 1 {
            let s = self.diffs[i] + self.diffs[i + 1];
            self.diffs[i] = if s >= p { s - p } else { s };
        }
        Some(out)
    }
}

pub fn eval_mod(f: &IntPoly, n: u64, ctx: &PrimeFieldCtx) -> u64 {
    f.eval_mod(n, ctx)
}

pub fn taylor_shift(f: &IntPoly) -> IntPoly {
    f.taylor_shift()
}

/// Monic gcd over F_p.
pub fn gcd_mod(a: &ModPoly, b: &ModPoly) -> Result<ModPoly, PolyError> {
    if a.p != b.p {
        return Err(PolyError::ModulusMismatch(a.p, b.p));
    }
    if a.is_zero() && b.is_zero() {
        return Err(PolyError::BothZero);
    }
    let (mut x, mut y) = (a.clone(), b.clone());
    while !y.is_zero() {
        let (_, r) = x.div_rem(&y);
        x = y;
        y = r;
    }
    Ok(x.monic())
}

/// `gcd(F, F') = 1` over F_p.
pub fn squarefree_mod(f: &ModPoly) -> Result<bool, PolyError> {
    let d = match f.degree() {
        None | Some(0) => return Err(PolyError::DegreeCollapse { p: f.p }),
        Some(d) => d,
    };
    if d as u64 >= f.p {
        return Err(PolyError::DegreeTooLarge { degree: d, p: f.p });
    }
    let g = gcd_mod(f, &f.derivative())?;
    Ok(g.degree() == Some(0))
}

/// Why the t-th-power certificate could not be issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InconclusiveReason {
    OrderTooSmall,
    DegreeOutOfRange,
    DegreeCollapse,
    NotSquarefree,
    SharedFactorWithShift,
}

impl fmt::Display for InconclusiveReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InconclusiveReason::OrderTooSmall => "order-too-small",
            InconclusiveReason::DegreeOutOfRange => "degree-out-of-range",
            InconclusiveReason::DegreeCollapse => "degree-collapse",
            InconclusiveReason::NotSquarefree => "not-squarefree",
            InconclusiveReason::SharedFactorWithShift => "shared-factor-with-shift",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Certificate {
    Certified,
    Inconclusive(InconclusiveReason),
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Certified)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Certified => f.write_str("certified"),
            Certificate::Inconclusive(r) => write!(f, "inconclusive:{r}"),
        }
    }
}

/// Sufficient certificate that `F(X+1)/F(X)` mod p is not a constant times
/// a t-th power in F_p(X).
///
/// With F squarefree and coprime to its shift, every zero and pole of the
/// ratio is simple, and a multiplicity of ±1 is never divisible by t.
pub fn certify_not_tth_power_proportional(f: &IntPoly, t: u64, ctx: &PrimeFieldCtx) -> Certificate {
    match f.degree() {
        Some(d) if d > 1 && (d as u64) < ctx.p() => {}
        _ => return Certificate::Inconclusive(InconclusiveReason::DegreeOutOfRange),
    }
    if f.reduce(ctx.p()).degree() != f.degree() {
        return Certificate::Inconclusive(InconclusiveReason::DegreeCollapse);
    }
    certify_mod(&f.reduce(ctx.p()), t)
}

/// The certificate for a polynomial already reduced modulo p.
pub fn certify_mod(f: &ModPoly, t: u64) -> Certificate {
    if t <= 2 {
        return Certificate::Inconclusive(InconclusiveReason::OrderTooSmall);
    }
    match squarefree_mod(f) {
        Err(PolyError::DegreeCollapse { .. }) => {
            return Certificate::Inconclusive(InconclusiveReason::DegreeCollapse)
        }
        Err(_) => return Certificate::Inconclusive(InconclusiveReason::DegreeOutOfRange),
        Ok(false) => return Certificate::Inconclusive(InconclusiveReason::NotSquarefree),
        Ok(true) => {}
    }
    let g = gcd_mod(f, &f.shift()).expect("f is nonzero");
    if g.degree() != Some(0) {
        return Certificate::Inconclusive(InconclusiveReason::SharedFactorWithShift);
    }
    Certificate::Certified
}

/// `binom(X, d+1)` over F_p: `X(X-1)...(X-d) / (d+1)!`.
pub fn binomial_poly(d: u64, ctx: &PrimeFieldCtx) -> Result<ModPoly, PolyError> {
    let p = ctx.p();
    if d + 1 >= p {
        return Err(PolyError::FactorialDivisible { d, p });
    }
    let mut acc = ModPoly::constant(1, p);
    let mut fact = 1u64;
    for j in 0..=d {
        acc = acc.mul(&ModPoly::new(vec![(p - j % p) % p, 1], p));
        fact = mul_mod(fact, j + 1, p);
    }
    let inv = mod_inv(fact, ctx).expect("(d+1)! is a unit for d+1 < p");
    Ok(acc.scale(inv))
}

/// Residues `n` where `binom(n+1, d+1) - binom(n, d+1) = binom(n, d)` fails
/// (`n < p-1`), or where `binom(n, d)` vanishes (`d+1 < n < p`).
pub fn binomial_identity_failures(d: u64, ctx: &PrimeFieldCtx) -> Result<Vec<u64>, PolyError> {
    let p = ctx.p();
    let big = binomial_poly(d, ctx)?;
    let small = match d {
        0 => ModPoly::constant(1, p),
        _ => binomial_poly(d - 1, ctx)?,
    };
    let mut bad: Vec<u64> = (0..p - 1)
        .filter(|&n| ctx.sub(big.eval(n + 1), big.eval(n)) != small.eval(n))
        .collect();
    bad.extend((d + 2..p).filter(|&n| small.eval(n) == 0));
    bad.sort_unstable();
    bad.dedup();
    Ok(bad)
}
