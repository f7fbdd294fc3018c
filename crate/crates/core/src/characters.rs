//! Multiplicative and additive characters of F_p with exact root-of-unity values.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{gcd, mul_mod, PrimeFieldCtx};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharError {
    #[error("order {t} does not divide p - 1 = {}", .p - 1)]
    OrderNotDividing { t: u64, p: u64 },
    #[error("order must exceed 1, got {0}")]
    OrderTooSmall(u64),
    #[error("exponent {s} out of range [0, {}]", .p - 2)]
    ExponentOutOfRange { s: u64, p: u64 },
    #[error("additive parameter {a} is zero modulo {p}")]
    TrivialAdditive { a: u64, p: u64 },
}

/// A root of unity `e(k/M)` held exactly, or the value `0` of χ at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootIndex {
    Zero,
    Unit { k: u64, modulus: u64 },
}

impl RootIndex {
    pub fn unit(k: u64, modulus: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        RootIndex::Unit {
            k: k % modulus,
            modulus,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RootIndex::Zero)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, RootIndex::Unit { k: 0, .. })
    }

    pub fn is_minus_one(&self) -> bool {
        matches!(*self, RootIndex::Unit { k, modulus } if modulus % 2 == 0 && k == modulus / 2)
    }

    /// Lowest-terms form, so equal roots compare equal.
    pub fn normalized(&self) -> Self {
        match *self {
            RootIndex::Zero => RootIndex::Zero,
            RootIndex::Unit { k, modulus } => {
                let g = gcd(k, modulus);
                RootIndex::Unit {
                    k: k / g,
                    modulus: modulus / g,
                }
            }
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match *self {
            RootIndex::Zero => Complex64::new(0.0, 0.0),
            RootIndex::Unit { k, modulus } => {
                Complex64::from_polar(1.0, TAU * k as f64 / modulus as f64)
            }
        }
    }

    fn common(a: (u64, u64), b: (u64, u64)) -> (u64, u64, u64) {
        let (ka, ma) = a;
        let (kb, mb) = b;
        let l = ma / gcd(ma, mb) * mb;
        (mul_mod(ka, l / ma, l), mul_mod(kb, l / mb, l), l)
    }

    /// Product of two values; `Zero` absorbs.
    pub fn mul(&self, other: &RootIndex) -> RootIndex {
        match (*self, *other) {
            (RootIndex::Unit { k: ka, modulus: ma }, RootIndex::Unit { k: kb, modulus: mb }) => {
                let (a, b, l) = Self::common((ka, ma), (kb, mb));
                RootIndex::unit((a + b) % l, l).normalized()
            }
            _ => RootIndex::Zero,
        }
    }

    /// `self · conj(other)`; `Zero` absorbs.
    pub fn div(&self, other: &RootIndex) -> RootIndex {
        match (*self, *other) {
            (RootIndex::Unit { k: ka, modulus: ma }, RootIndex::Unit { k: kb, modulus: mb }) => {
                let (a, b, l) = Self::common((ka, ma), (kb, mb));
                RootIndex::unit((a + l - b) % l, l).normalized()
            }
            _ => RootIndex::Zero,
        }
    }

    pub fn pow(&self, j: u64) -> RootIndex {
        match *self {
            RootIndex::Zero if j == 0 => RootIndex::unit(0, 1),
            RootIndex::Zero => RootIndex::Zero,
            RootIndex::Unit { k, modulus } => {
                RootIndex::unit(mul_mod(k, j % modulus, modulus), modulus).normalized()
            }
        }
    }
}

impl fmt::Display for RootIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootIndex::Zero => f.write_str("0"),
            RootIndex::Unit { k, modulus } => write!(f, "e({k}/{modulus})"),
        }
    }
}

/// `χ(x) = e(s·ind_g(x)/(p-1))`, with `χ(0) = 0`.
#[derive(Debug, Clone)]
pub struct MultChar {
    ctx: Arc<PrimeFieldCtx>,
    s: u64,
    t: u64,
    // χ(x) = e(s_red·ind(x)/t)
    s_red: u64,
}

impl MultChar {
    /// Character with exponent `s`; `s = 0` gives the trivial character.
    pub fn new(ctx: Arc<PrimeFieldCtx>, s: u64) -> Result<Self, CharError> {
        let p = ctx.p();
        if s > p - 2 {
            return Err(CharError::ExponentOutOfRange { s, p });
        }
        let g = gcd(s, p - 1);
        let t = (p - 1) / g;
        Ok(MultChar {
            ctx,
            s,
            t,
            s_red: if s == 0 { 0 } else { s / g },
        })
    }

    pub fn ctx(&self) -> &PrimeFieldCtx {
        &self.ctx
    }

    pub fn ctx_arc(&self) -> &Arc<PrimeFieldCtx> {
        &self.ctx
    }

    pub fn exponent(&self) -> u64 {
        self.s
    }

    pub fn order(&self) -> u64 {
        self.t
    }

    pub fn eval(&self, x: u64) -> RootIndex {
        let p = self.ctx.p();
        let x = x % p;
        if x == 0 {
            return RootIndex::Zero;
        }
        RootIndex::unit(mul_mod(self.s, self.ctx.index_nonzero(x), p - 1), p - 1)
    }

    /// Index of `χ(x)` as a multiple of `1/t`, `None` at `x = 0`.
    #[inline]
    pub fn index_mod_order(&self, x: u64) -> Option<u64> {
        if x == 0 {
            return None;
        }
        let ind = self.ctx.index_nonzero(x);
        Some(if self.t <= u32::MAX as u64 {
            (self.s_red * (ind % self.t)) % self.t
        } else {
            mul_mod(self.s_red, ind, self.t)
        })
    }

    pub fn eval_complex(&self, x: u64) -> Complex64 {
        self.eval(x).to_complex()
    }
}

pub fn mult_char_of_order(ctx: Arc<PrimeFieldCtx>, t: u64) -> Result<MultChar, CharError> {
    let p = ctx.p();
    if t < 2 {
        return Err(CharError::OrderTooSmall(t));
    }
    if !(p - 1).is_multiple_of(t) {
        return Err(CharError::OrderNotDividing { t, p });
    }
    MultChar::new(ctx, (p - 1) / t)
}

pub fn eval_mult(chi: &MultChar, x: u64) -> RootIndex {
    chi.eval(x)
}

/// `ψ(x) = e(ax/p)`.
#[derive(Debug, Clone)]
pub struct AddChar {
    ctx: Arc<PrimeFieldCtx>,
    a: u64,
}

impl AddChar {
    pub fn new(ctx: Arc<PrimeFieldCtx>, a: u64) -> Result<Self, CharError> {
        let p = ctx.p();
        let a = a % p;
        if a == 0 {
            return Err(CharError::TrivialAdditive { a, p });
        }
        Ok(AddChar { ctx, a })
    }

    pub fn ctx(&self) -> &PrimeFieldCtx {
        &self.ctx
    }

    pub fn ctx_arc(&self) -> &Arc<PrimeFieldCtx> {
        &self.ctx
    }

    pub fn parameter(&self) -> u64 {
        self.a
    }

    #[inline]
    pub fn index(&self, x: u64) -> u64 {
        let p = self.ctx.p();
        mul_mod(self.a, x % p, p)
    }

    pub fn eval(&self, x: u64) -> RootIndex {
        RootIndex::unit(self.index(x), self.ctx.p())
    }

    pub fn eval_complex(&self, x: u64) -> Complex64 {
        self.eval(x).to_complex()
    }
}

pub fn eval_add(psi: &AddChar, x: u64) -> RootIndex {
    psi.eval(x)
}
