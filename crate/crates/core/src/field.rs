//! Arithmetic in the prime field F_p.
//!
//! [`PrimeFieldCtx`] fixes an odd prime `p` together with the smallest
//! primitive root `g` and answers discrete-logarithm queries either from a
//! full index table (small `p`) or by baby-step giant-step.

use std::collections::HashMap;

use thiserror::Error;

/// Largest prime for which the full index table is built by default.
pub const DEFAULT_TABLE_THRESHOLD: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("the discrete logarithm of zero is undefined")]
    ZeroArgument,
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Deterministic Miller-Rabin for all 64-bit inputs.
///
/// The first twelve primes as witnesses are sufficient below 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &q in &WITNESSES {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n` by trial division, ascending.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q.saturating_mul(q) <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest primitive root of an odd prime `p`.
///
/// The caller guarantees primality; use [`PrimeFieldCtx::new`] for a checked
/// entry point.
pub fn find_primitive_root(p: u64) -> u64 {
    let order = p - 1;
    let factors = distinct_prime_factors(order);
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, order / q, p) != 1))
        .expect("every prime has a primitive root")
}

/// Baby-step giant-step state for one generator.
#[derive(Debug, Clone)]
struct BabySteps {
    step: u64,
    table: HashMap<u64, u64>,
    /// g^{-step}
    giant: u64,
}

impl BabySteps {
    fn new(p: u64, g: u64) -> Self {
        let order = p - 1;
        let step = (order as f64).sqrt().ceil() as u64;
        let mut table = HashMap::with_capacity(step as usize);
        let mut cur = 1u64;
        for j in 0..step {
            table.entry(cur).or_insert(j);
            cur = mul_mod(cur, g, p);
        }
        let g_inv = pow_mod(g, p - 2, p);
        let giant = pow_mod(g_inv, step, p);
        BabySteps { step, table, giant }
    }

    fn log(&self, x: u64, p: u64) -> u64 {
        let mut y = x;
        for i in 0..=self.step {
            if let Some(&j) = self.table.get(&y) {
                return (i * self.step + j) % (p - 1);
            }
            y = mul_mod(y, self.giant, p);
        }
        unreachable!("g is a primitive root, every nonzero residue has a logarithm")
    }
}

/// An odd prime field with a fixed primitive root.
///
/// Immutable after construction; safe to share between threads.
#[derive(Debug, Clone)]
pub struct PrimeFieldCtx {
    p: u64,
    g: u64,
    index_table: Option<Vec<u32>>,
    table_threshold: u64,
    baby_steps: Option<BabySteps>,
}

impl PrimeFieldCtx {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        Self::with_table_threshold(p, DEFAULT_TABLE_THRESHOLD)
    }

    /// Builds the context, using the full index table only when `p <= threshold`.
    pub fn with_table_threshold(p: u64, threshold: u64) -> Result<Self, FieldError> {
        if p < 3 || !is_prime(p) {
            return Err(FieldError::NotOddPrime(p));
        }
        let g = find_primitive_root(p);
        // u32 entries: the threshold is capped so indices always fit.
        let use_table = p <= threshold.min(u32::MAX as u64);
        let (index_table, baby_steps) = if use_table {
            let mut table = vec![u32::MAX; p as usize];
            let mut cur = 1u64;
            for e in 0..(p - 1) {
                table[cur as usize] = e as u32;
                cur = mul_mod(cur, g, p);
            }
            (Some(table), None)
        } else {
            (None, Some(BabySteps::new(p, g)))
        };
        Ok(PrimeFieldCtx {
            p,
            g,
            index_table,
            table_threshold: threshold,
            baby_steps,
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The primitive root `g` used for all logarithms.
    #[inline]
    pub fn generator(&self) -> u64 {
        self.g
    }

    pub fn has_index_table(&self) -> bool {
        self.index_table.is_some()
    }

    pub fn table_threshold(&self) -> u64 {
        self.table_threshold
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.p
    }

    pub fn reduce_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.p)
    }

    pub fn inv(&self, x: u64) -> Result<u64, FieldError> {
        mod_inv(x, self)
    }

    /// `ind_g(x)` in `[0, p-2]`.
    pub fn discrete_log(&self, x: u64) -> Result<u64, FieldError> {
        let x = x % self.p;
        if x == 0 {
            return Err(FieldError::ZeroArgument);
        }
        Ok(self.index_nonzero(x))
    }

    /// Logarithm of a reduced nonzero residue. Hot path of the moment sums.
    #[inline]
    pub(crate) fn index_nonzero(&self, x: u64) -> u64 {
        debug_assert!(x != 0 && x < self.p);
        match &self.index_table {
            Some(table) => table[x as usize] as u64,
            None => self
                .baby_steps
                .as_ref()
                .expect("context without a table carries baby steps")
                .log(x, self.p),
        }
    }

    /// Logarithm by baby-step giant-step regardless of the table, used to
    /// cross-check the two routes.
    pub fn discrete_log_bsgs(&self, x: u64) -> Result<u64, FieldError> {
        let x = x % self.p;
        if x == 0 {
            return Err(FieldError::ZeroArgument);
        }
        Ok(match &self.baby_steps {
            Some(bs) => bs.log(x, self.p),
            None => BabySteps::new(self.p, self.g).log(x, self.p),
        })
    }
}

/// Inverse of `x` modulo `ctx.p()`, in `[1, p-1]`.
pub fn mod_inv(x: u64, ctx: &PrimeFieldCtx) -> Result<u64, FieldError> {
    let p = ctx.p() as i128;
    let x = (x % ctx.p()) as i128;
    if x == 0 {
        return Err(FieldError::ZeroInverse);
    }
    let (mut r0, mut r1) = (p, x);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    Ok(t0.rem_euclid(p) as u64)
}
