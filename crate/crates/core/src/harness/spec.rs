//! Experiment configuration, mirrored by the optional JSON config file.

use serde::{Deserialize, Serialize};

use crate::bounds::DEFAULT_FOURIER_CAP;
use crate::constants::{TruncationPolicy, DEFAULT_K_MAX, DEFAULT_TOL};
use crate::field::is_prime;
use crate::poly::IntPoly;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Thm1,
    Thm2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimeSelection {
    /// Every prime in `[lo, hi]`.
    Range { lo: u64, hi: u64 },
    /// Candidates taken as given; non-primes are skipped with a reason.
    List(Vec<u64>),
}

impl PrimeSelection {
    /// The candidates the sweep accounts for, in increasing order.
    pub fn candidates(&self) -> Vec<u64> {
        let mut out = match self {
            PrimeSelection::Range { lo, hi } => (*lo..=*hi).filter(|&n| is_prime(n)).collect(),
            PrimeSelection::List(v) => v.clone(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolySpec {
    /// Integer coefficients, low degree first, e.g. `"1,0,1"`.
    Coeffs(String),
    /// `binom(X, d+1)` reduced mod each prime.
    Binomial { d: u64 },
}

impl PolySpec {
    pub fn int_poly(&self) -> Result<Option<IntPoly>, HarnessError> {
        match self {
            PolySpec::Coeffs(s) => s
                .parse::<IntPoly>()
                .map(Some)
                .map_err(|e| HarnessError::InvalidSpec(e.to_string())),
            PolySpec::Binomial { .. } => Ok(None),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PolySpec::Coeffs(s) => s.clone(),
            PolySpec::Binomial { d } => format!("binomial({d})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalPolicy {
    /// `[1, p-2]` for the multiplicative mode, `[0, p-2]` for the additive one,
    /// and `[d+2, p-2]` for binomial polynomials.
    #[default]
    Full,
    FixedLength {
        start: u64,
        len: u64,
    },
    /// Length `floor(fraction·p)` from `start`.
    Fraction {
        start: u64,
        fraction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub constant_tol: f64,
    pub k_max: u64,
    pub policy: TruncationPolicy,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            constant_tol: DEFAULT_TOL,
            k_max: DEFAULT_K_MAX,
            policy: TruncationPolicy::Truncate,
        }
    }
}

fn default_cap() -> u64 {
    DEFAULT_FOURIER_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub primes: PrimeSelection,
    pub poly: PolySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,
    pub m: f64,
    #[serde(default)]
    pub interval: IntervalPolicy,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fkm_enabled: bool,
    #[serde(default = "default_cap")]
    pub fourier_cap: u64,
}

impl ExperimentSpec {
    pub fn thm1(poly: PolySpec, order: u64, m: f64, primes: PrimeSelection) -> Self {
        ExperimentSpec {
            mode: Mode::Thm1,
            primes,
            poly,
            order: Some(order),
            a: None,
            m,
            interval: IntervalPolicy::Full,
            tolerances: Tolerances::default(),
            fkm_enabled: false,
            fourier_cap: DEFAULT_FOURIER_CAP,
        }
    }

    pub fn thm2(poly: PolySpec, a: u64, m: f64, primes: PrimeSelection) -> Self {
        ExperimentSpec {
            mode: Mode::Thm2,
            primes,
            poly,
            order: None,
            a: Some(a),
            m,
            interval: IntervalPolicy::Full,
            tolerances: Tolerances::default(),
            fkm_enabled: false,
            fourier_cap: DEFAULT_FOURIER_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidSpec(msg));
        if !(self.m > 0.0 && self.m <= 1.0) {
            return bad(format!("m = {} outside (0, 1]", self.m));
        }
        match self.mode {
            Mode::Thm1 => match self.order {
                Some(t) if t > 2 => {}
                Some(t) => return bad(format!("order {t} must exceed 2")),
                None => return bad("thm1 needs an order".into()),
            },
            Mode::Thm2 => match self.a {
                Some(a) if a > 0 => {}
                Some(_) => return bad("additive parameter must be nonzero".into()),
                None => return bad("thm2 needs an additive parameter a".into()),
            },
        }
        if self.tolerances.constant_tol.is_nan()
            || self.tolerances.constant_tol <= 0.0
            || self.tolerances.k_max == 0
        {
            return bad("tolerances must be positive".into());
        }
        if let IntervalPolicy::Fraction { fraction, .. } = self.interval {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return bad(format!("interval fraction {fraction} outside (0, 1]"));
            }
        }
        if let Some(f) = self.poly.int_poly()? {
            if f.degree().is_none_or(|d| d < 2) {
                return bad(format!("polynomial {f} must have degree > 1"));
            }
            if self.mode == Mode::Thm1 && !f.is_monic() {
                return bad(format!("polynomial {f} must be monic"));
            }
        }
        if let PolySpec::Binomial { d } = self.poly {
            if d < 1 {
                return bad("binomial polynomial needs d >= 1".into());
            }
        }
        Ok(())
    }

    /// `[start, start + len)` for prime `p`, or `None` if the policy leaves nothing.
    pub fn interval_for(&self, p: u64) -> Option<(u64, u64)> {
        match self.interval {
            IntervalPolicy::Full => {
                let lo = match (&self.poly, self.mode) {
                    (PolySpec::Binomial { d }, _) => d + 2,
                    (_, Mode::Thm1) => 1,
                    (_, Mode::Thm2) => 0,
                };
                let hi = p.checked_sub(2)?;
                (hi >= lo).then(|| (lo, hi - lo + 1))
            }
            IntervalPolicy::FixedLength { start, len } => {
                (len >= 1 && len <= p).then_some((start % p, len))
            }
            IntervalPolicy::Fraction { start, fraction } => {
                let len = (fraction * p as f64).floor() as u64;
                (len >= 1 && len <= p).then_some((start % p, len))
            }
        }
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec =
            serde_json::from_str(s).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}
