use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    fkm_with_transform, normalized_fourier, ratio_table, PeriodicTable, UnitRoots,
};
use crate::characters::{mult_char_of_order, MultChar};
use crate::constants::{c_const_with, d_const_with, ConstantCache, SeriesParams};
use crate::field::{is_prime, mul_mod, PrimeFieldCtx};
use crate::moments::{
    additive_hypothesis, assemble_report, scan_differences, scan_mult, weighted_sum_with,
    DifferenceScan, Histogram, Interval, MomentReport, MultScan, ReportParts, TermWeights, Theorem,
};
use crate::poly::{
    binomial_poly, certify_mod, certify_not_tth_power_proportional, Certificate,
    InconclusiveReason, ModPoly,
};

use super::{ExperimentSpec, HarnessError, Mode, PolySpec};

/// One row of sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub lhs: f64,
    pub constant: f64,
    pub abs_error: f64,
    pub normalized_error: f64,
    pub m1: u64,
    pub m2: u64,
    pub violations: u64,
    pub hypothesis: String,
    pub wall_ms: f64,
}

impl SweepRecord {
    pub fn from_report(r: &MomentReport, wall_ms: f64) -> Self {
        SweepRecord {
            p: r.p,
            n: r.n,
            lhs: r.lhs,
            constant: r.constant,
            abs_error: r.abs_error,
            normalized_error: r.normalized_error,
            m1: r.m1,
            m2: r.m2,
            violations: r.condition_violations,
            hypothesis: r.hypothesis.clone(),
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPrime {
    pub p: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkmRecord {
    pub p: u64,
    pub n: u64,
    pub lhs_mag: f64,
    pub rhs: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<SkippedPrime>,
    pub fkm: Vec<FkmRecord>,
    pub fkm_skipped: Vec<SkippedPrime>,
    /// Candidates considered; always `records.len() + skipped.len()`.
    pub total_primes: usize,
}

impl SweepOutcome {
    pub fn total_violations(&self) -> u64 {
        self.records.iter().map(|r| r.violations).sum()
    }

    pub fn fkm_failures(&self) -> usize {
        self.fkm.iter().filter(|f| !f.ok).count()
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutcome, HarnessError> {
    run_sweeps(std::slice::from_ref(spec), &mut ConstantCache::new())
        .pop()
        .expect("one spec in, one outcome out")
}

type ScanKey = (PolySpec, u64, u64);

/// Per-prime state shared by every spec visiting that prime.
struct PrimeWork {
    ctx: Arc<PrimeFieldCtx>,
    chars: HashMap<u64, MultChar>,
    mult_scans: HashMap<(ScanKey, u64), MultScan>,
    diff_scans: HashMap<ScanKey, DifferenceScan>,
    folded: HashMap<(ScanKey, u64), Histogram>,
    weights: HashMap<u64, TermWeights>,
    exps: HashMap<(u64, u64), Vec<f64>>,
}

impl PrimeWork {
    fn new(ctx: PrimeFieldCtx) -> Self {
        PrimeWork {
            ctx: Arc::new(ctx),
            chars: HashMap::new(),
            mult_scans: HashMap::new(),
            diff_scans: HashMap::new(),
            folded: HashMap::new(),
            weights: HashMap::new(),
            exps: HashMap::new(),
        }
    }

    fn p(&self) -> u64 {
        self.ctx.p()
    }

    fn weights(&mut self, modulus: u64, m: f64) -> &[f64] {
        let table = self
            .weights
            .entry(modulus)
            .or_insert_with(|| TermWeights::new(modulus));
        self.exps
            .entry((modulus, m.to_bits()))
            .or_insert_with(|| table.for_exponent(m))
    }

    fn chi(&mut self, t: u64) -> Result<MultChar, String> {
        if let Some(c) = self.chars.get(&t) {
            return Ok(c.clone());
        }
        let c = mult_char_of_order(self.ctx.clone(), t).map_err(|e| e.to_string())?;
        self.chars.insert(t, c.clone());
        Ok(c)
    }
}

struct Evaluated {
    record: SweepRecord,
    fkm: Option<Result<FkmRecord, String>>,
}

fn reduced_poly(spec: &ExperimentSpec, ctx: &PrimeFieldCtx) -> Result<ModPoly, String> {
    match &spec.poly {
        PolySpec::Coeffs(s) => Ok(s
            .parse::<crate::poly::IntPoly>()
            .map_err(|e| e.to_string())?
            .reduce(ctx.p())),
        PolySpec::Binomial { d } => binomial_poly(*d, ctx).map_err(|e| e.to_string()),
    }
}

fn interval(spec: &ExperimentSpec, p: u64) -> Result<Interval, String> {
    let (start, len) = spec
        .interval_for(p)
        .ok_or_else(|| "empty interval".to_string())?;
    Interval::new(start, len, p).map_err(|e| e.to_string())
}

fn params(spec: &ExperimentSpec, modulus: u64) -> SeriesParams {
    SeriesParams::new(spec.m, modulus)
        .with_tol(spec.tolerances.constant_tol)
        .with_k_max(spec.tolerances.k_max)
        .with_policy(spec.tolerances.policy)
}

fn fkm_row(
    spec: &ExperimentSpec,
    phi: impl FnOnce() -> Result<PeriodicTable, String>,
    iv: Interval,
    p: u64,
) -> Option<Result<FkmRecord, String>> {
    if !spec.fkm_enabled {
        return None;
    }
    if p > spec.fourier_cap {
        return Some(Err(format!(
            "p exceeds the Fourier cap {}",
            spec.fourier_cap
        )));
    }
    if (iv.len as f64) <= (p as f64).sqrt() {
        return Some(Err("interval not longer than sqrt(p)".into()));
    }
    Some(phi().and_then(|phi| {
        let hat = normalized_fourier(&phi);
        let check = fkm_with_transform(&phi, &hat, iv).map_err(|e| e.to_string())?;
        Ok(FkmRecord {
            p,
            n: iv.len,
            lhs_mag: check.lhs_mag,
            rhs: check.rhs,
            ok: check.ok,
        })
    }))
}

fn eval_thm1(
    spec: &ExperimentSpec,
    w: &mut PrimeWork,
    cache: &mut ConstantCache,
) -> Result<Evaluated, String> {
    let p = w.p();
    let t = spec.order.expect("validated");
    if !(p - 1).is_multiple_of(t) {
        return Err(format!("order {t} does not divide p-1"));
    }
    let iv = interval(spec, p)?;
    let fm = reduced_poly(spec, &w.ctx)?;
    let hypothesis = match spec.poly.int_poly().map_err(|e| e.to_string())? {
        Some(f) => certify_not_tth_power_proportional(&f, t, &w.ctx),
        None => certify_mod(&fm, t),
    };
    if !hypothesis.is_certified() {
        return Err(format!("hypothesis {hypothesis}"));
    }
    let chi = w.chi(t)?;
    let key = ((spec.poly.clone(), iv.start, iv.len), t);
    if !w.mult_scans.contains_key(&key) {
        let scan = scan_mult(&chi, &fm, iv).map_err(|e| e.to_string())?;
        w.mult_scans.insert(key.clone(), scan);
    }
    let constant = c_const_with(&params(spec, t), cache, false).map_err(|e| e.to_string())?;
    let lhs = {
        let weights = w.weights(t, spec.m).to_vec();
        weighted_sum_with(&w.mult_scans[&key].hist, &weights, t)
    };
    let scan = &w.mult_scans[&key];
    let report = assemble_report(ReportParts {
        theorem: Theorem::Thm1,
        p,
        interval: iv,
        m: spec.m,
        lhs,
        constant: &constant,
        decomposition: scan.decomposition,
        violations: scan.flagged.len() as u64,
        hypothesis,
    });
    let fkm = fkm_row(
        spec,
        || ratio_table(&chi, &fm, 0).map_err(|e| e.to_string()),
        iv,
        p,
    );
    Ok(Evaluated {
        record: SweepRecord::from_report(&report, 0.0),
        fkm,
    })
}

fn eval_thm2(
    spec: &ExperimentSpec,
    w: &mut PrimeWork,
    cache: &mut ConstantCache,
) -> Result<Evaluated, String> {
    let p = w.p();
    let a = spec.a.expect("validated") % p;
    if a == 0 {
        return Err("additive parameter vanishes mod p".into());
    }
    let iv = interval(spec, p)?;
    let fm = reduced_poly(spec, &w.ctx)?;
    let collapsed = match spec.poly.int_poly().map_err(|e| e.to_string())? {
        Some(f) => f.degree() != fm.degree(),
        None => false,
    };
    let hypothesis = if collapsed {
        Certificate::Inconclusive(InconclusiveReason::DegreeCollapse)
    } else {
        additive_hypothesis(&fm)
    };
    if !hypothesis.is_certified() {
        return Err(format!("hypothesis {hypothesis}"));
    }
    let key: ScanKey = (spec.poly.clone(), iv.start, iv.len);
    if !w.diff_scans.contains_key(&key) {
        w.diff_scans.insert(key.clone(), scan_differences(&fm, iv));
    }
    let fkey = (key.clone(), a);
    if !w.folded.contains_key(&fkey) {
        let hist = w.diff_scans[&key].folded(a);
        w.folded.insert(fkey.clone(), hist);
    }
    let constant = d_const_with(&params(spec, p), cache, false).map_err(|e| e.to_string())?;
    let lhs = {
        let weights = w.weights(p, spec.m).to_vec();
        weighted_sum_with(&w.folded[&fkey], &weights, p)
    };
    let scan = &w.diff_scans[&key];
    let report = assemble_report(ReportParts {
        theorem: Theorem::Thm2,
        p,
        interval: iv,
        m: spec.m,
        lhs,
        constant: &constant,
        decomposition: scan.decomposition,
        violations: scan.flagged.len() as u64,
        hypothesis,
    });
    let phi = || {
        let g = fm.forward_difference();
        let roots = UnitRoots::new(p);
        Ok(PeriodicTable::from_fn(p, |n| {
            roots.get(mul_mod(a, g.eval(n), p))
        }))
    };
    let fkm = fkm_row(spec, phi, iv, p);
    Ok(Evaluated {
        record: SweepRecord::from_report(&report, 0.0),
        fkm,
    })
}

/// Runs several specs with primes as the outer loop, so field contexts, scans,
/// weight tables and constants are computed once per prime and shared.
pub fn run_sweeps(
    specs: &[ExperimentSpec],
    cache: &mut ConstantCache,
) -> Vec<Result<SweepOutcome, HarnessError>> {
    let mut outcomes: Vec<Result<SweepOutcome, HarnessError>> = specs
        .iter()
        .map(|s| s.validate().map(|_| SweepOutcome::default()))
        .collect();

    let mut visits: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, spec) in specs.iter().enumerate() {
        if let Ok(out) = &mut outcomes[i] {
            let cands = spec.primes.candidates();
            out.total_primes = cands.len();
            for p in cands {
                visits.entry(p).or_default().push(i);
            }
        }
    }

    for (p, idx) in visits {
        if p < 3 || !is_prime(p) {
            for i in idx {
                if let Ok(out) = &mut outcomes[i] {
                    out.skipped.push(SkippedPrime {
                        p,
                        reason: "not an odd prime".into(),
                    });
                }
            }
            continue;
        }
        let needs_table = idx.iter().any(|&i| {
            specs[i].mode == Mode::Thm1 && specs[i].order.is_some_and(|t| (p - 1) % t == 0)
        });
        let ctx = if needs_table {
            PrimeFieldCtx::new(p)
        } else {
            PrimeFieldCtx::with_table_threshold(p, 0)
        }
        .expect("p is an odd prime");
        let mut work = PrimeWork::new(ctx);
        for i in idx {
            let spec = &specs[i];
            let started = Instant::now();
            let result = match spec.mode {
                Mode::Thm1 => eval_thm1(spec, &mut work, cache),
                Mode::Thm2 => eval_thm2(spec, &mut work, cache),
            };
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let Ok(out) = &mut outcomes[i] else { continue };
            match result {
                Ok(mut ev) => {
                    ev.record.wall_ms = wall_ms;
                    out.records.push(ev.record);
                    match ev.fkm {
                        Some(Ok(row)) => out.fkm.push(row),
                        Some(Err(reason)) => out.fkm_skipped.push(SkippedPrime { p, reason }),
                        None => {}
                    }
                }
                Err(reason) => out.skipped.push(SkippedPrime { p, reason }),
            }
        }
    }

    for out in outcomes.iter_mut() {
        if let Ok(o) = out {
            if o.records.is_empty() {
                *out = Err(HarnessError::EmptySweep {
                    skipped: o.skipped.len(),
                });
            }
        }
    }
    outcomes
}
