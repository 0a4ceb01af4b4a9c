//! Turning predictions into certified metrics: Clopper-Pearson lower bounds,
//! certified accuracy, mean certified radius, and AUC under an adversary that
//! may perturb a limited number of test instances.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::pointwise::{certified_radius, Certificate};
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::threshold::CertTable;

pub const DEFAULT_CONFIDENCE: f64 = 0.999;
pub const DEFAULT_SAMPLES: u64 = 100_000;
/// Largest `n + m` accepted by exhaustive adversarial AUC.
pub const EXHAUSTIVE_AUC_LIMIT: usize = 20;

/// Regularized incomplete beta `I_x(a, b)` via the Lentz continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + libm::lgamma(a + b)
        - libm::lgamma(a)
        - libm::lgamma(b);
    // the continued fraction converges fast for x below the mean
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial success
/// probability: the `1 - confidence` quantile of `Beta(s, n - s + 1)`,
/// found by bisection to `1e-12`.
pub fn clopper_pearson_lower(success: u64, n: u64, confidence: f64) -> Result<f64> {
    if n == 0 || success > n {
        return Err(Error::OutOfRange(format!(
            "invalid counts: {success} successes out of {n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if success == 0 {
        return Ok(0.0);
    }
    let (a, b) = (success as f64, (n - success + 1) as f64);
    let level = 1.0 - confidence;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if regularized_beta(mid, a, b) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `lo` is below the quantile, keeping the bound conservative
    Ok(lo)
}

/// What a prediction's certification is based on.
#[derive(Clone, Debug, PartialEq)]
pub enum Evidence {
    /// Monte-Carlo counts of the predicted class.
    Counts { success: u64, n: u64 },
    /// An exactly computed probability.
    Exact(Rational),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub label: u32,
    /// Predicted class. For exact records it may be absent, in which case the
    /// probability refers to `label` itself.
    pub predicted: Option<u32>,
    pub evidence: Evidence,
}

impl PredictionRecord {
    /// Whether the prediction being certified is the true label.
    pub fn correct(&self) -> bool {
        self.predicted.is_none_or(|p| p == self.label)
    }

    /// Lower bound on the probability of the predicted class.
    pub fn p_lower(&self, confidence: f64) -> Result<Rational> {
        match &self.evidence {
            Evidence::Counts { success, n } => {
                let bound = clopper_pearson_lower(*success, *n, confidence)?;
                Ok(Rational::from_float(bound).expect("bound is finite"))
            }
            Evidence::Exact(p) => Ok(p.clone()),
        }
    }

    pub fn certify(&self, table: &CertTable, confidence: f64) -> Result<CertifiedRecord> {
        let p_lower = self.p_lower(confidence)?;
        let certificate = certified_radius(&p_lower, table);
        Ok(CertifiedRecord {
            id: self.id.clone(),
            p_lower,
            certificate,
            correct: self.correct(),
        })
    }

    pub fn to_json_line(&self) -> String {
        let mut value = json!({ "id": self.id, "label": self.label });
        let obj = value.as_object_mut().expect("object literal");
        if let Some(p) = self.predicted {
            obj.insert("predicted".into(), json!(p));
        }
        match &self.evidence {
            Evidence::Counts { success, n } => {
                obj.insert("success_count".into(), json!(success));
                obj.insert("n_samples".into(), json!(n));
            }
            Evidence::Exact(p) => {
                obj.insert("p_exact".into(), json!(p.to_string()));
            }
        }
        value.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedRecord {
    pub id: String,
    pub p_lower: Rational,
    pub certificate: Certificate,
    pub correct: bool,
}

impl CertifiedRecord {
    /// Radius with respect to the true label; abstentions and wrong
    /// predictions count as 0 and never certify.
    pub fn label_radius(&self) -> Option<usize> {
        match (self.correct, self.certificate) {
            (true, Certificate::Radius(r)) => Some(r),
            _ => None,
        }
    }
}

pub fn certify_records(
    records: &[PredictionRecord],
    table: &CertTable,
    confidence: f64,
) -> Result<Vec<CertifiedRecord>> {
    records
        .par_iter()
        .map(|r| r.certify(table, confidence))
        .collect()
}

/// Report CSV with header `id,p_lower,radius,correct`. `p_lower` is rounded
/// down to 12 digits; abstentions show as `abstain`.
pub fn certified_csv(rows: &[CertifiedRecord]) -> String {
    let mut out = String::from("id,p_lower,radius,correct\n");
    for row in rows {
        let radius = match row.certificate {
            Certificate::Abstain => "abstain".to_string(),
            Certificate::Radius(r) => r.to_string(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.id,
            format_floor(&row.p_lower, 12),
            radius,
            u8::from(row.correct)
        );
    }
    out
}

fn format_floor(value: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let units = (value * Rational::from_integer(scale.clone())).floor().to_integer();
    let sign = if units.is_negative() { "-" } else { "" };
    let units = units.abs();
    format!("{sign}{}.{:0>w$}", &units / &scale, (&units % &scale).to_string(), w = digits)
}

/// Fraction of records certified at radius at least `r` for their true label.
pub fn acc_at_r(records: &[PredictionRecord], table: &CertTable, r: usize, confidence: f64) -> Result<f64> {
    let rows = certify_records(records, table, confidence)?;
    Ok(acc_at_r_certified(&rows, r))
}

pub fn acc_at_r_certified(rows: &[CertifiedRecord], r: usize) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .filter(|row| row.label_radius().is_some_and(|got| got >= r))
        .count();
    hits as f64 / rows.len() as f64
}

/// Average certified radius with respect to the true labels.
pub fn mean_radius(records: &[PredictionRecord], table: &CertTable, confidence: f64) -> Result<f64> {
    let rows = certify_records(records, table, confidence)?;
    Ok(mean_radius_certified(&rows))
}

pub fn mean_radius_certified(rows: &[CertifiedRecord]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let total: usize = rows.iter().filter_map(CertifiedRecord::label_radius).sum();
    total as f64 / rows.len() as f64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    label: i64,
    predicted: Option<i64>,
    success_count: Option<i64>,
    n_samples: Option<i64>,
    p_exact: Option<String>,
}

fn class_id(value: i64, what: &str) -> std::result::Result<u32, String> {
    u32::try_from(value).map_err(|_| format!("{what} must be a non-negative class id, got {value}"))
}

fn record_from_raw(raw: RawRecord) -> std::result::Result<PredictionRecord, String> {
    let label = class_id(raw.label, "label")?;
    let predicted = raw.predicted.map(|p| class_id(p, "predicted")).transpose()?;
    let evidence = match (raw.success_count, raw.n_samples, raw.p_exact) {
        (Some(_), _, Some(_)) | (_, Some(_), Some(_)) => {
            return Err("a record carries either counts or p_exact, not both".into())
        }
        (Some(success), Some(n), None) => {
            if success < 0 || n < 0 {
                return Err("counts must be non-negative".into());
            }
            if n == 0 {
                return Err("n_samples must be positive".into());
            }
            if success > n {
                return Err(format!("success_count {success} exceeds n_samples {n}"));
            }
            if predicted.is_none() {
                return Err("count records need a `predicted` class".into());
            }
            Evidence::Counts {
                success: success as u64,
                n: n as u64,
            }
        }
        (None, None, Some(p)) => {
            let p = parse_rational(&p).map_err(|e| e.to_string())?;
            if p.is_negative() || p > Rational::from_integer(1.into()) {
                return Err(format!("p_exact {p} outside [0, 1]"));
            }
            Evidence::Exact(p)
        }
        (None, None, None) => return Err("record has neither counts nor p_exact".into()),
        _ => return Err("success_count and n_samples must appear together".into()),
    };
    Ok(PredictionRecord {
        id: raw.id,
        label,
        predicted,
        evidence,
    })
}

/// Parses a JSON-lines prediction dump, sorted (stably) by id.
pub fn parse_predictions(text: &str, path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        records.push(record_from_raw(raw).map_err(|msg| Error::parse(path, idx + 1, msg))?);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

pub fn ingest_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    parse_predictions(&fs::read_to_string(path)?, path)
}

pub fn write_predictions(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// One test instance for adversarial AUC. Scores are the probability of
/// class 1; the adversary lowers positives and raises negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct AucInstance<T> {
    pub clean: T,
    pub adversarial: T,
    pub positive: bool,
}

impl<T: Scalar> AucInstance<T> {
    pub fn new(clean: T, adversarial: T, positive: bool) -> Result<Self> {
        let ok = if positive {
            clean >= adversarial
        } else {
            clean <= adversarial
        };
        if !ok {
            return Err(Error::Validation(format!(
                "adversarial score {adversarial:?} moves a {} instance the wrong way from {clean:?}",
                if positive { "positive" } else { "negative" }
            )));
        }
        Ok(Self {
            clean,
            adversarial,
            positive,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AucMode {
    Exhaustive,
    Greedy,
}

/// `2 * Ŝ(a, b)`: 2 if `a > b`, 1 on ties, 0 otherwise.
fn doubled_indicator<T: PartialOrd>(a: &T, b: &T) -> u64 {
    if a > b {
        2
    } else if a == b {
        1
    } else {
        0
    }
}

/// Pairwise comparisons for every perturbed/clean combination.
struct PairTable {
    n: usize,
    m: usize,
    /// `[pos][neg][pos perturbed][neg perturbed]`, doubled
    cells: Vec<[[u64; 2]; 2]>,
}

impl PairTable {
    fn new<T: Scalar>(pos: &[&AucInstance<T>], neg: &[&AucInstance<T>]) -> Self {
        let mut cells = Vec::with_capacity(pos.len() * neg.len());
        for a in pos {
            for b in neg {
                let score = |pa: bool, pb: bool| {
                    let sa = if pa { &a.adversarial } else { &a.clean };
                    let sb = if pb { &b.adversarial } else { &b.clean };
                    doubled_indicator(sa, sb)
                };
                cells.push([[score(false, false), score(false, true)], [score(true, false), score(true, true)]]);
            }
        }
        Self {
            n: pos.len(),
            m: neg.len(),
            cells,
        }
    }

    /// Doubled AUC numerator; bit `i < n` of `mask` perturbs positive `i`,
    /// bit `n + j` perturbs negative `j`.
    fn total(&self, mask: u64) -> u64 {
        let mut sum = 0;
        for i in 0..self.n {
            let pa = (mask >> i) & 1 == 1;
            for j in 0..self.m {
                let pb = (mask >> (self.n + j)) & 1 == 1;
                sum += self.cells[i * self.m + j][pa as usize][pb as usize];
            }
        }
        sum
    }
}

type Split<'a, T> = (Vec<&'a AucInstance<T>>, Vec<&'a AucInstance<T>>);

fn split_instances<T: Scalar>(instances: &[AucInstance<T>]) -> Result<Split<'_, T>> {
    let (pos, neg): (Vec<_>, Vec<_>) = instances.iter().partition(|i| i.positive);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Validation("AUC needs at least one positive and one negative instance".into()));
    }
    Ok((pos, neg))
}

/// AUC with no instance perturbed.
pub fn clean_auc<T: Scalar>(instances: &[AucInstance<T>]) -> Result<T> {
    let (pos, neg) = split_instances(instances)?;
    let table = PairTable::new(&pos, &neg);
    Ok(T::ratio(table.total(0), 2 * (table.n * table.m) as u64))
}

/// Smallest AUC reachable by perturbing at most `k` instances.
///
/// `Exhaustive` enumerates every subset (up to [`EXHAUSTIVE_AUC_LIMIT`]
/// instances) and is exact. `Greedy` repeatedly perturbs the instance that
/// lowers the AUC most; it returns an upper bound of the true minimum.
pub fn adversarial_auc<T: Scalar>(instances: &[AucInstance<T>], k: usize, mode: AucMode) -> Result<T> {
    let (pos, neg) = split_instances(instances)?;
    let total = pos.len() + neg.len();
    if k > total {
        return Err(Error::OutOfRange(format!("budget k = {k} exceeds {total} instances")));
    }
    let table = PairTable::new(&pos, &neg);
    let best = match mode {
        AucMode::Exhaustive => {
            if total > EXHAUSTIVE_AUC_LIMIT {
                return Err(Error::UnsupportedSize(format!(
                    "exhaustive AUC handles at most {EXHAUSTIVE_AUC_LIMIT} instances, got {total}; use greedy mode"
                )));
            }
            (0u64..1 << total)
                .into_par_iter()
                .filter(|mask| mask.count_ones() as usize <= k)
                .map(|mask| table.total(mask))
                .min()
                .expect("the empty subset is always feasible")
        }
        AucMode::Greedy => {
            let mut mask = 0u64;
            let mut current = table.total(0);
            for _ in 0..k {
                let pick = (0..total)
                    .filter(|bit| (mask >> bit) & 1 == 0)
                    .map(|bit| (table.total(mask | 1 << bit), bit))
                    .min();
                match pick {
                    Some((value, bit)) => {
                        mask |= 1 << bit;
                        current = value;
                    }
                    None => break,
                }
            }
            current
        }
    };
    Ok(T::ratio(best, 2 * (table.n * table.m) as u64))
}

/// Parses `id,label,clean,adversarial` rows (header optional). Scores may
/// be decimals or `num/den` fractions.
pub fn parse_auc_csv(text: &str, path: &Path) -> Result<Vec<AucInstance<Rational>>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("id,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, idx + 1, "expected `id,label,clean,adversarial`"));
        }
        let positive = match fields[1] {
            "1" => true,
            "0" => false,
            other => return Err(Error::parse(path, idx + 1, format!("label must be 0 or 1, got {other:?}"))),
        };
        let score = |s: &str| parse_rational(s).map_err(|e| Error::parse(path, idx + 1, e.to_string()));
        let inst = AucInstance::new(score(fields[2])?, score(fields[3])?, positive)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}
