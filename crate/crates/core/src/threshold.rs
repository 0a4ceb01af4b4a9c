//! Certification thresholds `rho_r^{-1}(1/2)` computed entirely in integers.
//!
//! Probabilities are scaled by `(100 K)^d` so that `alpha` and `beta` become
//! the integers `100 K alpha` and `100 K beta`, and the target `1/2` becomes
//! `50 K (100 K)^(d-1)`. The greedy region fill runs on these integers; the
//! residual of the last region is kept as an integer fraction and the final
//! decimal is found by a binary search that rounds up, so every reported
//! threshold is an upper bound of the exact one.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::regions::build_region_table;
use crate::scalar::{one_half, Rational};

pub const DEFAULT_PRECISION: usize = 20;

/// A threshold stored as `units * 10^-digits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Threshold {
    units: BigUint,
    digits: usize,
}

impl Threshold {
    pub fn new(units: BigUint, digits: usize) -> Self {
        Self { units, digits }
    }

    pub fn half(digits: usize) -> Self {
        Self {
            units: BigUint::from(5u32) * BigUint::from(10u32).pow(digits as u32 - 1),
            digits,
        }
    }

    pub fn units(&self) -> &BigUint {
        &self.units
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn value(&self) -> Rational {
        Rational::new(
            BigInt::from(self.units.clone()),
            BigInt::from(BigUint::from(10u32).pow(self.digits as u32)),
        )
    }

    fn parse(s: &str, digits: usize) -> Option<Self> {
        let (int_part, frac) = s.split_once('.')?;
        if frac.len() != digits || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if int_part != "0" && int_part != "1" {
            return None;
        }
        let units: BigUint = format!("{int_part}{frac}").parse().ok()?;
        Some(Self { units, digits })
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = BigUint::from(10u32).pow(self.digits as u32);
        let (int_part, frac) = self.units.div_rem(&scale);
        write!(f, "{int_part}.{:0>w$}", frac.to_string(), w = self.digits)
    }
}

/// Snapshot of the running accumulators, in scaled units, taken after each
/// region that is absorbed whole.
#[derive(Clone, Debug)]
pub struct AccumulatorStep {
    pub p: BigUint,
    pub rho: BigUint,
    pub target: BigUint,
    pub scale: BigUint,
}

/// Smallest `q` in `1..=hi` with `pred(q)`, assuming `pred` is monotone and
/// `pred(hi)` holds.
fn smallest_satisfying(hi: &BigUint, pred: impl Fn(&BigUint) -> bool) -> BigUint {
    let mut lo = BigUint::one();
    let mut hi = hi.clone();
    while lo < hi {
        let mid = (&lo + &hi) >> 1u32;
        if pred(&mid) {
            hi = mid;
        } else {
            lo = mid + 1u32;
        }
    }
    hi
}

fn check_args(params: &NoiseParams, r: usize, precision: usize) -> Result<()> {
    if r > params.d() {
        return Err(Error::OutOfRange(format!(
            "radius {r} exceeds dimension {}",
            params.d()
        )));
    }
    if precision == 0 {
        return Err(Error::OutOfRange("precision must be at least 1 digit".into()));
    }
    Ok(())
}

/// How the last, partially filled region is accounted for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Residual {
    /// Keep the residual as an exact fraction of the region; the only
    /// rounding is the final decimal one.
    #[default]
    Exact,
    /// Round the residual up to whole grid points. Adds at most one point's
    /// clean-point mass, which is at most `alpha^d` when `alpha > beta`.
    WholePoints,
}

/// Scaled inverse `num / den`, in units of `(100 K)^-d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledInverse {
    pub num: BigUint,
    pub den: BigUint,
    pub scale: BigUint,
}

impl ScaledInverse {
    pub fn value(&self) -> Rational {
        Rational::new(
            BigInt::from(self.num.clone()),
            BigInt::from(&self.den * &self.scale),
        )
    }
}

/// Upper bound of `rho_r^{-1}(1/2)` scaled by `(100 K)^d`, reporting every
/// fully absorbed region to `on_step`.
pub fn scaled_inverse_traced(
    params: &NoiseParams,
    r: usize,
    residual: Residual,
    mut on_step: impl FnMut(&AccumulatorStep),
) -> Result<ScaledInverse> {
    check_args(params, r, 1)?;
    let d = params.d();
    let scale = BigUint::from(params.scale()).pow(d as u32);
    let target = &scale >> 1u32;
    if r == 0 {
        return Ok(ScaledInverse {
            num: target,
            den: BigUint::one(),
            scale,
        });
    }
    let table = build_region_table(params, r)?;
    let alpha_pow = powers(params.alpha_scaled(), d);
    let beta_pow = powers(params.beta_scaled(), d);

    let mut p = BigUint::zero();
    let mut rho = BigUint::zero();
    for entry in &table.entries {
        let p_point = &alpha_pow[d - entry.u] * &beta_pow[entry.u];
        let rho_point = &alpha_pow[d - entry.v] * &beta_pow[entry.v];
        let delta = &rho_point * &entry.count;
        if &rho + &delta < target {
            rho += delta;
            p += &p_point * &entry.count;
            on_step(&AccumulatorStep {
                p: p.clone(),
                rho: rho.clone(),
                target: target.clone(),
                scale: scale.clone(),
            });
            continue;
        }
        // Exact equality counts as crossing: the region is taken in full.
        let gap = &target - &rho;
        return Ok(match residual {
            Residual::WholePoints => {
                let units =
                    smallest_satisfying(&entry.count, |q| &rho_point * q >= gap);
                ScaledInverse {
                    num: p + p_point * units,
                    den: BigUint::one(),
                    scale,
                }
            }
            Residual::Exact => ScaledInverse {
                num: p * &rho_point + p_point * gap,
                den: rho_point,
                scale,
            },
        });
    }
    // The shifted-point masses sum to `scale > target`, so the loop returns.
    unreachable!("region masses failed to reach the target")
}

pub fn scaled_inverse(params: &NoiseParams, r: usize, residual: Residual) -> Result<ScaledInverse> {
    scaled_inverse_traced(params, r, residual, |_| {})
}

fn powers(base: u64, max: usize) -> Vec<BigUint> {
    let base = BigUint::from(base);
    let mut out = Vec::with_capacity(max + 1);
    out.push(BigUint::one());
    for n in 1..=max {
        let next = &out[n - 1] * &base;
        out.push(next);
    }
    out
}

/// Upper bound of `rho_r^{-1}(1/2)` with `precision` decimal digits.
pub fn threshold(params: &NoiseParams, r: usize, precision: usize) -> Result<Threshold> {
    threshold_with(params, r, precision, Residual::Exact)
}

pub fn threshold_with(
    params: &NoiseParams,
    r: usize,
    precision: usize,
    residual: Residual,
) -> Result<Threshold> {
    check_args(params, r, precision)?;
    if r == 0 {
        return Ok(Threshold::half(precision));
    }
    let inv = scaled_inverse(params, r, residual)?;
    let d = params.d();
    let big_k = BigUint::from(params.k());
    let ten_pow = BigUint::from(10u32).pow(precision as u32);
    let units = if precision <= d {
        // smallest units with num/den <= units * (10K)^c (100K)^(d-c)
        let step = (BigUint::from(10u32) * &big_k).pow(precision as u32)
            * BigUint::from(params.scale()).pow((d - precision) as u32)
            * &inv.den;
        smallest_satisfying(&ten_pow, |units| units * &step >= inv.num)
    } else {
        (&inv.num * &ten_pow).div_ceil(&(&inv.scale * &inv.den))
    };
    Ok(Threshold::new(units, precision))
}

/// Decimal string form of [`threshold`], e.g. `"0.875000"`.
pub fn threshold_bigint(params: &NoiseParams, r: usize, precision: usize) -> Result<String> {
    Ok(threshold(params, r, precision)?.to_string())
}

#[derive(Clone, Debug, Default)]
pub struct TableMeta {
    pub built_unix_secs: u64,
    pub row_times: Vec<Duration>,
}

/// Thresholds for radii `0..=r_max` under one noise setting.
#[derive(Clone, Debug)]
pub struct CertTable {
    params: NoiseParams,
    precision: usize,
    rows: Vec<Threshold>,
    version: String,
    pub meta: TableMeta,
}

impl PartialEq for CertTable {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.precision == other.precision && self.rows == other.rows
    }
}

const CROSSING_NOTE: &str = "# crossing=inclusive";

impl CertTable {
    /// Builds a table from exact values, rounding each up to `precision`
    /// digits. Mostly useful for fixtures.
    pub fn from_values(params: NoiseParams, precision: usize, values: Vec<Rational>) -> Result<Self> {
        let scale = Rational::from_integer(BigInt::from(10u32).pow(precision as u32));
        let rows = values
            .iter()
            .map(|v| {
                let units = (v * &scale).ceil().to_integer();
                let units = units
                    .to_biguint()
                    .ok_or_else(|| Error::Validation("negative threshold".into()))?;
                Ok(Threshold::new(units, precision))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = Self {
            params,
            precision,
            rows,
            version: env!("CARGO_PKG_VERSION").to_string(),
            meta: TableMeta::default(),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn rows(&self) -> &[Threshold] {
        &self.rows
    }

    pub fn r_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.rows.first() else {
            return Err(Error::Validation("table has no rows".into()));
        };
        if first.value() != one_half() {
            return Err(Error::Validation(format!("row 0 must be 0.5, found {first}")));
        }
        if self.rows.len() > self.params.d() + 1 {
            return Err(Error::Validation("more rows than radii 0..=d".into()));
        }
        for (r, w) in self.rows.windows(2).enumerate() {
            if w[1].units < w[0].units {
                return Err(Error::Validation(format!(
                    "thresholds decrease between r={r} and r={}",
                    r + 1
                )));
            }
        }
        if let Some(row) = self.rows.iter().find(|t| t.value() > Rational::one()) {
            return Err(Error::Validation(format!("threshold {row} exceeds 1")));
        }
        Ok(())
    }

    pub fn header(&self) -> String {
        format!(
            "# d={} K={} alpha_pct={} c={} version={}",
            self.params.d(),
            self.params.k(),
            self.params.alpha_pct(),
            self.precision,
            self.version
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        out.push_str(CROSSING_NOTE);
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{r}\t{row}\n"));
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty table file"))?;
        let (params, precision, version) = parse_header(header, path)?;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (r, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected `r<TAB>value`"))?;
            let r: usize = r
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad radius {r:?}")))?;
            if r != rows.len() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected radius {}, found {r}", rows.len()),
                ));
            }
            let row = Threshold::parse(value, precision).ok_or_else(|| {
                Error::parse(
                    path,
                    lineno,
                    format!("expected a decimal with {precision} fractional digits, found {value:?}"),
                )
            })?;
            rows.push(row);
        }
        let table = Self {
            params,
            precision,
            rows,
            version,
            meta: TableMeta::default(),
        };
        table.validate()?;
        Ok(table)
    }
}

fn parse_header(line: &str, path: &Path) -> Result<(NoiseParams, usize, String)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(path, 1, "missing `# d=... K=...` header"))?;
    let (mut d, mut k, mut a, mut c, mut version) = (None, None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(path, 1, format!("bad header field {field:?}")))?;
        let num = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::parse(path, 1, format!("bad value for {key}: {value:?}")))
        };
        match key {
            "d" => d = Some(num()?),
            "K" => k = Some(num()? as u32),
            "alpha_pct" => a = Some(num()? as u32),
            "c" => c = Some(num()?),
            "version" => version = Some(value.to_string()),
            _ => return Err(Error::parse(path, 1, format!("unknown header field {key:?}"))),
        }
    }
    let missing = |name| Error::parse(path, 1, format!("header is missing {name}"));
    let params = NoiseParams::new(
        d.ok_or_else(|| missing("d"))?,
        k.ok_or_else(|| missing("K"))?,
        a.ok_or_else(|| missing("alpha_pct"))?,
    )?;
    let c = c.ok_or_else(|| missing("c"))?;
    if c == 0 {
        return Err(Error::parse(path, 1, "precision c must be positive"));
    }
    Ok((params, c, version.ok_or_else(|| missing("version"))?))
}

/// Computes rows `0..=r_max` on `workers` threads. The result does not
/// depend on the worker count.
pub fn build_cert_table(
    params: &NoiseParams,
    r_max: usize,
    precision: usize,
    workers: usize,
) -> Result<CertTable> {
    build_cert_table_with_progress(params, r_max, precision, workers, |_, _| {})
}

/// As [`build_cert_table`], calling `progress(r, elapsed)` as rows finish.
pub fn build_cert_table_with_progress(
    params: &NoiseParams,
    r_max: usize,
    precision: usize,
    workers: usize,
    progress: impl Fn(usize, Duration) + Sync,
) -> Result<CertTable> {
    check_args(params, r_max, precision)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    let timed: Vec<(Threshold, Duration)> = pool.install(|| {
        (0..=r_max)
            .into_par_iter()
            .map(|r| {
                let start = Instant::now();
                let row = threshold(params, r, precision)?;
                let elapsed = start.elapsed();
                progress(r, elapsed);
                Ok((row, elapsed))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (rows, row_times): (Vec<_>, Vec<_>) = timed.into_iter().unzip();
    let table = CertTable {
        params: *params,
        precision,
        rows,
        version: env!("CARGO_PKG_VERSION").to_string(),
        meta: TableMeta {
            built_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            row_times,
        },
    };
    table.validate()?;
    Ok(table)
}

pub fn save_table(table: &CertTable, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, table.to_text())?;
    Ok(())
}

pub fn load_table(path: impl AsRef<Path>) -> Result<CertTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    CertTable::parse(&text, path)
}

/// Loads a table and checks that it was built for `expected`.
pub fn load_table_for(path: impl AsRef<Path>, expected: &NoiseParams) -> Result<CertTable> {
    let table = load_table(path)?;
    if table.params() != expected {
        return Err(Error::HeaderMismatch(format!(
            "table built for d={} K={} alpha_pct={}, expected d={} K={} alpha_pct={}",
            table.params.d(),
            table.params.k(),
            table.params.alpha_pct(),
            expected.d(),
            expected.k(),
            expected.alpha_pct()
        )));
    }
    Ok(table)
}
