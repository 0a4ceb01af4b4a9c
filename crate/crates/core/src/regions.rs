//! Likelihood-ratio regions for the canonical pair at `l0` distance `r`.
//!
//! The canonical pair is `x_C = (0, ..., 0)` and `x̄_C`, which has its first
//! `r` coordinates set to `1`. Every outcome `z` sits at Hamming distance `u`
//! from `x_C` and `v` from `x̄_C`, so its likelihoods are `alpha^(d-u) beta^u`
//! and `alpha^(d-v) beta^v`. Region `L(u, v; r)` collects all such `z`; its
//! likelihood ratio is `(alpha / beta)^(v - u)`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::pointwise::MassPair;
use crate::scalar::Rational;

/// Which point of the canonical pair a mass refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// The clean point `x_C`.
    Clean,
    /// The perturbed point `x̄_C`.
    Shifted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionEntry {
    pub u: usize,
    pub v: usize,
    pub count: BigUint,
}

impl RegionEntry {
    /// Exact likelihood ratio `(alpha / beta)^(v - u)`.
    pub fn ratio(&self, params: &NoiseParams) -> Rational {
        ratio_power(params, self.v as i64 - self.u as i64)
    }
}

/// All nonempty regions for one radius, sorted by decreasing likelihood
/// ratio with ties broken by ascending `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionTable {
    pub params: NoiseParams,
    pub r: usize,
    pub entries: Vec<RegionEntry>,
}

/// `n!` for `n = 0..=max`.
#[derive(Clone, Debug)]
pub struct Factorials(Vec<BigUint>);

impl Factorials {
    pub fn up_to(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(BigUint::one());
        for n in 1..=max {
            let next = &table[n - 1] * BigUint::from(n);
            table.push(next);
        }
        Factorials(table)
    }

    pub fn get(&self, n: usize) -> &BigUint {
        &self.0[n]
    }

    pub fn max(&self) -> usize {
        self.0.len() - 1
    }
}

fn ratio_power(params: &NoiseParams, exp: i64) -> Rational {
    let base = params.alpha() / params.beta();
    if exp >= 0 {
        num_traits::pow(base, exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

/// Precomputed pieces of the cardinality sum for one `(params, r)`.
struct CardinalityContext {
    d: usize,
    r: usize,
    facts: Factorials,
    /// `C(d - r, i)`
    binom_rest: Vec<BigUint>,
    /// `K^i`
    k_pow: Vec<BigUint>,
    /// `(K - 1)^j`
    km1_pow: Vec<BigUint>,
}

impl CardinalityContext {
    fn new(params: &NoiseParams, r: usize) -> Self {
        let d = params.d();
        let facts = Factorials::up_to(d);
        let rest = d - r;
        let binom_rest = (0..=rest)
            .map(|i| facts.get(rest) / (facts.get(rest - i) * facts.get(i)))
            .collect();
        let k = BigUint::from(params.k());
        let km1 = BigUint::from(params.k() - 1);
        let k_pow = powers(&k, rest);
        let km1_pow = powers(&km1, r);
        Self {
            d,
            r,
            facts,
            binom_rest,
            k_pow,
            km1_pow,
        }
    }

    fn count(&self, u: usize, v: usize) -> BigUint {
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        let (r, d) = (self.r, self.d);
        let lo = v.saturating_sub(r);
        let Some(span) = (u + v).checked_sub(r) else {
            return BigUint::zero();
        };
        let hi = u.min(d - r).min(span / 2);
        let mut total = BigUint::zero();
        for i in lo..=hi {
            // both-flipped coordinates among the r differing ones
            let j = u + v - 2 * i - r;
            if j > r || u < i + j || v < i + j {
                continue;
            }
            let only_x = u - i - j;
            let only_xbar = v - i - j;
            if self.km1_pow[j].is_zero() {
                continue;
            }
            let multinomial = self.facts.get(r)
                / (self.facts.get(only_x) * self.facts.get(only_xbar) * self.facts.get(j));
            total += multinomial * &self.km1_pow[j] * &self.k_pow[i] * &self.binom_rest[i];
        }
        total
    }
}

fn powers(base: &BigUint, max: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(BigUint::one());
    for n in 1..=max {
        let next = &out[n - 1] * base;
        out.push(next);
    }
    out
}

fn check_radius(params: &NoiseParams, r: usize) -> Result<()> {
    if r > params.d() {
        return Err(Error::OutOfRange(format!(
            "radius {r} exceeds dimension {}",
            params.d()
        )));
    }
    Ok(())
}

/// Exact cardinality `|L(u, v; r)|`.
pub fn cardinality(params: &NoiseParams, r: usize, u: usize, v: usize) -> Result<BigUint> {
    check_radius(params, r)?;
    let d = params.d();
    if u > d || v > d {
        return Err(Error::OutOfRange(format!(
            "region index ({u}, {v}) outside [0, {d}]"
        )));
    }
    Ok(CardinalityContext::new(params, r).count(u, v))
}

/// Builds every nonempty region for radius `r`.
pub fn build_region_table(params: &NoiseParams, r: usize) -> Result<RegionTable> {
    check_radius(params, r)?;
    let d = params.d();
    let ctx = CardinalityContext::new(params, r);
    let mut entries = Vec::new();
    for u in 0..=d {
        // |u - v| <= r for any nonempty region
        for v in u.saturating_sub(r)..=(u + r).min(d) {
            let count = ctx.count(u, v);
            if !count.is_zero() {
                entries.push(RegionEntry { u, v, count });
            }
        }
    }
    sort_entries(params, r, &mut entries);
    Ok(RegionTable {
        params: *params,
        r,
        entries,
    })
}

/// Sorts by the exact likelihood ratio, descending, ties by ascending `u`.
fn sort_entries(params: &NoiseParams, r: usize, entries: &mut [RegionEntry]) {
    // ratio depends only on v - u, which lies in [-r, r]
    let keys: Vec<Rational> = (-(r as i64)..=r as i64)
        .map(|delta| ratio_power(params, delta))
        .collect();
    let key = |e: &RegionEntry| &keys[(e.v as i64 - e.u as i64 + r as i64) as usize];
    entries.sort_by(|a, b| match key(b).cmp(key(a)) {
        Ordering::Equal => a.u.cmp(&b.u),
        other => other,
    });
}

/// Exact probability of the region under the randomization of `x_C`
/// ([`Side::Clean`]) or `x̄_C` ([`Side::Shifted`]).
pub fn region_mass(entry: &RegionEntry, params: &NoiseParams, side: Side) -> Rational {
    let flips = match side {
        Side::Clean => entry.u,
        Side::Shifted => entry.v,
    };
    let point = num_traits::pow(params.alpha(), params.d() - flips)
        * num_traits::pow(params.beta(), flips);
    point * Rational::from_integer(BigInt::from(entry.count.clone()))
}

impl RegionTable {
    /// Sum of all cardinalities; equals `(K + 1)^d`.
    pub fn total_count(&self) -> BigUint {
        self.entries.iter().map(|e| &e.count).sum()
    }

    /// The table as solver input, in table order.
    pub fn mass_pairs(&self) -> Vec<MassPair<Rational>> {
        self.entries
            .iter()
            .map(|e| {
                MassPair::new(
                    region_mass(e, &self.params, Side::Clean),
                    region_mass(e, &self.params, Side::Shifted),
                )
            })
            .collect()
    }

    /// Debug dump, one `u,v,count` line per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,count\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.u, e.v, e.count);
        }
        out
    }
}
