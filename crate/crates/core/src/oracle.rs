//! Brute-force references for small instances. Nothing here reuses the
//! counting, greedy or recursion code it is meant to check: every quantity is
//! obtained by enumerating points directly.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::scalar::Rational;
use crate::tree::{Node, Tree};

/// Largest number of points or subsets an oracle will enumerate.
pub const ORACLE_LIMIT: u64 = 1_000_000;

fn space_size(params: &NoiseParams) -> Result<u64> {
    let base = u64::from(params.k()) + 1;
    let mut total = 1u64;
    for _ in 0..params.d() {
        total = total
            .checked_mul(base)
            .filter(|t| *t <= ORACLE_LIMIT)
            .ok_or_else(|| {
                Error::UnsupportedSize(format!(
                    "({base})^{} points exceed the oracle limit of {ORACLE_LIMIT}",
                    params.d()
                ))
            })?;
    }
    Ok(total)
}

fn decode(mut index: u64, base: u64, d: usize) -> Vec<u32> {
    let mut z = vec![0u32; d];
    for slot in z.iter_mut() {
        *slot = (index % base) as u32;
        index /= base;
    }
    z
}

fn canonical_pair(params: &NoiseParams, r: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    if r > params.d() {
        return Err(Error::OutOfRange(format!("radius {r} exceeds d = {}", params.d())));
    }
    let x = vec![0u32; params.d()];
    let mut xbar = x.clone();
    xbar[..r].fill(1);
    Ok((x, xbar))
}

fn differing(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(p, q)| p != q).count()
}

fn point_mass(params: &NoiseParams, center: &[u32], z: &[u32]) -> Rational {
    let (alpha, beta) = (params.alpha(), params.beta());
    center.iter().zip(z).fold(Rational::one(), |acc, (c, v)| {
        if c == v {
            acc * &alpha
        } else {
            acc * &beta
        }
    })
}

/// Number of points at distance `u` from the clean point and `v` from the
/// shifted one, for the canonical pair at radius `r`.
pub fn brute_regions(params: &NoiseParams, r: usize) -> Result<BTreeMap<(usize, usize), u64>> {
    let total = space_size(params)?;
    let (x, xbar) = canonical_pair(params, r)?;
    let base = u64::from(params.k()) + 1;
    let mut counts = BTreeMap::new();
    for index in 0..total {
        let z = decode(index, base, params.d());
        *counts.entry((differing(&x, &z), differing(&xbar, &z))).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Smallest mass under the shifted point of any set whose mass under the
/// clean point is `p`, by sorting every individual point.
pub fn brute_rho(params: &NoiseParams, r: usize, p: &Rational) -> Result<Rational> {
    if *p < Rational::zero() || *p > Rational::one() {
        return Err(Error::OutOfRange(format!("p = {p} outside [0, 1]")));
    }
    let total = space_size(params)?;
    let (x, xbar) = canonical_pair(params, r)?;
    let base = u64::from(params.k()) + 1;
    let mut points: Vec<(Rational, Rational)> = (0..total)
        .map(|index| {
            let z = decode(index, base, params.d());
            (point_mass(params, &x, &z), point_mass(params, &xbar, &z))
        })
        .collect();
    // every mass is positive, so ratios compare by cross-multiplication
    points.sort_by(|a, b| (&b.0 * &a.1).cmp(&(&a.0 * &b.1)));
    let mut taken = Rational::zero();
    let mut cost = Rational::zero();
    for (mx, mxb) in points {
        let room = p - &taken;
        if room.is_zero() {
            break;
        }
        if mx <= room {
            taken += &mx;
            cost += mxb;
        } else {
            cost += mxb * (&room / &mx);
            taken += room;
        }
    }
    Ok(cost)
}

fn hard_output(tree: &Tree, z: &[u8]) -> Rational {
    let nodes = tree.nodes();
    let mut id = 0;
    loop {
        match &nodes[id] {
            Node::Leaf { value } => return value.clone(),
            Node::Split {
                feature,
                left,
                right,
            } => id = if z[*feature] == 1 { *right } else { *left },
        }
    }
}

fn check_tree_input(tree: &Tree, x: &[u8]) -> Result<Vec<usize>> {
    let d = tree.params().d();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if x.iter().any(|b| *b > 1) {
        return Err(Error::InputDomain("tree inputs are binary".into()));
    }
    let used = tree.used_features();
    if used.len() > 20 {
        return Err(Error::UnsupportedSize(format!(
            "{} split features exceed the oracle limit",
            used.len()
        )));
    }
    Ok(used)
}

fn expectation(tree: &Tree, x: &[u8], used: &[usize]) -> Rational {
    let params = tree.params();
    let (alpha, beta) = (params.alpha(), params.beta());
    let mut total = Rational::zero();
    let mut z = x.to_vec();
    for pattern in 0u64..1 << used.len() {
        let mut weight = Rational::one();
        for (bit, &f) in used.iter().enumerate() {
            let flip = (pattern >> bit) & 1 == 1;
            z[f] = if flip { 1 - x[f] } else { x[f] };
            weight *= if flip { &beta } else { &alpha };
        }
        total += weight * hard_output(tree, &z);
    }
    total
}

/// Smoothed prediction of class 1 by summing over every noise pattern of the
/// split features.
pub fn brute_predict_prob(tree: &Tree, x: &[u8]) -> Result<Rational> {
    let used = check_tree_input(tree, x)?;
    Ok(expectation(tree, x, &used))
}

/// Minimum smoothed prediction over every input within distance `r` of `x`,
/// for each `r` in `0..=r_max`, by trying every flip set of split features.
pub fn brute_tree_adversary(tree: &Tree, x: &[u8], r_max: usize) -> Result<Vec<Rational>> {
    let used = check_tree_input(tree, x)?;
    let subsets: u64 = (0..=r_max.min(used.len()))
        .map(|s| binomial(used.len() as u64, s as u64))
        .sum();
    if subsets > ORACLE_LIMIT {
        return Err(Error::UnsupportedSize(format!(
            "{subsets} flip sets over {} features exceed the oracle limit",
            used.len()
        )));
    }
    let mut best: Vec<Option<Rational>> = vec![None; r_max + 1];
    let mut flipped = x.to_vec();
    for mask in 0u64..1 << used.len() {
        let size = mask.count_ones() as usize;
        if size > r_max {
            continue;
        }
        for (bit, &f) in used.iter().enumerate() {
            flipped[f] = if (mask >> bit) & 1 == 1 { 1 - x[f] } else { x[f] };
        }
        let value = expectation(tree, &flipped, &used);
        if best[size].as_ref().is_none_or(|b| value < *b) {
            best[size] = Some(value);
        }
    }
    let mut out = Vec::with_capacity(r_max + 1);
    let mut running: Option<Rational> = None;
    for slot in best {
        running = match (running, slot) {
            (Some(a), Some(b)) => Some(if b < a { b } else { a }),
            (a, b) => a.or(b),
        };
        out.push(running.clone().expect("the empty flip set is always present"));
    }
    Ok(out)
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_cover_the_space() {
        let params = NoiseParams::new(3, 2, 60).unwrap();
        let counts = brute_regions(&params, 2).unwrap();
        assert_eq!(counts.values().sum::<u64>(), 27);
        assert_eq!(counts[&(0, 2)], 1);
        assert_eq!(counts[&(2, 0)], 1);
    }

    #[test]
    fn limits() {
        let params = NoiseParams::new(30, 1, 60).unwrap();
        assert!(matches!(brute_regions(&params, 1), Err(Error::UnsupportedSize(_))));
        let params = NoiseParams::new(2, 1, 60).unwrap();
        assert!(matches!(brute_regions(&params, 3), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn rho_anchor() {
        let params = NoiseParams::new(1, 1, 80).unwrap();
        let p = Rational::new(7.into(), 8.into());
        assert_eq!(brute_rho(&params, 1, &p).unwrap(), Rational::new(1.into(), 2.into()));
        assert_eq!(brute_rho(&params, 0, &p).unwrap(), p);
    }

    #[test]
    fn stump_by_enumeration() {
        let params = NoiseParams::new(2, 1, 80).unwrap();
        let nodes = vec![
            Node::Split {
                feature: 1,
                left: 1,
                right: 2,
            },
            Node::Leaf {
                value: Rational::zero(),
            },
            Node::Leaf {
                value: Rational::one(),
            },
        ];
        let tree = Tree::new(nodes, 1, params).unwrap();
        let q = |n: i64| Rational::new(n.into(), 5.into());
        assert_eq!(brute_predict_prob(&tree, &[0, 1]).unwrap(), q(4));
        assert_eq!(brute_tree_adversary(&tree, &[0, 1], 2).unwrap(), vec![q(4), q(1), q(1)]);
    }
}
