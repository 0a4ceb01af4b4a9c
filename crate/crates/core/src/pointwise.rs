//! Tight point-wise certificate over a finite partition into
//! likelihood-ratio regions.
//!
//! Given masses `P(φ(x) ∈ L_i)` and `P(φ(x̄) ∈ L_i)` for regions sorted by
//! decreasing ratio, the worst classifier with `P(f(φ(x)) = y) = p` fills
//! regions greedily in that order; `rho(p)` is the x̄-mass it collects.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{one_half, Rational, Scalar};
use crate::threshold::CertTable;

/// Likelihood ratio of a region; `Infinite` when only `x` can reach it.
#[derive(Clone, Debug, PartialEq)]
pub enum LikelihoodRatio<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> LikelihoodRatio<T> {
    fn partial_cmp_tol(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Self::Infinite, Self::Infinite) => Some(Ordering::Equal),
            (Self::Infinite, _) => Some(Ordering::Greater),
            (_, Self::Infinite) => Some(Ordering::Less),
            (Self::Finite(a), Self::Finite(b)) => {
                let slack = T::tolerance() * (a.clone() + b.clone() + T::one());
                if a.clone() > b.clone() + slack.clone() {
                    Some(Ordering::Greater)
                } else if b.clone() > a.clone() + slack {
                    Some(Ordering::Less)
                } else {
                    Some(Ordering::Equal)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassPair<T> {
    pub mass_x: T,
    pub mass_xbar: T,
    /// `mass_x / mass_xbar`; `Finite(0)` for a region neither point reaches.
    pub ratio: LikelihoodRatio<T>,
}

impl<T: Scalar> MassPair<T> {
    pub fn new(mass_x: T, mass_xbar: T) -> Self {
        let ratio = if mass_xbar.is_zero() {
            if mass_x.is_zero() {
                LikelihoodRatio::Finite(T::zero())
            } else {
                LikelihoodRatio::Infinite
            }
        } else {
            LikelihoodRatio::Finite(mass_x.clone() / mass_xbar.clone())
        };
        Self {
            mass_x,
            mass_xbar,
            ratio,
        }
    }

    fn is_empty(&self) -> bool {
        self.mass_x.is_zero() && self.mass_xbar.is_zero()
    }
}

/// Optimal classifier for [`rho`]: region `i` predicts `y` with probability
/// `assignment[i]`, which is 1 before `boundary`, 0 after it, and fractional
/// at it.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub assignment: Vec<T>,
    pub boundary: usize,
}

fn validate<T: Scalar>(regions: &[MassPair<T>]) -> Result<()> {
    if regions.is_empty() {
        return Err(Error::MassNotNormalized("no regions"));
    }
    let one = T::one();
    let tol = T::tolerance() * T::ratio(regions.len() as u64 + 1, 1);
    let (sx, sxb) = regions.iter().fold((T::zero(), T::zero()), |(a, b), m| {
        (a + m.mass_x.clone(), b + m.mass_xbar.clone())
    });
    let off = |s: T| s > one.clone() + tol.clone() || s < one.clone() - tol.clone();
    if off(sx) {
        return Err(Error::MassNotNormalized("clean-point masses"));
    }
    if off(sxb) {
        return Err(Error::MassNotNormalized("shifted-point masses"));
    }
    if regions
        .iter()
        .any(|m| m.mass_x < T::zero() || m.mass_xbar < T::zero())
    {
        return Err(Error::MassNotNormalized("negative mass"));
    }
    let mut prev: Option<&LikelihoodRatio<T>> = None;
    for (i, m) in regions.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        if let Some(p) = prev {
            if m.ratio.partial_cmp_tol(p) == Some(Ordering::Greater) {
                return Err(Error::Unsorted(i));
            }
        }
        prev = Some(&m.ratio);
    }
    Ok(())
}

fn check_unit<T: Scalar>(value: &T, what: &str) -> Result<()> {
    if *value < T::zero() || *value > T::one() {
        return Err(Error::OutOfRange(format!("{what} must lie in [0, 1], got {value:?}")));
    }
    Ok(())
}

/// Minimum of `P(f(φ(x̄)) = y)` over all classifiers with
/// `P(f(φ(x)) = y) = p`, together with a classifier attaining it.
pub fn rho<T: Scalar>(regions: &[MassPair<T>], p: &T) -> Result<(T, Witness<T>)> {
    validate(regions)?;
    check_unit(p, "p")?;
    let mut cum_x = T::zero();
    let mut cum_xbar = T::zero();
    // Floating-point sums may never quite reach p; fall back to the last
    // region carrying clean-point mass.
    let last_positive = regions
        .iter()
        .rposition(|m| !m.mass_x.is_zero())
        .unwrap_or(regions.len() - 1);
    for (i, m) in regions.iter().enumerate() {
        let reached = cum_x.clone() + m.mass_x.clone() >= *p;
        if reached || i == last_positive {
            let rest = p.clone() - cum_x;
            let mut fraction = if m.mass_x.is_zero() || rest <= T::zero() {
                T::zero()
            } else {
                rest / m.mass_x.clone()
            };
            if fraction > T::one() {
                fraction = T::one();
            }
            let value = cum_xbar + fraction.clone() * m.mass_xbar.clone();
            let mut assignment = vec![T::one(); i];
            assignment.push(fraction);
            assignment.resize(regions.len(), T::zero());
            return Ok((
                value,
                Witness {
                    assignment,
                    boundary: i,
                },
            ));
        }
        cum_x = cum_x + m.mass_x.clone();
        cum_xbar = cum_xbar + m.mass_xbar.clone();
    }
    unreachable!("last_positive is always visited")
}

/// The `p` with `rho(p) = target`. Requires every nonempty region to have a
/// finite, positive ratio, so that `rho` is a bijection on `[0, 1]`.
pub fn rho_inverse<T: Scalar>(regions: &[MassPair<T>], target: &T) -> Result<T> {
    validate(regions)?;
    check_unit(target, "target")?;
    for (i, m) in regions.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        match &m.ratio {
            LikelihoodRatio::Infinite => {
                return Err(Error::NotInvertible(format!("region {i} has an infinite ratio")))
            }
            LikelihoodRatio::Finite(r) if r.is_zero() => {
                return Err(Error::NotInvertible(format!("region {i} has a zero ratio")))
            }
            _ => {}
        }
    }
    let mut cum_x = T::zero();
    let mut cum_xbar = T::zero();
    let last = regions.iter().rposition(|m| !m.is_empty()).unwrap_or(0);
    for (i, m) in regions.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        if cum_xbar.clone() + m.mass_xbar.clone() >= *target || i == last {
            let rest = target.clone() - cum_xbar;
            let mut p = cum_x + rest * m.mass_x.clone() / m.mass_xbar.clone();
            if p > T::one() {
                p = T::one();
            }
            return Ok(p);
        }
        cum_x = cum_x + m.mass_x.clone();
        cum_xbar = cum_xbar + m.mass_xbar.clone();
    }
    unreachable!("the last nonempty region is always visited")
}

/// Outcome of certifying one prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    Abstain,
    Radius(usize),
}

impl Certificate {
    /// Radius, counting abstention as 0.
    pub fn radius_or_zero(self) -> usize {
        match self {
            Certificate::Abstain => 0,
            Certificate::Radius(r) => r,
        }
    }

    pub fn certifies(self, r: usize) -> bool {
        matches!(self, Certificate::Radius(got) if got >= r)
    }
}

/// Largest `r` in the table with `p > threshold(r)`; abstains when `p <= 1/2`.
pub fn certified_radius(p: &Rational, table: &CertTable) -> Certificate {
    if *p <= one_half() {
        return Certificate::Abstain;
    }
    let mut best = 0;
    for (r, threshold) in table.rows().iter().enumerate() {
        if *p > threshold.value() {
            best = r;
        } else if r > 0 {
            break;
        }
    }
    Certificate::Radius(best)
}

#[cfg(test)]
mod tests {
    use num_traits::One;

    use super::*;

    fn q(n: u64, d: u64) -> Rational {
        Rational::ratio(n, d)
    }

    fn two_regions() -> Vec<MassPair<Rational>> {
        vec![
            MassPair::new(q(4, 5), q(1, 5)),
            MassPair::new(q(1, 5), q(4, 5)),
        ]
    }

    #[test]
    fn closed_form_examples() {
        let regions = two_regions();
        assert_eq!(rho(&regions, &q(4, 5)).unwrap().0, q(1, 5));
        assert_eq!(rho(&regions, &q(1, 1)).unwrap().0, q(1, 1));
        assert_eq!(rho(&regions, &q(0, 1)).unwrap().0, q(0, 1));
        let (value, witness) = rho(&regions, &q(7, 8)).unwrap();
        assert_eq!(value, q(1, 2));
        assert_eq!(witness.boundary, 1);
        assert_eq!(witness.assignment, vec![q(1, 1), q(3, 8)]);
    }

    #[test]
    fn brute_force_two_region_grid() {
        // g = (g0, g1) with 4/5 g0 + 1/5 g1 = 4/5 sweeps g1 = 4 - 4 g0.
        let regions = two_regions();
        let mut best: Option<Rational> = None;
        for step in 0..=100u64 {
            let g0 = q(step, 100);
            let g1 = (q(4, 5) - q(4, 5) * &g0) * q(5, 1);
            if g1 < q(0, 1) || g1 > q(1, 1) {
                continue;
            }
            let obj = q(1, 5) * &g0 + q(4, 5) * g1;
            best = Some(match best {
                Some(b) if b <= obj => b,
                _ => obj,
            });
        }
        assert_eq!(best.unwrap(), rho(&regions, &q(4, 5)).unwrap().0);
    }

    #[test]
    fn inverse_examples() {
        let flat = vec![MassPair::new(q(1, 2), q(1, 2)), MassPair::new(q(1, 2), q(1, 2))];
        assert_eq!(rho_inverse(&flat, &q(1, 2)).unwrap(), q(1, 2));
        let regions = two_regions();
        assert_eq!(rho_inverse(&regions, &q(1, 2)).unwrap(), q(7, 8));
        for t in [q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)] {
            let p = rho_inverse(&regions, &t).unwrap();
            assert_eq!(rho(&regions, &p).unwrap().0, t);
        }
    }

    #[test]
    fn infinite_ratio_goes_first_and_blocks_inverse() {
        let regions = vec![
            MassPair::new(q(1, 4), q(0, 1)),
            MassPair::new(q(3, 4), q(3, 4)),
            MassPair::new(q(0, 1), q(1, 4)),
        ];
        assert_eq!(rho(&regions, &q(1, 4)).unwrap().0, q(0, 1));
        assert_eq!(rho(&regions, &q(1, 1)).unwrap().0, q(3, 4));
        let (_, w) = rho(&regions, &q(1, 1)).unwrap();
        assert_eq!(w.assignment[2], q(0, 1));
        assert!(matches!(rho_inverse(&regions, &q(1, 2)), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn input_validation() {
        let regions = two_regions();
        let mut reversed = regions.clone();
        reversed.reverse();
        assert!(matches!(rho(&reversed, &q(1, 2)), Err(Error::Unsorted(1))));
        let short = vec![MassPair::new(q(1, 2), q(1, 1))];
        assert!(matches!(rho(&short, &q(1, 2)), Err(Error::MassNotNormalized(_))));
        assert!(matches!(rho(&regions, &q(3, 2)), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn float_path_agrees() {
        let regions = vec![MassPair::new(0.8f64, 0.2), MassPair::new(0.2, 0.8)];
        let (v, _) = rho(&regions, &0.875).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!((rho_inverse(&regions, &0.5).unwrap() - 0.875).abs() < 1e-12);
        assert!((rho(&regions, &1.0).unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certification() {
        use crate::noise::NoiseParams;
        let params = NoiseParams::new(1, 1, 80).unwrap();
        let table = CertTable::from_values(params, 6, vec![one_half(), q(7, 8)]).unwrap();
        assert_eq!(certified_radius(&q(9, 10), &table), Certificate::Radius(1));
        assert_eq!(certified_radius(&q(1, 2), &table), Certificate::Abstain);
        assert_eq!(certified_radius(&q(3, 5), &table), Certificate::Radius(0));
        assert_eq!(certified_radius(&q(7, 8), &table), Certificate::Radius(0));
        assert!(Certificate::Radius(2).certifies(1));
        assert!(!Certificate::Abstain.certifies(0));
        assert_eq!(Rational::one(), q(1, 1));
    }
}
