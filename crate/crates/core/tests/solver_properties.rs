mod common;

use l0cert::oracle::brute_rho;
use l0cert::regions::Factorials;
use l0cert::scalar::one_half;
use l0cert::threshold::{scaled_inverse, scaled_inverse_traced, threshold, Residual};
use l0cert::{build_region_table, cardinality, rho, rho_inverse, MassPair, NoiseParams, Rational};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::q;

fn params(max_d: usize, max_k: u32) -> impl Strategy<Value = NoiseParams> {
    (1..=max_d, 1..=max_k, 1u32..=99).prop_map(|(d, k, a)| NoiseParams::new(d, k, a).unwrap())
}

fn with_radius(max_d: usize, max_k: u32) -> impl Strategy<Value = (NoiseParams, usize)> {
    params(max_d, max_k).prop_flat_map(|p| (Just(p), 0..=p.d()))
}

fn check_witness(regions: &[MassPair<Rational>], p: &Rational) -> Rational {
    let (value, witness) = rho(regions, p).unwrap();
    let (mut on_x, mut on_xbar) = (Rational::zero(), Rational::zero());
    for (g, m) in witness.assignment.iter().zip(regions) {
        assert!(*g >= Rational::zero() && *g <= Rational::one());
        on_x += g * &m.mass_x;
        on_xbar += g * &m.mass_xbar;
    }
    assert_eq!(on_x, *p);
    assert_eq!(on_xbar, value);
    value
}

/// Shuffles runs of equal likelihood ratio.
fn shuffle_ties(regions: &[MassPair<Rational>], seed: u64) -> Vec<MassPair<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(regions.len());
    let mut start = 0;
    while start < regions.len() {
        let ratio = |m: &MassPair<Rational>| &m.mass_x / &m.mass_xbar;
        let key = ratio(&regions[start]);
        let mut end = start + 1;
        while end < regions.len() && ratio(&regions[end]) == key {
            end += 1;
        }
        let mut run = regions[start..end].to_vec();
        run.shuffle(&mut rng);
        out.extend(run);
        start = end;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn keep_and_switch_probabilities_sum_to_one(p in params(50, 20)) {
        prop_assert_eq!(p.alpha() + p.beta() * Rational::from_integer(p.k().into()), Rational::one());
    }

    #[test]
    fn rows_sum_to_sphere_sizes((p, r) in with_radius(12, 4)) {
        let facts = Factorials::up_to(p.d());
        let table = build_region_table(&p, r).unwrap();
        for u in 0..=p.d() {
            let row: BigUint = table.entries.iter().filter(|e| e.u == u).map(|e| e.count.clone()).sum();
            let sphere = facts.get(p.d()) / (facts.get(u) * facts.get(p.d() - u))
                * BigUint::from(p.k()).pow(u as u32);
            prop_assert_eq!(row, sphere);
        }
    }

    #[test]
    fn cardinality_is_symmetric((p, r) in with_radius(10, 3), u in 0usize..=10, v in 0usize..=10) {
        prop_assume!(u <= p.d() && v <= p.d());
        prop_assert_eq!(cardinality(&p, r, u, v).unwrap(), cardinality(&p, r, v, u).unwrap());
    }

    #[test]
    fn solver_structure((p, r) in with_radius(7, 3), steps in prop::collection::vec(0u32..=64, 1..6)) {
        let regions = build_region_table(&p, r).unwrap().mass_pairs();
        prop_assert_eq!(check_witness(&regions, &Rational::zero()), Rational::zero());
        prop_assert_eq!(check_witness(&regions, &Rational::one()), Rational::one());
        let mut ps: Vec<Rational> = steps.iter().map(|&s| q(i64::from(s), 64)).collect();
        ps.sort();
        let values: Vec<Rational> = ps.iter().map(|p| check_witness(&regions, p)).collect();
        for w in values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        // all ratios are finite and positive here, so the map is strictly increasing
        for (pw, vw) in ps.windows(2).zip(values.windows(2)) {
            if pw[0] < pw[1] {
                prop_assert!(vw[0] < vw[1]);
            }
        }
        // swapping the pair mirrors the table, so the ratios straddle 1
        for (p_val, v) in ps.iter().zip(&values) {
            prop_assert!(v <= p_val);
        }
    }

    #[test]
    fn tie_order_does_not_matter((p, r) in with_radius(7, 3), seed in any::<u64>(), step in 0u32..=32) {
        let regions = build_region_table(&p, r).unwrap().mass_pairs();
        let shuffled = shuffle_ties(&regions, seed);
        let point = q(i64::from(step), 32);
        prop_assert_eq!(rho(&regions, &point).unwrap().0, rho(&shuffled, &point).unwrap().0);
        let inverse = rho_inverse(&shuffled, &one_half()).unwrap();
        prop_assert_eq!(&inverse, &rho_inverse(&regions, &one_half()).unwrap());
        prop_assert_eq!(inverse, scaled_inverse(&p, r, Residual::Exact).unwrap().value());
    }

    #[test]
    fn thresholds_grow_with_radius(p in params(7, 3)) {
        let mut previous = one_half();
        for r in 0..=p.d() {
            let regions = build_region_table(&p, r).unwrap().mass_pairs();
            let inverse = rho_inverse(&regions, &one_half()).unwrap();
            prop_assert!(inverse >= previous, "r={}: {} < {}", r, inverse, previous);
            previous = inverse;
        }
    }

    #[test]
    fn bigint_threshold_upper_bounds((p, r) in with_radius(8, 3), c in 1usize..=24) {
        let regions = build_region_table(&p, r).unwrap().mass_pairs();
        let exact = rho_inverse(&regions, &one_half()).unwrap();
        let got = threshold(&p, r, c).unwrap().value();
        let bound = Rational::new(BigInt::one(), BigInt::from(10u32).pow(c as u32))
            + Pow::pow(p.alpha(), p.d() as u32);
        prop_assert!(got >= exact);
        prop_assert!(&got - &exact <= bound);
        let finer = threshold(&p, r, c + 1).unwrap().value();
        prop_assert!(finer <= got);
    }

    #[test]
    fn accumulators_stay_below_target((p, r) in with_radius(8, 3), whole in any::<bool>()) {
        let residual = if whole { Residual::WholePoints } else { Residual::Exact };
        let mut steps = 0usize;
        scaled_inverse_traced(&p, r, residual, |s| {
            assert!(s.rho < s.target);
            assert!(s.p <= s.scale);
            steps += 1;
        })
        .unwrap();
        prop_assert!(r > 0 || steps == 0);
    }
}

#[test]
fn solver_matches_enumeration_on_uneven_noise() {
    for (d, k, a) in [(3, 3, 7), (4, 1, 99), (4, 2, 35), (6, 1, 1)] {
        let p = NoiseParams::new(d, k, a).unwrap();
        for r in 0..=d {
            let regions = build_region_table(&p, r).unwrap().mass_pairs();
            for s in 0..=10 {
                let point = q(s, 10);
                assert_eq!(check_witness(&regions, &point), brute_rho(&p, r, &point).unwrap());
            }
        }
    }
}

/// Generic partitions: no grid assignment beats the solver.
#[test]
fn grid_search_never_beats_solver() {
    let cases: Vec<Vec<(i64, i64)>> = vec![
        vec![(6, 1), (3, 3), (2, 4), (1, 4)],
        vec![(5, 1), (4, 2), (3, 9)],
        vec![(1, 0), (7, 4), (4, 8)],
        vec![(12, 2), (0, 10)],
        vec![(3, 1), (3, 1), (6, 10)],
    ];
    for masses in cases {
        let (sx, sxb): (i64, i64) = masses.iter().fold((0, 0), |(a, b), m| (a + m.0, b + m.1));
        let regions: Vec<MassPair<Rational>> =
            masses.iter().map(|&(a, b)| MassPair::new(q(a, sx), q(b, sxb))).collect();
        let n = regions.len();
        let steps: i64 = if n <= 3 { 120 } else { 12 };
        for target in [q(1, 12), q(1, 3), q(1, 2), q(11, 12)] {
            let best = check_witness(&regions, &target);
            // enumerate all but the last coordinate, solve for the last
            let last = &regions[n - 1];
            let mut grid = vec![0i64; n - 1];
            loop {
                let (mut px, mut pxb) = (Rational::zero(), Rational::zero());
                for (g, m) in grid.iter().zip(&regions) {
                    px += q(*g, steps) * &m.mass_x;
                    pxb += q(*g, steps) * &m.mass_xbar;
                }
                let rest = &target - &px;
                let feasible = if last.mass_x.is_zero() {
                    rest.is_zero().then(Rational::zero)
                } else {
                    let g = &rest / &last.mass_x;
                    (g >= Rational::zero() && g <= Rational::one()).then_some(g)
                };
                if let Some(g) = feasible {
                    assert!(pxb + g * &last.mass_xbar >= best);
                }
                let mut i = 0;
                while i < grid.len() && grid[i] == steps {
                    grid[i] = 0;
                    i += 1;
                }
                if i == grid.len() {
                    break;
                }
                grid[i] += 1;
            }
        }
    }
}
