mod common;

use l0cert::{NoiseParams, Rational};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_input, random_tree};

/// Upper 0.1% point of the chi-square distribution with 8 degrees of freedom.
const CHI2_8_999: f64 = 26.12448155837614;

#[test]
fn nine_outcomes_fit_the_noise_model() {
    for (alpha_pct, seed) in [(60u32, 1u64), (34, 2), (90, 3)] {
        let params = NoiseParams::new(2, 2, alpha_pct).unwrap();
        let x = [0u32, 1];
        let n = 100_000;
        let mut counts = [0u64; 9];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n {
            let z = params.sample_with(&x, &mut rng).unwrap();
            counts[(z[0] * 3 + z[1]) as usize] += 1;
        }
        let (alpha, beta) = (f64::from(alpha_pct) / 100.0, f64::from(100 - alpha_pct) / 200.0);
        let stat: f64 = (0..9u32)
            .map(|cell| {
                let z = [cell / 3, cell % 3];
                let expected = z
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| if a == b { alpha } else { beta })
                    .product::<f64>()
                    * n as f64;
                let diff = counts[cell as usize] as f64 - expected;
                diff * diff / expected
            })
            .sum();
        assert!(stat < CHI2_8_999, "alpha'={alpha_pct}: chi-square {stat}");
    }
}

#[test]
fn keep_rate_within_four_sigma() {
    let params = NoiseParams::new(1000, 3, 70).unwrap();
    let x: Vec<u32> = (0..1000).map(|i| i % 4).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rounds = 100;
    let mut kept = 0u64;
    for _ in 0..rounds {
        let z = params.sample_with(&x, &mut rng).unwrap();
        kept += z.iter().zip(&x).filter(|(a, b)| a == b).count() as u64;
    }
    let n = (rounds * 1000) as f64;
    let sigma = (n * 0.7 * 0.3).sqrt();
    assert!((kept as f64 - 0.7 * n).abs() < 4.0 * sigma, "kept {kept} of {n}");
}

#[test]
fn sampled_tree_frequency_matches_exact_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let d = rng.gen_range(3..=10);
        let alpha_pct = rng.gen_range(55..=95);
        let tree = random_tree(&mut rng, d, 4, alpha_pct);
        let x = random_input(&mut rng, d);
        let p = tree.predict_prob::<Rational>(&x).unwrap().to_f64().unwrap();

        let levels: Vec<u32> = x.iter().map(|&b| u32::from(b)).collect();
        let n = 10_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let z: Vec<u8> = tree
                .params()
                .sample_with(&levels, &mut rng)
                .unwrap()
                .into_iter()
                .map(|v| v as u8)
                .collect();
            mean += tree.output(&z).unwrap().to_f64().unwrap();
        }
        mean /= f64::from(n);
        // leaves may be soft, whose variance is at most that of a coin with mean p
        let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
        assert!((mean - p).abs() <= 4.0 * sigma + 1e-12, "sampled {mean} vs exact {p}");
    }
}
