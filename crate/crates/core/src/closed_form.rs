//! Closed-form certificates: additive uniform noise, and the `l0` radius
//! implied by an `l2` Gaussian certificate on binary inputs.
//!
//! Floating point throughout; none of this feeds the exact discrete pipeline.

use num_traits::Float;
use libm::erfc;

use crate::error::{Error, Result};
use crate::noise::NoiseParams;

/// Additive noise drawn uniformly from `[-gamma, gamma]` per coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformParams<F> {
    gamma: F,
    d: usize,
}

impl<F: Float> UniformParams<F> {
    pub fn new(gamma: F, d: usize) -> Result<Self> {
        if !(gamma > F::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParams("gamma must be positive and finite".into()));
        }
        if d == 0 {
            return Err(Error::InvalidParams("dimension d must be positive".into()));
        }
        Ok(Self { gamma, d })
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    LInf,
}

fn lit<F: Float>(v: f64) -> F {
    F::from(v).expect("literal fits in the float type")
}

/// Certified radius under uniform noise: `2 p gamma - gamma` for `l1` and
/// `2 gamma - 2 gamma (1.5 - p)^(1/d)` for `l∞`. `None` means abstain
/// (`p <= 1/2`).
pub fn uniform_radius<F: Float>(params: &UniformParams<F>, p: F, norm: Norm) -> Result<Option<F>> {
    let half = lit::<F>(0.5);
    if !(p <= F::one()) {
        return Err(Error::OutOfRange("p must not exceed 1".into()));
    }
    if p <= half {
        return Ok(None);
    }
    let g = params.gamma;
    let two = lit::<F>(2.0);
    let radius = match norm {
        Norm::L1 => two * p * g - g,
        Norm::LInf => {
            let exponent = F::one() / F::from(params.d).expect("dimension fits");
            two * g - two * g * (lit::<F>(1.5) - p).powf(exponent)
        }
    };
    Ok(Some(radius.max(F::zero())))
}

/// Point-wise certificate between `x` and `x + offset` under uniform noise,
/// computed from the overlap volume of the two support cubes.
pub fn uniform_pointwise_numeric<F: Float>(params: &UniformParams<F>, p: F, offset: &[F]) -> Result<F> {
    if offset.len() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            got: offset.len(),
        });
    }
    let width = lit::<F>(2.0) * params.gamma;
    let overlap = offset.iter().fold(F::one(), |acc, &delta| {
        acc * ((width - delta.abs()).max(F::zero()) / width)
    });
    // mass of φ(x) outside the shifted cube is 1 - overlap
    Ok((p - (F::one() - overlap)).max(F::zero()))
}

/// `Φ(x)` for the standard normal.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Φ^{-1}(p)`: Acklam's rational approximation (relative error about
/// `1.15e-9`) refined by one Halley step on `Φ`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(format!("quantile level must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    #[allow(clippy::excessive_precision)]
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    // Halley refinement; compute the residual on the smaller tail for accuracy.
    let e = if x < 0.0 {
        std_normal_cdf(x) - p
    } else {
        (1.0 - p) - 0.5 * erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e / std_normal_pdf(x);
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// Gaussian smoothing whose thresholded version matches a discrete scheme:
/// `alpha = Φ(0.5 / sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBaseline {
    sigma: f64,
    d: usize,
}

impl GaussianBaseline {
    /// Gaussian smoothing of scale `sigma` over `d` coordinates.
    pub fn new(sigma: f64, d: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParams("sigma must be positive and finite".into()));
        }
        Ok(Self { sigma, d })
    }

    /// The `sigma` whose thresholded noise keeps a coordinate with the same
    /// probability as `params`. Requires `alpha > 1/2`.
    pub fn matching(params: &NoiseParams) -> Result<Self> {
        if params.k() != 1 {
            return Err(Error::InvalidParams("Gaussian matching needs binary inputs (K = 1)".into()));
        }
        let alpha = f64::from(params.alpha_pct()) / 100.0;
        if alpha <= 0.5 {
            return Err(Error::InvalidParams("Gaussian matching needs alpha > 1/2".into()));
        }
        Self::new(0.5 / std_normal_quantile(alpha)?, params.d())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        std_normal_cdf(0.5 / self.sigma)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Certified `l0` radius, at most `d` since no two inputs differ in
    /// more coordinates than that.
    pub fn l0_radius(&self, p: f64) -> Result<usize> {
        Ok(gaussian_l0_radius(self.sigma, p)?.min(self.d))
    }
}

/// Largest integer `r` with `sqrt(r) < sigma Φ^{-1}(p)`. The `l2` radius is
/// nudged down by the quantile's accuracy before squaring, so a value that
/// sits on an integer boundary is never over-claimed.
pub fn gaussian_l0_radius(sigma: f64, p: f64) -> Result<usize> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParams("sigma must be positive".into()));
    }
    let l2 = sigma * std_normal_quantile(p)?;
    if l2 <= 0.0 {
        return Ok(0);
    }
    let l2 = l2 - 1e-9 * l2.max(1.0);
    let r = (l2 * l2).ceil() - 1.0;
    Ok(r.max(0.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_formulas() {
        let u = UniformParams::new(1.0f64, 2).unwrap();
        assert_eq!(uniform_radius(&u, 0.75, Norm::L1).unwrap(), Some(0.5));
        let r = uniform_radius(&u, 1.0, Norm::LInf).unwrap().unwrap();
        assert!((r - 0.585786437626905).abs() < 1e-12);
        assert_eq!(uniform_radius(&u, 0.5, Norm::L1).unwrap(), None);
        let tiny = uniform_radius(&u, 0.5 + 1e-12, Norm::L1).unwrap().unwrap();
        assert!(tiny < 1e-11);
        assert!(uniform_radius(&u, 1.1, Norm::L1).is_err());
        assert!(UniformParams::new(0.0f64, 2).is_err());
        let single = UniformParams::new(1.0f32, 3).unwrap();
        assert_eq!(uniform_radius(&single, 0.75f32, Norm::L1).unwrap(), Some(0.5f32));
    }

    #[test]
    fn uniform_pointwise_edges() {
        let u = UniformParams::new(1.0f64, 3).unwrap();
        assert_eq!(uniform_pointwise_numeric(&u, 0.9, &[0.0; 3]).unwrap(), 0.9);
        assert_eq!(uniform_pointwise_numeric(&u, 0.9, &[0.0, 2.5, 0.0]).unwrap(), 0.0);
        assert_eq!(uniform_pointwise_numeric(&u, 1.0, &[2.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(uniform_pointwise_numeric(&u, 0.9, &[0.0; 2]).is_err());
    }

    #[test]
    fn quantile_symmetry_and_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        for p in [2f64.powi(-30), 2f64.powi(-12), 0.01, 0.1, 0.3, 0.45] {
            let lo = std_normal_quantile(p).unwrap();
            let hi = std_normal_quantile(1.0 - p).unwrap();
            assert!((lo + hi).abs() < 1e-12 * hi.abs().max(1.0), "p={p}: {lo} vs {hi}");
        }
        assert!((std_normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-12);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn gaussian_radius() {
        assert_eq!(gaussian_l0_radius(1.0, 0.5).unwrap(), 0);
        let sigma = 1.5 / std_normal_quantile(0.975).unwrap();
        assert_eq!(gaussian_l0_radius(sigma, 0.975).unwrap(), 2);
        // l2 radius exactly 2 sits on the boundary: sqrt(4) < 2 is false
        let sigma = 2.0 / std_normal_quantile(0.9).unwrap();
        assert_eq!(gaussian_l0_radius(sigma, 0.9).unwrap(), 3);
        assert!(gaussian_l0_radius(1.0, 1.0).is_err());
    }

    #[test]
    fn matched_baseline() {
        let params = NoiseParams::new(20, 1, 60).unwrap();
        let g = GaussianBaseline::matching(&params).unwrap();
        assert!((g.alpha() - 0.6).abs() < 1e-12);
        assert!(gaussian_l0_radius(g.sigma(), 0.9999).unwrap() > 20);
        assert_eq!(g.l0_radius(0.9999).unwrap(), 20);
        assert!(GaussianBaseline::matching(&NoiseParams::new(20, 1, 40).unwrap()).is_err());
        assert!(GaussianBaseline::matching(&NoiseParams::new(20, 2, 80).unwrap()).is_err());
    }
}
