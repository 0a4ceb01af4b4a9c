//! Tight `l0` robustness certificates for classifiers smoothed by a discrete
//! randomization.
//!
//! The pipeline: [`noise`] defines the randomization, [`regions`] counts the
//! likelihood-ratio regions of the canonical pair exactly, [`pointwise`]
//! solves the point-wise certificate over any such partition, and
//! [`threshold`] precomputes certification thresholds with big integers.
//! [`tree`] adds smoothed decision trees with exact adversaries, and
//! [`eval`] turns predictions into certified metrics, [`closed_form`] holds
//! the continuous baselines and [`oracle`] brute-force references.

pub mod closed_form;
pub mod error;
pub mod eval;
pub mod noise;
pub mod oracle;
pub mod pointwise;
pub mod regions;
pub mod scalar;
pub mod threshold;
pub mod tree;

pub use closed_form::{gaussian_l0_radius, uniform_radius, GaussianBaseline, Norm, UniformParams};
pub use error::{Error, Result};
pub use eval::{
    acc_at_r, adversarial_auc, clopper_pearson_lower, ingest_predictions, mean_radius, AucInstance, AucMode,
    Evidence, PredictionRecord,
};
pub use noise::NoiseParams;
pub use pointwise::{certified_radius, rho, rho_inverse, Certificate, LikelihoodRatio, MassPair, Witness};
pub use regions::{build_region_table, cardinality, region_mass, RegionEntry, RegionTable, Side};
pub use scalar::{parse_rational, Rational, Scalar};
pub use threshold::{build_cert_table, load_table, save_table, threshold_bigint, CertTable, Threshold};
pub use tree::{load_tree, save_tree, train, AdvTable, Dataset, TrainOptions, Tree};

/// Region masses in exact arithmetic.
pub type ExactMassPair = MassPair<Rational>;
/// Region masses in double precision.
pub type MassPairF64 = MassPair<f64>;
pub type ExactWitness = Witness<Rational>;
/// Adversary table in exact arithmetic.
pub type ExactAdvTable = AdvTable<Rational>;
pub type AdvTableF64 = AdvTable<f64>;
