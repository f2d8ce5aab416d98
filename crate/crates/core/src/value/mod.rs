//! Value-based perturbation: additive noise with distribution
//! reconstruction, and randomized response for boolean answers.

mod noise;
mod reconstruct;
mod response;

pub use noise::{add_noise, NoiseSpec};
pub use reconstruct::{reconstruct_distribution, DensityEstimate, ReconstructionConfig};
pub use response::{estimate_from_observed, estimate_true_proportion, randomize_response, ProportionEstimate};
