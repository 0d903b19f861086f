//! Explicit constructions: separating directions, single-sample fits,
//! subspace embeddings and labels that force spurious minima.

pub mod bad_label;
pub mod embed;
pub mod poly;
pub mod saturation;
pub mod separation;

pub use bad_label::{bad_label, bad_label_with_gap, s_threshold, BadLabel, ThetaSource};
pub use embed::{affine_embed, constant_embed, freeknot_affine_embed, EmbeddingResult, EmbeddingRoute};
pub use poly::{constant_space_basis, poly_space_basis};
pub use saturation::{
    expressiveness_witness, hat_fit, heaviside_unit_fit, resnet_fit, saturated_fit, saturated_fit_ordered, SaturationOrder,
    Witness, WitnessRoute,
};
pub use separation::{separating_hyperplane, separating_hyperplane_with_direction, Separation};
