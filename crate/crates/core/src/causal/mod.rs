//! The E-SSL causal diagram as an executable object: d-separation queries,
//! exact collider joints and explaining-away checks.

mod diagram;
mod model;

pub use diagram::CausalDiagram;
pub use model::{
    build_collider_joint, check_explaining_away, random_joint, sample_random_model, sample_simplex,
    ColliderModel, Cpd, ExplainingAway, ModelSizes,
};

/// Free-function form of [`CausalDiagram::d_separated`].
pub fn d_separated(diagram: &CausalDiagram, x: &[&str], y: &[&str], z: &[&str]) -> crate::Result<bool> {
    diagram.d_separated(x, y, z)
}
