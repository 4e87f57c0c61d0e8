//! Symmetric convex bodies, convex cones, and the volumes and layer-cake
//! integrals of their intersections.

mod body;
mod cone;
mod hull;
mod volume;

pub use body::{BodyShape, ConvexBody, Facet};
pub use cone::{Cone, ConeKind};
pub use volume::{
    layer_cake_closed_form, layer_cake_integral, scaled_volume, volume_body_cone, Estimate,
    VolumeMethod,
};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
