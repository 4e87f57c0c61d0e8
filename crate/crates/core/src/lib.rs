//! Steklov-type averaging operators, charge seminorms and Landau–Kolmogorov
//! inequalities over convex bodies and cones.
//!
//! A charge `dν = f dμ` is stored as a density sampled at the cell centers of
//! a uniform grid. Window sums `ν(y + hK ∩ C)` use the midpoint rule, with a
//! summed-area table when `K` is an axis box and `C` an orthant product.

pub mod charge;
pub mod config;
pub mod error;
pub mod families;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod inequality;
pub mod mixed;
pub mod optimize;
pub mod prefix;
pub mod report;
pub mod sharpness;
pub mod stechkin;
pub mod steklov;

pub use charge::{
    charge_of_window, covering_grid, extremal_charge, extremal_density, seminorm_k, seminorm_kh, Charge,
    SeminormK, WindowSup,
};
pub use error::{LabError, Result};
pub use field::{grad_sup_polar, GradSup, GradientFn, GridField, ScalarFn, SupNorm};
pub use geometry::{
    layer_cake_closed_form, layer_cake_integral, volume_body_cone, Cone, ConeKind, ConvexBody, VolumeMethod,
};
pub use grid::GridSpec;
pub use inequality::{CheckOptions, InequalityReport};
pub use mixed::{MixedFunction, MixedParams};
pub use stechkin::ProblemSetting;
pub use steklov::SteklovParams;
