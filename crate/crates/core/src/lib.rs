//! Data-driven modal decomposition.
//!
//! Given snapshot pairs `Y = A X` of an unknown linear map, the pipelines
//! here return Ritz values and vectors of `A` together with residual norms
//! computed from the data alone. Refined Ritz vectors, column scaling, QR
//! compression, forward–backward averaging and elliptic inner products are
//! available as variants.

pub mod error;
pub mod io;
pub mod linalg;
pub mod pod;
pub mod report;
pub mod ritz;
pub mod rng;
pub mod snapshots;
pub mod variants;
pub mod verify;
pub mod weighted;

pub use error::{DmdError, Result};
pub use faer::c64;
pub use pod::{PodBasis, RankPolicy};
pub use ritz::{RitzDecomposition, RitzPair, Variant};
pub use snapshots::{SequentialTrajectory, SnapshotPair};
pub use variants::{Refine, VariantConfig};
pub use weighted::InnerProduct;
