//! Part-based statistical body shape modelling.
//!
//! The crate covers the whole pipeline from registered, segmented body
//! meshes to anthropometric measurements and back:
//!
//! - [`mesh`]: triangle meshes, Wavefront OBJ I/O and validation.
//! - [`segmentation`] / [`part`]: the 17-part layout, interface rings and
//!   part extraction into part-centred frames.
//! - [`shape_model`]: per-part PCA shape spaces.
//! - [`assembler`]: Procrustes stitching of independently synthesized parts.
//! - [`tailor`]: cutting-plane circumferences, lengths and the 34-slot
//!   measurement vector.
//! - [`semantic`]: linear maps from measurements to PCA coefficients,
//!   reconstruction and measurement-driven editing.
//! - [`silhouette`]: two-view silhouette rendering and a ridge regressor
//!   from silhouette features to measurements.
//! - [`humanoid`]: procedural segmented humanoids with known dimensions.

pub mod assembler;
pub mod error;
pub mod humanoid;
pub mod linalg;
pub mod mesh;
pub mod part;
pub mod segmentation;
pub mod semantic;
pub mod shape_model;
pub mod silhouette;
pub mod tailor;

pub use error::{Error, Result};
pub use mesh::{TriMesh, ValidationReport};
pub use part::PartLabel;
pub use segmentation::{extract_part, PartMesh, PartSegmentation};

/// 3D vector / point in millimetres.
pub type Vec3 = nalgebra::Vector3<f64>;
