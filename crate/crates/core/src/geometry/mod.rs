//! Planar domains: conformal maps, domain specifications, triangular meshes.

mod domain;
mod map;
mod mesh;
mod polygon;

pub use domain::{build_mesh, DomainSpec};
pub use map::ConformalMap;
pub use mesh::{mesh_disk, mesh_map_image, signed_area, Point, TriMesh};
pub use polygon::mesh_polygon;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    /// A Möbius evaluation hit (or a requested disk contains) the map's pole.
    #[error("map evaluated within 1e-14 of its pole")]
    PoleHit,
    /// The requested mesh size produces fewer than three concentric rings.
    #[error("mesh size {h} too coarse for radius {radius}: {rings} ring(s), need at least 3")]
    ResolutionTooCoarse { radius: f64, h: f64, rings: usize },
    /// The polygon is not simple, not counter-clockwise, or degenerate.
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    /// A pushed-forward triangle has non-positive signed area, so the map is
    /// not injective on the requested disk at this resolution.
    #[error("image mesh folds over itself: triangle {triangle} has signed area {area:e}")]
    FoldedMesh { triangle: usize, area: f64 },
    /// Map coefficients violate a construction invariant.
    #[error("degenerate map: {0}")]
    DegenerateMap(String),
    /// A domain parameter is out of range.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    /// A constructed mesh failed its own consistency checks.
    #[error("mesh invariant violated: {0}")]
    MeshInvariant(String),
}
