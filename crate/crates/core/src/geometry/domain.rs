use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::{mesh_disk, mesh_map_image, Point, TriMesh};
use super::polygon::mesh_polygon;
use super::{ConformalMap, GeometryError};

/// Serializable description of an analytic map, with coefficients as
/// `[re, im]` pairs. Meaning of `coeffs` by kind:
/// `power_series` — (a₁, …, a_N) for f(z) = Σ aₖ zᵏ;
/// `moebius` — (a, b, c, d) for f(z) = (az + b)/(cz + d);
/// `linear` — (a, b) for f(z) = az + b.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    PowerSeries { coeffs: Vec<[f64; 2]> },
    Moebius { coeffs: Vec<[f64; 2]> },
    Linear { coeffs: Vec<[f64; 2]> },
}

impl MapSpec {
    pub fn to_map(&self) -> Result<ConformalMap, GeometryError> {
        let complex = |c: &[[f64; 2]]| -> Vec<Complex64> {
            c.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
        };
        match self {
            MapSpec::PowerSeries { coeffs } => ConformalMap::power_series(complex(coeffs)),
            MapSpec::Moebius { coeffs } => {
                let c = complex(coeffs);
                if c.len() != 4 {
                    return Err(GeometryError::DegenerateMap(format!(
                        "moebius needs 4 coefficients (a, b, c, d), got {}",
                        c.len()
                    )));
                }
                ConformalMap::moebius(c[0], c[1], c[2], c[3])
            }
            MapSpec::Linear { coeffs } => {
                let c = complex(coeffs);
                if c.len() != 2 {
                    return Err(GeometryError::DegenerateMap(format!(
                        "linear needs 2 coefficients (a, b), got {}",
                        c.len()
                    )));
                }
                ConformalMap::linear(c[0], c[1])
            }
        }
    }
}

/// Serializable description of a computational domain.
///
/// ```text
/// {"type": "disk", "radius": 1.0, "center": [0.0, 0.0]}
/// {"type": "polygon", "vertices": [[0,0], [1,0], [1,1], [0,1]]}
/// {"type": "map_image", "map": {"kind": "moebius", "coeffs": [[-1,0],[1,0],[1,0],[1,0]]}, "r": 0.5}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    MapImage {
        map: MapSpec,
        r: f64,
    },
}

impl DomainSpec {
    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0, center: [0.0, 0.0] }
    }

    pub fn unit_square() -> Self {
        DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        serde_json::from_str(text)
            .map_err(|e| GeometryError::InvalidDomain(format!("domain JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain spec serializes")
    }

    /// Short label used in log lines and output metadata.
    pub fn kind(&self) -> &'static str {
        match self {
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::Polygon { .. } => "polygon",
            DomainSpec::MapImage { .. } => "map_image",
        }
    }
}

/// Mesh whichever domain the spec describes at target edge length `h`.
pub fn build_mesh(spec: &DomainSpec, h: f64) -> Result<TriMesh, GeometryError> {
    match spec {
        DomainSpec::Disk { radius, center } => {
            mesh_disk(*radius, Point::new(center[0], center[1]), h)
        }
        DomainSpec::Polygon { vertices } => {
            let pts: Vec<Point> = vertices.iter().map(|&[x, y]| Point::new(x, y)).collect();
            mesh_polygon(&pts, h)
        }
        DomainSpec::MapImage { map, r } => {
            let f = map.to_map()?;
            mesh_map_image(&f, *r, h)
        }
    }
}
