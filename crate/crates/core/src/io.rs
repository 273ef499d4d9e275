//! JSON schemas for measures and solver output.
//!
//! Discrete: `{"type":"discrete","dim":d,"points":[[...]],"weights":[...]}`
//! Grid:     `{"type":"grid","min":[...],"max":[...],"shape":[...],"values":[...]}`
//! with grid values row-major.

use serde::{Deserialize, Serialize};

use crate::measures::{BoxDomain, DiscreteMeasure, GridDensity, Measure};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasureJson {
    Discrete {
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Grid {
        min: Vec<f64>,
        max: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
}

impl MeasureJson {
    pub fn into_measure(self) -> Result<Measure> {
        match self {
            MeasureJson::Discrete { dim, points, weights } => {
                let m = DiscreteMeasure::new(points, weights)?;
                if m.dim() != dim {
                    return Err(Error::DimensionMismatch(m.dim(), dim));
                }
                Ok(Measure::Discrete(m))
            }
            MeasureJson::Grid { min, max, shape, values } => {
                let domain = BoxDomain::new(min, max)?;
                Ok(Measure::Grid(GridDensity::new(domain, shape, values)?))
            }
        }
    }

    pub fn from_measure(measure: &Measure) -> Self {
        match measure {
            Measure::Discrete(m) => MeasureJson::Discrete {
                dim: m.dim(),
                points: m.points().to_vec(),
                weights: m.weights().to_vec(),
            },
            Measure::Grid(g) => MeasureJson::Grid {
                min: g.domain().lower().to_vec(),
                max: g.domain().upper().to_vec(),
                shape: g.shape().to_vec(),
                values: g.values().to_vec(),
            },
        }
    }
}

/// Transport certificate as emitted by the CLI: cost, sparse plan triplets
/// and the dual potentials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateJson {
    pub cost: f64,
    pub plan: Vec<(usize, usize, f64)>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl From<&crate::transport::TransportCertificate> for CertificateJson {
    fn from(c: &crate::transport::TransportCertificate) -> Self {
        Self { cost: c.cost, plan: c.plan.clone(), phi: c.phi.clone(), psi: c.psi.clone() }
    }
}

/// Barycenter solution as emitted by the CLI: the density in the grid
/// schema, with convergence metadata. The objective trace goes to a CSV
/// sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionJson {
    #[serde(flatten)]
    pub density: MeasureJson,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
}

/// Format a float with 17 significant digits, enough to round-trip f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}
