//! Exact 2-Wasserstein transport: LP certificates with dual potentials, the
//! closed-form 1-D distance, c-transforms, and assignment distances between
//! collections of measures.

mod assignment;
mod simplex;

pub use assignment::{assignment_distance, hungarian};

use crate::constants::{DUALITY_GAP_TOL, DUAL_FEAS_TOL, MARGINAL_TOL};
use crate::measures::{DiscreteMeasure, QuantileTable};
use crate::{Error, Result};

/// Optimal plan and dual potentials certifying a squared Wasserstein
/// distance between two discrete measures.
#[derive(Debug, Clone)]
pub struct TransportCertificate {
    /// The optimal value, i.e. W2 squared.
    pub cost: f64,
    /// Sparse plan entries `(i, j, mass)` with positive mass.
    pub plan: Vec<(usize, usize, f64)>,
    /// Dual potential on the source support, normalized to mu-mean zero.
    pub phi: Vec<f64>,
    /// Dual potential on the target support.
    pub psi: Vec<f64>,
}

impl TransportCertificate {
    /// Dual objective value `int phi dmu + int psi dnu`.
    pub fn dual_value(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let a: f64 = self.phi.iter().zip(mu.weights()).map(|(p, w)| p * w).sum();
        let b: f64 = self.psi.iter().zip(nu.weights()).map(|(p, w)| p * w).sum();
        a + b
    }

    /// Diagnostic check of every certificate invariant; empty means valid.
    pub fn check(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<String> {
        let mut issues = Vec::new();
        let mut row = vec![0.0; mu.len()];
        let mut col = vec![0.0; nu.len()];
        for &(i, j, f) in &self.plan {
            if f < 0.0 {
                issues.push(format!("negative plan entry at ({i},{j})"));
            }
            row[i] += f;
            col[j] += f;
        }
        for (i, (&r, &w)) in row.iter().zip(mu.weights()).enumerate() {
            if (r - w).abs() > MARGINAL_TOL {
                issues.push(format!("row {i} sum {r} != weight {w}"));
            }
        }
        for (j, (&c, &w)) in col.iter().zip(nu.weights()).enumerate() {
            if (c - w).abs() > MARGINAL_TOL {
                issues.push(format!("col {j} sum {c} != weight {w}"));
            }
        }
        for (i, x) in mu.points().iter().enumerate() {
            for (j, y) in nu.points().iter().enumerate() {
                let c = sq_dist(x, y);
                if self.phi[i] + self.psi[j] > c + DUAL_FEAS_TOL {
                    issues.push(format!(
                        "dual infeasible at ({i},{j}): {} > {c}",
                        self.phi[i] + self.psi[j]
                    ));
                }
            }
        }
        let gap = (self.dual_value(mu, nu) - self.cost).abs();
        if gap > DUALITY_GAP_TOL {
            issues.push(format!("primal-dual gap {gap}"));
        }
        issues
    }
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Exact squared 2-Wasserstein distance with plan and duals, via the
/// transportation simplex. Potentials are normalized so phi has mu-mean zero.
pub fn w2_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportCertificate> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    let m = mu.len();
    let n = nu.len();

    // sort both supports in 1-D so the north-west corner start is already the
    // optimal monotone coupling and the simplex does no pivots
    let (src_order, snk_order): (Vec<usize>, Vec<usize>) = if mu.dim() == 1 {
        let mut a: Vec<usize> = (0..m).collect();
        let mut b: Vec<usize> = (0..n).collect();
        a.sort_by(|&p, &q| mu.points()[p][0].partial_cmp(&mu.points()[q][0]).unwrap());
        b.sort_by(|&p, &q| nu.points()[p][0].partial_cmp(&nu.points()[q][0]).unwrap());
        (a, b)
    } else {
        ((0..m).collect(), (0..n).collect())
    };

    let supply: Vec<f64> = src_order.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<f64> = snk_order.iter().map(|&j| nu.weights()[j]).collect();
    let mut cost = vec![0.0; m * n];
    for (a, &i) in src_order.iter().enumerate() {
        for (b, &j) in snk_order.iter().enumerate() {
            cost[a * n + b] = sq_dist(&mu.points()[i], &nu.points()[j]);
        }
    }
    let sol = simplex::solve_transport(&supply, &demand, &cost)?;

    let mut phi = vec![0.0; m];
    let mut psi = vec![0.0; n];
    for (a, &i) in src_order.iter().enumerate() {
        phi[i] = sol.u[a];
    }
    for (b, &j) in snk_order.iter().enumerate() {
        psi[j] = sol.v[b];
    }
    // additive normalization: phi has mu-mean zero
    let shift: f64 = phi.iter().zip(mu.weights()).map(|(p, w)| p * w).sum();
    for p in &mut phi {
        *p -= shift;
    }
    for p in &mut psi {
        *p += shift;
    }
    let plan = sol
        .flows
        .into_iter()
        .map(|(a, b, f)| (src_order[a], snk_order[b], f))
        .collect();
    Ok(TransportCertificate { cost: sol.cost, plan, phi, psi })
}

/// Anything with a 1-D quantile function.
pub trait Quantile1d {
    fn quantile(&self) -> Result<QuantileTable>;
}

impl Quantile1d for DiscreteMeasure {
    fn quantile(&self) -> Result<QuantileTable> {
        self.quantile_table()
    }
}

impl Quantile1d for crate::measures::GridDensity {
    fn quantile(&self) -> Result<QuantileTable> {
        self.quantile_table()
    }
}

impl Quantile1d for QuantileTable {
    fn quantile(&self) -> Result<QuantileTable> {
        Ok(self.clone())
    }
}

/// Exact squared 2-Wasserstein distance in one dimension, by piecewise
/// integration of the squared quantile difference. No quadrature error.
pub fn w2_1d<A: Quantile1d + ?Sized, B: Quantile1d + ?Sized>(mu: &A, nu: &B) -> Result<f64> {
    let qa = mu.quantile()?;
    let qb = nu.quantile()?;
    Ok(qa.w2_sq(&qb))
}

/// c-transform of a potential given on the support `points`, evaluated at
/// `queries`: `phi^c(q) = min_i ( |q - points_i|^2 - phi_i )`.
pub fn c_transform(points: &[Vec<f64>], phi: &[f64], queries: &[Vec<f64>]) -> Vec<f64> {
    queries
        .iter()
        .map(|q| {
            points
                .iter()
                .zip(phi)
                .map(|(p, &v)| sq_dist(q, p) - v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
