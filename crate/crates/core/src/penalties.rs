//! Convex penalizing functionals on grid densities: evaluation, gradient and
//! the two Bregman divergences.
//!
//! All integrals are midpoint sums over grid cells; the gradient is taken
//! with respect to the weighted inner product `<u, v> = sum_k u_k v_k * vol`,
//! so for the quadratic penalty `E(f) = 1/2 int f^2` the gradient is `f`
//! itself. A density below the floor is reported as an explicit
//! domain-violation error, never as a float infinity.

use crate::constants::DEFAULT_FLOOR_FRACTION;
use crate::measures::GridDensity;
use crate::{Error, Result};

/// Penalty kind. The Sobolev-augmented kind pairs the quadratic
/// G-functional `1/2 int f^2` with the squared discrete Sobolev norm of
/// order `k` (squared L2 norms of all finite-difference derivatives of
/// order <= k, reflecting boundary).
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    Quadratic,
    NegEntropy { floor: f64 },
    SobolevAugmented { order: usize, floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    kind: PenaltyKind,
}

impl Penalty {
    pub fn new(kind: PenaltyKind) -> Result<Self> {
        match kind {
            PenaltyKind::NegEntropy { floor } | PenaltyKind::SobolevAugmented { floor, .. }
                if !(floor > 0.0) =>
            {
                Err(Error::OutsideDomain("floor must be strictly positive".into()))
            }
            PenaltyKind::SobolevAugmented { order, .. } if order == 0 => Err(Error::OutsideDomain(
                "Sobolev order must be at least 1".into(),
            )),
            kind => Ok(Self { kind }),
        }
    }

    pub fn quadratic() -> Self {
        Self { kind: PenaltyKind::Quadratic }
    }

    /// Negative entropy with the default floor relative to the uniform
    /// density on `domain_volume`.
    pub fn entropy_default(domain_volume: f64) -> Self {
        Self {
            kind: PenaltyKind::NegEntropy { floor: DEFAULT_FLOOR_FRACTION / domain_volume },
        }
    }

    pub fn entropy(floor: f64) -> Result<Self> {
        Self::new(PenaltyKind::NegEntropy { floor })
    }

    pub fn sobolev(order: usize, floor: f64) -> Result<Self> {
        Self::new(PenaltyKind::SobolevAugmented { order, floor })
    }

    pub fn kind(&self) -> &PenaltyKind {
        &self.kind
    }

    /// The density floor this penalty enforces (0 for the quadratic kind).
    pub fn floor(&self) -> f64 {
        match self.kind {
            PenaltyKind::Quadratic => 0.0,
            PenaltyKind::NegEntropy { floor } => floor,
            PenaltyKind::SobolevAugmented { floor, .. } => floor,
        }
    }

    fn check_domain(&self, f: &GridDensity) -> Result<()> {
        let floor = self.floor();
        // tiny slack so projected iterates sitting exactly on the floor pass
        let slack = 1e-12 * (1.0 + floor);
        if let Some((k, &v)) = f
            .values()
            .iter()
            .enumerate()
            .find(|(_, &v)| v < floor - slack)
        {
            return Err(Error::OutsideDomain(format!(
                "density value {v} at cell {k} is below the floor {floor}"
            )));
        }
        Ok(())
    }

    /// E(f); an explicit error marks `+infinity` (density outside the domain).
    pub fn eval(&self, f: &GridDensity) -> Result<f64> {
        self.check_domain(f)?;
        let vol = f.cell_volume();
        match self.kind {
            PenaltyKind::Quadratic => Ok(0.5 * f.values().iter().map(|v| v * v).sum::<f64>() * vol),
            PenaltyKind::NegEntropy { .. } => Ok(f
                .values()
                .iter()
                .map(|&v| v * (v.ln() - 1.0) + 1.0)
                .sum::<f64>()
                * vol),
            PenaltyKind::SobolevAugmented { order, .. } => {
                let g_part = 0.5 * f.values().iter().map(|v| v * v).sum::<f64>() * vol;
                Ok(g_part + sobolev_norm_sq(f, order))
            }
        }
    }

    /// Gradient of E at f, as a grid function.
    pub fn grad(&self, f: &GridDensity) -> Result<Vec<f64>> {
        self.check_domain(f)?;
        match self.kind {
            PenaltyKind::Quadratic => Ok(f.values().to_vec()),
            PenaltyKind::NegEntropy { .. } => Ok(f.values().iter().map(|v| v.ln()).collect()),
            PenaltyKind::SobolevAugmented { order, .. } => {
                let mut g = f.values().to_vec();
                let sob = sobolev_operator(f, order);
                for (gk, sk) in g.iter_mut().zip(sob) {
                    *gk += 2.0 * sk;
                }
                Ok(g)
            }
        }
    }

    /// Symmetric Bregman divergence `<grad E(f) - grad E(g), f - g>`.
    pub fn bregman_sym(&self, f: &GridDensity, g: &GridDensity) -> Result<f64> {
        same_grid(f, g)?;
        let gf = self.grad(f)?;
        let gg = self.grad(g)?;
        let vol = f.cell_volume();
        let d = gf
            .iter()
            .zip(&gg)
            .zip(f.values().iter().zip(g.values()))
            .map(|((a, b), (x, y))| (a - b) * (x - y))
            .sum::<f64>()
            * vol;
        Ok(d.max(0.0))
    }

    /// Non-symmetric Bregman divergence `E(f) - E(g) - <grad E(g), f - g>`.
    pub fn bregman_nonsym(&self, f: &GridDensity, g: &GridDensity) -> Result<f64> {
        same_grid(f, g)?;
        let ef = self.eval(f)?;
        let eg = self.eval(g)?;
        let gg = self.grad(g)?;
        let vol = f.cell_volume();
        let lin = gg
            .iter()
            .zip(f.values().iter().zip(g.values()))
            .map(|(a, (x, y))| a * (x - y))
            .sum::<f64>()
            * vol;
        Ok((ef - eg - lin).max(0.0))
    }
}

fn same_grid(f: &GridDensity, g: &GridDensity) -> Result<()> {
    if f.shape() != g.shape() || f.domain() != g.domain() {
        return Err(Error::InvalidMeasure("grids do not match".into()));
    }
    Ok(())
}

/// Squared L2 distance of two grid densities, `int (f-g)^2`.
pub fn l2_sq_diff(f: &GridDensity, g: &GridDensity) -> Result<f64> {
    same_grid(f, g)?;
    Ok(f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        * f.cell_volume())
}

/// Forward finite difference along `axis` with reflecting (Neumann)
/// boundary: the difference across the last face is zero.
fn forward_diff(values: &[f64], shape: &[usize], axis: usize, h: f64) -> Vec<f64> {
    let stride: usize = shape[axis + 1..].iter().product();
    let len_axis = shape[axis];
    let mut out = vec![0.0; values.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % len_axis;
        if i + 1 < len_axis {
            *o = (values[flat + stride] - values[flat]) / h;
        }
    }
    out
}

/// Adjoint of [`forward_diff`] with respect to the unweighted dot product
/// (cell volumes are uniform, so the weighted adjoint coincides).
fn forward_diff_adjoint(values: &[f64], shape: &[usize], axis: usize, h: f64) -> Vec<f64> {
    let stride: usize = shape[axis + 1..].iter().product();
    let len_axis = shape[axis];
    let mut out = vec![0.0; values.len()];
    for flat in 0..values.len() {
        let i = (flat / stride) % len_axis;
        // column flat of D receives -1/h from row flat (if i+1<len) and
        // +1/h from row flat-stride (if i>0)
        let mut acc = 0.0;
        if i + 1 < len_axis {
            acc -= values[flat] / h;
        }
        if i > 0 {
            acc += values[flat - stride] / h;
        }
        out[flat] = acc;
    }
    out
}

/// All multi-indices beta with 1 <= |beta| <= order over `dim` axes.
fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    fn rec(axis: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis == current.len() {
            if current.iter().sum::<usize>() >= 1 {
                out.push(current.clone());
            }
            return;
        }
        for b in 0..=remaining {
            current[axis] = b;
            rec(axis + 1, remaining - b, current, out);
        }
        current[axis] = 0;
    }
    rec(0, order, &mut current, &mut out);
    out
}

fn apply_multi_diff(f: &GridDensity, beta: &[usize]) -> Vec<f64> {
    let mut v = f.values().to_vec();
    for (axis, &b) in beta.iter().enumerate() {
        let h = f.cell_width(axis);
        for _ in 0..b {
            v = forward_diff(&v, f.shape(), axis, h);
        }
    }
    v
}

fn apply_multi_diff_adjoint(f: &GridDensity, beta: &[usize], values: Vec<f64>) -> Vec<f64> {
    let mut v = values;
    for (axis, &b) in beta.iter().enumerate().rev() {
        let h = f.cell_width(axis);
        for _ in 0..b {
            v = forward_diff_adjoint(&v, f.shape(), axis, h);
        }
    }
    v
}

/// Squared discrete Sobolev norm of order `k`: the L2 norm of f itself plus
/// the L2 norms of every finite-difference derivative of order <= k.
pub fn sobolev_norm_sq(f: &GridDensity, order: usize) -> f64 {
    let vol = f.cell_volume();
    let mut total = f.values().iter().map(|v| v * v).sum::<f64>() * vol;
    for beta in multi_indices(f.dim(), order) {
        let d = apply_multi_diff(f, &beta);
        total += d.iter().map(|v| v * v).sum::<f64>() * vol;
    }
    total
}

/// The operator `S` with `sobolev_norm_sq(f) = <S f, f>`: identity plus the
/// adjoint-composed finite-difference stack.
fn sobolev_operator(f: &GridDensity, order: usize) -> Vec<f64> {
    let mut out = f.values().to_vec();
    for beta in multi_indices(f.dim(), order) {
        let d = apply_multi_diff(f, &beta);
        let dt = apply_multi_diff_adjoint(f, &beta, d);
        for (o, v) in out.iter_mut().zip(dt) {
            *o += v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::BoxDomain;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> BoxDomain {
        BoxDomain::unit(1)
    }

    fn random_density(rng: &mut ChaCha8Rng, cells: usize) -> GridDensity {
        let raw: Vec<f64> = (0..cells).map(|_| 0.2 + rng.gen::<f64>()).collect();
        GridDensity::from_unnormalized(unit(), vec![cells], raw).unwrap()
    }

    #[test]
    fn quadratic_on_uniform() {
        let f = GridDensity::uniform(unit(), vec![32]);
        let p = Penalty::quadratic();
        assert!((p.eval(&f).unwrap() - 0.5).abs() < 1e-12);
        assert!(p.grad(&f).unwrap().iter().all(|&g| (g - 1.0).abs() < 1e-12));
    }

    #[test]
    fn entropy_on_uniform() {
        let f = GridDensity::uniform(unit(), vec![32]);
        let p = Penalty::entropy(1e-6).unwrap();
        assert!(p.eval(&f).unwrap().abs() < 1e-12);
        assert!(p.grad(&f).unwrap().iter().all(|&g| g.abs() < 1e-12));
    }

    #[test]
    fn quadratic_on_half_interval() {
        // f = 2 on [0, 0.5]: E = 1/2 * 4 * 0.5 = 1
        let domain = BoxDomain::interval(0.0, 0.5).unwrap();
        let f = GridDensity::uniform(domain, vec![16]);
        let p = Penalty::quadratic();
        assert!((p.eval(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_eval_below_floor_is_domain_error() {
        let f = GridDensity::new(unit(), vec![2], vec![0.0, 2.0]).unwrap();
        let p = Penalty::entropy(1e-3).unwrap();
        assert!(matches!(p.eval(&f), Err(Error::OutsideDomain(_))));
        assert!(matches!(p.grad(&f), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn quadratic_bregman_matches_quadrature() {
        // f = 1, g = 2x on [0,1]: int (1-2x)^2 = 1/3, computed on the grid
        let cells = 64;
        let f = GridDensity::uniform(unit(), vec![cells]);
        let raw: Vec<f64> = (0..cells)
            .map(|i| 2.0 * (i as f64 + 0.5) / cells as f64)
            .collect();
        let g = GridDensity::from_unnormalized(unit(), vec![cells], raw).unwrap();
        let p = Penalty::quadratic();
        let d = p.bregman_sym(&f, &g).unwrap();
        let quad = l2_sq_diff(&f, &g).unwrap();
        assert!((d - quad).abs() < 1e-12);
        // midpoint quadrature of a quadratic has O(h^2) error vs 1/3
        assert!((d - 1.0 / 3.0).abs() < 1e-3, "{d}");
    }

    #[test]
    fn bregman_identities_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for penalty in [
            Penalty::quadratic(),
            Penalty::entropy(1e-6).unwrap(),
            Penalty::sobolev(2, 1e-6).unwrap(),
        ] {
            for _ in 0..10 {
                let f = random_density(&mut rng, 24);
                let g = random_density(&mut rng, 24);
                let sym = penalty.bregman_sym(&f, &g).unwrap();
                let ab = penalty.bregman_nonsym(&f, &g).unwrap();
                let ba = penalty.bregman_nonsym(&g, &f).unwrap();
                assert!((sym - (ab + ba)).abs() < 1e-9, "{sym} vs {}", ab + ba);
                assert!(sym >= 0.0 && ab >= 0.0 && ba >= 0.0);
                assert!((penalty.bregman_sym(&g, &f).unwrap() - sym).abs() < 1e-12);
                assert!(penalty.bregman_sym(&f, &f).unwrap() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for penalty in [
            Penalty::quadratic(),
            Penalty::entropy(1e-6).unwrap(),
            Penalty::sobolev(1, 1e-6).unwrap(),
            Penalty::sobolev(3, 1e-6).unwrap(),
        ] {
            let f = random_density(&mut rng, 20);
            let grad = penalty.grad(&f).unwrap();
            let vol = f.cell_volume();
            for _ in 0..20 {
                // mass-preserving perturbation direction
                let mut dir: Vec<f64> = (0..20).map(|_| rng.gen::<f64>() - 0.5).collect();
                let mean = dir.iter().sum::<f64>() / dir.len() as f64;
                dir.iter_mut().for_each(|d| *d -= mean);
                let eps = 1e-6;
                let perturb = |s: f64| {
                    let vals: Vec<f64> = f
                        .values()
                        .iter()
                        .zip(&dir)
                        .map(|(v, d)| v + s * d)
                        .collect();
                    f.with_values(vals).unwrap()
                };
                let e_plus = penalty.eval(&perturb(eps)).unwrap();
                let e_minus = penalty.eval(&perturb(-eps)).unwrap();
                let fd = (e_plus - e_minus) / (2.0 * eps);
                let inner: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>() * vol;
                let scale = fd.abs().max(inner.abs()).max(1e-8);
                assert!(
                    (fd - inner).abs() / scale < 1e-5,
                    "{penalty:?}: fd {fd} vs <grad, dir> {inner}"
                );
            }
        }
    }

    #[test]
    fn strict_convexity_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for penalty in [
            Penalty::quadratic(),
            Penalty::entropy(1e-6).unwrap(),
            Penalty::sobolev(1, 1e-6).unwrap(),
        ] {
            let f = random_density(&mut rng, 16);
            let g = random_density(&mut rng, 16);
            let mid_vals: Vec<f64> = f
                .values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let mid = f.with_values(mid_vals).unwrap();
            let lhs = penalty.eval(&mid).unwrap();
            let rhs = 0.5 * penalty.eval(&f).unwrap() + 0.5 * penalty.eval(&g).unwrap();
            assert!(lhs < rhs - 1e-12, "{penalty:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn sobolev_lower_bounds_of_section5() {
        // with the quadratic-G Sobolev penalty, d_E >= ||f-g||^2 and
        // D_E >= 1/2 ||f-g||^2
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let p = Penalty::sobolev(1, 1e-9).unwrap();
        for _ in 0..10 {
            let f = random_density(&mut rng, 32);
            let g = random_density(&mut rng, 32);
            let l2 = l2_sq_diff(&f, &g).unwrap();
            assert!(p.bregman_sym(&f, &g).unwrap() >= l2 - 1e-12);
            assert!(p.bregman_nonsym(&f, &g).unwrap() >= 0.5 * l2 - 1e-12);
        }
    }

    #[test]
    fn sobolev_2d_gradient_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let domain = BoxDomain::unit(2);
        let raw: Vec<f64> = (0..64).map(|_| 0.3 + rng.gen::<f64>()).collect();
        let f = GridDensity::from_unnormalized(domain, vec![8, 8], raw).unwrap();
        let penalty = Penalty::sobolev(2, 1e-9).unwrap();
        let grad = penalty.grad(&f).unwrap();
        let vol = f.cell_volume();
        for _ in 0..10 {
            let mut dir: Vec<f64> = (0..64).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mean = dir.iter().sum::<f64>() / 64.0;
            dir.iter_mut().for_each(|d| *d -= mean);
            let eps = 1e-6;
            let perturb = |s: f64| {
                let vals: Vec<f64> = f.values().iter().zip(&dir).map(|(v, d)| v + s * d).collect();
                f.with_values(vals).unwrap()
            };
            let fd = (penalty.eval(&perturb(eps)).unwrap() - penalty.eval(&perturb(-eps)).unwrap())
                / (2.0 * eps);
            let inner: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>() * vol;
            let scale = fd.abs().max(inner.abs()).max(1e-8);
            assert!((fd - inner).abs() / scale < 1e-5);
        }
    }
}
