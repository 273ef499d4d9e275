//! Projected subgradient descent for the penalized barycenter objective
//! `J(f) = (1/n) sum_i W2^2(mu_f, nu_i) + gamma E(f)` over grid densities,
//! plus the exact 1-D quantile-averaging oracle for gamma = 0.

use rayon::prelude::*;

use crate::measures::{grid_to_discrete, BoxDomain, DiscreteMeasure, GridDensity, QuantileTable};
use crate::penalties::{Penalty, PenaltyKind};
use crate::transport::{w2_exact, TransportCertificate};
use crate::{Error, Result};

/// The discrete penalized barycenter problem of a collection of measures.
#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    pub measures: Vec<DiscreteMeasure>,
    pub gamma: f64,
    pub penalty: Penalty,
    pub domain: BoxDomain,
    pub shape: Vec<usize>,
}

impl BarycenterProblem {
    pub fn new(
        measures: Vec<DiscreteMeasure>,
        gamma: f64,
        penalty: Penalty,
        domain: BoxDomain,
        shape: Vec<usize>,
    ) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::InvalidMeasure("need at least one input measure".into()));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidMeasure("gamma must be nonnegative".into()));
        }
        let d = domain.dim();
        if measures.iter().any(|m| m.dim() != d) || shape.len() != d {
            return Err(Error::DimensionMismatch(shape.len(), d));
        }
        Ok(Self { measures, gamma, penalty, domain, shape })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant trial step `s0`.
    Fixed(f64),
    /// Decaying trial step `s0 / sqrt(t)`.
    Decaying(f64),
}

impl StepRule {
    fn trial(&self, t: usize) -> f64 {
        match *self {
            StepRule::Fixed(s0) => s0,
            StepRule::Decaying(s0) => s0 / (t as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub tol: f64,
    pub seed: u64,
}

impl SolverConfig {
    /// Default configuration for a given domain: decaying steps starting at
    /// the squared diameter.
    pub fn for_domain(domain: &BoxDomain) -> Self {
        Self {
            max_iters: 2000,
            step_rule: StepRule::Decaying(domain.diameter_sq()),
            tol: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarycenterSolution {
    pub density: GridDensity,
    pub objective_trace: Vec<f64>,
    pub certificates: Vec<TransportCertificate>,
    pub converged: bool,
    pub iterations: usize,
}

/// Euclidean projection of a grid function onto
/// `{ f : f_k >= floor, sum_k f_k * cell_volume = 1 }`.
/// Exact sorting-based threshold algorithm.
pub fn project_simplex(values: &[f64], floor: f64, cell_volume: f64) -> Result<Vec<f64>> {
    let n = values.len();
    let target: f64 = 1.0 / cell_volume - floor * n as f64;
    if target < 0.0 {
        return Err(Error::InfeasibleFloor);
    }
    // shift so the constraint becomes w >= 0, sum w = target
    let w: Vec<f64> = values.iter().map(|v| v - floor).collect();
    let mut sorted = w.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - target) / (k + 1) as f64;
        if k + 1 == n || sorted[k + 1] <= t {
            tau = t;
            break;
        }
    }
    Ok(w.iter().map(|&v| floor + (v - tau).max(0.0)).collect())
}

/// Subgradient of J at f: the mean of the mu-side Kantorovich potentials of
/// the exact transport solves against each input measure (each normalized to
/// mu-mean zero), plus gamma times the penalty gradient.
pub fn subgradient(problem: &BarycenterProblem, f: &GridDensity) -> Result<Vec<f64>> {
    let mu = grid_to_discrete(f);
    let n = problem.measures.len();
    let phis: Vec<Vec<f64>> = problem
        .measures
        .par_iter()
        .map(|nu| w2_exact(&mu, nu).map(|c| c.phi))
        .collect::<Result<_>>()?;
    let mut g = vec![0.0; f.num_cells()];
    for phi in &phis {
        for (gk, &p) in g.iter_mut().zip(phi) {
            *gk += p / n as f64;
        }
    }
    if problem.gamma > 0.0 {
        let pg = problem.penalty.grad(f)?;
        for (gk, p) in g.iter_mut().zip(pg) {
            *gk += problem.gamma * p;
        }
    }
    Ok(g)
}

/// Objective value J(f). Uses the exact 1-D closed form when d = 1.
pub fn objective(problem: &BarycenterProblem, f: &GridDensity) -> Result<f64> {
    let tables = if problem.dim() == 1 {
        Some(
            problem
                .measures
                .iter()
                .map(|m| m.quantile_table())
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    objective_inner(problem, f, tables.as_deref())
}

fn objective_inner(
    problem: &BarycenterProblem,
    f: &GridDensity,
    nu_tables: Option<&[QuantileTable]>,
) -> Result<f64> {
    let n = problem.measures.len() as f64;
    let transport: f64 = match nu_tables {
        Some(tables) => {
            let qf = f.quantile_table()?;
            tables.iter().map(|t| qf.w2_sq(t)).sum::<f64>() / n
        }
        None => {
            let mu = grid_to_discrete(f);
            problem
                .measures
                .par_iter()
                .map(|nu| w2_exact(&mu, nu).map(|c| c.cost))
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum::<f64>()
                / n
        }
    };
    let pen = if problem.gamma > 0.0 {
        problem.gamma * problem.penalty.eval(f)?
    } else {
        0.0
    };
    Ok(transport + pen)
}

fn initial_density(problem: &BarycenterProblem, config: &SolverConfig) -> Result<GridDensity> {
    use rand::prelude::*;
    let uniform = GridDensity::uniform(problem.domain.clone(), problem.shape.clone());
    let floor = problem.penalty.floor();
    let vol = uniform.cell_volume();
    let values = if config.seed == 0 {
        project_simplex(uniform.values(), floor, vol)?
    } else {
        // seeded runs start from a perturbed interior point (uniqueness checks)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let perturbed: Vec<f64> = uniform
            .values()
            .iter()
            .map(|v| v * (0.25 + 1.5 * rng.gen::<f64>()))
            .collect();
        project_simplex(&perturbed, floor, vol)?
    };
    uniform.with_values(values)
}

/// Solve the penalized barycenter problem by projected subgradient descent
/// with monotone backtracking. Returns the best (last accepted) iterate.
pub fn solve(problem: &BarycenterProblem, config: &SolverConfig) -> Result<BarycenterSolution> {
    if problem.gamma <= 0.0 {
        return Err(Error::InvalidMeasure(
            "solve requires gamma > 0; use barycenter_1d_exact for the unpenalized case".into(),
        ));
    }
    let nu_tables = if problem.dim() == 1 {
        Some(
            problem
                .measures
                .iter()
                .map(|m| m.quantile_table())
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let floor = problem.penalty.floor();
    let mut f = initial_density(problem, config)?;
    let vol = f.cell_volume();
    let mut obj = objective_inner(problem, &f, nu_tables.as_deref())?;
    let mut best_f = f.clone();
    let mut best_obj = obj;
    let mut trace = vec![best_obj];
    let mut converged = false;
    let mut iterations = 0usize;
    // iterations since the last improvement of at least tol
    let mut patience = 0usize;
    const PATIENCE_LIMIT: usize = 100;

    let cells = f.num_cells();
    for t in 1..=config.max_iters {
        iterations = t;
        let g = subgradient(problem, &f)?;
        let s0 = config.step_rule.trial(t);
        let grad_step = |s: f64| -> Result<(GridDensity, f64)> {
            let stepped: Vec<f64> = f.values().iter().zip(&g).map(|(v, gk)| v - s * gk).collect();
            let candidate = f.with_values(project_simplex(&stepped, floor, vol)?)?;
            let cand_obj = objective_inner(problem, &candidate, nu_tables.as_deref())?;
            Ok((candidate, cand_obj))
        };
        // monotone backtracking from the trial step: halve while the
        // objective keeps improving, keep the best improving step seen
        let mut accepted: Option<(GridDensity, f64)> = None;
        let mut s = s0;
        for _ in 0..=30 {
            let (c, j) = grad_step(s)?;
            match &accepted {
                Some((_, best_seen)) if j >= *best_seen => break,
                _ => {}
            }
            if j < obj {
                accepted = Some((c, j));
            }
            s *= 0.5;
        }
        let grad_gain = accepted.as_ref().map_or(0.0, |(_, b)| obj - *b);
        // toward-step candidate: mix toward the vertex that puts all free
        // mass in the lowest-subgradient cell. Additive steps alone build
        // sharply concentrated solutions very slowly, but the vertex mix is a
        // blunt, asymmetric move, so it must beat the gradient step by a
        // clear margin to be taken.
        {
            let k_star = (0..cells)
                .min_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap())
                .expect("grid has at least one cell");
            let spike = 1.0 / vol - floor * (cells as f64 - 1.0);
            let need = obj - (10.0 * config.tol).max(2.0 * grad_gain);
            let mut mix_best: Option<(GridDensity, f64)> = None;
            let mut theta = 1.0_f64;
            for _ in 0..=20 {
                let mixed: Vec<f64> = f
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(k, &fv)| {
                        let vk = if k == k_star { spike } else { floor };
                        (1.0 - theta) * fv + theta * vk
                    })
                    .collect();
                let candidate = f.with_values(mixed)?;
                let cand_obj = objective_inner(problem, &candidate, nu_tables.as_deref())?;
                if cand_obj < mix_best.as_ref().map_or(need, |(_, b)| *b) {
                    mix_best = Some((candidate, cand_obj));
                }
                theta *= 0.5;
            }
            if let Some((c, j)) = mix_best {
                if j < accepted.as_ref().map_or(obj, |(_, b)| *b) {
                    accepted = Some((c, j));
                }
            }
        }
        // subgradient directions need not descend at nonsmooth points; keep
        // the current iterate there and let the decaying trial step retry
        if let Some(pair) = accepted {
            (f, obj) = pair;
        }
        if obj < best_obj - config.tol {
            patience = 0;
        } else {
            patience += 1;
        }
        if obj < best_obj {
            best_obj = obj;
            best_f = f.clone();
        }
        trace.push(best_obj);
        if patience >= PATIENCE_LIMIT {
            converged = true;
            break;
        }
    }
    let mut f = best_f;

    // terminal refinement: freeze the transport potentials at the current
    // iterate and minimize <u, h> + gamma*E(h) over the feasible densities in
    // closed form, with damping. Near the optimum the potentials are stable,
    // so these fixed-point rounds sharpen the solution well past what the
    // decaying subgradient steps reach. Only improving rounds are kept.
    const POLISH_ROUNDS: usize = 150;
    const POLISH_BETA: f64 = 0.5;
    if matches!(
        problem.penalty.kind(),
        PenaltyKind::Quadratic | PenaltyKind::NegEntropy { .. }
    ) {
        let mut obj = best_obj;
        let mut stale = 0usize;
        for _ in 0..POLISH_ROUNDS {
            let g = subgradient(problem, &f)?;
            let pg = problem.penalty.grad(&f)?;
            let ubar: Vec<f64> = g
                .iter()
                .zip(&pg)
                .map(|(gk, pk)| gk - problem.gamma * pk)
                .collect();
            let values = match problem.penalty.kind() {
                PenaltyKind::Quadratic => {
                    let target: Vec<f64> = f
                        .values()
                        .iter()
                        .zip(&ubar)
                        .map(|(fv, u)| {
                            (1.0 - POLISH_BETA) * fv + POLISH_BETA * (-u / problem.gamma)
                        })
                        .collect();
                    project_simplex(&target, floor, vol)?
                }
                PenaltyKind::NegEntropy { .. } => {
                    entropy_fixed_point(&f, &ubar, problem.gamma, floor, vol, POLISH_BETA)
                }
                PenaltyKind::SobolevAugmented { .. } => unreachable!(),
            };
            if values.iter().any(|v| !v.is_finite()) {
                break;
            }
            let candidate = f.with_values(values)?;
            let cand_obj = objective_inner(problem, &candidate, nu_tables.as_deref())?;
            if cand_obj < obj {
                f = candidate;
                obj = cand_obj;
                trace.push(obj);
                stale = 0;
            } else {
                stale += 1;
                if stale >= 10 {
                    break;
                }
            }
        }
    }

    let mu = grid_to_discrete(&f);
    let certificates = problem
        .measures
        .par_iter()
        .map(|nu| w2_exact(&mu, nu))
        .collect::<Result<Vec<_>>>()?;
    Ok(BarycenterSolution { density: f, objective_trace: trace, certificates, converged, iterations })
}

/// One damped step of the entropy fixed point `f = exp(-u/gamma)/Z` in log
/// space, followed by clip-and-renormalize against the floor constraint.
fn entropy_fixed_point(
    f: &GridDensity,
    ubar: &[f64],
    gamma: f64,
    floor: f64,
    vol: f64,
    beta: f64,
) -> Vec<f64> {
    let mixed: Vec<f64> = f
        .values()
        .iter()
        .zip(ubar)
        .map(|(fv, u)| ((1.0 - beta) * fv.ln() + beta * (-u / gamma)).min(700.0))
        .collect();
    let mmax = mixed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = mixed.iter().map(|l| (l - mmax).exp()).collect();
    // normalize total mass to 1 while pinning cells at or below the floor
    for _ in 0..60 {
        let clipped: Vec<bool> = w.iter().map(|&x| x <= floor).collect();
        let fixed_mass: f64 = clipped.iter().filter(|&&c| c).count() as f64 * floor * vol;
        let free_sum: f64 = w
            .iter()
            .zip(&clipped)
            .filter(|(_, &c)| !c)
            .map(|(x, _)| x * vol)
            .sum();
        if free_sum <= 0.0 {
            break;
        }
        let scale = (1.0 - fixed_mass) / free_sum;
        let mut newly_clipped = false;
        for (x, &c) in w.iter_mut().zip(&clipped) {
            if c {
                *x = floor;
            } else {
                *x *= scale;
                if *x <= floor {
                    newly_clipped = true;
                }
            }
        }
        if !newly_clipped {
            break;
        }
    }
    w
}

/// Exact unpenalized 1-D barycenter with uniform weights: the pointwise
/// average of the input quantile functions.
pub fn barycenter_1d_exact(measures: &[DiscreteMeasure]) -> Result<QuantileTable> {
    if measures.is_empty() {
        return Err(Error::InvalidMeasure("need at least one measure".into()));
    }
    if let Some(m) = measures.iter().find(|m| m.dim() != 1) {
        return Err(Error::NotOneDimensional(m.dim()));
    }
    let tables = measures
        .iter()
        .map(|m| m.quantile_table())
        .collect::<Result<Vec<_>>>()?;
    QuantileTable::average(&tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::validate;
    use crate::transport::w2_1d;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> BoxDomain {
        BoxDomain::unit(1)
    }

    #[test]
    fn projection_is_identity_on_feasible_points() {
        let g = GridDensity::uniform(unit(), vec![8]);
        let p = project_simplex(g.values(), 1e-6, g.cell_volume()).unwrap();
        for (a, b) in p.iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_of_constant_vector_is_uniform() {
        let vol = 1.0 / 8.0;
        let p = project_simplex(&[5.0; 8], 0.0, vol).unwrap();
        for v in p {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_infeasible_floor() {
        let vol = 1.0 / 4.0;
        assert!(matches!(
            project_simplex(&[1.0; 4], 2.0, vol),
            Err(Error::InfeasibleFloor)
        ));
    }

    /// Brute-force projection oracle: enumerate every active set.
    fn project_oracle(values: &[f64], floor: f64, vol: f64) -> Vec<f64> {
        let n = values.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0..(1u32 << n) {
            // cells in `mask` are clamped at the floor
            let free: Vec<usize> = (0..n).filter(|k| mask & (1 << k) == 0).collect();
            if free.is_empty() {
                continue;
            }
            let fixed_mass = (n - free.len()) as f64 * floor;
            let target: f64 = 1.0 / vol - fixed_mass;
            let sum_free: f64 = free.iter().map(|&k| values[k]).sum();
            let tau = (sum_free - target) / free.len() as f64;
            let mut candidate = vec![floor; n];
            let mut ok = true;
            for &k in &free {
                candidate[k] = values[k] - tau;
                if candidate[k] < floor - 1e-12 {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let dist: f64 = candidate
                .iter()
                .zip(values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if best.as_ref().map_or(true, |(d, _)| dist < *d) {
                best = Some((dist, candidate));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn projection_matches_active_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(2..=10);
            let vol = 1.0 / n as f64;
            let values: Vec<f64> = (0..n).map(|_| 4.0 * rng.gen::<f64>() - 1.0).collect();
            let floor = 0.01;
            let fast = project_simplex(&values, floor, vol).unwrap();
            let slow = project_oracle(&values, floor, vol);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "{fast:?} vs {slow:?}");
            }
            let mass: f64 = fast.iter().sum::<f64>() * vol;
            assert!((mass - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn subgradient_inequality_at_self_transport() {
        // at f with nu = f the objective is zero, and the subgradient g must
        // satisfy J(h) >= <g, h - f> for every density h
        let f = GridDensity::uniform(unit(), vec![16]);
        let nu = grid_to_discrete(&f);
        let problem = BarycenterProblem::new(
            vec![nu],
            0.0,
            Penalty::quadratic(),
            unit(),
            vec![16],
        )
        .unwrap();
        assert!(objective(&problem, &f).unwrap().abs() < 1e-12);
        let g = subgradient(&problem, &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..16).map(|_| rng.gen::<f64>() + 0.05).collect();
            let h = GridDensity::from_unnormalized(unit(), vec![16], raw).unwrap();
            let jh = objective(&problem, &h).unwrap();
            let linear: f64 = g
                .iter()
                .zip(h.values().iter().zip(f.values()))
                .map(|(gk, (hv, fv))| gk * (hv - fv))
                .sum::<f64>()
                * f.cell_volume();
            assert!(jh >= linear - 1e-10, "J(h) {jh} < linearization {linear}");
        }
    }

    #[test]
    fn small_projected_step_does_not_increase_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let measures: Vec<DiscreteMeasure> = (0..3)
            .map(|_| {
                let pts: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.gen::<f64>()]).collect();
                DiscreteMeasure::uniform_on(pts).unwrap()
            })
            .collect();
        let penalty = Penalty::entropy(1e-6).unwrap();
        let problem =
            BarycenterProblem::new(measures, 0.1, penalty, unit(), vec![32]).unwrap();
        let raw: Vec<f64> = (0..32).map(|_| 0.5 + rng.gen::<f64>()).collect();
        let f = GridDensity::from_unnormalized(unit(), vec![32], raw).unwrap();
        let j0 = objective(&problem, &f).unwrap();
        let g = subgradient(&problem, &f).unwrap();
        let s = 1e-7;
        let stepped: Vec<f64> = f.values().iter().zip(&g).map(|(v, gk)| v - s * gk).collect();
        let proj = project_simplex(&stepped, 1e-6, f.cell_volume()).unwrap();
        let j1 = objective(&problem, &f.with_values(proj).unwrap()).unwrap();
        assert!(j1 <= j0 + 1e-9, "{j1} vs {j0}");
    }

    #[test]
    fn solve_with_tiny_gamma_tracks_single_input() {
        // atoms at cell centers of the 32-cell grid
        let nu = DiscreteMeasure::new(vec![vec![8.5 / 32.0], vec![23.5 / 32.0]], vec![0.5, 0.5])
            .unwrap();
        let problem = BarycenterProblem::new(
            vec![nu.clone()],
            1e-6,
            Penalty::entropy(1e-9).unwrap(),
            unit(),
            vec![32],
        )
        .unwrap();
        let mut config = SolverConfig::for_domain(&unit());
        config.max_iters = 800;
        config.tol = 1e-9;
        let sol = solve(&problem, &config).unwrap();
        let w2 = w2_1d(&sol.density, &nu).unwrap().sqrt();
        let cell = sol.density.cell_width(0);
        assert!(w2 <= 2.5 * cell, "w2 {w2} vs cell {cell}");
        assert!(validate(&sol.density.clone().into(), &unit()).is_empty());
    }

    #[test]
    fn solve_two_diracs_concentrates_at_midpoint() {
        let measures = vec![
            DiscreteMeasure::dirac(vec![0.0]),
            DiscreteMeasure::dirac(vec![1.0]),
        ];
        let oracle = barycenter_1d_exact(&measures).unwrap();
        assert_eq!(oracle.eval(0.5), 0.5);
        let problem = BarycenterProblem::new(
            measures,
            0.01,
            Penalty::entropy(1e-6).unwrap(),
            unit(),
            vec![64],
        )
        .unwrap();
        let mut config = SolverConfig::for_domain(&unit());
        config.max_iters = 2500;
        let sol = solve(&problem, &config).unwrap();
        // mass concentrates near 0.5
        let mean: f64 = sol.density.mean()[0];
        assert!((mean - 0.5).abs() < 0.05, "mean {mean}");
        let w2 = w2_1d(&sol.density, &oracle.to_discrete().unwrap()).unwrap().sqrt();
        assert!(w2 < 0.12, "w2 {w2}");
    }

    #[test]
    fn solution_is_symmetric_for_symmetric_inputs() {
        let measures = vec![
            DiscreteMeasure::new(vec![vec![0.2], vec![0.8]], vec![0.5, 0.5]).unwrap(),
            DiscreteMeasure::new(vec![vec![0.3], vec![0.7]], vec![0.5, 0.5]).unwrap(),
        ];
        let problem = BarycenterProblem::new(
            measures,
            0.05,
            Penalty::entropy(1e-6).unwrap(),
            unit(),
            vec![64],
        )
        .unwrap();
        let mut config = SolverConfig::for_domain(&unit());
        config.max_iters = 4000;
        config.tol = 1e-9;
        let sol = solve(&problem, &config).unwrap();
        let v = sol.density.values();
        let n = v.len();
        for k in 0..n / 2 {
            assert!(
                (v[k] - v[n - 1 - k]).abs() < 1e-4,
                "asymmetry at {k}: {} vs {}",
                v[k],
                v[n - 1 - k]
            );
        }
    }

    #[test]
    fn objective_trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let measures: Vec<DiscreteMeasure> = (0..4)
            .map(|_| {
                let pts: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen::<f64>()]).collect();
                DiscreteMeasure::uniform_on(pts).unwrap()
            })
            .collect();
        let problem = BarycenterProblem::new(
            measures,
            0.1,
            Penalty::entropy(1e-6).unwrap(),
            unit(),
            vec![32],
        )
        .unwrap();
        let config = SolverConfig::for_domain(&unit());
        let sol = solve(&problem, &config).unwrap();
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn exact_1d_barycenter_of_two_point_measures() {
        let a = DiscreteMeasure::new(vec![vec![0.0], vec![2.0]], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::new(vec![vec![1.0], vec![3.0]], vec![0.5, 0.5]).unwrap();
        let bary = barycenter_1d_exact(&[a, b]).unwrap().to_discrete().unwrap();
        assert_eq!(bary.points(), &[vec![0.5], vec![2.5]]);
        assert_eq!(bary.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn exact_1d_barycenter_of_identical_inputs() {
        let m = DiscreteMeasure::new(vec![vec![0.1], vec![0.6]], vec![0.3, 0.7]).unwrap();
        let bary = barycenter_1d_exact(&[m.clone(), m.clone()]).unwrap();
        let q = m.quantile_table().unwrap();
        for k in 1..=20 {
            let t = k as f64 / 20.0;
            assert_eq!(bary.eval(t), q.eval(t));
        }
    }

    #[test]
    fn exact_1d_barycenter_beats_grid_search() {
        // grid search over Dirac locations for delta_0 and delta_1
        let measures = vec![
            DiscreteMeasure::dirac(vec![0.0]),
            DiscreteMeasure::dirac(vec![1.0]),
        ];
        let bary = barycenter_1d_exact(&measures).unwrap().to_discrete().unwrap();
        let obj = |c: &DiscreteMeasure| -> f64 {
            measures
                .iter()
                .map(|m| w2_1d(c, m).unwrap())
                .sum::<f64>()
                / 2.0
        };
        let bary_obj = obj(&bary);
        for k in 0..=100 {
            let cand = DiscreteMeasure::dirac(vec![k as f64 / 100.0]);
            assert!(bary_obj <= obj(&cand) + 1e-12);
        }
    }
}
