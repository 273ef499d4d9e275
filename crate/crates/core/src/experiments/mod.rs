//! Monte-Carlo harness for the stability bound, the bias/variance
//! convergence rates and the three-term error decomposition, at desk scale.
//!
//! Every experiment derives one RNG stream per Monte-Carlo job from the
//! model seed, so reports are bit-identical across re-runs regardless of
//! thread scheduling.

pub mod model;
pub mod report;

pub use model::{sample_empirical, RandomMeasureModel};
pub use report::{fit_loglog, ExperimentReport, ReportRow, SlopeFit};

use rayon::prelude::*;

use crate::measures::{grid_to_discrete, BoxDomain, DiscreteMeasure, GridDensity, QuantileTable};
use crate::penalties::{l2_sq_diff, Penalty, PenaltyKind};
use crate::solver::{project_simplex, solve, BarycenterProblem, SolverConfig};
use crate::transport::{assignment_distance, w2_1d};
use crate::{Error, Result};

/// Outcome of one stability-bound check (the inequality
/// `d_E <= (2/gamma) * assignment distance`, with solver slack).
#[derive(Debug, Clone, Copy)]
pub struct StabilityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn solve_collection(
    measures: &[DiscreteMeasure],
    gamma: f64,
    penalty: &Penalty,
    domain: &BoxDomain,
    shape: &[usize],
    config: &SolverConfig,
) -> Result<GridDensity> {
    let problem = BarycenterProblem::new(
        measures.to_vec(),
        gamma,
        penalty.clone(),
        domain.clone(),
        shape.to_vec(),
    )?;
    Ok(solve(&problem, config)?.density)
}

/// Check the stability bound between the barycenters of two collections.
#[allow(clippy::too_many_arguments)]
pub fn check_stability(
    nus: &[DiscreteMeasure],
    etas: &[DiscreteMeasure],
    gamma: f64,
    penalty: &Penalty,
    domain: &BoxDomain,
    shape: &[usize],
    config: &SolverConfig,
) -> Result<StabilityCheck> {
    if gamma <= 0.0 {
        return Err(Error::InvalidMeasure("stability check requires gamma > 0".into()));
    }
    if nus.len() != etas.len() {
        return Err(Error::LengthMismatch(nus.len(), etas.len()));
    }
    let f_nu = solve_collection(nus, gamma, penalty, domain, shape, config)?;
    let f_eta = solve_collection(etas, gamma, penalty, domain, shape, config)?;
    let lhs = penalty.bregman_sym(&f_nu, &f_eta)?;
    let (assign, _) = assignment_distance(nus, etas)?;
    let rhs = 2.0 / gamma * assign;
    let holds = lhs <= rhs + 10.0 * config.tol;
    Ok(StabilityCheck { lhs, rhs, holds })
}

/// The 1-D functional `K(nu) = int F(x)(1 - F(x)) / f(x) dx`, by midpoint
/// quadrature over grid cells.
pub fn k_functional(nu: &GridDensity) -> Result<f64> {
    if nu.dim() != 1 {
        return Err(Error::NotOneDimensional(nu.dim()));
    }
    let h = nu.cell_width(0);
    let mut cum = 0.0;
    let mut total = 0.0;
    for &f in nu.values() {
        let mass = f * nu.cell_volume();
        let f_mid = cum + 0.5 * mass;
        let numer = f_mid * (1.0 - f_mid);
        if f <= 0.0 {
            if numer > 1e-12 {
                return Err(Error::OutsideDomain(
                    "density vanishes inside its support; K(nu) is infinite".into(),
                ));
            }
        } else {
            total += numer / f * h;
        }
        cum += mass;
    }
    Ok(total)
}

fn empirical_seed(model: &RandomMeasureModel, stream: u64) -> u64 {
    model.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const STREAM_REFERENCE: u64 = 1 << 60;
const STREAM_VARIANCE: u64 = 2 << 60;
const STREAM_STABILITY: u64 = 3 << 60;
const STREAM_DECOMPOSE: u64 = 4 << 60;

/// Randomized sweep of the stability bound: `instances` independent 1-D
/// collections per perturbation scale, each checked against the stability
/// inequality. Row metrics: `lhs`, `rhs`, `holds` (1.0/0.0).
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    model: &RandomMeasureModel,
    n: usize,
    gamma: f64,
    penalty: &Penalty,
    scales: &[f64],
    instances: usize,
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    use rand::Rng;
    let domain = model.domain().clone();
    let shape = model.shape().to_vec();
    let jobs: Vec<(usize, usize)> = scales
        .iter()
        .enumerate()
        .flat_map(|(si, _)| (0..instances).map(move |r| (si, r)))
        .collect();
    let results: Vec<(usize, usize, StabilityCheck)> = jobs
        .par_iter()
        .map(|&(si, r)| {
            let stream = STREAM_STABILITY | (si as u64) << 32 | r as u64;
            let densities = model.sample_measures(stream, n);
            let nus: Vec<DiscreteMeasure> = densities.iter().map(grid_to_discrete).collect();
            let mut rng = model.rng(stream | (1 << 59));
            let scale = scales[si];
            let etas: Vec<DiscreteMeasure> = nus
                .iter()
                .map(|m| {
                    let points: Vec<Vec<f64>> = m
                        .points()
                        .iter()
                        .map(|p| {
                            p.iter()
                                .enumerate()
                                .map(|(k, &x)| {
                                    let jitter = rng.gen_range(-scale..=scale);
                                    (x + jitter)
                                        .clamp(domain.lower()[k], domain.upper()[k])
                                })
                                .collect()
                        })
                        .collect();
                    DiscreteMeasure::new(points, m.weights().to_vec())
                })
                .collect::<Result<_>>()?;
            let check = check_stability(&nus, &etas, gamma, penalty, &domain, &shape, config)?;
            Ok((si, r, check))
        })
        .collect::<Result<_>>()?;
    let mut sorted = results;
    sorted.sort_by_key(|&(si, r, _)| (si, r));
    let mut report = ExperimentReport::new();
    for (si, r, check) in sorted {
        let scale_tag = (scales[si] * 1e9) as usize;
        report.push("stability", n, scale_tag, gamma, r, "lhs", check.lhs);
        report.push("stability", n, scale_tag, gamma, r, "rhs", check.rhs);
        report.push("stability", n, scale_tag, gamma, r, "holds", f64::from(check.holds));
    }
    Ok(report)
}

/// Variance-rate experiment: the Bregman divergence between the empirical
/// penalized barycenter at sample size `n` and a large-sample proxy of the
/// population barycenter, with the fitted log-log slope against `n`.
pub fn rate_variance(
    model: &RandomMeasureModel,
    gamma: f64,
    penalty: &Penalty,
    n_list: &[usize],
    replicates: usize,
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    if n_list.is_empty() {
        return Err(Error::InvalidMeasure("empty n list".into()));
    }
    let domain = model.domain().clone();
    let shape = model.shape().to_vec();
    let n_ref = 10 * n_list.iter().copied().max().unwrap();
    let reference: Vec<DiscreteMeasure> = model
        .sample_measures(STREAM_REFERENCE, n_ref)
        .iter()
        .map(grid_to_discrete)
        .collect();
    let f_ref = solve_collection(&reference, gamma, penalty, &domain, &shape, config)?;

    let jobs: Vec<(usize, usize)> = n_list
        .iter()
        .enumerate()
        .flat_map(|(ni, _)| (0..replicates).map(move |r| (ni, r)))
        .collect();
    let results: Vec<(usize, usize, f64)> = jobs
        .par_iter()
        .map(|&(ni, r)| {
            let n = n_list[ni];
            let stream = STREAM_VARIANCE | (ni as u64) << 32 | r as u64;
            let measures: Vec<DiscreteMeasure> = model
                .sample_measures(stream, n)
                .iter()
                .map(grid_to_discrete)
                .collect();
            let f = solve_collection(&measures, gamma, penalty, &domain, &shape, config)?;
            let d = penalty.bregman_sym(&f, &f_ref)?;
            Ok((ni, r, d))
        })
        .collect::<Result<_>>()?;
    let mut sorted = results;
    sorted.sort_by_key(|&(ni, r, _)| (ni, r));

    let mut report = ExperimentReport::new();
    for &(ni, r, d) in &sorted {
        report.push("rate-variance", n_list[ni], 0, gamma, r, "d_e_sq", d);
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = n_list
        .iter()
        .enumerate()
        .map(|(ni, _)| {
            let vals: Vec<f64> = sorted
                .iter()
                .filter(|&&(i, _, _)| i == ni)
                .map(|&(_, _, d)| d)
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    for (ni, &mean) in ys.iter().enumerate() {
        report.push("rate-variance", n_list[ni], 0, gamma, 0, "mean_d_e_sq", mean);
    }
    let fit = fit_loglog(&xs, &ys)?;
    report.push("rate-variance", 0, 0, gamma, 0, "slope", fit.slope);
    report.push("rate-variance", 0, 0, gamma, 0, "slope_stderr", fit.stderr);
    Ok(report)
}

/// Bias experiment: distance of the penalized barycenter to the
/// unpenalized quantile-averaging oracle along a descending gamma list.
pub fn rate_bias(
    model: &RandomMeasureModel,
    gamma_list: &[f64],
    penalty: &Penalty,
    sample_size: usize,
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    if gamma_list.is_empty() {
        return Err(Error::InvalidMeasure("empty gamma list".into()));
    }
    let domain = model.domain().clone();
    let shape = model.shape().to_vec();
    let densities = model.sample_measures(STREAM_REFERENCE | 1, sample_size);
    let measures: Vec<DiscreteMeasure> = densities.iter().map(grid_to_discrete).collect();
    let tables: Vec<QuantileTable> = densities
        .iter()
        .map(|d| d.quantile_table())
        .collect::<Result<_>>()?;
    let oracle = QuantileTable::average(&tables)?;
    // grid projection of the oracle, lifted to the penalty domain
    let f0_raw = oracle.to_grid_density(&domain, shape[0])?;
    let f0_vals = project_simplex(f0_raw.values(), penalty.floor(), f0_raw.cell_volume())?;
    let f0 = f0_raw.with_values(f0_vals)?;
    let e_oracle = penalty.eval(&f0)?;

    let solutions: Vec<(usize, GridDensity)> = gamma_list
        .par_iter()
        .enumerate()
        .map(|(gi, &gamma)| {
            let f = solve_collection(&measures, gamma, penalty, &domain, &shape, config)?;
            Ok((gi, f))
        })
        .collect::<Result<_>>()?;
    let mut sorted = solutions;
    sorted.sort_by_key(|&(gi, _)| gi);

    let mut report = ExperimentReport::new();
    for (gi, f) in sorted {
        let gamma = gamma_list[gi];
        let w2 = w2_1d(&f, &oracle)?.max(0.0).sqrt();
        let de = penalty.bregman_nonsym(&f, &f0)?;
        let e_sol = penalty.eval(&f)?;
        report.push("rate-bias", sample_size, 0, gamma, 0, "w2_to_oracle", w2);
        report.push("rate-bias", sample_size, 0, gamma, 0, "d_e_nonsym", de);
        report.push("rate-bias", sample_size, 0, gamma, 0, "penalty_solution", e_sol);
        report.push("rate-bias", sample_size, 0, gamma, 0, "penalty_oracle", e_oracle);
    }
    Ok(report)
}

/// Three-term error decomposition: stability (finite p), variance (finite
/// n) and penalization bias, with the per-batch inequality and the 1-D
/// stability bound. Requires the Sobolev-augmented penalty.
#[allow(clippy::too_many_arguments)]
pub fn decompose_error(
    model: &RandomMeasureModel,
    n: usize,
    p_list: &[usize],
    gamma: f64,
    penalty: &Penalty,
    replicates: usize,
    config: &SolverConfig,
) -> Result<ExperimentReport> {
    if !matches!(penalty.kind(), PenaltyKind::SobolevAugmented { .. }) {
        return Err(Error::InvalidMeasure(
            "error decomposition requires the Sobolev-augmented penalty".into(),
        ));
    }
    let domain = model.domain().clone();
    let shape = model.shape().to_vec();

    // population proxies: gamma-penalized reference barycenter and the
    // unpenalized quantile-averaging oracle, both on the same large sample
    let n_ref = 10 * n;
    let ref_densities = model.sample_measures(STREAM_REFERENCE | 2, n_ref);
    let ref_measures: Vec<DiscreteMeasure> = ref_densities.iter().map(grid_to_discrete).collect();
    let f_ref = solve_collection(&ref_measures, gamma, penalty, &domain, &shape, config)?;
    let tables: Vec<QuantileTable> = ref_densities
        .iter()
        .map(|d| d.quantile_table())
        .collect::<Result<_>>()?;
    let oracle = QuantileTable::average(&tables)?;
    let f0_raw = oracle.to_grid_density(&domain, shape[0])?;
    let f0_vals = project_simplex(f0_raw.values(), penalty.floor(), f0_raw.cell_volume())?;
    let f0 = f0_raw.with_values(f0_vals)?;
    let bias = penalty.bregman_nonsym(&f_ref, &f0)?;

    struct RepOut {
        rep: usize,
        var: f64,
        k_mean: f64,
        per_p: Vec<(usize, f64, f64)>, // (p, stab, lhs_l2)
    }

    let results: Vec<RepOut> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let stream = STREAM_DECOMPOSE | (rep as u64) << 32;
            let true_densities = model.sample_measures(stream, n);
            let true_measures: Vec<DiscreteMeasure> =
                true_densities.iter().map(grid_to_discrete).collect();
            let f_true = solve_collection(&true_measures, gamma, penalty, &domain, &shape, config)?;
            let var = penalty.bregman_sym(&f_true, &f_ref)?;
            let k_mean = true_densities
                .iter()
                .map(k_functional)
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum::<f64>()
                / n as f64;
            let mut per_p = Vec::with_capacity(p_list.len());
            for (pi, &p) in p_list.iter().enumerate() {
                let empirical: Vec<DiscreteMeasure> = true_densities
                    .iter()
                    .enumerate()
                    .map(|(i, nu)| {
                        let seed =
                            empirical_seed(model, stream | (pi as u64) << 16 | i as u64);
                        sample_empirical(nu, p, seed)
                    })
                    .collect::<Result<_>>()?;
                let f_hat = solve_collection(&empirical, gamma, penalty, &domain, &shape, config)?;
                let stab = penalty.bregman_sym(&f_hat, &f_true)?;
                let lhs = l2_sq_diff(&f_hat, &f0)?;
                per_p.push((p, stab, lhs));
            }
            Ok(RepOut { rep, var, k_mean, per_p })
        })
        .collect::<Result<_>>()?;
    let mut sorted = results;
    sorted.sort_by_key(|r| r.rep);

    let mut report = ExperimentReport::new();
    for out in &sorted {
        report.push("decompose", n, 0, gamma, out.rep, "var", out.var);
        report.push("decompose", n, 0, gamma, out.rep, "k_mean", out.k_mean);
        for &(p, stab, lhs) in &out.per_p {
            report.push("decompose", n, p, gamma, out.rep, "stab", stab);
            report.push("decompose", n, p, gamma, out.rep, "lhs_l2", lhs);
        }
    }
    report.push("decompose", n, 0, gamma, 0, "bias", bias);

    // per-batch summaries: the three-term inequality and the 1-D stability
    // bound of the K-functional, plus the stability slope in p
    let reps = replicates as f64;
    let var_sq_mean = sorted.iter().map(|o| o.var * o.var).sum::<f64>() / reps;
    let k_mean_all = sorted.iter().map(|o| o.k_mean).sum::<f64>() / reps;
    let mut stab_means = Vec::with_capacity(p_list.len());
    for (pi, &p) in p_list.iter().enumerate() {
        let stabs: Vec<f64> = sorted.iter().map(|o| o.per_p[pi].1).collect();
        let lhs_mean = sorted.iter().map(|o| o.per_p[pi].2).sum::<f64>() / reps;
        let stab_mean = stabs.iter().sum::<f64>() / reps;
        let stab_sq_mean = stabs.iter().map(|s| s * s).sum::<f64>() / reps;
        let rhs = 3.0 * stab_sq_mean.sqrt() + 3.0 * var_sq_mean.sqrt() + 6.0 * bias;
        let kfun_bound = 8.0 / (gamma * gamma) * k_mean_all / (p as f64 + 1.0);
        report.push("decompose", n, p, gamma, 0, "mean_stab", stab_mean);
        report.push("decompose", n, p, gamma, 0, "mean_lhs_l2", lhs_mean);
        report.push("decompose", n, p, gamma, 0, "ineq_rhs", rhs);
        report.push("decompose", n, p, gamma, 0, "ineq_holds", f64::from(lhs_mean <= rhs));
        report.push("decompose", n, p, gamma, 0, "kfun_bound", kfun_bound);
        report.push(
            "decompose",
            n,
            p,
            gamma,
            0,
            "kfun_holds",
            f64::from(stab_sq_mean <= kfun_bound),
        );
        stab_means.push(stab_mean);
    }
    let xs: Vec<f64> = p_list.iter().map(|&p| p as f64).collect();
    let fit = fit_loglog(&xs, &stab_means)?;
    report.push("decompose", n, 0, gamma, 0, "stab_slope", fit.slope);
    report.push("decompose", n, 0, gamma, 0, "stab_slope_stderr", fit.stderr);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_functional_of_uniform() {
        let nu = GridDensity::uniform(BoxDomain::unit(1), vec![256]);
        let k = k_functional(&nu).unwrap();
        // closed form: int x(1-x) dx = 1/6
        assert!((k - 1.0 / 6.0).abs() < 1e-4, "{k}");
    }

    #[test]
    fn k_functional_symmetric_density() {
        let model = RandomMeasureModel::default_1d(128, 5);
        let nu = &model.base;
        // integrand F(1-F)/f symmetric about the median for a symmetric density
        let h = nu.cell_width(0);
        let mut cum = 0.0;
        let mut integrand = Vec::new();
        for &f in nu.values() {
            let mass = f * nu.cell_volume();
            let fm = cum + 0.5 * mass;
            integrand.push(fm * (1.0 - fm) / f);
            cum += mass;
        }
        let m = integrand.len();
        for k in 0..m / 2 {
            let rel = (integrand[k] - integrand[m - 1 - k]).abs()
                / integrand[k].abs().max(1e-12);
            assert!(rel < 1e-6, "asymmetry at {k}: rel {rel}");
        }
        let _ = h;
    }

    #[test]
    fn k_functional_grid_refinement_self_consistency() {
        let coarse = RandomMeasureModel::default_1d(128, 0);
        let fine = RandomMeasureModel::default_1d(256, 0);
        let k1 = k_functional(&coarse.base).unwrap();
        let k2 = k_functional(&fine.base).unwrap();
        assert!((k1 - k2).abs() / k2 < 0.01, "{k1} vs {k2}");
    }

    #[test]
    fn stability_holds_for_identical_collections() {
        let model = RandomMeasureModel::default_1d(32, 17);
        let nus: Vec<DiscreteMeasure> = model
            .sample_measures(1, 3)
            .iter()
            .map(grid_to_discrete)
            .collect();
        let penalty = Penalty::entropy(1e-6).unwrap();
        let mut config = SolverConfig::for_domain(model.domain());
        config.max_iters = 300;
        config.tol = 1e-6;
        let check = check_stability(
            &nus,
            &nus,
            0.1,
            &penalty,
            model.domain(),
            model.shape(),
            &config,
        )
        .unwrap();
        assert!(check.rhs < 1e-10);
        assert!(check.holds, "lhs {} rhs {}", check.lhs, check.rhs);
    }

    #[test]
    fn reports_are_deterministic() {
        let model = RandomMeasureModel::default_1d(32, 23);
        let penalty = Penalty::entropy(1e-6).unwrap();
        let mut config = SolverConfig::for_domain(model.domain());
        config.max_iters = 150;
        config.tol = 1e-6;
        let run = || rate_variance(&model, 0.1, &penalty, &[2, 4], 3, &config).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.rows, b.rows);
    }
}
