//! Subcommand implementations and the exit-code mapping.

use std::path::{Path, PathBuf};
use std::sync::Once;
use std::time::Instant;

use clap::Parser;
use wbary_core::experiments::model::{sample_empirical, RandomMeasureModel};
use wbary_core::experiments::{decompose_error, rate_bias, rate_variance, stability_sweep};
use wbary_core::io::{format_f64, CertificateJson, MeasureJson, SolutionJson};
use wbary_core::measures::BoxDomain;
use wbary_core::transport::w2_exact;
use wbary_core::{
    grid_to_discrete, solver, validate, BarycenterProblem, DiscreteMeasure, GridDensity, Measure,
    Penalty,
};

use crate::cli::{BregmanKind, Cli, Command, ExperimentCmd, PenaltyArg, W2Method};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path, read_manifest, sha256_file, write_manifest};

pub fn main_with(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::usage(e.to_string().lines().next().unwrap_or("bad arguments"));
            err.report();
            return 1;
        }
    };
    init_threads(cli.threads);
    match dispatch(&cli.command, &argv[1..]) {
        Ok(()) => 0,
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}

fn init_threads(flag: Option<usize>) {
    static POOL: Once = Once::new();
    POOL.call_once(|| {
        let threads = flag.or_else(|| {
            std::env::var("WBARY_THREADS").ok().and_then(|v| v.parse().ok())
        });
        if let Some(t) = threads.filter(|&t| t > 0) {
            // ignore failure: a pool may already exist in test harnesses
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    });
}

pub fn dispatch(command: &Command, argv: &[String]) -> CliResult<()> {
    let started = Instant::now();
    match command {
        Command::W2 { mu, nu, method, out } => cmd_w2(mu, nu, *method, out.as_deref(), argv, started),
        Command::Barycenter {
            measures,
            gamma,
            penalty,
            alpha,
            k,
            grid,
            lo,
            hi,
            iters,
            tol,
            seed,
            out,
        } => cmd_barycenter(
            measures, *gamma, *penalty, *alpha, *k, *grid, *lo, *hi, *iters, *tol, *seed, out,
            argv, started,
        ),
        Command::Bregman { f, g, penalty, alpha, k, kind } => {
            cmd_bregman(f, g, *penalty, *alpha, *k, *kind)
        }
        Command::Experiment { which } => cmd_experiment(which, argv, started),
        Command::Sample { nu, p, seed, out } => cmd_sample(nu, *p, *seed, out, argv, started),
        Command::Validate { measure, lo, hi } => cmd_validate(measure, *lo, *hi),
        Command::Replay { manifest } => cmd_replay(manifest),
    }
}

fn load_measure(path: &Path) -> CliResult<Measure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::usage_at(format!("cannot read measure: {e}"), path.display().to_string())
    })?;
    let json: MeasureJson = serde_json::from_str(&text).map_err(|e| {
        CliError::usage_at(format!("malformed measure JSON: {e}"), path.display().to_string())
    })?;
    json.into_measure().map_err(|e| {
        CliError::usage_at(format!("invalid measure: {e}"), path.display().to_string())
    })
}

fn to_discrete(measure: &Measure) -> DiscreteMeasure {
    match measure {
        Measure::Discrete(m) => m.clone(),
        Measure::Grid(g) => grid_to_discrete(g),
    }
}

fn require_grid(measure: Measure, path: &Path) -> CliResult<GridDensity> {
    match measure {
        Measure::Grid(g) => Ok(g),
        Measure::Discrete(_) => Err(CliError::usage_at(
            "expected a grid-schema measure",
            path.display().to_string(),
        )),
    }
}

fn penalty_from(kind: PenaltyArg, alpha: f64, k: usize) -> CliResult<Penalty> {
    Ok(match kind {
        PenaltyArg::Quadratic => Penalty::quadratic(),
        PenaltyArg::Entropy => Penalty::entropy(alpha)?,
        PenaltyArg::Sobolev => Penalty::sobolev(k, alpha)?,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    std::fs::write(path, text).map_err(|e| {
        CliError::usage_at(format!("cannot write output: {e}"), path.display().to_string())
    })
}

fn cmd_w2(
    mu_path: &Path,
    nu_path: &Path,
    method: W2Method,
    out: Option<&Path>,
    argv: &[String],
    started: Instant,
) -> CliResult<()> {
    let mu = load_measure(mu_path)?;
    let nu = load_measure(nu_path)?;
    let cert = match method {
        W2Method::Lp => {
            let c = w2_exact(&to_discrete(&mu), &to_discrete(&nu))?;
            CertificateJson::from(&c)
        }
        W2Method::Quantile => {
            let qa = mu.quantile_table()?;
            let qb = nu.quantile_table()?;
            CertificateJson { cost: qa.w2_sq(&qb), plan: Vec::new(), phi: Vec::new(), psi: Vec::new() }
        }
    };
    println!("cost {}", format_f64(cert.cost));
    if let Some(out) = out {
        write_json(out, &cert)?;
        write_manifest(argv, None, 0, started, out, &[out.to_path_buf()])?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_barycenter(
    measures_dir: &Path,
    gamma: f64,
    penalty: PenaltyArg,
    alpha: f64,
    k: usize,
    grid: usize,
    lo: f64,
    hi: f64,
    iters: usize,
    tol: f64,
    seed: u64,
    out: &Path,
    argv: &[String],
    started: Instant,
) -> CliResult<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(measures_dir)
        .map_err(|e| {
            CliError::usage_at(
                format!("cannot read measures directory: {e}"),
                measures_dir.display().to_string(),
            )
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::usage_at(
            "no .json measure files in directory",
            measures_dir.display().to_string(),
        ));
    }
    let measures: Vec<DiscreteMeasure> = paths
        .iter()
        .map(|p| load_measure(p).map(|m| to_discrete(&m)))
        .collect::<CliResult<_>>()?;

    let d = measures[0].dim();
    let domain = BoxDomain::new(vec![lo; d], vec![hi; d])?;
    let problem = BarycenterProblem::new(
        measures,
        gamma,
        penalty_from(penalty, alpha, k)?,
        domain.clone(),
        vec![grid; d],
    )?;
    let mut config = wbary_core::SolverConfig::for_domain(&domain);
    config.max_iters = iters;
    config.tol = tol;
    config.seed = seed;
    let solution = solver::solve(&problem, &config)?;

    let objective = *solution.objective_trace.last().expect("trace is nonempty");
    let json = SolutionJson {
        density: MeasureJson::from_measure(&Measure::Grid(solution.density.clone())),
        converged: solution.converged,
        iterations: solution.iterations,
        objective,
    };
    write_json(out, &json)?;

    let trace_path = {
        let mut s = out.as_os_str().to_os_string();
        s.push(".trace.csv");
        PathBuf::from(s)
    };
    let mut w = csv::Writer::from_path(&trace_path).map_err(|e| {
        CliError::usage_at(format!("cannot write trace: {e}"), trace_path.display().to_string())
    })?;
    w.write_record(["iter", "objective"]).and_then(|()| {
        solution.objective_trace.iter().enumerate().try_for_each(|(i, &v)| {
            w.write_record([i.to_string(), format_f64(v)])
        })
    }).and_then(|()| w.flush().map_err(csv::Error::from)).map_err(|e| {
        CliError::usage_at(format!("cannot write trace: {e}"), trace_path.display().to_string())
    })?;

    write_manifest(argv, None, seed, started, out, &[out.to_path_buf(), trace_path])?;
    println!(
        "objective {} converged {} iterations {}",
        format_f64(objective),
        solution.converged,
        solution.iterations
    );
    if !solution.converged {
        return Err(CliError::numerical(format!(
            "did not converge within {iters} iterations (partial solution written)"
        )));
    }
    Ok(())
}

fn cmd_bregman(
    f_path: &Path,
    g_path: &Path,
    penalty: PenaltyArg,
    alpha: f64,
    k: usize,
    kind: BregmanKind,
) -> CliResult<()> {
    let f = require_grid(load_measure(f_path)?, f_path)?;
    let g = require_grid(load_measure(g_path)?, g_path)?;
    let pen = penalty_from(penalty, alpha, k)?;
    let value = match kind {
        BregmanKind::Sym => pen.bregman_sym(&f, &g)?,
        BregmanKind::Nonsym => pen.bregman_nonsym(&f, &g)?,
    };
    println!("{}", format_f64(value));
    Ok(())
}

fn cmd_experiment(which: &ExperimentCmd, argv: &[String], started: Instant) -> CliResult<()> {
    let (config_path, out) = match which {
        ExperimentCmd::Stability { config, out }
        | ExperimentCmd::RateVariance { config, out }
        | ExperimentCmd::RateBias { config, out }
        | ExperimentCmd::Decompose { config, out } => (config.as_path(), out.as_path()),
    };
    let cfg = ExperimentConfig::load(config_path)?;
    let model = RandomMeasureModel::default_1d(cfg.grid, cfg.seed);
    let penalty = cfg.penalty()?;
    let solver_cfg = cfg.solver_config(model.domain());

    let report = match which {
        ExperimentCmd::Stability { .. } => stability_sweep(
            &model,
            cfg.n,
            cfg.gamma,
            &penalty,
            &cfg.scales,
            cfg.instances,
            &solver_cfg,
        )?,
        ExperimentCmd::RateVariance { .. } => rate_variance(
            &model,
            cfg.gamma,
            &penalty,
            &cfg.n_list,
            cfg.replicates,
            &solver_cfg,
        )?,
        ExperimentCmd::RateBias { .. } => {
            rate_bias(&model, &cfg.gamma_list, &penalty, cfg.sample_size, &solver_cfg)?
        }
        ExperimentCmd::Decompose { .. } => decompose_error(
            &model,
            cfg.n,
            &cfg.p_list,
            cfg.gamma,
            &penalty,
            cfg.replicates,
            &solver_cfg,
        )?,
    };

    let file = std::fs::File::create(out).map_err(|e| {
        CliError::usage_at(format!("cannot write report: {e}"), out.display().to_string())
    })?;
    report.write_csv(file).map_err(|e| {
        CliError::usage_at(format!("cannot write report: {e}"), out.display().to_string())
    })?;
    write_manifest(argv, Some(config_path), cfg.seed, started, out, &[out.to_path_buf()])?;
    println!("rows {}", report.rows.len());
    Ok(())
}

fn cmd_sample(
    nu_path: &Path,
    p: usize,
    seed: u64,
    out: &Path,
    argv: &[String],
    started: Instant,
) -> CliResult<()> {
    if p == 0 {
        return Err(CliError::usage("sample size p must be at least 1"));
    }
    let nu = require_grid(load_measure(nu_path)?, nu_path)?;
    let empirical = sample_empirical(&nu, p, seed)?;
    write_json(out, &MeasureJson::from_measure(&Measure::Discrete(empirical)))?;
    write_manifest(argv, None, seed, started, out, &[out.to_path_buf()])?;
    Ok(())
}

fn cmd_validate(path: &Path, lo: f64, hi: f64) -> CliResult<()> {
    let measure = load_measure(path)?;
    let domain = BoxDomain::new(vec![lo; measure.dim()], vec![hi; measure.dim()])?;
    let violations = validate(&measure, &domain);
    if violations.is_empty() {
        println!("valid");
        Ok(())
    } else {
        Err(CliError::usage_at(violations.join("; "), path.display().to_string()))
    }
}

fn cmd_replay(manifest: &Path) -> CliResult<()> {
    let recorded = read_manifest(manifest)?;
    let out_flag = recorded
        .argv
        .iter()
        .position(|a| a == "--out")
        .ok_or_else(|| CliError::usage("manifest has no --out argument to rebase"))?;
    let old_out = recorded
        .argv
        .get(out_flag + 1)
        .cloned()
        .ok_or_else(|| CliError::usage("manifest --out has no value"))?;

    let scratch = std::env::temp_dir().join(format!(
        "wbary-replay-{}-{}",
        std::process::id(),
        recorded.config_sha256.get(..12).unwrap_or("run")
    ));
    std::fs::create_dir_all(&scratch).map_err(|e| {
        CliError::usage_at(format!("cannot create scratch dir: {e}"), scratch.display().to_string())
    })?;
    let file_name = Path::new(&old_out)
        .file_name()
        .ok_or_else(|| CliError::usage("manifest --out has no file name"))?;
    let new_out = scratch.join(file_name).display().to_string();

    let mut argv = recorded.argv.clone();
    argv[out_flag + 1] = new_out.clone();
    let full: Vec<String> =
        std::iter::once("wbary".to_string()).chain(argv.iter().cloned()).collect();
    let cli = Cli::try_parse_from(&full)
        .map_err(|e| CliError::usage(format!("manifest argv does not parse: {e}")))?;
    // a recorded non-convergent run still writes its outputs; only usage
    // errors abort the replay
    if let Err(e @ CliError::Usage { .. }) = dispatch(&cli.command, &argv) {
        return Err(e);
    }

    let mut mismatches = 0usize;
    for record in &recorded.outputs {
        let replayed = record.path.replacen(&old_out, &new_out, 1);
        let hash = sha256_file(Path::new(&replayed))?;
        let ok = hash == record.sha256;
        println!("{} {}", if ok { "match" } else { "mismatch" }, record.path);
        if !ok {
            mismatches += 1;
        }
    }
    // the replayed run also wrote a manifest into the scratch dir; it is not
    // compared because wall time legitimately differs
    let _ = std::fs::remove_file(manifest_path(Path::new(&new_out)));
    if mismatches > 0 {
        Err(CliError::numerical(format!("{mismatches} outputs differ from the manifest")))
    } else {
        Ok(())
    }
}
