//! `wbary`: exact Wasserstein distances, penalized barycenters, Bregman
//! diagnostics and deterministic rate experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, missing or malformed
//! input), 2 numerical failure (non-convergence). Every failure prints a
//! single machine-parsable JSON line on stderr.

mod cli;
mod config;
mod error;
mod manifest;
mod run;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(run::main_with(&argv));
}
