use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinrho::io::{read_system, spectrum_report, SpectrumReport};
use spinrho::rational::{format_coefficient, format_rational};
use spinrho::sum_rules::{torque_constant, torque_sum_rule};
use spinrho::total_spin::{coefficients_for_spin, eigen_residual, projector_check, spin_ladder};
use spinrho::{DenseLimit, Error};

#[derive(Parser)]
#[command(name = "spinrho", version, about = "Density-matrix eigenproblems for Heisenberg spin-1/2 clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve H ρ = E ρ in the invariant basis and list the levels
    Spectrum(SpectrumArgs),
    /// Coefficients of the total-spin projectors
    TotalSpin(TotalSpinArgs),
    /// Thermal spin-torque sum rule residuals
    SumRule(SumRuleArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// System file (TOML)
    #[arg(long)]
    input: PathBuf,
    /// Clustering and constraint tolerance, relative to the spectral radius
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Cross-check against dense diagonalization (default when N is within the dense limit)
    #[arg(long, overrides_with = "no_oracle")]
    oracle: bool,
    #[arg(long)]
    no_oracle: bool,
    /// Write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct TotalSpinArgs {
    #[arg(long)]
    n: usize,
    /// Total spin, e.g. 1, 3/2 or 1.5
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    spin: Option<String>,
    /// Every spin on the ladder
    #[arg(long)]
    all: bool,
    /// Compare with dense projectors
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SumRuleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Inverse temperatures, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1")]
    beta: Vec<f64>,
    #[arg(long, conflicts_with = "all_sites")]
    site: Option<usize>,
    #[arg(long)]
    all_sites: bool,
}

enum Failure {
    Input(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Check(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::TotalSpin(a) => total_spin(a),
        Command::SumRule(a) => sum_rule(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn label(pairs: &[[usize; 2]]) -> String {
    if pairs.is_empty() {
        "0".into()
    } else {
        pairs.iter().map(|[i, j]| format!("({i},{j})")).collect()
    }
}

fn spectrum(a: SpectrumArgs) -> Result<(), Failure> {
    let sys = read_system(&a.input)?;
    let limit = DenseLimit::from_env()?;
    let oracle = if a.no_oracle {
        None
    } else if a.oracle || limit.check(sys.n_spins()).is_ok() {
        Some(limit)
    } else {
        None
    };
    let report = spectrum_report(&sys, a.tol, oracle)?;
    print_spectrum(&report);
    if let Some(path) = &a.json {
        std::fs::write(path, report.to_json())
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    match report.oracle_ok {
        Some(false) => Err(Failure::Check(report.oracle_messages.join("; "))),
        _ => Ok(()),
    }
}

fn print_spectrum(r: &SpectrumReport) {
    println!("N = {}, basis size {}, {} levels", r.n_spins, r.basis_size, r.levels.len());
    let oracle = r.oracle_ok.is_some();
    if oracle {
        println!("{:>16} {:>8} {:>8} {:>8} {:>11} {:>11}", "energy", "reduced", "family", "d_E", "match err", "min eig");
    } else {
        println!("{:>16} {:>8} {:>8} {:>8}", "energy", "reduced", "family", "d_E");
    }
    for level in &r.levels {
        let d = level.dense_dimension_estimate.map_or("-".into(), |d| format!("{d:.3}"));
        print!("{:>16.10} {:>8} {:>8} {:>8}", level.energy, level.multiplicity_in_reduced_space, level.family_dimension, d);
        if let Some(o) = &level.oracle {
            print!(" {:>11.2e} {:>11.2e}", o.spectrum_match_error, o.positivity_min_eigenvalue);
        }
        println!();
        if let Some(g) = level.solutions.iter().find(|s| s.g_invariant) {
            let coeffs: Vec<String> = g
                .coeffs
                .iter()
                .map(|c| format!("{}={}", label(&c.label), format_coefficient(c.value)))
                .collect();
            println!("    G-invariant: {}", coeffs.join(" "));
        }
    }
    for rej in &r.rejected {
        println!(
            "rejected: E = {:.10} (reduced multiplicity {}, constraint residual {:.3e})",
            rej.energy, rej.multiplicity_in_reduced_space, rej.min_constraint_residual
        );
    }
    if let Some(ok) = r.oracle_ok {
        println!("dense cross-check: {}", if ok { "ok" } else { "MISMATCH" });
        for m in &r.oracle_messages {
            println!("  {m}");
        }
    }
}

fn parse_spin(s: &str) -> Result<f64, Failure> {
    let bad = || Failure::Input(format!("cannot parse spin '{s}'"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn spin_label(s: f64) -> String {
    format_rational(s, 1e-12).unwrap_or_else(|| s.to_string())
}

fn total_spin(a: TotalSpinArgs) -> Result<(), Failure> {
    let spins = match &a.spin {
        Some(s) => vec![parse_spin(s)?],
        None => spin_ladder(a.n),
    };
    let limit = DenseLimit::from_env()?;
    let mut failures = Vec::new();
    for s in spins {
        let op = coefficients_for_spin(a.n, s)?;
        let res = eigen_residual(&op, s)?;
        println!("S = {} (λ = {}), eigen residual {:.2e}", spin_label(s), spin_label(s * (s + 1.0)), res);
        for (m, v) in op.coeffs().iter().enumerate() {
            println!("  a_{m} = {}", format_coefficient(*v));
        }
        if res > 1e-9 {
            failures.push(format!("S = {}: eigen residual {res:.2e}", spin_label(s)));
        }
        if a.check {
            let c = projector_check(&op, s, limit)?;
            println!(
                "  dense check: trace {:.6}, rank {}, idempotency error {:.2e}, projector error {:.2e}",
                c.trace, c.rank, c.idempotency_error, c.projector_error
            );
            if c.idempotency_error > 1e-9 || c.projector_error > 1e-9 {
                failures.push(format!("S = {}: dense projector check", spin_label(s)));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("; ")))
    }
}

fn sum_rule(a: SumRuleArgs) -> Result<(), Failure> {
    let sys = read_system(&a.input)?;
    let limit = DenseLimit::from_env()?;
    limit.check(sys.n_spins())?;
    let sites: Vec<usize> = match a.site {
        Some(s) => vec![s],
        None => (1..=sys.n_spins()).collect(),
    };
    let c = torque_constant();
    println!("[H, σ_i] = c (h_i + Σ_j J_ij σ_j) × σ_i with c = {}{:+}i", c.re + 0.0, c.im);
    println!("{:>5} {:>10} {:>12} {:>12} {:>12} {:>12}", "site", "beta", "x", "y", "z", "residual");
    let mut failures = Vec::new();
    for &beta in &a.beta {
        for &site in &sites {
            let r = torque_sum_rule(&sys, site, beta, limit)?;
            println!(
                "{:>5} {:>10} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
                site, beta, r.components[0], r.components[1], r.components[2], r.residual
            );
            if !r.pass {
                failures.push(format!("site {site}, beta {beta}: residual {:.3e}", r.residual));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("; ")))
    }
}
