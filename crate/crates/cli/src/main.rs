use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use integrax::boundary::{
    max_reflection_residual, open_hamiltonian, open_hamiltonian_numeric, open_transfer_commutator, solve_diagonal_k,
    BoundaryK, BoundaryPair, BoundarySide, DiagonalSolveOptions, KDocument, OpenChainSpec,
};
use integrax::chain::{hamiltonian_explicit, hamiltonian_logderiv, transfer_commutator, xxz_hamiltonian, ChainSpec};
use integrax::exec::Execution;
use integrax::qcore::ModelParams;
use integrax::suite::{
    default_boundary, dump_operator, run_suite, Check, DumpKind, Report, Sampler, SuiteConfig, OPEN_FD_STEP,
};
use integrax::tensorlab::TensorOperator;

#[derive(Parser, Debug)]
#[command(name = "integrax", version, about = "Builds and checks integrable vertex-model operators")]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Rank: the algebra is U_q(L(sl_{l+1})).
    #[arg(long, global = true, default_value_t = 1)]
    l: usize,
    /// Deformation parameter as `re` or `re,im`.
    #[arg(long, global = true, default_value = "0.7", value_parser = parse_complex)]
    q: Complex64,
    /// Grading `s_0,…,s_l`; defaults to all ones.
    #[arg(long, global = true, value_delimiter = ',')]
    s: Option<Vec<u32>>,
    /// Twist fields `Φ_1,…,Φ_{l+1}`; defaults to zero.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    phi: Option<Vec<f64>>,
    /// Chain length.
    #[arg(long = "N", global = true, default_value_t = 3)]
    sites: usize,
    #[arg(long, global = true, default_value_t = 20)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Truncation order of the ρ series.
    #[arg(long, global = true, default_value_t = integrax::qcore::DEFAULT_ORDER)]
    order: usize,
    /// Only run the named check; repeatable.
    #[arg(long = "check", global = true, value_parser = parse_check)]
    checks: Vec<Check>,
    /// Tolerance applied to every check without a `--tol-<check>` override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the verification suite (the default).
    Run,
    /// Periodic chain tools.
    #[command(subcommand)]
    Chain(ChainCommand),
    /// Boundary K-operator and open-chain tools.
    #[command(subcommand)]
    Boundary(BoundaryCommand),
    /// Write an operator as a JSON matrix dump.
    Dump {
        #[arg(long, value_parser = parse_kind)]
        kind: DumpKind,
        /// Spectral parameter as `re` or `re,im`.
        #[arg(long, default_value = "1", value_parser = parse_complex)]
        zeta: Complex64,
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        k: KFiles,
    },
}

#[derive(Subcommand, Debug)]
enum ChainCommand {
    /// Largest ‖[T(ζ₁), T(ζ₂)]‖ over random spectral pairs.
    TransferCommute,
    /// Periodic Hamiltonian from one of three routes.
    Hamiltonian {
        #[arg(long, value_enum, default_value_t = Route::Explicit)]
        route: Route,
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Route {
    /// Logarithmic derivative of the transfer operator.
    Logderiv,
    /// Nearest-neighbour form in matrix units.
    Explicit,
    /// Rescaled spin-½ XXZ form (l = 1 only).
    Xxz,
}

#[derive(Args, Debug)]
struct KFiles {
    /// Left K-operator file.
    #[arg(long)]
    left: Option<PathBuf>,
    /// Right K-operator file.
    #[arg(long)]
    right: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BoundaryCommand {
    /// Reflection residual of a K-operator file.
    CheckK {
        file: PathBuf,
        /// Side to check; taken from the file when omitted.
        #[arg(long, value_parser = parse_side)]
        side: Option<BoundarySide>,
    },
    /// Fit a diagonal K-operator with polynomial entries in ζ^s.
    SolveK {
        #[arg(long, value_parser = parse_side)]
        side: BoundarySide,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// Where to write the fitted K-operator.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Open transfer-operator commutativity.
    OpenCommute {
        #[command(flatten)]
        k: KFiles,
    },
    /// Open Hamiltonian against the finite-difference log-derivative.
    OpenHamiltonian {
        #[command(flatten)]
        k: KFiles,
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn parse_complex(text: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got {text:?}")),
    }
}

fn parse_check(text: &str) -> std::result::Result<Check, String> {
    text.parse().map_err(|e: integrax::Error| e.to_string())
}

fn parse_kind(text: &str) -> std::result::Result<DumpKind, String> {
    text.parse().map_err(|e: integrax::Error| e.to_string())
}

fn parse_side(text: &str) -> std::result::Result<BoundarySide, String> {
    match text {
        "L" | "l" | "left" => Ok(BoundarySide::Left),
        "R" | "r" | "right" => Ok(BoundarySide::Right),
        _ => Err(format!("side must be L or R, got {text:?}")),
    }
}

fn tol_flag(check: Check) -> String {
    format!("tol-{}", check.name())
}

/// The derived parser plus one `--tol-<check>` flag per check.
fn command() -> clap::Command {
    Check::ALL.iter().fold(Cli::command(), |cmd, &check| {
        cmd.arg(
            clap::Arg::new(tol_flag(check))
                .long(tol_flag(check))
                .global(true)
                .value_name("TOL")
                .value_parser(clap::value_parser!(f64))
                .help(format!("Tolerance for the {check} check")),
        )
    })
}

fn build_config(model: &ModelArgs, matches: &ArgMatches) -> Result<SuiteConfig> {
    let l = model.l;
    let s = model.s.clone().unwrap_or_else(|| vec![1; l + 1]);
    let phi = model.phi.clone().unwrap_or_else(|| vec![0.0; l + 1]);
    let params = ModelParams::new(l, model.q, s, phi)?;
    let mut tolerances = std::collections::BTreeMap::new();
    for check in Check::ALL {
        let specific = find_tol(matches, &tol_flag(check));
        if let Some(tol) = specific.or(model.tol) {
            tolerances.insert(check, tol);
        }
    }
    let config = SuiteConfig {
        params,
        sites: model.sites,
        samples: model.samples,
        seed: model.seed,
        order: model.order,
        tolerances,
        checks: model.checks.clone(),
        exec: if model.sequential { Execution::Sequential } else { Execution::Parallel },
    };
    config.validate()?;
    Ok(config)
}

/// Global flags may be given after a subcommand; look through the nested matches.
fn find_tol(matches: &ArgMatches, id: &str) -> Option<f64> {
    let mut current = Some(matches);
    let mut found = None;
    while let Some(m) = current {
        if m.value_source(id) == Some(clap::parser::ValueSource::CommandLine) {
            found = m.get_one::<f64>(id).copied();
        }
        current = m.subcommand().map(|(_, sub)| sub);
    }
    found
}

fn print_report(report: &Report) {
    for c in &report.checks {
        let status = match (&c.skipped, c.passed) {
            (Some(_), _) => "SKIP",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        let residual = c.max_residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        let mut line = format!("{status} {:<22} residual {residual:>10} tol {:.1e}", c.name, c.tolerance);
        if let Some(reason) = c.skipped.as_ref().or(c.error.as_ref()) {
            line.push_str(&format!("  ({reason})"));
        }
        println!("{line}");
    }
    println!(
        "{} of {} checks passed in {:.2}s",
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len(),
        report.wall_time_s
    );
}

fn finish_report(report: &Report, out: Option<&Path>) -> Result<bool> {
    print_report(report);
    if let Some(path) = out {
        report.save(path).with_context(|| format!("writing report to {}", path.display()))?;
    }
    Ok(report.all_passed)
}

fn verdict(name: &str, residual: f64, tol: f64) -> bool {
    let passed = residual < tol;
    println!("{} {name} residual {residual:.3e} tol {tol:.1e}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn load_boundary(config: &SuiteConfig, files: &KFiles) -> Result<BoundaryPair> {
    let p = &config.params;
    let fallback = default_boundary(p);
    let load = |path: &Option<PathBuf>, fallback: BoundaryK| -> Result<BoundaryK> {
        match path {
            Some(path) => Ok(KDocument::load(path, p).with_context(|| format!("reading {}", path.display()))?.k),
            None => Ok(fallback),
        }
    };
    Ok(BoundaryPair { left: load(&files.left, fallback.left)?, right: load(&files.right, fallback.right)? })
}

fn save_operator(op: &TensorOperator, path: &Path) -> Result<()> {
    op.save_json(path).with_context(|| format!("writing {}", path.display()))
}

fn chain_command(config: &SuiteConfig, command: &ChainCommand) -> Result<bool> {
    let p = &config.params;
    match command {
        ChainCommand::TransferCommute => {
            let spec = ChainSpec::homogeneous(p.clone(), config.sites)?;
            let mut sampler = Sampler::for_check(config, Check::TransferCommute);
            let pairs: Vec<_> = (0..config.samples).map(|_| sampler.pair()).collect();
            let worst = config
                .exec
                .map(&pairs, |&(a, b)| transfer_commutator(&spec, a, b))
                .into_iter()
                .try_fold(0.0_f64, |acc, r| r.map(|v| acc.max(v)))?;
            Ok(verdict("transfer-commute", worst, config.tolerance(Check::TransferCommute)))
        }
        ChainCommand::Hamiltonian { route, dump } => {
            let h = match route {
                Route::Logderiv => {
                    hamiltonian_logderiv(&ChainSpec::homogeneous(p.clone(), config.sites)?, config.exec)?
                }
                Route::Explicit => hamiltonian_explicit(p, config.sites)?,
                Route::Xxz => xxz_hamiltonian(p, config.sites)?.scale(-(p.s_total() as f64) / p.kappa()),
            };
            println!(
                "hamiltonian ({}) on {} sites: {}x{}, max entry {:.6e}",
                route.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string()),
                config.sites,
                h.side(),
                h.side(),
                h.max_abs()
            );
            if let Some(path) = dump {
                save_operator(&h, path)?;
            }
            Ok(true)
        }
    }
}

fn boundary_command(config: &SuiteConfig, command: &BoundaryCommand) -> Result<bool> {
    let p = &config.params;
    let mut sampler = Sampler::for_check(config, Check::Reflection);
    let mut pairs = |n: usize| -> Vec<_> { (0..n).map(|_| sampler.pair()).collect() };
    match command {
        BoundaryCommand::CheckK { file, side } => {
            let doc = KDocument::load(file, p).with_context(|| format!("reading {}", file.display()))?;
            let side = side.or(doc.side).ok_or_else(|| anyhow!("the file names no side; pass --side L or --side R"))?;
            let worst = max_reflection_residual(p, side, &doc.k, &pairs(config.samples))?;
            Ok(verdict(&format!("reflection-{side}"), worst, config.tolerance(Check::Reflection)))
        }
        BoundaryCommand::SolveK { side, degree, save } => {
            let options = DiagonalSolveOptions { degree: *degree, seed: config.seed, ..Default::default() };
            let solution = solve_diagonal_k(p, *side, &pairs(6), &options)?;
            let worst = max_reflection_residual(p, *side, &solution.k, &pairs(config.samples))?;
            println!("diagonal K of degree {degree} found after {} restarts", solution.restarts_used);
            let doc = KDocument { side: Some(*side), k: solution.k };
            match save {
                Some(path) => {
                    std::fs::write(path, doc.to_json()?).with_context(|| format!("writing {}", path.display()))?
                }
                None => println!("{}", doc.to_json()?),
            }
            Ok(verdict(&format!("reflection-{side}"), worst, config.tolerance(Check::Reflection)))
        }
        BoundaryCommand::OpenCommute { k } => {
            let boundary = load_boundary(config, k)?;
            let spec = OpenChainSpec { chain: ChainSpec::homogeneous(p.clone(), config.sites)?, boundary };
            let pairs = pairs(config.samples);
            let worst = config
                .exec
                .map(&pairs, |&(a, b)| open_transfer_commutator(&spec, a, b))
                .into_iter()
                .try_fold(0.0_f64, |acc, r| r.map(|v| acc.max(v)))?;
            Ok(verdict("open-commute", worst, config.tolerance(Check::OpenCommute)))
        }
        BoundaryCommand::OpenHamiltonian { k, dump } => {
            let boundary = load_boundary(config, k)?;
            let spec = OpenChainSpec { chain: ChainSpec::homogeneous(p.clone(), config.sites)?, boundary };
            let h = open_hamiltonian(&spec)?;
            let numeric = open_hamiltonian_numeric(&spec, OPEN_FD_STEP)?;
            let deviation = h.max_abs_diff(&numeric) / h.max_abs().max(1.0);
            if let Some(path) = dump {
                save_operator(&h, path)?;
            }
            Ok(verdict("open-hamiltonian", deviation, config.tolerance(Check::OpenHamiltonian)))
        }
    }
}

fn execute(cli: &Cli, matches: &ArgMatches) -> Result<bool> {
    let config = build_config(&cli.model, matches)?;
    let out = cli.model.out.as_deref();
    match &cli.command {
        None | Some(Command::Run) => finish_report(&run_suite(&config)?, out),
        Some(Command::Chain(command)) => chain_command(&config, command),
        Some(Command::Boundary(command)) => boundary_command(&config, command),
        Some(Command::Dump { kind, zeta, path, k }) => {
            let boundary = load_boundary(&config, k)?;
            let op = dump_operator(*kind, &config, *zeta, Some(&boundary), path)?;
            println!("wrote {} ({}x{}) to {}", kind.name(), op.side(), op.side(), path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let matches = command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(&cli, &matches) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
