//! Command line for the trust-region lab.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 usage error,
//! 3 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trlab::bounds;
use trlab::error::Error;
use trlab::fixed::{solve_fixed, FixedConfig};
use trlab::problems::{builtin, check_derivatives, sample_in_region, Objective, PolyProblem};
use trlab::solver::{solve, SolverConfig, StepKind};
use trlab::sweep::{run_sweep, write_csv_header, write_csv_row, ExperimentSpec};
use trlab::trace::{self, read_path, TraceHeader, FIXED_METHOD, TRACE_SCHEMA};
use trlab::verify::verify_trace;
use trlab::Result;

#[derive(Parser)]
#[command(name = "trlab", version, about = "Trust-region solver lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write its trace.
    Run(RunArgs),
    /// Run one solve per tolerance in a grid and tabulate counts vs caps.
    Sweep(SweepArgs),
    /// Re-check every invariant of a previously written trace file.
    Verify(VerifyArgs),
    /// Print the guaranteed constants and iteration caps for a configuration.
    Bounds(BoundsArgs),
    /// Validate analytic gradients and Hessians by central differences.
    CheckDerivatives(CheckDerivativesArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Built-in problem name or path to a problem JSON file.
    #[arg(long, default_value = "rosenbrock")]
    problem: String,
    /// Dimension for built-ins that support several.
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON file with solver keys (same names as the config structs).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Radius strategy: update1, update2, or fixed.
    #[arg(long)]
    strategy: Option<String>,
    /// First-order tolerance on the gradient norm.
    #[arg(long)]
    eps_g: Option<f64>,
    /// Eigenvalue tolerance (update2 termination).
    #[arg(long)]
    eps_h: Option<f64>,
    /// Accuracy parameter of the fixed-radius method.
    #[arg(long)]
    eps: Option<f64>,
    /// Half the Hessian Lipschitz constant, for the fixed-radius method.
    #[arg(long)]
    beta: Option<f64>,
    /// Trial step: cauchy or exact.
    #[arg(long)]
    step_kind: Option<String>,
    /// Iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Start point, comma separated; defaults to the problem's suggestion.
    #[arg(long)]
    x0: Option<String>,
    /// Trace output path; defaults to trlab-<problem>-<strategy>.jsonl.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for any sampled quantities.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Strictly decreasing tolerance grid, comma separated.
    #[arg(long, value_name = "GRID")]
    eps_grid: String,
    #[arg(long)]
    x0: Option<String>,
    /// CSV output path; defaults to trlab-sweep-<problem>-<strategy>.csv.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trace file produced by `run`.
    trace: PathBuf,
    /// Seed for the sampled Taylor spot-checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    x0: Option<String>,
}

#[derive(Args)]
struct CheckDerivativesArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Number of sample points.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::CheckDerivatives(args) => cmd_check_derivatives(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NonFiniteInput(_)
        | Error::DegenerateDirection
        | Error::InvalidBranch { .. }
        | Error::InvalidRadius { .. }
        | Error::TrsNoConvergence { .. }
        | Error::DegenerateModel { .. }
        | Error::OracleFailure { .. }
        | Error::RegionExit { .. } => 3,
        _ => 2,
    }
}

fn load_problem(args: &ProblemArgs) -> Result<Box<dyn Objective>> {
    if args.problem.ends_with(".json") {
        Ok(Box::new(PolyProblem::load(Path::new(&args.problem))?))
    } else {
        builtin(&args.problem, args.dim)
    }
}

fn parse_x0(text: &Option<String>, fallback: Vec<f64>) -> Result<Vec<f64>> {
    match text {
        None => Ok(fallback),
        Some(t) => t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidConfig(format!("bad x0 entry '{s}': {e}")))
            })
            .collect(),
    }
}

/// Config-file values overlay the defaults; explicit flags overlay both.
fn build_configs(args: &ConfigArgs) -> Result<(SolverConfig, FixedConfig, String)> {
    let (mut solver_cfg, mut fixed_cfg) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let solver: SolverConfig = serde_json::from_str(&text)?;
            let fixed: FixedConfig = serde_json::from_str(&text)?;
            (solver, fixed)
        }
        None => (SolverConfig::default(), FixedConfig::default()),
    };
    let strategy_name = args
        .strategy
        .clone()
        .unwrap_or_else(|| solver_cfg.strategy.clone());
    if strategy_name != FIXED_METHOD {
        solver_cfg.strategy = strategy_name.clone();
    }
    if let Some(v) = args.eps_g {
        solver_cfg.eps_g = v;
    }
    if let Some(v) = args.eps_h {
        solver_cfg.eps_h = v;
    }
    if let Some(v) = args.eps {
        fixed_cfg.eps = v;
    }
    if let Some(v) = args.beta {
        fixed_cfg.beta = v;
    }
    if let Some(v) = args.max_iters {
        solver_cfg.max_iters = v;
        fixed_cfg.max_iters = v;
    }
    if let Some(kind) = &args.step_kind {
        solver_cfg.step_kind = match kind.as_str() {
            "cauchy" => StepKind::Cauchy,
            "exact" => StepKind::Exact,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown step kind '{other}' (use cauchy or exact)"
                )))
            }
        };
    }
    Ok((solver_cfg, fixed_cfg, strategy_name))
}

fn header_for(
    problem: &dyn Objective,
    problem_name: &str,
    method: &str,
    solver_cfg: &SolverConfig,
    fixed_cfg: &FixedConfig,
    x0: &[f64],
) -> TraceHeader {
    TraceHeader {
        schema: TRACE_SCHEMA.into(),
        problem: problem_name.into(),
        dim: problem.dim(),
        method: method.into(),
        config: (method != FIXED_METHOD).then(|| solver_cfg.clone()),
        fixed_config: (method == FIXED_METHOD).then(|| fixed_cfg.clone()),
        constants: problem.constants().clone(),
        x0: x0.to_vec(),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let (solver_cfg, fixed_cfg, method) = build_configs(&args.config)?;
    let x0 = parse_x0(&args.x0, problem.suggested_x0())?;
    let out_path = args.output.unwrap_or_else(|| {
        PathBuf::from(format!("trlab-{}-{method}.jsonl", problem.name()))
    });
    let header = header_for(
        problem.as_ref(),
        &args.problem.problem,
        &method,
        &solver_cfg,
        &fixed_cfg,
        &x0,
    );

    let mut out = BufWriter::new(File::create(&out_path)?);
    if method == FIXED_METHOD {
        let res = solve_fixed(problem.as_ref(), &x0, &fixed_cfg)?;
        trace::write_fixed(&mut out, &header, &res)?;
        out.flush()?;
        println!(
            "{} iters={} f={:.12e} grad_norm={:.6e} lambda_min={:.6e} trace={}",
            res.status,
            res.trace.len(),
            res.final_f,
            res.final_grad_norm,
            res.final_lambda_min,
            out_path.display()
        );
    } else {
        let res = solve(problem.as_ref(), &x0, &solver_cfg)?;
        trace::write_adaptive(&mut out, &header, &res)?;
        out.flush()?;
        println!(
            "{} iters={} f={:.12e} grad_norm={:.6e} lambda_min={:.6e} trace={}",
            res.status,
            res.trace.len(),
            res.final_f,
            res.final_grad_norm,
            res.final_lambda_min,
            out_path.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let (solver_cfg, fixed_cfg, method) = build_configs(&args.config)?;
    let grid: Vec<f64> = args
        .eps_grid
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad eps entry '{s}': {e}")))
        })
        .collect::<Result<_>>()?;
    let x0 = args
        .x0
        .as_ref()
        .map(|t| parse_x0(&Some(t.clone()), vec![]))
        .transpose()?;
    let spec = ExperimentSpec {
        problem: args.problem.problem.clone(),
        dim: problem.dim(),
        strategy: method.clone(),
        config: solver_cfg,
        fixed: fixed_cfg,
        eps_grid: grid,
        seed: args.seed,
        x0,
        eps_h: args.config.eps_h,
    };
    spec.validate()?;

    let out_path = args.output.unwrap_or_else(|| {
        PathBuf::from(format!("trlab-sweep-{}-{method}.csv", problem.name()))
    });
    let mut out = BufWriter::new(File::create(&out_path)?);
    write_csv_header(&mut out)?;
    let summary = run_sweep(problem.as_ref(), &spec, |row| {
        let _ = write_csv_row(&mut out, row);
        let _ = out.flush();
        println!(
            "eps={:<10} iters={:<8} successful={:<8} kg={:<8} kh={:<8} bound={:.3e}",
            row.eps, row.iters, row.successful, row.kg, row.kh, row.bound
        );
    });
    match summary {
        Ok(s) => {
            match s.slope {
                Some(v) => println!("log-log slope of count vs 1/eps: {v:.4}"),
                None => println!("log-log slope of count vs 1/eps: not enough points"),
            }
            println!("csv: {}", out_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            // rows written so far remain on disk
            out.flush()?;
            Err(e)
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let data = read_path(&args.trace)?;
    let header = data.header().clone();
    // Rebuild the oracle when possible so the sampled Taylor checks can run.
    let oracle: Option<Box<dyn Objective>> = if header.problem.ends_with(".json") {
        PolyProblem::load(Path::new(&header.problem))
            .ok()
            .map(|p| Box::new(p) as Box<dyn Objective>)
    } else {
        builtin(&header.problem, header.dim).ok()
    };
    let report = verify_trace(&data, oracle.as_deref(), args.seed)?;
    print!("{report}");
    let n_na = report.not_applicable().len();
    if report.passed() {
        if n_na > 0 {
            println!("warning: {n_na} check(s) not applicable");
        }
        println!(
            "ok: {} checks on {} iterations",
            report.checks.len(),
            data.iterations()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{} check(s) violated", report.failed().len());
        Ok(ExitCode::from(1))
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let (solver_cfg, fixed_cfg, _method) = build_configs(&args.config)?;
    solver_cfg.validate()?;
    let constants = problem.constants();
    let x0 = parse_x0(&args.x0, problem.suggested_x0())?;
    let f0 = problem.eval_f(&x0);

    let gm = bounds::gamma_min(&solver_cfg, constants);
    let km = bounds::kappa_min(solver_cfg.eta, gm);
    let streak =
        bounds::max_consecutive_unsuccessful(solver_cfg.gamma_c, gm, solver_cfg.gamma_hi).max(1);
    println!("problem             {}", problem.name());
    println!("kappa               {}", constants.kappa);
    println!("lipschitz           {}", constants.l);
    println!("f0                  {f0}");
    println!("f_inf               {}", constants.f_inf);
    println!("gamma_min           {gm:.6e}");
    println!("kappa_min           {km:.6e}");
    println!("max_consec_unsucc   {streak}");
    println!(
        "first_order_cap     {}",
        bounds::first_order_bound(f0, constants, &solver_cfg, solver_cfg.eps_g)
    );
    println!(
        "second_order_cap    {}",
        bounds::second_order_bound(
            f0,
            constants,
            &solver_cfg,
            solver_cfg.eps_g,
            solver_cfg.eps_h
        )
    );
    let beta = fixed_cfg.beta;
    println!(
        "fixed_case2_cap     {:.3e} (eps {}, beta {beta})",
        (f0 - constants.f_inf) * 6.0 * beta * beta / fixed_cfg.eps.powf(1.5),
        fixed_cfg.eps
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_derivatives(args: CheckDerivativesArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let region = problem.constants().region.shrunk(args.h);
    let mut rng = trlab::seeded_rng(args.seed);
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    let mut all_passed = true;
    for i in 0..args.points {
        let x = sample_in_region(&region, &mut rng, 5.0);
        let rep = check_derivatives(problem.as_ref(), &x, args.h)?;
        worst_grad = worst_grad.max(rep.grad_rel_err);
        worst_hess = worst_hess.max(rep.hess_rel_err);
        if !rep.passed {
            all_passed = false;
            println!(
                "point {i}: FAIL grad_rel={:.3e} hess_rel={:.3e} at {x:?}",
                rep.grad_rel_err, rep.hess_rel_err
            );
        }
    }
    println!(
        "{} points: max grad_rel={worst_grad:.3e} max hess_rel={worst_hess:.3e} (threshold {:.1e})",
        args.points,
        (10.0 * args.h * args.h).max(1e-6)
    );
    if all_passed {
        println!("ok");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

