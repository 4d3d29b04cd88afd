//! Experiment runner: solves stack problems, reproduces the three regime
//! figures, sweeps the separation, and prints constants reports.
//!
//! Exit codes: 0 success, 1 usage or invalid data, 2 non-convergence.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pmc_lab::analysis::{contact_radius, regularity_scan, stability_form, standard_test_suite};
use pmc_lab::constants::{ConstantsReport, LocalControlConstants, MassBoundInputs};
use pmc_lab::geometry::{Mode, StackProblem};
use pmc_lab::solver::{solve, SolveReport, SolverConfig};

#[derive(Parser)]
#[command(
    name = "pmclab",
    about = "Prescribed-mean-curvature laboratory for stacked graphs in a cylinder",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem; writes profile.csv and report.txt
    Solve(SolveArgs),
    /// Reproduce one of the three regime figures (SVG + CSV) at c = 1, n = 1000
    Figure(FigureArgs),
    /// Sweep the separation; writes sweep.csv with one row per value
    Sweep(SweepArgs),
    /// Evaluate feasibility constants and mass bounds
    Constants(ConstantsArgs),
    /// Regularity diagnostics of a solved problem
    Regularity(DiagArgs),
    /// Stability-form margins of a solved problem over the fixed test suite
    Stability(DiagArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Prescribing constant c >= 0
    #[arg(long)]
    c: Option<f64>,
    /// Initial sheet separation, strictly in (0, 1)
    #[arg(long)]
    eps: Option<f64>,
    /// Grid resolution
    #[arg(long)]
    n: Option<usize>,
    /// single | stack | membrane
    #[arg(long)]
    mode: Option<String>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,
    /// INI-style config file with an [experiment] section; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed recorded in report headers (reserved for randomized suites)
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget for the solver
    #[arg(long)]
    max_iters: Option<usize>,
    /// Sup-norm tolerance on the projected gradient
    #[arg(long)]
    grad_tol: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DiagArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// Output/config/seed arguments shared by commands without solver flags.
#[derive(Args, Clone)]
struct MetaArgs {
    /// Output directory (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,
    /// INI-style config file with an [experiment] section; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed recorded in report headers (reserved for randomized suites)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FigureArgs {
    /// fig4 | fig5 | fig6
    #[arg(long)]
    case: Option<String>,
    #[command(flatten)]
    meta: MetaArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    eps_from: Option<f64>,
    #[arg(long)]
    eps_to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Ambient volume bound v > 0
    #[arg(long)]
    v: Option<f64>,
    /// Second-fundamental-form slack kappa >= 0
    #[arg(long)]
    kappa: Option<f64>,
    /// Prescribing bound c >= 0
    #[arg(long)]
    c: Option<f64>,
    /// Also bisect for the maximal prescribing bound
    #[arg(long)]
    solve_max_c: bool,
    #[command(flatten)]
    meta: MetaArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    NonConvergence,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(format!("io error: {e}"))
    }
}

type ConfigMap = HashMap<String, String>;

/// `key=value` pairs of the `[experiment]` section; `#` and `;` start comments.
fn load_config(path: &Path) -> Result<ConfigMap, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = ConfigMap::new();
    let mut in_section = false;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            in_section = line == "[experiment]";
            continue;
        }
        if !in_section {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line without '=': {line}")))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn merged<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| CliError::usage(format!("config value {key}={raw} does not parse"))),
        None => Ok(None),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("missing required parameter --{what}")))
}

fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s {
        "single" => Ok(Mode::SingleSheet),
        "stack" => Ok(Mode::SymmetricStack),
        "membrane" => Ok(Mode::TwoMembrane),
        other => Err(CliError::usage(format!(
            "unknown mode '{other}' (expected single | stack | membrane)"
        ))),
    }
}

struct Resolved {
    problem: StackProblem,
    cfg: SolverConfig,
    out: Option<PathBuf>,
    seed: u64,
}

fn resolve_common(common: &CommonArgs, default_mode: Mode) -> Result<Resolved, CliError> {
    let file_cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ConfigMap::new(),
    };
    let c = require(merged(common.c, &file_cfg, "c")?, "c")?;
    let eps = require(merged(common.eps, &file_cfg, "eps")?, "eps")?;
    let n = require(merged(common.n, &file_cfg, "n")?, "n")?;
    let mode = match merged(common.mode.clone(), &file_cfg, "mode")? {
        Some(s) => parse_mode(&s)?,
        None => default_mode,
    };
    let out = match &common.out {
        Some(p) => Some(p.clone()),
        None => file_cfg.get("out").map(PathBuf::from),
    };
    let seed = merged(common.seed, &file_cfg, "seed")?.unwrap_or(0);
    let problem = StackProblem::new(c, eps, n, mode).map_err(|e| CliError::usage(e.to_string()))?;
    let mut cfg = SolverConfig::default();
    if let Some(m) = merged(common.max_iters, &file_cfg, "max_iters")? {
        cfg.max_iters = m;
    }
    if let Some(g) = merged(common.grad_tol, &file_cfg, "grad_tol")? {
        cfg.grad_tol = g;
    }
    Ok(Resolved {
        problem,
        cfg,
        out,
        seed,
    })
}

fn write_out(dir: &Option<PathBuf>, name: &str, contents: &str) -> Result<(), CliError> {
    let dir = dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn run_solved(problem: &StackProblem, cfg: &SolverConfig) -> Result<SolveReport, CliError> {
    solve(problem, cfg).map_err(|e| CliError::usage(e.to_string()))
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, Mode::SymmetricStack)?;
    let report = run_solved(&resolved.problem, &resolved.cfg)?;
    let r_star = contact_radius(&report).ok();
    write_out(&resolved.out, "profile.csv", &report.to_csv())?;
    let mut sidecar = format!("# pmclab solve seed={}\n", resolved.seed);
    sidecar.push_str(&report.sidecar(&resolved.problem, r_star));
    write_out(&resolved.out, "report.txt", &sidecar)?;
    println!(
        "solve: mode={} c={} eps={} n={} total={} kkt={} converged={}",
        resolved.problem.mode.as_str(),
        resolved.problem.c,
        resolved.problem.eps,
        resolved.problem.n,
        report.energy.total,
        report.kkt_residual,
        report.converged
    );
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence)
    }
}

/// Self-contained 800×600 SVG with axes and the two sheet polylines.
fn figure_svg(report: &SolveReport, title: &str) -> String {
    let (x0, x1, y0, y1) = (70.0, 770.0, 560.0, 40.0); // plot box in px
    let map_x = |r: f64| x0 + r * (x1 - x0);
    let map_y = |z: f64| y0 + (z + 1.0) / 2.0 * (y1 - y0);
    let polyline = |values: &[f64], color: &str| {
        let n = values.len() - 1;
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &z)| format!("{:.2},{:.2}", map_x(i as f64 / n as f64), map_y(z)))
            .collect();
        format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        )
    };
    let mut svg = String::new();
    svg.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n");
    svg.push_str("  <rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "  <text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>\n"
    ));
    // plot frame and mid-plane
    svg.push_str(&format!(
        "  <rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        x1 - x0,
        y0 - y1
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{m}\" x2=\"{x1}\" y2=\"{m}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n",
        m = map_y(0.0)
    ));
    for (r, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            map_x(r),
            y0 + 20.0
        ));
    }
    for (z, label) in [(-1.0, "-1"), (0.0, "0"), (1.0, "1")] {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            x0 - 8.0,
            map_y(z) + 4.0
        ));
    }
    svg.push_str(&polyline(report.lower.values(), "#1f6fb2"));
    if let Some(upper) = &report.upper {
        svg.push_str(&polyline(upper.values(), "#b23a1f"));
    }
    svg.push_str("</svg>\n");
    svg
}

fn cmd_figure(args: &FigureArgs) -> Result<(), CliError> {
    let file_cfg = match &args.meta.config {
        Some(path) => load_config(path)?,
        None => ConfigMap::new(),
    };
    let case = require(merged(args.case.clone(), &file_cfg, "case")?, "case")?;
    let eps = match case.as_str() {
        "fig4" => 0.4,
        "fig5" => 2.0 - 3.0f64.sqrt(),
        "fig6" => 0.1,
        other => {
            return Err(CliError::usage(format!(
                "unknown figure case '{other}' (expected fig4 | fig5 | fig6)"
            )))
        }
    };
    let problem = StackProblem::new(1.0, eps, 1000, Mode::SymmetricStack)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let report = run_solved(&problem, &SolverConfig::default())?;
    let out = args
        .meta
        .out
        .clone()
        .or_else(|| file_cfg.get("out").map(PathBuf::from));
    write_out(&out, &format!("{case}.csv"), &report.to_csv())?;
    let title = format!("c = 1, eps = {eps}");
    write_out(&out, &format!("{case}.svg"), &figure_svg(&report, &title))?;
    println!(
        "figure {case}: eps={} contact_intervals={} converged={}",
        eps,
        report.contact.len(),
        report.converged
    );
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let file_cfg = match &args.common.config {
        Some(path) => load_config(path)?,
        None => ConfigMap::new(),
    };
    let eps_from = require(merged(args.eps_from, &file_cfg, "eps_from")?, "eps-from")?;
    let eps_to = require(merged(args.eps_to, &file_cfg, "eps_to")?, "eps-to")?;
    let steps = require(merged(args.steps, &file_cfg, "steps")?, "steps")?;
    if steps == 0 || eps_from <= 0.0 || eps_to >= 1.0 || eps_from > eps_to {
        return Err(CliError::usage(
            "sweep needs 0 < eps-from <= eps-to < 1 and steps >= 1",
        ));
    }
    let mut common = args.common.clone();
    common.eps = Some(eps_from); // placeholder; replaced per step
    let resolved = resolve_common(&common, Mode::SymmetricStack)?;

    let mut csv = String::from(
        "eps,area,volume,total,iterations,kkt_residual,converged,r_star,\
         max_second_diff,second_diff_jump_at_fb,max_third_diff,min_stability_margin\n",
    );
    let mut all_converged = true;
    for k in 0..steps {
        let eps = if steps == 1 {
            eps_from
        } else {
            eps_from + (eps_to - eps_from) * k as f64 / (steps - 1) as f64
        };
        let problem = StackProblem::new(
            resolved.problem.c,
            eps,
            resolved.problem.n,
            Mode::SymmetricStack,
        )
        .map_err(|e| CliError::usage(e.to_string()))?;
        let report = run_solved(&problem, &resolved.cfg)?;
        all_converged &= report.converged;
        let scan = regularity_scan(&report);
        let r_star = contact_radius(&report).ok();
        let min_margin = standard_test_suite(problem.n)
            .iter()
            .map(|psi| stability_form(&report.lower, problem.c, psi).margin)
            .fold(f64::INFINITY, f64::min);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            eps,
            report.energy.area,
            report.energy.volume,
            report.energy.total,
            report.iterations,
            report.kkt_residual,
            u8::from(report.converged),
            fmt_opt(r_star),
            scan.max_second_diff,
            fmt_opt(scan.second_diff_jump_at_fb),
            scan.max_third_diff,
            min_margin
        ));
    }
    write_out(&resolved.out, "sweep.csv", &csv)?;
    println!("sweep: {steps} solves written to sweep.csv");
    if all_converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence)
    }
}

fn cmd_constants(args: &ConstantsArgs) -> Result<(), CliError> {
    let file_cfg = match &args.meta.config {
        Some(path) => load_config(path)?,
        None => ConfigMap::new(),
    };
    let v = require(merged(args.v, &file_cfg, "v")?, "v")?;
    let kappa = merged(args.kappa, &file_cfg, "kappa")?.unwrap_or(0.0);
    let c = merged(args.c, &file_cfg, "c")?.unwrap_or(0.0);
    let solve_max = args.solve_max_c
        || file_cfg
            .get("solve_max_c")
            .is_some_and(|s| s == "true" || s == "1");
    let mass = MassBoundInputs::new(v, kappa, c).map_err(|e| CliError::usage(e.to_string()))?;
    let local = LocalControlConstants {
        vol_m: v,
        c,
        ..LocalControlConstants::default()
    };
    let report = ConstantsReport::evaluate(&local, &mass, solve_max);
    let mut text = report.to_text();
    if solve_max && report.c_max.is_none() {
        text.push_str("c_max=NoThreshold\n");
    }
    print!("{text}");
    let out = args
        .meta
        .out
        .clone()
        .or_else(|| file_cfg.get("out").map(PathBuf::from));
    if out.is_some() {
        write_out(&out, "constants.txt", &text)?;
    }
    Ok(())
}

fn cmd_regularity(args: &DiagArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, Mode::SymmetricStack)?;
    let report = run_solved(&resolved.problem, &resolved.cfg)?;
    let scan = regularity_scan(&report);
    let mut text = String::new();
    text.push_str(&format!("grid_n={}\n", scan.grid_n));
    text.push_str(&format!("max_second_diff={}\n", scan.max_second_diff));
    text.push_str(&format!(
        "second_diff_jump_at_fb={}\n",
        fmt_opt(scan.second_diff_jump_at_fb)
    ));
    text.push_str(&format!("max_third_diff={}\n", scan.max_third_diff));
    text.push_str(&format!(
        "r_star={}\n",
        fmt_opt(contact_radius(&report).ok())
    ));
    print!("{text}");
    if resolved.out.is_some() {
        write_out(&resolved.out, "regularity.txt", &text)?;
    }
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence)
    }
}

fn cmd_stability(args: &DiagArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, Mode::SingleSheet)?;
    let report = run_solved(&resolved.problem, &resolved.cfg)?;
    let mut text = String::new();
    let mut min_margin = f64::INFINITY;
    for (k, psi) in standard_test_suite(resolved.problem.n).iter().enumerate() {
        let s = stability_form(&report.lower, resolved.problem.c, psi);
        min_margin = min_margin.min(s.margin);
        text.push_str(&format!(
            "psi_{k}: lhs={} rhs={} margin={}\n",
            s.lhs, s.rhs, s.margin
        ));
    }
    text.push_str(&format!("min_margin={min_margin}\n"));
    print!("{text}");
    if resolved.out.is_some() {
        write_out(&resolved.out, "stability.txt", &text)?;
    }
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, anything else is usage
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Figure(args) => cmd_figure(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Constants(args) => cmd_constants(args),
        Command::Regularity(args) => cmd_regularity(args),
        Command::Stability(args) => cmd_stability(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::NonConvergence) => {
            eprintln!("solver did not converge within the iteration budget");
            ExitCode::from(2)
        }
    }
}
