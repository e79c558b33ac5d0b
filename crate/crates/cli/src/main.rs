//! `fairsoc`: solve, sample, sweep and bisect fair load-shedding problems.
//!
//! Exit codes: 0 optimal (or success), 1 configuration or input error,
//! 2 certified infeasible, 3 solver status unknown, 4 scenario sampling
//! exhausted before the requested count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairsoc::experiments::{
    eps_max, eps_sweep, export_csv, infeasibility_table, monotonicity_audit, pnorm_sweep, summarize, ExperimentError,
    ParamKind, SweepOptions, SweepReport,
};
use fairsoc::fairness::w_of_eps;
use fairsoc::grid::{
    build_fair_mls, build_mls, build_pnorm_mls, cases, generate_scenarios, parse_matpower_case, read_scenarios,
    solve_mls, write_scenarios, DamageScenario, GridError, NetworkCase, PNorm, ScenarioConfig, ScenarioSet,
};
use fairsoc::{SolverError, SolverSettings, Status};
use rayon::prelude::*;

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Parser)]
#[command(name = "fairsoc", version, about = "Fair minimum load shedding on damaged transmission networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// MATPOWER case file, or a bundled case: ieee14, case3_sym, case3_asym
    #[arg(long, global = true, env = "FAIRSOC_CASE", default_value = "ieee14")]
    case: String,
    #[arg(long, global = true, env = "FAIRSOC_TOL_FEAS", default_value_t = 1e-8)]
    tol_feas: f64,
    #[arg(long, global = true, env = "FAIRSOC_TOL_GAP", default_value_t = 1e-8)]
    tol_gap: f64,
    #[arg(long, global = true, env = "FAIRSOC_MAX_ITER", default_value_t = 200)]
    max_iter: usize,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "FAIRSOC_JOBS")]
    jobs: Option<usize>,
    #[arg(short, long, global = true, env = "FAIRSOC_VERBOSE")]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one shed problem and print the allocation.
    Solve(SolveArgs),
    /// Sample random damage scenarios with nonzero base shed.
    Scenarios(ScenarioArgs),
    /// Solve every scenario over a grid of eps or p values and write a CSV report.
    Sweep(SweepArgs),
    /// Bisect for the largest feasible eps of every scenario.
    Epsmax(EpsmaxArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Ids of damaged lines
    #[arg(long, value_delimiter = ',', env = "FAIRSOC_DAMAGE", conflicts_with = "scenarios")]
    damage: Vec<usize>,
    /// Take the damage from this scenario file
    #[arg(long, env = "FAIRSOC_SCENARIOS")]
    scenarios: Option<PathBuf>,
    /// Scenario index within the file
    #[arg(long, default_value_t = 0, requires = "scenarios")]
    index: usize,
    /// Fairness level in [0, 1]
    #[arg(long, env = "FAIRSOC_EPS", conflicts_with = "p")]
    eps: Option<f64>,
    /// Minimize the p-norm of the shed instead (1, 2, 4, 8 or inf)
    #[arg(long, env = "FAIRSOC_P")]
    p: Option<PNorm>,
}

#[derive(Clone, Copy, Debug)]
struct Generate {
    k: usize,
    count: usize,
    seed: u64,
}

impl FromStr for Generate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [k, count, seed] = parts[..] else {
            return Err(format!("expected k,count,seed, got {s:?}"));
        };
        let num = |v: &str, what: &str| v.parse::<u64>().map_err(|_| format!("invalid {what} {v:?}"));
        Ok(Generate {
            k: num(k, "k")? as usize,
            count: num(count, "count")? as usize,
            seed: num(seed, "seed")?,
        })
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file
    #[arg(long, env = "FAIRSOC_SCENARIOS")]
    scenarios: Option<PathBuf>,
    /// Sample scenarios as k,count,seed
    #[arg(long, env = "FAIRSOC_GENERATE")]
    generate: Option<Generate>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// k,count,seed
    #[arg(long, env = "FAIRSOC_GENERATE")]
    generate: Generate,
    /// Output file (default: stdout)
    #[arg(long, env = "FAIRSOC_OUT")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Eps,
    P,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, env = "FAIRSOC_KIND", default_value = "eps")]
    kind: Kind,
    #[arg(
        long,
        value_delimiter = ',',
        env = "FAIRSOC_EPS_GRID",
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    eps_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', env = "FAIRSOC_P_SET", default_value = "1,2,4,8,inf")]
    p_set: Vec<PNorm>,
    /// CSV report file (default: stdout, with the summary on stderr)
    #[arg(long, env = "FAIRSOC_OUT")]
    out: Option<PathBuf>,
    /// Record per-solve wall time (makes reports non-reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EpsmaxArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Output file (default: stdout)
    #[arg(long, env = "FAIRSOC_OUT")]
    out: Option<PathBuf>,
}

fn load_case(spec: &str) -> Result<NetworkCase, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = read(path)?;
        return Ok(parse_matpower_case(&text).map_err(GridError::from)?);
    }
    match spec {
        "ieee14" => Ok(cases::ieee14()),
        "case3_sym" => Ok(cases::three_bus_symmetric()),
        "case3_asym" => Ok(cases::three_bus_asymmetric()),
        _ => Err(CliError::Config(format!(
            "case {spec:?} is neither a file nor one of ieee14, case3_sym, case3_asym"
        ))),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn settings(g: &Global) -> Result<SolverSettings, CliError> {
    let s = SolverSettings {
        tol_feas: g.tol_feas,
        tol_gap: g.tol_gap,
        max_iter: g.max_iter,
        verbose: g.verbose,
        ..SolverSettings::default()
    };
    s.validate()?;
    Ok(s)
}

/// Scenarios plus whether sampling ran short, and header entries describing
/// where they came from.
fn scenario_source(
    src: &Source,
    case: &NetworkCase,
    settings: &SolverSettings,
) -> Result<(ScenarioSet, bool, Vec<(String, String)>), CliError> {
    if let Some(path) = &src.scenarios {
        let set = read_scenarios(&read(path)?)?;
        return Ok((set, false, vec![("scenario_file".into(), path.display().to_string())]));
    }
    let g = src.generate.expect("clap requires one source");
    let generation = generate_scenarios(case, &ScenarioConfig::new(g.k, g.count, g.seed), settings)?;
    let meta = vec![("generate".into(), format!("{},{},{}", g.k, g.count, g.seed))];
    Ok((generation.set, generation.exhausted, meta))
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Optimal => 0,
        Status::PrimalInfeasible => EXIT_INFEASIBLE,
        _ => EXIT_UNKNOWN,
    }
}

fn cmd_solve(g: &Global, args: &SolveArgs) -> Result<u8, CliError> {
    let settings = settings(g)?;
    let case = load_case(&g.case)?;
    let scenario = match &args.scenarios {
        Some(path) => {
            let set = read_scenarios(&read(path)?)?;
            set.scenarios.get(args.index).cloned().ok_or_else(|| {
                CliError::Config(format!("scenario index {} out of range ({} scenarios)", args.index, set.scenarios.len()))
            })?
        }
        None => {
            let mut lines = args.damage.clone();
            lines.sort_unstable();
            lines.dedup();
            DamageScenario { lines }
        }
    };
    let damaged = case.apply_damage(&scenario)?;
    let n = case.loads.len();
    let (model, label) = match (args.eps, args.p) {
        (Some(eps), _) => {
            let w = w_of_eps(eps, n).map_err(|e| CliError::Config(e.to_string()))?;
            (build_fair_mls(&damaged, eps)?, format!("fair shed, eps = {eps} (Jain index >= {w:.6})"))
        }
        (None, Some(p)) => (build_pnorm_mls(&damaged, p)?, format!("p-norm shed, p = {p}")),
        (None, None) => (build_mls(&damaged), "minimum total shed".to_string()),
    };
    let sol = solve_mls(&damaged, &model, &settings)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "case: {} ({} buses, {} lines, {} loads)",
        g.case,
        case.buses.len(),
        case.lines.len(),
        n
    );
    let ids: Vec<String> = scenario.lines.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(out, "damaged lines: {}", if ids.is_empty() { "none".into() } else { ids.join(",") });
    let _ = writeln!(out, "model: {label}");
    let _ = writeln!(out, "status: {} ({} iterations)", sol.status, sol.iterations);
    if let Some(total) = sol.total_shed {
        let _ = writeln!(out, "total shed: {total:.6} p.u. ({:.3} MW)", total * case.base_mva);
        if let Some(j) = sol.jain {
            let _ = writeln!(out, "jain index: {:.6}{}", j.value, if j.degenerate { " (no shed)" } else { "" });
        }
        let _ = writeln!(out, "bus  shed      demand");
        for (load, d) in case.loads.iter().zip(&sol.shed) {
            let _ = writeln!(out, "{:>3}  {:<8.6}  {:.6}", case.buses[load.bus].id, d, load.d_max);
        }
    }
    print!("{out}");
    Ok(status_code(sol.status))
}

fn cmd_scenarios(g: &Global, args: &ScenarioArgs) -> Result<u8, CliError> {
    let settings = settings(g)?;
    let case = load_case(&g.case)?;
    let gen = args.generate;
    let generation = generate_scenarios(&case, &ScenarioConfig::new(gen.k, gen.count, gen.seed), &settings)?;
    write_out(args.out.as_deref(), &write_scenarios(&generation.set))?;
    if generation.exhausted {
        eprintln!(
            "sampling exhausted after {} attempts: {} of {} scenarios written",
            generation.attempts,
            generation.set.scenarios.len(),
            gen.count
        );
        return Ok(EXIT_EXHAUSTED);
    }
    Ok(0)
}

fn sweep_summary(report: &SweepReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6}  {:>7}  {:>10}  {:>7}  {:>28}", report.kind, "optimal", "infeasible", "unknown", "eta_r % (q1 / median / q3)");
    let table = infeasibility_table(report);
    for (sum, row) in summarize(report).iter().zip(&table) {
        let eta = sum
            .eta_r_pct
            .map(|q| format!("{:.3} / {:.3} / {:.3}", q.q1, q.median, q.q3))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:>6}  {:>7}  {:>10}  {:>7}  {:>28}",
            sum.param.to_string(),
            sum.optimal,
            row.infeasible,
            row.unknown,
            eta
        );
    }
    let audit = monotonicity_audit(report);
    let certified = audit.certified().count();
    match report.kind {
        ParamKind::Eps => {
            let nondecreasing = table.windows(2).all(|w| w[0].infeasible <= w[1].infeasible);
            let _ = writeln!(
                s,
                "infeasible counts nondecreasing in eps: {nondecreasing}; feasible-after-infeasible orderings: {}; \
                 shed-total decreases: {}; scenarios with Jain index decreasing in eps: {} (reported only)",
                audit.feasibility_violations(),
                audit.z_violations(),
                audit.jain_non_monotone()
            );
        }
        ParamKind::P => {
            let _ = writeln!(
                s,
                "scenarios with Jain index non-monotone in p: {} of {certified}",
                audit.jain_non_monotone()
            );
        }
    }
    if audit.scenarios_with_unknown() > 0 {
        let _ = writeln!(
            s,
            "scenarios with uncertified solves (excluded from the checks): {}",
            audit.scenarios_with_unknown()
        );
    }
    s
}

fn cmd_sweep(g: &Global, args: &SweepArgs) -> Result<u8, CliError> {
    let settings = settings(g)?;
    let case = load_case(&g.case)?;
    let (set, exhausted, source_meta) = scenario_source(&args.source, &case, &settings)?;
    let opts = SweepOptions {
        settings,
        jobs: g.jobs,
        timing: args.timing,
        seed: set.seed,
    };
    let mut report = match args.kind {
        Kind::Eps => eps_sweep(&case, &set.scenarios, &args.eps_grid, &opts)?,
        Kind::P => pnorm_sweep(&case, &set.scenarios, &args.p_set, &opts)?,
    };
    let mut config = vec![("case".to_string(), g.case.clone())];
    config.extend(source_meta);
    config.extend(report.config.drain(..));
    report.config = config;

    let csv = export_csv(&report)?;
    let summary = sweep_summary(&report);
    match &args.out {
        Some(path) => {
            write_out(Some(path), &csv)?;
            print!("{summary}");
            println!("wrote {} rows to {}", report.rows.len(), path.display());
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(if exhausted { EXIT_EXHAUSTED } else { 0 })
}

fn cmd_epsmax(g: &Global, args: &EpsmaxArgs) -> Result<u8, CliError> {
    let settings = settings(g)?;
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(CliError::Config(format!("--tol {} must lie in (0, 1)", args.tol)));
    }
    let case = load_case(&g.case)?;
    let (set, exhausted, _) = scenario_source(&args.source, &case, &settings)?;
    let damaged = set
        .scenarios
        .iter()
        .map(|s| case.apply_damage(s))
        .collect::<Result<Vec<_>, _>>()?;
    let run = || -> Vec<String> {
        damaged
            .par_iter()
            .enumerate()
            .map(|(i, d)| match eps_max(d, args.tol, &settings) {
                Ok(r) => format!("{i},{},{},ok", r.eps, r.solves),
                Err(ExperimentError::BaseNotOptimal(s)) => format!("{i},,1,base_{}", s.as_str()),
                Err(ExperimentError::UnknownDuringBisection { eps, status }) => {
                    format!("{i},,,unknown_at_{eps}_{}", status.as_str())
                }
                Err(e) => format!("{i},,,error: {e}"),
            })
            .collect()
    };
    let lines = match g.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut out = format!("# eps_max tol={} case={}\nscenario_id,eps_max,solves,status\n", args.tol, g.case);
    for l in &lines {
        out.push_str(l);
        out.push('\n');
    }
    write_out(args.out.as_deref(), &out)?;
    Ok(if exhausted { EXIT_EXHAUSTED } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let level = if cli.global.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(&cli.global, a),
        Command::Scenarios(a) => cmd_scenarios(&cli.global, a),
        Command::Sweep(a) => cmd_sweep(&cli.global, a),
        Command::Epsmax(a) => cmd_epsmax(&cli.global, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
