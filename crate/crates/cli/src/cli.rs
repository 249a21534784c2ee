//! Subcommands, flag handling and dispatch to the experiments.
//!
//! Exit status: `0` on success, `2` for configuration errors (the message
//! names the offending flag or field), `1` when a run fails.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regret_design_core::estimation::{Allocation, DesignPoint};
use regret_design_core::harness::{NamedAllocation, NamedReport, RegretReport};
use regret_design_core::numerics::Executor;
use regret_design_core::problem::Objective;
use serde::Serialize;

use crate::config::{self, PandemicConfig, PricingConfig, QuadraticConfig};
use crate::error::CliError;
use crate::exec::RayonExecutor;
use crate::experiments::{
    compare, estimated_curves, optimized_vs_uniform, sweep, Design, Experiment, PandemicExperiment,
    PricingExperiment, QuadraticExperiment,
};
use crate::output::{write_atomic, Cell, Format, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Quadratic,
    Pricing,
    Pandemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompareMode {
    /// Optimized against uniform.
    #[default]
    Standard,
    /// Every integer split of the budget (quadratic only).
    AllSplits,
    /// Estimated objective curves from one simulated data set.
    Curves,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Design,
    Evaluate { allocation: Option<Vec<u64>> },
    Compare { mode: CompareMode },
    Sweep { budgets: Option<Vec<u64>> },
    Trajectories,
    VerifyBound,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemKind,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub replications: Option<usize>,
    pub budget: Option<u64>,
    /// `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(
    name = "regret-design",
    version,
    about = "Regret-aware experimental design for estimate-then-optimize"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Optimize the experiment allocation.
    Design(CommonArgs),
    /// Monte Carlo regret of one allocation (the optimized one by default).
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated counts per design point.
        #[arg(long, value_delimiter = ',')]
        allocation: Option<Vec<u64>>,
    },
    /// Regret of the optimized allocation against the uniform baseline.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Every integer split of the budget (quadratic).
        #[arg(long, conflicts_with = "curves")]
        all_splits: bool,
        /// Estimated objective curves for one simulated data set.
        #[arg(long)]
        curves: bool,
    },
    /// Regret against budget for optimized and uniform allocations.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated, strictly increasing budgets.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<u64>>,
    },
    /// Quartiles of cumulative infections per day (pandemic).
    Trajectories(CommonArgs),
    /// Realized regret against the deterministic bound (quadratic).
    VerifyBound(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    /// JSON configuration; defaults reproduce the worked example.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Defaults to json for `design`, csv otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    pub fn into_run_config(self) -> RunConfig {
        let (command, common) = match self.command {
            CliCommand::Design(c) => (Command::Design, c),
            CliCommand::Evaluate { common, allocation } => {
                (Command::Evaluate { allocation }, common)
            }
            CliCommand::Compare {
                common,
                all_splits,
                curves,
            } => {
                let mode = if all_splits {
                    CompareMode::AllSplits
                } else if curves {
                    CompareMode::Curves
                } else {
                    CompareMode::Standard
                };
                (Command::Compare { mode }, common)
            }
            CliCommand::Sweep { common, budgets } => (Command::Sweep { budgets }, common),
            CliCommand::Trajectories(c) => (Command::Trajectories, c),
            CliCommand::VerifyBound(c) => (Command::VerifyBound, c),
        };
        let default_format = if command == Command::Design {
            Format::Json
        } else {
            Format::Csv
        };
        RunConfig {
            command,
            problem: common.problem,
            config_path: common.config,
            seed: common.seed,
            replications: common.replications,
            budget: common.budget,
            output_path: common.output,
            format: common.format.unwrap_or(default_format),
        }
    }
}

/// Runs the invocation and writes its output.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let exec = RayonExecutor::from_env()?;
    let report = run(cfg, &exec)?;
    let bytes = report.render(cfg.format)?;
    match &cfg.output_path {
        Some(path) => write_atomic(path, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))?;
        }
    }
    for note in &report.notes {
        eprintln!("{note}");
    }
    Ok(())
}

fn load<T: serde::de::DeserializeOwned + Default>(cfg: &RunConfig) -> Result<T, CliError> {
    match &cfg.config_path {
        Some(p) => config::load(p),
        None => Ok(T::default()),
    }
}

fn positive_override<T: Copy + PartialOrd + Default>(
    flag: &str,
    v: Option<T>,
    target: &mut T,
) -> Result<(), CliError> {
    if let Some(v) = v {
        if !(v > T::default()) {
            return Err(CliError::config(flag, "must be positive"));
        }
        *target = v;
    }
    Ok(())
}

/// Computes the report for an invocation without writing it.
pub fn run<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<Report, CliError> {
    match cfg.problem {
        ProblemKind::Quadratic => {
            let mut c: QuadraticConfig = load(cfg)?;
            positive_override("--budget", cfg.budget, &mut c.budget)?;
            positive_override("--replications", cfg.replications, &mut c.replications)?;
            let exp = QuadraticExperiment::new(c)?;
            match &cfg.command {
                Command::Compare {
                    mode: CompareMode::AllSplits,
                } => all_splits(&exp, cfg.seed, exec),
                Command::Compare {
                    mode: CompareMode::Curves,
                } => {
                    let (pts, hw) = (exp.config().curve_points, exp.config().curve_halfwidth);
                    curves(&exp, pts, hw, cfg.seed, exec)
                }
                Command::VerifyBound => verify_bound(&exp, cfg.seed),
                Command::Trajectories => Err(unsupported("trajectories", "pandemic")),
                other => common(&exp, other, cfg.seed, exec),
            }
        }
        ProblemKind::Pricing => {
            let mut c: PricingConfig = load(cfg)?;
            positive_override("--budget", cfg.budget, &mut c.budget)?;
            positive_override("--replications", cfg.replications, &mut c.replications)?;
            let exp = PricingExperiment::new(c)?;
            match &cfg.command {
                Command::Compare {
                    mode: CompareMode::AllSplits,
                } => Err(unsupported("compare --all-splits", "quadratic")),
                Command::Compare {
                    mode: CompareMode::Curves,
                } => {
                    let (pts, hw) = (exp.config().curve_points, exp.config().curve_halfwidth);
                    curves(&exp, pts, hw, cfg.seed, exec)
                }
                Command::VerifyBound => Err(unsupported("verify-bound", "quadratic")),
                Command::Trajectories => Err(unsupported("trajectories", "pandemic")),
                other => common(&exp, other, cfg.seed, exec),
            }
        }
        ProblemKind::Pandemic => {
            let mut c: PandemicConfig = load(cfg)?;
            positive_override("--budget", cfg.budget, &mut c.budget)?;
            positive_override("--replications", cfg.replications, &mut c.replications)?;
            let exp = PandemicExperiment::new(c)?;
            match &cfg.command {
                Command::Compare {
                    mode: CompareMode::AllSplits,
                } => Err(unsupported("compare --all-splits", "quadratic")),
                Command::Compare {
                    mode: CompareMode::Curves,
                } => Err(unsupported("compare --curves", "quadratic and pricing")),
                Command::VerifyBound => Err(unsupported("verify-bound", "quadratic")),
                Command::Trajectories => trajectories(&exp, cfg.seed, exec),
                other => common(&exp, other, cfg.seed, exec),
            }
        }
    }
}

fn unsupported(what: &str, problems: &str) -> CliError {
    CliError::config(
        "--problem",
        format!("{what} is only available for {problems}"),
    )
}

fn point_label(p: &DesignPoint) -> (String, f64) {
    match *p {
        DesignPoint::Component(i) => (format!("theta_{i}"), i as f64),
        DesignPoint::Price(x) => (format!("price_{x}"), x),
        DesignPoint::Group(j) => (format!("group_{j}"), j as f64),
    }
}

fn counts_text(a: &Allocation) -> String {
    match a.counts() {
        Some(c) => c.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
        None => a
            .fractions()
            .iter()
            .map(|w| crate::output::format_real(*w))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

const REPORT_HEADER: [&str; 6] = [
    "allocation_name",
    "mean_regret",
    "ci_half_width",
    "discarded",
    "replications",
    "allocation",
];

fn report_row(name: &str, r: &RegretReport, alloc: &Allocation) -> Vec<Cell> {
    vec![
        name.into(),
        r.mean_regret.into(),
        r.ci_half_width.into(),
        r.discarded.into(),
        r.replications.into(),
        counts_text(alloc).into(),
    ]
}

fn report_table(reports: &[NamedReport], allocations: &[NamedAllocation]) -> Table {
    let mut t = Table::new(REPORT_HEADER);
    for (r, a) in reports.iter().zip(allocations) {
        t.push(report_row(&r.name, &r.report, &a.allocation));
    }
    t
}

#[derive(Serialize)]
struct DesignDocument<'a> {
    problem: &'a str,
    budget: u64,
    seed: u64,
    points: Vec<String>,
    allocation: Vec<u64>,
    objective: f64,
    sensitivities: Option<&'a [f64]>,
    rejected_prior_draws: usize,
}

fn design_report(problem: &str, design: &Design, seed: u64) -> Result<Report, CliError> {
    let alloc = &design.allocation;
    let counts = alloc.counts().map(<[u64]>::to_vec).unwrap_or_default();
    let mut table = Table::new(["point", "coordinate", "count", "fraction", "sensitivity"]);
    for (i, p) in alloc.points().iter().enumerate() {
        let (label, coord) = point_label(p);
        let sens = design.sensitivities.as_ref().map_or(f64::NAN, |s| s[i]);
        table.push(vec![
            label.into(),
            coord.into(),
            counts[i].into(),
            alloc.fractions()[i].into(),
            sens.into(),
        ]);
    }
    let doc = DesignDocument {
        problem,
        budget: alloc.total(),
        seed,
        points: alloc.points().iter().map(|p| point_label(p).0).collect(),
        allocation: counts,
        objective: design.objective,
        sensitivities: design.sensitivities.as_deref(),
        rejected_prior_draws: design.rejected_prior_draws,
    };
    Ok(Report {
        table,
        document: Some(
            serde_json::to_string_pretty(&doc)
                .map_err(|e| CliError::Runtime(format!("cannot encode JSON: {e}")))?,
        ),
        notes: vec![format!("objective = {}", design.objective)],
    })
}

/// Commands shared by every problem.
fn common<X: Experiment, E: Executor>(
    exp: &X,
    command: &Command,
    seed: u64,
    exec: &E,
) -> Result<Report, CliError> {
    let budget = exp.budget();
    let reps = exp.replications();
    match command {
        Command::Design => design_report(exp.name(), &exp.design(budget, seed, exec)?, seed),
        Command::Evaluate { allocation } => {
            let named = match allocation {
                Some(counts) => {
                    if counts.len() != exp.points().len() {
                        return Err(CliError::config(
                            "--allocation",
                            format!(
                                "expected {} counts, got {}",
                                exp.points().len(),
                                counts.len()
                            ),
                        ));
                    }
                    let a = Allocation::from_counts(exp.points(), counts.clone())
                        .map_err(|e| CliError::config("--allocation", e.to_string()))?;
                    NamedAllocation::new("given", a)
                }
                None => {
                    NamedAllocation::new("optimized", exp.design(budget, seed, exec)?.allocation)
                }
            };
            let named = [named];
            let reports = compare(exp, &named, reps, seed, exec)?;
            Ok(Report {
                table: report_table(&reports, &named),
                ..Report::default()
            })
        }
        Command::Compare { .. } => {
            let (design, reports) = optimized_vs_uniform(exp, budget, reps, seed, exec)?;
            let named = [
                NamedAllocation::new("optimized", design.allocation),
                NamedAllocation::new("uniform", exp.uniform(budget)?),
            ];
            Ok(Report {
                table: report_table(&reports, &named),
                ..Report::default()
            })
        }
        Command::Sweep { budgets } => {
            let budgets = budgets
                .clone()
                .unwrap_or_else(|| exp.sweep_budgets().to_vec());
            let (designs, result) = sweep(exp, &budgets, reps, seed, exec)?;
            let mut table = Table::new([
                "n",
                "optimized_regret",
                "uniform_regret",
                "optimized_ci_half_width",
                "uniform_ci_half_width",
                "discarded",
                "replications",
                "optimized_allocation",
            ]);
            for (i, n) in result.axis.iter().enumerate() {
                let (o, u) = (&result.optimized[i], &result.uniform[i]);
                table.push(vec![
                    (*n).into(),
                    o.mean_regret.into(),
                    u.mean_regret.into(),
                    o.ci_half_width.into(),
                    u.ci_half_width.into(),
                    o.discarded.into(),
                    o.replications.into(),
                    counts_text(&designs[i].allocation).into(),
                ]);
            }
            Ok(Report {
                table,
                document: None,
                notes: vec![format!("loglog_slope = {}", result.loglog_slope)],
            })
        }
        Command::Trajectories | Command::VerifyBound => unreachable!("dispatched per problem"),
    }
}

fn all_splits<E: Executor>(
    exp: &QuadraticExperiment,
    seed: u64,
    exec: &E,
) -> Result<Report, CliError> {
    let budget = exp.budget();
    let mut named = exp.splits(budget)?;
    named.push(NamedAllocation::new(
        "optimized",
        exp.design(budget, seed, exec)?.allocation,
    ));
    named.push(NamedAllocation::new("uniform", exp.uniform(budget)?));
    let reports = compare(exp, &named, exp.replications(), seed, exec)?;
    let splits = named.len() - 2;
    let best = (0..splits).fold(0, |b, i| {
        if reports[i].report.mean_regret < reports[b].report.mean_regret {
            i
        } else {
            b
        }
    });
    Ok(Report {
        table: report_table(&reports, &named),
        document: None,
        notes: vec![format!(
            "empirical minimum at {} ({}); optimized {}",
            named[best].name,
            counts_text(&named[best].allocation),
            counts_text(&named[splits].allocation)
        )],
    })
}

fn curves<X: Experiment, E: Executor>(
    exp: &X,
    points: usize,
    halfwidth: f64,
    seed: u64,
    exec: &E,
) -> Result<Report, CliError> {
    let budget = exp.budget();
    let named = [
        NamedAllocation::new("optimized", exp.design(budget, seed, exec)?.allocation),
        NamedAllocation::new("uniform", exp.uniform(budget)?),
    ];
    let c = estimated_curves(exp, &named, points, halfwidth, seed)?;
    let mut table = Table::new(["curve", "x", "objective"]);
    for (x, v) in c.grid.iter().zip(&c.truth) {
        table.push(vec!["true".into(), (*x).into(), (*v).into()]);
    }
    let star_value = exp.problem().evaluate(&[c.x_star], &c.theta_star);
    table.push(vec![
        "true_decision".into(),
        c.x_star.into(),
        star_value.into(),
    ]);
    for e in &c.estimated {
        for (x, v) in c.grid.iter().zip(&e.values) {
            table.push(vec![e.name.clone().into(), (*x).into(), (*v).into()]);
        }
        table.push(vec![
            format!("{}_decision", e.name).into(),
            e.decision.into(),
            e.decision_value.into(),
        ]);
    }
    let mut notes = vec![format!("data from replication {}", c.replication)];
    for e in &c.estimated {
        notes.push(format!(
            "{}: theta_hat = {:?}, decision = {}",
            e.name, e.theta_hat, e.decision
        ));
    }
    Ok(Report {
        table,
        document: None,
        notes,
    })
}

fn trajectories<E: Executor>(
    exp: &PandemicExperiment,
    seed: u64,
    exec: &E,
) -> Result<Report, CliError> {
    let (design, bands) = exp.trajectories(exp.budget(), exp.replications(), seed, exec)?;
    let mut header = vec!["day".to_string()];
    for b in &bands.bands {
        for q in ["q25", "q50", "q75"] {
            header.push(format!("{}_{q}", b.name));
        }
    }
    let mut table = Table::new(header);
    let days = bands.bands.first().map_or(0, |b| b.q50.len());
    for day in 0..days {
        let mut row: Vec<Cell> = vec![day.into()];
        for b in &bands.bands {
            row.extend([b.q25[day].into(), b.q50[day].into(), b.q75[day].into()]);
        }
        table.push(row);
    }
    Ok(Report {
        table,
        document: None,
        notes: vec![format!(
            "optimized allocation {}; {} draws, {} discarded",
            counts_text(&design.allocation),
            bands.draws,
            bands.discarded
        )],
    })
}

fn verify_bound(exp: &QuadraticExperiment, seed: u64) -> Result<Report, CliError> {
    let (checks, skipped) = exp.verify_bound(seed)?;
    let mut table = Table::new([
        "draw",
        "theta0_hat",
        "theta1_hat",
        "regret",
        "bound",
        "holds",
    ]);
    for (i, (theta, c)) in checks.iter().enumerate() {
        table.push(vec![
            i.into(),
            theta[0].into(),
            theta[1].into(),
            c.regret.into(),
            c.bound.into(),
            c.holds.into(),
        ]);
    }
    let held = checks.iter().filter(|(_, c)| c.holds).count();
    Ok(Report {
        table,
        document: None,
        notes: vec![format!(
            "bound held on {held} of {} draws ({skipped} outside the parameter region)",
            checks.len()
        )],
    })
}
