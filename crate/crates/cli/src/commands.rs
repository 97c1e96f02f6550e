//! Command-line surface: argument parsing and the subcommand bodies.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hyploc_core::analysis::{fit_decay_rate, time_sliced_l2};
use hyploc_core::domain_check::{certify_rates, check_condition_ii, check_condition_ii_with_horizon, guaranteed_decay, Verdict, DEFAULT_HORIZON};
use hyploc_core::geometry::{restrict_domain, Grid1D, GridFunction, IntervalUnion, SpaceTimeField, TimeGrid};
use hyploc_core::ocp::{bump_initial, solve_ocp, InitialSpec, OcpSpec};
use hyploc_core::semigroup::{continuity_damped, transport_damped, transport_variable, wave_damped, FeedbackProfile};

use crate::csv_io::{table_field, table_profile, Table};
use crate::experiments::{run_experiment, write_solution, Artifacts};
use crate::plan::{read_yaml, DomainCheckSpec, Equation, ExperimentKind, ExperimentPlan, SimulateSpec};
use crate::plot::{emit_plot, Labels, PlotStyle, Series};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "hyploc", version, about = "Optimal control of transport and wave equations on long periodic domains")]
pub struct Cli {
    /// YAML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Concurrent solves in sweeps (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solver tolerance, overriding the configuration.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Line,
    Heatmap,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a control layout stabilizes uniformly in the domain length.
    CheckDomain {
        /// Inline layout, e.g. `{periodic: {prefix: [], period: 1, pattern: [[0, 0.2]]}}`.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long = "big-k")]
        big_k: Option<f64>,
    },
    /// Evaluate a closed-form semigroup and write `(t, w, value)` rows.
    Simulate {
        #[arg(long, value_enum)]
        equation: Equation,
    },
    /// Solve one optimal control problem.
    SolveOcp,
    /// Run an experiment plan (a stock plan when no configuration is given).
    Sweep {
        #[arg(long, value_enum)]
        experiment: Option<ExperimentKind>,
        #[arg(long)]
        resume: bool,
    },
    /// Fit `C e^{-μ|P-w|}` to a profile or to the time-sliced norm of a field.
    DecayFit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        center: f64,
        #[arg(long, default_value_t = 1e-8)]
        floor: f64,
    },
    /// Render a CSV written by another subcommand as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        style: Option<StyleArg>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Text for standard output.
    pub message: String,
    /// A negative verdict from `check-domain`.
    pub negative: bool,
}

impl Outcome {
    fn ok(message: String) -> Self {
        Self { message, negative: false }
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.negative)
    }
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("missing --{flag}")))
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::CheckDomain { domain, k, big_k } => check_domain(&cli, domain.as_deref(), *k, *big_k),
        Command::Simulate { equation } => simulate(&cli, *equation),
        Command::SolveOcp => solve(&cli),
        Command::Sweep { experiment, resume } => sweep(&cli, *experiment, *resume),
        Command::DecayFit { input, center, floor } => decay_fit(&cli, input, *center, *floor),
        Command::Plot { input, style } => plot(&cli, input, *style),
    }
}

fn check_domain(cli: &Cli, inline: Option<&str>, k: Option<f64>, big_k: Option<f64>) -> Result<Outcome, CliError> {
    let mut spec = match (&cli.config, inline) {
        (_, Some(text)) => DomainCheckSpec {
            domain: IntervalUnion::parse(text)?,
            k: None,
            big_k: None,
            horizon: None,
            gain: None,
            speed: None,
        },
        (Some(path), None) => read_yaml::<DomainCheckSpec>(path)?,
        (None, None) => return Err(CliError::Config("give --domain or --config".into())),
    };
    spec.k = k.or(spec.k);
    spec.big_k = big_k.or(spec.big_k);
    let dom = &spec.domain;
    let verdict = match (spec.k, spec.big_k) {
        (Some(k), Some(big_k)) => check_condition_ii_with_horizon(dom, k, big_k, spec.horizon.unwrap_or(DEFAULT_HORIZON))?,
        (None, None) => match certify_rates(dom) {
            Some(c) => Verdict {
                stabilizable: true,
                certificate: Some(c),
                reason: None,
            },
            None => {
                // No rates pass; report why a small density fraction fails.
                let rho = dom.tail().map_or(0.5, |t| t.pattern_measure() / t.period());
                let mut v = check_condition_ii(dom, 0.25 * rho.min(1.0), 1.0)?;
                v.stabilizable = false;
                v.certificate = None;
                v
            }
        },
        _ => return Err(CliError::Config("give both k and K, or neither".into())),
    };
    let decay = match (verdict.stabilizable, spec.gain) {
        (true, Some(g)) => {
            let (m, rate) = guaranteed_decay(dom, g, spec.speed.unwrap_or(2.0))?;
            Some(json!({ "M": m, "rate": rate }))
        }
        _ => None,
    };
    let report = json!({
        "stabilizable": verdict.stabilizable,
        "certificate": verdict.certificate,
        "reason": verdict.reason.map(|r| r.to_string()),
        "decay_bound": decay,
    });
    let text = serde_json::to_string_pretty(&report).expect("plain data serializes");
    if let Some(out) = &cli.out {
        std::fs::write(out, format!("{text}\n")).map_err(|e| CliError::io(out, e))?;
    }
    Ok(Outcome {
        message: text,
        negative: !verdict.stabilizable,
    })
}

fn initial(spec: &InitialSpec, grid: Grid1D) -> Result<GridFunction, CliError> {
    Ok(match *spec {
        InitialSpec::Bump { center, width } => bump_initial(width, center, grid)?,
        InitialSpec::Zero => GridFunction::zeros(grid),
    })
}

fn simulate(cli: &Cli, equation: Equation) -> Result<Outcome, CliError> {
    let spec: SimulateSpec = read_yaml(need(&cli.config, "config")?)?;
    let out = need(&cli.out, "out")?;
    if spec.frames == 0 {
        return Err(CliError::Config("frames must be positive".into()));
    }
    let grid = Grid1D::with_resolution(spec.length, spec.cells_per_unit)?;
    let time = TimeGrid::new(spec.horizon, spec.frames)?;
    let velocity = spec.velocity.build()?;
    let x0 = initial(&spec.initial, grid)?;
    let damping = spec.damping.clone().unwrap_or_else(IntervalUnion::empty);
    let fb = FeedbackProfile::uniform(&damping, spec.gain, spec.length)?;
    let constant = || {
        if velocity.is_constant() {
            Ok(velocity.c_min())
        } else {
            Err(CliError::Config(format!("{equation:?} needs a constant velocity")))
        }
    };
    let mut field = SpaceTimeField::zeros(grid, time);
    for m in 0..time.levels() {
        let t = time.time(m);
        let row = match equation {
            Equation::Transport => transport_damped(&x0, t, constant()?, &fb)?,
            Equation::TransportVar => transport_variable(&x0, t, &velocity, Some(&fb))?,
            Equation::Continuity => continuity_damped(&x0, t, &velocity, Some(&fb))?,
            Equation::Wave => {
                let local = restrict_domain(&damping, spec.length);
                wave_damped(&x0, &GridFunction::zeros(grid), t, constant()?, &local, spec.gain)?.x
            }
        };
        field.row_mut(m).copy_from_slice(row.values());
    }
    let mut table = Table::new("triples", vec!["t".into(), "w".into(), "value".into()])
        .with_meta("equation", format!("{equation:?}"))
        .with_meta("length", spec.length)
        .with_meta("cells", grid.cells());
    for m in 0..time.levels() {
        for (i, v) in field.row(m).iter().enumerate() {
            table.rows.push(vec![time.time(m), grid.node(i), *v]);
        }
    }
    table.write(out)?;
    Ok(Outcome::ok(format!("wrote {} rows to {}", table.rows.len(), out.display())))
}

fn ocp_spec(cli: &Cli) -> Result<OcpSpec, CliError> {
    let mut spec: OcpSpec = read_yaml(need(&cli.config, "config")?)?;
    if let Some(tol) = cli.tol {
        spec.tol = tol;
    }
    Ok(spec)
}

fn solve(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = ocp_spec(cli)?.build()?;
    let dir = need(&cli.out, "out")?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let sol = solve_ocp(&cfg)?;
    let artifacts = Artifacts::default();
    let summary = write_solution(dir, &cfg, &sol, &artifacts)?;
    artifacts.json(dir, "summary.json", &summary)?;
    Ok(Outcome::ok(serde_json::to_string_pretty(&summary).expect("plain data serializes")))
}

fn sweep(cli: &Cli, experiment: Option<ExperimentKind>, resume: bool) -> Result<Outcome, CliError> {
    let mut plan = match (&cli.config, experiment) {
        (Some(path), None) => read_yaml::<ExperimentPlan>(path)?,
        (None, Some(kind)) => ExperimentPlan::stock(kind),
        (Some(path), Some(kind)) => {
            let plan = read_yaml::<ExperimentPlan>(path)?;
            if plan.experiment != kind {
                return Err(CliError::Config(format!(
                    "--experiment {} disagrees with the plan ({})",
                    kind.name(),
                    plan.experiment.name()
                )));
            }
            plan
        }
        (None, None) => return Err(CliError::Config("give --config or --experiment".into())),
    };
    if let Some(out) = &cli.out {
        plan.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        plan.seed = seed;
    }
    if let Some(tol) = cli.tol {
        plan.base.tol = tol;
    }
    plan.resume |= resume;
    let report = run_experiment(&plan, cli.workers)?;
    Ok(Outcome::ok(serde_json::to_string_pretty(&report.summary).expect("plain data serializes")))
}

fn decay_fit(cli: &Cli, input: &Path, center: f64, floor: f64) -> Result<Outcome, CliError> {
    let table = Table::read(input)?;
    let profile = match table.kind() {
        "profile" => table_profile(&table)?,
        "field" => {
            let f = table_field(&table)?;
            time_sliced_l2(&f, f.time())?
        }
        other => return Err(CliError::Config(format!("cannot fit a `{other}` CSV"))),
    };
    let fit = fit_decay_rate(&profile, center, floor)?;
    let text = serde_json::to_string_pretty(&fit).expect("plain data serializes");
    if let Some(out) = &cli.out {
        std::fs::write(out, format!("{text}\n")).map_err(|e| CliError::io(out, e))?;
    }
    Ok(Outcome::ok(text))
}

fn plot(cli: &Cli, input: &Path, style: Option<StyleArg>) -> Result<Outcome, CliError> {
    let table = Table::read(input)?;
    let out = need(&cli.out, "out")?;
    let name = table.meta.get("name").cloned().unwrap_or_else(|| table.kind().to_string());
    let (series, default_style, labels): (Vec<Series>, _, _) = match table.kind() {
        "field" => {
            let f = table_field(&table)?;
            let nodes = f.grid().nodes();
            let rows = (0..f.time().levels())
                .map(|m| Series::new(format!("{}", f.time().time(m)), nodes.clone(), f.row(m).to_vec()))
                .collect();
            (rows, PlotStyle::Heatmap, Labels { title: name, x: "w".into(), y: "time level".into() })
        }
        _ => {
            let x = table.rows.iter().map(|r| r[0]).collect::<Vec<_>>();
            let series = (1..table.columns.len())
                .map(|j| Series::new(table.columns[j].clone(), x.clone(), table.rows.iter().map(|r| r[j]).collect()))
                .collect();
            (series, PlotStyle::Line, Labels { title: name, x: table.columns[0].clone(), y: String::new() })
        }
    };
    let style = match style {
        Some(StyleArg::Line) => PlotStyle::Line,
        Some(StyleArg::Heatmap) => PlotStyle::Heatmap,
        None => default_style,
    };
    emit_plot(&series, style, &labels, out)?;
    Ok(Outcome::ok(format!("wrote {}", out.display())))
}
