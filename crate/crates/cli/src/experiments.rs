//! The experiment pipelines: domain restriction, control solves, analysis,
//! CSV and plots.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use hyploc_core::analysis::{
    fit_decay_rate, localization_certificate, time_sliced_l2, weighted_spacetime_norms, DecayFit, NormKind, NormReport,
};
use hyploc_core::domain_check::{certify_rates, guaranteed_decay};
use hyploc_core::geometry::{restrict_domain, ExpWeight, Grid1D, GridFunction, SpaceTimeField};
use hyploc_core::ocp::{solve_ocp, uncontrolled_objective, OcpConfig, OcpSolution, OcpSpec};
use hyploc_core::semigroup::{adversarial_probes, estimate_operator_norm, transport_damped, FeedbackProfile};

use crate::csv_io::{field_table, profile_table, table_field, Table};
use crate::plan::{ExperimentKind, ExperimentPlan};
use crate::plot::{emit_plot, Labels, PlotStyle, Series};
use crate::CliError;

/// Files written by one run; removed again if the run fails.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Mutex<Vec<PathBuf>>,
}

impl Artifacts {
    pub fn record(&self, path: PathBuf) {
        self.files.lock().expect("artifact list").push(path);
    }

    pub fn files(&self) -> Vec<PathBuf> {
        let mut f = self.files.lock().expect("artifact list").clone();
        f.sort();
        f
    }

    fn discard(&self) {
        for f in self.files.lock().expect("artifact list").drain(..) {
            let _ = std::fs::remove_file(f);
        }
    }

    pub fn table(&self, dir: &Path, name: &str, table: &Table) -> Result<(), CliError> {
        let path = dir.join(name);
        table.write(&path)?;
        self.record(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&self, dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("plain data serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        self.record(path);
        Ok(())
    }

    pub fn plot(&self, dir: &Path, name: &str, series: &[Series], style: PlotStyle, labels: &Labels) -> Result<(), CliError> {
        let path = dir.join(name);
        emit_plot(series, style, labels, &path)?;
        self.record(path);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Runs a plan with at most `workers` concurrent solves (0 picks the
/// number of cores). On failure every file written by the run is removed.
pub fn run_experiment(plan: &ExperimentPlan, workers: usize) -> Result<RunReport, CliError> {
    plan.validate()?;
    std::fs::create_dir_all(&plan.output).map_err(|e| CliError::io(&plan.output, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let artifacts = Artifacts::default();
    let result = pool.install(|| match plan.experiment {
        ExperimentKind::SpaceTimeField => space_time_field(plan, &artifacts),
        ExperimentKind::SlicedNorms => sliced_norms(plan, &artifacts),
        ExperimentKind::DomainSweep => domain_sweep(plan, &artifacts),
        ExperimentKind::AlphaSweep => alpha_sweep(plan, &artifacts),
        ExperimentKind::StabilizabilityDemo => stabilizability_demo(plan, &artifacts),
    });
    match result {
        Ok(mut summary) => {
            summary["experiment"] = json!(plan.experiment.name());
            artifacts.json(&plan.output, "summary.json", &summary)?;
            Ok(RunReport {
                files: artifacts.files(),
                summary,
            })
        }
        Err(e) => {
            artifacts.discard();
            Err(e.context(plan.experiment.name()))
        }
    }
}

fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

/// Optimal state for `cfg`, either solved or loaded from `cache`.
struct StateRun {
    x: SpaceTimeField,
    solution: Option<OcpSolution>,
}

fn solve_or_load(cfg: &OcpConfig, cache: Option<&Path>, plan: &ExperimentPlan, artifacts: &Artifacts) -> Result<StateRun, CliError> {
    if let Some(path) = cache {
        if plan.resume && path.exists() {
            let x = table_field(&Table::read(path)?)?;
            if x.grid() != cfg.grid || x.time() != cfg.time {
                return Err(CliError::Config(format!("{} does not match the configured grids", path.display())));
            }
            return Ok(StateRun { x, solution: None });
        }
    }
    let sol = solve_ocp(cfg)?;
    if let Some(path) = cache {
        if plan.save_fields {
            field_table("x", &sol.x).write(path)?;
            artifacts.record(path.to_path_buf());
        }
    }
    Ok(StateRun {
        x: sol.x.clone(),
        solution: Some(sol),
    })
}

/// Rows and columns thinned to keep heatmaps small.
fn heatmap_rows(field: &SpaceTimeField) -> Vec<Series> {
    let grid = field.grid();
    let time = field.time();
    let cstep = grid.cells().div_ceil(256).max(1);
    let rstep = time.levels().div_ceil(160).max(1);
    let nodes: Vec<f64> = grid.nodes().into_iter().step_by(cstep).collect();
    (0..time.levels())
        .step_by(rstep)
        .map(|m| {
            let vals = field.row(m).iter().copied().step_by(cstep).collect();
            Series::new(format!("{:.3}", time.time(m)), nodes.clone(), vals)
        })
        .collect()
}

pub fn write_solution(dir: &Path, cfg: &OcpConfig, sol: &OcpSolution, artifacts: &Artifacts) -> Result<Value, CliError> {
    artifacts.table(dir, "x.csv", &field_table("x", &sol.x))?;
    artifacts.table(dir, "lambda.csv", &field_table("lambda", &sol.lambda))?;
    artifacts.table(dir, "u.csv", &field_table("u", &sol.u))?;
    Ok(json!({
        "objective": sol.objective,
        "uncontrolled_objective": uncontrolled_objective(cfg)?,
        "residual": sol.residual,
        "solver": sol.solver,
        "iterations": sol.iterations,
        "cells": cfg.grid.cells(),
        "steps": cfg.time.steps(),
        "unknowns": cfg.unknowns(),
    }))
}

fn space_time_field(plan: &ExperimentPlan, artifacts: &Artifacts) -> Result<Value, CliError> {
    let cfg = plan.base.build()?;
    let dir = &plan.output;
    let (x, summary) = if plan.resume && dir.join("x.csv").exists() {
        let x = table_field(&Table::read(&dir.join("x.csv"))?)?;
        (x, json!({ "resumed": true }))
    } else {
        let sol = solve_ocp(&cfg)?;
        let s = write_solution(dir, &cfg, &sol, artifacts)?;
        (sol.x, s)
    };
    if plan.plot {
        let labels = Labels {
            title: "optimal state".into(),
            x: "w".into(),
            y: "time level".into(),
        };
        artifacts.plot(dir, "x.svg", &heatmap_rows(&x), PlotStyle::Heatmap, &labels)?;
    }
    Ok(summary)
}

fn profile_fit(x: &SpaceTimeField, plan: &ExperimentPlan) -> Result<(GridFunction, Option<DecayFit>), CliError> {
    let profile = time_sliced_l2(x, x.time())?;
    let fit = fit_decay_rate(&profile, plan.weight_center(), plan.floor).ok();
    Ok((profile, fit))
}

fn sliced_norms(plan: &ExperimentPlan, artifacts: &Artifacts) -> Result<Value, CliError> {
    let cfg = plan.base.build()?;
    let dir = &plan.output;
    let run = solve_or_load(&cfg, Some(&dir.join("x.csv")), plan, artifacts)?;
    let (profile, fit) = profile_fit(&run.x, plan)?;
    artifacts.table(dir, "profile.csv", &profile_table("sliced_l2", &profile))?;
    if plan.plot {
        let nodes = profile.grid().nodes();
        let mut series = vec![Series::new("||x(w)||", nodes.clone(), profile.values().to_vec())];
        if let Some(f) = &fit {
            series.push(Series::new("fit", nodes.clone(), nodes.iter().map(|w| f.eval(*w)).collect()));
        }
        let labels = Labels {
            title: "time-sliced L2 norm".into(),
            x: "w".into(),
            y: "L2(0,T) norm".into(),
        };
        artifacts.plot(dir, "profile.svg", &series, PlotStyle::Line, &labels)?;
    }
    Ok(json!({
        "fit": fit,
        "objective": run.solution.as_ref().map(|s| s.objective),
        "residual": run.solution.as_ref().map(|s| s.residual),
    }))
}

fn with_length(spec: &OcpSpec, length: f64) -> OcpSpec {
    OcpSpec {
        length,
        ..spec.clone()
    }
}

fn domain_sweep(plan: &ExperimentPlan, artifacts: &Artifacts) -> Result<Value, CliError> {
    let dir = &plan.output;
    let runs: Vec<(f64, SpaceTimeField)> = plan
        .lengths
        .par_iter()
        .map(|&l| {
            let cfg = with_length(&plan.base, l).build()?;
            let run = solve_or_load(&cfg, Some(&dir.join(format!("x_L{}.csv", tag(l)))), plan, artifacts)
                .map_err(|e| e.context(&format!("L = {l}")))?;
            Ok((l, run.x))
        })
        .collect::<Result<_, CliError>>()?;
    let unit = ExpWeight::unit();
    let plain: Vec<(f64, NormReport)> = runs
        .iter()
        .map(|(l, x)| Ok((*l, weighted_spacetime_norms(x, &unit, x.time())?)))
        .collect::<Result<_, CliError>>()?;
    let smallest = runs
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty sweep");
    let (_, fit) = profile_fit(&smallest.1, plan)?;
    let mu = fit.as_ref().map_or(0.0, |f| f.rate.max(0.0));
    let weight = ExpWeight::new(plan.weight_center(), mu)?;
    let weighted: Vec<(f64, NormReport)> = runs
        .iter()
        .map(|(l, x)| Ok((*l, weighted_spacetime_norms(x, &weight, x.time())?)))
        .collect::<Result<_, CliError>>()?;
    let cert_plain = localization_certificate(&plain, 0.0, NormKind::L2L2)?;
    let cert_weighted = localization_certificate(&weighted, mu, NormKind::TwoAndInf)?;
    let mut table = Table::new(
        "table",
        ["L", "l2l2", "cl2", "two_and_inf", "one_or_two", "weighted_two_and_inf"]
            .map(String::from)
            .to_vec(),
    )
    .with_meta("weight_center", plan.weight_center())
    .with_meta("weight_rate", mu);
    for ((l, r), (_, w)) in plain.iter().zip(&weighted) {
        table.rows.push(vec![*l, r.l2l2, r.cl2, r.two_and_inf, r.one_or_two, w.two_and_inf]);
    }
    artifacts.table(dir, "norms.csv", &table)?;
    if plan.plot {
        let ls: Vec<f64> = plain.iter().map(|p| p.0).collect();
        let series = vec![
            Series::new("L2(0,T;L2)", ls.clone(), plain.iter().map(|p| p.1.l2l2).collect()),
            Series::new("weighted 2^inf", ls, weighted.iter().map(|p| p.1.two_and_inf).collect()),
        ];
        let labels = Labels {
            title: "state norm against domain size".into(),
            x: "L".into(),
            y: "norm".into(),
        };
        artifacts.plot(dir, "norms.svg", &series, PlotStyle::Line, &labels)?;
    }
    let l2: Vec<f64> = plain.iter().map(|p| p.1.l2l2).collect();
    Ok(json!({
        "increasing": l2.windows(2).all(|w| w[1] > w[0]),
        "l2l2_spread": l2.iter().copied().fold(0.0, f64::max) / l2.iter().copied().fold(f64::INFINITY, f64::min),
        "unweighted": cert_plain,
        "weighted": cert_weighted,
        "fit": fit,
    }))
}

fn alpha_sweep(plan: &ExperimentPlan, artifacts: &Artifacts) -> Result<Value, CliError> {
    let dir = &plan.output;
    let runs: Vec<(f64, SpaceTimeField, f64)> = plan
        .alphas
        .par_iter()
        .map(|&alpha| {
            let cfg = OcpSpec { alpha, ..plan.base.clone() }.build()?;
            let cache = dir.join(format!("x_alpha{}.csv", tag(alpha)));
            let run = solve_or_load(&cfg, Some(&cache), plan, artifacts).map_err(|e| e.context(&format!("alpha = {alpha}")))?;
            // Peak control from u = Bᵀλ/α² when solved; from the stored state
            // alone the control is not recoverable, so resume reports NaN.
            let peak = run.solution.as_ref().map_or(f64::NAN, |s| s.u.max_abs());
            Ok((alpha, run.x, peak))
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new(
        "table",
        ["alpha", "peak_u", "l2l2", "cl2", "decay_rate"].map(String::from).to_vec(),
    );
    let mut profiles = Vec::new();
    for (alpha, x, peak) in &runs {
        let r = weighted_spacetime_norms(x, &ExpWeight::unit(), x.time())?;
        let (profile, fit) = profile_fit(x, plan)?;
        table
            .rows
            .push(vec![*alpha, *peak, r.l2l2, r.cl2, fit.as_ref().map_or(f64::NAN, |f| f.rate)]);
        profiles.push(Series::new(format!("alpha = {alpha}"), profile.grid().nodes(), profile.values().to_vec()));
    }
    artifacts.table(dir, "alpha.csv", &table)?;
    if plan.plot {
        let labels = Labels {
            title: "time-sliced state norm by control weight".into(),
            x: "w".into(),
            y: "L2(0,T) norm".into(),
        };
        artifacts.plot(dir, "alpha.svg", &profiles, PlotStyle::Line, &labels)?;
    }
    Ok(json!({ "rows": table.rows }))
}

fn stabilizability_demo(plan: &ExperimentPlan, artifacts: &Artifacts) -> Result<Value, CliError> {
    let dir = &plan.output;
    let c = match plan.base.velocity {
        hyploc_core::characteristics::VelocitySpec::Constant { value } => value,
        _ => return Err(CliError::Config("the stabilizability demo needs a constant velocity".into())),
    };
    let dom = &plan.base.control;
    let cert = certify_rates(dom);
    let bound = if cert.is_some() {
        Some(guaranteed_decay(dom, plan.gain, c)?)
    } else {
        None
    };
    let rows: Vec<Vec<Vec<f64>>> = plan
        .lengths
        .par_iter()
        .enumerate()
        .map(|(idx, &l)| {
            let grid = Grid1D::with_resolution(l, plan.base.cells_per_unit)?;
            let fb = FeedbackProfile::uniform(dom, plan.gain, l)?;
            let local = restrict_domain(dom, l);
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed.wrapping_add(idx as u64));
            let shift = grid.h() / c;
            (0..=plan.frames)
                .map(|j| {
                    let t = ((plan.base.horizon * j as f64 / plan.frames as f64) / shift).round() * shift;
                    let probes = adversarial_probes(grid, &local, c, t);
                    let prop = |x0: &GridFunction| transport_damped(x0, t, c, &fb);
                    let est = estimate_operator_norm(&prop, grid, plan.samples, &mut rng, &probes)?;
                    let b = bound.map_or(f64::NAN, |(m, r)| m * (-r * t).exp());
                    Ok(vec![l, t, est, b])
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = Table::new("table", ["L", "t", "norm_estimate", "bound"].map(String::from).to_vec())
        .with_meta("gain", plan.gain)
        .with_meta("speed", c);
    table.rows = rows.iter().flatten().cloned().collect();
    artifacts.table(dir, "decay.csv", &table)?;
    if plan.plot {
        let series: Vec<Series> = rows
            .iter()
            .map(|r| Series::new(format!("L = {}", r[0][0]), r.iter().map(|v| v[1]).collect(), r.iter().map(|v| v[2]).collect()))
            .collect();
        let labels = Labels {
            title: "closed-loop semigroup norm".into(),
            x: "t".into(),
            y: "norm estimate".into(),
        };
        artifacts.plot(dir, "decay.svg", &series, PlotStyle::Line, &labels)?;
    }
    Ok(json!({
        "stabilizable": cert.is_some(),
        "certificate": cert,
        "decay_bound": bound.map(|(m, r)| json!({ "M": m, "rate": r })),
    }))
}
