//! Runs a resolved configuration and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{equilibrium_density, validate_config, Advisory, ConfigError, ExperimentConfig, ExperimentKind, StepperChoice};
use crate::error::Error;
use crate::ibm::{density_profile, run_ibm, PointPopulation, Stepper};
use crate::lineage::{
    identifiability_demo, occupation_samples, speed_measure_density, wasserstein1_to_density, wavefront_spec, IdentifiabilitySetup,
};
use crate::lookdown::{levels_uniformity_stat, project, run_lookdown, trace_lineage, EventKind, LevelledPopulation};
use crate::model::DemographyModel;
use crate::pde::{epsilon_sweep, measure_wave_speed, step_initial, Grid1D, PdeKind, PdeProblem, SolveOptions};
use crate::plot::{emit_plot, render_svg, PlotStyle, Series};
use crate::rng::stream;
use crate::stability::{unstable_band, HomogeneousEquilibrium};

pub const TOOLKIT: &str = "locreg";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("runtime error in {module}: {source}")]
    Runtime { module: &'static str, source: Error },
    #[error("writing {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

fn in_module(module: &'static str) -> impl Fn(Error) -> RunError {
    move |source| RunError::Runtime { module, source }
}

/// Files written by a run, relative to its output directory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub out: PathBuf,
    pub artifacts: Vec<String>,
    pub advisories: Vec<Advisory>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| RunError::Io { path, message: e.to_string() })?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<String, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| RunError::Io { path: self.dir.join(name), message: e.to_string() };
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io { path: self.dir.join(name), message: e.to_string() })?;
        self.write(name, &bytes)?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn svg(&mut self, name: &str, svg: Result<String, Error>) -> Result<(), RunError> {
        let svg = svg.map_err(in_module("plot"))?;
        self.write(name, svg.as_bytes())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn coord_header(prefix: &[&str], dim: usize) -> Vec<String> {
    let mut h = header(prefix);
    h.extend((1..=dim).map(|k| format!("x{k}")));
    h
}

/// Validates, resolves and runs `config`, writing artifacts and a manifest
/// into its output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let report = validate_config(config);
    if !report.ok() {
        return Err(ConfigError(report.errors).into());
    }
    let c = config.resolve()?;
    let model = c.model()?;
    let dir = c.out.clone().expect("resolved");
    fs::create_dir_all(&dir).map_err(|e| RunError::Io { path: dir.clone(), message: e.to_string() })?;
    let mut art = Artifacts { dir: dir.clone(), files: Vec::new() };
    match c.kind() {
        ExperimentKind::Ibm => ibm_experiment(&c, &model, &mut art)?,
        ExperimentKind::Lookdown => lookdown_experiment(&c, &model, &mut art)?,
        ExperimentKind::Pde => pde_experiment(&c, &model, &mut art)?,
        ExperimentKind::Lineage => lineage_experiment(&c, &mut art)?,
        ExperimentKind::Stability => stability_experiment(&c, &model, &mut art)?,
        ExperimentKind::ConvergenceSweep => sweep_experiment(&c, &model, &mut art)?,
        ExperimentKind::Identifiability => identifiability_experiment(&c, &model, &mut art)?,
    }
    let mut artifacts = art.files.clone();
    artifacts.push("manifest.json".into());
    let manifest = json!({
        "toolkit": TOOLKIT,
        "version": VERSION,
        "experiment": c.kind().name(),
        "config": c,
        "advisories": report.advisories,
        "artifacts": artifacts,
    });
    art.json("manifest.json", &manifest)?;
    Ok(RunSummary { out: dir, artifacts: art.files, advisories: report.advisories })
}

/// Uniform atoms in the lower `fill` fraction (along the first axis) of the domain.
fn initial_population<R: Rng + ?Sized>(model: &DemographyModel, count: usize, fill: f64, n: f64, rng: &mut R) -> PointPopulation {
    let d = &model.domain;
    let dim = d.dim();
    let mut positions = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for k in 0..dim {
            let span = d.hi[k] - d.lo[k];
            let span = if k == 0 { span * fill } else { span };
            positions.push(d.lo[k] + rng.random::<f64>() * span);
        }
    }
    PointPopulation::new(dim, positions, n).expect("positions match dimension")
}

fn initial_count(model: &DemographyModel, n: f64, fill: f64, explicit: Option<usize>) -> usize {
    explicit.unwrap_or_else(|| (n * equilibrium_density(model) * model.domain.volume() * fill).round() as usize)
}

fn grid_for(model: &DemographyModel, h: Option<f64>) -> Grid1D {
    let (lo, hi) = (model.domain.lo[0], model.domain.hi[0]);
    Grid1D::span(lo, hi, h.unwrap_or((hi - lo) / 200.0))
}

fn density_rows(snapshots: &[PointPopulation], model: &DemographyModel, grid: Grid1D) -> Result<Vec<Vec<String>>, Error> {
    let mut rows = Vec::new();
    for s in snapshots {
        let prof = density_profile(s, grid, &model.kernel_f)?;
        for (x, v) in grid.nodes().zip(&prof.values) {
            rows.push(vec![num(s.time), num(x), num(*v)]);
        }
    }
    Ok(rows)
}

fn ibm_experiment(c: &ExperimentConfig, model: &DemographyModel, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.ibm.clone().unwrap_or_default();
    let (n, dt, t_end, every, seed) = (c.n.unwrap(), c.dt.unwrap(), c.t_end.unwrap(), c.snapshot_every.unwrap(), c.seed.unwrap());
    let fill = o.initial_fill.unwrap_or(1.0);
    let count = initial_count(model, n, fill, o.initial_count);
    let stepper = match o.stepper {
        StepperChoice::Discrete => Stepper::Discrete { dt },
        StepperChoice::Exact => Stepper::Exact { mu_cap: o.mu_cap.unwrap_or(2.0 * model.gamma_cap + 1.0) },
    };
    let reps = c.replicates.unwrap();
    let runs = (0..reps as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let init = initial_population(model, count, fill, n, &mut rng);
            run_ibm(model, &init, t_end, every, &mut rng, stepper)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(in_module("ibm"))?;

    let first = &runs[0];
    let dim = model.dim();
    let mut rows = Vec::new();
    for s in &first.snapshots {
        for (i, p) in s.points().enumerate() {
            let mut r = vec![num(s.time), i.to_string()];
            r.extend(p.iter().map(|v| num(*v)));
            rows.push(r);
        }
    }
    art.csv("snapshots.csv", &coord_header(&["t", "atom_index"], dim), &rows)?;
    let mass: Vec<Vec<String>> = runs
        .iter()
        .enumerate()
        .flat_map(|(k, r)| r.snapshots.iter().map(move |s| vec![k.to_string(), num(s.time), num(s.total_mass())]))
        .collect();
    art.csv("mass.csv", &header(&["replicate", "t", "mass"]), &mass)?;
    if dim == 1 {
        let rows = density_rows(&first.snapshots, model, grid_for(model, o.grid_h)).map_err(in_module("ibm"))?;
        let text = art.csv("density.csv", &header(&["t", "grid_x", "value"]), &rows)?;
        art.svg("density.svg", emit_plot(&text, PlotStyle::DensityTrajectory, "population density"))?;
    }
    let final_mass: Vec<f64> = runs.iter().map(|r| r.snapshots.last().unwrap().total_mass()).collect();
    art.json(
        "summary.json",
        &json!({
            "replicates": reps,
            "initial_count": count,
            "final_mass": final_mass,
            "extinct_at": runs.iter().map(|r| r.extinct_at).collect::<Vec<_>>(),
        }),
    )
}

fn lookdown_experiment(c: &ExperimentConfig, model: &DemographyModel, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.lookdown.clone().unwrap_or_default();
    let (n, dt, t_end, every, seed) = (c.n.unwrap(), c.dt.unwrap(), c.t_end.unwrap(), c.snapshot_every.unwrap(), c.seed.unwrap());
    let fill = o.initial_fill.unwrap_or(1.0);
    let count = initial_count(model, n, fill, o.initial_count);
    let reps = c.replicates.unwrap();
    let n_snaps = (t_end / every + 1e-9).floor() as usize;
    let runs = (0..reps as u64)
        .into_par_iter()
        .map(|k| -> Result<(LevelledPopulation, Vec<Vec<String>>), Error> {
            let mut rng = stream(seed, k);
            let init = initial_population(model, count, fill, n, &mut rng);
            let mut pop = LevelledPopulation::from_points(&init, model.theta, &mut rng);
            let mut rows = Vec::new();
            let mut record = |pop: &LevelledPopulation| {
                let ks = levels_uniformity_stat(pop).ok();
                rows.push(vec![
                    k.to_string(),
                    num(pop.time),
                    num(project(pop).total_mass()),
                    pop.len().to_string(),
                    ks.map_or(String::new(), |r| num(r.statistic)),
                    ks.map_or(String::new(), |r| num(r.p_value)),
                ]);
            };
            record(&pop);
            for _ in 0..n_snaps {
                run_lookdown(&mut pop, model, every, dt, &mut rng)?;
                record(&pop);
            }
            Ok((pop, rows))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(in_module("lookdown"))?;

    let rows: Vec<Vec<String>> = runs.iter().flat_map(|r| r.1.iter().cloned()).collect();
    art.csv("mass.csv", &header(&["replicate", "t", "mass", "count", "ks_statistic", "ks_p_value"]), &rows)?;

    let pop = &runs[0].0;
    let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
    let events: Vec<Vec<String>> = pop
        .log
        .iter()
        .map(|e| {
            vec![
                num(e.t),
                match e.kind {
                    EventKind::Birth => "birth".into(),
                    EventKind::Death => "death".into(),
                },
                e.parent.map_or(String::new(), |p| pop.labels.render(p)),
                pop.labels.render(e.label),
                u8::from(e.swap).to_string(),
                join(&e.x_parent),
                join(&e.x_child),
                num(e.new_level),
            ]
        })
        .collect();
    art.csv(
        "events.csv",
        &header(&["t", "event", "parent_label", "child_label", "swap", "x_parent", "x_child", "new_level"]),
        &events,
    )?;

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (j, ind) in pop.individuals.iter().take(o.lineages).enumerate() {
        let path = trace_lineage(&pop.log, &pop.labels, pop.log_start, ind.label, &ind.position, pop.time, pop.log_start)
            .map_err(in_module("lookdown"))?;
        let mut s = Series { name: pop.labels.render(ind.label), xs: vec![], ys: vec![] };
        for (k, (back, x)) in path.iter().enumerate() {
            let mut r = vec![j.to_string(), num(*back)];
            r.extend(x.iter().map(|v| num(*v)));
            rows.push(r);
            // step shape: hold the previous position until this jump
            if k > 0 {
                s.xs.push(*back);
                s.ys.push(*s.ys.last().unwrap());
            }
            s.xs.push(*back);
            s.ys.push(x[0]);
        }
        s.xs.push(pop.time - pop.log_start);
        s.ys.push(*s.ys.last().unwrap());
        series.push(s);
    }
    art.csv("lineages.csv", &coord_header(&["lineage", "s"], model.dim()), &rows)?;
    if !series.is_empty() {
        art.svg("lineages.svg", render_svg("ancestral lineages", "backward time s", "x1", &series, false))?;
    }
    Ok(())
}

fn pde_experiment(c: &ExperimentConfig, model: &DemographyModel, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.pde.clone().unwrap_or_default();
    let kind = o.kind.unwrap_or(PdeKind::ReactionDiffusion);
    let sigma2 = c.sigma2.unwrap();
    let problem = PdeProblem {
        kind,
        reaction: model.f,
        sigma2,
        drift: o.drift,
        kernel: o.kernel.or(match kind {
            PdeKind::NonlocalRd | PdeKind::NonlocalPme => Some(model.kernel_f),
            _ => None,
        }),
    };
    let grid = grid_for(model, Some(o.h));
    let init = step_initial(grid, o.initial_edge.unwrap_or(grid.x(0)), o.initial_value);
    let opts = SolveOptions::new(c.t_end.unwrap(), c.dt.unwrap(), c.snapshot_every.unwrap());
    let traj = problem.solve(&init, &opts).map_err(in_module("pde"))?;
    let rows: Vec<Vec<String>> = traj
        .snapshots
        .iter()
        .flat_map(|s| grid.nodes().zip(&s.values).map(move |(x, v)| vec![num(s.t), num(x), num(*v)]))
        .collect();
    let text = art.csv("density.csv", &header(&["t", "grid_x", "value"]), &rows)?;
    art.svg("density.svg", emit_plot(&text, PlotStyle::DensityTrajectory, "solution profiles"))?;
    let speed = measure_wave_speed(&traj.snapshots, o.level).ok();
    if let Some(ws) = &speed {
        let rows: Vec<Vec<String>> = ws.fronts.iter().map(|(t, x)| vec![num(*t), num(*x)]).collect();
        art.csv("fronts.csv", &header(&["t", "front"]), &rows)?;
    }
    art.json(
        "summary.json",
        &json!({
            "speed": speed.map(|s| s.speed),
            "clipped_mass": traj.clipped_mass,
            "steps": traj.steps,
        }),
    )
}

fn lineage_experiment(c: &ExperimentConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.lineage.clone().unwrap_or_default();
    let case = o.case.expect("resolved");
    let spec = wavefront_spec(&case);
    let stationary = match speed_measure_density(&spec, o.h) {
        Ok(s) => Some(s),
        Err(Error::NoStationaryDistribution) => None,
        Err(e) => return Err(RunError::Runtime { module: "lineage", source: e }),
    };
    let start = o.start.unwrap_or(spec.anchor);
    let samples = occupation_samples(&spec, start, c.t_end.unwrap(), c.dt.unwrap(), o.burn_in, o.record_every, o.paths, c.seed.unwrap())
        .map_err(in_module("lineage"))?;
    if samples.is_empty() {
        return Err(RunError::Runtime { module: "lineage", source: Error::NoRows });
    }
    let (lo, hi) = match &stationary {
        Some(s) => (s.xs[0], s.xs[s.xs.len() - 1]),
        None => samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x))),
    };
    let bins = o.bins.max(1);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &x in &samples {
        let k = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = samples.len() as f64;
    let centers: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    let occ: Vec<f64> = counts.iter().map(|&n| n as f64 / (total * width)).collect();
    let rows: Vec<Vec<String>> = centers.iter().zip(&occ).map(|(x, d)| vec![num(*x), num(*d)]).collect();
    art.csv("occupation.csv", &header(&["xi", "density"]), &rows)?;
    let mut series = vec![];
    let mut w1 = None;
    if let Some(s) = &stationary {
        let rows: Vec<Vec<String>> = s.xs.iter().zip(&s.density).map(|(x, d)| vec![num(*x), num(*d)]).collect();
        art.csv("stationary.csv", &header(&["xi", "density"]), &rows)?;
        series.push(Series { name: "speed measure".into(), xs: s.xs.clone(), ys: s.density.clone() });
        w1 = Some(wasserstein1_to_density(&samples, &s.xs, &s.density));
    }
    series.push(Series { name: "occupation".into(), xs: centers, ys: occ });
    art.svg("overlay.svg", render_svg("lineage position behind the front", "ξ", "density", &series, false))?;
    art.json(
        "summary.json",
        &json!({
            "case": case,
            "stationary_mean": stationary.as_ref().map(|s| s.mean()),
            "occupation_mean": samples.iter().sum::<f64>() / total,
            "wasserstein1": w1,
            "samples": samples.len(),
        }),
    )
}

fn stability_experiment(c: &ExperimentConfig, model: &DemographyModel, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.stability.clone().unwrap_or_default();
    let eq = HomogeneousEquilibrium::from_model(model, o.bracket).map_err(in_module("stability"))?;
    let band = unstable_band(&eq, o.u_max, o.du).map_err(in_module("stability"))?;
    let pts = o.points.max(1);
    let rows: Vec<Vec<String>> = (0..=pts)
        .map(|k| {
            let u = o.u_max * k as f64 / pts as f64;
            vec![num(u), num(eq.growth_rate(u))]
        })
        .collect();
    let text = art.csv("lambda.csv", &header(&["u", "lambda"]), &rows)?;
    art.svg("lambda.svg", emit_plot(&text, PlotStyle::GrowthRate, "linear growth rate"))?;
    art.json("band.json", &json!({ "equilibrium": eq, "band": band }))
}

fn sweep_experiment(c: &ExperimentConfig, model: &DemographyModel, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.sweep.clone().unwrap_or_default();
    let grid = grid_for(model, Some(o.h));
    let init = step_initial(grid, o.initial_edge.unwrap_or(grid.x(grid.len / 2)), 1.0);
    let centers = o.test_centers.clone().unwrap_or_default();
    let points = epsilon_sweep(&o.epsilons, &init, c.t_end.unwrap(), model.f, c.sigma2.unwrap(), &centers).map_err(in_module("sweep"))?;
    let rows: Vec<Vec<String>> = points.iter().map(|p| vec![num(p.epsilon), num(p.rd_error), num(p.pme_error)]).collect();
    let text = art.csv("sweep.csv", &header(&["epsilon", "rd_error", "pme_error"]), &rows)?;
    art.svg("sweep.svg", emit_plot(&text, PlotStyle::Columns, "distance to the local solution"))?;
    Ok(())
}

fn identifiability_experiment(c: &ExperimentConfig, model: &DemographyModel, art: &mut Artifacts) -> Result<(), RunError> {
    let o = c.identifiability.clone().unwrap_or_default();
    let case = o.case.expect("resolved");
    let xs: Vec<f64> = (0..=2000).map(|k| -10.0 + 0.01 * k as f64).collect();
    let w: Vec<f64> = xs.iter().map(|&x| case.profile(x)).collect();
    let (r, g, f) = (model.r, model.gamma, model.f);
    let rr = move |x: f64, m: f64| r.eval(&[x], m);
    let gg = move |x: f64, m: f64| g.eval(&[x], m);
    let ff = move |x: f64, m: f64| f.eval(&[x], m);
    let setup = IdentifiabilitySetup {
        xs: &xs,
        w: &w,
        r: &rr,
        gamma: &gg,
        f: &ff,
        lineage: wavefront_spec(&case),
        exit_interval: o.exit_interval,
        start: o.start,
        paths: o.paths,
        dt: c.dt.unwrap(),
        seed: c.seed.unwrap(),
    };
    let lambda = o.lambda;
    let report = identifiability_demo(&setup, move |_| lambda).map_err(in_module("identifiability"))?;
    art.json("identifiability.json", &json!({ "case": case, "lambda": lambda, "report": report }))
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(vec![format!("reading {}: {e}", path.display())]))?;
    crate::config::parse_config(&text)
}
