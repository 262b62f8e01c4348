//! Experiment configuration: JSON schema, defaults and validation.

use std::fmt;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::kernels::{largest_eigenvalue, validate_kernel_widths, DispersalLaw, Field, Kernel};
use crate::lineage::WaveCase;
use crate::model::{DemographyModel, Domain, Preset, PresetParams, RateFn};
use crate::pde::PdeKind;
use crate::stability::find_equilibrium;

/// Scaling ratios above this value are reported as outside the
/// large-population, small-kernel regime.
pub const SCALING_ADVISORY_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ibm,
    Lookdown,
    Pde,
    Lineage,
    Stability,
    ConvergenceSweep,
    Identifiability,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Ibm => "ibm",
            ExperimentKind::Lookdown => "lookdown",
            ExperimentKind::Pde => "pde",
            ExperimentKind::Lineage => "lineage",
            ExperimentKind::Stability => "stability",
            ExperimentKind::ConvergenceSweep => "convergence-sweep",
            ExperimentKind::Identifiability => "identifiability",
        }
    }
}

/// Rates, kernels and dispersal given directly instead of by preset name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDemography {
    pub gamma: RateFn,
    pub r: RateFn,
    pub f: RateFn,
    pub kernel_gamma: Kernel,
    pub kernel_r: Kernel,
    pub kernel_f: Kernel,
    /// Generator covariance `C`; offspring displacements have covariance
    /// `C/θ`. Defaults to `2σ²I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersal_covariance: Option<Vec<Vec<f64>>>,
    /// Generator drift `b`; offspring displacements have mean `b/θ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersal_mean: Option<Vec<f64>>,
}

/// A preset name or an explicit parameter table.
#[derive(Clone, Debug, PartialEq)]
pub enum Demography {
    Preset(String),
    Explicit(Box<ExplicitDemography>),
}

impl Serialize for Demography {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Demography::Preset(name) => s.serialize_str(name),
            Demography::Explicit(e) => e.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Demography {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(name) => Ok(Demography::Preset(name)),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v)
                .map(|e| Demography::Explicit(Box::new(e)))
                .map_err(|e| D::Error::custom(format!("demography: {e}"))),
            other => Err(D::Error::custom(format!("demography must be a preset name or an object, got {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepperChoice {
    #[default]
    Discrete,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IbmOptions {
    /// Initial atoms; defaults to `N · φ₀ · |filled region|`.
    pub initial_count: Option<usize>,
    /// Fraction of the first axis, from its lower end, seeded initially.
    pub initial_fill: Option<f64>,
    pub stepper: StepperChoice,
    /// Death-rate cap for the exact stepper.
    pub mu_cap: Option<f64>,
    /// Spacing of the density output grid.
    pub grid_h: Option<f64>,
}

impl Default for IbmOptions {
    fn default() -> Self {
        IbmOptions { initial_count: None, initial_fill: None, stepper: StepperChoice::Discrete, mu_cap: None, grid_h: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LookdownOptions {
    pub initial_count: Option<usize>,
    pub initial_fill: Option<f64>,
    /// Individuals whose lineages are traced back from the final time.
    pub lineages: usize,
}

impl Default for LookdownOptions {
    fn default() -> Self {
        LookdownOptions { initial_count: None, initial_fill: None, lineages: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeOptions {
    pub kind: Option<PdeKind>,
    pub h: f64,
    /// Initial data is `initial_value` up to `initial_edge`, zero beyond.
    pub initial_edge: Option<f64>,
    pub initial_value: f64,
    pub drift: f64,
    pub kernel: Option<Kernel>,
    /// Level at which the front is tracked.
    pub level: f64,
}

impl Default for PdeOptions {
    fn default() -> Self {
        PdeOptions { kind: None, h: 0.05, initial_edge: None, initial_value: 1.0, drift: 0.0, kernel: None, level: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineageOptions {
    pub case: Option<WaveCase>,
    pub paths: usize,
    pub burn_in: f64,
    pub record_every: f64,
    /// Spacing of the speed-measure grid.
    pub h: f64,
    pub start: Option<f64>,
    pub bins: usize,
}

impl Default for LineageOptions {
    fn default() -> Self {
        LineageOptions { case: None, paths: 200, burn_in: 20.0, record_every: 0.5, h: 0.01, start: None, bins: 120 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityOptions {
    pub u_max: f64,
    pub du: f64,
    /// Bracket searched for the homogeneous equilibrium.
    pub bracket: (f64, f64),
    /// Points in `lambda.csv`.
    pub points: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions { u_max: 2.0, du: 1e-3, bracket: (1e-9, 1e3), points: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub epsilons: Vec<f64>,
    pub h: f64,
    pub initial_edge: Option<f64>,
    pub test_centers: Option<Vec<f64>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { epsilons: vec![0.8, 0.4, 0.2, 0.1], h: 0.05, initial_edge: None, test_centers: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifiabilityOptions {
    pub case: Option<WaveCase>,
    /// Constant speed-up factor applied to establishment and net reproduction.
    pub lambda: f64,
    pub exit_interval: (f64, f64),
    pub start: f64,
    pub paths: usize,
}

impl Default for IdentifiabilityOptions {
    fn default() -> Self {
        IdentifiabilityOptions { case: None, lambda: 2.0, exit_interval: (-1.0, 1.0), start: 0.0, paths: 2000 }
    }
}

/// One experiment run. Unset fields take kind- and preset-specific
/// defaults; [`ExperimentConfig::resolve`] fills them in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, alias = "preset", skip_serializing_if = "Option::is_none")]
    pub demography: Option<Demography>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ibm: Option<IbmOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookdown: Option<LookdownOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pde: Option<PdeOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<LineageOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiability: Option<IdentifiabilityOptions>,
}

/// A configuration that cannot be run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

impl std::error::Error for ConfigError {}

fn valid_presets() -> String {
    Preset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join(", ")
}

/// Parses a configuration, or the `config` member of a run manifest.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError(vec![format!("invalid JSON: {e}")]))?;
    let value = match value {
        serde_json::Value::Object(mut m) if m.contains_key("toolkit") && m.contains_key("config") => m.remove("config").unwrap(),
        v => v,
    };
    serde_json::from_value(value).map_err(|e| ConfigError(vec![format!("schema: {e}")]))
}

impl ExperimentConfig {
    pub fn preset(&self) -> Result<Option<Preset>, ConfigError> {
        match &self.demography {
            None => Ok(None),
            Some(Demography::Explicit(_)) => Ok(None),
            Some(Demography::Preset(name)) => Preset::parse(name)
                .map(Some)
                .ok_or_else(|| ConfigError(vec![format!("unknown preset {name:?}; valid presets: {}", valid_presets())])),
        }
    }

    fn default_preset(kind: ExperimentKind) -> Preset {
        match kind {
            ExperimentKind::Ibm | ExperimentKind::Lookdown => Preset::Logistic,
            ExperimentKind::Pde | ExperimentKind::Lineage | ExperimentKind::Identifiability => Preset::AllenCahn,
            ExperimentKind::Stability => Preset::ClumpingFig3,
            ExperimentKind::ConvergenceSweep => Preset::Fkpp,
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.unwrap_or(ExperimentKind::Ibm)
    }

    /// Fills every unset field relevant to the experiment with its default.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let kind = self.kind();
        let mut c = self.clone();
        c.experiment = Some(kind);
        let preset = match self.preset()? {
            Some(p) => Some(p),
            None if self.demography.is_none() => Some(Self::default_preset(kind)),
            None => None,
        };
        if let Some(p) = preset {
            c.demography = Some(Demography::Preset(p.name().into()));
        }
        let base = preset.map(|p| p.default_params()).unwrap_or_default();
        c.seed.get_or_insert(0);
        c.out.get_or_insert_with(|| PathBuf::from(format!("out/{}", kind.name())));
        c.n.get_or_insert(100.0);
        let theta = *c.theta.get_or_insert(base.theta);
        let sigma2 = *c.sigma2.get_or_insert(base.sigma2);
        c.kernel_variance.get_or_insert(base.kernel_variance);
        c.s.get_or_insert(base.s);
        c.gamma_cap.get_or_insert(base.gamma_cap);
        let wave_preset = matches!(preset, Some(Preset::Fkpp | Preset::AllenCahn | Preset::Pme));
        match kind {
            ExperimentKind::Ibm | ExperimentKind::Lookdown => {
                c.domain.get_or_insert(base.domain.clone());
                c.dt.get_or_insert(0.02 / theta);
                c.t_end.get_or_insert(5.0);
                c.replicates.get_or_insert(1);
                let fill = if wave_preset { 0.25 } else { 1.0 };
                if kind == ExperimentKind::Ibm {
                    let o = c.ibm.get_or_insert_with(Default::default);
                    o.initial_fill.get_or_insert(fill);
                } else {
                    let o = c.lookdown.get_or_insert_with(Default::default);
                    o.initial_fill.get_or_insert(fill);
                }
            }
            ExperimentKind::Pde => {
                c.domain.get_or_insert(Domain::interval(0.0, 100.0));
                let o = c.pde.get_or_insert_with(Default::default);
                o.kind.get_or_insert(match preset {
                    Some(Preset::Pme) => PdeKind::PmeLogistic,
                    _ => PdeKind::ReactionDiffusion,
                });
                let h = o.h;
                let lo = c.domain.as_ref().map_or(0.0, |d| d.lo[0]);
                o.initial_edge.get_or_insert(lo + 10.0);
                c.dt.get_or_insert((0.2 * h * h / sigma2.max(1.0)).min(0.01));
                c.t_end.get_or_insert(30.0);
            }
            ExperimentKind::Lineage => {
                let o = c.lineage.get_or_insert_with(Default::default);
                o.case.get_or_insert(default_case(preset, base.s));
                c.dt.get_or_insert(0.01);
                c.t_end.get_or_insert(200.0);
            }
            ExperimentKind::Stability => {
                c.stability.get_or_insert_with(Default::default);
                c.domain.get_or_insert(base.domain.clone());
            }
            ExperimentKind::ConvergenceSweep => {
                c.domain.get_or_insert(Domain::interval(0.0, 40.0));
                let o = c.sweep.get_or_insert_with(Default::default);
                let d = c.domain.as_ref().unwrap();
                let (lo, hi) = (d.lo[0], d.hi[0]);
                let mid = 0.5 * (lo + hi);
                o.initial_edge.get_or_insert(mid);
                o.test_centers.get_or_insert(vec![mid - 5.0, mid, mid + 5.0]);
                c.t_end.get_or_insert(4.0);
            }
            ExperimentKind::Identifiability => {
                let o = c.identifiability.get_or_insert_with(Default::default);
                o.case.get_or_insert(default_case(preset, base.s));
                c.dt.get_or_insert(1e-3);
            }
        }
        c.snapshot_every.get_or_insert(c.t_end.map_or(1.0, |t| t / 10.0));
        Ok(c)
    }

    fn preset_params(&self) -> PresetParams {
        let base = self.preset().ok().flatten().map(|p| p.default_params()).unwrap_or_default();
        PresetParams {
            theta: self.theta.unwrap_or(base.theta),
            sigma2: self.sigma2.unwrap_or(base.sigma2),
            kernel_variance: self.kernel_variance.unwrap_or(base.kernel_variance),
            s: self.s.unwrap_or(base.s),
            domain: self.domain.clone().unwrap_or(base.domain),
            gamma_cap: self.gamma_cap.unwrap_or(base.gamma_cap),
        }
    }

    /// Builds the demography model described by a resolved config.
    pub fn model(&self) -> Result<DemographyModel, ConfigError> {
        let p = self.preset_params();
        let err = |e: crate::Error| ConfigError(vec![format!("demography: {e}")]);
        match &self.demography {
            Some(Demography::Explicit(e)) => {
                let dim = p.domain.dim();
                let cov = match &e.dispersal_covariance {
                    Some(rows) => {
                        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                            return Err(ConfigError(vec![format!("dispersal_covariance must be {dim}×{dim}")]));
                        }
                        DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
                    }
                    None => DMatrix::identity(dim, dim) * (2.0 * p.sigma2),
                };
                let mean = match &e.dispersal_mean {
                    Some(m) if m.len() == dim => DVector::from_column_slice(m),
                    Some(_) => return Err(ConfigError(vec![format!("dispersal_mean must have {dim} entries")])),
                    None => DVector::zeros(dim),
                };
                let dispersal = DispersalLaw::new(dim, Field::Constant(mean), Field::Constant(cov), p.theta).map_err(err)?;
                let model = DemographyModel {
                    gamma: e.gamma,
                    r: e.r,
                    f: e.f,
                    kernel_gamma: e.kernel_gamma,
                    kernel_r: e.kernel_r,
                    kernel_f: e.kernel_f,
                    dispersal,
                    theta: p.theta,
                    gamma_cap: p.gamma_cap,
                    domain: p.domain.clone(),
                };
                model.validate().map_err(err)?;
                Ok(model)
            }
            _ => {
                let preset = self.preset()?.unwrap_or_else(|| Self::default_preset(self.kind()));
                preset.model(&p).map_err(err)
            }
        }
    }
}

fn default_case(preset: Option<Preset>, s: f64) -> WaveCase {
    match preset {
        Some(Preset::Fkpp) => WaveCase::Fkpp,
        Some(Preset::Pme) => WaveCase::Pme,
        _ => WaveCase::AllenCahn { s },
    }
}

/// A finite-size warning that does not stop a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Advisory {
    pub code: &'static str,
    pub message: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub advisories: Vec<Advisory>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn kernel_scale(k: &Kernel) -> f64 {
    match *k {
        Kernel::Gaussian(g) => g.variance.sqrt(),
        Kernel::Indicator1D(i) => i.halfwidth,
    }
}

/// Densities at which rates are probed for range checks.
fn probe_densities(gamma_cap: f64) -> Vec<f64> {
    let top = gamma_cap.max(2.0);
    (0..=200).map(|k| top * k as f64 / 200.0).collect()
}

/// Hard errors and advisories for a configuration. Never fails.
pub fn validate_config(config: &ExperimentConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let c = match config.resolve() {
        Ok(c) => c,
        Err(e) => {
            report.errors.extend(e.0);
            return report;
        }
    };
    for (name, v) in [("N", c.n), ("theta", c.theta), ("dt", c.dt), ("T", c.t_end), ("snapshot_every", c.snapshot_every)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                report.errors.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
    }
    if c.replicates == Some(0) {
        report.errors.push("replicates must be at least 1".into());
    }
    let model = match c.model() {
        Ok(m) => m,
        Err(e) => {
            report.errors.extend(e.0);
            return report;
        }
    };
    let dim = model.dim();
    let (lo, hi) = (model.domain.lo.clone(), model.domain.hi.clone());
    let corners = [lo.clone(), hi.clone(), lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>()];
    let ms = probe_densities(model.gamma_cap);

    for x in &corners {
        if model.dispersal.min_eigenvalue_at(x) <= 0.0 {
            report.errors.push("dispersal covariance is not positive definite".into());
            break;
        }
    }
    'r: for x in &corners {
        for &m in &ms {
            let r = model.r.eval(x, m);
            if !(0.0..=1.0).contains(&r) {
                report.errors.push(format!("establishment probability r = {r} outside [0, 1] at density {m}"));
                break 'r;
            }
        }
    }
    if !report.errors.is_empty() {
        return report;
    }

    if model.r.uses_density() {
        let lambda = corners.iter().map(|x| largest_eigenvalue(&model.dispersal.cov_at(x))).fold(0.0, f64::max);
        let var = |k: &Kernel| kernel_scale(k).powi(2);
        let w = validate_kernel_widths(var(&model.kernel_r), var(&model.kernel_gamma), lambda, model.theta);
        if !w.ok {
            report.advisories.push(Advisory {
                code: "kernel-width",
                message: format!(
                    "kernel-width condition σ_r² + 2λ_max/θ < σ_γ² fails: {:.4} ≥ {:.4}",
                    w.lhs, w.rhs
                ),
                value: w.lhs - w.rhs,
            });
        }
    }

    let density_kernels: Vec<&Kernel> = [
        (model.gamma.uses_density(), &model.kernel_gamma),
        (model.r.uses_density(), &model.kernel_r),
        (model.f.uses_density(), &model.kernel_f),
    ]
    .into_iter()
    .filter_map(|(used, k)| used.then_some(k))
    .collect();
    if let (Some(eps), Some(n)) = (density_kernels.iter().map(|k| kernel_scale(k)).reduce(f64::min), c.n) {
        let diffusive = 1.0 / (model.theta * eps * eps);
        let noise = model.theta / (n * eps.powi(dim as i32));
        if diffusive > SCALING_ADVISORY_THRESHOLD {
            report.advisories.push(Advisory {
                code: "scaling-dispersal",
                message: format!("1/(θε²) = {diffusive:.4} is not small: dispersal is not fine relative to the kernel width"),
                value: diffusive,
            });
        }
        if noise > SCALING_ADVISORY_THRESHOLD {
            report.advisories.push(Advisory {
                code: "scaling-noise",
                message: format!("θ/(Nε^d) = {noise:.4} is O(1): outside the deterministic scaling regime"),
                value: noise,
            });
        }
    }

    let worst_mu = corners
        .iter()
        .flat_map(|x| ms.iter().map(move |&m| (x, m)))
        .map(|(x, m)| model.r.eval(x, m) * model.gamma_at(x, m) - model.f.eval(x, m) / model.theta)
        .fold(f64::INFINITY, f64::min);
    if worst_mu < 0.0 {
        report.advisories.push(Advisory {
            code: "death-clamp",
            message: format!("rγ − F/θ reaches {worst_mu:.4}: the death rate is clamped at zero and the lookdown ignores the clamp"),
            value: worst_mu,
        });
    }
    report
}

/// Density of the homogeneous equilibrium of `F`, or 1 when none is found.
pub fn equilibrium_density(model: &DemographyModel) -> f64 {
    let x = vec![0.0; model.dim()];
    let f = |m: f64| model.f.eval(&x, m);
    [(1e-9, 10.0), (1e-9, 1e3), (0.5, 10.0)]
        .into_iter()
        .find_map(|b| find_equilibrium(f, b).ok())
        .unwrap_or(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        parse_config(json).unwrap()
    }

    #[test]
    fn unknown_keys_and_presets() {
        assert!(parse_config(r#"{"demography":"logistic","bogus":1}"#).is_err());
        let e = cfg(r#"{"demography":"nope"}"#).resolve().unwrap_err();
        assert!(e.to_string().contains("allen_cahn") && e.to_string().contains("clumping-fig3"));
        assert!(cfg(r#"{"preset":"pme"}"#).preset().unwrap() == Some(Preset::Pme));
    }

    #[test]
    fn logistic_defaults_are_clean() {
        let r = validate_config(&cfg(r#"{"experiment":"ibm","demography":"logistic"}"#));
        assert!(r.ok() && r.advisories.is_empty(), "{r:?}");
    }

    #[test]
    fn equal_kernels_trip_width_condition() {
        let json = r#"{"experiment":"ibm","demography":{
            "gamma":{"kind":"constant","value":1},
            "r":{"kind":"affine","intercept":1,"slope":-0.01},
            "f":{"kind":"affine","intercept":1,"slope":-1},
            "kernel_gamma":{"type":"gaussian","variance":1},
            "kernel_r":{"type":"gaussian","variance":1},
            "kernel_f":{"type":"gaussian","variance":1}}}"#;
        let r = validate_config(&cfg(json));
        assert!(r.ok(), "{r:?}");
        assert!(r.advisories.iter().any(|a| a.code == "kernel-width"), "{r:?}");
    }

    #[test]
    fn theta_equal_to_n_is_flagged() {
        let r = validate_config(&cfg(r#"{"demography":"logistic","theta":50,"N":50}"#));
        let a = r.advisories.iter().find(|a| a.code == "scaling-noise").unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hard_errors() {
        let json = r#"{"demography":{
            "gamma":{"kind":"constant","value":1},
            "r":{"kind":"constant","value":1.5},
            "f":{"kind":"constant","value":0},
            "kernel_gamma":{"type":"gaussian","variance":1},
            "kernel_r":{"type":"gaussian","variance":1},
            "kernel_f":{"type":"gaussian","variance":1},
            "dispersal_covariance":[[1.0]]}}"#;
        let r = validate_config(&cfg(json));
        assert!(r.errors.iter().any(|e| e.contains("outside [0, 1]")), "{r:?}");
        let bad_cov = json.replace("1.5", "1").replace("[[1.0]]", "[[-1.0]]");
        let r = validate_config(&cfg(&bad_cov));
        assert!(r.errors.iter().any(|e| e.contains("positive definite")), "{r:?}");
    }

    #[test]
    fn resolved_config_roundtrips() {
        let c = cfg(r#"{"experiment":"lineage","demography":"allen_cahn","seed":3}"#).resolve().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.resolve().unwrap(), c);
    }
}
