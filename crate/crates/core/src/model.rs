//! Demographic rate functions, the simulation domain and model presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{DispersalLaw, Kernel};

/// A demographic rate as a function of position and local density `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFn {
    /// `value`
    Constant { value: f64 },
    /// `intercept + slope·m`
    Affine { intercept: f64, slope: f64 },
    /// `(1 - m)(2m - 1 + s)`
    Bistable { s: f64 },
    /// `scale / (shift + m) + offset`
    Hyperbolic { scale: f64, shift: f64, offset: f64 },
    /// `intercept + slope·x₁`, independent of density
    LinearInSpace { intercept: f64, slope: f64 },
}

impl RateFn {
    pub const fn constant(value: f64) -> Self {
        RateFn::Constant { value }
    }

    /// `1 - m`
    pub const fn logistic() -> Self {
        RateFn::Affine { intercept: 1.0, slope: -1.0 }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], m: f64) -> f64 {
        match *self {
            RateFn::Constant { value } => value,
            RateFn::Affine { intercept, slope } => intercept + slope * m,
            RateFn::Bistable { s } => (1.0 - m) * (2.0 * m - 1.0 + s),
            RateFn::Hyperbolic { scale, shift, offset } => scale / (shift + m) + offset,
            RateFn::LinearInSpace { intercept, slope } => intercept + slope * x[0],
        }
    }

    /// Value as a function of density alone (spatially homogeneous rates).
    pub fn of_density(&self, m: f64) -> f64 {
        self.eval(&[0.0], m)
    }

    /// Derivative with respect to density.
    pub fn density_derivative(&self, m: f64) -> f64 {
        match *self {
            RateFn::Constant { .. } | RateFn::LinearInSpace { .. } => 0.0,
            RateFn::Affine { slope, .. } => slope,
            RateFn::Bistable { s } => 3.0 - s - 4.0 * m,
            RateFn::Hyperbolic { scale, shift, .. } => -scale / (shift + m).powi(2),
        }
    }

    pub fn uses_density(&self) -> bool {
        !matches!(self, RateFn::Constant { .. } | RateFn::LinearInSpace { .. })
    }

    pub fn uses_position(&self) -> bool {
        matches!(self, RateFn::LinearInSpace { .. })
    }

    /// The same function multiplied by a constant.
    pub fn scaled(&self, k: f64) -> RateFn {
        match *self {
            RateFn::Constant { value } => RateFn::Constant { value: k * value },
            RateFn::Affine { intercept, slope } => RateFn::Affine { intercept: k * intercept, slope: k * slope },
            RateFn::Hyperbolic { scale, shift, offset } => {
                RateFn::Hyperbolic { scale: k * scale, shift, offset: k * offset }
            }
            RateFn::LinearInSpace { intercept, slope } => {
                RateFn::LinearInSpace { intercept: k * intercept, slope: k * slope }
            }
            RateFn::Bistable { s } => {
                // (1-m)(2m-1+s)·k = -2k m² + k(3-s) m + k(s-1): no closed variant,
                // so only k = 1 is representable.
                assert!((k - 1.0).abs() < 1e-15, "bistable reaction cannot be rescaled");
                RateFn::Bistable { s }
            }
        }
    }
}

/// Axis-aligned box the population lives in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Domain { lo: vec![lo], hi: vec![hi] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidParameter("domain bounds must be non-empty and of equal length".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter("domain must satisfy lo < hi on every axis".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (v, (a, b)) in p.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*a, *b);
        }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Demography of the individual-based model: fecundity `γ`, establishment
/// `r`, net reproduction `F`, their smoothing kernels and the dispersal law.
///
/// The per-capita death rate is `μ_θ = max(0, rγ − F/θ)`.
#[derive(Clone, Debug)]
pub struct DemographyModel {
    pub gamma: RateFn,
    pub r: RateFn,
    pub f: RateFn,
    pub kernel_gamma: Kernel,
    pub kernel_r: Kernel,
    pub kernel_f: Kernel,
    pub dispersal: DispersalLaw,
    pub theta: f64,
    /// Fecundity is truncated at this value.
    pub gamma_cap: f64,
    pub domain: Domain,
}

impl DemographyModel {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let d = self.dim();
        if self.dispersal.dim() != d {
            return Err(Error::Dimension { expected: d, got: self.dispersal.dim() });
        }
        for k in [&self.kernel_gamma, &self.kernel_r, &self.kernel_f] {
            k.validate(d)?;
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.gamma_cap > 0.0) {
            return Err(Error::InvalidParameter("gamma_cap must be positive".into()));
        }
        if (self.dispersal.theta() - self.theta).abs() > 1e-12 * self.theta {
            return Err(Error::InvalidParameter("dispersal theta differs from model theta".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn gamma_at(&self, x: &[f64], m: f64) -> f64 {
        self.gamma.eval(x, m).min(self.gamma_cap)
    }

    /// `max(0, rγ − F/θ)` from the three local densities.
    #[inline]
    pub fn mu(&self, x: &[f64], m_gamma: f64, m_r: f64, m_f: f64) -> f64 {
        let raw = self.r.eval(x, m_r) * self.gamma_at(x, m_gamma) - self.f.eval(x, m_f) / self.theta;
        raw.max(0.0)
    }
}

/// Named parameterizations used throughout the examples and experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `γ = r = 1`, `F = 1 − m`.
    Logistic,
    /// `γ = r = 1`, `F = 1 − m`, started as an invading front.
    Fkpp,
    /// `γ = r = 1`, `F = (1 − m)(2m − 1 + s)`.
    AllenCahn,
    /// `γ = m`, `r = 1`, `F = 1 − m`: porous medium with logistic growth.
    Pme,
    /// `γ = 3/(1 + m)`, `μ ≡ 0.3`, `r ≡ 1`, dispersal sd 0.2, `ρ_γ = p_9`.
    #[serde(rename = "clumping-fig3")]
    ClumpingFig3,
    /// `γ = r = 1`, `F ≡ 0`: critical branching.
    Critical,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Logistic, Preset::Fkpp, Preset::AllenCahn, Preset::Pme, Preset::ClumpingFig3, Preset::Critical];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Logistic => "logistic",
            Preset::Fkpp => "fkpp",
            Preset::AllenCahn => "allen_cahn",
            Preset::Pme => "pme",
            Preset::ClumpingFig3 => "clumping-fig3",
            Preset::Critical => "critical",
        }
    }

    pub fn parse(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Knobs shared by all presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PresetParams {
    pub theta: f64,
    /// Coefficient `σ²` of the limiting generator `σ²Δ`. Offspring
    /// displacements have variance `2σ²/θ` per axis.
    pub sigma2: f64,
    /// Variance of the Gaussian density kernels.
    pub kernel_variance: f64,
    /// Allen–Cahn asymmetry.
    pub s: f64,
    pub domain: Domain,
    pub gamma_cap: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        PresetParams {
            theta: 20.0,
            sigma2: 1.0,
            kernel_variance: 1.0,
            s: 0.5,
            domain: Domain::interval(0.0, 10.0),
            gamma_cap: 20.0,
        }
    }
}

impl Preset {
    /// Parameters the preset uses when nothing is overridden.
    pub fn default_params(&self) -> PresetParams {
        let base = PresetParams::default();
        match self {
            Preset::Logistic | Preset::Critical => base,
            Preset::Fkpp | Preset::AllenCahn | Preset::Pme => PresetParams {
                theta: 10.0,
                kernel_variance: 0.09,
                domain: Domain::interval(0.0, 40.0),
                ..base
            },
            Preset::ClumpingFig3 => PresetParams {
                theta: 1.0,
                sigma2: 0.02,
                kernel_variance: 9.0,
                domain: Domain::interval(0.0, 100.0),
                ..base
            },
        }
    }

    pub fn model(&self, p: &PresetParams) -> Result<DemographyModel> {
        let dim = p.domain.dim();
        let k = Kernel::gaussian(p.kernel_variance);
        let dispersal = DispersalLaw::isotropic(dim, 2.0 * p.sigma2, p.theta)?;
        let (gamma, r, f) = match self {
            Preset::Logistic | Preset::Fkpp => (RateFn::constant(1.0), RateFn::constant(1.0), RateFn::logistic()),
            Preset::AllenCahn => (RateFn::constant(1.0), RateFn::constant(1.0), RateFn::Bistable { s: p.s }),
            Preset::Pme => (RateFn::Affine { intercept: 0.0, slope: 1.0 }, RateFn::constant(1.0), RateFn::logistic()),
            Preset::Critical => (RateFn::constant(1.0), RateFn::constant(1.0), RateFn::constant(0.0)),
            Preset::ClumpingFig3 => {
                // μ ≡ 0.3 means F = θ(γ − 0.3).
                let gamma = RateFn::Hyperbolic { scale: 3.0, shift: 1.0, offset: 0.0 };
                let f = RateFn::Hyperbolic { scale: 3.0 * p.theta, shift: 1.0, offset: -0.3 * p.theta };
                (gamma, RateFn::constant(1.0), f)
            }
        };
        let model = DemographyModel {
            gamma,
            r,
            f,
            kernel_gamma: k,
            kernel_r: k,
            kernel_f: k,
            dispersal,
            theta: p.theta,
            gamma_cap: p.gamma_cap,
            domain: p.domain.clone(),
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_functions() {
        assert_eq!(RateFn::logistic().of_density(0.25), 0.75);
        assert_eq!(RateFn::Bistable { s: 0.5 }.of_density(1.0), 0.0);
        let h = RateFn::Hyperbolic { scale: 3.0, shift: 1.0, offset: -0.3 };
        assert!((h.of_density(9.0)).abs() < 1e-15);
        for f in [RateFn::logistic(), RateFn::Bistable { s: 0.3 }, h] {
            let m = 0.7;
            let fd = (f.of_density(m + 1e-6) - f.of_density(m - 1e-6)) / 2e-6;
            assert!((fd - f.density_derivative(m)).abs() < 1e-6);
        }
        assert!(!RateFn::constant(2.0).uses_density());
        assert_eq!(RateFn::LinearInSpace { intercept: 1.0, slope: 0.5 }.eval(&[2.0], 9.0), 2.0);
    }

    #[test]
    fn rate_json_shape() {
        let r: RateFn = serde_json::from_str(r#"{"kind":"affine","intercept":1,"slope":-1}"#).unwrap();
        assert_eq!(r, RateFn::logistic());
        assert!(serde_json::from_str::<RateFn>(r#"{"kind":"affine","intercept":1}"#).is_err());
    }

    #[test]
    fn presets_build_and_roundtrip_names() {
        for p in Preset::ALL {
            let m = p.model(&p.default_params()).unwrap();
            assert!(m.validate().is_ok());
            assert_eq!(Preset::parse(p.name()), Some(p));
        }
        assert_eq!(Preset::parse("nope"), None);
    }

    #[test]
    fn death_rate_clamps_at_zero() {
        let mut m = Preset::Logistic.model(&PresetParams { theta: 100.0, ..Default::default() }).unwrap();
        assert_eq!(m.mu(&[0.0], 1.0, 1.0, 1.0), 1.0);
        assert!((m.mu(&[0.0], 0.0, 0.0, 0.0) - 0.99).abs() < 1e-15);
        m.gamma = RateFn::constant(0.001);
        m.f = RateFn::constant(1.0);
        assert_eq!(m.mu(&[0.0], 0.0, 0.0, 0.0), 0.0);
    }
}
