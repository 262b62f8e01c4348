//! Ancestral lineages as one-dimensional diffusions: generator
//! coefficients, the wavefront frame, speed measures, Euler–Maruyama paths
//! and the identifiability scaling.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::trapezoid;

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Generator `a(ξ) f'' + drift(ξ) f'` on an interval.
///
/// A hard endpoint is never crossed (paths reject proposals beyond it); a
/// soft endpoint only bounds numerical integration of the speed measure.
#[derive(Clone)]
pub struct DiffusionSpec1D {
    pub a: Coefficient,
    pub drift: Coefficient,
    pub lower: f64,
    pub upper: f64,
    pub lower_hard: bool,
    pub upper_hard: bool,
    /// Lower limit of the exponent integral `∫ drift/a`.
    pub anchor: f64,
}

impl fmt::Debug for DiffusionSpec1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec1D")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("lower_hard", &self.lower_hard)
            .field("upper_hard", &self.upper_hard)
            .field("anchor", &self.anchor)
            .finish_non_exhaustive()
    }
}

impl DiffusionSpec1D {
    pub fn new(a: impl Fn(f64) -> f64 + Send + Sync + 'static, drift: impl Fn(f64) -> f64 + Send + Sync + 'static, lower: f64, upper: f64) -> Self {
        DiffusionSpec1D {
            a: Arc::new(a),
            drift: Arc::new(drift),
            lower,
            upper,
            lower_hard: false,
            upper_hard: false,
            anchor: 0.5 * (lower + upper),
        }
    }

    /// Multiplies the whole generator by `λ(ξ)`.
    pub fn time_changed(&self, lambda: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Self {
        let (a, d) = (self.a.clone(), self.drift.clone());
        let l2 = lambda.clone();
        DiffusionSpec1D {
            a: Arc::new(move |x| lambda(x) * a(x)),
            drift: Arc::new(move |x| l2(x) * d(x)),
            ..self.clone()
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        (self.a)(x)
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }
}

/// Coefficients `(a, drift)` of the lineage generator
/// `rγ(σ²Δ + (2σ²∇log(γφ) − b)·∇)` at one point, for isotropic dispersal.
pub fn lineage_coefficients(r: f64, gamma: f64, sigma2: f64, b: f64, phi: f64, grad_log_gamma_phi: f64) -> Result<(f64, f64)> {
    if !(phi > 0.0) {
        return Err(Error::VanishingDensity);
    }
    Ok((r * gamma * sigma2, r * gamma * (2.0 * sigma2 * grad_log_gamma_phi - b)))
}

/// The travelling-wave populations whose lineages are studied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveCase {
    /// Minimal-speed Fisher–KPP front, `c = 2`.
    Fkpp,
    /// Bistable front `w = (1 + e^ξ)⁻¹`, `c = s`.
    AllenCahn { s: f64 },
    /// Porous medium front `w = (1 − e^{ξ/2})₊`, `γ = w`, `c = 1`.
    Pme,
    /// Porous medium front with dispersal mean `b`, viewed in a frame moving at `c`.
    PmeDrifted { b: f64, c: f64 },
}

impl WaveCase {
    /// Wave speed `c`.
    pub fn speed(&self) -> f64 {
        match *self {
            WaveCase::Fkpp => 2.0,
            WaveCase::AllenCahn { s } => s,
            WaveCase::Pme => 1.0,
            WaveCase::PmeDrifted { c, .. } => c,
        }
    }

    /// Profile `w(ξ)`, with the front at `ξ = 0` (half level for Fisher–KPP
    /// and Allen–Cahn, edge of support for the porous medium cases).
    pub fn profile(&self, xi: f64) -> f64 {
        match *self {
            WaveCase::Fkpp => fkpp_profile().value(xi).0,
            WaveCase::AllenCahn { .. } => 1.0 / (1.0 + xi.exp()),
            WaveCase::Pme | WaveCase::PmeDrifted { .. } => (1.0 - (xi / 2.0).exp()).max(0.0),
        }
    }
}

/// Lineage generator relative to the front,
/// `σ²rγ(f'' + 2(log γw)' f') + (c − rγb) f'` with `σ² = 1`, `r = 1`.
pub fn wavefront_spec(case: &WaveCase) -> DiffusionSpec1D {
    match *case {
        WaveCase::Fkpp => {
            let prof = fkpp_profile();
            let p2 = prof.clone();
            let mut spec = DiffusionSpec1D::new(
                |_| 1.0,
                move |x| {
                    let (w, dw) = p2.value(x);
                    2.0 * dw / w + 2.0
                },
                -20.0,
                20.0,
            );
            spec.anchor = 0.0;
            spec
        }
        WaveCase::AllenCahn { s } => DiffusionSpec1D::new(|_| 1.0, move |x| -2.0 * logistic(x) + s, -20.0, 20.0),
        WaveCase::Pme => pme_spec(0.0, 1.0),
        WaveCase::PmeDrifted { b, c } => pme_spec(b, c),
    }
}

/// `e^x/(1 + e^x)` without overflow.
fn logistic(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn pme_spec(b: f64, c: f64) -> DiffusionSpec1D {
    // γ = w, r = 1: a = w, drift = 2w(log w²)' + c − w b = 4w' + c − w b
    let mut spec = DiffusionSpec1D::new(
        |x| (1.0 - (x / 2.0).exp()).max(0.0),
        move |x| {
            let e = (x / 2.0).exp();
            -2.0 * e + c - (1.0 - e) * b
        },
        -40.0,
        0.0,
    );
    spec.upper_hard = true;
    spec.anchor = -1.0;
    spec
}

/// Numerical minimal-speed Fisher–KPP profile, tabulated on a fine grid.
#[derive(Clone, Debug)]
pub struct FkppProfile {
    start: f64,
    step: f64,
    w: Vec<f64>,
    dw: Vec<f64>,
}

impl FkppProfile {
    /// Solves `w'' + 2w' + w(1 − w) = 0` along the unstable manifold of
    /// `w = 1` and shifts so that `w(0) = 1/2`.
    pub fn compute() -> Self {
        let lambda = 2f64.sqrt() - 1.0;
        let step = 1e-3;
        // u = 1 - w ≈ δ e^{λξ}
        let delta = 1e-9;
        let mut state = [1.0 - delta, -(-delta * lambda)];
        state[1] = -delta * lambda;
        let rhs = |s: [f64; 2]| [s[1], -2.0 * s[1] - s[0] * (1.0 - s[0])];
        let mut w = vec![state[0]];
        let mut dw = vec![state[1]];
        while state[0] > 1e-14 && w.len() < 200_000 {
            let k1 = rhs(state);
            let k2 = rhs([state[0] + 0.5 * step * k1[0], state[1] + 0.5 * step * k1[1]]);
            let k3 = rhs([state[0] + 0.5 * step * k2[0], state[1] + 0.5 * step * k2[1]]);
            let k4 = rhs([state[0] + step * k3[0], state[1] + step * k3[1]]);
            for j in 0..2 {
                state[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            w.push(state[0]);
            dw.push(state[1]);
        }
        let half = w.iter().position(|&v| v < 0.5).expect("profile crosses one half");
        let frac = (w[half - 1] - 0.5) / (w[half - 1] - w[half]);
        let start = -((half - 1) as f64 + frac) * step;
        FkppProfile { start, step, w, dw }
    }

    /// `(w, w')` at `ξ`. Beyond the table the tails are continued with
    /// `1 − Ce^{λξ}` on the left and `(A + Bξ)e^{−ξ}` on the right.
    pub fn value(&self, xi: f64) -> (f64, f64) {
        let pos = (xi - self.start) / self.step;
        let last = self.w.len() - 1;
        if pos <= 0.0 {
            let lambda = 2f64.sqrt() - 1.0;
            let u0 = 1.0 - self.w[0];
            let u = u0 * (lambda * (xi - self.start)).exp();
            return (1.0 - u, -lambda * u);
        }
        if pos >= last as f64 {
            // match w and w' at the end of the table: w = (A + B(ξ - ξe)) e^{-(ξ - ξe)}
            let xe = self.start + last as f64 * self.step;
            let (we, dwe) = (self.w[last], self.dw[last]);
            let a = we;
            let b = dwe + we;
            let z = xi - xe;
            let e = (-z).exp();
            return ((a + b * z) * e, (b - a - b * z) * e);
        }
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        // cubic Hermite interpolation using w'' from the ODE
        let h = self.step;
        let (w0, w1) = (self.w[i], self.w[i + 1]);
        let (d0, d1) = (self.dw[i], self.dw[i + 1]);
        let h00 = 2.0 * f * f * f - 3.0 * f * f + 1.0;
        let h10 = f * f * f - 2.0 * f * f + f;
        let h01 = -2.0 * f * f * f + 3.0 * f * f;
        let h11 = f * f * f - f * f;
        let w = h00 * w0 + h10 * h * d0 + h01 * w1 + h11 * h * d1;
        let dd0 = -2.0 * d0 - w0 * (1.0 - w0);
        let dd1 = -2.0 * d1 - w1 * (1.0 - w1);
        let dw = d0 + f * h * (dd0 + 0.5 * f * (dd1 - dd0));
        (w, dw)
    }
}

fn fkpp_profile() -> Arc<FkppProfile> {
    use std::sync::OnceLock;
    static PROFILE: OnceLock<Arc<FkppProfile>> = OnceLock::new();
    PROFILE.get_or_init(|| Arc::new(FkppProfile::compute())).clone()
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Speed-measure density on a grid, before and after normalization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryDensity {
    pub xs: Vec<f64>,
    pub unnormalized: Vec<f64>,
    pub density: Vec<f64>,
    pub mass: f64,
}

impl StationaryDensity {
    pub fn mean(&self) -> f64 {
        let h = self.xs[1] - self.xs[0];
        let xw: Vec<f64> = self.xs.iter().zip(&self.density).map(|(x, d)| x * d).collect();
        trapezoid(&xw, h)
    }
}

/// Nodes `lower + i·h` strictly inside hard endpoints.
fn interior_nodes(lower: f64, upper: f64, h: f64, lower_hard: bool, upper_hard: bool) -> Vec<f64> {
    let n = ((upper - lower) / h + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| lower + i as f64 * h)
        .filter(|&x| !(lower_hard && x <= lower) && !(upper_hard && x >= upper))
        .collect()
}

fn unnormalized_speed_measure(spec: &DiffusionSpec1D, xs: &[f64]) -> Vec<f64> {
    let ratio = |x: f64| spec.drift(x) / spec.a(x);
    // exponent by adaptive Simpson between consecutive nodes, walking out from the anchor
    let anchor = spec.anchor;
    let k = xs.iter().position(|&x| x >= anchor).unwrap_or(xs.len() - 1);
    let mut expo = vec![0.0; xs.len()];
    expo[k] = adaptive_simpson(&ratio, anchor, xs[k], 1e-13);
    for i in k + 1..xs.len() {
        expo[i] = expo[i - 1] + adaptive_simpson(&ratio, xs[i - 1], xs[i], 1e-13);
    }
    for i in (0..k).rev() {
        expo[i] = expo[i + 1] - adaptive_simpson(&ratio, xs[i], xs[i + 1], 1e-13);
    }
    xs.iter().zip(&expo).map(|(&x, &e)| e.exp() / spec.a(x)).collect()
}

/// `m(ξ) ∝ a(ξ)⁻¹ exp(∫_anchor^ξ drift/a)` on nodes of spacing `h` across the
/// spec's interval.
///
/// If the mass grows by more than half when the soft ends of the interval
/// are pushed twice as far from the anchor, the measure is reported as not
/// normalizable.
pub fn speed_measure_density(spec: &DiffusionSpec1D, h: f64) -> Result<StationaryDensity> {
    let xs = interior_nodes(spec.lower, spec.upper, h, spec.lower_hard, spec.upper_hard);
    if xs.len() < 3 {
        return Err(Error::InvalidParameter("grid too coarse for speed measure".into()));
    }
    let un = unnormalized_speed_measure(spec, &xs);
    let mass = trapezoid(&un, h);
    let lo2 = if spec.lower_hard { spec.lower } else { spec.anchor - 2.0 * (spec.anchor - spec.lower) };
    let hi2 = if spec.upper_hard { spec.upper } else { spec.anchor + 2.0 * (spec.upper - spec.anchor) };
    let wide = interior_nodes(lo2, hi2, h, spec.lower_hard, spec.upper_hard);
    let wide_mass = trapezoid(&unnormalized_speed_measure(spec, &wide), h);
    if !mass.is_finite() || !wide_mass.is_finite() || wide_mass > 1.5 * mass {
        return Err(Error::NoStationaryDistribution);
    }
    let density = un.iter().map(|v| v / mass).collect();
    Ok(StationaryDensity { xs, unnormalized: un, density, mass })
}

/// Euler–Maruyama path of `dξ = drift dt + √(2a) dW`, sampled every step.
/// Proposals beyond a hard endpoint are redrawn.
pub fn simulate_lineage_sde<R: Rng + ?Sized>(spec: &DiffusionSpec1D, xi0: f64, t_end: f64, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    let steps = (t_end / dt).round() as usize;
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = xi0;
    path.push(x);
    for _ in 0..steps {
        x = em_step(spec, x, dt, rng)?;
        path.push(x);
    }
    Ok(path)
}

const MAX_REDRAWS: usize = 1000;

#[inline]
pub(crate) fn em_step<R: Rng + ?Sized>(spec: &DiffusionSpec1D, x: f64, dt: f64, rng: &mut R) -> Result<f64> {
    let mean = x + spec.drift(x) * dt;
    let sd = (2.0 * spec.a(x).max(0.0) * dt).sqrt();
    for _ in 0..MAX_REDRAWS {
        let z: f64 = rng.sample(StandardNormal);
        let y = mean + sd * z;
        if (spec.upper_hard && y >= spec.upper) || (spec.lower_hard && y <= spec.lower) {
            continue;
        }
        return Ok(y);
    }
    Err(Error::GuardBand)
}

/// Long-run occupation samples: positions of `paths` independent paths
/// recorded every `record_every` after `burn_in`.
pub fn occupation_samples(
    spec: &DiffusionSpec1D,
    xi0: f64,
    t_end: f64,
    dt: f64,
    burn_in: f64,
    record_every: f64,
    paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let steps = (t_end / dt).round() as usize;
    let burn = (burn_in / dt).round() as usize;
    let every = ((record_every / dt).round() as usize).max(1);
    let mut out = Vec::with_capacity(paths * (steps.saturating_sub(burn) / every + 1));
    for p in 0..paths {
        let mut rng = crate::rng::stream(seed, p as u64);
        let mut x = xi0;
        for k in 1..=steps {
            x = em_step(spec, x, dt, &mut rng)?;
            if k > burn && (k - burn) % every == 0 {
                out.push(x);
            }
        }
    }
    Ok(out)
}

/// `∫|F_emp − F|` between samples and a gridded density (normalized on the grid).
pub fn wasserstein1_to_density(samples: &[f64], xs: &[f64], density: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let h = xs[1] - xs[0];
    let total = trapezoid(density, h);
    let lo = xs[0].min(sorted[0]);
    let hi = xs[xs.len() - 1].max(sorted[sorted.len() - 1]);
    // integrate on a fine uniform lattice covering both supports
    let m = 20_000usize;
    let step = (hi - lo) / m as f64;
    let cdf_model = |x: f64| -> f64 {
        if x <= xs[0] {
            return 0.0;
        }
        if x >= xs[xs.len() - 1] {
            return 1.0;
        }
        let pos = (x - xs[0]) / h;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        let mut acc = 0.0;
        // cumulative trapezoid up to node i, then partial cell
        for j in 0..i {
            acc += 0.5 * (density[j] + density[j + 1]) * h;
        }
        let di = density[i] + f * (density[i + 1] - density[i]);
        acc += 0.5 * (density[i] + di) * f * h;
        acc / total
    };
    // cumulative table for speed
    let mut cum = vec![0.0; xs.len()];
    for j in 1..xs.len() {
        cum[j] = cum[j - 1] + 0.5 * (density[j - 1] + density[j]) * h;
    }
    let cdf_fast = |x: f64| -> f64 {
        if x <= xs[0] {
            return 0.0;
        }
        if x >= xs[xs.len() - 1] {
            return 1.0;
        }
        let pos = (x - xs[0]) / h;
        let i = (pos.floor() as usize).min(xs.len() - 2);
        let f = pos - i as f64;
        let di = density[i] + f * (density[i + 1] - density[i]);
        (cum[i] + 0.5 * (density[i] + di) * f * h) / total
    };
    debug_assert!((cdf_model(xs[0] + 0.37 * h) - cdf_fast(xs[0] + 0.37 * h)).abs() < 1e-12);
    let mut k = 0usize;
    let mut w1 = 0.0;
    for j in 0..m {
        let x = lo + (j as f64 + 0.5) * step;
        while k < sorted.len() && sorted[k] <= x {
            k += 1;
        }
        w1 += (k as f64 / n - cdf_fast(x)).abs() * step;
    }
    w1
}

/// Outcome of the identifiability scaling `r̃ = λr`, `F̃ = λF`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentifiabilityReport {
    /// `max |R̃ − λR|` where `R = rΔ(γw) + Fw` is the stationary residual.
    pub residual_identity_error: f64,
    pub exit_time_original: f64,
    pub exit_time_scaled: f64,
    /// `exit_time_original / exit_time_scaled`.
    pub exit_time_ratio: f64,
    /// Mean of `λ` over the exit interval (exact for constant `λ`).
    pub predicted_ratio: f64,
}

/// Inputs to [`identifiability_demo`]: a density-dependent model evaluated
/// on a profile `w` over a grid, and the exit experiment.
pub struct IdentifiabilitySetup<'a> {
    pub xs: &'a [f64],
    pub w: &'a [f64],
    pub r: &'a dyn Fn(f64, f64) -> f64,
    pub gamma: &'a dyn Fn(f64, f64) -> f64,
    pub f: &'a dyn Fn(f64, f64) -> f64,
    pub lineage: DiffusionSpec1D,
    pub exit_interval: (f64, f64),
    pub start: f64,
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
}

/// Scales establishment and net reproduction by `λ(x)`: the stationary
/// residual scales pointwise by `λ` (so zero residuals stay zero) while the
/// lineage generator becomes `λℒ`, shortening exit times.
pub fn identifiability_demo(setup: &IdentifiabilitySetup<'_>, lambda: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Result<IdentifiabilityReport> {
    let xs = setup.xs;
    let n = xs.len();
    if n < 3 || setup.w.len() != n {
        return Err(Error::InvalidParameter("profile grid needs ≥ 3 matching nodes".into()));
    }
    let h = xs[1] - xs[0];
    let gw: Vec<f64> = xs.iter().zip(setup.w).map(|(&x, &w)| (setup.gamma)(x, w) * w).collect();
    let mut err = 0.0f64;
    for i in 1..n - 1 {
        let (x, w) = (xs[i], setup.w[i]);
        let lap = (gw[i + 1] - 2.0 * gw[i] + gw[i - 1]) / (h * h);
        let l = lambda(x);
        let base = (setup.r)(x, w) * lap + (setup.f)(x, w) * w;
        let scaled = (l * (setup.r)(x, w)) * lap + (l * (setup.f)(x, w)) * w;
        err = err.max((scaled - l * base).abs());
    }
    let (lo, hi) = setup.exit_interval;
    let exit_mean = |spec: &DiffusionSpec1D, seed: u64| -> Result<f64> {
        let mut total = 0.0;
        for p in 0..setup.paths {
            let mut rng = crate::rng::stream(seed, p as u64);
            let mut x = setup.start;
            let mut t = 0.0;
            while x > lo && x < hi {
                x = em_step(spec, x, setup.dt, &mut rng)?;
                t += setup.dt;
            }
            total += t;
        }
        Ok(total / setup.paths as f64)
    };
    let scaled_spec = setup.lineage.time_changed(lambda.clone());
    let t0 = exit_mean(&setup.lineage, setup.seed)?;
    let t1 = exit_mean(&scaled_spec, setup.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let m = 200;
    let predicted = (0..m).map(|k| lambda(lo + (k as f64 + 0.5) * (hi - lo) / m as f64)).sum::<f64>() / m as f64;
    Ok(IdentifiabilityReport {
        residual_identity_error: err,
        exit_time_original: t0,
        exit_time_scaled: t1,
        exit_time_ratio: t0 / t1,
        predicted_ratio: predicted,
    })
}

/// Reference closed-form stationary density for the drifted porous medium
/// front, `π(ξ) ∝ e^{3ξ/2}(1 − e^{ξ/2})³` on `ξ < 0`, next to the speed
/// measure of the corresponding wavefront generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftedPmeStationary {
    pub xs: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub speed_measure: Vec<f64>,
    /// `max |speed_measure/closed_form − 1|` over the grid.
    pub max_relative_discrepancy: f64,
}

pub fn drifted_pme_closed_form(xi: f64) -> f64 {
    if xi >= 0.0 {
        0.0
    } else {
        (1.5 * xi).exp() * (1.0 - (xi / 2.0).exp()).powi(3)
    }
}

/// Evaluates the reference closed form and the general speed measure for
/// dispersal mean `b` (dispersal generator `Δ − b∂`) in the frame moving
/// at `c`, both normalized on nodes of spacing `h` in `[lower, 0)`.
pub fn drifted_pme_stationary(b: f64, c: f64, lower: f64, h: f64) -> Result<DriftedPmeStationary> {
    let mut spec = wavefront_spec(&WaveCase::PmeDrifted { b, c });
    spec.lower = lower;
    let sm = speed_measure_density(&spec, h)?;
    let raw: Vec<f64> = sm.xs.iter().map(|&x| drifted_pme_closed_form(x)).collect();
    let norm = trapezoid(&raw, h);
    let closed: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    let disc = sm.density.iter().zip(&closed).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    Ok(DriftedPmeStationary { xs: sm.xs, closed_form: closed, speed_measure: sm.density, max_relative_discrepancy: disc })
}

/// Finite-volume rate matrix of the generator on nodes `xs`:
/// `Q_{i,i±1} = exp(S_{i±1/2}) / (h² m_i)` with `S = ∫ drift/a` and speed
/// density `m = e^S/a`. Returned as (sub, diag, super) diagonals.
pub fn generator_rate_matrix(spec: &DiffusionSpec1D, xs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let h = xs[1] - xs[0];
    let ratio = |x: f64| spec.drift(x) / spec.a(x);
    let mids: Vec<f64> = (0..n - 1).map(|i| 0.5 * (xs[i] + xs[i + 1])).collect();
    // exponent at nodes and midpoints relative to xs[0]
    let mut s_node = vec![0.0; n];
    let mut s_mid = vec![0.0; n - 1];
    for i in 0..n - 1 {
        s_mid[i] = s_node[i] + adaptive_simpson(&ratio, xs[i], mids[i], 1e-14);
        s_node[i + 1] = s_mid[i] + adaptive_simpson(&ratio, mids[i], xs[i + 1], 1e-14);
    }
    let m: Vec<f64> = (0..n).map(|i| s_node[i].exp() / spec.a(xs[i])).collect();
    let mut sub = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut diag = vec![0.0; n];
    for i in 0..n {
        if i + 1 < n {
            sup[i] = s_mid[i].exp() / (h * h * m[i]);
        }
        if i > 0 {
            sub[i] = s_mid[i - 1].exp() / (h * h * m[i]);
        }
        diag[i] = -(sup[i] + sub[i]);
    }
    (sub, diag, sup)
}

/// `max |π_i Q_{i,i+1} − π_{i+1} Q_{i+1,i}|` relative to the largest flux.
pub fn detailed_balance_defect(pi: &[f64], sub: &[f64], sup: &[f64]) -> f64 {
    let n = pi.len();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n - 1 {
        let fwd = pi[i] * sup[i];
        let back = pi[i + 1] * sub[i + 1];
        worst = worst.max((fwd - back).abs());
        scale = scale.max(fwd.abs()).max(back.abs());
    }
    worst / scale
}
