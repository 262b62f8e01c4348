//! Explicit finite-difference solvers for the one-dimensional limiting
//! equations, travelling-front measurement and closed-form wave profiles.
//!
//! All solvers use a uniform node grid with reflecting (Neumann) ends:
//! the ghost value beyond each end mirrors the first interior node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::model::RateFn;

const BLOW_UP: f64 = 1e6;
const CFL_SAFETY: f64 = 0.9;
/// Adaptive steps may shrink by at most this factor below the requested dt.
const DT_FLOOR_FACTOR: f64 = 1.0 / (1u64 << 20) as f64;

/// Uniform nodes `x0 + i·h` for `i < len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub h: f64,
    pub len: usize,
}

impl Grid1D {
    /// Nodes spanning `[a, b]` with spacing `h` (b is hit when `(b-a)/h` is integral).
    pub fn span(a: f64, b: f64, h: f64) -> Self {
        let len = ((b - a) / h + 1e-9).floor() as usize + 1;
        Grid1D { x0: a, h, len }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.x(i))
    }

    pub fn last(&self) -> f64 {
        self.x(self.len - 1)
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        trapezoid(v, self.h)
    }
}

pub fn trapezoid(v: &[f64], h: f64) -> f64 {
    match v.len() {
        0 | 1 => 0.0,
        n => h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1])),
    }
}

/// Density values on a grid at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub t: f64,
}

impl ScalarField1D {
    pub fn from_fn(grid: Grid1D, t: f64, f: impl Fn(f64) -> f64) -> Self {
        ScalarField1D { grid, values: grid.nodes().map(f).collect(), t }
    }

    pub fn constant(grid: Grid1D, v: f64) -> Self {
        Self::from_fn(grid, 0.0, |_| v)
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &ScalarField1D) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Snapshots of a solve plus bookkeeping.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<ScalarField1D>,
    /// Total mass removed by clipping negative values to zero.
    pub clipped_mass: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &ScalarField1D {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }

    /// Largest clipped mass relative to the largest total mass seen.
    pub fn clipped_fraction(&self) -> f64 {
        let total = self.snapshots.iter().map(|s| s.mass()).fold(0.0, f64::max);
        if total > 0.0 {
            self.clipped_mass / total
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Interval between stored snapshots; the initial state is always stored.
    pub snapshot_every: f64,
}

impl SolveOptions {
    pub fn new(t_end: f64, dt: f64, snapshot_every: f64) -> Self {
        SolveOptions { t_end, dt, snapshot_every }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !(self.dt > 0.0) || !(self.snapshot_every > 0.0) {
            return Err(Error::InvalidParameter("t_end ≥ 0, dt > 0 and snapshot_every > 0 required".into()));
        }
        Ok(())
    }
}

/// Which limiting equation a [`PdeProblem`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeKind {
    /// `∂φ = σ²φ'' − bφ' + φF(φ)`
    ReactionDiffusion,
    /// `∂φ = σ²φ'' − bφ' + φF(ρ*φ)`
    NonlocalRd,
    /// `∂φ = σ²(φ²)'' − b(φ²)' + φ(1 − φ)`
    PmeLogistic,
    /// `∂ψ = (ψ·ρ*ψ)'' + ψ(1 − ρ*ψ)`
    NonlocalPme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeProblem {
    pub kind: PdeKind,
    /// `F(m)`; ignored by the PME kinds, which are always logistic.
    pub reaction: RateFn,
    pub sigma2: f64,
    pub drift: f64,
    pub kernel: Option<Kernel>,
}

impl PdeProblem {
    pub fn reaction_diffusion(reaction: RateFn, sigma2: f64) -> Self {
        PdeProblem { kind: PdeKind::ReactionDiffusion, reaction, sigma2, drift: 0.0, kernel: None }
    }

    pub fn nonlocal_rd(reaction: RateFn, sigma2: f64, kernel: Option<Kernel>) -> Self {
        PdeProblem { kind: PdeKind::NonlocalRd, reaction, sigma2, drift: 0.0, kernel }
    }

    pub fn pme_logistic() -> Self {
        PdeProblem { kind: PdeKind::PmeLogistic, reaction: RateFn::logistic(), sigma2: 1.0, drift: 0.0, kernel: None }
    }

    pub fn nonlocal_pme(kernel: Option<Kernel>) -> Self {
        PdeProblem { kind: PdeKind::NonlocalPme, reaction: RateFn::logistic(), sigma2: 1.0, drift: 0.0, kernel }
    }

    pub fn with_drift(mut self, b: f64) -> Self {
        self.drift = b;
        self
    }

    pub fn solve(&self, initial: &ScalarField1D, opts: &SolveOptions) -> Result<Trajectory> {
        match self.kind {
            PdeKind::ReactionDiffusion => solve_rd(self, initial, opts),
            PdeKind::NonlocalRd => solve_nonlocal_rd(self, initial, opts),
            PdeKind::PmeLogistic => solve_pme(initial, self.sigma2, self.drift, opts),
            PdeKind::NonlocalPme => solve_nonlocal_pme(initial, self.kernel.as_ref(), opts),
        }
    }
}

/// Neumann second difference of `v` into `out`.
fn laplacian(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    let inv = 1.0 / (h * h);
    if n == 1 {
        out[0] = 0.0;
        return;
    }
    out[0] = 2.0 * (v[1] - v[0]) * inv;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv;
    }
    out[n - 1] = 2.0 * (v[n - 2] - v[n - 1]) * inv;
}

/// Adds `−b·∂ₓ(flux)` with first-order upwinding and zero boundary flux.
fn add_upwind_advection(flux: &[f64], b: f64, h: f64, out: &mut [f64]) {
    if b == 0.0 {
        return;
    }
    let n = flux.len();
    // interface flux between i and i+1
    let face = |i: usize| if b > 0.0 { b * flux[i] } else { b * flux[i + 1] };
    for i in 0..n {
        let right = if i + 1 < n { face(i) } else { 0.0 };
        let left = if i > 0 { face(i - 1) } else { 0.0 };
        let w = if i == 0 || i + 1 == n { 2.0 } else { 1.0 };
        out[i] -= w * (right - left) / h;
    }
}

/// Discrete kernel weights on grid offsets `-k..=k`, normalized to sum to one.
#[derive(Clone, Debug)]
pub struct DiscreteKernel {
    weights: Vec<f64>,
    half: usize,
}

impl DiscreteKernel {
    pub fn new(kernel: &Kernel, h: f64) -> Self {
        let radius = match kernel {
            Kernel::Gaussian(g) => 6.0 * g.variance.sqrt(),
            Kernel::Indicator1D(k) => k.halfwidth,
        };
        let half = (radius / h + 1e-9).floor() as usize;
        let mut weights: Vec<f64> = (0..=2 * half)
            .map(|j| {
                let z = (j as f64 - half as f64) * h;
                kernel.eval(&[z])
            })
            .collect();
        if let Kernel::Indicator1D(k) = kernel {
            // trapezoid end weights when the support edge falls on a node
            if ((half as f64) * h - k.halfwidth).abs() < 1e-9 * h && half > 0 {
                weights[0] *= 0.5;
                weights[2 * half] *= 0.5;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        DiscreteKernel { weights, half }
    }

    /// `(ρ * v)_i` with even reflection about the end nodes.
    pub fn convolve(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len() as i64;
        let half = self.half as i64;
        for i in 0..n {
            let mut acc = 0.0;
            if i >= half && i + half < n {
                let base = (i - half) as usize;
                for (w, x) in self.weights.iter().zip(&v[base..base + self.weights.len()]) {
                    acc += w * x;
                }
            } else {
                for (j, w) in self.weights.iter().enumerate() {
                    acc += w * v[reflect(i + j as i64 - half, n)];
                }
            }
            out[i as usize] = acc;
        }
    }
}

fn reflect(mut j: i64, n: i64) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    j = j.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Time-marching driver: advances `state` with steps no longer than `dt`
/// (shrunk by `limit` when needed) and stores snapshots on the
/// `snapshot_every` lattice.
fn march(
    initial: &ScalarField1D,
    opts: &SolveOptions,
    adaptive: bool,
    mut limit: impl FnMut(&[f64]) -> f64,
    mut rhs: impl FnMut(&[f64], &mut [f64]),
) -> Result<Trajectory> {
    opts.validate()?;
    let grid = initial.grid;
    let mut phi = initial.values.clone();
    let mut rate = vec![0.0; phi.len()];
    let mut snapshots = vec![initial.clone()];
    let mut clipped = 0.0;
    let mut steps = 0usize;
    let mut t = initial.t;
    let t_end = initial.t + opts.t_end;
    let mut next_snap = 1usize;
    let mut dt_cur = opts.dt;
    while t < t_end - 1e-12 {
        let lim = limit(&phi);
        if dt_cur > lim {
            if !adaptive {
                return Err(Error::Cfl { dt: dt_cur, limit: lim });
            }
            while dt_cur > lim {
                dt_cur *= 0.5;
            }
            if dt_cur < opts.dt * DT_FLOOR_FACTOR {
                return Err(Error::DtFloor);
            }
        }
        let target = (initial.t + next_snap as f64 * opts.snapshot_every).min(t_end);
        let step = dt_cur.min(target - t);
        rhs(&phi, &mut rate);
        let mut max = 0.0f64;
        for (p, r) in phi.iter_mut().zip(&rate) {
            *p += step * r;
            if *p < 0.0 {
                clipped -= *p * grid.h;
                *p = 0.0;
            }
            max = max.max(*p);
        }
        if !max.is_finite() || max > BLOW_UP {
            return Err(Error::BlowUp);
        }
        t += step;
        steps += 1;
        if t >= target - 1e-12 {
            t = target;
            snapshots.push(ScalarField1D { grid, values: phi.clone(), t });
            next_snap += 1;
        }
    }
    Ok(Trajectory { snapshots, clipped_mass: clipped, steps })
}

fn rd_limit(problem: &PdeProblem, h: f64) -> f64 {
    let diff = if problem.sigma2 > 0.0 { CFL_SAFETY * h * h / (2.0 * problem.sigma2) } else { f64::INFINITY };
    let adv = if problem.drift != 0.0 { CFL_SAFETY * h / problem.drift.abs() } else { f64::INFINITY };
    diff.min(adv)
}

/// Local reaction-diffusion `∂φ = σ²φ'' − bφ' + φF(φ)`.
pub fn solve_rd(problem: &PdeProblem, initial: &ScalarField1D, opts: &SolveOptions) -> Result<Trajectory> {
    let h = initial.grid.h;
    let lim = rd_limit(problem, h);
    let mut lap = vec![0.0; initial.values.len()];
    let f = problem.reaction;
    let (s2, b) = (problem.sigma2, problem.drift);
    march(initial, opts, false, |_| lim, |phi, out| {
        laplacian(phi, h, &mut lap);
        for i in 0..phi.len() {
            out[i] = s2 * lap[i] + phi[i] * f.of_density(phi[i]);
        }
        add_upwind_advection(phi, b, h, out);
    })
}

/// Nonlocal reaction-diffusion `∂φ = σ²φ'' − bφ' + φF(ρ*φ)`. A missing
/// kernel (ε = 0) is the local equation.
pub fn solve_nonlocal_rd(problem: &PdeProblem, initial: &ScalarField1D, opts: &SolveOptions) -> Result<Trajectory> {
    let Some(kernel) = problem.kernel else {
        return solve_rd(problem, initial, opts);
    };
    let h = initial.grid.h;
    let lim = rd_limit(problem, h);
    let dk = DiscreteKernel::new(&kernel, h);
    let n = initial.values.len();
    let (mut lap, mut conv) = (vec![0.0; n], vec![0.0; n]);
    let f = problem.reaction;
    let (s2, b) = (problem.sigma2, problem.drift);
    march(initial, opts, false, |_| lim, |phi, out| {
        laplacian(phi, h, &mut lap);
        dk.convolve(phi, &mut conv);
        for i in 0..phi.len() {
            out[i] = s2 * lap[i] + phi[i] * f.of_density(conv[i]);
        }
        add_upwind_advection(phi, b, h, out);
    })
}

/// Porous medium equation with logistic growth, `∂φ = σ²(φ²)'' + φ(1 − φ)`,
/// optionally with the dispersal-drift term `−b(φ²)'`.
///
/// The step shrinks whenever `dt > 0.9 h²/(4σ² max φ)`.
pub fn solve_pme(initial: &ScalarField1D, sigma2: f64, drift: f64, opts: &SolveOptions) -> Result<Trajectory> {
    let h = initial.grid.h;
    let n = initial.values.len();
    let (mut sq, mut lap) = (vec![0.0; n], vec![0.0; n]);
    let limit = |phi: &[f64]| {
        let m = phi.iter().cloned().fold(0.0, f64::max);
        let diff = if m > 0.0 { CFL_SAFETY * h * h / (4.0 * sigma2 * m) } else { f64::INFINITY };
        let adv = if drift != 0.0 && m > 0.0 { CFL_SAFETY * h / (2.0 * drift.abs() * m) } else { f64::INFINITY };
        diff.min(adv)
    };
    march(initial, opts, true, limit, |phi, out| {
        for (s, p) in sq.iter_mut().zip(phi) {
            *s = p * p;
        }
        laplacian(&sq, h, &mut lap);
        for i in 0..n {
            out[i] = sigma2 * lap[i] + phi[i] * (1.0 - phi[i]);
        }
        add_upwind_advection(&sq, drift, h, out);
    })
}

/// `∂φ = (φ²)'' + φ(1 − φ)`.
pub fn solve_pme_logistic(initial: &ScalarField1D, opts: &SolveOptions) -> Result<Trajectory> {
    solve_pme(initial, 1.0, 0.0, opts)
}

/// Mollified porous medium equation `∂ψ = (ψ·ρ*ψ)'' + ψ(1 − ρ*ψ)`.
/// A missing kernel is the local equation.
pub fn solve_nonlocal_pme(initial: &ScalarField1D, kernel: Option<&Kernel>, opts: &SolveOptions) -> Result<Trajectory> {
    let Some(kernel) = kernel else {
        return solve_pme_logistic(initial, opts);
    };
    let h = initial.grid.h;
    let n = initial.values.len();
    let dk = DiscreteKernel::new(kernel, h);
    let (mut conv, mut prod, mut lap) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut conv_for_limit = vec![0.0; n];
    let limit = |phi: &[f64]| {
        dk.convolve(phi, &mut conv_for_limit);
        let m = conv_for_limit.iter().chain(phi).cloned().fold(0.0, f64::max);
        if m > 0.0 {
            CFL_SAFETY * h * h / (4.0 * m)
        } else {
            f64::INFINITY
        }
    };
    let dk2 = dk.clone();
    march(initial, opts, true, limit, |phi, out| {
        dk2.convolve(phi, &mut conv);
        for i in 0..n {
            prod[i] = phi[i] * conv[i];
        }
        laplacian(&prod, h, &mut lap);
        for i in 0..n {
            out[i] = lap[i] + phi[i] * (1.0 - conv[i]);
        }
    })
}

/// Front positions over time and the fitted speed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveSpeed {
    pub speed: f64,
    /// `(t, x)` pairs.
    pub fronts: Vec<(f64, f64)>,
}

/// Position of the rightmost down-crossing of `level`, by linear interpolation.
pub fn front_position(field: &ScalarField1D, level: f64) -> Option<f64> {
    let v = &field.values;
    (0..v.len().saturating_sub(1)).rev().find_map(|i| {
        if v[i] >= level && v[i + 1] < level {
            let frac = (v[i] - level) / (v[i] - v[i + 1]);
            Some(field.grid.x(i) + frac * field.grid.h)
        } else {
            None
        }
    })
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Tracks the front at `level` in every snapshot and fits the speed over
/// the second half of the snapshots.
pub fn measure_wave_speed(snapshots: &[ScalarField1D], level: f64) -> Result<WaveSpeed> {
    if snapshots.len() < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 snapshots, got {}", snapshots.len())));
    }
    let fronts = snapshots
        .iter()
        .map(|s| front_position(s, level).map(|x| (s.t, x)).ok_or(Error::NoFront))
        .collect::<Result<Vec<_>>>()?;
    let tail = &fronts[fronts.len() / 2..];
    Ok(WaveSpeed { speed: ls_slope(tail), fronts })
}

/// Closed-form travelling waves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticWave {
    /// `(1 − e^{(x − x0 − t)/2})₊`
    Pme { x0: f64 },
    /// `(1 + e^{x − x0 − s t})⁻¹`
    AllenCahn { x0: f64, s: f64 },
}

impl AnalyticWave {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match *self {
            AnalyticWave::Pme { x0 } => (1.0 - ((x - x0 - t) / 2.0).exp()).max(0.0),
            AnalyticWave::AllenCahn { x0, s } => 1.0 / (1.0 + (x - x0 - s * t).exp()),
        }
    }

    /// Profile in the front frame, with the front placed where the wave equals one half.
    pub fn profile_from_half_level(&self, xi: f64) -> f64 {
        match *self {
            AnalyticWave::Pme { .. } => (1.0 - ((xi - 2.0 * std::f64::consts::LN_2) / 2.0).exp()).max(0.0),
            AnalyticWave::AllenCahn { .. } => 1.0 / (1.0 + xi.exp()),
        }
    }
}

pub fn analytic_wave(wave: &AnalyticWave, grid: Grid1D, t: f64) -> ScalarField1D {
    ScalarField1D::from_fn(grid, t, |x| wave.eval(x, t))
}

/// `L∞` distance between a solved profile and a closed-form wave aligned
/// at the measured half-level front.
pub fn front_frame_error(field: &ScalarField1D, wave: &AnalyticWave) -> Result<f64> {
    let front = front_position(field, 0.5).ok_or(Error::NoFront)?;
    Ok(field
        .grid
        .nodes()
        .zip(&field.values)
        .map(|(x, v)| (v - wave.profile_from_half_level(x - front)).abs())
        .fold(0.0, f64::max))
}

/// Heaviside initial data: `value` on `x ≤ edge`, zero beyond.
pub fn step_initial(grid: Grid1D, edge: f64, value: f64) -> ScalarField1D {
    ScalarField1D::from_fn(grid, 0.0, |x| if x <= edge { value } else { 0.0 })
}

/// Distance between nonlocal and local solutions at one kernel width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    /// Sup-norm distance for reaction-diffusion.
    pub rd_error: f64,
    /// Largest `|∫(ψ_ε − φ) f_k|` over the porous medium test functions.
    pub pme_error: f64,
}

/// Gaussian bumps of unit width used to measure weak PME distances.
pub fn weak_test_functions(centers: &[f64]) -> Vec<Box<dyn Fn(f64) -> f64>> {
    centers
        .iter()
        .map(|&c| Box::new(move |x: f64| (-(x - c) * (x - c) / 2.0).exp()) as Box<dyn Fn(f64) -> f64>)
        .collect()
}

/// Weak distance `max_k |∫(a − b) f_k|`.
pub fn weak_distance(a: &ScalarField1D, b: &ScalarField1D, tests: &[Box<dyn Fn(f64) -> f64>]) -> f64 {
    let g = a.grid;
    tests
        .iter()
        .map(|f| {
            let diff: Vec<f64> = (0..g.len).map(|i| (a.values[i] - b.values[i]) * f(g.x(i))).collect();
            g.integrate(&diff).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves the local and Gaussian-mollified equations (kernel variance `ε²`)
/// from `initial` to `t_end` and reports their distance for each `ε`.
/// `reaction` and `sigma2` define the reaction-diffusion pair; the porous
/// medium pair is always logistic.
pub fn epsilon_sweep(
    epsilons: &[f64],
    initial: &ScalarField1D,
    t_end: f64,
    reaction: RateFn,
    sigma2: f64,
    test_centers: &[f64],
) -> Result<Vec<SweepPoint>> {
    let h = initial.grid.h;
    // small enough that neither porous medium solve has to shrink its step
    let dt = (0.2 * h * h / sigma2.max(1.0)).min(0.01);
    let opts = SolveOptions::new(t_end, dt, t_end.max(dt));
    let local_rd = solve_rd(&PdeProblem::reaction_diffusion(reaction, sigma2), initial, &opts)?;
    let local_pme = solve_pme_logistic(initial, &opts)?;
    let tests = weak_test_functions(test_centers);
    epsilons
        .iter()
        .map(|&eps| {
            let k = Kernel::gaussian(eps * eps);
            let rd = solve_nonlocal_rd(&PdeProblem::nonlocal_rd(reaction, sigma2, Some(k)), initial, &opts)?;
            let pme = solve_nonlocal_pme(initial, Some(&k), &opts)?;
            Ok(SweepPoint {
                epsilon: eps,
                rd_error: rd.last().sup_distance(local_rd.last()),
                pme_error: weak_distance(pme.last(), local_pme.last(), &tests),
            })
        })
        .collect()
}
