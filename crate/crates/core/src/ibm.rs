//! Forward-time individual-based simulation: births with establishment,
//! density-dependent deaths and Gaussian dispersal.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{CellList, DensityEvaluator, Kernel, PreparedKernel};
use crate::model::DemographyModel;
use crate::pde::{Grid1D, ScalarField1D};

/// Atomic measure with mass `1/N` per individual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointPopulation {
    pub dim: usize,
    /// `dim` coordinates per individual, contiguous.
    pub positions: Vec<f64>,
    pub n_scale: f64,
    pub time: f64,
}

impl PointPopulation {
    pub fn new(dim: usize, positions: Vec<f64>, n_scale: f64) -> Result<Self> {
        if dim == 0 || positions.len() % dim != 0 {
            return Err(Error::Dimension { expected: dim, got: positions.len() });
        }
        if !(n_scale > 0.0) {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQueryPoint);
        }
        Ok(PointPopulation { dim, positions, n_scale, time: 0.0 })
    }

    pub fn empty(dim: usize, n_scale: f64) -> Self {
        PointPopulation { dim, positions: Vec::new(), n_scale, time: 0.0 }
    }

    /// `count` individuals evenly spread over `[lo, hi]`.
    pub fn uniform_1d(count: usize, lo: f64, hi: f64, n_scale: f64) -> Self {
        let h = (hi - lo) / count as f64;
        let positions = (0..count).map(|i| lo + (i as f64 + 0.5) * h).collect();
        PointPopulation { dim: 1, positions, n_scale, time: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `⟨1, η⟩`
    pub fn total_mass(&self) -> f64 {
        self.len() as f64 / self.n_scale
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }
}

/// Per-individual rates at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalRates {
    pub gamma: f64,
    pub r: f64,
    /// Clamped death rate `μ_θ`.
    pub mu: f64,
    /// Net reproduction `F`.
    pub f: f64,
}

pub(crate) fn rates_from_densities(model: &DemographyModel, x: &[f64], mg: f64, mr: f64, mf: f64) -> Result<LocalRates> {
    let gamma = model.gamma_at(x, mg);
    let r = model.r.eval(x, mr);
    let f = model.f.eval(x, mf);
    let mu = (r * gamma - f / model.theta).max(0.0);
    if !(gamma.is_finite() && r.is_finite() && f.is_finite()) {
        return Err(Error::NonFiniteRate);
    }
    Ok(LocalRates { gamma, r, mu, f })
}

/// `μ_θ(x)` against the current population.
pub fn death_rate(model: &DemographyModel, x: &[f64], pop: &PointPopulation) -> Result<f64> {
    let mass = 1.0 / pop.n_scale;
    let dens = |k: &Kernel, used: bool| -> Result<f64> {
        if used {
            DensityEvaluator::new(k, &pop.positions, pop.dim, mass).at(x)
        } else {
            Ok(0.0)
        }
    };
    let mg = dens(&model.kernel_gamma, model.gamma.uses_density())?;
    let mr = dens(&model.kernel_r, model.r.uses_density())?;
    let mf = dens(&model.kernel_f, model.f.uses_density())?;
    Ok(rates_from_densities(model, x, mg, mr, mf)?.mu)
}

const FULL_REFRESH_EVERY: usize = 64;

/// Local densities of every individual, updated incrementally from births
/// and deaths with a periodic full recomputation.
#[derive(Clone, Debug)]
pub(crate) struct DensityCache {
    kernels: Vec<Kernel>,
    prepared: Vec<PreparedKernel>,
    /// Slot used by `γ`, `r`, `F`.
    slot: [Option<usize>; 3],
    values: Vec<Vec<f64>>,
    since_full: usize,
    valid: bool,
}

impl DensityCache {
    pub(crate) fn new(model: &DemographyModel) -> Self {
        let mut kernels: Vec<Kernel> = Vec::new();
        let mut slot = [None; 3];
        let uses = [
            (model.gamma.uses_density(), model.kernel_gamma),
            (model.r.uses_density(), model.kernel_r),
            (model.f.uses_density(), model.kernel_f),
        ];
        for (j, (used, k)) in uses.into_iter().enumerate() {
            if used {
                let s = kernels.iter().position(|q| *q == k).unwrap_or_else(|| {
                    kernels.push(k);
                    kernels.len() - 1
                });
                slot[j] = Some(s);
            }
        }
        let dim = model.dim();
        let prepared = kernels.iter().map(|k| k.prepared(dim)).collect();
        DensityCache { values: vec![Vec::new(); kernels.len()], kernels, prepared, slot, since_full: 0, valid: false }
    }

    pub(crate) fn is_trivial(&self) -> bool {
        self.kernels.is_empty()
    }

    pub(crate) fn ensure(&mut self, positions: &[f64], dim: usize, mass: f64) {
        if !self.valid || self.values.iter().any(|v| v.len() * dim != positions.len()) {
            self.full(positions, dim, mass);
        }
    }

    fn full(&mut self, positions: &[f64], dim: usize, mass: f64) {
        for (s, k) in self.kernels.iter().enumerate() {
            let ev = DensityEvaluator::new(k, positions, dim, mass);
            self.values[s] = positions.chunks_exact(dim).map(|p| mass * ev.raw_sum(p)).collect();
        }
        self.since_full = 0;
        self.valid = true;
    }

    /// `(m_γ, m_r, m_F)` of individual `i`.
    #[inline]
    pub(crate) fn get(&self, i: usize) -> (f64, f64, f64) {
        let v = |j: usize| self.slot[j].map_or(0.0, |s| self.values[s][i]);
        (v(0), v(1), v(2))
    }

    /// Moves the cache to the population made of `old` minus `removed`
    /// (kept in order) followed by `born`.
    pub(crate) fn update(&mut self, old: &[f64], removed: &[bool], born: &[f64], new: &[f64], dim: usize, mass: f64) {
        if self.is_trivial() {
            return;
        }
        let n_new = new.len() / dim;
        let n_removed = removed.iter().filter(|&&r| r).count();
        let changes = n_removed + born.len() / dim;
        self.since_full += 1;
        if !self.valid || self.since_full >= FULL_REFRESH_EVERY || 4 * changes > n_new.max(1) {
            self.full(new, dim, mass);
            return;
        }
        if changes == 0 {
            return;
        }
        let mut delta_pts = Vec::with_capacity(changes * dim);
        let mut sign = Vec::with_capacity(changes);
        for (i, p) in old.chunks_exact(dim).enumerate() {
            if removed[i] {
                delta_pts.extend_from_slice(p);
                sign.push(-1.0);
            }
        }
        delta_pts.extend_from_slice(born);
        sign.extend(std::iter::repeat_n(1.0, born.len() / dim));
        for s in 0..self.kernels.len() {
            let k = self.prepared[s];
            let radius = self.kernels[s].support_radius();
            let min_cell = radius.max(1e-12);
            let cells = CellList::new(&delta_pts, dim, min_cell);
            let mut next = Vec::with_capacity(n_new);
            for (i, p) in old.chunks_exact(dim).enumerate() {
                if removed[i] {
                    continue;
                }
                let mut acc = 0.0;
                cells.for_each_within(&delta_pts, p, radius, |j, d2| acc += sign[j] * k.at_sq(d2));
                next.push(self.values[s][i] + mass * acc);
            }
            if !born.is_empty() {
                let ev = DensityEvaluator::new(&self.kernels[s], new, dim, mass);
                for p in born.chunks_exact(dim) {
                    next.push(mass * ev.raw_sum(p));
                }
            }
            self.values[s] = next;
        }
    }
}

/// Guard on the per-step event probability scale.
pub const STEP_GUARD: f64 = 0.1;

/// Draws an offspring location, redrawing displacements that leave the
/// domain up to 100 times and clamping after that.
pub(crate) fn disperse<R: Rng + ?Sized>(model: &DemographyModel, x: &[f64], out: &mut [f64], rng: &mut R) -> Result<()> {
    for _ in 0..100 {
        model.dispersal.sample_into(x, out, rng)?;
        if model.domain.contains(out) {
            return Ok(());
        }
    }
    model.domain.clamp(out);
    Ok(())
}

/// Discrete-time stepper with a persistent density cache.
#[derive(Clone, Debug)]
pub struct DiscreteStepper {
    cache: DensityCache,
}

impl DiscreteStepper {
    pub fn new(model: &DemographyModel) -> Self {
        DiscreteStepper { cache: DensityCache::new(model) }
    }

    /// One step of length `dt`: each individual reproduces with probability
    /// `1 − e^{−θγdt}` and dies with probability `1 − e^{−θμdt}`, all rates
    /// taken from the pre-step population. Offspring establish with
    /// probability `r` at the landing point.
    pub fn step<R: Rng + ?Sized>(&mut self, model: &DemographyModel, pop: &mut PointPopulation, dt: f64, rng: &mut R) -> Result<()> {
        let dim = pop.dim;
        if dim != model.dim() {
            return Err(Error::Dimension { expected: model.dim(), got: dim });
        }
        let n = pop.len();
        let mass = 1.0 / pop.n_scale;
        let theta = model.theta;
        if n == 0 {
            pop.time += dt;
            return Ok(());
        }
        self.cache.ensure(&pop.positions, dim, mass);
        let mut rates = Vec::with_capacity(n);
        let mut worst = 0.0f64;
        for i in 0..n {
            let (mg, mr, mf) = self.cache.get(i);
            let lr = rates_from_densities(model, pop.point(i), mg, mr, mf)?;
            worst = worst.max(lr.gamma + lr.mu);
            rates.push(lr);
        }
        let guard = theta * worst * dt;
        if guard > STEP_GUARD {
            return Err(Error::StepTooLarge { guard, limit: STEP_GUARD });
        }
        let r_evaluator = if model.r.uses_density() {
            Some(DensityEvaluator::new(&model.kernel_r, &pop.positions, dim, mass))
        } else {
            None
        };
        let mut removed = vec![false; n];
        let mut born = Vec::new();
        let mut y = vec![0.0; dim];
        for i in 0..n {
            let lr = rates[i];
            let p_birth = -(-theta * lr.gamma * dt).exp_m1();
            let p_death = -(-theta * lr.mu * dt).exp_m1();
            if rng.random::<f64>() < p_birth {
                disperse(model, pop.point(i), &mut y, rng)?;
                let my = match &r_evaluator {
                    Some(ev) => ev.at(&y)?,
                    None => 0.0,
                };
                let r = model.r.eval(&y, my);
                if !r.is_finite() {
                    return Err(Error::NonFiniteRate);
                }
                if rng.random::<f64>() < r {
                    born.extend_from_slice(&y);
                }
            }
            if rng.random::<f64>() < p_death {
                removed[i] = true;
            }
        }
        let mut next = Vec::with_capacity(pop.positions.len() + born.len());
        for (i, p) in pop.positions.chunks_exact(dim).enumerate() {
            if !removed[i] {
                next.extend_from_slice(p);
            }
        }
        next.extend_from_slice(&born);
        self.cache.update(&pop.positions, &removed, &born, &next, dim, mass);
        pop.positions = next;
        pop.time += dt;
        Ok(())
    }
}

/// One discrete step from a fresh density computation.
pub fn step_discrete<R: Rng + ?Sized>(model: &DemographyModel, pop: &PointPopulation, dt: f64, rng: &mut R) -> Result<PointPopulation> {
    let mut next = pop.clone();
    DiscreteStepper::new(model).step(model, &mut next, dt, rng)?;
    Ok(next)
}

/// What the exact stepper's proposal turned into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExactOutcome {
    Birth,
    /// A birth whose offspring failed to establish.
    FailedBirth,
    Death,
    Rejected,
}

/// One proposal of the thinned exact stepper.
///
/// Proposals arrive at total rate `θ·count·(γ_cap + μ_cap)`; a uniformly
/// chosen individual then gives birth, dies or does nothing according to its
/// true rates. An empty population returns [`Error::Extinct`].
pub fn step_exact<R: Rng + ?Sized>(
    model: &DemographyModel,
    pop: &PointPopulation,
    mu_cap: f64,
    rng: &mut R,
) -> Result<(PointPopulation, f64, ExactOutcome)> {
    let n = pop.len();
    if n == 0 {
        return Err(Error::Extinct);
    }
    let bound = model.gamma_cap + mu_cap;
    let total = model.theta * n as f64 * bound;
    let elapsed = -(1.0 - rng.random::<f64>()).ln() / total;
    let i = rng.random_range(0..n);
    let x = pop.point(i).to_vec();
    let mass = 1.0 / pop.n_scale;
    let dens = |k: &Kernel, used: bool, q: &[f64]| -> Result<f64> {
        if used {
            DensityEvaluator::new(k, &pop.positions, pop.dim, mass).at(q)
        } else {
            Ok(0.0)
        }
    };
    let mg = dens(&model.kernel_gamma, model.gamma.uses_density(), &x)?;
    let mr = dens(&model.kernel_r, model.r.uses_density(), &x)?;
    let mf = dens(&model.kernel_f, model.f.uses_density(), &x)?;
    let lr = rates_from_densities(model, &x, mg, mr, mf)?;
    if lr.mu > mu_cap {
        return Err(Error::InvalidParameter(format!("death rate {} exceeds cap {mu_cap}", lr.mu)));
    }
    let mut next = pop.clone();
    next.time += elapsed;
    let v = rng.random::<f64>() * bound;
    let outcome = if v < lr.gamma {
        let mut y = vec![0.0; pop.dim];
        disperse(model, &x, &mut y, rng)?;
        let my = dens(&model.kernel_r, model.r.uses_density(), &y)?;
        if rng.random::<f64>() < model.r.eval(&y, my) {
            next.positions.extend_from_slice(&y);
            ExactOutcome::Birth
        } else {
            ExactOutcome::FailedBirth
        }
    } else if v < lr.gamma + lr.mu {
        next.positions.drain(i * pop.dim..(i + 1) * pop.dim);
        ExactOutcome::Death
    } else {
        ExactOutcome::Rejected
    };
    Ok((next, elapsed, outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stepper {
    Discrete { dt: f64 },
    Exact { mu_cap: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IbmTrajectory {
    pub snapshots: Vec<PointPopulation>,
    /// Time the population died out, if it did.
    pub extinct_at: Option<f64>,
}

/// Runs to `horizon`, recording a snapshot at every multiple of
/// `snapshot_every`. Extinction ends the dynamics; later snapshots are empty.
pub fn run_ibm<R: Rng + ?Sized>(
    model: &DemographyModel,
    initial: &PointPopulation,
    horizon: f64,
    snapshot_every: f64,
    rng: &mut R,
    stepper: Stepper,
) -> Result<IbmTrajectory> {
    if !(horizon >= 0.0) || !(snapshot_every > 0.0) {
        return Err(Error::InvalidParameter("horizon must be ≥ 0 and snapshot spacing > 0".into()));
    }
    let mut pop = initial.clone();
    let t0 = pop.time;
    let mut snapshots = vec![pop.clone()];
    let n_snaps = (horizon / snapshot_every + 1e-9).floor() as usize;
    let mut extinct_at = None;
    match stepper {
        Stepper::Discrete { dt } => {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter("dt must be positive".into()));
            }
            let per = ((snapshot_every / dt).round() as usize).max(1);
            let mut st = DiscreteStepper::new(model);
            let mut k = 0usize;
            for s in 1..=n_snaps {
                while k < s * per {
                    if pop.is_empty() {
                        extinct_at.get_or_insert(pop.time);
                        break;
                    }
                    st.step(model, &mut pop, dt, rng)?;
                    k += 1;
                }
                if pop.is_empty() {
                    extinct_at.get_or_insert(pop.time);
                }
                let mut snap = pop.clone();
                snap.time = t0 + s as f64 * snapshot_every;
                snapshots.push(snap);
            }
        }
        Stepper::Exact { mu_cap } => {
            for s in 1..=n_snaps {
                let target = t0 + s as f64 * snapshot_every;
                loop {
                    match step_exact(model, &pop, mu_cap, rng) {
                        Ok((next, _, _)) if next.time > target => {
                            // the pending event falls after the snapshot; discard it
                            // (memorylessness makes the restart exact)
                            pop.time = target;
                            break;
                        }
                        Ok((next, _, _)) => pop = next,
                        Err(Error::Extinct) => {
                            extinct_at.get_or_insert(pop.time);
                            pop.time = target;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                snapshots.push(pop.clone());
            }
        }
    }
    Ok(IbmTrajectory { snapshots, extinct_at })
}

/// `ρ*η` at the nodes of a one-dimensional grid.
pub fn density_profile(pop: &PointPopulation, grid: Grid1D, kernel: &Kernel) -> Result<ScalarField1D> {
    if pop.dim != 1 {
        return Err(Error::Dimension { expected: 1, got: pop.dim });
    }
    let ev = DensityEvaluator::new(kernel, &pop.positions, 1, 1.0 / pop.n_scale);
    let values = grid.nodes().map(|x| ev.at(&[x])).collect::<Result<Vec<_>>>()?;
    Ok(ScalarField1D { grid, values, t: pop.time })
}

/// Two-dimensional histogram density on `nx × ny` cells of the box.
pub fn density_histogram_2d(pop: &PointPopulation, lo: [f64; 2], hi: [f64; 2], nx: usize, ny: usize) -> Result<Vec<f64>> {
    if pop.dim != 2 {
        return Err(Error::Dimension { expected: 2, got: pop.dim });
    }
    let (wx, wy) = ((hi[0] - lo[0]) / nx as f64, (hi[1] - lo[1]) / ny as f64);
    let mut out = vec![0.0; nx * ny];
    for p in pop.points() {
        let i = (((p[0] - lo[0]) / wx).floor() as isize).clamp(0, nx as isize - 1) as usize;
        let j = (((p[1] - lo[1]) / wy).floor() as isize).clamp(0, ny as isize - 1) as usize;
        out[j * nx + i] += 1.0 / (pop.n_scale * wx * wy);
    }
    Ok(out)
}
