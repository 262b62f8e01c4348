//! Lookdown representation: individuals carry a level in `[0, N]`, levels
//! drift by `u̇ = c u² − b u`, and labels record lines of descent.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ibm::{disperse, rates_from_densities, DensityCache, PointPopulation, STEP_GUARD};
use crate::kernels::{DensityEvaluator, Kernel};
use crate::model::DemographyModel;
use crate::stats::{ks_test, KsResult};

pub type LabelId = usize;

/// Ulam–Harris labels stored as `(parent, child index)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LabelArena {
    parent: Vec<Option<LabelId>>,
    index: Vec<u32>,
    children: Vec<u32>,
    roots: u32,
}

impl LabelArena {
    pub fn root(&mut self) -> LabelId {
        self.roots += 1;
        self.push(None, self.roots)
    }

    pub fn child(&mut self, parent: LabelId) -> LabelId {
        self.children[parent] += 1;
        let k = self.children[parent];
        self.push(Some(parent), k)
    }

    fn push(&mut self, parent: Option<LabelId>, index: u32) -> LabelId {
        self.parent.push(parent);
        self.index.push(index);
        self.children.push(0);
        self.parent.len() - 1
    }

    pub fn parent(&self, id: LabelId) -> Option<LabelId> {
        self.parent[id]
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Dotted form, e.g. `3.1.2`.
    pub fn render(&self, id: LabelId) -> String {
        let mut parts = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            parts.push(self.index[c].to_string());
            cur = self.parent[c];
        }
        parts.reverse();
        parts.join(".")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelledIndividual {
    pub position: Vec<f64>,
    pub level: f64,
    pub label: LabelId,
    pub birth_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth,
    Death,
}

/// One line of the event log. For a birth, `label` is the new label and
/// `parent` the label that gave birth; `swap` means the parent label moved
/// to the offspring's landing point and the new label took the parent's
/// old place. For a death, `label` is the label removed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub parent: Option<LabelId>,
    pub label: LabelId,
    pub swap: bool,
    pub x_parent: Vec<f64>,
    pub x_child: Vec<f64>,
    pub new_level: f64,
}

#[derive(Clone, Debug)]
pub struct LevelledPopulation {
    pub dim: usize,
    pub individuals: Vec<LevelledIndividual>,
    pub n_scale: f64,
    pub theta: f64,
    pub time: f64,
    pub labels: LabelArena,
    pub log: Vec<EventRecord>,
    /// Earliest time the log covers.
    pub log_start: f64,
    cache: Option<DensityCache>,
}

impl LevelledPopulation {
    /// Assigns i.i.d. uniform levels and fresh root labels to `pop`.
    pub fn from_points<R: Rng + ?Sized>(pop: &PointPopulation, theta: f64, rng: &mut R) -> Self {
        let mut labels = LabelArena::default();
        let individuals = pop
            .points()
            .map(|p| LevelledIndividual {
                position: p.to_vec(),
                level: rng.random::<f64>() * pop.n_scale,
                label: labels.root(),
                birth_time: pop.time,
            })
            .collect();
        LevelledPopulation {
            dim: pop.dim,
            individuals,
            n_scale: pop.n_scale,
            theta,
            time: pop.time,
            labels,
            log: Vec::new(),
            log_start: pop.time,
            cache: None,
        }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.individuals.iter().map(|i| i.level).collect()
    }

    fn positions(&self) -> Vec<f64> {
        self.individuals.iter().flat_map(|i| i.position.iter().copied()).collect()
    }

    pub fn find(&self, label: LabelId) -> Option<&LevelledIndividual> {
        self.individuals.iter().find(|i| i.label == label)
    }
}

/// Drops levels: mass `1/N` per individual.
pub fn project(pop: &LevelledPopulation) -> PointPopulation {
    PointPopulation { dim: pop.dim, positions: pop.positions(), n_scale: pop.n_scale, time: pop.time }
}

/// Three-point Gauss–Hermite rule for a standard normal.
const SIGMA_NODES: [(f64, f64); 3] = [(0.0, 2.0 / 3.0), (1.732_050_807_568_877_2, 1.0 / 6.0), (-1.732_050_807_568_877_2, 1.0 / 6.0)];

/// `E[g(Y)]` for `Y` an offspring location from `x`, by the tensor sigma-point rule.
fn expected_over_dispersal(model: &DemographyModel, x: &[f64], mut g: impl FnMut(&[f64]) -> Result<f64>) -> Result<f64> {
    let d = x.len();
    let law = &model.dispersal;
    let theta = model.theta;
    let mean = law.mean_at(x);
    let k = law.factor_at(x)?;
    let scale = theta.sqrt().recip();
    let total = 3usize.pow(d as u32);
    let mut acc = 0.0;
    let mut y = vec![0.0; d];
    for code in 0..total {
        let mut c = code;
        let mut w = 1.0;
        let mut z = vec![0.0; d];
        for zk in z.iter_mut() {
            let (node, weight) = SIGMA_NODES[c % 3];
            *zk = node;
            w *= weight;
            c /= 3;
        }
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..=i {
                s += k[(i, j)] * z[j];
            }
            y[i] = x[i] + mean[i] / theta + s * scale;
        }
        acc += w * g(&y)?;
    }
    Ok(acc)
}

/// Level drift coefficients `(b, c)` at `x`:
/// `c = (θ/N) γ Ê[r(Y)]`, `b = θγ(Ê[r(Y)] − r(x)) + F(x)`.
pub fn level_coefficients(model: &DemographyModel, x: &[f64], pop: &PointPopulation) -> Result<(f64, f64)> {
    let mass = 1.0 / pop.n_scale;
    let ev = |k: &Kernel| DensityEvaluator::new(k, &pop.positions, pop.dim, mass);
    let dens = |k: &Kernel, used: bool, q: &[f64]| -> Result<f64> { if used { ev(k).at(q) } else { Ok(0.0) } };
    let mg = dens(&model.kernel_gamma, model.gamma.uses_density(), x)?;
    let mr = dens(&model.kernel_r, model.r.uses_density(), x)?;
    let mf = dens(&model.kernel_f, model.f.uses_density(), x)?;
    let lr = rates_from_densities(model, x, mg, mr, mf)?;
    let er = if model.r.uses_density() {
        let e = ev(&model.kernel_r);
        expected_over_dispersal(model, x, |y| Ok(model.r.eval(y, e.at(y)?)))?
    } else {
        expected_over_dispersal(model, x, |y| Ok(model.r.eval(y, 0.0)))?
    };
    Ok(coefficients(model, pop.n_scale, lr.gamma, lr.r, lr.f, er))
}

#[inline]
fn coefficients(model: &DemographyModel, n_scale: f64, gamma: f64, r: f64, f: f64, er: f64) -> (f64, f64) {
    let c = model.theta / n_scale * gamma * er;
    let b = model.theta * gamma * (er - r) + f;
    (b, c)
}

/// Solves `u̇ = c u² − b u` from `u0` over `dt`. Returns `None` when the
/// level escapes to infinity within the step.
pub fn evolve_level(u0: f64, b: f64, c: f64, dt: f64) -> Result<Option<f64>> {
    if !(u0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("level must be nonnegative, got {u0}")));
    }
    if u0 == 0.0 {
        return Ok(Some(0.0));
    }
    let denom = if b.abs() * dt < 1e-12 {
        // b → 0 limit of the closed form, first order in b
        1.0 / u0 - c * dt - b * (c * dt * dt / 2.0 - dt / u0)
    } else {
        let q = c / b;
        q + (1.0 / u0 - q) * (b * dt).exp()
    };
    if denom <= 0.0 || !denom.is_finite() {
        return Ok(None);
    }
    Ok(Some(1.0 / denom))
}

/// One step of length `dt`.
///
/// Each individual at level `u` gives birth with probability
/// `1 − exp(−2θ(1 − u/N)γ dt)`; the juvenile lands by dispersal, establishes
/// with probability `r` there and receives a level uniform on `[u, N]`; with
/// probability one half the two swap places. Existing levels then follow
/// [`evolve_level`] with coefficients frozen at the start of the step, and
/// individuals whose level passes `N` die.
pub fn lookdown_step<R: Rng + ?Sized>(pop: &mut LevelledPopulation, model: &DemographyModel, dt: f64, rng: &mut R) -> Result<()> {
    let dim = pop.dim;
    if dim != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: dim });
    }
    let n = pop.len();
    let big_n = pop.n_scale;
    let theta = model.theta;
    let mass = 1.0 / big_n;
    let t_event = pop.time + dt;
    if n == 0 {
        pop.time = t_event;
        return Ok(());
    }
    let old_positions = pop.positions();
    let cache = pop.cache.get_or_insert_with(|| DensityCache::new(model));
    cache.ensure(&old_positions, dim, mass);
    let r_ev = if model.r.uses_density() {
        Some(DensityEvaluator::new(&model.kernel_r, &old_positions, dim, mass))
    } else {
        None
    };
    let r_at = |y: &[f64]| -> Result<f64> {
        let m = match &r_ev {
            Some(e) => e.at(y)?,
            None => 0.0,
        };
        let v = model.r.eval(y, m);
        if v.is_finite() { Ok(v) } else { Err(Error::NonFiniteRate) }
    };
    let mut coeffs = Vec::with_capacity(n);
    let mut gammas = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for (i, ind) in pop.individuals.iter().enumerate() {
        let (mg, mr, mf) = cache.get(i);
        let lr = rates_from_densities(model, &ind.position, mg, mr, mf)?;
        worst = worst.max(lr.gamma + lr.mu);
        let er = expected_over_dispersal(model, &ind.position, &r_at)?;
        coeffs.push(coefficients(model, big_n, lr.gamma, lr.r, lr.f, er));
        gammas.push(lr.gamma);
    }
    let guard = theta * worst * dt;
    if guard > STEP_GUARD {
        return Err(Error::StepTooLarge { guard, limit: STEP_GUARD });
    }

    // births against the pre-step snapshot
    let mut moved = vec![false; n];
    let mut newborn: Vec<LevelledIndividual> = Vec::new();
    let mut y = vec![0.0; dim];
    for i in 0..n {
        let u = pop.individuals[i].level;
        let rate = 2.0 * theta * (1.0 - u / big_n).max(0.0) * gammas[i];
        if rate <= 0.0 || rng.random::<f64>() >= -(-rate * dt).exp_m1() {
            continue;
        }
        let x = pop.individuals[i].position.clone();
        disperse(model, &x, &mut y, rng)?;
        let new_level = u + rng.random::<f64>() * (big_n - u);
        if rng.random::<f64>() >= r_at(&y)? {
            continue;
        }
        let swap = rng.random::<f64>() < 0.5;
        let parent_label = pop.individuals[i].label;
        let child = pop.labels.child(parent_label);
        let (child_pos, parent_new) = if swap { (x.clone(), Some(y.clone())) } else { (y.clone(), None) };
        if let Some(p) = parent_new {
            pop.individuals[i].position = p;
            moved[i] = true;
        }
        newborn.push(LevelledIndividual { position: child_pos, level: new_level, label: child, birth_time: t_event });
        pop.log.push(EventRecord {
            t: t_event,
            kind: EventKind::Birth,
            parent: Some(parent_label),
            label: child,
            swap,
            x_parent: x,
            x_child: y.clone(),
            new_level,
        });
    }

    // level motion and deaths
    let mut removed = vec![false; n];
    for i in 0..n {
        let (b, c) = coeffs[i];
        let ind = &mut pop.individuals[i];
        match evolve_level(ind.level, b, c, dt)? {
            Some(u) if u <= big_n => ind.level = u,
            _ => {
                removed[i] = true;
                pop.log.push(EventRecord {
                    t: t_event,
                    kind: EventKind::Death,
                    parent: None,
                    label: ind.label,
                    swap: false,
                    x_parent: ind.position.clone(),
                    x_child: ind.position.clone(),
                    new_level: f64::NAN,
                });
            }
        }
    }

    // reorder: untouched survivors, then moved survivors, then newborns
    let old = std::mem::take(&mut pop.individuals);
    let mut stay = Vec::with_capacity(n + newborn.len());
    let mut tail = Vec::new();
    let mut gone = vec![false; n];
    for (i, ind) in old.into_iter().enumerate() {
        gone[i] = removed[i] || moved[i];
        if removed[i] {
            continue;
        }
        if moved[i] {
            tail.push(ind);
        } else {
            stay.push(ind);
        }
    }
    stay.extend(tail);
    stay.extend(newborn);
    pop.individuals = stay;
    let new_positions = pop.positions();
    let untouched = gone.iter().filter(|&&g| !g).count();
    let added = &new_positions[untouched * dim..];
    if let Some(cache) = pop.cache.as_mut() {
        cache.update(&old_positions, &gone, added, &new_positions, dim, mass);
    }
    pop.time = t_event;
    Ok(())
}

/// Runs the lookdown to `horizon` in steps of `dt`.
pub fn run_lookdown<R: Rng + ?Sized>(pop: &mut LevelledPopulation, model: &DemographyModel, horizon: f64, dt: f64, rng: &mut R) -> Result<()> {
    let steps = (horizon / dt).round() as usize;
    for _ in 0..steps {
        if pop.is_empty() {
            break;
        }
        lookdown_step(pop, model, dt, rng)?;
    }
    Ok(())
}

/// Piecewise-constant ancestral path: `(backward time, position)` at the
/// start of each constant piece.
pub type LineagePath = Vec<(f64, Vec<f64>)>;

/// Follows `label` back from `now` (where it sits at `position_now`) to
/// `back_to`, through births in which it was the new label or in which it
/// moved as a swapped parent.
pub fn trace_lineage(
    log: &[EventRecord],
    labels: &LabelArena,
    log_start: f64,
    label: LabelId,
    position_now: &[f64],
    now: f64,
    back_to: f64,
) -> Result<LineagePath> {
    if label >= labels.len() {
        return Err(Error::LineageRecordGap(format!("unknown label {label}")));
    }
    if back_to < log_start {
        return Err(Error::LineageRecordGap(format!("log starts at {log_start}, requested {back_to}")));
    }
    let mut path = vec![(0.0, position_now.to_vec())];
    let mut cur = label;
    for rec in log.iter().rev() {
        if rec.t > now || rec.kind != EventKind::Birth {
            continue;
        }
        if rec.t <= back_to {
            break;
        }
        if rec.label == cur {
            path.push((now - rec.t, rec.x_parent.clone()));
            cur = rec.parent.ok_or_else(|| Error::LineageRecordGap(format!("label {} has no parent", labels.render(cur))))?;
        } else if rec.parent == Some(cur) && rec.swap {
            path.push((now - rec.t, rec.x_parent.clone()));
        }
    }
    Ok(path)
}

/// Position on a lineage path at backward time `s`.
pub fn path_position(path: &LineagePath, s: f64) -> &[f64] {
    let mut cur = &path[0].1;
    for (t, x) in path {
        if *t <= s {
            cur = x;
        } else {
            break;
        }
    }
    cur
}

/// KS test of the levels against `Uniform[0, N]`; needs at least 20 individuals.
pub fn levels_uniformity_stat(pop: &LevelledPopulation) -> Result<KsResult> {
    if pop.len() < 20 {
        return Err(Error::TooFew(pop.len(), 20));
    }
    let n = pop.n_scale;
    Ok(ks_test(&pop.levels(), |u| (u / n).clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DispersalLaw;
    use crate::model::{Domain, Preset, PresetParams, RateFn};
    use crate::rng::stream;

    fn model(r: RateFn, f: RateFn, theta: f64) -> DemographyModel {
        let k = Kernel::gaussian(1.0);
        DemographyModel {
            gamma: RateFn::constant(1.0),
            r,
            f,
            kernel_gamma: k,
            kernel_r: k,
            kernel_f: k,
            dispersal: DispersalLaw::isotropic(1, 2.0, theta).unwrap(),
            theta,
            gamma_cap: 20.0,
            domain: Domain::interval(-1e6, 1e6),
        }
    }

    #[test]
    fn constant_establishment_coefficients() {
        let m = model(RateFn::constant(1.0), RateFn::logistic(), 10.0);
        // density one everywhere near the origin
        let pop = PointPopulation::uniform_1d(4_000, -100.0, 100.0, 20.0);
        let (b, c) = level_coefficients(&m, &[0.0], &pop).unwrap();
        assert!(b.abs() < 1e-9);
        assert!((c - 10.0 / 20.0).abs() < 1e-15);
        let m2 = model(RateFn::constant(1.0), RateFn::logistic(), 20.0);
        let (b, c) = level_coefficients(&m2, &[0.0], &pop).unwrap();
        assert!(b.abs() < 1e-9 && (c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_points_against_monte_carlo() {
        use rand::Rng;
        let slope = 0.3;
        for theta in [10.0, 100.0] {
            let m = model(RateFn::LinearInSpace { intercept: 0.5, slope }, RateFn::constant(0.0), theta);
            let pop = PointPopulation::empty(1, 1.0);
            let (b, _) = level_coefficients(&m, &[0.2], &pop).unwrap();
            // mean-zero dispersal: E r(Y) − r(x) vanishes for linear r
            let mut rng = stream(5, 0);
            let n = 100_000;
            let sd = (2.0 / theta).sqrt();
            let draws: Vec<f64> = (0..n)
                .map(|_| theta * slope * sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let mc = crate::stats::mean(&draws);
            let se = crate::stats::variance(&draws).sqrt() / (n as f64).sqrt();
            assert!((b - mc).abs() < 3.0 * se, "θ={theta} b={b} mc={mc}");
        }
    }

    #[test]
    fn level_closed_forms() {
        let u = evolve_level(2.0, 0.7, 0.0, 1.5).unwrap().unwrap();
        assert!((u - 2.0 * (-0.7f64 * 1.5).exp()).abs() < 1e-14);
        assert!((evolve_level(1.0, 0.0, 1.0, 0.5).unwrap().unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(evolve_level(1.0, 0.0, 1.0, 1.5).unwrap(), None);
        assert!(evolve_level(-1.0, 0.0, 1.0, 0.1).is_err());
    }

    fn rk4(u0: f64, b: f64, c: f64, dt: f64) -> f64 {
        let f = |u: f64| c * u * u - b * u;
        let h = dt / 1000.0;
        let mut u = u0;
        for _ in 0..1000 {
            let k1 = f(u);
            let k2 = f(u + 0.5 * h * k1);
            let k3 = f(u + 0.5 * h * k2);
            let k4 = f(u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        u
    }

    #[test]
    fn level_matches_rk4() {
        use rand::Rng;
        let mut rng = stream(17, 0);
        for _ in 0..200 {
            let b = rng.random_range(-2.0..2.0);
            let c = rng.random_range(0.0..0.5);
            let u0 = rng.random_range(0.01..1.0);
            let dt = 0.1;
            let exact = evolve_level(u0, b, c, dt).unwrap().unwrap();
            assert!((exact - rk4(u0, b, c, dt)).abs() < 1e-8);
        }
    }

    #[test]
    fn top_level_never_reproduces() {
        let m = model(RateFn::constant(1.0), RateFn::constant(0.0), 1.0);
        let pop = PointPopulation::new(1, vec![0.0], 5.0).unwrap();
        let mut lp = LevelledPopulation::from_points(&pop, 1.0, &mut stream(1, 0));
        lp.individuals[0].level = 5.0;
        let mut rng = stream(2, 0);
        for _ in 0..100 {
            let mut p = lp.clone();
            lookdown_step(&mut p, &m, 0.01, &mut rng).unwrap();
            assert!(p.log.iter().all(|e| e.kind != EventKind::Birth));
        }
    }

    #[test]
    fn swap_fraction_and_rising_levels() {
        let m = model(RateFn::constant(1.0), RateFn::constant(0.0), 2.0);
        let pop = PointPopulation::uniform_1d(200, 0.0, 10.0, 1000.0);
        let mut rng = stream(4, 0);
        let mut lp = LevelledPopulation::from_points(&pop, 2.0, &mut rng);
        for _ in 0..200 {
            let before: Vec<(LabelId, f64)> = lp.individuals.iter().map(|i| (i.label, i.level)).collect();
            lookdown_step(&mut lp, &m, 0.02, &mut rng).unwrap();
            for (lab, u) in before {
                if let Some(ind) = lp.find(lab) {
                    assert!(ind.level > u);
                }
            }
        }
        let births: Vec<bool> = lp.log.iter().filter(|e| e.kind == EventKind::Birth).map(|e| e.swap).collect();
        assert!(births.len() > 1000);
        let f = births.iter().filter(|&&s| s).count() as f64 / births.len() as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / births.len() as f64).sqrt());
    }

    #[test]
    fn projection_preserves_count() {
        let pop = PointPopulation::uniform_1d(37, 0.0, 1.0, 4.0);
        let lp = LevelledPopulation::from_points(&pop, 1.0, &mut stream(1, 1));
        let p = project(&lp);
        assert_eq!(p.len(), 37);
        assert!((p.total_mass() - 37.0 / 4.0).abs() < 1e-15);
        let e = project(&LevelledPopulation::from_points(&PointPopulation::empty(1, 4.0), 1.0, &mut stream(1, 1)));
        assert!(e.is_empty());
    }

    #[test]
    fn labels_render_as_paths() {
        let mut a = LabelArena::default();
        let r1 = a.root();
        let r2 = a.root();
        let c = a.child(r2);
        let g = a.child(c);
        let g2 = a.child(c);
        assert_eq!(a.render(r1), "1");
        assert_eq!(a.render(g), "2.1.1");
        assert_eq!(a.render(g2), "2.1.2");
    }

    #[test]
    fn hand_built_lineage() {
        let mut a = LabelArena::default();
        let root = a.root();
        let c1 = a.child(root);
        let c2 = a.child(c1);
        let birth = |t, parent, label, swap, xp: f64, xc: f64| EventRecord {
            t,
            kind: EventKind::Birth,
            parent: Some(parent),
            label,
            swap,
            x_parent: vec![xp],
            x_child: vec![xc],
            new_level: 1.0,
        };
        // root at 0 has c1 at 1 (no swap); c1 swaps with its offspring c2 landing at 3
        // (c1 moves to 3, c2 stays at 1); then trace c2 from time 5
        let log = vec![birth(1.0, root, c1, false, 0.0, 1.0), birth(2.0, c1, c2, true, 1.0, 3.0)];
        let path = trace_lineage(&log, &a, 0.0, c2, &[1.0], 5.0, 0.0).unwrap();
        assert_eq!(path, vec![(0.0, vec![1.0]), (3.0, vec![1.0]), (4.0, vec![0.0])]);
        // c1 now sits at 3 and was at 1 before the swap, at 0 before its birth
        let p1 = trace_lineage(&log, &a, 0.0, c1, &[3.0], 5.0, 0.0).unwrap();
        assert_eq!(p1, vec![(0.0, vec![3.0]), (3.0, vec![1.0]), (4.0, vec![0.0])]);
        assert_eq!(path_position(&p1, 3.5), &[1.0]);
        // no events in the window: constant path
        let still = trace_lineage(&log, &a, 0.0, c1, &[3.0], 5.0, 2.5).unwrap();
        assert_eq!(still, vec![(0.0, vec![3.0])]);
        assert!(matches!(trace_lineage(&log, &a, 0.5, c2, &[1.0], 5.0, 0.0), Err(Error::LineageRecordGap(_))));
    }

    #[test]
    fn uniformity_stat_requires_twenty() {
        let pop = PointPopulation::uniform_1d(10, 0.0, 1.0, 4.0);
        let lp = LevelledPopulation::from_points(&pop, 1.0, &mut stream(1, 1));
        assert_eq!(levels_uniformity_stat(&lp).unwrap_err(), Error::TooFew(10, 20));
    }

    #[test]
    fn logistic_levels_stay_uniform() {
        let p = Preset::Logistic;
        let m = p.model(&PresetParams { theta: 5.0, ..p.default_params() }).unwrap();
        let init = PointPopulation::uniform_1d(100, 0.0, 10.0, 10.0);
        let mut rng = stream(9, 0);
        let mut lp = LevelledPopulation::from_points(&init, 5.0, &mut rng);
        run_lookdown(&mut lp, &m, 2.0, 0.005, &mut rng).unwrap();
        assert!(levels_uniformity_stat(&lp).unwrap().p_value > 0.001);
        assert!(!lp.is_empty());
    }
}
