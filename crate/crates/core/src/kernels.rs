//! Smoothing kernels, local density against point populations, offspring
//! dispersal and kernel-width checks.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian tails are cut at this many standard deviations. The dropped
/// kernel value is below `exp(-32)` relative to the peak.
pub const GAUSSIAN_TRUNCATION_SDS: f64 = 8.0;

/// Centered isotropic Gaussian density with per-axis variance `variance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianKernel {
    pub variance: f64,
}

/// `1_{[-ε, ε]}(x) / 2ε` on the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorKernel1D {
    pub halfwidth: f64,
}

/// A probability-density smoothing kernel.
///
/// Serialized as `{"type": "gaussian", "variance": v}` or
/// `{"type": "indicator1d", "halfwidth": e}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Kernel {
    #[serde(rename = "gaussian")]
    Gaussian(GaussianKernel),
    #[serde(rename = "indicator1d")]
    Indicator1D(IndicatorKernel1D),
}

impl Kernel {
    pub fn gaussian(variance: f64) -> Self {
        Kernel::Gaussian(GaussianKernel { variance })
    }

    pub fn indicator(halfwidth: f64) -> Self {
        Kernel::Indicator1D(IndicatorKernel1D { halfwidth })
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Kernel::Gaussian(g) if !(g.variance > 0.0 && g.variance.is_finite()) => Err(
                Error::InvalidParameter(format!("gaussian variance must be positive, got {}", g.variance)),
            ),
            Kernel::Indicator1D(k) if !(k.halfwidth > 0.0 && k.halfwidth.is_finite()) => Err(
                Error::InvalidParameter(format!("indicator halfwidth must be positive, got {}", k.halfwidth)),
            ),
            Kernel::Indicator1D(_) if dim != 1 => Err(Error::Dimension { expected: 1, got: dim }),
            _ => Ok(()),
        }
    }

    /// Distance beyond which the kernel is treated as zero.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Kernel::Gaussian(g) => GAUSSIAN_TRUNCATION_SDS * g.variance.sqrt(),
            Kernel::Indicator1D(k) => k.halfwidth,
        }
    }

    /// Kernel value at squared distance `r2` from the origin in dimension `dim`.
    #[inline]
    pub fn eval_sq(&self, r2: f64, dim: usize) -> f64 {
        match *self {
            Kernel::Gaussian(g) => {
                let norm = (2.0 * PI * g.variance).powf(-0.5 * dim as f64);
                norm * (-0.5 * r2 / g.variance).exp()
            }
            Kernel::Indicator1D(k) => {
                if r2 <= k.halfwidth * k.halfwidth {
                    0.5 / k.halfwidth
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.eval_sq(z.iter().map(|v| v * v).sum(), z.len())
    }

    /// A kernel prepared for repeated evaluation in a fixed dimension.
    pub(crate) fn prepared(&self, dim: usize) -> PreparedKernel {
        match *self {
            Kernel::Gaussian(g) => PreparedKernel {
                norm: (2.0 * PI * g.variance).powf(-0.5 * dim as f64),
                inv_two_var: 0.5 / g.variance,
                radius2: self.support_radius().powi(2),
                gaussian: true,
            },
            Kernel::Indicator1D(k) => PreparedKernel {
                norm: 0.5 / k.halfwidth,
                inv_two_var: 0.0,
                radius2: k.halfwidth * k.halfwidth,
                gaussian: false,
            },
        }
    }

    /// Fourier transform `∫ e^{2πiux} ρ(x) dx` of a one-dimensional kernel.
    pub fn fourier(&self, u: f64) -> f64 {
        kernel_fourier(self, u)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PreparedKernel {
    norm: f64,
    inv_two_var: f64,
    radius2: f64,
    gaussian: bool,
}

impl PreparedKernel {
    #[inline]
    pub(crate) fn at_sq(&self, r2: f64) -> f64 {
        if r2 > self.radius2 {
            0.0
        } else if self.gaussian {
            self.norm * (-r2 * self.inv_two_var).exp()
        } else {
            self.norm
        }
    }
}

/// Fourier transform of a 1D kernel with the `e^{2πiux}` convention.
///
/// Gaussian with variance `ε²`: `exp(-2π²ε²u²)`. Indicator of half-width
/// `ε`: `sin(2πεu)/(2πεu)`, equal to 1 at `u = 0`.
pub fn kernel_fourier(kernel: &Kernel, u: f64) -> f64 {
    match *kernel {
        Kernel::Gaussian(g) => (-2.0 * PI * PI * g.variance * u * u).exp(),
        Kernel::Indicator1D(k) => {
            let a = 2.0 * PI * k.halfwidth * u;
            if a.abs() < 1e-8 {
                1.0 - a * a / 6.0
            } else {
                a.sin() / a
            }
        }
    }
}

/// Uniform grid of cells over the bounding box of a point set.
///
/// Points are bucketed by counting sort, so a cell's members are contiguous
/// in `order`.
#[derive(Clone, Debug)]
pub struct CellList {
    dim: usize,
    cell: f64,
    origin: Vec<f64>,
    counts: Vec<usize>,
    starts: Vec<usize>,
    order: Vec<usize>,
}

const MAX_CELLS_PER_POINT: usize = 8;

impl CellList {
    /// Buckets `points` (flat, `dim` coordinates each) into cells of side at
    /// least `min_cell`. The side grows if the box would need too many cells.
    pub fn new(points: &[f64], dim: usize, min_cell: f64) -> Self {
        assert!(dim > 0 && min_cell > 0.0);
        let n = points.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points.chunks_exact(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if n == 0 {
            lo.iter_mut().for_each(|v| *v = 0.0);
            hi.iter_mut().for_each(|v| *v = 0.0);
        }
        let budget = (MAX_CELLS_PER_POINT * n).max(64);
        let mut cell = min_cell;
        let mut counts;
        loop {
            counts = (0..dim)
                .map(|k| (((hi[k] - lo[k]) / cell).floor() as usize) + 1)
                .collect::<Vec<_>>();
            let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
            match total {
                Some(t) if t <= budget => break,
                _ => cell *= 2.0,
            }
        }
        let total: usize = counts.iter().product();
        let mut fill = vec![0usize; total + 1];
        let mut keys = Vec::with_capacity(n);
        for p in points.chunks_exact(dim) {
            let mut key = 0usize;
            for k in 0..dim {
                let c = (((p[k] - lo[k]) / cell).floor() as usize).min(counts[k] - 1);
                key = key * counts[k] + c;
            }
            keys.push(key);
            fill[key + 1] += 1;
        }
        for i in 0..total {
            fill[i + 1] += fill[i];
        }
        let starts = fill.clone();
        let mut order = vec![0usize; n];
        for (i, &key) in keys.iter().enumerate() {
            order[fill[key]] = i;
            fill[key] += 1;
        }
        CellList { dim, cell, origin: lo, counts, starts, order }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Calls `f(index, squared_distance)` for every point within `radius` of `q`.
    pub fn for_each_within(&self, points: &[f64], q: &[f64], radius: f64, mut f: impl FnMut(usize, f64)) {
        if self.order.is_empty() {
            return;
        }
        let dim = self.dim;
        let r2 = radius * radius;
        let mut lo = [0i64; 8];
        let mut hi = [0i64; 8];
        assert!(dim <= 8, "cell lists support up to 8 dimensions");
        for k in 0..dim {
            let a = ((q[k] - radius - self.origin[k]) / self.cell).floor() as i64;
            let b = ((q[k] + radius - self.origin[k]) / self.cell).floor() as i64;
            let top = self.counts[k] as i64 - 1;
            if b < 0 || a > top {
                return;
            }
            lo[k] = a.max(0);
            hi[k] = b.min(top);
        }
        let mut idx = lo;
        loop {
            let mut key = 0usize;
            for k in 0..dim {
                key = key * self.counts[k] + idx[k] as usize;
            }
            for &i in &self.order[self.starts[key]..self.starts[key + 1]] {
                let p = &points[i * dim..(i + 1) * dim];
                let mut d2 = 0.0;
                for k in 0..dim {
                    let z = p[k] - q[k];
                    d2 += z * z;
                }
                if d2 <= r2 {
                    f(i, d2);
                }
            }
            // odometer over the neighbouring block
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if idx[k] < hi[k] {
                    idx[k] += 1;
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }
}

/// Evaluates `ρ * η` at arbitrary points for a fixed population snapshot.
pub struct DensityEvaluator<'a> {
    points: &'a [f64],
    dim: usize,
    mass: f64,
    kernel: PreparedKernel,
    radius: f64,
    cells: CellList,
}

impl<'a> DensityEvaluator<'a> {
    /// `points` holds `dim` coordinates per atom; every atom carries `mass`.
    pub fn new(kernel: &Kernel, points: &'a [f64], dim: usize, mass: f64) -> Self {
        let radius = kernel.support_radius();
        let min_cell = match kernel {
            Kernel::Gaussian(g) => 4.0 * g.variance.sqrt(),
            Kernel::Indicator1D(k) => k.halfwidth,
        };
        DensityEvaluator {
            points,
            dim,
            mass,
            kernel: kernel.prepared(dim),
            radius,
            cells: CellList::new(points, dim, min_cell),
        }
    }

    pub fn at(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: q.len() });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQueryPoint);
        }
        Ok(self.mass * self.raw_sum(q))
    }

    /// Unscaled kernel sum `Σ_i ρ(q - x_i)`.
    #[inline]
    pub(crate) fn raw_sum(&self, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        let k = self.kernel;
        self.cells.for_each_within(self.points, q, self.radius, |_, d2| acc += k.at_sq(d2));
        acc
    }
}

/// Local density `(1/N) Σ_i ρ(query - x_i)` of a point population.
pub fn kernel_density(kernel: &Kernel, points: &[f64], dim: usize, n_scale: f64, query: &[f64]) -> Result<f64> {
    DensityEvaluator::new(kernel, points, dim, 1.0 / n_scale).at(query)
}

/// A position-dependent vector or matrix coefficient.
#[derive(Clone)]
pub enum Field<T> {
    Constant(T),
    Varying(Arc<dyn Fn(&[f64]) -> T + Send + Sync>),
}

impl<T: Clone> Field<T> {
    pub fn at(&self, x: &[f64]) -> T {
        match self {
            Field::Constant(v) => v.clone(),
            Field::Varying(f) => f(x),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Field::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

/// Offspring displacement law: `Normal(b(x)/θ, C(x)/θ)`.
#[derive(Clone, Debug)]
pub struct DispersalLaw {
    dim: usize,
    mean: Field<DVector<f64>>,
    cov: Field<DMatrix<f64>>,
    theta: f64,
    cached_factor: Option<DMatrix<f64>>,
}

impl DispersalLaw {
    pub fn new(dim: usize, mean: Field<DVector<f64>>, cov: Field<DMatrix<f64>>, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        let cached_factor = match &cov {
            Field::Constant(c) => {
                if c.nrows() != dim || c.ncols() != dim {
                    return Err(Error::Dimension { expected: dim, got: c.nrows() });
                }
                Some(cholesky(c)?)
            }
            Field::Varying(_) => None,
        };
        if let Field::Constant(m) = &mean {
            if m.len() != dim {
                return Err(Error::Dimension { expected: dim, got: m.len() });
            }
        }
        Ok(DispersalLaw { dim, mean, cov, theta, cached_factor })
    }

    /// Zero mean, covariance `variance · I`.
    pub fn isotropic(dim: usize, variance: f64, theta: f64) -> Result<Self> {
        Self::new(
            dim,
            Field::Constant(DVector::zeros(dim)),
            Field::Constant(DMatrix::identity(dim, dim) * variance),
            theta,
        )
    }

    /// Constant mean `b` and covariance `variance · I`.
    pub fn with_drift(mean: Vec<f64>, variance: f64, theta: f64) -> Result<Self> {
        let dim = mean.len();
        Self::new(
            dim,
            Field::Constant(DVector::from_vec(mean)),
            Field::Constant(DMatrix::identity(dim, dim) * variance),
            theta,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mean_at(&self, x: &[f64]) -> DVector<f64> {
        self.mean.at(x)
    }

    pub fn cov_at(&self, x: &[f64]) -> DMatrix<f64> {
        self.cov.at(x)
    }

    /// Largest covariance eigenvalue at `x`.
    pub fn max_eigenvalue_at(&self, x: &[f64]) -> f64 {
        largest_eigenvalue(&self.cov.at(x))
    }

    /// Smallest covariance eigenvalue at `x`.
    pub fn min_eigenvalue_at(&self, x: &[f64]) -> f64 {
        let c = self.cov.at(x);
        c.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn factor_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match &self.cached_factor {
            Some(k) => Ok(k.clone()),
            None => cholesky(&self.cov.at(x)),
        }
    }

    /// Writes `x + b(x)/θ + K(x) z / √θ` into `out`, with `K Kᵀ = C(x)`.
    pub fn sample_into<R: Rng + ?Sized>(&self, x: &[f64], out: &mut [f64], rng: &mut R) -> Result<()> {
        let scale = self.theta.sqrt().recip();
        if self.dim == 1 {
            let b = match &self.mean {
                Field::Constant(m) => m[0],
                Field::Varying(f) => f(x)[0],
            };
            let k = match &self.cached_factor {
                Some(k) => k[(0, 0)],
                None => cholesky(&self.cov.at(x))?[(0, 0)],
            };
            let z: f64 = rng.sample(StandardNormal);
            out[0] = x[0] + b / self.theta + k * z * scale;
            return Ok(());
        }
        let b = self.mean.at(x);
        let k = self.factor_at(x)?;
        let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = k * z;
        for i in 0..self.dim {
            out[i] = x[i] + b[i] / self.theta + step[i] * scale;
        }
        Ok(())
    }
}

/// Draws an offspring location for a parent at `x`.
pub fn sample_dispersal<R: Rng + ?Sized>(law: &DispersalLaw, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut out = vec![0.0; law.dim()];
    law.sample_into(x, &mut out, rng)?;
    Ok(out)
}

fn cholesky(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::CovarianceNotPositiveDefinite);
    }
    c.clone().cholesky().map(|ch| ch.l()).ok_or(Error::CovarianceNotPositiveDefinite)
}

pub fn largest_eigenvalue(c: &DMatrix<f64>) -> f64 {
    c.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of the kernel-width condition `σ_r² + 2λ_max/θ < σ_γ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelWidthCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Checks that the establishment kernel plus one dispersal step stays
/// narrower than the fecundity kernel. Advisory only.
pub fn validate_kernel_widths(var_r: f64, var_gamma: f64, lambda_max: f64, theta: f64) -> KernelWidthCheck {
    let lhs = var_r + 2.0 * lambda_max / theta;
    KernelWidthCheck { lhs, rhs: var_gamma, ok: lhs < var_gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn brute(kernel: &Kernel, pts: &[f64], dim: usize, n: f64, q: &[f64]) -> f64 {
        pts.chunks_exact(dim)
            .map(|p| {
                let z: Vec<f64> = p.iter().zip(q).map(|(a, b)| b - a).collect();
                kernel.eval(&z)
            })
            .sum::<f64>()
            / n
    }

    #[test]
    fn gaussian_integrates_to_one() {
        let k = Kernel::gaussian(0.7);
        let h = 1e-3;
        let total: f64 = (-20_000..=20_000).map(|i| k.eval(&[i as f64 * h])).sum::<f64>() * h;
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let ind = Kernel::indicator(0.5);
        assert_eq!(ind.eval(&[0.5]), 1.0);
        assert_eq!(ind.eval(&[0.5000001]), 0.0);
    }

    #[test]
    fn single_atom_density() {
        let d = kernel_density(&Kernel::gaussian(1.0), &[0.0], 1, 1.0, &[0.0]).unwrap();
        assert!((d - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert_eq!(kernel_density(&Kernel::gaussian(1.0), &[], 1, 1.0, &[3.0]).unwrap(), 0.0);
        assert_eq!(
            kernel_density(&Kernel::gaussian(1.0), &[0.0], 1, 1.0, &[f64::NAN]),
            Err(Error::InvalidQueryPoint)
        );
    }

    #[test]
    fn cell_list_matches_brute_force_uniform_atoms() {
        use rand::Rng;
        let mut rng = stream(11, 0);
        let pts: Vec<f64> = (0..50).map(|_| rng.random::<f64>() * 10.0).collect();
        let k = Kernel::gaussian(0.25);
        let fast = kernel_density(&k, &pts, 1, 50.0, &[5.0]).unwrap();
        let slow = brute(&k, &pts, 1, 50.0, &[5.0]);
        assert!((fast - slow).abs() <= 1e-9 * slow, "{fast} vs {slow}");
    }

    #[test]
    fn cell_list_two_dimensions() {
        use rand::Rng;
        let mut rng = stream(5, 1);
        let pts: Vec<f64> = (0..400).map(|_| rng.random::<f64>() * 20.0).collect();
        let k = Kernel::gaussian(0.5);
        let ev = DensityEvaluator::new(&k, &pts, 2, 0.1);
        for _ in 0..50 {
            let q = [rng.random::<f64>() * 20.0, rng.random::<f64>() * 20.0];
            let slow = brute(&k, &pts, 2, 10.0, &q);
            let fast = ev.at(&q).unwrap();
            assert!((fast - slow).abs() <= 1e-9 * slow + 1e-14, "{fast} vs {slow}");
        }
    }

    #[test]
    fn fourier_values() {
        assert_eq!(kernel_fourier(&Kernel::gaussian(1.0), 0.0), 1.0);
        let v = kernel_fourier(&Kernel::indicator(1.0), 0.75);
        assert!((v - (1.5 * PI).sin() / (1.5 * PI)).abs() < 1e-15);
        assert!((v + 0.212_206_590_789_193_8).abs() < 1e-12);
        assert_eq!(kernel_fourier(&Kernel::indicator(2.0), 0.0), 1.0);
    }

    #[test]
    fn gaussian_fourier_matches_quadrature() {
        for &(var, u) in &[(1.0, 0.3), (0.25, 1.1), (2.0, 0.05)] {
            let k = Kernel::gaussian(var);
            let h = 1e-3;
            let lim = 12.0 * f64::sqrt(var);
            let m = (lim / h) as i64;
            // imaginary part vanishes by symmetry
            let quad: f64 = (-m..=m)
                .map(|i| {
                    let x = i as f64 * h;
                    (2.0 * PI * u * x).cos() * k.eval(&[x])
                })
                .sum::<f64>()
                * h;
            assert!((quad - kernel_fourier(&k, u)).abs() < 1e-8);
        }
    }

    #[test]
    fn kernel_width_condition() {
        assert!(validate_kernel_widths(1.0, 2.0, 1.0, 10.0).ok);
        assert!(!validate_kernel_widths(1.0, 1.0, 1e-6, 1e6).ok);
        let c = validate_kernel_widths(1.0, 1.19, 1.0, 10.0);
        assert!(!c.ok);
        assert!((c.lhs - 1.2).abs() < 1e-12);
    }

    #[test]
    fn dispersal_rejects_non_spd() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = DispersalLaw::new(2, Field::Constant(DVector::zeros(2)), Field::Constant(bad), 1.0);
        assert_eq!(err.unwrap_err(), Error::CovarianceNotPositiveDefinite);
        let varying = DispersalLaw::new(
            1,
            Field::Constant(DVector::zeros(1)),
            Field::Varying(Arc::new(|x: &[f64]| DMatrix::from_element(1, 1, x[0]))),
            1.0,
        )
        .unwrap();
        let mut rng = stream(1, 0);
        assert!(sample_dispersal(&varying, &[1.0], &mut rng).is_ok());
        assert_eq!(
            sample_dispersal(&varying, &[-1.0], &mut rng).unwrap_err(),
            Error::CovarianceNotPositiveDefinite
        );
    }

    #[test]
    fn dispersal_moments() {
        let law = DispersalLaw::isotropic(1, 1.0, 1e4).unwrap();
        let mut rng = stream(3, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_dispersal(&law, &[0.0], &mut rng).unwrap()[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / 1e-4 - 1.0).abs() < 0.05, "{var}");

        let law = DispersalLaw::with_drift(vec![1.0, 0.0], 1.0, 1.0).unwrap();
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let y = sample_dispersal(&law, &[0.0, 0.0], &mut rng).unwrap();
            sum[0] += y[0];
            sum[1] += y[1];
        }
        let se = 1.0 / (n as f64).sqrt();
        assert!((sum[0] / n as f64 - 1.0).abs() < 3.0 * se);
        assert!((sum[1] / n as f64).abs() < 3.0 * se);
    }

    #[test]
    fn dispersal_seed_replay() {
        let law = DispersalLaw::with_drift(vec![0.3, -0.1], 2.0, 5.0).unwrap();
        let a = sample_dispersal(&law, &[1.0, 2.0], &mut stream(9, 2)).unwrap();
        let b = sample_dispersal(&law, &[1.0, 2.0], &mut stream(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_json_shape() {
        let k: Kernel = serde_json::from_str(r#"{"type":"gaussian","variance":0.5}"#).unwrap();
        assert_eq!(k, Kernel::gaussian(0.5));
        let k: Kernel = serde_json::from_str(r#"{"type":"indicator1d","halfwidth":2}"#).unwrap();
        assert_eq!(k, Kernel::indicator(2.0));
        assert!(serde_json::from_str::<Kernel>(r#"{"type":"box","width":2}"#).is_err());
    }
}
