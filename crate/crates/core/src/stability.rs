//! Linear stability of spatially homogeneous equilibria of the nonlocal
//! limit `∂φ = r σ²Δ(γ(ρ_γ*φ)φ) + F(ρ_F*φ)φ`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::model::{DemographyModel, RateFn};

/// Root of `f` in `bracket` by bisection, to `1e-12` in the argument.
pub fn find_equilibrium(f: impl Fn(f64) -> f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::NoSignChange(lo, hi));
    }
    while hi - lo > 1e-12 * (1.0f64).max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Values and density derivatives of the rates at a homogeneous equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneousEquilibrium {
    pub phi0: f64,
    pub r0: f64,
    pub gamma0: f64,
    pub gamma_prime0: f64,
    /// Kept for reference; the growth rate does not use it.
    pub r_prime0: f64,
    pub f_prime0: f64,
    pub sigma2: f64,
    pub kernel_gamma: Kernel,
    pub kernel_f: Kernel,
}

impl HomogeneousEquilibrium {
    /// Equilibrium of rate functions with known derivatives.
    pub fn from_rates(
        gamma: &RateFn,
        r: &RateFn,
        f: &RateFn,
        sigma2: f64,
        kernel_gamma: Kernel,
        kernel_f: Kernel,
        bracket: (f64, f64),
    ) -> Result<Self> {
        let phi0 = find_equilibrium(|m| f.of_density(m), bracket)?;
        Ok(HomogeneousEquilibrium {
            phi0,
            r0: r.of_density(phi0),
            gamma0: gamma.of_density(phi0),
            gamma_prime0: gamma.density_derivative(phi0),
            r_prime0: r.density_derivative(phi0),
            f_prime0: f.density_derivative(phi0),
            sigma2,
            kernel_gamma,
            kernel_f,
        })
    }

    /// Equilibrium of arbitrary rate closures; derivatives by central
    /// differences with step `1e-6·max(1, φ₀)`.
    pub fn from_fns(
        gamma: &dyn Fn(f64) -> f64,
        r: &dyn Fn(f64) -> f64,
        f: &dyn Fn(f64) -> f64,
        sigma2: f64,
        kernel_gamma: Kernel,
        kernel_f: Kernel,
        bracket: (f64, f64),
    ) -> Result<Self> {
        let phi0 = find_equilibrium(f, bracket)?;
        let h = 1e-6 * phi0.abs().max(1.0);
        let d = |g: &dyn Fn(f64) -> f64| (g(phi0 + h) - g(phi0 - h)) / (2.0 * h);
        Ok(HomogeneousEquilibrium {
            phi0,
            r0: r(phi0),
            gamma0: gamma(phi0),
            gamma_prime0: d(gamma),
            r_prime0: d(r),
            f_prime0: d(f),
            sigma2,
            kernel_gamma,
            kernel_f,
        })
    }

    /// Equilibrium of a one-dimensional model; `σ²` is half the per-axis
    /// dispersal variance scaled by `θ`.
    pub fn from_model(model: &DemographyModel, bracket: (f64, f64)) -> Result<Self> {
        let x = vec![0.0; model.dim()];
        let sigma2 = 0.5 * model.dispersal.cov_at(&x)[(0, 0)];
        Self::from_rates(&model.gamma, &model.r, &model.f, sigma2, model.kernel_gamma, model.kernel_f, bracket)
    }

    /// Growth rate of the mode `cos(2πux)`.
    pub fn growth_rate(&self, u: f64) -> f64 {
        growth_rate(self, u)
    }
}

/// `λ(u) = −4π²u²σ²(φ₀r₀γ'₀ρ̂_γ(u) + r₀γ₀) + φ₀F'₀ρ̂_F(u)`.
pub fn growth_rate(eq: &HomogeneousEquilibrium, u: f64) -> f64 {
    let k2 = 4.0 * PI * PI * u * u * eq.sigma2;
    -k2 * (eq.phi0 * eq.r0 * eq.gamma_prime0 * eq.kernel_gamma.fourier(u) + eq.r0 * eq.gamma0)
        + eq.phi0 * eq.f_prime0 * eq.kernel_f.fourier(u)
}

fn kernel_width(k: &Kernel) -> f64 {
    match *k {
        Kernel::Gaussian(g) => g.variance.sqrt(),
        Kernel::Indicator1D(i) => i.halfwidth,
    }
}

/// Frequencies where `λ > 0` and the fastest-growing wavelength.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandReport {
    pub stable: bool,
    pub bands: Vec<(f64, f64)>,
    /// `1/u*` at the maximizer of `λ` over the unstable set.
    pub wavelength: Option<f64>,
    pub peak_frequency: Option<f64>,
    pub peak_rate: Option<f64>,
}

/// Scans `u ∈ (0, u_max]` with spacing no coarser than `1/(20ε)` (`ε` the
/// widest kernel) and refines each sign change by bisection to `1e-6`.
pub fn unstable_band(eq: &HomogeneousEquilibrium, u_max: f64, du: f64) -> Result<BandReport> {
    if !(u_max > 0.0 && du > 0.0) {
        return Err(Error::InvalidParameter("scan range and step must be positive".into()));
    }
    let eps = kernel_width(&eq.kernel_gamma).max(kernel_width(&eq.kernel_f));
    let step = du.min(1.0 / (20.0 * eps));
    let n = (u_max / step).ceil() as usize;
    let us: Vec<f64> = (1..=n).map(|k| (k as f64 * step).min(u_max)).collect();
    let vals: Vec<f64> = us.iter().map(|&u| growth_rate(eq, u)).collect();
    let refine = |a: f64, b: f64| -> f64 {
        let (mut lo, mut hi) = (a, b);
        let pos_lo = growth_rate(eq, lo) > 0.0;
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if (growth_rate(eq, mid) > 0.0) == pos_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut bands = Vec::new();
    let mut open: Option<f64> = if vals[0] > 0.0 { Some(0.0) } else { None };
    for k in 1..us.len() {
        let (was, is) = (vals[k - 1] > 0.0, vals[k] > 0.0);
        if !was && is {
            open = Some(refine(us[k - 1], us[k]));
        } else if was && !is {
            bands.push((open.take().unwrap_or(0.0), refine(us[k - 1], us[k])));
        }
    }
    if let Some(lo) = open {
        bands.push((lo, u_max));
    }
    if bands.is_empty() {
        return Ok(BandReport { stable: true, bands, wavelength: None, peak_frequency: None, peak_rate: None });
    }
    let (kbest, _) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let lo = us[kbest.saturating_sub(1)];
    let hi = us[(kbest + 1).min(us.len() - 1)];
    let ustar = golden_max(|u| growth_rate(eq, u), lo, hi, 1e-10);
    Ok(BandReport {
        stable: false,
        bands,
        wavelength: Some(1.0 / ustar),
        peak_frequency: Some(ustar),
        peak_rate: Some(growth_rate(eq, ustar)),
    })
}

/// Dominant clump spacing `1/u*`, or `None` when the equilibrium is stable.
pub fn clump_wavelength(eq: &HomogeneousEquilibrium, u_max: f64) -> Result<Option<f64>> {
    let eps = kernel_width(&eq.kernel_gamma).max(kernel_width(&eq.kernel_f));
    Ok(unstable_band(eq, u_max, 1.0 / (20.0 * eps))?.wavelength)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
