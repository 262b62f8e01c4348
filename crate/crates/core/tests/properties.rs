use proptest::prelude::*;

use locreg::kernels::{kernel_density, kernel_fourier, sample_dispersal, DispersalLaw, Kernel};
use locreg::lookdown::evolve_level;
use locreg::plot::{emit_plot, PlotStyle};
use locreg::rng::stream;
use locreg::stability::find_equilibrium;

fn brute_density(kernel: &Kernel, points: &[f64], dim: usize, n: f64, q: &[f64]) -> f64 {
    points
        .chunks_exact(dim)
        .map(|p| {
            let r2: f64 = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum();
            kernel.eval_sq(r2, dim)
        })
        .sum::<f64>()
        / n
}

fn rk4_level(u0: f64, b: f64, c: f64, dt: f64, steps: usize) -> f64 {
    let f = |u: f64| c * u * u - b * u;
    let h = dt / steps as f64;
    let mut u = u0;
    for _ in 0..steps {
        let k1 = f(u);
        let k2 = f(u + 0.5 * h * k1);
        let k3 = f(u + 0.5 * h * k2);
        let k4 = f(u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cell_list_density_matches_brute_force(
        pts in prop::collection::vec(-5.0f64..5.0, 2..200),
        q in prop::collection::vec(-6.0f64..6.0, 2),
        var in 0.05f64..2.0,
    ) {
        let dim = 2;
        let pts = &pts[..pts.len() / dim * dim];
        let k = Kernel::gaussian(var);
        let fast = kernel_density(&k, pts, dim, 10.0, &q).unwrap();
        let slow = brute_density(&k, pts, dim, 10.0, &q);
        // atoms beyond the truncation radius contribute below 1e-13 of the peak
        let floor = 1e-13 * k.eval_sq(0.0, dim) * (pts.len() / dim) as f64 / 10.0;
        prop_assert!((fast - slow).abs() <= 1e-9 * slow + floor, "{fast} vs {slow}");
    }

    #[test]
    fn indicator_density_matches_brute_force(
        pts in prop::collection::vec(0.0f64..20.0, 1..300),
        q in 0.0f64..20.0,
        half in 0.1f64..3.0,
    ) {
        let k = Kernel::indicator(half);
        let fast = kernel_density(&k, &pts, 1, 7.0, &[q]).unwrap();
        let slow = brute_density(&k, &pts, 1, 7.0, &[q]);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1e-300));
    }

    #[test]
    fn gaussian_transform_is_positive_and_decreasing(var in 1e-3f64..4.0, u in 0.0f64..5.0, du in 1e-3f64..1.0) {
        let k = Kernel::gaussian(var);
        let a = kernel_fourier(&k, u);
        let b = kernel_fourier(&k, u + du);
        prop_assert!(a > 0.0 || a == 0.0 && b == 0.0);
        prop_assert!(a <= 1.0 && b <= a);
        prop_assert_eq!(kernel_fourier(&k, -u), a);
    }

    #[test]
    fn indicator_transform_negative_in_first_lobe(half in 0.05f64..3.0, frac in 0.01f64..0.99) {
        let k = Kernel::indicator(half);
        let u = (1.0 + frac) / (2.0 * half);
        prop_assert!(kernel_fourier(&k, u) < 0.0);
        let u = frac / (2.0 * half);
        prop_assert!(kernel_fourier(&k, u) > 0.0);
    }

    #[test]
    fn level_flow_matches_rk4(u0 in 0.01f64..20.0, b in -5.0f64..5.0, c in 0.0f64..0.5, dt in 1e-4f64..0.05) {
        let exact = evolve_level(u0, b, c, dt).unwrap();
        prop_assume!(exact.is_some());
        let reference = rk4_level(u0, b, c, dt, 2000);
        prop_assume!(reference.is_finite() && reference < 1e6);
        let got = exact.unwrap();
        prop_assert!((got - reference).abs() <= 1e-7 * reference.max(1.0), "{got} vs {reference}");
    }

    #[test]
    fn dispersal_is_reproducible(seed in any::<u64>(), x in -10.0f64..10.0, var in 0.01f64..3.0) {
        let law = DispersalLaw::isotropic(1, var, 50.0).unwrap();
        let mut a = stream(seed, 3);
        let mut b = stream(seed, 3);
        for _ in 0..5 {
            prop_assert_eq!(sample_dispersal(&law, &[x], &mut a).unwrap(), sample_dispersal(&law, &[x], &mut b).unwrap());
        }
    }

    #[test]
    fn bisection_finds_decreasing_root(root in 0.01f64..100.0, slope in 0.1f64..10.0) {
        let m = find_equilibrium(|m| slope * (root - m), (1e-9, 1e3)).unwrap();
        prop_assert!((m - root).abs() <= 1e-9 * root.max(1.0));
    }

    #[test]
    fn columns_plot_has_one_path_per_series(ys in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let mut csv = String::from("x,a,b\n");
        for (i, y) in ys.iter().enumerate() {
            csv.push_str(&format!("{i},{y},{}\n", -y));
        }
        let svg = emit_plot(&csv, PlotStyle::Columns, "t").unwrap();
        prop_assert!(svg.starts_with("<svg"));
        prop_assert!(svg.trim_end().ends_with("</svg>"));
        prop_assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 2);
    }
}

#[test]
fn find_equilibrium_rejects_bracket_without_sign_change() {
    assert!(find_equilibrium(|m| 1.0 + m, (0.0, 1.0)).is_err());
}
