//! Cross-checks of the solvers against independent reference routines, and
//! property tests for the structural invariants.

use proptest::prelude::*;

use sp1d::agmon::agmon_between;
use sp1d::eigen::{eigenvalues_below, spectrum_below, sturm_count};
use sp1d::harness::holder_norm;
use sp1d::limit::{
    occupied_sum, reference_spectrum, solve_theta, theta_residual, ReferenceSpectrum,
};
use sp1d::oracle::{dense_tridiagonal, gauss_legendre, jacobi_eigenvalues, secant};
use sp1d::poisson::{poisson_solve_density, poisson_solve_measure, Measure};
use sp1d::scf::{energy_functional, scf_solve};
use sp1d::{
    Exec, Grid, GridFunction, PartitionFunction, Problem, SystemParams, TridiagOperator,
    WellPotential,
};

fn tridiag() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=16).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-2.0f64..2.0, n - 1),
        )
    })
}

fn reference() -> &'static ReferenceSpectrum {
    use std::sync::OnceLock;
    static RS: OnceLock<ReferenceSpectrum> = OnceLock::new();
    RS.get_or_init(|| reference_spectrum(&WellPotential::new(10.0), 1e-8).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bisection_matches_jacobi((diag, off) in tridiag(), threshold in -7.0f64..7.0) {
        let n = diag.len();
        let dense = jacobi_eigenvalues(dense_tridiagonal(&diag, &off), n);
        let t = TridiagOperator::new(diag, off).unwrap();
        let got = eigenvalues_below(&t, threshold, 1e-14);
        let expected: Vec<f64> = dense.into_iter().filter(|&e| e < threshold).collect();
        // a threshold within round-off of an eigenvalue may legitimately split either way
        prop_assume!(expected.iter().all(|e| (e - threshold).abs() > 1e-9));
        prop_assert_eq!(got.len(), expected.len());
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn sturm_count_is_monotone((diag, off) in tridiag(), a in -8.0f64..8.0, b in -8.0f64..8.0) {
        let t = TridiagOperator::new(diag, off).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sturm_count(&t, lo) <= sturm_count(&t, hi));
        prop_assert_eq!(sturm_count(&t, t.gershgorin_lower() - 1.0), 0);
        prop_assert_eq!(sturm_count(&t, t.gershgorin_upper() + 1.0), t.n());
    }

    #[test]
    fn leading_block_interlaces((diag, off) in tridiag()) {
        let t = TridiagOperator::new(diag, off).unwrap();
        prop_assume!(t.n() >= 2);
        let top = t.gershgorin_upper() + 1.0;
        let full = eigenvalues_below(&t, top, 1e-14);
        let sub = eigenvalues_below(&t.without_last().unwrap(), top, 1e-14);
        for (k, s) in sub.iter().enumerate() {
            prop_assert!(full[k] <= s + 1e-10 && *s <= full[k + 1] + 1e-10);
        }
    }

    #[test]
    fn nonnegative_shift_raises_levels((diag, off) in tridiag(), shift in prop::collection::vec(0.0f64..3.0, 16)) {
        let t = TridiagOperator::new(diag.clone(), off.clone()).unwrap();
        let raised: Vec<f64> = diag.iter().zip(&shift).map(|(d, s)| d + s).collect();
        let u = TridiagOperator::new(raised, off).unwrap();
        let top = t.gershgorin_upper().max(u.gershgorin_upper()) + 1.0;
        let a = eigenvalues_below(&t, top, 1e-14);
        let b = eigenvalues_below(&u, top, 1e-14);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(x <= &(y + 1e-10));
        }
    }

    #[test]
    fn antiderivative_differences_match_gauss_legendre(a in -6.0f64..-1.2, b in -6.0f64..-1.2) {
        let f = PartitionFunction::new(-1.2, 4.0);
        let direct = f.antiderivative(a) - f.antiderivative(b);
        let oracle = gauss_legendre(|s| f.eval(s), a, b, 400);
        prop_assert!((direct - oracle).abs() < 1e-10);
    }

    #[test]
    fn poisson_solvers_agree_and_stay_nonnegative(coeffs in prop::collection::vec(0.0f64..1.0, 4)) {
        let grid = Grid::uniform(1.0, 499);
        let rho = GridFunction::from_fn(&grid, |x| {
            coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * 3.1 * x).sin().powi(2)).sum::<f64>()
        });
        let a = poisson_solve_density(&grid, &rho).unwrap();
        let b = poisson_solve_measure(&grid, &Measure::from_density(rho)).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
        prop_assert!(a.min() >= -1e-15);
    }

    #[test]
    fn holder_norm_is_homogeneous(u in prop::collection::vec(-1.0f64..1.0, 2..300), c in 0.1f64..10.0) {
        let dx = 1.0 / (u.len() - 1) as f64;
        let scaled: Vec<f64> = u.iter().map(|v| c * v).collect();
        let a = holder_norm(&u, dx, 0.5, Exec::Sequential);
        let b = holder_norm(&scaled, dx, 0.5, Exec::Parallel);
        prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn agmon_triangle(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0, eps in -2.0f64..-0.1) {
        let p = SystemParams::default();
        let dxy = agmon_between(x, y, eps, &p);
        prop_assert!((dxy - agmon_between(y, x, eps, &p)).abs() < 1e-13);
        prop_assert!(dxy <= agmon_between(x, z, eps, &p) + agmon_between(z, y, eps, &p) + 1e-12);
    }

    #[test]
    fn bisection_theta_matches_secant(amplitude in 0.5f64..8.0, x0 in 0.2f64..0.8) {
        let p = SystemParams { amplitude, x0, ..SystemParams::default() };
        let f = PartitionFunction::from_params(&p);
        let rs = reference();
        let theta = solve_theta(rs, &f, &p).unwrap();
        let g = |t: f64| theta_residual(rs, &f, &p, t);
        let other = secant(g, 0.0, 0.5 * (f.eps_s - rs.values[0]), 1e-15).unwrap();
        prop_assert!((theta - other).abs() < 1e-12);
    }

    #[test]
    fn occupied_sum_is_nonincreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = PartitionFunction::new(-1.2, 4.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(occupied_sum(reference(), &f, hi) <= occupied_sum(reference(), &f, lo));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_is_midpoint_convex(a in 0.0f64..0.4, b in 0.0f64..0.4, k in 1usize..4) {
        let problem = Problem::new(&SystemParams::default()).unwrap();
        let grid = problem.grid();
        let v1 = GridFunction::from_fn(grid, |x| a * x * (1.0 - x));
        let v2 = GridFunction::from_fn(grid, |x| b * (k as f64 * std::f64::consts::PI * x).sin().abs());
        let mid = v1.lerp(&v2, 0.5);
        let j1 = energy_functional(&problem, &v1).unwrap();
        let j2 = energy_functional(&problem, &v2).unwrap();
        let jm = energy_functional(&problem, &mid).unwrap();
        prop_assert!(jm <= 0.5 * (j1 + j2) + 1e-12);
    }

    #[test]
    fn eigenpairs_are_accurate(u0 in 5.0f64..80.0, x0 in 0.2f64..0.8) {
        let p = SystemParams { u0, x0, eps_s: -0.05, ..SystemParams::default() };
        let problem = Problem::new(&p).unwrap();
        let t = problem.hamiltonian(None).unwrap();
        let set = spectrum_below(&t, p.eps_s, 1e-13).unwrap();
        prop_assert!(set.max_residual(&t) <= 1e-8 * t.norm_bound());
        for (i, a) in set.vectors.iter().enumerate() {
            for (j, b) in set.vectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.inner(b) - expected).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn scf_levels_lie_above_linear_levels() {
    for (u0, eps_s) in [(10.0, -1.2), (30.0, -0.8), (60.0, -1.5)] {
        let p = SystemParams {
            u0,
            eps_s,
            ..SystemParams::default()
        };
        let problem = Problem::new(&p).unwrap();
        let sol = scf_solve(&problem, &GridFunction::zeros(problem.grid())).unwrap();
        let t0 = problem.hamiltonian(None).unwrap();
        let linear = eigenvalues_below(&t0, p.eps_s, 1e-13);
        assert!(sol.spectrum.count() <= linear.len());
        for (a, b) in linear.iter().zip(&sol.spectrum.values) {
            assert!(a <= &(b + 1e-12));
        }
        let mass = sol.density.integral();
        let sum = sol.occupation_sum(&problem.partition);
        assert!((mass - sum).abs() <= 1e-12 * sum);
    }
}

#[test]
fn reference_levels_match_extrapolated_box_levels() {
    // e_1^h at small h, extrapolated linearly in h, should approach e_1
    let e1 = reference().values[0];
    let level = |h: f64| {
        let p = SystemParams {
            h,
            points_per_well: 40,
            n_max: 1_000_000,
            ..SystemParams::default()
        };
        let problem = Problem::new(&p).unwrap();
        eigenvalues_below(&problem.hamiltonian(None).unwrap(), -1.0, 1e-13)[0]
    };
    let (a, b) = (level(0.05), level(0.025));
    let extrapolated = 2.0 * b - a;
    assert!((extrapolated - e1).abs() <= 5e-3);
}
