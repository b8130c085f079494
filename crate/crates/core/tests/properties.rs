use proptest::prelude::*;

use shockfront::enskog::{default_directions, default_radii, dispersion_fit};
use shockfront::evans::{winding_of, Contour, WindingOptions};
use shockfront::front::{evolve_delta, leading_green_kernels, FrontCoefficients, FrontField, GreenKernelParams, TransverseGrid};
use shockfront::enskog::viscosity_blocks;
use shockfront::linalg::{eigenvalues_real, RMat, C64};
use shockfront::model::{
    builtin_jin_xin_1d, builtin_jin_xin_2d, equilibrium_residual, jacobian_check, RelaxationSystem, ScalarMap, StatePoint,
};
use shockfront::profile::{solve_profile, ProfileGrid, ProfileOptions};
use shockfront::report::to_json;
use shockfront::spectral::kawashima_theta;

fn jx1() -> RelaxationSystem {
    builtin_jin_xin_1d(1.0, ScalarMap::burgers(), 1.0).unwrap()
}

fn jx2(c: f64) -> RelaxationSystem {
    builtin_jin_xin_2d(1.0, 1.0, ScalarMap::burgers(), ScalarMap::linear(c), 1.0).unwrap()
}

fn gaussian_front(alpha: f64, beta: f64, sigma: f64) -> FrontField {
    let grid = TransverseGrid::new(vec![1024], vec![256.0]).unwrap();
    let coeffs = FrontCoefficients { alpha: vec![alpha], beta: vec![vec![beta]] };
    FrontField::from_fn(grid, coeffs, |y| (-(y[0] - 128.0).powi(2) / (2.0 * sigma * sigma)).exp()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn equilibrium_lies_on_the_manifold(u in -0.9f64..0.9, c in -0.5f64..0.5) {
        for sys in [jx1(), jx2(c)] {
            let r = equilibrium_residual(&sys, u);
            prop_assert!(r.amax() <= 1e-10, "{}", r.amax());
        }
    }

    #[test]
    fn jacobian_discrepancy_is_second_order(u in -0.8f64..0.8, v in -0.3f64..0.3, w in -0.3f64..0.3) {
        let sys = jx2(0.3);
        let st = StatePoint::new(u, vec![v, w]);
        let e1 = jacobian_check(&sys, &st, 1e-3).unwrap().max();
        let e2 = jacobian_check(&sys, &st, 5e-4).unwrap().max();
        // Quadratic fluxes have exact central differences up to roundoff.
        prop_assert!(e1 < 1e-9 || (3.5..=4.5).contains(&(e1 / e2)), "{e1:e} {e2:e}");
    }

    #[test]
    fn directional_symbols_have_real_spectrum(u in -0.9f64..0.9, theta in 0.0f64..std::f64::consts::TAU, r in 0.01f64..100.0) {
        let sys = jx2(0.3);
        let st = sys.equilibrium_state(u);
        let xi = [r * theta.cos(), r * theta.sin()];
        let ev = eigenvalues_real(&sys.directional_jac(&st, &xi)).unwrap();
        prop_assert!(ev.iter().all(|z| z.im.abs() < 1e-8 * r));
    }

    #[test]
    fn kawashima_bound_is_homogeneous(
        u in -0.5f64..0.5,
        theta in 0.0f64..std::f64::consts::TAU,
        k in proptest::array::uniform3(-2.0f64..2.0),
    ) {
        let sys = jx2(0.3);
        let st = sys.equilibrium_state(u);
        let a0_dq = sys.symmetrizer(&st).unwrap() * sys.jac_relaxation(&st);
        let kbar = RMat::from_row_slice(3, 3, &[0.0, k[0], k[1], -k[0], 0.0, k[2], -k[1], -k[2], 0.0]);
        let xi = [theta.cos(), theta.sin()];
        let t1 = kawashima_theta(&a0_dq, &sys.directional_jac(&st, &xi), &kbar, 1.0).unwrap();
        let xi2 = [2.0 * xi[0], 2.0 * xi[1]];
        let t2 = kawashima_theta(&a0_dq, &sys.directional_jac(&st, &xi2), &(kbar * 2.0), 4.0).unwrap();
        prop_assert!((t2 - 4.0 * t1).abs() <= 1e-10 * (1.0 + t1.abs()), "{t1} {t2}");
    }

    #[test]
    fn json_floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let back: f64 = serde_json::from_str(&to_json(&x).unwrap()).unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn front_evolution_is_a_semigroup(t1 in 0.0f64..50.0, dt in 0.0f64..50.0, alpha in -1.0f64..1.0, beta in 0.1f64..2.0) {
        let f = gaussian_front(alpha, beta, 2.0);
        let direct = evolve_delta(&f, t1 + dt).unwrap();
        let split = evolve_delta(&evolve_delta(&f, t1).unwrap(), t1 + dt).unwrap();
        let diff = direct.values.iter().zip(&split.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12, "{diff:e}");
    }

    #[test]
    fn front_l2_norm_is_nonincreasing(ts in proptest::collection::vec(0.0f64..100.0, 2..6), alpha in -1.0f64..1.0, beta in 0.1f64..2.0) {
        let f = gaussian_front(alpha, beta, 1.5);
        let mut ts = ts;
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let norms: Vec<f64> = ts.iter().map(|t| evolve_delta(&f, *t).unwrap().l2_norm()).collect();
        for w in norms.windows(2).zip(ts.windows(2)) {
            let (n, t) = w;
            prop_assert!(n[1] <= n[0] * (1.0 + 1e-14));
            if t[1] > t[0] + 1e-3 {
                prop_assert!(n[1] < n[0]);
            }
        }
    }

    #[test]
    fn kernels_collapse_when_coefficients_coincide(y1 in -20.0f64..20.0, t in 0.5f64..50.0, x2 in -10.0f64..10.0) {
        // Same drift and covariance at the endpoint and on the front: the
        // interpolation weight has no effect.
        let b = RMat::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.9]);
        let params = |y1: f64| GreenKernelParams {
            a_plus: vec![-0.5, 0.3],
            a_bar_tilde: vec![0.3],
            beta_tilde: vec![vec![0.9]],
            blocks: viscosity_blocks(&b).unwrap(),
            b_star: vec![vec![0.9, 0.0], vec![0.0, 0.9]],
            y1,
            t,
        };
        let x = [1.0, x2];
        let (g_moved, _) = leading_green_kernels(&params(y1), &x, &[0.0]).unwrap();
        let (g_here, _) = leading_green_kernels(&params(0.0), &x, &[0.0]).unwrap();
        prop_assert!((g_moved - g_here).abs() <= 1e-12 * g_here.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn dispersion_fit_speed_is_the_equilibrium_characteristic(u in -0.6f64..0.6, c in -0.5f64..0.5) {
        let sys = jx2(c);
        let st = StatePoint::from_vector(&sys.equilibrium_state(u));
        let fit = dispersion_fit(&sys, &st, &default_directions(2), &default_radii()).unwrap();
        prop_assert!((fit.a_fit[0] - u).abs() <= 1e-8 && (fit.a_fit[1] - c).abs() <= 1e-8, "{:?}", fit.a_fit);
        let b = fit.b_matrix();
        prop_assert!((&b - b.transpose()).amax() <= 1e-12);
        prop_assert!(b.symmetric_eigenvalues().iter().all(|e| *e > 0.0));
    }

    #[test]
    fn profile_is_translation_invariant(k in -25i32..25) {
        let sys = jx1();
        let grid = ProfileGrid::new(200.0, 2000);
        // The phase condition is imposed at a node.
        let z0 = k as f64 * grid.spacing();
        let mut opts = ProfileOptions::default();
        let p0 = solve_profile(&sys, 0.1, -0.1, grid, &opts).unwrap();
        opts.phase_point = z0;
        let p1 = solve_profile(&sys, 0.1, -0.1, grid, &opts).unwrap().shifted(z0);
        let mut err: f64 = 0.0;
        for i in 0..p0.len() {
            if p0.z_grid[i].abs() < 150.0 {
                err = err.max((p1.eval(p0.z_grid[i]) - p0.node(i)).amax());
            }
        }
        prop_assert!(err <= 1e-8, "{err:e}");
    }

    #[test]
    fn winding_counts_roots_inside_perturbed_circles(
        roots in proptest::collection::vec((0.0f64..0.8, 0.0f64..std::f64::consts::TAU), 1..4),
        far in 1.3f64..3.0,
        wobble in 0.0f64..0.1,
    ) {
        // Polynomial with roots at the given points plus one outside the contour.
        let zs: Vec<C64> = roots.iter().map(|(r, a)| C64::from_polar(*r, *a)).chain([C64::new(far, 0.0)]).collect();
        let f = |l: C64| -> shockfront::Result<(C64, f64)> { Ok((zs.iter().map(|z| l - z).product(), 0.0)) };
        let circle = Contour::circle(C64::new(wobble, -wobble), 1.0 + wobble, 64);
        let inside = zs.iter().filter(|z| (**z - C64::new(wobble, -wobble)).norm() < 1.0 + wobble).count() as i64;
        let w = winding_of(f, &circle, &WindingOptions::default()).unwrap();
        prop_assert_eq!(w.winding, Some(inside));
    }
}
