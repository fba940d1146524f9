use std::f64::consts::PI;

use maxreg_core::norms::spatial_lq_norm;
use maxreg_core::rng::stream;
use maxreg_core::spectral::{
    heat_semigroup_apply, helmholtz_project, random_solenoidal, tensor_divergence,
};
use maxreg_core::{SpectralField, TorusGrid};
use proptest::prelude::*;

fn grid(dim: usize) -> TorusGrid {
    TorusGrid::new(dim, 16, 2.0 * PI).unwrap()
}

fn field(g: &TorusGrid, components: usize, seed: u64) -> SpectralField {
    SpectralField::random(g, components, 5, 1.0, false, &mut stream(seed, 0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(seed in any::<u64>(), dim in 1usize..=3) {
        let g = grid(dim);
        let u = field(&g, 1, seed);
        let phys = spatial_lq_norm(&u, 2.0).unwrap();
        prop_assert!(rel(phys, u.l2_norm()) < 1e-12);
    }

    #[test]
    fn heat_semigroup_law(seed in any::<u64>(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let g = grid(2);
        let u = field(&g, 1, seed);
        let two = heat_semigroup_apply(&heat_semigroup_apply(&u, s).unwrap(), t).unwrap();
        let one = heat_semigroup_apply(&u, s + t).unwrap();
        prop_assert!(two.max_coefficient_difference(&one) <= 1e-14 * u.max_abs_coefficient());
    }

    #[test]
    fn heat_contracts_lq(seed in any::<u64>(), t in 0.0f64..1.0, q in 1.1f64..8.0) {
        let g = grid(2);
        let u = field(&g, 1, seed);
        let before = spatial_lq_norm(&u, q).unwrap();
        let after = spatial_lq_norm(&heat_semigroup_apply(&u, t).unwrap(), q).unwrap();
        prop_assert!(after <= before * (1.0 + 1e-12));
    }

    #[test]
    fn helmholtz_is_a_projection_onto_solenoidal_fields(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid(dim);
        let v = field(&g, dim, seed);
        let p = helmholtz_project(&v).unwrap();
        let pp = helmholtz_project(&p).unwrap();
        let scale = v.max_abs_coefficient();
        prop_assert!(pp.max_coefficient_difference(&p) <= 1e-14 * scale);
        prop_assert!(p.max_divergence().unwrap() <= 1e-12 * scale);
        // v − Pv is a gradient: orthogonal to Pv
        let rest = v.sub(&p).unwrap();
        prop_assert!(rest.inner(&p).norm() <= 1e-12 * v.l2_norm().powi(2));
    }

    #[test]
    fn lq_norm_is_homogeneous_and_subadditive(
        s1 in any::<u64>(),
        s2 in any::<u64>(),
        a in -5.0f64..5.0,
        q in 1.0f64..10.0,
    ) {
        let g = grid(2);
        let u = field(&g, 1, s1);
        let v = field(&g, 1, s2);
        let nu = spatial_lq_norm(&u, q).unwrap();
        prop_assert!(rel(spatial_lq_norm(&u.scaled(a), q).unwrap(), a.abs() * nu) < 1e-12 || a == 0.0);
        let sum = spatial_lq_norm(&u.add(&v).unwrap(), q).unwrap();
        prop_assert!(sum <= (nu + spatial_lq_norm(&v, q).unwrap()) * (1.0 + 1e-12));
    }

    #[test]
    fn convective_term_does_no_work(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid(dim);
        let u = random_solenoidal(&g, 4, 1.0, &mut stream(seed, 1)).unwrap();
        let b = tensor_divergence(&u, &u).unwrap();
        let work = u.inner(&b).norm();
        prop_assert!(work <= 1e-12 * u.l2_norm() * b.l2_norm().max(1e-300));
    }
}

#[test]
fn lq_norm_limits() {
    let g = grid(1);
    let u = SpectralField::from_fn(&g, |x| x[0].sin());
    // ‖sin‖_∞ = 1, ‖sin‖_2 = √π on [0, 2π)
    assert!(rel(spatial_lq_norm(&u, f64::INFINITY).unwrap(), 1.0) < 1e-12);
    assert!(rel(spatial_lq_norm(&u, 2.0).unwrap(), PI.sqrt()) < 1e-12);
    // ‖sin‖_4⁴ = 3π/4
    assert!(rel(spatial_lq_norm(&u, 4.0).unwrap(), (0.75 * PI).powf(0.25)) < 1e-12);
}
