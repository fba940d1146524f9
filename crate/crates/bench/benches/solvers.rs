use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, Criterion};
use maxreg_core::norms::{bochner_mixed_norm, Trajectory};
use maxreg_core::pde::{odd_heat_data, taylor_green_data, MildProblem, NlheProblem, NsProblem};
use maxreg_core::picard::{run_picard, PicardOptions};
use maxreg_core::spectral::PowerVariant;
use maxreg_core::{FixedPointProblem, MixedNormParams, TimeGrid, TorusGrid};

fn picard<P: MildProblem>(prob: &P) -> f64 {
    let pm = prob.clone();
    let params = *prob.params();
    let fp = FixedPointProblem::new(
        prob.base().unwrap(),
        move |u: &Trajectory| pm.rhs(u),
        move |u: &Trajectory| bochner_mixed_norm(u, &params),
        prob.power() - 1.0,
        1.0,
    );
    run_picard(&fp, &PicardOptions::default()).unwrap().0.residual
}

fn solves(c: &mut Criterion) {
    let g = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
    let time = TimeGrid::uniform(0.5, 64).unwrap();
    let params = MixedNormParams::new(4.0, 4.0).unwrap();
    let heat = NlheProblem::new(3.0, PowerVariant::Signed, params, odd_heat_data(&g).scaled(0.3), time.clone()).unwrap();
    let ns = NsProblem::new(params, taylor_green_data(&g).unwrap().scaled(0.3), time).unwrap();
    let mut group = c.benchmark_group("picard");
    group.sample_size(10);
    group.bench_function("nlhe_cubic_32x64", |b| b.iter(|| picard(&heat)));
    group.bench_function("navier_stokes_32x64", |b| b.iter(|| picard(&ns)));
    group.finish();
}

criterion_group!(benches, solves);
criterion_main!(benches);
