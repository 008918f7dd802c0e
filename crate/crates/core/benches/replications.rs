use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use epps_core::estimators::Method;
use epps_core::experiments::{epps_curve, EppsConfig, PathProtocol, PriceModel, Sampler};
use epps_core::hawkes::HawkesPriceParams;
use epps_core::par::Execution;
use epps_core::paths::GbmParams;

fn config(model: PriceModel, sampler: Sampler, protocol: PathProtocol) -> EppsConfig {
    EppsConfig {
        model,
        sampler,
        dt_grid: vec![1.0, 5.0, 15.0, 50.0, 100.0],
        replications: 16,
        confidence: 0.95,
        seed: 11,
        estimators: vec![Method::Measured, Method::FlatTrade, Method::Overlap, Method::HayashiYoshida],
        protocol,
        overlap_stride: None,
        reference: None,
    }
}

fn execution_modes(c: &mut Criterion) {
    let horizon = 14_400.0;
    let cases = [
        (
            "gbm_poisson",
            config(
                PriceModel::Gbm(GbmParams {
                    horizon,
                    ..GbmParams::paper()
                }),
                Sampler::Poisson { mean_interarrival: 15.0 },
                PathProtocol::Single,
            ),
        ),
        (
            "hawkes_price_fresh",
            config(
                PriceModel::HawkesPrice {
                    params: HawkesPriceParams::paper(),
                    horizon,
                },
                Sampler::Synchronous,
                PathProtocol::Fresh,
            ),
        ),
    ];
    let mut group = c.benchmark_group("epps_curve");
    group.sample_size(10);
    for (name, cfg) in &cases {
        for (mode, execution) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
            group.bench_with_input(BenchmarkId::new(*name, mode), cfg, |b, cfg| {
                b.iter(|| epps_curve(black_box(cfg), execution).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, execution_modes);
criterion_main!(benches);
