use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rmm_core::{generate_scenario, process_arrival, rmm_solve, ScenarioParams};

fn update_vs_recompute(c: &mut Criterion) {
    let params = ScenarioParams { applicants: 500, posts: 500, max_rank: 8, density: 0.02, events: 8, seed: 11, ..Default::default() };
    let scenario = generate_scenario(&params).expect("valid parameters");
    let base = rmm_solve(&scenario.instance);
    let mut group = c.benchmark_group("arrival");
    group.sample_size(20);
    group.bench_function("update", |b| {
        b.iter_batched(
            || base.clone(),
            |state| {
                let mut state = state;
                for event in &scenario.events {
                    state = process_arrival(state, event).expect("valid event").0;
                }
                state
            },
            BatchSize::LargeInput,
        )
    });
    group.bench_function("recompute", |b| {
        b.iter_batched(
            || scenario.instance.clone(),
            |mut instance| {
                for event in &scenario.events {
                    instance.apply_arrival(event).expect("valid event");
                    std::hint::black_box(rmm_solve(&instance));
                }
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, update_vs_recompute);
criterion_main!(benches);
