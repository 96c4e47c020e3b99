use provision_core::benchmark::{matmul_like, pearsons_like};
use provision_core::simulator::{build_dataset, generate_trace, measure_throughput, simulate, PlatformParams};
use provision_core::{ArrivalPattern, Configuration};

#[test]
fn throughput_monotone_in_cpus() {
    for p in [matmul_like(), pearsons_like()] {
        let still = PlatformParams {
            service_jitter: 0.0,
            ..p.params.clone()
        };
        for replicas in [5, 12, 30] {
            let curve: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&cpus| {
                    let cfg = Configuration::new(replicas, 4096, cpus).unwrap();
                    measure_throughput(&cfg, &still, &p.spec, 1, 2).unwrap()
                })
                .collect();
            assert!(curve.windows(2).all(|w| w[1] >= w[0]), "{} r={replicas}: {curve:?}", p.name);
        }
    }
}

#[test]
fn labels_monotone_in_rate() {
    for p in [matmul_like(), pearsons_like()] {
        let data = build_dataset(&p.dataset_grid(5, 3)).unwrap();
        for row_set in data.rows.chunks(p.rates().len()) {
            assert!(row_set.windows(2).all(|w| w[0].label <= w[1].label), "{}: {row_set:?}", p.name);
        }
    }
}

#[test]
fn no_idle_replica_while_requests_wait() {
    // Work conservation: with r replicas, request i (0-based, all arriving at
    // once) starts at ready + floor(i / r) * service at zero jitter.
    let params = PlatformParams {
        image_fetch_time: 0.5,
        boot_time_per_container: 0.25,
        boot_parallelism: 2,
        cpu_work_units: 0.5,
        mem_floor_mb: 64,
        service_jitter: 0.0,
        seed: 0,
    };
    let trace = generate_trace(ArrivalPattern::Constant, 1000.0, 0.02, 0).unwrap();
    let n = trace.len();
    let cfg = Configuration::new(3, 512, 1.0).unwrap();
    let r = simulate(&trace, &cfg, &params).unwrap();
    let ready = 0.5 + 0.25 * 2.0;
    let waves = n.div_ceil(3) as f64;
    assert!((r.makespan - (ready + waves * 0.5)).abs() < 1e-6, "{}", r.makespan);
}
