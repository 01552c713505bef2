use gp_consensus::plant::{benchmark_f, PlantSpec, ScalarFn};
use gp_consensus::rng::NoiseRng;

fn reference_f(x: f64) -> f64 {
    // Written as printed: sin(10x) + 1 / (2 exp(-x/10)) + 5.
    let denom = 2.0 * f64::exp(-x / 10.0);
    f64::sin(10.0 * x) + 1.0 / denom + 5.0
}

#[test]
fn benchmark_matches_reference_expression() {
    for k in 0..10_000 {
        let x = -1.5 + 3.0 * k as f64 / 9_999.0;
        let (a, b) = (benchmark_f(x), reference_f(x));
        assert!((a - b).abs() <= 1e-12, "x={x}: {a} vs {b}");
    }
}

#[test]
fn noiseless_measurement_recovers_f_for_any_plant() {
    let plants = [
        PlantSpec::benchmark(),
        PlantSpec::new(
            ScalarFn::Affine { offset: 0.3, slope: -1.2 },
            ScalarFn::Sinusoid { amplitude: 0.5, frequency: 2.0, phase: 0.1, offset: 2.0 },
            ScalarFn::Sinusoid { amplitude: 1.0, frequency: 4.0, phase: 0.0, offset: 0.0 },
            -1.5,
            1.5,
            1e-6,
        )
        .unwrap(),
    ];
    let mut rng = NoiseRng::new(1);
    for plant in &plants {
        for _ in 0..5_000 {
            let x = rng.uniform(-1.5, 1.5);
            let u = rng.uniform(-20.0, 20.0);
            let xdot = plant.drift(x, u).unwrap();
            let y = plant.measure(x, u, xdot, 0.0);
            let f = plant.f_true.eval(x);
            assert!((y - f).abs() <= 1e-12 * (1.0 + u.abs()), "x={x} u={u}: {y} vs {f}");
        }
    }
}

#[test]
fn measurement_noise_has_configured_spread() {
    let plant = PlantSpec::<f64>::benchmark();
    let mut rng = NoiseRng::new(99);
    let (x, u) = (0.37, -4.0);
    let xdot = plant.drift(x, u).unwrap();
    let residuals: Vec<f64> =
        (0..10_000).map(|_| plant.measure(x, u, xdot, rng.normal(0.0, 0.01)) - benchmark_f(x)).collect();
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (residuals.len() - 1) as f64;
    let std = var.sqrt();
    assert!((std - 0.01).abs() <= 0.05 * 0.01, "sample std {std}");
    assert!(mean.abs() <= 5.0 * 0.01 / 100.0, "sample mean {mean}");
}

#[test]
fn benchmark_lipschitz_constant() {
    let lip = PlantSpec::<f64>::benchmark().lipschitz_f(1e-4);
    assert!((lip - 10.0567).abs() < 1e-3, "{lip}");
    assert!(lip <= 10.06);
}
