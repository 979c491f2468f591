//! Trains on a spiral draw and reports model size and held-out error.
//!
//! `cargo run --release -p lff --example spiral -- [n] [sigma2] [seed]`

use std::time::Instant;

use lff::harness::{generate_spiral, rmse, spiral_label};
use lff::trainer::{fit, TrainerConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let sigma2: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5e-4);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);

    let train = generate_spiral(n, 0, seed).expect("spiral");
    let (_, unit) = train.fit_transform(0.05).expect("transform");
    let config = TrainerConfig::uniform(2, sigma2).with_seed(seed);
    let start = Instant::now();
    let (model, diag) = fit(&unit, &config).expect("fit");
    let elapsed = start.elapsed();

    let test = generate_spiral(n, 0, seed + 1000).expect("spiral");
    let truth: Vec<f64> = (1..=n).map(|t| spiral_label(t, n)).collect();
    let pred = model.predict(test.x()).expect("predict");
    let sweeps: Vec<usize> = diag.iterations.iter().map(|r| r.inner_sweeps).collect();
    println!(
        "m={} stop={:?} train_rmse={:.4} test_rmse={:.4} time={:.2?}",
        diag.num_bases,
        diag.stop_reason,
        diag.training_rmse,
        rmse(&pred, &truth).unwrap(),
        elapsed
    );
    println!("inner sweeps per basis: {sweeps:?}");
}
