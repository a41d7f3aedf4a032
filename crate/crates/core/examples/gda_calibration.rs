//! Regenerates `tests/fixtures/gda_baseline.json`: a plain GDA run on the
//! toy GAN whose outcome fixes the energy-distance threshold used by the
//! acceptance suite.
//!
//! cargo run --release -p minimax-core --example gda_calibration

use minimax_core::solvers::{SolverConfig, SolverKind};
use minimax_core::toygan::{train_toy_gan, GanLoss, Target, ToyGanConfig};
use serde_json::json;

const THRESHOLD: f64 = 0.05;

fn main() {
    let mut cfg = ToyGanConfig::new(
        Target::Gaussian1D { mean: 2.0, std: 0.5 },
        GanLoss::NonSaturating,
        SolverConfig::new(SolverKind::Gda).with_gn(0.1, 0.05),
    );
    cfg.seed = 0;
    let rec = train_toy_gan(&cfg).expect("calibration run");
    let metrics: Vec<(usize, f64)> = rec.rows.iter().filter_map(|r| r.metric.map(|m| (r.iter, m))).collect();
    let initial = metrics[0].1;
    let last = rec.final_metric().expect("final metric");
    let out = json!({
        "config": cfg,
        "verdict": rec.verdict,
        "initial_energy_distance": initial,
        "final_energy_distance": last,
        "energy_distance_log": metrics,
        "threshold": THRESHOLD,
    });
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/gda_baseline.json");
    std::fs::write(path, serde_json::to_string_pretty(&out).unwrap() + "\n").unwrap();
    println!("initial {initial:.4}, final {last:.4}, threshold {THRESHOLD}; wrote {path}");
}
