//! Declarative experiments: a JSON config evaluated side by side in closed
//! form and by simulation, then swept along one axis.
//!
//! cargo run --release --example experiment_config

use envcorr::experiment::sweep::{sweep_table, Axis};
use envcorr::experiment::{run::run_table, ExperimentConfig, Failure};

const CONFIG: &str = r#"{
  "channel": {"eta": 0.9, "v_env": 25},
  "tap": {"gamma": 0.7, "detector": "heterodyne"},
  "strategy": "herald",
  "window": {"x_th": 4.0, "p_th": 4.0},
  "mc": {"n": 500000, "seed": 9},
  "qkd": {"sigma": 40, "attack": "collective", "direction": "direct"}
}"#;

fn main() -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    print!("{}", String::from_utf8_lossy(&run_table(&cfg)?.to_csv()?));

    let mut cfg = cfg;
    cfg.strategy = envcorr::qkd::Scheme::ErasingHet;
    cfg.window = None;
    let t = sweep_table(&cfg, Axis::Gamma, &[0.1, 0.3, 0.5, 0.7, 0.9, 1.0])?;
    print!("{}", String::from_utf8_lossy(&t.to_csv()?));
    Ok(())
}
