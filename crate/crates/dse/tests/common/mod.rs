#![allow(dead_code)]

use std::path::Path;

use serde_json::{json, Value};
use theta_dse::config::{ExperimentConfig, Experiment};
use theta_dse::evaluator::ExternalSpec;
use theta_dse_core::space::{DesignPoint, DesignSpace, Dimension};

pub const STUB: &str = env!("CARGO_BIN_EXE_theta-dse-stub-eval");
pub const CLI: &str = env!("CARGO_BIN_EXE_theta-dse");

/// `cpu` in {cpu_a, cpu_b, cpu_c} by `mem` in {m1, m2}.
pub fn stub_space() -> DesignSpace {
    let dim = |name: &str, choices: &[&str]| Dimension {
        name: name.into(),
        choices: choices.iter().map(|c| c.to_string()).collect(),
    };
    DesignSpace::new("stub", vec![dim("cpu", &["cpu_a", "cpu_b", "cpu_c"]), dim("mem", &["m1", "m2"])]).unwrap()
}

pub fn pt(cpu: usize, mem: usize) -> DesignPoint {
    DesignPoint(vec![cpu, mem])
}

pub fn external(stub: Value, timeout_secs: f64, workers: usize) -> ExternalSpec {
    ExternalSpec {
        command: vec![STUB.into(), "--spec".into(), stub.to_string()],
        timeout_secs,
        workers,
    }
}

/// Linear score with a unique maximum at (cpu_c, m2) of 1.5.
pub fn linear_stub() -> Value {
    json!({"objectives": {"score": {"bias": 0.0, "terms": {
        "cpu": {"cpu_a": 0.0, "cpu_b": 0.5, "cpu_c": 1.0},
        "mem": {"m1": 0.0, "m2": 0.5}
    }}}})
}

pub fn linear_score(p: &DesignPoint) -> f64 {
    [0.0, 0.5, 1.0][p.0[0]] + [0.0, 0.5][p.0[1]]
}

/// A resonance run over the stub space against an external evaluator.
pub fn external_experiment(stub: Value, out: &Path, seeds: &[u64], max_evaluations: u64) -> Experiment {
    let doc = json!({
        "space": stub_space(),
        "env": {"external": {"command": [STUB, "--spec", stub.to_string()], "timeout_secs": 20.0}},
        "method": {"resonance": {"architecture": "mlp:16", "hyper": {"max_evaluations": max_evaluations}}},
        "objective_weights": {"score": 1.0},
        "seeds": seeds,
        "output_dir": out,
    });
    ExperimentConfig::from_json(&doc.to_string()).unwrap().resolve(out).unwrap()
}

/// A synthetic resonance run with a small network.
pub fn synthetic_experiment(space: &str, out: &Path, seeds: &[u64], max_evaluations: u64) -> Experiment {
    let doc = json!({
        "space": {"preset": space},
        "env": {"synthetic": {}},
        "method": {"resonance": {"architecture": "mlp:32", "hyper": {"max_evaluations": max_evaluations}}},
        "seeds": seeds,
        "output_dir": out,
    });
    ExperimentConfig::from_json(&doc.to_string()).unwrap().resolve(out).unwrap()
}
