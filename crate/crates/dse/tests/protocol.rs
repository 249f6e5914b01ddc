mod common;

use std::time::Instant;

use common::*;
use serde_json::json;
use theta_dse::commands::cmd_run;
use theta_dse::evaluator::{EvaluatorProcess, ExternalEnv};
use theta_dse::io::{read_json, read_trace_csv, summary_path, trace_path, RunStatus, Summary};
use theta_dse::CliError;
use theta_dse_core::envs::{objectives, Environment, EvalResult};
use theta_dse_core::resonance::{anomaly_reward, HyperParams, ObjectiveWeights, Trainer};
use theta_dse_core::policy::PolicyNet;

fn anomaly(reason: &str) -> EvalResult {
    EvalResult::Anomaly(reason.into())
}

#[test]
fn echo() {
    let space = stub_space();
    let mut p = EvaluatorProcess::spawn(&external(json!({"objectives": {"score": {"bias": 1.0}}}), 10.0, 1), &space).unwrap();
    for c in 0..3 {
        assert_eq!(p.evaluate(&pt(c, 1)).unwrap(), objectives("score", 1.0));
    }
}

#[test]
fn linear_objectives_follow_labels() {
    let space = stub_space();
    let mut p = EvaluatorProcess::spawn(&external(linear_stub(), 10.0, 1), &space).unwrap();
    for d in space.enumerate() {
        assert_eq!(p.evaluate(&d).unwrap(), objectives("score", linear_score(&d)));
    }
}

#[test]
fn rejection_is_an_anomaly() {
    let space = stub_space();
    let stub = json!({"objectives": {"score": {"bias": 1.0}}, "reject": [{"dim": "cpu", "choice": "cpu_b"}]});
    let mut p = EvaluatorProcess::spawn(&external(stub, 10.0, 1), &space).unwrap();
    assert_eq!(p.evaluate(&pt(1, 0)).unwrap(), anomaly("rejected"));
    assert_eq!(p.evaluate(&pt(0, 0)).unwrap(), objectives("score", 1.0));
}

#[test]
fn timeout_is_an_anomaly_and_the_channel_survives() {
    let space = stub_space();
    let stub = json!({"objectives": {"score": {"bias": 2.0}}, "hang": [{"dim": "cpu", "choice": "cpu_c"}]});
    let mut p = EvaluatorProcess::spawn(&external(stub, 0.3, 1), &space).unwrap();
    let t = Instant::now();
    assert_eq!(p.evaluate(&pt(2, 0)).unwrap(), anomaly("timeout"));
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert_eq!(p.evaluate(&pt(0, 0)).unwrap(), objectives("score", 2.0));
}

#[test]
fn late_reply_to_an_abandoned_request_is_skipped() {
    let space = stub_space();
    let stub = json!({"objectives": {"score": {"bias": 2.0}}, "slow": [{"dim": "cpu", "choice": "cpu_c"}], "slow_ms": 400});
    let mut p = EvaluatorProcess::spawn(&external(stub, 0.2, 1), &space).unwrap();
    assert_eq!(p.evaluate(&pt(2, 0)).unwrap(), anomaly("timeout"));
    // Let the stale answer arrive so it is queued ahead of the next one.
    std::thread::sleep(std::time::Duration::from_millis(500));
    assert_eq!(p.evaluate(&pt(0, 0)).unwrap(), objectives("score", 2.0));
}

#[test]
fn id_mismatch_is_a_protocol_anomaly() {
    let space = stub_space();
    let stub = json!({"objectives": {"score": {"bias": 1.0}}, "wrong_id": [{"dim": "mem", "choice": "m2"}]});
    let mut p = EvaluatorProcess::spawn(&external(stub, 10.0, 1), &space).unwrap();
    assert_eq!(p.evaluate(&pt(0, 1)).unwrap(), anomaly("protocol"));
    assert_eq!(p.evaluate(&pt(0, 0)).unwrap(), objectives("score", 1.0));
}

#[test]
fn malformed_reply_is_a_protocol_anomaly() {
    let space = stub_space();
    let stub = json!({"objectives": {"score": {"bias": 1.0}}, "malformed": [{"dim": "cpu", "choice": "cpu_a"}]});
    let mut p = EvaluatorProcess::spawn(&external(stub, 10.0, 1), &space).unwrap();
    assert_eq!(p.evaluate(&pt(0, 0)).unwrap(), anomaly("protocol"));
    assert_eq!(p.evaluate(&pt(1, 0)).unwrap(), objectives("score", 1.0));
}

#[test]
fn refused_handshake_fails_to_spawn() {
    let stub = json!({"refuse_handshake": true});
    assert!(EvaluatorProcess::spawn(&external(stub, 10.0, 1), &stub_space()).is_err());
}

#[test]
fn missing_program_fails_to_spawn() {
    let mut spec = external(json!({}), 10.0, 1);
    spec.command = vec!["/nonexistent/theta-dse-evaluator".into()];
    assert!(EvaluatorProcess::spawn(&spec, &stub_space()).is_err());
}

#[test]
fn crash_is_a_run_level_error() {
    let space = stub_space();
    let stub = json!({"objectives": {"score": {"bias": 1.0}}, "crash_after": 2});
    let mut p = EvaluatorProcess::spawn(&external(stub, 10.0, 1), &space).unwrap();
    assert!(p.evaluate(&pt(0, 0)).is_ok());
    assert!(p.evaluate(&pt(0, 0)).is_ok());
    assert!(p.evaluate(&pt(0, 0)).is_err());
}

#[test]
fn worker_pool_keeps_batch_order() {
    let space = stub_space();
    let mut env = ExternalEnv::spawn(&external(linear_stub(), 10.0, 3), &space).unwrap();
    assert_eq!(env.workers(), 3);
    let designs: Vec<_> = (0..20).map(|i| pt(i % 3, (i / 3) % 2)).collect();
    let got = env.evaluate_batch(&designs).unwrap();
    let want: Vec<_> = designs.iter().map(|d| objectives("score", linear_score(d))).collect();
    assert_eq!(got, want);
}

#[test]
fn rejected_designs_get_the_dynamic_reward_in_training() {
    let space = stub_space();
    let stub = json!({
        "objectives": linear_stub()["objectives"].clone(),
        "reject": [{"dim": "cpu", "choice": "cpu_b"}]
    });
    let mut env = ExternalEnv::spawn(&external(stub, 10.0, 2), &space).unwrap();
    let mut hp = HyperParams::default().with_weights(ObjectiveWeights::single("score", 1.0));
    hp.max_evaluations = 160;
    let net = PolicyNet::build(&space, "mlp:16".parse().unwrap(), 3).unwrap();
    let mut trainer = Trainer::new(net, hp.clone(), 3).unwrap();
    let mut seen = 0;
    while !trainer.is_done() {
        let prev = trainer.state().running_reward;
        let r = trainer.cycle(&mut env).unwrap();
        let ok: Vec<f64> = r
            .batch
            .designs
            .iter()
            .filter(|d| d.0[0] != 1)
            .map(linear_score)
            .collect();
        assert_eq!(r.batch.anomaly_flags.iter().filter(|a| **a).count(), r.batch.designs.len() - ok.len());
        if let Some(ra) = r.anomaly_reward {
            seen += 1;
            let baseline = prev.unwrap_or_else(|| if ok.is_empty() { 0.0 } else { ok.iter().sum::<f64>() / ok.len() as f64 });
            assert_eq!(ra, anomaly_reward(&ok, baseline, hp.alpha_anomaly).value);
        }
    }
    assert!(seen > 0);
}

#[test]
fn evaluator_crash_aborts_the_run_with_a_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let stub = json!({"objectives": linear_stub()["objectives"].clone(), "crash_after": 20});
    let exp = external_experiment(stub, dir.path(), &[5], 64);
    let err = cmd_run(&exp, &mut std::io::sink()).unwrap_err();
    assert!(matches!(err, CliError::Runtime(_)));
    let trace = read_trace_csv(&trace_path(dir.path(), 5)).unwrap();
    let evals: Vec<u64> = trace.rows().iter().map(|r| r.evaluations).collect();
    assert_eq!(evals, vec![8, 16]);
    let summary: Summary = read_json(&summary_path(dir.path(), 5)).unwrap();
    assert_eq!(summary.status, RunStatus::Aborted);
    assert!(summary.error.unwrap().contains("evaluator"));
    assert_eq!(summary.evaluations_used, 16);
}
