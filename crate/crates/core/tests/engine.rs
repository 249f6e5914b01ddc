use theta_dse_core::diff::{Adam, AdamConfig, Graph};
use theta_dse_core::envs::{objectives, EvalResult, FnEnv, SyntheticEnv, SyntheticSpec, DISTANCE_OBJECTIVE};
use theta_dse_core::policy::{Architecture, PolicyNet};
use theta_dse_core::resonance::{
    anomaly_reward, surrogate_loss, train, HyperParams, LossWeights, Minibatch, ObjectiveWeights, Trainer,
};
use theta_dse_core::space::{DesignPoint, DesignSpace};
use theta_dse_core::Error;

fn hp(max_evaluations: u64) -> HyperParams {
    let mut hp = HyperParams::default().with_weights(ObjectiveWeights::single(DISTANCE_OBJECTIVE, 1.0));
    hp.max_evaluations = max_evaluations;
    hp
}

fn small_mlp() -> Architecture {
    "mlp:32".parse().unwrap()
}

#[test]
fn surrogate_at_snapshot_with_zero_advantage_is_entropy_only() {
    let space = DesignSpace::from_cardinalities("s", &[3, 2, 4]).unwrap();
    let net = PolicyNet::build(&space, small_mlp(), 7).unwrap();
    let old = net.policy_values().unwrap();
    let designs = vec![DesignPoint(vec![0, 1, 3]), DesignPoint(vec![2, 0, 1])];
    let old_lp: Vec<f64> = designs.iter().map(|d| old.log_prob(d)).collect();
    let alphas = [1.0; 3];
    let w = LossWeights { beta_kl: 1.0, beta_e: 0.05, alphas: &alphas };

    let mut g = Graph::new();
    let (out, _) = net.forward(&mut g).unwrap();
    let (_, t) = surrogate_loss(&mut g, &out, &old, Minibatch { designs: &designs, old_log_probs: &old_lp, advantages: &[0.0, 0.0] }, w).unwrap();
    assert_eq!(t.update, 0.0);
    assert!(t.kl.abs() < 1e-15);
    let h: f64 = old.entropies().iter().sum();
    assert!((t.entropy + 0.05 * h).abs() < 1e-12);
    assert!((t.total - t.entropy).abs() < 1e-15);

    let mut g = Graph::new();
    let (out, _) = net.forward(&mut g).unwrap();
    let adv = [1.5, -0.25];
    let (_, t) = surrogate_loss(&mut g, &out, &old, Minibatch { designs: &designs, old_log_probs: &old_lp, advantages: &adv }, w).unwrap();
    assert!((t.update + 0.625).abs() < 1e-12);
}

#[test]
fn one_step_raises_rewarded_choice() {
    let space = DesignSpace::uniform("bit", 1, 2).unwrap();
    let mut net = PolicyNet::build(&space, small_mlp(), 1).unwrap();
    let old = net.policy_values().unwrap();
    assert_eq!(old.probs(0), &[0.5, 0.5]);
    let designs = [DesignPoint(vec![0])];
    let old_lp = [old.log_prob(&designs[0])];
    let mut adam = Adam::new(net.params(), AdamConfig::with_learning_rate(1e-3)).unwrap();
    let mut g = Graph::new();
    let (out, bound) = net.forward(&mut g).unwrap();
    let alphas = [1.0];
    let w = LossWeights { beta_kl: 0.0, beta_e: 0.0, alphas: &alphas };
    let (loss, _) = surrogate_loss(&mut g, &out, &old, Minibatch { designs: &designs, old_log_probs: &old_lp, advantages: &[1.0] }, w).unwrap();
    let grads = g.backward(loss).unwrap();
    net.params_mut().accumulate(&bound, &grads).unwrap();
    adam.step(net.params_mut()).unwrap();
    assert!(net.policy_values().unwrap().probs(0)[0] > 0.5);
}

#[test]
fn constant_reward_leaves_uniform_policy_untouched() {
    let space = DesignSpace::from_cardinalities("c", &[3, 5]).unwrap();
    let net = PolicyNet::build(&space, small_mlp(), 3).unwrap();
    let before = net.params().flat_values();
    let mut env = FnEnv::new(space, |_: &DesignPoint| objectives(DISTANCE_OBJECTIVE, 4.0));
    let mut h = hp(64);
    h.alpha_renew = 1.0;
    let mut trainer = Trainer::new(net, h, 3).unwrap();
    while !trainer.is_done() {
        let report = trainer.cycle(&mut env).unwrap();
        assert!(report.advantages.iter().all(|a| *a == 0.0));
        assert_eq!(report.running_reward, 4.0);
        assert_eq!(report.losses.update, 0.0);
    }
    // A uniform policy already maximizes entropy; only rounding noise remains.
    let drift = trainer
        .net()
        .params()
        .flat_values()
        .iter()
        .zip(&before)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-8, "max parameter drift {drift}");
    let p = trainer.policy().unwrap();
    for i in 0..2 {
        let d = p.probs(i).len() as f64;
        assert!(p.probs(i).iter().all(|x| (x - 1.0 / d).abs() < 1e-9));
    }
}

#[test]
fn anomalies_receive_dynamic_reward() {
    let space = DesignSpace::uniform("a", 2, 3).unwrap();
    let net = PolicyNet::build(&space, small_mlp(), 5).unwrap();
    let mut env = FnEnv::new(space, |p: &DesignPoint| {
        if p.0[0] == 2 {
            EvalResult::Anomaly("rejected".into())
        } else {
            objectives(DISTANCE_OBJECTIVE, -(p.0[1] as f64))
        }
    });
    let mut h = hp(400);
    h.alpha_anomaly = 0.5;
    let mut trainer = Trainer::new(net, h.clone(), 5).unwrap();
    let mut saw = false;
    while !trainer.is_done() {
        let prev = trainer.state().running_reward;
        let r = trainer.cycle(&mut env).unwrap();
        let ok: Vec<f64> = r.batch.rewards.iter().zip(&r.batch.anomaly_flags).filter(|(_, a)| !**a).map(|(r, _)| *r).collect();
        if let Some(ra) = r.anomaly_reward {
            saw = true;
            let mean = ok.iter().sum::<f64>() / ok.len().max(1) as f64;
            let baseline = prev.unwrap_or(mean);
            assert_eq!(ra, anomaly_reward(&ok, baseline, h.alpha_anomaly).value);
            for (rw, a) in r.batch.rewards.iter().zip(&r.batch.anomaly_flags) {
                if *a {
                    assert_eq!(*rw, ra);
                }
            }
        }
        assert_eq!(r.row.anomaly_count, r.batch.anomaly_flags.iter().filter(|a| **a).count() as u64);
    }
    assert!(saw);
    assert!(trainer.state().best_design.as_ref().unwrap().0[0] != 2);
}

#[test]
fn all_anomalous_batches_use_fallback_and_warn() {
    let space = DesignSpace::uniform("z", 1, 3).unwrap();
    let net = PolicyNet::build(&space, small_mlp(), 1).unwrap();
    let mut env = FnEnv::new(space, |_: &DesignPoint| EvalResult::Anomaly("nope".into()));
    let mut trainer = Trainer::new(net, hp(16), 1).unwrap();
    let first = trainer.cycle(&mut env).unwrap();
    assert_eq!(first.anomaly_reward, Some(-0.1));
    assert!((first.running_reward + 0.1).abs() < 1e-15);
    let second = trainer.cycle(&mut env).unwrap();
    assert!((second.anomaly_reward.unwrap() - (-0.1 - 0.1)).abs() < 1e-15);
    assert_eq!(trainer.warnings().len(), 2);
}

#[test]
fn budget_truncates_last_batch() {
    let mut env = SyntheticEnv::new(SyntheticSpec { dims: 3, choices: 4, distance: Default::default(), seed: 1 }).unwrap();
    let net = PolicyNet::build(theta_dse_core::envs::Environment::space(&env), small_mlp(), 2).unwrap();
    let out = train(net, &mut env, hp(20), 2).unwrap();
    let evals: Vec<u64> = out.trace.rows().iter().map(|r| r.evaluations).collect();
    assert_eq!(evals, vec![8, 16, 20]);
    assert_eq!(out.evaluations, 20);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let run = || {
        let mut env = SyntheticEnv::new(SyntheticSpec { dims: 4, choices: 6, distance: Default::default(), seed: 9 }).unwrap();
        let net = PolicyNet::build(theta_dse_core::envs::Environment::space(&env), small_mlp(), 4).unwrap();
        train(net, &mut env, hp(400), 4).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.net.params().flat_values(), b.net.params().flat_values());
    let bits = |t: &theta_dse_core::trace::RunTrace| t.rows().iter().map(|r| r.loss_u.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.trace), bits(&b.trace));
}

#[test]
fn policy_space_mismatch_is_rejected() {
    let net = PolicyNet::build(&DesignSpace::uniform("a", 2, 3).unwrap(), small_mlp(), 1).unwrap();
    let mut env = SyntheticEnv::new(SyntheticSpec { dims: 2, choices: 4, distance: Default::default(), seed: 1 }).unwrap();
    let mut trainer = Trainer::new(net, hp(8), 1).unwrap();
    assert!(matches!(trainer.cycle(&mut env), Err(Error::Usage(_))));
}

#[test]
fn tiny_benchmark_finds_hidden_optimum() {
    let mut hits = 0;
    for seed in 1..=4 {
        let mut env = SyntheticEnv::new(SyntheticSpec { dims: 5, choices: 8, distance: Default::default(), seed }).unwrap();
        let net = PolicyNet::build(theta_dse_core::envs::Environment::space(&env), Architecture::default(), seed).unwrap();
        let out = train(net, &mut env, hp(10_000), seed).unwrap();
        if out.best_design.as_ref() == Some(env.hidden_optimum()) {
            hits += 1;
        }
    }
    assert!(hits >= 3, "{hits}/4");
}
