use barrier_core::dynsys::builtin;
use barrier_core::neural::{model_from_json, model_to_json, nn_init, ModelMeta};
use barrier_core::trainer::{
    halton_point, pretrain, radial_target, simulate_check, train, verify, TargetShape, TrainConfig,
};

#[test]
fn pretraining_is_deterministic() {
    let sys = builtin("polynomial", None).unwrap();
    let cfg = TrainConfig::for_benchmark("polynomial", None).unwrap();
    let run = || {
        let mut net = nn_init(&cfg.widths(2), 5).unwrap();
        pretrain(&mut net, &sys, 20, &cfg.adam()).unwrap();
        net.params()
    };
    assert_eq!(run(), run());
}

#[test]
fn pretrained_sign_agrees_with_the_target() {
    for name in ["polynomial", "darboux", "three-sets", "peruffo"] {
        let sys = builtin(name, None).unwrap();
        let cfg = TrainConfig::for_benchmark(name, None).unwrap();
        let mut net = nn_init(&cfg.widths(sys.dim()), 0).unwrap();
        pretrain(&mut net, &sys, cfg.pretrain_epochs, &cfg.adam()).unwrap();
        let shape = TargetShape::for_network(&net);
        // Probe points far along the sequence, away from the training prefix.
        let agree = (0..1000u64)
            .map(|i| halton_point(1_000_003 + 7 * i, &sys.state_space))
            .filter(|x| net.forward(x).unwrap().signum() == radial_target(&sys, x, shape).signum())
            .count();
        assert!(agree >= 600, "{name}: {agree}/1000");
    }
}

#[test]
fn trained_certificate_survives_every_check() {
    let sys = builtin("polynomial", None).unwrap();
    let mut cfg = TrainConfig::for_benchmark("polynomial", None).unwrap();
    cfg.seed = 1;
    let (net, report) = train(&sys, &cfg).unwrap();
    assert!(report.verified);
    assert_eq!(report.final_loss.as_ref().unwrap().total, 0.0);

    let mut finer = cfg.clone();
    finer.zero = cfg.zero.refined(1);
    assert!(verify(&net, &sys, &finer).unwrap().verified);

    let sim = simulate_check(&net, &sys, 10.0, 100, 7).unwrap();
    assert_eq!(sim.trajectories, 100);
    assert!(sim.max_certificate <= 0.0);

    let meta = ModelMeta {
        benchmark: sys.name.clone(),
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        verified: true,
        config: serde_json::to_value(&cfg).unwrap(),
    };
    let text = model_to_json(&net, &meta).to_string();
    let (back, meta_back) = model_from_json(&text).unwrap();
    assert_eq!(back, net);
    assert_eq!(meta_back.seed, 1);
    assert!(verify(&back, &sys, &cfg).unwrap().verified);
}

#[test]
fn training_is_reproducible_per_seed() {
    let sys = builtin("three-sets", None).unwrap();
    let cfg = TrainConfig::for_benchmark("three-sets", None).unwrap();
    let (a, ra) = train(&sys, &cfg).unwrap();
    let (b, rb) = train(&sys, &cfg).unwrap();
    assert_eq!(a.params(), b.params());
    assert_eq!(ra.epochs_run, rb.epochs_run);
}
