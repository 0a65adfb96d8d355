use super::*;
use crate::generator::{OracleGenerator, UniformTokenModel};

fn tiny_config() -> TrainConfig {
    TrainConfig {
        model: ModelConfig { init_seed: 3, ..ModelConfig::tiny() },
        samples_per_n: [(3, 16)].into_iter().collect(),
        eval_frequency: 5,
        eval_problems: 10,
        eval_samples: 5,
        max_steps: 12,
        seed: 11,
        ..TrainConfig::default()
    }
}

#[test]
fn size_distribution_examples() {
    let close = |d: &BTreeMap<usize, f64>, want: &[(usize, f64)]| {
        assert_eq!(d.len(), want.len());
        for &(n, p) in want {
            assert_eq!(d[&n], p);
        }
        assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-15);
    };
    close(&size_distribution(3).unwrap(), &[(3, 1.0)]);
    close(&size_distribution(4).unwrap(), &[(3, 0.5), (4, 0.5)]);
    close(&size_distribution(5).unwrap(), &[(3, 0.25), (4, 0.25), (5, 0.5)]);
    close(&size_distribution(6).unwrap(), &[(3, 0.5 / 3.0), (4, 0.5 / 3.0), (5, 0.5 / 3.0), (6, 0.5)]);
    assert!(size_distribution(2).is_err());
    for n_max in 4..=20 {
        assert!(size_distribution(n_max).unwrap().values().all(|&p| p > 0.0));
    }
}

#[test]
fn sample_size_follows_distribution() {
    let d = size_distribution(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = BTreeMap::new();
    for _ in 0..20_000 {
        *counts.entry(sample_size(&d, &mut rng)).or_insert(0usize) += 1;
    }
    assert!((counts[&5] as f64 / 20_000.0 - 0.5).abs() < 0.02);
    assert!((counts[&3] as f64 / 20_000.0 - 0.25).abs() < 0.02);
}

#[test]
fn curriculum_threshold_is_strict() {
    let mut model = GqcoModel::<f64>::new(ModelConfig::tiny(), 3).unwrap();
    let s = CurriculumState::default();
    let same = curriculum_advance(&s, 500, 0.90, 0.9, &mut model).unwrap();
    assert_eq!(same.n_max, 3);
    assert!(model.select_expert(4).is_err());
    let next = curriculum_advance(&same, 1000, 0.95, 0.9, &mut model).unwrap();
    assert_eq!(next.n_max, 4);
    assert_eq!(model.select_expert(4).unwrap(), 1);
    assert_eq!(next.history[&3], vec![(500, 0.90), (1000, 0.95)]);
    let again = curriculum_advance(&next, 1500, 1.0, 0.9, &mut model).unwrap();
    assert_eq!(again.n_max, 5);
}

#[test]
fn evaluation_baselines() {
    let oracle = OracleGenerator::default();
    assert_eq!(evaluate_accuracy::<f64, _>(&oracle, 4, 30, 1, 2.0, 0).unwrap(), 1.0);
    let uniform = UniformTokenModel::default();
    let acc = evaluate_accuracy::<f64, _>(&uniform, 3, 200, 1, 2.0, 0).unwrap();
    assert!(acc < 0.9, "{acc}");
    assert_eq!(acc, evaluate_accuracy::<f64, _>(&uniform, 3, 200, 1, 2.0, 0).unwrap());
}

#[test]
fn train_step_is_deterministic() {
    let cfg = tiny_config();
    let run = || {
        let mut model = GqcoModel::<f64>::new(cfg.model.clone(), 3).unwrap();
        let mut opt = Adam::new(cfg.adam.clone());
        (0..3)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                train_step(&mut model, &mut opt, &cfg, StepMode::Base { n_max: 3 }, &mut rng).unwrap()
            })
            .collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.iter().all(|m| m.optimality_gap.unwrap() >= -1e-12));
}

fn frozen_batch(model: &GqcoModel<f64>) -> (IsingProblem<f64>, Vec<Circuit>, Vec<f64>) {
    let p = random_problem::<f64>(3, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let circuits: Vec<Circuit> = model
        .sample_circuits(&p, 16, &SamplingConfig::default(), &mut rng)
        .unwrap()
        .into_iter()
        .map(|s| s.circuit)
        .collect();
    let table = energy_table(&p).unwrap();
    let e = circuits.iter().map(|c| expectation_with_table(&run_circuit::<f64>(c).unwrap(), &table)).collect();
    (p, circuits, e)
}

#[test]
fn one_small_step_raises_best_probability_and_lowers_loss() {
    let cfg = TrainConfig { adam: AdamConfig { learning_rate: 1e-5, ..AdamConfig::default() }, ..tiny_config() };
    let mut model = GqcoModel::<f64>::new(cfg.model.clone(), 3).unwrap();
    let (p, circuits, e) = frozen_batch(&model);
    let mut opt = Adam::new(cfg.adam.clone());
    let (batch, before) = preference_update(&mut model, &mut opt, &cfg, &p, circuits.clone(), e.clone(), None).unwrap();
    let best = &batch.circuits[batch.w_best].tokens;
    let lp_after = model.sequence_log_prob(&p, best, &SamplingConfig::default()).unwrap();
    assert!(lp_after > batch.log_probs[batch.w_best]);
    let mut probe = Adam::new(AdamConfig { learning_rate: 0.0, ..cfg.adam.clone() });
    let (_, after) = preference_update(&mut model, &mut probe, &cfg, &p, circuits, e, None).unwrap();
    assert!(after.value < before.value);
}

#[test]
fn expert_tuning_freezes_everything_else() {
    let cfg = tiny_config();
    let mut model = GqcoModel::<f64>::new(cfg.model.clone(), 3).unwrap();
    model.add_expert(4, ExpertInit::CopyNearest).unwrap();
    let shared = model.shared_param_ids();
    let other = model.expert_param_ids(4).unwrap();
    let own = model.expert_param_ids(3).unwrap();
    let (s0, o0, e0) = (model.params().checksum(&shared), model.params().checksum(&other), model.params().checksum(&own));
    let metrics = expert_tune(&mut model, 3, &cfg, 3).unwrap();
    assert_eq!(metrics.len(), 3);
    assert_eq!(model.params().checksum(&shared), s0);
    assert_eq!(model.params().checksum(&other), o0);
    assert_ne!(model.params().checksum(&own), e0);
    assert!(expert_tune(&mut model, 5, &cfg, 1).is_err());
}

#[test]
fn run_directory_resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config();
    let mut full = Trainer::<f64>::create(cfg.clone(), &dir.path().join("full")).unwrap();
    full.run(None, |_| {}).unwrap();
    assert!(full.is_finished());
    let full_csv = std::fs::read_to_string(dir.path().join("full/metrics.csv")).unwrap();
    assert_eq!(full_csv.lines().count(), 13);
    assert!(full_csv.lines().nth(5).unwrap().split(',').last().unwrap().parse::<f64>().is_ok());

    let part = dir.path().join("part");
    let mut t = Trainer::<f64>::create(cfg.clone(), &part).unwrap();
    t.run(Some(7), |_| {}).unwrap();
    drop(t);
    let state: TrainerState = serde_json::from_str(&std::fs::read_to_string(part.join("state.json")).unwrap()).unwrap();
    assert_eq!(state.step, 7);
    let mut r = Trainer::<f64>::resume(&part).unwrap();
    r.run(None, |_| {}).unwrap();
    assert_eq!(std::fs::read_to_string(part.join("metrics.csv")).unwrap(), full_csv);
    assert!(Trainer::<f64>::create(cfg, &part).is_err());
}
