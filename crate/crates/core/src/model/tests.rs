use super::*;
use crate::autodiff::gradcheck::max_relative_error;
use crate::circuit::{GateSpec, END_TOKEN};
use crate::embed::embed;
use crate::ising::{random_problem, IsingProblem};
use rand_chacha::ChaCha8Rng;

fn tiny() -> GqcoModel<f64> {
    GqcoModel::new(ModelConfig { init_seed: 7, ..ModelConfig::tiny() }, 3).unwrap()
}

fn small_tokens(model: &GqcoModel<f64>) -> Vec<usize> {
    let v = model.vocabulary();
    [GateSpec::h(0), GateSpec::cnot(0, 1), GateSpec::rotation(crate::circuit::GateKind::RY, 2, crate::circuit::Angle::PlusPiOver3)]
        .iter()
        .map(|g| v.gate_to_token(g).unwrap())
        .collect()
}

#[test]
fn expert_registry() {
    let mut m = tiny();
    assert_eq!(m.select_expert(3).unwrap(), 0);
    assert!(matches!(m.select_expert(4), Err(GqcoError::Config(_))));
    let before = m.num_parameters();
    let one_expert = m.params().scalar_count_of(&m.expert_param_ids(3).unwrap());
    let p = random_problem::<f64>(3, 5).unwrap();
    let logits3 = m.decode_logits(&p, &[0], &SamplingConfig::default()).unwrap();

    assert_eq!(m.add_expert(4, ExpertInit::CopyNearest).unwrap(), 1);
    assert_eq!(m.select_expert(4).unwrap(), 1);
    assert_eq!(m.num_parameters(), before + one_expert);
    let (a, b) = (m.expert_param_ids(3).unwrap(), m.expert_param_ids(4).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(m.params().get(*x), m.params().get(*y));
    }
    let after = m.decode_logits(&p, &[0], &SamplingConfig::default()).unwrap();
    assert_eq!(logits3.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), after.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert!(m.add_expert(4, ExpertInit::CopyNearest).is_err());
    for n in 5..=6 {
        m.add_expert(n, ExpertInit::CopyNearest).unwrap();
    }
    assert!(m.select_expert(7).is_err());
    assert!(m.sample_circuit(&random_problem(7, 1).unwrap(), &SamplingConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn decode_logits_masks() {
    let m = tiny();
    let p = random_problem::<f64>(3, 1).unwrap();
    let cfg = SamplingConfig::default();
    let z = m.decode_logits(&p, &[0], &cfg).unwrap();
    assert_eq!(z[END_TOKEN], f64::NEG_INFINITY);
    let allowed = m.vocabulary().tokens_within(3);
    for (t, &v) in z.iter().enumerate() {
        if allowed.contains(&t) && t != END_TOKEN {
            assert!(v.is_finite());
        } else {
            assert_eq!(v, f64::NEG_INFINITY);
        }
    }
    let lp = kernels_softmax(&z);
    assert!((lp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(lp.iter().filter(|&&q| q == 0.0).count(), z.len() - allowed.len() + 1);
    let t = small_tokens(&m);
    let z4 = m.decode_logits(&p, &[0, t[0], t[1], t[2], t[0]], &cfg).unwrap();
    assert!(z4[END_TOKEN].is_finite());
    assert_eq!(z, m.decode_logits(&p, &[0], &cfg).unwrap());
    assert!(m.decode_logits(&p, &[0, END_TOKEN], &cfg).is_err());
    assert!(m.decode_logits(&p, &[0; 7], &cfg).is_err());
}

fn kernels_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = z.iter().map(|v| (v - max).exp()).sum();
    z.iter().map(|v| (v - max).exp() / s).collect()
}

#[test]
fn sampled_log_prob_matches_teacher_forcing() {
    let m = tiny();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &temp in &[1.0, 2.0] {
        let cfg = SamplingConfig::with_temperature(temp);
        let p = random_problem::<f64>(4, 2).unwrap();
        let mut m4 = m.clone();
        m4.add_expert(4, ExpertInit::Random(11)).unwrap();
        let samples = m4.sample_circuits(&p, 64, &cfg, &mut rng).unwrap();
        let seqs: Vec<Vec<usize>> = samples.iter().map(|s| s.circuit.tokens.clone()).collect();
        let tf = m4.sequence_log_probs(&p, &seqs, &cfg).unwrap();
        for (s, lp) in samples.iter().zip(tf) {
            assert!((s.log_prob - lp).abs() < 1e-9, "{} vs {lp}", s.log_prob);
            assert!((4..=8).contains(&s.circuit.len()));
        }
    }
}

#[test]
fn sampling_is_deterministic_and_greedy_is_stable() {
    let m = tiny();
    let p = random_problem::<f64>(3, 9).unwrap();
    let cfg = SamplingConfig::default();
    let a = m.sample_circuits(&p, 16, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = m.sample_circuits(&p, 16, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a, b);
    let g1 = m.sample_circuit(&p, &SamplingConfig::greedy(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let g2 = m.sample_circuit(&p, &SamplingConfig::greedy(), &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
    assert_eq!(g1, g2);
}

/// Chain-rule probability of a full path from repeated next-token queries.
fn path_prob(m: &GqcoModel<f64>, p: &IsingProblem<f64>, path: &[usize], cfg: &SamplingConfig) -> f64 {
    let mut prob = 1.0;
    for i in 1..path.len() {
        let z = m.decode_logits(p, &path[..i], cfg).unwrap();
        prob *= kernels_softmax(&z)[path[i]];
    }
    prob
}

#[test]
fn enumeration_over_toy_vocabulary() {
    let m = tiny();
    let p = random_problem::<f64>(3, 4).unwrap();
    let gates = small_tokens(&m);
    let cfg = SamplingConfig { gate_filter: Some(gates.clone()), ..SamplingConfig::default() };
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut frontier = vec![vec![END_TOKEN]];
    for depth in 1..=6 {
        let mut next = Vec::new();
        for pre in &frontier {
            for &g in &gates {
                let mut s = pre.clone();
                s.push(g);
                if depth == 6 {
                    paths.push(s);
                } else {
                    if depth >= 4 {
                        let mut e = s.clone();
                        e.push(END_TOKEN);
                        paths.push(e);
                    }
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    assert_eq!(paths.len(), 81 + 243 + 729);
    let lps = m.sequence_log_probs(&p, &paths, &cfg).unwrap();
    let total: f64 = lps.iter().map(|l| l.exp()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
    for k in [0, 100, 500, 1052] {
        assert!((lps[k].exp() - path_prob(&m, &p, &paths[k], &cfg)).abs() < 1e-9);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in m.sample_circuits(&p, 50, &cfg, &mut rng).unwrap() {
        let k = paths.iter().position(|q| *q == s.circuit.tokens).unwrap();
        assert!((s.log_prob.exp() - lps[k].exp()).abs() < 1e-9);
    }
}

#[test]
fn single_qubit_paths_sum_to_one() {
    let m = GqcoModel::<f64>::new(ModelConfig::tiny(), 1).unwrap();
    let p = IsingProblem::fields_only(vec![0.4]).unwrap();
    let toks = m.vocabulary().tokens_within(1);
    let gates: Vec<usize> = toks.into_iter().filter(|&t| t != END_TOKEN).collect();
    let paths: Vec<Vec<usize>> = gates.iter().flat_map(|&a| gates.iter().map(move |&b| vec![0, a, b])).collect();
    assert_eq!(paths.len(), 361);
    let total: f64 = m.sequence_log_probs(&p, &paths, &SamplingConfig::default()).unwrap().iter().map(|l| l.exp()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn higher_temperature_is_closer_to_uniform() {
    let m = tiny();
    let p = random_problem::<f64>(3, 2).unwrap();
    let kl = |t: f64| {
        let z = m.decode_logits(&p, &[0], &SamplingConfig::with_temperature(t)).unwrap();
        let q = kernels_softmax(&z);
        let open = q.iter().filter(|&&v| v > 0.0).count() as f64;
        q.iter().filter(|&&v| v > 0.0).map(|&v| v * (v * open).ln()).sum::<f64>()
    };
    assert!(kl(2.0) < kl(1.0));
    assert!(kl(1.0) > 0.0);
}

#[test]
fn masks_hold_over_many_samples() {
    let mut m = tiny();
    m.add_expert(4, ExpertInit::CopyNearest).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for seed in 0..20 {
        let n = 3 + (seed as usize % 2);
        let p = random_problem::<f64>(n, seed).unwrap();
        for s in m.sample_circuits(&p, 100, &SamplingConfig::with_temperature(2.0), &mut rng).unwrap() {
            let c = &s.circuit;
            assert!(c.len() >= 4 && c.len() <= 2 * n);
            assert!(c.gates.iter().all(|g| g.max_qubit().is_none_or(|q| q < n)));
            assert!(!c.tokens[1..c.tokens.len() - 1].contains(&END_TOKEN));
        }
    }
}

#[test]
fn teacher_forcing_rejects_masked_tokens() {
    let m = tiny();
    let p = random_problem::<f64>(3, 2).unwrap();
    let cfg = SamplingConfig::default();
    let v = m.vocabulary();
    let far = v.gate_to_token(&GateSpec::h(5)).unwrap();
    let h0 = v.gate_to_token(&GateSpec::h(0)).unwrap();
    assert!(m.sequence_log_prob(&p, &[0, far, h0, h0, h0, 0], &cfg).is_err());
    assert!(m.sequence_log_prob(&p, &[0, h0, h0, 0], &cfg).is_err());
    assert!(m.sequence_log_prob(&p, &[0, h0, h0, h0, h0], &cfg).is_err());
    assert!(m.sequence_log_prob(&p, &[0, h0, h0, h0, h0, 0], &cfg).unwrap() < 0.0);
    assert!(m.sequence_log_prob(&p, &[0, h0, h0, h0, h0, h0, h0], &cfg).is_ok());
}

#[test]
fn encoder_symmetry_cases() {
    let m = tiny();
    let sym = IsingProblem::new(vec![0.3, 0.3], [(0, 1, -0.5)]).unwrap();
    let out = m.encode(&sym).unwrap();
    assert!((&out.row(0) - &out.row(1)).iter().all(|v| v.abs() < 1e-12));

    let zero = IsingProblem::new(vec![0.0; 3], [(0, 1, 0.0), (0, 2, 0.0), (1, 2, 0.0)]).unwrap();
    let out = m.encode(&zero).unwrap();
    for r in 1..3 {
        assert!((&out.row(0) - &out.row(r)).iter().all(|v| v.abs() < 1e-12));
    }

    let p = random_problem::<f64>(3, 3).unwrap();
    assert_eq!(m.encode(&p).unwrap(), m.encode(&p).unwrap());
}

#[test]
fn isolated_node_uses_only_its_own_projection() {
    let m = tiny();
    let p = IsingProblem::fields_only(vec![0.7, -0.2, 0.1]).unwrap();
    let g = embed(&p, m.config().max_qubits);
    assert!(g.edge_index.is_empty());
    let out = m.encode_graph(&g).unwrap();
    let x = m.lin_value(&g.node_features, &m.node_in);
    let l = &m.encoder[0];
    let v1 = m.norm_value(&m.lin_value(&x, &l.w1), &l.ln1);
    let ff = m.lin_value(&crate::autodiff::kernels::gelu(&m.lin_value(&v1, &l.w7)), &l.w8);
    let expect = m.norm_value(&(&v1 + &ff), &l.ln2);
    assert!((&out - &expect).iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn encoder_is_equivariant_under_relabeling() {
    let mut cfg = ModelConfig::tiny();
    cfg.encoder_layers = 2;
    let m = GqcoModel::<f64>::new(cfg, 3).unwrap();
    for seed in 0..4 {
        for n in 3..=4 {
            let g = embed(&random_problem::<f64>(n, seed).unwrap(), 20);
            let base = m.encode_graph(&g).unwrap();
            let perm: Vec<usize> = (0..n).map(|i| (i + 1 + seed as usize) % n).collect();
            let moved = m.encode_graph(&g.relabeled(&perm).unwrap()).unwrap();
            for i in 0..n {
                let diff = (&moved.row(perm[i]) - &base.row(i)).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
                assert!(diff < 1e-10, "n={n} seed={seed} diff={diff}");
            }
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut cfg = ModelConfig::tiny();
    cfg.decoder_layers = 2;
    cfg.max_qubits = 3;
    let m = GqcoModel::<f64>::new(cfg, 3).unwrap();
    let p = random_problem::<f64>(3, 6).unwrap();
    let g = embed(&p, 3);
    let t = small_tokens(&m);
    let seqs = vec![vec![0, t[0], t[1], t[2], t[1], 0], vec![0, t[2], t[2], t[0], t[1], t[0], t[1]]];
    let cfg = SamplingConfig::with_temperature(1.5);
    let weights = ndarray::array![[0.7], [-1.3]];
    let ids: Vec<ParamId> = m.params().ids().collect();
    let err = max_relative_error(m.params(), &ids, 1e-5, |tape| {
        let mem = m.encode_on_tape(tape, &g).unwrap();
        let lp = m.sequence_log_probs_on_tape(tape, mem, 3, &seqs, &cfg).unwrap();
        tape.weighted_sum(lp, weights.clone())
    });
    assert!(err < 1e-4, "{err}");
}

#[test]
fn checkpoint_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = tiny();
    m.add_expert(4, ExpertInit::CopyNearest).unwrap();
    let path = dir.path().join("m.gqco");
    m.save(&path).unwrap();
    let back = GqcoModel::<f64>::load(&path).unwrap();
    assert_eq!(back.expert_sizes(), vec![3, 4]);
    for id in m.params().ids() {
        assert_eq!(m.params().get(id), back.params().get(id));
    }
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"GQCO");
    let mut broken = bytes.clone();
    broken[0] = b'X';
    std::fs::write(dir.path().join("bad"), &broken).unwrap();
    assert!(matches!(GqcoModel::<f64>::load(&dir.path().join("bad")), Err(GqcoError::Format(_))));

    let other = GqcoModel::<f64>::new(ModelConfig { d_model: 4, ..ModelConfig::tiny() }, 3).unwrap();
    let (meta, _) = read_tensor_file::<f64>(&path).unwrap();
    let tensors: Vec<(&str, &Array2<f64>)> = other.params().ids().map(|id| (other.params().name(id), other.params().get(id))).collect();
    let mixed = dir.path().join("mixed");
    write_tensor_file(&mixed, meta, &tensors).unwrap();
    assert!(matches!(GqcoModel::<f64>::load(&mixed), Err(GqcoError::Config(_))));
}
