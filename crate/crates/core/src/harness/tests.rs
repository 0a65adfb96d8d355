use super::*;
use crate::baselines::{simulated_annealing, SaConfig};
use crate::circuit::{build_vocabulary, run_gates, Angle, Circuit, Gate, GateKind, GateSpec, StateVector};
use crate::error::GqcoError;
use crate::generator::{OracleGenerator, UniformTokenModel};
use crate::ising::{brute_force_solve, is_correct_solution, BitString, IsingProblem};
use crate::model::{GqcoModel, ModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_spec() -> BenchmarkSpec {
    BenchmarkSpec {
        sizes: vec![3, 4, 5, 6],
        problems_per_size: 6,
        gqco_samples: vec![1, 4],
        sa_sweeps: vec![10, 1000],
        qaoa_layers: vec![1],
        seed: 4,
        timing_repeats: 1,
        parallel: true,
    }
}

/// Always proposes one fixed circuit.
struct Fixed(Circuit);

impl CircuitGenerator<f64> for Fixed {
    fn name(&self) -> &str {
        "fixed"
    }

    fn generate(&self, _: &IsingProblem<f64>, count: usize, _: f64, _: &mut ChaCha8Rng) -> Result<Vec<Circuit>> {
        Ok(vec![self.0.clone(); count])
    }
}

#[test]
fn gqco_solve_is_deterministic_and_consistent() {
    let u = UniformTokenModel::default();
    let inst = Instance::<f64>::random(4, 0, 77).unwrap();
    let a = gqco_solve(&inst, &u, 20, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = gqco_solve(&inst, &u, 20, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(SolveRecord { wall_time: 0.0, ..a.clone() }, SolveRecord { wall_time: 0.0, ..b });
    assert_eq!(a.correct, is_correct_solution(&inst.problem, &a.answer).unwrap());
    replay_record(&a, &inst.problem).unwrap();
    let tampered = SolveRecord { expectation: a.expectation.map(|e| e + 1e-6), ..a };
    assert!(replay_record(&tampered, &inst.problem).is_err());
}

#[test]
fn more_samples_do_not_hurt_on_average() {
    let u = UniformTokenModel::default();
    let (mut one, mut many) = (0, 0);
    for k in 0..60 {
        let inst = Instance::<f64>::random(3, k, 900 + k as u64).unwrap();
        one += gqco_solve(&inst, &u, 1, &mut ChaCha8Rng::seed_from_u64(k as u64)).unwrap().correct as usize;
        many += gqco_solve(&inst, &u, 100, &mut ChaCha8Rng::seed_from_u64(k as u64)).unwrap().correct as usize;
    }
    assert!(many >= one, "{many} < {one}");
}

#[test]
fn oracle_benchmark_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec();
    let res = run_benchmark::<f64, _>(&spec, &OracleGenerator::default(), Some(dir.path())).unwrap();
    assert_eq!(res.records.len(), 4 * 6 * 5);
    for row in res.accuracy.iter().filter(|r| r.solver == SolverKind::Gqco) {
        assert_eq!(row.accuracy, 1.0);
        assert_eq!(row.count, 6);
    }
    assert!(res.accuracy.iter().all(|r| r.mean_wall_time >= 0.0));
    let t90 = res.time_to_90.iter().find(|t| t.solver == SolverKind::Gqco && t.n == 5).unwrap();
    assert_eq!(t90.parameter, Some(1.0));
    let brute: Vec<f64> = res.brute.iter().map(|b| b.wall_time).collect();
    assert!(brute.windows(2).all(|w| w[1] > w[0]), "{brute:?}");

    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let back = read_records_csv(&text).unwrap();
    assert_eq!(back, res.records);
    for r in &back {
        let inst = Instance::<f64>::random(r.n, r.problem, r.problem_seed).unwrap();
        replay_record(r, &inst.problem).unwrap();
    }
    let table = read_accuracy_csv(&std::fs::read_to_string(dir.path().join("accuracy.csv")).unwrap()).unwrap();
    assert_eq!(table, res.accuracy);
    match summarize_run(dir.path()).unwrap() {
        RunSummary::Benchmark { rows, records_consistent } => {
            assert!(records_consistent);
            assert_eq!(rows.len(), res.accuracy.len());
        }
        other => panic!("{other:?}"),
    }
    for f in ["time_to_90.csv", "brute_force.csv", "accuracy.svg", "spec.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn benchmark_validation() {
    let model = GqcoModel::<f64>::new(ModelConfig::tiny(), 3).unwrap();
    let spec = BenchmarkSpec { sizes: vec![4], ..small_spec() };
    assert!(matches!(run_benchmark::<f64, _>(&spec, &model, None), Err(GqcoError::Config(_))));
    let bad = BenchmarkSpec { qaoa_layers: vec![], ..small_spec() };
    assert!(matches!(run_benchmark::<f64, _>(&bad, &OracleGenerator::default(), None), Err(GqcoError::Config(_))));
}

#[test]
fn sa_is_nearly_perfect_at_three_qubits() {
    let spec = BenchmarkSpec { problems_per_size: 200, ..BenchmarkSpec::default() };
    let mut ok = 0;
    for inst in spec.instances::<f64>(3).unwrap() {
        let bits = simulated_annealing(&inst.problem, &SaConfig::with_sweeps(100_000, inst.seed)).unwrap();
        ok += inst.truth.is_ground_state(&bits) as usize;
    }
    assert!(ok as f64 / 200.0 >= 0.99);
}

#[test]
fn time_to_90_interpolation() {
    assert_eq!(interpolate_time_to_90(&[(1.0, 0.95, 0.1)]), Some((1.0, 0.1)));
    assert_eq!(interpolate_time_to_90(&[(1.0, 0.5, 1.0), (2.0, 0.8, 2.0)]), None);
    let (p, t) = interpolate_time_to_90(&[(100.0, 1.0, 4.0), (10.0, 0.8, 2.0), (1.0, 0.3, 1.0)]).unwrap();
    assert!((p - 55.0).abs() < 1e-9 && (t - 3.0).abs() < 1e-9);
}

#[test]
fn failure_report_rows() {
    let spec = BenchmarkSpec { sizes: vec![3], problems_per_size: 30, ..small_spec() };
    let instances = spec.instances::<f64>(3).unwrap();
    let oracle = OracleGenerator::default();
    let res = run_benchmark::<f64, _>(&spec, &oracle, None).unwrap();
    assert!(failure_report(&res.records, &instances, &oracle, &[200], 0).unwrap().is_empty());

    let u = UniformTokenModel::default();
    let res = run_benchmark::<f64, _>(&spec, &u, None).unwrap();
    let wrong = res.records.iter().filter(|r| r.solver == SolverKind::Gqco && !r.correct).count();
    assert!(wrong > 0);
    let report = failure_report(&res.records, &instances, &u, &[50, 400], 0).unwrap();
    assert_eq!(report.len(), wrong);
    for e in &report {
        assert_eq!(e.basis_table.len(), 8);
        assert!((e.basis_table.iter().map(|b| b.probability).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.gap > 0.0);
        assert!(!e.resolve.is_empty() && e.resolve.len() <= 2);
    }
}

#[test]
fn near_degenerate_failure_shows_second_gap() {
    // ground state 111 and runner-up 001 are split by 8e-4
    let p = IsingProblem::new(vec![0.0004, 0.0, 1.0], [(0, 1, -1.0)]).unwrap();
    let truth = brute_force_solve(&p).unwrap();
    assert_eq!(truth.ground_states, vec!["111".parse::<BitString>().unwrap()]);
    let vocab = build_vocabulary(20).unwrap();
    let ry = GateSpec::rotation(GateKind::RY, 2, Angle::PlusPiOver3);
    let circuit = Circuit::from_gates(&vocab, 3, vec![ry, ry, ry, GateSpec::rotation(GateKind::RZ, 0, Angle::PlusPiOver3)]).unwrap();
    let fixed = Fixed(circuit);
    let inst = Instance::from_problem(p, 0, 0).unwrap();
    let rec = gqco_solve(&inst, &fixed, 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(rec.answer.to_string(), "001");
    let report = failure_report(&[rec], &[inst], &fixed, &[10, 20], 0).unwrap();
    assert_eq!(report.len(), 1);
    assert!((report[0].second_best_gap.unwrap() - 8e-4).abs() < 1e-12);
    assert!((report[0].gap - 8e-4).abs() < 1e-12);
    assert_eq!(report[0].resolve.iter().map(|r| r.correct).collect::<Vec<_>>(), vec![false, false]);
}

#[test]
fn circuit_stats_table() {
    let spec = BenchmarkSpec { sizes: vec![3, 4], problems_per_size: 5, ..small_spec() };
    let rows = circuit_stats::<f64, _>(&UniformTokenModel::default(), &spec).unwrap();
    assert_eq!(rows[0].qaoa_cnot, 0.0);
    assert_eq!(rows[0].qaoa_cnot_decomposed, 6.0);
    assert_eq!(rows[1].qaoa_cnot_decomposed, 12.0);
    for r in &rows {
        assert!(r.gqco_max_gates <= 2 * r.n);
        assert!(r.gqco_gates >= 4.0);
    }
}

#[test]
fn maxcut_mappings() {
    let tri = maxcut_problem::<f64>(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
    assert_eq!(brute_force_solve(&tri).unwrap().degeneracy(), 6);
    let demo = maxcut_problem::<f64>(6, &DEMO_EDGES).unwrap();
    let truth = brute_force_solve(&demo).unwrap();
    assert_eq!(truth.degeneracy(), 2);
    for g in &truth.ground_states {
        assert!(truth.is_ground_state(&g.complement()));
    }
    assert!(demo.couplings().all(|(_, _, j)| j == 0.5 || j == 1.0));
}

#[test]
fn maxcut_demo_with_oracle() {
    let report = maxcut_demo::<f64, _>(&OracleGenerator::default(), 3).unwrap();
    assert_eq!(report.degeneracy, 2);
    assert!(report.complement_closed);
    let g = &report.solvers[0];
    assert!(g.correct && (g.ground_state_mass - 1.0).abs() < 1e-12);
    assert!(g.shots.iter().all(|s| s.correct));
    assert_eq!(g.shots.iter().map(|s| s.shots).collect::<Vec<_>>(), DEMO_SHOTS.to_vec());
    let q = &report.solvers[1];
    assert_eq!(q.shots.last().unwrap().histogram.iter().map(|h| h.1).sum::<u64>(), 1000);
    assert!(serde_json::to_string(&report).is_ok());
}

#[test]
fn single_shot_success_tracks_peak_mass() {
    let s: StateVector<f64> = run_gates(2, &[Gate::ry(0, 2.0 * 0.7f64.sqrt().acos())]).unwrap();
    let peak = s.probabilities()[0];
    assert!((peak - 0.7).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trials = 5000;
    let hits = (0..trials)
        .filter(|_| crate::circuit::sample_shots(&s, 1, &mut rng).unwrap().mode() == BitString::from_index(2, 0))
        .count();
    assert!((hits as f64 / trials as f64 - peak).abs() < 0.03);
}
