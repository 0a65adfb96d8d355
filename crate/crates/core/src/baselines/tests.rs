use super::*;
use crate::circuit::{circuit_metrics, run_gates, Gate};
use crate::ising::{brute_force_solve, is_correct_against, random_problem, BitString};

fn sa_accuracy(n: usize, sweeps: usize, instances: u64) -> f64 {
    let mut ok = 0;
    for k in 0..instances {
        let p = random_problem::<f64>(n, 1000 + k).unwrap();
        let truth = brute_force_solve(&p).unwrap();
        let bits = simulated_annealing(&p, &SaConfig::with_sweeps(sweeps, k)).unwrap();
        ok += is_correct_against(&p, &truth, &bits).unwrap() as usize;
    }
    ok as f64 / instances as f64
}

#[test]
fn sa_single_spin() {
    let p = IsingProblem::fields_only(vec![1.0]).unwrap();
    assert_eq!(simulated_annealing(&p, &SaConfig::with_sweeps(100, 3)).unwrap().to_string(), "1");
}

#[test]
fn sa_matches_oracle_at_many_sweeps() {
    let acc = sa_accuracy(4, 100_000, 100);
    assert!(acc >= 0.95, "{acc}");
}

#[test]
fn sa_accuracy_does_not_drop_with_sweeps() {
    let accs: Vec<f64> = [1, 100, 10_000].iter().map(|&s| sa_accuracy(6, s, 100)).collect();
    assert!(accs.windows(2).all(|w| w[1] >= w[0]), "{accs:?}");
    assert!(accs[0] < 1.0);
}

#[test]
fn sa_trace_and_local_stability() {
    for k in 0..20 {
        let p = random_problem::<f64>(5, k).unwrap();
        let run = simulated_annealing_trace(&p, &SaConfig::with_sweeps(2000, k)).unwrap();
        assert_eq!(run.trace.len(), 2000);
        assert!(run.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!((run.trace[1999] - run.best_energy).abs() < 1e-9);
        let e = bits_energy(&p, &run.best).unwrap();
        for q in 0..5 {
            let mut bits: Vec<bool> = (0..5).map(|i| run.best.bit(i)).collect();
            bits[q] = !bits[q];
            assert!(bits_energy(&p, &BitString::from_bits(&bits)).unwrap() >= e);
        }
    }
}

#[test]
fn sa_is_deterministic_and_validates() {
    let p = random_problem::<f64>(6, 2).unwrap();
    let cfg = SaConfig::with_sweeps(50, 9);
    assert_eq!(simulated_annealing_trace(&p, &cfg).unwrap(), simulated_annealing_trace(&p, &cfg).unwrap());
    assert!(simulated_annealing(&p, &SaConfig::with_sweeps(0, 0)).is_err());
    assert!(simulated_annealing(&p, &SaConfig { t_start: Some(0.001), ..cfg.clone() }).is_err());
    let zero = IsingProblem::<f64>::fields_only(vec![0.0; 3]).unwrap();
    assert_eq!(SaConfig::default().temperatures(&zero).unwrap(), (0.01, 0.01));
    assert_eq!(SaConfig::default().temperatures(&p).unwrap().0, 2.0 * p.max_abs_coefficient());
}

#[test]
fn qaoa_on_constant_hamiltonian() {
    let p = IsingProblem::<f64>::new(vec![0.0; 3], [(0, 1, 0.0), (1, 2, 0.0)]).unwrap();
    let table = crate::ising::energy_table(&p).unwrap();
    for angles in [[0.0, 0.0], [0.7, -1.3], [2.1, 0.4]] {
        let s = qaoa_state(&p, &angles).unwrap();
        assert!(crate::circuit::expectation_with_table(&s, &table).abs() < 1e-12);
    }
    let run = qaoa_optimize(&p, &QaoaConfig::default()).unwrap();
    assert!(run.expectation.abs() < 1e-12);
    assert!(crate::ising::is_correct_solution(&p, &run.answer).unwrap());
}

#[test]
fn one_layer_qaoa_misses_the_threshold_at_three_qubits() {
    let mut ok = 0;
    for k in 0..200 {
        let p = random_problem::<f64>(3, 5000 + k).unwrap();
        let run = qaoa_optimize(&p, &QaoaConfig::with_layers(1, k)).unwrap();
        assert!(run.expectation <= run.start_expectation);
        assert!(run.evals <= 5 * 200);
        assert!((run.state.norm_sqr() - 1.0).abs() < 1e-12);
        ok += crate::ising::is_correct_solution(&p, &run.answer).unwrap() as usize;
    }
    let acc = ok as f64 / 200.0;
    assert!(acc < 0.9, "{acc}");
}

#[test]
fn cost_layer_is_diagonal() {
    let p = random_problem::<f64>(4, 8).unwrap();
    let prep: Vec<Gate<f64>> = [Gate::h(0), Gate::ry(1, 0.4), Gate::cnot(0, 2), Gate::rx(3, 1.1)].into();
    let before = run_gates(4, &prep).unwrap().probabilities();
    let mut all = prep.clone();
    // gamma only: drop the H prefix and the RX mixer
    let cost = qaoa_gates(&p, &[0.37, 0.0], false).unwrap();
    all.extend(cost.into_iter().filter(|g| g.kind.is_diagonal()));
    let after = run_gates(4, &all).unwrap().probabilities();
    assert!(before.iter().zip(&after).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn qaoa_gate_counting() {
    let p = random_problem::<f64>(3, 1).unwrap();
    let native = circuit_metrics(&qaoa_gates(&p, &[0.3, 0.2], false).unwrap());
    let split = circuit_metrics(&qaoa_gates(&p, &[0.3, 0.2], true).unwrap());
    assert_eq!(native.cnot_count, 0);
    assert_eq!(split.cnot_count, 6);
    let a = qaoa_state(&p, &[0.3, 0.2]).unwrap();
    let b = run_gates(3, &qaoa_gates(&p, &[0.3, 0.2], true).unwrap()).unwrap();
    assert!(a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-12));
    for decompose in [false, true] {
        let depths: Vec<usize> = (1..=4)
            .map(|layers| circuit_metrics(&qaoa_gates(&p, &vec![0.1; 2 * layers], decompose).unwrap()).depth)
            .collect();
        let step = depths[1] - depths[0];
        assert!(step > 0);
        assert!(depths.windows(2).all(|w| w[1] - w[0] == step), "{depths:?}");
    }
}

#[test]
fn timed_solvers_report_energy() {
    let p = random_problem::<f64>(4, 3).unwrap();
    let bf = timed(&p, brute_force_answer).unwrap();
    assert!(bf.wall_time >= 0.0);
    assert_eq!(bf.energy, brute_force_solve(&p).unwrap().min_energy);
    let sa = timed(&p, |p| simulated_annealing(p, &SaConfig::with_sweeps(1000, 1))).unwrap();
    assert!(sa.energy >= bf.energy);
}
