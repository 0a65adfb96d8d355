use num_complex::Complex;
use rand::Rng;

use super::gate::{Gate, GateKind, GateSpec};
use super::vocab::Circuit;
use crate::error::{GqcoError, Result};
use crate::ising::{energy_table, BitString, IsingProblem};
use crate::scalar::Real;

/// Largest register the dense simulator will allocate.
pub const MAX_SIM_QUBITS: usize = 24;

/// Dense pure state; qubit 0 is the least-significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// `|0...0>` on `n` qubits.
    pub fn zero_state(n: usize) -> Result<Self> {
        if n > MAX_SIM_QUBITS {
            return Err(GqcoError::resource(format!("{n} qubits exceed simulator bound {MAX_SIM_QUBITS}")));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[0] = Complex::new(T::one(), T::zero());
        Ok(Self { n, amps })
    }

    pub fn basis_state(bits: &BitString) -> Result<Self> {
        let mut s = Self::zero_state(bits.len())?;
        s.amps[0] = Complex::new(T::zero(), T::zero());
        s.amps[bits.index() as usize] = Complex::new(T::one(), T::zero());
        Ok(s)
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(GqcoError::domain("amplitude count must be a power of two"));
        }
        Ok(Self { n: amps.len().trailing_zeros() as usize, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `g` in place.
    pub fn apply(&mut self, g: &Gate<T>) -> Result<()> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.n) {
            return Err(GqcoError::domain(format!("{} on qubit {q} of a {}-qubit state", g.kind, self.n)));
        }
        let half = g.theta / T::lit(2.0);
        let (c, s) = (half.cos(), half.sin());
        let zero = T::zero();
        match g.kind {
            GateKind::Identity => {}
            GateKind::H => {
                let r = T::FRAC_1_SQRT_2();
                self.apply_1q(g.qubits()[0], [[Complex::new(r, zero), Complex::new(r, zero)], [Complex::new(r, zero), Complex::new(-r, zero)]]);
            }
            GateKind::RX => self.apply_1q(
                g.qubits()[0],
                [[Complex::new(c, zero), Complex::new(zero, -s)], [Complex::new(zero, -s), Complex::new(c, zero)]],
            ),
            GateKind::RY => self.apply_1q(
                g.qubits()[0],
                [[Complex::new(c, zero), Complex::new(-s, zero)], [Complex::new(s, zero), Complex::new(c, zero)]],
            ),
            GateKind::RZ => {
                let bit = 1usize << g.qubits()[0];
                let (p0, p1) = (Complex::new(c, -s), Complex::new(c, s));
                for (z, a) in self.amps.iter_mut().enumerate() {
                    *a *= if z & bit == 0 { p0 } else { p1 };
                }
            }
            GateKind::CNOT => {
                let (cb, tb) = (1usize << g.qubits()[0], 1usize << g.qubits()[1]);
                for z in 0..self.amps.len() {
                    if z & cb != 0 && z & tb == 0 {
                        self.amps.swap(z, z | tb);
                    }
                }
            }
            GateKind::RZZ => {
                let (ab, bb) = (1usize << g.qubits()[0], 1usize << g.qubits()[1]);
                let (same, diff) = (Complex::new(c, -s), Complex::new(c, s));
                for (z, a) in self.amps.iter_mut().enumerate() {
                    *a *= if ((z & ab) != 0) == ((z & bb) != 0) { same } else { diff };
                }
            }
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex<T>; 2]; 2]) {
        let bit = 1usize << q;
        for z in 0..self.amps.len() {
            if z & bit == 0 {
                let (a0, a1) = (self.amps[z], self.amps[z | bit]);
                self.amps[z] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[z | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
}

/// Returns the state after applying `g`.
pub fn apply_gate<T: Real>(s: &StateVector<T>, g: &Gate<T>) -> Result<StateVector<T>> {
    let mut out = s.clone();
    out.apply(g)?;
    Ok(out)
}

/// Runs arbitrary gates from `|0...0>`.
pub fn run_gates<T: Real>(n: usize, gates: &[Gate<T>]) -> Result<StateVector<T>> {
    let mut s = StateVector::zero_state(n)?;
    for g in gates {
        s.apply(g)?;
    }
    Ok(s)
}

pub fn run_pool_gates<T: Real>(n: usize, gates: &[GateSpec]) -> Result<StateVector<T>> {
    let mut s = StateVector::zero_state(n)?;
    for g in gates {
        s.apply(&g.to_gate())?;
    }
    Ok(s)
}

/// Simulates a generated circuit from `|0...0>`.
pub fn run_circuit<T: Real>(c: &Circuit) -> Result<StateVector<T>> {
    run_pool_gates(c.n, &c.gates)
}

/// `<psi| H |psi>` for the diagonal Ising observable.
pub fn expectation<T: Real>(s: &StateVector<T>, p: &IsingProblem<T>) -> Result<T> {
    if s.n() != p.n() {
        return Err(GqcoError::domain(format!("state has {} qubits, problem {}", s.n(), p.n())));
    }
    Ok(expectation_with_table(s, &energy_table(p)?))
}

/// Expectation against a precomputed basis-energy table.
pub fn expectation_with_table<T: Real>(s: &StateVector<T>, energies: &[T]) -> T {
    debug_assert_eq!(energies.len(), s.amps.len());
    s.amps.iter().zip(energies).map(|(a, &e)| a.norm_sqr() * e).sum()
}

/// Most probable basis state; ties go to the lowest basis index.
pub fn argmax_basis<T: Real>(s: &StateVector<T>) -> BitString {
    let mut best = 0usize;
    let mut best_p = T::neg_infinity();
    for (z, a) in s.amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > best_p {
            best = z;
            best_p = p;
        }
    }
    BitString::from_index(s.n, best as u64)
}

/// Measurement counts over basis indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub n: usize,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, bits: &BitString) -> u64 {
        self.counts[bits.index() as usize]
    }

    /// Most frequent outcome; ties go to the lowest basis index.
    pub fn mode(&self) -> BitString {
        let mut best = 0;
        for (z, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = z;
            }
        }
        BitString::from_index(self.n, best as u64)
    }

    /// `basis,count` lines for every non-zero bin, in basis-index order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("basis,count\n");
        for (z, &c) in self.counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            out.push_str(&format!("{},{c}\n", BitString::from_index(self.n, z as u64)));
        }
        out
    }
}

/// Draws `shots` independent computational-basis measurements.
pub fn sample_shots<T: Real, R: Rng + ?Sized>(s: &StateVector<T>, shots: usize, rng: &mut R) -> Result<Histogram> {
    if shots == 0 {
        return Err(GqcoError::domain("at least one shot required"));
    }
    let mut cumulative = Vec::with_capacity(s.amps.len());
    let mut acc = 0.0f64;
    for a in &s.amps {
        acc += a.norm_sqr().as_f64();
        cumulative.push(acc);
    }
    let mut counts = vec![0u64; s.amps.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let z = cumulative.partition_point(|&c| c <= u).min(counts.len() - 1);
        counts[z] += 1;
    }
    Ok(Histogram { n: s.n, counts })
}
