//! Ising problems, spin assignments and the exhaustive ground-state oracle.
//!
//! The observable is `H = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i` with spins
//! `s_i = 1 - 2 b_i`, so bit 0 is spin +1 (the `|0>` eigenstate of Z).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GqcoError, Result};
use crate::scalar::Real;

/// Largest qubit / variable count a problem may have.
pub const MAX_QUBITS: usize = 20;

/// Largest problem size `brute_force_solve` will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Absolute tolerance used when scoring an answer against the exact optimum.
pub const CORRECTNESS_TOL: f64 = 1e-12;

/// An Ising instance with external fields `h` and pairwise couplings `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem<T> {
    n: usize,
    h: Vec<T>,
    j: BTreeMap<(usize, usize), T>,
}

impl<T: Real> IsingProblem<T> {
    /// Builds a problem from fields and `(i, j, J_ij)` triples.
    ///
    /// Pairs are canonicalised to `i < j`; duplicate pairs and self-couplings are rejected.
    pub fn new(h: Vec<T>, couplings: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let n = h.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(GqcoError::domain(format!("problem size {n} outside 1..={MAX_QUBITS}")));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(GqcoError::domain("non-finite external field"));
        }
        let mut j = BTreeMap::new();
        for (a, b, v) in couplings {
            if a == b {
                return Err(GqcoError::domain(format!("self-coupling on spin {a}")));
            }
            let key = (a.min(b), a.max(b));
            if key.1 >= n {
                return Err(GqcoError::domain(format!("coupling {key:?} out of range for n={n}")));
            }
            if !v.is_finite() {
                return Err(GqcoError::domain(format!("non-finite coupling {key:?}")));
            }
            if j.insert(key, v).is_some() {
                return Err(GqcoError::domain(format!("duplicate coupling {key:?}")));
            }
        }
        Ok(Self { n, h, j })
    }

    /// Problem with the given fields and no couplings.
    pub fn fields_only(h: Vec<T>) -> Result<Self> {
        Self::new(h, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    /// Couplings in lexicographic `(i, j)` order.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.j.iter().map(|(&(a, b), &v)| (a, b, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.j.len()
    }

    /// `J_ij` for either index order, `None` when the pair is not coupled.
    pub fn coupling(&self, i: usize, j: usize) -> Option<T> {
        self.j.get(&(i.min(j), i.max(j))).copied()
    }

    /// Dense symmetric coupling matrix with zero diagonal.
    pub fn coupling_matrix(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.n]; self.n];
        for (a, b, v) in self.couplings() {
            m[a][b] = v;
            m[b][a] = v;
        }
        m
    }

    /// Largest absolute coefficient (0 for an all-zero problem).
    pub fn max_abs_coefficient(&self) -> T {
        self.h
            .iter()
            .copied()
            .chain(self.j.values().copied())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            h: self.h.iter().map(|&v| v * c).collect(),
            j: self.j.iter().map(|(&k, &v)| (k, v * c)).collect(),
        }
    }

    /// Relabels spin `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let mut h = vec![T::zero(); self.n];
        for (i, &v) in self.h.iter().enumerate() {
            h[perm[i]] = v;
        }
        Self::new(h, self.couplings().map(|(a, b, v)| (perm[a], perm[b], v)))
    }

    /// Converts every coefficient to another scalar type.
    pub fn cast<U: Real>(&self) -> IsingProblem<U> {
        IsingProblem {
            n: self.n,
            h: self.h.iter().map(|v| U::lit(v.as_f64())).collect(),
            j: self.j.iter().map(|(&k, v)| (k, U::lit(v.as_f64()))).collect(),
        }
    }

    /// Coefficient heat-map: `h_i` on the diagonal and `J_ij` off it.
    pub fn coefficient_matrix(&self) -> Vec<Vec<T>> {
        let mut m = self.coupling_matrix();
        for (i, &v) in self.h.iter().enumerate() {
            m[i][i] = v;
        }
        m
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(GqcoError::domain("permutation length mismatch"));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(GqcoError::domain("not a permutation"));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Draws a fully connected instance with every `h_i` and `J_ij` i.i.d. uniform on `[-1, 1]`.
///
/// Fields are drawn first, then couplings in lexicographic pair order.
pub fn random_problem<T: Real>(n: usize, seed: u64) -> Result<IsingProblem<T>> {
    if !(3..=MAX_QUBITS).contains(&n) {
        return Err(GqcoError::domain(format!("random problems need 3 <= n <= {MAX_QUBITS}, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-1.0..=1.0))).collect();
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            couplings.push((a, b, T::lit(rng.random_range(-1.0..=1.0))));
        }
    }
    IsingProblem::new(h, couplings)
}

/// Computational-basis label over `n` qubits; qubit `q` is bit `q` of `index`.
///
/// Displayed with qubit 0 leftmost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    n: usize,
    index: u64,
}

impl BitString {
    pub fn from_index(n: usize, index: u64) -> Self {
        debug_assert!(n == 64 || index < (1u64 << n));
        Self { n, index }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let index = bits.iter().enumerate().fold(0u64, |acc, (q, &b)| acc | ((b as u64) << q));
        Self { n: bits.len(), index }
    }

    pub fn from_spins(spins: &SpinAssignment) -> Self {
        Self::from_bits(&spins.spins().iter().map(|&s| s < 0).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn bit(&self, q: usize) -> bool {
        (self.index >> q) & 1 == 1
    }

    pub fn spins(&self) -> SpinAssignment {
        SpinAssignment { spins: (0..self.n).map(|q| if self.bit(q) { -1 } else { 1 }).collect() }
    }

    /// The bitwise complement (all spins flipped).
    pub fn complement(&self) -> Self {
        let mask = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        Self { n: self.n, index: !self.index & mask }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = GqcoError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(GqcoError::domain(format!("invalid bit character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.len() > 64 {
            return Err(GqcoError::domain("bitstring longer than 64"));
        }
        Ok(Self::from_bits(&bits))
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Spin values in `{+1, -1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinAssignment {
    spins: Vec<i8>,
}

impl SpinAssignment {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(GqcoError::domain("spins must be +1 or -1"));
        }
        Ok(Self { spins })
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self { spins: self.spins.iter().map(|&s| -s).collect() }
    }
}

/// Evaluates the Hamiltonian on a spin assignment.
pub fn energy<T: Real>(p: &IsingProblem<T>, a: &SpinAssignment) -> Result<T> {
    if a.len() != p.n() {
        return Err(GqcoError::domain(format!("assignment length {} != problem size {}", a.len(), p.n())));
    }
    Ok(energy_unchecked(p, a.spins()))
}

fn energy_unchecked<T: Real>(p: &IsingProblem<T>, s: &[i8]) -> T {
    let spin = |i: usize| if s[i] > 0 { T::one() } else { -T::one() };
    let mut e = T::zero();
    for (a, b, v) in p.couplings() {
        e += v * spin(a) * spin(b);
    }
    for (i, &v) in p.h().iter().enumerate() {
        e += v * spin(i);
    }
    e
}

/// Energy of a basis label.
pub fn bits_energy<T: Real>(p: &IsingProblem<T>, bits: &BitString) -> Result<T> {
    energy(p, &bits.spins())
}

/// Energies of all `2^n` basis states, indexed by basis index.
pub fn energy_table<T: Real>(p: &IsingProblem<T>) -> Result<Vec<T>> {
    energy_table_bounded(p, BRUTE_FORCE_LIMIT)
}

fn energy_table_bounded<T: Real>(p: &IsingProblem<T>, limit: usize) -> Result<Vec<T>> {
    let n = p.n();
    if n > limit {
        return Err(GqcoError::resource(format!("cannot enumerate 2^{n} states (limit 2^{limit})")));
    }
    let mut spins = vec![1i8; n];
    Ok((0..1u64 << n)
        .map(|z| {
            for (q, s) in spins.iter_mut().enumerate() {
                *s = if (z >> q) & 1 == 1 { -1 } else { 1 };
            }
            energy_unchecked(p, &spins)
        })
        .collect())
}

/// Exact minimum energy and every basis state attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<T> {
    pub min_energy: T,
    pub max_energy: T,
    /// Ground states in ascending basis-index order.
    pub ground_states: Vec<BitString>,
}

impl<T: Real> GroundTruth<T> {
    pub fn degeneracy(&self) -> usize {
        self.ground_states.len()
    }

    pub fn is_ground_state(&self, bits: &BitString) -> bool {
        self.ground_states.binary_search(bits).is_ok()
    }
}

/// Enumerates all assignments.
pub fn brute_force_solve<T: Real>(p: &IsingProblem<T>) -> Result<GroundTruth<T>> {
    brute_force_bounded(p, BRUTE_FORCE_LIMIT)
}

pub(crate) fn brute_force_bounded<T: Real>(p: &IsingProblem<T>, limit: usize) -> Result<GroundTruth<T>> {
    let table = energy_table_bounded(p, limit)?;
    Ok(ground_truth_from_table(p.n(), &table))
}

/// Ground truth from a precomputed energy table.
pub fn ground_truth_from_table<T: Real>(n: usize, table: &[T]) -> GroundTruth<T> {
    let min_energy = table.iter().copied().fold(T::infinity(), T::min);
    let max_energy = table.iter().copied().fold(T::neg_infinity(), T::max);
    let ground_states = table
        .iter()
        .enumerate()
        .filter(|(_, &e)| e == min_energy)
        .map(|(z, _)| BitString::from_index(n, z as u64))
        .collect();
    GroundTruth { min_energy, max_energy, ground_states }
}

/// True iff `bits` attains the exact optimum within [`CORRECTNESS_TOL`].
pub fn is_correct_solution<T: Real>(p: &IsingProblem<T>, bits: &BitString) -> Result<bool> {
    let truth = brute_force_solve(p)?;
    is_correct_against(p, &truth, bits)
}

/// Same as [`is_correct_solution`] with a precomputed oracle result.
pub fn is_correct_against<T: Real>(p: &IsingProblem<T>, truth: &GroundTruth<T>, bits: &BitString) -> Result<bool> {
    if bits.len() != p.n() {
        return Err(GqcoError::domain(format!("bitstring length {} != problem size {}", bits.len(), p.n())));
    }
    let e = bits_energy(p, bits)?;
    Ok((e - truth.min_energy).abs().as_f64() <= CORRECTNESS_TOL)
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    n: usize,
    h: Vec<f64>,
    #[serde(rename = "J")]
    j: Vec<(usize, usize, f64)>,
}

impl<T: Real> Serialize for IsingProblem<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProblemJson {
            n: self.n,
            h: self.h.iter().map(|v| v.as_f64()).collect(),
            j: self.couplings().map(|(a, b, v)| (a, b, v.as_f64())).collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for IsingProblem<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ProblemJson::deserialize(d)?;
        if raw.h.len() != raw.n {
            return Err(serde::de::Error::custom(format!("h has {} entries, expected n={}", raw.h.len(), raw.n)));
        }
        IsingProblem::new(
            raw.h.into_iter().map(T::lit).collect(),
            raw.j.into_iter().map(|(a, b, v)| (a, b, T::lit(v))),
        )
        .map_err(serde::de::Error::custom)
    }
}
