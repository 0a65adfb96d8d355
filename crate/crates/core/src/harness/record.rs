//! Persisted solve records and their CSV form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::full_vocabulary;
use crate::baselines::qaoa_state;
use crate::circuit::{argmax_basis, expectation, run_circuit, Circuit};
use crate::error::{GqcoError, Result};
use crate::ising::{bits_energy, brute_force_solve, is_correct_against, BitString, IsingProblem};
use crate::scalar::Real;

pub const RECORD_HEADER: &str =
    "solver,n,problem,problem_seed,parameter,answer,energy,min_energy,correct,wall_time,expectation,tokens,angles";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Gqco,
    Sa,
    Qaoa,
    Brute,
}

impl SolverKind {
    /// Name of the swept parameter.
    pub fn parameter_name(self) -> &'static str {
        match self {
            Self::Gqco => "samples",
            Self::Sa => "sweeps",
            Self::Qaoa => "layers",
            Self::Brute => "none",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gqco => "gqco",
            Self::Sa => "sa",
            Self::Qaoa => "qaoa",
            Self::Brute => "brute",
        })
    }
}

impl FromStr for SolverKind {
    type Err = GqcoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gqco" => Ok(Self::Gqco),
            "sa" => Ok(Self::Sa),
            "qaoa" => Ok(Self::Qaoa),
            "brute" => Ok(Self::Brute),
            other => Err(GqcoError::config(format!("unknown solver '{other}'"))),
        }
    }
}

/// One solver answer on one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub solver: SolverKind,
    pub n: usize,
    pub problem: usize,
    pub problem_seed: u64,
    pub parameter: u64,
    pub answer: BitString,
    pub energy: f64,
    pub min_energy: f64,
    pub correct: bool,
    pub wall_time: f64,
    /// Expectation of the chosen circuit (GQCO, QAOA).
    pub expectation: Option<f64>,
    pub tokens: Option<Vec<usize>>,
    pub angles: Option<Vec<f64>>,
}

fn list(s: &str) -> Option<Vec<&str>> {
    (!s.is_empty()).then(|| s.split(' ').collect())
}

fn join<X: ToString>(xs: &Option<Vec<X>>) -> String {
    xs.as_ref().map(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")).unwrap_or_default()
}

impl SolveRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.solver,
            self.n,
            self.problem,
            self.problem_seed,
            self.parameter,
            self.answer,
            self.energy,
            self.min_energy,
            self.correct,
            self.wall_time,
            self.expectation.map(|e| e.to_string()).unwrap_or_default(),
            join(&self.tokens),
            join(&self.angles),
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(GqcoError::Format(format!("record row has {} fields, expected 13", f.len())));
        }
        let bad = |what: &str| GqcoError::Format(format!("bad {what} in record row '{line}'"));
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let tokens = list(f[11])
            .map(|v| v.iter().map(|t| t.parse::<usize>().map_err(|_| bad("tokens"))).collect::<Result<Vec<_>>>())
            .transpose()?;
        let angles = list(f[12])
            .map(|v| v.iter().map(|t| t.parse::<f64>().map_err(|_| bad("angles"))).collect::<Result<Vec<_>>>())
            .transpose()?;
        Ok(Self {
            solver: f[0].parse()?,
            n: f[1].parse().map_err(|_| bad("n"))?,
            problem: f[2].parse().map_err(|_| bad("problem"))?,
            problem_seed: f[3].parse().map_err(|_| bad("problem_seed"))?,
            parameter: f[4].parse().map_err(|_| bad("parameter"))?,
            answer: f[5].parse().map_err(|_| bad("answer"))?,
            energy: num(f[6], "energy")?,
            min_energy: num(f[7], "min_energy")?,
            correct: f[8].parse().map_err(|_| bad("correct"))?,
            wall_time: num(f[9], "wall_time")?,
            expectation: if f[10].is_empty() { None } else { Some(num(f[10], "expectation")?) },
            tokens,
            angles,
        })
    }
}

pub fn records_csv(records: &[SolveRecord]) -> String {
    let mut out = format!("{RECORD_HEADER}\n");
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn read_records_csv(text: &str) -> Result<Vec<SolveRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORD_HEADER) {
        return Err(GqcoError::Format("records file has an unexpected header".into()));
    }
    lines.filter(|l| !l.is_empty()).map(SolveRecord::parse_csv_row).collect()
}

/// Accuracy per `(solver, n, parameter)` recomputed from the records alone.
pub fn accuracy_from_records(records: &[SolveRecord]) -> BTreeMap<(SolverKind, usize, u64), f64> {
    let mut tally: BTreeMap<(SolverKind, usize, u64), (usize, usize)> = BTreeMap::new();
    for r in records {
        let t = tally.entry((r.solver, r.n, r.parameter)).or_default();
        t.0 += r.correct as usize;
        t.1 += 1;
    }
    tally.into_iter().map(|(k, (ok, total))| (k, ok as f64 / total as f64)).collect()
}

/// Re-derives a record from its problem: answer energy, correctness and, when a circuit
/// or angle set was stored, the simulated expectation (within 1e-9) and the argmax answer.
pub fn replay_record<T: Real>(record: &SolveRecord, problem: &IsingProblem<T>) -> Result<()> {
    let mismatch = |what: &str| Err(GqcoError::domain(format!("record {} / {} replay mismatch: {what}", record.solver, record.problem)));
    if problem.n() != record.n {
        return mismatch("size");
    }
    if (bits_energy(problem, &record.answer)?.as_f64() - record.energy).abs() > 1e-9 {
        return mismatch("answer energy");
    }
    let truth = brute_force_solve(problem)?;
    if is_correct_against(problem, &truth, &record.answer)? != record.correct {
        return mismatch("correct flag");
    }
    let state = match (&record.tokens, &record.angles) {
        (Some(tokens), _) => Some(run_circuit::<T>(&Circuit::from_tokens(&full_vocabulary(), record.n, tokens.clone())?)?),
        (None, Some(angles)) => Some(qaoa_state(problem, angles)?),
        (None, None) => None,
    };
    if let Some(s) = state {
        let e = expectation(&s, problem)?.as_f64();
        if record.expectation.is_none_or(|x| (x - e).abs() > 1e-9) {
            return mismatch("expectation");
        }
        if argmax_basis(&s) != record.answer {
            return mismatch("argmax answer");
        }
    }
    Ok(())
}
