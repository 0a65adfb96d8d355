//! Accuracy / runtime sweeps over solvers and problem sizes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{accuracy_from_records, records_csv, SolveRecord, SolverKind};
use super::{gqco_solve, median, Instance};
use crate::baselines::{qaoa_optimize, simulated_annealing, QaoaConfig, SaConfig};
use crate::error::{GqcoError, Result};
use crate::generator::CircuitGenerator;
use crate::ising::{bits_energy, brute_force_solve, is_correct_against};
use crate::scalar::Real;
use crate::seed::{derive_seed, streams};

pub const ACCURACY_HEADER: &str = "solver,n,parameter,accuracy,mean_wall_time,count";
pub const TIME_TO_90_HEADER: &str = "solver,n,parameter_to_90,wall_time_to_90";
pub const BRUTE_HEADER: &str = "n,wall_time";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub sizes: Vec<usize>,
    pub problems_per_size: usize,
    pub gqco_samples: Vec<usize>,
    pub sa_sweeps: Vec<usize>,
    pub qaoa_layers: Vec<usize>,
    pub seed: u64,
    /// Each record's wall time is the median over this many identical solves.
    pub timing_repeats: usize,
    /// Solve problems concurrently (wall times then include contention).
    pub parallel: bool,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            sizes: vec![3, 4, 5, 6],
            problems_per_size: 200,
            gqco_samples: vec![1, 5, 10, 20, 100],
            sa_sweeps: vec![100, 1_000, 10_000, 100_000],
            qaoa_layers: vec![1, 2, 3, 4],
            seed: 0,
            timing_repeats: 5,
            parallel: false,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.gqco_samples.is_empty() || self.sa_sweeps.is_empty() || self.qaoa_layers.is_empty() {
            return Err(GqcoError::config("benchmark lists must be non-empty"));
        }
        if self.problems_per_size == 0 || self.timing_repeats == 0 {
            return Err(GqcoError::config("problems_per_size and timing_repeats must be >= 1"));
        }
        if self.gqco_samples.contains(&0) || self.sa_sweeps.contains(&0) || self.qaoa_layers.contains(&0) {
            return Err(GqcoError::config("swept parameters must be >= 1"));
        }
        Ok(())
    }

    pub fn problem_seed(&self, n: usize, index: usize) -> u64 {
        derive_seed(self.seed, streams::BENCH_PROBLEM, ((n as u64) << 32) | index as u64)
    }

    fn solver_seed(&self, n: usize, index: usize, kind: SolverKind, parameter: u64) -> u64 {
        let base = derive_seed(self.seed, streams::BENCH_SOLVER, ((n as u64) << 32) | index as u64);
        derive_seed(base, kind as u64, parameter)
    }

    pub fn instances<T: Real>(&self, n: usize) -> Result<Vec<Instance<T>>> {
        (0..self.problems_per_size).map(|k| Instance::random(n, k, self.problem_seed(n, k))).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRow {
    pub solver: SolverKind,
    pub n: usize,
    pub parameter: u64,
    pub accuracy: f64,
    pub mean_wall_time: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeTo90Row {
    pub solver: SolverKind,
    pub n: usize,
    pub parameter: Option<f64>,
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteRow {
    pub n: usize,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct BenchmarkResult {
    pub records: Vec<SolveRecord>,
    pub accuracy: Vec<AccuracyRow>,
    pub time_to_90: Vec<TimeTo90Row>,
    pub brute: Vec<BruteRow>,
}

fn repeat_timed(repeats: usize, mut solve: impl FnMut() -> Result<SolveRecord>) -> Result<SolveRecord> {
    let mut first = solve()?;
    let mut times = vec![first.wall_time];
    for _ in 1..repeats {
        times.push(solve()?.wall_time);
    }
    first.wall_time = median(times);
    Ok(first)
}

fn baseline_record<T: Real>(inst: &Instance<T>, kind: SolverKind, parameter: u64, seed: u64) -> Result<SolveRecord> {
    let start = Instant::now();
    let (answer, expectation, angles) = match kind {
        SolverKind::Sa => (simulated_annealing(&inst.problem, &SaConfig::with_sweeps(parameter as usize, seed))?, None, None),
        SolverKind::Qaoa => {
            let run = qaoa_optimize(&inst.problem, &QaoaConfig::with_layers(parameter as usize, seed))?;
            (run.answer, Some(run.expectation), Some(run.angles))
        }
        SolverKind::Brute => (brute_force_solve(&inst.problem)?.ground_states[0], None, None),
        SolverKind::Gqco => unreachable!("gqco records come from gqco_solve"),
    };
    let wall_time = start.elapsed().as_secs_f64();
    Ok(SolveRecord {
        solver: kind,
        n: inst.problem.n(),
        problem: inst.index,
        problem_seed: inst.seed,
        parameter,
        energy: bits_energy(&inst.problem, &answer)?.as_f64(),
        min_energy: inst.truth.min_energy.as_f64(),
        correct: is_correct_against(&inst.problem, &inst.truth, &answer)?,
        answer,
        wall_time,
        expectation,
        tokens: None,
        angles,
    })
}

fn solve_instance<T: Real, G: CircuitGenerator<T> + ?Sized>(
    spec: &BenchmarkSpec,
    generator: &G,
    inst: &Instance<T>,
) -> Result<Vec<SolveRecord>> {
    let n = inst.problem.n();
    let mut out = Vec::new();
    for &m in &spec.gqco_samples {
        let seed = spec.solver_seed(n, inst.index, SolverKind::Gqco, m as u64);
        out.push(repeat_timed(spec.timing_repeats, || gqco_solve(inst, generator, m, &mut ChaCha8Rng::seed_from_u64(seed)))?);
    }
    for (kind, params) in [(SolverKind::Sa, &spec.sa_sweeps), (SolverKind::Qaoa, &spec.qaoa_layers)] {
        for &p in params {
            let seed = spec.solver_seed(n, inst.index, kind, p as u64);
            out.push(repeat_timed(spec.timing_repeats, || baseline_record(inst, kind, p as u64, seed))?);
        }
    }
    Ok(out)
}

/// Per-problem brute-force time: median of five batches, each long enough to time reliably.
fn time_brute_force<T: Real>(instances: &[Instance<T>]) -> Result<f64> {
    let run = || -> Result<()> {
        for inst in instances {
            std::hint::black_box(brute_force_solve(&inst.problem)?);
        }
        Ok(())
    };
    let start = Instant::now();
    run()?;
    let once = start.elapsed().as_secs_f64().max(1e-9);
    let reps = ((0.01 / once).ceil() as usize).max(1);
    let mut times = Vec::with_capacity(5);
    for _ in 0..5 {
        let start = Instant::now();
        for _ in 0..reps {
            run()?;
        }
        times.push(start.elapsed().as_secs_f64() / (reps * instances.len()) as f64);
    }
    Ok(median(times))
}

/// First parameter reaching 0.9 accuracy, interpolated linearly in accuracy between the
/// bracketing settings; the wall time is interpolated with the same weight.
pub fn interpolate_time_to_90(points: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let i = sorted.iter().position(|&(_, acc, _)| acc >= 0.9)?;
    if i == 0 {
        return Some((sorted[0].0, sorted[0].2));
    }
    let (p0, a0, t0) = sorted[i - 1];
    let (p1, a1, t1) = sorted[i];
    let w = (0.9 - a0) / (a1 - a0);
    Some((p0 + w * (p1 - p0), t0 + w * (t1 - t0)))
}

fn summarize(records: &[SolveRecord]) -> Vec<AccuracyRow> {
    let acc = accuracy_from_records(records);
    let mut times: BTreeMap<(SolverKind, usize, u64), (f64, usize)> = BTreeMap::new();
    for r in records {
        let t = times.entry((r.solver, r.n, r.parameter)).or_default();
        t.0 += r.wall_time;
        t.1 += 1;
    }
    acc.into_iter()
        .map(|((solver, n, parameter), accuracy)| {
            let (sum, count) = times[&(solver, n, parameter)];
            AccuracyRow { solver, n, parameter, accuracy, mean_wall_time: sum / count as f64, count }
        })
        .collect()
}

fn time_to_90_rows(rows: &[AccuracyRow]) -> Vec<TimeTo90Row> {
    let mut groups: BTreeMap<(SolverKind, usize), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.solver, r.n)).or_default().push((r.parameter as f64, r.accuracy, r.mean_wall_time));
    }
    groups
        .into_iter()
        .map(|((solver, n), pts)| {
            let hit = interpolate_time_to_90(&pts);
            TimeTo90Row { solver, n, parameter: hit.map(|h| h.0), wall_time: hit.map(|h| h.1) }
        })
        .collect()
}

/// Runs every solver on every problem.
pub fn run_benchmark<T: Real, G: CircuitGenerator<T> + ?Sized>(
    spec: &BenchmarkSpec,
    generator: &G,
    out_dir: Option<&Path>,
) -> Result<BenchmarkResult> {
    spec.validate()?;
    if let Some(&n) = spec.sizes.iter().find(|&&n| !generator.supports(n)) {
        return Err(GqcoError::config(format!("{} has no expert for n = {n}", generator.name())));
    }
    let mut records = Vec::new();
    let mut brute = Vec::new();
    for &n in &spec.sizes {
        let instances = spec.instances::<T>(n)?;
        let per: Vec<Vec<SolveRecord>> = if spec.parallel {
            instances.par_iter().map(|inst| solve_instance(spec, generator, inst)).collect::<Result<_>>()?
        } else {
            instances.iter().map(|inst| solve_instance(spec, generator, inst)).collect::<Result<_>>()?
        };
        records.extend(per.into_iter().flatten());
        brute.push(BruteRow { n, wall_time: time_brute_force(&instances)? });
    }
    let accuracy = summarize(&records);
    let time_to_90 = time_to_90_rows(&accuracy);
    let result = BenchmarkResult { records, accuracy, time_to_90, brute };
    if let Some(dir) = out_dir {
        write_outputs(dir, spec, &result)?;
    }
    Ok(result)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_outputs(dir: &Path, spec: &BenchmarkSpec, r: &BenchmarkResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("spec.json"), serde_json::to_string_pretty(spec)?)?;
    fs::write(dir.join("records.csv"), records_csv(&r.records))?;
    let mut acc = format!("{ACCURACY_HEADER}\n");
    for a in &r.accuracy {
        writeln!(acc, "{},{},{},{},{},{}", a.solver, a.n, a.parameter, a.accuracy, a.mean_wall_time, a.count).expect("string write");
    }
    fs::write(dir.join("accuracy.csv"), acc)?;
    let mut t90 = format!("{TIME_TO_90_HEADER}\n");
    for t in &r.time_to_90 {
        writeln!(t90, "{},{},{},{}", t.solver, t.n, opt(t.parameter), opt(t.wall_time)).expect("string write");
    }
    fs::write(dir.join("time_to_90.csv"), t90)?;
    let mut bf = format!("{BRUTE_HEADER}\n");
    for b in &r.brute {
        writeln!(bf, "{},{}", b.n, b.wall_time).expect("string write");
    }
    fs::write(dir.join("brute_force.csv"), bf)?;
    fs::write(dir.join("accuracy.svg"), accuracy_svg(&r.accuracy))?;
    Ok(())
}

pub fn read_accuracy_csv(text: &str) -> Result<Vec<AccuracyRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(ACCURACY_HEADER) {
        return Err(GqcoError::Format("accuracy file has an unexpected header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || GqcoError::Format(format!("bad accuracy row '{l}'"));
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(AccuracyRow {
                solver: f[0].parse()?,
                n: f[1].parse().map_err(|_| bad())?,
                parameter: f[2].parse().map_err(|_| bad())?,
                accuracy: f[3].parse().map_err(|_| bad())?,
                mean_wall_time: f[4].parse().map_err(|_| bad())?,
                count: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Accuracy against problem size, one polyline per solver setting.
fn accuracy_svg(rows: &[AccuracyRow]) -> String {
    const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
    let (w, h, pad) = (720.0, 420.0, 50.0);
    let sizes: Vec<usize> = {
        let mut s: Vec<usize> = rows.iter().map(|r| r.n).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let (lo, hi) = (*sizes.first().unwrap_or(&0) as f64, *sizes.last().unwrap_or(&1) as f64);
    let x = |n: usize| pad + (n as f64 - lo) / (hi - lo).max(1.0) * (w - 3.0 * pad);
    let y = |a: f64| h - pad - a * (h - 2.0 * pad);
    let mut series: BTreeMap<(SolverKind, u64), Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows {
        series.entry((r.solver, r.parameter)).or_default().push((r.n, r.accuracy));
    }
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n");
    writeln!(svg, "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", y(0.0), w - 2.0 * pad, y(0.0)).expect("string write");
    writeln!(svg, "<line x1=\"{pad}\" y1=\"{}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>", y(0.0), y(1.0)).expect("string write");
    for a in [0.0, 0.5, 0.9, 1.0] {
        writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{a}</text>", pad - 4.0, y(a) + 4.0).expect("string write");
    }
    for &n in &sizes {
        writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n={n}</text>", x(n), h - pad + 16.0).expect("string write");
    }
    for (k, ((solver, p), pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(n, a)| format!("{:.1},{:.1}", x(n), y(a))).collect();
        writeln!(svg, "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>", path.join(" ")).expect("string write");
        writeln!(svg, "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{solver} {}={p}</text>", w - 2.0 * pad + 8.0, pad + 13.0 * k as f64, solver.parameter_name())
            .expect("string write");
    }
    svg.push_str("</svg>\n");
    svg
}
