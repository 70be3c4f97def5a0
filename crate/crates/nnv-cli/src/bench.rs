//! Seeded benchmark over the six solver groups.

use std::time::{Duration, Instant};

use nnv_core::{Payload, Status, VerificationProblem};
use nnv_solvers::{deadline, is_counter_example};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::generate::{random_instance, Encoding, Instance};
use crate::oracle::oracle_verify;
use crate::registry::{lookup, Params};
use crate::report::{table_header, PayloadDesc, RunRecord, StatusDesc};

/// Solvers of a group, each with the encoding it receives.
pub fn group(g: usize) -> Option<&'static [(&'static str, Encoding)]> {
    use Encoding::*;
    const GROUPS: [&[(&str, Encoding)]; 6] = [
        &[("ai2", Polytope), ("exactreach", Polytope), ("maxsens", Polytope)],
        &[("ilp", Complement), ("mipverify", Complement), ("nsverify", Complement)],
        &[("duality", Halfspace), ("convdual", Halfspace)],
        &[("fastlin", Halfspace), ("fastlip", Halfspace), ("ilp", Halfspace), ("mipverify", Halfspace)],
        &[("bab", Interval), ("dlv", Interval), ("reluval", Interval), ("sherlock", Interval)],
        &[("planet", Complement), ("reluplex", Complement), ("reluval", Interval)],
    ];
    GROUPS.get(g.checked_sub(1)?).copied()
}

/// Runs one solver with default parameters, checking any counter example it returns.
pub fn run_solver(
    name: &str,
    p: &VerificationProblem,
    oracle: Option<Status>,
    timeout: Option<Duration>,
    timing: bool,
) -> RunRecord {
    let entry = lookup(name).expect("registered solver");
    let params = Params::new();
    if let Err(e) = entry.check(p, &params) {
        return RunRecord::failed(name, e.to_string(), None, oracle);
    }
    let start = Instant::now();
    let out = deadline::with_deadline(timeout, || entry.run(p, &params));
    let time = timing.then(|| start.elapsed().as_secs_f64());
    match out {
        Ok(r) => {
            let valid = match &r.payload {
                Payload::CounterExample(x) => Some(is_counter_example(p, x)),
                _ => None,
            };
            RunRecord::new(name, &r, time, oracle, valid)
        }
        Err(e) => RunRecord::failed(name, e.to_string(), time, oracle),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub relu_nodes: usize,
    pub oracle_status: StatusDesc,
    pub records: Vec<RunRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub solver: String,
    pub holds: usize,
    pub violated: usize,
    pub unknown: usize,
    pub errors: usize,
    /// Definite answers that contradict the oracle.
    pub disagree: usize,
    /// `holds` on an instance the oracle found violated.
    pub unsound: usize,
    pub invalid_counter_examples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: usize,
    pub instances: Vec<InstanceReport>,
    pub summary: Vec<SolverSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub count: usize,
    pub groups: Vec<GroupReport>,
}

pub struct BenchOptions {
    pub groups: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub timing: bool,
}

/// The first `count` instances drawn from `seed`.
pub fn instances(seed: u64, count: usize) -> nnv_core::Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

pub fn run_bench(opts: &BenchOptions) -> nnv_core::Result<BenchReport> {
    let insts = instances(opts.seed, opts.count)?;
    let mut groups = Vec::new();
    for &g in &opts.groups {
        let solvers = group(g).ok_or_else(|| nnv_core::Error::Invalid(format!("no group {g}")))?;
        let mut reports = Vec::new();
        for (index, inst) in insts.iter().enumerate() {
            let oracle = oracle_verify(&inst.problem(Encoding::Halfspace)?)?.status;
            let mut records = Vec::new();
            for &(name, enc) in solvers {
                records.push(run_solver(name, &inst.problem(enc)?, Some(oracle), opts.timeout, opts.timing));
            }
            reports.push(InstanceReport {
                index,
                relu_nodes: inst.network.relu_count(),
                oracle_status: oracle.into(),
                records,
            });
        }
        let summary = solvers
            .iter()
            .enumerate()
            .map(|(k, &(name, _))| summarize(name, reports.iter().map(|r| &r.records[k]), opts.timing))
            .collect();
        groups.push(GroupReport { group: g, instances: reports, summary });
    }
    Ok(BenchReport { seed: opts.seed, count: opts.count, groups })
}

fn summarize<'a>(name: &str, records: impl Iterator<Item = &'a RunRecord>, timing: bool) -> SolverSummary {
    let mut s = SolverSummary { solver: name.to_string(), time_s: timing.then_some(0.0), ..Default::default() };
    for r in records {
        match (&r.payload, r.status) {
            (PayloadDesc::Error(_), _) => s.errors += 1,
            (_, StatusDesc::Holds) => s.holds += 1,
            (_, StatusDesc::Violated) => s.violated += 1,
            (_, StatusDesc::Unknown) => s.unknown += 1,
        }
        if r.agree == Some(false) {
            s.disagree += 1;
        }
        if r.status == StatusDesc::Holds && r.oracle_status == Some(StatusDesc::Violated) {
            s.unsound += 1;
        }
        if r.valid == Some(false) {
            s.invalid_counter_examples += 1;
        }
        if let (Some(t), Some(acc)) = (r.time_s, s.time_s.as_mut()) {
            *acc += t;
        }
    }
    s
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&format!("group {} ({} instances, seed {})\n", g.group, self.count, self.seed));
            out.push_str(&format!(
                "{:<11} {:>6} {:>8} {:>7} {:>6} {:>8} {:>8} {:>9}\n",
                "solver", "holds", "violated", "unknown", "errors", "disagree", "unsound", "time_s"
            ));
            for s in &g.summary {
                let time = s.time_s.map_or("-".to_string(), |t| format!("{t:.3}"));
                out.push_str(&format!(
                    "{:<11} {:>6} {:>8} {:>7} {:>6} {:>8} {:>8} {:>9}\n",
                    s.solver, s.holds, s.violated, s.unknown, s.errors, s.disagree, s.unsound, time
                ));
            }
            out.push('\n');
        }
        out
    }

    /// Per-run rows for every group.
    pub fn to_detail_table(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            for inst in &g.instances {
                out.push_str(&format!("group {} instance {}\n{}\n", g.group, inst.index, table_header()));
                for r in &inst.records {
                    out.push_str(&r.table_row());
                    out.push('\n');
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_use_registered_solvers() {
        for g in 1..=6 {
            for (name, _) in group(g).unwrap() {
                assert!(lookup(name).is_ok());
            }
        }
        assert!(group(0).is_none() && group(7).is_none());
        let five: Vec<_> = group(5).unwrap().iter().map(|s| s.0).collect();
        assert_eq!(five, ["bab", "dlv", "reluval", "sherlock"]);
    }

    #[test]
    fn small_bench_is_sound() {
        let opts = BenchOptions { groups: vec![2, 3], count: 3, seed: 11, timeout: None, timing: false };
        let r = run_bench(&opts).unwrap();
        for g in &r.groups {
            for s in &g.summary {
                assert_eq!(s.unsound, 0, "{}", s.solver);
                assert_eq!(s.invalid_counter_examples, 0, "{}", s.solver);
                assert_eq!(s.errors, 0, "{}", s.solver);
            }
        }
        assert_eq!(run_bench(&opts).unwrap().to_json(), r.to_json());
    }
}
