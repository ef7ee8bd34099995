//! Slowdown tables relative to the per-level optimal traversal.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveTrace;
use crate::bench::{compute_oracle, level_mean_totals, level_table, LevelSample, RunRecord, TraversalKey};
use crate::kernels::{CountVariant, Implementation, KernelId};
use crate::{Error, Result};

/// Relative slack under which a ratio still counts as optimal.
pub const OPTIMAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    Optimal,
    OneToTwo,
    TwoToFive,
    FiveToTwenty,
    OverTwenty,
}

impl Bucket {
    pub fn of(ratio: f64) -> Self {
        if ratio <= 1.0 + OPTIMAL_TOLERANCE {
            Bucket::Optimal
        } else if ratio <= 2.0 {
            Bucket::OneToTwo
        } else if ratio <= 5.0 {
            Bucket::TwoToFive
        } else if ratio <= 20.0 {
            Bucket::FiveToTwenty
        } else {
            Bucket::OverTwenty
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Optimal => "Optimal",
            Bucket::OneToTwo => "1-2x",
            Bucket::TwoToFive => "2-5x",
            Bucket::FiveToTwenty => ">5x",
            Bucket::OverTwenty => ">20x",
        }
    }
}

/// Slowdowns of one traversal relative to its optimal time.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowdownReport {
    pub adaptive: f64,
    pub oracle: f64,
    pub singles: Vec<(Implementation, f64)>,
}

impl SlowdownReport {
    pub fn adaptive_bucket(&self) -> Bucket {
        Bucket::of(self.adaptive)
    }
}

/// Compares the measured kernel time of `trace` and the given baselines
/// against `optimal_time`.
pub fn slowdown_report(
    trace: &AdaptiveTrace,
    optimal_time: f64,
    oracle_time: f64,
    single_kernel_totals: &[(Implementation, f64)],
) -> SlowdownReport {
    SlowdownReport {
        adaptive: trace.kernel_ns() as f64 / optimal_time,
        oracle: oracle_time / optimal_time,
        singles: single_kernel_totals
            .iter()
            .map(|&(imp, t)| (imp, t / optimal_time))
            .collect(),
    }
}

/// One row of the accuracy table. Percentages are of traversals; the
/// `>5x` column includes the `>20x` ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub algorithm: String,
    pub optimal_pct: f64,
    pub one_to_two_pct: f64,
    pub over_five_pct: f64,
    pub over_twenty_pct: f64,
    pub average: f64,
    pub worst: f64,
    pub cases: usize,
}

pub fn summarize(algorithm: &str, ratios: &[f64]) -> StrategyRow {
    let n = ratios.len().max(1) as f64;
    let pct = |pred: &dyn Fn(Bucket) -> bool| {
        100.0 * ratios.iter().filter(|&&r| pred(Bucket::of(r))).count() as f64 / n
    };
    StrategyRow {
        algorithm: algorithm.to_string(),
        optimal_pct: pct(&|b| b == Bucket::Optimal),
        one_to_two_pct: pct(&|b| b == Bucket::OneToTwo),
        over_five_pct: pct(&|b| b >= Bucket::FiveToTwenty),
        over_twenty_pct: pct(&|b| b == Bucket::OverTwenty),
        average: ratios.iter().sum::<f64>() / n,
        worst: ratios.iter().copied().fold(0.0, f64::max),
        cases: ratios.len(),
    }
}

/// Time the benchmark attributes to running `choices[level]` at each level.
pub fn replay_time(
    choices: &[Implementation],
    levels: &BTreeMap<u32, BTreeMap<Implementation, f64>>,
) -> Result<f64> {
    if choices.len() != levels.len() {
        return Err(Error::Coverage(format!(
            "trace has {} levels, benchmark has {}",
            choices.len(),
            levels.len()
        )));
    }
    choices
        .iter()
        .enumerate()
        .map(|(level, imp)| {
            levels
                .get(&(level as u32))
                .and_then(|m| m.get(imp))
                .copied()
                .ok_or_else(|| Error::Coverage(format!("no benchmark time for {imp} at level {level}")))
        })
        .sum()
}

/// Builds the Predicted / Oracle / single-kernel table.
///
/// Every time is expressed in benchmark level means: the optimal traversal
/// sums per-level minima, single kernels sum their own means, the oracle is
/// the best of those sums, and a trace is replayed by summing the means of
/// the implementations it chose.
pub fn accuracy_table(
    samples: &[LevelSample],
    traces: &BTreeMap<TraversalKey, AdaptiveTrace>,
) -> Result<Vec<StrategyRow>> {
    let table = level_table(samples, false)?;
    if table.is_empty() {
        return Err(Error::Coverage("no benchmark samples".into()));
    }
    let optimal: BTreeMap<&TraversalKey, f64> = table
        .iter()
        .map(|(key, levels)| {
            let t = levels
                .values()
                .map(|m| m.values().copied().fold(f64::INFINITY, f64::min))
                .sum();
            (key, t)
        })
        .collect();
    let totals = level_mean_totals(samples);
    let oracle = compute_oracle(&totals)?;

    let mut predicted = Vec::new();
    for (key, trace) in traces {
        let levels = table
            .get(key)
            .ok_or_else(|| Error::Coverage(format!("trace for {} root {} has no benchmark data", key.0, key.1)))?;
        predicted.push(replay_time(&trace.implementations(), levels)? / optimal[key]);
    }
    if predicted.is_empty() {
        return Err(Error::Coverage("missing strategy Predicted: no traces".into()));
    }

    let mut rows = vec![
        summarize("Predicted", &predicted),
        summarize(
            "Oracle",
            &optimal.iter().map(|(key, opt)| oracle[*key].1 / opt).collect::<Vec<_>>(),
        ),
    ];
    for kernel in KernelId::ALL {
        let imp = Implementation::new(kernel, CountVariant::DirectAtomic);
        let mut ratios = Vec::new();
        for (key, opt) in &optimal {
            let total = totals
                .iter()
                .find(|r| (&r.graph_id, r.root) == (&key.0, key.1) && r.implementation() == imp)
                .ok_or_else(|| Error::Coverage(format!("missing strategy {kernel} for {} root {}", key.0, key.1)))?;
            ratios.push(total.total_elapsed_ns / opt);
        }
        rows.push(summarize(kernel.name(), &ratios));
    }
    Ok(rows)
}

pub fn write_report_csv(path: &Path, rows: &[StrategyRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTotal {
    pub graph_id: String,
    pub kernel: KernelId,
    pub variant: CountVariant,
    pub mean_total_ns: f64,
    /// Relative to the slowest implementation on the same graph.
    pub normalized: f64,
}

/// Per graph, each implementation's total averaged over roots, divided by
/// the slowest implementation's average.
pub fn normalized_totals(records: &[RunRecord]) -> Vec<NormalizedTotal> {
    let mut sums: BTreeMap<&str, BTreeMap<Implementation, (f64, usize)>> = BTreeMap::new();
    for r in records {
        let e = sums.entry(&r.graph_id).or_default().entry(r.implementation()).or_default();
        e.0 += r.total_elapsed_ns;
        e.1 += 1;
    }
    let mut out = Vec::new();
    for (graph_id, by_imp) in sums {
        let means: Vec<(Implementation, f64)> = by_imp.into_iter().map(|(i, (s, c))| (i, s / c as f64)).collect();
        let slowest = means.iter().map(|&(_, m)| m).fold(0.0, f64::max);
        for (imp, mean) in means {
            out.push(NormalizedTotal {
                graph_id: graph_id.to_string(),
                kernel: imp.kernel,
                variant: imp.variant,
                mean_total_ns: mean,
                normalized: if slowest > 0.0 { mean / slowest } else { 0.0 },
            });
        }
    }
    out
}

pub fn write_normalized_csv(path: &Path, rows: &[NormalizedTotal]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::LevelRecord;

    fn rows_for(times: &[[f64; 15]]) -> Vec<LevelSample> {
        let mut out = Vec::new();
        for (level, per_imp) in times.iter().enumerate() {
            for (imp, &t) in Implementation::all().zip(per_imp) {
                out.push(LevelSample {
                    graph_id: "g".into(),
                    root: 0,
                    kernel: imp.kernel,
                    variant: imp.variant,
                    level: level as u32,
                    mean_elapsed_ns: t,
                    min_ns: t as u64,
                    frontier_size: 1,
                    discovered_before: 1,
                    new_frontier_count: 0,
                });
            }
        }
        out
    }

    fn trace_of(choices: &[Implementation], times: &[u64]) -> AdaptiveTrace {
        AdaptiveTrace {
            levels: choices
                .iter()
                .zip(times)
                .enumerate()
                .map(|(level, (&implementation, &elapsed_ns))| LevelRecord {
                    level: level as u32,
                    implementation,
                    fallback_used: false,
                    frontier_size: 1,
                    new_frontier_count: 0,
                    elapsed_ns,
                    prediction_ns: 10,
                })
                .collect(),
        }
    }

    #[test]
    fn buckets() {
        assert_eq!(Bucket::of(1.0), Bucket::Optimal);
        assert_eq!(Bucket::of(1.7), Bucket::OneToTwo);
        assert_eq!(Bucket::of(2.0), Bucket::OneToTwo);
        assert_eq!(Bucket::of(3.0), Bucket::TwoToFive);
        assert_eq!(Bucket::of(6.0), Bucket::FiveToTwenty);
        assert_eq!(Bucket::of(21.0), Bucket::OverTwenty);
        assert_eq!(Bucket::of(1.7).label(), "1-2x");
    }

    #[test]
    fn slowdown_ratios() {
        let trace = trace_of(&[Implementation::DEFAULT], &[100]);
        let report = slowdown_report(&trace, 100.0, 150.0, &[(Implementation::DEFAULT, 170.0)]);
        assert_eq!(report.adaptive, 1.0);
        assert_eq!(report.adaptive_bucket(), Bucket::Optimal);
        assert_eq!(report.oracle, 1.5);
        assert_eq!(Bucket::of(report.singles[0].1), Bucket::OneToTwo);
    }

    #[test]
    fn summary_nests_over_twenty_in_over_five() {
        let row = summarize("x", &[1.0, 1.5, 6.0, 30.0]);
        assert_eq!(row.optimal_pct, 25.0);
        assert_eq!(row.one_to_two_pct, 25.0);
        assert_eq!(row.over_five_pct, 50.0);
        assert_eq!(row.over_twenty_pct, 25.0);
        assert_eq!(row.average, 38.5 / 4.0);
        assert_eq!(row.worst, 30.0);
    }

    #[test]
    fn optimal_trace_gives_full_optimal_row() {
        let mut l0 = [50.0; 15];
        l0[3] = 10.0;
        let mut l1 = [40.0; 15];
        l1[9] = 5.0;
        let samples = rows_for(&[l0, l1]);
        let best = [Implementation::from_ordinal(3).unwrap(), Implementation::from_ordinal(9).unwrap()];
        let traces = BTreeMap::from([(("g".to_string(), 0), trace_of(&best, &[1, 1]))]);
        let rows = accuracy_table(&samples, &traces).unwrap();
        assert_eq!(rows[0].algorithm, "Predicted");
        assert_eq!(rows[0].optimal_pct, 100.0);
        assert_eq!(rows[0].average, 1.0);
        let oracle = &rows[1];
        assert_eq!(oracle.algorithm, "Oracle");
        // best single: ordinal 3 -> 10 + 40 = 50 against optimal 15
        assert!((oracle.average - 50.0 / 15.0).abs() < 1e-12);
        for row in &rows[2..] {
            assert!(oracle.average <= row.average);
            for pct in [row.optimal_pct, row.one_to_two_pct, row.over_five_pct, row.over_twenty_pct] {
                assert!((0.0..=100.0).contains(&pct));
            }
        }
        assert_eq!(rows.len(), 7);
    }

    #[test]
    fn missing_traces_name_predicted() {
        let samples = rows_for(&[[1.0; 15]]);
        let err = accuracy_table(&samples, &BTreeMap::new()).unwrap_err().to_string();
        assert!(err.contains("Predicted"), "{err}");
    }

    #[test]
    fn normalization_against_slowest() {
        let rec = |imp: Implementation, root, t| RunRecord {
            graph_id: "g".into(),
            root,
            kernel: imp.kernel,
            variant: imp.variant,
            total_elapsed_ns: t,
            level_count: 1,
        };
        let a = Implementation::DEFAULT;
        let b = Implementation::from_ordinal(5).unwrap();
        let rows = normalized_totals(&[rec(a, 0, 10.0), rec(a, 1, 30.0), rec(b, 0, 40.0), rec(b, 1, 40.0)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].normalized, 0.5);
        assert_eq!(rows[1].normalized, 1.0);
    }
}
