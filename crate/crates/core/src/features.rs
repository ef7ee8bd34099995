//! Feature vectors for the per-level predictor and training-set
//! construction from benchmark rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::{argmin_implementation, LevelSample};
use crate::graph::{DegreeSummary, GraphStats, VertexId};
use crate::kernels::{CountVariant, Implementation, KernelId};
use crate::{Error, Result};

/// The 24 scalar features, in their canonical flattened order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    VertexCount,
    EdgeCount,
    FrontierAbs,
    FrontierPct,
    DiscoveredAbs,
    DiscoveredPct,
    OutDegMin,
    OutDegQ1,
    OutDegMedian,
    OutDegQ3,
    OutDegMax,
    OutDegStddev,
    InDegMin,
    InDegQ1,
    InDegMedian,
    InDegQ3,
    InDegMax,
    InDegStddev,
    AbsDegMin,
    AbsDegQ1,
    AbsDegMedian,
    AbsDegQ3,
    AbsDegMax,
    AbsDegStddev,
}

impl Feature {
    pub const COUNT: usize = 24;

    pub const ALL: [Feature; Feature::COUNT] = [
        Feature::VertexCount,
        Feature::EdgeCount,
        Feature::FrontierAbs,
        Feature::FrontierPct,
        Feature::DiscoveredAbs,
        Feature::DiscoveredPct,
        Feature::OutDegMin,
        Feature::OutDegQ1,
        Feature::OutDegMedian,
        Feature::OutDegQ3,
        Feature::OutDegMax,
        Feature::OutDegStddev,
        Feature::InDegMin,
        Feature::InDegQ1,
        Feature::InDegMedian,
        Feature::InDegQ3,
        Feature::InDegMax,
        Feature::InDegStddev,
        Feature::AbsDegMin,
        Feature::AbsDegQ1,
        Feature::AbsDegMedian,
        Feature::AbsDegQ3,
        Feature::AbsDegMax,
        Feature::AbsDegStddev,
    ];

    const NAMES: [&'static str; Feature::COUNT] = [
        "vertex_count",
        "edge_count",
        "frontier_abs",
        "frontier_pct",
        "discovered_abs",
        "discovered_pct",
        "out_deg.min",
        "out_deg.q1",
        "out_deg.median",
        "out_deg.q3",
        "out_deg.max",
        "out_deg.stddev",
        "in_deg.min",
        "in_deg.q1",
        "in_deg.median",
        "in_deg.q3",
        "in_deg.max",
        "in_deg.stddev",
        "abs_deg.min",
        "abs_deg.q1",
        "abs_deg.median",
        "abs_deg.q3",
        "abs_deg.max",
        "abs_deg.stddev",
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self.index()]
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Feature::ALL[i])
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub vertex_count: f64,
    pub edge_count: f64,
    pub frontier_abs: f64,
    pub frontier_pct: f64,
    pub discovered_abs: f64,
    pub discovered_pct: f64,
    pub out_deg: DegreeSummary,
    pub in_deg: DegreeSummary,
    pub abs_deg: DegreeSummary,
}

impl FeatureVector {
    #[inline]
    pub fn get(&self, feature: Feature) -> f64 {
        let deg = |s: &DegreeSummary, i: usize| match i {
            0 => s.min,
            1 => s.q1,
            2 => s.median,
            3 => s.q3,
            4 => s.max,
            _ => s.stddev,
        };
        match feature.index() {
            0 => self.vertex_count,
            1 => self.edge_count,
            2 => self.frontier_abs,
            3 => self.frontier_pct,
            4 => self.discovered_abs,
            5 => self.discovered_pct,
            i @ 6..=11 => deg(&self.out_deg, i - 6),
            i @ 12..=17 => deg(&self.in_deg, i - 12),
            i => deg(&self.abs_deg, i - 18),
        }
    }

    pub fn to_array(&self) -> [f64; Feature::COUNT] {
        Feature::ALL.map(|f| self.get(f))
    }

    pub fn from_array(values: &[f64; Feature::COUNT]) -> Self {
        let deg = |o: usize| DegreeSummary {
            min: values[o],
            q1: values[o + 1],
            median: values[o + 2],
            q3: values[o + 3],
            max: values[o + 4],
            stddev: values[o + 5],
        };
        FeatureVector {
            vertex_count: values[0],
            edge_count: values[1],
            frontier_abs: values[2],
            frontier_pct: values[3],
            discovered_abs: values[4],
            discovered_pct: values[5],
            out_deg: deg(6),
            in_deg: deg(12),
            abs_deg: deg(18),
        }
    }

    /// Values of `selection`, in selection order.
    pub fn project(&self, selection: &FeatureSelection) -> Vec<f64> {
        selection.features().iter().map(|&f| self.get(f)).collect()
    }
}

/// Ordered, duplicate-free subset of [`Feature`]s fed to the tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSelection(Vec<Feature>);

impl FeatureSelection {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidParams("feature selection is empty".into()));
        }
        let unique: BTreeSet<_> = features.iter().collect();
        if unique.len() != features.len() {
            return Err(Error::InvalidParams("feature selection has duplicates".into()));
        }
        Ok(FeatureSelection(features))
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let features = names
            .iter()
            .map(|n| n.as_ref().parse())
            .collect::<Result<Vec<Feature>>>()?;
        Self::new(features)
    }

    /// Graph size, discovered percentage, out-degree distribution and
    /// absolute frontier size.
    pub fn default_model() -> Self {
        FeatureSelection(vec![
            Feature::VertexCount,
            Feature::EdgeCount,
            Feature::DiscoveredPct,
            Feature::OutDegMin,
            Feature::OutDegQ1,
            Feature::OutDegMedian,
            Feature::OutDegQ3,
            Feature::OutDegMax,
            Feature::OutDegStddev,
            Feature::FrontierAbs,
        ])
    }

    pub fn all() -> Self {
        FeatureSelection(Feature::ALL.to_vec())
    }

    /// Looks up a named preset: `default` or `all`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default_model()),
            "all" => Ok(Self::all()),
            other => Err(Error::InvalidParams(format!("unknown feature selection {other:?}"))),
        }
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|f| f.name()).collect()
    }
}

/// Builds the runtime feature vector for a level whose frontier holds
/// `frontier_abs` vertices, out of `discovered_abs` discovered so far.
pub fn extract_runtime_features(
    stats: &GraphStats,
    frontier_abs: u64,
    discovered_abs: u64,
) -> Result<FeatureVector> {
    if stats.vertex_count == 0 {
        return Err(Error::InvalidParams("graph has no vertices".into()));
    }
    if frontier_abs > discovered_abs || discovered_abs > stats.vertex_count {
        return Err(Error::InvalidParams(format!(
            "inconsistent counters: frontier {frontier_abs}, discovered {discovered_abs}, |V| {}",
            stats.vertex_count
        )));
    }
    let n = stats.vertex_count as f64;
    Ok(FeatureVector {
        vertex_count: n,
        edge_count: stats.edge_count as f64,
        frontier_abs: frontier_abs as f64,
        frontier_pct: frontier_abs as f64 / n,
        discovered_abs: discovered_abs as f64,
        discovered_pct: discovered_abs as f64 / n,
        out_deg: stats.out_degree_summary,
        in_deg: stats.in_degree_summary,
        abs_deg: stats.abs_degree_summary,
    })
}

/// Which per-level statistic labels a training sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelTime {
    #[default]
    Mean,
    Min,
}

/// Fastest implementation among the samples of one (graph, root, level);
/// ties go to the lower ordinal.
pub fn label_level(samples_for_level: &[&LevelSample], time: LabelTime) -> Result<Implementation> {
    let present: BTreeSet<Implementation> =
        samples_for_level.iter().map(|s| s.implementation()).collect();
    if let Some(missing) = Implementation::all().find(|i| !present.contains(i)) {
        let where_ = samples_for_level
            .first()
            .map(|s| format!("{} root {} level {}", s.graph_id, s.root, s.level))
            .unwrap_or_else(|| "empty level".into());
        return Err(Error::Coverage(format!("{where_}: no sample for {missing}")));
    }
    let timed = samples_for_level.iter().map(|s| {
        let t = match time {
            LabelTime::Mean => s.mean_elapsed_ns,
            LabelTime::Min => s.min_ns as f64,
        };
        (s.implementation(), t)
    });
    Ok(argmin_implementation(timed).expect("fifteen samples").0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: FeatureVector,
    pub label: Implementation,
    pub graph_id: String,
    pub root: VertexId,
    pub level: u32,
}

/// One labeled sample per measured (graph, root, level). Feature vectors are
/// stored in full; the tree projects them through its selection.
pub fn build_training_set(
    samples: &[LevelSample],
    stats: &BTreeMap<String, GraphStats>,
    time: LabelTime,
) -> Result<Vec<TrainingSample>> {
    let mut grouped: BTreeMap<(&str, VertexId, u32), Vec<&LevelSample>> = BTreeMap::new();
    for s in samples {
        grouped.entry((&s.graph_id, s.root, s.level)).or_default().push(s);
    }
    grouped
        .into_iter()
        .map(|((graph_id, root, level), rows)| {
            let graph_stats = stats
                .get(graph_id)
                .ok_or_else(|| Error::UnknownGraph(graph_id.to_string()))?;
            let first = rows[0];
            let features =
                extract_runtime_features(graph_stats, first.frontier_size, first.discovered_before)?;
            Ok(TrainingSample {
                features,
                label: label_level(&rows, time)?,
                graph_id: graph_id.to_string(),
                root,
                level,
            })
        })
        .collect()
}

fn training_header() -> Vec<String> {
    let mut header = vec!["graph_id".to_string(), "root".into(), "level".into()];
    header.extend(Feature::ALL.iter().map(|f| f.name().to_string()));
    header.push("label_kernel".into());
    header.push("label_variant".into());
    header
}

pub fn write_training_csv(path: &Path, samples: &[TrainingSample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(training_header())?;
    for s in samples {
        let mut row = vec![s.graph_id.clone(), s.root.to_string(), s.level.to_string()];
        row.extend(s.features.to_array().iter().map(|v| v.to_string()));
        row.push(s.label.kernel.to_string());
        row.push(s.label.variant.to_string());
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_training_csv(path: &Path) -> Result<Vec<TrainingSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != training_header() {
        return Err(Error::Format("unexpected training.csv header".into()));
    }
    let bad = |line: usize, what: &str| Error::Parse {
        line,
        message: what.to_string(),
    };
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> { row[j].parse().map_err(|_| bad(line, "bad number")) };
        let mut values = [0.0; Feature::COUNT];
        for (k, v) in values.iter_mut().enumerate() {
            *v = num(3 + k)?;
        }
        let kernel: KernelId = row[3 + Feature::COUNT].parse()?;
        let variant: CountVariant = row[4 + Feature::COUNT].parse()?;
        out.push(TrainingSample {
            features: FeatureVector::from_array(&values),
            label: Implementation::new(kernel, variant),
            graph_id: row[0].to_string(),
            root: row[1].parse().map_err(|_| bad(line, "bad root"))?,
            level: row[2].parse().map_err(|_| bad(line, "bad level"))?,
        });
    }
    Ok(out)
}
