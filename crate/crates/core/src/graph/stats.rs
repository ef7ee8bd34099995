use serde::{Deserialize, Serialize};

use super::Graph;

/// Five-number summary plus population standard deviation of a degree
/// sequence. Quantiles interpolate linearly between order statistics at
/// position `(n - 1) * p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub stddev: f64,
}

impl DegreeSummary {
    /// Summarizes `values`. Returns all zeros for an empty slice.
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return DegreeSummary {
                min: 0.0,
                q1: 0.0,
                median: 0.0,
                q3: 0.0,
                max: 0.0,
                stddev: 0.0,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let variance = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        DegreeSummary {
            min: sorted[0],
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            stddev: variance.sqrt(),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.min, self.q1, self.median, self.q3, self.max, self.stddev]
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub vertex_count: u64,
    pub edge_count: u64,
    pub out_degree_summary: DegreeSummary,
    pub in_degree_summary: DegreeSummary,
    pub abs_degree_summary: DegreeSummary,
}

pub fn compute_stats(graph: &Graph) -> GraphStats {
    let n = graph.vertex_count();
    let out: Vec<f64> = (0..n as u32).map(|v| graph.out_degree(v) as f64).collect();
    let inc: Vec<f64> = (0..n as u32).map(|v| graph.in_degree(v) as f64).collect();
    let abs: Vec<f64> = out.iter().zip(&inc).map(|(o, i)| o + i).collect();
    GraphStats {
        vertex_count: n as u64,
        edge_count: graph.edge_count() as u64,
        out_degree_summary: DegreeSummary::from_values(&out),
        in_degree_summary: DegreeSummary::from_values(&inc),
        abs_degree_summary: DegreeSummary::from_values(&abs),
    }
}
