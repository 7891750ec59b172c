//! Expected normalised rank across benchmarks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::records::{BenchmarkRecord, CellStatus};
use crate::error::{invalid, Result};

/// Placement of one model in one benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub benchmark: String,
    pub mean_test_accuracy: f64,
    /// 1-based; tied models share the mean of their positions.
    pub rank: f64,
    pub field_size: usize,
}

impl Placement {
    pub fn normalised(&self) -> f64 {
        self.rank / self.field_size as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRanking {
    pub model: String,
    pub placements: Vec<Placement>,
    pub expected_normalised_rank: f64,
}

/// Rankings sorted by expected normalised rank (best first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub models: Vec<ModelRanking>,
}

/// Mean of `rank / field size` over the benchmarks a model entered.
pub fn expected_normalised_rank(placements: &[(f64, usize)]) -> f64 {
    placements.iter().map(|&(r, n)| r / n as f64).sum::<f64>() / placements.len() as f64
}

/// Ranks of `scores` (higher is better), 1-based, ties averaged.
pub fn tied_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Within each benchmark, models are ranked by test accuracy averaged over
/// the sweep's datasets (successful cells only).
pub fn rank_models(records: &[BenchmarkRecord]) -> Result<RankTable> {
    if records.is_empty() {
        return Err(invalid("no records to rank"));
    }
    let mut acc: BTreeMap<&str, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in records {
        if let (CellStatus::Ok, Some(a)) = (&r.status, r.test_accuracy) {
            acc.entry(&r.benchmark).or_default().entry(r.model_label()).or_default().push(a);
        }
    }
    if acc.is_empty() {
        return Err(invalid("no successful records to rank"));
    }
    let mut per_model: BTreeMap<String, Vec<Placement>> = BTreeMap::new();
    for (bench, models) in &acc {
        let names: Vec<&String> = models.keys().collect();
        let means: Vec<f64> = models.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let ranks = tied_ranks(&means);
        for (i, name) in names.into_iter().enumerate() {
            per_model.entry(name.clone()).or_default().push(Placement {
                benchmark: bench.to_string(),
                mean_test_accuracy: means[i],
                rank: ranks[i],
                field_size: means.len(),
            });
        }
    }
    let mut models: Vec<ModelRanking> = per_model
        .into_iter()
        .map(|(model, placements)| {
            let pairs: Vec<(f64, usize)> = placements.iter().map(|p| (p.rank, p.field_size)).collect();
            ModelRanking {
                model,
                expected_normalised_rank: expected_normalised_rank(&pairs),
                placements,
            }
        })
        .collect();
    models.sort_by(|a, b| a.expected_normalised_rank.total_cmp(&b.expected_normalised_rank));
    Ok(RankTable { models })
}

impl RankTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,expected_normalised_rank,benchmarks\n");
        for m in &self.models {
            let detail: Vec<String> = m
                .placements
                .iter()
                .map(|p| format!("{}:{}/{}", p.benchmark, p.rank, p.field_size))
                .collect();
            s.push_str(&format!("{},{:.6},{}\n", m.model, m.expected_normalised_rank, detail.join(" ")));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_share_the_mean_position() {
        assert_eq!(tied_ranks(&[0.9, 0.7, 0.9, 0.5]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(tied_ranks(&[0.3, 0.3, 0.3]), vec![2.0; 3]);
        assert!((expected_normalised_rank(&[(1.0, 4), (3.0, 3)]) - 0.625).abs() < 1e-15);
        assert!(rank_models(&[]).is_err());
    }

    proptest! {
        #[test]
        fn ranks_sum_and_monotone_invariance(scores in proptest::collection::vec(0u8..10, 1..20)) {
            let s: Vec<f64> = scores.iter().map(|&v| v as f64 / 10.0).collect();
            let r = tied_ranks(&s);
            let n = s.len() as f64;
            prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
            let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(tied_ranks(&t), r.clone());
            for i in 0..s.len() {
                for j in 0..s.len() {
                    if s[i] > s[j] {
                        prop_assert!(r[i] < r[j]);
                    }
                }
            }
        }
    }
}
