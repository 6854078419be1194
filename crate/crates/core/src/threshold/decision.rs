use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::labels::{adjudicate, DomainLabel, DomainLabelKind};
use super::partition::Partition;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub index: usize,
    pub n_in: usize,
    pub n_out: usize,
    pub proportion_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDecision {
    /// First partition (1-based) with more out-of-domain than in-domain
    /// labels; `None` when no partition trips the rule.
    pub cut_partition: Option<usize>,
    /// Upper rank bound of the retained region; 0 when nothing is retained.
    pub retained_rank_max: usize,
    pub per_partition_stats: Vec<PartitionStats>,
    pub retained_ids: Vec<String>,
    pub empty_retention: bool,
    /// Set when an explicit rank cutoff replaced the partition boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retain_top_override: Option<usize>,
}

/// Cuts at the first partition, in rank order, whose adjudicated labels have
/// more out-of-domain than in-domain items; every partition before it is
/// retained. Labels for ids outside the partitions are ignored.
pub fn select_threshold(partitions: &[Partition], labels: &[DomainLabel]) -> Result<ThresholdDecision> {
    let adjudicated = adjudicate(labels);
    let mut stats = Vec::with_capacity(partitions.len());
    for p in partitions {
        let (mut n_in, mut n_out) = (0, 0);
        for id in &p.member_ids {
            match adjudicated.get(id) {
                Some(DomainLabelKind::InDomain) => n_in += 1,
                Some(DomainLabelKind::OutOfDomain) => n_out += 1,
                None => {}
            }
        }
        if n_in + n_out == 0 {
            return Err(Error::Param(format!("partition {} has no labeled samples", p.index)));
        }
        stats.push(PartitionStats {
            index: p.index,
            n_in,
            n_out,
            proportion_in: n_in as f64 / (n_in + n_out) as f64,
        });
    }
    let cut = stats.iter().find(|s| s.n_out > s.n_in).map(|s| s.index);
    let retained: Vec<&Partition> = partitions
        .iter()
        .take_while(|p| cut.is_none_or(|c| p.index < c))
        .collect();
    let retained_rank_max = retained.last().map_or(0, |p| p.rank_range.1);
    let retained_ids: Vec<String> = retained
        .iter()
        .flat_map(|p| p.member_ids.iter().cloned())
        .collect();
    Ok(ThresholdDecision {
        cut_partition: cut,
        retained_rank_max,
        empty_retention: retained_ids.is_empty(),
        per_partition_stats: stats,
        retained_ids,
        retain_top_override: None,
    })
}

impl ThresholdDecision {
    /// Replaces the retained region with the top `n` ranks. Statistics and the
    /// rule's cut partition are kept for the record.
    pub fn with_retain_top(mut self, partitions: &[Partition], n: usize) -> ThresholdDecision {
        let ids: Vec<String> = partitions
            .iter()
            .flat_map(|p| p.member_ids.iter().cloned())
            .take(n)
            .collect();
        self.retained_rank_max = ids.len();
        self.empty_retention = ids.is_empty();
        self.retained_ids = ids;
        self.retain_top_override = Some(n);
        self
    }

    pub fn in_domain_counts(&self) -> BTreeMap<usize, (usize, usize)> {
        self.per_partition_stats
            .iter()
            .map(|s| (s.index, (s.n_in, s.n_out)))
            .collect()
    }
}
