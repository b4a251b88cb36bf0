//! Learning traces and Nash-regret.

use crate::error::{Error, Result};
use crate::eval::NashGapReport;
use crate::game::JointPolicy;

#[derive(Clone, Debug)]
pub struct TraceRecord {
    /// 1-based iteration index `t` of the recorded policy `pi^(t)`.
    pub iteration: usize,
    pub policy: JointPolicy,
    pub gaps: NashGapReport,
}

/// Ordered per-iteration gap records of one learning run.
#[derive(Clone, Debug, Default)]
pub struct LearnTrace {
    records: Vec<TraceRecord>,
}

impl LearnTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; iteration indices must be strictly increasing.
    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(Error::arg(format!(
                    "trace iteration {} does not follow {}",
                    record.iteration, last.iteration
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gaps.max_gap).collect()
    }

    /// Mean of `max_gap` over the recorded iterations. With a cadence above
    /// one this is the regret of the subsampled sequence.
    pub fn nash_regret(&self) -> Result<f64> {
        nash_regret(&self.max_gaps())
    }

    /// `(t*, max_gap(t*))` for the first record attaining the minimum gap.
    pub fn best_iterate(&self) -> Result<(usize, f64)> {
        let (idx, gap) = best_index(&self.max_gaps())?;
        Ok((self.records[idx].iteration, gap))
    }

    pub fn final_policy(&self) -> Option<&JointPolicy> {
        self.records.last().map(|r| &r.policy)
    }

    /// Mean per-player L1 distance of every recorded policy to `reference`.
    pub fn distances_to(&self, reference: &JointPolicy) -> Vec<f64> {
        self.records.iter().map(|r| r.policy.mean_l1_distance(reference)).collect()
    }
}

/// `(1/T) sum_t gaps[t]`.
pub fn nash_regret(gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Running Nash-regret for every prefix length `T = 1..=len`.
pub fn prefix_regrets(gaps: &[f64]) -> Vec<f64> {
    let mut total = 0.0;
    gaps.iter()
        .enumerate()
        .map(|(t, g)| {
            total += g;
            total / (t + 1) as f64
        })
        .collect()
}

fn best_index(gaps: &[f64]) -> Result<(usize, f64)> {
    gaps.iter()
        .copied()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
            Some((_, b)) if b <= g => best,
            _ => Some((i, g)),
        })
        .ok_or(Error::EmptyTrace)
}
