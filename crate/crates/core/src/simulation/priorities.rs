//! Splitting a population into priority groups from age-group percentages.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VdmError};

/// Chennai census age distribution (0-9, 10-19, 20-54, 55-64, 65-74, 75+),
/// in percent. Index 0 maps to priority 1; the oldest group is priority 6.
pub const CHENNAI_AGE_PERCENTAGES: [f64; 6] = [14.02, 15.34, 56.38, 7.87, 4.09, 2.31];

pub const PERCENT_SUM_TOLERANCE: f64 = 0.1;

/// Integer rounding rule for group quotas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApportionmentRule {
    /// Every group except the first is rounded to nearest; the first
    /// (lowest-priority) group takes whatever is left. Falls back to
    /// largest remainder if that would leave it negative.
    #[default]
    ResidualToFirst,
    /// Hamilton's method: floor every quota, then hand the leftover units
    /// to the largest fractional parts (ties to the lower group).
    LargestRemainder,
}

/// Head count per priority level (index 0 = level 1) for `n` persons.
pub fn stratified_priorities(percentages: &[f64], n: u64) -> Result<Vec<u64>> {
    apportion(percentages, n, ApportionmentRule::default())
}

pub fn apportion(percentages: &[f64], n: u64, rule: ApportionmentRule) -> Result<Vec<u64>> {
    if percentages.is_empty() {
        return Err(VdmError::invalid("percentage vector is empty"));
    }
    if percentages.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(VdmError::invalid(format!(
            "percentages must be finite and >= 0: {percentages:?}"
        )));
    }
    let sum: f64 = percentages.iter().sum();
    if (sum - 100.0).abs() > PERCENT_SUM_TOLERANCE {
        return Err(VdmError::invalid(format!(
            "percentages sum to {sum}, expected 100 +- {PERCENT_SUM_TOLERANCE}"
        )));
    }
    if n == 0 {
        return Err(VdmError::invalid("population must be >= 1"));
    }

    let quotas: Vec<f64> = percentages.iter().map(|p| p / 100.0 * n as f64).collect();
    match rule {
        ApportionmentRule::LargestRemainder => Ok(largest_remainder(&quotas, n)),
        ApportionmentRule::ResidualToFirst => {
            let mut counts: Vec<u64> = quotas.iter().map(|q| q.round() as u64).collect();
            let rest: u64 = counts[1..].iter().sum();
            if rest > n {
                return Ok(largest_remainder(&quotas, n));
            }
            counts[0] = n - rest;
            Ok(counts)
        }
    }
}

fn largest_remainder(quotas: &[f64], n: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    if assigned <= n {
        for &g in order.iter().cycle().take((n - assigned) as usize) {
            counts[g] += 1;
        }
    } else {
        // Percentages summing slightly above 100 can overshoot.
        let mut excess = assigned - n;
        for &g in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if counts[g] > 0 {
                counts[g] -= 1;
                excess -= 1;
            }
        }
    }
    counts
}
