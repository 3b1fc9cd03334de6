//! Exhaustive enumeration of frame plans, used as a test oracle.

use super::{check_frame_inputs, materialize, FrameSolution, FrameSolver};
use crate::error::{Result, VdmError};
use crate::model::Scenario;
use crate::vdm::WeightSpec;

/// Both the eligible count and the total staff must stay within this.
pub const BRUTE_FORCE_LIMIT: usize = 8;

pub struct BruteForceSolver;

struct Search<'a> {
    weights: Vec<Vec<f64>>, // [slot][dc]
    eligible: &'a [usize],
    remaining: Vec<usize>,
    budget: usize,
    current: Vec<(usize, usize)>, // (person, dc), ascending person
    best: Vec<(usize, usize)>,
    best_value: f64,
}

impl Search<'_> {
    /// Plan order: higher objective, then fewer assignments, then the
    /// lexicographically smaller sorted (person, dc) list.
    fn beats_best(&self, value: f64) -> bool {
        if value != self.best_value {
            return value > self.best_value;
        }
        if self.current.len() != self.best.len() {
            return self.current.len() < self.best.len();
        }
        self.current < self.best
    }

    fn visit(&mut self, slot: usize, value: f64) {
        if slot == self.eligible.len() {
            if self.beats_best(value) {
                self.best.clone_from(&self.current);
                self.best_value = value;
            }
            return;
        }
        // Skip this person.
        self.visit(slot + 1, value);
        if self.current.len() == self.budget {
            return;
        }
        let person = self.eligible[slot];
        for dc in 0..self.remaining.len() {
            if self.remaining[dc] == 0 {
                continue;
            }
            self.remaining[dc] -= 1;
            self.current.push((person, dc));
            // Summing in ascending person order matches `materialize`.
            self.visit(slot + 1, value + self.weights[slot][dc]);
            self.current.pop();
            self.remaining[dc] += 1;
        }
    }
}

/// Best frame plan by full enumeration of partial matchings.
pub fn brute_force_frame(
    scenario: &Scenario,
    eligible: &[usize],
    spec: &WeightSpec,
    budget: u64,
) -> Result<FrameSolution> {
    let eligible = check_frame_inputs(scenario, eligible)?;
    let staff = scenario.total_staff();
    if eligible.len() > BRUTE_FORCE_LIMIT || staff > BRUTE_FORCE_LIMIT {
        return Err(VdmError::invalid(format!(
            "brute force limited to {BRUTE_FORCE_LIMIT} eligible persons and staff, got {} and {staff}",
            eligible.len()
        )));
    }
    let weights = eligible
        .iter()
        .map(|&p| {
            let priority = scenario.persons[p].priority;
            (0..scenario.dcs.len())
                .map(|dc| spec.weight(priority, scenario.distance(dc, p)))
                .collect()
        })
        .collect();
    let mut search = Search {
        weights,
        eligible: &eligible,
        remaining: scenario.dcs.iter().map(|d| d.staff_count).collect(),
        budget: budget.min(eligible.len() as u64) as usize,
        current: Vec::new(),
        best: Vec::new(),
        best_value: 0.0,
    };
    search.visit(0, 0.0);
    let pairs = search.best.iter().map(|&(p, dc)| (dc, p)).collect();
    Ok(materialize(scenario, spec, pairs))
}

impl FrameSolver for BruteForceSolver {
    fn name(&self) -> &'static str {
        "brute-force"
    }

    fn solve(
        &self,
        scenario: &Scenario,
        eligible: &[usize],
        spec: &WeightSpec,
        budget: u64,
    ) -> Result<FrameSolution> {
        brute_force_frame(scenario, eligible, spec, budget)
    }
}
