//! Exact single-frame allocation.
//!
//! One frame asks: given the persons still eligible, the staff capacity of
//! each DC and a dose budget, which (DC, person) pairs maximize the summed
//! assignment weight? Staff within a DC are interchangeable, so the
//! problem is a transportation problem with DC capacities, solvable exactly
//! as a min-cost flow with costs equal to negated weights.
//!
//! Ordering of optimal plans: highest objective, then fewest assignments
//! (so zero- and negative-weight pairs are never used). The flow solvers
//! resolve remaining ties deterministically through path selection;
//! [`BruteForceSolver`] additionally picks the lexicographically smallest
//! sorted `(person, dc)` list.

mod brute;
mod flow;
mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VdmError};
use crate::model::{validate_scenario, Assignment, AssignmentSet, Scenario};
use crate::vdm::WeightSpec;

pub use brute::{brute_force_frame, BruteForceSolver, BRUTE_FORCE_LIMIT};
pub use flow::{min_cost_flow, FlowArc, FlowNetwork, FlowResult, NetworkSolver};
pub use transport::TransportSolver;

/// Augmenting paths whose cost is above `-COST_EPSILON` are not taken.
pub const COST_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSolution {
    pub assignments: AssignmentSet,
    pub objective: f64,
    pub assigned_count: usize,
}

/// A strategy for solving one frame.
pub trait FrameSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(
        &self,
        scenario: &Scenario,
        eligible: &[usize],
        spec: &WeightSpec,
        budget: u64,
    ) -> Result<FrameSolution>;
}

/// Frame solvers by name.
pub struct SolverRegistry {
    solvers: Vec<Box<dyn FrameSolver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl SolverRegistry {
    pub const DEFAULT: &'static str = "transport";

    pub fn empty() -> Self {
        SolverRegistry {
            solvers: Vec::new(),
        }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(TransportSolver));
        r.register(Box::new(NetworkSolver));
        r.register(Box::new(BruteForceSolver));
        r
    }

    pub fn register(&mut self, solver: Box<dyn FrameSolver>) {
        self.solvers.retain(|s| s.name() != solver.name());
        self.solvers.push(solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn FrameSolver> {
        self.solvers
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| {
                VdmError::invalid(format!(
                    "unknown solver {name:?} (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }
}

/// Solves one frame exactly with the default strategy.
pub fn solve_frame(
    scenario: &Scenario,
    eligible: &[usize],
    spec: &WeightSpec,
    budget: u64,
) -> Result<FrameSolution> {
    TransportSolver.solve(scenario, eligible, spec, budget)
}

/// Rejects inconsistent dimensions and bad eligible lists; returns the
/// eligible persons sorted ascending.
pub(crate) fn check_frame_inputs(scenario: &Scenario, eligible: &[usize]) -> Result<Vec<usize>> {
    let v = validate_scenario(scenario);
    if let Some(first) = v.first() {
        return Err(VdmError::invalid(format!("invalid scenario: {first}")));
    }
    let mut sorted = eligible.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(VdmError::invalid(format!(
                "person {} listed twice as eligible",
                w[0]
            )));
        }
    }
    if let Some(&last) = sorted.last() {
        if last >= scenario.persons.len() {
            return Err(VdmError::invalid(format!(
                "eligible person {last} out of range ({} persons)",
                scenario.persons.len()
            )));
        }
    }
    Ok(sorted)
}

/// Builds a frame solution from (dc, person) pairs: staff indices are handed
/// out per DC in increasing person order, and the objective is summed in
/// (person, dc) order.
pub(crate) fn materialize(
    scenario: &Scenario,
    spec: &WeightSpec,
    mut pairs: Vec<(usize, usize)>,
) -> FrameSolution {
    pairs.sort_unstable_by_key(|&(dc, person)| (person, dc));
    let mut next_staff = vec![0usize; scenario.dcs.len()];
    let mut objective = 0.0;
    let assignments: Vec<Assignment> = pairs
        .into_iter()
        .map(|(dc, person)| {
            objective += spec.weight(
                scenario.persons[person].priority,
                scenario.distance(dc, person),
            );
            let staff = next_staff[dc];
            next_staff[dc] += 1;
            Assignment {
                dc_index: dc,
                staff_index: staff,
                person_index: person,
            }
        })
        .collect();
    FrameSolution {
        assigned_count: assignments.len(),
        assignments: AssignmentSet::new(0, assignments),
        objective,
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::model::{
        DistributionCenter, Funding, Hospital, Location, Person, Scenario, SizeClass,
    };

    /// Scenario with the given DC staff counts, (priority, distances) persons and stock.
    pub fn scenario(staff: &[usize], persons: &[(u32, Vec<f64>)], stock: u64) -> Scenario {
        let dcs = staff
            .iter()
            .enumerate()
            .map(|(i, &s)| DistributionCenter {
                hospital: Hospital {
                    id: i as u32,
                    name: format!("H{i}"),
                    zone: "Z".into(),
                    funding: Funding::Public,
                    size_class: SizeClass::Medium,
                },
                staff_count: s,
            })
            .collect();
        let mut dist = vec![Vec::new(); staff.len()];
        let persons = persons
            .iter()
            .enumerate()
            .map(|(k, (p, d))| {
                for (i, row) in dist.iter_mut().enumerate() {
                    row.push(d[i]);
                }
                Person {
                    id: k as u32,
                    priority: *p,
                    location: Location::Distances(d.clone()),
                }
            })
            .collect();
        Scenario {
            dcs,
            persons,
            dc_person_distance: dist,
            stock,
            frames: 1,
            priority_levels: 6,
        }
    }
}
