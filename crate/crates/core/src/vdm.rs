//! Objective models and hard-constraint checks.
//!
//! Every model scores a single (DC, staff, person) assignment; a plan's
//! objective is the sum over its assignments. Hard constraints are:
//!
//! * C1: a staff member serves at most one person per frame,
//! * C2: a person is vaccinated at most once over the whole horizon,
//! * C3: assignments are binary (structural here, plans are sets),
//! * C4: total assignments never exceed the stock.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VdmError};
use crate::model::{AssignmentSet, GainFactors, ModelVariant, Scenario, Violation};

/// Scores one assignment from the person's priority and travel distance.
pub trait ObjectiveModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn variant(&self) -> ModelVariant;
    fn weight(&self, gains: &GainFactors, priority: u32, distance: f64) -> f64;
}

/// Maximizes head count.
pub struct CoverageModel;
/// Head count plus priority.
pub struct PriorityModel;
/// Head count minus travel distance.
pub struct DistanceModel;
/// Head count plus priority minus travel distance.
pub struct PriorityDistanceModel;

impl ObjectiveModel for CoverageModel {
    fn name(&self) -> &'static str {
        "b"
    }
    fn variant(&self) -> ModelVariant {
        ModelVariant::B
    }
    fn weight(&self, gains: &GainFactors, _priority: u32, _distance: f64) -> f64 {
        gains.alpha
    }
}

impl ObjectiveModel for PriorityModel {
    fn name(&self) -> &'static str {
        "p"
    }
    fn variant(&self) -> ModelVariant {
        ModelVariant::P
    }
    fn weight(&self, gains: &GainFactors, priority: u32, _distance: f64) -> f64 {
        gains.alpha + gains.beta * f64::from(priority)
    }
}

impl ObjectiveModel for DistanceModel {
    fn name(&self) -> &'static str {
        "d"
    }
    fn variant(&self) -> ModelVariant {
        ModelVariant::D
    }
    fn weight(&self, gains: &GainFactors, _priority: u32, distance: f64) -> f64 {
        gains.alpha - gains.gamma * distance
    }
}

impl ObjectiveModel for PriorityDistanceModel {
    fn name(&self) -> &'static str {
        "pd"
    }
    fn variant(&self) -> ModelVariant {
        ModelVariant::Pd
    }
    fn weight(&self, gains: &GainFactors, priority: u32, distance: f64) -> f64 {
        gains.alpha + gains.beta * f64::from(priority) - gains.gamma * distance
    }
}

impl ModelVariant {
    pub fn model(self) -> &'static dyn ObjectiveModel {
        match self {
            ModelVariant::B => &CoverageModel,
            ModelVariant::P => &PriorityModel,
            ModelVariant::D => &DistanceModel,
            ModelVariant::Pd => &PriorityDistanceModel,
        }
    }
}

/// Objective models by name.
pub struct ModelRegistry {
    models: Vec<Box<dyn ObjectiveModel>>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry { models: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(CoverageModel));
        r.register(Box::new(PriorityModel));
        r.register(Box::new(DistanceModel));
        r.register(Box::new(PriorityDistanceModel));
        r
    }

    /// Adds a model, replacing any earlier one with the same name.
    pub fn register(&mut self, model: Box<dyn ObjectiveModel>) {
        self.models.retain(|m| m.name() != model.name());
        self.models.push(model);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ObjectiveModel> {
        let key = name.trim().to_ascii_lowercase();
        self.models
            .iter()
            .find(|m| m.name() == key)
            .map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.models.iter().map(|m| m.name()).collect()
    }
}

/// A model variant together with its gain factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub variant: ModelVariant,
    pub gains: GainFactors,
}

impl WeightSpec {
    pub fn new(variant: ModelVariant, gains: GainFactors) -> Self {
        WeightSpec { variant, gains }
    }

    /// Gains with the terms this variant does not use set to zero.
    pub fn effective_gains(&self) -> GainFactors {
        let g = self.gains;
        match self.variant {
            ModelVariant::B => GainFactors {
                beta: 0.0,
                gamma: 0.0,
                ..g
            },
            ModelVariant::P => GainFactors { gamma: 0.0, ..g },
            ModelVariant::D => GainFactors { beta: 0.0, ..g },
            ModelVariant::Pd => g,
        }
    }

    #[inline]
    pub fn weight(&self, priority: u32, distance: f64) -> f64 {
        self.variant.model().weight(&self.gains, priority, distance)
    }
}

pub fn assignment_weight(spec: &WeightSpec, priority: u32, distance: f64) -> f64 {
    spec.weight(priority, distance)
}

/// Checks C1, C2, C4 (and index ranges) over a whole multi-frame plan.
pub fn is_feasible(s: &Scenario, frames: &[AssignmentSet]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut served: HashMap<usize, usize> = HashMap::new();
    let mut total = 0u64;

    for set in frames {
        let mut busy: HashSet<(usize, usize)> = HashSet::new();
        for a in &set.assignments {
            total += 1;
            let Some(dc) = s.dcs.get(a.dc_index) else {
                out.push(Violation::new(
                    format!("frame {} dc_index", set.frame),
                    format!("DC {} out of range ({} DCs)", a.dc_index, s.dcs.len()),
                ));
                continue;
            };
            if a.staff_index >= dc.staff_count {
                out.push(Violation::new(
                    format!("frame {} staff_index", set.frame),
                    format!(
                        "staff {} out of range for DC {} ({} staff)",
                        a.staff_index, a.dc_index, dc.staff_count
                    ),
                ));
            }
            if a.person_index >= s.persons.len() {
                out.push(Violation::new(
                    format!("frame {} person_index", set.frame),
                    format!(
                        "person {} out of range ({} persons)",
                        a.person_index,
                        s.persons.len()
                    ),
                ));
                continue;
            }
            if !busy.insert((a.dc_index, a.staff_index)) {
                out.push(Violation::new(
                    format!("frame {}", set.frame),
                    format!(
                        "C1: staff {} of DC {} serves more than one person",
                        a.staff_index, a.dc_index
                    ),
                ));
            }
            if let Some(first) = served.insert(a.person_index, set.frame) {
                out.push(Violation::new(
                    format!("frame {}", set.frame),
                    format!(
                        "C2: person {} already vaccinated in frame {first}",
                        a.person_index
                    ),
                ));
            }
        }
    }
    if total > s.stock {
        out.push(Violation::new(
            "plan",
            format!("C4: {total} vaccinations exceed stock {}", s.stock),
        ));
    }
    out
}

/// Sum of assignment weights, accumulated in (person, dc) order so that
/// equal plans always produce bit-identical sums.
pub fn objective_value(spec: &WeightSpec, s: &Scenario, a: &AssignmentSet) -> Result<f64> {
    let violations = is_feasible(s, std::slice::from_ref(a));
    if let Some(v) = violations.first() {
        return Err(VdmError::invalid(format!("infeasible assignment set: {v}")));
    }
    let mut pairs: Vec<(usize, usize)> = a
        .assignments
        .iter()
        .map(|x| (x.person_index, x.dc_index))
        .collect();
    pairs.sort_unstable();
    Ok(pairs
        .into_iter()
        .map(|(p, d)| spec.weight(s.persons[p].priority, s.distance(d, p)))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Assignment, DistributionCenter, Funding, Hospital, Location, Person, SizeClass,
    };

    fn gains(a: f64, b: f64, g: f64) -> GainFactors {
        GainFactors::new(a, b, g).unwrap()
    }

    fn scenario(staff: &[usize], persons: &[(u32, &[f64])], stock: u64) -> Scenario {
        let dcs = staff
            .iter()
            .enumerate()
            .map(|(i, &s)| DistributionCenter {
                hospital: Hospital {
                    id: i as u32,
                    name: format!("H{i}"),
                    zone: "Z".into(),
                    funding: Funding::Public,
                    size_class: SizeClass::Small,
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
                    location: Location::Distances(d.to_vec()),
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

    fn asg(dc: usize, staff: usize, person: usize) -> Assignment {
        Assignment {
            dc_index: dc,
            staff_index: staff,
            person_index: person,
        }
    }

    #[test]
    fn weights_of_each_variant() {
        let g = gains(50.0, 10.0, 1.0);
        let pd = WeightSpec::new(ModelVariant::Pd, g);
        assert_eq!(assignment_weight(&pd, 5, 3.0), 97.0);
        let b = WeightSpec::new(ModelVariant::B, g);
        assert_eq!(assignment_weight(&b, 1, 0.0), 50.0);
        assert_eq!(assignment_weight(&b, 6, 123.0), 50.0);
        let d = WeightSpec::new(ModelVariant::D, g);
        assert_eq!(assignment_weight(&d, 3, 50.0), 0.0);
        let p = WeightSpec::new(ModelVariant::P, g);
        assert_eq!(assignment_weight(&p, 5, 99.0), 100.0);
    }

    #[test]
    fn registry_lookup() {
        let r = ModelRegistry::standard();
        assert_eq!(r.names(), vec!["b", "p", "d", "pd"]);
        assert_eq!(r.get("PD").unwrap().variant(), ModelVariant::Pd);
        assert!(r.get("q").is_none());
        for v in ModelVariant::ALL {
            assert_eq!(r.get(v.name()).unwrap().variant(), v);
        }
    }

    #[test]
    fn effective_gains_zero_unused_terms() {
        let g = gains(1.0, 2.0, 3.0);
        let e = WeightSpec::new(ModelVariant::D, g).effective_gains();
        assert_eq!((e.alpha, e.beta, e.gamma), (1.0, 0.0, 3.0));
    }

    #[test]
    fn shared_staff_is_c1_violation() {
        let s = scenario(&[1], &[(1, &[1.0]), (1, &[1.0])], 5);
        let v = is_feasible(
            &s,
            &[AssignmentSet::new(0, vec![asg(0, 0, 0), asg(0, 0, 1)])],
        );
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.starts_with("C1"));
    }

    #[test]
    fn person_in_two_frames_is_c2_violation() {
        let persons: Vec<(u32, &[f64])> = (0..8).map(|_| (1, &[1.0][..])).collect();
        let s = scenario(&[1], &persons, 10);
        let v = is_feasible(
            &s,
            &[
                AssignmentSet::new(0, vec![asg(0, 0, 7)]),
                AssignmentSet::new(3, vec![asg(0, 0, 7)]),
            ],
        );
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.starts_with("C2"));
    }

    #[test]
    fn overspending_is_c4_violation() {
        let s = scenario(&[3], &[(1, &[1.0]), (1, &[1.0]), (1, &[1.0])], 2);
        let v = is_feasible(
            &s,
            &[
                AssignmentSet::new(0, vec![asg(0, 0, 0), asg(0, 1, 1)]),
                AssignmentSet::new(1, vec![asg(0, 0, 2)]),
            ],
        );
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.starts_with("C4"));
    }

    #[test]
    fn empty_plan_is_feasible() {
        let s = scenario(&[1], &[(1, &[1.0])], 0);
        assert!(is_feasible(&s, &[]).is_empty());
        assert!(is_feasible(&s, &[AssignmentSet::default()]).is_empty());
    }

    #[test]
    fn objective_sums() {
        let g = gains(50.0, 10.0, 1.0);
        let s = scenario(&[2], &[(5, &[3.0]), (1, &[10.0])], 5);
        let pd = WeightSpec::new(ModelVariant::Pd, g);
        assert_eq!(
            objective_value(&pd, &s, &AssignmentSet::default()).unwrap(),
            0.0
        );
        let b = WeightSpec::new(ModelVariant::B, g);
        let one = AssignmentSet::new(0, vec![asg(0, 0, 0)]);
        assert_eq!(objective_value(&b, &s, &one).unwrap(), 50.0);
        let two = AssignmentSet::new(0, vec![asg(0, 0, 0), asg(0, 1, 1)]);
        assert_eq!(objective_value(&pd, &s, &two).unwrap(), 147.0);
    }

    #[test]
    fn objective_rejects_infeasible_set() {
        let g = gains(50.0, 10.0, 1.0);
        let s = scenario(&[1], &[(5, &[3.0]), (1, &[10.0])], 5);
        let bad = AssignmentSet::new(0, vec![asg(0, 0, 0), asg(0, 0, 1)]);
        let spec = WeightSpec::new(ModelVariant::B, g);
        assert!(matches!(
            objective_value(&spec, &s, &bad),
            Err(VdmError::InvalidArgument(_))
        ));
    }
}
