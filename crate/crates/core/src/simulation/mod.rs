//! Multi-frame vaccination campaigns.
//!
//! Frames run in order and draw on one shared stock: each frame may use
//! `min(remaining stock, total staff)` doses, and a vaccinated person never
//! becomes eligible again.

mod generator;
mod priorities;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use generator::{
    generate_random_scenario, BoundingBox, ClusteredGenerator, GeneratedScenario,
    GeneratorRegistry, ScenarioGenerator, ScenarioKind, ScenarioSpec, UniformGenerator,
    BACKGROUND_SHARE, BLOB_COUNT, BLOB_SPREAD,
};
pub use priorities::{
    apportion, stratified_priorities, ApportionmentRule, CHENNAI_AGE_PERCENTAGES,
    PERCENT_SUM_TOLERANCE,
};

use crate::error::{Result, VdmError};
use crate::model::{validate_scenario, GainFactors, ModelVariant, Scenario};
use crate::solver::{FrameSolution, SolverRegistry};
use crate::vdm::{is_feasible, WeightSpec};

/// Gain factors, or `auto` for alpha = |E|/4, beta = |E|/(4|P|), gamma = 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GainSetting {
    #[default]
    Auto,
    Fixed(GainFactors),
}

impl GainSetting {
    pub fn resolve(&self, scenario: &Scenario) -> GainFactors {
        match self {
            GainSetting::Auto => {
                GainFactors::auto(scenario.persons.len(), scenario.priority_levels)
            }
            GainSetting::Fixed(g) => *g,
        }
    }
}

impl FromStr for GainSetting {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            Ok(GainSetting::Auto)
        } else {
            s.parse().map(GainSetting::Fixed)
        }
    }
}

impl TryFrom<String> for GainSetting {
    type Error = VdmError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for GainSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainSetting::Auto => f.write_str("auto"),
            GainSetting::Fixed(g) => write!(f, "{},{},{}", g.alpha, g.beta, g.gamma),
        }
    }
}

impl From<GainSetting> for String {
    fn from(g: GainSetting) -> Self {
        g.to_string()
    }
}

/// When persons become eligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalRule {
    /// Everyone is present from the first frame.
    #[default]
    All,
    /// Persons arrive in equal consecutive batches, one batch per frame,
    /// and stay eligible until served.
    EvenBatches,
}

impl ArrivalRule {
    /// First frame in which person `index` of `n` is present.
    pub fn arrival_frame(self, index: usize, n: usize, frames: usize) -> usize {
        match self {
            ArrivalRule::All => 0,
            ArrivalRule::EvenBatches => index * frames / n.max(1),
        }
    }
}

impl FromStr for ArrivalRule {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(ArrivalRule::All),
            "even-batches" => Ok(ArrivalRule::EvenBatches),
            other => Err(VdmError::invalid(format!(
                "unknown arrival rule {other:?} (expected all or even-batches)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ScenarioSource {
    Generated { spec: ScenarioSpec },
    Explicit { scenario: Box<Scenario> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub source: ScenarioSource,
    pub variant: ModelVariant,
    #[serde(default)]
    pub gains: GainSetting,
    /// Overrides the scenario's frame count when set.
    #[serde(default)]
    pub frames: Option<usize>,
    #[serde(default)]
    pub arrival: ArrivalRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_solver")]
    pub solver: String,
}

fn default_solver() -> String {
    SolverRegistry::DEFAULT.to_string()
}

impl SimulationConfig {
    pub fn generated(spec: ScenarioSpec, variant: ModelVariant, seed: u64) -> Self {
        SimulationConfig {
            source: ScenarioSource::Generated { spec },
            variant,
            gains: GainSetting::Auto,
            frames: None,
            arrival: ArrivalRule::All,
            seed,
            solver: default_solver(),
        }
    }

    pub fn explicit(scenario: Scenario, variant: ModelVariant) -> Self {
        SimulationConfig {
            source: ScenarioSource::Explicit {
                scenario: Box::new(scenario),
            },
            variant,
            gains: GainSetting::Auto,
            frames: None,
            arrival: ArrivalRule::All,
            seed: 0,
            solver: default_solver(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match &self.source {
            ScenarioSource::Generated { spec } => spec.kind,
            ScenarioSource::Explicit { .. } => ScenarioKind::Custom,
        }
    }

    /// Builds (or copies) the scenario this configuration runs on.
    pub fn materialize(&self) -> Result<Scenario> {
        let mut scenario = match &self.source {
            ScenarioSource::Generated { spec } => {
                GeneratorRegistry::standard()
                    .generate(spec, self.seed)?
                    .scenario
            }
            ScenarioSource::Explicit { scenario } => (**scenario).clone(),
        };
        if let Some(frames) = self.frames {
            scenario.frames = frames;
        }
        Ok(scenario)
    }

    pub fn run_options(&self, scenario: &Scenario) -> RunOptions {
        RunOptions {
            spec: WeightSpec::new(self.variant, self.gains.resolve(scenario)),
            arrival: self.arrival,
            solver: self.solver.clone(),
        }
    }
}

/// Case-study configuration (PD model, auto gains, 60 frames).
pub fn build_case_study(kind: ScenarioKind) -> Result<SimulationConfig> {
    let spec = match kind {
        ScenarioKind::Cs1 => ScenarioSpec::cs1(),
        ScenarioKind::Cs2 => ScenarioSpec::cs2(),
        other => {
            return Err(VdmError::invalid(format!(
                "{other} is not a case study (expected cs1 or cs2)"
            )))
        }
    };
    let frames = spec.frames;
    let mut cfg = SimulationConfig::generated(spec, ModelVariant::Pd, 0);
    cfg.frames = Some(frames);
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub spec: WeightSpec,
    pub arrival: ArrivalRule,
    pub solver: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario_kind: ScenarioKind,
    pub variant: ModelVariant,
    pub gains: GainFactors,
    pub solver: String,
    pub seed: u64,
    pub frames: Vec<FrameSolution>,
    pub initial_stock: u64,
    pub leftover_stock: u64,
    pub total_vaccinated: u64,
    /// Index 0 is priority level 1.
    pub population_by_priority: Vec<u64>,
    pub vaccinated_by_priority: Vec<u64>,
    pub coverage_percent: Vec<f64>,
    pub total_travel_distance: f64,
    /// `None` when nobody was vaccinated.
    pub average_travel_distance: Option<f64>,
}

/// Runs the campaign described by `cfg`.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    let scenario = cfg.materialize()?;
    let mut report = simulate(&scenario, &cfg.run_options(&scenario))?;
    report.scenario_kind = cfg.kind();
    report.seed = cfg.seed;
    Ok(report)
}

/// Runs several variants on one materialized scenario, in parallel.
pub fn run_variants(
    cfg: &SimulationConfig,
    variants: &[ModelVariant],
) -> Result<Vec<SimulationReport>> {
    let scenario = cfg.materialize()?;
    variants
        .par_iter()
        .map(|&variant| {
            let mut c = cfg.clone();
            c.variant = variant;
            let mut report = simulate(&scenario, &c.run_options(&scenario))?;
            report.scenario_kind = cfg.kind();
            report.seed = cfg.seed;
            Ok(report)
        })
        .collect()
}

/// Frame loop over a fixed scenario.
pub fn simulate(scenario: &Scenario, options: &RunOptions) -> Result<SimulationReport> {
    if let Some(v) = validate_scenario(scenario).first() {
        return Err(VdmError::invalid(format!("invalid scenario: {v}")));
    }
    options.spec.gains.check()?;
    let registry = SolverRegistry::standard();
    let solver = registry.get(&options.solver)?;

    let n = scenario.persons.len();
    let capacity = scenario.total_staff() as u64;
    let mut vaccinated = vec![false; n];
    let mut remaining = scenario.stock;
    let mut frames = Vec::with_capacity(scenario.frames);

    for t in 0..scenario.frames {
        let budget = remaining.min(capacity);
        let eligible: Vec<usize> = (0..n)
            .filter(|&k| {
                !vaccinated[k] && options.arrival.arrival_frame(k, n, scenario.frames) <= t
            })
            .collect();
        let mut solution = if budget == 0 || eligible.is_empty() {
            FrameSolution {
                assignments: Default::default(),
                objective: 0.0,
                assigned_count: 0,
            }
        } else {
            solver.solve(scenario, &eligible, &options.spec, budget)?
        };
        solution.assignments.frame = t;
        for a in &solution.assignments.assignments {
            vaccinated[a.person_index] = true;
        }
        remaining -= solution.assigned_count as u64;
        frames.push(solution);
    }

    let sets: Vec<_> = frames.iter().map(|f| f.assignments.clone()).collect();
    if let Some(v) = is_feasible(scenario, &sets).first() {
        return Err(VdmError::invalid(format!(
            "solver produced an infeasible plan: {v}"
        )));
    }

    let levels = scenario.priority_levels as usize;
    let population_by_priority = scenario.population_by_priority();
    let mut vaccinated_by_priority = vec![0u64; levels];
    let mut total_travel_distance = 0.0;
    let mut total_vaccinated = 0u64;
    for a in frames.iter().flat_map(|f| &f.assignments.assignments) {
        vaccinated_by_priority[scenario.persons[a.person_index].priority as usize - 1] += 1;
        total_travel_distance += scenario.distance(a.dc_index, a.person_index);
        total_vaccinated += 1;
    }
    let coverage_percent = percentages(&vaccinated_by_priority, &population_by_priority);

    Ok(SimulationReport {
        scenario_kind: ScenarioKind::Custom,
        variant: options.spec.variant,
        gains: options.spec.gains,
        solver: options.solver.clone(),
        seed: 0,
        frames,
        initial_stock: scenario.stock,
        leftover_stock: remaining,
        total_vaccinated,
        population_by_priority,
        vaccinated_by_priority,
        coverage_percent,
        total_travel_distance,
        average_travel_distance: (total_vaccinated > 0)
            .then(|| total_travel_distance / total_vaccinated as f64),
    })
}

fn percentages(vaccinated: &[u64], population: &[u64]) -> Vec<f64> {
    vaccinated
        .iter()
        .zip(population)
        .map(|(&v, &p)| {
            if p == 0 {
                0.0
            } else {
                100.0 * v as f64 / p as f64
            }
        })
        .collect()
}

/// Percent of each priority level vaccinated (index 0 = level 1).
pub fn coverage_by_priority(report: &SimulationReport) -> Vec<f64> {
    percentages(
        &report.vaccinated_by_priority,
        &report.population_by_priority,
    )
}

/// Mean DC-to-person distance over everyone vaccinated.
pub fn average_travel_distance(report: &SimulationReport) -> Result<f64> {
    report.average_travel_distance.ok_or_else(|| {
        VdmError::UndefinedMetric("average travel distance with nobody vaccinated".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_frame;

    fn one_dc_scenario(distances: &[f64], staff: usize, stock: u64, frames: usize) -> Scenario {
        use crate::model::{DistributionCenter, Funding, Hospital, Location, Person, SizeClass};
        Scenario {
            dcs: vec![DistributionCenter {
                hospital: Hospital {
                    id: 0,
                    name: "H0".into(),
                    zone: "Z".into(),
                    funding: Funding::Public,
                    size_class: SizeClass::Small,
                },
                staff_count: staff,
            }],
            persons: distances
                .iter()
                .enumerate()
                .map(|(k, &d)| Person {
                    id: k as u32,
                    priority: 1,
                    location: Location::Distances(vec![d]),
                })
                .collect(),
            dc_person_distance: vec![distances.to_vec()],
            stock,
            frames,
            priority_levels: 1,
        }
    }

    fn b_options() -> RunOptions {
        RunOptions {
            spec: WeightSpec::new(ModelVariant::B, GainFactors::new(1.0, 0.0, 0.0).unwrap()),
            arrival: ArrivalRule::All,
            solver: "transport".into(),
        }
    }

    #[test]
    fn zero_stock_vaccinates_nobody() {
        let s = one_dc_scenario(&[1.0, 2.0, 3.0], 2, 0, 3);
        let r = simulate(&s, &b_options()).unwrap();
        assert_eq!(r.total_vaccinated, 0);
        assert!(r.frames.iter().all(|f| f.assigned_count == 0));
        assert_eq!(coverage_by_priority(&r), vec![0.0]);
        assert!(matches!(
            average_travel_distance(&r),
            Err(VdmError::UndefinedMetric(_))
        ));
    }

    #[test]
    fn everyone_vaccinated_gives_full_coverage() {
        let s = one_dc_scenario(&[2.0, 4.0], 1, 5, 2);
        let r = simulate(&s, &b_options()).unwrap();
        assert_eq!(coverage_by_priority(&r), vec![100.0]);
        assert_eq!(average_travel_distance(&r).unwrap(), 3.0);
        assert_eq!(r.leftover_stock, 3);
    }

    #[test]
    fn single_assignment_distance() {
        let s = one_dc_scenario(&[4.2], 1, 1, 1);
        let r = simulate(&s, &b_options()).unwrap();
        assert_eq!(average_travel_distance(&r).unwrap(), 4.2);
    }

    #[test]
    fn stock_is_shared_across_frames() {
        let s = one_dc_scenario(&[1.0; 10], 3, 7, 4);
        let r = simulate(&s, &b_options()).unwrap();
        let per_frame: Vec<usize> = r.frames.iter().map(|f| f.assigned_count).collect();
        assert_eq!(per_frame, vec![3, 3, 1, 0]);
        assert_eq!(r.leftover_stock, 0);
    }

    #[test]
    fn single_frame_equals_solver_call() {
        let s = one_dc_scenario(&[3.0, 1.0, 2.0, 8.0], 2, 10, 1);
        let opts = RunOptions {
            spec: WeightSpec::new(ModelVariant::D, GainFactors::new(5.0, 0.0, 1.0).unwrap()),
            ..b_options()
        };
        let r = simulate(&s, &opts).unwrap();
        let direct = solve_frame(&s, &[0, 1, 2, 3], &opts.spec, 2).unwrap();
        assert_eq!(r.frames[0], direct);
    }

    #[test]
    fn batches_arrive_over_time() {
        let s = one_dc_scenario(&[1.0; 4], 4, 4, 2);
        let opts = RunOptions {
            arrival: ArrivalRule::EvenBatches,
            ..b_options()
        };
        let r = simulate(&s, &opts).unwrap();
        let per_frame: Vec<usize> = r.frames.iter().map(|f| f.assigned_count).collect();
        assert_eq!(per_frame, vec![2, 2]);
    }

    #[test]
    fn gain_setting_parsing() {
        assert_eq!("auto".parse::<GainSetting>().unwrap(), GainSetting::Auto);
        let g: GainSetting = "1,2,3".parse().unwrap();
        assert_eq!(g.to_string(), "1,2,3");
        assert!("nope".parse::<GainSetting>().is_err());
    }

    #[test]
    fn case_study_config() {
        let cfg = build_case_study(ScenarioKind::Cs1).unwrap();
        assert_eq!(cfg.frames, Some(60));
        assert!(build_case_study(ScenarioKind::Rc1Uniform).is_err());
    }
}
