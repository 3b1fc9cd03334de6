//! Seeded synthetic scenarios.
//!
//! A generator scatters candidate hospitals and a population over a planar
//! box, picks the DCs among the candidates with k-medoids, and measures
//! person-to-DC distances as straight lines.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::priorities::{stratified_priorities, CHENNAI_AGE_PERCENTAGES};
use crate::clustering::{k_medoids, select_optimal_k, SilhouetteRow, DEFAULT_RESTARTS};
use crate::error::{Result, VdmError};
use crate::model::{
    euclidean, DistanceMatrix, DistributionCenter, Funding, Hospital, Location, Person, Scenario,
    SizeClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "rc1")]
    Rc1Uniform,
    #[serde(rename = "rc2")]
    Rc2Clustered,
    #[serde(rename = "cs1")]
    Cs1,
    #[serde(rename = "cs2")]
    Cs2,
    #[serde(rename = "custom")]
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Rc1Uniform => "rc1",
            ScenarioKind::Rc2Clustered => "rc2",
            ScenarioKind::Cs1 => "cs1",
            ScenarioKind::Cs2 => "cs2",
            ScenarioKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rc1" => Ok(ScenarioKind::Rc1Uniform),
            "rc2" => Ok(ScenarioKind::Rc2Clustered),
            "cs1" => Ok(ScenarioKind::Cs1),
            "cs2" => Ok(ScenarioKind::Cs2),
            "custom" => Ok(ScenarioKind::Custom),
            other => Err(VdmError::invalid(format!(
                "unknown scenario {other:?} (expected rc1, rc2, cs1, cs2 or custom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn square(side: f64) -> Self {
        BoundingBox {
            min_x: 0.0,
            min_y: 0.0,
            max_x: side,
            max_y: side,
        }
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    fn clamp(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            x.clamp(self.min_x, self.max_x),
            y.clamp(self.min_y, self.max_y),
        )
    }

    fn uniform(&self, rng: &mut impl Rng) -> (f64, f64) {
        (
            rng.gen_range(self.min_x..=self.max_x),
            rng.gen_range(self.min_y..=self.max_y),
        )
    }
}

/// Parameters of a synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub population: usize,
    pub stock: u64,
    /// Staff per DC; its length is the number of DCs kept.
    pub dc_capacities: Vec<usize>,
    /// Persons per priority level, level 1 first.
    pub priority_histogram: Vec<u64>,
    pub area: BoundingBox,
    pub candidates: usize,
    pub frames: usize,
}

impl ScenarioSpec {
    fn random_case(kind: ScenarioKind) -> Self {
        ScenarioSpec {
            kind,
            population: 200,
            stock: 85,
            dc_capacities: vec![15, 30, 45],
            priority_histogram: vec![43, 35, 50, 45, 27],
            area: BoundingBox::square(10.0),
            candidates: 12,
            frames: 1,
        }
    }

    pub fn rc1() -> Self {
        Self::random_case(ScenarioKind::Rc1Uniform)
    }

    pub fn rc2() -> Self {
        Self::random_case(ScenarioKind::Rc2Clustered)
    }

    /// Three DCs (SMALL, MED, LARGE), 3900 persons, half as many doses.
    pub fn cs1() -> Self {
        Self::case_study(ScenarioKind::Cs1, vec![5, 20, 40])
    }

    /// Twelve DCs: three SMALL, two MED, seven LARGE; 20100 persons.
    pub fn cs2() -> Self {
        let mut caps = vec![5; 3];
        caps.extend([20; 2]);
        caps.extend([40; 7]);
        Self::case_study(ScenarioKind::Cs2, caps)
    }

    fn case_study(kind: ScenarioKind, dc_capacities: Vec<usize>) -> Self {
        let frames = 60;
        let population = dc_capacities.iter().sum::<usize>() * frames;
        let histogram = stratified_priorities(&CHENNAI_AGE_PERCENTAGES, population as u64)
            .expect("census percentages are valid");
        ScenarioSpec {
            kind,
            population,
            stock: population as u64 / 2,
            dc_capacities,
            priority_histogram: histogram,
            area: BoundingBox::square(20.0),
            candidates: 45,
            frames,
        }
    }

    pub fn for_kind(kind: ScenarioKind) -> Result<Self> {
        match kind {
            ScenarioKind::Rc1Uniform => Ok(Self::rc1()),
            ScenarioKind::Rc2Clustered => Ok(Self::rc2()),
            ScenarioKind::Cs1 => Ok(Self::cs1()),
            ScenarioKind::Cs2 => Ok(Self::cs2()),
            ScenarioKind::Custom => Err(VdmError::invalid(
                "custom scenarios come from files, not from a generator",
            )),
        }
    }

    pub fn check(&self) -> Result<()> {
        let total: u64 = self.priority_histogram.iter().sum();
        if total != self.population as u64 {
            return Err(VdmError::invalid(format!(
                "priority histogram sums to {total}, population is {}",
                self.population
            )));
        }
        if self.priority_histogram.is_empty() {
            return Err(VdmError::invalid("priority histogram is empty"));
        }
        if self.dc_capacities.is_empty() || self.dc_capacities.contains(&0) {
            return Err(VdmError::invalid(
                "DC capacities must be non-empty and positive",
            ));
        }
        let k = self.dc_capacities.len();
        if self.candidates < 3 || self.candidates <= k {
            return Err(VdmError::invalid(format!(
                "{} candidates cannot yield {k} DCs (need more candidates than DCs, at least 3)",
                self.candidates
            )));
        }
        if self.frames == 0 {
            return Err(VdmError::invalid("frames must be >= 1"));
        }
        let a = &self.area;
        if !(a.width() > 0.0 && a.height() > 0.0) {
            return Err(VdmError::invalid("bounding box must have positive area"));
        }
        Ok(())
    }
}

/// A generated scenario plus what was needed to build it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedScenario {
    pub scenario: Scenario,
    pub candidate_points: Vec<(f64, f64)>,
    /// Candidate index of each DC, in DC order.
    pub dc_candidates: Vec<usize>,
    /// Silhouette sweep over the candidates, for plotting.
    pub silhouette_table: Vec<SilhouetteRow>,
    /// k with the best silhouette (may differ from the DC count used).
    pub silhouette_k: usize,
}

/// Where persons are placed inside the box.
pub trait ScenarioGenerator: Send + Sync {
    fn name(&self) -> &'static str;

    fn default_spec(&self) -> ScenarioSpec;

    fn place_persons(&self, spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)>;

    fn generate(&self, spec: &ScenarioSpec, seed: u64) -> Result<GeneratedScenario> {
        build(spec, seed, |s, rng| self.place_persons(s, rng))
    }
}

/// Independent uniform placement.
pub struct UniformGenerator {
    kind: ScenarioKind,
}

/// Dense blobs over a sparse uniform background.
pub struct ClusteredGenerator;

pub const BLOB_COUNT: usize = 3;
pub const BACKGROUND_SHARE: f64 = 0.15;
/// Blob standard deviation as a fraction of the shorter box side.
pub const BLOB_SPREAD: f64 = 0.08;

impl ScenarioGenerator for UniformGenerator {
    fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn default_spec(&self) -> ScenarioSpec {
        ScenarioSpec::for_kind(self.kind).expect("generator kinds are not custom")
    }

    fn place_persons(&self, spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
        (0..spec.population)
            .map(|_| spec.area.uniform(rng))
            .collect()
    }
}

impl ScenarioGenerator for ClusteredGenerator {
    fn name(&self) -> &'static str {
        "rc2"
    }

    fn default_spec(&self) -> ScenarioSpec {
        ScenarioSpec::rc2()
    }

    fn place_persons(&self, spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
        let area = spec.area;
        let inner = BoundingBox {
            min_x: area.min_x + 0.1 * area.width(),
            min_y: area.min_y + 0.1 * area.height(),
            max_x: area.max_x - 0.1 * area.width(),
            max_y: area.max_y - 0.1 * area.height(),
        };
        let centers: Vec<(f64, f64)> = (0..BLOB_COUNT).map(|_| inner.uniform(rng)).collect();
        let spread = BLOB_SPREAD * area.width().min(area.height());
        let normal = Normal::new(0.0, spread).expect("positive spread");
        (0..spec.population)
            .map(|_| {
                if rng.gen_bool(BACKGROUND_SHARE) {
                    area.uniform(rng)
                } else {
                    let c = centers[rng.gen_range(0..BLOB_COUNT)];
                    area.clamp((c.0 + normal.sample(rng), c.1 + normal.sample(rng)))
                }
            })
            .collect()
    }
}

fn size_class_for(staff: usize) -> SizeClass {
    match staff {
        0..=19 => SizeClass::Small,
        20..=39 => SizeClass::Medium,
        _ => SizeClass::Large,
    }
}

fn zone_of(area: &BoundingBox, (x, y): (f64, f64)) -> &'static str {
    let east = x >= area.min_x + area.width() / 2.0;
    let north = y >= area.min_y + area.height() / 2.0;
    match (north, east) {
        (true, true) => "NE",
        (true, false) => "NW",
        (false, true) => "SE",
        (false, false) => "SW",
    }
}

fn build(
    spec: &ScenarioSpec,
    seed: u64,
    place: impl FnOnce(&ScenarioSpec, &mut ChaCha8Rng) -> Vec<(f64, f64)>,
) -> Result<GeneratedScenario> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let candidate_points: Vec<(f64, f64)> = (0..spec.candidates)
        .map(|_| spec.area.uniform(&mut rng))
        .collect();
    let fundings: Vec<Funding> = (0..spec.candidates)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Funding::Public
            } else {
                Funding::Private
            }
        })
        .collect();
    let person_points = place(spec, &mut rng);

    let mut priorities: Vec<u32> = spec
        .priority_histogram
        .iter()
        .enumerate()
        .flat_map(|(level, &count)| std::iter::repeat_n(level as u32 + 1, count as usize))
        .collect();
    priorities.shuffle(&mut rng);

    let candidate_dist = DistanceMatrix::from_points(&candidate_points);
    let sweep = select_optimal_k(&candidate_dist, seed, DEFAULT_RESTARTS)?;
    let k = spec.dc_capacities.len();
    let chosen = if sweep.k == k {
        sweep.best.clone()
    } else {
        k_medoids(&candidate_dist, k, seed, DEFAULT_RESTARTS)?
    };

    let dcs: Vec<DistributionCenter> = chosen
        .medoid_indices
        .iter()
        .zip(&spec.dc_capacities)
        .map(|(&c, &staff)| DistributionCenter {
            hospital: Hospital {
                id: c as u32,
                name: format!("Hospital {c}"),
                zone: zone_of(&spec.area, candidate_points[c]).to_string(),
                funding: fundings[c],
                size_class: size_class_for(staff),
            },
            staff_count: staff,
        })
        .collect();

    let dc_person_distance: Vec<Vec<f64>> = chosen
        .medoid_indices
        .iter()
        .map(|&c| {
            person_points
                .iter()
                .map(|&p| euclidean(candidate_points[c], p))
                .collect()
        })
        .collect();

    let persons = person_points
        .iter()
        .zip(&priorities)
        .enumerate()
        .map(|(k, (&(x, y), &priority))| Person {
            id: k as u32,
            priority,
            location: Location::Planar { x, y },
        })
        .collect();

    Ok(GeneratedScenario {
        scenario: Scenario {
            dcs,
            persons,
            dc_person_distance,
            stock: spec.stock,
            frames: spec.frames,
            priority_levels: spec.priority_histogram.len() as u32,
        },
        candidate_points,
        dc_candidates: chosen.medoid_indices,
        silhouette_table: sweep.table,
        silhouette_k: sweep.k,
    })
}

/// RC1 (uniform) or RC2 (clustered) scenario from a spec.
pub fn generate_random_scenario(spec: &ScenarioSpec, seed: u64) -> Result<GeneratedScenario> {
    match spec.kind {
        ScenarioKind::Rc1Uniform => UniformGenerator {
            kind: ScenarioKind::Rc1Uniform,
        }
        .generate(spec, seed),
        ScenarioKind::Rc2Clustered => ClusteredGenerator.generate(spec, seed),
        other => Err(VdmError::invalid(format!(
            "random scenario generation expects rc1 or rc2, got {other}"
        ))),
    }
}

/// Scenario generators by name.
pub struct GeneratorRegistry {
    generators: Vec<Box<dyn ScenarioGenerator>>,
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        GeneratorRegistry {
            generators: Vec::new(),
        }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(UniformGenerator {
            kind: ScenarioKind::Rc1Uniform,
        }));
        r.register(Box::new(ClusteredGenerator));
        r.register(Box::new(UniformGenerator {
            kind: ScenarioKind::Cs1,
        }));
        r.register(Box::new(UniformGenerator {
            kind: ScenarioKind::Cs2,
        }));
        r
    }

    pub fn register(&mut self, generator: Box<dyn ScenarioGenerator>) {
        self.generators.retain(|g| g.name() != generator.name());
        self.generators.push(generator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ScenarioGenerator> {
        self.generators
            .iter()
            .find(|g| g.name() == name)
            .map(|g| g.as_ref())
            .ok_or_else(|| VdmError::invalid(format!("no generator named {name:?}")))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.generators.iter().map(|g| g.name()).collect()
    }

    /// Generates with the generator registered under the spec's kind.
    pub fn generate(&self, spec: &ScenarioSpec, seed: u64) -> Result<GeneratedScenario> {
        self.get(spec.kind.name())?.generate(spec, seed)
    }
}
