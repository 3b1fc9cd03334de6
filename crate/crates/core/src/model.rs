//! Domain types shared by the clustering, solver and simulation layers.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VdmError};

/// Absolute tolerance for the symmetry check on distance matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Funding {
    #[serde(rename = "PVT")]
    Private,
    #[serde(rename = "PUB")]
    Public,
}

impl FromStr for Funding {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "PVT" => Ok(Funding::Private),
            "PUB" => Ok(Funding::Public),
            other => Err(VdmError::invalid(format!(
                "funding must be PVT or PUB, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    #[serde(rename = "SMALL")]
    Small,
    #[serde(rename = "MED")]
    Medium,
    #[serde(rename = "LARGE")]
    Large,
}

impl SizeClass {
    pub fn label(self) -> &'static str {
        match self {
            SizeClass::Small => "SMALL",
            SizeClass::Medium => "MED",
            SizeClass::Large => "LARGE",
        }
    }
}

impl FromStr for SizeClass {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "SMALL" => Ok(SizeClass::Small),
            "MED" => Ok(SizeClass::Medium),
            "LARGE" => Ok(SizeClass::Large),
            other => Err(VdmError::invalid(format!(
                "size_class must be SMALL, MED or LARGE, got {other:?}"
            ))),
        }
    }
}

/// Staff count per hospital size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaffTable {
    pub small: usize,
    pub medium: usize,
    pub large: usize,
}

impl Default for StaffTable {
    fn default() -> Self {
        StaffTable {
            small: 5,
            medium: 20,
            large: 40,
        }
    }
}

impl StaffTable {
    pub fn new(small: usize, medium: usize, large: usize) -> Result<Self> {
        if small == 0 || medium == 0 || large == 0 {
            return Err(VdmError::invalid("staff counts must be positive"));
        }
        Ok(StaffTable {
            small,
            medium,
            large,
        })
    }

    pub fn staff(&self, class: SizeClass) -> usize {
        match class {
            SizeClass::Small => self.small,
            SizeClass::Medium => self.medium,
            SizeClass::Large => self.large,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hospital {
    pub id: u32,
    pub name: String,
    pub zone: String,
    pub funding: Funding,
    pub size_class: SizeClass,
}

/// Dense symmetric matrix of nonnegative pairwise distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from rows, rejecting anything that is not square,
    /// finite, nonnegative, zero on the diagonal and symmetric.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(VdmError::parse(
                    format!("row {}", r + 1),
                    format!("expected {n} columns, found {}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        let m = DistanceMatrix { n, data };
        if let Some(v) = m.violations().into_iter().next() {
            return Err(VdmError::parse(v.field, v.rule));
        }
        Ok(m)
    }

    /// Euclidean distances between planar points.
    pub fn from_points(points: &[(f64, f64)]) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = euclidean(points[a], points[b]);
                data[a * n + b] = d;
                data[b * n + a] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.n..(a + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|a| self.row(a).to_vec()).collect()
    }

    /// Every broken invariant, naming the offending row and column.
    pub fn violations(&self) -> Vec<Violation> {
        let n = self.n;
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let v = self.get(a, b);
                let at = format!("row {}, column {}", a + 1, b + 1);
                if !v.is_finite() || v < 0.0 {
                    out.push(Violation::new(
                        at,
                        format!("distance must be finite and >= 0, got {v}"),
                    ));
                } else if a == b && v != 0.0 {
                    out.push(Violation::new(at, format!("diagonal must be 0, got {v}")));
                } else if b > a {
                    let w = self.get(b, a);
                    if w.is_finite() && (v - w).abs() > SYMMETRY_TOLERANCE {
                        out.push(Violation::new(
                            at,
                            format!(
                                "matrix is not symmetric: {v} vs {w} at row {}, column {}",
                                b + 1,
                                a + 1
                            ),
                        ));
                    }
                }
            }
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for DistanceMatrix {
    type Error = VdmError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DistanceMatrix::from_rows(rows)
    }
}

impl From<DistanceMatrix> for Vec<Vec<f64>> {
    fn from(m: DistanceMatrix) -> Self {
        m.rows()
    }
}

pub fn euclidean(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Planar {
        x: f64,
        y: f64,
    },
    /// Precomputed distance to each DC, in DC order.
    Distances(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: u32,
    /// 1 is the lowest level; higher levels are served first.
    pub priority: u32,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCenter {
    pub hospital: Hospital,
    pub staff_count: usize,
}

/// One allocation problem: who can be vaccinated where, and with how much stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dcs: Vec<DistributionCenter>,
    pub persons: Vec<Person>,
    /// Row per DC, column per person.
    pub dc_person_distance: Vec<Vec<f64>>,
    pub stock: u64,
    pub frames: usize,
    pub priority_levels: u32,
}

impl Scenario {
    #[inline]
    pub fn distance(&self, dc: usize, person: usize) -> f64 {
        self.dc_person_distance[dc][person]
    }

    pub fn total_staff(&self) -> usize {
        self.dcs.iter().map(|d| d.staff_count).sum()
    }

    /// Head count per priority level; index 0 is level 1.
    pub fn population_by_priority(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.priority_levels as usize];
        for p in &self.persons {
            if p.priority >= 1 && (p.priority as usize) <= counts.len() {
                counts[p.priority as usize - 1] += 1;
            }
        }
        counts
    }
}

/// A broken structural rule, reported as data rather than as an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every structural invariant of a scenario. An empty result means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.frames < 1 {
        out.push(Violation::new("frames", "must be >= 1"));
    }
    if s.priority_levels < 1 {
        out.push(Violation::new("priority_levels", "must be >= 1"));
    }

    let mut hospital_ids = HashSet::new();
    for (i, dc) in s.dcs.iter().enumerate() {
        if dc.staff_count < 1 {
            out.push(Violation::new(
                format!("dcs[{i}].staff_count"),
                "must be >= 1",
            ));
        }
        if !hospital_ids.insert(dc.hospital.id) {
            out.push(Violation::new(
                format!("dcs[{i}].hospital.id"),
                format!("duplicate hospital id {}", dc.hospital.id),
            ));
        }
    }

    let mut person_ids = HashSet::new();
    for (k, p) in s.persons.iter().enumerate() {
        if p.priority < 1 || p.priority > s.priority_levels {
            out.push(Violation::new(
                format!("persons[{k}].priority"),
                format!("priority {} outside [1, {}]", p.priority, s.priority_levels),
            ));
        }
        if !person_ids.insert(p.id) {
            out.push(Violation::new(
                format!("persons[{k}].id"),
                format!("duplicate person id {}", p.id),
            ));
        }
        if let Location::Distances(d) = &p.location {
            if d.len() != s.dcs.len() {
                out.push(Violation::new(
                    format!("persons[{k}].location"),
                    format!("{} distances for {} DCs", d.len(), s.dcs.len()),
                ));
            }
        }
    }

    let rows = s.dc_person_distance.len();
    let bad_cols = s
        .dc_person_distance
        .iter()
        .any(|r| r.len() != s.persons.len());
    if rows != s.dcs.len() || bad_cols {
        let cols = s.dc_person_distance.first().map_or(0, Vec::len);
        out.push(Violation::new(
            "dc_person_distance",
            format!(
                "dimensions {rows}x{cols} do not match {} DCs x {} persons",
                s.dcs.len(),
                s.persons.len()
            ),
        ));
    } else {
        for (i, row) in s.dc_person_distance.iter().enumerate() {
            for (k, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    out.push(Violation::new(
                        format!("dc_person_distance[{i}][{k}]"),
                        format!("distance must be finite and >= 0, got {d}"),
                    ));
                }
            }
        }
    }
    out
}

/// One `x[i][j][k] = 1` entry: staff `staff_index` of DC `dc_index` vaccinates `person_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub dc_index: usize,
    pub staff_index: usize,
    pub person_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssignmentSet {
    pub frame: usize,
    pub assignments: Vec<Assignment>,
}

impl AssignmentSet {
    pub fn new(frame: usize, assignments: Vec<Assignment>) -> Self {
        AssignmentSet { frame, assignments }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Weights on the coverage, priority and distance terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainFactors {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GainFactors {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let g = GainFactors { alpha, beta, gamma };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(VdmError::invalid(format!(
                "gain factors must be finite and >= 0, got {self:?}"
            )));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(VdmError::invalid(
                "at least one gain factor must be positive",
            ));
        }
        Ok(())
    }

    /// alpha = |E|/4, beta = |E|/(4|P|), gamma = 1.
    pub fn auto(population: usize, priority_levels: u32) -> Self {
        let e = population as f64;
        GainFactors {
            alpha: 0.25 * e,
            beta: 0.25 * e / f64::from(priority_levels.max(1)),
            gamma: 1.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        GainFactors {
            alpha: self.alpha * factor,
            beta: self.beta * factor,
            gamma: self.gamma * factor,
        }
    }
}

impl FromStr for GainFactors {
    type Err = VdmError;

    /// Parses `alpha,beta,gamma`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(VdmError::invalid(format!(
                "gains must be `alpha,beta,gamma`, got {s:?}"
            )));
        }
        let mut v = [0.0; 3];
        for (slot, part) in v.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| VdmError::invalid(format!("gain {part:?} is not a number")))?;
        }
        GainFactors::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    B,
    P,
    D,
    Pd,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::B,
        ModelVariant::P,
        ModelVariant::D,
        ModelVariant::Pd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::B => "b",
            ModelVariant::P => "p",
            ModelVariant::D => "d",
            ModelVariant::Pd => "pd",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            ModelVariant::B => "B-VDM",
            ModelVariant::P => "P-VDM",
            ModelVariant::D => "D-VDM",
            ModelVariant::Pd => "PD-VDM",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        match key.as_str() {
            "b" | "bvdm" => Ok(ModelVariant::B),
            "p" | "pvdm" => Ok(ModelVariant::P),
            "d" | "dvdm" => Ok(ModelVariant::D),
            "pd" | "pdvdm" => Ok(ModelVariant::Pd),
            _ => Err(VdmError::invalid(format!(
                "unknown model variant {s:?} (expected b, p, d or pd)"
            ))),
        }
    }
}
