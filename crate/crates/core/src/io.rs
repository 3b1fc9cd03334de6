//! CSV and JSON readers/writers for hospitals, persons, distance matrices
//! and scenarios.
//!
//! * `hospitals.csv`: `id,name,zone,funding,size_class`
//! * `persons.csv`: `id,x,y,priority` (planar) or
//!   `id,priority,d_0,...,d_{H-1}` (explicit distances, one column per DC)
//! * distance matrix: headerless `n x n` CSV of reals

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, VdmError};
use crate::model::{
    euclidean, DistanceMatrix, DistributionCenter, Hospital, Location, Person, Scenario, StaffTable,
};

fn csv_reader<R: Read>(r: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// 1-based data row (after any header) and 0-based column index, formatted
/// 1-based.
fn at(row: usize, col: usize) -> String {
    format!("row {row}, column {}", col + 1)
}

fn field<'a>(rec: &'a csv::StringRecord, col: usize, name: &str, row: usize) -> Result<&'a str> {
    rec.get(col)
        .ok_or_else(|| VdmError::parse(at(row, col), format!("missing {name}")))
}

fn number<T: std::str::FromStr>(text: &str, what: &str, row: usize, col: usize) -> Result<T> {
    text.parse().map_err(|_| {
        VdmError::parse(
            at(row, col),
            format!("{what} {text:?} is not a valid number"),
        )
    })
}

pub fn read_distance_matrix<R: Read>(r: R) -> Result<DistanceMatrix> {
    let mut rows = Vec::new();
    for (i, rec) in csv_reader(r, false).records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, v)| number::<f64>(v, "distance", i + 1, j))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DistanceMatrix::from_rows(rows)
}

pub fn read_distance_matrix_file(path: &Path) -> Result<DistanceMatrix> {
    read_distance_matrix(File::open(path)?).map_err(|e| with_file(e, path))
}

fn with_file(e: VdmError, path: &Path) -> VdmError {
    match e {
        VdmError::Parse { location, message } => VdmError::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    }
}

pub fn write_distance_matrix<W: Write>(w: W, m: &DistanceMatrix) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.rows() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_hospitals<R: Read>(r: R) -> Result<Vec<Hospital>> {
    let mut reader = csv_reader(r, true);
    let expected = ["id", "name", "zone", "funding", "size_class"];
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(VdmError::parse(
            "header",
            format!("expected `{}`", expected.join(",")),
        ));
    }
    let mut out: Vec<Hospital> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let h = Hospital {
            id: number(field(&rec, 0, "id", row)?, "id", row, 0)?,
            name: field(&rec, 1, "name", row)?.to_string(),
            zone: field(&rec, 2, "zone", row)?.to_string(),
            funding: field(&rec, 3, "funding", row)?
                .parse()
                .map_err(|e: VdmError| VdmError::parse(at(row, 3), e.to_string()))?,
            size_class: field(&rec, 4, "size_class", row)?
                .parse()
                .map_err(|e: VdmError| VdmError::parse(at(row, 4), e.to_string()))?,
        };
        if out.iter().any(|o| o.id == h.id) {
            return Err(VdmError::parse(
                at(row, 0),
                format!("duplicate hospital id {}", h.id),
            ));
        }
        out.push(h);
    }
    Ok(out)
}

pub fn write_hospitals<W: Write>(w: W, hospitals: &[Hospital]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "name", "zone", "funding", "size_class"])?;
    for h in hospitals {
        let funding = match h.funding {
            crate::model::Funding::Private => "PVT",
            crate::model::Funding::Public => "PUB",
        };
        out.write_record([
            h.id.to_string(),
            h.name.clone(),
            h.zone.clone(),
            funding.to_string(),
            h.size_class.label().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `persons.csv`, detecting planar vs explicit-distance mode from the header.
pub fn read_persons<R: Read>(r: R) -> Result<Vec<Person>> {
    let mut reader = csv_reader(r, true);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let planar = headers == ["id", "x", "y", "priority"];
    let explicit = headers.len() >= 3
        && headers[0] == "id"
        && headers[1] == "priority"
        && headers[2..]
            .iter()
            .enumerate()
            .all(|(i, h)| *h == format!("d_{i}"));
    if !planar && !explicit {
        return Err(VdmError::parse(
            "header",
            "expected `id,x,y,priority` or `id,priority,d_0,d_1,...`",
        ));
    }

    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let id = number(field(&rec, 0, "id", row)?, "id", row, 0)?;
        let person = if planar {
            let x = number(field(&rec, 1, "x", row)?, "x", row, 1)?;
            let y = number(field(&rec, 2, "y", row)?, "y", row, 2)?;
            let priority = number(field(&rec, 3, "priority", row)?, "priority", row, 3)?;
            Person {
                id,
                priority,
                location: Location::Planar { x, y },
            }
        } else {
            let priority = number(field(&rec, 1, "priority", row)?, "priority", row, 1)?;
            let d = (2..headers.len())
                .map(|c| {
                    let v: f64 = number(field(&rec, c, "distance", row)?, "distance", row, c)?;
                    if !v.is_finite() || v < 0.0 {
                        return Err(VdmError::parse(
                            at(row, c),
                            format!("distance must be finite and >= 0, got {v}"),
                        ));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<f64>>>()?;
            Person {
                id,
                priority,
                location: Location::Distances(d),
            }
        };
        out.push(person);
    }
    Ok(out)
}

/// Writes persons in explicit-distance mode using the scenario's matrix.
pub fn write_persons<W: Write>(w: W, scenario: &Scenario) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string(), "priority".to_string()];
    header.extend((0..scenario.dcs.len()).map(|i| format!("d_{i}")));
    out.write_record(&header)?;
    for (k, p) in scenario.persons.iter().enumerate() {
        let mut rec = vec![p.id.to_string(), p.priority.to_string()];
        rec.extend((0..scenario.dcs.len()).map(|i| scenario.distance(i, k).to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads DC coordinates (`id,x,y`) for planar-mode persons.
pub fn read_points<R: Read>(r: R) -> Result<Vec<(u32, (f64, f64))>> {
    let mut reader = csv_reader(r, true);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers != ["id", "x", "y"] {
        return Err(VdmError::parse("header", "expected `id,x,y`"));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        out.push((
            number(field(&rec, 0, "id", row)?, "id", row, 0)?,
            (
                number(field(&rec, 1, "x", row)?, "x", row, 1)?,
                number(field(&rec, 2, "y", row)?, "y", row, 2)?,
            ),
        ));
    }
    Ok(out)
}

/// Everything besides the CSV files needed to assemble a scenario.
#[derive(Debug, Clone)]
pub struct BundleSettings {
    pub staff: StaffTable,
    pub stock: u64,
    pub frames: usize,
    /// Defaults to the highest priority found.
    pub priority_levels: Option<u32>,
}

/// Assembles a scenario from hospitals (the DCs, in file order), persons and,
/// for planar persons, DC coordinates keyed by hospital id.
pub fn scenario_from_bundle(
    hospitals: Vec<Hospital>,
    persons: Vec<Person>,
    dc_points: Option<&[(u32, (f64, f64))]>,
    settings: &BundleSettings,
) -> Result<Scenario> {
    let mut matrix = vec![Vec::with_capacity(persons.len()); hospitals.len()];
    for (k, p) in persons.iter().enumerate() {
        match &p.location {
            Location::Distances(d) => {
                if d.len() != hospitals.len() {
                    return Err(VdmError::parse(
                        format!("persons row {}", k + 1),
                        format!("{} distances for {} hospitals", d.len(), hospitals.len()),
                    ));
                }
                for (row, v) in matrix.iter_mut().zip(d) {
                    row.push(*v);
                }
            }
            Location::Planar { x, y } => {
                let points = dc_points
                    .ok_or_else(|| VdmError::invalid("planar persons need DC coordinates"))?;
                for (row, h) in matrix.iter_mut().zip(&hospitals) {
                    let at = points
                        .iter()
                        .find(|(id, _)| *id == h.id)
                        .map(|(_, pt)| *pt)
                        .ok_or_else(|| {
                            VdmError::invalid(format!("no coordinates for hospital {}", h.id))
                        })?;
                    row.push(euclidean(at, (*x, *y)));
                }
            }
        }
    }
    let levels = settings
        .priority_levels
        .unwrap_or_else(|| persons.iter().map(|p| p.priority).max().unwrap_or(1));
    let dcs = hospitals
        .into_iter()
        .map(|h| DistributionCenter {
            staff_count: settings.staff.staff(h.size_class),
            hospital: h,
        })
        .collect();
    Ok(Scenario {
        dcs,
        persons,
        dc_person_distance: matrix,
        stock: settings.stock,
        frames: settings.frames,
        priority_levels: levels,
    })
}

pub fn read_scenario_json(path: &Path) -> Result<Scenario> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}
