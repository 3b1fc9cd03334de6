use std::path::Path;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use vdm_core::io::{write_hospitals, write_persons};
use vdm_core::model::{Scenario, SizeClass, StaffTable};
use vdm_core::simulation::{GeneratorRegistry, ScenarioKind, ScenarioSpec};

use crate::cluster::{SILHOUETTE_FILE, SILHOUETTE_HEADER};
use crate::output::{Inputs, OutputDir};

pub const SCENARIO_FILE: &str = "scenario.json";
pub const HOSPITALS_FILE: &str = "hospitals.csv";
pub const PERSONS_FILE: &str = "persons.csv";
pub const CANDIDATES_FILE: &str = "candidates.csv";
pub const CANDIDATES_HEADER: [&str; 4] = ["index", "x", "y", "selected"];

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// rc1, rc2, cs1 or cs2.
    #[arg(long)]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &GenerateArgs, out_dir: &Path) -> Result<()> {
    let spec = ScenarioSpec::for_kind(args.scenario)?;
    let generated = GeneratorRegistry::standard().generate(&spec, args.seed)?;
    let scenario = &generated.scenario;

    let mut out = OutputDir::create(out_dir)?;
    out.write_json(SCENARIO_FILE, scenario)?;

    let mut buf = Vec::new();
    let hospitals: Vec<_> = scenario.dcs.iter().map(|d| d.hospital.clone()).collect();
    write_hospitals(&mut buf, &hospitals)?;
    out.write(HOSPITALS_FILE, &buf)?;

    let mut buf = Vec::new();
    write_persons(&mut buf, scenario)?;
    out.write(PERSONS_FILE, &buf)?;

    out.write_csv(
        CANDIDATES_FILE,
        &CANDIDATES_HEADER,
        generated
            .candidate_points
            .iter()
            .enumerate()
            .map(|(i, (x, y))| {
                [
                    i.to_string(),
                    x.to_string(),
                    y.to_string(),
                    generated.dc_candidates.contains(&i).to_string(),
                ]
            }),
    )?;
    out.write_csv(
        SILHOUETTE_FILE,
        &SILHOUETTE_HEADER,
        generated.silhouette_table.iter().map(|r| {
            [
                r.k.to_string(),
                r.silhouette.to_string(),
                r.cost.to_string(),
            ]
        }),
    )?;

    let staff = staff_table(scenario);
    println!(
        "{}: {} persons, {} DCs ({} staff), stock {}, {} frames -> {}",
        args.scenario,
        scenario.persons.len(),
        scenario.dcs.len(),
        scenario.total_staff(),
        scenario.stock,
        scenario.frames,
        out.root().display()
    );
    if let Some(staff) = &staff {
        println!("rebuild from the CSV files with --staff {staff}");
    }
    let config = json!({ "spec": spec, "staff": staff });
    out.finish("gen-scenario", config, Some(args.seed), Inputs::default())?;
    Ok(())
}

/// The `--staff` value that maps hospitals.csv size classes back to these
/// staff counts, when it differs from the default table.
fn staff_table(scenario: &Scenario) -> Option<String> {
    let default = StaffTable::default();
    let mut table = [default.small, default.medium, default.large];
    for dc in &scenario.dcs {
        let slot = match dc.hospital.size_class {
            SizeClass::Small => 0,
            SizeClass::Medium => 1,
            SizeClass::Large => 2,
        };
        table[slot] = dc.staff_count;
    }
    let table = StaffTable::new(table[0], table[1], table[2]).ok()?;
    (table != default).then(|| format!("{},{},{}", table.small, table.medium, table.large))
}
