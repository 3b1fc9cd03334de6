use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;
use vdm_core::io::{
    read_hospitals, read_persons, read_points, scenario_from_bundle, BundleSettings,
};
use vdm_core::model::{validate_scenario, ModelVariant, Scenario, StaffTable};
use vdm_core::simulation::GainSetting;
use vdm_core::solver::{FrameSolution, SolverRegistry};
use vdm_core::vdm::WeightSpec;

use crate::failure::usage;
use crate::output::{Inputs, OutputDir};

pub const SOLUTION_FILE: &str = "solution.json";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const ASSIGNMENTS_HEADER: [&str; 6] = [
    "person_id",
    "priority",
    "dc_id",
    "staff_index",
    "distance",
    "weight",
];

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Scenario JSON, as written by `gen-scenario`.
    #[arg(long, conflicts_with_all = ["hospitals", "persons", "dc_coords", "staff", "priority_levels"])]
    pub scenario: Option<PathBuf>,
    /// Hospitals CSV; every row becomes a distribution center.
    #[arg(long, requires = "persons", required_unless_present = "scenario")]
    pub hospitals: Option<PathBuf>,
    /// Persons CSV, planar (`id,x,y,priority`) or with distances (`id,priority,d_0,...`).
    #[arg(long, requires = "hospitals")]
    pub persons: Option<PathBuf>,
    /// Hospital coordinates (`id,x,y`) for planar persons.
    #[arg(long)]
    pub dc_coords: Option<PathBuf>,
    /// Vaccine stock; required with a CSV bundle, overrides the scenario's otherwise.
    #[arg(long)]
    pub stock: Option<u64>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Staff per size class as `small,medium,large`.
    #[arg(long, value_parser = parse_staff)]
    pub staff: Option<StaffTable>,
    /// Defaults to the highest priority present.
    #[arg(long)]
    pub priority_levels: Option<u32>,
    /// b, p, d or pd.
    #[arg(long, default_value = "pd")]
    pub variant: ModelVariant,
    /// `auto` or `alpha,beta,gamma`.
    #[arg(long, default_value = "auto")]
    pub gains: GainSetting,
    #[arg(long, default_value = SolverRegistry::DEFAULT)]
    pub solver: String,
}

fn parse_staff(s: &str) -> Result<StaffTable, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err("expected three comma-separated counts".into());
    };
    let n = |v: &str| v.parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    StaffTable::new(n(a)?, n(b)?, n(c)?).map_err(|e| e.to_string())
}

fn load_scenario(args: &SolveArgs, inputs: &mut Inputs) -> Result<Scenario> {
    let mut scenario = if let Some(path) = &args.scenario {
        serde_json::from_slice::<Scenario>(&inputs.read(path)?)
            .with_context(|| path.display().to_string())?
    } else {
        let (Some(h_path), Some(p_path)) = (&args.hospitals, &args.persons) else {
            return Err(usage(
                "either --scenario or --hospitals with --persons is required",
            ));
        };
        let stock = args
            .stock
            .ok_or_else(|| usage("--stock is required with --hospitals/--persons"))?;
        let hospitals = read_hospitals(inputs.read(h_path)?.as_slice())
            .with_context(|| h_path.display().to_string())?;
        let persons = read_persons(inputs.read(p_path)?.as_slice())
            .with_context(|| p_path.display().to_string())?;
        let points = match &args.dc_coords {
            Some(path) => Some(
                read_points(inputs.read(path)?.as_slice())
                    .with_context(|| path.display().to_string())?,
            ),
            None => None,
        };
        let settings = BundleSettings {
            staff: args.staff.unwrap_or_default(),
            stock,
            frames: args.frames.unwrap_or(1),
            priority_levels: args.priority_levels,
        };
        scenario_from_bundle(hospitals, persons, points.as_deref(), &settings)?
    };
    if let Some(stock) = args.stock {
        scenario.stock = stock;
    }
    if let Some(frames) = args.frames {
        scenario.frames = frames;
    }
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(usage(format!("invalid scenario: {}", list.join("; "))));
    }
    Ok(scenario)
}

pub fn run(args: &SolveArgs, out_dir: &Path) -> Result<()> {
    let mut inputs = Inputs::default();
    let scenario = load_scenario(args, &mut inputs)?;
    let registry = SolverRegistry::standard();
    let solver = registry.get(&args.solver)?;
    let gains = args.gains.resolve(&scenario);
    let spec = WeightSpec::new(args.variant, gains);
    let eligible: Vec<usize> = (0..scenario.persons.len()).collect();
    let solution = solver.solve(&scenario, &eligible, &spec, scenario.stock)?;

    let summary = summarize(&scenario, &solution, &spec, &args.solver);
    let mut out = OutputDir::create(out_dir)?;
    out.write_json(SOLUTION_FILE, &solution)?;
    out.write_csv(
        ASSIGNMENTS_FILE,
        &ASSIGNMENTS_HEADER,
        solution.assignments.assignments.iter().map(|a| {
            let p = &scenario.persons[a.person_index];
            let d = scenario.distance(a.dc_index, a.person_index);
            [
                p.id.to_string(),
                p.priority.to_string(),
                scenario.dcs[a.dc_index].hospital.id.to_string(),
                a.staff_index.to_string(),
                d.to_string(),
                spec.weight(p.priority, d).to_string(),
            ]
        }),
    )?;
    out.write(SUMMARY_FILE, summary.as_bytes())?;
    print!("{summary}");

    let config = json!({
        "scenario": args.scenario,
        "hospitals": args.hospitals,
        "persons": args.persons,
        "dc_coords": args.dc_coords,
        "staff": args.staff,
        "priority_levels": scenario.priority_levels,
        "stock": scenario.stock,
        "frames": scenario.frames,
        "variant": args.variant,
        "gains": args.gains,
        "resolved_gains": gains,
        "solver": args.solver,
    });
    out.finish("solve", config, None, inputs)?;
    Ok(())
}

fn summarize(s: &Scenario, solution: &FrameSolution, spec: &WeightSpec, solver: &str) -> String {
    let g = spec.gains;
    let mut text = String::new();
    let _ = writeln!(text, "variant    {}", spec.variant.long_name());
    let _ = writeln!(
        text,
        "gains      alpha={} beta={} gamma={}",
        g.alpha, g.beta, g.gamma
    );
    let _ = writeln!(text, "solver     {solver}");
    let _ = writeln!(text, "persons    {}", s.persons.len());
    let _ = writeln!(text, "staff      {}", s.total_staff());
    let _ = writeln!(text, "stock      {}", s.stock);
    let _ = writeln!(text, "assigned   {}", solution.assigned_count);
    let _ = writeln!(text, "objective  {}", solution.objective);

    let population = s.population_by_priority();
    let mut assigned = vec![0u64; population.len()];
    for a in &solution.assignments.assignments {
        assigned[s.persons[a.person_index].priority as usize - 1] += 1;
    }
    let _ = writeln!(text, "\npriority  persons  assigned");
    for (level, (n, k)) in population.iter().zip(&assigned).enumerate().rev() {
        let _ = writeln!(text, "{:>8}  {n:>7}  {k:>8}", level + 1);
    }
    text
}
