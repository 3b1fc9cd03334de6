use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use vdm_core::model::{ModelVariant, Scenario};
use vdm_core::simulation::{
    run_variants, ArrivalRule, GainSetting, ScenarioKind, ScenarioSource, ScenarioSpec,
    SimulationConfig, SimulationReport,
};
use vdm_core::solver::SolverRegistry;
use vdm_core::VdmError;

use crate::failure::usage;
use crate::output::{Inputs, OutputDir};

pub const REPORT_FILE: &str = "report.json";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const COVERAGE_HEADER: [&str; 5] = [
    "variant",
    "priority",
    "population",
    "vaccinated",
    "coverage_percent",
];
pub const DISTANCE_FILE: &str = "distance.csv";
pub const DISTANCE_HEADER: [&str; 4] = [
    "variant",
    "vaccinated",
    "total_distance",
    "average_distance",
];
pub const FRAMES_FILE: &str = "frames.csv";
pub const FRAMES_HEADER: [&str; 5] = [
    "variant",
    "frame",
    "vaccinated",
    "objective",
    "remaining_stock",
];

/// One variant or all four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum VariantChoice {
    One(ModelVariant),
    All,
}

impl VariantChoice {
    pub fn variants(self) -> Vec<ModelVariant> {
        match self {
            VariantChoice::One(v) => vec![v],
            VariantChoice::All => ModelVariant::ALL.to_vec(),
        }
    }
}

impl FromStr for VariantChoice {
    type Err = VdmError;

    fn from_str(s: &str) -> Result<Self, VdmError> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(VariantChoice::All)
        } else {
            s.parse().map(VariantChoice::One)
        }
    }
}

impl TryFrom<String> for VariantChoice {
    type Error = VdmError;

    fn try_from(s: String) -> Result<Self, VdmError> {
        s.parse()
    }
}

impl fmt::Display for VariantChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariantChoice::One(v) => f.write_str(v.name()),
            VariantChoice::All => f.write_str("all"),
        }
    }
}

impl From<VariantChoice> for String {
    fn from(v: VariantChoice) -> Self {
        v.to_string()
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// rc1, rc2, cs1, cs2 or custom.
    #[arg(long)]
    pub scenario: Option<ScenarioKind>,
    /// Scenario JSON for `--scenario custom`.
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    /// b, p, d, pd or all [default: all].
    #[arg(long)]
    pub variant: Option<VariantChoice>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// `auto` or `alpha,beta,gamma` [default: auto].
    #[arg(long)]
    pub gains: Option<GainSetting>,
    /// Overrides the scenario's frame count.
    #[arg(long)]
    pub frames: Option<usize>,
    /// all or even-batches [default: all].
    #[arg(long)]
    pub arrival: Option<ArrivalRule>,
    #[arg(long)]
    pub solver: Option<String>,
    /// JSON settings file; a previous run's manifest also works.
    /// Flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Settings as they appear in a config file. Every field is optional so
/// that a file can set just a few of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ScenarioSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<PathBuf>,
    #[serde(default)]
    pub variant: Option<VariantChoice>,
    #[serde(default)]
    pub gains: Option<GainSetting>,
    #[serde(default)]
    pub frames: Option<usize>,
    #[serde(default)]
    pub arrival: Option<ArrivalRule>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: Option<String>,
}

fn read_settings(path: &Path, inputs: &mut Inputs) -> Result<SimulateSettings> {
    let bytes = inputs.read(path)?;
    let mut value: serde_json::Value =
        serde_json::from_slice(&bytes).with_context(|| path.display().to_string())?;
    if value.get("subcommand").is_some() {
        if value["subcommand"] != "simulate" {
            return Err(usage(format!(
                "{} is a manifest for {}, not simulate",
                path.display(),
                value["subcommand"]
            )));
        }
        value = value["config"].take();
    }
    serde_json::from_value(value).with_context(|| path.display().to_string())
}

/// Applies command line > config file > defaults.
fn resolve(args: &SimulateArgs, file: SimulateSettings) -> Result<SimulateSettings> {
    let mut source = file.source;
    let mut scenario_file = file.scenario_file;
    match (args.scenario, &args.scenario_file) {
        (Some(ScenarioKind::Custom) | None, Some(path)) => {
            source = None;
            scenario_file = Some(path.clone());
        }
        (Some(ScenarioKind::Custom), None) => {
            return Err(usage("--scenario custom needs --scenario-file"));
        }
        (Some(kind), None) => {
            source = Some(ScenarioSource::Generated {
                spec: ScenarioSpec::for_kind(kind)?,
            });
            scenario_file = None;
        }
        (Some(kind), Some(_)) => {
            return Err(usage(format!(
                "--scenario-file only applies to --scenario custom, not {kind}"
            )));
        }
        (None, None) => {}
    }
    match (&source, &scenario_file) {
        (None, None) => {
            return Err(usage(
                "no scenario given; pass --scenario or a config file with a source",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(usage("config sets both source and scenario_file"));
        }
        _ => {}
    }
    Ok(SimulateSettings {
        source,
        scenario_file,
        variant: Some(args.variant.or(file.variant).unwrap_or(VariantChoice::All)),
        gains: Some(args.gains.or(file.gains).unwrap_or_default()),
        frames: args.frames.or(file.frames),
        arrival: Some(args.arrival.or(file.arrival).unwrap_or_default()),
        seed: Some(args.seed.or(file.seed).unwrap_or(0)),
        solver: Some(
            args.solver
                .clone()
                .or(file.solver)
                .unwrap_or_else(|| SolverRegistry::DEFAULT.to_string()),
        ),
    })
}

fn to_config(s: &SimulateSettings, inputs: &mut Inputs) -> Result<SimulationConfig> {
    let variant = s.variant.unwrap_or(VariantChoice::All).variants()[0];
    let seed = s.seed.unwrap_or(0);
    let mut cfg = match (&s.source, &s.scenario_file) {
        (Some(source), _) => {
            let mut cfg = SimulationConfig::generated(ScenarioSpec::rc1(), variant, seed);
            cfg.source = source.clone();
            cfg
        }
        (None, Some(path)) => {
            let scenario: Scenario = serde_json::from_slice(&inputs.read(path)?)
                .with_context(|| path.display().to_string())?;
            let mut cfg = SimulationConfig::explicit(scenario, variant);
            cfg.seed = seed;
            cfg
        }
        (None, None) => unreachable!("resolve rejects settings without a scenario"),
    };
    cfg.gains = s.gains.unwrap_or_default();
    cfg.frames = s.frames;
    cfg.arrival = s.arrival.unwrap_or_default();
    cfg.solver = s
        .solver
        .clone()
        .unwrap_or_else(|| SolverRegistry::DEFAULT.to_string());
    if let ScenarioSource::Generated { spec } = &cfg.source {
        spec.check()?;
    }
    SolverRegistry::standard().get(&cfg.solver)?;
    Ok(cfg)
}

pub fn run(args: &SimulateArgs, out_dir: &Path) -> Result<()> {
    let mut inputs = Inputs::default();
    let file = match &args.config {
        Some(path) => read_settings(path, &mut inputs)?,
        None => SimulateSettings::default(),
    };
    let settings = resolve(args, file)?;
    let cfg = to_config(&settings, &mut inputs)?;
    let variants = settings.variant.unwrap_or(VariantChoice::All).variants();
    let reports = run_variants(&cfg, &variants)?;

    let mut out = OutputDir::create(out_dir)?;
    write_reports(&mut out, &reports)?;
    for r in &reports {
        println!(
            "{:<6} vaccinated {:>6} of {:>6} stock, avg distance {}",
            r.variant.long_name(),
            r.total_vaccinated,
            r.initial_stock,
            r.average_travel_distance
                .map_or_else(|| "n/a".to_string(), |d| format!("{d:.4}")),
        );
    }
    let seed = settings.seed;
    out.finish("simulate", serde_json::to_value(&settings)?, seed, inputs)?;
    Ok(())
}

fn write_reports(out: &mut OutputDir, reports: &[SimulationReport]) -> Result<()> {
    out.write_json(REPORT_FILE, reports)?;

    let mut coverage = Vec::new();
    let mut distance = Vec::new();
    let mut frames = Vec::new();
    for r in reports {
        let name = r.variant.name();
        for (level, ((n, k), pct)) in r
            .population_by_priority
            .iter()
            .zip(&r.vaccinated_by_priority)
            .zip(&r.coverage_percent)
            .enumerate()
        {
            coverage.push([
                name.to_string(),
                (level + 1).to_string(),
                n.to_string(),
                k.to_string(),
                pct.to_string(),
            ]);
        }
        distance.push([
            name.to_string(),
            r.total_vaccinated.to_string(),
            r.total_travel_distance.to_string(),
            r.average_travel_distance
                .map(|d| d.to_string())
                .unwrap_or_default(),
        ]);
        let mut remaining = r.initial_stock;
        for (t, f) in r.frames.iter().enumerate() {
            remaining -= f.assigned_count as u64;
            frames.push([
                name.to_string(),
                t.to_string(),
                f.assigned_count.to_string(),
                f.objective.to_string(),
                remaining.to_string(),
            ]);
        }
    }
    out.write_csv(COVERAGE_FILE, &COVERAGE_HEADER, coverage)?;
    out.write_csv(DISTANCE_FILE, &DISTANCE_HEADER, distance)?;
    out.write_csv(FRAMES_FILE, &FRAMES_HEADER, frames)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> SimulateArgs {
        SimulateArgs {
            scenario: None,
            scenario_file: None,
            variant: None,
            seed: None,
            gains: None,
            frames: None,
            arrival: None,
            solver: None,
            config: None,
        }
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let file = SimulateSettings {
            source: Some(ScenarioSource::Generated {
                spec: ScenarioSpec::rc2(),
            }),
            variant: Some(VariantChoice::One(ModelVariant::P)),
            seed: Some(4),
            frames: Some(3),
            ..SimulateSettings::default()
        };
        let mut a = args();
        a.seed = Some(9);
        let s = resolve(&a, file).unwrap();
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.variant, Some(VariantChoice::One(ModelVariant::P)));
        assert_eq!(s.frames, Some(3));
        assert_eq!(s.gains, Some(GainSetting::Auto));
        assert_eq!(s.solver.as_deref(), Some(SolverRegistry::DEFAULT));
    }

    #[test]
    fn scenario_flag_replaces_file_source() {
        let file = SimulateSettings {
            scenario_file: Some("x.json".into()),
            ..SimulateSettings::default()
        };
        let mut a = args();
        a.scenario = Some(ScenarioKind::Cs1);
        let s = resolve(&a, file).unwrap();
        assert!(s.scenario_file.is_none());
        assert!(matches!(s.source, Some(ScenarioSource::Generated { .. })));
    }

    #[test]
    fn missing_scenario_is_a_usage_error() {
        let e = resolve(&args(), SimulateSettings::default()).unwrap_err();
        assert_eq!(crate::failure::exit_code(&e), crate::failure::EXIT_USAGE);
        let mut a = args();
        a.scenario = Some(ScenarioKind::Custom);
        assert!(resolve(&a, SimulateSettings::default()).is_err());
    }

    #[test]
    fn settings_round_trip_through_json() {
        let s = SimulateSettings {
            source: Some(ScenarioSource::Generated {
                spec: ScenarioSpec::cs1(),
            }),
            variant: Some(VariantChoice::All),
            gains: Some("2,1,0.5".parse().unwrap()),
            seed: Some(3),
            ..SimulateSettings::default()
        };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SimulateSettings>(&text).unwrap(), s);
    }
}
