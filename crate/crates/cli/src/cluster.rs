use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use vdm_core::clustering::{k_medoids, select_optimal_k, SilhouetteRow, DEFAULT_RESTARTS};
use vdm_core::io::{read_distance_matrix, read_hospitals};

use crate::failure::usage;
use crate::output::{Inputs, OutputDir};

pub const CLUSTERING_FILE: &str = "clustering.json";
pub const SILHOUETTE_FILE: &str = "silhouette.csv";
pub const SILHOUETTE_HEADER: [&str; 3] = ["k", "silhouette", "cost"];

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Square, symmetric distance matrix as headerless CSV.
    pub matrix: PathBuf,
    /// Hospitals CSV whose rows name the matrix rows, in order.
    #[arg(long)]
    pub hospitals: Option<PathBuf>,
    /// Use this k instead of the best silhouette.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random initializations per k.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Serialize)]
struct ClusterOutput<'a> {
    k: usize,
    selected_by: &'static str,
    medoid_indices: &'a [usize],
    medoid_ids: Vec<u32>,
    labels: &'a [usize],
    silhouette: f64,
    iterations: usize,
    cost: f64,
    silhouette_table: &'a [SilhouetteRow],
}

pub fn run(args: &ClusterArgs, out_dir: &std::path::Path) -> Result<()> {
    if args.restarts == 0 {
        return Err(usage("--restarts must be at least 1"));
    }
    let mut inputs = Inputs::default();
    let bytes = inputs.read(&args.matrix)?;
    let dist = read_distance_matrix(bytes.as_slice())
        .with_context(|| args.matrix.display().to_string())?;

    let ids: Vec<u32> = match &args.hospitals {
        Some(path) => {
            let hospitals = read_hospitals(inputs.read(path)?.as_slice())
                .with_context(|| path.display().to_string())?;
            if hospitals.len() != dist.len() {
                return Err(usage(format!(
                    "{} lists {} hospitals but the matrix has {} rows",
                    path.display(),
                    hospitals.len(),
                    dist.len()
                )));
            }
            hospitals.iter().map(|h| h.id).collect()
        }
        None => (0..dist.len() as u32).collect(),
    };

    let sweep = select_optimal_k(&dist, args.seed, args.restarts)?;
    let (result, selected_by) = match args.k {
        Some(k) => (k_medoids(&dist, k, args.seed, args.restarts)?, "fixed"),
        None => (sweep.best.clone(), "silhouette"),
    };

    let mut out = OutputDir::create(out_dir)?;
    out.write_json(
        CLUSTERING_FILE,
        &ClusterOutput {
            k: result.k,
            selected_by,
            medoid_indices: &result.medoid_indices,
            medoid_ids: result.medoid_indices.iter().map(|&m| ids[m]).collect(),
            labels: &result.labels,
            silhouette: result.silhouette,
            iterations: result.iterations,
            cost: result.cost,
            silhouette_table: &sweep.table,
        },
    )?;
    out.write_csv(
        SILHOUETTE_FILE,
        &SILHOUETTE_HEADER,
        sweep.table.iter().map(|r| {
            [
                r.k.to_string(),
                r.silhouette.to_string(),
                r.cost.to_string(),
            ]
        }),
    )?;

    println!(
        "k = {} ({selected_by}), silhouette {:.4}, medoids {:?}",
        result.k,
        result.silhouette,
        result
            .medoid_indices
            .iter()
            .map(|&m| ids[m])
            .collect::<Vec<_>>()
    );
    let config = json!({
        "matrix": args.matrix,
        "hospitals": args.hospitals,
        "k": args.k,
        "restarts": args.restarts,
    });
    out.finish("cluster", config, Some(args.seed), inputs)?;
    Ok(())
}
