//! Command-line surface. Every parameter block can also come from a JSON
//! file passed with `--config`; flags given on the command line win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "pertubox", version, about = "Perturbation, anonymization and evaluation for privacy-preserving data mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perturb a dataset and write the result plus a JSON sidecar.
    Perturb(WithConfig<PerturbParams>),
    /// Generalize quasi-identifiers to reach k-anonymity.
    Anonymize(WithConfig<AnonymizeParams>),
    /// Reconstruct the original value distribution of a noisy column.
    Reconstruct(WithConfig<ReconstructParams>),
    /// Estimate the true "yes" rate of a randomized-response column.
    Estimate(WithConfig<EstimateParams>),
    /// Measure privacy and information loss between two datasets.
    Evaluate(WithConfig<EvaluateParams>),
    /// Print the technique assessment registry as JSON.
    Registry(WithConfig<RegistryParams>),
}

#[derive(Debug, Args)]
pub struct WithConfig<P: Args> {
    /// JSON file with default parameter values (keys as the long flag
    /// names, with `_` for `-`).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Gaussian,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    ColumnWise,
    RowWise,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbParams {
    /// rotate, geometric, condense, projection, svd, nmf, noise or
    /// randomized-response
    #[arg(long)]
    pub technique: Option<String>,
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub output: Option<PathBuf>,
    /// Sidecar path; defaults to the output path with `.json` appended.
    #[arg(long, value_name = "JSON")]
    pub sidecar: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include the secret (rotation, translation, factors, ...) in the sidecar.
    #[arg(long)]
    pub emit_secret: bool,
    /// Noise std (geometric, Gaussian noise addition).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Half-width of uniform noise.
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_family: Option<NoiseFamily>,
    /// Condensation group size K.
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Projection target dimension.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// Std of the projection-matrix entries.
    #[arg(long)]
    pub entry_std: Option<f64>,
    /// Target rank for svd and nmf.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Randomized-response retention probability.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Columns to perturb (noise, randomized-response); comma separated.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnonymizeParams {
    /// k-anonymity (default), l-diversity or t-closeness
    #[arg(long)]
    pub technique: Option<String>,
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub output: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub hierarchies: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_suppression: Option<f64>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub sensitive: Option<String>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructParams {
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum)]
    pub noise_family: Option<NoiseFamily>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output JSON; standard output when absent.
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateParams {
    #[arg(long)]
    pub technique: Option<String>,
    #[arg(long, value_name = "CSV")]
    pub original: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub modified: Option<PathBuf>,
    /// Schema of the original; inferred from the CSV when absent.
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    /// Schema of the modified file; defaults to the original's when the
    /// column names agree, else inferred.
    #[arg(long, value_name = "JSON")]
    pub modified_schema: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_family: Option<NoiseFamily>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub sensitive: Option<String>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistryParams {
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
}
