//! Privacy-loss and information-loss measurements on an (original,
//! modified) pair, plus per-technique checks of the property each
//! technique is meant to preserve.
//!
//! Boolean columns enter the numeric metrics as 0/1. Generalized interval
//! cells enter as their midpoints.

mod metrics;
mod registry;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::anonymize::{check_k_anonymity, check_l_diversity, check_t_closeness, AnonymizedTable, Cell, KVerdict};
use crate::data::{parse_bool, ColumnKind, Dataset, Role};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::value::{estimate_true_proportion, reconstruct_distribution, NoiseSpec, ReconstructionConfig};

pub use metrics::{ks_statistic, rank_displacement, sample_pairs};
pub use registry::{registry_entry, technique_registry, DmTask, Technique, TechniqueRegistryEntry, UNSPECIFIED};

/// Pairs sampled for distance-based metrics.
pub const MAX_PAIRS: usize = 500;
/// Rotation: largest tolerated relative change of a distance or inner product.
pub const ISOMETRY_TOL: f64 = 1e-9;
/// Geometric perturbation: largest tolerated mean relative distance change.
pub const GEOMETRIC_DISTORTION_MAX: f64 = 0.1;
/// Condensation: largest tolerated relative covariance error.
pub const CONDENSATION_COV_TOL: f64 = 1e-6;
/// SVD: relative tolerance on the Eckart–Young identity.
pub const ECKART_YOUNG_TOL: f64 = 1e-8;
/// Singular values below this fraction of the largest count as zero when
/// inferring the rank of a distorted matrix.
pub const RANK_TOL: f64 = 1e-8;
/// Projection: required share of pairs whose squared distance stays
/// within `±PROJECTION_BAND` of the original.
pub const PROJECTION_SHARE: f64 = 0.9;
pub const PROJECTION_BAND: f64 = 0.3;
/// Randomized response: estimate must lie within this many standard errors.
pub const RESPONSE_SE_BAND: f64 = 4.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLossMetrics {
    /// `‖X − X̂‖_F / ‖X‖_F`.
    pub value_difference: Option<f64>,
    /// Mean per-column rank displacement, normalized to [0, 1].
    pub rank_position_change: Option<f64>,
    /// Fraction of columns whose variance rank changed.
    pub attribute_rank_change: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InformationLossMetrics {
    /// `‖cov X − cov X̂‖_F / ‖cov X‖_F`.
    pub covariance_error: Option<f64>,
    /// Mean relative change of pairwise record distances on sampled pairs.
    pub distance_distortion: Option<f64>,
    /// Largest two-sample Kolmogorov–Smirnov statistic over the columns.
    pub per_column_ks: Option<f64>,
}

/// `None` metrics are not comparable for this pair (e.g. shapes differ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub technique: Technique,
    pub shapes_comparable: bool,
    pub privacy_loss_metrics: PrivacyLossMetrics,
    pub information_loss_metrics: InformationLossMetrics,
    pub preserved_property_verdicts: BTreeMap<String, bool>,
    /// Supporting numbers behind the verdicts.
    pub details: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateOptions {
    /// Seeds the distance-pair sample.
    pub seed: u64,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub t: Option<f64>,
    /// Randomized response retention probability; estimated from the data
    /// when absent.
    pub theta: Option<f64>,
    /// Noise model, required for noise addition.
    pub noise: Option<NoiseSpec>,
    /// Sensitive column for l-diversity and t-closeness; defaults to the
    /// first column with the sensitive role.
    pub sensitive: Option<String>,
    pub reconstruction: ReconstructionConfig,
}

/// Column-major numeric view: `cols[attribute][record]`.
#[derive(Clone, Debug)]
struct View {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
    n: usize,
}

fn dataset_view(ds: &Dataset) -> View {
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for spec in ds.schema().columns() {
        let col = match spec.kind {
            ColumnKind::Numeric => ds.numeric_column(&spec.name).expect("numeric").to_vec(),
            ColumnKind::Boolean => ds
                .boolean_column(&spec.name)
                .expect("boolean")
                .into_iter()
                .map(|b| if b { 1.0 } else { 0.0 })
                .collect(),
            ColumnKind::Categorical => continue,
        };
        names.push(spec.name.clone());
        cols.push(col);
    }
    View {
        names,
        cols,
        n: ds.n_records(),
    }
}

fn table_view(table: &AnonymizedTable) -> View {
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for (c, spec) in table.columns.iter().enumerate() {
        let value = |cell: &Cell| match cell {
            Cell::Interval { lo, hi } => Some(0.5 * (lo + hi)),
            Cell::Number { value } => Some(*value),
            Cell::Label { value } if spec.kind == ColumnKind::Boolean => {
                parse_bool(value).map(|b| if b { 1.0 } else { 0.0 })
            }
            Cell::Label { .. } => None,
        };
        if let Some(col) = table.rows.iter().map(|r| value(&r[c])).collect::<Option<Vec<f64>>>() {
            names.push(spec.name.clone());
            cols.push(col);
        }
    }
    View {
        names,
        cols,
        n: table.n_rows(),
    }
}

/// Index pairs `(original, modified)` of matched columns: by name when every
/// original column has a same-named partner, else by position when the
/// counts agree.
fn align(a: &View, b: &View) -> Option<Vec<(usize, usize)>> {
    if a.cols.is_empty() {
        return None;
    }
    let by_name: Option<Vec<(usize, usize)>> = a
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| b.names.iter().position(|m| m == name).map(|j| (i, j)))
        .collect();
    by_name.or_else(|| (a.cols.len() == b.cols.len()).then(|| (0..a.cols.len()).map(|i| (i, i)).collect()))
}

fn aligned(a: &View, b: &View, idx: &[(usize, usize)]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        idx.iter().map(|&(i, _)| a.cols[i].clone()).collect(),
        idx.iter().map(|&(_, j)| b.cols[j].clone()).collect(),
    )
}

struct Measured {
    report: EvaluationReport,
    pairs: Vec<(usize, usize)>,
}

fn measure(technique: Technique, a: &View, b: &View, seed: u64) -> Measured {
    let columns = align(a, b);
    let same_n = a.n == b.n;
    let shapes_comparable = same_n && columns.is_some();
    let mut privacy = PrivacyLossMetrics::default();
    let mut information = InformationLossMetrics::default();

    if let Some(idx) = &columns {
        let (x, y) = aligned(a, b, idx);
        if same_n {
            let norm = metrics::frobenius(&x);
            let diff = metrics::frobenius_diff(&x, &y);
            privacy.value_difference = if norm > 0.0 {
                Some(diff / norm)
            } else {
                (diff == 0.0).then_some(0.0)
            };
            let disp: f64 = x.iter().zip(&y).map(|(p, q)| rank_displacement(p, q)).sum();
            privacy.rank_position_change = Some(disp / x.len() as f64);
        }
        if a.cols.len() == b.cols.len() {
            privacy.attribute_rank_change = Some(metrics::variance_rank_change(&x, &y));
        }
        if a.n >= 2 && b.n >= 2 {
            let (ca, cb) = (metrics::covariance(&x), metrics::covariance(&y));
            let norm = metrics::frobenius(&ca);
            let diff = metrics::frobenius_diff(&ca, &cb);
            information.covariance_error = if norm > 0.0 {
                Some(diff / norm)
            } else {
                (diff == 0.0).then_some(0.0)
            };
        }
        let ks = x.iter().zip(&y).map(|(p, q)| ks_statistic(p, q)).fold(0.0, f64::max);
        information.per_column_ks = Some(ks);
    }

    // distances only need the same records, not the same attributes
    let mut pairs = Vec::new();
    if same_n && !a.cols.is_empty() && !b.cols.is_empty() {
        pairs = sample_pairs(a.n, MAX_PAIRS, &mut Rng::new(seed, "evaluate/pairs"));
        let changes = metrics::relative_distance_changes(&a.cols, &b.cols, &pairs);
        if !changes.is_empty() {
            information.distance_distortion = Some(changes.iter().sum::<f64>() / changes.len() as f64);
        }
    }

    Measured {
        report: EvaluationReport {
            technique,
            shapes_comparable,
            privacy_loss_metrics: privacy,
            information_loss_metrics: information,
            preserved_property_verdicts: BTreeMap::new(),
            details: BTreeMap::new(),
        },
        pairs,
    }
}

/// Compare an original dataset with its perturbed counterpart.
///
/// Anonymization techniques produce generalized tables; use
/// [`evaluate_anonymized`] for those.
pub fn evaluate_pair(
    original: &Dataset,
    modified: &Dataset,
    technique: Technique,
    options: &EvaluateOptions,
) -> Result<EvaluationReport> {
    if technique.is_anonymization() {
        return Err(Error::InvalidParameter(format!(
            "{technique} output is a generalized table; evaluate it as one"
        )));
    }
    let (a, b) = (dataset_view(original), dataset_view(modified));
    let Measured { mut report, pairs } = measure(technique, &a, &b, options.seed);
    let verdicts = &mut report.preserved_property_verdicts;
    let details = &mut report.details;
    let info = &report.information_loss_metrics;

    match technique {
        Technique::RandomRotation => {
            if !pairs.is_empty() {
                let mut dist: f64 = 0.0;
                let mut dot: f64 = 0.0;
                for &(i, j) in &pairs {
                    let d = metrics::record_distance(&a.cols, i, j);
                    let scale = d.max(f64::MIN_POSITIVE);
                    dist = dist.max((metrics::record_distance(&b.cols, i, j) - d).abs() / scale);
                    let norms = (metrics::record_dot(&a.cols, i, i) * metrics::record_dot(&a.cols, j, j)).sqrt();
                    let g = metrics::record_dot(&a.cols, i, j) - metrics::record_dot(&b.cols, i, j);
                    dot = dot.max(g.abs() / norms.max(f64::MIN_POSITIVE));
                }
                details.insert("rotate.max_relative_distance_change".into(), dist);
                details.insert("rotate.max_relative_inner_product_change".into(), dot);
                verdicts.insert("isometry".into(), dist <= ISOMETRY_TOL);
                verdicts.insert("inner_product".into(), dot <= ISOMETRY_TOL);
            }
        }
        Technique::Geometric => {
            if let Some(d) = info.distance_distortion {
                verdicts.insert("distance_preservation".into(), d <= GEOMETRIC_DISTORTION_MAX);
            }
        }
        Technique::Condensation => {
            if let Some(c) = info.covariance_error {
                verdicts.insert("covariance_structure".into(), c <= CONDENSATION_COV_TOL);
            }
        }
        Technique::RandomProjection => {
            if !pairs.is_empty() {
                let within = pairs
                    .iter()
                    .filter(|&&(i, j)| {
                        let d0 = metrics::record_distance(&a.cols, i, j).powi(2);
                        let d1 = metrics::record_distance(&b.cols, i, j).powi(2);
                        (d1 - d0).abs() <= PROJECTION_BAND * d0
                    })
                    .count() as f64
                    / pairs.len() as f64;
                details.insert("projection.share_within_band".into(), within);
                verdicts.insert("distance_preservation".into(), within >= PROJECTION_SHARE);
            }
        }
        Technique::Svd => check_svd(original, modified, verdicts, details)?,
        Technique::Nmf => check_nmf(original, modified, verdicts, details)?,
        Technique::NoiseAddition => check_noise(original, modified, options, verdicts, details)?,
        Technique::RandomizedResponse => check_response(original, modified, options, verdicts, details)?,
        Technique::KAnonymity | Technique::LDiversity | Technique::TCloseness => unreachable!(),
    }
    Ok(report)
}

fn same_numeric_shape(original: &Dataset, modified: &Dataset, what: &str) -> Result<()> {
    original.require_all_numeric(what)?;
    modified.require_all_numeric(what)?;
    if original.numeric().dim() != modified.numeric().dim() {
        return Err(Error::Dimension(format!(
            "{what} check needs equal shapes, got {:?} and {:?}",
            original.numeric().dim(),
            modified.numeric().dim()
        )));
    }
    Ok(())
}

/// The distorted matrix must be the best approximation of its rank.
fn check_svd(
    original: &Dataset,
    modified: &Dataset,
    verdicts: &mut BTreeMap<String, bool>,
    details: &mut BTreeMap<String, f64>,
) -> Result<()> {
    same_numeric_shape(original, modified, "SVD")?;
    let full = crate::linalg::thin_svd(original.numeric())?.singular_values;
    let approx = crate::linalg::thin_svd(modified.numeric())?.singular_values;
    let top = approx.first().copied().unwrap_or(0.0);
    let rank = approx.iter().filter(|&&s| s > RANK_TOL * top).count();
    let residual2 = crate::linalg::frobenius((&original.numeric() - &modified.numeric()).view()).powi(2);
    let tail = crate::dimreduce::tail_energy(&full, rank);
    let energy: f64 = full.iter().map(|s| s * s).sum();
    let gap = (residual2 - tail).abs();
    details.insert("svd.inferred_rank".into(), rank as f64);
    details.insert("svd.residual_squared".into(), residual2);
    details.insert("svd.tail_energy".into(), tail);
    verdicts.insert("eckart_young".into(), gap <= ECKART_YOUNG_TOL * tail.max(1e-12 * energy));
    Ok(())
}

fn check_nmf(
    original: &Dataset,
    modified: &Dataset,
    verdicts: &mut BTreeMap<String, bool>,
    details: &mut BTreeMap<String, f64>,
) -> Result<()> {
    same_numeric_shape(original, modified, "NMF")?;
    let residual = crate::linalg::frobenius((&original.numeric() - &modified.numeric()).view());
    let trivial = crate::linalg::frobenius(original.numeric());
    details.insert("nmf.residual_frobenius".into(), residual);
    details.insert("nmf.zero_baseline_frobenius".into(), trivial);
    verdicts.insert("nonnegativity".into(), modified.numeric().iter().all(|&v| v >= 0.0));
    verdicts.insert("objective_below_trivial".into(), residual < trivial || trivial == 0.0);
    Ok(())
}

/// Per numeric column: the reconstructed density must sit closer to the
/// original values' histogram than the perturbed values' histogram does.
fn check_noise(
    original: &Dataset,
    modified: &Dataset,
    options: &EvaluateOptions,
    verdicts: &mut BTreeMap<String, bool>,
    details: &mut BTreeMap<String, f64>,
) -> Result<()> {
    let noise = options
        .noise
        .ok_or_else(|| Error::InvalidParameter("noise evaluation needs the noise model".into()))?
        .validated()?;
    let mut all = true;
    let mut any = false;
    for spec in original.schema().numeric_columns() {
        let Ok(w) = modified.numeric_column(&spec.name) else { continue };
        let x = original.numeric_column(&spec.name)?;
        if x.len() != w.len() {
            continue;
        }
        let w = w.to_vec();
        let est = reconstruct_distribution(&w, &noise, &options.reconstruction)?;
        let truth = est.histogram_of(&x.to_vec());
        let raw = est.histogram_of(&w);
        let l1 = |p: &[f64]| p.iter().zip(&truth).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let (recon, perturbed) = (l1(&est.probabilities), l1(&raw));
        details.insert(format!("noise.reconstruction_l1.{}", spec.name), recon);
        details.insert(format!("noise.perturbed_l1.{}", spec.name), perturbed);
        all &= recon < perturbed;
        any = true;
    }
    if !any {
        return Err(Error::InvalidParameter("no numeric column to compare".into()));
    }
    verdicts.insert("values_distribution".into(), all);
    Ok(())
}

/// Per boolean column: the inverted "yes" rate must lie within a few
/// standard errors of the true rate.
fn check_response(
    original: &Dataset,
    modified: &Dataset,
    options: &EvaluateOptions,
    verdicts: &mut BTreeMap<String, bool>,
    details: &mut BTreeMap<String, f64>,
) -> Result<()> {
    let mut all = true;
    let mut any = false;
    for spec in original.schema().columns().iter().filter(|c| c.kind == ColumnKind::Boolean) {
        let Ok(y) = modified.boolean_column(&spec.name) else { continue };
        let x = original.boolean_column(&spec.name)?;
        if x.len() != y.len() {
            continue;
        }
        let kept = x.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / x.len() as f64;
        let theta = options.theta.unwrap_or(kept);
        let est = estimate_true_proportion(&y, theta)?;
        let truth = x.iter().filter(|&&b| b).count() as f64 / x.len() as f64;
        let name = &spec.name;
        details.insert(format!("randomized_response.kept_fraction.{name}"), kept);
        details.insert(format!("randomized_response.estimate.{name}"), est.proportion);
        details.insert(format!("randomized_response.true_proportion.{name}"), truth);
        details.insert(format!("randomized_response.std_error.{name}"), est.std_error);
        all &= (est.proportion - truth).abs() <= RESPONSE_SE_BAND * est.std_error + 1e-12;
        any = true;
    }
    if !any {
        return Err(Error::InvalidParameter("no boolean column to compare".into()));
    }
    verdicts.insert("values_distribution".into(), all);
    Ok(())
}

/// Compare an original dataset with a generalized table and check the
/// k / l / t predicates given in `options`.
pub fn evaluate_anonymized(
    original: &Dataset,
    table: &AnonymizedTable,
    technique: Technique,
    options: &EvaluateOptions,
) -> Result<EvaluationReport> {
    if !technique.is_anonymization() {
        return Err(Error::InvalidParameter(format!("{technique} does not produce a generalized table")));
    }
    let need = |present: bool, what: &str| {
        if present {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{technique} evaluation needs {what}")))
        }
    };
    match technique {
        Technique::KAnonymity => need(options.k.is_some(), "k")?,
        Technique::LDiversity => need(options.l.is_some(), "l")?,
        _ => need(options.t.is_some(), "t")?,
    }

    let rows = if table.source_rows.len() == table.n_rows() && table.source_rows.iter().all(|&r| r < original.n_records()) {
        original.select_records(&table.source_rows)
    } else {
        original.clone()
    };
    let (a, b) = (dataset_view(&rows), table_view(table));
    let Measured { mut report, .. } = measure(technique, &a, &b, options.seed);
    let verdicts = &mut report.preserved_property_verdicts;
    let details = &mut report.details;

    let sizes = table.class_sizes();
    details.insert("anonymize.classes".into(), sizes.len() as f64);
    details.insert("anonymize.min_class_size".into(), sizes.iter().copied().min().unwrap_or(0) as f64);
    details.insert("anonymize.suppressed".into(), table.suppressed_count as f64);

    if let Some(k) = options.k {
        verdicts.insert("k_anonymity".into(), matches!(check_k_anonymity(table, k), KVerdict::Holds));
    }
    if options.l.is_some() || options.t.is_some() {
        let sensitive = match &options.sensitive {
            Some(s) => s.clone(),
            None => table
                .columns
                .iter()
                .find(|c| c.role == Role::Sensitive)
                .map(|c| c.name.clone())
                .ok_or_else(|| Error::InvalidParameter("no sensitive column to check".into()))?,
        };
        if let Some(l) = options.l {
            let v = check_l_diversity(table, &sensitive, l)?;
            details.insert(
                "anonymize.min_distinct_sensitive".into(),
                v.distinct.iter().copied().min().unwrap_or(0) as f64,
            );
            verdicts.insert("l_diversity".into(), v.holds);
        }
        if let Some(t) = options.t {
            let v = check_t_closeness(table, &sensitive, t)?;
            details.insert("anonymize.max_class_distance".into(), v.distances.iter().copied().fold(0.0, f64::max));
            verdicts.insert("t_closeness".into(), v.holds);
        }
    }
    Ok(report)
}
