//! Dimension-reduction perturbation: random projection, rank-k SVD
//! distortion and non-negative matrix factorization.
//!
//! These operate on the record-major matrix `A = Xᵀ` (`n × d`), one row
//! per record.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schema};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, thin_svd};
use crate::multidim::matrix_rows;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionAxis {
    /// `A·R` with `R` of shape `d × k`: records keep their identity, the
    /// attributes are projected to `k` synthetic ones.
    #[default]
    ColumnWise,
    /// `R′·A` with `R′` of shape `k × n`: the record set is projected to
    /// `k` synthetic records over the original attributes.
    RowWise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSpec {
    pub k: usize,
    #[serde(default)]
    pub axis: ProjectionAxis,
    #[serde(default = "default_entry_std")]
    pub entry_std: f64,
}

fn default_entry_std() -> f64 {
    1.0
}

impl ProjectionSpec {
    pub fn new(k: usize, axis: ProjectionAxis) -> Self {
        Self {
            k,
            axis,
            entry_std: 1.0,
        }
    }
}

/// Random projection `(1/(√k·σ_r))·A·R` (column-wise) or
/// `(1/(√k·σ_r))·R′·A` (row-wise) with i.i.d. N(0, σ_r²) entries.
///
/// Only the projected block is returned; column-wise output columns are
/// named `proj_1 … proj_k`.
pub fn random_project(dataset: &Dataset, spec: &ProjectionSpec, rng: &mut Rng) -> Result<Dataset> {
    random_project_with_matrix(dataset, spec, rng).map(|(out, _)| out)
}

/// [`random_project`] that also returns the drawn matrix (`d × k` or `k × n`).
pub fn random_project_with_matrix(
    dataset: &Dataset,
    spec: &ProjectionSpec,
    rng: &mut Rng,
) -> Result<(Dataset, Array2<f64>)> {
    dataset.require_all_numeric("random projection")?;
    if !(spec.entry_std.is_finite() && spec.entry_std > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "projection entry_std must be positive, got {}",
            spec.entry_std
        )));
    }
    let a = dataset.numeric().t().to_owned();
    let (n, d) = a.dim();
    let k = spec.k;
    let (away, what) = match spec.axis {
        ProjectionAxis::ColumnWise => (d, "attributes"),
        ProjectionAxis::RowWise => (n, "records"),
    };
    if k < 1 || k >= away {
        return Err(Error::InvalidParameter(format!(
            "projection k={k} must satisfy 1 <= k < {away} ({what})"
        )));
    }
    let scale = 1.0 / ((k as f64).sqrt() * spec.entry_std);
    let mut draw = |rows, cols| Array2::from_shape_fn((rows, cols), |_| spec.entry_std * rng.standard_normal());
    match spec.axis {
        ProjectionAxis::ColumnWise => {
            let r = draw(d, k);
            let out = a.dot(&r) * scale;
            let names: Vec<String> = (1..=k).map(|i| format!("proj_{i}")).collect();
            Ok((Dataset::from_numeric(&names, out.t().to_owned())?, r))
        }
        ProjectionAxis::RowWise => {
            let r = draw(k, n);
            let out = r.dot(&a) * scale;
            let names = dataset.schema().names();
            Ok((Dataset::new(Schema::numeric(&names)?, out.t().to_owned(), Vec::new())?, r))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorizationMethod {
    Svd,
    Nmf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factors {
    Svd {
        #[serde(with = "matrix_rows")]
        u: Array2<f64>,
        sigma: Vec<f64>,
        #[serde(with = "matrix_rows")]
        vt: Array2<f64>,
    },
    Nmf {
        #[serde(with = "matrix_rows")]
        w: Array2<f64>,
        #[serde(with = "matrix_rows")]
        h: Array2<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub method: FactorizationMethod,
    pub rank: usize,
    /// `‖A − Â‖_F`, the Frobenius norm of the discarded part.
    pub residual_frobenius: f64,
    /// Top-`k` singular values (SVD only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub singular_values: Vec<f64>,
    /// `½‖A − WH‖²_F` before the first update and after each one (NMF only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Factors>,
    /// Record-major approximation `Â` (`n × d`).
    #[serde(skip)]
    pub approximation: Array2<f64>,
}

impl FactorizationResult {
    /// Copy suitable for publication: factors removed.
    pub fn without_factors(&self) -> Self {
        Self {
            factors: None,
            ..self.clone()
        }
    }
}

fn check_rank(k: usize, n: usize, m: usize) -> Result<()> {
    let cap = n.min(m);
    if k < 1 || k > cap {
        return Err(Error::InvalidParameter(format!("rank k={k} must be in [1, {cap}]")));
    }
    Ok(())
}

/// Replace the data by its best rank-`k` approximation `A_k = U_k Σ_k V_kᵀ`.
pub fn svd_distort(dataset: &Dataset, k: usize) -> Result<(Dataset, FactorizationResult)> {
    dataset.require_all_numeric("SVD distortion")?;
    let a = dataset.numeric().t().to_owned();
    let (n, m) = a.dim();
    check_rank(k, n, m)?;
    let svd = thin_svd(a.view())?;
    let ak = svd.truncate(k);
    let residual = frobenius((&a - &ak).view());
    let out = dataset.with_numeric(ak.t().to_owned())?;
    let result = FactorizationResult {
        method: FactorizationMethod::Svd,
        rank: k,
        residual_frobenius: residual,
        singular_values: svd.singular_values[..k].to_vec(),
        objective_trace: Vec::new(),
        iterations: 0,
        converged: true,
        factors: Some(Factors::Svd {
            u: svd.u.slice(ndarray::s![.., ..k]).to_owned(),
            sigma: svd.singular_values[..k].to_vec(),
            vt: svd.vt.slice(ndarray::s![..k, ..]).to_owned(),
        }),
        approximation: ak,
    };
    Ok((out, result))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmfConfig {
    pub max_iter: usize,
    /// Stop once the relative objective decrease drops below this.
    pub tol: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-6 }
    }
}

const DENOM_FLOOR: f64 = 1e-12;

fn objective(a: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    0.5 * (a - &w.dot(h)).iter().map(|v| v * v).sum::<f64>()
}

/// `x ← x ⊙ num / max(den, floor)`
fn multiplicative(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>) {
    Zip::from(x).and(num).and(den).for_each(|x, &nu, &de| {
        *x *= nu / de.max(DENOM_FLOOR);
    });
}

/// Replace the data by `W·H`, with `W ≥ 0` (`n × k`) and `H ≥ 0` (`k × d`)
/// fitted by multiplicative updates minimizing `½‖A − WH‖²_F`.
pub fn nmf_distort(
    dataset: &Dataset,
    k: usize,
    config: &NmfConfig,
    rng: &mut Rng,
) -> Result<(Dataset, FactorizationResult)> {
    dataset.require_all_numeric("NMF distortion")?;
    let a = dataset.numeric().t().to_owned();
    let (n, m) = a.dim();
    for ((i, j), &v) in a.indexed_iter() {
        if v < 0.0 {
            return Err(Error::NegativeEntry {
                row: i + 1,
                column: dataset.schema().columns()[j].name.clone(),
                value: v,
            });
        }
    }
    check_rank(k, n, m)?;
    if !(config.tol.is_finite() && config.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be non-negative, got {}", config.tol)));
    }

    let scale = (a.mean().unwrap_or(0.0) / k as f64).sqrt();
    let mut w = Array2::from_shape_fn((n, k), |_| rng.uniform() * scale);
    let mut h = Array2::from_shape_fn((k, m), |_| rng.uniform() * scale);

    let mut trace = vec![objective(&a, &w, &h)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        let num = w.t().dot(&a);
        let den = w.t().dot(&w).dot(&h);
        multiplicative(&mut h, &num, &den);
        let num = a.dot(&h.t());
        let den = w.dot(&h.dot(&h.t()));
        multiplicative(&mut w, &num, &den);
        iterations += 1;

        let prev = *trace.last().expect("trace starts non-empty");
        let f = objective(&a, &w, &h);
        trace.push(f);
        if prev == 0.0 || (prev - f) / prev < config.tol {
            converged = true;
            break;
        }
    }

    let approx = w.dot(&h);
    let residual = frobenius((&a - &approx).view());
    let out = dataset.with_numeric(approx.t().to_owned())?;
    let result = FactorizationResult {
        method: FactorizationMethod::Nmf,
        rank: k,
        residual_frobenius: residual,
        singular_values: Vec::new(),
        objective_trace: trace,
        iterations,
        converged,
        factors: Some(Factors::Nmf { w, h }),
        approximation: approx,
    };
    Ok((out, result))
}

/// Sum of squares of the singular values after the first `k`.
pub fn tail_energy(singular_values: &[f64], k: usize) -> f64 {
    singular_values.iter().skip(k).map(|s| s * s).sum()
}

/// Largest `|a_ij a_kl − a_il a_kj|` over all 2 × 2 minors.
pub fn max_minor2(a: &Array2<f64>) -> f64 {
    let (n, m) = a.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in (i + 1)..n {
            for j in 0..m {
                for l in (j + 1)..m {
                    let det = a[[i, j]] * a[[k, l]] - a[[i, l]] * a[[k, j]];
                    worst = worst.max(det.abs());
                }
            }
        }
    }
    worst
}

/// `true` when every entry of the matrix is `≥ 0`.
pub fn is_nonnegative(a: &Array2<f64>) -> bool {
    a.iter().all(|&v| v >= 0.0)
}
