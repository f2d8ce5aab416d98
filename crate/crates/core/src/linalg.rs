//! Dense numeric kernel: orthonormal sampling, one-sided Jacobi SVD,
//! covariance and a few norms shared by the perturbation modules.
//!
//! Matrices are `ndarray::Array2<f64>`. Data matrices follow the
//! attributes-by-records layout (`d × n`) unless a function says otherwise.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::rng::Rng;

const MAX_SWEEPS: usize = 80;

/// Full singular value decomposition `A = U · diag(σ) · Vt` of an `n × m`
/// matrix. `u` is `n × n`, `vt` is `m × m`, `singular_values` has
/// `min(n, m)` entries in non-increasing order.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Array2<f64>,
    pub singular_values: Vec<f64>,
    pub vt: Array2<f64>,
}

impl SvdResult {
    /// Rebuild `U · Σ · Vt`, or the rank-`k` truncation when `k` is given.
    pub fn reconstruct(&self, k: Option<usize>) -> Array2<f64> {
        let s = self.singular_values.len();
        let k = k.unwrap_or(s).min(s);
        let n = self.u.nrows();
        let m = self.vt.ncols();
        let mut out = Array2::zeros((n, m));
        for r in 0..k {
            let sigma = self.singular_values[r];
            let ucol = self.u.column(r);
            let vrow = self.vt.row(r);
            for i in 0..n {
                let a = sigma * ucol[i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..m {
                    out[[i, j]] += a * vrow[j];
                }
            }
        }
        out
    }
}

/// Economy SVD: `u` is `n × s`, `vt` is `s × m`, `s = min(n, m)`.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: Array2<f64>,
    pub singular_values: Vec<f64>,
    pub vt: Array2<f64>,
}

impl ThinSvd {
    pub fn truncate(&self, k: usize) -> Array2<f64> {
        let k = k.min(self.singular_values.len());
        let (n, m) = (self.u.nrows(), self.vt.ncols());
        let mut scaled = self.u.slice(ndarray::s![.., ..k]).to_owned();
        for (r, mut col) in scaled.axis_iter_mut(Axis(1)).enumerate() {
            col *= self.singular_values[r];
        }
        let out = scaled.dot(&self.vt.slice(ndarray::s![..k, ..]));
        debug_assert_eq!(out.dim(), (n, m));
        out
    }
}

/// Haar-distributed `d × d` orthonormal matrix.
///
/// A standard-Gaussian matrix is orthonormalized column by column with
/// re-orthogonalized Gram–Schmidt. The implicit triangular factor then has a
/// positive diagonal, which is the sign convention that makes the result
/// Haar distributed.
pub fn random_orthonormal(d: usize, rng: &mut Rng) -> Result<Array2<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "orthonormal matrix dimension must be at least 1".into(),
        ));
    }
    loop {
        let mut g = Array2::zeros((d, d));
        for v in g.iter_mut() {
            *v = rng.standard_normal();
        }
        if let Some(q) = orthonormalize_columns(g) {
            return Ok(q);
        }
    }
}

/// Gram–Schmidt with one re-orthogonalization pass. Returns `None` when the
/// columns are numerically dependent.
fn orthonormalize_columns(mut a: Array2<f64>) -> Option<Array2<f64>> {
    let cols = a.ncols();
    for j in 0..cols {
        let original = norm(a.column(j).iter().copied());
        for _ in 0..2 {
            for p in 0..j {
                let proj = a.column(p).dot(&a.column(j));
                let qp = a.column(p).to_owned();
                a.column_mut(j).scaled_add(-proj, &qp);
            }
        }
        let nrm = norm(a.column(j).iter().copied());
        if !(nrm > 1e-10 * original.max(f64::MIN_POSITIVE)) {
            return None;
        }
        a.column_mut(j).mapv_inplace(|x| x / nrm);
    }
    Some(a)
}

fn norm(it: impl Iterator<Item = f64>) -> f64 {
    it.map(|x| x * x).sum::<f64>().sqrt()
}

/// One-sided (Hestenes) Jacobi on a tall matrix stored as columns.
/// Returns `(column-normalized B, norms, V)` with `A·V = B`.
fn jacobi_tall(a: ArrayView2<f64>) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let (rows, cols) = a.dim();
    let mut b: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (rows as f64).sqrt().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let (bp, bq) = (&b[p], &b[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..rows {
                        alpha += bp[i] * bp[i];
                        beta += bq[i] * bq[i];
                        gamma += bp[i] * bq[i];
                    }
                    (alpha, beta, gamma)
                };
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut b, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = b.iter().map(|col| norm(col.iter().copied())).collect();
    (b, norms, v)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Sorted thin factors of a tall matrix: `(U rows×cols with possibly
/// incomplete columns, σ, V cols×cols, which U columns are valid)`.
fn tall_factors(a: ArrayView2<f64>) -> (Array2<f64>, Vec<f64>, Array2<f64>, Vec<bool>) {
    let (rows, cols) = a.dim();
    let (b, norms, v) = jacobi_tall(a);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma_max = norms.iter().copied().fold(0.0, f64::max);
    let floor = sigma_max * f64::EPSILON * (rows.max(cols) as f64);

    let mut u = Array2::zeros((rows, cols));
    let mut vm = Array2::zeros((cols, cols));
    let mut sigma = Vec::with_capacity(cols);
    let mut valid = Vec::with_capacity(cols);
    for (new, &old) in order.iter().enumerate() {
        let s = norms[old];
        sigma.push(s);
        let ok = s > floor && s > 0.0;
        valid.push(ok);
        if ok {
            for i in 0..rows {
                u[[i, new]] = b[old][i] / s;
            }
        }
        for i in 0..cols {
            vm[[i, new]] = v[old][i];
        }
    }
    (u, sigma, vm, valid)
}

/// Replace invalid columns of `basis` and append columns until it is a full
/// `rows × target` orthonormal set.
fn complete_basis(basis: &Array2<f64>, valid: &[bool], target: usize) -> Array2<f64> {
    let rows = basis.nrows();
    let accepted: Vec<Array1<f64>> = basis
        .axis_iter(Axis(1))
        .zip(valid)
        .filter(|(_, ok)| **ok)
        .map(|(c, _)| c.to_owned())
        .collect();
    let mut extra: Vec<Array1<f64>> = Vec::new();
    let needed = target - accepted.len();

    let mut candidates = (0..rows).map(|i| {
        let mut e = Array1::zeros(rows);
        e[i] = 1.0;
        e
    });
    let mut fallback = Rng::new(0, "linalg/complete_basis");
    while extra.len() < needed {
        let mut cand = match candidates.next() {
            Some(c) => c,
            None => Array1::from_shape_fn(rows, |_| fallback.standard_normal()),
        };
        for _ in 0..2 {
            for q in accepted.iter().chain(extra.iter()) {
                let proj = q.dot(&cand);
                cand.scaled_add(-proj, q);
            }
        }
        let nrm = norm(cand.iter().copied());
        if nrm > 1e-3 {
            extra.push(cand / nrm);
        }
    }

    let mut out = Array2::zeros((rows, target));
    let mut extra_iter = extra.into_iter();
    let mut col = 0;
    for (j, ok) in valid.iter().enumerate().take(target) {
        if *ok {
            out.column_mut(col).assign(&basis.column(j));
        } else {
            out.column_mut(col).assign(&extra_iter.next().expect("basis completion"));
        }
        col += 1;
    }
    for c in extra_iter {
        out.column_mut(col).assign(&c);
        col += 1;
    }
    out
}

fn check_input(a: ArrayView2<f64>) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Dimension("SVD input has non-finite entries".into()));
    }
    Ok(())
}

/// Full SVD via one-sided Jacobi.
pub fn svd(a: ArrayView2<f64>) -> Result<SvdResult> {
    check_input(a)?;
    let (n, m) = a.dim();
    if n >= m {
        let (u, sigma, v, valid) = tall_factors(a);
        let u = complete_basis(&u, &valid, n);
        Ok(SvdResult {
            u,
            singular_values: sigma,
            vt: v.reversed_axes(),
        })
    } else {
        // Aᵀ = U' Σ V'ᵀ  ⇒  A = V' Σ U'ᵀ
        let (u, sigma, v, valid) = tall_factors(a.t());
        let u_full = complete_basis(&u, &valid, m);
        Ok(SvdResult {
            u: v,
            singular_values: sigma,
            vt: u_full.reversed_axes(),
        })
    }
}

/// Economy SVD via one-sided Jacobi; avoids materializing the square
/// factor on the long side.
pub fn thin_svd(a: ArrayView2<f64>) -> Result<ThinSvd> {
    check_input(a)?;
    let (n, m) = a.dim();
    if n >= m {
        let (u, sigma, v, valid) = tall_factors(a);
        let u = complete_basis(&u, &valid, m);
        Ok(ThinSvd {
            u,
            singular_values: sigma,
            vt: v.reversed_axes(),
        })
    } else {
        let (u, sigma, v, valid) = tall_factors(a.t());
        let u_thin = complete_basis(&u, &valid, n);
        Ok(ThinSvd {
            u: v,
            singular_values: sigma,
            vt: u_thin.reversed_axes(),
        })
    }
}

/// Symmetric eigen-decomposition of a positive semi-definite matrix,
/// eigenvalues descending. Uses the SVD, which coincides with the
/// eigen-decomposition for PSD input.
pub fn psd_eigen(c: ArrayView2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let s = svd(c)?;
    Ok((s.singular_values, s.u))
}

/// Sample covariance (`1/(n−1)`) of a `d × n` matrix whose columns are
/// observations.
pub fn covariance(x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (d, n) = x.dim();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "covariance needs at least 2 observations, got {n}"
        )));
    }
    let mean = x.mean_axis(Axis(1)).expect("n >= 2");
    let centered = &x - &mean.insert_axis(Axis(1));
    let mut c = centered.dot(&centered.t()) / (n as f64 - 1.0);
    for i in 0..d {
        for j in (i + 1)..d {
            let s = 0.5 * (c[[i, j]] + c[[j, i]]);
            c[[i, j]] = s;
            c[[j, i]] = s;
        }
    }
    Ok(c)
}

pub fn frobenius(a: ArrayView2<f64>) -> f64 {
    norm(a.iter().copied())
}

/// Euclidean distance between columns `i` and `j` of a `d × n` matrix.
pub fn column_distance(x: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    norm(x.column(i).iter().zip(x.column(j)).map(|(a, b)| a - b))
}

/// Largest `|AᵀA − I|` entry.
pub fn orthonormality_error(a: ArrayView2<f64>) -> f64 {
    let g = a.t().dot(&a);
    g.indexed_iter()
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}
