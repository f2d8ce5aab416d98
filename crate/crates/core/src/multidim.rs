//! Task-preserving multi-dimensional perturbation: condensation, random
//! rotation and geometric perturbation (rotation + translation + noise).

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, covariance, psd_eigen, random_orthonormal};
use crate::rng::Rng;

pub(crate) mod matrix_rows {
    use ndarray::Array2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Array2::from_shape_vec((rows.len(), ncols), flat).map_err(serde::de::Error::custom)
    }
}

/// Secret of a rotation perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSecret {
    #[serde(with = "matrix_rows")]
    pub rotation: Array2<f64>,
}

/// Secret of a geometric perturbation `G(X) = R·X + t·1ᵀ + Δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricSecret {
    /// `R`, serialized row-major.
    #[serde(with = "matrix_rows")]
    pub rotation: Array2<f64>,
    pub translation: Vec<f64>,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondensedGroup {
    pub members: Vec<usize>,
    pub mean: Vec<f64>,
    #[serde(with = "matrix_rows")]
    pub covariance: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondensationGroups {
    pub group_size: usize,
    pub groups: Vec<CondensedGroup>,
}

/// Greedy nearest-neighbour accretion: repeatedly take the lowest-index
/// unassigned record and its `k − 1` nearest unassigned neighbours. Once
/// fewer than `2k` records remain they form the final group.
pub fn condensation_groups(x: ArrayView2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = x.ncols();
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut groups = Vec::new();
    while unassigned.len() >= 2 * k {
        let seed = unassigned[0];
        let mut by_distance: Vec<(f64, usize)> = unassigned[1..]
            .iter()
            .map(|&j| (linalg::column_distance(x, seed, j), j))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut members: Vec<usize> = std::iter::once(seed)
            .chain(by_distance.iter().take(k - 1).map(|&(_, j)| j))
            .collect();
        members.sort_unstable();
        unassigned.retain(|i| members.binary_search(i).is_err());
        groups.push(members);
    }
    if !unassigned.is_empty() {
        groups.push(unassigned);
    }
    groups
}

fn group_stats(x: ArrayView2<f64>, members: &[usize]) -> Result<(Array1<f64>, Array2<f64>)> {
    let sub = x.select(Axis(1), members);
    let mean = sub.mean_axis(Axis(1)).expect("non-empty group");
    let d = x.nrows();
    let cov = if members.len() >= 2 {
        covariance(sub.view())?
    } else {
        Array2::zeros((d, d))
    };
    Ok((mean, cov))
}

/// `g` synthetic records (`d × g`) whose sample mean is `mean` and whose
/// sample covariance is `cov`.
fn regenerate(mean: &Array1<f64>, cov: &Array2<f64>, g: usize, rng: &mut Rng) -> Result<Array2<f64>> {
    let d = mean.len();
    let mut out = Array2::zeros((d, g));
    for mut col in out.axis_iter_mut(Axis(1)) {
        col.assign(mean);
    }
    if g < 2 {
        return Ok(out);
    }
    let (lambda, vecs) = psd_eigen(cov.view())?;
    let top = lambda.first().copied().unwrap_or(0.0);
    let rank = lambda.iter().take_while(|&&l| l > 1e-12 * top && l > 0.0).count();
    if rank == 0 {
        return Ok(out);
    }

    // Draw in the r-dimensional range of the covariance, then whiten the
    // draw so its sample covariance is exactly the identity.
    let whitened = loop {
        let mut xi = Array2::from_shape_fn((g, rank), |_| rng.standard_normal());
        let m = xi.mean_axis(Axis(0)).expect("g >= 2");
        xi -= &m.insert_axis(Axis(0));
        let s = xi.t().dot(&xi) / (g as f64 - 1.0);
        let (sv, q) = psd_eigen(s.view())?;
        if sv[rank - 1] > 1e-10 * sv[0] {
            let mut inv_sqrt = q.clone();
            for (j, mut c) in inv_sqrt.axis_iter_mut(Axis(1)).enumerate() {
                c /= sv[j].sqrt();
            }
            break xi.dot(&inv_sqrt.dot(&q.t()));
        }
    };

    let mut basis = vecs.slice(ndarray::s![.., ..rank]).to_owned();
    for (j, mut c) in basis.axis_iter_mut(Axis(1)).enumerate() {
        c *= lambda[j].sqrt();
    }
    // (g × r)(r × d) → transpose to d × g
    out += &whitened.dot(&basis.t()).t();
    Ok(out)
}

/// Condense records into groups of at least `k` and replace each group by
/// synthetic records with the same mean and covariance.
pub fn condense(dataset: &Dataset, k: usize, rng: &mut Rng) -> Result<(Dataset, CondensationGroups)> {
    dataset.require_all_numeric("condensation")?;
    let n = dataset.n_records();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "condensation group size {k} must be in [1, {n}]"
        )));
    }
    let x = dataset.numeric();
    let mut synthetic = Array2::zeros(x.dim());
    let mut groups = Vec::new();
    for (gi, members) in condensation_groups(x, k).into_iter().enumerate() {
        let (mean, cov) = group_stats(x, &members)?;
        let mut grng = rng.derive(&format!("group/{gi}"));
        let block = regenerate(&mean, &cov, members.len(), &mut grng)?;
        for (slot, &rec) in members.iter().enumerate() {
            synthetic.column_mut(rec).assign(&block.column(slot));
        }
        groups.push(CondensedGroup {
            members,
            mean: mean.to_vec(),
            covariance: cov,
        });
    }
    Ok((
        dataset.with_numeric(synthetic)?,
        CondensationGroups { group_size: k, groups },
    ))
}

/// `G(X) = R·X` with a Haar-random orthonormal `R`.
pub fn rotate(dataset: &Dataset, rng: &mut Rng) -> Result<(Dataset, RotationSecret)> {
    dataset.require_all_numeric("rotation")?;
    let r = random_orthonormal(dataset.n_numeric(), &mut rng.derive("R"))?;
    let out = apply_rotation(dataset, &r)?;
    Ok((out, RotationSecret { rotation: r }))
}

pub(crate) fn apply_rotation(dataset: &Dataset, r: &Array2<f64>) -> Result<Dataset> {
    dataset.with_numeric(r.dot(&dataset.numeric()))
}

/// `G(X) = R·X + t·1ᵀ + Δ`, `t` with i.i.d. U(0,1) entries and `Δ` with
/// i.i.d. N(0, σ²) entries.
pub fn geometric_perturb(dataset: &Dataset, sigma: f64, rng: &mut Rng) -> Result<(Dataset, GeometricSecret)> {
    dataset.require_all_numeric("geometric perturbation")?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be non-negative, got {sigma}")));
    }
    let d = dataset.n_numeric();
    let r = random_orthonormal(d, &mut rng.derive("R"))?;
    let mut trng = rng.derive("t");
    let t: Vec<f64> = (0..d).map(|_| trng.uniform()).collect();
    let out = apply_geometric(dataset, &r, &t, sigma, &mut rng.derive("noise"))?;
    Ok((
        out,
        GeometricSecret {
            rotation: r,
            translation: t,
            sigma,
        },
    ))
}

pub(crate) fn apply_geometric(
    dataset: &Dataset,
    r: &Array2<f64>,
    t: &[f64],
    sigma: f64,
    noise: &mut Rng,
) -> Result<Dataset> {
    let mut y = r.dot(&dataset.numeric());
    for (mut row, &ti) in y.axis_iter_mut(Axis(0)).zip(t) {
        row += ti;
    }
    if sigma > 0.0 {
        for v in y.iter_mut() {
            *v += sigma * noise.standard_normal();
        }
    }
    dataset.with_numeric(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, orthonormality_error};

    fn gaussian_dataset(d: usize, n: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed, "test/data");
        let x = Array2::from_shape_fn((d, n), |_| rng.normal(0.0, 3.0));
        let names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        Dataset::from_numeric(&names, x).unwrap()
    }

    fn pair_distance_gap(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
        let n = a.ncols();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = linalg::column_distance(a, i, j) - linalg::column_distance(b, i, j);
                worst = worst.max(gap.abs());
            }
        }
        worst
    }

    fn rel_frob(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        frobenius((a - b).view()) / frobenius(a.view()).max(1e-300)
    }

    #[test]
    fn identity_hooks_leave_data_unchanged() {
        let ds = gaussian_dataset(3, 20, 1);
        let eye = Array2::eye(3);
        assert_eq!(apply_rotation(&ds, &eye).unwrap(), ds);
        let out = apply_geometric(&ds, &eye, &[0.0; 3], 0.0, &mut Rng::new(0, "n")).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn rotation_preserves_distances_and_inner_products() {
        let ds = gaussian_dataset(4, 50, 2);
        let (out, secret) = rotate(&ds, &mut Rng::new(2, "rotation")).unwrap();
        assert!(orthonormality_error(secret.rotation.view()) < 1e-10);
        assert!(pair_distance_gap(ds.numeric(), out.numeric()) < 1e-9);
        let g0 = ds.numeric().t().dot(&ds.numeric());
        let g1 = out.numeric().t().dot(&out.numeric());
        assert!((&g0 - &g1).iter().all(|v| v.abs() < 1e-9));
        let s0 = linalg::svd(ds.numeric()).unwrap().singular_values;
        let s1 = linalg::svd(out.numeric()).unwrap().singular_values;
        assert!(s0.iter().zip(&s1).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn geometric_without_noise_is_isometry_but_moves_inner_products() {
        let ds = gaussian_dataset(5, 40, 3);
        let (out, secret) = geometric_perturb(&ds, 0.0, &mut Rng::new(3, "geometric")).unwrap();
        assert!(pair_distance_gap(ds.numeric(), out.numeric()) < 1e-9);
        assert!(secret.translation.iter().all(|t| (0.0..1.0).contains(t)));
        let g0 = ds.numeric().t().dot(&ds.numeric());
        let g1 = out.numeric().t().dot(&out.numeric());
        assert!((&g0 - &g1).iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn geometric_noise_variance() {
        let ds = gaussian_dataset(5, 10_000, 4);
        let (out, secret) = geometric_perturb(&ds, 0.1, &mut Rng::new(4, "geometric")).unwrap();
        let mut clean = secret.rotation.dot(&ds.numeric());
        for (mut row, t) in clean.axis_iter_mut(Axis(0)).zip(&secret.translation) {
            row += *t;
        }
        let msd = (&out.numeric() - &clean).mapv(|v| v * v).mean().unwrap();
        assert!((0.0095..=0.0105).contains(&msd), "{msd}");
    }

    #[test]
    fn geometric_rejects_negative_sigma() {
        let ds = gaussian_dataset(2, 5, 5);
        assert!(geometric_perturb(&ds, -0.1, &mut Rng::new(0, "g")).is_err());
    }

    #[test]
    fn secret_json_is_row_major() {
        let s = GeometricSecret {
            rotation: ndarray::array![[0.0, -1.0], [1.0, 0.0]],
            translation: vec![0.5, 0.25],
            sigma: 0.1,
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"rotation":[[0.0,-1.0],[1.0,0.0]],"translation":[0.5,0.25],"sigma":0.1}"#);
        let back: GeometricSecret = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn condense_k1_reproduces_records() {
        let ds = gaussian_dataset(3, 15, 6);
        let (out, groups) = condense(&ds, 1, &mut Rng::new(6, "condense")).unwrap();
        assert_eq!(groups.groups.len(), 15);
        assert!((&out.numeric() - &ds.numeric()).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn condense_single_group_matches_global_moments() {
        let ds = gaussian_dataset(3, 25, 7);
        let (out, groups) = condense(&ds, 25, &mut Rng::new(7, "condense")).unwrap();
        assert_eq!(groups.groups.len(), 1);
        let m0 = ds.numeric().mean_axis(Axis(1)).unwrap();
        let m1 = out.numeric().mean_axis(Axis(1)).unwrap();
        assert!((&m0 - &m1).iter().all(|v| v.abs() < 1e-9));
        let c0 = covariance(ds.numeric()).unwrap();
        let c1 = covariance(out.numeric()).unwrap();
        assert!(rel_frob(&c0, &c1) < 1e-6);
        assert!((&out.numeric() - &ds.numeric()).iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn condense_small_groups_match_moments_within_rank() {
        // groups of 3 in 5 dimensions: covariance rank ≤ 2
        let ds = gaussian_dataset(5, 31, 8);
        let (out, groups) = condense(&ds, 3, &mut Rng::new(8, "condense")).unwrap();
        for g in &groups.groups {
            assert!((3..=5).contains(&g.members.len()));
            let syn = out.numeric().select(Axis(1), &g.members);
            let m = syn.mean_axis(Axis(1)).unwrap();
            assert!(m.iter().zip(&g.mean).all(|(a, b)| (a - b).abs() < 1e-9));
            let c = covariance(syn.view()).unwrap();
            assert!(rel_frob(&g.covariance, &c) < 1e-6);
        }
    }

    #[test]
    fn condense_groups_partition_and_stats_are_exact() {
        let ds = gaussian_dataset(2, 23, 9);
        let (_, groups) = condense(&ds, 4, &mut Rng::new(9, "condense")).unwrap();
        let mut all: Vec<usize> = groups.groups.iter().flat_map(|g| g.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        for g in &groups.groups {
            assert!((4..=7).contains(&g.members.len()));
            let (m, c) = group_stats(ds.numeric(), &g.members).unwrap();
            assert!(m.iter().zip(&g.mean).all(|(a, b)| (a - b).abs() < 1e-10));
            assert!((&c - &g.covariance).iter().all(|v| v.abs() < 1e-10));
        }
    }

    /// Brute force: every record's group-mates are its nearest same-cluster
    /// points, so the accretion must recover the two clusters.
    #[test]
    fn condense_recovers_separated_clusters() {
        let mut rng = Rng::new(10, "test/clusters");
        let mut x = Array2::zeros((2, 20));
        let mut cluster_of = [0; 20];
        for i in 0..20 {
            // interleave cluster membership so grouping cannot rely on order
            let c = (i * 7 % 20) % 2;
            cluster_of[i] = c;
            let centre = if c == 0 { -50.0 } else { 50.0 };
            x[[0, i]] = centre + rng.normal(0.0, 1.0);
            x[[1, i]] = centre + rng.normal(0.0, 1.0);
        }
        let ds = Dataset::from_numeric(&["a", "b"], x).unwrap();
        let (_, groups) = condense(&ds, 10, &mut Rng::new(10, "condense")).unwrap();
        assert_eq!(groups.groups.len(), 2);
        for g in &groups.groups {
            let c = cluster_of[g.members[0]];
            assert!(g.members.iter().all(|&m| cluster_of[m] == c));
        }
    }

    #[test]
    fn condense_rejects_bad_k() {
        let ds = gaussian_dataset(2, 5, 11);
        assert!(condense(&ds, 0, &mut Rng::new(0, "c")).is_err());
        assert!(condense(&ds, 6, &mut Rng::new(0, "c")).is_err());
    }
}
