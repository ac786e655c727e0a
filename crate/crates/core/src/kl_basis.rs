//! Empirical Karhunen–Loève basis: eigenpairs of the sample covariance
//! operator, scores, and eigenvalue tail sums.
//!
//! The covariance operator of the centered sample is discretized with the
//! trapezoid weights W of the reference grid. Writing
//! A = (X - mean) W^{1/2} / √n, the eigenvalues are the squared singular
//! values of A and the eigenfunctions are W^{-1/2} times its right singular
//! vectors, so they are orthonormal in the trapezoid inner product.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::curve::{same_grid, Dataset, Grid, ReferenceCurve};
use crate::error::{Error, Result};

/// Eigenpairs of an empirical covariance operator.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<ReferenceCurve>,
    mean: ReferenceCurve,
    residual_trace: f64,
}

/// Karhunen–Loève scores ξ_1..ξ_p of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl EigenBasis {
    /// Assembles a basis from parts, checking ordering and orthonormality.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenfunctions: Vec<ReferenceCurve>,
        mean: ReferenceCurve,
    ) -> Result<Self> {
        if eigenvalues.len() != eigenfunctions.len() || eigenvalues.is_empty() {
            return Err(Error::invalid(
                "need one eigenfunction per eigenvalue and at least one pair",
            ));
        }
        if eigenvalues.iter().any(|l| !l.is_finite() || *l < -1e-10) {
            return Err(Error::Data("eigenvalues must be finite and nonnegative".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0] + 1e-10) {
            return Err(Error::Data("eigenvalues must be nonincreasing".into()));
        }
        let grid = mean.grid();
        if eigenfunctions.iter().any(|v| !same_grid(v.grid(), grid)) {
            return Err(Error::GridMismatch(
                "eigenfunctions and mean must share one grid".into(),
            ));
        }
        let w = grid.weights();
        for (j, vj) in eigenfunctions.iter().enumerate() {
            for (k, vk) in eigenfunctions.iter().enumerate().skip(j) {
                let ip: f64 = w
                    .iter()
                    .zip(vj.values().iter().zip(vk.values()))
                    .map(|(w, (a, b))| w * a * b)
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                if (ip - target).abs() > 1e-8 {
                    return Err(Error::Data(format!(
                        "eigenfunctions {j} and {k} are not orthonormal (inner product {ip})"
                    )));
                }
            }
        }
        Ok(Self {
            eigenvalues: eigenvalues.into_iter().map(|l| l.max(0.0)).collect(),
            eigenfunctions,
            mean,
            residual_trace: 0.0,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[ReferenceCurve] {
        &self.eigenfunctions
    }

    pub fn mean(&self) -> &ReferenceCurve {
        &self.mean
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.mean.grid()
    }

    /// Number of retained eigenpairs.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Total variance not captured by the retained eigenvalues.
    pub fn residual_trace(&self) -> f64 {
        self.residual_trace
    }
}

/// Top `rank` eigenpairs of the sample covariance of `data`.
pub fn empirical_basis(data: &Dataset, rank: usize) -> Result<EigenBasis> {
    let n = data.len();
    let grid = Arc::clone(data.grid());
    let m = grid.len();
    if rank == 0 || rank > n.min(m) {
        return Err(Error::invalid(format!(
            "rank {rank} must lie in 1..={} (min of sample size {n} and grid size {m})",
            n.min(m)
        )));
    }
    let mean = data.mean_curve();
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let scale = 1.0 / (n as f64).sqrt();
    let a = DMatrix::from_fn(n, m, |i, j| {
        (data.curves()[i].values()[j] - mean.values()[j]) * sqrt_w[j] * scale
    });
    let total_trace: f64 = a.iter().map(|x| x * x).sum();
    if !total_trace.is_finite() {
        return Err(Error::Data("non-finite values in the sample".into()));
    }

    // Columns of `vectors` are orthonormal right singular vectors of A.
    let (values, vectors) = if m <= n {
        let cov = a.transpose() * &a;
        let (vals, vecs) = sorted_eigen(cov);
        let take = rank;
        (vals[..take].to_vec(), vecs.columns(0, take).into_owned())
    } else {
        let gram = &a * a.transpose();
        let (vals, left) = sorted_eigen(gram);
        let mut right = DMatrix::zeros(m, rank);
        for k in 0..rank {
            let sigma = vals[k].max(0.0).sqrt();
            if sigma > 0.0 {
                let v = a.transpose() * left.column(k) / sigma;
                right.set_column(k, &v);
            }
        }
        orthonormalize(&mut right, &vals[..rank]);
        (vals[..rank].to_vec(), right)
    };

    let eigenvalues: Vec<f64> = values.iter().map(|l| l.max(0.0)).collect();
    let mut eigenfunctions = Vec::with_capacity(rank);
    for k in 0..rank {
        let col = vectors.column(k);
        // deterministic sign: positive projection on the constant function
        let sign = if col.iter().zip(&sqrt_w).map(|(v, s)| v * s).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        let vals: Vec<f64> = col
            .iter()
            .zip(&sqrt_w)
            .map(|(v, s)| sign * v / s)
            .collect();
        eigenfunctions.push(ReferenceCurve::new(Arc::clone(&grid), vals)?);
    }
    let retained: f64 = eigenvalues.iter().sum();
    Ok(EigenBasis {
        eigenvalues,
        eigenfunctions,
        mean,
        residual_trace: (total_trace - retained).max(0.0),
    })
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
fn sorted_eigen(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Two passes of modified Gram–Schmidt. Columns belonging to numerically
/// zero eigenvalues, or that collapse, are replaced by coordinate vectors
/// orthogonal to the rest.
fn orthonormalize(cols: &mut DMatrix<f64>, eigenvalues: &[f64]) {
    let (rows, k) = cols.shape();
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let mut next_unit = 0usize;
    for j in 0..k {
        let degenerate = eigenvalues[j] <= top * 1e-13 || eigenvalues[j] <= 0.0;
        let mut v: DVector<f64> = cols.column(j).into_owned();
        if !degenerate && reduce(&mut v, cols, j) {
            cols.set_column(j, &v);
            continue;
        }
        loop {
            let mut e = DVector::zeros(rows);
            e[next_unit % rows] = 1.0;
            next_unit += 1;
            if reduce(&mut e, cols, j) {
                cols.set_column(j, &e);
                break;
            }
        }
    }
}

fn reduce(v: &mut DVector<f64>, cols: &DMatrix<f64>, j: usize) -> bool {
    let start = v.norm();
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for i in 0..j {
            let q = cols.column(i);
            let proj = q.dot(v);
            v.axpy(-proj, &q, 1.0);
        }
    }
    let norm = v.norm();
    if norm <= 1e-8 * start {
        return false;
    }
    *v /= norm;
    true
}

/// ξ_k = ⟨x - mean, v_k⟩ for k = 1..p.
pub fn scores(x: &ReferenceCurve, basis: &EigenBasis, p: usize) -> Result<ScoreVector> {
    if p > basis.len() {
        return Err(Error::invalid(format!(
            "truncation p = {p} exceeds basis size {}",
            basis.len()
        )));
    }
    if !same_grid(x.grid(), basis.grid()) {
        return Err(Error::GridMismatch(
            "curve and basis live on different grids".into(),
        ));
    }
    let w = basis.grid().weights();
    let centered: Vec<f64> = x
        .values()
        .iter()
        .zip(basis.mean.values())
        .zip(w)
        .map(|((v, m), w)| (v - m) * w)
        .collect();
    let xi = basis.eigenfunctions[..p]
        .iter()
        .map(|vk| {
            centered
                .iter()
                .zip(vk.values())
                .map(|(c, v)| c * v)
                .sum::<f64>()
        })
        .collect();
    Ok(ScoreVector(xi))
}

/// Σ_{k>p} λ_k over the retained eigenvalues.
pub fn tail_sum(basis: &EigenBasis, p: usize) -> Result<f64> {
    if p > basis.len() {
        return Err(Error::invalid(format!(
            "tail index p = {p} exceeds basis size {}",
            basis.len()
        )));
    }
    Ok(basis.eigenvalues[p..].iter().sum())
}

/// Reconstruction mean + Σ_{k≤p} ξ_k v_k.
pub fn project(x: &ReferenceCurve, basis: &EigenBasis, p: usize) -> Result<ReferenceCurve> {
    let xi = scores(x, basis, p)?;
    let mut values = basis.mean.values().to_vec();
    for (s, vk) in xi.0.iter().zip(&basis.eigenfunctions) {
        for (out, v) in values.iter_mut().zip(vk.values()) {
            *out += s * v;
        }
    }
    ReferenceCurve::new(Arc::clone(basis.grid()), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{l2_distance, make_uniform_grid};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(p: usize) -> Arc<Grid> {
        Arc::new(make_uniform_grid(p).unwrap())
    }

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let g = grid(p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curves = (0..n)
            .map(|_| {
                let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                ReferenceCurve::from_fn(g.clone(), |t| {
                    a[0] + a[1] * t + a[2] * (3.0 * t).sin() + 0.3 * a[3] * (7.0 * t).cos()
                })
                .unwrap()
            })
            .collect();
        Dataset::new(curves, vec![0.0; n]).unwrap()
    }

    #[test]
    fn repeated_curve_has_zero_variance() {
        let g = grid(32);
        let x = ReferenceCurve::from_fn(g, |t| t * t).unwrap();
        let data = Dataset::new(vec![x.clone(), x.clone(), x], vec![0.0; 3]).unwrap();
        let basis = empirical_basis(&data, 1).unwrap();
        assert_eq!(basis.eigenvalues()[0], 0.0);
        let f = &basis.eigenfunctions()[0];
        let w = f.grid().weights();
        let norm: f64 = w.iter().zip(f.values()).map(|(w, v)| w * v * v).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_pair_gives_unit_eigenvalue() {
        let g = grid(64);
        let v = ReferenceCurve::from_fn(g.clone(), |t| 3f64.sqrt() * t).unwrap();
        let w = g.weights();
        let norm2: f64 = w.iter().zip(v.values()).map(|(w, x)| w * x * x).sum();
        let vals: Vec<f64> = v.values().iter().map(|x| x / norm2.sqrt()).collect();
        let v = ReferenceCurve::new(g.clone(), vals).unwrap();
        let neg = ReferenceCurve::new(g, v.values().iter().map(|x| -x).collect()).unwrap();
        let data = Dataset::new(vec![v.clone(), neg], vec![0.0, 0.0]).unwrap();
        let basis = empirical_basis(&data, 2).unwrap();
        assert_abs_diff_eq!(basis.eigenvalues()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(basis.eigenvalues()[1], 0.0, epsilon = 1e-12);
        let v1 = &basis.eigenfunctions()[0];
        let d_plus = l2_distance(v1, &v).unwrap();
        assert!(d_plus < 1e-10, "v1 = +v expected by sign convention, got {d_plus}");
    }

    #[test]
    fn basis_is_orthonormal_and_sorted() {
        for (n, p) in [(20, 64), (80, 16)] {
            let data = random_dataset(n, p, 7);
            let rank = n.min(p + 1);
            let basis = empirical_basis(&data, rank).unwrap();
            let lam = basis.eigenvalues();
            assert!(lam.windows(2).all(|w| w[0] >= w[1] - 1e-10));
            assert!(lam.iter().all(|&l| l >= 0.0));
            let w = data.grid().weights();
            for (j, a) in basis.eigenfunctions().iter().enumerate() {
                for (k, b) in basis.eigenfunctions().iter().enumerate() {
                    let ip: f64 = w
                        .iter()
                        .zip(a.values().iter().zip(b.values()))
                        .map(|(w, (x, y))| w * x * y)
                        .sum();
                    let target = if j == k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ip, target, epsilon = 1e-8);
                }
            }
            // full-rank decomposition captures all variance
            assert!(basis.residual_trace() < 1e-10);
        }
    }

    #[test]
    fn scores_of_mean_and_mean_plus_first() {
        let data = random_dataset(30, 32, 11);
        let basis = empirical_basis(&data, 5).unwrap();
        let zero = scores(basis.mean(), &basis, 5).unwrap();
        assert!(zero.0.iter().all(|s| s.abs() < 1e-12));
        let shifted: Vec<f64> = basis
            .mean()
            .values()
            .iter()
            .zip(basis.eigenfunctions()[0].values())
            .map(|(m, v)| m + v)
            .collect();
        let x = ReferenceCurve::new(data.grid().clone(), shifted).unwrap();
        let xi = scores(&x, &basis, 5).unwrap();
        assert_abs_diff_eq!(xi.0[0], 1.0, epsilon = 1e-8);
        for s in &xi.0[1..] {
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn parseval_on_full_basis() {
        // 8 points → full rank 9 basis spans every curve on the grid
        let data = random_dataset(40, 8, 3);
        let basis = empirical_basis(&data, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let vals: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = ReferenceCurve::new(data.grid().clone(), vals).unwrap();
        let xi = scores(&x, &basis, 9).unwrap();
        let energy: f64 = xi.0.iter().map(|s| s * s).sum();
        let direct = l2_distance(&x, basis.mean()).unwrap().powi(2);
        assert_abs_diff_eq!(energy, direct, epsilon = 1e-8);
    }

    #[test]
    fn tail_sums() {
        let data = random_dataset(25, 16, 5);
        let basis = empirical_basis(&data, 10).unwrap();
        assert_eq!(tail_sum(&basis, 10).unwrap(), 0.0);
        let trace: f64 = basis.eigenvalues().iter().sum();
        assert_abs_diff_eq!(tail_sum(&basis, 0).unwrap(), trace, epsilon = 1e-15);
        assert!(tail_sum(&basis, 11).is_err());
    }

    #[test]
    fn rank_bounds_are_enforced() {
        let data = random_dataset(5, 16, 1);
        assert!(empirical_basis(&data, 0).is_err());
        assert!(empirical_basis(&data, 6).is_err());
        let basis = empirical_basis(&data, 5).unwrap();
        assert!(scores(basis.mean(), &basis, 6).is_err());
    }

    #[test]
    fn projection_with_full_basis_recovers_sample_curves() {
        let data = random_dataset(6, 32, 2);
        let basis = empirical_basis(&data, 6).unwrap();
        for c in data.curves() {
            let r = project(c, &basis, 6).unwrap();
            assert!(l2_distance(c, &r).unwrap() < 1e-10);
        }
    }
}
