//! Rank, null spaces, orthonormalization and subspace comparison.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative thresholds shared by rank and residual checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TolerancePolicy {
    /// Singular values below `rank_eps * sigma_max * max(rows, cols)` count as zero.
    pub rank_eps: f64,
    /// Relative bound on residuals reported as passing.
    pub residual_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { rank_eps: 1e-12, residual_tol: 1e-10 }
    }
}

impl TolerancePolicy {
    pub fn new(rank_eps: f64, residual_tol: f64) -> Result<Self> {
        for (name, v) in [("rank_eps", rank_eps), ("residual_tol", residual_tol)] {
            if !(v > 0.0 && v < 1e-3) {
                return Err(Error::InvalidTolerance(format!("{name} = {v} must lie in (0, 1e-3)")));
            }
        }
        Ok(Self { rank_eps, residual_tol })
    }
}

/// Column vectors of a common ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    pub dim: usize,
    pub columns: DMatrix<f64>,
    pub orthonormal: bool,
}

impl VectorSet {
    pub fn new(columns: DMatrix<f64>, orthonormal: bool) -> Self {
        Self { dim: columns.nrows(), columns, orthonormal }
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, 0), true)
    }

    pub fn from_vectors(dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(format!("vector of length {} in a {dim}-dimensional set", v.len())));
        }
        if vectors.is_empty() {
            return Ok(Self::empty(dim));
        }
        Ok(Self::new(DMatrix::from_columns(vectors), false))
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.columns.column(i).into_owned()
    }

    /// Largest `|<v_i, v_j> - delta_ij|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.columns.transpose() * &self.columns;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

fn rank_threshold(sigma_max: f64, rows: usize, cols: usize, eps: f64) -> f64 {
    eps * sigma_max * rows.max(cols) as f64
}

fn largest(values: &DVector<f64>) -> f64 {
    values.iter().fold(0.0f64, |m, s| m.max(*s))
}

pub fn numerical_rank(m: &DMatrix<f64>, eps: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = largest(&sv);
    if smax == 0.0 {
        return 0;
    }
    let cut = rank_threshold(smax, m.nrows(), m.ncols(), eps);
    sv.iter().filter(|s| **s > cut).count()
}

/// Orthonormal null-space basis from the right singular vectors.
///
/// A wide matrix is padded with zero rows so that the SVD returns the full
/// square `V`.
pub fn null_space_svd(m: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<VectorSet> {
    let (rows, cols) = m.shape();
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    if cols == 0 {
        return Ok(VectorSet::empty(0));
    }
    if rows == 0 {
        return Ok(VectorSet::new(DMatrix::identity(cols, cols), true));
    }
    let square = if rows < cols { m.clone().insert_rows(rows, cols - rows, 0.0) } else { m.clone() };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = largest(&svd.singular_values);
    let cut = rank_threshold(smax, rows, cols, policy.rank_eps);
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| smax == 0.0 || **s <= cut)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if null.is_empty() {
        return Ok(VectorSet::empty(cols));
    }
    Ok(VectorSet::new(DMatrix::from_columns(&null), true))
}

/// Null space of a matrix in pivot form: the leading `rows x rows` block is
/// upper triangular with a nonzero diagonal. Each trailing (free) column
/// yields one vector with a unit entry there, zeros at the other free
/// columns, and pivot entries from back substitution. Vectors are not
/// normalized.
pub fn null_space_echelon(m: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<VectorSet> {
    let (rows, cols) = m.shape();
    if rows > cols {
        return Err(Error::DimensionMismatch(format!("pivot form needs rows <= cols, got {rows}x{cols}")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let scale = m.amax();
    for i in 0..rows {
        if m[(i, i)].abs() <= policy.rank_eps * scale || scale == 0.0 {
            return Err(Error::PivotBreakdown { row: i, value: m[(i, i)] });
        }
        for k in 0..i {
            if m[(i, k)] != 0.0 {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {k}) below the pivot diagonal is nonzero"
                )));
            }
        }
    }
    let free = cols - rows;
    let mut out = DMatrix::zeros(cols, free);
    for f in 0..free {
        let mut x = DVector::zeros(cols);
        x[rows + f] = 1.0;
        for i in (0..rows).rev() {
            let mut acc = m[(i, rows + f)];
            for k in i + 1..rows {
                acc += m[(i, k)] * x[k];
            }
            x[i] = -acc / m[(i, i)];
        }
        out.set_column(f, &x);
    }
    Ok(VectorSet::new(out, false))
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
pub fn gram_schmidt(set: &VectorSet) -> Result<VectorSet> {
    let mut q = set.columns.clone();
    for i in 0..q.ncols() {
        let original = q.column(i).norm();
        if original == 0.0 {
            return Err(Error::RankDeficient { index: i, ratio: 0.0 });
        }
        for _ in 0..2 {
            for k in 0..i {
                let qk = q.column(k).into_owned();
                let proj = qk.dot(&q.column(i));
                q.column_mut(i).axpy(-proj, &qk, 1.0);
            }
        }
        let norm = q.column(i).norm();
        if norm < 1e-12 * original {
            return Err(Error::RankDeficient { index: i, ratio: norm / original });
        }
        q.column_mut(i).unscale_mut(norm);
    }
    Ok(VectorSet::new(q, true))
}

fn orthonormal(set: &VectorSet) -> Result<DMatrix<f64>> {
    Ok(if set.orthonormal { set.columns.clone() } else { gram_schmidt(set)?.columns })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectorDistance {
    /// `||P_A - P_B||_2`.
    pub spectral: f64,
    /// `||P_A - P_B||_F`.
    pub frobenius: f64,
    pub warning: Option<String>,
}

/// Distance between the projectors onto two subspaces. Computed from the
/// residuals `(I - P_A) Q_B` and `(I - P_B) Q_A` rather than from the
/// principal cosines, which keeps small distances accurate.
pub fn subspace_projector_distance(a: &VectorSet, b: &VectorSet) -> Result<ProjectorDistance> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!("ambient dimensions {} and {}", a.dim, b.dim)));
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(ProjectorDistance { spectral: 0.0, frobenius: 0.0, warning: None }),
        (true, false) | (false, true) => {
            let k = a.len().max(b.len()) as f64;
            return Ok(ProjectorDistance {
                spectral: 1.0,
                frobenius: k.sqrt(),
                warning: Some("comparing an empty subspace with a non-empty one".into()),
            });
        }
        _ => {}
    }
    let qa = orthonormal(a)?;
    let qb = orthonormal(b)?;
    let rb = &qb - &qa * (qa.transpose() * &qb);
    let ra = &qa - &qb * (qb.transpose() * &qa);
    let frobenius = (rb.norm_squared() + ra.norm_squared()).sqrt();
    let (spectral, warning) = if qa.ncols() == qb.ncols() {
        (largest(&rb.singular_values()).min(1.0), None)
    } else {
        (1.0, Some(format!("subspace dimensions differ ({} vs {})", qa.ncols(), qb.ncols())))
    };
    Ok(ProjectorDistance { spectral, frobenius, warning })
}

/// Largest `||M v|| / sigma_max(M)` over the vectors of a set.
pub fn relative_annihilation(m: &DMatrix<f64>, set: &VectorSet) -> f64 {
    let smax = if m.is_empty() { 0.0 } else { largest(&m.singular_values()) };
    let scale = if smax > 0.0 { smax } else { 1.0 };
    (0..set.len())
        .map(|i| {
            let v = set.columns.column(i);
            (m * v).norm() / (scale * v.norm().max(f64::MIN_POSITIVE))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn tolerance_bounds() {
        assert!(TolerancePolicy::new(1e-12, 1e-10).is_ok());
        assert!(TolerancePolicy::new(0.0, 1e-10).is_err());
        assert!(TolerancePolicy::new(1e-12, 0.01).is_err());
        assert!(TolerancePolicy::new(f64::NAN, 1e-10).is_err());
    }

    #[test]
    fn rank_of_simple_matrices() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(numerical_rank(&m, 1e-12), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 4), 1e-12), 0);
        assert_eq!(numerical_rank(&DMatrix::identity(4, 4), 1e-12), 4);
    }

    #[test]
    fn null_space_routes_agree() {
        let m = DMatrix::from_row_slice(2, 4, &[2.0, 1.0, -1.0, 0.5, 0.0, 3.0, 1.0, -2.0]);
        let svd = null_space_svd(&m, &policy()).unwrap();
        let ech = null_space_echelon(&m, &policy()).unwrap();
        assert_eq!(svd.len(), 2);
        assert_eq!(ech.len(), 2);
        assert!(svd.gram_deviation() < 1e-14);
        assert!(relative_annihilation(&m, &svd) < 1e-14);
        assert!(relative_annihilation(&m, &ech) < 1e-14);
        let d = subspace_projector_distance(&svd, &ech).unwrap();
        assert!(d.spectral < 1e-13 && d.frobenius < 1e-13);
    }

    #[test]
    fn echelon_free_column_unit() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let ech = null_space_echelon(&m, &policy()).unwrap();
        assert_eq!(ech.vector(0), DVector::from_vec(vec![-1.0, 1.0]));
    }

    #[test]
    fn echelon_rejects_bad_pivots() {
        let m = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(null_space_echelon(&m, &policy()), Err(Error::PivotBreakdown { row: 0, .. })));
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(null_space_echelon(&m, &policy()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn null_space_of_full_rank_square_is_empty() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(null_space_svd(&m, &policy()).unwrap().is_empty());
        let z = DMatrix::zeros(2, 3);
        assert_eq!(null_space_svd(&z, &policy()).unwrap().len(), 3);
    }

    #[test]
    fn gram_schmidt_orthonormalizes() {
        let set = VectorSet::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0 + 1e-9, 1.0, 0.0, 1.0, 1.0]),
            false,
        );
        let q = gram_schmidt(&set).unwrap();
        assert!(q.gram_deviation() < 1e-14);
        let d = subspace_projector_distance(&set, &q).unwrap();
        assert!(d.frobenius < 1e-12);
    }

    #[test]
    fn gram_schmidt_detects_dependence() {
        let set = VectorSet::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]), false);
        assert!(matches!(gram_schmidt(&set), Err(Error::RankDeficient { index: 1, .. })));
    }

    #[test]
    fn projector_distance_cases() {
        let e1 = VectorSet::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), true);
        let e2 = VectorSet::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]), true);
        let d = subspace_projector_distance(&e1, &e2).unwrap();
        assert!((d.spectral - 1.0).abs() < 1e-15);
        assert!((d.frobenius - 2f64.sqrt()).abs() < 1e-15);

        let t: f64 = 1e-9;
        let tilted = VectorSet::new(DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]), true);
        let d = subspace_projector_distance(&e1, &tilted).unwrap();
        assert!((d.spectral - t).abs() < 1e-20);

        let empty = VectorSet::empty(2);
        let d = subspace_projector_distance(&empty, &empty).unwrap();
        assert_eq!(d.spectral, 0.0);
        let d = subspace_projector_distance(&empty, &e1).unwrap();
        assert_eq!(d.spectral, 1.0);
        assert!(d.warning.is_some());

        let both = VectorSet::new(DMatrix::identity(2, 2), true);
        let d = subspace_projector_distance(&both, &e1).unwrap();
        assert_eq!(d.spectral, 1.0);
        assert!((d.frobenius - 1.0).abs() < 1e-15);
    }
}
