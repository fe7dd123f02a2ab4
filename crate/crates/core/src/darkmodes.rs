//! Bright and dark field modes.
//!
//! With degenerate mode frequencies the orthogonal transform
//! `a_+ = sum_j g_j a_j / N_N` and
//! `a_{l-} = [g_l (g_1 a_1 + .. + g_{l-1} a_{l-1}) - N_{l-1}^2 a_l] / (N_{l-1} N_l)`
//! (prefix norms `N_l`) leaves only `a_+` coupled to the atom. Fock states
//! with the bright mode empty then span the dark subspace; their expansion
//! in the original modes is the matrix `B`, and the raw null-space matrix
//! `A` factors as `A = B R`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::basis::{occupations, OccupationSpace, SubspaceSpec};
use crate::darkstates::DarkStateSet;
use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;
use crate::linalg::{subspace_projector_distance, ProjectorDistance, VectorSet};

const STRUCTURE_TOL: f64 = 1e-12;

/// Row 0 is the bright mode, row `l - 1` the dark mode `a_{l-}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTransform {
    pub modes: usize,
    pub t: DMatrix<f64>,
}

impl ModeTransform {
    /// `max |T T^T - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        (&self.t * self.t.transpose() - DMatrix::identity(self.modes, self.modes)).amax()
    }
}

pub fn build_mode_transform(g: &[f64]) -> Result<ModeTransform> {
    let modes = g.len();
    if modes == 0 {
        return Err(Error::InvalidSpec("mode transform needs at least one mode".into()));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("couplings"));
    }
    if let Some(j) = g.iter().position(|x| *x == 0.0) {
        return Err(Error::ZeroCoupling { mode: j + 1 });
    }
    let mut norms = Vec::with_capacity(modes);
    let mut acc = 0.0;
    for x in g {
        acc += x * x;
        norms.push(acc.sqrt());
    }
    let mut t = DMatrix::zeros(modes, modes);
    for j in 0..modes {
        t[(0, j)] = g[j] / norms[modes - 1];
    }
    for l in 1..modes {
        if l == 1 {
            t[(1, 0)] = g[1] / norms[1];
            t[(1, 1)] = -g[0] / norms[1];
            continue;
        }
        let scale = norms[l - 1] * norms[l];
        for j in 0..l {
            t[(l, j)] = g[l] * g[j] / scale;
        }
        t[(l, l)] = -norms[l - 1] * norms[l - 1] / scale;
    }
    Ok(ModeTransform { modes, t })
}

/// Single-excitation Hamiltonian after rotating the modes by `T`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformReport {
    pub degenerate: bool,
    pub frequency_spread: f64,
    pub bright_coupling: f64,
    pub expected_bright_coupling: f64,
    /// Largest atom coupling to a dark mode.
    pub dark_coupling: f64,
    /// Largest off-diagonal mode-mode element (bright-dark or dark-dark).
    pub mode_mixing: f64,
    pub orthogonality_error: f64,
    pub passed: bool,
}

/// Conjugate the single-excitation block `[[0, g^T], [g, -diag(Delta)]]`
/// by `diag(1, T)` and measure what still couples to the dark rows.
pub fn transformed_hamiltonian_check(
    params: &ModelParams,
    transform: &ModeTransform,
    allow_nondegenerate: bool,
) -> Result<TransformReport> {
    let n = params.modes();
    if transform.modes != n {
        return Err(Error::DimensionMismatch(format!("transform has {} modes, model {n}", transform.modes)));
    }
    let max = params.omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = params.omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = params.omegas.iter().sum::<f64>() / n as f64;
    let spread = max - min;
    let degenerate = spread <= 1e-12 * mean.abs().max(1.0);
    if !degenerate && !allow_nondegenerate {
        return Err(Error::NonDegenerateFrequencies { spread });
    }

    let mut h = DMatrix::zeros(n + 1, n + 1);
    for (j, (gj, dj)) in params.couplings.iter().zip(params.detunings()).enumerate() {
        h[(0, j + 1)] = *gj;
        h[(j + 1, 0)] = *gj;
        h[(j + 1, j + 1)] = -dj;
    }
    let mut w = DMatrix::identity(n + 1, n + 1);
    w.view_mut((1, 1), (n, n)).copy_from(&transform.t);
    let rotated = &w * h * w.transpose();

    let bright = rotated[(0, 1)];
    let expected = params.couplings.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dark = (2..=n).map(|r| rotated[(0, r)].abs()).fold(0.0, f64::max);
    let mut mixing = 0.0f64;
    for r in 1..=n {
        for s in 1..=n {
            if r != s {
                mixing = mixing.max(rotated[(r, s)].abs());
            }
        }
    }
    let detuning_scale = params.detunings().iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let passed = (bright - expected).abs() <= STRUCTURE_TOL
        && dark <= STRUCTURE_TOL
        && mixing <= STRUCTURE_TOL * detuning_scale;
    Ok(TransformReport {
        degenerate,
        frequency_spread: spread,
        bright_coupling: bright,
        expected_bright_coupling: expected,
        dark_coupling: dark,
        mode_mixing: mixing,
        orthogonality_error: transform.orthogonality_error(),
        passed,
    })
}

/// Dark-mode Fock states `|0>_+ |m_2, .., m_N>_-` in the original lower basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DarkModeBasisMatrix {
    pub modes: usize,
    pub excitations: u32,
    pub b: DMatrix<f64>,
    /// `(m_2, .., m_N)` per column.
    pub labels: Vec<Vec<u32>>,
}

impl DarkModeBasisMatrix {
    pub fn spec(&self) -> Result<SubspaceSpec> {
        SubspaceSpec::new(self.modes, self.excitations)
    }

    pub fn vectors(&self) -> VectorSet {
        VectorSet::new(self.b.clone(), true)
    }
}

/// Apply `sum_j row_j a_j^+` to a vector over `space`, landing in the space
/// with one more photon.
fn create(space: &OccupationSpace, v: &DVector<f64>, row: &[f64], next: &OccupationSpace) -> DVector<f64> {
    let mut out = DVector::zeros(next.len());
    let mut target = vec![0u32; space.modes()];
    for (i, occ) in space.iter().enumerate() {
        if v[i] == 0.0 {
            continue;
        }
        for (j, c) in row.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            target.copy_from_slice(occ);
            target[j] += 1;
            let k = next.position(&target).expect("one more photon stays in the next space");
            out[k] += v[i] * c * f64::from(occ[j] + 1).sqrt();
        }
    }
    out
}

pub fn dark_mode_fock_states(transform: &ModeTransform, n: u32) -> Result<DarkModeBasisMatrix> {
    let modes = transform.modes;
    if modes < 2 {
        return Err(Error::InvalidSpec("dark modes need at least two field modes".into()));
    }
    let spaces: Vec<OccupationSpace> = (0..=n).map(|k| OccupationSpace::new(modes, k)).collect();
    let labels = occupations(modes - 1, n);
    let mut b = DMatrix::zeros(spaces[n as usize].len(), labels.len());
    for (col, m) in labels.iter().enumerate() {
        let mut v = DVector::from_element(1, 1.0);
        let mut photons = 0usize;
        for (l, &ml) in m.iter().enumerate() {
            let row: Vec<f64> = transform.t.row(l + 1).iter().copied().collect();
            let mut fact = 1.0;
            for k in 0..ml {
                v = create(&spaces[photons], &v, &row, &spaces[photons + 1]);
                photons += 1;
                fact *= f64::from(k + 1);
            }
            v /= fact.sqrt();
        }
        b.set_column(col, &v);
    }
    Ok(DarkModeBasisMatrix { modes, excitations: n, b, labels })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QrReport {
    #[serde(skip)]
    pub r: DMatrix<f64>,
    /// `||A - B R||_F / ||A||_F`.
    pub relative_residual: f64,
    pub residual_pass: bool,
    /// Largest `|R_ij|` below the diagonal, relative to `max |R|`.
    pub below_diagonal: f64,
    pub upper_triangular: bool,
}

/// `R = B^T A` with the residual of `A = B R` and a triangularity verdict.
pub fn qr_relation(a: &DMatrix<f64>, b: &DarkModeBasisMatrix) -> Result<QrReport> {
    if a.shape() != b.b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.b.nrows(),
            b.b.ncols()
        )));
    }
    let r = b.b.transpose() * a;
    let residual = (a - &b.b * &r).norm();
    let scale = a.norm();
    let relative_residual = if scale > 0.0 { residual / scale } else { residual };
    let rmax = r.amax();
    let mut below = 0.0f64;
    for i in 0..r.nrows() {
        for j in 0..i.min(r.ncols()) {
            below = below.max(r[(i, j)].abs());
        }
    }
    let below_diagonal = if rmax > 0.0 { below / rmax } else { 0.0 };
    Ok(QrReport {
        r,
        relative_residual,
        residual_pass: relative_residual <= 1e-10,
        below_diagonal,
        upper_triangular: below_diagonal <= 1e-10,
    })
}

/// Projector distance between a numeric dark set and the span of `B`.
pub fn equivalence_check(numeric: &DarkStateSet, b: &DarkModeBasisMatrix) -> Result<ProjectorDistance> {
    if numeric.spec.modes != b.modes || numeric.spec.excitations != b.excitations {
        return Err(Error::DimensionMismatch("dark set and dark-mode basis differ in subspace".into()));
    }
    subspace_projector_distance(&numeric.vectors, &b.vectors())
}
