//! Dark states: numeric null spaces, closed-form families and verification.
//!
//! A dark state lives entirely in the lower (atom in `|g>`) sector and is
//! annihilated by `C`. When every detuning equals `Delta` it is also an
//! eigenstate of the full block Hamiltonian with eigenvalue `-n Delta`.
//!
//! Closed forms are indexed by the free lower state `|g, 0, f_2, .., f_N>`
//! they are pinned to. The three-mode label is `p = s3 + 1` for
//! `f = (n - s3, s3)`, the four-mode label `p = s3 (s3 + 1) / 2 + s4 + 1` for
//! `f = (n - s3, s3 - s4, s4)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::basis::{binomial, occupations, OccupationSpace, SubspaceBasis, SubspaceSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::BlockHamiltonian;
use crate::linalg::{
    null_space_echelon, null_space_svd, relative_annihilation, TolerancePolicy, VectorSet,
};

/// Relative eigen-residual accepted by [`verify_dark`].
pub const EIGEN_TOL: f64 = 1e-9;

/// Relative spread below which detunings count as equal.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Where a dark vector came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Label {
    Numeric { index: usize },
    Echelon { p: usize },
    ClosedForm { p: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DarkStateSet {
    pub spec: SubspaceSpec,
    /// Columns over the lower basis.
    pub vectors: VectorSet,
    pub labels: Vec<Label>,
    pub normalized: bool,
}

impl DarkStateSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.vector(i)
    }

    /// Each vector scaled to unit norm; orthogonality is not imposed.
    pub fn normalized(&self) -> Self {
        let mut cols = self.vectors.columns.clone();
        for mut c in cols.column_iter_mut() {
            let norm = c.norm();
            if norm > 0.0 {
                c.unscale_mut(norm);
            }
        }
        let orthonormal = self.vectors.orthonormal;
        Self {
            spec: self.spec,
            vectors: VectorSet::new(cols, orthonormal),
            labels: self.labels.clone(),
            normalized: true,
        }
    }
}

/// `C(N + n - 2, N - 2)`; zero for a single mode.
pub fn dark_state_count(modes: usize, n: u32) -> Result<u128> {
    if modes == 0 {
        return Err(Error::InvalidSpec("mode count must be at least 1".into()));
    }
    if modes == 1 {
        return Ok(0);
    }
    binomial(modes as u64 + u64::from(n) - 2, modes as u64 - 2)
}

/// `(max - min, mean)` of the detunings.
pub fn detuning_spread(detunings: &[f64]) -> (f64, f64) {
    let max = detunings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = detunings.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = detunings.iter().sum::<f64>() / detunings.len() as f64;
    (max - min, mean)
}

pub fn is_degenerate(detunings: &[f64]) -> bool {
    let (spread, mean) = detuning_spread(detunings);
    spread <= DEGENERACY_TOL * mean.abs().max(1.0)
}

/// Flip the sign so the largest-magnitude entry is positive.
pub fn fix_phase(v: &mut DVector<f64>) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.neg_mut();
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Solve even when detunings differ; the result annihilates `C` but is
    /// not an eigenset.
    pub allow_nondegenerate: bool,
}

/// Orthonormal basis of `ker C` from the SVD, checked against the count law.
pub fn solve_dark_states(
    bh: &BlockHamiltonian,
    policy: &TolerancePolicy,
    options: SolveOptions,
) -> Result<DarkStateSet> {
    if let Some(mode) = bh.params.zero_coupling() {
        return Err(Error::ZeroCoupling { mode });
    }
    let detunings = bh.params.detunings();
    if !options.allow_nondegenerate && !is_degenerate(&detunings) {
        return Err(Error::NonDegenerateDetunings { spread: detuning_spread(&detunings).0 });
    }
    let mut set = null_space_svd(&bh.coupling, policy)?;
    let expected = dark_state_count(bh.spec.modes, bh.spec.excitations)?;
    if set.len() as u128 != expected {
        return Err(Error::CountMismatch { expected, found: set.len() });
    }
    for mut c in set.columns.column_iter_mut() {
        let mut v = c.clone_owned();
        fix_phase(&mut v);
        c.copy_from(&v);
    }
    let labels = (0..set.len()).map(|index| Label::Numeric { index }).collect();
    Ok(DarkStateSet { spec: bh.spec, vectors: set, labels, normalized: true })
}

/// Raw null-space vectors, one per free column, with the free entry set to 1.
pub fn echelon_dark_states(bh: &BlockHamiltonian, policy: &TolerancePolicy) -> Result<DarkStateSet> {
    if let Some(mode) = bh.params.zero_coupling() {
        return Err(Error::ZeroCoupling { mode });
    }
    let set = null_space_echelon(&bh.coupling, policy)?;
    let labels = (0..set.len()).map(|i| Label::Echelon { p: i + 1 }).collect();
    Ok(DarkStateSet { spec: bh.spec, vectors: set, labels, normalized: false })
}

/* Closed forms ***************************************************************/

fn factorial(k: u32) -> Result<u128> {
    (1..=u128::from(k))
        .try_fold(1u128, |acc, i| acc.checked_mul(i))
        .ok_or(Error::CountOverflow { n: u64::from(k), k: u64::from(k) })
}

/// `A_m^k = m! / (m - k)!`; the empty product is 1.
pub fn permutations(m: u32, k: u32) -> Result<u128> {
    if k > m {
        return Ok(0);
    }
    (m - k + 1..=m)
        .try_fold(1u128, |acc, i| acc.checked_mul(u128::from(i)))
        .ok_or(Error::CountOverflow { n: u64::from(m), k: u64::from(k) })
}

/// A single closed-form dark vector, unnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormVector {
    pub p: usize,
    /// Occupations of modes `2..N` in the pinned free state.
    pub free: Vec<u32>,
    pub vector: DVector<f64>,
    pub norm: f64,
}

/// Per-mode weights `(w_j, w_1)` attached to a photon removed from mode `j`
/// (`w_j`) or left in place (`w_1`). Coupling form: `(g_j, g_1)`; angle form:
/// `(sin theta_j, cos theta_j)`.
fn evaluate_family(space: &OccupationSpace, free: &[u32], weights: &[(f64, f64)]) -> Result<DVector<f64>> {
    let n: u32 = free.iter().sum();
    let mut out = DVector::zeros(space.len());
    let mut k = vec![0u32; free.len()];
    let mut occ = vec![0u32; free.len() + 1];
    loop {
        let k1: u32 = k.iter().sum();
        let mut radicand = factorial(k1)?;
        let mut denom = 1u128;
        let mut weight = 1.0;
        for (j, (&kj, &fj)) in k.iter().zip(free).enumerate() {
            radicand = radicand
                .checked_mul(permutations(fj, kj)?)
                .ok_or(Error::CountOverflow { n: u64::from(n), k: u64::from(k1) })?;
            denom *= factorial(kj)?;
            let (wj, w1) = weights[j];
            weight *= wj.powi(kj as i32) * w1.powi((fj - kj) as i32);
            occ[j + 1] = fj - kj;
        }
        occ[0] = k1;
        let sign = if k1.is_multiple_of(2) { 1.0 } else { -1.0 };
        let idx = space.position(&occ).expect("closed-form state lies in the lower sector");
        out[idx] += sign * (radicand as f64).sqrt() / denom as f64 * weight;

        // next tuple with 0 <= k_j <= f_j
        let mut j = 0;
        while j < k.len() {
            if k[j] < free[j] {
                k[j] += 1;
                break;
            }
            k[j] = 0;
            j += 1;
        }
        if j == k.len() {
            break;
        }
    }
    Ok(out)
}

fn coupling_weights(g: &[f64]) -> Vec<(f64, f64)> {
    g[1..].iter().map(|gj| (*gj, g[0])).collect()
}

fn angle_weights(thetas: &[f64]) -> Vec<(f64, f64)> {
    thetas.iter().map(|t| (t.sin(), t.cos())).collect()
}

fn check_couplings(g: &[f64], modes: usize) -> Result<()> {
    if g.len() != modes {
        return Err(Error::DimensionMismatch(format!("expected {modes} couplings, got {}", g.len())));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("couplings"));
    }
    Ok(())
}

fn closed_form(n: u32, free: Vec<u32>, p: usize, weights: &[(f64, f64)]) -> Result<ClosedFormVector> {
    let space = OccupationSpace::new(free.len() + 1, n);
    let vector = evaluate_family(&space, &free, weights)?;
    let norm = vector.norm();
    Ok(ClosedFormVector { p, free, vector, norm })
}

fn family(spec: SubspaceSpec, members: Vec<ClosedFormVector>) -> DarkStateSet {
    let labels = members.iter().map(|m| Label::ClosedForm { p: m.p }).collect();
    let cols: Vec<DVector<f64>> = members.into_iter().map(|m| m.vector).collect();
    let dim = OccupationSpace::new(spec.modes, spec.excitations).len();
    let vectors = if cols.is_empty() {
        VectorSet::empty(dim)
    } else {
        VectorSet::new(DMatrix::from_columns(&cols), false)
    };
    DarkStateSet { spec, vectors, labels, normalized: false }
}

/// The unique two-mode dark state, normalized: coefficient
/// `sqrt(C(n, k)) (-g1)^(n-k) g2^k / (g1^2 + g2^2)^(n/2)` on `|g, k, n-k>`.
pub fn two_mode_closed_form(n: u32, g: &[f64]) -> Result<DarkStateSet> {
    check_couplings(g, 2)?;
    let spec = SubspaceSpec::new(2, n)?;
    let norm = (g[0] * g[0] + g[1] * g[1]).powf(f64::from(n) / 2.0);
    let mut v = DVector::zeros(n as usize + 1);
    for k in 0..=n {
        let c = (binomial(u64::from(n), u64::from(k))? as f64).sqrt();
        v[(n - k) as usize] = c * (-g[0]).powi((n - k) as i32) * g[1].powi(k as i32) / norm;
    }
    let vectors = VectorSet::new(DMatrix::from_columns(&[v]), true);
    Ok(DarkStateSet { spec, vectors, labels: vec![Label::ClosedForm { p: 1 }], normalized: true })
}

/// Two-mode dark state in terms of `theta` with `tan theta = g2 / g1`.
pub fn two_mode_mixing_angle(n: u32, theta: f64) -> Result<DVector<f64>> {
    let (s, c) = theta.sin_cos();
    let mut v = DVector::zeros(n as usize + 1);
    for k in 0..=n {
        let b = (binomial(u64::from(n), u64::from(k))? as f64).sqrt();
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        v[(n - k) as usize] = b * sign * c.powi((n - k) as i32) * s.powi(k as i32);
    }
    Ok(v)
}

fn three_mode_free(n: u32, s3: u32) -> Result<Vec<u32>> {
    if s3 > n {
        return Err(Error::IndexRange(format!("s3 = {s3} exceeds n = {n}")));
    }
    Ok(vec![n - s3, s3])
}

/// Three-mode dark state pinned to `|g, 0, n - s3, s3>`, label `p = s3 + 1`.
pub fn three_mode_closed_form(n: u32, s3: u32, g: &[f64]) -> Result<ClosedFormVector> {
    check_couplings(g, 3)?;
    closed_form(n, three_mode_free(n, s3)?, s3 as usize + 1, &coupling_weights(g))
}

/// Three-mode dark state with `tan theta_j = g_j / g1`; proportional to the
/// coupling form.
pub fn three_mode_mixing_angle(n: u32, s3: u32, theta2: f64, theta3: f64) -> Result<ClosedFormVector> {
    closed_form(n, three_mode_free(n, s3)?, s3 as usize + 1, &angle_weights(&[theta2, theta3]))
}

/// All `n + 1` three-mode dark states in label order.
pub fn three_mode_family(n: u32, g: &[f64]) -> Result<DarkStateSet> {
    let members = (0..=n).map(|s3| three_mode_closed_form(n, s3, g)).collect::<Result<Vec<_>>>()?;
    Ok(family(SubspaceSpec::new(3, n)?, members))
}

fn four_mode_free(n: u32, s3: u32, s4: u32) -> Result<(Vec<u32>, usize)> {
    if s4 > s3 || s3 > n {
        return Err(Error::IndexRange(format!("need 0 <= s4 <= s3 <= n, got s3 = {s3}, s4 = {s4}, n = {n}")));
    }
    let p = (s3 * (s3 + 1) / 2 + s4 + 1) as usize;
    Ok((vec![n - s3, s3 - s4, s4], p))
}

/// Four-mode dark state pinned to `|g, 0, n - s3, s3 - s4, s4>`.
pub fn four_mode_closed_form(n: u32, s3: u32, s4: u32, g: &[f64]) -> Result<ClosedFormVector> {
    check_couplings(g, 4)?;
    let (free, p) = four_mode_free(n, s3, s4)?;
    closed_form(n, free, p, &coupling_weights(g))
}

pub fn four_mode_mixing_angle(n: u32, s3: u32, s4: u32, thetas: [f64; 3]) -> Result<ClosedFormVector> {
    let (free, p) = four_mode_free(n, s3, s4)?;
    closed_form(n, free, p, &angle_weights(&thetas))
}

/// All `(n + 1)(n + 2) / 2` four-mode dark states in label order.
pub fn four_mode_family(n: u32, g: &[f64]) -> Result<DarkStateSet> {
    let mut members = Vec::new();
    for s3 in 0..=n {
        for s4 in 0..=s3 {
            members.push(four_mode_closed_form(n, s3, s4, g)?);
        }
    }
    Ok(family(SubspaceSpec::new(4, n)?, members))
}

/// Pinned closed form for any mode count, keyed by the free occupations of
/// modes `2..N` (canonical free-column order).
pub fn pinned_family(n: u32, g: &[f64]) -> Result<DarkStateSet> {
    if g.len() < 2 {
        return Err(Error::InvalidSpec("closed forms need at least two modes".into()));
    }
    check_couplings(g, g.len())?;
    let weights = coupling_weights(g);
    let members = occupations(g.len() - 1, n)
        .into_iter()
        .enumerate()
        .map(|(i, free)| closed_form(n, free, i + 1, &weights))
        .collect::<Result<Vec<_>>>()?;
    Ok(family(SubspaceSpec::new(g.len(), n)?, members))
}

fn prefix_norms(g: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    g.iter()
        .map(|x| {
            acc += x * x;
            acc.sqrt()
        })
        .collect()
}

/// Orthonormal single-excitation dark states for `N` modes. Vector `l`
/// (`l = 1..N-1`) is
/// `(g_{l+1} g_1, .., g_{l+1} g_l, -N_l^2) / (N_l N_{l+1})` with prefix norms
/// `N_l = sqrt(g_1^2 + .. + g_l^2)`; the first is written `(g2, -g1) / N_2`.
pub fn n_mode_single_excitation_closed_form(g: &[f64]) -> Result<DarkStateSet> {
    let modes = g.len();
    check_couplings(g, modes)?;
    if let Some(j) = g.iter().position(|x| *x == 0.0) {
        return Err(Error::ZeroCoupling { mode: j + 1 });
    }
    let spec = SubspaceSpec::new(modes, 1)?;
    let norms = prefix_norms(g);
    let mut cols = Vec::with_capacity(modes.saturating_sub(1));
    for l in 1..modes {
        let mut v = DVector::zeros(modes);
        if l == 1 {
            v[0] = g[1] / norms[1];
            v[1] = -g[0] / norms[1];
        } else {
            let scale = norms[l - 1] * norms[l];
            for j in 0..l {
                v[j] = g[l] * g[j] / scale;
            }
            v[l] = -norms[l - 1] * norms[l - 1] / scale;
        }
        cols.push(v);
    }
    let labels = (1..modes).map(|p| Label::ClosedForm { p }).collect();
    let vectors = if cols.is_empty() {
        VectorSet::empty(modes)
    } else {
        VectorSet::new(DMatrix::from_columns(&cols), true)
    };
    Ok(DarkStateSet { spec, vectors, labels, normalized: true })
}

/// Non-orthogonal single-excitation states `(g_l |g,e_1> - g_1 |g,e_l>) / sqrt(g_1^2 + g_l^2)`.
pub fn pair_difference_states(g: &[f64]) -> Result<DarkStateSet> {
    let modes = g.len();
    check_couplings(g, modes)?;
    let spec = SubspaceSpec::new(modes, 1)?;
    let cols: Vec<DVector<f64>> = (1..modes)
        .map(|l| {
            let norm = g[0].hypot(g[l]);
            let mut v = DVector::zeros(modes);
            v[0] = g[l] / norm;
            v[l] = -g[0] / norm;
            v
        })
        .collect();
    let labels = (1..modes).map(|p| Label::ClosedForm { p }).collect();
    let vectors = if cols.is_empty() {
        VectorSet::empty(modes)
    } else {
        VectorSet::new(DMatrix::from_columns(&cols), false)
    };
    Ok(DarkStateSet { spec, vectors, labels, normalized: true })
}

/* Verification ***************************************************************/

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarkReport {
    pub count: usize,
    pub expected_count: u128,
    /// Largest `||C v|| / (sigma_max ||v||)`.
    pub annihilation: f64,
    pub annihilation_pass: bool,
    /// Largest `||H v + n Delta v|| / |n Delta|` over normalized embedded
    /// vectors; absolute when `n Delta = 0`.
    pub eigen_residual: f64,
    pub eigen_pass: bool,
    pub degenerate: bool,
    /// Only meaningful for sets that claim orthonormality.
    pub gram_deviation: Option<f64>,
    pub gram_pass: bool,
    pub upper_leakage: f64,
}

impl DarkReport {
    pub fn passed(&self) -> bool {
        self.annihilation_pass && self.eigen_pass && self.gram_pass && self.upper_leakage == 0.0
    }
}

pub fn verify_dark(bh: &BlockHamiltonian, ds: &DarkStateSet, policy: &TolerancePolicy) -> Result<DarkReport> {
    if ds.vectors.dim != bh.lower_len() {
        return Err(Error::DimensionMismatch(format!(
            "dark vectors have length {}, lower sector has {}",
            ds.vectors.dim,
            bh.lower_len()
        )));
    }
    let annihilation = relative_annihilation(&bh.coupling, &ds.vectors);
    let detunings = bh.params.detunings();
    let (_, mean) = detuning_spread(&detunings);
    let target = -f64::from(bh.spec.excitations) * mean;
    let nu = bh.upper_len();
    let h = bh.full_matrix();

    let mut eigen_residual = 0.0f64;
    let mut upper_leakage = 0.0f64;
    for i in 0..ds.len() {
        let v = ds.vector(i);
        let norm = v.norm();
        if norm == 0.0 {
            eigen_residual = f64::INFINITY;
            continue;
        }
        let mut full = DVector::zeros(bh.dimension());
        full.rows_mut(nu, v.len()).copy_from(&(v / norm));
        upper_leakage = upper_leakage.max(full.rows(0, nu).norm());
        let r = (&h * &full - &full * target).norm();
        let scale = if target.abs() > 0.0 { target.abs() } else { 1.0 };
        eigen_residual = eigen_residual.max(r / scale);
    }

    let gram_deviation = ds.vectors.orthonormal.then(|| ds.vectors.gram_deviation());
    let gram_pass = gram_deviation.is_none_or(|d| d <= policy.residual_tol);
    Ok(DarkReport {
        count: ds.len(),
        expected_count: dark_state_count(bh.spec.modes, bh.spec.excitations)?,
        annihilation,
        annihilation_pass: annihilation <= policy.residual_tol,
        eigen_residual,
        eigen_pass: eigen_residual <= EIGEN_TOL,
        degenerate: is_degenerate(&detunings),
        gram_deviation,
        gram_pass,
        upper_leakage,
    })
}

/// Lower-basis labels for a dark-state set.
pub fn lower_labels(spec: SubspaceSpec) -> Result<Vec<String>> {
    let basis = SubspaceBasis::new(spec)?;
    Ok(basis.states(crate::basis::Sector::Lower).iter().map(|s| s.to_string()).collect())
}
