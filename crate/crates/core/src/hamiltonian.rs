//! Arrowhead block Hamiltonian of a fixed-excitation subspace.
//!
//! In the frame rotating at the atomic frequency the Hamiltonian reads
//! `sum_j [-Delta_j a_j^+ a_j + g_j (sigma_- a_j^+ + a_j sigma_+)]` with
//! `Delta_j = omega_0 - omega_j`. Restricted to `n` excitations it becomes
//! `[[U, C], [C^T, L]]`: `U` and `L` are diagonal, and row `u` of `C` couples
//! the upper state `|e, n'>` to the `N` lower states `|g, n' + e_j>` with
//! amplitude `g_j sqrt(n'_j + 1)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{binomial, SubspaceBasis, SubspaceSpec};
use crate::error::{Error, Result};

/// Atomic splitting, mode frequencies and real couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl ModelParams {
    pub fn new(omega0: f64, omegas: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if omegas.len() != couplings.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mode frequencies but {} couplings",
                omegas.len(),
                couplings.len()
            )));
        }
        if omegas.is_empty() {
            return Err(Error::InvalidSpec("model needs at least one mode".into()));
        }
        if !omega0.is_finite() || omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("frequencies"));
        }
        if couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("couplings"));
        }
        Ok(Self { omega0, omegas, couplings })
    }

    /// Build from detunings: `omega_j = omega0 - detunings[j]`.
    pub fn with_detunings(omega0: f64, detunings: &[f64], couplings: Vec<f64>) -> Result<Self> {
        let omegas = detunings.iter().map(|d| omega0 - d).collect();
        Self::new(omega0, omegas, couplings)
    }

    /// Every mode detuned by the same `delta` from an atom at `omega0 = 1`.
    pub fn uniform(couplings: Vec<f64>, delta: f64) -> Result<Self> {
        let d = vec![delta; couplings.len()];
        Self::with_detunings(1.0, &d, couplings)
    }

    pub fn modes(&self) -> usize {
        self.couplings.len()
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| self.omega0 - w).collect()
    }

    /// Same model with different couplings.
    pub fn with_couplings(&self, couplings: Vec<f64>) -> Result<Self> {
        Self::new(self.omega0, self.omegas.clone(), couplings)
    }

    /// First zero coupling (1-based mode label), if any.
    pub fn zero_coupling(&self) -> Option<usize> {
        self.couplings.iter().position(|g| *g == 0.0).map(|j| j + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Rotating,
    Lab,
}

/// One nonzero transition channel of `C`, without the coupling constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channel {
    pub upper: usize,
    pub lower: usize,
    /// 0-based mode index.
    pub mode: usize,
    /// `sqrt(n'_j + 1)`.
    pub factor: f64,
}

/// Every channel `|e, n'> -> |g, n' + e_j>` in row-major order.
pub fn channels(basis: &SubspaceBasis) -> Vec<Channel> {
    let mut out = Vec::with_capacity(basis.upper_len() * basis.modes());
    let mut target = vec![0u32; basis.modes()];
    for (u, occ) in basis.upper().iter().enumerate() {
        for j in 0..basis.modes() {
            target.copy_from_slice(occ);
            target[j] += 1;
            let lower = basis
                .lower()
                .position(&target)
                .expect("adding a photon to an upper state lands in the lower sector");
            out.push(Channel { upper: u, lower, mode: j, factor: f64::from(occ[j] + 1).sqrt() });
        }
    }
    out
}

/// Diagonal blocks `U`, `L` and the dense coupling block `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockHamiltonian {
    pub spec: SubspaceSpec,
    pub params: ModelParams,
    pub frame: Frame,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub coupling: DMatrix<f64>,
}

pub fn assemble_blocks(
    basis: &SubspaceBasis,
    params: &ModelParams,
    frame: Frame,
) -> Result<BlockHamiltonian> {
    if params.modes() != basis.modes() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} modes, basis has {}",
            params.modes(),
            basis.modes()
        )));
    }
    let detunings = params.detunings();
    let energy = |occ: &[u32]| -> f64 {
        -occ.iter().zip(&detunings).map(|(n, d)| f64::from(*n) * d).sum::<f64>()
    };
    let shift = match frame {
        Frame::Rotating => 0.0,
        Frame::Lab => params.omega0 * (f64::from(basis.excitations()) - 0.5),
    };
    let upper = basis.upper().iter().map(|o| energy(o) + shift).collect();
    let lower = basis.lower().iter().map(|o| energy(o) + shift).collect();

    let mut coupling = DMatrix::zeros(basis.upper_len(), basis.lower_len());
    for ch in channels(basis) {
        coupling[(ch.upper, ch.lower)] = params.couplings[ch.mode] * ch.factor;
    }
    Ok(BlockHamiltonian { spec: basis.spec(), params: params.clone(), frame, upper, lower, coupling })
}

impl BlockHamiltonian {
    pub fn upper_len(&self) -> usize {
        self.upper.len()
    }

    pub fn lower_len(&self) -> usize {
        self.lower.len()
    }

    pub fn dimension(&self) -> usize {
        self.upper.len() + self.lower.len()
    }

    /// `[[U, C], [C^T, L]]`; symmetric by construction.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let (nu, nl) = (self.upper_len(), self.lower_len());
        let mut h = DMatrix::zeros(nu + nl, nu + nl);
        for (i, e) in self.upper.iter().enumerate() {
            h[(i, i)] = *e;
        }
        for (i, e) in self.lower.iter().enumerate() {
            h[(nu + i, nu + i)] = *e;
        }
        for u in 0..nu {
            for l in 0..nl {
                let c = self.coupling[(u, l)];
                h[(u, nu + l)] = c;
                h[(nu + l, u)] = c;
            }
        }
        h
    }

    /// The interaction part `[[0, C], [C^T, 0]]`.
    pub fn interaction(&self) -> DMatrix<f64> {
        let mut h = self.full_matrix();
        for i in 0..h.nrows() {
            h[(i, i)] = 0.0;
        }
        h
    }
}

/// Interaction matrix for the given couplings, i.e. the full matrix with all
/// detunings set to zero.
pub fn interaction_matrix(basis: &SubspaceBasis, couplings: &[f64]) -> Result<DMatrix<f64>> {
    let params = ModelParams::new(0.0, vec![0.0; couplings.len()], couplings.to_vec())?;
    Ok(assemble_blocks(basis, &params, Frame::Rotating)?.full_matrix())
}

pub fn full_matrix(bh: &BlockHamiltonian) -> DMatrix<f64> {
    bh.full_matrix()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemplateViolation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub reason: String,
}

/// Outcome of [`verify_block_template`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemplateReport {
    /// Block-bidiagonal row-echelon shape with scalar `M` blocks.
    pub echelon: bool,
    /// Every row has exactly `N` nonzero entries.
    pub row_sparsity: bool,
    /// Left `N_u x N_u` part upper triangular with nonzero diagonal.
    pub pivot_triangle: bool,
    /// `(upper block size, lower block size)` per block row `s2' = 0..n-1`.
    pub block_sizes: Vec<(usize, usize)>,
    pub violations: Vec<TemplateViolation>,
}

impl TemplateReport {
    pub fn passed(&self) -> bool {
        self.echelon && self.row_sparsity && self.pivot_triangle
    }
}

/// Check `C` against its block template: block row `s2'` holds
/// `M = g_1 sqrt(n - s2') * 1` (size `C(N + s2' - 2, N - 2)`) on the block
/// diagonal, `M~` immediately to its right, and zeros elsewhere.
pub fn verify_block_template(bh: &BlockHamiltonian) -> Result<TemplateReport> {
    if let Some(mode) = bh.params.zero_coupling() {
        return Err(Error::ZeroCoupling { mode });
    }
    let basis = SubspaceBasis::new(bh.spec)?;
    let n = bh.spec.excitations;
    let modes = bh.spec.modes;
    let g1 = bh.params.couplings[0];
    let c = &bh.coupling;
    let tol = 1e-12 * bh.params.couplings.iter().fold(0.0f64, |m, g| m.max(g.abs()));

    // block label of each state: photons outside mode 1
    let upper_block: Vec<u32> = basis.upper().iter().map(|o| (n - 1) - o[0]).collect();
    let lower_block: Vec<u32> = basis.lower().iter().map(|o| n - o[0]).collect();
    let start = |blocks: &[u32], b: u32| blocks.iter().position(|x| *x == b).unwrap_or(blocks.len());

    let mut violations = Vec::new();
    let mut block_sizes = Vec::new();
    let mut echelon = true;
    for b in 0..n {
        let nu = upper_block.iter().filter(|x| **x == b).count();
        let nl = lower_block.iter().filter(|x| **x == b).count();
        if modes >= 2 {
            let expected = binomial(modes as u64 + b as u64 - 2, modes as u64 - 2)? as usize;
            if nu != expected || nl != expected {
                echelon = false;
                violations.push(TemplateViolation {
                    row: start(&upper_block, b),
                    col: start(&lower_block, b),
                    value: nu as f64,
                    reason: format!("block {b} has size {nu}x{nl}, expected {expected}x{expected}"),
                });
            }
        }
        block_sizes.push((nu, nl));
    }

    for u in 0..c.nrows() {
        let bu = upper_block[u];
        let su = start(&upper_block, bu);
        let m_value = g1 * f64::from(n - bu).sqrt();
        for l in 0..c.ncols() {
            let v = c[(u, l)];
            let bl = lower_block[l];
            if bl == bu {
                let on_diag = l - start(&lower_block, bl) == u - su;
                let expected = if on_diag { m_value } else { 0.0 };
                if (v - expected).abs() > tol {
                    echelon = false;
                    violations.push(TemplateViolation {
                        row: u,
                        col: l,
                        value: v,
                        reason: format!("M block entry should be {expected}"),
                    });
                }
            } else if bl != bu + 1 && v != 0.0 {
                echelon = false;
                violations.push(TemplateViolation {
                    row: u,
                    col: l,
                    value: v,
                    reason: "nonzero outside the M / M~ blocks".into(),
                });
            }
        }
    }

    let mut row_sparsity = true;
    for u in 0..c.nrows() {
        let nnz = c.row(u).iter().filter(|v| **v != 0.0).count();
        if nnz != modes {
            row_sparsity = false;
            violations.push(TemplateViolation {
                row: u,
                col: 0,
                value: nnz as f64,
                reason: format!("row has {nnz} nonzeros, expected {modes}"),
            });
        }
    }

    let mut pivot_triangle = true;
    for u in 0..c.nrows() {
        if c[(u, u)] == 0.0 {
            pivot_triangle = false;
            violations.push(TemplateViolation { row: u, col: u, value: 0.0, reason: "zero pivot".into() });
        }
        for l in 0..u {
            if c[(u, l)] != 0.0 {
                pivot_triangle = false;
                violations.push(TemplateViolation {
                    row: u,
                    col: l,
                    value: c[(u, l)],
                    reason: "entry below the pivot diagonal".into(),
                });
            }
        }
    }

    Ok(TemplateReport { echelon, row_sparsity, pivot_triangle, block_sizes, violations })
}
