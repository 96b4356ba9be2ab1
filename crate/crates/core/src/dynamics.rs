//! Kähler 2-form assembly and the semispray dynamics it generates.
//!
//! For a structure `J` and a Lagrangian with Hessian `H` and gradient `g`
//! at a point, the closed 2-form has coordinate matrix
//!
//! ```text
//! W = J^T H - H J
//! ```
//!
//! and the energy differential (velocity components held fixed) is
//! `dE = H (J v) - g`. Substituting into `W^T v = dE` and using
//! `J^T = -J`, `J^2 = -I` collapses the dynamics to the linear system
//!
//! ```text
//! H v = J g
//! ```
//!
//! which is what [`solve_semispray`] solves. The block-wise Euler-Lagrange
//! systems are an equivalent reading of the same equation; both routes are
//! exposed so they can be cross-checked numerically.

use nalgebra::{DMatrix, DVector};

use crate::autodiff::Jet2;
use crate::dim::{DimError, Dimension, BLOCKS};
use crate::geometry::{make_structure, StructureLabel, StructureMatrix};
use crate::lagrangian::{LagrangianError, LagrangianField};

/// Hessians with a reciprocal condition estimate below this are treated
/// as singular (irregular Lagrangian).
pub const DEFAULT_RCOND_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(
        "singular Hessian: reciprocal condition estimate {rcond:.3e} is below {threshold:.3e}"
    )]
    SingularHessian { rcond: f64, threshold: f64 },
    #[error(transparent)]
    Dim(#[from] DimError),
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
}

/// The closed 2-form of a Lagrangian and structure at a point, as an
/// antisymmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerForm {
    dim: Dimension,
    structure_label: Option<StructureLabel>,
    matrix: DMatrix<f64>,
}

impl KahlerForm {
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Label of the generating structure, when it was a canonical one.
    pub fn structure_label(&self) -> Option<StructureLabel> {
        self.structure_label
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Assembles `J^T H - H J` directly from the signed-permutation data:
/// entry `(a, b)` is `sign[a] H[target[a], b] - sign[b] H[a, target[b]]`.
pub fn kahler_matrix_from_hessian(s: &StructureMatrix, h: &DMatrix<f64>) -> DMatrix<f64> {
    let d = s.dim().total();
    let mut omega = DMatrix::zeros(d, d);
    for a in 0..d {
        let (ta, sa) = (s.target(a), f64::from(s.sign(a)));
        for b in 0..d {
            let (tb, sb) = (s.target(b), f64::from(s.sign(b)));
            omega[(a, b)] = sa * h[(ta, b)] - sb * h[(a, tb)];
        }
    }
    omega
}

/// The Kähler 2-form of `l` under `s` at `x`.
pub fn kahler_form(
    s: &StructureMatrix,
    l: &LagrangianField,
    x: &DVector<f64>,
) -> Result<KahlerForm, DynamicsError> {
    check_dims(s, l)?;
    let jet = l.eval_jet(x)?;
    Ok(KahlerForm {
        dim: s.dim(),
        structure_label: s.label(),
        matrix: kahler_matrix_from_hessian(s, &jet.hessian),
    })
}

/// Wedge-coefficient table of the first structure's 2-form expansion:
/// one row `(source block, form block, derivative block, sign)` per term
/// `sign * d2L/dx_{src}dx_{deriv} dx_{src} ^ dx_{form}`. Kept as a literal
/// 64-entry listing so it stays independent of the closed-form assembly
/// it is checked against.
const J1_WEDGE_TERMS: [(usize, usize, usize, i8); 64] = [
    (0, 0, 1, -1),
    (0, 1, 0, 1),
    (0, 2, 4, -1),
    (0, 3, 5, -1),
    (0, 4, 2, 1),
    (0, 5, 3, 1),
    (0, 6, 7, -1),
    (0, 7, 6, 1),
    (1, 0, 1, -1),
    (1, 1, 0, 1),
    (1, 2, 4, -1),
    (1, 3, 5, -1),
    (1, 4, 2, 1),
    (1, 5, 3, 1),
    (1, 6, 7, -1),
    (1, 7, 6, 1),
    (2, 0, 1, -1),
    (2, 1, 0, 1),
    (2, 2, 4, -1),
    (2, 3, 5, -1),
    (2, 4, 2, 1),
    (2, 5, 3, 1),
    (2, 6, 7, -1),
    (2, 7, 6, 1),
    (3, 0, 1, -1),
    (3, 1, 0, 1),
    (3, 2, 4, -1),
    (3, 3, 5, -1),
    (3, 4, 2, 1),
    (3, 5, 3, 1),
    (3, 6, 7, -1),
    (3, 7, 6, 1),
    (4, 0, 1, -1),
    (4, 1, 0, 1),
    (4, 2, 4, -1),
    (4, 3, 5, -1),
    (4, 4, 2, 1),
    (4, 5, 3, 1),
    (4, 6, 7, -1),
    (4, 7, 6, 1),
    (5, 0, 1, -1),
    (5, 1, 0, 1),
    (5, 2, 4, -1),
    (5, 3, 5, -1),
    (5, 4, 2, 1),
    (5, 5, 3, 1),
    (5, 6, 7, -1),
    (5, 7, 6, 1),
    (6, 0, 1, -1),
    (6, 1, 0, 1),
    (6, 2, 4, -1),
    (6, 3, 5, -1),
    (6, 4, 2, 1),
    (6, 5, 3, 1),
    (6, 6, 7, -1),
    (6, 7, 6, 1),
    (7, 0, 1, -1),
    (7, 1, 0, 1),
    (7, 2, 4, -1),
    (7, 3, 5, -1),
    (7, 4, 2, 1),
    (7, 5, 3, 1),
    (7, 6, 7, -1),
    (7, 7, 6, 1),
];

/// Term-by-term reference evaluation of the 2-form for the first
/// structure, built from the wedge-coefficient table above. Exists to
/// cross-check [`kahler_form`]; the production path is the closed form.
pub fn kahler_oracle_j1(
    l: &LagrangianField,
    x: &DVector<f64>,
) -> Result<DMatrix<f64>, DynamicsError> {
    let jet = l.eval_jet(x)?;
    Ok(kahler_oracle_j1_from_hessian(l.dim(), &jet.hessian))
}

/// The oracle on a precomputed Hessian.
pub fn kahler_oracle_j1_from_hessian(dim: Dimension, h: &DMatrix<f64>) -> DMatrix<f64> {
    let d = dim.total();
    let n = dim.n();
    // Accumulate raw wedge coefficients, then antisymmetrize: a term
    // `c dx_e ^ dx_a` contributes c to (e, a) and -c to (a, e).
    let mut coeff: DMatrix<f64> = DMatrix::zeros(d, d);
    for &(src, form, deriv, sign) in &J1_WEDGE_TERMS {
        for j in 0..n {
            for i in 0..n {
                let e = src * n + j;
                let a = form * n + i;
                coeff[(e, a)] += f64::from(sign) * h[(e, deriv * n + i)];
            }
        }
    }
    let mut omega = DMatrix::zeros(d, d);
    for u in 0..d {
        for v in 0..d {
            omega[(u, v)] = coeff[(u, v)] - coeff[(v, u)];
        }
    }
    omega
}

/// The differential of the energy `E = (J v) . grad L - L` with the
/// velocity components held constant: `H (S v) - grad L`.
pub fn energy_differential(
    s: &StructureMatrix,
    l: &LagrangianField,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    check_dims(s, l)?;
    let jet = l.eval_jet(x)?;
    energy_differential_from_jet(s, &jet, v)
}

/// [`energy_differential`] on a precomputed jet.
pub fn energy_differential_from_jet(
    s: &StructureMatrix,
    jet: &Jet2,
    v: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    s.dim().check_len(v.len())?;
    let sv = s.apply(v)?;
    Ok(&jet.hessian * sv - &jet.gradient)
}

/// 1-norm reciprocal condition estimate of a Hessian; 0 when the matrix
/// is exactly singular or zero.
pub fn hessian_rcond(h: &DMatrix<f64>) -> f64 {
    let norm = one_norm(h);
    if norm == 0.0 {
        return 0.0;
    }
    match h.clone().lu().try_inverse() {
        Some(inv) => 1.0 / (norm * one_norm(&inv)),
        None => 0.0,
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves the dynamics equation for the semispray velocity at `x`,
/// reducing it to `H v = S grad L`. Fails with
/// [`DynamicsError::SingularHessian`] for irregular Lagrangians.
pub fn solve_semispray(
    s: &StructureMatrix,
    l: &LagrangianField,
    x: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    solve_semispray_with(s, l, x, DEFAULT_RCOND_THRESHOLD)
}

/// [`solve_semispray`] with an explicit regularity threshold.
pub fn solve_semispray_with(
    s: &StructureMatrix,
    l: &LagrangianField,
    x: &DVector<f64>,
    rcond_threshold: f64,
) -> Result<DVector<f64>, DynamicsError> {
    check_dims(s, l)?;
    let jet = l.eval_jet(x)?;
    solve_semispray_from_jet(s, &jet, rcond_threshold)
}

/// [`solve_semispray`] on a precomputed jet.
pub fn solve_semispray_from_jet(
    s: &StructureMatrix,
    jet: &Jet2,
    rcond_threshold: f64,
) -> Result<DVector<f64>, DynamicsError> {
    let norm = one_norm(&jet.hessian);
    let lu = jet.hessian.clone().lu();
    let rcond = if norm == 0.0 {
        0.0
    } else {
        lu.try_inverse()
            .map_or(0.0, |inv| 1.0 / (norm * one_norm(&inv)))
    };
    if rcond < rcond_threshold {
        return Err(DynamicsError::SingularHessian {
            rcond,
            threshold: rcond_threshold,
        });
    }
    let rhs = s.apply(&jet.gradient)?;
    lu.solve(&rhs).ok_or(DynamicsError::SingularHessian {
        rcond,
        threshold: rcond_threshold,
    })
}

/// One block equation `d/dt(dL/dx_{block}) + sign * dL/dx_{partner} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingRow {
    pub block: usize,
    pub partner: usize,
    pub sign: i8,
}

/// The eight block equations of a structure's Euler-Lagrange system:
/// partner and sign per source block. `partner` is an involution and
/// paired signs are opposite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ELPairingTable {
    pub label: StructureLabel,
    pub rows: [PairingRow; BLOCKS],
}

impl ELPairingTable {
    /// Reads the `(partner, sign)` pattern off a structure matrix.
    pub fn from_structure(label: StructureLabel, s: &StructureMatrix) -> ELPairingTable {
        let rows = std::array::from_fn(|block| PairingRow {
            block,
            partner: s.block_target(block),
            sign: s.block_sign(block),
        });
        ELPairingTable { label, rows }
    }
}

/// Derives the Euler-Lagrange pairing table of a canonical structure.
pub fn pairing_table(label: StructureLabel) -> ELPairingTable {
    let dim = Dimension::new(1).expect("n = 1 is valid");
    ELPairingTable::from_structure(label, &make_structure(label, dim))
}

/// Residuals of the block Euler-Lagrange equations along a curve through
/// `x` with velocity `v`: component `a` is
/// `(H v)_a + sign(block a) * (grad L)_{partner(block a), offset(a)}`,
/// the total time derivative of `dL/dx_a` plus the paired gradient term.
pub fn el_residual(
    s: &StructureMatrix,
    l: &LagrangianField,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    check_dims(s, l)?;
    let jet = l.eval_jet(x)?;
    el_residual_from_jet(s, &jet, v)
}

/// [`el_residual`] on a precomputed jet.
pub fn el_residual_from_jet(
    s: &StructureMatrix,
    jet: &Jet2,
    v: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    let dim = s.dim();
    dim.check_len(v.len())?;
    dim.check_len(jet.gradient.len())?;
    let n = dim.n();
    let hv = &jet.hessian * v;
    let mut res = DVector::zeros(dim.total());
    for block in 0..BLOCKS {
        let partner = s.block_target(block);
        let sign = f64::from(s.block_sign(block));
        for offset in 0..n {
            let a = dim.flat(block, offset);
            res[a] = hv[a] + sign * jet.gradient[dim.flat(partner, offset)];
        }
    }
    Ok(res)
}

fn check_dims(s: &StructureMatrix, l: &LagrangianField) -> Result<(), DimError> {
    if s.dim() != l.dim() {
        return Err(DimError::OperandMismatch {
            left: s.dim().total(),
            right: l.dim().total(),
        });
    }
    Ok(())
}
