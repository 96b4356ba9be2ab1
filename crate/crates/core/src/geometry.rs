//! Canonical structures `J1`, `J2`, `J3` on `R^{8n}` and their algebra.
//!
//! Each structure is an orthogonal map with `J^2 = -I` that permutes the
//! eight coordinate blocks with signs, so it is stored as a signed
//! permutation (one target index and one sign per column). Squares,
//! anticommutators and transposes are then exact integer computations;
//! dense matrices exist only for interop with the dynamics layer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

use crate::dim::{DimError, Dimension, BLOCKS};

/// Block action of `J1`: `(target block, sign)` per source block.
const J1_BLOCK_ACTION: [(usize, i8); BLOCKS] = [
    (1, 1),
    (0, -1),
    (4, 1),
    (5, 1),
    (2, -1),
    (3, -1),
    (7, 1),
    (6, -1),
];

/// Block action of `J2`.
const J2_BLOCK_ACTION: [(usize, i8); BLOCKS] = [
    (2, 1),
    (4, -1),
    (0, -1),
    (6, 1),
    (1, 1),
    (7, -1),
    (3, -1),
    (5, 1),
];

/// Block action of `J3`.
const J3_BLOCK_ACTION: [(usize, i8); BLOCKS] = [
    (3, 1),
    (5, -1),
    (6, -1),
    (0, -1),
    (7, 1),
    (1, 1),
    (2, 1),
    (4, -1),
];

/// Names of the three canonical structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureLabel {
    J1,
    J2,
    J3,
}

impl StructureLabel {
    pub const ALL: [StructureLabel; 3] =
        [StructureLabel::J1, StructureLabel::J2, StructureLabel::J3];

    pub fn block_action(self) -> &'static [(usize, i8); BLOCKS] {
        match self {
            StructureLabel::J1 => &J1_BLOCK_ACTION,
            StructureLabel::J2 => &J2_BLOCK_ACTION,
            StructureLabel::J3 => &J3_BLOCK_ACTION,
        }
    }
}

impl fmt::Display for StructureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureLabel::J1 => write!(f, "J1"),
            StructureLabel::J2 => write!(f, "J2"),
            StructureLabel::J3 => write!(f, "J3"),
        }
    }
}

impl std::str::FromStr for StructureLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "J1" | "j1" => Ok(StructureLabel::J1),
            "J2" | "j2" => Ok(StructureLabel::J2),
            "J3" | "j3" => Ok(StructureLabel::J3),
            other => Err(format!(
                "unknown structure label `{other}` (expected J1, J2 or J3)"
            )),
        }
    }
}

/// A signed permutation on `R^{8n}`: column `a` maps to row `target[a]`
/// with entry `sign[a]`.
///
/// Invariants maintained by every constructor:
/// - `target` is a permutation of `0..8n`;
/// - `target` and `sign` are constant on offsets within a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMatrix {
    dim: Dimension,
    label: Option<StructureLabel>,
    target: Vec<usize>,
    sign: Vec<i8>,
}

/// Builds the canonical structure named by `label` on `R^{8n}`.
pub fn make_structure(label: StructureLabel, dim: Dimension) -> StructureMatrix {
    let mut m = StructureMatrix::from_block_action(dim, label.block_action());
    m.label = Some(label);
    m
}

impl StructureMatrix {
    /// Builds a signed permutation from a per-block `(target block, sign)` table.
    pub fn from_block_action(dim: Dimension, action: &[(usize, i8); BLOCKS]) -> StructureMatrix {
        let n = dim.n();
        let mut target = vec![0usize; dim.total()];
        let mut sign = vec![0i8; dim.total()];
        for (block, &(tblock, s)) in action.iter().enumerate() {
            assert!(tblock < BLOCKS, "target block out of range");
            assert!(s == 1 || s == -1, "sign must be +1 or -1");
            for offset in 0..n {
                target[dim.flat(block, offset)] = dim.flat(tblock, offset);
                sign[dim.flat(block, offset)] = s;
            }
        }
        let m = StructureMatrix {
            dim,
            label: None,
            target,
            sign,
        };
        debug_assert!(m.is_permutation());
        m
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// The canonical name of this structure, if it was built from one.
    /// Derived matrices (compositions, transposes, corrupted copies) have none.
    pub fn label(&self) -> Option<StructureLabel> {
        self.label
    }

    /// Row index of the nonzero entry in column `a`.
    pub fn target(&self, a: usize) -> usize {
        self.target[a]
    }

    /// Sign of the nonzero entry in column `a`.
    pub fn sign(&self, a: usize) -> i8 {
        self.sign[a]
    }

    /// Target block of a source block (the action is constant on offsets).
    pub fn block_target(&self, block: usize) -> usize {
        self.target[self.dim.flat(block, 0)] / self.dim.n()
    }

    /// Sign attached to a source block.
    pub fn block_sign(&self, block: usize) -> i8 {
        self.sign[self.dim.flat(block, 0)]
    }

    fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.dim.total()];
        for &t in &self.target {
            if t >= seen.len() || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        true
    }

    /// Returns a copy with the sign of one block flipped.
    ///
    /// Breaks `J^2 = -I`; used as a negative control for the checkers.
    pub fn with_block_sign_flipped(&self, block: usize) -> StructureMatrix {
        assert!(block < BLOCKS, "block out of range");
        let mut out = self.clone();
        out.label = None;
        for offset in 0..self.dim.n() {
            let a = self.dim.flat(block, offset);
            out.sign[a] = -out.sign[a];
        }
        out
    }

    /// Applies the map to a vector.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>, DimError> {
        self.dim.check_len(v.len())?;
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for a in 0..v.len() {
            out[self.target[a]] += f64::from(self.sign[a]) * v[a];
        }
        out
    }

    /// Applies the transpose to a vector: `(S^T w)_a = sign[a] * w[target[a]]`.
    pub fn apply_transpose(&self, w: &DVector<f64>) -> Result<DVector<f64>, DimError> {
        self.dim.check_len(w.len())?;
        let mut out = DVector::zeros(w.len());
        for a in 0..w.len() {
            out[a] = f64::from(self.sign[a]) * w[self.target[a]];
        }
        Ok(out)
    }

    /// The composition `self ∘ other` (apply `other` first), itself a
    /// signed permutation.
    pub fn compose(&self, other: &StructureMatrix) -> Result<StructureMatrix, DimError> {
        if self.dim != other.dim {
            return Err(DimError::OperandMismatch {
                left: self.dim.total(),
                right: other.dim.total(),
            });
        }
        let mut target = vec![0usize; self.dim.total()];
        let mut sign = vec![0i8; self.dim.total()];
        for a in 0..self.dim.total() {
            let mid = other.target[a];
            target[a] = self.target[mid];
            sign[a] = other.sign[a] * self.sign[mid];
        }
        Ok(StructureMatrix {
            dim: self.dim,
            label: None,
            target,
            sign,
        })
    }

    /// Entrywise negation.
    pub fn negated(&self) -> StructureMatrix {
        StructureMatrix {
            dim: self.dim,
            label: None,
            target: self.target.clone(),
            sign: self.sign.iter().map(|s| -s).collect(),
        }
    }

    /// The transpose, again a signed permutation.
    pub fn transposed(&self) -> StructureMatrix {
        let mut target = vec![0usize; self.dim.total()];
        let mut sign = vec![0i8; self.dim.total()];
        for a in 0..self.dim.total() {
            target[self.target[a]] = a;
            sign[self.target[a]] = self.sign[a];
        }
        StructureMatrix {
            dim: self.dim,
            label: None,
            target,
            sign,
        }
    }

    /// Exact check of `self^2 = -I` on the signed-permutation data.
    /// Returns the first failing basis index, if any.
    pub fn square_is_minus_identity(&self) -> Option<usize> {
        (0..self.dim.total()).find(|&a| {
            self.target[self.target[a]] != a || self.sign[a] * self.sign[self.target[a]] != -1
        })
    }

    /// Dense representation, for interop with the dynamics layer.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim.total();
        let mut m = DMatrix::zeros(d, d);
        for a in 0..d {
            m[(self.target[a], a)] = f64::from(self.sign[a]);
        }
        m
    }
}

/// The Euclidean inner product on `R^{8n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metric {
    dim: Dimension,
}

impl Metric {
    pub fn new(dim: Dimension) -> Metric {
        Metric { dim }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, DimError> {
        self.dim.check_len(x.len())?;
        self.dim.check_len(y.len())?;
        Ok(x.dot(y))
    }
}

/// The 2-form `Phi(X, Y) = g(S X, Y)` of a structure, as a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalForm {
    dim: Dimension,
    matrix: DMatrix<f64>,
}

impl FundamentalForm {
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Evaluates the form on a pair of vectors.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, DimError> {
        self.dim.check_len(x.len())?;
        self.dim.check_len(y.len())?;
        Ok((x.transpose() * &self.matrix * y)[(0, 0)])
    }
}

/// Builds the fundamental 2-form of `S` with the Euclidean metric:
/// entry `(a, b)` is `g(S e_a, e_b)`, which equals `S^T` as a matrix.
pub fn fundamental_form(s: &StructureMatrix) -> FundamentalForm {
    let d = s.dim().total();
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        // g(S e_a, e_b) is nonzero only at b = target[a].
        m[(a, s.target(a))] = f64::from(s.sign(a));
    }
    FundamentalForm {
        dim: s.dim(),
        matrix: m,
    }
}

/// Result of one exact identity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    /// Human-readable name of the identity, e.g. `J2^2 = -I`.
    pub identity: String,
    pub holds: bool,
    /// First basis index where the identity fails.
    pub counterexample: Option<usize>,
}

/// Exact verification of the defining relations of the structure algebra:
/// `J_k^2 = -I` for each structure and `J_a J_b = -J_b J_a` for each pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraReport {
    pub dim: Dimension,
    /// `J_k^2 = -I` for k = 1, 2, 3.
    pub squares: Vec<IdentityCheck>,
    /// Anticommutators for the pairs (J1,J2), (J1,J3), (J2,J3).
    pub anticommutators: Vec<IdentityCheck>,
}

impl AlgebraReport {
    pub fn all_hold(&self) -> bool {
        self.squares
            .iter()
            .chain(&self.anticommutators)
            .all(|c| c.holds)
    }

    /// Descriptions of every failing identity, with its basis index.
    pub fn failures(&self) -> Vec<String> {
        self.squares
            .iter()
            .chain(&self.anticommutators)
            .filter(|c| !c.holds)
            .map(|c| match c.counterexample {
                Some(a) => format!("{} fails at basis index {a}", c.identity),
                None => format!("{} fails", c.identity),
            })
            .collect()
    }
}

/// Verifies the structure algebra for the canonical `J1`, `J2`, `J3`.
pub fn verify_algebra(dim: Dimension) -> AlgebraReport {
    let js = StructureLabel::ALL.map(|l| make_structure(l, dim));
    verify_structures(dim, &js, &["J1", "J2", "J3"])
}

/// Verifies the same identities for an arbitrary triple of structures
/// (used with deliberately corrupted inputs as a negative control).
pub fn verify_structures(
    dim: Dimension,
    js: &[StructureMatrix; 3],
    names: &[&str; 3],
) -> AlgebraReport {
    let squares = js
        .iter()
        .zip(names)
        .map(|(j, name)| {
            let counterexample = j.square_is_minus_identity();
            IdentityCheck {
                identity: format!("{name}^2 = -I"),
                holds: counterexample.is_none(),
                counterexample,
            }
        })
        .collect();

    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let anticommutators = pairs
        .iter()
        .map(|&(a, b)| {
            let ab = js[a].compose(&js[b]).expect("same dimension");
            let ba = js[b].compose(&js[a]).expect("same dimension");
            let counterexample = (0..dim.total())
                .find(|&i| ab.target(i) != ba.target(i) || ab.sign(i) != -ba.sign(i));
            IdentityCheck {
                identity: format!("{}{} = -{}{}", names[a], names[b], names[b], names[a]),
                holds: counterexample.is_none(),
                counterexample,
            }
        })
        .collect();

    AlgebraReport {
        dim,
        squares,
        anticommutators,
    }
}

/// Measures `max |g(SX, SY) - g(X, Y)|` over `trials` pseudo-random
/// pairs drawn deterministically from `rng_seed`.
pub fn metric_compatibility(s: &StructureMatrix, trials: usize, rng_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let d = s.dim().total();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let sx = s.apply_unchecked(&x);
        let sy = s.apply_unchecked(&y);
        let dev = (sx.dot(&sy) - x.dot(&y)).abs();
        worst = worst.max(dev);
    }
    worst
}
