//! Runtime invariant suite: the property checks behind the `check`
//! command, with an optional injected fault as a negative control.
//!
//! Every check is deterministic given the seed and reports a pass/fail
//! outcome with a measured detail. Corrupted structures must never panic
//! the suite; they have to surface as named failures.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::HyperDual;
use crate::dim::{Dimension, BLOCKS};
use crate::dynamics::{
    el_residual_from_jet, energy_differential_from_jet, kahler_matrix_from_hessian,
    kahler_oracle_j1_from_hessian, solve_semispray_from_jet, ELPairingTable,
    DEFAULT_RCOND_THRESHOLD,
};
use crate::geometry::{
    fundamental_form, make_structure, metric_compatibility, verify_structures, StructureLabel,
    StructureMatrix,
};
use crate::lagrangian::{FieldError, LagrangianField, ScalarField};

/// Reference Euler-Lagrange pairing tables for the three canonical
/// structures: `(partner block, sign)` per source block. Checked verbatim
/// against the tables derived from the structure matrices.
pub const REFERENCE_PAIRING_TABLES: [(StructureLabel, [(usize, i8); BLOCKS]); 3] = [
    (
        StructureLabel::J1,
        [
            (1, 1),
            (0, -1),
            (4, 1),
            (5, 1),
            (2, -1),
            (3, -1),
            (7, 1),
            (6, -1),
        ],
    ),
    (
        StructureLabel::J2,
        [
            (2, 1),
            (4, -1),
            (0, -1),
            (6, 1),
            (1, 1),
            (7, -1),
            (3, -1),
            (5, 1),
        ],
    ),
    (
        StructureLabel::J3,
        [
            (3, 1),
            (5, -1),
            (6, -1),
            (0, -1),
            (7, 1),
            (1, 1),
            (2, 1),
            (4, -1),
        ],
    ),
];

/// A deliberately injected corruption: flips the sign of one block of one
/// canonical structure before the checks run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub label: StructureLabel,
    pub block: usize,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (label, block) = s
            .split_once(':')
            .ok_or_else(|| format!("fault spec `{s}` must look like J2:3 (structure:block)"))?;
        let label: StructureLabel = label.parse()?;
        let block: usize = block
            .parse()
            .map_err(|_| format!("fault block `{block}` is not an integer"))?;
        if block >= BLOCKS {
            return Err(format!("fault block {block} out of range (0..8)"));
        }
        Ok(Fault { label, block })
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Returns true when every outcome passed.
pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

/// Configuration of the invariant suite.
#[derive(Debug, Clone)]
pub struct CheckSuite {
    pub dims: Vec<usize>,
    pub seed: u64,
    pub fault: Option<Fault>,
    pub metric_trials: usize,
    pub consistency_points: usize,
}

impl CheckSuite {
    pub fn new(dims: Vec<usize>, seed: u64) -> CheckSuite {
        CheckSuite {
            dims,
            seed,
            fault: None,
            metric_trials: 1000,
            consistency_points: 100,
        }
    }

    pub fn with_fault(mut self, fault: Option<Fault>) -> CheckSuite {
        self.fault = fault;
        self
    }

    fn structures(&self, dim: Dimension) -> [StructureMatrix; 3] {
        StructureLabel::ALL.map(|label| {
            let s = make_structure(label, dim);
            match self.fault {
                Some(f) if f.label == label => s.with_block_sign_flipped(f.block),
                _ => s,
            }
        })
    }

    /// Runs every check, in a fixed order.
    pub fn run(&self) -> Vec<CheckOutcome> {
        vec![
            self.check_structure_algebra(),
            self.check_metric_compatibility(),
            self.check_fundamental_forms(),
            self.check_kahler_oracle(),
            self.check_pairing_tables(),
            self.check_formulation_consistency(),
        ]
    }

    fn check_structure_algebra(&self) -> CheckOutcome {
        for &n in &self.dims {
            let dim = match Dimension::new(n) {
                Ok(d) => d,
                Err(e) => return fail("structure-algebra", e.to_string()),
            };
            let report = verify_structures(dim, &self.structures(dim), &["J1", "J2", "J3"]);
            if !report.all_hold() {
                return fail(
                    "structure-algebra",
                    format!("n = {n}: {}", report.failures().join("; ")),
                );
            }
        }
        pass(
            "structure-algebra",
            format!("squares and anticommutators exact for n in {:?}", self.dims),
        )
    }

    fn check_metric_compatibility(&self) -> CheckOutcome {
        let mut worst = 0.0f64;
        for &n in &self.dims {
            let dim = Dimension::new(n).expect("validated by structure-algebra");
            for (k, s) in self.structures(dim).iter().enumerate() {
                let dev = metric_compatibility(s, self.metric_trials, self.seed + k as u64);
                worst = worst.max(dev);
            }
        }
        let detail = format!(
            "max |g(JX,JY) - g(X,Y)| = {worst:.3e} over {} pairs per structure",
            self.metric_trials
        );
        if worst <= 1e-12 {
            pass("metric-compatibility", detail)
        } else {
            fail("metric-compatibility", detail)
        }
    }

    fn check_fundamental_forms(&self) -> CheckOutcome {
        for &n in &self.dims {
            let dim = Dimension::new(n).expect("validated");
            for (s, label) in self.structures(dim).iter().zip(StructureLabel::ALL) {
                let phi = fundamental_form(s);
                let antisym = (phi.matrix() + phi.matrix().transpose()).abs().max();
                if antisym != 0.0 {
                    return fail(
                        "fundamental-forms",
                        format!("{label} (n = {n}): antisymmetry violated by {antisym:.3e}"),
                    );
                }
                if phi.matrix() != &(-s.to_dense()) {
                    return fail(
                        "fundamental-forms",
                        format!("{label} (n = {n}): matrix differs from the negated structure"),
                    );
                }
            }
        }
        pass(
            "fundamental-forms",
            "antisymmetric and equal to the negated structure matrix".to_string(),
        )
    }

    fn check_kahler_oracle(&self) -> CheckOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6b61686c);
        let mut worst = 0.0f64;
        let mut hessians = 0usize;
        for &n in &self.dims {
            let dim = Dimension::new(n).expect("validated");
            let j1 = &self.structures(dim)[0];
            for _ in 0..20 {
                let h = random_symmetric(dim.total(), &mut rng);
                let closed = kahler_matrix_from_hessian(j1, &h);
                let oracle = kahler_oracle_j1_from_hessian(dim, &h);
                worst = worst.max((closed - oracle).abs().max());
                hessians += 1;
            }
        }
        let detail = format!(
            "closed form vs term-by-term expansion: max diff {worst:.3e} over {hessians} Hessians"
        );
        if worst <= 1e-12 {
            pass("kahler-oracle-equivalence", detail)
        } else {
            fail("kahler-oracle-equivalence", detail)
        }
    }

    fn check_pairing_tables(&self) -> CheckOutcome {
        let dim = Dimension::new(1).expect("n = 1");
        let structures = self.structures(dim);
        for ((label, expected), s) in REFERENCE_PAIRING_TABLES.iter().zip(&structures) {
            let derived = ELPairingTable::from_structure(*label, s);
            for (b, &(partner, sign)) in expected.iter().enumerate() {
                let row = derived.rows[b];
                if row.partner != partner || row.sign != sign {
                    return fail(
                        "pairing-tables",
                        format!(
                            "{label} block {b}: derived (partner {}, sign {}), reference (partner {partner}, sign {sign})",
                            row.partner, row.sign
                        ),
                    );
                }
            }
        }
        pass(
            "pairing-tables",
            "all 24 block entries match the reference tables".to_string(),
        )
    }

    fn check_formulation_consistency(&self) -> CheckOutcome {
        let mut worst_eq = 0.0f64;
        let mut worst_res = 0.0f64;
        for &n in &self.dims {
            let dim = Dimension::new(n).expect("validated");
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0xf0f0 ^ n as u64);
            let field = QuadTrigField::random(dim, &mut rng);
            let l = LagrangianField::from_field(Box::new(field));
            for s in &self.structures(dim) {
                for _ in 0..self.consistency_points {
                    let x = DVector::from_fn(dim.total(), |_, _| rng.random_range(-2.0..2.0));
                    let jet = match l.eval_jet(&x) {
                        Ok(j) => j,
                        Err(e) => return fail("formulation-consistency", e.to_string()),
                    };
                    let v = match solve_semispray_from_jet(s, &jet, DEFAULT_RCOND_THRESHOLD) {
                        Ok(v) => v,
                        Err(e) => return fail("formulation-consistency", e.to_string()),
                    };
                    // Direct dynamics equation: W^T v = dE.
                    let omega = kahler_matrix_from_hessian(s, &jet.hessian);
                    let de = energy_differential_from_jet(s, &jet, &v).expect("dims agree");
                    worst_eq = worst_eq.max((omega.transpose() * &v - de).amax());
                    // Block Euler-Lagrange residuals.
                    let res = el_residual_from_jet(s, &jet, &v).expect("dims agree");
                    worst_res = worst_res.max(res.amax());
                }
            }
        }
        let detail = format!(
            "max |W^T v - dE| = {worst_eq:.3e}, max EL residual = {worst_res:.3e} over {} points per structure",
            self.consistency_points
        );
        if worst_eq <= 1e-9 && worst_res <= 1e-9 {
            pass("formulation-consistency", detail)
        } else {
            fail("formulation-consistency", detail)
        }
    }
}

fn pass(name: &'static str, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: true,
        detail,
    }
}

fn fail(name: &'static str, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        detail,
    }
}

fn random_symmetric(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let t = raw.transpose();
    0.5 * (raw + t)
}

/// A regular random Lagrangian `1/2 x^T A x + b.x + sum_a c_a cos(x_a)`
/// with `A` positive definite (at least the identity) and `|c_a| <= 0.3`,
/// so the Hessian stays invertible everywhere.
pub struct QuadTrigField {
    dim: Dimension,
    a: DMatrix<f64>,
    b: DVector<f64>,
    trig: DVector<f64>,
}

impl QuadTrigField {
    pub fn random(dim: Dimension, rng: &mut ChaCha8Rng) -> QuadTrigField {
        let d = dim.total();
        let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        let a = m.transpose() * &m + DMatrix::identity(d, d);
        let b = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let trig = DVector::from_fn(d, |_, _| rng.random_range(-0.3..0.3));
        QuadTrigField { dim, a, b, trig }
    }
}

impl ScalarField for QuadTrigField {
    fn dim(&self) -> Dimension {
        self.dim
    }

    fn eval(&self, x: &[HyperDual]) -> Result<HyperDual, FieldError> {
        let d = self.dim.total();
        let mut acc = HyperDual::constant(0.0);
        for i in 0..d {
            for j in 0..d {
                acc = acc + (0.5 * self.a[(i, j)]) * (x[i] * x[j]);
            }
            acc = acc + self.b[i] * x[i] + self.trig[i] * x[i].cos();
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let outcomes = CheckSuite::new(vec![1, 2], 42).run();
        assert_eq!(outcomes.len(), 6);
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    #[test]
    fn injected_fault_is_named() {
        let fault: Fault = "J2:3".parse().unwrap();
        assert_eq!(fault.label, StructureLabel::J2);
        assert_eq!(fault.block, 3);
        let outcomes = CheckSuite::new(vec![1], 42).with_fault(Some(fault)).run();
        assert!(!all_passed(&outcomes));
        let algebra = outcomes
            .iter()
            .find(|o| o.name == "structure-algebra")
            .unwrap();
        assert!(!algebra.passed);
        assert!(algebra.detail.contains("J2"), "detail: {}", algebra.detail);
    }

    #[test]
    fn fault_in_j1_breaks_oracle_equivalence() {
        let outcomes = CheckSuite::new(vec![1], 42)
            .with_fault(Some(Fault {
                label: StructureLabel::J1,
                block: 0,
            }))
            .run();
        let oracle = outcomes
            .iter()
            .find(|o| o.name == "kahler-oracle-equivalence")
            .unwrap();
        assert!(!oracle.passed);
    }

    #[test]
    fn fault_spec_parse_errors() {
        assert!("J2".parse::<Fault>().is_err());
        assert!("J9:0".parse::<Fault>().is_err());
        assert!("J2:8".parse::<Fault>().is_err());
        assert!("J2:x".parse::<Fault>().is_err());
    }

    #[test]
    fn reference_tables_are_antisymmetric_pairings() {
        for (_, rows) in REFERENCE_PAIRING_TABLES {
            for (b, &(partner, sign)) in rows.iter().enumerate() {
                let (back, back_sign) = rows[partner];
                assert_eq!(back, b);
                assert_eq!(sign * back_sign, -1);
            }
        }
    }
}
