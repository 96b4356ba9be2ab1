//! Lagrangian scalar fields on `R^{8n}` and the operations that pair them
//! with a structure: Liouville fields, energies and vertical differentials.
//!
//! A [`LagrangianField`] wraps a [`ScalarField`] backend: the builtin
//! quadratic family `T - P`, parsed expressions, or anything implementing
//! the trait through [`LagrangianField::from_field`]. Derivatives always
//! come from forward hyper-dual evaluation, never finite differences, so
//! polynomial backends are exact to machine precision.

use nalgebra::{DMatrix, DVector};
use std::fmt;

use crate::autodiff::{evaluate_jet, HyperDual, Jet2};
use crate::dim::{DimError, Dimension};
use crate::geometry::StructureMatrix;
use crate::parser::{self, EvalError, Expr, ParseError, SourceSpan};

/// Domain failure while evaluating a scalar field, with the offending
/// subexpression when the backend knows it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct FieldError {
    pub detail: String,
    pub span: Option<SourceSpan>,
    pub snippet: Option<String>,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error: {}", self.detail)?;
        if let Some(snippet) = &self.snippet {
            write!(f, " in `{snippet}`")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LagrangianError {
    #[error(transparent)]
    Dim(#[from] DimError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("builtin family expects {expected} masses (one per block offset), got {actual}")]
    MassCount { expected: usize, actual: usize },
    #[error("height index {index} out of range: ambient dimension is {total}")]
    HeightIndex { index: usize, total: usize },
    #[error("builtin parameters must be finite")]
    NonFiniteParameter,
}

/// A scalar field evaluated over hyper-dual inputs. Implementations must be
/// pure; one hyper-dual sweep yields values, gradients and Hessians alike.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> Dimension;
    fn eval(&self, x: &[HyperDual]) -> Result<HyperDual, FieldError>;
}

/// The quadratic family `L = T - P` with kinetic term
/// `T = 1/2 * sum_i m_i * sum_b x_{b*n+i}^2` over the eight blocks and
/// potential `P = m * g * x_h` for a designated height coordinate `h`
/// (the mass is the one attached to `h`'s offset).
pub struct BuiltinQuadratic {
    dim: Dimension,
    masses: Vec<f64>,
    gravity: f64,
    height_index: usize,
}

impl BuiltinQuadratic {
    pub fn new(
        dim: Dimension,
        masses: Vec<f64>,
        gravity: f64,
        height_index: usize,
    ) -> Result<Self, LagrangianError> {
        if masses.len() != dim.n() {
            return Err(LagrangianError::MassCount {
                expected: dim.n(),
                actual: masses.len(),
            });
        }
        if height_index >= dim.total() {
            return Err(LagrangianError::HeightIndex {
                index: height_index,
                total: dim.total(),
            });
        }
        if !masses.iter().all(|m| m.is_finite()) || !gravity.is_finite() {
            return Err(LagrangianError::NonFiniteParameter);
        }
        Ok(BuiltinQuadratic {
            dim,
            masses,
            gravity,
            height_index,
        })
    }
}

impl ScalarField for BuiltinQuadratic {
    fn dim(&self) -> Dimension {
        self.dim
    }

    fn eval(&self, x: &[HyperDual]) -> Result<HyperDual, FieldError> {
        let n = self.dim.n();
        let mut kinetic = HyperDual::constant(0.0);
        for (i, &m) in self.masses.iter().enumerate() {
            let mut blocks = HyperDual::constant(0.0);
            for b in 0..crate::dim::BLOCKS {
                let xi = x[self.dim.flat(b, i)];
                blocks = blocks + xi * xi;
            }
            kinetic = kinetic + (0.5 * m) * blocks;
        }
        let m_h = self.masses[self.height_index % n];
        let potential = (m_h * self.gravity) * x[self.height_index];
        Ok(kinetic - potential)
    }
}

/// A dense quadratic field `L = 1/2 x^T A x + b . x` with symmetric `A`.
///
/// Useful for driving the dynamics with an arbitrary prescribed Hessian.
pub struct QuadraticForm {
    dim: Dimension,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl QuadraticForm {
    pub fn new(dim: Dimension, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, LagrangianError> {
        let d = dim.total();
        if a.nrows() != d || a.ncols() != d {
            return Err(DimError::LengthMismatch {
                expected: d,
                actual: a.nrows(),
            }
            .into());
        }
        dim.check_len(b.len())?;
        Ok(QuadraticForm { dim, a, b })
    }
}

impl ScalarField for QuadraticForm {
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
            acc = acc + self.b[i] * x[i];
        }
        Ok(acc)
    }
}

/// A Lagrangian given as a parsed expression over `x0 .. x{8n-1}`.
pub struct ParsedExpression {
    dim: Dimension,
    source: String,
    expr: Expr,
}

impl ParsedExpression {
    pub fn new(dim: Dimension, source: &str) -> Result<Self, ParseError> {
        let expr = parser::parse(source, dim)?;
        Ok(ParsedExpression {
            dim,
            source: source.to_string(),
            expr,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn field_error(&self, err: EvalError) -> FieldError {
        FieldError {
            detail: err.to_string(),
            span: Some(err.span),
            snippet: Some(err.span.snippet(&self.source).to_string()),
        }
    }
}

impl ScalarField for ParsedExpression {
    fn dim(&self) -> Dimension {
        self.dim
    }

    fn eval(&self, x: &[HyperDual]) -> Result<HyperDual, FieldError> {
        parser::eval_dual(&self.expr, x).map_err(|e| self.field_error(e))
    }
}

/// A Lagrangian scalar field with exact first and second derivatives.
pub struct LagrangianField {
    field: Box<dyn ScalarField>,
}

impl LagrangianField {
    /// Builtin quadratic family (see [`BuiltinQuadratic`]).
    pub fn builtin(
        dim: Dimension,
        masses: Vec<f64>,
        gravity: f64,
        height_index: usize,
    ) -> Result<Self, LagrangianError> {
        Ok(LagrangianField {
            field: Box::new(BuiltinQuadratic::new(dim, masses, gravity, height_index)?),
        })
    }

    /// Parses `source` into an expression-backed Lagrangian.
    pub fn from_expression(dim: Dimension, source: &str) -> Result<Self, ParseError> {
        Ok(LagrangianField {
            field: Box::new(ParsedExpression::new(dim, source)?),
        })
    }

    /// Wraps any field implementation.
    pub fn from_field(field: Box<dyn ScalarField>) -> Self {
        LagrangianField { field }
    }

    pub fn dim(&self) -> Dimension {
        self.field.dim()
    }

    /// Value, gradient and Hessian at `x`; the Hessian is exactly symmetric.
    pub fn eval_jet(&self, x: &DVector<f64>) -> Result<Jet2, LagrangianError> {
        self.dim().check_len(x.len())?;
        let jet = evaluate_jet(x.as_slice(), |vars| self.field.eval(vars))?;
        Ok(jet)
    }
}

/// Point and velocity of the semispray: components of the velocity are the
/// time derivatives of the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SemisprayState {
    dim: Dimension,
    x: DVector<f64>,
    v: DVector<f64>,
}

impl SemisprayState {
    pub fn new(dim: Dimension, x: DVector<f64>, v: DVector<f64>) -> Result<Self, DimError> {
        dim.check_len(x.len())?;
        dim.check_len(v.len())?;
        Ok(SemisprayState { dim, x, v })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }
}

fn check_same_dim(s: &StructureMatrix, dim: Dimension) -> Result<(), DimError> {
    if s.dim() != dim {
        return Err(DimError::OperandMismatch {
            left: s.dim().total(),
            right: dim.total(),
        });
    }
    Ok(())
}

/// The Liouville vector field `V = S(xi)`: the image of the semispray
/// velocity under the structure.
pub fn liouville(
    s: &StructureMatrix,
    st: &SemisprayState,
) -> Result<DVector<f64>, LagrangianError> {
    check_same_dim(s, st.dim())?;
    Ok(s.apply(st.v())?)
}

/// The energy `E = V(L) - L = (S v) . grad L(x) - L(x)`.
pub fn energy(
    s: &StructureMatrix,
    l: &LagrangianField,
    st: &SemisprayState,
) -> Result<f64, LagrangianError> {
    check_same_dim(s, l.dim())?;
    check_same_dim(s, st.dim())?;
    let jet = l.eval_jet(st.x())?;
    let v = s.apply(st.v())?;
    Ok(v.dot(&jet.gradient) - jet.value)
}

/// The vertical differential of `L`: the covector `S^T grad L`, whose
/// coefficient on `dx_a` is `sign[a] * dL/dx_{target[a]}`.
pub fn vertical_differential(
    s: &StructureMatrix,
    l: &LagrangianField,
    x: &DVector<f64>,
) -> Result<DVector<f64>, LagrangianError> {
    check_same_dim(s, l.dim())?;
    let jet = l.eval_jet(x)?;
    Ok(s.apply_transpose(&jet.gradient)?)
}

/// A 1-form (covector) or 2-form (antisymmetric matrix) on `R^{8n}`.
#[derive(Debug, Clone, PartialEq)]
pub enum DifferentialForm {
    One(DVector<f64>),
    Two(DMatrix<f64>),
}

/// The vertical derivation `i_S`, inserting `S` into each argument:
/// on 1-forms `(i_S w)(Y) = w(S Y)`, i.e. `S^T w`; on 2-forms
/// `(i_S W)(X, Y) = W(S X, Y) + W(X, S Y)`, i.e. `S^T W + W S`.
pub fn vertical_derivation_form(
    s: &StructureMatrix,
    form: &DifferentialForm,
) -> Result<DifferentialForm, LagrangianError> {
    match form {
        DifferentialForm::One(w) => {
            let out = s.apply_transpose(w)?;
            Ok(DifferentialForm::One(out))
        }
        DifferentialForm::Two(omega) => {
            let d = s.dim().total();
            if omega.nrows() != d || omega.ncols() != d {
                return Err(DimError::LengthMismatch {
                    expected: d,
                    actual: omega.nrows(),
                }
                .into());
            }
            let mut out = DMatrix::zeros(d, d);
            for a in 0..d {
                let (ta, sa) = (s.target(a), f64::from(s.sign(a)));
                for b in 0..d {
                    let (tb, sb) = (s.target(b), f64::from(s.sign(b)));
                    out[(a, b)] = sa * omega[(ta, b)] + sb * omega[(a, tb)];
                }
            }
            Ok(DifferentialForm::Two(out))
        }
    }
}
