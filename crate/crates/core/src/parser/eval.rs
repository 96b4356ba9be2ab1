//! Jet evaluation of parsed expressions.

use super::{Expr, ExprKind, Function, SourceSpan};
use crate::autodiff::{evaluate_jet, HyperDual, Jet2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalErrorKind {
    DivisionByZero,
    /// `sqrt` needs a strictly positive argument: the jet is singular at 0.
    SqrtOfNonPositive(f64),
    LnOfNonPositive(f64),
    /// General (non-integer) exponent with a non-positive base.
    PowOfNonPositiveBase(f64),
    /// `0^k` with negative integer `k`.
    ZeroToNegativePower,
}

/// Domain error raised while evaluating an expression, pointing at the
/// offending node.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("{}", self.describe())]
pub struct EvalError {
    pub span: SourceSpan,
    pub kind: EvalErrorKind,
}

impl EvalError {
    fn describe(&self) -> String {
        match self.kind {
            EvalErrorKind::DivisionByZero => "division by zero".to_string(),
            EvalErrorKind::SqrtOfNonPositive(v) => {
                format!("sqrt of non-positive value {v}")
            }
            EvalErrorKind::LnOfNonPositive(v) => format!("ln of non-positive value {v}"),
            EvalErrorKind::PowOfNonPositiveBase(v) => {
                format!("non-integer power of non-positive base {v}")
            }
            EvalErrorKind::ZeroToNegativePower => "zero raised to a negative power".to_string(),
        }
    }
}

/// Evaluates an expression over hyper-dual inputs.
///
/// `vars` must cover every coordinate bound at parse time.
pub fn eval_dual(expr: &Expr, vars: &[HyperDual]) -> Result<HyperDual, EvalError> {
    let fail = |kind| EvalError {
        span: expr.span,
        kind,
    };
    match &expr.kind {
        ExprKind::Constant(c) => Ok(HyperDual::constant(*c)),
        ExprKind::Coord(i) => Ok(vars[*i]),
        ExprKind::Add(l, r) => Ok(eval_dual(l, vars)? + eval_dual(r, vars)?),
        ExprKind::Sub(l, r) => Ok(eval_dual(l, vars)? - eval_dual(r, vars)?),
        ExprKind::Mul(l, r) => Ok(eval_dual(l, vars)? * eval_dual(r, vars)?),
        ExprKind::Div(l, r) => {
            let num = eval_dual(l, vars)?;
            let den = eval_dual(r, vars)?;
            if den.re == 0.0 {
                return Err(fail(EvalErrorKind::DivisionByZero));
            }
            Ok(num / den)
        }
        ExprKind::Neg(e) => Ok(-eval_dual(e, vars)?),
        ExprKind::PowInt(base, exp) => {
            let b = eval_dual(base, vars)?;
            if *exp < 0 && b.re == 0.0 {
                return Err(fail(EvalErrorKind::ZeroToNegativePower));
            }
            Ok(b.powi(*exp))
        }
        ExprKind::Pow(base, exp) => {
            let b = eval_dual(base, vars)?;
            let e = eval_dual(exp, vars)?;
            if b.re <= 0.0 {
                return Err(fail(EvalErrorKind::PowOfNonPositiveBase(b.re)));
            }
            Ok((e * b.ln()).exp())
        }
        ExprKind::Call(func, arg) => {
            let a = eval_dual(arg, vars)?;
            match func {
                Function::Sin => Ok(a.sin()),
                Function::Cos => Ok(a.cos()),
                Function::Exp => Ok(a.exp()),
                Function::Sqrt => {
                    if a.re <= 0.0 {
                        return Err(fail(EvalErrorKind::SqrtOfNonPositive(a.re)));
                    }
                    Ok(a.sqrt())
                }
                Function::Ln => {
                    if a.re <= 0.0 {
                        return Err(fail(EvalErrorKind::LnOfNonPositive(a.re)));
                    }
                    Ok(a.ln())
                }
            }
        }
    }
}

/// Value, gradient and Hessian of an expression at `x` via hyper-dual
/// propagation. The Hessian is symmetric by construction.
pub fn eval_expr_jet(expr: &Expr, x: &[f64]) -> Result<Jet2, EvalError> {
    evaluate_jet(x, |vars| eval_dual(expr, vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::Dimension;
    use crate::parser::parse;
    use approx::assert_relative_eq;

    fn jet(src: &str, x: &[f64]) -> Result<Jet2, EvalError> {
        let e = parse(src, Dimension::new(1).unwrap()).unwrap();
        eval_expr_jet(&e, x)
    }

    #[test]
    fn sine_jet_at_zero() {
        let j = jet("sin(x1)", &[0.0; 8]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.gradient[1], 1.0);
        assert_eq!(j.hessian[(1, 1)], 0.0);
    }

    #[test]
    fn bilinear_jet() {
        let j = jet("x0*x1", &[2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 6.0);
        assert_eq!(j.gradient[0], 3.0);
        assert_eq!(j.gradient[1], 2.0);
        assert_eq!(j.hessian[(0, 1)], 1.0);
    }

    #[test]
    fn division_by_zero_points_at_the_division() {
        let src = "2 + 1/x0";
        let e = parse(src, Dimension::new(1).unwrap()).unwrap();
        let err = eval_expr_jet(&e, &[0.0; 8]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.span.snippet(src), "1/x0");
    }

    #[test]
    fn domain_errors_for_functions() {
        assert!(matches!(
            jet("sqrt(x0)", &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
                .unwrap_err()
                .kind,
            EvalErrorKind::SqrtOfNonPositive(_)
        ));
        assert!(matches!(
            jet("ln(x0)", &[0.0; 8]).unwrap_err().kind,
            EvalErrorKind::LnOfNonPositive(_)
        ));
        assert!(matches!(
            jet("x0^0.5", &[-2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
                .unwrap_err()
                .kind,
            EvalErrorKind::PowOfNonPositiveBase(_)
        ));
        assert!(matches!(
            jet("x0^-1", &[0.0; 8]).unwrap_err().kind,
            EvalErrorKind::ZeroToNegativePower
        ));
    }

    #[test]
    fn general_power_matches_integer_power_on_positive_base() {
        // `x0^(x1 + 3)` takes the exp/ln route; at x1 = 0 it must agree
        // with the repeated-multiplication route of `x0^3`.
        let x = [1.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let a = jet("x0^3", &x).unwrap();
        let b = jet("x0^(x1 + 3)", &x).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-12);
        assert_relative_eq!(a.gradient[0], b.gradient[0], max_relative = 1e-12);
        assert_relative_eq!(a.hessian[(0, 0)], b.hessian[(0, 0)], max_relative = 1e-12);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        // Central differences as an independent oracle.
        let src = "sin(x0)*cos(x1) + exp(0.3*x2) + x3^3*x4 + sqrt(x5 + 2) + ln(x6 + 3) + x7^2";
        let e = parse(src, Dimension::new(1).unwrap()).unwrap();
        let x: Vec<f64> = vec![0.3, -0.7, 0.9, 0.4, -0.2, 0.1, 0.5, -0.8];
        let j = eval_expr_jet(&e, &x).unwrap();

        let h = 1e-5;
        let value_at = |pt: &[f64]| eval_expr_jet(&e, pt).unwrap().value;
        for i in 0..8 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (value_at(&xp) - value_at(&xm)) / (2.0 * h);
            assert_relative_eq!(j.gradient[i], fd, max_relative = 1e-6, epsilon = 1e-9);
        }
        let grad_at = |pt: &[f64]| eval_expr_jet(&e, pt).unwrap().gradient;
        for i in 0..8 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (grad_at(&xp) - grad_at(&xm)) / (2.0 * h);
            for k in 0..8 {
                assert_relative_eq!(
                    j.hessian[(k, i)],
                    fd[k],
                    max_relative = 1e-5,
                    epsilon = 1e-8
                );
            }
        }
    }
}
