//! Forward-mode second-order automatic differentiation.
//!
//! A [`HyperDual`] carries a value and three infinitesimal components
//! `e1`, `e2`, `e12` with `e1^2 = e2^2 = 0`. Seeding `e1` on coordinate
//! `i` and `e2` on coordinate `j` makes one evaluation of a scalar
//! function produce `f`, `df/dx_i`, `df/dx_j` and `d2f/dx_i dx_j`
//! exactly (no truncation error). Sweeping the pairs `i <= j` fills a
//! full [`Jet2`]; the Hessian is symmetric by construction because each
//! mixed entry is computed once and mirrored.

use nalgebra::{DMatrix, DVector};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order dual number: `re + e1·ε1 + e2·ε2 + e12·ε1ε2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub fn constant(re: f64) -> HyperDual {
        HyperDual {
            re,
            e1: 0.0,
            e2: 0.0,
            e12: 0.0,
        }
    }

    /// Lifts a univariate function through the chain rule given its first
    /// and second derivative at `self.re`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> HyperDual {
        HyperDual {
            re: f,
            e1: df * self.e1,
            e2: df * self.e2,
            e12: df * self.e12 + d2f * self.e1 * self.e2,
        }
    }

    pub fn recip(self) -> HyperDual {
        let a = self.re;
        self.chain(1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a))
    }

    pub fn sin(self) -> HyperDual {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> HyperDual {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> HyperDual {
        let v = self.re.exp();
        self.chain(v, v, v)
    }

    /// Natural logarithm; caller must ensure `re > 0`.
    pub fn ln(self) -> HyperDual {
        let a = self.re;
        self.chain(a.ln(), 1.0 / a, -1.0 / (a * a))
    }

    /// Square root; caller must ensure `re > 0` (the jet is singular at 0).
    pub fn sqrt(self) -> HyperDual {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.re))
    }

    /// Integer power by repeated multiplication, exact for polynomials.
    /// Negative exponents go through `recip`; caller checks `re != 0`.
    pub fn powi(self, exp: i64) -> HyperDual {
        if exp < 0 {
            return self.powi(-exp).recip();
        }
        let mut acc = HyperDual::constant(1.0);
        let mut base = self;
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Add for HyperDual {
    type Output = HyperDual;
    fn add(self, o: HyperDual) -> HyperDual {
        HyperDual {
            re: self.re + o.re,
            e1: self.e1 + o.e1,
            e2: self.e2 + o.e2,
            e12: self.e12 + o.e12,
        }
    }
}

impl Sub for HyperDual {
    type Output = HyperDual;
    fn sub(self, o: HyperDual) -> HyperDual {
        HyperDual {
            re: self.re - o.re,
            e1: self.e1 - o.e1,
            e2: self.e2 - o.e2,
            e12: self.e12 - o.e12,
        }
    }
}

impl Mul for HyperDual {
    type Output = HyperDual;
    fn mul(self, o: HyperDual) -> HyperDual {
        HyperDual {
            re: self.re * o.re,
            e1: self.re * o.e1 + self.e1 * o.re,
            e2: self.re * o.e2 + self.e2 * o.re,
            e12: self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        }
    }
}

impl Div for HyperDual {
    type Output = HyperDual;
    #[allow(clippy::suspicious_arithmetic_impl)] // division as product with the reciprocal jet
    fn div(self, o: HyperDual) -> HyperDual {
        self * o.recip()
    }
}

impl Neg for HyperDual {
    type Output = HyperDual;
    fn neg(self) -> HyperDual {
        HyperDual {
            re: -self.re,
            e1: -self.e1,
            e2: -self.e2,
            e12: -self.e12,
        }
    }
}

impl Mul<HyperDual> for f64 {
    type Output = HyperDual;
    fn mul(self, o: HyperDual) -> HyperDual {
        HyperDual::constant(self) * o
    }
}

/// Value, gradient and symmetric Hessian of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Jet2 {
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }
}

/// Evaluates `f` through seeded hyper-dual sweeps to produce a full 2-jet.
///
/// `f` is called once per index pair `i <= j`. The upper Hessian triangle
/// is mirrored, so the result is symmetric bit-for-bit.
pub fn evaluate_jet<E>(
    x: &[f64],
    mut f: impl FnMut(&[HyperDual]) -> Result<HyperDual, E>,
) -> Result<Jet2, E> {
    let d = x.len();
    let mut buf: Vec<HyperDual> = x.iter().map(|&v| HyperDual::constant(v)).collect();
    let mut value = 0.0;
    let mut gradient = DVector::zeros(d);
    let mut hessian = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            buf[i].e1 = 1.0;
            buf[j].e2 = 1.0;
            let out = f(&buf);
            buf[i].e1 = 0.0;
            buf[j].e2 = 0.0;
            let out = out?;
            if i == 0 && j == 0 {
                value = out.re;
            }
            if i == j {
                gradient[i] = out.e1;
            }
            hessian[(i, j)] = out.e12;
            hessian[(j, i)] = out.e12;
        }
    }
    Ok(Jet2 {
        value,
        gradient,
        hessian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn product_rule() {
        // f(x, y) = x^2 y at (2, 3).
        let jet: Jet2 = evaluate_jet(&[2.0, 3.0], |v| Ok::<_, ()>(v[0] * v[0] * v[1])).unwrap();
        assert_eq!(jet.value, 12.0);
        assert_eq!(jet.gradient[0], 12.0);
        assert_eq!(jet.gradient[1], 4.0);
        assert_eq!(jet.hessian[(0, 1)], 4.0);
        assert_eq!(jet.hessian[(0, 0)], 6.0);
        assert_eq!(jet.hessian[(1, 1)], 0.0);
    }

    #[test]
    fn hessian_is_bitwise_symmetric() {
        let jet: Jet2 = evaluate_jet(&[0.3, -1.2, 0.7], |v| {
            Ok::<_, ()>(v[0].sin() * v[1].exp() + v[2] * v[0])
        })
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(jet.hessian[(i, j)].to_bits() == jet.hessian[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn transcendental_jets() {
        let x = 0.8;
        let jet: Jet2 = evaluate_jet(&[x], |v| Ok::<_, ()>(v[0].ln())).unwrap();
        assert_relative_eq!(jet.value, x.ln(), max_relative = 1e-15);
        assert_relative_eq!(jet.gradient[0], 1.0 / x, max_relative = 1e-15);
        assert_relative_eq!(jet.hessian[(0, 0)], -1.0 / (x * x), max_relative = 1e-15);

        let jet: Jet2 = evaluate_jet(&[x], |v| Ok::<_, ()>(v[0].sqrt())).unwrap();
        assert_relative_eq!(jet.gradient[0], 0.5 / x.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(
            jet.hessian[(0, 0)],
            -0.25 / (x * x.sqrt()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn integer_powers_including_negative() {
        let jet: Jet2 = evaluate_jet(&[2.0], |v| Ok::<_, ()>(v[0].powi(5))).unwrap();
        assert_eq!(jet.value, 32.0);
        assert_eq!(jet.gradient[0], 80.0);
        assert_eq!(jet.hessian[(0, 0)], 160.0);

        let jet: Jet2 = evaluate_jet(&[2.0], |v| Ok::<_, ()>(v[0].powi(-2))).unwrap();
        assert_relative_eq!(jet.value, 0.25, max_relative = 1e-15);
        assert_relative_eq!(jet.gradient[0], -0.25, max_relative = 1e-15);
        assert_relative_eq!(jet.hessian[(0, 0)], 0.375, max_relative = 1e-15);
    }

    #[test]
    fn division_matches_reciprocal_product() {
        let jet: Jet2 = evaluate_jet(&[3.0, 2.0], |v| Ok::<_, ()>(v[0] / v[1])).unwrap();
        assert_relative_eq!(jet.value, 1.5, max_relative = 1e-15);
        assert_relative_eq!(jet.gradient[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(jet.gradient[1], -0.75, max_relative = 1e-15);
        assert_relative_eq!(jet.hessian[(0, 1)], -0.25, max_relative = 1e-15);
        assert_relative_eq!(jet.hessian[(1, 1)], 0.75, max_relative = 1e-15);
    }
}
