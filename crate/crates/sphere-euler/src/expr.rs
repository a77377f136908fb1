//! Small serializable expression algebra used to describe the arbitrary
//! functions that parametrize solution families.
//!
//! Variables are positional. Derivatives are exact (forward mode).

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    Pow(Box<Expr>, f64),
}

/// Value and first derivative along one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual(f64, f64);

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }
    pub fn c(v: f64) -> Self {
        Expr::Const(v)
    }
    pub fn sin(self) -> Self {
        Expr::Sin(Box::new(self))
    }
    pub fn cos(self) -> Self {
        Expr::Cos(Box::new(self))
    }
    pub fn exp(self) -> Self {
        Expr::Exp(Box::new(self))
    }
    pub fn ln(self) -> Self {
        Expr::Log(Box::new(self))
    }
    pub fn sqrt(self) -> Self {
        Expr::Sqrt(Box::new(self))
    }
    pub fn powf(self, p: f64) -> Self {
        Expr::Pow(Box::new(self), p)
    }
    pub fn div(self, rhs: Expr) -> Self {
        Expr::Div(Box::new(self), Box::new(rhs))
    }

    /// Largest variable index referenced plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(v) | Expr::Mul(v) => v.iter().map(Expr::arity).max().unwrap_or(0),
            Expr::Div(a, b) => a.arity().max(b.arity()),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Log(a) | Expr::Sqrt(a) => {
                a.arity()
            }
            Expr::Pow(a, _) => a.arity(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.dual(x, usize::MAX).0
    }

    /// Partial derivative with respect to variable `i`.
    pub fn deriv(&self, x: &[f64], i: usize) -> f64 {
        self.dual(x, i).1
    }

    pub fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let v = self.eval(x);
        let g = (0..x.len()).map(|i| self.deriv(x, i)).collect();
        (v, g)
    }

    fn dual(&self, x: &[f64], dir: usize) -> Dual {
        match self {
            Expr::Const(c) => Dual(*c, 0.0),
            Expr::Var(i) => Dual(x.get(*i).copied().unwrap_or(f64::NAN), if *i == dir { 1.0 } else { 0.0 }),
            Expr::Add(v) => v.iter().fold(Dual(0.0, 0.0), |acc, e| {
                let d = e.dual(x, dir);
                Dual(acc.0 + d.0, acc.1 + d.1)
            }),
            Expr::Mul(v) => v.iter().fold(Dual(1.0, 0.0), |acc, e| {
                let d = e.dual(x, dir);
                Dual(acc.0 * d.0, acc.1 * d.0 + acc.0 * d.1)
            }),
            Expr::Div(a, b) => {
                let (a, b) = (a.dual(x, dir), b.dual(x, dir));
                Dual(a.0 / b.0, (a.1 * b.0 - a.0 * b.1) / (b.0 * b.0))
            }
            Expr::Neg(a) => {
                let a = a.dual(x, dir);
                Dual(-a.0, -a.1)
            }
            Expr::Sin(a) => {
                let a = a.dual(x, dir);
                Dual(a.0.sin(), a.0.cos() * a.1)
            }
            Expr::Cos(a) => {
                let a = a.dual(x, dir);
                Dual(a.0.cos(), -a.0.sin() * a.1)
            }
            Expr::Exp(a) => {
                let a = a.dual(x, dir);
                let e = a.0.exp();
                Dual(e, e * a.1)
            }
            Expr::Log(a) => {
                let a = a.dual(x, dir);
                Dual(a.0.ln(), a.1 / a.0)
            }
            Expr::Sqrt(a) => {
                let a = a.dual(x, dir);
                let s = a.0.sqrt();
                Dual(s, if a.1 == 0.0 { 0.0 } else { 0.5 * a.1 / s })
            }
            Expr::Pow(a, p) => {
                let a = a.dual(x, dir);
                let d = if a.1 == 0.0 { 0.0 } else { p * a.0.powf(p - 1.0) * a.1 };
                Dual(a.0.powf(*p), d)
            }
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, Expr::Neg(Box::new(rhs))])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_and_differentiates() {
        // f(x, y) = x² sin y + exp(x)/y
        let f = Expr::var(0).powf(2.0) * Expr::var(1).sin() + Expr::var(0).exp().div(Expr::var(1));
        let (x, y) = (0.7, 1.3);
        let v = f.eval(&[x, y]);
        assert!((v - (x * x * y.sin() + x.exp() / y)).abs() < 1e-15);
        let fx = 2.0 * x * y.sin() + x.exp() / y;
        let fy = x * x * y.cos() - x.exp() / (y * y);
        assert!((f.deriv(&[x, y], 0) - fx).abs() < 1e-14);
        assert!((f.deriv(&[x, y], 1) - fy).abs() < 1e-14);
        assert_eq!(f.arity(), 2);
    }

    #[test]
    fn gaussian_inverse_profile() {
        // √(−log ξ)
        let f = (-Expr::var(0).ln()).sqrt();
        let xi: f64 = 0.3;
        assert!((f.eval(&[xi]) - (-xi.ln()).sqrt()).abs() < 1e-15);
        let d = -0.5 / (xi * (-xi.ln()).sqrt());
        assert!((f.deriv(&[xi], 0) - d).abs() < 1e-14);
    }

    #[test]
    fn serde_round_trip() {
        let f = Expr::c(1.0) + Expr::var(0).cos() * Expr::c(2.0);
        let s = serde_json::to_string(&f).unwrap();
        let g: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }
}
