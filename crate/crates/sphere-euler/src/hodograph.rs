//! Implicit (hodograph) relations among `(t, θ, φ, u, v)` and the
//! closed-form families that solve them.

use crate::expr::Expr;
use crate::invariants::{self, InvariantError};
use crate::euler::State;
use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodographError {
    #[error("Newton iteration did not converge (best residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },
    #[error("singular Jacobian at the root (det M = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("no real root: {0}")]
    NoRoot(String),
    #[error("negative discriminant {discriminant:e}")]
    ComplexRoot { discriminant: f64 },
    #[error("negative radicand {value:e}")]
    NegativeRadicand { value: f64 },
    #[error("outside the domain: {0}")]
    Domain(String),
}

impl From<InvariantError> for HodographError {
    fn from(e: InvariantError) -> Self {
        HodographError::Domain(e.to_string())
    }
}

fn domain(msg: impl Into<String>) -> HodographError {
    HodographError::Domain(msg.into())
}

/// A pair of implicit equations `E(u, v) = 0` at each `(t, θ, φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HodographProblem {
    /// `t + σQ/R = Φ₁(L₁, L₂)`, `(v+ω) sin²θ = Φ₂(L₁, L₂)`; the expressions
    /// take `L₁` as variable 0 and `L₂` as variable 1.
    TimeIntegral { phi1: Expr, phi2: Expr, omega: f64, sigma: f64 },
    /// Same second equation, first equation `𝒯(I₂) = Φ₁(L₁, L₂)` with
    /// `𝒯 = sin` when `periodic`, identity otherwise.
    AxialPhase { phi1: Expr, phi2: Expr, omega: f64, sigma: f64, periodic: bool },
    /// `L₁`- and `L₂`-type relations `… = F₁(ξ)`, `… = F₂(ξ)` with
    /// `ξ = (v+ω) sin²θ` as variable 0.
    AngularMomentum { f1: Expr, f2: Expr, omega: f64 },
}

impl HodographProblem {
    pub fn omega(&self) -> f64 {
        match self {
            HodographProblem::TimeIntegral { omega, .. }
            | HodographProblem::AxialPhase { omega, .. }
            | HodographProblem::AngularMomentum { omega, .. } => *omega,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HodographPoint {
    pub u: f64,
    pub v: f64,
    pub det_m: f64,
    pub residual: f64,
    /// `|det M|` small enough that the root is ill-conditioned.
    pub near_singular: bool,
}

const NEAR_SINGULAR: f64 = 1e-6;

struct Geometry {
    s: f64,
    c: f64,
    sp: f64,
    cp: f64,
}

fn geometry(t: f64, theta: f64, phi: f64, omega: f64) -> Result<Geometry, HodographError> {
    if !(theta > 0.0 && theta < PI) {
        return Err(domain(format!("colatitude {theta} outside (0, π)")));
    }
    let (s, c) = theta.sin_cos();
    let (sp, cp) = (phi + omega * t).sin_cos();
    Ok(Geometry { s, c, sp, cp })
}

fn momenta(g: &Geometry, u: f64, w: f64) -> [f64; 2] {
    [-g.s * g.c * g.cp * w - g.sp * u, -g.s * g.c * g.sp * w + g.cp * u]
}

/// `∂(L₁, L₂)/∂(u, v)` as rows.
fn momenta_jacobian(g: &Geometry) -> [[f64; 2]; 2] {
    [[-g.sp, -g.s * g.c * g.cp], [g.cp, -g.s * g.c * g.sp]]
}

/// `Q/R` and its `(u, v)` gradient, where `R² = 2H` and
/// `Q = arcsin(cos θ · R / √(u² + sin²θ cos²θ (v+ω)²))`.
fn time_phase(g: &Geometry, u: f64, w: f64) -> Result<(f64, f64, f64), HodographError> {
    let (s, c) = (g.s, g.c);
    let r2 = u * u + s * s * w * w;
    let d = u * u + s * s * c * c * w * w;
    if r2 == 0.0 || d == 0.0 {
        return Err(domain("zero speed"));
    }
    let r = r2.sqrt();
    let z = c * r / d.sqrt();
    if z.abs() > 1.0 + 1e-12 {
        return Err(domain("arcsin argument outside [-1, 1]"));
    }
    let q = z.clamp(-1.0, 1.0).asin();
    let sgn = if u >= 0.0 { 1.0 } else { -1.0 };
    let dq_du = -c * sgn * s.powi(3) * w * w / (r * d);
    let dq_dv = c * s.powi(3) * w * u.abs() / (r * d);
    let val = q / r;
    let du = dq_du / r - q * u / (r2 * r);
    let dv = dq_dv / r - q * s * s * w / (r2 * r);
    Ok((val, du, dv))
}

fn expr_grad2(e: &Expr, x: &[f64]) -> (f64, [f64; 2]) {
    let (v, g) = e.value_and_grad(x);
    (v, [g.first().copied().unwrap_or(0.0), g.get(1).copied().unwrap_or(0.0)])
}

/// Residual pair `E(u, v)`.
pub fn residual(p: &HodographProblem, t: f64, theta: f64, phi: f64, u: f64, v: f64) -> Result<[f64; 2], HodographError> {
    Ok(residual_and_jacobian(p, t, theta, phi, u, v)?.0)
}

/// Residual pair and `∂E/∂(u, v)`; `det M` is the determinant of the latter.
pub fn residual_and_jacobian(
    p: &HodographProblem,
    t: f64,
    theta: f64,
    phi: f64,
    u: f64,
    v: f64,
) -> Result<([f64; 2], [[f64; 2]; 2]), HodographError> {
    let omega = p.omega();
    let g = geometry(t, theta, phi, omega)?;
    let w = v + omega;
    let s2 = g.s * g.s;
    match p {
        HodographProblem::TimeIntegral { phi1, phi2, sigma, .. } => {
            let l = momenta(&g, u, w);
            let dl = momenta_jacobian(&g);
            let (p1, g1) = expr_grad2(phi1, &l);
            let (p2, g2) = expr_grad2(phi2, &l);
            let (qr, qr_u, qr_v) = time_phase(&g, u, w)?;
            let chain = |gr: [f64; 2], col: usize| gr[0] * dl[0][col] + gr[1] * dl[1][col];
            let e = [t + sigma * qr - p1, w * s2 - p2];
            let j = [
                [sigma * qr_u - chain(g1, 0), sigma * qr_v - chain(g1, 1)],
                [-chain(g2, 0), s2 - chain(g2, 1)],
            ];
            Ok((e, j))
        }
        HodographProblem::AxialPhase { .. } => {
            let e = axial_residual(p, t, theta, phi, u, v)?;
            let hu = 1e-6 * u.abs().max(1e-3);
            let hv = 1e-6 * v.abs().max(1e-3);
            let eu1 = axial_residual(p, t, theta, phi, u + hu, v)?;
            let eu0 = axial_residual(p, t, theta, phi, u - hu, v)?;
            let ev1 = axial_residual(p, t, theta, phi, u, v + hv)?;
            let ev0 = axial_residual(p, t, theta, phi, u, v - hv)?;
            let j = [
                [(eu1[0] - eu0[0]) / (2.0 * hu), (ev1[0] - ev0[0]) / (2.0 * hv)],
                [(eu1[1] - eu0[1]) / (2.0 * hu), (ev1[1] - ev0[1]) / (2.0 * hv)],
            ];
            Ok((e, j))
        }
        HodographProblem::AngularMomentum { f1, f2, .. } => {
            let xi = w * s2;
            let (a1, d1) = f1.value_and_grad(&[xi]);
            let (a2, d2) = f2.value_and_grad(&[xi]);
            let (d1, d2) = (d1.first().copied().unwrap_or(0.0), d2.first().copied().unwrap_or(0.0));
            let sc = g.s * g.c;
            let e = [w * sc * g.cp + u * g.sp - a1, w * sc * g.sp - u * g.cp - a2];
            let j = [[g.sp, sc * g.cp - d1 * s2], [-g.cp, sc * g.sp - d2 * s2]];
            Ok((e, j))
        }
    }
}

fn axial_residual(p: &HodographProblem, t: f64, theta: f64, phi: f64, u: f64, v: f64) -> Result<[f64; 2], HodographError> {
    let HodographProblem::AxialPhase { phi1, phi2, omega, sigma, periodic } = p else {
        unreachable!("axial residual on another problem kind");
    };
    let set = invariants::full_integrals(&State::new(t, theta, phi, u, v), *omega, *sigma, None)?;
    let l = [set.get("L1").unwrap(), set.get("L2").unwrap()];
    let i2 = set.get("I2").unwrap();
    let lhs = if *periodic { i2.sin() } else { i2 };
    Ok([lhs - phi1.eval(&l), set.get("L3").unwrap() - phi2.eval(&l)])
}

fn det2(j: &[[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

fn norm(e: &[f64; 2]) -> f64 {
    e[0].abs().max(e[1].abs())
}

/// `det M` at a given `(u, v)`.
pub fn det_m(p: &HodographProblem, t: f64, theta: f64, phi: f64, u: f64, v: f64) -> Result<f64, HodographError> {
    Ok(det2(&residual_and_jacobian(p, t, theta, phi, u, v)?.1))
}

/// Damped Newton iteration from `seed`.
pub fn solve_pointwise(
    p: &HodographProblem,
    t: f64,
    theta: f64,
    phi: f64,
    seed: (f64, f64),
) -> Result<HodographPoint, HodographError> {
    let (mut u, mut v) = seed;
    let (mut e, mut j) = residual_and_jacobian(p, t, theta, phi, u, v)?;
    let mut best = norm(&e);
    for _ in 0..100 {
        if best < 1e-13 {
            break;
        }
        let det = det2(&j);
        if det == 0.0 || !det.is_finite() {
            return Err(HodographError::NoConvergence { best_residual: best });
        }
        let du = -(j[1][1] * e[0] - j[0][1] * e[1]) / det;
        let dv = -(-j[1][0] * e[0] + j[0][0] * e[1]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (un, vn) = (u + lambda * du, v + lambda * dv);
            if let Ok((en, jn)) = residual_and_jacobian(p, t, theta, phi, un, vn) {
                let r = norm(&en);
                if r < best || (r <= best && lambda == 1.0) {
                    (u, v, e, j, best) = (un, vn, en, jn, r);
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if best >= 1e-10 {
        return Err(HodographError::NoConvergence { best_residual: best });
    }
    let det = det2(&j);
    if det.abs() < 1e-12 {
        return Err(HodographError::SingularJacobian { det });
    }
    Ok(HodographPoint { u, v, det_m: det, residual: best, near_singular: det.abs() < NEAR_SINGULAR })
}

/// Constant `Φ₁ = c1`, `Φ₂ = c2`: `φ`-independent solution.
///
/// `W = √(2H)` solves `(t − c1)W + σ arcsin(cos θ · W/√(W² − c2²)) = 0`;
/// the sign of `u` is taken equal to `σ`, the branch on which the time
/// integral is conserved.
pub fn family_const(c1: f64, c2: f64, sigma: f64, t: f64, theta: f64, omega: f64) -> Result<(f64, f64), HodographError> {
    if !(theta > 0.0 && theta < PI) {
        return Err(domain("velocity blows up at the poles"));
    }
    let (s, c) = theta.sin_cos();
    let v = c2 / (s * s) - omega;
    let tau = t - c1;
    let w = if c2 == 0.0 {
        // arcsin(cos θ · sgn W) is constant for W > 0.
        if c.abs() < 1e-15 {
            0.0
        } else if tau == 0.0 {
            return Err(HodographError::NoRoot("t = c1 away from the equator".into()));
        } else {
            let w = -sigma * c.asin() / tau;
            if w <= 0.0 {
                return Err(HodographError::NoRoot("W must be positive".into()));
            }
            w
        }
    } else {
        let w_min = c2.abs() / s;
        let g = |w: f64| {
            let arg = (c * w / (w * w - c2 * c2).sqrt()).clamp(-1.0, 1.0);
            tau * w + sigma * arg.asin()
        };
        let w_max = if tau == 0.0 { w_min * 1e6 } else { (w_min.max(PI / (2.0 * tau.abs())) * 1.01).max(w_min * 1.01) };
        smallest_root(g, w_min, w_max, 400)?
    };
    let radicand = w * w - c2 * c2 / (s * s);
    if radicand < -1e-14 * w * w {
        return Err(HodographError::NegativeRadicand { value: radicand });
    }
    Ok((sigma * radicand.max(0.0).sqrt(), v))
}

/// Smallest sign change of `g` on a uniform scan of `[a, b]`, refined by Brent.
pub(crate) fn smallest_root<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, n: usize) -> Result<f64, HodographError> {
    let ga = g(a);
    if ga == 0.0 {
        return Ok(a);
    }
    let mut x0 = a;
    let mut g0 = ga;
    for i in 1..=n {
        let x1 = a + (b - a) * i as f64 / n as f64;
        let g1 = g(x1);
        if g1 == 0.0 {
            return Ok(x1);
        }
        if g0.is_finite() && g1.is_finite() && g0.signum() != g1.signum() {
            return quad::brent(&g, x0, x1, 0.0).map_err(|e| HodographError::NoRoot(e.to_string()));
        }
        (x0, g0) = (x1, g1);
    }
    Err(HodographError::NoRoot(format!("no sign change on [{a}, {b}]")))
}

/// Coefficients of `Φᵢ = aᵢL₁ + bᵢL₂` or `Fᵢ = aᵢ + bᵢξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCoeffs {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl LinearCoeffs {
    /// `(Φ₁, Φ₂)` as expressions in `(L₁, L₂)`.
    pub fn momentum_exprs(&self) -> (Expr, Expr) {
        let lin = |a: f64, b: f64| Expr::c(a) * Expr::var(0) + Expr::c(b) * Expr::var(1);
        (lin(self.a1, self.b1), lin(self.a2, self.b2))
    }

    /// `(F₁, F₂)` as expressions in `ξ`.
    pub fn xi_exprs(&self) -> (Expr, Expr) {
        let lin = |a: f64, b: f64| Expr::c(a) + Expr::c(b) * Expr::var(0);
        (lin(self.a1, self.b1), lin(self.a2, self.b2))
    }
}

/// A root of the linear-`Φ` family together with the sign with which it
/// satisfies the time-integral equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearRoot {
    pub u: f64,
    pub v: f64,
    pub sigma: f64,
}

impl LinearRoot {
    /// Whether the time integral is conserved on this root, so that the
    /// field it belongs to solves the Euler system.
    pub fn is_flow(&self) -> bool {
        self.sigma * self.u > 0.0
    }
}

/// `Φᵢ = aᵢL₁ + bᵢL₂`: `A(v+ω) = Bu` and `αu² + tu + β = 0`.
///
/// `branch = +1` selects `(−t + √(t² − 4αβ))/(2α)`. The returned `sigma` is
/// `σ·sgn(A)·sgn(u)`, the sign for which the root satisfies the hodograph
/// relations.
pub fn family_linear(
    k: &LinearCoeffs,
    branch: f64,
    sigma: f64,
    t: f64,
    theta: f64,
    phi: f64,
    omega: f64,
) -> Result<LinearRoot, HodographError> {
    let g = geometry(t, theta, phi, omega)?;
    let (s, c) = (g.s, g.c);
    let a = s * s + k.a2 * s * c * g.cp + k.b2 * s * c * g.sp;
    let b = -k.a2 * g.sp + k.b2 * g.cp;
    if a == 0.0 {
        return Err(domain("A = 0"));
    }
    let alpha = k.a1 * g.sp - k.b1 * g.cp + b / a * s * c * (k.a1 * g.cp + k.b1 * g.sp);
    let n2 = a * a + b * b * s * s;
    let z = c * (n2 / (a * a + b * b * s * s * c * c)).sqrt();
    let beta = sigma * a * z.clamp(-1.0, 1.0).asin() / n2.sqrt();
    let u = if alpha.abs() < 1e-14 {
        if t == 0.0 {
            return Err(domain("degenerate quadratic at t = 0"));
        }
        -beta / t
    } else {
        let disc = t * t - 4.0 * alpha * beta;
        if disc < 0.0 {
            return Err(HodographError::ComplexRoot { discriminant: disc });
        }
        let sq = disc.sqrt();
        // Cancellation-free pair: q/α and β/q.
        let q = -0.5 * (t + if t >= 0.0 { sq } else { -sq });
        let (minus, plus) = if t >= 0.0 { (q / alpha, beta / q) } else { (beta / q, q / alpha) };
        if q == 0.0 {
            0.0
        } else if branch >= 0.0 {
            plus
        } else {
            minus
        }
    };
    let v = -omega + b / a * u;
    let su = if u >= 0.0 { 1.0 } else { -1.0 };
    Ok(LinearRoot { u, v, sigma: sigma * a.signum() * su })
}

/// Arbitrary `F₁, F₂` of `ξ`, evaluated through the reduction to one scalar equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngMomSpec {
    /// `Fᵢ = aᵢ + bᵢξ`.
    Linear { coeffs: LinearCoeffs },
    /// `F₁ = aξF(ξ)/(a²+b²)`, `F₂ = bξF(ξ)/(a²+b²)`, given `F⁻¹` as an
    /// expression in one variable and the interval on which it inverts `F`.
    /// `forward` (`F` itself) is only needed for residuals and `det M`.
    Inverse {
        a: f64,
        b: f64,
        inverse: Expr,
        #[serde(default)]
        forward: Option<Expr>,
        range: (f64, f64),
    },
}

impl AngMomSpec {
    /// The relations this family solves; `None` for an inverse family without `F`.
    pub fn problem(&self, omega: f64) -> Option<HodographProblem> {
        match self {
            AngMomSpec::Linear { coeffs } => {
                let (f1, f2) = coeffs.xi_exprs();
                Some(HodographProblem::AngularMomentum { f1, f2, omega })
            }
            AngMomSpec::Inverse { a, b, forward, .. } => {
                let f = forward.clone()?;
                let n2 = a * a + b * b;
                let xf = Expr::var(0) * f;
                Some(HodographProblem::AngularMomentum {
                    f1: Expr::c(a / n2) * xf.clone(),
                    f2: Expr::c(b / n2) * xf,
                    omega,
                })
            }
        }
    }
}

pub fn family_angmom(spec: &AngMomSpec, t: f64, theta: f64, phi: f64, omega: f64) -> Result<(f64, f64), HodographError> {
    let g = geometry(t, theta, phi, omega)?;
    let (s, c) = (g.s, g.c);
    match spec {
        AngMomSpec::Linear { coeffs: k } => {
            let along = k.a1 * g.cp + k.a2 * g.sp;
            let across = k.b1 * g.cp + k.b2 * g.sp;
            let den = c - across * s;
            if den.abs() < 1e-12 || c.abs() < 1e-12 {
                return Err(domain("singular locus of the linear family"));
            }
            let u = k.a1 * g.sp - k.a2 * g.cp + along * (k.b1 * g.sp - k.b2 * g.cp) * s / den;
            let v = -omega + along / (s * den);
            Ok((u, v))
        }
        AngMomSpec::Inverse { a, b, inverse, range, .. } => {
            let n = a.hypot(*b);
            if n == 0.0 {
                return Err(domain("a = b = 0"));
            }
            let alpha = a.atan2(*b);
            let phase = g.sp * alpha.cos() + g.cp * alpha.sin();
            let phase_cos = g.cp * alpha.cos() - g.sp * alpha.sin();
            if phase.abs() < 1e-12 {
                return Err(domain("sin(φ + α + ωt) = 0"));
            }
            let cot = c / s;
            let arg = n * cot / phase;
            if !(arg >= range.0 && arg <= range.1) {
                return Err(domain(format!("argument {arg} outside the range of F")));
            }
            let xi = inverse.eval(&[arg]);
            if !xi.is_finite() {
                return Err(domain("inverse function not finite"));
            }
            Ok((-cot * phase_cos / phase * xi, -omega + xi / (s * s)))
        }
    }
}

/// Stationary solutions with constant axial momentum `L₃ = ω`:
/// `u = ±√(A − ω²/sin²θ)`, `v = ω cot²θ`.
pub fn constant_l3_solution(a: f64, omega: f64, theta: f64, branch: f64) -> Result<(f64, f64), HodographError> {
    if !(theta > 0.0 && theta < PI) {
        return Err(domain("pole"));
    }
    let (s, c) = theta.sin_cos();
    let radicand = a - omega * omega / (s * s);
    if radicand < 0.0 {
        return Err(HodographError::NegativeRadicand { value: radicand });
    }
    Ok((branch.signum() * radicand.sqrt(), omega * (c / s).powi(2)))
}

/// `u²` from `H = Φ(L₃)` in the Coriolis regime.
pub fn coriolis_constraint(phi: &Expr, theta: f64, v: f64, omega: f64) -> Result<f64, HodographError> {
    let s2 = theta.sin().powi(2);
    let u2 = -v * v * s2 + 2.0 * phi.eval(&[(v + omega) * s2]);
    if u2 < 0.0 {
        return Err(HodographError::NegativeRadicand { value: u2 });
    }
    Ok(u2)
}

/// `u²` from `I₁ = Φ(I₂)` in the rapid Coriolis regime.
pub fn rapid_coriolis_constraint(phi: &Expr, theta: f64, v: f64, omega: f64) -> Result<f64, HodographError> {
    let s = theta.sin();
    let u2 = 2.0 * omega * (v + omega) * s * s + 2.0 * phi.eval(&[v + 2.0 * omega * s.ln()]);
    if u2 < 0.0 {
        return Err(HodographError::NegativeRadicand { value: u2 });
    }
    Ok(u2)
}

/// `θ`-only rapid Coriolis solution with `v = a − 2ω log sin θ` and
/// `I₁ = phi_a`.
pub fn rapid_coriolis_stationary(a: f64, phi_a: f64, theta: f64, omega: f64) -> Result<(f64, f64), HodographError> {
    let v = a - 2.0 * omega * theta.sin().ln();
    let u2 = rapid_coriolis_constraint(&Expr::c(phi_a), theta, v, omega)?;
    Ok((u2.sqrt(), v))
}

/// `θ`-only solution of the rapid regime with centrifugal force:
/// `u = √(2c0 + ω² sin²θ)`, `v = a − 2ω log sin θ`.
pub fn rapid_stationary(c0: f64, a: f64, theta: f64, omega: f64) -> Result<(f64, f64), HodographError> {
    let s = theta.sin();
    let u2 = 2.0 * c0 + omega * omega * s * s;
    if u2 < 0.0 {
        return Err(HodographError::NegativeRadicand { value: u2 });
    }
    Ok((u2.sqrt(), a - 2.0 * omega * s.ln()))
}

/// One row of a `(θ, φ)` field export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub theta: f64,
    pub phi: f64,
    pub u: f64,
    pub v: f64,
    pub det_m: f64,
    pub valid: bool,
}

pub fn write_grid_csv<W: Write>(mut out: W, rows: &[GridRow], comment: Option<&str>) -> Result<(), csv::Error> {
    use crate::characteristics::fmt17;
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "phi", "u", "v", "detM", "valid"])?;
    for r in rows {
        w.write_record([
            fmt17(r.theta),
            fmt17(r.phi),
            fmt17(r.u),
            fmt17(r.v),
            fmt17(r.det_m),
            (r.valid as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
