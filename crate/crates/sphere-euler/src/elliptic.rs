//! Elliptic integrals and Jacobi elliptic functions.
//!
//! Incomplete integrals go through Carlson's symmetric forms using the
//! duplication algorithm; Jacobi functions use the descending Landen (AGM)
//! sequence. Amplitudes outside `[-π/2, π/2]` are handled by quasi-periodicity,
//! and moduli above one are mapped to their reciprocal.

use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("argument outside the domain: {0}")]
    Domain(&'static str),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] quad::QuadError),
}

/// Which evaluation route produced an [`EllipticEval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchNote {
    Direct,
    ReciprocalModulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticEval {
    pub value: f64,
    pub modulus_k: f64,
    pub branch_note: BranchNote,
}

/// Carlson's R_F(x, y, z).
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64, EllipticError> {
    if !(x >= 0.0 && y >= 0.0 && z >= 0.0) {
        return Err(EllipticError::Domain("carlson_rf needs nonnegative arguments"));
    }
    if [x, y, z].iter().filter(|&&a| a == 0.0).count() > 1 {
        return Err(EllipticError::Domain("carlson_rf allows at most one zero argument"));
    }
    let (x0, y0) = (x, y);
    let (mut x, mut y, mut z) = (x, y, z);
    let a0 = (x + y + z) / 3.0;
    let q = (3.0 * f64::EPSILON).powf(-1.0 / 6.0)
        * (a0 - x).abs().max((a0 - y).abs()).max((a0 - z).abs());
    let mut a = a0;
    let mut fac = 1.0;
    while fac * q >= a.abs() {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        a = 0.25 * (a + lam);
        fac *= 0.25;
    }
    let _ = (x, y, z);
    let xx = (a0 - x0) / a * fac;
    let yy = (a0 - y0) / a * fac;
    let zz = -xx - yy;
    let e2 = xx * yy - zz * zz;
    let e3 = xx * yy * zz;
    Ok((1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / a.sqrt())
}

/// Degenerate Carlson integral R_C(x, y) for y > 0.
pub fn carlson_rc(x: f64, y: f64) -> Result<f64, EllipticError> {
    if !(x >= 0.0 && y > 0.0) {
        return Err(EllipticError::Domain("carlson_rc needs x >= 0, y > 0"));
    }
    let r = x / y - 1.0;
    if r.abs() < 1e-3 {
        // Taylor series of R_C(1 + r, 1).
        let s = 1.0
            + r * (-1.0 / 6.0
                + r * (3.0 / 40.0 + r * (-5.0 / 112.0 + r * (35.0 / 1152.0 - r * 63.0 / 2816.0))));
        return Ok(s / y.sqrt());
    }
    if x == 0.0 {
        return Ok(FRAC_PI_2 / y.sqrt());
    }
    if x < y {
        Ok(((y - x) / x).sqrt().atan() / (y - x).sqrt())
    } else {
        Ok(((x - y) / x).sqrt().atanh() / (x - y).sqrt())
    }
}

/// Carlson's R_D(x, y, z) = R_J(x, y, z, z).
pub fn carlson_rd(x: f64, y: f64, z: f64) -> Result<f64, EllipticError> {
    if !(x >= 0.0 && y >= 0.0 && z > 0.0) || (x == 0.0 && y == 0.0) {
        return Err(EllipticError::Domain("carlson_rd needs x,y >= 0 (not both zero), z > 0"));
    }
    let (mut x, mut y, mut z) = (x, y, z);
    let (x0, y0) = (x, y);
    let a0 = (x + y + 3.0 * z) / 5.0;
    let q = (0.25 * f64::EPSILON).powf(-1.0 / 6.0)
        * (a0 - x).abs().max((a0 - y).abs()).max((a0 - z).abs());
    let mut a = a0;
    let mut fac = 1.0;
    let mut sum = 0.0;
    while fac * q >= a.abs() {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        sum += fac / (sz * (z + lam));
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        a = 0.25 * (a + lam);
        fac *= 0.25;
    }
    let xx = (a0 - x0) / a * fac;
    let yy = (a0 - y0) / a * fac;
    let zz = -(xx + yy) / 3.0;
    let xy = xx * yy;
    let z2 = zz * zz;
    let e2 = xy - 6.0 * z2;
    let e3 = (3.0 * xy - 8.0 * z2) * zz;
    let e4 = 3.0 * (xy - z2) * z2;
    let e5 = xy * z2 * zz;
    let series = 1.0 - 3.0 * e2 / 14.0 + e3 / 6.0 + 9.0 * e2 * e2 / 88.0 - 3.0 * e4 / 22.0
        - 9.0 * e2 * e3 / 52.0
        + 3.0 * e5 / 26.0;
    Ok(fac * series / (a * a.sqrt()) + 3.0 * sum)
}

/// Carlson's R_J(x, y, z, p) for p > 0.
pub fn carlson_rj(x: f64, y: f64, z: f64, p: f64) -> Result<f64, EllipticError> {
    if !(x >= 0.0 && y >= 0.0 && z >= 0.0 && p > 0.0) {
        return Err(EllipticError::Domain("carlson_rj needs x,y,z >= 0 and p > 0"));
    }
    if [x, y, z].iter().filter(|&&a| a == 0.0).count() > 1 {
        return Err(EllipticError::Domain("carlson_rj allows at most one zero among x,y,z"));
    }
    let (x0, y0, z0, p0) = (x, y, z, p);
    let (mut x, mut y, mut z, mut p) = (x, y, z, p);
    let a0 = (x + y + z + 2.0 * p) / 5.0;
    let delta = (p - x) * (p - y) * (p - z);
    let q = (0.25 * f64::EPSILON).powf(-1.0 / 6.0)
        * (a0 - x)
            .abs()
            .max((a0 - y).abs())
            .max((a0 - z).abs())
            .max((a0 - p).abs());
    let mut a = a0;
    let mut fac = 1.0;
    let mut fac3 = 1.0;
    let mut sum = 0.0;
    while fac * q >= a.abs() {
        let (sx, sy, sz, sp) = (x.sqrt(), y.sqrt(), z.sqrt(), p.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        let d = (sp + sx) * (sp + sy) * (sp + sz);
        let e = fac3 * delta / (d * d);
        sum += fac / d * carlson_rc(1.0, 1.0 + e)?;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        p = 0.25 * (p + lam);
        a = 0.25 * (a + lam);
        fac *= 0.25;
        fac3 *= 1.0 / 64.0;
    }
    let xx = (a0 - x0) / a * fac;
    let yy = (a0 - y0) / a * fac;
    let zz = (a0 - z0) / a * fac;
    let pp = -(xx + yy + zz) / 2.0;
    let _ = p0;
    let e2 = xx * yy + xx * zz + yy * zz - 3.0 * pp * pp;
    let e3 = xx * yy * zz + 2.0 * e2 * pp + 4.0 * pp * pp * pp;
    let e4 = (2.0 * xx * yy * zz + e2 * pp + 3.0 * pp * pp * pp) * pp;
    let e5 = xx * yy * zz * pp * pp;
    let series = 1.0 - 3.0 * e2 / 14.0 + e3 / 6.0 + 9.0 * e2 * e2 / 88.0 - 3.0 * e4 / 22.0
        - 9.0 * e2 * e3 / 52.0
        + 3.0 * e5 / 26.0;
    Ok(fac * series / (a * a.sqrt()) + 6.0 * sum)
}

/// Complete integral of the first kind, K(k), for 0 ≤ k < 1.
pub fn complete_k(k: f64) -> Result<f64, EllipticError> {
    if !(0.0..1.0).contains(&k.abs()) {
        return Err(EllipticError::Domain("complete_k needs |k| < 1"));
    }
    carlson_rf(0.0, (1.0 - k) * (1.0 + k), 1.0)
}

/// Complete integral of the second kind, E(k), for 0 ≤ k ≤ 1.
pub fn complete_e(k: f64) -> Result<f64, EllipticError> {
    if k.abs() > 1.0 {
        return Err(EllipticError::Domain("complete_e needs |k| <= 1"));
    }
    if k.abs() == 1.0 {
        return Ok(1.0);
    }
    let kp2 = (1.0 - k) * (1.0 + k);
    Ok(carlson_rf(0.0, kp2, 1.0)? - k * k / 3.0 * carlson_rd(0.0, kp2, 1.0)?)
}

/// Split `phi` as `n·π + r` with `r ∈ [-π/2, π/2]`.
fn reduce_amplitude(phi: f64) -> (f64, f64) {
    let n = (phi / PI).round();
    (n, phi - n * PI)
}

fn f_principal(r: f64, k: f64) -> Result<f64, EllipticError> {
    let s = r.sin();
    let c = r.cos();
    let d2 = (1.0 - k * s) * (1.0 + k * s);
    if s == 0.0 {
        return Ok(0.0);
    }
    if d2 <= 0.0 {
        return Err(EllipticError::Domain("k·sin(phi) >= 1"));
    }
    Ok(s * carlson_rf(c * c, d2, 1.0)?)
}

/// Incomplete integral of the first kind F(φ, k) = ∫₀^φ dθ / √(1 − k² sin²θ).
///
/// Any real amplitude is accepted for k < 1. For k > 1 the amplitude must
/// satisfy k·|sin φ| < 1 with |φ| ≤ π/2, and the value is obtained from
/// k·F(φ, k) = F(ψ, 1/k), sin ψ = k sin φ.
pub fn ellint_f(phi: f64, k: f64) -> Result<EllipticEval, EllipticError> {
    let k = k.abs();
    if !phi.is_finite() || !k.is_finite() {
        return Err(EllipticError::Domain("non-finite argument"));
    }
    if k > 1.0 {
        if phi.abs() > FRAC_PI_2 {
            return Err(EllipticError::Domain("amplitude beyond π/2 with modulus > 1"));
        }
        let (psi, _) = reciprocal_angle(phi, k)?;
        let value = f_principal(psi, 1.0 / k)? / k;
        return Ok(EllipticEval { value, modulus_k: k, branch_note: BranchNote::ReciprocalModulus });
    }
    let (n, r) = reduce_amplitude(phi);
    let mut value = f_principal(r, k)?;
    if n != 0.0 {
        if k >= 1.0 {
            return Err(EllipticError::Domain("complete integral diverges at k = 1"));
        }
        value += 2.0 * n * complete_k(k)?;
    }
    Ok(EllipticEval { value, modulus_k: k, branch_note: BranchNote::Direct })
}

/// Incomplete integral of the second kind E(φ, k) for k ≤ 1.
pub fn ellint_e(phi: f64, k: f64) -> Result<f64, EllipticError> {
    let k = k.abs();
    if k > 1.0 {
        return Err(EllipticError::Domain("ellint_e needs k <= 1"));
    }
    let (n, r) = reduce_amplitude(phi);
    let s = r.sin();
    let c = r.cos();
    let d2 = (1.0 - k * s) * (1.0 + k * s);
    let mut value = if s == 0.0 {
        0.0
    } else if d2 == 0.0 {
        s
    } else {
        s * carlson_rf(c * c, d2, 1.0)? - k * k * s * s * s / 3.0 * carlson_rd(c * c, d2, 1.0)?
    };
    if n != 0.0 {
        value += 2.0 * n * complete_e(k)?;
    }
    Ok(value)
}

fn pi_principal(r: f64, n: f64, k: f64) -> Result<f64, EllipticError> {
    let s = r.sin();
    if s == 0.0 {
        return Ok(0.0);
    }
    let c = r.cos();
    let d2 = (1.0 - k * s) * (1.0 + k * s);
    let p = 1.0 - n * s * s;
    if d2 <= 0.0 {
        return Err(EllipticError::Domain("k·sin(phi) >= 1"));
    }
    if p <= 0.0 {
        return Err(EllipticError::Domain("1 - n sin²(phi) vanishes on the path"));
    }
    let s3 = s * s * s;
    Ok(s * carlson_rf(c * c, d2, 1.0)? + n * s3 / 3.0 * carlson_rj(c * c, d2, 1.0, p)?)
}

/// Incomplete integral of the third kind
/// Π(φ, n, k) = ∫₀^φ dθ / ((1 − n sin²θ) √(1 − k² sin²θ)).
pub fn ellint_pi(phi: f64, n: f64, k: f64) -> Result<EllipticEval, EllipticError> {
    let k = k.abs();
    if !phi.is_finite() || !n.is_finite() || !k.is_finite() {
        return Err(EllipticError::Domain("non-finite argument"));
    }
    if k > 1.0 {
        if phi.abs() > FRAC_PI_2 {
            return Err(EllipticError::Domain("amplitude beyond π/2 with modulus > 1"));
        }
        // sin ψ = k sin φ maps Π(φ, n, k) to Π(ψ, n/k², 1/k)/k.
        let (psi, _) = reciprocal_angle(phi, k)?;
        let value = pi_principal(psi, n / (k * k), 1.0 / k)? / k;
        return Ok(EllipticEval { value, modulus_k: k, branch_note: BranchNote::ReciprocalModulus });
    }
    let (m, r) = reduce_amplitude(phi);
    let mut value = pi_principal(r, n, k)?;
    if m != 0.0 {
        if n >= 1.0 || k >= 1.0 {
            return Err(EllipticError::Domain("complete third-kind integral diverges"));
        }
        value += 2.0 * m * pi_principal(FRAC_PI_2, n, k)?;
    }
    Ok(EllipticEval { value, modulus_k: k, branch_note: BranchNote::Direct })
}

fn reciprocal_angle(phi: f64, k: f64) -> Result<(f64, f64), EllipticError> {
    let arg = k * phi.sin();
    if arg.abs() >= 1.0 {
        return Err(EllipticError::Domain("k·sin(phi) >= 1"));
    }
    Ok((arg.asin(), arg))
}

/// Reciprocal-modulus map for k > 1: returns ψ = arcsin(k sin φ) and the
/// quadrature discrepancy |k·F(φ,k) − F(ψ,1/k)| with both sides integrated
/// from their defining integrals.
pub fn reciprocal_modulus(phi: f64, k: f64) -> Result<(f64, f64), EllipticError> {
    if k <= 1.0 {
        return Err(EllipticError::Domain("reciprocal_modulus needs k > 1"));
    }
    if phi.abs() > FRAC_PI_2 {
        return Err(EllipticError::Domain("amplitude beyond π/2 with modulus > 1"));
    }
    let (psi, _) = reciprocal_angle(phi, k)?;
    if phi == 0.0 {
        return Ok((0.0, 0.0));
    }
    let lhs = quad::tanh_sinh(|t| 1.0 / (1.0 - (k * t.sin()).powi(2)).sqrt(), 0.0, phi, 1e-14)?;
    let kr = 1.0 / k;
    let rhs = quad::tanh_sinh(|t| 1.0 / (1.0 - (kr * t.sin()).powi(2)).sqrt(), 0.0, psi, 1e-14)?;
    Ok((psi, (k * lhs - rhs).abs()))
}

/// Jacobi amplitude am(u, k) for 0 ≤ k ≤ 1, continuous in u.
pub fn jacobi_am(u: f64, k: f64) -> f64 {
    let k = k.abs().min(1.0);
    if k < 1e-8 {
        return u;
    }
    if 1.0 - k < 1e-8 {
        // gd(u) plus the first-order correction in k'².
        let kp2 = (1.0 - k) * (1.0 + k);
        let gd = u.sinh().atan();
        if u.abs() > 20.0 {
            return gd;
        }
        return gd + 0.25 * kp2 * (u.sinh() * u.cosh() - u) / u.cosh();
    }
    landen_amplitude(u, k)
}

fn landen_amplitude(u: f64, k: f64) -> f64 {
    let mut a = [0.0f64; 32];
    let mut c = [0.0f64; 32];
    a[0] = 1.0;
    let mut b = ((1.0 - k) * (1.0 + k)).sqrt();
    c[0] = k;
    let mut n = 0;
    while c[n].abs() > f64::EPSILON && n < 30 {
        let an = a[n];
        a[n + 1] = 0.5 * (an + b);
        c[n + 1] = 0.5 * (an - b);
        b = (an * b).sqrt();
        n += 1;
    }
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    phi
}

/// Jacobi elliptic functions (sn, cn, dn) for 0 ≤ k ≤ 1.
pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> (f64, f64, f64) {
    let k = k.abs().min(1.0);
    if k < 1e-8 {
        return (u.sin(), u.cos(), 1.0);
    }
    if 1.0 - k < 1e-8 {
        let kp2 = (1.0 - k) * (1.0 + k);
        let (t, sech) = (u.tanh(), 1.0 / u.cosh());
        if kp2 == 0.0 || u.abs() > 20.0 {
            return (t, sech, sech);
        }
        let g = 0.25 * kp2 * (u.sinh() * u.cosh() - u);
        let h = 0.25 * kp2 * (u.sinh() * u.cosh() + u);
        let sn = t + g * sech * sech;
        let cn = sech - g * t * sech;
        let dn = sech + h * t * sech;
        return (sn, cn, dn);
    }
    let phi = landen_amplitude(u, k);
    let sn = phi.sin();
    let cn = phi.cos();
    let kp2 = (1.0 - k) * (1.0 + k);
    let dn = (kp2 + k * k * cn * cn).sqrt();
    (sn, cn, dn)
}

/// Derivative ∂F(φ, k)/∂k for 0 < k < 1.
pub fn ellint_f_dk(phi: f64, k: f64) -> Result<f64, EllipticError> {
    if !(k > 0.0 && k < 1.0) {
        return Err(EllipticError::Domain("ellint_f_dk needs 0 < k < 1"));
    }
    let f = ellint_f(phi, k)?.value;
    let e = ellint_e(phi, k)?;
    let kp2 = (1.0 - k) * (1.0 + k);
    let (s, c) = phi.sin_cos();
    let delta = (1.0 - k * k * s * s).sqrt();
    Ok(e / (k * kp2) - f / k - k * s * c / (kp2 * delta))
}
