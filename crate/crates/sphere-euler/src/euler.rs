//! Governing equations on the rotating unit sphere: regimes, forces and the
//! finite-difference residual used to certify velocity fields.
//!
//! Every regime has the form
//!
//! ```text
//! ∂u/∂t + a_θ ∂u/∂θ + a_φ ∂u/∂φ = F1(θ, u, v)
//! ∂v/∂t + a_θ ∂v/∂θ + a_φ ∂v/∂φ = F2(θ, u, v)
//! ```
//!
//! with `(a_θ, a_φ) = (u, v)` for coordinate velocities and `(u, v / sin θ)`
//! for physical velocities.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Distance kept from the poles by all grid and stencil operations.
pub const THETA_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EulerError {
    #[error("colatitude {theta} is at or beyond a pole")]
    Pole { theta: f64 },
    #[error("stencil around theta = {theta} leaves the guard band")]
    StencilOutside { theta: f64 },
    #[error("field is not defined at (t={t}, theta={theta}, phi={phi}): {reason}")]
    OutsideField { t: f64, theta: f64, phi: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Full,
    Coriolis,
    Rapid,
    RapidCoriolis,
    PhysFull,
    PhysCoriolis,
    PhysRapid,
}

impl Regime {
    pub const ALL: [Regime; 7] = [
        Regime::Full,
        Regime::Coriolis,
        Regime::Rapid,
        Regime::RapidCoriolis,
        Regime::PhysFull,
        Regime::PhysCoriolis,
        Regime::PhysRapid,
    ];

    /// True when the second velocity component is the tangent-vector
    /// component `v sin θ` rather than the angular rate.
    pub fn physical(self) -> bool {
        matches!(self, Regime::PhysFull | Regime::PhysCoriolis | Regime::PhysRapid)
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Full => "FULL",
            Regime::Coriolis => "CORIOLIS",
            Regime::Rapid => "RAPID",
            Regime::RapidCoriolis => "RAPID_CORIOLIS",
            Regime::PhysFull => "PHYS_FULL",
            Regime::PhysCoriolis => "PHYS_CORIOLIS",
            Regime::PhysRapid => "PHYS_RAPID",
        }
    }
}

/// A point of the five-dimensional space `(t, θ, φ, u, v)`.
///
/// `phi` is kept in `[0, 2π)` and the number of full turns in `winding`,
/// so `phi_unwrapped()` is continuous along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub winding: i64,
    pub u: f64,
    pub v: f64,
}

impl State {
    pub fn new(t: f64, theta: f64, phi_unwrapped: f64, u: f64, v: f64) -> Self {
        let turns = (phi_unwrapped / TAU).floor();
        let mut phi = phi_unwrapped - turns * TAU;
        let mut winding = turns as i64;
        if phi >= TAU {
            phi -= TAU;
            winding += 1;
        }
        Self { t, theta, phi, winding, u, v }
    }

    pub fn phi_unwrapped(&self) -> f64 {
        self.phi + TAU * self.winding as f64
    }
}

/// Right-hand side `(F1, F2)` of the selected regime.
pub fn force(regime: Regime, theta: f64, u: f64, v: f64, omega: f64) -> Result<(f64, f64), EulerError> {
    let (s, c) = theta.sin_cos();
    if !(theta > 0.0 && theta < PI) || s == 0.0 {
        return Err(EulerError::Pole { theta });
    }
    let cot = c / s;
    let w = v + omega;
    Ok(match regime {
        Regime::Full => (s * c * w * w, -2.0 * cot * u * w),
        Regime::Coriolis => (s * c * v * (v + 2.0 * omega), -2.0 * cot * u * w),
        Regime::Rapid => (omega * omega * s * c, -2.0 * omega * u * cot),
        Regime::RapidCoriolis => (2.0 * v * omega * s * c, -2.0 * omega * u * cot),
        Regime::PhysFull => {
            let a = v + omega * s;
            (a * a * cot, -u * (v + 2.0 * omega * s) * cot)
        }
        Regime::PhysCoriolis => (v * (v + 2.0 * omega * s) * cot, -u * (v + 2.0 * omega * s) * cot),
        Regime::PhysRapid => (omega * omega * s * c, -2.0 * u * omega * c),
    })
}

/// Advection speeds `(dθ/dt, dφ/dt)` along characteristics.
pub fn transport(regime: Regime, theta: f64, u: f64, v: f64) -> (f64, f64) {
    if regime.physical() {
        (u, v / theta.sin())
    } else {
        (u, v)
    }
}

/// Anything that yields a velocity pair at `(t, θ, φ)`.
pub trait VelocityField {
    fn velocity(&self, t: f64, theta: f64, phi: f64) -> Result<(f64, f64), EulerError>;

    /// Rotation rate entering the force terms when this field is checked.
    fn residual_omega(&self) -> f64;
}

/// `(material derivative − force)` for both components, with fourth-order
/// central differences of step `h` in each of `t`, `θ`, `φ`.
pub fn pde_residual<F: VelocityField + ?Sized>(
    field: &F,
    regime: Regime,
    t: f64,
    theta: f64,
    phi: f64,
    h: f64,
) -> Result<(f64, f64), EulerError> {
    let r = pde_residual_detail(field, regime, t, theta, phi, h)?;
    Ok((r.u, r.v))
}

/// Residuals of both equations with the largest term magnitude in each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub u: f64,
    pub v: f64,
    pub scale_u: f64,
    pub scale_v: f64,
}

impl Residual {
    /// Larger of the two residuals, each divided by `max(1, scale)`.
    pub fn relative(&self) -> f64 {
        (self.u.abs() / self.scale_u.max(1.0)).max(self.v.abs() / self.scale_v.max(1.0))
    }
}

pub fn pde_residual_detail<F: VelocityField + ?Sized>(
    field: &F,
    regime: Regime,
    t: f64,
    theta: f64,
    phi: f64,
    h: f64,
) -> Result<Residual, EulerError> {
    if theta - 2.0 * h < THETA_GUARD || theta + 2.0 * h > PI - THETA_GUARD {
        return Err(EulerError::StencilOutside { theta });
    }
    let omega = field.residual_omega();
    let (u, v) = field.velocity(t, theta, phi)?;
    let wrap = |p: f64| p.rem_euclid(TAU);
    let d = |g: &dyn Fn(f64) -> Result<(f64, f64), EulerError>| -> Result<(f64, f64), EulerError> {
        let (a2, b2) = g(2.0 * h)?;
        let (a1, b1) = g(h)?;
        let (am1, bm1) = g(-h)?;
        let (am2, bm2) = g(-2.0 * h)?;
        Ok((
            (8.0 * (a1 - am1) - (a2 - am2)) / (12.0 * h),
            (8.0 * (b1 - bm1) - (b2 - bm2)) / (12.0 * h),
        ))
    };
    let (ut, vt) = d(&|e| field.velocity(t + e, theta, phi))?;
    let (uth, vth) = d(&|e| field.velocity(t, theta + e, phi))?;
    let (uph, vph) = d(&|e| field.velocity(t, theta, wrap(phi + e)))?;
    let (at, ap) = transport(regime, theta, u, v);
    let (f1, f2) = force(regime, theta, u, v, omega)?;
    let largest = |terms: [f64; 4]| terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Residual {
        u: ut + at * uth + ap * uph - f1,
        v: vt + at * vth + ap * vph - f2,
        scale_u: largest([ut, at * uth, ap * uph, f1]),
        scale_v: largest([vt, at * vth, ap * vph, f2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    struct Closure<F: Fn(f64, f64, f64) -> (f64, f64)>(F, f64);
    impl<F: Fn(f64, f64, f64) -> (f64, f64)> VelocityField for Closure<F> {
        fn velocity(&self, t: f64, theta: f64, phi: f64) -> Result<(f64, f64), EulerError> {
            Ok((self.0)(t, theta, phi))
        }
        fn residual_omega(&self) -> f64 {
            self.1
        }
    }

    #[test]
    fn full_force_substitution() {
        let (f1, f2) = force(Regime::Full, FRAC_PI_4, 1.0, 2.0, 3.0).unwrap();
        assert!((f1 - 12.5).abs() < 1e-13);
        assert!((f2 + 10.0).abs() < 1e-13);
        assert_eq!(force(Regime::Full, 0.7, 0.0, -3.0, 3.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rapid_force_substitution() {
        let (f1, f2) = force(Regime::Rapid, FRAC_PI_4, 1.0, 0.0, 2.0).unwrap();
        assert!((f1 - 2.0).abs() < 1e-13);
        assert!((f2 + 4.0).abs() < 1e-13);
    }

    #[test]
    fn pole_is_rejected() {
        assert!(force(Regime::Full, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(force(Regime::Coriolis, PI, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn full_at_zero_rotation_is_the_nonrotating_system() {
        for &(th, u, v) in &[(0.3, 0.1, -0.4), (2.0, 1.5, 0.7)] {
            let (f1, f2) = force(Regime::Full, th, u, v, 0.0).unwrap();
            let (s, c): (f64, f64) = th.sin_cos();
            assert_eq!(f1, s * c * v * v);
            assert_eq!(f2, -2.0 * c / s * u * v);
        }
    }

    #[test]
    fn physical_full_is_the_transported_full_force() {
        // ũ-component: F1_phys(θ, u, v sinθ) = F1_full(θ, u, v);
        // ṽ-component: F2_phys = sinθ·F2_full + v cosθ·u.
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let th = 0.1 + 2.9 * rnd();
            let (u, v, om) = (4.0 * rnd() - 2.0, 4.0 * rnd() - 2.0, 4.0 * rnd() - 2.0);
            let s = th.sin();
            for (coord, phys) in [(Regime::Full, Regime::PhysFull), (Regime::Coriolis, Regime::PhysCoriolis)] {
                let (a1, a2) = force(coord, th, u, v, om).unwrap();
                let (b1, b2) = force(phys, th, u, v * s, om).unwrap();
                let scale = 1.0 + a1.abs() + a2.abs();
                assert!((a1 - b1).abs() < 1e-13 * scale);
                assert!((s * a2 + v * th.cos() * u - b2).abs() < 1e-13 * scale);
            }
        }
    }

    #[test]
    fn state_keeps_winding() {
        let s = State::new(0.0, 1.0, -0.5, 0.0, 0.0);
        assert_eq!(s.winding, -1);
        assert!((s.phi - (TAU - 0.5)).abs() < 1e-15);
        assert!((s.phi_unwrapped() + 0.5).abs() < 1e-15);
        let s = State::new(0.0, 1.0, 13.0, 0.0, 0.0);
        assert_eq!(s.winding, 2);
    }

    #[test]
    fn constant_rest_field_has_zero_residual() {
        let f = Closure(|_, _, _| (0.0, -0.8), 0.8);
        assert_eq!(pde_residual(&f, Regime::Full, 0.3, 1.2, 5.0, 1e-3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn non_solution_is_detected() {
        let f = Closure(|_, th, _| (th, 0.0), 1.0);
        let th = PI / 3.0;
        let (r1, _) = pde_residual(&f, Regime::Full, 0.0, th, 0.5, 1e-3).unwrap();
        assert!((r1 - (th - th.sin() * th.cos())).abs() < 1e-10);
    }

    #[test]
    fn fourth_order_convergence() {
        // u = sin φ·(1 + 0.1 t) is not a solution; its residual has an O(h⁴)
        // discretization part that we isolate by differencing.
        let f = Closure(|t, th, ph| ((ph + 0.3 * t).sin() * th, (th + t).cos()), 0.4);
        let exact = {
            let (t, th, ph) = (0.2f64, 1.1f64, 0.7f64);
            let (u, v) = ((ph + 0.3 * t).sin() * th, (th + t).cos());
            let ut = 0.3 * (ph + 0.3 * t).cos() * th;
            let uth = (ph + 0.3 * t).sin();
            let uph = (ph + 0.3 * t).cos() * th;
            let vt = -(th + t).sin();
            let vth = -(th + t).sin();
            let (f1, f2) = force(Regime::Full, th, u, v, 0.4).unwrap();
            (ut + u * uth + v * uph - f1, vt + u * vth - f2)
        };
        let err = |h: f64| {
            let (r1, r2) = pde_residual(&f, Regime::Full, 0.2, 1.1, 0.7, h).unwrap();
            ((r1 - exact.0).powi(2) + (r2 - exact.1).powi(2)).sqrt()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((8.0..32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stencil_near_pole_is_refused() {
        let f = Closure(|_, _, _| (0.0, 0.0), 0.0);
        assert!(pde_residual(&f, Regime::Full, 0.0, 1e-4, 0.0, 1e-4).is_err());
    }
}
