//! Maps between the rotating and non-rotating frames and between
//! coordinate and physical azimuthal velocity.

use crate::characteristics::{self, CharError};
use crate::euler::{self, EulerError, Regime, State, VelocityField};
use crate::field::{Family, Frame, SolutionField};
use crate::hodograph;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("field is already in the {0:?} frame")]
    AlreadyInFrame(Frame),
    #[error("field already uses {} velocities", if *.0 { "physical" } else { "coordinate" })]
    AlreadyInVelocity(bool),
    #[error("regime {0:?} has no counterpart under this map")]
    NoCounterpart(Regime),
    #[error("map rate {map} differs from the field's rotation rate {field}")]
    OmegaMismatch { map: f64, field: f64 },
    #[error("field depends on φ (variation {variation:e})")]
    NotPhiIndependent { variation: f64 },
    #[error("rotation rate must be nonzero for a period")]
    ZeroOmega,
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Char(#[from] CharError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDirection {
    ToRotating,
    ToNonrotating,
}

impl MapDirection {
    fn target(self) -> Frame {
        match self {
            MapDirection::ToRotating => Frame::Rotating,
            MapDirection::ToNonrotating => Frame::NonRotating,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMap {
    pub direction: MapDirection,
    pub omega: f64,
}

fn frame_counterpart(regime: Regime) -> Result<Regime, TransformError> {
    // Only the full system keeps its form: the map trades centrifugal and
    // Coriolis terms against the frame rotation.
    match regime {
        Regime::Full | Regime::PhysFull => Ok(regime),
        other => Err(TransformError::NoCounterpart(other)),
    }
}

fn prepare(fm: FrameMap, field: &SolutionField) -> Result<SolutionField, TransformError> {
    let target = fm.direction.target();
    if field.frame == target {
        return Err(TransformError::AlreadyInFrame(target));
    }
    if field.frame == Frame::Rotating && field.omega != fm.omega {
        return Err(TransformError::OmegaMismatch { map: fm.omega, field: field.omega });
    }
    let mut inner = field.clone();
    inner.omega = fm.omega;
    Ok(inner)
}

/// `u = ũ(t, θ, φ + ωt)`, `v = ṽ − ω` and its inverse.
pub fn map_field(fm: FrameMap, field: &SolutionField) -> Result<SolutionField, TransformError> {
    let inner = prepare(fm, field)?;
    let regime = frame_counterpart(field.regime)?;
    Ok(SolutionField { family: Family::Mapped { inner: Box::new(inner) }, omega: fm.omega, regime, frame: fm.direction.target() })
}

/// The simplified map for fields independent of `φ`: only `v` shifts by `ω`.
pub fn phi_independent_shift(fm: FrameMap, field: &SolutionField, t: f64, thetas: &[f64]) -> Result<SolutionField, TransformError> {
    let inner = prepare(fm, field)?;
    let regime = frame_counterpart(field.regime)?;
    let mut variation = 0.0f64;
    for &th in thetas {
        let (u0, v0) = field.velocity(t, th, 0.0)?;
        for k in 1..8 {
            let (u, v) = field.velocity(t, th, TAU * k as f64 / 8.0)?;
            variation = variation.max((u - u0).abs()).max((v - v0).abs());
        }
    }
    if variation > 1e-12 {
        return Err(TransformError::NotPhiIndependent { variation });
    }
    Ok(SolutionField { family: Family::Shifted { inner: Box::new(inner) }, omega: fm.omega, regime, frame: fm.direction.target() })
}

fn physical_counterpart(regime: Regime, to_physical: bool) -> Result<Regime, TransformError> {
    use Regime::*;
    match (regime, to_physical) {
        (Full, true) => Ok(PhysFull),
        (Coriolis, true) => Ok(PhysCoriolis),
        (Rapid, true) => Ok(PhysRapid),
        (PhysFull, false) => Ok(Full),
        (PhysCoriolis, false) => Ok(Coriolis),
        (PhysRapid, false) => Ok(Rapid),
        (r, _) if r.physical() == to_physical => Err(TransformError::AlreadyInVelocity(to_physical)),
        (r, _) => Err(TransformError::NoCounterpart(r)),
    }
}

/// `ũ = u`, `ṽ = v sin θ` (`to_physical`) or its inverse. The rapid pair
/// is mapped too, although the result does not solve the physical rapid
/// system.
pub fn physical_map(field: &SolutionField, to_physical: bool) -> Result<SolutionField, TransformError> {
    let regime = physical_counterpart(field.regime, to_physical)?;
    Ok(SolutionField { family: Family::Physical { inner: Box::new(field.clone()) }, omega: field.omega, regime, frame: field.frame })
}

/// Pointwise version of [`physical_map`].
pub fn physical_state(state: &State, to_physical: bool) -> Result<State, TransformError> {
    let s = state.theta.sin();
    let mut out = *state;
    if to_physical {
        out.v = state.v * s;
    } else {
        if s == 0.0 {
            return Err(EulerError::Pole { theta: state.theta }.into());
        }
        out.v = state.v / s;
    }
    Ok(out)
}

/// `max |(u, v)(t + 2π/ω) − (u, v)(t)|` over the grid, each component
/// scaled by `max(1, |value|)`.
pub fn periodicity_check(field: &SolutionField, omega: f64, t: f64, points: &[(f64, f64)]) -> Result<f64, TransformError> {
    if omega == 0.0 {
        return Err(TransformError::ZeroOmega);
    }
    let period = TAU / omega.abs();
    let mut worst = 0.0f64;
    for &(th, ph) in points {
        let (u0, v0) = field.velocity(t, th, ph)?;
        let (u1, v1) = field.velocity(t + period, th, ph)?;
        let scaled = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
        worst = worst.max(scaled(u0, u1)).max(scaled(v0, v1));
    }
    Ok(worst)
}

/// Integrate a full-regime characteristic and its image under the physical
/// map separately; largest state difference at the sample times.
pub fn characteristic_conjugacy(start: State, omega: f64, times: &[f64], tol: f64) -> Result<f64, TransformError> {
    let mapped_start = physical_state(&start, true)?;
    let mut worst = 0.0f64;
    for &t in times {
        let a = characteristics::integrate(Regime::Full, start, omega, t, tol, tol)?;
        let b = characteristics::integrate(Regime::PhysFull, mapped_start, omega, t, tol, tol)?;
        let mapped = physical_state(a.end(), true)?;
        let e = b.end();
        let diff = [mapped.theta - e.theta, mapped.phi_unwrapped() - e.phi_unwrapped(), mapped.u - e.u, mapped.v - e.v];
        worst = diff.iter().fold(worst, |m, d| m.max(d.abs()));
    }
    Ok(worst)
}

/// A `θ`-only rapid solution carried to physical velocities and checked
/// against the physical rapid system. Returns the residual of the `v`
/// equation and the closed-form mismatch `ũṽ cot θ`.
pub fn rapid_non_equivalence(c0: f64, a: f64, omega: f64, theta: f64, phi: f64, h: f64) -> Result<(f64, f64), TransformError> {
    let rapid = SolutionField::new(Family::RapidStationary { c0, a }, omega, Regime::Rapid);
    let mapped = physical_map(&rapid, true)?;
    let (_, r2) = euler::pde_residual(&mapped, Regime::PhysRapid, 0.0, theta, phi, h)?;
    let (u, v) = mapped.velocity(0.0, theta, phi)?;
    Ok((r2, u * v * theta.cos() / theta.sin()))
}

/// The constant-axial-momentum solution at `ω`: its formal `ω → 0` limit
/// `(±√A, 0)` and its image in the non-rotating frame,
/// `(±√(A − ω²/sin²θ), ω/sin²θ)`.
pub fn constant_axial_momentum_comparison(a: f64, omega: f64, theta: f64) -> Result<((f64, f64), (f64, f64)), TransformError> {
    let limit = hodograph::constant_l3_solution(a, 0.0, theta, 1.0).map_err(|e| EulerError::OutsideField {
        t: 0.0,
        theta,
        phi: 0.0,
        reason: e.to_string(),
    })?;
    let field = SolutionField::new(Family::ConstantAxialMomentum { a, branch: 1.0 }, omega, Regime::Full);
    let mapped = phi_independent_shift(FrameMap { direction: MapDirection::ToNonrotating, omega }, &field, 0.0, &[theta])?;
    Ok((limit, mapped.velocity(0.0, theta, 0.0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::pde_residual;
    use crate::expr::Expr;
    use crate::hodograph::{AngMomSpec, LinearCoeffs};
    use std::f64::consts::PI;

    fn sinusoidal_momentum() -> SolutionField {
        let spec = AngMomSpec::Linear { coeffs: LinearCoeffs { a1: 1.0, b1: 0.0, a2: 0.0, b2: 0.0 } };
        SolutionField::new(Family::AngularMomentum { spec }, 1.0, Regime::Full)
    }

    const TO_NR: MapDirection = MapDirection::ToNonrotating;
    const TO_R: MapDirection = MapDirection::ToRotating;

    #[test]
    fn round_trip_is_identity() {
        let f = sinusoidal_momentum();
        let back = map_field(FrameMap { direction: TO_R, omega: 1.0 }, &map_field(FrameMap { direction: TO_NR, omega: 1.0 }, &f).unwrap()).unwrap();
        for &(t, th, ph) in &[(0.3, 0.7, 1.0), (2.0, 2.5, 4.0)] {
            let (a, b) = (f.velocity(t, th, ph).unwrap(), back.velocity(t, th, ph).unwrap());
            assert!((a.0 - b.0).abs() <= 1e-15 && (a.1 - b.1).abs() <= 1e-15);
        }
    }

    #[test]
    fn double_application_is_refused() {
        let once = map_field(FrameMap { direction: TO_NR, omega: 1.0 }, &sinusoidal_momentum()).unwrap();
        assert!(matches!(map_field(FrameMap { direction: TO_NR, omega: 1.0 }, &once), Err(TransformError::AlreadyInFrame(_))));
        let phys = physical_map(&sinusoidal_momentum(), true).unwrap();
        assert!(matches!(physical_map(&phys, true), Err(TransformError::AlreadyInVelocity(true))));
    }

    #[test]
    fn sinusoidal_momentum_in_the_nonrotating_frame() {
        let nr = map_field(FrameMap { direction: TO_NR, omega: 1.0 }, &sinusoidal_momentum()).unwrap();
        let (t, th, ph) = (0.8, 0.6, 1.4);
        let (u, v) = nr.velocity(t, th, ph).unwrap();
        let lon = ph;
        assert!((u - lon.sin()).abs() < 1e-14);
        assert!((v - 2.0 * lon.cos() / (2.0 * th).sin()).abs() < 1e-14);
        let (r1, r2) = pde_residual(&nr, Regime::Full, t, th, ph, 1e-4).unwrap();
        assert!(r1.abs() < 1e-6 && r2.abs() < 1e-6);
    }

    #[test]
    fn physical_state_example() {
        let s = State::new(0.0, PI / 6.0, 0.0, 0.3, 0.4);
        let p = physical_state(&s, true).unwrap();
        assert_eq!(p.u, 0.3);
        assert!((p.v - 0.2).abs() < 1e-16);
    }

    #[test]
    fn coriolis_solution_survives_physical_map() {
        let f = SolutionField::new(
            Family::StationaryCoriolis { phi: Expr::c(1.0) + (Expr::c(2.0) * Expr::var(0)).cos(), branch: 1.0 },
            1.0,
            Regime::Coriolis,
        );
        let p = physical_map(&f, true).unwrap();
        assert_eq!(p.regime, Regime::PhysCoriolis);
        let (r1, r2) = pde_residual(&p, Regime::PhysCoriolis, 0.3, 0.5, 0.2, 1e-4).unwrap();
        assert!(r1.abs() < 1e-6 && r2.abs() < 1e-6);
    }

    #[test]
    fn rapid_pair_is_not_related() {
        let (r2, mismatch) = rapid_non_equivalence(0.5, 0.2, 0.7, 1.0, 0.0, 1e-4).unwrap();
        assert!((r2 - mismatch).abs() < 1e-8);
        assert!(r2.abs() > 1e-3);
    }

    #[test]
    fn shift_on_rest_state() {
        let rest = SolutionField::new(Family::Constant { u: 0.0, v: 0.0 }, 0.6, Regime::Full).in_frame(Frame::NonRotating);
        let rot = phi_independent_shift(FrameMap { direction: TO_R, omega: 0.6 }, &rest, 0.0, &[0.5, 1.5]).unwrap();
        assert_eq!(rot.velocity(1.0, 0.9, 2.0).unwrap(), (0.0, -0.6));
        let back = phi_independent_shift(FrameMap { direction: TO_NR, omega: 0.6 }, &rot, 0.0, &[0.5]).unwrap();
        assert_eq!(back.velocity(1.0, 0.9, 2.0).unwrap(), (0.0, 0.0));
        assert!(matches!(
            phi_independent_shift(FrameMap { direction: TO_NR, omega: 1.0 }, &sinusoidal_momentum(), 0.0, &[0.5]),
            Err(TransformError::NotPhiIndependent { .. })
        ));
    }

    #[test]
    fn constant_axial_momentum_images() {
        let ((ul, vl), (um, vm)) = constant_axial_momentum_comparison(3.0, 0.8, 1.1).unwrap();
        let s = 1.1f64.sin();
        assert_eq!((ul, vl), (3f64.sqrt(), 0.0));
        assert!((um - (3.0 - 0.64 / (s * s)).sqrt()).abs() < 1e-15);
        assert!((vm - 0.8 / (s * s)).abs() < 1e-15);
    }

    #[test]
    fn periodicity_of_rotating_families() {
        let pts = [(0.7, 0.3), (2.1, 5.0)];
        assert!(periodicity_check(&sinusoidal_momentum(), 1.0, 0.2, &pts).unwrap() < 1e-12);
        let rest = SolutionField::new(Family::Constant { u: 0.0, v: -0.5 }, 0.5, Regime::Full);
        assert_eq!(periodicity_check(&rest, 0.5, 0.0, &pts).unwrap(), 0.0);
    }

    #[test]
    fn physical_map_conjugates_characteristics() {
        let s = State::new(0.0, 1.1, 0.2, 0.3, -0.2);
        let times: Vec<f64> = (1..=5).map(|k| k as f64).collect();
        assert!(characteristic_conjugacy(s, 0.6, &times, 1e-11).unwrap() < 1e-7);
    }
}
