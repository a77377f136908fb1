//! Closed-form velocity fields `(u, v)(t, θ, φ)` tagged with the regime and
//! frame in which they are claimed to solve the Euler system.

use crate::euler::{EulerError, Regime, VelocityField};
use crate::expr::Expr;
use crate::hodograph::{self, AngMomSpec, GridRow, HodographProblem, LinearCoeffs};
use crate::reduction::{self, RootScan};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Rotating,
    NonRotating,
}

impl Frame {
    pub fn other(self) -> Frame {
        match self {
            Frame::Rotating => Frame::NonRotating,
            Frame::NonRotating => Frame::Rotating,
        }
    }
}

fn default_zeta_max() -> f64 {
    1e3
}

fn default_samples() -> usize {
    4000
}

fn default_bracket() -> (f64, f64) {
    let d = RootScan::default();
    (d.lo, d.hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Constant { u: f64, v: f64 },
    /// Arbitrary expressions in `(t, θ, φ)`.
    Formula { u: Expr, v: Expr },
    AngularMomentum { spec: AngMomSpec },
    ConstantAxialMomentum { a: f64, branch: f64 },
    RapidStationary { c0: f64, a: f64 },
    /// `v = a − 2ω log sin θ` with `I₁ = value`.
    RapidCoriolisStationary { a: f64, value: f64 },
    /// `Φ̃` of the advected longitude.
    StationaryCoriolis { phi: Expr, branch: f64 },
    /// `Φ(u, φ + ωt)`.
    Hopf {
        phi: Expr,
        #[serde(default = "default_bracket")]
        bracket: (f64, f64),
    },
    /// `Φ̃(ζ, φ + ωt)`; `literal` uses `u = √(ζ − ω² sin²θ)` instead of `√(ζ² − ω² sin²θ)`.
    CoriolisReduced {
        phi: Expr,
        #[serde(default)]
        literal: bool,
        #[serde(default = "default_zeta_max")]
        zeta_max: f64,
    },
    /// `Φ̃ₖ(k, φ + ωt)`.
    Modulus {
        phi: Expr,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    HodographConst { c1: f64, c2: f64, sigma: f64 },
    HodographLinear { coeffs: LinearCoeffs, sigma: f64, branch: f64 },
    /// The inner field seen from the other frame.
    Mapped { inner: Box<SolutionField> },
    /// The inner field with `v ↦ v sin θ` (or its inverse).
    Physical { inner: Box<SolutionField> },
    /// The inner, `φ`-independent field with `v ↦ v ∓ ω`.
    Shifted { inner: Box<SolutionField> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionField {
    pub family: Family,
    /// Rotation rate of the sphere.
    pub omega: f64,
    pub regime: Regime,
    #[serde(default = "rotating")]
    pub frame: Frame,
}

fn rotating() -> Frame {
    Frame::Rotating
}

impl SolutionField {
    pub fn new(family: Family, omega: f64, regime: Regime) -> Self {
        SolutionField { family, omega, regime, frame: Frame::Rotating }
    }

    pub fn in_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Rotation rate seen in this field's own frame.
    pub fn frame_omega(&self) -> f64 {
        match self.frame {
            Frame::Rotating => self.omega,
            Frame::NonRotating => 0.0,
        }
    }

    fn outside(&self, t: f64, theta: f64, phi: f64, reason: impl ToString) -> EulerError {
        EulerError::OutsideField { t, theta, phi, reason: reason.to_string() }
    }

    /// Whether the field is defined at this point.
    pub fn valid(&self, t: f64, theta: f64, phi: f64) -> bool {
        self.velocity(t, theta, phi).is_ok()
    }

    /// Hodograph relations solved by this field, for fields that have them.
    /// For the linear family the sign is taken at the given point.
    pub fn problem_at(&self, t: f64, theta: f64, phi: f64) -> Option<HodographProblem> {
        let omega = self.frame_omega();
        match &self.family {
            Family::HodographConst { c1, c2, sigma } => Some(HodographProblem::TimeIntegral {
                phi1: Expr::c(*c1),
                phi2: Expr::c(*c2),
                omega,
                sigma: *sigma,
            }),
            Family::HodographLinear { coeffs, sigma, branch } => {
                let root = hodograph::family_linear(coeffs, *branch, *sigma, t, theta, phi, omega).ok()?;
                let (phi1, phi2) = coeffs.momentum_exprs();
                Some(HodographProblem::TimeIntegral { phi1, phi2, omega, sigma: root.sigma })
            }
            Family::AngularMomentum { spec } => spec.problem(omega),
            _ => None,
        }
    }

    /// `det M` for hodograph families, `None` elsewhere or off the domain.
    pub fn det_m(&self, t: f64, theta: f64, phi: f64) -> Option<f64> {
        let p = self.problem_at(t, theta, phi)?;
        let (u, v) = self.velocity(t, theta, phi).ok()?;
        hodograph::det_m(&p, t, theta, phi, u, v).ok()
    }

    /// Field values on a `(θ, φ)` tensor grid at time `t`, `θ` outermost.
    pub fn grid(&self, t: f64, thetas: &[f64], phis: &[f64]) -> Vec<GridRow> {
        let points: Vec<(f64, f64)> = thetas.iter().flat_map(|&th| phis.iter().map(move |&ph| (th, ph))).collect();
        points
            .par_iter()
            .map(|&(theta, phi)| match self.velocity(t, theta, phi) {
                Ok((u, v)) => GridRow { theta, phi, u, v, det_m: self.det_m(t, theta, phi).unwrap_or(f64::NAN), valid: true },
                Err(_) => GridRow { theta, phi, u: f64::NAN, v: f64::NAN, det_m: f64::NAN, valid: false },
            })
            .collect()
    }
}

impl VelocityField for SolutionField {
    fn velocity(&self, t: f64, theta: f64, phi: f64) -> Result<(f64, f64), EulerError> {
        let omega = self.frame_omega();
        let err = |e: &dyn ToString| self.outside(t, theta, phi, e.to_string());
        match &self.family {
            Family::Constant { u, v } => Ok((*u, *v)),
            Family::Formula { u, v } => {
                let x = [t, theta, phi];
                let out = (u.eval(&x), v.eval(&x));
                if out.0.is_finite() && out.1.is_finite() {
                    Ok(out)
                } else {
                    Err(err(&"formula not finite"))
                }
            }
            Family::AngularMomentum { spec } => hodograph::family_angmom(spec, t, theta, phi, omega).map_err(|e| err(&e)),
            Family::ConstantAxialMomentum { a, branch } => {
                hodograph::constant_l3_solution(*a, omega, theta, *branch).map_err(|e| err(&e))
            }
            Family::RapidStationary { c0, a } => hodograph::rapid_stationary(*c0, *a, theta, omega).map_err(|e| err(&e)),
            Family::RapidCoriolisStationary { a, value } => {
                hodograph::rapid_coriolis_stationary(*a, *value, theta, omega).map_err(|e| err(&e))
            }
            Family::StationaryCoriolis { phi: f, branch } => {
                reduction::stationary_coriolis(f, *branch, t, theta, phi, omega).map_err(|e| err(&e))
            }
            Family::Hopf { phi: f, bracket } => {
                let scan = RootScan { lo: bracket.0, hi: bracket.1, ..RootScan::default() };
                reduction::hopf_solve(f, t, theta, phi, omega, &scan).map(|u| (u, -omega)).map_err(|e| err(&e))
            }
            Family::CoriolisReduced { phi: f, literal, zeta_max } => {
                let zeta = reduction::coriolis_reduced_solve(f, t, theta, phi, omega, *zeta_max, 2000).map_err(|e| err(&e))?;
                let centrifugal = (omega * theta.sin()).powi(2);
                let radicand = if *literal { zeta - centrifugal } else { zeta * zeta - centrifugal };
                if radicand < 0.0 {
                    return Err(err(&"negative radicand"));
                }
                Ok((radicand.sqrt(), -omega))
            }
            Family::Modulus { phi: f, samples } => {
                let k = reduction::modulus_solve(f, t, theta, phi, omega, *samples).map_err(|e| err(&e))?;
                Ok((reduction::speed_from_modulus(k, theta, omega), -omega))
            }
            Family::HodographConst { c1, c2, sigma } => {
                hodograph::family_const(*c1, *c2, *sigma, t, theta, omega).map_err(|e| err(&e))
            }
            Family::HodographLinear { coeffs, sigma, branch } => {
                let root = hodograph::family_linear(coeffs, *branch, *sigma, t, theta, phi, omega).map_err(|e| err(&e))?;
                if root.is_flow() {
                    Ok((root.u, root.v))
                } else {
                    Err(err(&"root solves the relations with the opposite sign of u"))
                }
            }
            Family::Mapped { inner } => match self.frame {
                Frame::Rotating => {
                    let (u, v) = inner.velocity(t, theta, phi + self.omega * t)?;
                    Ok((u, v - self.omega))
                }
                Frame::NonRotating => {
                    let (u, v) = inner.velocity(t, theta, phi - self.omega * t)?;
                    Ok((u, v + self.omega))
                }
            },
            Family::Physical { inner } => {
                let (u, v) = inner.velocity(t, theta, phi)?;
                let s = theta.sin();
                if self.regime.physical() {
                    Ok((u, v * s))
                } else if s == 0.0 {
                    Err(EulerError::Pole { theta })
                } else {
                    Ok((u, v / s))
                }
            }
            Family::Shifted { inner } => {
                let (u, v) = inner.velocity(t, theta, phi)?;
                match self.frame {
                    Frame::Rotating => Ok((u, v - self.omega)),
                    Frame::NonRotating => Ok((u, v + self.omega)),
                }
            }
        }
    }

    fn residual_omega(&self) -> f64 {
        self.frame_omega()
    }
}

/// `n` points spaced evenly on the open interval `(a, b)`, endpoints excluded.
pub fn open_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect()
}

/// `n` points spaced evenly on `[a, b)`.
pub fn periodic_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::pde_residual;
    use std::f64::consts::{PI, TAU};

    fn sinusoidal_momentum() -> SolutionField {
        let spec = AngMomSpec::Linear { coeffs: LinearCoeffs { a1: 1.0, b1: 0.0, a2: 0.0, b2: 0.0 } };
        SolutionField::new(Family::AngularMomentum { spec }, 1.0, Regime::Full)
    }

    #[test]
    fn registered_families_solve_their_regimes() {
        let lin = LinearCoeffs { a1: 0.3, b1: 0.1, a2: -0.2, b2: 0.25 };
        let fields = vec![
            sinusoidal_momentum(),
            SolutionField::new(Family::ConstantAxialMomentum { a: 3.0, branch: 1.0 }, 0.8, Regime::Full),
            SolutionField::new(Family::HodographConst { c1: 0.3, c2: 0.2, sigma: 1.0 }, 0.5, Regime::Full),
            SolutionField::new(Family::HodographLinear { coeffs: lin, sigma: 1.0, branch: 1.0 }, 0.5, Regime::Full),
            SolutionField::new(Family::Hopf { phi: -Expr::var(0) * Expr::c(0.5), bracket: (-1e3, 1e3) }, 0.6, Regime::Full),
            SolutionField::new(Family::RapidStationary { c0: 0.5, a: 0.2 }, 0.7, Regime::Rapid),
            SolutionField::new(Family::RapidCoriolisStationary { a: 0.1, value: 0.3 }, 0.7, Regime::RapidCoriolis),
            SolutionField::new(
                Family::StationaryCoriolis { phi: Expr::c(1.0) + (Expr::c(2.0) * Expr::var(0)).cos(), branch: 1.0 },
                1.0,
                Regime::Coriolis,
            ),
        ];
        for f in &fields {
            let mut checked = 0;
            for &(t, th, ph) in &[(0.4, 2.0, 0.3), (1.3, 1.9, 2.0), (0.7, 2.3, 4.0), (1.1, 0.9, 5.5)] {
                if !f.valid(t, th, ph) {
                    continue;
                }
                let Ok((r1, r2)) = pde_residual(f, f.regime, t, th, ph, 1e-4) else { continue };
                assert!(r1.abs() < 1e-6 && r2.abs() < 1e-6, "{:?}: {r1} {r2}", f.family);
                checked += 1;
            }
            assert!(checked > 0, "{:?} never valid", f.family);
        }
    }

    #[test]
    fn sinusoidal_momentum_closed_form() {
        let f = sinusoidal_momentum();
        let (u, v) = f.velocity(0.0, 0.6, 1.2).unwrap();
        assert!((u - 1.2f64.sin()).abs() < 1e-15);
        assert!((v - (2.0 * 1.2f64.cos() / 1.2f64.sin() - 1.0)).abs() < 1e-14);
        assert!(!f.valid(0.0, PI / 2.0, 1.0));
        assert!(f.det_m(0.0, 0.6, 1.2).is_some());
    }

    #[test]
    fn grid_marks_invalid_points() {
        let f = sinusoidal_momentum();
        let rows = f.grid(0.0, &[1.0, PI / 2.0], &periodic_grid(0.0, TAU, 4));
        assert_eq!(rows.len(), 8);
        assert!(rows[..4].iter().all(|r| r.valid));
        assert!(rows[4..].iter().all(|r| !r.valid && r.u.is_nan()));
    }

    #[test]
    fn serde_round_trip() {
        let f = SolutionField::new(Family::Hopf { phi: -Expr::var(0), bracket: (-10.0, 10.0) }, 0.5, Regime::Full);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<SolutionField>(&s).unwrap(), f);
        let bad = s.replace("\"omega\"", "\"omegaa\"");
        assert!(serde_json::from_str::<SolutionField>(&bad).is_err());
    }
}
