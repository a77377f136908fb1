//! Solutions with `v = −ω` in the full and Coriolis regimes. Both reduce
//! the system to one scalar equation for `u`, solved here pointwise through
//! an implicit relation with an arbitrary function of `φ + ωt`.

use crate::elliptic::{self, EllipticError};
use crate::euler::{EulerError, VelocityField, THETA_GUARD};
use crate::expr::Expr;
use crate::ode::{self, OdeOptions, Termination};
use crate::quad;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("no root of the implicit relation in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("implicit relation has {} roots: {roots:?}", roots.len())]
    MultipleRoots { roots: Vec<f64> },
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("pendulum integration failed: {0}")]
    Ode(String),
}

/// Bracket scanned for roots, sampled uniformly in `asinh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootScan {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for RootScan {
    fn default() -> Self {
        RootScan { lo: -1e6, hi: 1e6, samples: 4000 }
    }
}

fn scan_roots<G: Fn(f64) -> f64>(g: &G, xs: &[f64]) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in xs {
        let gx = g(x);
        if !gx.is_finite() {
            prev = None;
            continue;
        }
        if gx == 0.0 {
            roots.push(x);
            prev = None;
            continue;
        }
        if let Some((x0, g0)) = prev {
            if g0.signum() != gx.signum() {
                if let Ok(r) = quad::brent(g, x0, x, 0.0) {
                    roots.push(r);
                }
            }
        }
        prev = Some((x, gx));
    }
    roots
}

fn sinh_grid(scan: &RootScan) -> Vec<f64> {
    let (a, b) = (scan.lo.asinh(), scan.hi.asinh());
    (0..=scan.samples).map(|i| (a + (b - a) * i as f64 / scan.samples as f64).sinh()).collect()
}

fn unique(roots: Vec<f64>, lo: f64, hi: f64) -> Result<f64, ReductionError> {
    match roots.len() {
        0 => Err(ReductionError::NoRoot { lo, hi }),
        1 => Ok(roots[0]),
        _ => Err(ReductionError::MultipleRoots { roots }),
    }
}

/// `u` from `θ − ut − Φ(u, φ + ωt) = 0`, the implicit form of the inviscid
/// Burgers equation `u_t + u u_θ − ω u_φ = 0`. `phi` takes `u` as variable 0
/// and the advected longitude as variable 1.
pub fn hopf_solve(phi: &Expr, t: f64, theta: f64, lon: f64, omega: f64, scan: &RootScan) -> Result<f64, ReductionError> {
    let psi = lon + omega * t;
    let g = |u: f64| theta - u * t - phi.eval(&[u, psi]);
    let dg = |u: f64| -t - phi.deriv(&[u, psi], 0);
    let root = unique(scan_roots(&g, &sinh_grid(scan)), scan.lo, scan.hi)?;
    // One Newton polish; keep it only if it improves the residual.
    let d = dg(root);
    if d != 0.0 && d.is_finite() {
        let polished = root - g(root) / d;
        if g(polished).abs() < g(root).abs() {
            return Ok(polished);
        }
    }
    Ok(root)
}

/// `t + ∂Φ/∂u`; the Hopf gradient blows up where this vanishes.
pub fn hopf_condition(phi: &Expr, t: f64, u: f64, lon: f64, omega: f64) -> f64 {
    t + phi.deriv(&[u, lon + omega * t], 0)
}

/// `max_{x ≤ θ} sin x`, which bounds the modulus admissible for `F(θ, k)`.
fn sine_ceiling(theta: f64) -> f64 {
    if theta <= FRAC_PI_2 {
        theta.sin()
    } else {
        1.0
    }
}

/// The conserved speed `ζ = √(u² + ω² sin²θ)` from
/// `−ζt + F(θ, ω/ζ) = Φ̃(ζ, φ + ωt)`, with `u = √(ζ² − ω² sin²θ) ≥ 0`.
/// `phi` takes `ζ` as variable 0 and the advected longitude as variable 1.
pub fn coriolis_reduced_solve(phi: &Expr, t: f64, theta: f64, lon: f64, omega: f64, zeta_max: f64, samples: usize) -> Result<f64, ReductionError> {
    check_theta(theta)?;
    let psi = lon + omega * t;
    let zeta_min = omega.abs() * sine_ceiling(theta) * (1.0 + 1e-9);
    let g = |zeta: f64| match elliptic::ellint_f(theta, omega / zeta) {
        Ok(f) => -zeta * t + f.value - phi.eval(&[zeta, psi]),
        Err(_) => f64::NAN,
    };
    let (a, b) = ((zeta_min.max(1e-12)).ln(), zeta_max.ln());
    let xs: Vec<f64> = (0..=samples).map(|i| (a + (b - a) * i as f64 / samples as f64).exp()).collect();
    unique(scan_roots(&g, &xs), zeta_min, zeta_max)
}

fn check_theta(theta: f64) -> Result<(), ReductionError> {
    if theta > THETA_GUARD && theta < PI - THETA_GUARD {
        Ok(())
    } else {
        Err(ReductionError::Domain(format!("colatitude {theta} in the polar guard band")))
    }
}

/// Same relation written for the modulus `k = ω/ζ`:
/// `−ωt + k F(θ, k) = Φ̃ₖ(k, φ + ωt)`. Returns the smallest root in
/// `(0, 1/max sin)`.
pub fn modulus_solve(phi: &Expr, t: f64, theta: f64, lon: f64, omega: f64, samples: usize) -> Result<f64, ReductionError> {
    check_theta(theta)?;
    if omega <= 0.0 {
        return Err(ReductionError::Domain("modulus form needs ω > 0".into()));
    }
    let psi = lon + omega * t;
    let k_max = 1.0 / sine_ceiling(theta) - 1e-9;
    let g = |k: f64| match elliptic::ellint_f(theta, k) {
        Ok(f) => -omega * t + k * f.value - phi.eval(&[k, psi]),
        Err(_) => f64::NAN,
    };
    let xs: Vec<f64> = (1..=samples).map(|i| k_max * i as f64 / samples as f64).collect();
    scan_roots(&g, &xs).into_iter().next().ok_or(ReductionError::NoRoot { lo: 0.0, hi: k_max })
}

/// `u` recovered from the modulus.
pub fn speed_from_modulus(k: f64, theta: f64, omega: f64) -> f64 {
    omega / k * (1.0 - (k * theta.sin()).powi(2)).max(0.0).sqrt()
}

/// `F + k ∂F/∂k − ∂Φ̃ₖ/∂k`; `k_θ` blows up where this vanishes.
pub fn modulus_condition(phi: &Expr, t: f64, theta: f64, lon: f64, omega: f64, k: f64) -> Result<f64, ReductionError> {
    let f = elliptic::ellint_f(theta, k)?.value;
    let df = elliptic::ellint_f_dk(theta, k)?;
    Ok(f + k * df - phi.deriv(&[k, lon + omega * t], 0))
}

/// `u = ±√(Φ̃(φ + ωt) − ω² sin²θ)`, `v = −ω` in the Coriolis regime.
pub fn stationary_coriolis(phi: &Expr, branch: f64, t: f64, theta: f64, lon: f64, omega: f64) -> Result<(f64, f64), ReductionError> {
    let radicand = phi.eval(&[lon + omega * t]) - (omega * theta.sin()).powi(2);
    if radicand < 0.0 {
        return Err(ReductionError::Domain(format!("negative radicand {radicand:e}")));
    }
    Ok((branch.signum() * radicand.sqrt(), -omega))
}

/// `(∂_t − ω∂_φ)u + ∂_θ(½u² + ½ω² sin²θ)` by fourth-order central
/// differences; vanishes for any `v = −ω` Coriolis solution.
pub fn conservation_residual<F: VelocityField + ?Sized>(field: &F, t: f64, theta: f64, lon: f64, omega: f64, h: f64) -> Result<f64, EulerError> {
    let d = |g: &dyn Fn(f64) -> Result<f64, EulerError>| -> Result<f64, EulerError> {
        Ok((8.0 * (g(h)? - g(-h)?) - (g(2.0 * h)? - g(-2.0 * h)?)) / (12.0 * h))
    };
    let u_at = |t: f64, th: f64, ph: f64| field.velocity(t, th, ph.rem_euclid(TAU)).map(|(u, _)| u);
    let ut = d(&|e| u_at(t + e, theta, lon))?;
    let uph = d(&|e| u_at(t, theta, lon + e))?;
    let flux = d(&|e| {
        let th = theta + e;
        u_at(t, th, lon).map(|u| 0.5 * u * u + 0.5 * (omega * th.sin()).powi(2))
    })?;
    Ok(ut - omega * uph + flux)
}

/// Period of the meridional pendulum `θ'' = −ω² sin θ cos θ` released from
/// rest at `theta_max`, measured as four times the time to reach the pole.
pub fn pendulum_period(theta_max: f64, omega: f64) -> Result<f64, ReductionError> {
    if !(theta_max > 0.0 && theta_max < FRAC_PI_2) || omega == 0.0 {
        return Err(ReductionError::Domain("need 0 < θmax < π/2 and ω ≠ 0".into()));
    }
    let rhs = move |_t: f64, y: &[f64; 2]| [y[1], -omega * omega * y[0].sin() * y[0].cos()];
    let pole = |_: f64, y: &[f64; 2]| y[0];
    let opts = OdeOptions { rel_tol: 1e-13, abs_tol: 1e-14, ..OdeOptions::default() };
    let horizon = 10.0 * elliptic::complete_k(theta_max.sin())? / omega.abs();
    let sol = ode::integrate(rhs, 0.0, [theta_max, 0.0], horizon, &opts, &[&pole]).map_err(|e| ReductionError::Ode(e.to_string()))?;
    match sol.termination {
        Termination::Event(_) => Ok(4.0 * sol.last().0),
        Termination::Completed => Err(ReductionError::Ode("pole not reached".into())),
    }
}

/// `4K(sin θmax)/|ω|`.
pub fn pendulum_period_exact(theta_max: f64, omega: f64) -> Result<f64, ReductionError> {
    Ok(4.0 * elliptic::complete_k(theta_max.sin())? / omega.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{force, pde_residual, EulerError, Regime};

    struct Field<F: Fn(f64, f64, f64) -> Result<(f64, f64), EulerError>>(F, f64);
    impl<F: Fn(f64, f64, f64) -> Result<(f64, f64), EulerError>> VelocityField for Field<F> {
        fn velocity(&self, t: f64, th: f64, ph: f64) -> Result<(f64, f64), EulerError> {
            (self.0)(t, th, ph)
        }
        fn residual_omega(&self) -> f64 {
            self.1
        }
    }

    fn outside(t: f64, th: f64, ph: f64, e: ReductionError) -> EulerError {
        EulerError::OutsideField { t, theta: th, phi: ph, reason: e.to_string() }
    }

    #[test]
    fn hopf_linear_profile() {
        let phi = -Expr::var(0);
        let u = hopf_solve(&phi, 3.0, 1.2, 0.0, 0.5, &RootScan::default()).unwrap();
        assert!((u - 0.6).abs() < 1e-14);
        assert_eq!(hopf_condition(&phi, 1.0, u, 0.0, 0.5), 0.0);
    }

    #[test]
    fn hopf_cubic_has_three_roots_after_breaking() {
        let phi = Expr::var(0).powf(3.0) - Expr::c(2.0) * Expr::var(0);
        match hopf_solve(&phi, 1.0, 0.1, 0.0, 0.0, &RootScan::default()) {
            Err(ReductionError::MultipleRoots { roots }) => assert_eq!(roots.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hopf_field_solves_full_regime() {
        let phi = Expr::var(0) * Expr::c(0.5) + Expr::var(1).sin() * Expr::c(0.1);
        let omega = 0.7;
        let f = Field(
            move |t, th, ph| hopf_solve(&phi, t, th, ph, omega, &RootScan::default()).map(|u| (u, -omega)).map_err(|e| outside(t, th, ph, e)),
            omega,
        );
        let (r1, r2) = pde_residual(&f, Regime::Full, 0.4, 1.0, 0.8, 1e-3).unwrap();
        assert!(r1.abs() < 1e-8 && r2.abs() < 1e-8, "{r1} {r2}");
    }

    #[test]
    fn coriolis_reduction_solves_the_regime() {
        let phi = Expr::var(1).cos() * Expr::c(0.2) - Expr::var(0) * Expr::c(0.3);
        let omega = 0.8;
        let f = Field(
            move |t, th, ph| {
                coriolis_reduced_solve(&phi, t, th, ph, omega, 1e3, 2000)
                    .map(|z| ((z * z - (omega * th.sin()).powi(2)).sqrt(), -omega))
                    .map_err(|e| outside(t, th, ph, e))
            },
            omega,
        );
        let (r1, r2) = pde_residual(&f, Regime::Coriolis, 0.5, 1.0, 0.3, 1e-4).unwrap();
        assert!(r1.abs() < 1e-8 && r2.abs() < 1e-8, "{r1} {r2}");
        assert!(conservation_residual(&f, 0.5, 1.0, 0.3, omega, 1e-4).unwrap().abs() < 1e-8);
    }

    #[test]
    fn modulus_and_speed_forms_agree() {
        let omega = 0.9;
        let phi_zeta = Expr::var(1).sin() * Expr::c(0.1) + Expr::c(0.4);
        // Φ̃ₖ(k) = k Φ̃(ω/k) for a ζ-independent Φ̃.
        let phi_k = Expr::var(0) * phi_zeta.clone();
        let (t, th, ph) = (0.3, 0.7, 1.1);
        let zeta = coriolis_reduced_solve(&phi_zeta, t, th, ph, omega, 1e3, 4000).unwrap();
        let k = modulus_solve(&phi_k, t, th, ph, omega, 4000).unwrap();
        assert!((k - omega / zeta).abs() < 1e-12);
        let u = speed_from_modulus(k, th, omega);
        assert!((u * u + (omega * th.sin()).powi(2) - zeta * zeta).abs() < 1e-10);
    }

    #[test]
    fn modulus_field_is_advected() {
        let omega = 1.0;
        let phi = Expr::var(0) * (Expr::var(1).cos() * Expr::c(0.1) + Expr::c(0.5));
        let k_at = |t: f64, th: f64, ph: f64| modulus_solve(&phi, t, th, ph, omega, 4000).unwrap();
        let (t, th, ph, h) = (0.2, 0.9, 0.4, 1e-4);
        let d = |f: &dyn Fn(f64) -> f64| (f(h) - f(-h)) / (2.0 * h);
        let k = k_at(t, th, ph);
        let kt = d(&|e| k_at(t + e, th, ph));
        let kth = d(&|e| k_at(t, th + e, ph));
        let kph = d(&|e| k_at(t, th, ph + e));
        let speed = omega * (1.0 - (k * th.sin()).powi(2)).sqrt() / k;
        assert!((kt + speed * kth - omega * kph).abs() < 1e-7);
        assert!(modulus_condition(&phi, t, th, ph, omega, k).unwrap().is_finite());
    }

    #[test]
    fn stationary_family_solves_coriolis() {
        let phi = Expr::c(1.0) + (Expr::c(2.0) * Expr::var(0)).cos();
        let f = Field(
            move |t, th, ph| stationary_coriolis(&phi, 1.0, t, th, ph, 1.0).map_err(|e| outside(t, th, ph, e)),
            1.0,
        );
        let (r1, r2) = pde_residual(&f, Regime::Coriolis, 0.0, 0.5, 0.2, 1e-4).unwrap();
        assert!(r1.abs() < 1e-6 && r2.abs() < 1e-6);
    }

    #[test]
    fn pendulum_force_is_the_coriolis_force() {
        for &(th, om) in &[(0.3, 0.5), (1.0, 2.0)] {
            let (f1, _) = force(Regime::Coriolis, th, 0.4, -om, om).unwrap();
            assert!((f1 + om * om * th.sin() * th.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn pendulum_small_amplitude_limit() {
        let p = pendulum_period(1e-3, 2.0).unwrap();
        assert!((p - PI).abs() < 1e-6);
        let q = pendulum_period(1.0, 0.5).unwrap();
        assert!((q - pendulum_period_exact(1.0, 0.5).unwrap()).abs() < 1e-6);
    }
}
