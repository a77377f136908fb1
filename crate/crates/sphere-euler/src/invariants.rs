//! Integrals of the characteristic systems, regime by regime.
//!
//! Several integrals contain inverse trigonometric or elliptic amplitudes
//! that are only defined modulo a period. Along a trajectory those phases
//! are made continuous with a caller-owned [`BranchLedger`]; without a ledger
//! the principal branch is used.

use crate::elliptic::{self, EllipticError};
use crate::euler::{Regime, State};
use crate::quad::{self, QuadError};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("turning point reached at theta = {theta}")]
    TurningPoint { theta: f64 },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

fn domain(msg: impl Into<String>) -> InvariantError {
    InvariantError::Domain(msg.into())
}

/// Trajectory-local memory of the last value of each multivalued phase.
#[derive(Debug, Clone, Default)]
pub struct BranchLedger {
    prev: HashMap<&'static str, f64>,
}

impl BranchLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shift `raw` by a multiple of `period` to land closest to the last
    /// value recorded under `slot`, then record it.
    pub fn unwrap(&mut self, slot: &'static str, raw: f64, period: f64) -> f64 {
        let v = match self.prev.get(slot) {
            Some(&p) => raw + period * ((p - raw) / period).round(),
            None => raw,
        };
        self.prev.insert(slot, v);
        v
    }
}

fn unwrap_opt(ledger: &mut Option<&mut BranchLedger>, slot: &'static str, raw: f64, period: f64) -> f64 {
    match ledger {
        Some(l) => l.unwrap(slot, raw, period),
        None => raw,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSet {
    pub regime: Regime,
    pub values: Vec<(&'static str, f64)>,
}

impl InvariantSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.values.iter().map(|(n, _)| *n).collect()
    }
}

fn check_theta(theta: f64) -> Result<(f64, f64), InvariantError> {
    let (s, c) = theta.sin_cos();
    if !(theta > 0.0 && theta < PI) || s <= 0.0 {
        return Err(domain(format!("colatitude {theta} outside (0, π)")));
    }
    Ok((s, c))
}

/// Angular-momentum components, energy and the two time-like integrals of
/// the full system.
pub fn full_integrals(
    s: &State,
    omega: f64,
    sigma: f64,
    mut ledger: Option<&mut BranchLedger>,
) -> Result<InvariantSet, InvariantError> {
    let (sn, cs) = check_theta(s.theta)?;
    let phase = s.phi_unwrapped() + omega * s.t;
    let (sp, cp) = phase.sin_cos();
    let w = s.v + omega;
    let l1 = -sn * cs * cp * w - sp * s.u;
    let l2 = -sn * cs * sp * w + cp * s.u;
    let l3 = sn * sn * w;
    let h = 0.5 * (s.u * s.u + sn * sn * w * w);
    let mut values = vec![("L1", l1), ("L2", l2), ("L3", l3), ("H", h), ("sigma", sigma)];
    if h <= 0.0 {
        return Err(domain("2H = 0, time-like integrals undefined"));
    }
    let r = (2.0 * h).sqrt();
    let denom = s.u * s.u + sn * sn * cs * cs * w * w;
    // Uniform rotation along the equator has a phase circle of zero radius.
    let degenerate = cs * cs + (sn * s.u / r).powi(2) < 1e-24;
    let q_arg = if degenerate { 0.0 } else { cs * (2.0 * h / denom).sqrt() };
    if q_arg.abs() > 1.0 + 1e-12 || !q_arg.is_finite() {
        return Err(domain(format!("arcsin argument {q_arg} outside [-1, 1]")));
    }
    let q = q_arg.clamp(-1.0, 1.0).asin();
    values.push(("Q", q));

    // Phase of the great-circle motion: (s·u/R, cos θ) rotates clockwise at rate R.
    let psi = if degenerate { 0.0 } else { cs.atan2(sn * s.u / r + 0.0) };
    let psi = if sigma >= 0.0 {
        psi
    } else if psi >= 0.0 {
        psi - PI
    } else {
        psi + PI
    };
    let psi = unwrap_opt(&mut ledger, "full_psi", psi, TAU);
    let i1 = s.t + psi / r;
    values.push(("I1", i1));

    let k = l3 / r;
    // Continuous arctan(K tan ψ): add the branch jumps at ψ = π/2 mod π.
    let turns = if k == 0.0 { 0.0 } else { k.signum() * (psi / PI).round() };
    let a = (k * psi.tan()).atan() + turns * PI;
    let x = r * i1;
    let b = (sigma * k * x.sin()).atan2(x.cos());
    values.push(("I2", phase + a - b));
    Ok(InvariantSet { regime: Regime::Full, values })
}

/// Roots `A₋ ≤ A₊` of `−ω²y² + by + c = 0` for the Coriolis regime.
pub fn coriolis_roots(h: f64, l3: f64, omega: f64) -> Result<(f64, f64), InvariantError> {
    if omega == 0.0 {
        return Err(domain("rotation rate must be nonzero"));
    }
    let w2 = omega * omega;
    let b = 2.0 * w2 - 2.0 * h - 2.0 * omega * l3;
    let c = 2.0 * h + 2.0 * omega * l3 - l3 * l3 - w2;
    let disc = b * b + 4.0 * w2 * c;
    if disc < 0.0 {
        return Err(domain("complex roots"));
    }
    let sq = disc.sqrt();
    // Cancellation-free pair.
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let (r1, r2) = if q != 0.0 { (q / (-w2), c / q) } else { ((b + sq) / (2.0 * w2), (b - sq) / (2.0 * w2)) };
    Ok((r1.min(r2), r1.max(r2)))
}

/// Energy, axial momentum, the quartic roots and the two elliptic integrals
/// of the Coriolis regime.
pub fn coriolis_integrals(
    s: &State,
    omega: f64,
    mut ledger: Option<&mut BranchLedger>,
) -> Result<InvariantSet, InvariantError> {
    let (sn, x) = check_theta(s.theta)?;
    let h = 0.5 * (s.u * s.u + sn * sn * s.v * s.v);
    let l3 = sn * sn * (s.v + omega);
    if h <= 0.0 {
        return Err(domain("H must be positive"));
    }
    let (am, ap) = coriolis_roots(h, l3, omega)?;
    if ap <= 0.0 {
        return Err(domain("A+ must be positive"));
    }
    let mut values = vec![("H", h), ("L3", l3), ("A_plus", ap), ("A_minus", am)];
    let kk = ((ap - am) / ap).sqrt();
    values.push(("k", kk));
    let wa = omega.abs();
    let x2 = x * x;
    let phi = s.phi_unwrapped();
    let (p, n) = if am < 0.0 {
        // k > 1: amplitude ψ with cos ψ = x/√A₊, reciprocal modulus 1/k.
        let psi = (sn * s.u / (wa * (x2 - am).sqrt()) + 0.0).atan2(x);
        let psi = unwrap_opt(&mut ledger, "coriolis_psi", psi, TAU);
        let f = elliptic::ellint_f(psi, 1.0 / kk)?.value;
        let p = f / kk - wa * ap.sqrt() * s.t;
        let n = if l3 == 0.0 {
            phi + omega * s.t
        } else {
            let pi = elliptic::ellint_pi(psi, ap / (ap - 1.0), 1.0 / kk)?.value;
            phi + omega * s.t - l3 * pi / (wa * (ap - am).sqrt() * (1.0 - ap))
        };
        (p, n)
    } else if am > 0.0 {
        // k < 1: x² = A₊ − (A₊ − A₋) sin²ψ with ψ increasing.
        let two_psi = (2.0 * x.signum() * sn * s.u / wa + 0.0).atan2(2.0 * x2 - ap - am);
        let two_psi = unwrap_opt(&mut ledger, "coriolis_2psi", two_psi, TAU);
        let psi = 0.5 * two_psi;
        let f = elliptic::ellint_f(psi, kk)?.value;
        let p = f - wa * ap.sqrt() * s.t;
        let alpha2 = (ap - am) / (ap - 1.0);
        let pi = elliptic::ellint_pi(psi, alpha2, kk)?.value;
        let n = phi + omega * s.t - l3 * pi / (wa * ap.sqrt() * (1.0 - ap));
        (p, n)
    } else {
        return Err(domain("separatrix: A- = 0 gives modulus 1"));
    };
    values.push(("P", p));
    values.push(("N", n));
    Ok(InvariantSet { regime: Regime::Coriolis, values })
}

/// Motion of `θ` under `θ'² = ω²(k + sin²θ)` shared by both rapid regimes.
#[derive(Debug, Clone, Copy)]
struct RapidOrbit {
    k: f64,
    i3: f64,
    omega: f64,
    sign_u: f64,
}

impl RapidOrbit {
    fn new(
        theta: f64,
        u: f64,
        t: f64,
        omega: f64,
        ledger: &mut Option<&mut BranchLedger>,
    ) -> Result<Self, InvariantError> {
        let (sn, cs) = check_theta(theta)?;
        if omega == 0.0 {
            return Err(domain("rotation rate must be nonzero"));
        }
        let i1 = 0.5 * u * u - 0.5 * omega * omega * sn * sn;
        let k = 2.0 * i1 / (omega * omega);
        let sign_u = if u >= 0.0 { 1.0 } else { -1.0 };
        let i3 = if k < 0.0 {
            // cos θ = κ sn(I3 − ωt, κ), u/ω = κ cn(I3 − ωt, κ), κ = √(1+k).
            let kappa = (1.0 + k).sqrt();
            let beta = cs.atan2(u / omega + 0.0);
            let beta = unwrap_opt(ledger, "rapid_beta", beta, TAU);
            elliptic::ellint_f(beta, kappa)?.value + omega * t
        } else if k > 0.0 {
            // sin θ = cn(√(1+k)(I3 − s_u|ω|t), 1/√(1+k)).
            let r = (1.0 + k).sqrt();
            let chi = FRAC_PI_2 - theta;
            elliptic::ellint_f(chi, 1.0 / r)?.value / r + sign_u * omega.abs() * t
        } else {
            return Err(domain("k = 0 separatrix"));
        };
        Ok(Self { k, i3, omega, sign_u })
    }

    /// `sin θ` at trajectory time `tau`.
    fn sin_theta(&self, tau: f64) -> f64 {
        if self.k < 0.0 {
            let kappa = (1.0 + self.k).sqrt();
            elliptic::jacobi_sn_cn_dn(self.i3 - self.omega * tau, kappa).2
        } else {
            let r = (1.0 + self.k).sqrt();
            let arg = r * (self.i3 - self.sign_u * self.omega.abs() * tau);
            elliptic::jacobi_sn_cn_dn(arg, 1.0 / r).1
        }
    }
}

fn time_integral<F: Fn(f64) -> f64>(f: F, t: f64) -> Result<f64, InvariantError> {
    Ok(quad::integrate(f, 0.0, t, 1e-12, 1e-12)?)
}

/// Integrals of the rapid-rotation regime with centrifugal force.
pub fn rapid_integrals(
    s: &State,
    omega: f64,
    mut ledger: Option<&mut BranchLedger>,
) -> Result<InvariantSet, InvariantError> {
    let (sn, _) = check_theta(s.theta)?;
    let i1 = 0.5 * s.u * s.u - 0.5 * omega * omega * sn * sn;
    let i2 = s.v + 2.0 * omega * sn.ln();
    let orbit = RapidOrbit::new(s.theta, s.u, s.t, omega, &mut ledger)?;
    let log_int = time_integral(|tau| orbit.sin_theta(tau).powi(2).ln(), s.t)?;
    let i4 = s.phi_unwrapped() - i2 * s.t + omega * log_int;
    Ok(InvariantSet {
        regime: Regime::Rapid,
        values: vec![("I1", i1), ("I2", i2), ("I3", orbit.i3), ("I4", i4), ("k", orbit.k)],
    })
}

/// Integrals of the rapid-rotation regime in physical velocities.
pub fn physical_rapid_integrals(
    s: &State,
    omega: f64,
    mut ledger: Option<&mut BranchLedger>,
) -> Result<InvariantSet, InvariantError> {
    let (sn, _) = check_theta(s.theta)?;
    let i1 = 0.5 * s.u * s.u - 0.5 * omega * omega * sn * sn;
    let i2 = s.v + 2.0 * omega * sn;
    let orbit = RapidOrbit::new(s.theta, s.u, s.t, omega, &mut ledger)?;
    let inv_int = time_integral(|tau| 1.0 / orbit.sin_theta(tau), s.t)?;
    let i4 = s.phi_unwrapped() + 2.0 * omega * s.t - i2 * inv_int;
    Ok(InvariantSet {
        regime: Regime::PhysRapid,
        values: vec![("I1", i1), ("I2", i2), ("I3", orbit.i3), ("I4", i4), ("k", orbit.k)],
    })
}

/// Libration of `θ` in the Coriolis-only rapid regime, where
/// `θ'² = U(θ) = 2I₁ + 2ω(ω + I₂ − ω log sin²θ) sin²θ`.
///
/// The orbit is parametrized by a phase `s` with
/// `θ = mid + half·sin s`, which runs uniformly through turning points.
#[derive(Debug, Clone, Copy)]
pub struct LibrationOrbit {
    pub i1: f64,
    pub i2: f64,
    pub omega: f64,
    pub theta_low: f64,
    pub theta_high: f64,
    derivs_low: (f64, f64),
    derivs_high: (f64, f64),
    pub period: f64,
    log_period: f64,
}

impl LibrationOrbit {
    fn potential(i1: f64, i2: f64, omega: f64, theta: f64) -> f64 {
        let s2 = theta.sin().powi(2);
        2.0 * i1 + 2.0 * omega * (omega + i2 - omega * s2.ln()) * s2
    }

    /// First and second θ-derivatives of the potential.
    fn potential_derivs(&self, theta: f64) -> (f64, f64) {
        // U = 2I₁ + G(q) with q = sin²θ.
        let q = theta.sin().powi(2);
        let (q1, q2) = ((2.0 * theta).sin(), 2.0 * (2.0 * theta).cos());
        let g1 = 2.0 * self.omega * (self.omega + self.i2) - 2.0 * self.omega * self.omega * (q.ln() + 1.0);
        let g2 = -2.0 * self.omega * self.omega / q;
        (g1 * q1, g2 * q1 * q1 + g1 * q2)
    }

    pub fn new(theta: f64, i1: f64, i2: f64, omega: f64) -> Result<Self, InvariantError> {
        if i1 >= 0.0 {
            return Err(domain("libration needs I1 < 0"));
        }
        let pot = |th: f64| Self::potential(i1, i2, omega, th);
        let root = |a: f64, b: f64| quad::bisect(pot, a, b).map_err(|_| InvariantError::TurningPoint { theta });
        // U is concave in sin²θ with its maximum at sin²θ = exp(I₂/ω), so the
        // allowed set within one hemisphere is a single interval.
        let peak = (i2 / omega).exp().min(1.0).sqrt().asin();
        if pot(peak).is_nan() || pot(peak) <= 0.0 {
            return Err(InvariantError::TurningPoint { theta });
        }
        let low = root(1e-150, peak)?;
        let (lo, hi) = if pot(FRAC_PI_2) < 0.0 {
            let high = root(peak, FRAC_PI_2)?;
            if theta <= FRAC_PI_2 {
                (low, high)
            } else {
                (PI - high, PI - low)
            }
        } else {
            (low, PI - low)
        };
        let mut orbit = Self {
            i1,
            i2,
            omega,
            theta_low: lo,
            theta_high: hi,
            derivs_low: (0.0, 0.0),
            derivs_high: (0.0, 0.0),
            period: 0.0,
            log_period: 0.0,
        };
        orbit.derivs_low = orbit.potential_derivs(lo);
        orbit.derivs_high = orbit.potential_derivs(hi);
        if !(orbit.derivs_low.0 > 0.0 && orbit.derivs_high.0 < 0.0) {
            return Err(InvariantError::TurningPoint { theta });
        }
        orbit.period = 2.0 * orbit.half_integral(|_| 1.0)?;
        orbit.log_period = 2.0 * orbit.half_integral(|th| th.sin().powi(2).ln())?;
        Ok(orbit)
    }

    fn mid_half(&self) -> (f64, f64) {
        (0.5 * (self.theta_low + self.theta_high), 0.5 * (self.theta_high - self.theta_low))
    }

    /// dt/ds.
    fn speed(&self, s: f64) -> f64 {
        let (mid, half) = self.mid_half();
        let sn = s.sin();
        if 1.0 - sn.abs() < 1e-6 {
            // Quadratic expansion of U about the nearby turning point, with
            // the common factor 1 ± sin s cancelled analytically.
            return if sn < 0.0 {
                let d = half * (1.0 + sn);
                let (u1, u2) = self.derivs_low;
                (half * (1.0 - sn) / (u1 + 0.5 * u2 * d)).sqrt()
            } else {
                let d = half * (1.0 - sn);
                let (u1, u2) = self.derivs_high;
                (half * (1.0 + sn) / (-u1 + 0.5 * u2 * d)).sqrt()
            };
        }
        let pot = Self::potential(self.i1, self.i2, self.omega, mid + half * sn);
        half * s.cos().abs() / pot.max(0.0).sqrt()
    }

    fn theta_at(&self, s: f64) -> f64 {
        let (mid, half) = self.mid_half();
        mid + half * s.sin()
    }

    fn integrate_phase<F: Fn(f64) -> f64>(&self, weight: F, a: f64, b: f64) -> Result<f64, InvariantError> {
        // The switch to the turning-point expansion leaves ~1e-10 relative
        // noise in the integrand, which caps the attainable tolerance.
        const TOL: f64 = 1e-10;
        let g = |s: f64| weight(self.theta_at(s)) * self.speed(s);
        // Split at the upper turning point so every panel is smooth.
        if a < FRAC_PI_2 && b > FRAC_PI_2 {
            Ok(quad::integrate(g, a, FRAC_PI_2, TOL, TOL)? + quad::integrate(g, FRAC_PI_2, b, TOL, TOL)?)
        } else {
            Ok(quad::integrate(g, a, b, TOL, TOL)?)
        }
    }

    fn half_integral<F: Fn(f64) -> f64>(&self, weight: F) -> Result<f64, InvariantError> {
        self.integrate_phase(weight, -FRAC_PI_2, FRAC_PI_2)
    }

    /// Phase in `[−π/2, 3π/2)` for a point of the orbit.
    pub fn raw_phase(&self, theta: f64, u: f64) -> f64 {
        let (mid, half) = self.mid_half();
        let sn = ((theta - mid) / half).clamp(-1.0, 1.0);
        let cs = (1.0 - sn * sn).sqrt() * if u >= 0.0 { 1.0 } else { -1.0 };
        let mut s = sn.atan2(cs);
        if s < -FRAC_PI_2 {
            s += TAU;
        }
        s
    }

    /// Time elapsed from phase −π/2 to the unwrapped phase `s`.
    pub fn time_at(&self, s: f64) -> Result<f64, InvariantError> {
        let n = ((s + FRAC_PI_2) / TAU).floor();
        let raw = s - n * TAU;
        Ok(n * self.period + self.integrate_phase(|_| 1.0, -FRAC_PI_2, raw)?)
    }

    fn log_at(&self, s: f64) -> Result<f64, InvariantError> {
        let n = ((s + FRAC_PI_2) / TAU).floor();
        let raw = s - n * TAU;
        Ok(n * self.log_period + self.integrate_phase(|th| th.sin().powi(2).ln(), -FRAC_PI_2, raw)?)
    }

    /// Unwrapped phase reached at elapsed time `tau`.
    pub fn phase_at_time(&self, tau: f64) -> Result<f64, InvariantError> {
        let n = (tau / self.period).floor();
        let r = tau - n * self.period;
        // Newton on the monotone map s ↦ time, safeguarded by bisection.
        let (mut lo, mut hi) = (-FRAC_PI_2, 3.0 * FRAC_PI_2);
        let mut s = -FRAC_PI_2 + TAU * r / self.period;
        for _ in 0..100 {
            let f = self.integrate_phase(|_| 1.0, -FRAC_PI_2, s)? - r;
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            if f.abs() < 1e-14 * self.period.max(1.0) {
                break;
            }
            let mut next = s - f / self.speed(s);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() < 1e-15 {
                s = next;
                break;
            }
            s = next;
        }
        Ok(s + n * TAU)
    }
}

/// Integrals of the rapid-rotation regime with Coriolis force only.
///
/// `I3 = √2 (t − τ(s))`, with `τ` the time elapsed along the libration from
/// the lower turning point to the current phase; `I4` removes the
/// accumulated azimuth `∫ (I₂ − ω log sin²θ) dτ` back to time zero.
pub fn rapid_coriolis_integrals(
    s: &State,
    omega: f64,
    mut ledger: Option<&mut BranchLedger>,
) -> Result<InvariantSet, InvariantError> {
    let (sn, _) = check_theta(s.theta)?;
    if omega == 0.0 {
        return Err(domain("rotation rate must be nonzero"));
    }
    let i1 = 0.5 * s.u * s.u - omega * (s.v + omega) * sn * sn;
    let i2 = s.v + 2.0 * omega * sn.ln();
    let orbit = LibrationOrbit::new(s.theta, i1, i2, omega)?;
    let phase = orbit.raw_phase(s.theta, s.u);
    let phase = unwrap_opt(&mut ledger, "libration_phase", phase, TAU);
    let elapsed = orbit.time_at(phase)?;
    let i3 = 2f64.sqrt() * (s.t - elapsed);
    let start = orbit.phase_at_time(elapsed - s.t)?;
    let log_int = orbit.log_at(phase)? - orbit.log_at(start)?;
    let i4 = s.phi_unwrapped() - i2 * s.t + omega * log_int;
    Ok(InvariantSet {
        regime: Regime::RapidCoriolis,
        values: vec![("I1", i1), ("I2", i2), ("I3", i3), ("I4", i4), ("period", orbit.period)],
    })
}

/// Invariant set for any regime that has one.
pub fn integrals_for(
    regime: Regime,
    s: &State,
    omega: f64,
    sigma: f64,
    ledger: Option<&mut BranchLedger>,
) -> Result<InvariantSet, InvariantError> {
    match regime {
        Regime::Full => full_integrals(s, omega, sigma, ledger),
        Regime::Coriolis => coriolis_integrals(s, omega, ledger),
        Regime::Rapid => rapid_integrals(s, omega, ledger),
        Regime::RapidCoriolis => rapid_coriolis_integrals(s, omega, ledger),
        Regime::PhysRapid => physical_rapid_integrals(s, omega, ledger),
        Regime::PhysFull | Regime::PhysCoriolis => {
            // Same integrals as the coordinate form after ṽ = v sin θ.
            let coord = State { v: s.v / s.theta.sin(), ..*s };
            let mut set = if regime == Regime::PhysFull {
                full_integrals(&coord, omega, sigma, ledger)?
            } else {
                coriolis_integrals(&coord, omega, ledger)?
            };
            set.regime = regime;
            Ok(set)
        }
    }
}

/// Names of the integrals that are algebraic in the state.
pub fn algebraic_names(regime: Regime) -> &'static [&'static str] {
    match regime {
        Regime::Full | Regime::PhysFull => &["L1", "L2", "L3", "H"],
        Regime::Coriolis | Regime::PhysCoriolis => &["H", "L3"],
        Regime::Rapid | Regime::RapidCoriolis | Regime::PhysRapid => &["I1", "I2"],
    }
}

/// Names of the integrals that involve elliptic functions or quadrature.
pub fn transcendental_names(regime: Regime) -> &'static [&'static str] {
    match regime {
        Regime::Full | Regime::PhysFull => &["I1", "I2"],
        Regime::Coriolis | Regime::PhysCoriolis => &["P", "N"],
        Regime::Rapid | Regime::RapidCoriolis | Regime::PhysRapid => &["I3", "I4"],
    }
}

/// Every quantity in the set that is constant along characteristics.
pub fn conserved_names(regime: Regime) -> Vec<&'static str> {
    let mut names = algebraic_names(regime).to_vec();
    names.extend(transcendental_names(regime));
    names
}

/// Lagrangian quantities of the Coriolis characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanicsSet {
    pub lagrangian: f64,
    pub p_theta: f64,
    pub p_phi: f64,
    /// Jacobi integral, computed as `p_θ u + p_φ v − 𝓛`.
    pub jacobi: f64,
    pub hamiltonian: f64,
}

pub fn mechanics(s: &State, omega: f64) -> Result<MechanicsSet, InvariantError> {
    let (sn, _) = check_theta(s.theta)?;
    let s2 = sn * sn;
    let lagrangian = 0.5 * (s.u * s.u + s2 * s.v * s.v) + omega * s2 * s.v;
    let p_theta = s.u;
    let p_phi = s2 * (s.v + omega);
    let jacobi = p_theta * s.u + p_phi * s.v - lagrangian;
    let hamiltonian = 0.5 * p_theta * p_theta + p_phi * p_phi / (2.0 * s2) - omega * p_phi + 0.5 * omega * omega * s2;
    Ok(MechanicsSet { lagrangian, p_theta, p_phi, jacobi, hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(t: f64, theta: f64, phi: f64, u: f64, v: f64) -> State {
        State::new(t, theta, phi, u, v)
    }

    #[test]
    fn equatorial_state() {
        let set = full_integrals(&st(0.0, FRAC_PI_2, 0.0, 0.0, 1.0), 0.0, 1.0, None).unwrap();
        assert!(set.get("L1").unwrap().abs() < 1e-16);
        assert!(set.get("L2").unwrap().abs() < 1e-16);
        assert_eq!(set.get("L3").unwrap(), 1.0);
        assert_eq!(set.get("H").unwrap(), 0.5);
        assert_eq!(set.get("Q").unwrap(), 0.0);
        assert_eq!(set.get("I1").unwrap(), 0.0);
    }

    #[test]
    fn angular_momentum_identities() {
        let s = st(0.7, 1.1, 0.4, 0.3, -0.2);
        let om = 0.5;
        let set = full_integrals(&s, om, 1.0, None).unwrap();
        let (l1, l2, l3, h) = (set.get("L1").unwrap(), set.get("L2").unwrap(), set.get("L3").unwrap(), set.get("H").unwrap());
        assert!((l1 * l1 + l2 * l2 + l3 * l3 - 2.0 * h).abs() < 1e-15);
        let ph = 0.4 + om * 0.7;
        let rel = ph.cos() * l1 + ph.sin() * l2 + 1.1f64.cos() / 1.1f64.sin() * l3;
        assert!(rel.abs() < 1e-15);
    }

    #[test]
    fn time_integral_matches_arcsin_form_on_its_branch() {
        for &(u, sigma) in &[(0.4, 1.0), (-0.4, -1.0)] {
            let s = st(0.3, 1.2, 0.1, u, 0.25);
            let om = 0.8;
            let set = full_integrals(&s, om, sigma, None).unwrap();
            let r = (2.0 * set.get("H").unwrap()).sqrt();
            let expected = s.t + sigma * set.get("Q").unwrap() / r;
            assert!((set.get("I1").unwrap() - expected).abs() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn coriolis_roots_example() {
        let s = st(0.0, FRAC_PI_2, 0.0, 0.5, 0.0);
        let set = coriolis_integrals(&s, 1.0, None).unwrap();
        assert!((set.get("H").unwrap() - 0.125).abs() < 1e-15);
        assert!((set.get("L3").unwrap() - 1.0).abs() < 1e-15);
        let (ap, am) = (set.get("A_plus").unwrap(), set.get("A_minus").unwrap());
        for y in [ap, am] {
            let (b, c) = (-0.25, 0.25);
            assert!((-y * y + b * y + c).abs() < 1e-14);
        }
        let disc = (0.25f64 * 0.25 + 1.0).sqrt();
        assert!((ap - (-0.25 + disc) / 2.0).abs() < 1e-15);
        assert!((am - (-0.25 - disc) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn coriolis_root_closed_form_agrees() {
        // Second displayed form: 1 − (H+ωL₃)/ω² (1 ∓ √(1 − ω²L₃²/(H+ωL₃)²)).
        let (h, l3, om) = (0.7, 0.3, 1.3);
        let (am, ap) = coriolis_roots(h, l3, om).unwrap();
        let g = h + om * l3;
        let r = (1.0 - om * om * l3 * l3 / (g * g)).sqrt();
        assert!((ap - (1.0 - g / (om * om) * (1.0 - r))).abs() < 1e-14);
        assert!((am - (1.0 - g / (om * om) * (1.0 + r))).abs() < 1e-14);
        assert!(ap < 1.0);
    }

    #[test]
    fn rapid_examples() {
        let set = rapid_integrals(&st(0.0, FRAC_PI_2, 0.0, 0.0, 0.1), 2.0, None).unwrap();
        assert_eq!(set.get("I1").unwrap(), -2.0);
        assert_eq!(set.get("I2").unwrap(), 0.1);
        let set = rapid_coriolis_integrals(&st(0.0, FRAC_PI_2, 0.0, 0.0, 0.0), 1.5, None);
        // At the equator with u = 0 the orbit is the equilibrium of U; only the
        // algebraic pair is meaningful there.
        let i1 = 0.5 * 0.0 - 1.5 * 1.5;
        assert_eq!(i1, -2.25);
        assert!(set.is_err() || set.unwrap().get("I2") == Some(0.0));
        let set = physical_rapid_integrals(&st(0.0, FRAC_PI_2, 0.0, 0.0, 0.2), 1.0, None).unwrap();
        assert_eq!(set.get("I1").unwrap(), -0.5);
        assert!((set.get("I2").unwrap() - 2.2).abs() < 1e-15);
    }

    #[test]
    fn rapid_third_integral_round_trip() {
        // cos θ = κ sn(I3 − ωt, κ) must reproduce the state.
        let (theta, u, om, t) = (1.1, 0.3, 1.7, 0.4);
        let set = rapid_integrals(&st(t, theta, 0.0, u, 0.0), om, None).unwrap();
        let k = set.get("k").unwrap();
        assert!(k < 0.0);
        let kappa = (1.0 + k).sqrt();
        let (sn, cn, dn) = elliptic::jacobi_sn_cn_dn(set.get("I3").unwrap() - om * t, kappa);
        assert!((kappa * sn - theta.cos()).abs() < 1e-12);
        assert!((kappa * cn - u / om).abs() < 1e-12);
        assert!((dn - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn rapid_third_integral_open_orbit() {
        // k > 0: sin θ = cn(√(1+k)(I3 − s_u|ω|t), 1/√(1+k)).
        let (theta, u, om, t) = (1.0, 2.5, 1.2, 0.3);
        let set = rapid_integrals(&st(t, theta, 0.0, u, 0.0), om, None).unwrap();
        let k = set.get("k").unwrap();
        assert!(k > 0.0);
        let r = (1.0 + k).sqrt();
        let (_, cn, _) = elliptic::jacobi_sn_cn_dn(r * (set.get("I3").unwrap() - om * t), 1.0 / r);
        assert!((cn - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn mechanics_identities() {
        let m = mechanics(&st(0.0, 0.9, 0.0, 0.0, 0.0), 1.7).unwrap();
        assert_eq!(m.jacobi, 0.0);
        assert!(m.hamiltonian.abs() < 1e-15);
        let s = st(0.0, 0.9, 0.0, 0.4, -0.3);
        let m = mechanics(&s, 1.7).unwrap();
        let h = 0.5 * (0.4f64 * 0.4 + 0.9f64.sin().powi(2) * 0.09);
        assert!((m.jacobi - h).abs() < 1e-15);
        assert!((m.hamiltonian - h).abs() < 1e-15);
        let cor = coriolis_integrals(&s, 1.7, None).unwrap();
        assert!((cor.get("H").unwrap() - m.jacobi).abs() < 1e-15);
    }

    #[test]
    fn ledger_unwraps_to_nearest() {
        let mut l = BranchLedger::new();
        assert_eq!(l.unwrap("a", 3.0, TAU), 3.0);
        assert!((l.unwrap("a", -3.0, TAU) - (TAU - 3.0)).abs() < 1e-15);
    }
}
