//! Characteristic curves: integration of `(θ, φ, u, v)` along the flow of a
//! regime, with a guard band at the poles.

use crate::euler::{self, EulerError, Regime, State, THETA_GUARD};
use crate::invariants::{self, BranchLedger, InvariantError, InvariantSet};
use crate::ode::{self, OdeError, OdeOptions, OdeSolution, Termination};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CharError {
    /// The trajectory entered the polar guard band; the part computed so far
    /// is returned.
    #[error("trajectory reached the polar guard band at t = {}", partial.end().t)]
    BoundaryHit { partial: Box<Trajectory> },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error(transparent)]
    Ode(OdeError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub regime: Regime,
    pub omega: f64,
    pub states: Vec<State>,
    solution: OdeSolution<4>,
}

impl Trajectory {
    pub fn start(&self) -> &State {
        &self.states[0]
    }

    pub fn end(&self) -> &State {
        self.states.last().unwrap()
    }

    /// State at any time inside the integrated span (cubic Hermite).
    pub fn at(&self, t: f64) -> State {
        let y = self.solution.eval(t);
        State::new(t, y[0], y[1], y[2], y[3])
    }
}

fn rhs(regime: Regime, omega: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] {
    move |_t, y| {
        let (dth, dph) = euler::transport(regime, y[0], y[2], y[3]);
        match euler::force(regime, y[0], y[2], y[3], omega) {
            Ok((f1, f2)) => [dth, dph, f1, f2],
            Err(_) => [f64::NAN; 4],
        }
    }
}

/// Integrate the characteristic through `start` up to `t_end` (forward or
/// backward in time).
pub fn integrate(
    regime: Regime,
    start: State,
    omega: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, CharError> {
    if !(start.theta > THETA_GUARD && start.theta < std::f64::consts::PI - THETA_GUARD) {
        return Err(EulerError::Pole { theta: start.theta }.into());
    }
    let opts = OdeOptions { rel_tol: rtol, abs_tol: atol, ..OdeOptions::default() };
    let north = |_: f64, y: &[f64; 4]| y[0] - THETA_GUARD;
    let south = |_: f64, y: &[f64; 4]| std::f64::consts::PI - THETA_GUARD - y[0];
    let y0 = [start.theta, start.phi_unwrapped(), start.u, start.v];
    let solution = ode::integrate(rhs(regime, omega), start.t, y0, t_end, &opts, &[&north, &south]).map_err(
        |e| match e {
            OdeError::StepUnderflow { t } => CharError::StepUnderflow { t },
            other => CharError::Ode(other),
        },
    )?;
    let states = solution
        .t
        .iter()
        .zip(&solution.y)
        .map(|(&t, y)| State::new(t, y[0], y[1], y[2], y[3]))
        .collect();
    let hit = matches!(solution.termination, Termination::Event(_));
    let traj = Trajectory { regime, omega, states, solution };
    if hit {
        Err(CharError::BoundaryHit { partial: Box::new(traj) })
    } else {
        Ok(traj)
    }
}

/// Invariants at every stored state, phases kept continuous.
pub fn invariant_series(traj: &Trajectory, sigma: f64) -> Result<Vec<InvariantSet>, InvariantError> {
    let mut ledger = BranchLedger::new();
    traj.states
        .iter()
        .map(|s| invariants::integrals_for(traj.regime, s, traj.omega, sigma, Some(&mut ledger)))
        .collect()
}

/// `max_t |I(t) − I(0)| / max(1, |I(0)|)` for each conserved quantity.
pub fn invariant_drift(traj: &Trajectory, sigma: f64) -> Result<Vec<(&'static str, f64)>, InvariantError> {
    Ok(drift_of(&invariant_series(traj, sigma)?))
}

pub fn drift_of(series: &[InvariantSet]) -> Vec<(&'static str, f64)> {
    let first = &series[0];
    let conserved = invariants::conserved_names(first.regime);
    first
        .values
        .iter()
        .filter(|(name, _)| conserved.contains(name))
        .map(|&(name, v0)| {
            let scale = v0.abs().max(1.0);
            let worst = series
                .iter()
                .filter_map(|set| set.get(name))
                .map(|v| (v - v0).abs() / scale)
                .fold(0.0, f64::max);
            (name, worst)
        })
        .collect()
}

/// `u² + ∫ sin²θ d(v²)` at each stored state of a rapid Coriolis trajectory.
///
/// The integral is taken step by step with five-point Gauss–Legendre on the
/// dense output, using the force law for `dv/dt`.
pub fn rapid_coriolis_identity(traj: &Trajectory) -> Vec<f64> {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let integrand = |t: f64| {
        let y = traj.solution.eval(t);
        let (_, f2) = euler::force(traj.regime, y[0], y[2], y[3], traj.omega).unwrap_or((f64::NAN, f64::NAN));
        y[0].sin().powi(2) * 2.0 * y[3] * f2
    };
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(traj.states.len());
    out.push(traj.states[0].u.powi(2));
    for w in traj.states.windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        acc += half * NODES.iter().zip(WEIGHTS).map(|(x, wt)| wt * integrand(mid + half * x)).sum::<f64>();
        out.push(w[1].u.powi(2) + acc);
    }
    out
}

/// Write a trajectory as CSV with columns `t, theta, phi_unwrapped, u, v`
/// followed by one column per invariant.
pub fn write_csv<W: Write>(
    mut out: W,
    traj: &Trajectory,
    invariants: Option<&[InvariantSet]>,
    comment: Option<&str>,
) -> Result<(), CharError> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t", "theta", "phi_unwrapped", "u", "v"];
    if let Some(inv) = invariants {
        header.extend(inv[0].names());
    }
    w.write_record(&header)?;
    for (i, s) in traj.states.iter().enumerate() {
        let mut row: Vec<String> = [s.t, s.theta, s.phi_unwrapped(), s.u, s.v].iter().map(|x| fmt17(*x)).collect();
        if let Some(inv) = invariants {
            row.extend(inv[i].values.iter().map(|(_, v)| fmt17(*v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn equatorial_rotation_is_exact() {
        let s = State::new(0.0, FRAC_PI_2, 0.0, 0.0, 1.0);
        let tr = integrate(Regime::Full, s, 0.0, 3.0, 1e-10, 1e-10).unwrap();
        let e = tr.end();
        assert!((e.phi_unwrapped() - 3.0).abs() < 1e-9);
        assert!((e.theta - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn great_circle_through_pole_hits_guard() {
        let s = State::new(0.0, 0.5, 0.0, -1.0, 0.0);
        match integrate(Regime::Full, s, 0.0, 2.0, 1e-10, 1e-10) {
            Err(CharError::BoundaryHit { partial }) => {
                let e = partial.end();
                assert!((e.theta - THETA_GUARD).abs() < 1e-9);
                assert!((e.t - (0.5 - THETA_GUARD)).abs() < 1e-8);
            }
            other => panic!("expected boundary hit, got {other:?}"),
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let s = State::new(0.0, 1.0, 0.3, 0.2, 0.4);
        let tol = 1e-10;
        for regime in Regime::ALL {
            let fwd = integrate(regime, s, 0.7, 5.0, tol, tol).unwrap();
            let back = integrate(regime, *fwd.end(), 0.7, 0.0, tol, tol).unwrap();
            let e = back.end();
            let err = [e.theta - s.theta, e.phi_unwrapped() - s.phi_unwrapped(), e.u - s.u, e.v - s.v]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(err < 10.0 * tol, "{regime:?}: {err}");
        }
    }

    #[test]
    fn rapid_coriolis_identity_holds() {
        let s = State::new(0.0, 1.2, 0.0, 0.3, 0.1);
        let tr = integrate(Regime::RapidCoriolis, s, 1.1, 10.0, 1e-10, 1e-10).unwrap();
        let j = rapid_coriolis_identity(&tr);
        let drift = j.iter().map(|x| (x - j[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-7, "{drift}");
    }

    #[test]
    fn csv_layout() {
        let s = State::new(0.0, 1.0, 0.0, 0.1, 0.2);
        let tr = integrate(Regime::Full, s, 0.5, 0.5, 1e-10, 1e-10).unwrap();
        let inv = invariant_series(&tr, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &tr, Some(&inv), Some("config abc")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# config abc");
        assert_eq!(lines.next().unwrap(), "t,theta,phi_unwrapped,u,v,L1,L2,L3,H,sigma,Q,I1,I2");
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(first[1], 1.0);
        assert_eq!(fmt17(PI).parse::<f64>().unwrap(), PI);
    }

    #[test]
    fn full_invariants_drift_small() {
        let s = State::new(0.0, 1.1, 0.2, 0.3, -0.2);
        let tr = integrate(Regime::Full, s, 0.6, 10.0, 1e-10, 1e-10).unwrap();
        for (name, d) in invariant_drift(&tr, 1.0).unwrap() {
            assert!(d < 1e-7, "{name}: {d}");
        }
    }
}
