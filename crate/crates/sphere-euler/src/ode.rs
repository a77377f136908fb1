//! Dormand–Prince 5(4) integrator with PI step control, cubic Hermite dense
//! output and terminal events.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-10, h0: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// A terminal event fired; the index names which event function crossed zero.
    Event(usize),
}

/// Accepted steps with enough data for Hermite interpolation between them.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    pub termination: Termination,
}

impl<const N: usize> OdeSolution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }

    /// Cubic Hermite interpolation; `t` is clamped to the covered span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 {
            return self.y[0];
        }
        let forward = self.t[n - 1] >= self.t[0];
        let idx = if forward {
            self.t.partition_point(|&s| s <= t)
        } else {
            self.t.partition_point(|&s| s >= t)
        };
        let i = idx.clamp(1, n - 1) - 1;
        hermite(self.t[i], &self.y[i], &self.dy[i], self.t[i + 1], &self.y[i + 1], &self.dy[i + 1], t)
    }
}

fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = ((t - t0) / h).clamp(0.0, 1.0);
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for j in 0..N {
        out[j] = h00 * y0[j] + h10 * h * f0[j] + h01 * y1[j] + h11 * h * f1[j];
    }
    out
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for j in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[j];
        }
        out[j] += h * acc;
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `events` are scalar functions of the state; when one changes sign across
/// an accepted step the crossing is located by bisection on the dense output
/// and integration stops there.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    events: &[&dyn Fn(f64, &[f64; N]) -> f64],
) -> Result<OdeSolution<N>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !finite(&k1) {
        return Err(OdeError::NonFinite { t });
    }
    let mut sol = OdeSolution { t: vec![t], y: vec![y], dy: vec![k1], termination: Termination::Completed };
    if t0 == t_end {
        return Ok(sol);
    }
    let span = (t_end - t0).abs();
    let mut h = opts.h0.unwrap_or_else(|| initial_step(&y, &k1, opts)).min(span).min(opts.h_max);
    let mut err_prev: f64 = 1e-4;
    let mut g_prev: Vec<f64> = events.iter().map(|g| g(t, &y)).collect();
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        steps += 1;
        let remaining = (t_end - t) * dir;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t });
        }
        let hs = h * dir;
        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hs, &y_new);
        let ok = finite(&y_new) && finite(&k7) && [&k2, &k3, &k4, &k5, &k6].iter().all(|k| finite(k));
        let err = if ok {
            let mut acc = 0.0;
            for j in 0..N {
                let e = hs
                    * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
                let sc = opts.abs_tol + opts.rel_tol * y[j].abs().max(y_new[j].abs());
                acc += (e / sc).powi(2);
            }
            (acc / N as f64).sqrt()
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            let t_new = if last { t_end } else { t + hs };
            // Terminal events.
            let g_new: Vec<f64> = events.iter().map(|g| g(t_new, &y_new)).collect();
            for (i, g) in events.iter().enumerate() {
                if g_prev[i] != 0.0 && g_prev[i].signum() != g_new[i].signum() {
                    let (mut a, mut b) = (t, t_new);
                    let ga = g_prev[i];
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m == a || m == b {
                            break;
                        }
                        let ym = hermite(t, &y, &k1, t_new, &y_new, &k7, m);
                        if g(m, &ym).signum() == ga.signum() {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    let te = 0.5 * (a + b);
                    let ye = hermite(t, &y, &k1, t_new, &y_new, &k7, te);
                    let fe = f(te, &ye);
                    sol.t.push(te);
                    sol.y.push(ye);
                    sol.dy.push(if finite(&fe) { fe } else { k7 });
                    sol.termination = Termination::Event(i);
                    return Ok(sol);
                }
            }
            g_prev = g_new;
            t = t_new;
            y = y_new;
            k1 = k7;
            sol.t.push(t);
            sol.y.push(y);
            sol.dy.push(k1);
            if last {
                return Ok(sol);
            }
            // PI controller (Hairer–Wanner constants for order 5).
            let e = err.max(1e-10);
            let fac = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            h = h.min(opts.h_max);
            err_prev = e;
        } else {
            if !ok {
                if h < 1e-14 * t.abs().max(1.0) * 10.0 {
                    return Err(OdeError::NonFinite { t });
                }
                h *= 0.25;
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
    }
}

fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N], opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for j in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y[j].abs();
        d0 += (y[j] / sc).powi(2);
        d1 += (f[j] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-8, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
        let sol = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, &opts, &[]).unwrap();
        let (t, y) = sol.last();
        assert_eq!(t, 3.0);
        assert!((y[0] - (-3f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backward_and_dense() {
        let opts = OdeOptions { rel_tol: 1e-12, abs_tol: 1e-12, ..Default::default() };
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let sol = integrate(f, 0.0, [0.0, 1.0], -2.0, &opts, &[]).unwrap();
        let (_, y) = sol.last();
        assert!((y[0] - (-2f64).sin()).abs() < 1e-10);
        let mid = sol.eval(-1.234);
        assert!((mid[0] - (-1.234f64).sin()).abs() < 1e-6);
    }

    #[test]
    fn event_stops_at_crossing() {
        let opts = OdeOptions::default();
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let g = |_: f64, y: &[f64; 2]| y[0] - 0.5;
        let sol = integrate(f, 0.0, [0.0, 1.0], 10.0, &opts, &[&g]).unwrap();
        assert_eq!(sol.termination, Termination::Event(0));
        let (t, _) = sol.last();
        assert!((t - 0.5f64.asin()).abs() < 1e-8);
    }

    #[test]
    fn blow_up_reports_failure() {
        let opts = OdeOptions::default();
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &opts, &[]);
        assert!(r.is_err());
    }
}
