//! Locating the set where a solution's gradient becomes infinite, as the
//! zero set of a scalar condition over `(t, θ, φ)`.

use crate::characteristics::fmt17;
use crate::euler::VelocityField;
use crate::expr::Expr;
use crate::field::SolutionField;
use crate::reduction::{self, RootScan};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlowupError {
    #[error("the condition is undefined at every grid node")]
    EmptyDomain,
    #[error("invalid scan grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    fn at(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub t: Axis,
    pub theta: Axis,
    pub phi: Axis,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-8
}

impl ScanGrid {
    /// 64 × 64 × 16 nodes over the given box.
    pub fn new(t: (f64, f64), theta: (f64, f64), phi: (f64, f64)) -> Self {
        ScanGrid {
            t: Axis { lo: t.0, hi: t.1, n: 64 },
            theta: Axis { lo: theta.0, hi: theta.1, n: 64 },
            phi: Axis { lo: phi.0, hi: phi.1, n: 16 },
            tol: default_tol(),
        }
    }

    fn dims(&self) -> [usize; 3] {
        [self.t.n, self.theta.n, self.phi.n]
    }

    fn node(&self, idx: [usize; 3]) -> [f64; 3] {
        [self.t.at(idx[0]), self.theta.at(idx[1]), self.phi.at(idx[2])]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocusPoint {
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Locus {
    pub condition: String,
    pub points: Vec<LocusPoint>,
    /// Indices into `points`, one list per connected piece.
    pub components: Vec<Vec<usize>>,
    /// Grid nodes where the condition could not be evaluated.
    pub undefined_nodes: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Sign changes of `condition` along grid edges, refined by bisection to
/// `|condition| < tol`. Edges across which the condition jumps without
/// passing through small values (poles) are dropped.
pub fn scan<F>(condition: F, name: &str, grid: &ScanGrid) -> Result<Locus, BlowupError>
where
    F: Fn(f64, f64, f64) -> Option<f64> + Sync,
{
    let dims = grid.dims();
    if dims.contains(&0) {
        return Err(BlowupError::Grid("axis with no nodes".into()));
    }
    let flat = |i: [usize; 3]| (i[0] * dims[1] + i[1]) * dims[2] + i[2];
    let total = dims[0] * dims[1] * dims[2];
    let unflat = |k: usize| [k / (dims[1] * dims[2]), (k / dims[2]) % dims[1], k % dims[2]];
    let values: Vec<Option<f64>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let x = grid.node(unflat(k));
            condition(x[0], x[1], x[2]).filter(|v| v.is_finite())
        })
        .collect();
    let undefined_nodes = values.iter().filter(|v| v.is_none()).count();
    if undefined_nodes == total {
        return Err(BlowupError::EmptyDomain);
    }

    let mut edges = Vec::new();
    for k in 0..total {
        let i = unflat(k);
        for axis in 0..3 {
            if i[axis] + 1 < dims[axis] {
                let mut j = i;
                j[axis] += 1;
                if let (Some(a), Some(b)) = (values[k], values[flat(j)]) {
                    if a.signum() != b.signum() || a == 0.0 {
                        edges.push((i, axis, a));
                    }
                }
            }
        }
    }

    let refined: Vec<Option<(LocusPoint, [usize; 3], usize)>> = edges
        .par_iter()
        .map(|&(i, axis, ga)| {
            let x0 = grid.node(i);
            let mut j = i;
            j[axis] += 1;
            let x1 = grid.node(j);
            let at = |s: f64| {
                let mut x = x0;
                x[axis] = x0[axis] + s * (x1[axis] - x0[axis]);
                x
            };
            // An undefined midpoint means the solution ceased to exist there;
            // keep shrinking toward the side where it is defined.
            let (mut lo, mut hi, mut glo) = (0.0, 1.0, ga);
            let mut ghi = None;
            let mut found = None;
            for _ in 0..200 {
                if glo.abs() < grid.tol {
                    found = Some((lo, glo));
                    break;
                }
                if let Some(g) = ghi.filter(|g: &f64| g.abs() < grid.tol) {
                    found = Some((hi, g));
                    break;
                }
                if hi - lo < 1e-16 {
                    break;
                }
                let s = 0.5 * (lo + hi);
                let x = at(s);
                match condition(x[0], x[1], x[2]).filter(|g| g.is_finite()) {
                    Some(g) if g.signum() == glo.signum() => (lo, glo) = (s, g),
                    Some(g) => (hi, ghi) = (s, Some(g)),
                    None => (hi, ghi) = (s, None),
                }
            }
            let (s, g) = found?;
            let x = at(s);
            Some((LocusPoint { t: x[0], theta: x[1], phi: x[2], value: g }, i, axis))
        })
        .collect();

    // Each edge touches up to four cells; points sharing a cell are linked.
    let points: Vec<_> = refined.into_iter().flatten().collect();
    let mut parent: Vec<usize> = (0..points.len()).collect();
    let mut owner: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    for (p, &(_, i, axis)) in points.iter().enumerate() {
        let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        for da in 0..2 {
            for db in 0..2 {
                let mut cell = i;
                let (a, b) = (others[0], others[1]);
                if (da == 1 && i[a] == 0) || (db == 1 && i[b] == 0) {
                    continue;
                }
                cell[a] -= da;
                cell[b] -= db;
                match owner.get(&cell) {
                    Some(&q) => {
                        let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                        if rp != rq {
                            parent[rp.max(rq)] = rp.min(rq);
                        }
                    }
                    None => {
                        owner.insert(cell, p);
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in 0..points.len() {
        let r = find(&mut parent, p);
        groups.entry(r).or_default().push(p);
    }
    Ok(Locus {
        condition: name.to_string(),
        points: points.into_iter().map(|(p, _, _)| p).collect(),
        components: groups.into_values().collect(),
        undefined_nodes,
    })
}

/// The blow-up conditions available to the scanner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanProblem {
    /// `t + ∂Φ/∂u` for `θ − ut = Φ(u, φ + ωt)`.
    Hopf {
        phi: Expr,
        omega: f64,
        #[serde(default = "default_bracket")]
        bracket: (f64, f64),
        /// Sign-change samples across the bracket.
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// `F + k ∂F/∂k − ∂Φ̃ₖ/∂k` for the modulus form of the Coriolis reduction.
    Modulus { phi: Expr, omega: f64 },
    /// `det M` of a hodograph family.
    Hodograph { field: SolutionField },
}

fn default_samples() -> usize {
    RootScan::default().samples
}

fn default_bracket() -> (f64, f64) {
    let d = RootScan::default();
    (d.lo, d.hi)
}

impl ScanProblem {
    pub fn condition_name(&self) -> &'static str {
        match self {
            ScanProblem::Hopf { .. } => "t+dPhi/du",
            ScanProblem::Modulus { .. } => "F+k*dF/dk-dPhi/dk",
            ScanProblem::Hodograph { .. } => "detM",
        }
    }

    pub fn condition(&self, t: f64, theta: f64, phi: f64) -> Option<f64> {
        match self {
            ScanProblem::Hopf { phi: f, omega, bracket, samples } => {
                let scan = RootScan { lo: bracket.0, hi: bracket.1, samples: *samples };
                let u = reduction::hopf_solve(f, t, theta, phi, *omega, &scan).ok()?;
                Some(reduction::hopf_condition(f, t, u, phi, *omega))
            }
            ScanProblem::Modulus { phi: f, omega } => {
                let k = reduction::modulus_solve(f, t, theta, phi, *omega, 4000).ok()?;
                reduction::modulus_condition(f, t, theta, phi, *omega, k).ok()
            }
            ScanProblem::Hodograph { field } => field.det_m(t, theta, phi),
        }
    }

    pub fn locate(&self, grid: &ScanGrid) -> Result<Locus, BlowupError> {
        scan(|t, th, ph| self.condition(t, th, ph), self.condition_name(), grid)
    }
}

/// `|∂u/∂θ|` by central differences at `(t − d, θ, φ)` for each distance `d`
/// before a blow-up time `t`.
pub fn derivative_growth_probe(field: &SolutionField, t: f64, theta: f64, phi: f64, distances: &[f64]) -> Vec<(f64, Option<f64>)> {
    distances
        .iter()
        .map(|&d| {
            let h = 1e-3 * d;
            let tt = t - d;
            let slope = match (field.velocity(tt, theta + h, phi), field.velocity(tt, theta - h, phi)) {
                (Ok((a, _)), Ok((b, _))) => Some(((a - b) / (2.0 * h)).abs()),
                _ => None,
            };
            (d, slope)
        })
        .collect()
}

pub fn write_locus_csv<W: Write>(mut out: W, locus: &Locus, comment: Option<&str>) -> Result<(), csv::Error> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "theta", "phi", "condition_value", "condition_name"])?;
    for p in &locus.points {
        w.write_record([fmt17(p.t), fmt17(p.theta), fmt17(p.phi), fmt17(p.value), locus.condition.clone()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::Regime;
    use crate::field::Family;

    fn hopf_problem() -> ScanProblem {
        ScanProblem::Hopf { phi: -Expr::var(0), omega: 0.0, bracket: (-1e12, 1e12), samples: 4000 }
    }

    #[test]
    fn hopf_locus_is_the_plane_t_equals_one() {
        let grid = ScanGrid {
            t: Axis { lo: 0.0, hi: 2.0, n: 8 },
            theta: Axis { lo: 0.5, hi: 2.5, n: 5 },
            phi: Axis { lo: 0.0, hi: 1.0, n: 2 },
            tol: 1e-8,
        };
        let locus = hopf_problem().locate(&grid).unwrap();
        assert_eq!(locus.points.len(), 10);
        assert!(locus.points.iter().all(|p| (p.t - 1.0).abs() < 1e-6));
        assert_eq!(locus.components.len(), 1);
    }

    #[test]
    fn poles_of_the_condition_are_not_roots() {
        let grid = ScanGrid::new((-1.0, 1.0), (0.5, 1.0), (0.0, 1.0));
        let locus = scan(|t, _, _| Some(1.0 / (t - 0.01)), "pole", &grid).unwrap();
        assert!(locus.points.is_empty());
    }

    #[test]
    fn separate_sheets_are_separate_components() {
        let grid = ScanGrid {
            t: Axis { lo: 0.0, hi: 3.0, n: 13 },
            theta: Axis { lo: 0.5, hi: 1.0, n: 4 },
            phi: Axis { lo: 0.0, hi: 1.0, n: 3 },
            tol: 1e-10,
        };
        let locus = scan(|t, _, _| Some((t - 0.9) * (t - 2.1)), "two", &grid).unwrap();
        assert_eq!(locus.components.len(), 2);
    }

    #[test]
    fn empty_domain() {
        let grid = ScanGrid::new((0.0, 1.0), (0.5, 1.0), (0.0, 1.0));
        assert_eq!(scan(|_, _, _| None, "none", &grid), Err(BlowupError::EmptyDomain));
    }

    #[test]
    fn hopf_gradient_grows_inversely_with_distance() {
        let f = SolutionField::new(Family::Hopf { phi: -Expr::var(0), bracket: (-1e6, 1e6) }, 0.0, Regime::Full);
        for (d, slope) in derivative_growth_probe(&f, 1.0, 1.0, 0.0, &[1e-2, 1e-3, 1e-4]) {
            assert!((slope.unwrap() * d - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn locus_csv_header() {
        let locus = Locus {
            condition: "detM".into(),
            points: vec![LocusPoint { t: 1.0, theta: 0.5, phi: 0.0, value: 0.0 }],
            components: vec![vec![0]],
            undefined_nodes: 0,
        };
        let mut buf = Vec::new();
        write_locus_csv(&mut buf, &locus, Some("h")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# h\nt,theta,phi,condition_value,condition_name\n"));
        assert!(text.trim_end().ends_with(",detM"));
    }
}
