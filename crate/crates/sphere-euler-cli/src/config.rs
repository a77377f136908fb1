//! Run configuration: a JSON document naming one command and carrying the
//! section for that command.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sphere_euler::blowup::{ScanGrid, ScanProblem};
use sphere_euler::euler::{Regime, State};
use sphere_euler::field::{open_grid, periodic_grid, SolutionField};
use sphere_euler::transforms::MapDirection;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Integrate,
    Invariants,
    Solve,
    Blowup,
    Residual,
    Transform,
    VerifyAll,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Integrate => "integrate",
            CommandKind::Invariants => "invariants",
            CommandKind::Solve => "solve",
            CommandKind::Blowup => "blowup",
            CommandKind::Residual => "residual",
            CommandKind::Transform => "transform",
            CommandKind::VerifyAll => "verify-all",
        }
    }

    fn default_output(self) -> &'static str {
        match self {
            CommandKind::Integrate => "trajectory.csv",
            CommandKind::Invariants => "invariants.csv",
            CommandKind::Solve => "field.csv",
            CommandKind::Blowup => "locus.csv",
            CommandKind::Residual => "residual.csv",
            CommandKind::Transform => "transformed.csv",
            CommandKind::VerifyAll => "report.json",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// File name of the main artifact inside the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrate: Option<IntegrateJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantsJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformJob>,
    #[serde(default, rename = "verify-all", skip_serializing_if = "Option::is_none")]
    pub verify_all: Option<VerifyJob>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    #[serde(default)]
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub u: f64,
    pub v: f64,
}

impl StartState {
    pub fn state(&self) -> State {
        State::new(self.t, self.theta, self.phi, self.u, self.v)
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateJob {
    pub regime: Regime,
    pub omega: f64,
    pub start: StartState,
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    /// Append the regime's integrals to every row.
    #[serde(default = "yes")]
    pub invariants: bool,
    /// Branch sign of the full-system integrals.
    #[serde(default = "one")]
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsJob {
    pub regime: Regime,
    pub omega: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    pub states: Vec<StartState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Cell midpoints, never touching the ends.
    Open,
    /// Left-closed, right-open; for angles.
    Periodic,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl GridAxis {
    pub fn nodes(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Open => open_grid(self.lo, self.hi, self.n),
            Spacing::Periodic => periodic_grid(self.lo, self.hi, self.n),
        }
    }
}

fn default_theta_axis() -> GridAxis {
    GridAxis { lo: 0.0, hi: PI, n: 128, spacing: Spacing::Open }
}

fn default_phi_axis() -> GridAxis {
    GridAxis { lo: 0.0, hi: TAU, n: 128, spacing: Spacing::Periodic }
}

fn default_certify_points() -> usize {
    64
}

fn default_certify_tol() -> f64 {
    1e-6
}

fn default_h() -> f64 {
    1e-4
}

/// PDE residual spot check of an exported field at random valid grid nodes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certification {
    #[serde(default = "default_certify_points")]
    pub points: usize,
    #[serde(default = "default_certify_tol")]
    pub tol: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

impl Default for Certification {
    fn default() -> Self {
        Certification { points: default_certify_points(), tol: default_certify_tol(), h: default_h() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJob {
    pub field: SolutionField,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "default_theta_axis")]
    pub theta: GridAxis,
    #[serde(default = "default_phi_axis")]
    pub phi: GridAxis,
    #[serde(default)]
    pub certify: Certification,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupJob {
    pub problem: ScanProblem,
    pub grid: ScanGrid,
}

fn default_residual_points() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualJob {
    pub field: SolutionField,
    /// Regime whose PDE is checked; defaults to the field's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default = "default_residual_points")]
    pub points: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_certify_tol")]
    pub tol: f64,
    /// Compare `tol` with residuals divided by `max(1, largest term)`.
    #[serde(default)]
    pub scaled: bool,
    pub t: (f64, f64),
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// Change of frame at the field's rotation rate.
    Frame { direction: MapDirection },
    /// Between coordinate `v` and physical `v sin θ`.
    Physical { to_physical: bool },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformJob {
    pub field: SolutionField,
    pub map: MapSpec,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "default_theta_axis")]
    pub theta: GridAxis,
    #[serde(default = "default_phi_axis")]
    pub phi: GridAxis,
    #[serde(default)]
    pub certify: Certification,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyJob {
    /// Subset of criterion ids; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u32>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Settle the command against the one given on the command line and
    /// check that exactly its section is present.
    pub fn resolve(mut self, cli: Option<CommandKind>) -> Result<(CommandKind, Self), String> {
        let command = match (self.command, cli) {
            (Some(a), Some(b)) if a != b => {
                return Err(format!("config command `{}` conflicts with `{}`", a.name(), b.name()));
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err("no command given".into()),
        };
        self.command = Some(command);
        let present = [
            (CommandKind::Integrate, self.integrate.is_some()),
            (CommandKind::Invariants, self.invariants.is_some()),
            (CommandKind::Solve, self.solve.is_some()),
            (CommandKind::Blowup, self.blowup.is_some()),
            (CommandKind::Residual, self.residual.is_some()),
            (CommandKind::Transform, self.transform.is_some()),
            (CommandKind::VerifyAll, self.verify_all.is_some()),
        ];
        for (kind, has) in present {
            if has && kind != command {
                return Err(format!("section `{}` given for command `{}`", kind.name(), command.name()));
            }
        }
        if command == CommandKind::VerifyAll {
            self.verify_all.get_or_insert_with(VerifyJob::default);
        } else if !present.iter().any(|&(k, has)| k == command && has) {
            return Err(format!("missing section `{}`", command.name()));
        }
        if let Some(name) = &self.output {
            let plain = !name.is_empty() && !name.contains(['/', '\\']) && name != "." && name != "..";
            if !plain {
                return Err(format!("output `{name}` must be a plain file name"));
            }
        }
        Ok((command, self))
    }

    pub fn output_name(&self, command: CommandKind) -> String {
        self.output.clone().unwrap_or_else(|| command.default_output().to_string())
    }

    /// SHA-256 of the canonical JSON form, with the seed in effect.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"command":"verify-all","bogus":1}"#).is_err());
        let nested = r#"{"command":"integrate","integrate":{"regime":"FULL","omega":1,
            "start":{"theta":1,"phi":0,"u":0,"v":-1,"w":0},"t_end":1}}"#;
        assert!(RunConfig::parse(nested).unwrap_err().contains("unknown field"));
    }

    #[test]
    fn command_and_sections_must_agree() {
        let cfg = RunConfig::parse(r#"{"command":"verify-all"}"#).unwrap();
        assert!(cfg.clone().resolve(Some(CommandKind::Solve)).is_err());
        let (cmd, cfg) = cfg.resolve(None).unwrap();
        assert_eq!(cmd, CommandKind::VerifyAll);
        assert!(cfg.verify_all.is_some());

        let stray = r#"{"command":"verify-all","solve":{"field":{"family":{"kind":"constant","u":0,"v":0},"omega":1,"regime":"FULL"}}}"#;
        assert!(RunConfig::parse(stray).unwrap().resolve(None).is_err());
        assert!(RunConfig::parse(r#"{"command":"solve"}"#).unwrap().resolve(None).is_err());
        assert!(RunConfig::default().resolve(None).is_err());
    }

    #[test]
    fn output_must_stay_in_the_output_directory() {
        let cfg = RunConfig::parse(r#"{"command":"verify-all","output":"../x.json"}"#).unwrap();
        assert!(cfg.resolve(None).is_err());
    }

    #[test]
    fn hash_depends_on_seed() {
        let (_, a) = RunConfig::parse(r#"{"command":"verify-all"}"#).unwrap().resolve(None).unwrap();
        let mut b = a.clone();
        b.seed = Some(3);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.clone().hash());
        assert_eq!(a.hash().len(), 64);
    }
}
