//! Declarative experiment files (TOML).
//!
//! Scalars that accept a list (`support`, `amplitude`, `h`) expand into a
//! scenario matrix; every combination is an independent run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wavedecay::{
    make_profile, project_moment_zero, DimMode, Family, Field, InitialData, WavespeedProfile,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    Constant,
    RadialBump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub dim: DimMode,
    pub family: ProfileFamily,
    /// Radius `L` of the perturbation ball.
    pub support: OneOrMany,
    #[serde(default = "zero_amp")]
    pub amplitude: OneOrMany,
}

fn zero_amp() -> OneOrMany {
    OneOrMany::One(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFamily {
    /// Same bump profile for `u0` and `u1` with separate amplitudes.
    Bump,
    /// Right-moving pulse `u0 = g`, `u1 = -g'` (line only).
    Pulse,
    /// `u1` = bump at `center + s e1` minus bump at `center - s e1`.
    Dipole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub family: DataFamily,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "four")]
    pub power: u32,
    #[serde(default = "one")]
    pub u0_amplitude: f64,
    #[serde(default)]
    pub u1_amplitude: f64,
    #[serde(default = "half")]
    pub separation: f64,
    /// Subtract a reference bump so that `int u1 / c^2 = 0` (plane only).
    #[serde(default)]
    pub project_moment: bool,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn four() -> u32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub cfl: f64,
    pub h: OneOrMany,
    pub t_final: f64,
    pub sample_stride: usize,
    pub extent_rule: f64,
    pub max_cells: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = wavedecay::SolverConfig::default();
        Self {
            cfl: d.cfl,
            h: OneOrMany::One(d.h),
            t_final: d.t_final,
            sample_stride: d.sample_stride,
            extent_rule: d.extent_rule,
            max_cells: d.max_cells,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub energy_drift: f64,
    /// Morawetz residual relative to `t E_u(t)`.
    pub morawetz: f64,
    /// Slack on the weighted exterior bound `(2 + L) I0^2`.
    pub weighted_exterior: f64,
    /// Slack on `S(t) <= eta int_0^t E_R`.
    pub source: f64,
    pub antiderivative: f64,
    /// Allowed growth of `sup ||u||` from the first to the second half.
    pub plateau: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_drift: 1e-3,
            morawetz: 1e-2,
            weighted_exterior: 0.02,
            source: 1e-2,
            antiderivative: 1e-2,
            plateau: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSpec {
    /// Observation radii; empty means `[L + 1]`.
    pub radii: Vec<f64>,
    pub gamma: f64,
    pub theta: Vec<f64>,
    /// Decay window as fractions of `t_final`.
    pub decay_window: [f64; 2],
    pub tolerances: Tolerances,
    pub energy: bool,
    pub morawetz: bool,
    pub weighted_exterior: bool,
    pub exterior_pairing: bool,
    pub source: bool,
    pub spectral: bool,
    pub antiderivative: bool,
    pub decay: bool,
    pub gronwall: bool,
}

impl Default for ChecksSpec {
    fn default() -> Self {
        Self {
            radii: Vec::new(),
            gamma: 1.0,
            theta: vec![0.0],
            decay_window: [1.0 / 3.0, 1.0],
            tolerances: Tolerances::default(),
            energy: true,
            morawetz: true,
            weighted_exterior: true,
            exterior_pairing: true,
            source: true,
            spectral: true,
            antiderivative: false,
            decay: true,
            gronwall: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub directory: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub profile: ProfileSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// One point of the scenario matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub id: String,
    pub dim: DimMode,
    pub family: ProfileFamily,
    pub support: f64,
    pub amplitude: f64,
    pub h: f64,
    pub radii: Vec<f64>,
}

impl Scenario {
    pub fn profile(&self) -> Result<WavespeedProfile, CliError> {
        let family = match self.family {
            ProfileFamily::Constant => Family::Constant,
            ProfileFamily::RadialBump => Family::RadialBump {
                amplitude: self.amplitude,
            },
        };
        make_profile(self.dim, family, self.support).map_err(|e| CliError::config("profile", e))
    }

    pub fn solver(&self, spec: &SolverSpec) -> wavedecay::SolverConfig {
        wavedecay::SolverConfig {
            cfl: spec.cfl,
            h: self.h,
            t_final: spec.t_final,
            sample_stride: spec.sample_stride,
            extent_rule: spec.extent_rule,
            max_cells: spec.max_cells,
        }
    }
}

fn bad(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: msg.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("<file>", format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, digest(&text)))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad("<toml>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(bad("name", "must be a nonempty plain file name"));
        }
        let supports = self.profile.support.values();
        if supports.is_empty() || supports.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(bad("profile.support", "every L must be finite and > 0"));
        }
        if self.profile.amplitude.values().is_empty() {
            return Err(bad("profile.amplitude", "needs at least one value"));
        }
        let hs = self.solver.h.values();
        if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(bad("solver.h", "every h must be finite and > 0"));
        }
        for &l in &supports {
            for &r in &self.checks.radii {
                if !(r > l) {
                    return Err(bad(
                        "checks.radii",
                        format!("R = {r} must satisfy R > L = {l}"),
                    ));
                }
            }
        }
        let c = &self.checks;
        if !(0.0..=1.0).contains(&c.gamma) {
            return Err(bad("checks.gamma", "must lie in [0, 1]"));
        }
        if c.theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(bad("checks.theta", "entries must be finite and >= 0"));
        }
        let [w0, w1] = c.decay_window;
        if !(0.0 <= w0 && w0 < w1 && w1 <= 1.0) {
            return Err(bad("checks.decay_window", "need 0 <= start < end <= 1"));
        }
        let d = &self.data;
        if !(d.radius > 0.0 && d.radius.is_finite()) {
            return Err(bad("data.radius", "must be finite and > 0"));
        }
        if d.center.len() > 3 || d.center.iter().any(|v| !v.is_finite()) {
            return Err(bad("data.center", "at most three finite coordinates"));
        }
        if d.family == DataFamily::Pulse && self.profile.dim != DimMode::Line1D {
            return Err(bad("data.family", "pulse data needs dim = \"line-1d\""));
        }
        if d.project_moment && self.profile.dim != DimMode::Plane2D {
            return Err(bad(
                "data.project_moment",
                "only meaningful for dim = \"plane-2d\"",
            ));
        }
        self.build_data_raw()
            .check_dim(self.profile.dim)
            .map_err(|e| CliError::config("data", e))?;
        self.solver_probe()
            .validate()
            .map_err(|e| CliError::config("solver", e))?;
        Ok(())
    }

    fn solver_probe(&self) -> wavedecay::SolverConfig {
        Scenario {
            id: String::new(),
            dim: self.profile.dim,
            family: self.profile.family,
            support: 1.0,
            amplitude: 0.0,
            h: self.solver.h.values()[0],
            radii: Vec::new(),
        }
        .solver(&self.solver)
    }

    fn center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (slot, v) in c.iter_mut().zip(&self.data.center) {
            *slot = *v;
        }
        c
    }

    fn build_data_raw(&self) -> InitialData {
        let d = &self.data;
        let c = self.center();
        match d.family {
            DataFamily::Bump => InitialData::new(
                Field::bump(c, d.radius, d.u0_amplitude, d.power),
                Field::bump(c, d.radius, d.u1_amplitude, d.power),
            ),
            DataFamily::Pulse => {
                InitialData::right_moving_pulse(c[0], d.radius, d.u0_amplitude, d.power)
            }
            DataFamily::Dipole => {
                let plus = [c[0] + d.separation, c[1], c[2]];
                let minus = [c[0] - d.separation, c[1], c[2]];
                InitialData::new(
                    Field::bump(c, d.radius, d.u0_amplitude, d.power),
                    Field::sum(vec![
                        Field::bump(plus, d.radius, d.u1_amplitude, d.power),
                        Field::bump(minus, d.radius, -d.u1_amplitude, d.power),
                    ]),
                )
            }
        }
    }

    /// Initial data for a scenario, moment-projected when requested.
    pub fn build_data(&self, profile: &WavespeedProfile, h: f64) -> Result<InitialData, CliError> {
        let raw = self.build_data_raw();
        if self.data.project_moment {
            project_moment_zero(&raw, profile, h)
                .map_err(|e| CliError::config("data.project_moment", e))
        } else {
            Ok(raw)
        }
    }

    /// Expands the matrix; `resolution_scale > 1` refines every `h`.
    pub fn scenarios(&self, resolution_scale: f64) -> Result<Vec<Scenario>, CliError> {
        if !(resolution_scale > 0.0 && resolution_scale.is_finite()) {
            return Err(bad("--resolution-scale", "must be finite and > 0"));
        }
        let amps = match self.profile.family {
            ProfileFamily::Constant => vec![0.0],
            ProfileFamily::RadialBump => self.profile.amplitude.values(),
        };
        let mut out = Vec::new();
        for l in self.profile.support.values() {
            for &a in &amps {
                for h in self.solver.h.values() {
                    let h = h / resolution_scale;
                    let radii = if self.checks.radii.is_empty() {
                        vec![l + 1.0]
                    } else {
                        self.checks.radii.clone()
                    };
                    out.push(Scenario {
                        id: format!("L{l}_a{a}_h{h}"),
                        dim: self.profile.dim,
                        family: self.profile.family,
                        support: l,
                        amplitude: a,
                        h,
                        radii,
                    });
                }
            }
        }
        Ok(out)
    }
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
name = "t"
[profile]
dim = "line-1d"
family = "radial_bump"
support = 1.0
amplitude = [0.1, 0.2]
[data]
family = "bump"
u1_amplitude = 0.5
[solver]
h = [0.02, 0.01]
t_final = 1.0
"#;

    #[test]
    fn matrix_expansion() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        let s = cfg.scenarios(1.0).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].id, "L1_a0.1_h0.02");
        assert_eq!(s[0].radii, vec![2.0]);
        let fine = cfg.scenarios(2.0).unwrap();
        assert_eq!(fine[1].h, 0.005);
    }

    #[test]
    fn rejects_radius_at_support() {
        let text = format!("{BASE}\n[checks]\nradii = [1.0]\n");
        match ExperimentConfig::parse(&text) {
            Err(CliError::Config { field, message }) => {
                assert_eq!(field, "checks.radii");
                assert!(message.contains("R > L"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(ExperimentConfig::parse(&BASE.replace("t_final", "t_fnal")).is_err());
        assert!(
            ExperimentConfig::parse(&BASE.replace("schema_version = 1", "schema_version = 9"))
                .is_err()
        );
    }

    #[test]
    fn pulse_requires_line() {
        let text = BASE
            .replace("line-1d", "plane-2d")
            .replace("\"bump\"", "\"pulse\"");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            digest("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
