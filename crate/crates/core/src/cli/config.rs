//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CavityError, Result};
use crate::moebius::MoebiusElement;
use crate::particles::SpectrumOptions;
use crate::phase::TimeReading;
use crate::trajectory::{validate_trajectory, TrajectoryKind, WallTrajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub kind: TrajectoryKind,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default)]
    pub delta_l: f64,
    #[serde(default = "one")]
    pub k_drive: u32,
    /// Motion duration in drive periods `2π/ω_k`.
    #[serde(default)]
    pub periods: u32,
}

fn default_length() -> f64 {
    std::f64::consts::PI
}

fn one() -> u32 {
    1
}

impl TrajectoryConfig {
    pub fn build(&self) -> Result<WallTrajectory> {
        match self.kind {
            TrajectoryKind::Static => WallTrajectory::static_cavity(self.length),
            TrajectoryKind::Sinusoidal => {
                WallTrajectory::sinusoidal(self.length, self.delta_l, self.k_drive, self.periods)
            }
            TrajectoryKind::LawWu => {
                WallTrajectory::law_wu(self.length, self.delta_l, self.k_drive, self.periods)
            }
            TrajectoryKind::Custom => Err(CavityError::Config(
                "custom trajectories are only available through the library".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOrigin {
    #[default]
    Absolute,
    /// Times count from the end of the motion.
    MotionEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Grid,
    LawWuExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Length,
    DeltaL,
    KDrive,
    Periods,
    /// Replaces `eval_times` by the single swept value.
    EvalTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Moore residual bound in units of `L`.
    pub moore: f64,
    /// Spectrum truncation tolerance on the last octave.
    pub spectrum_rel: f64,
    pub l_max_start: usize,
    pub l_max_ceiling: usize,
    /// Out-modes reported in the spectrum; all up to `l_max` when absent.
    pub out_modes: Option<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SpectrumOptions::default();
        Self {
            moore: 1e-10,
            spectrum_rel: s.rel_tol,
            l_max_start: s.l_max_start,
            l_max_ceiling: s.l_max_ceiling,
            out_modes: None,
        }
    }
}

impl Tolerances {
    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            l_max_start: self.l_max_start,
            l_max_ceiling: self.l_max_ceiling,
            rel_tol: self.spectrum_rel,
            out_modes: self.out_modes,
            ..SpectrumOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOutput {
    pub file: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// `τ` range; one period `[t - L, t + L]` around each evaluation time
    /// when absent.
    pub range: Option<[f64; 2]>,
}

fn default_samples() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityOutput {
    pub file: String,
    #[serde(default = "default_grid")]
    pub nx: usize,
    #[serde(default = "default_grid")]
    pub nt: usize,
    /// Time span sampled after each evaluation time, in units of `L`.
    #[serde(default = "two")]
    pub span: f64,
}

fn default_grid() -> usize {
    64
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOutput {
    pub file: String,
    pub beta_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub energy: bool,
    pub sum_rule: bool,
    pub symmetry_check: bool,
    pub profile: Option<ProfileOutput>,
    pub density2d: Option<DensityOutput>,
    pub spectrum: Option<SpectrumOutput>,
}

impl Outputs {
    pub fn needs_spectrum(&self) -> bool {
        self.spectrum.is_some() || self.sum_rule || self.symmetry_check
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trajectory: TrajectoryConfig,
    pub eval_times: Vec<f64>,
    #[serde(default)]
    pub time_origin: TimeOrigin,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default)]
    pub time_reading: TimeReading,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
    /// `[A, B, C, D]`, rescaled to unit determinant.
    pub seed_moebius: Option<[f64; 4]>,
    #[serde(default = "one_usize")]
    pub workers: usize,
}

fn one_usize() -> usize {
    1
}

/// One concrete run: a trajectory and absolute evaluation times.
#[derive(Debug, Clone)]
pub struct RunPoint {
    pub sweep_value: Option<f64>,
    pub trajectory: WallTrajectory,
    pub eval_times: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CavityError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CavityError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::from_toml(&text)?, text))
    }

    pub fn seed(&self) -> Result<Option<MoebiusElement>> {
        self.seed_moebius
            .map(|[a, b, c, d]| {
                MoebiusElement::new(a, b, c, d).map_err(|e| CavityError::Config(e.to_string()))
            })
            .transpose()
    }

    /// Expands the sweep and checks every point before anything runs.
    pub fn points(&self) -> Result<Vec<RunPoint>> {
        let cfg_err = |msg: String| CavityError::Config(msg);
        if self.workers == 0 {
            return Err(cfg_err("workers must be at least 1".into()));
        }
        if !(self.tolerances.moore > 0.0) {
            return Err(cfg_err("tolerances.moore must be positive".into()));
        }
        if self.outputs.symmetry_check && self.seed()?.is_none() {
            return Err(cfg_err("outputs.symmetry_check needs seed_moebius".into()));
        }
        if let Some(p) = &self.outputs.profile {
            if p.samples < 2 {
                return Err(cfg_err("outputs.profile.samples must be at least 2".into()));
            }
            if let Some([lo, hi]) = p.range {
                if !(lo < hi) {
                    return Err(cfg_err(format!(
                        "outputs.profile.range [{lo}, {hi}] is empty"
                    )));
                }
            }
        }
        let mut variants: Vec<(Option<f64>, TrajectoryConfig, Vec<f64>)> = Vec::new();
        match &self.sweep {
            None => variants.push((None, self.trajectory.clone(), self.eval_times.clone())),
            Some(s) => {
                if s.values.is_empty() {
                    return Err(cfg_err("sweep.values is empty".into()));
                }
                for &v in &s.values {
                    let mut tc = self.trajectory.clone();
                    let mut times = self.eval_times.clone();
                    let as_int = || -> Result<u32> {
                        if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
                            return Err(cfg_err(format!(
                                "sweep value {v} must be a non-negative integer"
                            )));
                        }
                        Ok(v as u32)
                    };
                    match s.parameter {
                        SweepParameter::Length => tc.length = v,
                        SweepParameter::DeltaL => tc.delta_l = v,
                        SweepParameter::KDrive => tc.k_drive = as_int()?,
                        SweepParameter::Periods => tc.periods = as_int()?,
                        SweepParameter::EvalTime => times = vec![v],
                    }
                    variants.push((Some(v), tc, times));
                }
            }
        }

        let mut points = Vec::with_capacity(variants.len());
        for (value, tc, times) in variants {
            let traj = tc.build().map_err(|e| cfg_err(e.to_string()))?;
            let violations = validate_trajectory(&traj);
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(cfg_err(format!("invalid trajectory: {}", list.join("; "))));
            }
            if self.backend == BackendChoice::LawWuExact && traj.kind() != TrajectoryKind::LawWu {
                return Err(cfg_err(
                    "backend law_wu_exact needs a law_wu trajectory".into(),
                ));
            }
            if times.is_empty() {
                return Err(cfg_err("eval_times is empty".into()));
            }
            let origin = match self.time_origin {
                TimeOrigin::Absolute => 0.0,
                TimeOrigin::MotionEnd => traj.t_motion(),
            };
            let times: Vec<f64> = times.iter().map(|t| t + origin).collect();
            for &t in &times {
                if !t.is_finite() || t < 0.0 {
                    return Err(cfg_err(format!(
                        "evaluation time {t} must be finite and non-negative"
                    )));
                }
                if self.outputs.needs_spectrum() && t < traj.t_motion() {
                    return Err(cfg_err(format!(
                        "spectra need evaluation times after the motion ends at {}, got {t}",
                        traj.t_motion()
                    )));
                }
            }
            points.push(RunPoint {
                sweep_value: value,
                trajectory: traj,
                eval_times: times,
            });
        }
        Ok(points)
    }
}

/// Hex SHA-256 of the raw configuration text.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        eval_times = [1.0]
        [trajectory]
        kind = "static"
        [outputs]
        energy = true
    "#;

    #[test]
    fn parses_defaults() {
        let c = RunConfig::from_toml(BASIC).unwrap();
        assert_eq!(c.trajectory.length, std::f64::consts::PI);
        assert_eq!(c.workers, 1);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.points().unwrap().len(), 1);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASIC.replace("energy = true", "energy = true\nbogus = 3");
        assert!(matches!(
            RunConfig::from_toml(&text),
            Err(CavityError::Config(_))
        ));
    }

    #[test]
    fn sweep_expands_and_validates() {
        let text = r#"
            eval_times = [0.5]
            time_origin = "motion_end"
            [trajectory]
            kind = "sinusoidal"
            delta_l = 0.01
            k_drive = 2
            [sweep]
            parameter = "periods"
            values = [1, 2, 3]
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        let pts = c.points().unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[2].trajectory.t_motion(), 3.0 * std::f64::consts::PI);
        assert_eq!(pts[2].eval_times, vec![0.5 + 3.0 * std::f64::consts::PI]);

        let bad = text.replace("values = [1, 2, 3]", "values = [1.5]");
        assert!(RunConfig::from_toml(&bad).unwrap().points().is_err());
        let fast = text.replace("delta_l = 0.01", "delta_l = 0.6");
        assert!(RunConfig::from_toml(&fast).unwrap().points().is_err());
    }

    #[test]
    fn spectra_need_times_after_motion() {
        let text = r#"
            eval_times = [1.0]
            [trajectory]
            kind = "sinusoidal"
            delta_l = 0.01
            periods = 2
            [outputs]
            sum_rule = true
        "#;
        assert!(RunConfig::from_toml(text).unwrap().points().is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
