//! Run configuration: a TOML document whose values can be overridden from
//! the command line.
//!
//! ```toml
//! [model]
//! kind = "gamma"          # or "schedule"
//! b = 1.0
//! w = 0.01
//! theta = 1.0
//! hbar = 1.0
//! schedule = "run.json"   # sampled Hamiltonian, used when kind = "schedule"
//!
//! [grid]
//! t_end = 100.0           # default: 1/w (gamma) or the schedule's end
//! dt = 0.01               # default: 1e-2 / max(b, w) (gamma) or the schedule spacing
//! analysis_stride = 1     # conditions use every n-th propagation point
//!
//! [conditions]
//! eta = 0.1
//! null_cutoff = 1e-6
//! row = 0
//! group_tol = 1e-8
//! gauge = "auto"          # "auto", "parallel-transport" or "anchored"
//!
//! [output]
//! dir = "adiacheck-out"
//! timestamp = true
//!
//! [sweep]
//! w_over_b = [0.01, 0.1, 1.0, 2.0]
//! theta = [0.0, 0.5, 1.0, 1.5707963267948966]
//! propagate = true
//!
//! threads = 4
//! ```

use std::path::{Path, PathBuf};

use adiacheck_core::analysis::{AnalysisConfig, GaugeMode};
use adiacheck_core::conditions::ConditionConfig;
use adiacheck_core::holonomy::HolonomyOptions;
use adiacheck_core::{GammaParams, TimeGrid};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gamma,
    Schedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub b: f64,
    pub w: f64,
    pub theta: f64,
    pub hbar: f64,
    pub schedule: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Gamma,
            b: 1.0,
            w: 0.01,
            theta: 1.0,
            hbar: 1.0,
            schedule: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub analysis_stride: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            t_end: None,
            dt: None,
            analysis_stride: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeChoice {
    Auto,
    ParallelTransport,
    Anchored,
}

impl From<GaugeChoice> for GaugeMode {
    fn from(g: GaugeChoice) -> Self {
        match g {
            GaugeChoice::Auto => GaugeMode::Auto,
            GaugeChoice::ParallelTransport => GaugeMode::ParallelTransport,
            GaugeChoice::Anchored => GaugeMode::Anchored,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsConfig {
    pub eta: f64,
    pub null_cutoff: f64,
    pub row: usize,
    pub group_tol: f64,
    pub gauge: GaugeChoice,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        let c = ConditionConfig::default();
        ConditionsConfig {
            eta: c.eta,
            null_cutoff: c.null_cutoff,
            row: c.row,
            group_tol: adiacheck_core::spectral::DEFAULT_GROUP_TOL,
            gauge: GaugeChoice::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub timestamp: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("adiacheck-out"),
            timestamp: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub w_over_b: Vec<f64>,
    pub theta: Vec<f64>,
    pub propagate: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            w_over_b: vec![0.01, 0.05, 0.1, 0.5, 1.0, 2.0],
            theta: vec![0.0, 0.25, 0.5, 1.0, std::f64::consts::FRAC_PI_2, 2.0, 3.0],
            propagate: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub conditions: ConditionsConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let c = &self.conditions;
        if !(c.eta > 0.0 && c.eta < 1.0) {
            bail!("eta must lie in (0, 1), got {}", c.eta);
        }
        if !(c.null_cutoff >= 0.0 && c.null_cutoff < 1.0) {
            bail!("null_cutoff must lie in [0, 1), got {}", c.null_cutoff);
        }
        if self.grid.analysis_stride == 0 {
            bail!("analysis_stride must be at least 1");
        }
        if let Some(dt) = self.grid.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("dt must be positive, got {dt}");
            }
        }
        if let Some(t) = self.grid.t_end {
            if !(t > 0.0 && t.is_finite()) {
                bail!("t_end must be positive, got {t}");
            }
        }
        if self.model.kind == ModelKind::Schedule && self.model.schedule.is_none() {
            bail!("model kind \"schedule\" needs a schedule file");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        Ok(())
    }

    pub fn gamma_params(&self) -> anyhow::Result<GammaParams> {
        let m = &self.model;
        let t_end = self.gamma_t_end(m.w)?;
        Ok(GammaParams::new(m.b, m.w, m.theta, t_end)?.with_hbar(m.hbar)?)
    }

    /// `t_end` for a gamma run with drive frequency `w`: the configured value
    /// or `1/w`.
    pub fn gamma_t_end(&self, w: f64) -> anyhow::Result<f64> {
        match self.grid.t_end {
            Some(t) => Ok(t),
            None if w > 0.0 => Ok(1.0 / w),
            None => bail!("w = 0 has no natural time scale; set t_end"),
        }
    }

    /// Propagation grid on `[t_start, t_end]` with spacing at most `dt` and a
    /// step count that is a multiple of the analysis stride.
    pub fn grid_for(&self, t_start: f64, t_end: f64, dt: f64) -> anyhow::Result<TimeGrid> {
        if !(t_end > t_start) {
            bail!("empty time window [{t_start}, {t_end}]");
        }
        let stride = self.grid.analysis_stride;
        let steps = ((t_end - t_start) / dt * (1.0 - 1e-12)).ceil().max(2.0) as usize;
        let steps = steps.div_ceil(stride) * stride;
        let steps = if steps / stride < 2 { 2 * stride } else { steps };
        Ok(TimeGrid::new(t_start, t_end, steps)?)
    }

    /// Default gamma spacing: `max(b, w) dt <= 1e-2`.
    pub fn gamma_dt(&self, b: f64, w: f64) -> f64 {
        self.grid.dt.unwrap_or(1e-2 / b.max(w))
    }

    pub fn analysis_config(&self) -> AnalysisConfig {
        let c = &self.conditions;
        AnalysisConfig {
            group_tol: c.group_tol,
            gauge: c.gauge.into(),
            conditions: ConditionConfig {
                eta: c.eta,
                null_cutoff: c.null_cutoff,
                row: c.row,
            },
            holonomy: HolonomyOptions::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_document() {
        let c: RunConfig = toml::from_str(
            "[model]\nw = 0.05\n[conditions]\neta = 0.2\ngauge = \"anchored\"\n",
        )
        .unwrap();
        assert_eq!(c.model.w, 0.05);
        assert_eq!(c.model.b, 1.0);
        assert_eq!(c.conditions.eta, 0.2);
        assert_eq!(c.conditions.gauge, GaugeChoice::Anchored);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_eta() {
        assert!(toml::from_str::<RunConfig>("[model]\nbee = 1.0\n").is_err());
        let mut c = RunConfig::default();
        c.conditions.eta = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_steps_are_stride_multiples() {
        let mut c = RunConfig::default();
        c.grid.analysis_stride = 7;
        let g = c.grid_for(0.0, 1.0, 0.01).unwrap();
        assert_eq!(g.steps() % 7, 0);
        assert!(g.dt() <= 0.01);
    }

    #[test]
    fn natural_time_is_inverse_drive() {
        let c = RunConfig::default();
        assert!((c.gamma_params().unwrap().total_time - 100.0).abs() < 1e-12);
    }
}
