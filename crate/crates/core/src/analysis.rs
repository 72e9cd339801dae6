//! End-to-end validity analysis of one Hamiltonian on one grid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::conditions::{build_report, ConditionConfig, ConditionReport};
use crate::holonomy::{level_holonomy, Holonomy, HolonomyOptions};
use crate::linalg::CMatrix;
use crate::models::HamiltonianModel;
use crate::spectral::{
    anchor_frames, smooth_frames, snapshot_decompose, SnapshotSpectrum, DEFAULT_GROUP_TOL,
};
use crate::{Error, Result, TimeGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GaugeMode {
    /// The model's reference frames when it has any, parallel transport
    /// otherwise.
    #[default]
    Auto,
    ParallelTransport,
    Anchored,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub group_tol: f64,
    pub gauge: GaugeMode,
    pub conditions: ConditionConfig,
    pub holonomy: HolonomyOptions,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            group_tol: DEFAULT_GROUP_TOL,
            gauge: GaugeMode::Auto,
            conditions: ConditionConfig::default(),
            holonomy: HolonomyOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub spectrum: SnapshotSpectrum,
    /// One holonomy per level, each starting from the identity.
    pub holonomies: Vec<Holonomy>,
    pub report: ConditionReport,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn ground_holonomy(&self) -> &Holonomy {
        &self.holonomies[0]
    }

    pub fn necessary_pass(&self) -> bool {
        self.report.necessary_pass
    }

    pub fn sufficient_pass(&self) -> bool {
        self.report.sufficient_pass
    }
}

/// Applies the requested gauge to a raw spectrum. Returns the spectrum and
/// any warning about a fallback.
pub fn fix_gauge(
    spectrum: SnapshotSpectrum,
    model: &dyn HamiltonianModel,
    mode: GaugeMode,
) -> Result<(SnapshotSpectrum, Option<String>)> {
    match mode {
        GaugeMode::ParallelTransport => Ok((smooth_frames(spectrum)?, None)),
        GaugeMode::Anchored => {
            let anchors = model
                .gauge_anchors()
                .ok_or(Error::invalid("gauge", "model has no reference frames"))?;
            Ok((anchor_frames(spectrum, &anchors)?, None))
        }
        GaugeMode::Auto => match model.gauge_anchors() {
            None => Ok((smooth_frames(spectrum)?, None)),
            Some(anchors) => match anchor_frames(spectrum.clone(), &anchors) {
                Ok(s) => Ok((s, None)),
                Err(Error::AnchorDegenerate { level, k }) => Ok((
                    smooth_frames(spectrum)?,
                    Some(format!(
                        "reference frame of level {level} degenerate at grid point {k}; \
                         using parallel transport"
                    )),
                )),
                Err(e) => Err(e),
            },
        },
    }
}

pub fn analyze(
    model: &dyn HamiltonianModel,
    grid: &TimeGrid,
    config: &AnalysisConfig,
) -> Result<Analysis> {
    config.conditions.validate()?;
    let raw = snapshot_decompose(model, grid, config.group_tol)?;
    let (spectrum, gauge_warning) = fix_gauge(raw, model, config.gauge)?;
    let holonomies = (0..spectrum.level_count())
        .map(|n| {
            let d = spectrum.structure().multiplicity(n);
            level_holonomy(&spectrum, n, &CMatrix::identity(d), config.holonomy)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(&spectrum, &holonomies[0], &config.conditions)?;
    let mut warnings: Vec<String> = gauge_warning.into_iter().collect();
    warnings.extend(report.warnings.iter().cloned());
    Ok(Analysis {
        spectrum,
        holonomies,
        report,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{gamma_necessary_closed_form, gamma_sufficient_closed_forms};
    use crate::models::{gamma_hamiltonian, GammaParams};
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn equator_passes_both_conditions() {
        let p = GammaParams::new(1.0, 0.01, FRAC_PI_2, 20.0).unwrap();
        let model = gamma_hamiltonian(p).unwrap();
        let grid = TimeGrid::new(0.0, 20.0, 400).unwrap();
        let a = analyze(&model, &grid, &AnalysisConfig::default()).unwrap();
        assert!(a.necessary_pass());
        assert!(a.sufficient_pass());
        let expected = gamma_necessary_closed_form(&p);
        assert!((a.report.peak_necessary() - expected).abs() < 1e-4 * expected);
        let cf = gamma_sufficient_closed_forms(&p, 20.0);
        assert!((a.report.peak_dn() - cf.d1).abs() < 1e-4 * cf.d1);
    }

    #[test]
    fn fast_drive_fails_necessary() {
        let p = GammaParams::new(1.0, 2.0, 1.0, 1.0).unwrap();
        let model = gamma_hamiltonian(p).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let a = analyze(&model, &grid, &AnalysisConfig::default()).unwrap();
        assert!(!a.necessary_pass());
        assert!(!a.sufficient_pass());
    }

    #[test]
    fn anchored_mode_requires_anchors() {
        use crate::models::sampled_model;
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let h = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let model = sampled_model(&g, alloc::vec![h.clone(), h.clone(), h]).unwrap();
        let cfg = AnalysisConfig {
            gauge: GaugeMode::Anchored,
            ..AnalysisConfig::default()
        };
        assert!(matches!(
            analyze(&model, &g, &cfg),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
