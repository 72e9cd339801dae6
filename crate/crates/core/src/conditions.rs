//! Validity tests for the degenerate adiabatic approximation.
//!
//! For a system started in the ground eigenspace (level 0):
//!
//! * necessary margin, per excited level `n` and time:
//!   `hbar ||M^{n0} / Delta_{n0}||_1`, with `||.||_1` the maximum column sum;
//! * practical sufficient margins, compared against the smallest non-null
//!   entry of row `h` of the ground-level holonomy, `u_floor(t)`:
//!   `D^0(t) = hbar d_0 int_0^t sum_{n>=1} sum_{k,i} |[M^{0n} M^{0n dagger}]_{ki}| / |Delta_{0n}|`
//!   and, for `n >= 1`,
//!   `D^n_g(t) = hbar / |Delta_{n0}(0)| (sum_k |[M^{0n}(t)]_{kg}| + d_n sum_{k,l} |[M^{0n}(0)]_{kl}|)`.
//!
//! A margin passes when it is at most `eta` (times `u_floor` for the
//! sufficient test); `eta` stands in for "much smaller than".

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::holonomy::Holonomy;
use crate::linalg::{one_norm, CMatrix, C64};
use crate::models::GammaParams;
use crate::spectral::{overlap_block, OverlapBlock, OverlapMethod, SnapshotSpectrum};
use crate::{Error, Result, TimeGrid};

pub const DEFAULT_ETA: f64 = 0.1;

/// Holonomy entries below this magnitude are treated as null.
pub const DEFAULT_NULL_CUTOFF: f64 = 1e-6;

/// Relative gap variation above which a report warns that `D^n` uses the
/// initial gap only.
pub const GAP_VARIATION_WARNING: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionConfig {
    pub eta: f64,
    pub null_cutoff: f64,
    /// Initial-condition row `h` of the ground holonomy.
    pub row: usize,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        ConditionConfig {
            eta: DEFAULT_ETA,
            null_cutoff: DEFAULT_NULL_CUTOFF,
            row: 0,
        }
    }
}

impl ConditionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid("eta", "must lie in (0, 1)"));
        }
        if !(self.null_cutoff >= 0.0 && self.null_cutoff < 1.0) {
            return Err(Error::invalid("null_cutoff", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// `hbar ||M^{n0}||_1 / |Delta_{n0}|` for a block `M^{n0}` (`d_n x d_0`).
pub fn necessary_margin(block: &OverlapBlock, gap: f64, hbar: f64) -> Result<f64> {
    if gap == 0.0 {
        return Err(Error::ZeroGap {
            n: block.n,
            m: block.m,
            k: block.k,
        });
    }
    Ok(hbar * one_norm(&block.entries)? / gap.abs())
}

/// Integrand of `D^0`: `sum_n sum_{k,i} |[M^{0n} M^{0n dagger}]_{ki}| / |Delta_{0n}|`
/// over excited levels at one time.
pub fn d0_integrand(blocks: &[&CMatrix], gaps: &[f64]) -> Result<f64> {
    if blocks.len() != gaps.len() {
        return Err(Error::DimensionMismatch {
            context: "D0 blocks vs gaps",
            expected: blocks.len(),
            found: gaps.len(),
        });
    }
    let mut sum = 0.0;
    for (i, (m, &gap)) in blocks.iter().zip(gaps).enumerate() {
        if gap == 0.0 {
            return Err(Error::ZeroGap { n: 0, m: i + 1, k: 0 });
        }
        sum += (*m * &m.adjoint()).entry_abs_sum() / gap.abs();
    }
    Ok(sum)
}

/// Cumulative `D^0(t_k)` by the trapezoid rule; `blocks[k][i]` is
/// `M^{0,i+1}(t_k)` and `gaps[k][i]` the matching `Delta_{0,i+1}(t_k)`.
pub fn sufficient_d0(
    grid: &TimeGrid,
    blocks: &[Vec<CMatrix>],
    gaps: &[Vec<f64>],
    d0: usize,
    hbar: f64,
) -> Result<Vec<f64>> {
    if blocks.len() != grid.len() || gaps.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "D0 series vs grid points",
            expected: grid.len(),
            found: blocks.len().min(gaps.len()),
        });
    }
    let integrand: Vec<f64> = blocks
        .iter()
        .zip(gaps)
        .enumerate()
        .map(|(k, (b, g))| {
            let refs: Vec<&CMatrix> = b.iter().collect();
            d0_integrand(&refs, g).map_err(|e| match e {
                Error::ZeroGap { n, m, .. } => Error::ZeroGap { n, m, k },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let scale = hbar * d0 as f64 * grid.dt();
    let mut out = Vec::with_capacity(integrand.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in integrand.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * scale;
        out.push(acc);
    }
    Ok(out)
}

/// `D^n_{g}(t)` from `M^{0n}(t)`, `M^{0n}(0)` (both `d_0 x d_n`) and the
/// initial gap `Delta_{n0}(0)`.
pub fn sufficient_dn(
    block_t: &CMatrix,
    block_0: &CMatrix,
    gap0: f64,
    dn: usize,
    hbar: f64,
    g: usize,
) -> Result<f64> {
    if gap0 == 0.0 {
        return Err(Error::ZeroGap { n: 0, m: 0, k: 0 });
    }
    if g >= block_t.cols() {
        return Err(Error::IndexOutOfRange {
            what: "g_n",
            index: g,
            len: block_t.cols(),
        });
    }
    let column: f64 = (0..block_t.rows()).map(|k| block_t[(k, g)].norm()).sum();
    Ok(hbar / gap0.abs() * (column + dn as f64 * block_0.entry_abs_sum()))
}

/// Smallest entry magnitude of a holonomy row, ignoring entries below
/// `null_cutoff`. `None` when every entry is null.
pub fn u_floor(row: &[C64], null_cutoff: f64) -> Option<f64> {
    row.iter()
        .map(|z| z.norm())
        .filter(|&m| m >= null_cutoff)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))))
}

/// Overlap blocks and gaps feeding the condition margins, sampled on the
/// spectrum's grid.
#[derive(Clone, Debug)]
pub struct ConditionInputs {
    pub grid: TimeGrid,
    pub hbar: f64,
    pub multiplicities: Vec<usize>,
    /// `m_n0[n][k] = M^{n0}(t_k)`; index 0 unused (empty).
    pub m_n0: Vec<Vec<OverlapBlock>>,
    /// `m_0n[n][k] = M^{0n}(t_k)`; index 0 unused (empty).
    pub m_0n: Vec<Vec<CMatrix>>,
    /// `gaps[n][k] = Delta_{n0}(t_k)`.
    pub gaps: Vec<Vec<f64>>,
}

pub fn condition_inputs(spectrum: &SnapshotSpectrum) -> Result<ConditionInputs> {
    let levels = spectrum.level_count();
    let grid = *spectrum.grid();
    let mut m_n0 = Vec::with_capacity(levels);
    let mut m_0n = Vec::with_capacity(levels);
    let mut gaps = Vec::with_capacity(levels);
    m_n0.push(Vec::new());
    m_0n.push(Vec::new());
    gaps.push(alloc::vec![0.0; grid.len()]);
    for n in 1..levels {
        let mut down = Vec::with_capacity(grid.len());
        let mut up = Vec::with_capacity(grid.len());
        let mut g = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            down.push(overlap_block(spectrum, n, 0, k, OverlapMethod::FiniteDifference)?);
            up.push(overlap_block(spectrum, 0, n, k, OverlapMethod::FiniteDifference)?.entries);
            let gap = spectrum.structure().gap(n, 0, k);
            if gap == 0.0 {
                return Err(Error::ZeroGap { n, m: 0, k });
            }
            g.push(gap);
        }
        m_n0.push(down);
        m_0n.push(up);
        gaps.push(g);
    }
    Ok(ConditionInputs {
        grid,
        hbar: spectrum.hbar(),
        multiplicities: spectrum.structure().multiplicities().to_vec(),
        m_n0,
        m_0n,
        gaps,
    })
}

/// `necessary[n][k]`; index 0 is empty.
pub fn necessary_margins(inputs: &ConditionInputs) -> Result<Vec<Vec<f64>>> {
    let mut out = alloc::vec![Vec::new()];
    for n in 1..inputs.multiplicities.len() {
        out.push(
            inputs.m_n0[n]
                .iter()
                .zip(&inputs.gaps[n])
                .map(|(b, &gap)| necessary_margin(b, gap, inputs.hbar))
                .collect::<Result<_>>()?,
        );
    }
    Ok(out)
}

/// Passes when every necessary margin is at most `eta`.
pub fn necessary_check(margins: &[Vec<f64>], eta: f64) -> bool {
    margins.iter().flatten().all(|&m| m <= eta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SufficientMargins {
    pub d0: Vec<f64>,
    /// `dn[n][g][k]`; index 0 is empty.
    pub dn: Vec<Vec<Vec<f64>>>,
    pub u_floor: Vec<f64>,
}

impl SufficientMargins {
    /// Largest `D` at grid point `k` across `D^0` and all `D^n_g`.
    pub fn worst_at(&self, k: usize) -> f64 {
        self.dn
            .iter()
            .flatten()
            .map(|series| series[k])
            .fold(self.d0[k], f64::max)
    }
}

/// Computes `D^0`, `D^n_g` and `u_floor`, and the verdict
/// `D <= eta * u_floor` at every grid point.
pub fn practical_sufficient_check(
    inputs: &ConditionInputs,
    ground_holonomy: &Holonomy,
    config: &ConditionConfig,
) -> Result<(bool, SufficientMargins)> {
    config.validate()?;
    let grid = &inputs.grid;
    if ground_holonomy.values().len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "ground holonomy vs grid points",
            expected: grid.len(),
            found: ground_holonomy.values().len(),
        });
    }
    let levels = inputs.multiplicities.len();
    let d0 = inputs.multiplicities[0];
    if config.row >= d0 {
        return Err(Error::IndexOutOfRange {
            what: "initial-condition row",
            index: config.row,
            len: d0,
        });
    }

    let per_k_blocks: Vec<Vec<CMatrix>> = (0..grid.len())
        .map(|k| (1..levels).map(|n| inputs.m_0n[n][k].clone()).collect())
        .collect();
    let per_k_gaps: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| (1..levels).map(|n| -inputs.gaps[n][k]).collect())
        .collect();
    let d0_series = sufficient_d0(grid, &per_k_blocks, &per_k_gaps, d0, inputs.hbar)?;

    let mut dn = alloc::vec![Vec::new()];
    for n in 1..levels {
        let d = inputs.multiplicities[n];
        let gap0 = inputs.gaps[n][0];
        let block0 = &inputs.m_0n[n][0];
        let mut per_g = Vec::with_capacity(d);
        for g in 0..d {
            per_g.push(
                inputs.m_0n[n]
                    .iter()
                    .map(|bt| sufficient_dn(bt, block0, gap0, d, inputs.hbar, g))
                    .collect::<Result<Vec<f64>>>()
                    .map_err(|e| match e {
                        Error::ZeroGap { .. } => Error::ZeroGap { n, m: 0, k: 0 },
                        other => other,
                    })?,
            );
        }
        dn.push(per_g);
    }

    let u_floor_series: Vec<f64> = ground_holonomy
        .values()
        .iter()
        .enumerate()
        .map(|(k, u)| {
            u_floor(u.row(config.row), config.null_cutoff)
                .ok_or(Error::NoNonNullCoefficient { row: config.row, k })
        })
        .collect::<Result<_>>()?;

    let margins = SufficientMargins {
        d0: d0_series,
        dn,
        u_floor: u_floor_series,
    };
    let pass = (0..grid.len()).all(|k| margins.worst_at(k) <= config.eta * margins.u_floor[k]);
    Ok((pass, margins))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelMargins {
    pub level: usize,
    pub multiplicity: usize,
    /// Necessary margin per grid point.
    pub necessary: Vec<f64>,
    /// `D^n_g` per `g`, per grid point.
    pub sufficient: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub times: Vec<f64>,
    pub config: ConditionConfig,
    /// Excited levels `n = 1..`.
    pub levels: Vec<LevelMargins>,
    pub d0: Vec<f64>,
    pub u_floor: Vec<f64>,
    pub necessary_pass: bool,
    pub sufficient_pass: bool,
    pub warnings: Vec<String>,
}

impl ConditionReport {
    pub fn peak_necessary(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| l.necessary.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn peak_d0(&self) -> f64 {
        self.d0.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `D^n_g` over excited levels, `g` and time.
    pub fn peak_dn(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| l.sufficient.iter().flatten().copied())
            .fold(0.0, f64::max)
    }

    pub fn min_u_floor(&self) -> f64 {
        self.u_floor.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest necessary margin at grid point `k` over excited levels.
    pub fn necessary_at(&self, k: usize) -> f64 {
        self.levels.iter().map(|l| l.necessary[k]).fold(0.0, f64::max)
    }

    /// Largest `D^n_g` at grid point `k`.
    pub fn dn_at(&self, k: usize) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| l.sufficient.iter().map(move |s| s[k]))
            .fold(0.0, f64::max)
    }
}

/// Evaluates both conditions on a gauge-fixed spectrum given the ground
/// level's holonomy on the same grid.
pub fn build_report(
    spectrum: &SnapshotSpectrum,
    ground_holonomy: &Holonomy,
    config: &ConditionConfig,
) -> Result<ConditionReport> {
    config.validate()?;
    let inputs = condition_inputs(spectrum)?;
    let necessary = necessary_margins(&inputs)?;
    let necessary_pass = necessary_check(&necessary, config.eta);
    let (sufficient_pass, margins) = practical_sufficient_check(&inputs, ground_holonomy, config)?;

    let mut warnings = Vec::new();
    for n in 1..inputs.multiplicities.len() {
        let g = &inputs.gaps[n];
        let lo = g.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        let hi = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let variation = (hi - lo) / g[0].abs();
        if variation > GAP_VARIATION_WARNING {
            warnings.push(format!(
                "gap Delta_{n}0 varies by {:.1}% over the grid; D^{n} uses the gap at t = 0",
                100.0 * variation
            ));
        }
    }

    let levels = (1..inputs.multiplicities.len())
        .zip(necessary.into_iter().skip(1))
        .zip(margins.dn.into_iter().skip(1))
        .map(|((n, necessary), sufficient)| LevelMargins {
            level: n,
            multiplicity: inputs.multiplicities[n],
            necessary,
            sufficient,
        })
        .collect();

    Ok(ConditionReport {
        times: spectrum.grid().times().collect(),
        config: *config,
        levels,
        d0: margins.d0,
        u_floor: margins.u_floor,
        necessary_pass,
        sufficient_pass,
        warnings,
    })
}

/// Necessary margin of the Dirac-matrix model from its overlap entries and
/// the column-sum norm: `w sin(theta) (sin(theta) + |cos(theta)|) / (2b)`.
pub fn gamma_necessary_closed_form(params: &GammaParams) -> f64 {
    let (s, c) = params.theta.sin_cos();
    params.w * s * (s + c.abs()) / (2.0 * params.b)
}

/// The same margin written as `w sin(theta) |sin(theta) + cos(theta)| / (2b)`;
/// equal to [`gamma_necessary_closed_form`] for `theta` in `[0, pi/2]`.
pub fn gamma_necessary_abs_form(params: &GammaParams) -> f64 {
    let (s, c) = params.theta.sin_cos();
    params.w * s * (s + c).abs() / (2.0 * params.b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSufficientClosedForms {
    /// `w^2 t sin^2(theta) / b`.
    pub d0: f64,
    /// `5 w sin(theta) (|cos(theta)| + sin(theta)) / (2b)`.
    pub d1: f64,
    /// `|[U^0(t)]_00| = sqrt(1 - sin^2(theta) sin^2(w t cos(theta) / 2))`.
    pub u00: f64,
    /// `|[U^0(t)]_01| = sin(theta) |sin(w t cos(theta) / 2)|`.
    pub u01: f64,
}

pub fn gamma_sufficient_closed_forms(params: &GammaParams, t: f64) -> GammaSufficientClosedForms {
    let GammaParams { b, w, theta, .. } = *params;
    let (s, c) = theta.sin_cos();
    let phase = (0.5 * w * t * c).sin();
    GammaSufficientClosedForms {
        d0: w * w * t * s * s / b,
        d1: 5.0 * w * s * (c.abs() + s) / (2.0 * b),
        u00: (1.0 - s * s * phase * phase).max(0.0).sqrt(),
        u01: s * phase.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn params(w: f64, theta: f64) -> GammaParams {
        GammaParams::with_natural_time(1.0, w, theta).unwrap()
    }

    #[test]
    fn closed_forms_at_equator() {
        let p = params(0.2, FRAC_PI_2);
        assert!((gamma_necessary_closed_form(&p) - 0.1).abs() < 1e-15);
        let s = gamma_sufficient_closed_forms(&p, 3.0);
        assert!((s.u00 - 1.0).abs() < 1e-15);
        assert!(s.u01.abs() < 1e-15);
        assert!((s.d1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn u01_at_pi_over_three() {
        let p = params(0.1, FRAC_PI_3);
        let s = gamma_sufficient_closed_forms(&p, 10.0);
        assert!((s.u01 - FRAC_PI_3.sin() * 0.25f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn sufficient_dominates_necessary_by_five() {
        for i in 0..=50 {
            let theta = FRAC_PI_2 * i as f64 / 50.0;
            let p = params(0.1, theta);
            let n = gamma_necessary_abs_form(&p);
            let d1 = gamma_sufficient_closed_forms(&p, 0.0).d1;
            assert!(d1 >= 5.0 * n - 1e-15);
        }
    }

    #[test]
    fn abs_form_differs_past_equator() {
        let p = params(0.1, 2.5);
        assert!(gamma_necessary_closed_form(&p) > gamma_necessary_abs_form(&p));
    }

    #[test]
    fn necessary_margin_rejects_zero_gap() {
        let b = OverlapBlock {
            n: 1,
            m: 0,
            k: 4,
            entries: CMatrix::identity(2),
        };
        assert_eq!(
            necessary_margin(&b, 0.0, 1.0),
            Err(Error::ZeroGap { n: 1, m: 0, k: 4 })
        );
        assert_eq!(necessary_margin(&b, -2.0, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn d0_vanishes_at_start_and_for_zero_blocks() {
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let blocks = alloc::vec![alloc::vec![CMatrix::zeros(2, 2)]; grid.len()];
        let gaps = alloc::vec![alloc::vec![-1.0]; grid.len()];
        let d0 = sufficient_d0(&grid, &blocks, &gaps, 2, 1.0).unwrap();
        assert!(d0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dn_uses_column_and_total_sums() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        // column 1: 6; total: 10; d_n = 2 -> (6 + 20) / 2
        assert_eq!(sufficient_dn(&m, &m, 2.0, 2, 1.0, 1).unwrap(), 13.0);
        assert!(sufficient_dn(&m, &m, 0.0, 2, 1.0, 1).is_err());
        assert!(sufficient_dn(&m, &m, 1.0, 2, 1.0, 2).is_err());
    }

    #[test]
    fn u_floor_skips_null_entries() {
        let row = [C64::new(0.9, 0.0), C64::new(1e-9, 0.0)];
        assert_eq!(u_floor(&row, 1e-6), Some(0.9));
        let row = [C64::new(0.9, 0.0), C64::new(0.0, 0.2)];
        assert_eq!(u_floor(&row, 1e-6), Some(0.2));
        assert_eq!(u_floor(&[C64::new(0.0, 0.0)], 1e-6), None);
    }

    #[test]
    fn config_validation() {
        let mut c = ConditionConfig::default();
        assert!(c.validate().is_ok());
        c.eta = 1.0;
        assert!(c.validate().is_err());
    }
}
