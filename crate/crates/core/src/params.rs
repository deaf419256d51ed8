//! Problem parameters shared by both pipelines, and the sample-size formulas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange { name: &'static str, range: &'static str, value: f64 },
    #[error("strict-mode sample size {name} = {value:.3e} exceeds the feasibility cap {cap:.1e}")]
    Infeasible { name: &'static str, value: f64, cap: f64 },
}

/// How sample sizes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// Sizes come from the theoretical formulas with unit constants.
    Strict,
    /// Sizes come straight from configuration.
    #[default]
    Desk,
}

/// Accuracy, confidence and distributional bounds for a TDS run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdsParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Label bound `M`.
    #[serde(rename = "M")]
    pub label_bound: f64,
    /// Support radius `R`.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Representation norm bound `B`.
    #[serde(rename = "B")]
    pub norm_bound: f64,
    /// Kernel sup bound `A`.
    #[serde(rename = "A")]
    pub sup_bound: f64,
    /// Hypercontractivity constant `C`.
    #[serde(rename = "C")]
    pub hc_constant: f64,
    /// Hypercontractivity degree.
    pub ell_hc: u32,
    /// Subexponential tail exponent.
    pub gamma: f64,
    #[serde(default)]
    pub scale_mode: ScaleMode,
    /// Desk-mode reference / training sample size.
    #[serde(default = "default_desk_m")]
    pub desk_m: usize,
    /// Desk-mode verification / test sample size.
    #[serde(default = "default_desk_n")]
    pub desk_n: usize,
}

fn default_desk_m() -> usize {
    200
}

fn default_desk_n() -> usize {
    2000
}

/// Largest sample size strict mode will attempt to draw.
pub const STRICT_SAMPLE_CAP: f64 = 1e7;

/// Sample sizes chosen for a run, with the strict-formula values for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub m: usize,
    pub n: usize,
    pub strict_m: f64,
    pub strict_n: f64,
}

impl Default for TdsParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
            label_bound: 1.0,
            radius: 1.0,
            norm_bound: 1.0,
            sup_bound: 1.0,
            hc_constant: 1.0,
            ell_hc: 1,
            gamma: 1.0,
            scale_mode: ScaleMode::Desk,
            desk_m: default_desk_m(),
            desk_n: default_desk_n(),
        }
    }
}

impl TdsParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let open_unit = |name, value: f64| {
            if value > 0.0 && value < 1.0 {
                Ok(())
            } else {
                Err(ParamsError::OutOfRange { name, range: "(0, 1)", value })
            }
        };
        let at_least_one = |name, value: f64| {
            if value >= 1.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ParamsError::OutOfRange { name, range: "[1, inf)", value })
            }
        };
        open_unit("epsilon", self.epsilon)?;
        open_unit("delta", self.delta)?;
        at_least_one("M", self.label_bound)?;
        at_least_one("R", self.radius)?;
        at_least_one("B", self.norm_bound)?;
        at_least_one("A", self.sup_bound)?;
        at_least_one("C", self.hc_constant)?;
        at_least_one("ell_hc", self.ell_hc as f64)?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ParamsError::OutOfRange { name: "gamma", range: "(0, 1]", value: self.gamma });
        }
        at_least_one("desk_m", self.desk_m as f64)?;
        at_least_one("desk_n", self.desk_n as f64)?;
        Ok(())
    }

    /// Reference size `m = (ABM)^4 / eps^4 * ln(1/delta)` with unit constant.
    pub fn strict_kernel_m(&self) -> f64 {
        let abm = self.sup_bound * self.norm_bound * self.label_bound;
        abm.powi(4) / self.epsilon.powi(4) * (1.0 / self.delta).ln()
    }

    /// Verification size `N = m^2 (ABC / eps^4) (4C ln(4/delta))^(4 ell + 1)` with unit constant.
    pub fn strict_kernel_n(&self) -> f64 {
        let m = self.strict_kernel_m();
        let abc = self.sup_bound * self.norm_bound * self.hc_constant;
        let base = 4.0 * self.hc_constant * (4.0 / self.delta).ln();
        m * m * abc / self.epsilon.powi(4) * base.powf(4.0 * self.ell_hc as f64 + 1.0)
    }

    /// Sample sizes for the kernel pipeline under the configured scale mode.
    pub fn kernel_sample_sizes(&self) -> Result<SampleSizes, ParamsError> {
        let strict_m = self.strict_kernel_m();
        let strict_n = self.strict_kernel_n();
        match self.scale_mode {
            ScaleMode::Desk => Ok(SampleSizes { m: self.desk_m, n: self.desk_n, strict_m, strict_n }),
            ScaleMode::Strict => {
                Ok(SampleSizes { m: strict_size("m", strict_m)?, n: strict_size("N", strict_n)?, strict_m, strict_n })
            }
        }
    }
}

pub(crate) fn strict_size(name: &'static str, value: f64) -> Result<usize, ParamsError> {
    if value.is_finite() && value <= STRICT_SAMPLE_CAP {
        Ok(value.ceil().max(1.0) as usize)
    } else {
        Err(ParamsError::Infeasible { name, value, cap: STRICT_SAMPLE_CAP })
    }
}
