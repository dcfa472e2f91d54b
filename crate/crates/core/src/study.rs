//! One-parameter studies: Dice of the pipeline against ground truth as a
//! single setting varies.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BScan, Mask};
use crate::metrics::dice;
use crate::pipeline::{segment_bscan, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Fuzzifier.
    M,
    /// Membership filter window.
    W,
    /// Fuzzy c-means convergence threshold.
    T,
    /// Stability range.
    Delta,
    /// Lowest region level.
    G,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::M => "m",
            Self::W => "w",
            Self::T => "T",
            Self::Delta => "delta",
            Self::G => "g",
        }
    }

    /// `cfg` with this parameter set to `value`.
    pub fn apply(&self, cfg: &PipelineConfig, value: f64) -> Result<PipelineConfig> {
        let mut out = cfg.clone();
        match self {
            Self::M => out.roi.fcm.fuzzifier = value,
            Self::W => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::param(format!("window must be a positive integer, got {value}")));
                }
                out.roi.window = value as usize;
            }
            Self::T => out.roi.fcm.tolerance = value,
            Self::Delta => out.mser.delta = value,
            Self::G => out.mser.g_min = value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(Self::M),
            "w" => Ok(Self::W),
            "T" | "t" => Ok(Self::T),
            "delta" => Ok(Self::Delta),
            "g" => Ok(Self::G),
            other => Err(Error::param(format!(
                "unknown sweep axis '{other}', expected one of m, w, T, delta, g"
            ))),
        }
    }
}

/// Mean per-image Dice of the pipeline over `cases`.
pub fn mean_dice(cases: &[(BScan, Mask)], cfg: &PipelineConfig) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::SampleSize { needed: 1, got: 0 });
    }
    let scores: Vec<f64> = cases
        .par_iter()
        .map(|(img, gt)| -> Result<f64> {
            let seg = segment_bscan(img, cfg)?;
            Ok(dice(&seg.mask, gt)?.value)
        })
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub dice: f64,
}

/// One mean Dice per value of `axis`.
pub fn sweep(
    cases: &[(BScan, Mask)],
    base: &PipelineConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let cfg = axis.apply(base, value)?;
            Ok(SweepPoint {
                value,
                dice: mean_dice(cases, &cfg)?,
            })
        })
        .collect()
}
