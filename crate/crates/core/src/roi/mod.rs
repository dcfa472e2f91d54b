//! Retina-band ROI: closing by reconstruction, histogram fuzzy c-means,
//! membership filtering and binarization.

mod fcm;
mod histogram;
mod membership;

pub use fcm::{
    fcm_histogram, fcm_histogram_from, membership_column, objective, update_centroids, FcmParams,
    FcmResult, MembershipMatrixQ,
};
pub use histogram::{gray_histogram, Histogram};
pub use membership::{
    binarize_candidates, binarize_roi, map_to_pixels, median_membership_filter, normalize_roi,
    spatial_membership_filter, MembershipField, Normalization, RoiMask, RoiPolicy,
    NORMALIZATION_GUARD,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BScan;
use crate::morphology::closing_reconstruction;

/// Membership filtering applied after mapping levels back to pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterChain {
    #[default]
    Median,
    SpatialThenMedian,
    Spatial,
}

impl std::str::FromStr for FilterChain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Self::Median),
            "spatial_then_median" | "spatial-then-median" => Ok(Self::SpatialThenMedian),
            "spatial" => Ok(Self::Spatial),
            other => Err(Error::param(format!("unknown filter chain '{other}'"))),
        }
    }
}

impl std::fmt::Display for FilterChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Median => "median",
            Self::SpatialThenMedian => "spatial_then_median",
            Self::Spatial => "spatial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiParams {
    pub fcm: FcmParams,
    /// Odd window of the membership filters.
    pub window: usize,
    /// Disk radius of the closing by reconstruction.
    pub se_radius: usize,
    pub filter_chain: FilterChain,
    pub normalization: Normalization,
    pub policy: RoiPolicy,
}

impl Default for RoiParams {
    fn default() -> Self {
        Self {
            fcm: FcmParams::default(),
            window: 5,
            se_radius: 1,
            filter_chain: FilterChain::default(),
            normalization: Normalization::default(),
            policy: RoiPolicy::default(),
        }
    }
}

impl RoiParams {
    pub fn validate(&self) -> Result<()> {
        self.fcm.validate()?;
        if self.fcm.clusters < 2 {
            return Err(Error::param("ROI generation needs at least 2 clusters"));
        }
        if self.window % 2 == 0 {
            return Err(Error::param(format!(
                "membership window must be odd, got {}",
                self.window
            )));
        }
        Ok(())
    }
}

/// ROI mask plus the intermediate results worth inspecting.
#[derive(Debug, Clone)]
pub struct RoiOutcome {
    pub mask: crate::image::Mask,
    pub reconstructed: BScan,
    pub fcm: FcmResult,
    pub warnings: Vec<String>,
}

/// Full ROI chain on one B-scan.
pub fn generate_roi(img: &BScan, params: &RoiParams) -> Result<RoiOutcome> {
    params.validate()?;
    let reconstructed = closing_reconstruction(img, params.se_radius);
    let hist = gray_histogram(&reconstructed);
    let fcm = fcm_histogram(&hist, &params.fcm)?;
    let mut warnings = Vec::new();
    if !fcm.converged {
        warnings.push(format!(
            "fuzzy c-means did not converge within {} iterations",
            params.fcm.max_iters
        ));
    }
    let mapped = map_to_pixels(&fcm.memberships, &hist, &reconstructed)?;
    let w = params.window;
    let filtered = match params.filter_chain {
        FilterChain::Median => median_membership_filter(&mapped, w)?,
        FilterChain::SpatialThenMedian => {
            median_membership_filter(&spatial_membership_filter(&mapped, w)?, w)?
        }
        FilterChain::Spatial => spatial_membership_filter(&mapped, w)?,
    };
    let normalized = normalize_roi(&filtered, params.normalization);
    let roi = binarize_roi(&normalized, &fcm.centroids, params.policy)?;
    warnings.extend(roi.warnings);
    Ok(RoiOutcome {
        mask: roi.mask,
        reconstructed,
        fcm,
        warnings,
    })
}
