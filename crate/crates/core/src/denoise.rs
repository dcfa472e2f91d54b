//! Edge-preserving bilateral smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilateralParams {
    /// Spatial standard deviation in pixels.
    pub sigma_s: f64,
    /// Range standard deviation in intensity units.
    pub sigma_r: f64,
    /// Odd window side length in pixels.
    pub window: usize,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            sigma_s: 3.0,
            sigma_r: 20.0,
            window: 7,
        }
    }
}

impl BilateralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s > 0.0 && self.sigma_s.is_finite()) {
            return Err(Error::param(format!("sigma_s must be > 0, got {}", self.sigma_s)));
        }
        if !(self.sigma_r > 0.0) {
            return Err(Error::param(format!("sigma_r must be > 0, got {}", self.sigma_r)));
        }
        if self.window % 2 == 0 {
            return Err(Error::param(format!(
                "bilateral window must be odd, got {}",
                self.window
            )));
        }
        Ok(())
    }
}

/// Normalized bilateral filter with Gaussian spatial and range kernels.
///
/// Each output pixel is `sum I(q) f_r(I(q) - I(p)) g_s(|q - p|)` over the
/// window around `p`, divided by the sum of the weights. Coordinates outside
/// the image are clamped to the border.
pub fn bilateral_filter(img: &BScan, params: &BilateralParams) -> Result<BScan> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    if img.is_empty() {
        return Ok(img.clone());
    }
    let radius = (params.window / 2) as isize;

    let mut offsets = Vec::with_capacity(params.window * params.window);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dy * dy + dx * dx) as f64;
            offsets.push((dy, dx, (-d2 / (2.0 * params.sigma_s * params.sigma_s)).exp()));
        }
    }

    let inv_two_sr2 = 1.0 / (2.0 * params.sigma_r * params.sigma_r);
    // Integer-valued inputs only ever produce integer differences.
    let range_lut: Option<Vec<f64>> = img.is_integral().then(|| {
        (0..256)
            .map(|d| (-((d * d) as f64) * inv_two_sr2).exp())
            .collect()
    });
    let range_weight = |diff: f64| -> f64 {
        match &range_lut {
            Some(lut) => lut[diff.abs() as usize],
            None => (-(diff * diff) * inv_two_sr2).exp(),
        }
    };

    let data = img.data();
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            let center = data[row * w + col];
            let mut acc = 0.0;
            let mut norm = 0.0;
            for &(dy, dx, gs) in &offsets {
                let r = (row as isize + dy).clamp(0, h as isize - 1) as usize;
                let c = (col as isize + dx).clamp(0, w as isize - 1) as usize;
                let v = data[r * w + c];
                let wgt = gs * range_weight(v - center);
                acc += wgt * v;
                norm += wgt;
            }
            // The center weight is exactly 1, so norm never vanishes.
            out[row * w + col] = (acc / norm).clamp(0.0, 255.0);
        }
    }
    Ok(BScan::from_raw(w, h, out))
}

/// Plain normalized Gaussian blur over the same clamped window.
pub fn gaussian_blur(img: &BScan, sigma_s: f64, window: usize) -> Result<BScan> {
    bilateral_filter(
        img,
        &BilateralParams {
            sigma_s,
            sigma_r: f64::INFINITY,
            window,
        },
    )
}

/// Mean over a clamped square window.
pub fn mean_filter(img: &BScan, window: usize) -> Result<BScan> {
    if window % 2 == 0 {
        return Err(Error::param(format!("window must be odd, got {window}")));
    }
    let r = (window / 2) as isize;
    let n = (window * window) as f64;
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h as isize {
        for col in 0..w as isize {
            let mut s = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    s += img.get_clamped(row + dy, col + dx);
                }
            }
            out.push(s / n);
        }
    }
    Ok(BScan::from_raw(w, h, out))
}

/// Median over a clamped square window.
pub fn median_filter(img: &BScan, window: usize) -> Result<BScan> {
    if window % 2 == 0 {
        return Err(Error::param(format!("window must be odd, got {window}")));
    }
    let out = median_plane(img.data(), img.width(), img.height(), window);
    Ok(BScan::from_raw(img.width(), img.height(), out))
}

/// Above this many distinct values the sliding histogram stops paying off.
const MAX_HISTOGRAM_BINS: usize = 4096;

pub(crate) fn median_plane(data: &[f64], w: usize, h: usize, window: usize) -> Vec<f64> {
    match distinct_values(data) {
        Some(distinct) => {
            let mut last = (f64::NAN, 0u16);
            let ranks: Vec<u16> = data
                .iter()
                .map(|v| {
                    if v.total_cmp(&last.0).is_ne() {
                        let r = distinct.binary_search_by(|d| d.total_cmp(v)).unwrap();
                        last = (*v, r as u16);
                    }
                    last.1
                })
                .collect();
            median_ranks(&ranks, distinct.len(), w, h, window)
                .into_iter()
                .map(|r| distinct[r as usize])
                .collect()
        }
        None => median_select(data, w, h, window),
    }
}

/// Sorted distinct values, or `None` if there are too many for a histogram.
fn distinct_values(data: &[f64]) -> Option<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    for &v in data {
        if v.total_cmp(&last).is_eq() {
            continue;
        }
        last = v;
        if let Err(i) = distinct.binary_search_by(|d| d.total_cmp(&v)) {
            if distinct.len() == MAX_HISTOGRAM_BINS {
                return None;
            }
            distinct.insert(i, v);
        }
    }
    Some(distinct)
}

/// Median of rank-coded values with a histogram slid along each row.
fn median_ranks(ranks: &[u16], bins: usize, w: usize, h: usize, window: usize) -> Vec<u16> {
    let r = window / 2;
    let mid = window * window / 2;
    let clamp_row = |y: isize| y.clamp(0, h as isize - 1) as usize;
    let clamp_col = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let mut out = Vec::with_capacity(w * h);
    let mut hist = vec![0usize; bins];
    for row in 0..h {
        let rows: Vec<usize> = (row as isize - r as isize..=(row + r) as isize)
            .map(clamp_row)
            .collect();
        hist.iter_mut().for_each(|c| *c = 0);
        for &rr in &rows {
            for dx in -(r as isize)..=r as isize {
                hist[ranks[rr * w + clamp_col(dx)] as usize] += 1;
            }
        }
        // `below` counts window entries with rank < `m`.
        let (mut m, mut below) = (0usize, 0usize);
        for col in 0..w {
            if col > 0 {
                let gone = clamp_col(col as isize - 1 - r as isize);
                let new = clamp_col((col + r) as isize);
                for &rr in &rows {
                    let a = ranks[rr * w + gone] as usize;
                    hist[a] -= 1;
                    if a < m {
                        below -= 1;
                    }
                    let b = ranks[rr * w + new] as usize;
                    hist[b] += 1;
                    if b < m {
                        below += 1;
                    }
                }
            }
            while below > mid {
                m -= 1;
                below -= hist[m];
            }
            while below + hist[m] <= mid {
                below += hist[m];
                m += 1;
            }
            out.push(m as u16);
        }
    }
    out
}

fn median_select(data: &[f64], w: usize, h: usize, window: usize) -> Vec<f64> {
    let r = (window / 2) as isize;
    let mid = window * window / 2;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h as isize {
        for col in 0..w as isize {
            buf.clear();
            for dy in -r..=r {
                let rr = (row + dy).clamp(0, h as isize - 1) as usize;
                for dx in -r..=r {
                    let cc = (col + dx).clamp(0, w as isize - 1) as usize;
                    buf.push(data[rr * w + cc]);
                }
            }
            let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
            out.push(*m);
        }
    }
    out
}
