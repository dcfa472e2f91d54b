//! Flat grayscale morphology and geodesic reconstruction.
//!
//! Erosion and dilation use a disk structuring element with replicate
//! borders. Reconstruction always propagates through the 4-connected unit
//! cross and runs to the exact fixed point.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::BScan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    /// All `(dy, dx)` with `dy^2 + dx^2 <= r^2`.
    pub fn disk(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dy * dy + dx * dx <= r * r {
                    offsets.push((dy, dx));
                }
            }
        }
        Self { radius, offsets }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

fn rank_filter(img: &BScan, se: &StructuringElement, pick: fn(f64, f64) -> f64) -> BScan {
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h as isize {
        for col in 0..w as isize {
            let mut acc = img.get_clamped(row, col);
            for &(dy, dx) in se.offsets() {
                acc = pick(acc, img.get_clamped(row + dy, col + dx));
            }
            out.push(acc);
        }
    }
    BScan::from_raw(w, h, out)
}

pub fn dilate(img: &BScan, se: &StructuringElement) -> BScan {
    rank_filter(img, se, f64::max)
}

pub fn erode(img: &BScan, se: &StructuringElement) -> BScan {
    rank_filter(img, se, f64::min)
}

fn check_same_dims(a: &BScan, b: &BScan) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dims(
            format!("{}x{}", b.width(), b.height()),
            format!("{}x{}", a.width(), a.height()),
        ));
    }
    Ok(())
}

/// Geodesic reconstruction by dilation of `marker` under `mask`.
///
/// Requires `marker <= mask` everywhere.
pub fn reconstruct_dilation(marker: &BScan, mask: &BScan) -> Result<BScan> {
    check_same_dims(marker, mask)?;
    let w = mask.width();
    if let Some(i) = marker
        .data()
        .iter()
        .zip(mask.data())
        .position(|(m, f)| m > f)
    {
        return Err(Error::Precondition {
            row: i / w,
            col: i % w,
            detail: format!(
                "marker {} exceeds mask {}",
                marker.data()[i],
                mask.data()[i]
            ),
        });
    }
    let out = hybrid_reconstruct(marker.data().to_vec(), mask.data(), w, mask.height());
    Ok(BScan::from_raw(w, mask.height(), out))
}

/// Geodesic reconstruction by erosion of `marker` above `mask`.
///
/// Requires `marker >= mask` everywhere.
pub fn reconstruct_erosion(marker: &BScan, mask: &BScan) -> Result<BScan> {
    check_same_dims(marker, mask)?;
    let w = mask.width();
    if let Some(i) = marker
        .data()
        .iter()
        .zip(mask.data())
        .position(|(m, f)| m < f)
    {
        return Err(Error::Precondition {
            row: i / w,
            col: i % w,
            detail: format!(
                "marker {} below mask {}",
                marker.data()[i],
                mask.data()[i]
            ),
        });
    }
    // Negation turns erosion reconstruction into dilation reconstruction.
    let neg_marker: Vec<f64> = marker.data().iter().map(|v| -v).collect();
    let neg_mask: Vec<f64> = mask.data().iter().map(|v| -v).collect();
    let out = hybrid_reconstruct(neg_marker, &neg_mask, w, mask.height())
        .into_iter()
        .map(|v| -v)
        .collect();
    Ok(BScan::from_raw(w, mask.height(), out))
}

/// Raster and anti-raster passes followed by FIFO propagation.
fn hybrid_reconstruct(mut j: Vec<f64>, mask: &[f64], w: usize, h: usize) -> Vec<f64> {
    if j.is_empty() {
        return j;
    }
    for row in 0..h {
        for col in 0..w {
            let p = row * w + col;
            let mut v = j[p];
            if row > 0 {
                v = v.max(j[p - w]);
            }
            if col > 0 {
                v = v.max(j[p - 1]);
            }
            j[p] = v.min(mask[p]);
        }
    }

    let mut queue = VecDeque::new();
    for row in (0..h).rev() {
        for col in (0..w).rev() {
            let p = row * w + col;
            let mut v = j[p];
            if row + 1 < h {
                v = v.max(j[p + w]);
            }
            if col + 1 < w {
                v = v.max(j[p + 1]);
            }
            j[p] = v.min(mask[p]);
            let jp = j[p];
            let below = row + 1 < h && j[p + w] < jp && j[p + w] < mask[p + w];
            let right = col + 1 < w && j[p + 1] < jp && j[p + 1] < mask[p + 1];
            if below || right {
                queue.push_back(p);
            }
        }
    }

    while let Some(p) = queue.pop_front() {
        let (row, col) = (p / w, p % w);
        let jp = j[p];
        let mut visit = |q: usize| {
            if j[q] < jp && mask[q] != j[q] {
                j[q] = jp.min(mask[q]);
                queue.push_back(q);
            }
        };
        if row > 0 {
            visit(p - w);
        }
        if row + 1 < h {
            visit(p + w);
        }
        if col > 0 {
            visit(p - 1);
        }
        if col + 1 < w {
            visit(p + 1);
        }
    }
    j
}

/// Closing by reconstruction with a disk of radius `r`.
///
/// Erodes, reconstructs by dilation under the input, dilates that result and
/// reconstructs by erosion above the opened image. `r = 0` returns the input.
pub fn closing_reconstruction(img: &BScan, r: usize) -> BScan {
    if r == 0 {
        return img.clone();
    }
    let se = StructuringElement::disk(r);
    let eroded = erode(img, &se);
    let opened = reconstruct_dilation(&eroded, img).expect("erosion lies below its input");
    let dilated = dilate(&opened, &se);
    reconstruct_erosion(&dilated, &opened).expect("dilation lies above its input")
}
