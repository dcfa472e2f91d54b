//! Deterministic synthetic B-scans with known foci.
//!
//! The layout mimics a retinal cross-section: dark vitreous above a medium
//! intensity retina band whose bottom rows form a bright stripe, dark tissue
//! below. Foci are filled ellipses inside the band. Vessel shadows darken
//! whole column ranges of the band. Speckle is multiplicative gamma noise
//! with unit mean applied last.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BScan, Mask, CIRRUS_HEIGHT, CIRRUS_WIDTH};

pub const VITREOUS_LEVEL: f64 = 20.0;
pub const BAND_TOP_LEVEL: f64 = 80.0;
pub const BAND_BOTTOM_LEVEL: f64 = 60.0;
pub const STRIPE_LEVEL: f64 = 185.0;
pub const SHADOW_ATTENUATION: f64 = 0.65;
pub const CIRRUS_LIKE_BAND: (usize, usize) = (300, 620);
pub const CIRRUS_LIKE_SPECKLE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Focus {
    /// Center as (row, col).
    pub center: (f64, f64),
    /// Semi-axes as (rows, cols).
    pub radii: (f64, f64),
    pub intensity: f64,
}

impl Focus {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        let dy = (row as f64 - self.center.0) / self.radii.0;
        let dx = (col as f64 - self.center.1) / self.radii.1;
        dy * dy + dx * dx <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// (width, height) in pixels.
    pub dims: (usize, usize),
    /// Inclusive (top, bottom) rows of the retina band.
    pub band: (usize, usize),
    pub foci: Vec<Focus>,
    pub speckle_level: f64,
    /// Inclusive column ranges darkened by vessel shadows.
    pub vessel_shadows: Vec<(usize, usize)>,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.dims;
        let (top, bottom) = self.band;
        if w == 0 || h == 0 {
            return Err(Error::param("phantom dimensions must be nonzero"));
        }
        if top > bottom || bottom >= h {
            return Err(Error::param(format!(
                "band rows {top}..={bottom} not inside image height {h}"
            )));
        }
        if !(self.speckle_level >= 0.0 && self.speckle_level.is_finite()) {
            return Err(Error::param("speckle level must be finite and >= 0"));
        }
        for (i, f) in self.foci.iter().enumerate() {
            let (r, c) = f.center;
            if !(r >= top as f64 && r <= bottom as f64 && c >= 0.0 && c <= (w - 1) as f64) {
                return Err(Error::param(format!("focus {i} center {:?} outside band", f.center)));
            }
            if !(0.0..=255.0).contains(&f.intensity) {
                return Err(Error::param(format!(
                    "focus {i} intensity {} outside [0, 255]",
                    f.intensity
                )));
            }
            if !(f.radii.0 > 0.0 && f.radii.1 > 0.0) {
                return Err(Error::param(format!("focus {i} radii must be positive")));
            }
        }
        for &(a, b) in &self.vessel_shadows {
            if a > b || b >= w {
                return Err(Error::param(format!("vessel shadow {a}..={b} outside width {w}")));
            }
        }
        Ok(())
    }

    /// Number of rows at the bottom of the band that form the bright stripe.
    pub fn stripe_rows(&self) -> usize {
        let band_h = self.band.1 - self.band.0 + 1;
        (band_h / 16).max(2).min(band_h)
    }

    /// Full-size B-scan layout used by the benchmarks: 512x1024 pixels, band
    /// on rows 300..=620, 6 to 12 foci depending on the seed, speckle 0.25
    /// and two vessel shadows.
    pub fn cirrus_like(seed: u64) -> Result<Self> {
        Self::random(
            (CIRRUS_WIDTH, CIRRUS_HEIGHT),
            CIRRUS_LIKE_BAND,
            6 + (seed % 7) as usize,
            CIRRUS_LIKE_SPECKLE,
            seed,
        )
    }

    /// Random layout with `n_foci` non-overlapping foci placed in the band
    /// above the bright stripe, plus two vessel shadows.
    pub fn random(
        dims: (usize, usize),
        band: (usize, usize),
        n_foci: usize,
        speckle_level: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut spec = PhantomSpec {
            dims,
            band,
            foci: Vec::new(),
            speckle_level,
            vessel_shadows: Vec::new(),
            seed,
        };
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let (w, _) = dims;
        let stripe_top = band.1 + 1 - spec.stripe_rows();
        let margin = 4.0;
        let row_lo = band.0 as f64 + margin + 6.0;
        let row_hi = stripe_top as f64 - margin - 6.0;
        if row_hi <= row_lo || (w as f64) < 2.0 * (margin + 8.0) {
            return Err(Error::param("band too thin for random foci"));
        }

        let mut attempts = 0;
        while spec.foci.len() < n_foci {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::param(format!("could not place {n_foci} foci")));
            }
            let radii = (rng.random_range(2.5..5.0), rng.random_range(3.0..6.5));
            let center = (
                rng.random_range(row_lo..row_hi),
                rng.random_range(margin + 8.0..w as f64 - margin - 8.0),
            );
            let clear = spec.foci.iter().all(|f: &Focus| {
                let dy = (f.center.0 - center.0).abs();
                let dx = (f.center.1 - center.1).abs();
                dy > f.radii.0 + radii.0 + 6.0 || dx > f.radii.1 + radii.1 + 6.0
            });
            if clear {
                spec.foci.push(Focus {
                    center,
                    radii,
                    intensity: rng.random_range(205.0..245.0),
                });
            }
        }

        for _ in 0..2 {
            let width = rng.random_range(6..16).min(w);
            let start = rng.random_range(0..=w - width);
            spec.vessel_shadows.push((start, start + width - 1));
        }
        Ok(spec)
    }
}

/// Renders the phantom and its ground-truth foci mask.
pub fn synth_phantom(spec: &PhantomSpec) -> Result<(BScan, Mask)> {
    spec.validate()?;
    let (w, h) = spec.dims;
    let (top, bottom) = spec.band;
    let stripe_top = bottom + 1 - spec.stripe_rows();
    let band_h = (bottom - top).max(1) as f64;

    let mut shadow = vec![false; w];
    for &(a, b) in &spec.vessel_shadows {
        shadow[a..=b].iter_mut().for_each(|s| *s = true);
    }

    let mut data = vec![VITREOUS_LEVEL; w * h];
    let mut mask = Mask::empty(w, h);
    for row in top..=bottom {
        let base = if row >= stripe_top {
            STRIPE_LEVEL
        } else {
            let t = (row - top) as f64 / band_h;
            BAND_TOP_LEVEL + t * (BAND_BOTTOM_LEVEL - BAND_TOP_LEVEL)
        };
        for col in 0..w {
            data[row * w + col] = if shadow[col] {
                base * SHADOW_ATTENUATION
            } else {
                base
            };
        }
    }

    for f in &spec.foci {
        let r0 = (f.center.0 - f.radii.0).floor().max(0.0) as usize;
        let r1 = ((f.center.0 + f.radii.0).ceil() as usize).min(h - 1);
        let c0 = (f.center.1 - f.radii.1).floor().max(0.0) as usize;
        let c1 = ((f.center.1 + f.radii.1).ceil() as usize).min(w - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                if f.contains(row, col) {
                    data[row * w + col] = f.intensity;
                    mask.set(row, col, true);
                }
            }
        }
    }

    if spec.speckle_level > 0.0 {
        let shape = 1.0 / (spec.speckle_level * spec.speckle_level);
        let gamma = Gamma::new(shape, 1.0 / shape)
            .map_err(|e| Error::param(format!("speckle distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in &mut data {
            *v *= gamma.sample(&mut rng);
        }
    }
    for v in &mut data {
        *v = v.round().clamp(0.0, 255.0);
    }
    Ok((BScan::from_raw(w, h, data), mask))
}
