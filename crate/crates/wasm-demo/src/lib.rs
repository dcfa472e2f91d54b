//! Browser bindings: synthesize a B-scan, segment it with adjustable
//! parameters and render the intermediate masks as RGBA buffers.

use hfseg_core::image::{BScan, Mask};
use hfseg_core::metrics::dice;
use hfseg_core::phantom::{synth_phantom, PhantomSpec};
use hfseg_core::pipeline::{segment_bscan, PipelineConfig};
use wasm_bindgen::prelude::*;

const DEMO_DIMS: (usize, usize) = (256, 512);
const DEMO_BAND: (usize, usize) = (150, 310);

/// Gray image as RGBA bytes.
pub fn gray_rgba(img: &BScan) -> Vec<u8> {
    img.to_u8().iter().flat_map(|&v| [v, v, v, 255]).collect()
}

/// Gray image with `mask` tinted in `color`.
pub fn tinted_rgba(img: &BScan, mask: &Mask, color: [u8; 3]) -> Vec<u8> {
    img.to_u8()
        .iter()
        .zip(mask.bits())
        .flat_map(|(&v, &on)| {
            if on {
                let mix = |c: u8| ((u16::from(v) + 2 * u16::from(c)) / 3) as u8;
                [mix(color[0]), mix(color[1]), mix(color[2]), 255]
            } else {
                [v, v, v, 255]
            }
        })
        .collect()
}

/// Prediction against ground truth: hits green, misses blue, extras red.
pub fn comparison_rgba(img: &BScan, pred: &Mask, truth: &Mask) -> Vec<u8> {
    img.to_u8()
        .iter()
        .zip(pred.bits().iter().zip(truth.bits()))
        .flat_map(|(&v, (&p, &t))| match (p, t) {
            (true, true) => [40, 220, 60, 255],
            (true, false) => [230, 40, 40, 255],
            (false, true) => [60, 110, 255, 255],
            (false, false) => [v, v, v, 255],
        })
        .collect()
}

#[wasm_bindgen]
pub struct Scene {
    image: BScan,
    truth: Mask,
    foci: usize,
}

#[wasm_bindgen]
impl Scene {
    /// Random phantom with `foci` bright spots and the given speckle strength.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, foci: usize, speckle: f64) -> Result<Scene, JsError> {
        let spec = PhantomSpec::random(DEMO_DIMS, DEMO_BAND, foci, speckle, u64::from(seed))
            .map_err(|e| JsError::new(&e.to_string()))?;
        let (image, truth) = synth_phantom(&spec).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Scene { image, truth, foci })
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn foci(&self) -> usize {
        self.foci
    }

    pub fn image_rgba(&self) -> Vec<u8> {
        gray_rgba(&self.image)
    }

    pub fn truth_rgba(&self) -> Vec<u8> {
        tinted_rgba(&self.image, &self.truth, [60, 110, 255])
    }

    /// Runs the full pipeline with the given overrides of the defaults.
    #[allow(clippy::too_many_arguments)]
    pub fn segment(
        &self,
        clusters: usize,
        fuzzifier: f64,
        window: usize,
        delta: f64,
        g_min: f64,
        max_area: usize,
        denoise: bool,
    ) -> Result<Segmentation, JsError> {
        let mut cfg = PipelineConfig::default();
        cfg.denoise = denoise;
        cfg.roi.fcm.clusters = clusters;
        cfg.roi.fcm.fuzzifier = fuzzifier;
        cfg.roi.window = window;
        cfg.mser.delta = delta;
        cfg.mser.g_min = g_min;
        cfg.max_area = (max_area > 0).then_some(max_area);
        let seg = segment_bscan(&self.image, &cfg).map_err(|e| JsError::new(&e.to_string()))?;
        let score = dice(&seg.mask, &self.truth).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Segmentation {
            roi: tinted_rgba(&self.image, &seg.roi, [250, 200, 40]),
            candidates: tinted_rgba(&self.image, &seg.candidates, [230, 40, 200]),
            result: comparison_rgba(&self.image, &seg.mask, &self.truth),
            dice: score.value,
            foci: seg.foci.len(),
            warnings: seg.warnings.join("\n"),
        })
    }
}

#[wasm_bindgen]
pub struct Segmentation {
    roi: Vec<u8>,
    candidates: Vec<u8>,
    result: Vec<u8>,
    dice: f64,
    foci: usize,
    warnings: String,
}

#[wasm_bindgen]
impl Segmentation {
    pub fn roi_rgba(&self) -> Vec<u8> {
        self.roi.clone()
    }

    pub fn candidates_rgba(&self) -> Vec<u8> {
        self.candidates.clone()
    }

    pub fn result_rgba(&self) -> Vec<u8> {
        self.result.clone()
    }

    pub fn dice(&self) -> f64 {
        self.dice
    }

    pub fn foci(&self) -> usize {
        self.foci
    }

    pub fn warnings(&self) -> String {
        self.warnings.clone()
    }
}
