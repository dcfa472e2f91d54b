//! Denoise, run the ROI and foci branches side by side, intersect, clean up
//! by size and quantify.

use serde::{Deserialize, Serialize};

use crate::denoise::{bilateral_filter, BilateralParams};
use crate::error::{Error, Result};
use crate::image::{BScan, Cube, Mask};
use crate::labeling::{component_areas, label_components};
use crate::mser::{estimate_foci, MserParams};
use crate::roi::{generate_roi, RoiParams};

/// Components within this fraction of the area cap are reported.
const NEAR_CUTOFF_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Apply the bilateral filter before both branches.
    pub denoise: bool,
    pub bilateral: BilateralParams,
    pub roi: RoiParams,
    pub mser: MserParams,
    /// Smallest component kept, in pixels.
    pub min_area: usize,
    /// Largest component kept; `None` disables the cap.
    pub max_area: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            denoise: true,
            bilateral: BilateralParams::default(),
            roi: RoiParams::default(),
            mser: MserParams::default(),
            min_area: 5,
            max_area: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.bilateral.validate()?;
        self.roi.validate()?;
        self.mser.validate()?;
        if let Some(max) = self.max_area {
            if max < self.min_area {
                return Err(Error::param(format!(
                    "max_area {max} is below min_area {}",
                    self.min_area
                )));
            }
        }
        Ok(())
    }
}

/// One segmented focus in one B-scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusRegion {
    pub bscan_index: usize,
    pub area: usize,
    /// (row, col)
    pub centroid: [f64; 2],
    /// Inclusive (row_min, col_min, row_max, col_max).
    pub bbox: [usize; 4],
    pub mean_intensity: f64,
}

#[derive(Debug, Clone)]
pub struct BScanSegmentation {
    pub mask: Mask,
    pub foci: Vec<FocusRegion>,
    pub roi: Mask,
    pub candidates: Mask,
    pub warnings: Vec<String>,
}

pub fn merge_masks(roi: &Mask, hfs: &Mask) -> Result<Mask> {
    roi.check_dims(hfs)?;
    let bits = roi.bits().iter().zip(hfs.bits()).map(|(a, b)| *a && *b).collect();
    Mask::new(roi.width(), roi.height(), bits)
}

/// Drops 4-connected components smaller than `min_area` or larger than `max_area`.
pub fn size_filter(mask: &Mask, min_area: usize, max_area: Option<usize>) -> Mask {
    let (labels, count) = label_components(mask);
    let areas = component_areas(&labels, count);
    let max = max_area.unwrap_or(usize::MAX);
    let keep: Vec<bool> = areas.iter().map(|&a| a >= min_area && a <= max).collect();
    let bits = labels.iter().map(|&l| l != 0 && keep[l as usize]).collect();
    Mask::new(mask.width(), mask.height(), bits).expect("same dimensions")
}

/// Component areas close to the cap on either side.
fn near_cutoff_warnings(mask: &Mask, max_area: Option<usize>, bscan_index: usize) -> Vec<String> {
    let Some(max) = max_area else {
        return Vec::new();
    };
    let (labels, count) = label_components(mask);
    let lo = (max as f64 * (1.0 - NEAR_CUTOFF_FRACTION)) as usize;
    let hi = (max as f64 * (1.0 + NEAR_CUTOFF_FRACTION)).ceil() as usize;
    component_areas(&labels, count)
        .into_iter()
        .skip(1)
        .filter(|&a| a >= lo && a <= hi)
        .map(|a| format!("b-scan {bscan_index}: component of {a} px is near the area cap {max}"))
        .collect()
}

/// Describes every 4-connected component of `mask`.
pub fn describe_foci(mask: &Mask, img: &BScan, bscan_index: usize) -> Vec<FocusRegion> {
    let w = mask.width();
    let (labels, count) = label_components(mask);
    let mut foci: Vec<FocusRegion> = (0..count)
        .map(|_| FocusRegion {
            bscan_index,
            area: 0,
            centroid: [0.0; 2],
            bbox: [usize::MAX, usize::MAX, 0, 0],
            mean_intensity: 0.0,
        })
        .collect();
    for (p, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let f = &mut foci[l as usize - 1];
        let (row, col) = (p / w, p % w);
        f.area += 1;
        f.centroid[0] += row as f64;
        f.centroid[1] += col as f64;
        f.bbox = [
            f.bbox[0].min(row),
            f.bbox[1].min(col),
            f.bbox[2].max(row),
            f.bbox[3].max(col),
        ];
        f.mean_intensity += img.data()[p];
    }
    for f in &mut foci {
        let a = f.area as f64;
        f.centroid[0] /= a;
        f.centroid[1] /= a;
        f.mean_intensity /= a;
    }
    foci
}

/// The image both branches see: optionally bilateral-filtered, then rounded
/// to integer gray levels.
pub fn prepare(img: &BScan, cfg: &PipelineConfig) -> Result<BScan> {
    Ok(if cfg.denoise {
        bilateral_filter(img, &cfg.bilateral)?.quantized()
    } else {
        img.quantized()
    })
}

pub fn segment_bscan(img: &BScan, cfg: &PipelineConfig) -> Result<BScanSegmentation> {
    segment_bscan_at(img, 0, cfg)
}

/// Segments one B-scan, tagging its foci with `bscan_index`.
pub fn segment_bscan_at(img: &BScan, bscan_index: usize, cfg: &PipelineConfig) -> Result<BScanSegmentation> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    let prepared = prepare(img, cfg)?;

    let (roi, hf) = rayon::join(
        || generate_roi(&prepared, &cfg.roi),
        || estimate_foci(&prepared, &cfg.mser),
    );
    let mut warnings = Vec::new();
    let roi = match roi {
        Ok(outcome) => {
            warnings.extend(outcome.warnings);
            outcome.mask
        }
        Err(Error::DegenerateData(msg)) => {
            warnings.push(format!("ROI unavailable: {msg}"));
            Mask::empty(w, h)
        }
        Err(e) => return Err(e),
    };
    let (candidates, _) = hf?;

    let merged = merge_masks(&roi, &candidates)?;
    warnings.extend(near_cutoff_warnings(&merged, cfg.max_area, bscan_index));
    let mask = size_filter(&merged, cfg.min_area, cfg.max_area);
    let foci = describe_foci(&mask, img, bscan_index);
    Ok(BScanSegmentation {
        mask,
        foci,
        roi,
        candidates,
        warnings,
    })
}

/// Volume in mm³ of `voxel_count` voxels.
pub fn quantify(voxel_count: u64, voxel_dims_mm: (f64, f64, f64)) -> f64 {
    voxel_count as f64 * (voxel_dims_mm.0 * voxel_dims_mm.1 * voxel_dims_mm.2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BScanReport {
    pub index: usize,
    pub voxel_count: u64,
    pub foci: Vec<FocusRegion>,
    pub warnings: Vec<String>,
    /// Set when this slice failed; its counts are then zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HFReport {
    pub config: PipelineConfig,
    pub voxel_dims_mm: (f64, f64, f64),
    pub bscans: Vec<BScanReport>,
    pub focus_count: usize,
    pub voxel_count: u64,
    pub volume_mm3: f64,
    pub warnings: Vec<String>,
}

impl HFReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}

#[derive(Debug, Clone)]
pub struct CubeSegmentation {
    pub report: HFReport,
    /// One mask per B-scan; all-false for failed slices.
    pub masks: Vec<Mask>,
}

/// Segments every B-scan with at most `jobs` worker threads. A failing
/// slice is recorded in the report and processing continues.
pub fn segment_cube(cube: &Cube, cfg: &PipelineConfig, jobs: usize) -> Result<CubeSegmentation> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(usize, Result<BScanSegmentation>)> = pool.install(|| {
        use rayon::prelude::*;
        cube.bscans()
            .par_iter()
            .enumerate()
            .map(|(i, b)| (i, segment_bscan_at(b, i, cfg)))
            .collect()
    });
    Ok(assemble(cube, cfg, results))
}

fn assemble(
    cube: &Cube,
    cfg: &PipelineConfig,
    results: Vec<(usize, Result<BScanSegmentation>)>,
) -> CubeSegmentation {
    let (w, h) = (cube.width(), cube.height());
    let mut bscans = Vec::with_capacity(results.len());
    let mut masks = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for (index, result) in results {
        match result {
            Ok(seg) => {
                let voxel_count = seg.mask.count() as u64;
                warnings.extend(seg.warnings.iter().map(|m| format!("b-scan {index}: {m}")));
                bscans.push(BScanReport {
                    index,
                    voxel_count,
                    foci: seg.foci,
                    warnings: seg.warnings,
                    error: None,
                });
                masks.push(seg.mask);
            }
            Err(e) => {
                log::error!("b-scan {index} failed: {e}");
                warnings.push(format!("b-scan {index} failed: {e}"));
                bscans.push(BScanReport {
                    index,
                    voxel_count: 0,
                    foci: Vec::new(),
                    warnings: Vec::new(),
                    error: Some(e.to_string()),
                });
                masks.push(Mask::empty(w, h));
            }
        }
    }
    let voxel_count = bscans.iter().map(|b| b.voxel_count).sum();
    let focus_count = bscans.iter().map(|b| b.foci.len()).sum();
    let dims = cube.voxel_dims_mm();
    CubeSegmentation {
        report: HFReport {
            config: cfg.clone(),
            voxel_dims_mm: dims,
            bscans,
            focus_count,
            voxel_count,
            volume_mm3: quantify(voxel_count, dims),
            warnings,
        },
        masks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::cirrus_voxel_dims_mm;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, bits: &[u8]) -> Mask {
        Mask::new(w, h, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn merge_identities() {
        let a = mask(3, 2, &[1, 0, 1, 1, 1, 0]);
        assert_eq!(merge_masks(&a, &a).unwrap(), a);
        assert_eq!(merge_masks(&a, &Mask::empty(3, 2)).unwrap(), Mask::empty(3, 2));
        assert_eq!(merge_masks(&a, &Mask::full(3, 2)).unwrap(), a);
        assert!(merge_masks(&a, &Mask::empty(2, 3)).is_err());
    }

    #[test]
    fn size_filter_boundaries() {
        let four = mask(6, 1, &[1, 1, 1, 1, 0, 0]);
        assert_eq!(size_filter(&four, 5, None).count(), 0);
        let five = mask(6, 1, &[1, 1, 1, 1, 1, 0]);
        assert_eq!(size_filter(&five, 5, None).count(), 5);
        assert_eq!(size_filter(&five, 1, Some(4)).count(), 0);
    }

    #[test]
    fn quantify_examples() {
        let dims = cirrus_voxel_dims_mm();
        assert_eq!(quantify(0, dims), 0.0);
        let one = quantify(1, dims);
        assert!((one - 72.0 / 67_108_864.0).abs() <= 1e-12 * one);
        assert!((quantify(1_000_000, dims) - 1.0728836059570312).abs() < 1e-9);
    }

    #[test]
    fn dark_image_has_no_foci() {
        let img = BScan::filled(40, 30, 0.0).unwrap();
        let seg = segment_bscan(&img, &PipelineConfig::default()).unwrap();
        assert!(seg.foci.is_empty());
        assert_eq!(seg.mask.count(), 0);
        assert!(!seg.warnings.is_empty());
    }

    #[test]
    fn focus_description() {
        let m = mask(4, 3, &[0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0]);
        let img = BScan::new(4, 3, (0..12).map(|v| v as f64).collect()).unwrap();
        let f = describe_foci(&m, &img, 7);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].bscan_index, 7);
        assert_eq!(f[0].area, 4);
        assert_eq!(f[0].centroid, [0.5, 1.5]);
        assert_eq!(f[0].bbox, [0, 1, 1, 2]);
        assert_eq!(f[0].mean_intensity, (1.0 + 2.0 + 5.0 + 6.0) / 4.0);
    }

    #[test]
    fn invalid_area_range_is_rejected() {
        let cfg = PipelineConfig {
            min_area: 10,
            max_area: Some(5),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    fn any_mask() -> impl Strategy<Value = Mask> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            prop::collection::vec(any::<bool>(), w * h).prop_map(move |b| Mask::new(w, h, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn size_filter_idempotent_and_shrinking(m in any_mask(), min in 0usize..6, cap in 1usize..20) {
            let once = size_filter(&m, min, Some(cap.max(min)));
            prop_assert_eq!(&size_filter(&once, min, Some(cap.max(min))), &once);
            prop_assert!(once.count() <= m.count());
            prop_assert!(once.bits().iter().zip(m.bits()).all(|(a, b)| !*a || *b));
        }

        #[test]
        fn merge_is_contained_in_both(a in any_mask(), seed in any::<u64>()) {
            let b_bits: Vec<bool> = (0..a.bits().len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let b = Mask::new(a.width(), a.height(), b_bits).unwrap();
            let m = merge_masks(&a, &b).unwrap();
            for ((x, y), z) in m.bits().iter().zip(a.bits()).zip(b.bits()) {
                prop_assert!(!*x || (*y && *z));
            }
        }

        #[test]
        fn volume_is_homogeneous(count in 0u64..1_000_000, k in 0.1f64..10.0) {
            let d = cirrus_voxel_dims_mm();
            let scaled = quantify(count, (d.0 * k, d.1, d.2));
            prop_assert!((scaled - k * quantify(count, d)).abs() <= 1e-12 * scaled.max(1e-300));
        }
    }
}
