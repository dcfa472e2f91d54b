//! Pixel-domain memberships: mapping, spatial and median filtering,
//! normalization and binarization into an ROI mask.

use serde::{Deserialize, Serialize};

use super::{Histogram, MembershipMatrixQ};
use crate::denoise::median_plane;
use crate::error::{Error, Result};
use crate::image::{BScan, Mask};
use crate::labeling::{component_areas, label_components};

/// Added to every column sum before dividing.
pub const NORMALIZATION_GUARD: f64 = f64::EPSILON; // 2^-52

/// `c` membership planes over a `width x height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipField {
    clusters: usize,
    width: usize,
    height: usize,
    u: Vec<f64>,
}

impl MembershipField {
    pub fn new(clusters: usize, width: usize, height: usize, u: Vec<f64>) -> Result<Self> {
        if u.len() != clusters * width * height {
            return Err(Error::dims(clusters * width * height, u.len()));
        }
        if u.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("memberships must be finite and nonnegative"));
        }
        Ok(Self {
            clusters,
            width,
            height,
            u,
        })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn plane(&self, k: usize) -> &[f64] {
        let n = self.pixels();
        &self.u[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn get(&self, k: usize, pixel: usize) -> f64 {
        self.u[k * self.pixels() + pixel]
    }

    pub fn column(&self, pixel: usize) -> Vec<f64> {
        (0..self.clusters).map(|k| self.get(k, pixel)).collect()
    }

    /// Cluster with the largest membership per pixel, lowest index on ties.
    pub fn argmax(&self) -> Vec<usize> {
        let n = self.pixels();
        (0..n)
            .map(|p| {
                let mut best = 0;
                for k in 1..self.clusters {
                    if self.u[k * n + p] > self.u[best * n + p] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    fn renormalize_columns(&mut self) {
        let n = self.pixels();
        for p in 0..n {
            let s: f64 = (0..self.clusters).map(|k| self.u[k * n + p]).sum();
            if s > 0.0 {
                for k in 0..self.clusters {
                    self.u[k * n + p] /= s;
                }
            }
        }
    }
}

fn check_window(window: usize) -> Result<()> {
    if window % 2 == 0 {
        Err(Error::param(format!("filter window must be odd, got {window}")))
    } else {
        Ok(())
    }
}

/// Copies each pixel's membership column from its gray level's column.
pub fn map_to_pixels(uq: &MembershipMatrixQ, hist: &Histogram, img: &BScan) -> Result<MembershipField> {
    if uq.q() != hist.q() {
        return Err(Error::Consistency(format!(
            "membership matrix has {} levels, histogram {}",
            uq.q(),
            hist.q()
        )));
    }
    let c = uq.clusters();
    let n = img.len();
    let mut level_of = Vec::with_capacity(n);
    for (i, &v) in img.data().iter().enumerate() {
        let l = hist.level_index(v).ok_or_else(|| {
            Error::Consistency(format!("gray value {v} at pixel {i} missing from histogram"))
        })?;
        level_of.push(l);
    }
    let mut u = vec![0.0; c * n];
    for k in 0..c {
        let plane = &mut u[k * n..(k + 1) * n];
        for (dst, &l) in plane.iter_mut().zip(&level_of) {
            *dst = uq.get(k, l);
        }
    }
    Ok(MembershipField {
        clusters: c,
        width: img.width(),
        height: img.height(),
        u,
    })
}

/// Adds the distance-weighted memberships of the window neighbours,
/// `u'_k(i) = u_k(i) + sum_r u_k(r) / (d(i, r) + 1)`, then renormalizes every
/// pixel column to sum to one. Neighbours outside the image are skipped.
pub fn spatial_membership_filter(field: &MembershipField, window: usize) -> Result<MembershipField> {
    check_window(window)?;
    let r = (window / 2) as isize;
    let mut taps = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dy, dx) != (0, 0) {
                let d = ((dy * dy + dx * dx) as f64).sqrt();
                taps.push((dy, dx, 1.0 / (d + 1.0)));
            }
        }
    }
    let (w, h) = (field.width as isize, field.height as isize);
    let n = field.pixels();
    let mut out = field.clone();
    for k in 0..field.clusters {
        let src = field.plane(k);
        let dst = &mut out.u[k * n..(k + 1) * n];
        for row in 0..h {
            for col in 0..w {
                let mut acc = src[(row * w + col) as usize];
                for &(dy, dx, wt) in &taps {
                    let (rr, cc) = (row + dy, col + dx);
                    if rr >= 0 && rr < h && cc >= 0 && cc < w {
                        acc += wt * src[(rr * w + cc) as usize];
                    }
                }
                dst[(row * w + col) as usize] = acc;
            }
        }
    }
    out.renormalize_columns();
    Ok(out)
}

/// Per-cluster spatial median with replicate borders.
pub fn median_membership_filter(field: &MembershipField, window: usize) -> Result<MembershipField> {
    check_window(window)?;
    let mut u = Vec::with_capacity(field.u.len());
    for k in 0..field.clusters {
        u.extend(median_plane(field.plane(k), field.width, field.height, window));
    }
    Ok(MembershipField { u, ..field.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by `c * (column sum + 2^-52)`.
    #[default]
    PerCluster,
    /// Divide by `column sum + 2^-52`.
    Probabilistic,
}

pub fn normalize_roi(field: &MembershipField, mode: Normalization) -> MembershipField {
    let n = field.pixels();
    let c = field.clusters;
    let scale = match mode {
        Normalization::PerCluster => c as f64,
        Normalization::Probabilistic => 1.0,
    };
    let mut out = field.clone();
    for p in 0..n {
        let s: f64 = (0..c).map(|k| field.u[k * n + p]).sum();
        let denom = scale * (s + NORMALIZATION_GUARD);
        for k in 0..c {
            out.u[k * n + p] = field.u[k * n + p] / denom;
        }
    }
    out
}

/// Rule turning the cluster map into a binary ROI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiPolicy {
    /// Keep only the largest 4-connected candidate component.
    #[default]
    LargestComponent,
    /// Keep every candidate component with at least this many pixels.
    MinComponentArea(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiMask {
    pub mask: Mask,
    pub warnings: Vec<String>,
}

/// Candidates are pixels whose strongest cluster is not the darkest one.
/// Surviving components are filled column-wise between their top- and
/// bottom-most rows to give a solid band.
pub fn binarize_roi(field: &MembershipField, centroids: &[f64], policy: RoiPolicy) -> Result<RoiMask> {
    if centroids.len() != field.clusters {
        return Err(Error::Consistency(format!(
            "{} centroids for {} membership planes",
            centroids.len(),
            field.clusters
        )));
    }
    if centroids.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::Consistency("centroids must be ascending".into()));
    }
    let (w, h) = (field.width, field.height);
    let candidates = Mask::new(w, h, field.argmax().into_iter().map(|k| k > 0).collect())?;
    Ok(binarize_candidates(&candidates, policy))
}

/// Component selection and column fill on an explicit candidate mask.
pub fn binarize_candidates(candidates: &Mask, policy: RoiPolicy) -> RoiMask {
    let (w, h) = (candidates.width(), candidates.height());
    let (labels, count) = label_components(candidates);
    if count == 0 {
        return RoiMask {
            mask: Mask::empty(w, h),
            warnings: vec!["no ROI candidate pixels; ROI is empty".into()],
        };
    }
    let areas = component_areas(&labels, count);
    let keep: Vec<bool> = match policy {
        RoiPolicy::LargestComponent => {
            // First label wins ties, i.e. the component seen first in raster order.
            let best = (1..=count).fold(1, |b, l| if areas[l] > areas[b] { l } else { b });
            (0..=count).map(|l| l == best).collect()
        }
        RoiPolicy::MinComponentArea(min) => {
            (0..=count).map(|l| l > 0 && areas[l] >= min).collect()
        }
    };

    let mut mask = Mask::empty(w, h);
    for col in 0..w {
        let rows = (0..h).filter(|&row| keep[labels[row * w + col] as usize]);
        let (mut top, mut bottom) = (usize::MAX, 0);
        for row in rows {
            top = top.min(row);
            bottom = bottom.max(row);
        }
        if top != usize::MAX {
            for row in top..=bottom {
                mask.set(row, col, true);
            }
        }
    }
    let mut warnings = Vec::new();
    if mask.count() == 0 {
        warnings.push("no ROI component survived the policy; ROI is empty".into());
    }
    RoiMask { mask, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(c: usize, w: usize, h: usize, columns: &[Vec<f64>]) -> MembershipField {
        let n = w * h;
        let mut u = vec![0.0; c * n];
        for (p, col) in columns.iter().enumerate() {
            for k in 0..c {
                u[k * n + p] = col[k];
            }
        }
        MembershipField::new(c, w, h, u).unwrap()
    }

    #[test]
    fn equal_gray_values_share_columns() {
        let img = BScan::new(3, 1, vec![5.0, 9.0, 5.0]).unwrap();
        let hist = Histogram::from_pairs(vec![(5.0, 2), (9.0, 1)]);
        let uq = MembershipMatrixQ::new(2, 2, vec![0.7, 0.1, 0.3, 0.9]).unwrap();
        let f = map_to_pixels(&uq, &hist, &img).unwrap();
        assert_eq!(f.column(0), f.column(2));
        assert_eq!(f.column(0), vec![0.7, 0.3]);
        assert_eq!(f.column(1), vec![0.1, 0.9]);
    }

    #[test]
    fn constant_image_maps_identical_columns() {
        let img = BScan::filled(4, 4, 3.0).unwrap();
        let hist = Histogram::from_pairs(vec![(3.0, 16)]);
        let uq = MembershipMatrixQ::new(2, 1, vec![0.25, 0.75]).unwrap();
        let f = map_to_pixels(&uq, &hist, &img).unwrap();
        assert!((0..16).all(|p| f.column(p) == vec![0.25, 0.75]));
    }

    #[test]
    fn unmapped_value_is_consistency_error() {
        let img = BScan::new(2, 1, vec![5.0, 6.0]).unwrap();
        let hist = Histogram::from_pairs(vec![(5.0, 2)]);
        let uq = MembershipMatrixQ::new(1, 1, vec![1.0]).unwrap();
        assert!(matches!(map_to_pixels(&uq, &hist, &img), Err(Error::Consistency(_))));
    }

    #[test]
    fn spatial_filter_constant_field_and_unit_window() {
        let cols = vec![vec![0.2, 0.8]; 12];
        let f = field(2, 4, 3, &cols);
        let out = spatial_membership_filter(&f, 3).unwrap();
        for p in 0..12 {
            let c = out.column(p);
            assert!((c[0] - 0.2).abs() < 1e-12 && (c[1] - 0.8).abs() < 1e-12);
        }
        let skew: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 12.0, 1.0 - i as f64 / 12.0]).collect();
        let f = field(2, 4, 3, &skew);
        assert_eq!(spatial_membership_filter(&f, 1).unwrap(), f);
        assert!(spatial_membership_filter(&f, 2).is_err());
    }

    #[test]
    fn spatial_filter_corrects_isolated_pixel() {
        // Center (0.9, 0.1) among eight (0.1, 0.9) neighbours. Neighbour
        // weight sum: 4 * 1/2 + 4 * 1/(sqrt 2 + 1) = 2 + 4 (sqrt 2 - 1).
        let mut cols = vec![vec![0.1, 0.9]; 9];
        cols[4] = vec![0.9, 0.1];
        let out = spatial_membership_filter(&field(2, 3, 3, &cols), 3).unwrap();
        let s = 2.0 + 4.0 * (2f64.sqrt() - 1.0);
        let a = 0.9 + 0.1 * s;
        let b = 0.1 + 0.9 * s;
        let c = out.column(4);
        assert!((c[0] - a / (a + b)).abs() < 1e-12);
        assert!((c[1] - b / (a + b)).abs() < 1e-12);
        assert_eq!(out.argmax()[4], 1);
    }

    #[test]
    fn median_filter_examples() {
        let cols: Vec<Vec<f64>> = [0.0, 0.0, 1.0, 0.0, 0.0].iter().map(|&v| vec![v]).collect();
        let out = median_membership_filter(&field(1, 5, 1, &cols), 3).unwrap();
        assert_eq!(out.plane(0), &[0.0; 5]);
        let flat = field(1, 3, 3, &vec![vec![0.4]; 9]);
        assert_eq!(median_membership_filter(&flat, 3).unwrap(), flat);
        assert!(median_membership_filter(&flat, 4).is_err());
    }

    #[test]
    fn median_root_is_a_fixed_point() {
        let mut values: Vec<Vec<f64>> = (0..64)
            .map(|i| vec![((i * 37 + 11) % 17) as f64 / 17.0])
            .collect();
        let mut f = field(1, 8, 8, &values);
        let mut rounds = 0;
        loop {
            let next = median_membership_filter(&f, 3).unwrap();
            rounds += 1;
            if next == f {
                break;
            }
            f = next;
            assert!(rounds < 100, "median iteration did not settle");
        }
        values = (0..64).map(|p| f.column(p)).collect();
        let root = field(1, 8, 8, &values);
        assert_eq!(median_membership_filter(&root, 3).unwrap(), root);
    }

    #[test]
    fn per_cluster_normalization_divides_by_cluster_count() {
        let f = field(4, 1, 1, &[vec![0.25; 4]]);
        let out = normalize_roi(&f, Normalization::PerCluster);
        for v in out.column(0) {
            assert!((v - 0.0625).abs() < 1e-15);
        }
        let zero = field(4, 1, 1, &[vec![0.0; 4]]);
        assert!(normalize_roi(&zero, Normalization::PerCluster)
            .column(0)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn binarize_edge_cases() {
        let dark = field(2, 3, 2, &vec![vec![0.9, 0.1]; 6]);
        let r = binarize_roi(&dark, &[10.0, 100.0], RoiPolicy::default()).unwrap();
        assert_eq!(r.mask.count(), 0);
        assert!(!r.warnings.is_empty());

        let bright = field(2, 3, 2, &vec![vec![0.1, 0.9]; 6]);
        let r = binarize_roi(&bright, &[10.0, 100.0], RoiPolicy::default()).unwrap();
        assert_eq!(r.mask, Mask::full(3, 2));
        assert!(r.warnings.is_empty());

        assert!(binarize_roi(&bright, &[100.0, 10.0], RoiPolicy::default()).is_err());
    }

    #[test]
    fn columns_fill_between_extremes() {
        #[rustfmt::skip]
        let bits = [
            0, 1, 0,
            1, 0, 0,
            1, 1, 1,
        ];
        let cand = Mask::new(3, 3, bits.iter().map(|&b| b == 1).collect()).unwrap();
        let out = binarize_candidates(&cand, RoiPolicy::LargestComponent);
        // The top-middle pixel is its own component and is dropped.
        #[rustfmt::skip]
        let expected = [
            0, 0, 0,
            1, 0, 0,
            1, 1, 1,
        ];
        assert_eq!(out.mask.bits(), expected.map(|b| b == 1).as_slice());
    }

    fn mask_pair() -> impl Strategy<Value = (Mask, Mask)> {
        (2usize..10, 2usize..10).prop_flat_map(|(w, h)| {
            (
                prop::collection::vec(any::<bool>(), w * h),
                prop::collection::vec(prop::bool::weighted(0.2), w * h),
            )
                .prop_map(move |(a, extra)| {
                    let grown: Vec<bool> = a.iter().zip(&extra).map(|(x, y)| *x || *y).collect();
                    (Mask::new(w, h, a).unwrap(), Mask::new(w, h, grown).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn probabilistic_columns_sum_to_one(cols in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 1..20)) {
            let f = field(3, cols.len(), 1, &cols);
            let out = normalize_roi(&f, Normalization::Probabilistic);
            for p in 0..cols.len() {
                let s: f64 = out.column(p).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn min_area_policy_is_monotone((small, large) in mask_pair(), min in 1usize..6) {
            let a = binarize_candidates(&small, RoiPolicy::MinComponentArea(min)).mask;
            let b = binarize_candidates(&large, RoiPolicy::MinComponentArea(min)).mask;
            for (x, y) in a.bits().iter().zip(b.bits()) {
                prop_assert!(!*x || *y);
            }
        }

        #[test]
        fn largest_component_policy_is_monotone_when_growing_the_winner(
            (small, _) in mask_pair(),
            extra in prop::collection::vec(prop::bool::weighted(0.3), 100),
        ) {
            // Grow only pixels 4-adjacent to the winning component so it stays the largest.
            let (w, h) = (small.width(), small.height());
            let (labels, count) = label_components(&small);
            prop_assume!(count > 0);
            let areas = component_areas(&labels, count);
            let best = (1..=count).fold(1, |b, l| if areas[l] > areas[b] { l } else { b });
            let mut grown = small.clone();
            for p in 0..w * h {
                let (row, col) = (p / w, p % w);
                let touches = [(0isize, 1isize), (0, -1), (1, 0), (-1, 0)].iter().any(|&(dy, dx)| {
                    let (r, c) = (row as isize + dy, col as isize + dx);
                    r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w
                        && labels[r as usize * w + c as usize] as usize == best
                });
                if touches && extra[p % extra.len()] {
                    grown.bits_mut()[p] = true;
                }
            }
            let a = binarize_candidates(&small, RoiPolicy::LargestComponent).mask;
            let b = binarize_candidates(&grown, RoiPolicy::LargestComponent).mask;
            for (x, y) in a.bits().iter().zip(b.bits()) {
                prop_assert!(!*x || *y);
            }
        }
    }
}
