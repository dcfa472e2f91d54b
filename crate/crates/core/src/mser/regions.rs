use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stability::{dimmer_cutoff, stability};
use super::tree::ComponentTree;
use crate::error::{Error, Result};
use crate::image::Mask;

/// Default mapping from normalized threshold units to 8-bit gray levels.
pub const DEFAULT_INTENSITY_SCALE: f64 = 255.0 / 5.0;

/// Extremal-region detector settings. `delta` and `g_min` are given in
/// normalized units and multiplied by `intensity_scale` before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MserParams {
    pub delta: f64,
    pub g_min: f64,
    pub max_variation: f64,
    pub intensity_scale: f64,
    /// Largest relative area difference for two nested regions to count
    /// as duplicates.
    pub similarity_tol: f64,
}

impl Default for MserParams {
    fn default() -> Self {
        Self {
            delta: 0.21,
            g_min: 2.10,
            max_variation: 1.0,
            intensity_scale: DEFAULT_INTENSITY_SCALE,
            similarity_tol: 0.2,
        }
    }
}

impl MserParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity_scale > 0.0 && self.intensity_scale.is_finite()) {
            return Err(Error::param("intensity scale must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::param(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.g_min.is_nan() || self.max_variation.is_nan() || self.max_variation < 0.0 {
            return Err(Error::param("g_min and max_variation must be numbers, max_variation >= 0"));
        }
        if !(self.similarity_tol >= 0.0) {
            return Err(Error::param("similarity tolerance must be >= 0"));
        }
        Ok(())
    }

    pub fn delta_gray(&self) -> f64 {
        self.delta * self.intensity_scale
    }

    pub fn g_min_gray(&self) -> f64 {
        self.g_min * self.intensity_scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalRegion {
    pub node: usize,
    pub level: f64,
    pub area: usize,
    pub stability: f64,
    /// (row, col)
    pub centroid: [f64; 2],
    pub second_moment: [[f64; 2]; 2],
    #[serde(skip)]
    pub pixels: Vec<u32>,
}

impl ExtremalRegion {
    pub fn from_node(tree: &ComponentTree, node: usize, stability: f64) -> Self {
        let m = tree.moments(node);
        let n = tree.node(node);
        Self {
            node,
            level: n.level as f64,
            area: n.area as usize,
            stability,
            centroid: m.centroid,
            second_moment: m.covariance,
            pixels: tree.region_pixels(node),
        }
    }
}

/// Local minima of Ψ along root paths. The root is never a candidate and
/// never a competitor. Equal-Ψ chains keep only their brightest node.
pub fn select_stable(tree: &ComponentTree, psi: &[f64], g_min: f64, max_variation: f64) -> Vec<usize> {
    let root = tree.root();
    (0..tree.len())
        .filter(|&id| id != root)
        .filter(|&id| psi[id] <= max_variation && tree.node(id).level as f64 >= g_min)
        .filter(|&id| tree.children(id).iter().all(|&c| psi[c as usize] > psi[id]))
        .filter(|&id| {
            let mut up = tree.parent(id);
            while up != root && psi[up] == psi[id] {
                up = tree.parent(up);
            }
            up == root || psi[up] > psi[id]
        })
        .collect()
}

/// Maximally stable regions with `delta`, `g_min` and `max_variation` in gray units.
pub fn extract_mser(
    tree: &ComponentTree,
    delta: f64,
    g_min: f64,
    max_variation: f64,
) -> Result<Vec<ExtremalRegion>> {
    let psi = stability(tree, delta)?;
    Ok(select_stable(tree, &psi, g_min, max_variation)
        .into_iter()
        .map(|id| ExtremalRegion::from_node(tree, id, psi[id]))
        .collect())
}

/// Removes near-duplicate nested regions and regions above `max_variation`.
///
/// Regions are visited outermost first. Each one is compared with its
/// nearest surviving ancestor region; if that ancestor lies within `delta`
/// gray levels (no dimmer than the region's lower cutoff) and the areas
/// differ by at most `similarity_tol` of the ancestor's area, the one with
/// the larger Ψ is dropped, the ancestor on ties.
pub fn dedup_regions(
    regions: Vec<ExtremalRegion>,
    tree: &ComponentTree,
    delta: f64,
    similarity_tol: f64,
    max_variation: f64,
) -> Vec<ExtremalRegion> {
    let mut seen = HashSet::new();
    let mut candidates: Vec<ExtremalRegion> = regions
        .into_iter()
        .filter(|r| r.stability <= max_variation && seen.insert(r.node))
        .collect();
    candidates.sort_by_key(|r| r.node);

    let mut alive: Vec<Option<ExtremalRegion>> = Vec::with_capacity(candidates.len());
    let mut slot_of_node: HashMap<usize, usize> = HashMap::new();
    for region in candidates {
        let window_floor = tree.node(dimmer_cutoff(tree, region.node, delta)).level;
        let mut up = region.node;
        let mut rival = None;
        while up != tree.root() {
            up = tree.parent(up);
            if tree.node(up).level < window_floor {
                break;
            }
            if let Some(&slot) = slot_of_node.get(&up) {
                if alive[slot].is_some() {
                    rival = Some(slot);
                    break;
                }
            }
        }
        let keep_region = match rival {
            Some(slot) => {
                let parent: &ExtremalRegion = alive[slot].as_ref().unwrap();
                let diff = (region.area as f64 - parent.area as f64).abs() / parent.area as f64;
                if diff <= similarity_tol {
                    if region.stability <= parent.stability {
                        alive[slot] = None;
                        true
                    } else {
                        false
                    }
                } else {
                    true
                }
            }
            None => true,
        };
        if keep_region {
            slot_of_node.insert(region.node, alive.len());
            alive.push(Some(region));
        }
    }
    alive.into_iter().flatten().collect()
}

/// Union of region pixels.
pub fn regions_to_mask(regions: &[ExtremalRegion], width: usize, height: usize) -> Result<Mask> {
    let mut mask = Mask::empty(width, height);
    let n = width * height;
    for r in regions {
        for &p in &r.pixels {
            if p as usize >= n {
                return Err(Error::Consistency(format!(
                    "region {} holds pixel {p} outside a {width}x{height} image",
                    r.node
                )));
            }
            mask.bits_mut()[p as usize] = true;
        }
    }
    Ok(mask)
}

/// One comma-separated line per node: id, parent, level, area, Ψ, centroid.
pub fn tree_dump(tree: &ComponentTree, psi: &[f64]) -> String {
    let mut out = String::from("node,parent,level,area,stability,mu_row,mu_col\n");
    for id in 0..tree.len() {
        let n = tree.node(id);
        let m = tree.moments(id);
        let _ = writeln!(
            out,
            "{id},{},{},{},{},{},{}",
            n.parent, n.level, n.area, psi[id], m.centroid[0], m.centroid[1]
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::BScan;
    use crate::mser::build_component_tree;

    fn blob_image(w: usize, h: usize, blobs: &[(usize, usize, usize, u8)]) -> BScan {
        let mut v = vec![10u8; w * h];
        for &(r0, c0, size, level) in blobs {
            for r in r0..r0 + size {
                for c in c0..c0 + size {
                    v[r * w + c] = level;
                }
            }
        }
        BScan::from_u8(w, h, &v).unwrap()
    }

    #[test]
    fn flat_blob_gives_one_region() {
        let img = blob_image(20, 20, &[(5, 6, 4, 200)]);
        let t = build_component_tree(&img).unwrap();
        let r = extract_mser(&t, 10.0, 0.0, f64::INFINITY).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].area, 16);
        assert_eq!(r[0].centroid, [6.5, 7.5]);
    }

    #[test]
    fn constant_image_gives_none() {
        let t = build_component_tree(&BScan::filled(9, 9, 50.0).unwrap()).unwrap();
        assert!(extract_mser(&t, 5.0, 0.0, f64::INFINITY).unwrap().is_empty());
    }

    #[test]
    fn two_blobs_two_centroids() {
        let img = blob_image(30, 20, &[(2, 3, 5, 220), (10, 20, 3, 180)]);
        let t = build_component_tree(&img).unwrap();
        let mut r = extract_mser(&t, 10.0, 0.0, f64::INFINITY).unwrap();
        r.sort_by(|a, b| a.centroid[0].total_cmp(&b.centroid[0]));
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].centroid, [4.0, 5.0]);
        assert_eq!(r[1].centroid, [11.0, 21.0]);
    }

    #[test]
    fn nested_near_duplicates_collapse() {
        // 10x10 block at level 200 plus one extra pixel at 195.
        let mut v = vec![0u8; 20 * 20];
        for r in 2..12 {
            for c in 2..12 {
                v[r * 20 + c] = 200;
            }
        }
        v[12 * 20 + 2] = 195;
        let t = build_component_tree(&BScan::from_u8(20, 20, &v).unwrap()).unwrap();
        let inner = t.node_of_pixel(2 * 20 + 2);
        let outer = t.node_of_pixel(12 * 20 + 2);
        assert_eq!((t.node(inner).area, t.node(outer).area), (100, 101));
        let a = ExtremalRegion::from_node(&t, inner, 0.3);
        let b = ExtremalRegion::from_node(&t, outer, 0.1);
        let out = dedup_regions(vec![a.clone(), b.clone()], &t, 10.0, 0.1, f64::INFINITY);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].node, outer);
        let a = ExtremalRegion { stability: 0.05, ..a };
        let out = dedup_regions(vec![a, b], &t, 10.0, 0.1, f64::INFINITY);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].node, inner);
    }

    #[test]
    fn disjoint_regions_survive_dedup() {
        let img = blob_image(30, 20, &[(2, 3, 5, 220), (10, 20, 3, 180)]);
        let t = build_component_tree(&img).unwrap();
        let r = extract_mser(&t, 10.0, 0.0, f64::INFINITY).unwrap();
        assert_eq!(dedup_regions(r.clone(), &t, 10.0, 0.2, f64::INFINITY).len(), 2);
        let doubled: Vec<_> = r.iter().chain(&r).cloned().collect();
        assert_eq!(dedup_regions(doubled, &t, 10.0, 0.2, f64::INFINITY).len(), 2);
    }

    #[test]
    fn mask_union() {
        let region = |pixels: Vec<u32>| ExtremalRegion {
            node: 0,
            level: 0.0,
            area: pixels.len(),
            stability: 0.0,
            centroid: [0.0; 2],
            second_moment: [[0.0; 2]; 2],
            pixels,
        };
        assert_eq!(regions_to_mask(&[], 4, 4).unwrap().count(), 0);
        assert_eq!(regions_to_mask(&[region(vec![1, 2, 3])], 4, 4).unwrap().count(), 3);
        let both = [region(vec![1, 2, 3]), region(vec![3, 4])];
        assert_eq!(regions_to_mask(&both, 4, 4).unwrap().count(), 4);
        assert!(matches!(
            regions_to_mask(&[region(vec![16])], 4, 4),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn dump_has_a_line_per_node() {
        let t = build_component_tree(&BScan::from_u8(3, 1, &[1, 3, 2]).unwrap()).unwrap();
        let psi = stability(&t, 1.0).unwrap();
        let dump = tree_dump(&t, &psi);
        assert_eq!(dump.lines().count(), 4);
        assert!(dump.lines().nth(1).unwrap().starts_with("0,0,1,3,"));
    }
}
