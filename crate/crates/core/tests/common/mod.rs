//! Slow reference implementations shared by the oracle and acceptance tests.

#![allow(dead_code)]

pub mod stats_fixtures;

use std::collections::HashMap;

use hfseg_core::mser::{build_component_tree, stability};
use hfseg_core::roi::{gray_histogram, FcmParams};
use hfseg_core::BScan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random image with values `step * k` for `k` in `0..levels`.
pub fn random_image(seed: u64, width: usize, height: usize, levels: u32, step: f64) -> BScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * height)
        .map(|_| rng.random_range(0..levels) as f64 * step)
        .collect();
    BScan::new(width, height, data).unwrap()
}

/// 4-connected components of the pixels in `set` (flags per pixel).
fn components(set: &[bool], w: usize, h: usize) -> Vec<Vec<u32>> {
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if !set[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start as u32];
        let mut i = 0;
        while i < comp.len() {
            let p = comp[i] as usize;
            i += 1;
            let (r, c) = (p / w, p % w);
            let mut nbrs = Vec::with_capacity(4);
            if r > 0 {
                nbrs.push(p - w);
            }
            if r + 1 < h {
                nbrs.push(p + w);
            }
            if c > 0 {
                nbrs.push(p - 1);
            }
            if c + 1 < w {
                nbrs.push(p + 1);
            }
            for q in nbrs {
                if set[q] && !seen[q] {
                    seen[q] = true;
                    comp.push(q as u32);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Component of `{v >= t}` holding pixel `p`.
fn threshold_component(img: &BScan, t: f64, p: u32) -> Vec<u32> {
    let set: Vec<bool> = img.data().iter().map(|&v| v >= t).collect();
    components(&set, img.width(), img.height())
        .into_iter()
        .find(|c| c.binary_search(&p).is_ok())
        .expect("pixel lies in its own upper set")
}

fn min_value(img: &BScan, pixels: &[u32]) -> f64 {
    pixels
        .iter()
        .map(|&p| img.data()[p as usize])
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefNode {
    pub pixels: Vec<u32>,
    pub level: f64,
    /// Pixel set of the parent; `None` for the root.
    pub parent: Option<Vec<u32>>,
    pub stability: f64,
}

/// Enumerates every distinct connected component of every upper threshold
/// set, then links each to the smallest strictly larger one.
pub fn reference_tree(img: &BScan, delta: f64) -> Vec<RefNode> {
    let (w, h) = (img.width(), img.height());
    let mut levels: Vec<f64> = img.data().to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut by_level: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut first_level: HashMap<Vec<u32>, f64> = HashMap::new();
    for &t in &levels {
        let set: Vec<bool> = img.data().iter().map(|&v| v >= t).collect();
        let comps = components(&set, w, h);
        for c in &comps {
            first_level.entry(c.clone()).or_insert(t);
        }
        by_level.push(comps);
    }

    let mut nodes = Vec::new();
    for (set, &level) in &first_level {
        let li = levels.iter().position(|&l| l == level).unwrap();
        let parent = by_level[li + 1..].iter().find_map(|comps| {
            let c = comps
                .iter()
                .find(|c| c.binary_search(&set[0]).is_ok())
                .unwrap();
            (c != set).then(|| c.clone())
        });
        let stability = reference_stability(img, set, level, delta);
        nodes.push(RefNode {
            pixels: set.clone(),
            level,
            parent,
            stability,
        });
    }
    nodes
}

fn reference_stability(img: &BScan, set: &[u32], level: f64, delta: f64) -> f64 {
    let (w, h) = (img.width(), img.height());
    let lower = level - delta;
    let mut thresholds: Vec<f64> = img.data().iter().copied().filter(|&v| v <= lower).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let dimmer = thresholds
        .iter()
        .map(|&t| threshold_component(img, t, set[0]))
        .find(|c| min_value(img, c) <= lower)
        .map_or(w * h, |c| c.len());

    let upper = level + delta;
    let mut cur = set.to_vec();
    let mut cur_level = level;
    let brighter = loop {
        let mut inside = vec![false; w * h];
        for &p in &cur {
            inside[p as usize] = img.data()[p as usize] > cur_level;
        }
        let children = components(&inside, w, h);
        let Some(best) = children
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        else {
            break set.len();
        };
        cur_level = min_value(img, &best);
        cur = best;
        if cur_level >= upper {
            break cur.len();
        }
    };
    ((dimmer as f64 - brighter as f64) / set.len() as f64).max(0.0)
}

/// Compares the library tree and stability against `reference_tree`.
pub fn check_tree(img: &BScan, delta: f64) -> Result<(), String> {
    let tree = build_component_tree(img).map_err(|e| e.to_string())?;
    let psi = stability(&tree, delta).map_err(|e| e.to_string())?;
    let reference = reference_tree(img, delta);
    if tree.len() != reference.len() {
        return Err(format!("{} nodes, reference has {}", tree.len(), reference.len()));
    }
    let sets: Vec<Vec<u32>> = (0..tree.len())
        .map(|id| {
            let mut s = tree.region_pixels(id);
            s.sort_unstable();
            s
        })
        .collect();
    let index: HashMap<&Vec<u32>, &RefNode> = reference.iter().map(|n| (&n.pixels, n)).collect();
    for id in 0..tree.len() {
        let node = tree.node(id);
        let Some(r) = index.get(&sets[id]) else {
            return Err(format!("node {id} is not a threshold component"));
        };
        if node.level as f64 != r.level || node.area as usize != r.pixels.len() {
            return Err(format!(
                "node {id}: level/area {}/{} vs {}/{}",
                node.level,
                node.area,
                r.level,
                r.pixels.len()
            ));
        }
        let parent = (id != tree.root()).then(|| sets[tree.parent(id)].clone());
        if parent != r.parent {
            return Err(format!("node {id}: parent differs"));
        }
        if psi[id] != r.stability {
            return Err(format!("node {id}: stability {} vs {}", psi[id], r.stability));
        }
    }
    Ok(())
}

pub struct PixelFcm {
    /// Ascending.
    pub centroids: Vec<f64>,
    /// `memberships[k][l]` for the `l`-th distinct gray level, ascending.
    pub memberships: Vec<Vec<f64>>,
    pub iterations: usize,
    pub objective: Vec<f64>,
}

/// Plain fuzzy c-means over individual pixels, started from the same
/// per-level partition the histogram version uses.
pub fn pixel_fcm(img: &BScan, params: &FcmParams) -> PixelFcm {
    let hist = gray_histogram(img);
    let init = params.initial_memberships(hist.q());
    let c = params.clusters;
    let m = params.fuzzifier;
    let x = img.data();
    let n = x.len();
    let level_of: Vec<usize> = x.iter().map(|&v| hist.level_index(v).unwrap()).collect();
    let mut u: Vec<Vec<f64>> = (0..c)
        .map(|k| level_of.iter().map(|&l| init.get(k, l)).collect())
        .collect();
    let mut v = vec![0.0; c];
    let mut objective = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iters {
        iterations += 1;
        for k in 0..c {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..n {
                let wgt = u[k][i].powf(m);
                num += wgt * x[i];
                den += wgt;
            }
            v[k] = num / den;
        }
        let mut next = vec![vec![0.0; n]; c];
        for i in 0..n {
            if let Some(k) = v.iter().position(|&vk| vk == x[i]) {
                next[k][i] = 1.0;
                continue;
            }
            for k in 0..c {
                let dk = (x[i] - v[k]).abs();
                let s: f64 = v.iter().map(|&vj| (dk / (x[i] - vj).abs()).powf(2.0 / (m - 1.0))).sum();
                next[k][i] = 1.0 / s;
            }
        }
        let mut j = 0.0;
        for k in 0..c {
            for i in 0..n {
                j += next[k][i].powf(m) * (x[i] - v[k]).powi(2);
            }
        }
        objective.push(j);
        let change = (0..c)
            .flat_map(|k| (0..n).map(move |i| (k, i)))
            .fold(0.0f64, |acc, (k, i)| acc.max((u[k][i] - next[k][i]).abs()));
        u = next;
        if change < params.tolerance {
            break;
        }
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut first_pixel = vec![usize::MAX; hist.q()];
    for (i, &l) in level_of.iter().enumerate() {
        if first_pixel[l] == usize::MAX {
            first_pixel[l] = i;
        }
    }
    PixelFcm {
        centroids: order.iter().map(|&k| v[k]).collect(),
        memberships: order
            .iter()
            .map(|&k| first_pixel.iter().map(|&i| u[k][i]).collect())
            .collect(),
        iterations,
        objective,
    }
}

/// Reconstruction by dilation as the fixed point of
/// `marker <- min(max over the 4-neighbourhood, mask)`.
pub fn iterate_reconstruction(marker: &BScan, mask: &BScan) -> BScan {
    let (w, h) = (mask.width(), mask.height());
    let mut cur = marker.data().to_vec();
    loop {
        let mut next = cur.clone();
        for r in 0..h {
            for c in 0..w {
                let p = r * w + c;
                let mut best = cur[p];
                if r > 0 {
                    best = best.max(cur[p - w]);
                }
                if r + 1 < h {
                    best = best.max(cur[p + w]);
                }
                if c > 0 {
                    best = best.max(cur[p - 1]);
                }
                if c + 1 < w {
                    best = best.max(cur[p + 1]);
                }
                next[p] = best.min(mask.data()[p]);
            }
        }
        if next == cur {
            return BScan::new(w, h, cur).unwrap();
        }
        cur = next;
    }
}
