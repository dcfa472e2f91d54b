use super::tree::ComponentTree;
use crate::error::{Error, Result};

/// Child with the largest area, ties going to the one holding the smallest
/// pixel index. `None` for leaves.
pub fn dominant_child(tree: &ComponentTree, id: usize) -> Option<usize> {
    tree.children(id)
        .iter()
        .map(|&c| c as usize)
        .max_by(|&a, &b| {
            let (na, nb) = (tree.node(a), tree.node(b));
            na.area
                .cmp(&nb.area)
                .then(nb.min_pixel.cmp(&na.min_pixel))
        })
}

/// First ancestor whose level is at most `level(id) - delta`; the root when
/// no such ancestor exists (including for the root itself).
pub fn dimmer_cutoff(tree: &ComponentTree, id: usize, delta: f64) -> usize {
    let target = tree.node(id).level as f64 - delta;
    let mut cur = id;
    while cur != tree.root() {
        cur = tree.parent(cur);
        if tree.node(cur).level as f64 <= target {
            return cur;
        }
    }
    tree.root()
}

/// Descends through dominant children until a node at level
/// `>= level(id) + delta` is reached; `None` if the chain ends first.
pub fn brighter_cutoff(tree: &ComponentTree, id: usize, delta: f64) -> Option<usize> {
    let target = tree.node(id).level as f64 + delta;
    let mut cur = id;
    while let Some(next) = dominant_child(tree, cur) {
        cur = next;
        if tree.node(cur).level as f64 >= target {
            return Some(cur);
        }
    }
    None
}

/// Relative area change of every node across a window of `delta` gray
/// levels, clamped at zero.
pub fn stability(tree: &ComponentTree, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("delta must be > 0, got {delta}")));
    }
    Ok((0..tree.len())
        .map(|id| {
            let own = tree.node(id).area as f64;
            let dim = tree.node(dimmer_cutoff(tree, id, delta)).area as f64;
            let bright = brighter_cutoff(tree, id, delta)
                .map(|b| tree.node(b).area as f64)
                .unwrap_or(own);
            ((dim - bright) / own).max(0.0)
        })
        .collect())
}

/// Ψ from explicit areas.
pub fn stability_from_areas(dimmer: f64, own: f64, brighter: f64) -> f64 {
    ((dimmer - brighter) / own).max(0.0)
}
