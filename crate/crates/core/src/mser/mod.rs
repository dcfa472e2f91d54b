//! Bright extremal regions: pixel ordering, max-tree, stability and
//! maximally stable region selection.

mod regions;
mod sort;
mod stability;
mod tree;

pub use regions::{
    dedup_regions, extract_mser, regions_to_mask, select_stable, tree_dump, ExtremalRegion,
    MserParams, DEFAULT_INTENSITY_SCALE,
};
pub use sort::{sort_pixels, PixelOrder};
pub use stability::{
    brighter_cutoff, dimmer_cutoff, dominant_child, stability, stability_from_areas,
};
pub use tree::{build_component_tree, moments_of_pixels, region_moments, ComponentTree, Moments, Node};

use crate::error::Result;
use crate::image::{BScan, Mask};

/// Candidate foci of one image: deduplicated stable regions and their union.
pub fn estimate_foci(img: &BScan, params: &MserParams) -> Result<(Mask, Vec<ExtremalRegion>)> {
    params.validate()?;
    let tree = build_component_tree(img)?;
    let delta = params.delta_gray();
    let regions = extract_mser(&tree, delta, params.g_min_gray(), params.max_variation)?;
    let regions = dedup_regions(
        regions,
        &tree,
        delta,
        params.similarity_tol,
        params.max_variation,
    );
    let mask = regions_to_mask(&regions, img.width(), img.height())?;
    Ok((mask, regions))
}
