//! 4-connected component labeling of binary masks.

use crate::image::Mask;

/// Labels foreground pixels; background gets `0`, components `1..=count`
/// numbered in raster order of their first pixel.
pub fn label_components(mask: &Mask) -> (Vec<u32>, usize) {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (row, col) = (p / w, p % w);
            let mut push = |q: usize| {
                if bits[q] && labels[q] == 0 {
                    labels[q] = next;
                    stack.push(q);
                }
            };
            if row > 0 {
                push(p - w);
            }
            if row + 1 < h {
                push(p + w);
            }
            if col > 0 {
                push(p - 1);
            }
            if col + 1 < w {
                push(p + 1);
            }
        }
    }
    (labels, next as usize)
}

/// Pixel count of every component, indexed by label (index 0 unused).
pub fn component_areas(labels: &[u32], count: usize) -> Vec<usize> {
    let mut areas = vec![0usize; count + 1];
    for &l in labels {
        if l != 0 {
            areas[l as usize] += 1;
        }
    }
    areas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_are_separate() {
        let m = Mask::new(2, 2, vec![true, false, false, true]).unwrap();
        let (labels, n) = label_components(&m);
        assert_eq!(n, 2);
        assert_eq!(labels, vec![1, 0, 0, 2]);
        assert_eq!(component_areas(&labels, n), vec![0, 1, 1]);
    }

    #[test]
    fn u_shape_is_one_component() {
        #[rustfmt::skip]
        let bits = [
            1, 0, 1,
            1, 0, 1,
            1, 1, 1,
        ];
        let m = Mask::new(3, 3, bits.iter().map(|&b| b == 1).collect()).unwrap();
        let (_, n) = label_components(&m);
        assert_eq!(n, 1);
    }
}
