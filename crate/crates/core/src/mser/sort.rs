use crate::image::BScan;

/// Pixel indices in non-decreasing order of their 8-bit key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelOrder {
    pub keys: Vec<u8>,
    pub order: Vec<u32>,
}

impl PixelOrder {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Key values along the order.
    pub fn sorted_keys(&self) -> Vec<u8> {
        self.order.iter().map(|&p| self.keys[p as usize]).collect()
    }
}

/// Stable counting sort over 256 buckets. Values are rounded to the
/// nearest integer first.
pub fn sort_pixels(img: &BScan) -> PixelOrder {
    sort_keys(img.to_u8())
}

pub(crate) fn sort_keys(keys: Vec<u8>) -> PixelOrder {
    let mut start = [0usize; 257];
    for &k in &keys {
        start[k as usize + 1] += 1;
    }
    for i in 1..257 {
        start[i] += start[i - 1];
    }
    let mut order = vec![0u32; keys.len()];
    for (p, &k) in keys.iter().enumerate() {
        let slot = &mut start[k as usize];
        order[*slot] = p as u32;
        *slot += 1;
    }
    PixelOrder { keys, order }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_row() {
        let img = BScan::new(3, 1, vec![3.0, 1.0, 2.0]).unwrap();
        let o = sort_pixels(&img);
        assert_eq!(o.order, vec![1, 2, 0]);
        assert_eq!(o.sorted_keys(), vec![1, 2, 3]);
    }

    #[test]
    fn equal_values_keep_index_order() {
        let img = BScan::filled(4, 2, 9.0).unwrap();
        assert_eq!(sort_pixels(&img).order, (0..8).collect::<Vec<u32>>());
    }

    proptest! {
        #[test]
        fn matches_comparison_sort(v in prop::collection::vec(any::<u8>(), 64)) {
            let img = BScan::from_u8(8, 8, &v).unwrap();
            let o = sort_pixels(&img);
            let mut expected: Vec<u32> = (0..64).collect();
            expected.sort_by_key(|&p| v[p as usize]);
            prop_assert_eq!(&o.order, &expected);
            let mut seen = o.order.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..64).collect::<Vec<u32>>());
        }
    }
}
