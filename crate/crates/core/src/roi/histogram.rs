use crate::image::BScan;

/// Gray-level histogram: distinct levels in ascending order with their counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    levels: Vec<f64>,
    counts: Vec<usize>,
    total: usize,
}

impl Histogram {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Number of distinct levels.
    pub fn q(&self) -> usize {
        self.levels.len()
    }

    /// Number of pixels the histogram was built from.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Index of `value` among the levels, if present.
    pub fn level_index(&self, value: f64) -> Option<usize> {
        self.levels
            .binary_search_by(|probe| probe.total_cmp(&value))
            .ok()
    }

    /// Builds a histogram from explicit (level, count) pairs.
    pub fn from_pairs(mut pairs: Vec<(f64, usize)>) -> Self {
        pairs.retain(|&(_, c)| c > 0);
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut counts: Vec<usize> = Vec::with_capacity(pairs.len());
        for (l, c) in pairs {
            if levels.last() == Some(&l) {
                *counts.last_mut().unwrap() += c;
            } else {
                levels.push(l);
                counts.push(c);
            }
        }
        let total = counts.iter().sum();
        Self {
            levels,
            counts,
            total,
        }
    }
}

pub fn gray_histogram(img: &BScan) -> Histogram {
    let data = img.data();
    if data.iter().all(|&v| v.fract() == 0.0) {
        let mut bins = [0usize; 256];
        for &v in data {
            bins[v as usize] += 1;
        }
        let (levels, counts) = bins
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(l, &c)| (l as f64, c))
            .unzip();
        return Histogram {
            levels,
            counts,
            total: data.len(),
        };
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut levels = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in sorted {
        if levels.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            levels.push(v);
            counts.push(1);
        }
    }
    Histogram {
        levels,
        counts,
        total: data.len(),
    }
}
