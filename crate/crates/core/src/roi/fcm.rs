//! Fuzzy c-means over a gray-level histogram.
//!
//! Every gray level is weighted by its pixel count, so one iteration costs
//! `O(c * q)` instead of `O(c * N)` and yields exactly the pixel-domain
//! solution grouped by level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Histogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmParams {
    /// Number of clusters `c`.
    pub clusters: usize,
    /// Fuzzifier `m`, must exceed 1.
    pub fuzzifier: f64,
    /// Stop once the largest membership change falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            clusters: 4,
            fuzzifier: 2.0,
            tolerance: 0.002,
            max_iters: 300,
            seed: 0,
        }
    }
}

impl FcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::param("cluster count must be >= 1"));
        }
        if !(self.fuzzifier > 1.0 && self.fuzzifier.is_finite()) {
            return Err(Error::param(format!(
                "fuzzifier must be > 1, got {}",
                self.fuzzifier
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Seeded random column-stochastic `c x q` starting partition.
    pub fn initial_memberships(&self, q: usize) -> MembershipMatrixQ {
        let c = self.clusters;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut u = vec![0.0; c * q];
        for l in 0..q {
            let mut col: Vec<f64> = (0..c).map(|_| rng.random_range(1e-3..1.0)).collect();
            let s: f64 = col.iter().sum();
            col.iter_mut().for_each(|v| *v /= s);
            for k in 0..c {
                u[k * q + l] = col[k];
            }
        }
        MembershipMatrixQ { clusters: c, q, u }
    }
}

/// Memberships per cluster (rows) and gray level (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrixQ {
    clusters: usize,
    q: usize,
    u: Vec<f64>,
}

impl MembershipMatrixQ {
    pub fn new(clusters: usize, q: usize, u: Vec<f64>) -> Result<Self> {
        if u.len() != clusters * q {
            return Err(Error::dims(clusters * q, u.len()));
        }
        Ok(Self { clusters, q, u })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.u[k * self.q + l]
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.clusters).map(|k| self.get(k, l)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }

    fn max_abs_diff(&self, other: &MembershipMatrixQ) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone)]
pub struct FcmResult {
    pub memberships: MembershipMatrixQ,
    /// Cluster prototypes, ascending.
    pub centroids: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration.
    pub objective: Vec<f64>,
}

/// Membership column of one level for the given prototypes.
///
/// A level coinciding with a prototype gets full membership in the first
/// such prototype.
pub fn membership_column(level: f64, centroids: &[f64], fuzzifier: f64, out: &mut [f64]) {
    if let Some(k) = centroids.iter().position(|&v| v == level) {
        out.iter_mut().for_each(|u| *u = 0.0);
        out[k] = 1.0;
        return;
    }
    let exponent = 2.0 / (fuzzifier - 1.0);
    for (k, &vk) in centroids.iter().enumerate() {
        let dk = (level - vk).abs();
        let s: f64 = centroids
            .iter()
            .map(|&vj| (dk / (level - vj).abs()).powf(exponent))
            .sum();
        out[k] = 1.0 / s;
    }
}

/// Weighted prototype update; errors when a cluster has no weight.
pub fn update_centroids(
    hist: &Histogram,
    u: &MembershipMatrixQ,
    fuzzifier: f64,
) -> Result<Vec<f64>> {
    let q = hist.q();
    (0..u.clusters())
        .map(|k| {
            let mut num = 0.0;
            let mut den = 0.0;
            for l in 0..q {
                let w = hist.counts()[l] as f64 * u.get(k, l).powf(fuzzifier);
                num += w * hist.levels()[l];
                den += w;
            }
            if den > 0.0 && den.is_finite() {
                Ok(num / den)
            } else {
                Err(Error::DegenerateData(format!(
                    "cluster {k} has no weight ({} gray levels for {} clusters)",
                    q,
                    u.clusters()
                )))
            }
        })
        .collect()
}

/// Histogram-weighted objective `sum_l sum_k count_l u_kl^m (level_l - v_k)^2`.
pub fn objective(hist: &Histogram, u: &MembershipMatrixQ, centroids: &[f64], fuzzifier: f64) -> f64 {
    let mut j = 0.0;
    for (k, &vk) in centroids.iter().enumerate() {
        for l in 0..hist.q() {
            let d = hist.levels()[l] - vk;
            j += hist.counts()[l] as f64 * u.get(k, l).powf(fuzzifier) * d * d;
        }
    }
    j
}

pub fn fcm_histogram(hist: &Histogram, params: &FcmParams) -> Result<FcmResult> {
    params.validate()?;
    let init = params.initial_memberships(hist.q());
    fcm_histogram_from(hist, params, init)
}

/// Runs the alternating updates from an explicit starting partition.
pub fn fcm_histogram_from(
    hist: &Histogram,
    params: &FcmParams,
    init: MembershipMatrixQ,
) -> Result<FcmResult> {
    params.validate()?;
    let (c, q) = (params.clusters, hist.q());
    if q == 0 {
        return Err(Error::DegenerateData("empty histogram".into()));
    }
    if init.clusters() != c || init.q() != q {
        return Err(Error::dims(format!("{c}x{q}"), format!("{}x{}", init.clusters(), init.q())));
    }

    let mut u = init;
    let mut centroids = vec![0.0; c];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut column = vec![0.0; c];
    while iterations < params.max_iters {
        iterations += 1;
        centroids = update_centroids(hist, &u, params.fuzzifier)?;
        let mut next = vec![0.0; c * q];
        for l in 0..q {
            membership_column(hist.levels()[l], &centroids, params.fuzzifier, &mut column);
            for k in 0..c {
                next[k * q + l] = column[k];
            }
        }
        let next = MembershipMatrixQ {
            clusters: c,
            q,
            u: next,
        };
        history.push(objective(hist, &next, &centroids, params.fuzzifier));
        let change = u.max_abs_diff(&next);
        u = next;
        if change < params.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "fuzzy c-means stopped after {} iterations without converging",
            params.max_iters
        );
    }

    // Report clusters darkest first.
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]).then(a.cmp(&b)));
    let sorted_centroids = order.iter().map(|&k| centroids[k]).collect();
    let mut sorted_u = Vec::with_capacity(c * q);
    for &k in &order {
        sorted_u.extend_from_slice(&u.u[k * q..(k + 1) * q]);
    }
    Ok(FcmResult {
        memberships: MembershipMatrixQ {
            clusters: c,
            q,
            u: sorted_u,
        },
        centroids: sorted_centroids,
        iterations,
        converged,
        objective: history,
    })
}
