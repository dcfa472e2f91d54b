//! t-test and ICC(2,k) values frozen from `tests/fixtures/stats_oracle.py`
//! (50-digit mpmath).

use hfseg_core::metrics::{icc2k, paired_t_test, PairedSeries};

pub struct TCase {
    pub g: &'static [f64],
    pub a: &'static [f64],
    pub t: f64,
    pub p: f64,
}

pub const T_CASES: [TCase; 3] = [
    TCase {
        g: &[1.0, 2.0, 3.0, 4.0, 5.0],
        a: &[1.1, 2.3, 2.9, 4.4, 5.2],
        t: 2.0924574973887471,
        p: 0.10453999977837546,
    },
    TCase {
        g: &[10.5, 12.1, 9.8, 11.4, 13.0, 10.9, 12.7, 11.8],
        a: &[10.8, 12.0, 10.3, 11.6, 13.4, 10.7, 13.3, 11.9],
        t: 2.260112410502652,
        p: 0.058321711731645011,
    },
    TCase {
        g: &[0.12, 0.40, 0.33, 0.91, 0.05, 0.27, 0.66, 0.58, 0.19, 0.74, 0.81, 0.47],
        a: &[0.10, 0.43, 0.30, 0.97, 0.05, 0.31, 0.70, 0.57, 0.22, 0.79, 0.86, 0.49],
        t: 2.5188707584175337,
        p: 0.028532770414116349,
    },
];

pub struct IccCase {
    pub ratings: &'static [&'static [f64]],
    pub icc: f64,
    pub ci: (f64, f64),
}

pub const ICC_CASES: [IccCase; 3] = [
    IccCase {
        ratings: &[
            &[9.0, 2.0, 5.0, 8.0],
            &[6.0, 1.0, 3.0, 2.0],
            &[8.0, 4.0, 6.0, 8.0],
            &[7.0, 1.0, 2.0, 6.0],
            &[10.0, 5.0, 6.0, 9.0],
            &[6.0, 2.0, 4.0, 7.0],
        ],
        icc: 0.62005054759898905,
        ci: (0.071136815302503268, 0.92723204016772193),
    },
    IccCase {
        ratings: &[
            &[4.1, 4.3],
            &[2.2, 2.0],
            &[5.6, 5.9],
            &[3.3, 3.1],
            &[4.8, 5.2],
            &[1.9, 2.3],
            &[3.7, 3.6],
            &[6.0, 6.4],
        ],
        icc: 0.99096241100741451,
        ci: (0.95473183400833497, 0.99819154074975986),
    },
    IccCase {
        ratings: &[
            &[12.0, 13.0, 11.0],
            &[15.0, 15.0, 16.0],
            &[9.0, 10.0, 9.0],
            &[20.0, 18.0, 19.0],
            &[14.0, 15.0, 13.0],
            &[11.0, 12.0, 12.0],
            &[17.0, 18.0, 16.0],
            &[8.0, 9.0, 10.0],
            &[13.0, 13.0, 14.0],
            &[16.0, 17.0, 15.0],
        ],
        icc: 0.97693114295700804,
        ci: (0.93458043146671759, 0.99370803305770158),
    },
];

/// Largest absolute deviation from the frozen t-test and ICC values.
pub fn worst_deviation() -> f64 {
    let mut worst = 0.0f64;
    for c in &T_CASES {
        let s = PairedSeries::new(c.g.to_vec(), c.a.to_vec()).unwrap();
        let t = paired_t_test(&s).unwrap();
        worst = worst.max((t.t - c.t).abs()).max((t.p - c.p).abs());
    }
    for c in &ICC_CASES {
        let r: Vec<Vec<f64>> = c.ratings.iter().map(|r| r.to_vec()).collect();
        let icc = icc2k(&r).unwrap();
        worst = worst
            .max((icc.icc - c.icc).abs())
            .max((icc.ci_low - c.ci.0).abs())
            .max((icc.ci_high - c.ci.1).abs());
    }
    worst
}
