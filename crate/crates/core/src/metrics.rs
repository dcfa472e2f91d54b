//! Agreement and image-quality statistics.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::image::{BScan, Mask};

/// Dice overlap in percent. `vacuous` is set when both operands are empty,
/// in which case the value is 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dice {
    pub value: f64,
    pub vacuous: bool,
}

pub fn dice(a: &Mask, g: &Mask) -> Result<Dice> {
    a.check_dims(g)?;
    let mut both = 0usize;
    let mut total = 0usize;
    for (&x, &y) in a.bits().iter().zip(g.bits()) {
        both += (x && y) as usize;
        total += x as usize + y as usize;
    }
    Ok(dice_from_counts(both as f64, total as f64))
}

/// Dice of two volumes, using the smaller one as the overlap.
pub fn dice_volumes(a: f64, g: f64) -> Result<Dice> {
    if !(a >= 0.0 && g >= 0.0 && a.is_finite() && g.is_finite()) {
        return Err(Error::param("volumes must be finite and nonnegative"));
    }
    Ok(dice_from_counts(a.min(g), a + g))
}

fn dice_from_counts(overlap: f64, total: f64) -> Dice {
    if total == 0.0 {
        Dice {
            value: 100.0,
            vacuous: true,
        }
    } else {
        Dice {
            value: 200.0 * overlap / total,
            vacuous: false,
        }
    }
}

/// Ground-truth and automatic values measured on the same subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    g: Vec<f64>,
    a: Vec<f64>,
}

impl PairedSeries {
    pub fn new(g: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if g.len() != a.len() {
            return Err(Error::dims(g.len(), a.len()));
        }
        if g.iter().chain(&a).any(|v| !v.is_finite()) {
            return Err(Error::param("paired values must be finite"));
        }
        Ok(Self { g, a })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn ground_truth(&self) -> &[f64] {
        &self.g
    }

    pub fn automatic(&self) -> &[f64] {
        &self.a
    }

    /// `a - g` per subject.
    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.g).map(|(a, g)| a - g).collect()
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            Err(Error::SampleSize {
                needed,
                got: self.len(),
            })
        } else {
            Ok(())
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance (n - 1 denominator).
fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn pearson(s: &PairedSeries) -> Result<f64> {
    s.require(2)?;
    let (mg, ma) = (mean(&s.g), mean(&s.a));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (g, a) in s.g.iter().zip(&s.a) {
        let (dg, da) = (g - mg, a - ma);
        sxy += dg * da;
        sxx += dg * dg;
        syy += da * da;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "one of the series is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Self {
            row,
            col,
            height,
            width,
        }
    }

    fn values(&self, img: &BScan) -> Result<Vec<f64>> {
        if self.row + self.height > img.height() || self.col + self.width > img.width() {
            return Err(Error::param(format!("rectangle {self:?} exceeds the image")));
        }
        if self.height * self.width < 2 {
            return Err(Error::param("rectangles need at least 2 pixels"));
        }
        let mut v = Vec::with_capacity(self.height * self.width);
        for r in self.row..self.row + self.height {
            for c in self.col..self.col + self.width {
                v.push(img.get(r, c));
            }
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    /// Mean over standard deviation of the foreground.
    pub msr: f64,
    /// Contrast between foreground and background relative to pooled spread.
    pub cnr: f64,
}

pub fn msr_cnr(img: &BScan, fg: Rect, bg: Rect) -> Result<Quality> {
    let f = fg.values(img)?;
    let b = bg.values(img)?;
    let (vf, vb) = (variance(&f), variance(&b));
    if vf == 0.0 {
        return Err(Error::DegenerateRegion(
            "foreground has zero spread".into(),
        ));
    }
    let (mf, mb) = (mean(&f), mean(&b));
    Ok(Quality {
        msr: mf / vf.sqrt(),
        cnr: (mf - mb).abs() / (0.5 * (vf + vb)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Set when the differences have zero spread and `p` is a convention.
    pub degenerate: bool,
}

/// Two-sided paired t-test on `a - g`.
pub fn paired_t_test(s: &PairedSeries) -> Result<TTest> {
    s.require(2)?;
    let d = s.differences();
    let df = (d.len() - 1) as f64;
    let m = mean(&d);
    let sd = variance(&d).sqrt();
    if sd == 0.0 {
        let (t, p) = if m == 0.0 {
            (0.0, 1.0)
        } else {
            (m.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTest {
            t,
            df,
            p,
            degenerate: true,
        });
    }
    let t = m / (sd / (d.len() as f64).sqrt());
    Ok(TTest {
        t,
        df,
        p: student_t_two_sided(t, df),
        degenerate: false,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

/// Upper-tail quantile of the F distribution: `x` with `P(F <= x) = prob`.
pub fn f_quantile(prob: f64, d1: f64, d2: f64) -> f64 {
    // P(F <= x) = I_y(d1/2, d2/2) with y = d1 x / (d1 x + d2).
    let (a, b) = (d1 / 2.0, d2 / 2.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if beta_reg(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    d2 * y / (d1 * (1.0 - y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub bias: f64,
    pub lower: f64,
    pub upper: f64,
}

pub const AGREEMENT_Z: f64 = 1.96;

pub fn bland_altman(s: &PairedSeries) -> Result<BlandAltman> {
    s.require(2)?;
    let d = s.differences();
    let bias = mean(&d);
    let spread = AGREEMENT_Z * variance(&d).sqrt();
    Ok(BlandAltman {
        bias,
        lower: bias - spread,
        upper: bias + spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Icc {
    pub icc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-way random-effects, absolute-agreement ICC of the mean of `k` raters,
/// with its 95% confidence interval. `ratings[i][j]` is rater `j` on subject `i`.
pub fn icc2k(ratings: &[Vec<f64>]) -> Result<Icc> {
    let n = ratings.len();
    if n < 2 {
        return Err(Error::SampleSize { needed: 2, got: n });
    }
    let k = ratings[0].len();
    if k < 2 {
        return Err(Error::SampleSize { needed: 2, got: k });
    }
    if let Some(row) = ratings.iter().find(|r| r.len() != k) {
        return Err(Error::dims(k, row.len()));
    }
    if ratings.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("ratings must be finite"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = ratings.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = ratings.iter().map(|r| mean(r)).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| ratings.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let ss_total: f64 = ratings.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_rows = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_err = (ss_total - ss_rows - ss_cols).max(0.0);
    let msr = ss_rows / (nf - 1.0);
    let msc = ss_cols / (kf - 1.0);
    let mse = ss_err / ((nf - 1.0) * (kf - 1.0));

    let denom = msr + (msc - mse) / nf;
    if !(denom > 0.0) {
        return Err(Error::DegenerateData(
            "mean squares leave the ICC undefined".into(),
        ));
    }
    let icc = (msr - mse) / denom;
    if mse == 0.0 {
        return Ok(Icc {
            icc,
            ci_low: icc,
            ci_high: icc,
        });
    }

    // Single-rater ICC and its F-based interval, then stepped up to k raters.
    let icc1 = (msr - mse) / (msr + (kf - 1.0) * mse + kf * (msc - mse) / nf);
    let fj = msc / mse;
    let a = nf * (1.0 + (kf - 1.0) * icc1) - kf * icc1;
    let vn = (kf - 1.0) * (nf - 1.0) * (kf * icc1 * fj + a).powi(2);
    let vd = (nf - 1.0) * kf * kf * icc1 * icc1 * fj * fj + a * a;
    let v = vn / vd;
    let f_upper = f_quantile(0.975, nf - 1.0, v);
    let f_lower = f_quantile(0.975, v, nf - 1.0);
    let c = kf * msc + (kf * nf - kf - nf) * mse;
    let lb = nf * (msr - f_upper * mse) / (f_upper * c + nf * msr);
    let ub = nf * (f_lower * msr - mse) / (c + nf * f_lower * msr);
    let step_up = |x: f64| x * kf / (1.0 + x * (kf - 1.0));
    Ok(Icc {
        icc,
        ci_low: step_up(lb),
        ci_high: step_up(ub),
    })
}
