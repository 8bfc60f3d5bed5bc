//! Least-squares helpers used to turn "≲" and growth claims into numbers.

use serde::Serialize;

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len(), "fit needs paired samples");
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return LineFit {
            slope: 0.0,
            intercept: ys.first().copied().unwrap_or(0.0),
            residual: 0.0,
        };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    LineFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    }
}

/// Fit `log y` against `log x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Log-log slope of the running maximum of `ratios` against member count.
///
/// A fitted constant is called stable when this slope stays below a small
/// threshold: the worst ratio seen saturates instead of growing with the family.
pub fn running_max_slope(ratios: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut xs = Vec::with_capacity(ratios.len());
    let mut ys = Vec::with_capacity(ratios.len());
    for (i, &r) in ratios.iter().enumerate() {
        best = best.max(r);
        xs.push((i + 1) as f64);
        ys.push(best);
    }
    loglog_fit(&xs, &ys).slope
}

pub fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}
