//! Lag regression of per-epoch assigned counts.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("series of length {len} too short for lag {lag}")]
    TooShort { len: usize, lag: usize },
    #[error("lag must be at least 1")]
    ZeroLag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagResult {
    pub lag: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; zero when either side has no variance.
    pub r: f64,
    /// True when the regressor has zero variance (slope reported as 0).
    pub degenerate: bool,
    pub pairs: Vec<(f64, f64)>,
}

/// Ordinary least squares of `x[t + lag]` on `x[t]`.
pub fn lag_regression(series: &[f64], lag: usize) -> Result<LagResult, AnalysisError> {
    if lag == 0 {
        return Err(AnalysisError::ZeroLag);
    }
    if series.len() <= lag {
        return Err(AnalysisError::TooShort { len: series.len(), lag });
    }
    let pairs: Vec<(f64, f64)> = (0..series.len() - lag).map(|t| (series[t], series[t + lag])).collect();
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let degenerate = sxx <= 1e-12 * (1.0 + mx * mx) * n;
    let slope = if degenerate { 0.0 } else { sxy / sxx };
    let r = if degenerate || syy <= 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    Ok(LagResult {
        lag,
        slope,
        intercept: my - slope * mx,
        r,
        degenerate,
        pairs,
    })
}

pub fn slope_curve(series: &[f64], max_lag: usize) -> Result<Vec<LagResult>, AnalysisError> {
    (1..=max_lag).map(|lag| lag_regression(series, lag)).collect()
}

pub fn slopes_csv(results: &[LagResult]) -> String {
    let mut s = String::from("lag,slope,intercept,r,pairs\n");
    for r in results {
        let _ = writeln!(s, "{},{:.6},{:.6},{:.6},{}", r.lag, r.slope, r.intercept, r.r, r.pairs.len());
    }
    s
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-9 {
                (lo - 1.0, hi + 1.0)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            s,
            r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"##
        );
        let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="white"/>"##);
        let (l, r, t, b) = (PAD, W - PAD, PAD, H - PAD);
        let _ = writeln!(s, r##"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"##);
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"##,
            W / 2.0,
            H - 12.0,
            xlabel
        );
        let _ = writeln!(
            s,
            r##"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"##,
            H / 2.0,
            H / 2.0,
            ylabel
        );
        for (v, x) in [(self.x0, l), (self.x1, r)] {
            let _ = writeln!(s, r##"<text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{v:.2}</text>"##, b + 14.0);
        }
        for (v, y) in [(self.y0, b), (self.y1, t)] {
            let _ = writeln!(s, r##"<text x="{:.1}" y="{y:.1}" font-size="10" text-anchor="end">{v:.2}</text>"##, l - 4.0);
        }
    }
}

/// Scatter of the lag pairs with the fitted line.
pub fn lag_svg(res: &LagResult) -> String {
    let f = Frame::fit(res.pairs.iter().map(|p| p.0), res.pairs.iter().map(|p| p.1));
    let mut s = String::new();
    f.axes(&mut s, "assigned at epoch t", &format!("assigned at epoch t+{}", res.lag));
    for &(x, y) in &res.pairs {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"##, f.px(x), f.py(y));
    }
    let line = |x: f64| res.intercept + res.slope * x;
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick"/>"##,
        f.px(f.x0),
        f.py(line(f.x0).clamp(f.y0, f.y1)),
        f.px(f.x1),
        f.py(line(f.x1).clamp(f.y0, f.y1))
    );
    s.push_str("</svg>\n");
    s
}

/// Slope against lag.
pub fn slopes_svg(results: &[LagResult]) -> String {
    let f = Frame::fit(
        results.iter().map(|r| r.lag as f64),
        results.iter().map(|r| r.slope).chain([0.0]),
    );
    let mut s = String::new();
    f.axes(&mut s, "lag (epochs)", "slope");
    let pts: Vec<String> = results
        .iter()
        .map(|r| format!("{:.2},{:.2}", f.px(r.lag as f64), f.py(r.slope)))
        .collect();
    let _ = writeln!(s, r##"<polyline points="{}" stroke="steelblue" fill="none"/>"##, pts.join(" "));
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"##,
        f.px(f.x0),
        f.py(0.0),
        f.px(f.x1),
        f.py(0.0)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass(pairs: &[(f64, f64)]) -> f64 {
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        num / den
    }

    #[test]
    fn constant_series_is_degenerate() {
        let r = lag_regression(&[3.0; 10], 1).unwrap();
        assert_eq!(r.slope, 0.0);
        assert!(r.degenerate);
        assert_eq!(r.pairs.len(), 9);
    }

    #[test]
    fn periodic_series() {
        let s: Vec<f64> = (0..40).map(|t| [1.0, 5.0, 2.0, 7.0][t % 4]).collect();
        let r = lag_regression(&s, 4).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12);
        assert!((r.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_series() {
        let s: Vec<f64> = (0..21).map(|t| if t % 2 == 0 { 2.0 } else { 6.0 }).collect();
        let r = lag_regression(&s, 1).unwrap();
        assert!((r.slope + 1.0).abs() < 1e-12);
        assert!((r.r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors_and_curve() {
        assert_eq!(lag_regression(&[1.0, 2.0], 2), Err(AnalysisError::TooShort { len: 2, lag: 2 }));
        assert_eq!(lag_regression(&[1.0, 2.0], 0), Err(AnalysisError::ZeroLag));
        let s = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        assert_eq!(slope_curve(&s, 1).unwrap().len(), 1);
        let c = slope_curve(&s, 3).unwrap();
        for r in &c {
            let expect = two_pass(&r.pairs);
            assert!((r.slope - expect).abs() <= 1e-9 * expect.abs().max(1.0));
            assert!(r.r.abs() <= 1.0);
        }
        let csv = slopes_csv(&c);
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn svg_is_stable() {
        let s = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let r = lag_regression(&s, 1).unwrap();
        let a = lag_svg(&r);
        assert_eq!(a, lag_svg(&r));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<circle").count(), 5);
        let c = slopes_svg(&slope_curve(&s, 3).unwrap());
        assert!(c.contains("<polyline"));
    }
}
