use std::io::Write;

use super::event::ResponseCurve;
use crate::similarity::SimilarityCurve;

pub const MIN_FIT_POINTS: usize = 5;
const GRID_POINTS: usize = 50;
const RATE_LO: f64 = 1e-4;
const RATE_HI: f64 = 1.0;
const MAX_ITERATIONS: usize = 200;
const RATE_TOLERANCE: f64 = 1e-12;

/// Least-squares fit of `A·exp(-λ·Δt) + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    pub rate: f64,
    pub offset: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
    /// `(lag, observed, fitted)` for every point used.
    pub points: Vec<(i32, f64, f64)>,
    pub iterations: usize,
}

impl ExpFit {
    pub fn write_report<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "model=A*exp(-lambda*dt)+c")?;
        writeln!(w, "A={}", self.amplitude)?;
        writeln!(w, "lambda={}", self.rate)?;
        writeln!(w, "c={}", self.offset)?;
        writeln!(w, "ssr={}", self.ssr)?;
        writeln!(w, "points={}", self.points.len())?;
        writeln!(w, "iterations={}", self.iterations)?;
        w.flush()
    }

    pub fn write_residuals_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "lag_min,observed,fitted,residual")?;
        for &(lag, y, f) in &self.points {
            writeln!(w, "{lag},{y},{f},{}", y - f)?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("fit needs at least {need} points in range, found {found}")]
    TooFewPoints { found: usize, need: usize },
    #[error("fit did not converge in {} iterations (best rate {})", .best.iterations, .best.rate)]
    NotConverged { best: Box<ExpFit> },
}

/// Best `(A, c, ssr)` for a fixed rate: ordinary least squares on the
/// regressor `exp(-λ·Δt)` plus an intercept.
fn linear_part(xs: &[f64], ys: &[f64], rate: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let e: Vec<f64> = xs.iter().map(|x| (-rate * x).exp()).collect();
    let me = e.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut see, mut sey) = (0.0, 0.0);
    for (ei, yi) in e.iter().zip(ys) {
        see += (ei - me) * (ei - me);
        sey += (ei - me) * (yi - my);
    }
    // a regressor with no spread cannot carry an amplitude
    let a = if see > 1e-300 { sey / see } else { 0.0 };
    let c = my - a * me;
    let ssr = e.iter().zip(ys).map(|(ei, yi)| (yi - a * ei - c).powi(2)).sum();
    (a, c, ssr)
}

/// Fits the response curve over lags in `[lo, hi]`.
///
/// The rate is seeded from a 50-point logarithmic grid on `[1e-4, 1]`, with
/// `(A, c)` solved exactly at each rate, then refined by golden-section
/// search between the neighbours of the best grid point.
pub fn fit_exponential(curve: &ResponseCurve, lo: i32, hi: i32) -> Result<ExpFit, FitError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .lags
        .iter()
        .zip(&curve.mean)
        .filter(|(l, _)| (lo..=hi).contains(*l))
        .filter_map(|(&l, m)| m.map(|m| (l as f64, m)))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints {
            found: xs.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let ssr = |rate: f64| linear_part(&xs, &ys, rate).2;

    let step = (RATE_HI / RATE_LO).ln() / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| RATE_LO * (step * i as f64).exp())
        .collect();
    let best = (0..GRID_POINTS)
        .min_by(|&i, &j| ssr(grid[i]).total_cmp(&ssr(grid[j])))
        .expect("grid is nonempty");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(GRID_POINTS - 1)]);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (ssr(x1), ssr(x2));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        if b - a <= RATE_TOLERANCE * (a + b) {
            converged = true;
            break;
        }
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = ssr(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = ssr(x2);
        }
    }

    // the bracket ends are candidates too, since the optimum may sit at a
    // grid edge
    let rate = [a, x1, x2, b, grid[best]]
        .into_iter()
        .min_by(|p, q| ssr(*p).total_cmp(&ssr(*q)))
        .expect("candidates are nonempty");
    let (amplitude, offset, ssr_value) = linear_part(&xs, &ys, rate);
    let points = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| (x as i32, y, amplitude * (-rate * x).exp() + offset))
        .collect();
    let fit = ExpFit {
        amplitude,
        rate,
        offset,
        ssr: ssr_value,
        points,
        iterations,
    };
    if converged {
        Ok(fit)
    } else {
        Err(FitError::NotConverged { best: Box::new(fit) })
    }
}

/// Straight-line fit of `ln S` against `ln Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    /// `ln S` at `Δt = 1` minute.
    pub intercept: f64,
    pub r_squared: f64,
    pub bins: usize,
}

pub const POWER_LAW_RANGE: (f64, f64) = (1e2, 1e5);

/// Pair-count-weighted least squares of `ln(mean)` on `ln(geometric mid)`
/// over bins whose midpoint lies in `[lo, hi]`. Bins with no pairs or a
/// non-positive mean are skipped.
pub fn fit_power_law(curve: &SimilarityCurve, lo: f64, hi: f64) -> Result<PowerFit, FitError> {
    let pts: Vec<(f64, f64, f64)> = curve
        .bins
        .iter()
        .filter(|b| (lo..=hi).contains(&b.geometric_mid()) && b.pairs > 0)
        .filter_map(|b| match b.mean {
            Some(m) if m > 0.0 => Some((b.geometric_mid().ln(), m.ln(), b.pairs as f64)),
            _ => None,
        })
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints {
            found: pts.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let w: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y, wi) in &pts {
        sxx += wi * (x - mx) * (x - mx);
        sxy += wi * (x - mx) * (y - my);
        syy += wi * (y - my) * (y - my);
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(PowerFit {
        exponent,
        intercept,
        r_squared,
        bins: pts.len(),
    })
}
