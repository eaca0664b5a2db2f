//! Square residual `Res(h) = ∫ N(S_M)²`, its minimizer in `h`, and scans
//! over `h` grids.

use std::sync::Arc;

use rayon::prelude::*;
use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::coeff::{MpFloat, Numeric};
use crate::deform::HomotopySeries;
use crate::diagnostics::{series_verdict, Verdict};
use crate::error::{HamError, Result};
use crate::problem::ReducedProblem;

pub const POINTS_PER_DECADE: usize = 41;
pub const GOLDEN_TOL: f64 = 1e-6;

/// `∫_Γ N(S_M)²`: the temporal integral over the residual window times the
/// spatial `∫ S²` over the unit cell.
pub fn residual_of<C: Numeric>(series: &HomotopySeries<C>, m: usize, prec: u32) -> Result<f64> {
    let p = series.problem();
    // N is evaluated on the rounded partial sum; exact products of large
    // rationals would dominate the cost
    let s = series.partial_sum(m)?.to_mp(prec);
    let t = p.nonlinear.apply(&s).l2_norm_sq(p.residual_window, prec)?;
    Ok(t.to_f64() * p.spatial_factor.squared_integral())
}

/// Exact `∫₀^∞ N(S_M)²` for rational coefficients.
pub fn residual_exact(series: &HomotopySeries<Rational>, m: usize) -> Result<Rational> {
    let n = series.residual_function(m)?;
    n.mul(&n).integral_halfline()
}

/// `Res(h)` at order `m`, computing the series at `h`.
pub fn residual<C: Numeric>(problem: Arc<ReducedProblem>, h: C, m: usize, prec: u32) -> Result<f64> {
    let s = HomotopySeries::build(problem, h, m)?;
    residual_of(&s, m, prec)
}

/// `Res(h)` for a floating `h`, in `prec`-bit arithmetic.
pub fn residual_at(problem: Arc<ReducedProblem>, h: f64, m: usize, prec: u32) -> Result<f64> {
    residual(problem, MpFloat::with_prec(prec, h), m, prec)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub h: f64,
    pub res: f64,
    /// `|dRes/dh|` by central difference at `h`.
    pub stationarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualCurve {
    pub order: usize,
    pub samples: Vec<(f64, f64)>,
    pub optimum: Optimum,
}

/// Scan grid over `[a, b]`: log-spaced with 41 points per decade when the
/// range is positive, else 41 evenly spaced points per unit of width.
pub fn scan_grid(a: f64, b: f64) -> Vec<f64> {
    assert!(a < b, "empty range");
    if a > 0.0 {
        let decades = (b / a).log10();
        let n = ((POINTS_PER_DECADE as f64 * decades).ceil() as usize).max(POINTS_PER_DECADE - 1);
        (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
    } else {
        let n = ((POINTS_PER_DECADE as f64 * (b - a)).ceil() as usize).max(POINTS_PER_DECADE - 1);
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }
}

/// Grid scan then golden-section refinement of any objective.
pub fn minimize<F>(f: F, a: f64, b: f64) -> Result<(Vec<(f64, f64)>, Optimum)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let grid = scan_grid(a, b);
    let values: Vec<f64> = grid.par_iter().map(|&h| f(h)).collect::<Result<_>>()?;
    let samples: Vec<(f64, f64)> = grid.iter().cloned().zip(values.iter().cloned()).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .ok_or_else(|| HamError::NotConvergent(f64::NAN))?;
    if best == 0 || best == grid.len() - 1 {
        return Err(HamError::BoundaryOptimum { h: grid[best] });
    }
    let (mut lo, mut hi) = (grid[best - 1], grid[best + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let h = 0.5 * (lo + hi);
    let res = f(h)?;
    let d = 1e-4;
    let stationarity = ((f(h + d)? - f(h - d)?) / (2.0 * d)).abs();
    Ok((samples, Optimum { h, res, stationarity }))
}

/// Minimizer of `Res(h)` at order `m` over `[a, b]`.
pub fn optimal_h(problem: Arc<ReducedProblem>, m: usize, a: f64, b: f64, prec: u32) -> Result<ResidualCurve> {
    let (samples, optimum) = minimize(|h| residual_at(problem.clone(), h, m, prec), a, b)?;
    Ok(ResidualCurve { order: m, samples, optimum })
}

/// `D^d S_M(0)` for each `h` of the grid.
pub fn h_curve(
    problem: Arc<ReducedProblem>,
    derivative: u32,
    h_grid: &[Rational],
    m: usize,
) -> Result<Vec<(Rational, Rational)>> {
    h_grid
        .par_iter()
        .map(|h| {
            let s = HomotopySeries::build(problem.clone(), h.clone(), m)?;
            Ok((h.clone(), s.partial_sum(m)?.diff(derivative).value_at_zero()))
        })
        .collect()
}

/// Ratio verdict at each `h`, in grid order.
pub fn h_interval_scan<C: Numeric>(
    problem: Arc<ReducedProblem>,
    h_grid: &[C],
    m: usize,
    burn_in: usize,
    prec: u32,
) -> Result<Vec<(C, Verdict)>> {
    h_grid
        .par_iter()
        .map(|h| {
            let s = HomotopySeries::build(problem.clone(), h.clone(), m)?;
            Ok((h.clone(), series_verdict(&s, burn_in, prec)?))
        })
        .collect()
}

/// Longest contiguous run of convergent verdicts, as `(first, last)` index.
pub fn convergent_band<C>(scan: &[(C, Verdict)]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, (_, v)) in scan.iter().enumerate() {
        if v.is_convergent() {
            let s = *start.get_or_insert(i);
            if best.is_none_or(|(a, b)| i - s > b - a) {
                best = Some((s, i));
            }
        } else {
            start = None;
        }
    }
    best
}

/// `h` interval where the closed-form ratio limit is below one at fixed `t`.
pub fn closed_form_h_interval(id: &str, t: f64) -> Result<(f64, f64)> {
    match id {
        // |1 − h(1+2t)| < 1
        "ex3" if t > -0.5 => Ok((0.0, 2.0 / (1.0 + 2.0 * t))),
        _ => Err(HamError::NoStableLimit(format!("no closed-form h interval for {id} at t = {t}"))),
    }
}

/// CSV with columns `h,Res,verdict`.
pub fn scan_csv(rows: &[(f64, f64, Verdict)]) -> String {
    let mut out = String::from("h,Res,verdict\n");
    for (h, r, v) in rows {
        out.push_str(&format!("{h},{r:.10e},{}\n", v.label()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    #[test]
    fn quadratic_objective() {
        let (_, opt) = minimize(|h| Ok((h - 0.7).powi(2)), 0.1, 1.5).unwrap();
        assert!((opt.h - 0.7).abs() < 1e-6);
        assert!(opt.stationarity < 1e-5);
        assert!(matches!(minimize(|h| Ok(h), 0.1, 1.0), Err(HamError::BoundaryOptimum { .. })));
    }

    #[test]
    fn residual_of_initial_guess() {
        // ex1: N(u0) = e^{-4t}, Res = 1/8
        let p = Arc::new(problems::ex1().unwrap());
        let s = HomotopySeries::build(p, Rational::from(1), 0).unwrap();
        assert_eq!(residual_exact(&s, 0).unwrap(), Rational::from((1, 8)));
        assert!((residual_of(&s, 0, 256).unwrap() - 0.125).abs() < 1e-16);
    }

    #[test]
    fn band_detection() {
        let c = Verdict::Convergent { r: 0.5 };
        let d = Verdict::Divergent { r: 1.5 };
        let scan = vec![(0, d), (1, c), (2, c), (3, d), (4, c)];
        assert_eq!(convergent_band(&scan), Some((1, 2)));
        assert_eq!(convergent_band::<i32>(&[]), None);
    }

    #[test]
    fn grids() {
        let g = scan_grid(0.1, 1.0);
        assert_eq!(g.len(), 42);
        assert!((g[41] - 1.0).abs() < 1e-12);
        let lin = scan_grid(-2.0, -1.0);
        assert_eq!(lin.len(), 42);
    }
}
