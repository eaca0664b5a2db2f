//! Successive-term ratios, convergence verdicts, error bounds and the
//! integrated error against a reference solution.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::coeff::Numeric;
use crate::deform::HomotopySeries;
use crate::error::{HamError, Result};
use crate::expfun::{ExpPoly, Window};
use crate::quad;
use crate::reference::Reference;

pub const DEFAULT_BURN_IN: usize = 5;

/// Window for the error bound when `‖u₀‖` is infinite on the half-line.
pub const DEFAULT_BOUND_WINDOW: f64 = 10.0;

/// Norms `‖D^d u_k‖` under the problem's norm spec, `k = 0..=M`.
///
/// `‖u₀‖` is reported as infinite when it diverges on the half-line.
pub fn term_norms<C: Numeric>(series: &HomotopySeries<C>, prec: u32) -> Result<Vec<Float>> {
    let spec = series.problem().norm;
    series
        .terms()
        .iter()
        .enumerate()
        .map(|(k, u)| match u.diff(spec.derivative).l2_norm(spec.window, prec) {
            Err(HamError::DivergentIntegral { .. }) if k == 0 => {
                Ok(Float::with_val(prec, rug::float::Special::Infinity))
            }
            r => r,
        })
        .collect()
}

/// `rat_k = ‖u_{k+1}‖/‖u_k‖` for `k = 1..M−1`; entry `i` holds `rat_{i+1}`.
///
/// A series that terminates (all terms zero from some order on) yields the
/// ratios up to the last nonzero term, the final one being 0.
pub fn ratio_sequence<C: Numeric>(series: &HomotopySeries<C>, prec: u32) -> Result<Vec<f64>> {
    let norms = term_norms(series, prec)?;
    ratios_from_norms(&norms)
}

pub fn ratios_from_norms(norms: &[Float]) -> Result<Vec<f64>> {
    let nonzero = norms.iter().skip(1).filter(|n| !n.is_zero()).count();
    if nonzero == 0 {
        return Err(HamError::InsufficientTerms { needed: 1, found: 0 });
    }
    let last_nonzero = norms.iter().rposition(|n| !n.is_zero()).unwrap();
    let mut out = Vec::new();
    for k in 1..norms.len().saturating_sub(1) {
        if k > last_nonzero {
            break;
        }
        if norms[k].is_zero() {
            return Err(HamError::ZeroNormTerm { order: k });
        }
        out.push(Float::with_val(norms[k].prec(), &norms[k + 1] / &norms[k]).to_f64());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// Tail ratios all below 1; `r` is their maximum.
    Convergent { r: f64 },
    /// Tail ratios at least 1 and nondecreasing; `r` is their minimum.
    Divergent { r: f64 },
    /// Some `u_k` and all later terms vanish.
    ConvergedExactly { order: usize },
    Inconclusive,
}

impl Verdict {
    pub fn is_convergent(&self) -> bool {
        matches!(self, Verdict::Convergent { .. } | Verdict::ConvergedExactly { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Convergent { .. } => "convergent",
            Verdict::Divergent { .. } => "divergent",
            Verdict::ConvergedExactly { .. } => "converged_exactly",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// The ratio bound used by the error estimate.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            Verdict::Convergent { r } => Some(r),
            Verdict::ConvergedExactly { .. } => Some(0.0),
            _ => None,
        }
    }
}

/// Theorem-1 style test on the ratios with index `k > burn_in`.
pub fn verdict(ratios: &[f64], burn_in: usize) -> Verdict {
    let tail = ratios.get(burn_in..).unwrap_or(&[]);
    if tail.is_empty() {
        return Verdict::Inconclusive;
    }
    if tail.iter().all(|&r| r < 1.0) {
        let r = tail.iter().cloned().fold(0.0, f64::max);
        return Verdict::Convergent { r };
    }
    let nondecreasing = tail.windows(2).all(|w| w[1] >= w[0]);
    if tail.iter().all(|&r| r >= 1.0) && nondecreasing {
        return Verdict::Divergent { r: tail[0] };
    }
    Verdict::Inconclusive
}

/// Verdict for a computed series, recognizing exact termination.
pub fn series_verdict<C: Numeric>(
    series: &HomotopySeries<C>,
    burn_in: usize,
    prec: u32,
) -> Result<Verdict> {
    if let Some(order) = series.terminates() {
        return Ok(Verdict::ConvergedExactly { order });
    }
    Ok(verdict(&ratio_sequence(series, prec)?, burn_in))
}

/// `‖D^d u₀‖` over `window`; `InfiniteNorm` when it diverges.
pub fn initial_norm<C: Numeric>(series: &HomotopySeries<C>, window: Window, prec: u32) -> Result<f64> {
    let d = series.problem().norm.derivative;
    match series.terms()[0].diff(d).l2_norm(window, prec) {
        Ok(v) => Ok(v.to_f64()),
        Err(HamError::DivergentIntegral { .. }) => Err(HamError::InfiniteNorm),
        Err(e) => Err(e),
    }
}

/// `r^{M+1}/(1−r)·‖u₀‖`.
pub fn error_bound_value(m: usize, r: f64, u0_norm: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(HamError::NotConvergent(r));
    }
    Ok(r.powi(m as i32 + 1) / (1.0 - r) * u0_norm)
}

pub fn error_bound<C: Numeric>(
    series: &HomotopySeries<C>,
    m: usize,
    verdict: &Verdict,
    window: Window,
    prec: u32,
) -> Result<f64> {
    let r = match *verdict {
        Verdict::Convergent { r } => r,
        Verdict::ConvergedExactly { .. } => return Ok(0.0),
        Verdict::Divergent { r } => return Err(HamError::NotConvergent(r)),
        Verdict::Inconclusive => return Err(HamError::NotConvergent(f64::NAN)),
    };
    error_bound_value(m, r, initial_norm(series, window, prec)?)
}

/// `‖c_ref − S_M‖` over a finite window in L² (the quantity the bound controls).
pub fn truncation_error<C: Numeric>(
    series: &HomotopySeries<C>,
    m: usize,
    reference: &Reference,
    upper: f64,
    prec: u32,
) -> Result<f64> {
    if series.problem().norm.derivative > 0 {
        return Err(HamError::InvalidProblem(
            "truncation error against a reference needs a value norm".into(),
        ));
    }
    let s = series.partial_sum(m)?.to_mp(prec);
    let rule = quad::gauss_legendre(24);
    let panels = (upper * 4.0).ceil().max(1.0) as usize;
    let sq = quad::composite(&rule, 0.0, upper, panels, prec, |t| {
        let e = reference.eval_mp(t, prec) - s.eval_mp(t, prec);
        e.square()
    });
    Ok(sq.sqrt().to_f64())
}

/// [`truncation_error`] for every `M = 0..=max_m`, evaluating each term
/// once at the quadrature nodes.
pub fn truncation_errors<C: Numeric>(
    series: &HomotopySeries<C>,
    max_m: usize,
    reference: &Reference,
    upper: f64,
    prec: u32,
) -> Result<Vec<f64>> {
    if series.problem().norm.derivative > 0 {
        return Err(HamError::InvalidProblem(
            "truncation error against a reference needs a value norm".into(),
        ));
    }
    if max_m > series.order() {
        return Err(HamError::OrderOutOfRange { requested: max_m, computed: series.order() });
    }
    let panels = (upper * 4.0).ceil().max(1.0) as usize;
    let nodes = quad::composite_nodes(&quad::gauss_legendre(24), 0.0, upper, panels, prec);
    // running e(t) = c_ref(t) − S_M(t) at each node
    let mut e: Vec<Float> = nodes.iter().map(|(t, _)| reference.eval_mp(t, prec)).collect();
    let mut out = Vec::with_capacity(max_m + 1);
    for k in 0..=max_m {
        let u = series.terms()[k].to_mp(prec);
        let mut sq = Float::new(prec);
        for ((t, w), ek) in nodes.iter().zip(e.iter_mut()) {
            *ek -= u.eval_mp(t, prec);
            sq += Float::with_val(prec, ek.square_ref()) * w;
        }
        out.push(sq.sqrt().to_f64());
    }
    Ok(out)
}

/// `∫₀^∞ |c_ref − S_M| dt`, integrated panel by panel until eight panels in
/// a row contribute less than `1e-4` of double precision relative to the total.
pub fn reference_error<C: Numeric>(
    series: &HomotopySeries<C>,
    m: usize,
    reference: &Reference,
    prec: u32,
) -> Result<f64> {
    let s = series.partial_sum(m)?.to_mp(prec);
    reference_error_of(&s, reference, prec)
}

pub fn reference_error_of(s: &ExpPoly<crate::MpFloat>, reference: &Reference, prec: u32) -> Result<f64> {
    let rule = quad::gauss_legendre(24);
    let width = 0.25;
    let cutoff = Float::with_val(prec, f64::EPSILON * 1e-4);
    let mut total = Float::new(prec);
    let mut quiet = 0;
    let mut a = 0.0;
    while a < 400.0 {
        let panel = quad::composite(&rule, a, a + width, 1, prec, |t| {
            (reference.eval_mp(t, prec) - s.eval_mp(t, prec)).abs()
        });
        total += &panel;
        a += width;
        let small = panel <= Float::with_val(prec, &total * &cutoff) || panel.is_zero();
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 8 {
            break;
        }
    }
    Ok(total.to_f64())
}

/// Closed interval of `t`; infinite ends are `±∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }
}

/// Limit `ρ(t)` of `|u_{n+1}(t)/u_n(t)|` where it is known in closed form.
pub fn closed_form_rho(id: &str, h: f64) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    match id {
        "ex1" if h == 1.0 => Some(Box::new(|t: f64| ((1.0 - (-2.0 * t).exp()) / 2.0).abs())),
        "ex3" => Some(Box::new(move |t: f64| (1.0 - h * (1.0 + 2.0 * t)).abs())),
        "ex4" if h == 1.0 => Some(Box::new(|_| 0.0)),
        "ex5" if h == -1.0 => Some(Box::new(|_| 0.0)),
        _ => None,
    }
}

/// The region `ρ(t) < 1` for the built-ins with a closed-form `ρ`.
pub fn closed_form_region(id: &str, h: f64) -> Result<Interval> {
    let inf = f64::INFINITY;
    match id {
        "ex1" if h == 1.0 => Ok(Interval { lo: -(3f64.ln()) / 2.0, hi: inf }),
        "ex3" if h > 0.0 && h < 2.0 => Ok(Interval { lo: -0.5, hi: (2.0 - h) / (2.0 * h) }),
        "ex3" if h < 0.0 && h > -2.0 => Ok(Interval { lo: (2.0 - h) / (2.0 * h), hi: -0.5 }),
        "ex4" if h == 1.0 => Ok(Interval { lo: -inf, hi: inf }),
        "ex5" if h == -1.0 => Ok(Interval { lo: -inf, hi: inf }),
        _ => Err(HamError::NoStableLimit(format!("no closed-form ratio limit for {id} at h = {h}"))),
    }
}

/// Numeric limit of `|u_{n+1}(t)/u_n(t)|`, accepted when the last `window`
/// pointwise ratios agree to `tol` (relative to `max(1, ρ)`).
pub fn pointwise_ratio_limit<C: Numeric>(
    series: &HomotopySeries<C>,
    t: f64,
    window: usize,
    tol: f64,
    prec: u32,
) -> Result<f64> {
    let tf = Float::with_val(prec, t);
    let vals: Vec<Float> = series.terms().iter().map(|u| u.eval_mp(&tf, prec)).collect();
    let mut ratios = Vec::new();
    for k in 1..vals.len().saturating_sub(1) {
        if vals[k].is_zero() {
            continue;
        }
        ratios.push(Float::with_val(prec, &vals[k + 1] / &vals[k]).abs().to_f64());
    }
    if ratios.len() < window.max(2) {
        return Err(HamError::InsufficientTerms { needed: window.max(2), found: ratios.len() });
    }
    let tail = &ratios[ratios.len() - window..];
    let last = *tail.last().unwrap();
    let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if !spread.is_finite() || spread > tol * last.max(1.0) {
        return Err(HamError::NoStableLimit(format!("ratios at t = {t} spread by {spread:.3e}")));
    }
    Ok(last)
}

/// Sub-interval of `grid` (sorted) where the numeric ratio limit is below 1.
/// Points where no limit emerges are treated as outside.
pub fn numeric_region<C: Numeric>(
    series: &HomotopySeries<C>,
    grid: &[f64],
    prec: u32,
) -> Result<Option<Interval>> {
    let mut inside = Vec::new();
    let mut stable = 0;
    for &t in grid {
        match pointwise_ratio_limit(series, t, 4, 1e-2, prec) {
            Ok(rho) => {
                stable += 1;
                if rho < 1.0 {
                    inside.push(t);
                }
            }
            Err(HamError::NoStableLimit(_) | HamError::InsufficientTerms { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if stable == 0 {
        return Err(HamError::NoStableLimit("no grid point stabilized".into()));
    }
    Ok(match (inside.first(), inside.last()) {
        (Some(&lo), Some(&hi)) => Some(Interval { lo, hi }),
        _ => None,
    })
}

/// One row of a convergence report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub rat: Option<f64>,
    pub bound: Option<f64>,
    pub err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub problem: String,
    pub h: String,
    pub order: usize,
    pub burn_in: usize,
    pub verdict: Verdict,
    pub rows: Vec<ReportRow>,
}

impl ConvergenceReport {
    /// Ratios, verdict, and per-order bound (on the norm window or, if
    /// `‖u₀‖` is infinite there, on `[0, DEFAULT_BOUND_WINDOW]`); `reference`
    /// adds the integrated error column.
    pub fn build<C: Numeric>(
        series: &HomotopySeries<C>,
        burn_in: usize,
        reference: Option<&Reference>,
        prec: u32,
    ) -> Result<Self> {
        let ratios = ratio_sequence(series, prec)?;
        let verdict = match series.terminates() {
            Some(order) => Verdict::ConvergedExactly { order },
            None => verdict(&ratios, burn_in),
        };
        let window = series.problem().norm.window;
        let u0 = match initial_norm(series, window, prec) {
            Err(HamError::InfiniteNorm) => {
                initial_norm(series, Window::Finite(DEFAULT_BOUND_WINDOW), prec).ok()
            }
            r => r.ok(),
        };
        let mut rows = Vec::new();
        for m in 1..=series.order() {
            let bound = match (verdict.rate(), u0) {
                (Some(r), Some(n)) => error_bound_value(m, r, n).ok(),
                _ => None,
            };
            let err = match reference {
                Some(r) => Some(reference_error(series, m, r, prec)?),
                None => None,
            };
            rows.push(ReportRow { m, rat: ratios.get(m - 1).copied(), bound, err });
        }
        Ok(ConvergenceReport {
            schema_version: 1,
            problem: series.problem().name.clone(),
            h: series.h().to_string(),
            order: series.order(),
            burn_in,
            verdict,
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `M,rat,bound,err`, empty cells for missing values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,rat,bound,err\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.m, cell(r.rat), cell(r.bound), cell(r.err)));
        }
        out
    }
}
