//! One-point distribution `G_a`, the GOE reference `F_1`, moment statistics,
//! the distance `D(a)` and the monotonicity scan.
//!
//! `G_a(s) = P(M_a(0) ≤ 2^{1/3} s)` is the determinant of the one-point
//! kernel on `(s, ∞)`. `G_0(s) = F_1(2s)`, and `F_1(2s)²` is the conjectured
//! large-`a` limit; tables of the latter carry `a = +∞`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fredholm::{
    choose_truncation, fredholm_det_adaptive, fredholm_det_blocks_adaptive, fredholm_det_with, DetResult, Kernel,
    OnePointKernel, Precision, RestrictionSpec,
};
use crate::kernel::{check_a, reliability_check};
use crate::real::Real;
use crate::specfun::{ai, cheb_points, gauss_legendre, ChebSeries};
use crate::DEFAULT_A_MAX;

/// How to evaluate `G_a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaOptions {
    pub a_max: f64,
    /// Evaluate even where the reliability check fails; the table is flagged.
    pub force: bool,
    pub precision: Precision,
    /// Fixed quadrature size instead of adaptive doubling.
    pub nodes: Option<usize>,
}

impl Default for GaOptions {
    fn default() -> Self {
        GaOptions { a_max: DEFAULT_A_MAX, force: false, precision: Precision::Auto, nodes: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistTable {
    pub a: f64,
    pub s_values: Vec<f64>,
    pub cdf: Vec<f64>,
    pub err: Vec<f64>,
    /// Set when values were computed past the reliability check.
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Non-excess: 3 for a Gaussian.
    pub kurtosis: f64,
}

/// Kernel `Ai(ξ + ζ)`, whose determinant on `(x/2, ∞)` is `F_1(x)`.
struct AiSumKernel;

impl Kernel for AiSumKernel {
    fn matrix<R: Real>(&self, xs: &[R], ys: &[R]) -> Result<Vec<R>> {
        Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| ai(x + y))).collect())
    }
}

fn g_det(a: f64, s: f64, opts: &GaOptions) -> Result<DetResult> {
    if !s.is_finite() {
        return domain(format!("s must be finite, got {s}"));
    }
    let kernel = OnePointKernel::with_a_max(a, f64::INFINITY)?;
    let t = choose_truncation(a, s);
    match opts.nodes {
        Some(n) => fredholm_det_with(&kernel, s, n, t, opts.precision),
        None => fredholm_det_adaptive(&kernel, s, t, opts.precision),
    }
}

fn gate(a: f64, opts: &GaOptions) -> Result<bool> {
    match reliability_check(a, opts.a_max) {
        Ok(()) => Ok(false),
        Err(Error::Reliability(_)) if opts.force && a.is_finite() => Ok(true),
        Err(e) => Err(e),
    }
}

/// `G_a(s)` with its error estimate.
pub fn g_a(a: f64, s: f64) -> Result<DetResult> {
    g_a_with(a, s, &GaOptions::default())
}

pub fn g_a_with(a: f64, s: f64, opts: &GaOptions) -> Result<DetResult> {
    gate(a, opts)?;
    g_det(a, s, opts)
}

fn check_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return domain("empty s grid");
    }
    if s_grid.iter().any(|s| !s.is_finite()) || s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("s grid must be finite and strictly increasing");
    }
    Ok(())
}

/// `G_a` on a grid, points evaluated in parallel.
pub fn ga_table(a: f64, s_grid: &[f64]) -> Result<DistTable> {
    ga_table_with(a, s_grid, &GaOptions::default())
}

pub fn ga_table_with(a: f64, s_grid: &[f64], opts: &GaOptions) -> Result<DistTable> {
    check_grid(s_grid)?;
    let flagged = gate(a, opts)?;
    let dets: Vec<DetResult> = s_grid.par_iter().map(|&s| g_det(a, s, opts)).collect::<Result<_>>()?;
    Ok(DistTable {
        a,
        s_values: s_grid.to_vec(),
        cdf: dets.iter().map(|d| d.value).collect(),
        err: dets.iter().map(|d| d.error_estimate).collect(),
        flagged,
    })
}

fn f1_det(x: f64) -> Result<DetResult> {
    if !x.is_finite() {
        return domain(format!("x must be finite, got {x}"));
    }
    let s = 0.5 * x;
    fredholm_det_adaptive(&AiSumKernel, s, choose_truncation(0.0, s), Precision::F64)
}

/// GOE Tracy–Widom distribution function.
pub fn f1_cdf(x: f64) -> Result<f64> {
    Ok(f1_det(x)?.value)
}

/// `F_1(2s)²` on a grid, tagged `a = +∞`.
pub fn reference_table(s_grid: &[f64]) -> Result<DistTable> {
    check_grid(s_grid)?;
    let dets: Vec<DetResult> = s_grid.par_iter().map(|&s| f1_det(2.0 * s)).collect::<Result<_>>()?;
    Ok(DistTable {
        a: f64::INFINITY,
        s_values: s_grid.to_vec(),
        cdf: dets.iter().map(|d| d.value * d.value).collect(),
        err: dets.iter().map(|d| 2.0 * d.value.abs() * d.error_estimate).collect(),
        flagged: false,
    })
}

/// Largest allowed tail mass outside a moment support.
pub const SUPPORT_TAIL: f64 = 1e-6;
const CHEB_TAIL: f64 = 1e-11;
const CHEB_START: usize = 32;
const CHEB_MAX: usize = 512;

fn series_moments(series: &ChebSeries) -> Result<MomentSummary> {
    let (lo, hi) = (series.lo, series.hi);
    let (below, above) = (series.eval(lo), 1.0 - series.eval(hi));
    if below > SUPPORT_TAIL || above > SUPPORT_TAIL {
        return Err(Error::Support(format!("[{lo}, {hi}] leaves tail mass {below:.1e} below and {above:.1e} above")));
    }
    let density = series.derivative();
    let z = density.integral();
    if (z - 1.0).abs() > 1e-6 {
        return Err(Error::Support(format!("density integrates to {z} on [{lo}, {hi}]")));
    }
    let rule = gauss_legendre(density.degree() / 2 + 4, lo, hi)?;
    let mean = rule.integrate(|s| s * density.eval(s)) / z;
    let central = |k: i32| rule.integrate(|s| (s - mean).powi(k) * density.eval(s)) / z;
    let variance = central(2);
    if !(variance > 0.0) {
        return Err(Error::Support(format!("non-positive variance {variance}")));
    }
    Ok(MomentSummary {
        mean,
        variance,
        skewness: central(3) / variance.powf(1.5),
        kurtosis: central(4) / (variance * variance),
    })
}

/// Moments from a table sampled at the Chebyshev points of `support`
/// (any order; points outside the support are ignored).
pub fn moments(table: &DistTable, support: (f64, f64)) -> Result<MomentSummary> {
    let (lo, hi) = support;
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    let mut pts: Vec<(f64, f64)> = table
        .s_values
        .iter()
        .zip(&table.cdf)
        .filter(|(s, _)| **s >= lo - slack && **s <= hi + slack)
        .map(|(&s, &c)| (s, c))
        .collect();
    pts.sort_by(|p, q| q.0.total_cmp(&p.0));
    if pts.len() < 5 {
        return domain("moment fit needs at least 5 samples inside the support");
    }
    let n = pts.len() - 1;
    let grid = cheb_points(n, lo, hi);
    if grid.iter().zip(&pts).any(|(g, p)| (g - p.0).abs() > 1e-9 * (hi - lo)) {
        return domain(format!("table is not sampled at the {} Chebyshev points of [{lo}, {hi}]", n + 1));
    }
    let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    series_moments(&ChebSeries::from_values(&values, lo, hi)?)
}

/// Moments of a distribution with a Chebyshev fit of adaptive degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentFit {
    pub summary: MomentSummary,
    pub support: (f64, f64),
    pub degree: usize,
}

/// A distribution function fitted by a Chebyshev series on a support
/// outside which it is taken to be 0 or 1.
#[derive(Clone, Debug)]
pub struct CdfFit {
    pub series: ChebSeries,
}

impl CdfFit {
    pub fn support(&self) -> (f64, f64) {
        (self.series.lo, self.series.hi)
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.series.lo {
            0.0
        } else if s >= self.series.hi {
            1.0
        } else {
            self.series.eval(s).clamp(0.0, 1.0)
        }
    }
}

/// Fits `cdf` on `support`, doubling the degree from 32 to at most 512
/// until the trailing coefficients settle.
pub fn fit_cdf<F>(cdf: F, support: (f64, f64)) -> Result<CdfFit>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (lo, hi) = support;
    let sample = |xs: &[f64]| -> Result<Vec<f64>> { xs.par_iter().map(|&x| cdf(x)).collect() };
    let mut n = CHEB_START;
    let mut values = sample(&cheb_points(n, lo, hi))?;
    loop {
        let series = ChebSeries::from_values(&values, lo, hi)?;
        if series.tail(4) < CHEB_TAIL || n >= CHEB_MAX {
            return Ok(CdfFit { series });
        }
        let fine = cheb_points(2 * n, lo, hi);
        let odd: Vec<f64> = fine.iter().skip(1).step_by(2).copied().collect();
        let new = sample(&odd)?;
        let mut merged = Vec::with_capacity(2 * n + 1);
        for j in 0..=2 * n {
            merged.push(if j % 2 == 0 { values[j / 2] } else { new[j / 2] });
        }
        values = merged;
        n *= 2;
    }
}

/// Moments from [`fit_cdf`], integrating the derivative of the fit.
pub fn cdf_moments<F>(cdf: F, support: (f64, f64)) -> Result<MomentFit>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let fit = fit_cdf(cdf, support)?;
    Ok(MomentFit { summary: series_moments(&fit.series)?, support, degree: fit.series.degree() })
}

/// Walks down from `-2` in steps of `1/2` until `cdf` drops below `1e-10`,
/// stopping at `floor`.
fn lower_support(cdf: impl Fn(f64) -> Result<f64>, floor: f64) -> Result<f64> {
    let mut s = -2.0;
    while s > floor && cdf(s)? >= 1e-10 {
        s -= 0.5;
    }
    Ok(s)
}

/// Upper end of every moment support, in `G` units.
pub const SUPPORT_HI: f64 = 6.0;
/// Lowest lower end of a moment support, in `G` units.
pub const SUPPORT_FLOOR: f64 = -6.0;

/// Chebyshev fit of `G_a` on `[lo, 6]`, with `lo` chosen as for the moments.
pub fn ga_fit(a: f64, opts: &GaOptions) -> Result<CdfFit> {
    gate(a, opts)?;
    let cdf = |s: f64| g_det(a, s, opts).map(|d| d.value);
    let lo = lower_support(cdf, SUPPORT_FLOOR)?;
    fit_cdf(cdf, (lo, SUPPORT_HI))
}

/// Chebyshev fit of `s ↦ P(M_a(u) ≤ 2^{1/3} s)`, in the units of `G_a`;
/// the same as [`ga_fit`] at `u = 0`.
pub fn marginal_fit(a: f64, u: f64) -> Result<CdfFit> {
    if u == 0.0 {
        return ga_fit(a, &GaOptions::default());
    }
    let c = 2f64.cbrt();
    let cdf = |s: f64| marginal_at_u(a, u, c * s);
    let lo = lower_support(cdf, SUPPORT_FLOOR)?;
    fit_cdf(cdf, (lo, SUPPORT_HI))
}

pub fn ga_moments(a: f64, opts: &GaOptions) -> Result<MomentFit> {
    gate(a, opts)?;
    let cdf = |s: f64| g_det(a, s, opts).map(|d| d.value);
    let lo = lower_support(cdf, SUPPORT_FLOOR)?;
    cdf_moments(cdf, (lo, SUPPORT_HI))
}

/// Moments of `F_1(2s)²`.
pub fn reference_moments() -> Result<MomentFit> {
    let cdf = |s: f64| f1_cdf(2.0 * s).map(|f| f * f);
    let lo = lower_support(cdf, SUPPORT_FLOOR)?;
    cdf_moments(cdf, (lo, SUPPORT_HI))
}

/// Moments of `F_1` itself.
pub fn f1_moments() -> Result<MomentFit> {
    let lo = lower_support(|s| f1_cdf(2.0 * s), SUPPORT_FLOOR)?;
    cdf_moments(f1_cdf, (2.0 * lo, 2.0 * SUPPORT_HI))
}

/// `s = -2.0, -1.9, …, 2.0`.
pub fn dmax_grid() -> Vec<f64> {
    (0..=40).map(|k| (k as f64 - 20.0) / 10.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dmax {
    pub a: f64,
    pub value: f64,
    pub argmax: f64,
    /// Error estimate of the two table entries at the maximizer.
    pub error: f64,
}

/// `D(a) = max_s |F_1(2s)² - G_a(s)|` over [`dmax_grid`].
pub fn dmax(a: f64) -> Result<f64> {
    Ok(dmax_with(a, &GaOptions::default())?.value)
}

pub fn dmax_with(a: f64, opts: &GaOptions) -> Result<Dmax> {
    let grid = dmax_grid();
    let reference = reference_table(&grid)?;
    let table = ga_table_with(a, &grid, opts)?;
    Ok(dmax_from(&table, &reference))
}

/// `D(a)` from precomputed tables on the same grid.
pub fn dmax_from(table: &DistTable, reference: &DistTable) -> Dmax {
    let mut best = Dmax { a: table.a, value: -1.0, argmax: f64::NAN, error: 0.0 };
    for i in 0..table.s_values.len() {
        let d = (reference.cdf[i] - table.cdf[i]).abs();
        if d > best.value {
            best = Dmax { a: table.a, value: d, argmax: table.s_values[i], error: reference.err[i] + table.err[i] };
        }
    }
    best
}

/// One ordered pair `G_lower(s) ≥ G_upper(s)` of the scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub s: f64,
    /// The smaller parameter, expected to give the larger distribution function.
    pub lower_a: f64,
    /// The larger parameter, `+∞` for the reference `F_1(2s)²`.
    pub upper_a: f64,
    /// `G_lower(s) - G_upper(s)`.
    pub difference: f64,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub comparisons: Vec<Comparison>,
}

impl MonotonicityReport {
    pub fn violations(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| c.violated)
    }

    pub fn passed(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Checks `G_a(s) ≥ G_{a'}(s)` for `a < a'`, and `G_a(s) ≥ F_1(2s)²`, at
/// every grid point with slack `2·(sum of error estimates)`.
pub fn monotonicity_scan(a_list: &[f64], s_grid: &[f64]) -> Result<MonotonicityReport> {
    monotonicity_scan_with(a_list, s_grid, &GaOptions::default())
}

pub fn monotonicity_scan_with(a_list: &[f64], s_grid: &[f64], opts: &GaOptions) -> Result<MonotonicityReport> {
    if a_list.is_empty() || a_list.windows(2).any(|w| w[0] >= w[1]) {
        return domain("a list must be non-empty and strictly increasing");
    }
    let reference = reference_table(s_grid)?;
    let tables: Vec<DistTable> = a_list.iter().map(|&a| ga_table_with(a, s_grid, opts)).collect::<Result<_>>()?;
    let mut report = MonotonicityReport::default();
    let compare = |lower: &DistTable, upper: &DistTable, report: &mut MonotonicityReport| {
        for i in 0..s_grid.len() {
            let difference = lower.cdf[i] - upper.cdf[i];
            let slack = 2.0 * (lower.err[i] + upper.err[i]);
            report.comparisons.push(Comparison {
                s: s_grid[i],
                lower_a: lower.a,
                upper_a: upper.a,
                difference,
                slack,
                violated: difference < -slack,
            });
        }
    };
    for (k, t) in tables.iter().enumerate() {
        compare(t, &reference, &mut report);
        for u in &tables[k + 1..] {
            compare(t, u, &mut report);
        }
    }
    Ok(report)
}

/// `P(M_a(u) ≤ s)` from the single-slice block determinant.
pub fn marginal_at_u(a: f64, u: f64, s: f64) -> Result<f64> {
    Ok(marginal_at_u_det(a, u, s)?.value)
}

pub fn marginal_at_u_det(a: f64, u: f64, s: f64) -> Result<DetResult> {
    if !(u.abs() <= 8.0) {
        return domain(format!("|u| must be at most 8, got {u}"));
    }
    if !s.is_finite() {
        return domain(format!("s must be finite, got {s}"));
    }
    reliability_check(a, DEFAULT_A_MAX)?;
    check_a(a, DEFAULT_A_MAX)?;
    let spec = RestrictionSpec::new(vec![(u, s)])?;
    fredholm_det_blocks_adaptive(a, &spec, Precision::Auto)
}
