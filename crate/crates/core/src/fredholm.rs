//! Nyström discretization of Fredholm determinants `det(I - K)` on
//! `L²(s, ∞)` and on the multi-time block space.
//!
//! The half-line is truncated to `[s, s + T]` and discretized with a
//! Gauss–Legendre rule; the determinant of `I - (√w_i K(x_i, x_j) √w_j)` is
//! taken by LU with partial pivoting. The error estimate compares the rule
//! with `n` nodes against the one with `⌈n/2⌉` nodes.

use crate::error::{domain, Error, Result};
use crate::kernel::{check_a, kernel_matrix};
use crate::real::{Dd, Real};
use crate::specfun::{ai_and_prime, gauss_legendre_in};
use crate::DEFAULT_A_MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetResult {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
    /// Length `T` of the truncated interval.
    pub truncation: f64,
}

/// Arithmetic used for kernel assembly and factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    F64,
    DoubleDouble,
    /// Double-double only where the kernel has an exponentially large term.
    #[default]
    Auto,
}

/// A kernel that can be sampled on a product grid in any working precision.
pub trait Kernel {
    /// Row-major `K(x_i, y_j)`.
    fn matrix<R: Real>(&self, xs: &[R], ys: &[R]) -> Result<Vec<R>>;

    /// Whether [`Precision::Auto`] should switch to double-double on `[s, ∞)`.
    fn wants_extended(&self, _s: f64) -> bool {
        false
    }
}

/// A plain double-precision kernel function.
pub struct FnKernel<F>(pub F);

impl<F: Fn(f64, f64) -> f64> Kernel for FnKernel<F> {
    fn matrix<R: Real>(&self, xs: &[R], ys: &[R]) -> Result<Vec<R>> {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                let v = (self.0)(x.to_f64(), y.to_f64());
                if !v.is_finite() {
                    return Err(Error::NonFinite { x: x.to_f64(), y: y.to_f64() });
                }
                out.push(R::from_f64(v));
            }
        }
        Ok(out)
    }
}

/// The Airy₂ kernel in its Christoffel–Darboux form.
pub struct Airy2Kernel;

impl Kernel for Airy2Kernel {
    fn matrix<R: Real>(&self, xs: &[R], ys: &[R]) -> Result<Vec<R>> {
        let fx: Vec<(R, R)> = xs.iter().map(|&x| ai_and_prime(x)).collect();
        let fy: Vec<(R, R)> = ys.iter().map(|&y| ai_and_prime(y)).collect();
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for (&x, &(ax, dx)) in xs.iter().zip(&fx) {
            for (&y, &(ay, dy)) in ys.iter().zip(&fy) {
                let v = if x == y { dx * dx - x * ax * ax } else { (ax * dy - dx * ay) / (x - y) };
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// The one-point kernel `2^{1/3} K_a(0, 2^{1/3}ξ; 0, 2^{1/3}ζ)`, whose
/// determinant on `(s, ∞)` is `G_a(s)`.
#[derive(Clone, Copy, Debug)]
pub struct OnePointKernel {
    a: f64,
}

impl OnePointKernel {
    pub fn new(a: f64) -> Result<Self> {
        Self::with_a_max(a, DEFAULT_A_MAX)
    }

    pub fn with_a_max(a: f64, a_max: f64) -> Result<Self> {
        check_a(a, a_max)?;
        Ok(OnePointKernel { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl Kernel for OnePointKernel {
    fn matrix<R: Real>(&self, xs: &[R], ys: &[R]) -> Result<Vec<R>> {
        let c = R::cbrt2();
        let sx: Vec<R> = xs.iter().map(|&x| x * c).collect();
        let sy: Vec<R> = ys.iter().map(|&y| y * c).collect();
        let mut m = kernel_matrix(self.a, 0.0, &sx, 0.0, &sy, false)?;
        for v in &mut m {
            *v *= c;
        }
        Ok(m)
    }

    fn wants_extended(&self, s: f64) -> bool {
        needs_extended(self.a, s)
    }
}

/// Above this log-magnitude of the divergent term, double precision loses
/// more than about `1e-12` in the determinant.
const EXTENDED_LOG_SIZE: f64 = 12.0;

/// True when the exponentially large kernel term at `(a, s)` (one-point
/// scaling) would spoil a double-precision determinant.
pub fn needs_extended(a: f64, s: f64) -> bool {
    if a <= 0.0 {
        return false;
    }
    let log_size = 4.0 / 3.0 * a.powi(3) - 4.0 * a * 2f64.cbrt() * s;
    log_size > EXTENDED_LOG_SIZE
}

/// `det` of a row-major square matrix by LU with partial pivoting.
fn lu_det<R: Real>(mut m: Vec<R>, n: usize) -> R {
    let mut det = R::one();
    for k in 0..n {
        let mut p = k;
        let mut best = m[k * n + k].abs().to_f64();
        for i in k + 1..n {
            let v = m[i * n + k].abs().to_f64();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return R::zero();
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            det = -det;
        }
        let pivot = m[k * n + k];
        det *= pivot;
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            if f.to_f64() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let t = m[k * n + j];
                m[i * n + j] -= f * t;
            }
        }
    }
    det
}

/// `det(I - (√w_i K(x_i, y_j) √w_j))` for a discretized kernel.
fn nystrom_det<R: Real>(k: Vec<R>, sqrt_w: &[R]) -> Result<f64> {
    let n = sqrt_w.len();
    let mut m = k;
    for i in 0..n {
        for j in 0..n {
            let v = -(sqrt_w[i] * m[i * n + j] * sqrt_w[j]);
            m[i * n + j] = if i == j { R::one() + v } else { v };
        }
    }
    let d = lu_det(m, n).to_f64();
    if !d.is_finite() {
        return Err(Error::NonFinite { x: f64::NAN, y: f64::NAN });
    }
    Ok(d)
}

fn det_single<R: Real, K: Kernel>(kernel: &K, s: f64, n: usize, t: f64) -> Result<f64> {
    let rule = gauss_legendre_in::<R>(n, s, s + t)?;
    let sqrt_w: Vec<R> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let k = kernel.matrix(&rule.nodes, &rule.nodes)?;
    nystrom_det(k, &sqrt_w)
}

fn resolve(precision: Precision, auto_extended: bool) -> bool {
    match precision {
        Precision::F64 => false,
        Precision::DoubleDouble => true,
        Precision::Auto => auto_extended,
    }
}

fn det_at<K: Kernel>(kernel: &K, s: f64, n: usize, t: f64, extended: bool) -> Result<f64> {
    if extended {
        det_single::<Dd, K>(kernel, s, n, t)
    } else {
        det_single::<f64, K>(kernel, s, n, t)
    }
}

fn check_args(s: f64, n: usize, t: f64) -> Result<()> {
    if n < 4 {
        return domain(format!("need at least 4 nodes, got {n}"));
    }
    if !s.is_finite() {
        return domain(format!("lower limit must be finite, got {s}"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("truncation length must be positive, got {t}"));
    }
    Ok(())
}

/// `det(I - K)` on `L²(s, s + T)` with an `n`-node rule.
pub fn fredholm_det<K: Kernel>(kernel: &K, s: f64, n: usize, t: f64) -> Result<DetResult> {
    fredholm_det_with(kernel, s, n, t, Precision::Auto)
}

pub fn fredholm_det_with<K: Kernel>(kernel: &K, s: f64, n: usize, t: f64, precision: Precision) -> Result<DetResult> {
    check_args(s, n, t)?;
    let ext = resolve(precision, kernel.wants_extended(s));
    let value = det_at(kernel, s, n, t, ext)?;
    let coarse = det_at(kernel, s, n.div_ceil(2), t, ext)?;
    Ok(DetResult { value, error_estimate: (value - coarse).abs(), nodes_used: n, truncation: t })
}

/// Starting node count of the adaptive rule.
pub const DEFAULT_NODES: usize = 64;
/// Ceiling of the adaptive rule.
pub const MAX_NODES: usize = 512;
/// The adaptive rule stops doubling once the estimate is below this.
pub const TARGET_ERROR: f64 = 1e-8;

/// Doubles `n` from [`DEFAULT_NODES`] until the error estimate is below
/// [`TARGET_ERROR`] or [`MAX_NODES`] is reached.
pub fn fredholm_det_adaptive<K: Kernel>(kernel: &K, s: f64, t: f64, precision: Precision) -> Result<DetResult> {
    check_args(s, DEFAULT_NODES, t)?;
    let ext = resolve(precision, kernel.wants_extended(s));
    adaptive(|n| det_at(kernel, s, n, t, ext), t)
}

fn adaptive(mut det: impl FnMut(usize) -> Result<f64>, t: f64) -> Result<DetResult> {
    let mut n = DEFAULT_NODES;
    let mut prev = det(n / 2)?;
    loop {
        let value = det(n)?;
        let err = (value - prev).abs();
        if err < TARGET_ERROR || n >= MAX_NODES {
            return Ok(DetResult { value, error_estimate: err, nodes_used: n, truncation: t });
        }
        prev = value;
        n *= 2;
    }
}

/// Truncation length for a kernel of the one-point family with parameter
/// `tail_scale = |a|`, lower limit `s` in one-point scaling.
///
/// For `a = 0` this is `max(10, 14 - s)`. For `a ≠ 0` the exponential
/// weight `e^{4aλ}` slows the decay of the divergent term, and `T` grows
/// until the Airy decay beats it by 37 e-folds (about `1e-16`).
pub fn choose_truncation(tail_scale: f64, s: f64) -> f64 {
    let base = 10f64.max(14.0 - s);
    let a = tail_scale.abs();
    if a == 0.0 || !a.is_finite() || !s.is_finite() {
        return base;
    }
    let c = 2f64.cbrt();
    let margin = |t: f64| {
        let x = (c * (2.0 * s + t)).max(0.0);
        2.0 / 3.0 * x * x.sqrt() - c * a * t
    };
    let mut t = base;
    while margin(t) < 37.0 && t < 200.0 {
        t += 0.5;
    }
    t
}

/// Time slices and lower limits of a multi-time distribution function.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionSpec {
    points: Vec<(f64, f64)>,
}

/// Largest number of time slices accepted.
pub const MAX_SLICES: usize = 8;
/// Largest total matrix dimension accepted.
pub const MAX_DIMENSION: usize = 2048;

impl RestrictionSpec {
    /// `(u_k, s_k)` pairs with strictly increasing `u_k`. A lower limit of
    /// `+∞` removes its slice.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points.len() > MAX_SLICES {
            return domain(format!("need between 1 and {MAX_SLICES} time slices, got {}", points.len()));
        }
        for &(u, s) in &points {
            if !u.is_finite() || s.is_nan() || s == f64::NEG_INFINITY {
                return domain(format!("invalid slice (u={u}, s={s})"));
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return domain("slice times must be strictly increasing");
        }
        Ok(RestrictionSpec { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

fn det_blocks_at<R: Real>(a: f64, slices: &[(f64, f64)], n: usize, t: f64) -> Result<f64> {
    let rules = slices.iter().map(|&(_, s)| gauss_legendre_in::<R>(n, s, s + t)).collect::<Result<Vec<_>>>()?;
    let dim = n * slices.len();
    let mut big = vec![R::zero(); dim * dim];
    for (k, &(uk, _)) in slices.iter().enumerate() {
        for (l, &(ul, _)) in slices.iter().enumerate() {
            let block = kernel_matrix(a, uk, &rules[k].nodes, ul, &rules[l].nodes, true)?;
            for i in 0..n {
                for j in 0..n {
                    big[(k * n + i) * dim + l * n + j] = block[i * n + j];
                }
            }
        }
    }
    let sqrt_w: Vec<R> = rules.iter().flat_map(|r| r.weights.iter().map(|w| w.sqrt())).collect();
    nystrom_det(big, &sqrt_w)
}

fn det_blocks_dispatch(a: f64, slices: &[(f64, f64)], n: usize, t: f64, extended: bool) -> Result<f64> {
    if slices.is_empty() {
        return Ok(1.0);
    }
    if extended {
        det_blocks_at::<Dd>(a, slices, n, t)
    } else {
        det_blocks_at::<f64>(a, slices, n, t)
    }
}

fn active(spec: &RestrictionSpec) -> Vec<(f64, f64)> {
    spec.points.iter().copied().filter(|p| p.1.is_finite()).collect()
}

fn blocks_extended(a: f64, slices: &[(f64, f64)], precision: Precision) -> bool {
    let c = 2f64.cbrt();
    let s_min = slices.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    resolve(precision, s_min.is_finite() && needs_extended(a, s_min / c))
}

/// `det(I - χ_s K_a χ_s)` on the block space, with blocks `(k, l)` sampled
/// on the `n`-node rules of `[s_k, s_k + T]` and `[s_l, s_l + T]` in the
/// unscaled variable of [`crate::kernel::ka_extended`].
pub fn fredholm_det_blocks(a: f64, spec: &RestrictionSpec, n: usize, t: f64) -> Result<DetResult> {
    fredholm_det_blocks_with(a, spec, n, t, Precision::Auto)
}

pub fn fredholm_det_blocks_with(
    a: f64,
    spec: &RestrictionSpec,
    n: usize,
    t: f64,
    precision: Precision,
) -> Result<DetResult> {
    check_a(a, DEFAULT_A_MAX)?;
    check_args(0.0, n, t)?;
    let slices = active(spec);
    if n * slices.len() > MAX_DIMENSION {
        return domain(format!("block matrix of dimension {} exceeds {MAX_DIMENSION}", n * slices.len()));
    }
    let ext = blocks_extended(a, &slices, precision);
    let value = det_blocks_dispatch(a, &slices, n, t, ext)?;
    let coarse = det_blocks_dispatch(a, &slices, n.div_ceil(2), t, ext)?;
    Ok(DetResult { value, error_estimate: (value - coarse).abs(), nodes_used: n, truncation: t })
}

/// [`fredholm_det_blocks`] with automatic `T` and adaptive node count.
pub fn fredholm_det_blocks_adaptive(a: f64, spec: &RestrictionSpec, precision: Precision) -> Result<DetResult> {
    check_a(a, DEFAULT_A_MAX)?;
    let slices = active(spec);
    let c = 2f64.cbrt();
    let s_min = slices.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let t = if s_min.is_finite() { c * choose_truncation(a, s_min / c) } else { 1.0 };
    let ext = blocks_extended(a, &slices, precision);
    let max_n = (MAX_DIMENSION / slices.len().max(1)).min(MAX_NODES);
    let mut n = DEFAULT_NODES.min(max_n);
    let mut prev = det_blocks_dispatch(a, &slices, n / 2, t, ext)?;
    loop {
        let value = det_blocks_dispatch(a, &slices, n, t, ext)?;
        let err = (value - prev).abs();
        if err < TARGET_ERROR || 2 * n > max_n {
            return Ok(DetResult { value, error_estimate: err, nodes_used: n, truncation: t });
        }
        prev = value;
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ka_tilde;

    #[test]
    fn zero_kernel_gives_one() {
        let r = fredholm_det(&FnKernel(|_, _| 0.0), -3.0, 16, 10.0).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.error_estimate, 0.0);
    }

    #[test]
    fn rank_one_kernel_matches_closed_form() {
        // det(I - f⊗f) = 1 - ∫ f² for a rank-one kernel
        let r = fredholm_det(&FnKernel(|x: f64, y: f64| (-(x * x + y * y) / 2.0).exp()), 0.0, 40, 12.0).unwrap();
        let want = 1.0 - std::f64::consts::PI.sqrt() / 2.0;
        assert!((r.value - want).abs() < 1e-13);
    }

    #[test]
    fn lu_handles_pivoting() {
        let m = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        assert!((lu_det(m, 3) - (-5.0)).abs() < 1e-14);
        assert_eq!(lu_det(vec![1.0, 2.0, 2.0, 4.0], 2), 0.0);
    }

    #[test]
    fn airy2_far_tail_is_one() {
        let r = fredholm_det(&Airy2Kernel, 8.0, 32, choose_truncation(0.0, 8.0)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn airy2_forms_agree() {
        let xs = [-1.5, 0.2, 2.0];
        let m = Airy2Kernel.matrix(&xs, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                let q = crate::kernel::airy2_kernel(x, y).unwrap();
                assert!((m[i * 3 + j] - q).abs() < 1e-12, "{x} {y}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let k = FnKernel(|_, _| 0.0);
        assert!(fredholm_det(&k, 0.0, 3, 10.0).is_err());
        assert!(fredholm_det(&k, f64::NAN, 8, 10.0).is_err());
        let bad = FnKernel(|x: f64, _| if x > 1.0 { f64::INFINITY } else { 0.0 });
        assert!(matches!(fredholm_det(&bad, 0.0, 8, 2.0), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(choose_truncation(0.0, 0.0), 14.0);
        assert_eq!(choose_truncation(0.0, -2.0), 16.0);
        assert_eq!(choose_truncation(0.0, 6.0), 10.0);
        let t = choose_truncation(1.8, -2.0);
        assert!(t > 16.0 && t < 40.0);
    }

    #[test]
    fn restriction_validation() {
        assert!(RestrictionSpec::new(vec![]).is_err());
        assert!(RestrictionSpec::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(RestrictionSpec::new(vec![(1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(RestrictionSpec::new((0..9).map(|k| (k as f64, 0.0)).collect()).is_err());
        assert!(RestrictionSpec::new(vec![(0.0, 0.0), (1.0, f64::INFINITY)]).is_ok());
        let spec = RestrictionSpec::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap();
        assert!(fredholm_det_blocks(0.0, &spec, 700, 10.0).is_err());
    }

    #[test]
    fn single_block_matches_scalar_path() {
        let c = 2f64.cbrt();
        for &(a, s) in &[(0.0, -1.0), (1.0, 0.5)] {
            let t = choose_truncation(a, s);
            let scalar = fredholm_det(&OnePointKernel::new(a).unwrap(), s, 48, t).unwrap();
            let spec = RestrictionSpec::new(vec![(0.0, c * s)]).unwrap();
            let block = fredholm_det_blocks(a, &spec, 48, c * t).unwrap();
            assert!((scalar.value - block.value).abs() < 1e-9, "{} vs {}", scalar.value, block.value);
        }
    }

    #[test]
    fn one_point_kernel_matrix_matches_pointwise() {
        let xs = [-1.0, 0.5];
        let m = OnePointKernel::new(1.2).unwrap().matrix(&xs, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                let want = ka_tilde(1.2, x, y).unwrap();
                assert!((m[i * 2 + j] - want).abs() < 1e-10 * want.abs().max(1.0));
            }
        }
    }
}
