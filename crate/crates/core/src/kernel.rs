//! The extended shock kernel `K_a` and the reference kernels around it.
//!
//! With `u_{i,a} = u_i + a` and `y_i = xi_i + u_{i,a}^2`, an entry
//! `K_a(u1, xi1; u2, xi2)` is the sum of
//!
//! ```text
//! diff      = -exp(2/3 u1a^3 + u1a xi1 - 2/3 u2a^3 - u2a xi2) g(u2 - u1, xi2 - xi1)   (u2 > u1 only)
//! vanishing =  ∫ Ai(y1+λ) Ai(y2+λ) e^{λ(u2-u1)}
//! div1      =  ∫ Ai(y1-λ) Ai(y2+λ) e^{λ(u1a+u2a)}
//! divstrong = -∫ Ai(y1+λ) Ai(y2+λ) e^{λ(4a+u2-u1)}
//! div2      =  ∫ Ai(y1+λ) Ai(y2-λ) e^{λ(2a-u1-u2)}
//! ```
//!
//! with `g` the heat kernel and all integrals over `λ > 0`.
//!
//! When the exponential weight of `div1` or `div2` grows, the direct
//! integral is a small difference of large oscillating contributions. The
//! full-line integral has the closed form
//! `∫_R e^{βλ} Ai(y1-λ) Ai(y2+λ) dλ = 2^{-1/3} e^{β(y1-y2)/2} Ai(2^{-1/3}(y1+y2) - 2^{-4/3}β²)`,
//! so in that case the term is evaluated as the closed form minus the
//! integral over the other half-line, whose weight decays.

use crate::error::{domain, Error, Result};
use crate::real::Real;
use crate::specfun::{ai, ai_split, composite_gauss_legendre};
use crate::DEFAULT_A_MAX;

/// Parameters of one kernel entry family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KaParams {
    pub a: f64,
    pub u1: f64,
    pub u2: f64,
}

impl KaParams {
    pub fn new(a: f64, u1: f64, u2: f64) -> Result<Self> {
        Self::with_a_max(a, u1, u2, DEFAULT_A_MAX)
    }

    /// As [`KaParams::new`] with an explicit bound on `|a|`.
    pub fn with_a_max(a: f64, u1: f64, u2: f64, a_max: f64) -> Result<Self> {
        if !(u1.is_finite() && u2.is_finite()) {
            return domain(format!("times must be finite, got u1={u1}, u2={u2}"));
        }
        check_a(a, a_max)?;
        Ok(KaParams { a, u1, u2 })
    }
}

/// Rejects non-finite `a` and `|a| > a_max`.
pub fn check_a(a: f64, a_max: f64) -> Result<()> {
    if !a.is_finite() {
        return domain(format!("a must be finite, got {a}"));
    }
    if a.abs() > a_max {
        return Err(Error::Reliability(format!(
            "|a| = {} exceeds a_max = {a_max}: the exponentially large kernel term swamps the \
             order-one terms and the determinant cannot be evaluated reliably",
            a.abs()
        )));
    }
    Ok(())
}

/// The five pieces of a kernel entry.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KaTerms {
    pub diff: f64,
    pub vanishing: f64,
    pub div1: f64,
    pub divstrong: f64,
    pub div2: f64,
}

impl KaTerms {
    pub fn total(&self) -> f64 {
        self.diff + self.vanishing + self.div1 + self.divstrong + self.div2
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Arm {
    /// `Ai(y + λ)`, decaying in λ.
    Up,
    /// `Ai(y - λ)`, oscillating in λ.
    Down,
}

const LN_2_SQRT_PI: f64 = 1.2655121234846454; // ln(2 sqrt(pi))
const MIN_CUTOFF: f64 = 2.0;
const MAX_CUTOFF: f64 = 400.0;

/// Integrand e-folds below the peak at which the λ-integrals are cut.
fn depth<R: Real>() -> f64 {
    if R::EPS < 1e-20 {
        80.0
    } else {
        42.0
    }
}

/// Gauss–Legendre nodes per unit λ-panel.
fn per_panel<R: Real>() -> usize {
    if R::EPS < 1e-20 {
        24
    } else {
        20
    }
}

fn log_envelope(y: f64, arm: Arm, lam: f64) -> f64 {
    match arm {
        Arm::Down => 0.0,
        Arm::Up => {
            let x = y + lam;
            if x <= 1.0 {
                0.0
            } else {
                -2.0 / 3.0 * x * x.sqrt() - 0.25 * x.ln() - LN_2_SQRT_PI
            }
        }
    }
}

/// Smallest whole λ beyond which the envelope of
/// `Ai(y1 ± λ) Ai(y2 ± λ) e^{wλ}` stays `depth` e-folds under its maximum.
fn cutoff(y1: f64, arm1: Arm, y2: f64, arm2: Arm, w: f64, depth: f64) -> f64 {
    let env = |l: f64| log_envelope(y1, arm1, l) + log_envelope(y2, arm2, l) + w * l;
    let step = 0.5;
    let mut lam = 0.0;
    let mut prev = env(0.0);
    let mut best = prev;
    while lam < MAX_CUTOFF {
        lam += step;
        let e = env(lam);
        best = best.max(e);
        if e < prev && e < best - depth {
            break;
        }
        prev = e;
    }
    lam.ceil().max(MIN_CUTOFF)
}

/// `(m, z)` with `Ai(y ± λ) = m e^{-z}`.
#[inline]
fn arm_split<R: Real>(y: R, arm: Arm, lam: R) -> (R, R) {
    match arm {
        Arm::Up => ai_split(y + lam),
        Arm::Down => (ai(y - lam), R::zero()),
    }
}

/// `∫_0^∞ Ai(y1 ± λ) Ai(y2 ± λ) e^{wλ} dλ`.
fn half_line<R: Real>(y1: R, arm1: Arm, y2: R, arm2: Arm, w: f64, nodes: usize) -> Result<R> {
    let lam_max = cutoff(y1.to_f64(), arm1, y2.to_f64(), arm2, w, depth::<R>());
    let rule = composite_gauss_legendre::<R>(0.0, lam_max, 1.0, nodes)?;
    Ok(rule.integrate(|l| {
        let (m1, z1) = arm_split(y1, arm1, l);
        let (m2, z2) = arm_split(y2, arm2, l);
        m1 * m2 * (l.mul_f64(w) - z1 - z2).exp()
    }))
}

/// `∫_R e^{βλ} Ai(y1-λ) Ai(y2+λ) dλ` times `e^{shift}`.
fn full_line<R: Real>(y1: R, y2: R, beta: f64, shift: R) -> R {
    let c = R::cbrt2();
    let b = R::from_f64(beta);
    let z = (y1 + y2) / c - b * b / (c.mul_f64(2.0));
    let (m, zeta) = ai_split(z);
    m / c * ((y1 - y2) * b.mul_f64(0.5) - zeta + shift).exp()
}

struct TermsIn<R> {
    diff: R,
    vanishing: R,
    div1: R,
    divstrong: R,
    div2: R,
}

fn diff_exponent<R: Real>(a: f64, u1: f64, x1: R, u2: f64, x2: R) -> R {
    let (u1a, u2a) = (u1 + a, u2 + a);
    let d = u2 - u1;
    let cubes = (R::from_f64(u1a) * R::from_f64(u1a) * R::from_f64(u1a)
        - R::from_f64(u2a) * R::from_f64(u2a) * R::from_f64(u2a))
    .mul_f64(2.0)
    .div_f64(3.0);
    let gap = x2 - x1;
    cubes + x1.mul_f64(u1a) - x2.mul_f64(u2a) - gap * gap / R::from_f64(4.0 * d)
}

fn heat_norm<R: Real>(d: f64) -> R {
    (R::pi().mul_f64(4.0 * d)).sqrt()
}

fn div1_direct_in<R: Real>(y1: R, y2: R, beta1: f64, nodes: usize) -> Result<R> {
    half_line(y1, Arm::Down, y2, Arm::Up, beta1, nodes)
}

fn div1_alternative_in<R: Real>(y1: R, y2: R, beta1: f64, nodes: usize) -> Result<R> {
    Ok(full_line(y1, y2, beta1, R::zero()) - half_line(y1, Arm::Up, y2, Arm::Down, -beta1, nodes)?)
}

fn div2_direct_in<R: Real>(y1: R, y2: R, beta2: f64, nodes: usize) -> Result<R> {
    half_line(y1, Arm::Up, y2, Arm::Down, beta2, nodes)
}

fn div2_alternative_in<R: Real>(y1: R, y2: R, beta2: f64, nodes: usize) -> Result<R> {
    Ok(full_line(y1, y2, -beta2, R::zero()) - half_line(y1, Arm::Down, y2, Arm::Up, -beta2, nodes)?)
}

fn terms_in<R: Real>(p: &KaParams, x1: R, x2: R, nodes: usize) -> Result<TermsIn<R>> {
    let KaParams { a, u1, u2 } = *p;
    let (u1a, u2a) = (u1 + a, u2 + a);
    let y1 = x1 + R::from_f64(u1a) * R::from_f64(u1a);
    let y2 = x2 + R::from_f64(u2a) * R::from_f64(u2a);
    let diff = if u2 > u1 { -diff_exponent(a, u1, x1, u2, x2).exp() / heat_norm::<R>(u2 - u1) } else { R::zero() };
    let vanishing = half_line(y1, Arm::Up, y2, Arm::Up, u2 - u1, nodes)?;
    let divstrong = -half_line(y1, Arm::Up, y2, Arm::Up, 4.0 * a + u2 - u1, nodes)?;
    let beta1 = u1a + u2a;
    let div1 =
        if beta1 <= 0.0 { div1_direct_in(y1, y2, beta1, nodes)? } else { div1_alternative_in(y1, y2, beta1, nodes)? };
    let beta2 = 2.0 * a - u1 - u2;
    let div2 =
        if beta2 <= 0.0 { div2_direct_in(y1, y2, beta2, nodes)? } else { div2_alternative_in(y1, y2, beta2, nodes)? };
    Ok(TermsIn { diff, vanishing, div1, divstrong, div2 })
}

fn check_point(x1: f64, x2: f64) -> Result<()> {
    if !(x1.is_finite() && x2.is_finite()) {
        return domain(format!("kernel arguments must be finite, got ({x1}, {x2})"));
    }
    Ok(())
}

/// The five pieces at one point, in double precision.
pub fn ka_terms(p: &KaParams, xi1: f64, xi2: f64) -> Result<KaTerms> {
    check_point(xi1, xi2)?;
    let t = terms_in::<f64>(p, xi1, xi2, per_panel::<f64>())?;
    Ok(KaTerms { diff: t.diff, vanishing: t.vanishing, div1: t.div1, divstrong: t.divstrong, div2: t.div2 })
}

/// Kernel value and the change under doubling of the λ-quadrature nodes.
pub fn ka_extended_estimate(p: &KaParams, xi1: f64, xi2: f64) -> Result<(f64, f64)> {
    let coarse = ka_terms(p, xi1, xi2)?;
    let t = terms_in::<f64>(p, xi1, xi2, 2 * per_panel::<f64>())?;
    let fine = t.diff + t.vanishing + t.div1 + t.divstrong + t.div2;
    Ok((fine, (fine - coarse.total()).abs()))
}

/// `K_a(u1, xi1; u2, xi2)` in double precision.
pub fn ka_extended(p: &KaParams, xi1: f64, xi2: f64) -> Result<f64> {
    let (value, err) = ka_extended_estimate(p, xi1, xi2)?;
    let terms = ka_terms(p, xi1, xi2)?;
    let scale = [terms.vanishing, terms.div1, terms.divstrong, terms.div2, terms.diff]
        .iter()
        .fold(1.0f64, |m, t| m.max(t.abs()));
    let target = 1e-10 * scale;
    if !value.is_finite() {
        return Err(Error::NonFinite { x: xi1, y: xi2 });
    }
    if err > target {
        return Err(Error::Convergence { what: "kernel λ-quadrature".into(), achieved: err, target });
    }
    Ok(value)
}

/// One-point kernel `2^{1/3} K_a(0, 2^{1/3} xi1; 0, 2^{1/3} xi2)`.
pub fn ka_tilde(a: f64, xi1: f64, xi2: f64) -> Result<f64> {
    let p = KaParams::new(a, 0.0, 0.0)?;
    let c = 2f64.cbrt();
    Ok(c * ka_extended(&p, c * xi1, c * xi2)?)
}

/// `div1` by direct half-line quadrature of its defining integral.
pub fn div1_direct(p: &KaParams, xi1: f64, xi2: f64) -> Result<f64> {
    check_point(xi1, xi2)?;
    let (u1a, u2a) = (p.u1 + p.a, p.u2 + p.a);
    div1_direct_in(xi1 + u1a * u1a, xi2 + u2a * u2a, u1a + u2a, per_panel::<f64>())
}

/// `div1` as the full-line closed form minus the integral over `λ < 0`.
pub fn div1_alternative(p: &KaParams, xi1: f64, xi2: f64) -> Result<f64> {
    check_point(xi1, xi2)?;
    let (u1a, u2a) = (p.u1 + p.a, p.u2 + p.a);
    div1_alternative_in(xi1 + u1a * u1a, xi2 + u2a * u2a, u1a + u2a, per_panel::<f64>())
}

/// `∫_0^∞ Ai(x+λ) Ai(y+λ) dλ`.
pub fn airy2_kernel(x: f64, y: f64) -> Result<f64> {
    check_point(x, y)?;
    half_line(x, Arm::Up, y, Arm::Up, 0.0, per_panel::<f64>())
}

/// One group of the low-rank split `K(x, y) = Σ_k row_k(x) col_k(y)`: the
/// arm on each side, the exponential λ-weights `(c, sign)` summed on each
/// side, and the weights that set the λ-cutoff.
struct Group {
    row: Arm,
    row_terms: Vec<(f64, f64)>,
    col: Arm,
    col_terms: Vec<(f64, f64)>,
    cut_weights: Vec<f64>,
}

/// Row-major `len(ys) × len(lam)` matrix with entries
/// `scale_k Ai(y_i ± λ_k) Σ_t sign_t e^{c_t λ_k + shift_i}`.
fn factor_matrix<R: Real>(ys: &[R], shift: &[R], arm: Arm, lam: &[R], scale: &[R], terms: &[(f64, f64)]) -> Vec<R> {
    let mut out = Vec::with_capacity(ys.len() * lam.len());
    for (&y, &s) in ys.iter().zip(shift) {
        for (&l, &w) in lam.iter().zip(scale) {
            let (m, z) = arm_split(y, arm, l);
            let base = s - z;
            let mut acc = R::zero();
            for &(c, sign) in terms {
                acc += (l.mul_f64(c) + base).exp().mul_f64(sign);
            }
            out.push(w * m * acc);
        }
    }
    out
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    let mut acc = R::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Matrix `K_a(u_row, x_i; u_col, y_j)` (row-major) for the given points.
///
/// With `balanced`, entries are multiplied by `exp(-u_row x_i + u_col y_j)`.
/// This diagonal similarity leaves block determinants unchanged and keeps
/// entries at large `|u|` on the same scale as those at `u = 0`.
pub fn kernel_matrix<R: Real>(a: f64, u_row: f64, xs: &[R], u_col: f64, ys: &[R], balanced: bool) -> Result<Vec<R>> {
    let (n, m) = (xs.len(), ys.len());
    if n == 0 || m == 0 {
        return Ok(Vec::new());
    }
    let (ua_r, ua_c) = (u_row + a, u_col + a);
    let y1: Vec<R> = xs.iter().map(|&x| x + R::from_f64(ua_r) * R::from_f64(ua_r)).collect();
    let y2: Vec<R> = ys.iter().map(|&y| y + R::from_f64(ua_c) * R::from_f64(ua_c)).collect();
    let (rb, cb): (Vec<R>, Vec<R>) = if balanced {
        (xs.iter().map(|&x| x.mul_f64(-u_row)).collect(), ys.iter().map(|&y| y.mul_f64(u_col)).collect())
    } else {
        (vec![R::zero(); n], vec![R::zero(); m])
    };

    let beta1 = ua_r + ua_c;
    let beta2 = 2.0 * a - u_row - u_col;
    let groups = [
        // vanishing and divstrong share Ai(y1+λ) Ai(y2+λ); the row side
        // carries e^{(2a-u_row)λ} and the column side the difference
        Group {
            row: Arm::Up,
            row_terms: vec![(2.0 * a - u_row, 1.0)],
            col: Arm::Up,
            col_terms: vec![(u_col - 2.0 * a, 1.0), (u_col + 2.0 * a, -1.0)],
            cut_weights: vec![u_col - u_row, 4.0 * a + u_col - u_row],
        },
        if beta1 <= 0.0 {
            Group {
                row: Arm::Down,
                row_terms: vec![(0.0, 1.0)],
                col: Arm::Up,
                col_terms: vec![(beta1, 1.0)],
                cut_weights: vec![beta1],
            }
        } else {
            Group {
                row: Arm::Up,
                row_terms: vec![(-beta1, 1.0)],
                col: Arm::Down,
                col_terms: vec![(0.0, -1.0)],
                cut_weights: vec![-beta1],
            }
        },
        if beta2 <= 0.0 {
            Group {
                row: Arm::Up,
                row_terms: vec![(beta2, 1.0)],
                col: Arm::Down,
                col_terms: vec![(0.0, 1.0)],
                cut_weights: vec![beta2],
            }
        } else {
            Group {
                row: Arm::Down,
                row_terms: vec![(0.0, 1.0)],
                col: Arm::Up,
                col_terms: vec![(-beta2, -1.0)],
                cut_weights: vec![-beta2],
            }
        },
    ];

    let y1_min = y1.iter().map(|v| v.to_f64()).fold(f64::INFINITY, f64::min);
    let y2_min = y2.iter().map(|v| v.to_f64()).fold(f64::INFINITY, f64::min);
    let mut row_parts = Vec::with_capacity(groups.len());
    let mut col_parts = Vec::with_capacity(groups.len());
    for g in &groups {
        let lam_max = g
            .cut_weights
            .iter()
            .map(|&w| cutoff(y1_min, g.row, y2_min, g.col, w, depth::<R>()))
            .fold(MIN_CUTOFF, f64::max);
        let rule = composite_gauss_legendre::<R>(0.0, lam_max, 1.0, per_panel::<R>())?;
        let ones = vec![R::one(); rule.len()];
        row_parts.push(factor_matrix(&y1, &rb, g.row, &rule.nodes, &ones, &g.row_terms));
        col_parts.push(factor_matrix(&y2, &cb, g.col, &rule.nodes, &rule.weights, &g.col_terms));
    }
    let lens: Vec<usize> = row_parts.iter().map(|p| p.len() / n).collect();
    let stride: usize = lens.iter().sum();
    let interleave = |parts: &[Vec<R>], count: usize| {
        let mut out = Vec::with_capacity(count * stride);
        for i in 0..count {
            for (p, &l) in parts.iter().zip(&lens) {
                out.extend_from_slice(&p[i * l..(i + 1) * l]);
            }
        }
        out
    };
    let rows = interleave(&row_parts, n);
    let cols = interleave(&col_parts, m);

    let mut out = vec![R::zero(); n * m];
    for i in 0..n {
        let ri = &rows[i * stride..(i + 1) * stride];
        for j in 0..m {
            let mut v = dot(ri, &cols[j * stride..(j + 1) * stride]);
            let shift = rb[i] + cb[j];
            if beta1 > 0.0 {
                v += full_line(y1[i], y2[j], beta1, shift);
            }
            if beta2 > 0.0 {
                v += full_line(y1[i], y2[j], -beta2, shift);
            }
            if u_col > u_row {
                let e = diff_exponent(a, u_row, xs[i], u_col, ys[j]) + shift;
                v -= e.exp() / heat_norm::<R>(u_col - u_row);
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { x: xs[i].to_f64(), y: ys[j].to_f64() });
            }
            out[i * m + j] = v;
        }
    }
    Ok(out)
}

/// Leading-order sizes of the one-point kernel pieces and the resulting
/// loss-of-precision indicator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermDiagnostics {
    pub divstrong_leading: f64,
    pub div1_leading: f64,
    pub div2_leading: f64,
    pub eps0_bound: f64,
    pub eps12_bounds: (f64, f64),
    pub vanishing_bound: f64,
    /// Largest bounded term over the divergent one, clamped to `(0, 1]`.
    pub condition_ratio: f64,
}

/// Below this ratio the order-one kernel terms keep fewer than two
/// significant digits next to the divergent term in double precision.
pub const CONDITION_FLOOR: f64 = 100.0 * f64::EPSILON;

const AI_MAX_X: f64 = -1.018_792_971_647_471;
const AI_MAX: f64 = 0.5357566333800254;

fn max_ai_from(x: f64) -> f64 {
    if x <= AI_MAX_X {
        AI_MAX
    } else {
        ai(x)
    }
}

/// Leading-order forms of the one-point kernel terms for `a > 0`, in the
/// rescaled variables of [`ka_tilde`].
pub fn term_diagnostics(a: f64, xi1: f64, xi2: f64) -> Result<TermDiagnostics> {
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("term diagnostics need finite a > 0, got {a}"));
    }
    check_point(xi1, xi2)?;
    let c = 2f64.cbrt();
    let gap = xi2 - xi1;
    let divstrong_leading = (4.0 * a.powi(3) / 3.0
        - 2.0 * a * (xi1 + xi2)
        - gap * gap / (16.0 * a)
        - (4.0 * (std::f64::consts::PI * a).sqrt()).ln())
    .exp();
    let airy_part = ai((xi1 + xi2) / c) / c;
    let div1_leading = airy_part * (-a * gap).exp();
    let div2_leading = airy_part * (a * gap).exp();
    let peak1 = max_ai_from(xi1 + a * a);
    let peak2 = max_ai_from(xi2 + a * a);
    // c_i = ∫_0^∞ Ai(xi_{3-i} + a² + λ) dλ
    let tail = |x: f64| -> Result<f64> {
        let lam_max = cutoff(x, Arm::Up, 0.0, Arm::Down, 0.0, 42.0);
        let rule = composite_gauss_legendre::<f64>(0.0, lam_max, 1.0, 20)?;
        Ok(rule.integrate(|l| ai(x + l)))
    };
    let c1 = tail(xi2 + a * a)?;
    let c2 = tail(xi1 + a * a)?;
    let vanishing_bound = (c1 * peak1).min(c2 * peak2);
    let bounded = div1_leading.abs().max(div2_leading.abs()).max(vanishing_bound);
    let condition_ratio = (bounded / divstrong_leading).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(TermDiagnostics {
        divstrong_leading,
        div1_leading,
        div2_leading,
        eps0_bound: 1.0 / (4.0 * a),
        eps12_bounds: (peak1 / a, peak2 / a),
        vanishing_bound,
        condition_ratio,
    })
}

/// Refuses parameters for which the one-point determinant is unreliable:
/// `|a| > a_max`, or a condition ratio at the origin below
/// [`CONDITION_FLOOR`].
pub fn reliability_check(a: f64, a_max: f64) -> Result<()> {
    check_a(a, a_max)?;
    if a > 0.0 {
        let d = term_diagnostics(a, 0.0, 0.0)?;
        if d.condition_ratio < CONDITION_FLOOR {
            return Err(Error::Reliability(format!(
                "a = {a}: bounded kernel terms are {:.1e} of the divergent term, below the \
                 double-precision floor {CONDITION_FLOOR:.1e}",
                d.condition_ratio
            )));
        }
    }
    Ok(())
}

/// `σ_α = α^{1/3} (2 - 2α + α²)^{1/3} / (2 - α)^{2/3}`.
pub fn sigma_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("σ_α needs α in (0, 1], got {alpha}"));
    }
    Ok((alpha * (2.0 - 2.0 * alpha + alpha * alpha)).cbrt() / (2.0 - alpha).powf(2.0 / 3.0))
}

/// Limit law of the macroscopic shock, `F_1(2s) F_1(2s σ_α)`.
pub fn shock_reference_cdf(alpha: f64, s: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("shock reference needs α in (0, 1), got {alpha}"));
    }
    let sigma = sigma_alpha(alpha)?;
    Ok(crate::dist::f1_cdf(2.0 * s)? * crate::dist::f1_cdf(2.0 * s * sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Dd;

    /// Composite Simpson rule on [lo, hi] with the given step: the
    /// independent oracle for the half-line integrals.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
        let n = 2 * ((hi - lo) / (2.0 * h)).round() as usize;
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
        }
        s * h / 3.0
    }

    /// All five pieces by brute-force Simpson quadrature of their
    /// defining integrals (no alternative representations).
    fn brute_force(a: f64, u1: f64, u2: f64, x1: f64, x2: f64) -> f64 {
        let (u1a, u2a) = (u1 + a, u2 + a);
        let (y1, y2) = (x1 + u1a * u1a, x2 + u2a * u2a);
        let integrand = |l: f64| {
            ai(y1 + l) * ai(y2 + l) * ((u2 - u1) * l).exp() + ai(y1 - l) * ai(y2 + l) * ((u1a + u2a) * l).exp()
                - ai(y1 + l) * ai(y2 + l) * ((4.0 * a + u2 - u1) * l).exp()
                + ai(y1 + l) * ai(y2 - l) * ((2.0 * a - u1 - u2) * l).exp()
        };
        let mut v = simpson(integrand, 0.0, 60.0, 1e-3);
        if u2 > u1 {
            let d = u2 - u1;
            v -= (2.0 / 3.0 * u1a.powi(3) + u1a * x1
                - 2.0 / 3.0 * u2a.powi(3)
                - u2a * x2
                - (x2 - x1).powi(2) / (4.0 * d))
                .exp()
                / (4.0 * std::f64::consts::PI * d).sqrt();
        }
        v
    }

    #[test]
    fn airy_one_identity_at_a_zero() {
        let p = KaParams::new(0.0, 0.0, 0.0).unwrap();
        let t = ka_terms(&p, 0.5, 0.7).unwrap();
        assert_eq!(t.diff, 0.0);
        assert!((t.vanishing + t.divstrong).abs() < 1e-10);
        let c = 2f64.cbrt();
        let want = ai(1.2 / c) / c;
        assert!((t.total() - want).abs() < 1e-12, "{} vs {want}", t.total());
    }

    #[test]
    fn matches_brute_force_oracle() {
        for &(a, u1, u2, x1, x2) in &[
            (1.0, 0.0, 0.0, 2.0, 2.0),
            (1.0, 0.0, 0.0, 0.0, 0.0),
            (0.5, -0.3, 0.4, 0.2, -0.1),
            (-0.5, 0.0, 0.7, 1.0, 0.5),
        ] {
            let p = KaParams::new(a, u1, u2).unwrap();
            let got = ka_extended(&p, x1, x2).unwrap();
            let want = brute_force(a, u1, u2, x1, x2);
            assert!((got - want).abs() < 1e-8, "{:?}: {got} vs {want}", (a, u1, u2, x1, x2));
        }
    }

    #[test]
    fn one_point_kernel_values() {
        assert!((ka_tilde(0.0, 0.2, 0.4).unwrap() - ai(0.6)).abs() < 1e-8);
        let a = ka_tilde(1.0, 0.3, 0.9).unwrap();
        let b = ka_tilde(1.0, 0.9, 0.3).unwrap();
        assert!((a - b).abs() < 1e-9);
        let c = 2f64.cbrt();
        let want = c * brute_force(1.0, 0.0, 0.0, 0.0, 0.0);
        assert!((ka_tilde(1.0, 0.0, 0.0).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn airy2_kernel_values() {
        assert_eq!(airy2_kernel(0.3, 1.7).unwrap(), airy2_kernel(1.7, 0.3).unwrap());
        let v = airy2_kernel(5.0, 5.0).unwrap();
        assert!(v > 0.0 && v < ai(5.0).powi(2));
        let want = simpson(|l| ai(l) * ai(l), 0.0, 40.0, 1e-3);
        assert!((airy2_kernel(0.0, 0.0).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn div1_representations_agree() {
        for &(a, x1, x2) in &[(0.0, 0.5, 0.7), (1.0, 1.0, 1.0), (1.0, -2.0, 0.5), (0.3, 2.5, -1.5)] {
            let p = KaParams::new(a, 0.0, 0.0).unwrap();
            let d = div1_direct(&p, x1, x2).unwrap();
            let alt = div1_alternative(&p, x1, x2).unwrap();
            assert!((d - alt).abs() < 1e-8, "a={a} ({x1},{x2}): {d} vs {alt}");
        }
    }

    #[test]
    fn full_line_closed_form_matches_quadrature() {
        for &(y1, y2, b) in &[(0.3, 0.8, 0.7), (-1.0, 2.0, 1.5), (1.0, -0.5, -0.9)] {
            let q = simpson(|l| (b * l).exp() * ai(y1 - l) * ai(y2 + l), -45.0, 45.0, 1e-3);
            let f: f64 = full_line(y1, y2, b, 0.0);
            assert!((q - f).abs() < 1e-9, "{q} vs {f}");
        }
    }

    #[test]
    fn block_matrix_matches_pointwise_terms() {
        let xs = [-1.3, 0.0, 0.8, 2.5];
        let ys = [-0.7, 0.4, 1.9];
        for &(a, ur, uc) in &[(1.0, 0.0, 0.0), (0.6, -1.0, 2.0), (1.8, 0.5, -0.5), (-0.4, 1.0, 1.5)] {
            let m = kernel_matrix(a, ur, &xs, uc, &ys, false).unwrap();
            let p = KaParams::new(a, ur, uc).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    let want = ka_extended(&p, x, y).unwrap();
                    let got = m[i * ys.len() + j];
                    assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{:?} {x} {y}", (a, ur, uc));
                }
            }
            let bal = kernel_matrix(a, ur, &xs, uc, &ys, true).unwrap();
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    let want = m[i * ys.len() + j] * (-ur * x + uc * y).exp();
                    assert!((bal[i * ys.len() + j] - want).abs() < 1e-10 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn extended_precision_block_agrees_with_f64() {
        let xs = [-2.0, 0.1, 1.4];
        let m64 = kernel_matrix(1.8, 0.0, &xs, 0.0, &xs, true).unwrap();
        let xd: Vec<Dd> = xs.iter().map(|&x| Dd::from(x)).collect();
        let mdd = kernel_matrix(1.8, 0.0, &xd, 0.0, &xd, true).unwrap();
        for (a, b) in m64.iter().zip(&mdd) {
            assert!((a - b.to_f64()).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(KaParams::new(3.5, 0.0, 0.0), Err(Error::Reliability(_))));
        assert!(KaParams::with_a_max(3.5, 0.0, 0.0, 4.0).is_ok());
        assert!(KaParams::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(ka_extended(&KaParams::new(1.0, 0.0, 0.0).unwrap(), f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn diagnostics() {
        let d = term_diagnostics(1.0, 0.0, 0.0).unwrap();
        // e^{4/3} / (4 sqrt(pi))
        assert!((d.divstrong_leading - 0.535086977404949).abs() < 1e-13);
        assert_eq!(d.eps0_bound, 0.25);
        assert!(d.condition_ratio > 0.0 && d.condition_ratio <= 1.0);
        assert!(term_diagnostics(3.0, 0.0, 0.0).unwrap().condition_ratio < CONDITION_FLOOR);
        assert!(term_diagnostics(0.0, 0.0, 0.0).is_err());
        assert!(reliability_check(1.8, 3.0).is_ok());
        assert!(reliability_check(2.5, 3.0).is_ok());
        assert!(matches!(reliability_check(3.0, 3.0), Err(Error::Reliability(_))));
        assert!(reliability_check(-3.0, 3.0).is_ok());
    }

    #[test]
    fn sigma_alpha_values() {
        assert_eq!(sigma_alpha(1.0).unwrap(), 1.0);
        assert!((sigma_alpha(0.5).unwrap() - 0.6525).abs() < 5e-4);
        assert!(sigma_alpha(0.0).is_err());
    }
}
