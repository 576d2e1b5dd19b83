//! The Airy function `Ai`.
//!
//! For `|x| >= 16` the classical asymptotic expansions are used; there the
//! optimally truncated series is accurate far beyond double-double precision.
//! On `(-16, 16)` values come from a table of local Taylor expansions of the
//! Airy equation `y'' = x y`, one per node of spacing 1/8. The table itself is
//! generated once, in double-double, by Taylor stepping from `x = 16` downward:
//! in that direction the recessive solution `Ai` dominates, so the stepping is
//! stable on the positive axis and neutral on the oscillatory side.

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::real::{Dd, Real};

const EDGE: f64 = 16.0;
const STEPS_PER_UNIT: f64 = 8.0;
const NODES: usize = 257; // 2 * EDGE * STEPS_PER_UNIT + 1
const BUILD_TERMS: usize = 32;
const EVAL_TERMS_DD: usize = 26;
const EVAL_TERMS_F64: usize = 15;
const ASYMPTOTIC_TERMS: usize = 80;

struct Tables {
    /// Taylor coefficients of `Ai` around each node.
    taylor: Vec<[Dd; EVAL_TERMS_DD]>,
    /// `(u_k, v_k)` of the asymptotic expansions.
    asym: Vec<(Dd, Dd)>,
}

fn node_x(j: usize) -> f64 {
    -EDGE + j as f64 / STEPS_PER_UNIT
}

fn taylor_coeffs<const N: usize>(x0: f64, y: Dd, dy: Dd) -> [Dd; N] {
    let mut c = [Dd::ZERO; N];
    c[0] = y;
    c[1] = dy;
    c[2] = y.mul_f64(x0).div_f64(2.0);
    for n in 1..N - 2 {
        c[n + 2] = (c[n].mul_f64(x0) + c[n - 1]).div_f64(((n + 2) * (n + 1)) as f64);
    }
    c
}

fn asymptotic_coeffs() -> Vec<(Dd, Dd)> {
    let mut out = Vec::with_capacity(ASYMPTOTIC_TERMS);
    let mut u = Dd::ONE;
    out.push((Dd::ONE, Dd::ONE));
    for k in 1..ASYMPTOTIC_TERMS {
        let kf = k as f64;
        u = u.mul_f64((6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)).div_f64((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -u.mul_f64(6.0 * kf + 1.0).div_f64(6.0 * kf - 1.0);
        out.push((u, v));
    }
    out
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let asym = asymptotic_coeffs();
        let (m, mp, zeta) = asymptotic_positive(Dd::from(EDGE), &asym, true);
        let decay = (-zeta).exp();
        let (mut y, mut dy) = (m * decay, mp * decay);
        let mut taylor = vec![[Dd::ZERO; EVAL_TERMS_DD]; NODES];
        let h = -1.0 / STEPS_PER_UNIT;
        for j in (0..NODES).rev() {
            let c = taylor_coeffs::<BUILD_TERMS>(node_x(j), y, dy);
            taylor[j].copy_from_slice(&c[..EVAL_TERMS_DD]);
            // step to the next node down
            let (mut ny, mut ndy) = (Dd::ZERO, Dd::ZERO);
            for n in (0..BUILD_TERMS).rev() {
                ny = ny.mul_f64(h) + c[n];
                if n > 0 {
                    ndy = ndy.mul_f64(h) + c[n].mul_f64(n as f64);
                }
            }
            y = ny;
            dy = ndy;
        }
        Tables { taylor, asym }
    })
}

/// Sum of `c_j p_j` with `p_0 = first` and `p_{j+1} = p_j step`, truncated
/// once terms fall below precision or start growing.
fn asym_sum<R: Real>(coeffs: impl Iterator<Item = Dd>, first: R, step: R) -> R {
    let mut sum = R::zero();
    let mut prev = f64::INFINITY;
    let mut power = first;
    for c in coeffs {
        let term = R::from_dd(c) * power;
        let mag = term.abs().to_f64();
        if mag > prev {
            break;
        }
        sum += term;
        if mag <= R::EPS * 1e-2 * sum.abs().to_f64() {
            break;
        }
        prev = mag;
        power *= step;
    }
    sum
}

fn alternate(k: usize, c: Dd) -> Dd {
    if k % 2 == 0 {
        c
    } else {
        -c
    }
}

/// `(m, m', zeta)` with `Ai(x) = m e^{-zeta}` and `Ai'(x) = m' e^{-zeta}`,
/// for large positive `x`; `m'` is only summed on request.
fn asymptotic_positive<R: Real>(x: R, asym: &[(Dd, Dd)], with_derivative: bool) -> (R, R, R) {
    let root = x.sqrt();
    let quarter = root.sqrt();
    let zeta = (x * root).mul_f64(2.0).div_f64(3.0);
    let inv = R::one() / zeta;
    let two_sqrt_pi = R::pi().sqrt().mul_f64(2.0);
    let su = asym_sum(asym.iter().enumerate().map(|(k, c)| alternate(k, c.0)), R::one(), inv);
    let mp = if with_derivative {
        let sv = asym_sum(asym.iter().enumerate().map(|(k, c)| alternate(k, c.1)), R::one(), inv);
        -(sv * quarter) / two_sqrt_pi
    } else {
        R::zero()
    };
    (su / (two_sqrt_pi * quarter), mp, zeta)
}

fn asymptotic_negative<R: Real>(x: R, asym: &[(Dd, Dd)], with_derivative: bool) -> (R, R) {
    let z = -x;
    let root = z.sqrt();
    let quarter = root.sqrt();
    let zeta = (z * root).mul_f64(2.0).div_f64(3.0);
    let inv = R::one() / zeta;
    let inv2 = inv * inv;
    // terms k = 2j (even) and k = 2j + 1 (odd) carry the sign (-1)^j
    let even = |pick: fn(&(Dd, Dd)) -> Dd| asym.iter().step_by(2).enumerate().map(move |(j, c)| alternate(j, pick(c)));
    let odd =
        |pick: fn(&(Dd, Dd)) -> Dd| asym.iter().skip(1).step_by(2).enumerate().map(move |(j, c)| alternate(j, pick(c)));
    let (s, c) = (zeta - R::pi().mul_f64(0.25)).sin_cos();
    let sqrt_pi = R::pi().sqrt();
    let ue = asym_sum(even(|c| c.0), R::one(), inv2);
    let uo = asym_sum(odd(|c| c.0), inv, inv2);
    let ai = (c * ue + s * uo) / (sqrt_pi * quarter);
    let aip = if with_derivative {
        let ve = asym_sum(even(|c| c.1), R::one(), inv2);
        let vo = asym_sum(odd(|c| c.1), inv, inv2);
        quarter * (s * ve - c * vo) / sqrt_pi
    } else {
        R::zero()
    };
    (ai, aip)
}

fn from_table<R: Real>(x: R, with_derivative: bool) -> (R, R) {
    let t = tables();
    let j = ((x.to_f64() + EDGE) * STEPS_PER_UNIT).round().clamp(0.0, (NODES - 1) as f64) as usize;
    let d = x - R::from_f64(node_x(j));
    let terms = if R::EPS < 1e-20 { EVAL_TERMS_DD } else { EVAL_TERMS_F64 };
    let c = &t.taylor[j];
    let mut y = R::zero();
    for k in (0..terms).rev() {
        y = y * d + R::from_dd(c[k]);
    }
    let mut dy = R::zero();
    if with_derivative {
        for k in (1..terms).rev() {
            dy = dy * d + R::from_dd(c[k]).mul_f64(k as f64);
        }
    }
    (y, dy)
}

/// `Ai(x)` split as `m e^{-zeta}` so that callers can merge the decay with
/// other exponential factors; `zeta` is zero below the asymptotic region.
pub fn ai_split<R: Real>(x: R) -> (R, R) {
    let xf = x.to_f64();
    if xf >= EDGE {
        let (m, _, zeta) = asymptotic_positive(x, &tables().asym, false);
        (m, zeta)
    } else if xf > -EDGE {
        (from_table(x, false).0, R::zero())
    } else if xf.is_nan() {
        (x, R::zero())
    } else {
        (asymptotic_negative(x, &tables().asym, false).0, R::zero())
    }
}

pub fn ai<R: Real>(x: R) -> R {
    let (m, zeta) = ai_split(x);
    if zeta.to_f64() == 0.0 {
        m
    } else {
        m * (-zeta).exp()
    }
}

/// `(Ai(x), Ai'(x))`.
pub fn ai_and_prime<R: Real>(x: R) -> (R, R) {
    let xf = x.to_f64();
    if xf >= EDGE {
        let (m, mp, zeta) = asymptotic_positive(x, &tables().asym, true);
        let decay = (-zeta).exp();
        (m * decay, mp * decay)
    } else if xf > -EDGE || xf.is_nan() {
        from_table(x, true)
    } else {
        asymptotic_negative(x, &tables().asym, true)
    }
}

pub fn airy_ai(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("Airy function argument must be finite, got {x}"));
    }
    Ok(ai(x))
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("Airy function argument must be finite, got {x}"));
    }
    Ok(ai_and_prime(x).1)
}
