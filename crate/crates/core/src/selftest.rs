//! Fast invariant suites shared by the command line and the acceptance run.

use std::time::Instant;

use serde::Serialize;

use crate::fredholm::{choose_truncation, fredholm_det, Airy2Kernel, FnKernel, Kernel, OnePointKernel};
use crate::kernel::{div1_alternative, div1_direct, ka_tilde, KaParams};
use crate::lpp::{check_identity, lpp_grid};
use crate::real::{Dd, Real};
use crate::specfun::{ai, ai_and_prime};
use crate::tasep::{evolve, replicate_rng, simulate, SimConfig};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = std::result::Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Largest `|y'' - x y| / (1 + |x|)` on `[-30, 30]` in steps of 1/4, with
/// `y''` from a centred difference of the extended-precision evaluation.
pub fn airy_residual() -> f64 {
    let h = 1e-6;
    (-120..=120)
        .map(|k| {
            let x = Dd::from(k as f64 * 0.25 + 0.0173);
            let (y, _) = ai_and_prime(x);
            let hd = Dd::from(h);
            let d2 = (ai(x + hd) - y.mul_f64(2.0) + ai(x - hd)).div_f64(h * h);
            (d2 - x * y).abs().to_f64() / (1.0 + x.abs().to_f64())
        })
        .fold(0.0, f64::max)
}

fn airy_suite() -> Outcome {
    let r = airy_residual();
    let a0 = (ai(0.0) - 0.355028053887817).abs();
    verdict(r < 1e-12 && a0 < 1e-15, format!("max scaled residual {r:.2e}, |Ai(0) - ref| {a0:.1e}"))
}

/// Node-doubling differences `|det_128 - det_64|` for the tested kernels.
pub fn doubling_differences() -> crate::Result<Vec<(String, f64)>> {
    fn one<K: Kernel>(name: &str, k: &K, s: f64, t: f64) -> crate::Result<(String, f64)> {
        Ok((name.to_string(), fredholm_det(k, s, 128, t)?.error_estimate))
    }
    let mut out = vec![one("airy2 s=-3", &Airy2Kernel, -3.0, choose_truncation(0.0, -3.0))?];
    out.push(one("exp rank-one s=0", &FnKernel(|x: f64, y: f64| 0.5 * (-(x + y)).exp()), 0.0, 40.0)?);
    for (a, s) in [(0.0, -1.0), (1.0, -2.0), (1.8, -2.0)] {
        let k = OnePointKernel::new(a)?;
        out.push(one(&format!("one-point a={a} s={s}"), &k, s, choose_truncation(a, s))?);
    }
    Ok(out)
}

fn fredholm_suite() -> Outcome {
    let zero = fredholm_det(&FnKernel(|_: f64, _: f64| 0.0), -1.0, 32, 5.0).map_err(|e| e.to_string())?;
    let diffs = doubling_differences().map_err(|e| e.to_string())?;
    let worst = diffs.iter().map(|d| d.1).fold(0.0, f64::max);
    verdict(
        zero.value == 1.0 && worst < 1e-10,
        format!("zero kernel det {}, worst doubling difference {worst:.1e}", zero.value),
    )
}

/// `max |K̃_0(ξ1, ξ2) - Ai(ξ1 + ξ2)|` over `ξ ∈ {-4, -3.5, …, 4}²`.
pub fn collapse_error() -> crate::Result<f64> {
    let grid: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.5).collect();
    let mut worst: f64 = 0.0;
    for &x in &grid {
        for &y in &grid {
            worst = worst.max((ka_tilde(0.0, x, y)? - ai(x + y)).abs());
        }
    }
    Ok(worst)
}

fn collapse_suite() -> Outcome {
    let e = collapse_error().map_err(|e| e.to_string())?;
    verdict(e <= 1e-8, format!("max deviation {e:.2e}"))
}

/// Largest gap between the two representations of the first divergent term.
pub fn div1_gap() -> crate::Result<f64> {
    let pts = [-2.0, -1.0, 0.0, 1.0, 2.5];
    let mut worst: f64 = 0.0;
    for a in [0.0, 0.5, 1.0] {
        for u in [-0.5, 0.0, 0.4] {
            let p = KaParams::new(a, u, u + 0.3)?;
            for &x in &pts {
                for &y in &pts {
                    worst = worst.max((div1_direct(&p, x, y)? - div1_alternative(&p, x, y)?).abs());
                }
            }
        }
    }
    Ok(worst)
}

fn div1_suite() -> Outcome {
    let g = div1_gap().map_err(|e| e.to_string())?;
    verdict(g <= 1e-8, format!("max gap {g:.2e}"))
}

/// Exhaustive maximum over up-right paths from `grid[0][0]` to the far corner.
pub fn enumerate_paths(grid: &[Vec<f64>]) -> f64 {
    fn walk(g: &[Vec<f64>], r: usize, c: usize) -> f64 {
        let up = (r + 1 < g.len()).then(|| walk(g, r + 1, c));
        let right = (c + 1 < g[0].len()).then(|| walk(g, r, c + 1));
        g[r][c] + up.into_iter().chain(right).fold(0.0, f64::max)
    }
    walk(grid, 0, 0)
}

/// Number of rectangles with at most 70 paths checked and mismatches found.
pub fn lpp_enumeration_mismatches() -> (usize, usize) {
    use rand::Rng;
    let mut rng = replicate_rng(70, 0);
    let (mut checked, mut bad) = (0, 0);
    for rows in 1..=70usize {
        for cols in 1..=70usize {
            // C(rows + cols - 2, rows - 1) paths
            let paths = (1..rows as u128).fold(1u128, |acc, k| (acc * (cols as u128 - 1 + k) / k).min(1 << 64));
            if paths > 70 {
                continue;
            }
            for _ in 0..5 {
                // integers keep both summation orders exact
                let g: Vec<Vec<f64>> =
                    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0..1000) as f64).collect()).collect();
                checked += 1;
                if lpp_grid(&g).ok() != Some(enumerate_paths(&g)) {
                    bad += 1;
                }
            }
        }
    }
    (checked, bad)
}

fn lpp_suite() -> Outcome {
    let (checked, bad) = lpp_enumeration_mismatches();
    verdict(bad == 0, format!("{checked} instances, {bad} mismatches"))
}

fn tasep_suite() -> Outcome {
    for r in 0..50 {
        let ev = evolve(0.7, -10, 20, 15.0, &mut replicate_rng(9, r)).map_err(|e| e.to_string())?;
        if !ev.upper.windows(2).all(|w| w[0] > w[1]) || !ev.lower.windows(2).all(|w| w[0] > w[1]) {
            return Err(format!("order violated in replicate {r}"));
        }
        if ev.upper.iter().zip(&ev.lower).any(|(u, l)| l > u) {
            return Err(format!("sandwich violated in replicate {r}"));
        }
    }
    let cfg = SimConfig::new(100.0, 0.5, 0.0, 64, 3);
    let (one, two) = (simulate(&cfg).map_err(|e| e.to_string())?, simulate(&cfg).map_err(|e| e.to_string())?);
    verdict(one == two, format!("ordering kept over 50 runs, reproducible: {}", one == two))
}

fn identity_suite() -> Outcome {
    let r = check_identity(1, 0, 1.0, 1.0, 20_000, 12).map_err(|e| e.to_string())?;
    verdict(
        r.passed,
        format!("single cell: tasep {:.4}, lpp {:.4}, exact {:.4}", r.p_tasep, r.p_lpp, r.exact.unwrap_or(f64::NAN)),
    )
}

pub const SUITES: &[(&str, fn() -> Outcome)] = &[
    ("airy-ode", airy_suite),
    ("fredholm", fredholm_suite),
    ("kernel-collapse", collapse_suite),
    ("div1-representations", div1_suite),
    ("lpp-enumeration", lpp_suite),
    ("tasep-invariants", tasep_suite),
    ("lpp-tasep-identity", identity_suite),
];

pub fn run_suite(name: &'static str, suite: fn() -> Outcome) -> SuiteResult {
    let start = Instant::now();
    let (passed, detail) = match suite() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    SuiteResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all() -> Vec<SuiteResult> {
    SUITES.iter().map(|&(name, f)| run_suite(name, f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_oracle_on_two_by_two() {
        assert_eq!(enumerate_paths(&[vec![1.0, 2.0], vec![3.0, 4.0]]), 8.0);
    }

    #[test]
    fn all_suites_pass() {
        for r in run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
