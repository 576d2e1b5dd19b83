//! Exponential last passage percolation from the line `{(-n, n)}`.
//!
//! Cell `(i, j)` sits in column `i` and row `j`. Row `j` corresponds to TASEP
//! particle `j`: its weights are `Exp(v_j)` with `v_j = 1` for `j > 0` and
//! `alpha` for `j <= 0`, and the cell `(i, j)` is the `(i + j)`-th jump of that
//! particle. Then `P(x_n(t) >= m - n) = P(L_{line -> (m, n)} <= t)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::stats::binomial_stderr;
use crate::tasep::{evolve, replicate_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Start {
    /// Paths start next to the anti-diagonal `i + j = 0`.
    Line,
    /// Paths start at cell `(1, 1)`.
    Corner,
}

/// Last passage time to `target = (m, n)`.
///
/// `weight(i, j)` is called exactly once per cell of the region, rows in
/// increasing order and columns increasing within a row, so weights can be
/// drawn lazily.
pub fn lpp_time(target: (i64, i64), start: Start, mut weight: impl FnMut(i64, i64) -> f64) -> Result<f64> {
    let (m, n) = target;
    let (rows, col0) = match start {
        Start::Line if m + n >= 1 => (1 - m..=n, 1 - n),
        Start::Corner if m >= 1 && n >= 1 => (1..=n, 1),
        _ => return domain(format!("target ({m}, {n}) is not beyond the start of {start:?} paths")),
    };
    let mut prev = vec![0.0f64; (m - col0 + 1) as usize];
    for j in rows {
        let from = match start {
            Start::Line => 1 - j,
            Start::Corner => 1,
        };
        let mut left = 0.0f64;
        for i in from..=m {
            let w = weight(i, j);
            if !(w >= 0.0) || !w.is_finite() {
                return domain(format!("weight at ({i}, {j}) is {w}, must be finite and non-negative"));
            }
            let c = (i - col0) as usize;
            left = w + left.max(prev[c]);
            prev[c] = left;
        }
    }
    Ok(prev[prev.len() - 1])
}

/// Passage time across a rectangle from `grid[0][0]` to the opposite corner;
/// `grid[j][i]` is the weight in column `i` of row `j`.
pub fn lpp_grid(grid: &[Vec<f64>]) -> Result<f64> {
    let n = grid.len();
    let m = grid.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || grid.iter().any(|r| r.len() != m) {
        return domain("grid must be a non-empty rectangle");
    }
    lpp_time((m as i64, n as i64), Start::Corner, |i, j| grid[(j - 1) as usize][(i - 1) as usize])
}

/// Rate of the weights in row `j`.
pub fn row_rate(j: i64, alpha: f64) -> f64 {
    if j > 0 {
        1.0
    } else {
        alpha
    }
}

/// One passage time from the line to `(m, n)` with exponential weights.
pub fn sample_passage<R: Rng + ?Sized>(alpha: f64, m: i64, n: i64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("alpha must be positive, got {alpha}"));
    }
    let slow = 1.0 / alpha;
    lpp_time((m, n), Start::Line, |_, j| {
        let e: f64 = Exp1.sample(rng);
        if j > 0 {
            e
        } else {
            e * slow
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LppConfig {
    pub ell: u64,
    pub v: f64,
    pub a: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Derived geometry of an [`LppConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LppGeometry {
    pub alpha: f64,
    /// `round(ell - 2(v + a)(2 ell)^{2/3})`.
    pub m: i64,
    /// The coordinate for which `m` is exact; the centering uses it.
    pub v_effective: f64,
    pub center: f64,
    pub scale: f64,
}

impl LppConfig {
    pub fn new(ell: u64, v: f64, a: f64, replicates: usize, seed: u64) -> Self {
        LppConfig { ell, v, a, replicates, seed }
    }

    pub fn geometry(&self) -> Result<LppGeometry> {
        if self.ell == 0 || !self.v.is_finite() || !self.a.is_finite() {
            return domain(format!(
                "need ell >= 1 and finite v, a (ell = {}, v = {}, a = {})",
                self.ell, self.v, self.a
            ));
        }
        let ell = self.ell as f64;
        let w = (2.0 * ell).powf(2.0 / 3.0);
        let alpha = 1.0 - 2.0 * self.a * (2.0 * ell).powf(-1.0 / 3.0);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return domain(format!("alpha = {alpha} outside (0, 1] for ell = {ell}, a = {}", self.a));
        }
        let m = (ell - 2.0 * (self.v + self.a) * w).round();
        if m < 1.0 {
            return domain(format!("m = {m} must be at least 1"));
        }
        let v_effective = (ell - m) / (2.0 * w) - self.a;
        Ok(LppGeometry {
            alpha,
            m: m as i64,
            v_effective,
            center: 4.0 * ell - 4.0 * (v_effective + self.a) * w,
            scale: 2.0 * (2.0 * ell).cbrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LppOutput {
    pub geometry: LppGeometry,
    /// Rescaled passage times in replicate order.
    pub samples: Vec<f64>,
}

pub fn rescale_passage(l: f64, g: &LppGeometry) -> f64 {
    (l - g.center) / g.scale
}

pub fn sample_l_resc(config: &LppConfig) -> Result<LppOutput> {
    if config.replicates == 0 {
        return domain("need at least one replicate");
    }
    let g = config.geometry()?;
    let n = config.ell as i64;
    let samples = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| sample_passage(g.alpha, g.m, n, &mut replicate_rng(config.seed, r)).map(|l| rescale_passage(l, &g)))
        .collect::<Result<_>>()?;
    Ok(LppOutput { geometry: g, samples })
}

/// Both sides of `P(x_n(t) >= m - n) = P(L_{line -> (m, n)} <= t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n: i64,
    pub m: i64,
    pub t: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub p_tasep: f64,
    pub p_lpp: f64,
    pub difference: f64,
    /// Binomial standard error of the difference.
    pub stderr: f64,
    /// `1 - exp(-v_n t)` when the region is a single cell.
    pub exact: Option<f64>,
    pub passed: bool,
}

/// Largest `|m|`, `|n|` accepted by [`check_identity`].
pub const IDENTITY_MAX: i64 = 20;

/// Estimates both sides with independent streams of the same seed.
pub fn check_identity(n: i64, m: i64, t: f64, alpha: f64, replicates: usize, seed: u64) -> Result<IdentityReport> {
    if m + n < 1 || n.abs() > IDENTITY_MAX || m.abs() > IDENTITY_MAX {
        return domain(format!("need m + n >= 1 and |m|, |n| <= {IDENTITY_MAX}, got m = {m}, n = {n}"));
    }
    if !(t >= 0.0) || !t.is_finite() || replicates == 0 {
        return domain(format!("need finite t >= 0 and replicates >= 1 (t = {t})"));
    }
    let (tasep, lpp): (usize, usize) = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let ev = evolve(alpha, 1 - m, n, t, &mut replicate_rng(seed, 2 * r))?;
            let l = sample_passage(alpha, m, n, &mut replicate_rng(seed, 2 * r + 1))?;
            Ok(((ev.position(n) >= m - n) as usize, (l <= t) as usize))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let k = replicates as f64;
    let (p_tasep, p_lpp) = (tasep as f64 / k, lpp as f64 / k);
    let stderr = binomial_stderr(p_tasep, replicates).hypot(binomial_stderr(p_lpp, replicates));
    let difference = p_tasep - p_lpp;
    let exact = (m + n == 1).then(|| 1.0 - (-row_rate(n, alpha) * t).exp());
    let mut passed = difference.abs() <= 3.0 * stderr;
    if let Some(p) = exact {
        let se = binomial_stderr(p, replicates);
        passed &= (p_tasep - p).abs() <= 3.0 * se && (p_lpp - p).abs() <= 3.0 * se;
    }
    Ok(IdentityReport { n, m, t, alpha, replicates, p_tasep, p_lpp, difference, stderr, exact, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn path_count(rows: usize, cols: usize) -> u64 {
        (1..rows as u64).fold(1, |acc, k| acc * (cols as u64 - 1 + k) / k)
    }

    #[test]
    fn two_by_two() {
        assert_eq!(lpp_grid(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(), 8.0);
    }

    #[test]
    fn single_cells() {
        assert_eq!(lpp_time((0, 1), Start::Line, |_, _| 2.5).unwrap(), 2.5);
        assert_eq!(lpp_time((5, -4), Start::Line, |i, j| (i * 10 + j) as f64).unwrap(), 46.0);
        assert_eq!(lpp_grid(&[vec![0.75]]).unwrap(), 0.75);
    }

    #[test]
    fn line_region_cells() {
        // rows 1-m..n, row j holding columns 1-j..m
        let (m, n) = (3i64, 2i64);
        let mut seen = Vec::new();
        lpp_time((m, n), Start::Line, |i, j| {
            seen.push((i, j));
            1.0
        })
        .unwrap();
        let want: Vec<(i64, i64)> = (1 - m..=n).flat_map(|j| (1 - j..=m).map(move |i| (i, j))).collect();
        assert_eq!(seen, want);
    }

    #[test]
    fn constant_field_is_deterministic() {
        // every maximal path from the line to (m, n) has m + n cells
        for c in [0.0, 0.5, 2.0] {
            assert_eq!(lpp_time((7, 4), Start::Line, |_, _| c).unwrap(), 11.0 * c);
        }
        let cfg = LppConfig::new(64, 0.0, 0.5, 1, 0);
        let g = cfg.geometry().unwrap();
        let at = |c: f64| rescale_passage(c * (g.m + 64) as f64, &g);
        assert!((at(2.0) - 2.0 * at(1.0) + at(0.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(lpp_time((0, 0), Start::Line, |_, _| 1.0).is_err());
        assert!(lpp_time((-3, 2), Start::Line, |_, _| 1.0).is_err());
        assert!(lpp_time((1, 0), Start::Corner, |_, _| 1.0).is_err());
        assert!(lpp_time((2, 2), Start::Line, |_, _| -1.0).is_err());
        assert!(lpp_grid(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(lpp_grid(&[]).is_err());
    }

    #[test]
    fn geometry_centering() {
        let g = LppConfig::new(512, 0.0, 1.0, 1, 0).geometry().unwrap();
        let w = 1024f64.powf(2.0 / 3.0);
        assert_eq!(g.m, (512.0 - 2.0 * w).round() as i64);
        assert!((g.alpha - (1.0 - 2.0 / 1024f64.cbrt())).abs() < 1e-15);
        // with the effective coordinate the centering is 2(ell + m)
        assert!((g.center - 2.0 * (512 + g.m) as f64).abs() < 1e-9);
        assert!((g.v_effective).abs() < 0.5 / w);
        let g0 = LppConfig::new(512, 0.0, 0.0, 1, 0).geometry().unwrap();
        assert_eq!((g0.m, g0.alpha, g0.center), (512, 1.0, 2048.0));
        assert!(LppConfig::new(8, 0.0, 2.0, 1, 0).geometry().is_err());
    }

    #[test]
    fn single_cell_identity_is_exact() {
        let r = check_identity(1, 0, 1.0, 1.0, 20_000, 4).unwrap();
        assert_eq!(r.exact, Some(1.0 - (-1.0f64).exp()));
        assert!(r.passed, "{r:?}");
        // an alpha row
        let r = check_identity(0, 1, 1.5, 0.4, 20_000, 4).unwrap();
        assert!((r.exact.unwrap() - (1.0 - (-0.6f64).exp())).abs() < 1e-15);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn identity_at_long_times() {
        let r = check_identity(3, 2, 500.0, 0.7, 200, 1).unwrap();
        assert_eq!((r.p_tasep, r.p_lpp, r.stderr), (1.0, 1.0, 0.0));
        assert!(r.passed);
    }

    #[test]
    fn two_row_identity_matches_closed_form() {
        // (m, n) = (1, 1): L = w(1,1) + max(w(0,1), w(1,0)), the last weight of rate alpha
        let (t, alpha) = (2.0f64, 0.6f64);
        let e = (-t).exp();
        let exact = 1.0 - e - t * e - ((-alpha * t).exp() - e) / (1.0 - alpha) + e * (1.0 - (-alpha * t).exp()) / alpha;
        let r = check_identity(1, 1, t, alpha, 100_000, 8).unwrap();
        let se = binomial_stderr(exact, r.replicates);
        assert!(r.passed, "{r:?}");
        assert!((r.p_tasep - exact).abs() < 3.0 * se && (r.p_lpp - exact).abs() < 3.0 * se, "{r:?} vs {exact}");
    }

    #[test]
    fn identity_with_two_speeds() {
        for seed in 0..3 {
            let r = check_identity(4, 3, 12.0, 0.6, 20_000, seed).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.p_tasep > 0.05 && r.p_tasep < 0.95, "{r:?}");
        }
    }

    proptest! {
        #[test]
        fn dp_matches_enumeration(rows in 1usize..6, cols in 1usize..6, seed: u64) {
            prop_assume!(path_count(rows, cols) <= 70);
            let mut rng = replicate_rng(seed, 0);
            // integer weights keep the sums exact in either summation order
            let grid: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0..1000) as f64).collect()).collect();
            prop_assert_eq!(lpp_grid(&grid).unwrap(), crate::selftest::enumerate_paths(&grid));
        }

        #[test]
        fn raising_a_weight_never_lowers_passage(seed: u64, r in 0usize..6, c in 0usize..6, bump in 0.0f64..5.0) {
            let mut rng = replicate_rng(seed, 1);
            let mut grid: Vec<Vec<f64>> = (0..6).map(|_| (0..6).map(|_| rng.random::<f64>()).collect()).collect();
            let before = lpp_grid(&grid).unwrap();
            grid[r][c] += bump;
            prop_assert!(lpp_grid(&grid).unwrap() >= before);
        }

        #[test]
        fn concatenated_rectangles_superadditive(seed: u64, r in 0usize..7, c in 0usize..6) {
            // A = (0,0), B = (r,c), C = (6,6); the second leg starts right of B
            let mut rng = replicate_rng(seed, 2);
            let grid: Vec<Vec<f64>> = (0..7).map(|_| (0..7).map(|_| rng.random::<f64>()).collect()).collect();
            let first: Vec<Vec<f64>> = grid[..=r].iter().map(|row| row[..=c].to_vec()).collect();
            let second: Vec<Vec<f64>> = grid[r..].iter().map(|row| row[c + 1..].to_vec()).collect();
            let whole = lpp_grid(&grid).unwrap();
            prop_assert!(lpp_grid(&first).unwrap() + lpp_grid(&second).unwrap() <= whole + 1e-12);
        }

        #[test]
        fn line_and_corner_agree_on_rectangles(seed: u64, m in 1i64..6, n in 1i64..6) {
            // weights vanishing outside the quadrant reduce the line start to the corner
            let mut rng = replicate_rng(seed, 3);
            let grid: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
            let line = lpp_time((m, n), Start::Line, |i, j| {
                if i >= 1 && j >= 1 { grid[(j - 1) as usize][(i - 1) as usize] } else { 0.0 }
            }).unwrap();
            prop_assert_eq!(line, lpp_grid(&grid).unwrap());
        }
    }
}
