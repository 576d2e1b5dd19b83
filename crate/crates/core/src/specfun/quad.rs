//! Gauss–Legendre rules.

use crate::error::{domain, Result};
use crate::real::Real;

/// Nodes (ascending) and positive weights of a quadrature rule on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct QuadRule<R = f64> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
    pub lo: f64,
    pub hi: f64,
}

impl<R: Real> QuadRule<R> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(R) -> R) -> R {
        let mut acc = R::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(x);
        }
        acc
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((x * p1).mul_f64(2.0 * jf + 1.0) - p0.mul_f64(jf)) / R::from_f64(jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = (x * p1 - p0).mul_f64(n as f64) / (x * x - R::one());
    (p1, dp)
}

/// Reference rule on `[-1, 1]`, nodes ascending.
fn reference_rule<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    let mut nodes = vec![R::zero(); n];
    let mut weights = vec![R::zero(); n];
    let nf = n as f64;
    for k in 0..n.div_ceil(2) {
        // Tricomi's estimate of the k-th largest zero
        let theta = std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5);
        let mut x = R::from_f64(theta.cos() * (1.0 - (1.0 - 1.0 / nf) / (8.0 * nf * nf)));
        let mut extra = if R::EPS < 1e-20 { 2 } else { 1 };
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs().to_f64() < 1e-15 {
                if extra == 0 {
                    break;
                }
                extra -= 1;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = R::from_f64(2.0) / ((R::one() - x * x) * dp * dp);
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = w;
        nodes[k] = -x;
        weights[k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = R::zero();
    }
    (nodes, weights)
}

/// `n`-point Gauss–Legendre rule on `[lo, hi]`, exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<QuadRule> {
    gauss_legendre_in::<f64>(n, lo, hi)
}

/// [`gauss_legendre`] with nodes and weights computed in precision `R`.
pub fn gauss_legendre_in<R: Real>(n: usize, lo: f64, hi: f64) -> Result<QuadRule<R>> {
    if n == 0 {
        return domain("quadrature rule needs at least one node");
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return domain(format!("invalid quadrature interval [{lo}, {hi}]"));
    }
    let (x, w) = reference_rule::<R>(n);
    let half = (R::from_f64(hi) - R::from_f64(lo)).mul_f64(0.5);
    let mid = (R::from_f64(hi) + R::from_f64(lo)).mul_f64(0.5);
    Ok(QuadRule {
        nodes: x.into_iter().map(|x| mid + half * x).collect(),
        weights: w.into_iter().map(|w| half * w).collect(),
        lo,
        hi,
    })
}

/// Equal panels of length at most `panel`, each carrying `per_panel` nodes.
pub fn composite_gauss_legendre<R: Real>(lo: f64, hi: f64, panel: f64, per_panel: usize) -> Result<QuadRule<R>> {
    if !(panel > 0.0) {
        return domain("panel length must be positive");
    }
    let base = gauss_legendre_in::<R>(per_panel, -1.0, 1.0)?;
    let count = ((hi - lo) / panel).ceil().max(1.0) as usize;
    let h = (hi - lo) / count as f64;
    let mut nodes = Vec::with_capacity(count * per_panel);
    let mut weights = Vec::with_capacity(count * per_panel);
    for p in 0..count {
        let mid = R::from_f64(lo + (p as f64 + 0.5) * h);
        for (&x, &w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + x.mul_f64(0.5 * h));
            weights.push(w.mul_f64(0.5 * h));
        }
    }
    Ok(QuadRule { nodes, weights, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Dd;
    use proptest::prelude::*;

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15 && (r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(gauss_legendre(4, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn integrates_exponential() {
        let r = gauss_legendre(20, 0.0, 1.0).unwrap();
        let got = r.integrate(f64::exp);
        assert!((got - (1f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn extended_precision_rule_is_exact_to_many_digits() {
        let r = gauss_legendre_in::<Dd>(40, 0.0, 2.0).unwrap();
        // integral of x^79 over [0, 2] = 2^80 / 80
        let got = r.integrate(|x| crate::real::powi(x, 79));
        let want = Dd::from(2f64.powi(80)) / Dd::from(80.0);
        assert!(((got - want) / want).abs().to_f64() < 1e-29);
        let total = r.weights.iter().fold(Dd::ZERO, |a, &w| a + w);
        assert!((total - Dd::from(2.0)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn composite_rule_covers_interval() {
        let r = composite_gauss_legendre::<f64>(0.0, 10.5, 1.0, 20).unwrap();
        assert_eq!(r.len(), 11 * 20);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 10.5).abs() < 1e-13);
        let got = r.integrate(|x| (-x).exp());
        assert!((got - (1.0 - (-10.5f64).exp())).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn weights_sum_to_length_and_nodes_ascend(n in 1usize..200, lo in -50.0f64..50.0, len in 0.01f64..100.0) {
            let r = gauss_legendre(n, lo, lo + len).unwrap();
            let s: f64 = r.weights.iter().sum();
            prop_assert!((s - len).abs() <= 1e-13 * len);
            prop_assert!(r.weights.iter().all(|&w| w > 0.0));
            prop_assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
            prop_assert!(r.nodes[0] > lo && r.nodes[n - 1] < lo + len);
        }

        #[test]
        fn exact_for_degree_two_n_minus_one(n in 1usize..40, k in 0u32..80) {
            prop_assume!(k < 2 * n as u32);
            let r = gauss_legendre(n, 0.0, 1.0).unwrap();
            let got = r.integrate(|x| x.powi(k as i32));
            prop_assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13);
        }
    }
}
