//! Chebyshev interpolation on the extrema grid `cos(j pi / n)`.
//!
//! Grids are nested under doubling of `n`, so adaptive refinement reuses
//! every previous sample.

use crate::error::{domain, Error, Result};

/// `sum_k c_k T_k(t)` with `t` the affine image of `[lo, hi]` onto `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebSeries {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

/// The `n + 1` interpolation points on `[lo, hi]`, in descending order.
pub fn cheb_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
    (0..=n)
        .map(|j| if 2 * j == n { mid } else { mid + half * (std::f64::consts::PI * j as f64 / n as f64).cos() })
        .collect()
}

fn check_interval(n: usize, lo: f64, hi: f64) -> Result<()> {
    if n == 0 {
        return domain("Chebyshev degree must be positive");
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return domain(format!("invalid interval [{lo}, {hi}]"));
    }
    Ok(())
}

/// Interpolates `f` at the `n + 1` points of [`cheb_points`].
pub fn cheb_fit(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<ChebSeries> {
    check_interval(n, lo, hi)?;
    let xs = cheb_points(n, lo, hi);
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    ChebSeries::from_values(&values, lo, hi)
}

impl ChebSeries {
    /// Interpolant through samples taken at [`cheb_points`]`(values.len() - 1, lo, hi)`.
    pub fn from_values(values: &[f64], lo: f64, hi: f64) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        check_interval(n, lo, hi)?;
        let xs = cheb_points(n, lo, hi);
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Fit { node: xs[j] });
        }
        let cos_table: Vec<f64> = (0..2 * n).map(|m| (std::f64::consts::PI * m as f64 / n as f64).cos()).collect();
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.5 * (values[0] + values[n] * cos_table[(k * n) % (2 * n)]);
            for (j, v) in values.iter().enumerate().take(n).skip(1) {
                acc += v * cos_table[(j * k) % (2 * n)];
            }
            *c = 2.0 * acc / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        Ok(ChebSeries { coeffs, lo, hi })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Clenshaw evaluation; points outside `[lo, hi]` extrapolate.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    pub fn derivative(&self) -> ChebSeries {
        let n = self.degree();
        let scale = 2.0 / (self.hi - self.lo);
        if n == 0 {
            return ChebSeries { coeffs: vec![0.0], lo: self.lo, hi: self.hi };
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..=n).rev() {
            let next = if k < n { d[k + 1] } else { 0.0 };
            d[k - 1] = next + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n);
        for c in &mut d {
            *c *= scale;
        }
        ChebSeries { coeffs: d, lo: self.lo, hi: self.hi }
    }

    /// Integral over `[lo, hi]`.
    pub fn integral(&self) -> f64 {
        let s: f64 = self.coeffs.iter().enumerate().step_by(2).map(|(k, c)| c * 2.0 / (1.0 - (k * k) as f64)).sum();
        0.5 * (self.hi - self.lo) * s
    }

    /// Largest magnitude among the last `count` coefficients, a proxy for
    /// the interpolation error.
    pub fn tail(&self, count: usize) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(count)..].iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

pub fn cheb_eval(series: &ChebSeries, x: f64) -> f64 {
    series.eval(x)
}

pub fn cheb_derivative(series: &ChebSeries) -> ChebSeries {
    series.derivative()
}

pub fn cheb_integral(series: &ChebSeries) -> f64 {
    series.integral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_polynomials_exactly() {
        let p = |x: f64| 3.0 - 2.0 * x + 0.5 * x.powi(3) - x.powi(5);
        let s = cheb_fit(p, -2.0, 3.0, 8).unwrap();
        for &x in &[-2.0, -0.3, 1.1, 3.0] {
            assert!((s.eval(x) - p(x)).abs() < 1e-11);
        }
        assert!(s.tail(3) < 1e-12);
    }

    #[test]
    fn calculus_on_exponential() {
        let s = cheb_fit(f64::exp, 0.0, 2.0, 30).unwrap();
        assert!((s.integral() - (2f64.exp() - 1.0)).abs() < 1e-13);
        let d = s.derivative();
        for &x in &[0.0, 0.7, 2.0] {
            assert!((d.eval(x) - x.exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn nonfinite_sample_reports_node() {
        let err = cheb_fit(|x| if x > 0.99 { f64::NAN } else { x }, 0.0, 1.0, 4).unwrap_err();
        match err {
            Error::Fit { node } => assert_eq!(node, 1.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn grids_nest_under_doubling() {
        let a = cheb_points(16, -1.5, 4.0);
        let b = cheb_points(32, -1.5, 4.0);
        for (j, x) in a.iter().enumerate() {
            assert!((x - b[2 * j]).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn integral_of_derivative_is_endpoint_difference(
            c in prop::collection::vec(-1.0f64..1.0, 2..40),
            lo in -5.0f64..0.0,
            len in 0.5f64..6.0,
        ) {
            let s = ChebSeries { coeffs: c, lo, hi: lo + len };
            let lhs = s.derivative().integral();
            let rhs = s.eval(lo + len) - s.eval(lo);
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn fit_interpolates_its_samples(k in 1.0f64..4.0, n in 4usize..64) {
            let f = |x: f64| (k * x).sin() + x * x;
            let s = cheb_fit(f, -1.0, 2.0, n).unwrap();
            for x in cheb_points(n, -1.0, 2.0) {
                prop_assert!((s.eval(x) - f(x)).abs() < 1e-12);
            }
        }
    }
}
