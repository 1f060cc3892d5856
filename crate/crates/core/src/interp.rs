//! One-dimensional interpolants shared by the potential tables and the
//! intensity average.

/// Natural cubic spline through `(x_i, y_i)` with strictly increasing `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Panics if fewer than two knots are given or `x` is not increasing;
    /// callers validate first.
    pub fn natural(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let mut c_prime = vec![0.0; n];
            let mut d_prime = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let c = h1 / 6.0;
                let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c_prime[i - 1];
                c_prime[i] = c / denom;
                d_prime[i] = (d - a * d_prime[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d_prime[i] - c_prime[i] * m[i + 1];
            }
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Value inside `[x_0, x_{n-1}]`; outside, the end cubic is continued.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        if b == 0.0 {
            return self.y[i];
        }
        if a == 0.0 {
            return self.y[i + 1];
        }
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
/// End slopes are the adjacent secants, so the interpolant is positively
/// homogeneous in the data and exact for linear data.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let d = monotone_slopes(x, y);
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        }
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let [h00, h10, h01, h11] = hermite_basis(s);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let [g00, g10, g01, g11] = hermite_basis_derivative(s);
        (g00 * self.y[i] + g01 * self.y[i + 1]) / h + g10 * self.d[i] + g11 * self.d[i + 1]
    }
}

/// Fritsch–Carlson slopes with harmonic-mean interior rule.
pub fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 2 && y.len() == n);
    let secant: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut d = vec![0.0; n];
    d[0] = secant[0];
    d[n - 1] = secant[n - 2];
    for i in 1..n - 1 {
        let (s0, s1) = (secant[i - 1], secant[i]);
        if s0 * s1 <= 0.0 {
            d[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
        }
    }
    d
}

/// Cubic Hermite basis `[h00, h10, h01, h11]` on the unit interval.
pub fn hermite_basis(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    ]
}

/// d/ds of [`hermite_basis`].
pub fn hermite_basis_derivative(s: f64) -> [f64; 4] {
    let s2 = s * s;
    [
        6.0 * s2 - 6.0 * s,
        3.0 * s2 - 4.0 * s + 1.0,
        -6.0 * s2 + 6.0 * s,
        3.0 * s2 - 2.0 * s,
    ]
}

/// Four-point Lagrange weights (value and first derivative) for evaluating
/// at `t` from nodes `xs`.
pub fn lagrange4(xs: [f64; 4], t: f64) -> ([f64; 4], [f64; 4]) {
    let mut w = [0.0; 4];
    let mut dw = [0.0; 4];
    for i in 0..4 {
        let mut denom = 1.0;
        for j in 0..4 {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut prod = 1.0;
        let mut dsum = 0.0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            let mut term = 1.0;
            for k in 0..4 {
                if k != i && k != j {
                    term *= t - xs[k];
                }
            }
            dsum += term;
            prod *= t - xs[j];
        }
        w[i] = prod / denom;
        dw[i] = dsum / denom;
    }
    (w, dw)
}

/// Start index of the four-node stencil around `t` in sorted `xs`.
pub fn stencil_start(xs: &[f64], t: f64) -> usize {
    let n = xs.len();
    debug_assert!(n >= 4);
    let i = xs.partition_point(|&v| v <= t);
    i.saturating_sub(2).min(n - 4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_hits_knots_exactly() {
        let x: Vec<f64> = (0..12).map(|i| 0.3 + i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 1.3).sin()).collect();
        let s = CubicSpline::natural(&x, &y);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(s.eval(*xi), *yi);
        }
    }

    #[test]
    fn spline_reproduces_linear_data() {
        let x = [0.0, 0.5, 1.7, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let s = CubicSpline::natural(&x, &y);
        for t in [0.1, 0.9, 1.8, 3.2] {
            assert!((s.eval(t) - (2.0 * t - 1.0)).abs() < 1e-14);
            assert!((s.derivative(t) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.0, 0.0, 0.1, 5.0, 5.1, 5.1];
        let p = MonotoneCubic::new(&x, &y);
        let mut prev = p.eval(0.0);
        for i in 1..=500 {
            let t = i as f64 * 0.01;
            let v = p.eval(t);
            assert!(v >= prev - 1e-14);
            assert!(p.derivative(t) >= -1e-12);
            prev = v;
        }
    }

    #[test]
    fn monotone_cubic_exact_for_linear() {
        let x = [0.0, 0.3, 1.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let p = MonotoneCubic::new(&x, &y);
        for t in [0.1, 0.5, 2.5, 3.9] {
            assert!((p.eval(t) - 3.0 * t).abs() < 1e-13);
            assert!((p.derivative(t) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_weights_reproduce_cubics() {
        let xs = [0.1, 0.4, 0.45, 1.0];
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let df = |t: f64| -2.0 + 1.5 * t * t;
        let t = 0.42;
        let (w, dw) = lagrange4(xs, t);
        let v: f64 = (0..4).map(|i| w[i] * f(xs[i])).sum();
        let d: f64 = (0..4).map(|i| dw[i] * f(xs[i])).sum();
        assert!((v - f(t)).abs() < 1e-14);
        assert!((d - df(t)).abs() < 1e-12);
    }
}
