//! Normalized associated-Legendre basis at fixed M and its quadrature.
//!
//! Nodes are the Gauss points for the weight (1−x²)^M, so every product
//! P̄_l^M P̄_l'^M (a polynomial times (1−x²)^M) is integrated exactly and the
//! n-point transform is square and unitary. For M = 0 these are the
//! Gauss–Legendre points. The transforms fold the ±x node pairs through the
//! parity P̄_l^M(−x) = (−1)^{l−M} P̄_l^M(x).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AngularBasis {
    m_n: usize,
    n_l: usize,
    /// cosθ_j, ascending.
    nodes: Vec<f64>,
    /// ∫_{-1}^{1} f dx ≈ Σ w_j f(x_j).
    weights: Vec<f64>,
    /// P̄_{m+l}^m(x_j), row l, column j.
    legendre: Vec<f64>,
    fold: Fold,
}

/// Parity-split transform matrices over the first half of the nodes.
#[derive(Debug, Clone)]
struct Fold {
    half: usize,
    mid: Option<usize>,
    /// Basis indices with even / odd parity.
    even: Vec<usize>,
    odd: Vec<usize>,
    /// w_h·P̄_l(x_h), row per parity member, column h (mid appended for even).
    fwd_even: Vec<f64>,
    fwd_odd: Vec<f64>,
    /// P̄_l(x_h), same layout.
    bwd_even: Vec<f64>,
    bwd_odd: Vec<f64>,
}

/// Normalized P̄_l^m(x) for l = m … m+n−1, with ∫ (P̄_l^m)² dx = 1.
pub fn normalized_legendre(m: usize, n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=m {
        let k = k as f64;
        pmm *= ((2.0 * k + 1.0) / (2.0 * k)).sqrt() * s;
    }
    out.push(pmm);
    if n == 1 {
        return out;
    }
    let mf = m as f64;
    out.push(x * (2.0 * mf + 3.0).sqrt() * pmm);
    for i in 2..n {
        let l = (m + i) as f64;
        let a = ((4.0 * l * l - 1.0) / (l * l - mf * mf)).sqrt();
        let lm = l - 1.0;
        let b = ((lm * lm - mf * mf) / (4.0 * lm * lm - 1.0)).sqrt();
        let next = a * (x * out[i - 1] - b * out[i - 2]);
        out.push(next);
    }
    out
}

fn ln_gamma_half_integer_ratio(m: usize) -> f64 {
    // ln[√π Γ(m+1)/Γ(m+3/2)] = ln ∫_{-1}^{1} (1−x²)^m dx
    let mut acc = 2.0f64.ln();
    for k in 1..=m {
        let k = k as f64;
        acc += (2.0 * k).ln() - (2.0 * k + 1.0).ln();
    }
    acc
}

/// Gauss nodes and weights for ∫_{-1}^{1} (1−x²)^m f(x) dx (Golub–Welsch).
pub fn gegenbauer_quadrature(m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mf = m as f64;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let k = i as f64;
        let beta = k * (k + 2.0 * mf) / (4.0 * (k + mf + 0.5) * (k + mf - 0.5));
        let b = beta.sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mu0 = ln_gamma_half_integer_ratio(m).exp();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Polish each node with Newton steps on P̄_{m+n}^m, whose zeros these are.
    for p in pairs.iter_mut() {
        for _ in 0..3 {
            let (f, df) = legendre_and_derivative(m, n, p.0);
            if df == 0.0 {
                break;
            }
            p.0 -= f / df;
        }
    }
    // Enforce the exact ±x symmetry the parity fold relies on.
    for j in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - j].0 - pairs[j].0);
        let w = 0.5 * (pairs[n - 1 - j].1 + pairs[j].1);
        pairs[j] = (-x, w);
        pairs[n - 1 - j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// P̄_{m+n}^m(x)/(1−x²)^{m/2} and its x-derivative: a degree-n polynomial.
fn legendre_and_derivative(m: usize, n: usize, x: f64) -> (f64, f64) {
    // Recurrence on q_l = P̄_l^m/(1−x²)^{m/2}, which shares the three-term form.
    let mf = m as f64;
    let mut q0 = 1.0;
    let mut d0 = 0.0;
    let mut q1 = x * (2.0 * mf + 3.0).sqrt();
    let mut d1 = (2.0 * mf + 3.0).sqrt();
    if n == 0 {
        return (q0, d0);
    }
    for i in 2..=n {
        let l = (m + i) as f64;
        let a = ((4.0 * l * l - 1.0) / (l * l - mf * mf)).sqrt();
        let lm = l - 1.0;
        let b = ((lm * lm - mf * mf) / (4.0 * lm * lm - 1.0)).sqrt();
        let q2 = a * (x * q1 - b * q0);
        let d2 = a * (q1 + x * d1 - b * d0);
        q0 = q1;
        d0 = d1;
        q1 = q2;
        d1 = d2;
    }
    (q1, d1)
}

impl AngularBasis {
    pub fn new(m_n: usize, n_l: usize) -> Result<Self> {
        if n_l == 0 {
            return Err(Error::validation("angular basis needs n_l >= 1"));
        }
        let (nodes, _) = gegenbauer_quadrature(m_n, n_l);
        let mut legendre = vec![0.0; n_l * n_l];
        let mut weights = vec![0.0; n_l];
        for (j, &x) in nodes.iter().enumerate() {
            let p = normalized_legendre(m_n, n_l, x);
            // Christoffel number of the orthonormal set, divided by (1−x²)^M.
            weights[j] = 1.0 / p.iter().map(|v| v * v).sum::<f64>();
            for (l, v) in p.into_iter().enumerate() {
                legendre[l * n_l + j] = v;
            }
        }
        for j in 0..n_l / 2 {
            let w = 0.5 * (weights[j] + weights[n_l - 1 - j]);
            weights[j] = w;
            weights[n_l - 1 - j] = w;
        }
        let fold = Fold::new(n_l, &weights, &legendre);
        Ok(Self {
            m_n,
            n_l,
            nodes,
            weights,
            legendre,
            fold,
        })
    }

    pub fn m_n(&self) -> usize {
        self.m_n
    }

    pub fn n_l(&self) -> usize {
        self.n_l
    }

    pub fn n_theta(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Angular momentum l of basis index i.
    pub fn l(&self, i: usize) -> usize {
        self.m_n + i
    }

    /// P̄_{m+i}^m at node j.
    pub fn legendre(&self, i: usize, j: usize) -> f64 {
        self.legendre[i * self.n_l + j]
    }

    /// Σ_j w_j P̄_a(x_j) P̄_b(x_j).
    pub fn overlap_matrix(&self) -> Vec<f64> {
        let n = self.n_l;
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                out[a * n + b] = (0..n)
                    .map(|j| self.weights[j] * self.legendre(a, j) * self.legendre(b, j))
                    .sum();
            }
        }
        out
    }

    /// Node values → coefficients, acting on rows of length `width`.
    /// `input` is n_θ rows, `out` n_l rows; `scratch` needs 2·half rows.
    pub fn forward(&self, input: &[f64], out: &mut [f64], width: usize, scratch: &mut Vec<f64>) {
        let f = &self.fold;
        let n = self.n_l;
        debug_assert_eq!(input.len(), n * width);
        debug_assert_eq!(out.len(), n * width);
        let h = f.half;
        let ne = h + usize::from(f.mid.is_some());
        scratch.resize((ne + h) * width, 0.0);
        let (sum, diff) = scratch.split_at_mut(ne * width);
        for j in 0..h {
            let a = &input[j * width..(j + 1) * width];
            let b = &input[(n - 1 - j) * width..(n - j) * width];
            let s = &mut sum[j * width..(j + 1) * width];
            let d = &mut diff[j * width..(j + 1) * width];
            for i in 0..width {
                s[i] = a[i] + b[i];
                d[i] = a[i] - b[i];
            }
        }
        if let Some(mid) = f.mid {
            sum[h * width..(h + 1) * width].copy_from_slice(&input[mid * width..(mid + 1) * width]);
        }
        contract(&f.even, &f.fwd_even, ne, sum, out, width);
        contract(&f.odd, &f.fwd_odd, h, diff, out, width);
    }

    /// Coefficients → node values; inverse of [`forward`](Self::forward).
    pub fn backward(&self, coeffs: &[f64], out: &mut [f64], width: usize, scratch: &mut Vec<f64>) {
        let f = &self.fold;
        let n = self.n_l;
        let h = f.half;
        let ne = h + usize::from(f.mid.is_some());
        scratch.resize((ne + h) * width, 0.0);
        let (se, so) = scratch.split_at_mut(ne * width);
        expand(&f.even, &f.bwd_even, ne, coeffs, se, width);
        expand(&f.odd, &f.bwd_odd, h, coeffs, so, width);
        for j in 0..h {
            let e = &se[j * width..(j + 1) * width];
            let o = &so[j * width..(j + 1) * width];
            let (lo, hi) = out.split_at_mut((n - 1 - j) * width);
            let a = &mut lo[j * width..(j + 1) * width];
            let b = &mut hi[..width];
            for i in 0..width {
                a[i] = e[i] + o[i];
                b[i] = e[i] - o[i];
            }
        }
        if let Some(mid) = f.mid {
            out[mid * width..(mid + 1) * width].copy_from_slice(&se[h * width..(h + 1) * width]);
        }
    }
}

impl Fold {
    fn new(n: usize, weights: &[f64], legendre: &[f64]) -> Self {
        let half = n / 2;
        let mid = (n % 2 == 1).then_some(half);
        let even: Vec<usize> = (0..n).filter(|i| i % 2 == 0).collect();
        let odd: Vec<usize> = (0..n).filter(|i| i % 2 == 1).collect();
        let ne = half + usize::from(mid.is_some());
        let build = |set: &[usize], cols: usize, weighted: bool| {
            let mut m = vec![0.0; set.len() * cols];
            for (r, &l) in set.iter().enumerate() {
                for h in 0..cols {
                    let j = if h < half { h } else { half };
                    let p = legendre[l * n + j];
                    m[r * cols + h] = if weighted { weights[j] * p } else { p };
                }
            }
            m
        };
        Self {
            half,
            mid,
            fwd_even: build(&even, ne, true),
            fwd_odd: build(&odd, half, true),
            bwd_even: build(&even, ne, false),
            bwd_odd: build(&odd, half, false),
            even,
            odd,
        }
    }
}

/// out[set[r]] = Σ_h mat[r,h]·rows[h].
fn contract(set: &[usize], mat: &[f64], cols: usize, rows: &[f64], out: &mut [f64], width: usize) {
    for (r, &l) in set.iter().enumerate() {
        let dst = &mut out[l * width..(l + 1) * width];
        dst.fill(0.0);
        for h in 0..cols {
            axpy(mat[r * cols + h], &rows[h * width..(h + 1) * width], dst);
        }
    }
}

/// rows[h] = Σ_r mat[r,h]·coeffs[set[r]].
fn expand(set: &[usize], mat: &[f64], cols: usize, coeffs: &[f64], rows: &mut [f64], width: usize) {
    rows[..cols * width].fill(0.0);
    for (r, &l) in set.iter().enumerate() {
        let src = &coeffs[l * width..(l + 1) * width];
        for h in 0..cols {
            axpy(
                mat[r * cols + h],
                src,
                &mut rows[h * width..(h + 1) * width],
            );
        }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_on_quadrature() {
        for m in [0usize, 1, 2, 5] {
            for n in [1usize, 2, 7, 32, 48] {
                let b = AngularBasis::new(m, n).unwrap();
                let s = b.overlap_matrix();
                for a in 0..n {
                    for c in 0..n {
                        let want = if a == c { 1.0 } else { 0.0 };
                        assert!(
                            (s[a * n + c] - want).abs() < 1e-12,
                            "m={m} n={n} ({a},{c}) = {}",
                            s[a * n + c]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn legendre_low_orders() {
        let x: f64 = 0.3;
        let p = normalized_legendre(0, 3, x);
        assert!((p[0] - (0.5f64).sqrt()).abs() < 1e-15);
        assert!((p[1] - (1.5f64).sqrt() * x).abs() < 1e-15);
        assert!((p[2] - (2.5f64).sqrt() * 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
        let q = normalized_legendre(1, 1, x);
        assert!((q[0] - 3f64.sqrt() / 2.0 * (1.0 - x * x).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two_for_m0() {
        let b = AngularBasis::new(0, 20).unwrap();
        assert!((b.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(b.nodes().iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn transform_round_trip() {
        for (m, n) in [(0usize, 8usize), (1, 7), (3, 12)] {
            let b = AngularBasis::new(m, n).unwrap();
            let width = 6;
            let input: Vec<f64> = (0..n * width)
                .map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1)
                .collect();
            let mut c = vec![0.0; n * width];
            let mut back = vec![0.0; n * width];
            let mut s = Vec::new();
            b.forward(&input, &mut c, width, &mut s);
            b.backward(&c, &mut back, width, &mut s);
            for (a, z) in input.iter().zip(&back) {
                assert!((a - z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_matches_unfolded_sum() {
        let b = AngularBasis::new(2, 9).unwrap();
        let n = 9;
        let input: Vec<f64> = (0..n).map(|j| (j as f64 * 0.7).sin()).collect();
        let mut c = vec![0.0; n];
        let mut s = Vec::new();
        b.forward(&input, &mut c, 1, &mut s);
        for l in 0..n {
            let direct: f64 = (0..n)
                .map(|j| b.weights()[j] * b.legendre(l, j) * input[j])
                .sum();
            assert!((c[l] - direct).abs() < 1e-13);
        }
    }
}
