//! Molecular-frame spectra, Abel projection onto the detector plane,
//! detector resolution and normalization.
//!
//! The projected image is
//!   P(k_ρ, α) = C ∫_{k_ρ}^∞ 𝒫(k, θ) / (k √(k² − k_ρ²)) dk,  cosθ = (k_ρ/k) cosα,
//! with C = 4/π so that ∫k_ρ dk_ρ ∫_0^{π/2} dα P equals ∫dk ∫dcosθ 𝒫.
//! Both the direct form and its integrated-by-parts form
//!   P = −(C/k_ρ) ∫_{k_ρ}^∞ arccos(k_ρ/k) d𝒫/dk dk
//! (total derivative along the path) are evaluated by product integration:
//! along each path, 𝒫 is interpolated by local cubics through its values at
//! the spectrum's k nodes, and the kernel is integrated exactly against that
//! interpolant with smoothing substitutions (u = √(k² − k_ρ²) for the direct
//! form, k = k_ρ/cosφ for the by-parts form). The weights depend on k_ρ only,
//! so each (k_ρ, α) cell costs one cubic θ-interpolation per k node.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::interp::{lagrange4, stencil_start};
use crate::propagator::MomentumAmplitude;
use crate::units::{Constants, VELOCITY_AU};

/// C in P = C ∫ 𝒫/(k√(k²−k_ρ²)) dk.
pub const ABEL_PREFACTOR: f64 = 4.0 / PI;

/// 𝒫(k, θ) ≥ 0 on uniform k (k_i = i·dk, i ≥ 1) × ascending cosθ nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularSpectrum {
    pub k: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row per k, column per cosθ node.
    pub values: Vec<f64>,
}

impl MolecularSpectrum {
    pub fn new(
        k: Vec<f64>,
        cos_theta: Vec<f64>,
        weights: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != k.len() * cos_theta.len() || weights.len() != cos_theta.len() {
            return Err(Error::validation("spectrum dimensions disagree"));
        }
        if k.len() < 4 || cos_theta.len() < 1 {
            return Err(Error::validation("spectrum needs at least 4 k samples"));
        }
        Ok(Self {
            k,
            cos_theta,
            weights,
            values,
        })
    }

    /// Spectrum f(k, cosθ) sampled on the given grids.
    pub fn from_fn(
        k: Vec<f64>,
        cos_theta: Vec<f64>,
        weights: Vec<f64>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values = k
            .iter()
            .flat_map(|&kk| cos_theta.iter().map(move |&x| (kk, x)))
            .map(|(kk, x)| f(kk, x))
            .collect();
        Self::new(k, cos_theta, weights, values)
    }

    pub fn n_k(&self) -> usize {
        self.k.len()
    }

    pub fn n_theta(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn dk(&self) -> f64 {
        self.k[1] - self.k[0]
    }

    pub fn at(&self, ik: usize, j: usize) -> f64 {
        self.values[ik * self.n_theta() + j]
    }

    /// ∫dk ∫dcosθ 𝒫.
    pub fn mass(&self) -> f64 {
        let nt = self.n_theta();
        self.values
            .chunks_exact(nt)
            .map(|row| {
                row.iter()
                    .zip(&self.weights)
                    .map(|(v, w)| v * w)
                    .sum::<f64>()
            })
            .sum::<f64>()
            * self.dk()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest value in the last k row relative to the peak.
    pub fn tail_ratio(&self) -> f64 {
        let nt = self.n_theta();
        let last = &self.values[(self.n_k() - 1) * nt..];
        let p = self.peak();
        if p == 0.0 {
            0.0
        } else {
            last.iter().cloned().fold(0.0, f64::max) / p
        }
    }

    /// 𝒫(k_i, x) by local cubic interpolation in cosθ; x is clamped to [−1, 1].
    fn row_interp(&self, ik: usize, x: f64) -> f64 {
        let nt = self.n_theta();
        let row = &self.values[ik * nt..(ik + 1) * nt];
        if nt < 4 {
            return linear(&self.cos_theta, row, x.clamp(-1.0, 1.0));
        }
        let x = x.clamp(-1.0, 1.0);
        let s = stencil_start(&self.cos_theta, x);
        let (w, _) = lagrange4(
            [
                self.cos_theta[s],
                self.cos_theta[s + 1],
                self.cos_theta[s + 2],
                self.cos_theta[s + 3],
            ],
            x,
        );
        w[0] * row[s] + w[1] * row[s + 1] + w[2] * row[s + 2] + w[3] * row[s + 3]
    }
}

fn linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let i = match xs.iter().position(|&v| v > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => xs.len() - 2,
    };
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - t) + ys[i + 1] * t
}

/// 𝒫 = Σ_channels |Φ̂_c|².
pub fn momentum_spectrum(acc: &MomentumAmplitude) -> MolecularSpectrum {
    let nk = acc.n_k();
    let nt = acc.n_theta();
    let mut values = vec![0.0; nk * nt];
    for j in 0..nt {
        for m in 0..nk {
            let idx = j * nk + m;
            values[m * nt + j] = acc.ground[idx].norm_sqr() + acc.excited[idx].norm_sqr();
        }
    }
    MolecularSpectrum {
        k: acc.k.clone(),
        cos_theta: acc.cos_theta.clone(),
        weights: acc.weights.clone(),
        values,
    }
}

/// P(k_ρ, α) on uniform grids, k_ρ from 0 and α over [0, π/2].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorImage {
    pub k_rho: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Row per k_ρ, column per α.
    pub values: Vec<f64>,
    /// m/s.
    pub beam_velocity: f64,
    /// m.
    pub drift_length: f64,
}

/// Output grid of a projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGrid {
    pub k_rho_max: f64,
    pub n_k_rho: usize,
    pub n_alpha: usize,
    pub beam_velocity: f64,
    pub drift_length: f64,
}

impl Default for DetectorGrid {
    fn default() -> Self {
        Self {
            k_rho_max: 12.0,
            n_k_rho: 1201,
            n_alpha: 181,
            beam_velocity: 1e6,
            drift_length: 1.0,
        }
    }
}

impl DetectorGrid {
    pub fn k_rho(&self) -> Vec<f64> {
        let d = self.k_rho_max / (self.n_k_rho - 1) as f64;
        (0..self.n_k_rho).map(|i| i as f64 * d).collect()
    }

    pub fn alpha(&self) -> Vec<f64> {
        let d = FRAC_PI_2 / (self.n_alpha - 1) as f64;
        (0..self.n_alpha).map(|i| i as f64 * d).collect()
    }

    pub fn empty(&self) -> DetectorImage {
        DetectorImage {
            k_rho: self.k_rho(),
            alpha: self.alpha(),
            values: vec![0.0; self.n_k_rho * self.n_alpha],
            beam_velocity: self.beam_velocity,
            drift_length: self.drift_length,
        }
    }
}

impl DetectorImage {
    pub fn n_k_rho(&self) -> usize {
        self.k_rho.len()
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.len()
    }

    pub fn at(&self, ik: usize, ia: usize) -> f64 {
        self.values[ik * self.n_alpha() + ia]
    }

    pub fn same_grid(&self, other: &DetectorImage) -> bool {
        self.k_rho == other.k_rho && self.alpha == other.alpha
    }

    /// ∫k_ρ dk_ρ ∫dα P by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        let na = self.n_alpha();
        let ang: Vec<f64> = self
            .values
            .chunks_exact(na)
            .map(|row| trapezoid(&self.alpha, row))
            .collect();
        let radial: Vec<f64> = ang.iter().zip(&self.k_rho).map(|(a, k)| a * k).collect();
        trapezoid(&self.k_rho, &radial)
    }

    pub fn scaled(&self, s: f64) -> DetectorImage {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

const GAUSS6_X: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GAUSS6_W: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// Knots k_i = i·dk (i ≥ 1) of the path interpolant. The interpolated
/// quantity is the density g = 𝒫/k², which stays smooth down to k = 0.
struct KGrid {
    dk: f64,
    /// Index of the last knot.
    n: usize,
}

impl KGrid {
    fn x(&self, i: usize) -> f64 {
        i as f64 * self.dk
    }

    /// Stencil start for interval [x_j, x_{j+1}], j ≥ 0.
    fn stencil(&self, j: usize) -> usize {
        j.saturating_sub(1).clamp(1, self.n - 3)
    }

    fn nodes(&self, s: usize) -> [f64; 4] {
        [self.x(s), self.x(s + 1), self.x(s + 2), self.x(s + 3)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    Direct,
    ByParts,
}

/// Weights w_i with P(a) = Σ_i w_i g(k_i) for one k_ρ = a.
fn path_weights(grid: &KGrid, a: f64, form: Form) -> Vec<f64> {
    let mut w = vec![0.0; grid.n + 1];
    let j0 = (a / grid.dk).floor() as usize;
    for j in j0..grid.n {
        let lo = grid.x(j).max(a);
        let hi = grid.x(j + 1);
        if hi <= lo {
            continue;
        }
        let s = grid.stencil(j);
        let nodes = grid.nodes(s);
        if form == Form::Direct || a == 0.0 {
            // u = √(k²−a²): k dk/√(k²−a²) = du, so P = C ∫ g du.
            let (ul, uh) = ((lo * lo - a * a).max(0.0).sqrt(), (hi * hi - a * a).sqrt());
            for (gx, gw) in GAUSS6_X.iter().zip(GAUSS6_W) {
                let u = ul + 0.5 * (uh - ul) * (1.0 + gx);
                let k = (u * u + a * a).sqrt();
                let (l, _) = lagrange4(nodes, k);
                let f = ABEL_PREFACTOR * gw * 0.5 * (uh - ul);
                for m in 0..4 {
                    w[s + m] += f * l[m];
                }
            }
        } else {
            // P = −(C/a) ∫ arccos(a/k) d(k²g)/dk dk with k = a/cosφ,
            // arccos(a/k) = φ, dk = a sinφ/cos²φ dφ.
            let (pl, ph) = ((a / lo).min(1.0).acos(), (a / hi).acos());
            for (gx, gw) in GAUSS6_X.iter().zip(GAUSS6_W) {
                let phi = pl + 0.5 * (ph - pl) * (1.0 + gx);
                let (sp, cp) = phi.sin_cos();
                let k = a / cp;
                let (l, dl) = lagrange4(nodes, k);
                let f = -ABEL_PREFACTOR * gw * 0.5 * (ph - pl) * phi * sp / (cp * cp);
                for m in 0..4 {
                    w[s + m] += f * (2.0 * k * l[m] + k * k * dl[m]);
                }
            }
        }
    }
    w
}

fn project(spec: &MolecularSpectrum, out: &DetectorGrid, form: Form) -> Result<DetectorImage> {
    let dk = spec.dk();
    let uniform = spec
        .k
        .iter()
        .enumerate()
        .all(|(i, &k)| (k - (i + 1) as f64 * dk).abs() < 1e-9 * dk.max(1.0));
    if !uniform {
        return Err(Error::domain("spectrum k grid must be k_i = i·dk"));
    }
    let k_top = *spec.k.last().unwrap();
    if out.k_rho_max >= k_top {
        return Err(Error::domain(format!(
            "requested k_ρ up to {} beyond spectrum support {k_top}",
            out.k_rho_max
        )));
    }
    if spec.tail_ratio() > 1e-6 {
        log::warn!(
            "spectrum tail at k = {k_top:.2} is {:.1e} of the peak; grid may be too small",
            spec.tail_ratio()
        );
    }
    let grid = KGrid { dk, n: spec.n_k() };
    let mut img = out.empty();
    let na = img.n_alpha();
    let cos_alpha: Vec<f64> = img.alpha.iter().map(|a| a.cos()).collect();
    let inv_k2: Vec<f64> = spec.k.iter().map(|k| 1.0 / (k * k)).collect();
    for (ik, &a) in img.k_rho.clone().iter().enumerate() {
        let w = path_weights(&grid, a, form);
        let first = w.iter().position(|&x| x != 0.0).unwrap_or(grid.n + 1);
        for (ia, &ca) in cos_alpha.iter().enumerate() {
            let c = a * ca;
            let mut sum = 0.0;
            for i in first.max(1)..=grid.n {
                sum += w[i] * spec.row_interp(i - 1, c / grid.x(i)) * inv_k2[i - 1];
            }
            img.values[ik * na + ia] = sum.max(0.0);
        }
    }
    Ok(img)
}

/// By-parts (regularized) projection.
pub fn abel_project(spec: &MolecularSpectrum, out: &DetectorGrid) -> Result<DetectorImage> {
    project(spec, out, Form::ByParts)
}

/// Projection with the singular kernel.
pub fn direct_abel(spec: &MolecularSpectrum, out: &DetectorGrid) -> Result<DetectorImage> {
    project(spec, out, Form::Direct)
}

/// 𝒜[f](x) = 2∫_x^∞ f(k) k dk/√(k²−x²) for f sampled at k_i = i·dk, i ≥ 1,
/// by the same product integration as [`direct_abel`].
pub fn abel_transform(f: &[f64], dk: f64, x: &[f64]) -> Vec<f64> {
    // With g = f, the direct projection is (C/2) 𝒜[f].
    let grid = KGrid { dk, n: f.len() };
    x.iter()
        .map(|&a| {
            let w = path_weights(&grid, a, Form::Direct);
            2.0 / ABEL_PREFACTOR * w[1..].iter().zip(f).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

/// Square moving average of full width `width` along k_ρ.
pub fn convolve_detector(img: &DetectorImage, width: f64) -> DetectorImage {
    let dk = img.k_rho[1] - img.k_rho[0];
    let bins = (width / dk).round() as usize;
    if width <= dk || bins < 2 {
        log::warn!("detector window {width} not wider than one k_ρ bin ({dk}); skipped");
        return img.clone();
    }
    let half = bins / 2;
    let n = img.n_k_rho();
    let na = img.n_alpha();
    let mut out = img.clone();
    for ia in 0..na {
        for i in 0..n {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let s: f64 = (lo..=hi).map(|m| img.values[m * na + ia]).sum();
            out.values[i * na + ia] = s / (hi - lo + 1) as f64;
        }
    }
    out
}

pub fn normalize(img: &DetectorImage) -> Result<DetectorImage> {
    let m = img.mass();
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::domain(format!("cannot normalize image of mass {m}")));
    }
    Ok(img.scaled(1.0 / m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutAxis {
    /// P(k_ρ, 0) vs k_ρ.
    Alpha0,
    /// P(k_ρ*, α) vs α.
    FixedKRho(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Grid value actually used for a fixed-k_ρ cut.
    pub snapped: Option<f64>,
}

impl Cut {
    pub fn to_csv(&self, x_name: &str) -> String {
        let mut s = format!("{x_name},P\n");
        for (x, y) in self.x.iter().zip(&self.y) {
            s.push_str(&format!("{x:.6e},{y:.12e}\n"));
        }
        s
    }

    /// ⟨cos²α⟩ of an angular cut over [0, π/2].
    pub fn cos2_expect(&self) -> f64 {
        let w: Vec<f64> = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(a, y)| a.cos().powi(2) * y)
            .collect();
        let m = trapezoid(&self.x, &self.y);
        if m == 0.0 {
            0.0
        } else {
            trapezoid(&self.x, &w) / m
        }
    }
}

pub fn cut(img: &DetectorImage, axis: CutAxis) -> Result<Cut> {
    let na = img.n_alpha();
    match axis {
        CutAxis::Alpha0 => Ok(Cut {
            x: img.k_rho.clone(),
            y: (0..img.n_k_rho()).map(|i| img.values[i * na]).collect(),
            snapped: None,
        }),
        CutAxis::FixedKRho(k) => {
            let (lo, hi) = (img.k_rho[0], *img.k_rho.last().unwrap());
            if !(k >= lo && k <= hi) {
                return Err(Error::domain(format!("k_ρ = {k} outside [{lo}, {hi}]")));
            }
            let i = img
                .k_rho
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - k).abs().total_cmp(&(b.1 - k).abs()))
                .map(|(i, _)| i)
                .unwrap();
            Ok(Cut {
                x: img.alpha.clone(),
                y: img.values[i * na..(i + 1) * na].to_vec(),
                snapped: Some(img.k_rho[i]),
            })
        }
    }
}

/// Relative error (k² − k_ρ²)^{1/2}/(m v) of taking the flight time as D/v,
/// at its largest (k_ρ = 0), for beam speed `v` in m/s.
pub fn flight_time_correction(k: f64, v: f64, consts: &Constants) -> f64 {
    k / (consts.fragment_mass * v / VELOCITY_AU)
}

/// Warns when the D/v flight-time approximation is worse than 1%.
pub fn check_flight_time(k_max: f64, v: f64, consts: &Constants) -> bool {
    let c = flight_time_correction(k_max, v, consts);
    if c >= 1e-2 {
        log::warn!("flight-time correction {c:.3e} at k = {k_max} for v = {v} m/s exceeds 1%");
        false
    } else {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::AngularBasis;

    fn iso(dk: f64, kmax: f64, f: impl Fn(f64) -> f64) -> MolecularSpectrum {
        let n = (kmax / dk).round() as usize;
        let k: Vec<f64> = (1..=n).map(|i| i as f64 * dk).collect();
        let b = AngularBasis::new(0, 8).unwrap();
        MolecularSpectrum::from_fn(k, b.nodes().to_vec(), b.weights().to_vec(), |k, _| f(k))
            .unwrap()
    }

    fn small_grid(kmax: f64, n: usize) -> DetectorGrid {
        DetectorGrid {
            k_rho_max: kmax,
            n_k_rho: n,
            n_alpha: 7,
            ..Default::default()
        }
    }

    #[test]
    fn gaussian_pair_both_forms() {
        let spec = iso(0.02, 8.0, |k| k * k * (-k * k).exp());
        let g = small_grid(3.0, 31);
        for img in [
            abel_project(&spec, &g).unwrap(),
            direct_abel(&spec, &g).unwrap(),
        ] {
            for ia in 0..7 {
                let p0 = img.at(0, ia);
                for (ik, &x) in img.k_rho.iter().enumerate() {
                    let r = img.at(ik, ia) / p0;
                    assert!((r - (-x * x).exp()).abs() < 1e-4, "x={x}: {r}");
                }
            }
        }
    }

    #[test]
    fn mass_identity() {
        let spec = iso(0.02, 9.0, |k| k * k * (-(k - 3.0) * (k - 3.0)).exp());
        let g = DetectorGrid {
            k_rho_max: 8.0,
            n_k_rho: 801,
            n_alpha: 91,
            ..Default::default()
        };
        let img = abel_project(&spec, &g).unwrap();
        assert!((img.mass() / spec.mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn one_dimensional_gaussian() {
        let dk = 0.01;
        let f: Vec<f64> = (1..=800)
            .map(|i| (-(i as f64 * dk).powi(2)).exp())
            .collect();
        let xs = [0.0, 0.5, 1.0, 2.0];
        for (x, a) in xs.iter().zip(abel_transform(&f, dk, &xs)) {
            let want = PI.sqrt() * (-x * x).exp();
            assert!((a - want).abs() < 1e-5, "{x}: {a} vs {want}");
        }
    }

    #[test]
    fn zero_spectrum_zero_image() {
        let spec = iso(0.05, 5.0, |_| 0.0);
        let img = abel_project(&spec, &small_grid(4.0, 9)).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0));
        assert!(normalize(&img).is_err());
    }

    #[test]
    fn out_of_support_rejected() {
        let spec = iso(0.05, 5.0, |k| (-k * k).exp());
        assert!(abel_project(&spec, &small_grid(6.0, 9)).is_err());
    }

    fn flat(n_k: usize, n_a: usize, f: impl Fn(usize, usize) -> f64) -> DetectorImage {
        let g = DetectorGrid {
            k_rho_max: (n_k - 1) as f64 * 0.01,
            n_k_rho: n_k,
            n_alpha: n_a,
            ..Default::default()
        };
        let mut img = g.empty();
        for i in 0..n_k {
            for a in 0..n_a {
                img.values[i * n_a + a] = f(i, a);
            }
        }
        img
    }

    #[test]
    fn gate_spreads_spike() {
        let img = flat(201, 3, |i, _| if i == 100 { 1.0 } else { 0.0 });
        let out = convolve_detector(&img, 0.07);
        let col: Vec<f64> = (0..201).map(|i| out.at(i, 1)).collect();
        let nz: Vec<usize> = (0..201).filter(|&i| col[i] > 0.0).collect();
        assert_eq!(nz, (97..=103).collect::<Vec<_>>());
        assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let two = flat(201, 1, |i, _| if i == 80 || i == 100 { 1.0 } else { 0.0 });
        let out = convolve_detector(&two, 0.07);
        assert_eq!(out.at(90, 0), 0.0);
    }

    #[test]
    fn gate_keeps_constant() {
        let img = flat(50, 4, |_, _| 2.5);
        let out = convolve_detector(&img, 0.07);
        assert!(out.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert_eq!(convolve_detector(&img, 0.005), img);
    }

    #[test]
    fn normalization_properties() {
        let img = flat(40, 9, |i, a| 1.0 + (i * a) as f64 * 0.1);
        let n = normalize(&img).unwrap();
        assert!((n.mass() - 1.0).abs() < 1e-12);
        let again = normalize(&n).unwrap();
        assert!((again.values[17] / n.values[17] - 1.0).abs() < 1e-9);
        let seven = normalize(&img.scaled(7.0)).unwrap();
        for (a, b) in seven.values.iter().zip(&n.values) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn cuts() {
        let img = flat(601, 5, |i, _| i as f64);
        let c0 = cut(&img, CutAxis::Alpha0).unwrap();
        for a in 0..5 {
            let other: Vec<f64> = (0..601).map(|i| img.at(i, a)).collect();
            assert_eq!(c0.y, other);
        }
        let c = cut(&img, CutAxis::FixedKRho(5.5)).unwrap();
        assert!((c.snapped.unwrap() - 5.5).abs() < 1e-12);
        assert!(cut(&img, CutAxis::FixedKRho(6.5)).is_err());
        let z = cut(&flat(10, 3, |_, _| 0.0), CutAxis::FixedKRho(0.03)).unwrap();
        assert!(z.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flight_time_at_beam_speed() {
        let c = Constants::hydrogen();
        assert!(flight_time_correction(8.0, 1e6, &c) < 1e-2);
        assert!(!check_flight_time(12.0, 1e6, &c));
    }

    #[test]
    fn single_bin_spectrum() {
        let b = AngularBasis::new(0, 4).unwrap();
        let mut acc = MomentumAmplitude::zeros(vec![0.1, 0.2, 0.3, 0.4, 0.5], &b, 0.0);
        acc.excited[2 * 5 + 3] = num_complex::Complex64::new(0.3, -0.4);
        let s = momentum_spectrum(&acc);
        for ik in 0..5 {
            for j in 0..4 {
                let want = if ik == 3 && j == 2 { 0.25 } else { 0.0 };
                assert!((s.at(ik, j) - want).abs() < 1e-15);
            }
        }
    }
}
