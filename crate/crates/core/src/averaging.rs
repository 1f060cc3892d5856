//! Averages over M_N, rotation, vibration and the focal-volume intensity.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::interp::{hermite_basis_derivative, monotone_slopes};
use crate::spectra::DetectorImage;
use crate::units::K_BOLTZMANN;

/// Laser focus and target geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusModel {
    /// mJ.
    pub e0: f64,
    /// fs.
    pub t_ac: f64,
    /// nm.
    pub wavelength: f64,
    /// mm.
    pub focal_length: f64,
    /// mm.
    pub b_x: f64,
    pub b_y: f64,
    /// Half-width L of the ion beam, μm.
    pub half_width: f64,
    /// W/cm².
    pub override_i0: Option<f64>,
}

impl FocusModel {
    /// 785 nm, 240 fs, 0.7 mJ focus with the peak pinned to 16 TW/cm².
    pub fn reference() -> Self {
        Self {
            e0: 0.7,
            t_ac: 240.0,
            wavelength: 785.0,
            focal_length: 1000.0,
            b_x: 2.6,
            b_y: 2.4,
            half_width: 50.0,
            override_i0: Some(1.6e13),
        }
    }
}

/// (r_x, r_y) in μm from r = λf/(2πb).
pub fn focal_radii(m: &FocusModel) -> (f64, f64) {
    let lambda_mm = m.wavelength * 1e-6;
    let r = |b: f64| lambda_mm * m.focal_length / (2.0 * PI * b) * 1e3;
    (r(m.b_x), r(m.b_y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakIntensity {
    /// Value used downstream, W/cm².
    pub value: f64,
    /// 2√(2ln2) E₀/(π^{3/2} r_x r_y t_ac), W/cm².
    pub formula: f64,
    pub overridden: bool,
}

pub fn peak_intensity(m: &FocusModel) -> PeakIntensity {
    let (rx, ry) = focal_radii(m);
    let e0 = m.e0 * 1e-3;
    let (rx, ry) = (rx * 1e-4, ry * 1e-4);
    let t = m.t_ac * 1e-15;
    let formula = 2.0 * (2.0 * LN_2).sqrt() * e0 / (PI.powf(1.5) * rx * ry * t);
    match m.override_i0 {
        Some(v) => PeakIntensity {
            value: v,
            formula,
            overridden: true,
        },
        None => PeakIntensity {
            value: formula,
            formula,
            overridden: false,
        },
    }
}

/// Peak intensity at the beam edge, I₀ exp(−L²/r_x²).
pub fn edge_intensity(m: &FocusModel) -> f64 {
    let (rx, _) = focal_radii(m);
    peak_intensity(m).value * (-(m.half_width / rx).powi(2)).exp()
}

/// `n` geometric samples from I_L to I₀.
pub fn intensity_grid(m: &FocusModel, n: usize) -> Vec<f64> {
    let hi = peak_intensity(m).value;
    let lo = edge_intensity(m);
    if n == 1 {
        return vec![hi];
    }
    let r = (hi / lo).ln();
    let mut v: Vec<f64> = (0..n)
        .map(|i| lo * (r * i as f64 / (n - 1) as f64).exp())
        .collect();
    v[n - 1] = hi;
    v[0] = lo;
    v
}

/// Initial vibrational and rotational populations.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    pub a_v: BTreeMap<usize, f64>,
    /// K.
    pub t_rot: BTreeMap<usize, f64>,
    pub n_max: usize,
}

impl PopulationModel {
    pub fn new(a_v: BTreeMap<usize, f64>, t_rot: BTreeMap<usize, f64>, n_max: usize) -> Result<Self> {
        if !a_v.values().any(|&a| a > 0.0) {
            return Err(Error::Config("population file has no a_v > 0".into()));
        }
        if let Some((v, a)) = a_v.iter().find(|(_, &a)| !(a >= 0.0)) {
            return Err(Error::Config(format!("a_v for v={v} is {a}")));
        }
        for v in a_v.keys() {
            match t_rot.get(v) {
                Some(&t) if t > 0.0 => {}
                _ => return Err(Error::Config(format!("rotational temperature for v={v} must be > 0"))),
            }
        }
        Ok(Self { a_v, t_rot, n_max })
    }

    /// Lines "v a_v T_v"; '#' starts a comment.
    pub fn parse(text: &str, n_max: usize) -> Result<Self> {
        let mut a_v = BTreeMap::new();
        let mut t_rot = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Config(format!("population line {}: expected 'v a_v T_v'", ln + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            let v: usize = f[0].parse().map_err(|_| bad())?;
            let a: f64 = f[1].parse().map_err(|_| bad())?;
            let t: f64 = f[2].parse().map_err(|_| bad())?;
            if a_v.insert(v, a).is_some() {
                return Err(Error::Config(format!("population line {}: duplicate v={v}", ln + 1)));
            }
            t_rot.insert(v, t);
        }
        Self::new(a_v, t_rot, n_max)
    }

    /// Vibrational levels with a_v > 0, ascending.
    pub fn active(&self) -> Vec<usize> {
        self.a_v.iter().filter(|(_, &a)| a > 0.0).map(|(&v, _)| v).collect()
    }
}

/// Nuclear-spin weight: 1 for even N, 3 for odd N.
pub fn spin_weight(n_rot: usize) -> f64 {
    if n_rot % 2 == 0 {
        1.0
    } else {
        3.0
    }
}

/// b_N = exp(−ΔE/k_B T) for the given shift (hartree) and temperature (K).
pub fn boltzmann_factor(shift: f64, t_rot: f64) -> f64 {
    (-shift / (K_BOLTZMANN * t_rot)).exp()
}

/// Normalized b_N g_N for N = 0…shifts.len()−1.
pub fn rotational_weights(shifts: &[f64], t_rot: f64) -> Vec<f64> {
    let raw: Vec<f64> = shifts
        .iter()
        .enumerate()
        .map(|(n, &s)| boltzmann_factor(s, t_rot) * spin_weight(n))
        .collect();
    let q: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / q).collect()
}

/// Share of the partition sum carried by the last N.
pub fn truncation_tail(shifts: &[f64], t_rot: f64) -> f64 {
    rotational_weights(shifts, t_rot).last().copied().unwrap_or(0.0)
}

/// Σ_k w_k·img_k in a fixed order; all images must share one grid.
pub fn weighted_sum(items: &[(f64, &DetectorImage)]) -> Result<DetectorImage> {
    let (_, first) = items
        .first()
        .ok_or_else(|| Error::Incomplete("no images to combine".into()))?;
    let mut out = (*first).clone();
    out.values.iter_mut().for_each(|v| *v = 0.0);
    for (w, img) in items {
        if !img.same_grid(first) {
            return Err(Error::Config("images do not share grids".into()));
        }
        for (o, v) in out.values.iter_mut().zip(&img.values) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// (P₀ + 2 Σ_{M≥1} P_M)/(2N+1).
pub fn mn_average(images: &BTreeMap<usize, DetectorImage>, n_rot: usize) -> Result<DetectorImage> {
    let norm = (2 * n_rot + 1) as f64;
    let mut items = Vec::with_capacity(n_rot + 1);
    for m in 0..=n_rot {
        let img = images
            .get(&m)
            .ok_or_else(|| Error::Incomplete(format!("missing M_N = {m} for N = {n_rot}")))?;
        let c = if m == 0 { 1.0 } else { 2.0 };
        items.push((c / norm, img));
    }
    weighted_sum(&items)
}

/// Σ_N b_N g_N P_N / Σ_N b_N g_N over N = 0…n_max.
pub fn rotational_average(
    images: &BTreeMap<usize, DetectorImage>,
    v: usize,
    pops: &PopulationModel,
    shifts: &BTreeMap<usize, f64>,
) -> Result<DetectorImage> {
    let t = *pops
        .t_rot
        .get(&v)
        .ok_or_else(|| Error::Config(format!("no rotational temperature for v={v}")))?;
    let mut sh = Vec::with_capacity(pops.n_max + 1);
    for n in 0..=pops.n_max {
        sh.push(*shifts.get(&n).ok_or_else(|| {
            Error::Incomplete(format!("missing level energy for v={v}, N={n}"))
        })?);
    }
    let tail = truncation_tail(&sh, t);
    if tail > 1e-3 {
        log::warn!("v={v}: rotational tail weight {tail:.2e} at N={} exceeds 1e-3", pops.n_max);
    }
    let w = rotational_weights(&sh, t);
    let mut items = Vec::with_capacity(w.len());
    for (n, wn) in w.iter().enumerate() {
        let img = images
            .get(&n)
            .ok_or_else(|| Error::Incomplete(format!("missing image for v={v}, N={n}")))?;
        items.push((*wn, img));
    }
    weighted_sum(&items)
}

/// Σ_v a(v) P_v / Σ_v a(v).
pub fn vibrational_average(
    images: &BTreeMap<usize, DetectorImage>,
    pops: &PopulationModel,
) -> Result<DetectorImage> {
    let mut total = 0.0;
    for v in images.keys() {
        total += pops
            .a_v
            .get(v)
            .ok_or_else(|| Error::Config(format!("no population a_v for v={v}")))?;
    }
    if !(total > 0.0) {
        return Err(Error::Config("vibrational populations sum to zero".into()));
    }
    let items: Vec<(f64, &DetectorImage)> = images.iter().map(|(v, img)| (pops.a_v[v] / total, img)).collect();
    weighted_sum(&items)
}

/// Linear functional S[P] = Σ α_k P_k + β_k d_k of the monotone cubic
/// through (0, 0), (I_1, P_1), …, (I_n, P_n), d_k its slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityWeights {
    /// Knots including I = 0.
    pub knots: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_26,
];

/// Composite 8-point Gauss–Legendre nodes and weights on [a, b].
fn gauss_panels(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in GL8_X.iter().zip(GL8_W) {
            out.push((lo + 0.5 * h * (1.0 + x), 0.5 * h * w));
        }
    }
    out
}

/// Where the Gaussian substitution variables are cut off (e^{−36}).
const S_MAX: f64 = 6.0;

impl IntensityWeights {
    /// Focal-volume functional
    ///   S[P] = 4 ∫_0^L dx ∫_0^∞ dy P(I₀ e^{−x²/r_x² − y²/r_y²})   (μm²),
    /// evaluated in by-parts form on both axes:
    ///   ∫_0^∞ P(J e^{−t²}) dt = ∫_0^J √(ln(J/I)) P'(I) dI,
    ///   ∫_0^{s_L} Y(I₀e^{−s²}) ds = s_L Y(I_L) + ∫_{I_L}^{I₀} √(ln(I₀/J)) Y'(J) dJ,
    /// with the integrals taken in the Gaussian variables t and s.
    pub fn new(model: &FocusModel, intensities: &[f64]) -> Result<Self> {
        if intensities.len() < 4 {
            return Err(Error::domain(format!(
                "intensity average needs at least 4 samples, got {}",
                intensities.len()
            )));
        }
        if intensities.windows(2).any(|w| !(w[1] > w[0])) || !(intensities[0] > 0.0) {
            return Err(Error::domain("intensity samples must be positive and increasing"));
        }
        let i0 = peak_intensity(model).value;
        let i_l = edge_intensity(model);
        let top = *intensities.last().unwrap();
        if (top - i0).abs() > 1e-9 * i0 || intensities[0] > i_l * (1.0 + 1e-9) {
            return Err(Error::domain(format!(
                "intensity samples must span [I_L, I₀] = [{i_l:.4e}, {i0:.4e}], got [{:.4e}, {top:.4e}]",
                intensities[0]
            )));
        }
        let (rx, ry) = focal_radii(model);
        let s_l = model.half_width / rx;
        let mut knots = Vec::with_capacity(intensities.len() + 1);
        knots.push(0.0);
        knots.extend_from_slice(intensities);
        let n = knots.len();
        let mut w = Self {
            knots,
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
        };
        let scale = 4.0 * rx * ry;
        let inner = gauss_panels(0.0, S_MAX, 96);
        // Boundary term s_L·Y(I_L), Y(J) = ∫_0^∞ 2t² J e^{−t²} P'(J e^{−t²}) dt.
        for &(t, wt) in &inner {
            let e = (-t * t).exp();
            w.add_derivative(i_l * e, scale * s_l * wt * 2.0 * t * t * i_l * e);
        }
        // ∫_0^{s_L} 2s² I₀ e^{−s²} Y'(I₀e^{−s²}) ds, Y'(J) = ∫_0^∞ e^{−t²} P'(J e^{−t²}) dt.
        for (s, ws) in gauss_panels(0.0, s_l, 32) {
            let es = (-s * s).exp();
            let outer = scale * ws * 2.0 * s * s * i0 * es;
            for &(t, wt) in &inner {
                let et = (-t * t).exp();
                w.add_derivative(i0 * es * et, outer * wt * et);
            }
        }
        Ok(w)
    }

    /// Adds c·P'(x) in terms of the knot values and slopes.
    fn add_derivative(&mut self, x: f64, c: f64) {
        let n = self.knots.len();
        let i = match self.knots.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.knots[i + 1] - self.knots[i];
        let s = ((x - self.knots[i]) / h).clamp(0.0, 1.0);
        let [g00, g10, g01, g11] = hermite_basis_derivative(s);
        self.alpha[i] += c * g00 / h;
        self.alpha[i + 1] += c * g01 / h;
        self.beta[i] += c * g10;
        self.beta[i + 1] += c * g11;
    }

    /// S[P] for samples P_1…P_n at the non-zero knots.
    pub fn apply(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len() + 1, self.knots.len());
        let mut y = Vec::with_capacity(self.knots.len());
        y.push(0.0);
        y.extend_from_slice(values);
        let d = monotone_slopes(&self.knots, &y);
        let mut acc = 0.0;
        for k in 0..y.len() {
            acc += self.alpha[k] * y[k] + self.beta[k] * d[k];
        }
        acc
    }

    /// S for P ≡ 1 at every sample.
    pub fn weight_mass(&self) -> f64 {
        self.apply(&vec![1.0; self.knots.len() - 1])
    }
}

/// Focal-volume average of images sampled at increasing intensities.
pub fn intensity_average(curves: &[(f64, DetectorImage)], model: &FocusModel) -> Result<DetectorImage> {
    let intensities: Vec<f64> = curves.iter().map(|(i, _)| *i).collect();
    let w = IntensityWeights::new(model, &intensities)?;
    let first = &curves[0].1;
    if curves.iter().any(|(_, img)| !img.same_grid(first)) {
        return Err(Error::Config("intensity samples do not share detector grids".into()));
    }
    let mut out = first.clone();
    let mut column = vec![0.0; curves.len()];
    for c in 0..out.values.len() {
        for (k, (_, img)) in curves.iter().enumerate() {
            column[k] = img.values[c];
        }
        out.values[c] = w.apply(&column);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{normalize, DetectorGrid};

    #[test]
    fn paper_focal_radii() {
        let (rx, ry) = focal_radii(&FocusModel::reference());
        assert!((rx - 48.0).abs() <= 1.0, "{rx}");
        assert!((ry - 52.0).abs() <= 1.0, "{ry}");
        let mut m = FocusModel::reference();
        m.focal_length *= 2.0;
        assert_eq!(focal_radii(&m).0, 2.0 * rx);
    }

    #[test]
    fn peak_intensity_formula_and_override() {
        let p = peak_intensity(&FocusModel::reference());
        assert!((p.formula / 4.9e13 - 1.0).abs() < 0.02, "{}", p.formula);
        assert_eq!(p.value, 1.6e13);
        let mut m = FocusModel::reference();
        m.override_i0 = None;
        let a = peak_intensity(&m).value;
        m.e0 *= 2.0;
        assert!((peak_intensity(&m).value / a - 2.0).abs() < 1e-15);
    }

    fn image(v: f64) -> DetectorImage {
        let g = DetectorGrid {
            k_rho_max: 1.0,
            n_k_rho: 3,
            n_alpha: 2,
            ..Default::default()
        };
        let mut img = g.empty();
        img.values.iter_mut().enumerate().for_each(|(i, x)| *x = v * (1.0 + i as f64));
        img
    }

    #[test]
    fn mn_weights() {
        let mut m = BTreeMap::new();
        m.insert(0, image(1.0));
        assert_eq!(mn_average(&m, 0).unwrap(), image(1.0));
        m.insert(0, image(3.0));
        m.insert(1, image(1.0));
        let out = mn_average(&m, 1).unwrap();
        for (a, b) in out.values.iter().zip(&image(5.0 / 3.0).values) {
            assert!((a - b).abs() < 1e-14);
        }
        m.remove(&1);
        assert!(matches!(mn_average(&m, 1), Err(Error::Incomplete(_))));
    }

    #[test]
    fn rotational_limits() {
        let w = rotational_weights(&[0.0; 4], 1e300);
        let q = 1.0 + 3.0 + 1.0 + 3.0;
        assert_eq!(w, vec![1.0 / q, 3.0 / q, 1.0 / q, 3.0 / q]);
        let t = 300.0;
        let b = boltzmann_factor(K_BOLTZMANN * t, t);
        assert!((b - (-1.0f64).exp()).abs() < 1e-12);
        let s = rotational_weights(&[0.0, 1e-4, 3e-4], 500.0);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vibrational_weights() {
        let pops = PopulationModel::parse("6 1.0 300\n7 0.0 300\n", 2).unwrap();
        let mut m = BTreeMap::new();
        m.insert(6, image(1.0));
        m.insert(7, image(2.0));
        assert_eq!(vibrational_average(&m, &pops).unwrap(), image(1.0));
        m.insert(8, image(2.0));
        assert!(matches!(vibrational_average(&m, &pops), Err(Error::Config(_))));
        assert!(PopulationModel::parse("6 0 300\n", 2).is_err());
        assert!(PopulationModel::parse("6 1 -3\n", 2).is_err());
        assert!(PopulationModel::parse("6 1\n", 2).is_err());
    }

    #[test]
    fn linear_in_intensity_matches_gaussian_overlap() {
        let m = FocusModel::reference();
        let is = intensity_grid(&m, 12);
        let w = IntensityWeights::new(&m, &is).unwrap();
        let c = 2.5e-13;
        let vals: Vec<f64> = is.iter().map(|i| c * i).collect();
        let (rx, ry) = focal_radii(&m);
        let i0 = peak_intensity(&m).value;
        let want = c * i0 * PI * rx * ry * erf(m.half_width / rx);
        assert!((w.apply(&vals) / want - 1.0).abs() < 1e-10, "{} vs {want}", w.apply(&vals));
    }

    fn erf(x: f64) -> f64 {
        // ∫_0^x by Gauss–Legendre; smooth integrand.
        gauss_panels(0.0, x, 16)
            .into_iter()
            .map(|(t, w)| w * (-t * t).exp())
            .sum::<f64>()
            * 2.0
            / PI.sqrt()
    }

    #[test]
    fn constant_in_intensity_keeps_shape() {
        let m = FocusModel::reference();
        let is = intensity_grid(&m, 8);
        let curves: Vec<(f64, DetectorImage)> = is.iter().map(|&i| (i, image(1.0))).collect();
        let out = normalize(&intensity_average(&curves, &m).unwrap()).unwrap();
        let want = normalize(&image(1.0)).unwrap();
        for (a, b) in out.values.iter().zip(&want.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_short_or_uncovered_grids() {
        let m = FocusModel::reference();
        let is = intensity_grid(&m, 3);
        assert!(IntensityWeights::new(&m, &is).is_err());
        let mut is = intensity_grid(&m, 6);
        is[0] *= 1.5;
        assert!(IntensityWeights::new(&m, &is).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn monotone_samples_stay_below_peak(
            steps in proptest::collection::vec(0.0f64..1.0, 6),
            flat in proptest::collection::vec(0.0f64..1.0, 6),
        ) {
            let m = FocusModel::reference();
            let w = IntensityWeights::new(&m, &intensity_grid(&m, 6)).unwrap();
            let mut p = Vec::new();
            let mut acc = 0.0;
            for s in &steps {
                acc += s;
                p.push(acc);
            }
            let mass = w.weight_mass();
            let s = w.apply(&p);
            proptest::prop_assert!(s >= -1e-12 * mass);
            proptest::prop_assert!(s / mass <= p[5] * (1.0 + 1e-12) + 1e-300);
            // Linear in the data once the slope rule is fixed: scaling is exact.
            let q: Vec<f64> = flat.iter().map(|v| 3.0 * v).collect();
            let a = w.apply(&flat);
            proptest::prop_assert!((w.apply(&q) - 3.0 * a).abs() <= 1e-9 * a.abs().max(mass));
        }
    }
}
