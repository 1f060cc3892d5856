//! Two-channel split-operator propagation on the (R, θ) grid at fixed M.
//!
//! One step is V(dt/2) · T_R(dt/2) · T_ang(dt) · T_R(dt/2) · V(dt/2). The
//! potential factor exponentiates the 2×2 matrix [[V₁, μ𝓔cosθ], [μ𝓔cosθ, V₂]]
//! analytically at every node with 𝓔 taken at mid-step; T_R is applied in
//! momentum space per angular row and T_ang in the associated-Legendre
//! basis per radial point.
//!
//! Flux leaving through r_split is cut off with a half-cosine mask, moved to
//! the dressed basis |±⟩ = (|g⟩ ± |u⟩)/√2 where the asymptotic coupling
//! ±β R 𝓔 (β = μ_slope cosθ) is diagonal, Fourier transformed with the
//! momentum shift ±β∫𝓔 of a charged dipole in the field, advanced to t_ref
//! with the matching Volkov phase and added to the momentum amplitude.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::angular::AngularBasis;
use crate::boundstates::BoundState;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::potentials::PotentialSet;
use crate::pulse::{FieldIntegrals, LaserPulse};
use crate::units::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsymptoticPhase {
    Volkov,
    Free,
    /// Split only once the pulse is over; field-free phase.
    Defer,
}

impl std::str::FromStr for AsymptoticPhase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volkov" => Ok(Self::Volkov),
            "free" => Ok(Self::Free),
            "defer" => Ok(Self::Defer),
            _ => Err(Error::Config(format!("unknown asymptotic_phase '{s}'"))),
        }
    }
}

impl AsymptoticPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Volkov => "volkov",
            Self::Free => "free",
            Self::Defer => "defer",
        }
    }
}

/// How cosθ enters the radiative coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingGeometry {
    Angular,
    /// cosθ ≡ 1 (two-level test mode).
    Aligned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub r_split: f64,
    pub mask_width: f64,
    /// Steps between splits.
    pub stride: usize,
    /// Zero-padding factor of the outgoing-segment FFT.
    pub k_oversample: usize,
    /// Largest momentum retained.
    pub k_keep: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub dt: f64,
    pub split: Option<SplitConfig>,
    pub asymptotic_phase: AsymptoticPhase,
    pub diag_stride: usize,
    pub geometry: CouplingGeometry,
}

impl Numerics {
    pub fn new(dt: f64, split: Option<SplitConfig>) -> Self {
        Self {
            dt,
            split,
            asymptotic_phase: AsymptoticPhase::Volkov,
            diag_stride: 100,
            geometry: CouplingGeometry::Angular,
        }
    }
}

/// Φ on the grid, row j = angular node, column i = radial point.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub n_r: usize,
    pub n_theta: usize,
    pub m_n: usize,
    pub time: f64,
    pub ground: Vec<Complex64>,
    pub excited: Vec<Complex64>,
}

impl Wavefunction {
    pub fn zeros(n_r: usize, n_theta: usize, m_n: usize) -> Self {
        Self {
            n_r,
            n_theta,
            m_n,
            time: 0.0,
            ground: vec![Complex64::new(0.0, 0.0); n_r * n_theta],
            excited: vec![Complex64::new(0.0, 0.0); n_r * n_theta],
        }
    }

    fn weighted_sum(&self, basis: &AngularBasis, dr: f64, f: impl Fn(usize) -> f64) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n_theta {
            let row = j * self.n_r..(j + 1) * self.n_r;
            let s: f64 = self.ground[row.clone()]
                .iter()
                .chain(&self.excited[row])
                .map(|c| c.norm_sqr())
                .sum();
            total += basis.weights()[j] * f(j) * s;
        }
        total * dr
    }

    pub fn norm(&self, basis: &AngularBasis, dr: f64) -> f64 {
        self.weighted_sum(basis, dr, |_| 1.0)
    }

    pub fn channel_norms(&self, basis: &AngularBasis, dr: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut u = 0.0;
        for j in 0..self.n_theta {
            let row = j * self.n_r..(j + 1) * self.n_r;
            let w = basis.weights()[j];
            g += w * self.ground[row.clone()]
                .iter()
                .map(|c| c.norm_sqr())
                .sum::<f64>();
            u += w * self.excited[row].iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        (g * dr, u * dr)
    }

    /// ⟨cos²θ⟩ over both channels.
    pub fn cos2_expect(&self, basis: &AngularBasis, dr: f64) -> f64 {
        let n = self.norm(basis, dr);
        if n == 0.0 {
            return 0.0;
        }
        self.weighted_sum(basis, dr, |j| basis.nodes()[j].powi(2)) / n
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Wavefunction, basis: &AngularBasis, dr: f64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..self.n_theta {
            let row = j * self.n_r..(j + 1) * self.n_r;
            let mut s = Complex64::new(0.0, 0.0);
            for (a, b) in self.ground[row.clone()]
                .iter()
                .zip(&other.ground[row.clone()])
            {
                s += a.conj() * b;
            }
            for (a, b) in self.excited[row.clone()].iter().zip(&other.excited[row]) {
                s += a.conj() * b;
            }
            total += s * basis.weights()[j];
        }
        total * dr
    }

    /// Norm carried beyond radius index `from`.
    pub fn norm_beyond(&self, basis: &AngularBasis, dr: f64, from: usize) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n_theta {
            let row = j * self.n_r + from..(j + 1) * self.n_r;
            let s: f64 = self.ground[row.clone()]
                .iter()
                .chain(&self.excited[row])
                .map(|c| c.norm_sqr())
                .sum();
            total += basis.weights()[j] * s;
        }
        total * dr
    }
}

/// χ(R)·P̄_N^M(cosθ) on the ground channel.
pub fn build_initial(
    state: &BoundState,
    m_n: i64,
    basis: &AngularBasis,
    grid: &RadialGrid,
) -> Result<Wavefunction> {
    let m = m_n.unsigned_abs() as usize;
    if m > state.n_rot {
        return Err(Error::domain(format!(
            "|M_N| = {m} exceeds N = {}",
            state.n_rot
        )));
    }
    if basis.m_n() != m {
        return Err(Error::domain(format!(
            "angular basis built for M = {}, state needs {m}",
            basis.m_n()
        )));
    }
    if state.n_rot - m >= basis.n_l() {
        return Err(Error::domain(format!(
            "N = {} not representable with n_l = {}",
            state.n_rot,
            basis.n_l()
        )));
    }
    if state.chi.len() != grid.n_r() {
        return Err(Error::domain("bound state sampled on a different grid"));
    }
    let n_r = grid.n_r();
    let mut wf = Wavefunction::zeros(n_r, basis.n_theta(), m);
    let l = state.n_rot - m;
    for j in 0..basis.n_theta() {
        let p = basis.legendre(l, j);
        for i in 0..n_r {
            wf.ground[j * n_r + i] = Complex64::new(state.chi[i] * p, 0.0);
        }
    }
    let norm = wf.norm(basis, grid.dr()).sqrt();
    wf.ground.iter_mut().for_each(|c| *c /= norm);
    Ok(wf)
}

/// Φ̂(k, θ_j) per channel on k = m·dk, m = 1…n_k.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitude {
    pub k: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub m_n: usize,
    pub t_ref: f64,
    /// Row j = angular node, column = k index.
    pub ground: Vec<Complex64>,
    pub excited: Vec<Complex64>,
}

impl MomentumAmplitude {
    pub fn zeros(k: Vec<f64>, basis: &AngularBasis, t_ref: f64) -> Self {
        let n = k.len() * basis.n_theta();
        Self {
            k,
            cos_theta: basis.nodes().to_vec(),
            weights: basis.weights().to_vec(),
            m_n: basis.m_n(),
            t_ref,
            ground: vec![Complex64::new(0.0, 0.0); n],
            excited: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn n_k(&self) -> usize {
        self.k.len()
    }

    pub fn n_theta(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn dk(&self) -> f64 {
        if self.k.len() > 1 {
            self.k[1] - self.k[0]
        } else {
            self.k.first().copied().unwrap_or(0.0)
        }
    }

    /// Σ_j w_j Σ_k |Φ̂|² dk.
    pub fn norm(&self) -> f64 {
        let nk = self.n_k();
        let mut total = 0.0;
        for j in 0..self.n_theta() {
            let row = j * nk..(j + 1) * nk;
            let s: f64 = self.ground[row.clone()]
                .iter()
                .chain(&self.excited[row])
                .map(|c| c.norm_sqr())
                .sum();
            total += self.weights[j] * s;
        }
        total * self.dk()
    }
}

/// One diagnostics sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticSample {
    pub t: f64,
    pub internal_norm: f64,
    pub cos2_expect: f64,
    pub envelope: f64,
    pub accumulated_norm: f64,
}

pub fn diagnostics_csv(samples: &[DiagnosticSample]) -> String {
    let mut s = String::from("t,internal_norm,cos2_expect,envelope\n");
    for d in samples {
        s.push_str(&format!(
            "{:.6e},{:.12e},{:.12e},{:.6e}\n",
            d.t, d.internal_norm, d.cos2_expect, d.envelope
        ));
    }
    s
}

#[derive(Debug, Clone)]
pub struct JobOutput {
    pub amplitude: MomentumAmplitude,
    pub diagnostics: Vec<DiagnosticSample>,
    pub final_internal_norm: f64,
    pub steps: usize,
}

impl JobOutput {
    pub fn dissociation_probability(&self) -> f64 {
        1.0 - self.final_internal_norm
    }
}

/// Norm beyond the last 1/32 of the grid that counts as wrap-around.
const EDGE_TOLERANCE: f64 = 1e-8;

/// Precomputed propagation operators for one (grid, basis, pulse, dt).
pub struct Propagator<'a> {
    grid: RadialGrid,
    basis: &'a AngularBasis,
    pulse: LaserPulse,
    dt: f64,
    cos: Vec<f64>,
    /// exp(−i v̄ dt/2), (V₂−V₁)/2 and μ per radial point.
    vbar_phase: Vec<Complex64>,
    delta: Vec<f64>,
    mu: Vec<f64>,
    /// exp(−i k² dt/4ℳ)/n_r in FFT order.
    kin_phase: Vec<Complex64>,
    /// exp(−i l(l+1) dt/2ℳR²), row per basis function.
    ang_phase: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    fft_scratch: Vec<Complex64>,
    umat: Vec<[Complex64; 3]>,
    coeffs: Vec<Complex64>,
    fold_scratch: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(
        pot: &PotentialSet,
        consts: &Constants,
        grid: &RadialGrid,
        basis: &'a AngularBasis,
        pulse: &LaserPulse,
        dt: f64,
        geometry: CouplingGeometry,
    ) -> Self {
        let n_r = grid.n_r();
        let tau = 0.5 * dt;
        let mass = consts.reduced_mass;
        let mut vbar_phase = Vec::with_capacity(n_r);
        let mut delta = Vec::with_capacity(n_r);
        let mut mu = Vec::with_capacity(n_r);
        for r in grid.points() {
            let p = pot.evaluate(r);
            vbar_phase.push(Complex64::from_polar(1.0, -0.5 * (p.v1 + p.v2) * tau));
            delta.push(0.5 * (p.v2 - p.v1));
            mu.push(p.mu);
        }
        let inv_n = 1.0 / n_r as f64;
        let kin_phase = grid
            .k_values()
            .into_iter()
            .map(|k| Complex64::from_polar(inv_n, -k * k * tau / (2.0 * mass)))
            .collect();
        let mut ang_phase = Vec::with_capacity(basis.n_l() * n_r);
        for i in 0..basis.n_l() {
            let l = basis.l(i) as f64;
            for r in grid.points() {
                ang_phase.push(Complex64::from_polar(
                    1.0,
                    -l * (l + 1.0) * dt / (2.0 * mass * r * r),
                ));
            }
        }
        let cos = match geometry {
            CouplingGeometry::Angular => basis.nodes().to_vec(),
            CouplingGeometry::Aligned => vec![1.0; basis.n_theta()],
        };
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_r);
        let ifft = planner.plan_fft_inverse(n_r);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        Self {
            grid: *grid,
            basis,
            pulse: *pulse,
            dt,
            cos,
            vbar_phase,
            delta,
            mu,
            kin_phase,
            ang_phase,
            fft,
            ifft,
            fft_scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            umat: vec![[Complex64::new(0.0, 0.0); 3]; n_r * basis.n_theta()],
            coeffs: vec![Complex64::new(0.0, 0.0); basis.n_l() * n_r],
            fold_scratch: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `wf` from wf.time to wf.time + dt.
    pub fn step(&mut self, wf: &mut Wavefunction) {
        let field = self.pulse.field(wf.time + 0.5 * self.dt);
        self.build_potential(field);
        self.apply_potential(wf);
        self.radial_kinetic(wf);
        self.angular_kinetic(&mut wf.ground);
        self.angular_kinetic(&mut wf.excited);
        self.radial_kinetic(wf);
        self.apply_potential(wf);
        wf.time += self.dt;
    }

    fn build_potential(&mut self, field: f64) {
        let n_r = self.grid.n_r();
        let tau = 0.5 * self.dt;
        for (j, &c) in self.cos.iter().enumerate() {
            let fc = field * c;
            let row = &mut self.umat[j * n_r..(j + 1) * n_r];
            for (i, u) in row.iter_mut().enumerate() {
                let d = self.delta[i];
                let v12 = self.mu[i] * fc;
                let lam = (d * d + v12 * v12).sqrt();
                let (s, co) = (lam * tau).sin_cos();
                let sinc = if lam > 1e-300 { s / lam } else { tau };
                let ph = self.vbar_phase[i];
                // e^{−iv̄τ}[cos λτ − i sin λτ (−δσ_z + V₁₂σ_x)/λ]
                u[0] = ph * Complex64::new(co, sinc * d);
                u[1] = ph * Complex64::new(0.0, -sinc * v12);
                u[2] = ph * Complex64::new(co, -sinc * d);
            }
        }
    }

    fn apply_potential(&self, wf: &mut Wavefunction) {
        for ((g, e), u) in wf
            .ground
            .iter_mut()
            .zip(wf.excited.iter_mut())
            .zip(&self.umat)
        {
            let (a, b) = (*g, *e);
            *g = u[0] * a + u[1] * b;
            *e = u[1] * a + u[2] * b;
        }
    }

    fn radial_kinetic(&mut self, wf: &mut Wavefunction) {
        let n_r = self.grid.n_r();
        for chan in [&mut wf.ground, &mut wf.excited] {
            for row in chan.chunks_exact_mut(n_r) {
                self.fft.process_with_scratch(row, &mut self.fft_scratch);
                for (c, p) in row.iter_mut().zip(&self.kin_phase) {
                    *c *= p;
                }
                self.ifft.process_with_scratch(row, &mut self.fft_scratch);
            }
        }
    }

    fn angular_kinetic(&mut self, chan: &mut [Complex64]) {
        let width = 2 * self.grid.n_r();
        let coeffs: &mut [f64] = bytemuck::cast_slice_mut(&mut self.coeffs);
        let data: &mut [f64] = bytemuck::cast_slice_mut(chan);
        self.basis
            .forward(data, coeffs, width, &mut self.fold_scratch);
        for (c, p) in self.coeffs.iter_mut().zip(&self.ang_phase) {
            *c *= p;
        }
        let coeffs: &[f64] = bytemuck::cast_slice(&self.coeffs);
        self.basis
            .backward(coeffs, data, width, &mut self.fold_scratch);
    }
}

/// Half-cosine mask: 1 up to r_split, 0 beyond r_split + width.
pub fn split_mask(grid: &RadialGrid, r_split: f64, width: f64) -> Vec<f64> {
    grid.points()
        .into_iter()
        .map(|r| {
            if r <= r_split {
                1.0
            } else if r >= r_split + width {
                0.0
            } else {
                0.5 * (1.0 + (PI * (r - r_split) / width).cos())
            }
        })
        .collect()
}

/// Moves the outgoing part of Φ into a momentum amplitude.
pub struct Splitter {
    mask: Vec<f64>,
    start: usize,
    r0: f64,
    dr: f64,
    n_pad: usize,
    n_keep: usize,
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf: [Vec<Complex64>; 2],
    mass: f64,
    mu_slope: f64,
    phase: AsymptoticPhase,
    aligned: bool,
    /// exp(−i k_m R₀)·ΔR/√(2π).
    k_prefactor: Vec<Complex64>,
}

impl Splitter {
    pub fn new(
        grid: &RadialGrid,
        split: &SplitConfig,
        consts: &Constants,
        mu_slope: f64,
        phase: AsymptoticPhase,
        geometry: CouplingGeometry,
    ) -> Result<Self> {
        if split.r_split + 4.0 * split.mask_width >= grid.r_max() {
            return Err(Error::validation(format!(
                "r_split + 4·mask_width = {} must stay below r_max = {}",
                split.r_split + 4.0 * split.mask_width,
                grid.r_max()
            )));
        }
        if !(split.mask_width > 0.0) || split.stride == 0 || split.k_oversample == 0 {
            return Err(Error::validation(
                "mask_width, stride and k_oversample must be positive",
            ));
        }
        let start = grid.index_of(split.r_split);
        let seg = grid.n_r() - start;
        let n_pad = (seg * split.k_oversample).next_power_of_two();
        let dr = grid.dr();
        let dk = 2.0 * PI / (n_pad as f64 * dr);
        let n_keep = ((split.k_keep.min(PI / dr) / dk).floor() as usize).min(n_pad / 2 - 1);
        let r0 = grid.r(start);
        let norm = dr / (2.0 * PI).sqrt();
        let k_prefactor = (1..=n_keep)
            .map(|m| Complex64::from_polar(norm, -(m as f64) * dk * r0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n_pad);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Ok(Self {
            mask: split_mask(grid, split.r_split, split.mask_width),
            start,
            r0,
            dr,
            n_pad,
            n_keep,
            fft,
            scratch,
            buf: [
                vec![Complex64::new(0.0, 0.0); n_pad],
                vec![Complex64::new(0.0, 0.0); n_pad],
            ],
            mass: consts.reduced_mass,
            mu_slope,
            phase,
            aligned: geometry == CouplingGeometry::Aligned,
            k_prefactor,
        })
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n_pad as f64 * self.dr)
    }

    pub fn k_values(&self) -> Vec<f64> {
        (1..=self.n_keep).map(|m| m as f64 * self.dk()).collect()
    }

    pub fn start_radius(&self) -> f64 {
        self.r0
    }

    /// Removes the part of `wf` beyond the mask and adds its asymptotic
    /// image to `acc`. `idx` is the step index of wf.time on `fi`.
    pub fn split_and_accumulate(
        &mut self,
        wf: &mut Wavefunction,
        acc: &mut MomentumAmplitude,
        fi: &FieldIntegrals,
        idx: usize,
        field_on: bool,
    ) {
        let n_r = wf.n_r;
        let seg = n_r - self.start;
        let t_s = wf.time;
        let t_ref = acc.t_ref;
        let last = fi.f1.len() - 1;
        let g = fi.f1[last];
        let df1 = g - fi.f1[idx];
        let df2 = fi.f2[last] - fi.f2[idx];
        let df3 = fi.f3[last] - fi.f3[idx];
        let tt = t_ref - t_s;
        let volkov = field_on && self.phase == AsymptoticPhase::Volkov;
        // ∫(G − F1) and ∫(G − F1)² from t_s to t_ref.
        let j1 = g * tt - df2;
        let j2 = g * g * tt - 2.0 * g * df2 + df3;
        let dk = self.dk();
        let nk = acc.n_k();
        for j in 0..wf.n_theta {
            let row = j * n_r..(j + 1) * n_r;
            let mut any = false;
            for s in 0..2 {
                self.buf[s][seg..].fill(Complex64::new(0.0, 0.0));
            }
            {
                let gr = &mut wf.ground[row.clone()];
                let ur = &mut wf.excited[row.clone()];
                for i in self.start..n_r {
                    let cut = 1.0 - self.mask[i];
                    let (a, b) = (gr[i] * cut, ur[i] * cut);
                    gr[i] -= a;
                    ur[i] -= b;
                    any |= a.norm_sqr() + b.norm_sqr() > 0.0;
                    self.buf[0][i - self.start] = (a + b) * FRAC_1_SQRT_2;
                    self.buf[1][i - self.start] = (a - b) * FRAC_1_SQRT_2;
                }
            }
            if !any {
                continue;
            }
            let beta = self.mu_slope * if self.aligned { 1.0 } else { acc.cos_theta[j] };
            let mut out = [0usize; 2].map(|_| Vec::with_capacity(self.n_keep));
            for (s, sign) in [(0usize, 1.0f64), (1, -1.0)] {
                let buf = &mut self.buf[s];
                let q = if volkov { sign * beta * df1 } else { 0.0 };
                if q != 0.0 {
                    for (i, c) in buf[..seg].iter_mut().enumerate() {
                        let r = self.r0 + i as f64 * self.dr;
                        *c *= Complex64::from_polar(1.0, -q * r);
                    }
                }
                self.fft.process_with_scratch(buf, &mut self.scratch);
                for m in 1..=self.n_keep {
                    let k = m as f64 * dk;
                    let mut phase = k * k * tt;
                    if volkov {
                        phase += 2.0 * k * sign * beta * j1 + beta * beta * j2;
                    }
                    phase /= 2.0 * self.mass;
                    out[s].push(
                        buf[m] * self.k_prefactor[m - 1] * Complex64::from_polar(1.0, -phase),
                    );
                }
            }
            let base = j * nk;
            for m in 0..self.n_keep {
                let (p, q) = (out[0][m], out[1][m]);
                acc.ground[base + m] += (p + q) * FRAC_1_SQRT_2;
                acc.excited[base + m] += (p - q) * FRAC_1_SQRT_2;
            }
        }
    }
}

/// Free-particle image at `t_ref` of the part of `wf` beyond `r_from`,
/// on the same k grid as a [`Splitter`] would produce. Used as a
/// whole-grid reference.
pub fn outgoing_amplitude(
    wf: &Wavefunction,
    grid: &RadialGrid,
    basis: &AngularBasis,
    consts: &Constants,
    r_from: f64,
    k: &[f64],
    t_ref: f64,
) -> MomentumAmplitude {
    let mut acc = MomentumAmplitude::zeros(k.to_vec(), basis, t_ref);
    let start = grid.index_of(r_from);
    let n_r = grid.n_r();
    let norm = grid.dr() / (2.0 * PI).sqrt();
    let tt = t_ref - wf.time;
    for j in 0..basis.n_theta() {
        for (m, &kk) in k.iter().enumerate() {
            let mut sg = Complex64::new(0.0, 0.0);
            let mut su = Complex64::new(0.0, 0.0);
            for i in start..n_r {
                let e = Complex64::from_polar(1.0, -kk * grid.r(i));
                sg += wf.ground[j * n_r + i] * e;
                su += wf.excited[j * n_r + i] * e;
            }
            let ph = Complex64::from_polar(norm, -kk * kk * tt / (2.0 * consts.reduced_mass));
            acc.ground[j * k.len() + m] = sg * ph;
            acc.excited[j * k.len() + m] = su * ph;
        }
    }
    acc
}

/// Propagates one (v, N, M, I) job from pulse.t_start to pulse.t_end.
#[allow(clippy::too_many_arguments)]
pub fn run_job(
    pot: &PotentialSet,
    consts: &Constants,
    state: &BoundState,
    m_n: i64,
    pulse: &LaserPulse,
    grid: &RadialGrid,
    basis: &AngularBasis,
    numerics: &Numerics,
) -> Result<JobOutput> {
    run_job_with_state(pot, consts, state, m_n, pulse, grid, basis, numerics).map(|(o, _)| o)
}

/// As [`run_job`], also returning the final internal wavefunction.
#[allow(clippy::too_many_arguments)]
pub fn run_job_with_state(
    pot: &PotentialSet,
    consts: &Constants,
    state: &BoundState,
    m_n: i64,
    pulse: &LaserPulse,
    grid: &RadialGrid,
    basis: &AngularBasis,
    numerics: &Numerics,
) -> Result<(JobOutput, Wavefunction)> {
    let mut wf = build_initial(state, m_n, basis, grid)?;
    wf.time = pulse.t_start;
    let n_steps = (pulse.duration() / numerics.dt).ceil().max(1.0) as usize;
    let dt = pulse.duration() / n_steps as f64;
    let mut prop = Propagator::new(pot, consts, grid, basis, pulse, dt, numerics.geometry);
    let fi = FieldIntegrals::new(pulse, dt, n_steps);
    let mut splitter = match &numerics.split {
        Some(s) => Some(Splitter::new(
            grid,
            s,
            consts,
            pot.mu_slope(),
            numerics.asymptotic_phase,
            numerics.geometry,
        )?),
        None => None,
    };
    let k = splitter.as_ref().map(|s| s.k_values()).unwrap_or_default();
    let mut acc = MomentumAmplitude::zeros(k, basis, pulse.t_end);
    let off = pulse.off_time();
    let dr = grid.dr();
    let edge = grid.n_r() - (grid.n_r() / 32).max(8);
    let stride = numerics.diag_stride.max(1);
    let mut diagnostics = Vec::new();
    let record = |wf: &Wavefunction, acc: &MomentumAmplitude, out: &mut Vec<DiagnosticSample>| {
        let n = wf.norm(basis, dr);
        out.push(DiagnosticSample {
            t: wf.time,
            internal_norm: n,
            cos2_expect: if n > 0.0 {
                wf.cos2_expect(basis, dr)
            } else {
                0.0
            },
            envelope: pulse.envelope(wf.time),
            accumulated_norm: acc.norm(),
        });
        n
    };
    record(&wf, &acc, &mut diagnostics);
    for n in 1..=n_steps {
        prop.step(&mut wf);
        wf.time = pulse.t_start + n as f64 * dt;
        if let (Some(sp), Some(cfg)) = (splitter.as_mut(), numerics.split.as_ref()) {
            let field_on = wf.time < off;
            let allowed = numerics.asymptotic_phase != AsymptoticPhase::Defer || !field_on;
            if allowed && (n % cfg.stride == 0 || n == n_steps) {
                sp.split_and_accumulate(&mut wf, &mut acc, &fi, n, field_on);
            }
        }
        if n % stride == 0 || n == n_steps {
            let norm = record(&wf, &acc, &mut diagnostics);
            if !norm.is_finite() {
                return Err(Error::BlowUp { step: n });
            }
            if numerics.split.is_none() {
                let e = wf.norm_beyond(basis, dr, edge);
                if e > EDGE_TOLERANCE {
                    return Err(Error::BoundaryContamination { edge_norm: e });
                }
            }
        }
    }
    let final_internal_norm = wf.norm(basis, dr);
    let out = JobOutput {
        amplitude: acc,
        diagnostics,
        final_internal_norm,
        steps: n_steps,
    };
    Ok((out, wf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundstates::solve_bound_state;
    use std::collections::BTreeMap;

    fn model(kind: &str, kv: &[(&str, f64)]) -> PotentialSet {
        let p: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        PotentialSet::model(kind, &p).unwrap()
    }

    fn gaussian_state(grid: &RadialGrid, r0: f64, sigma: f64, n_rot: usize) -> BoundState {
        let chi: Vec<f64> = grid
            .points()
            .iter()
            .map(|r| (-(r - r0).powi(2) / (4.0 * sigma * sigma)).exp())
            .collect();
        let norm = (chi.iter().map(|c| c * c).sum::<f64>() * grid.dr()).sqrt();
        BoundState {
            v: 0,
            n_rot,
            energy: -1.0,
            chi: chi.into_iter().map(|c| c / norm).collect(),
            dr: grid.dr(),
        }
    }

    /// Constant field 𝓔₀ over the whole window.
    fn static_field(amplitude: f64, t_end: f64) -> LaserPulse {
        LaserPulse {
            wavelength_nm: 1e30,
            peak_intensity: amplitude * amplitude * crate::units::INTENSITY_AU,
            w_t: 1e12,
            t_center: 0.0,
            t_start: 0.0,
            t_end,
        }
    }

    #[test]
    fn initial_alignment() {
        let grid = RadialGrid::new(256, 0.1, 25.0).unwrap();
        for (n, m, want) in [
            (0usize, 0i64, 1.0 / 3.0),
            (1, 0, 0.6),
            (1, 1, 0.2),
            (1, -1, 0.2),
        ] {
            let basis = AngularBasis::new(m.unsigned_abs() as usize, 8).unwrap();
            let wf = build_initial(&gaussian_state(&grid, 5.0, 1.0, n), m, &basis, &grid).unwrap();
            assert!((wf.norm(&basis, grid.dr()) - 1.0).abs() < 1e-13);
            let c2 = wf.cos2_expect(&basis, grid.dr());
            assert!((c2 - want).abs() < 1e-10, "N={n} M={m}: {c2}");
        }
        let basis = AngularBasis::new(2, 8).unwrap();
        assert!(build_initial(&gaussian_state(&grid, 5.0, 1.0, 1), 2, &basis, &grid).is_err());
    }

    #[test]
    fn stationary_state_phase_and_norm() {
        let pot = model("morse", &[("de", 0.1), ("a", 1.0), ("re", 2.0)]);
        let c = Constants::hydrogen();
        let grid = RadialGrid::new(512, 0.05, 25.65).unwrap();
        let state = solve_bound_state(&pot, &c, 1, 2, &grid).unwrap();
        let basis = AngularBasis::new(0, 8).unwrap();
        let pulse = static_field(0.0, 1e4);
        let dt = 0.5;
        let mut prop = Propagator::new(
            &pot,
            &c,
            &grid,
            &basis,
            &pulse,
            dt,
            CouplingGeometry::Angular,
        );
        let wf0 = build_initial(&state, 0, &basis, &grid).unwrap();
        let mut wf = wf0.clone();
        for _ in 0..1000 {
            prop.step(&mut wf);
        }
        let ov = wf0.overlap(&wf, &basis, grid.dr());
        assert!((ov.norm() - 1.0).abs() < 1e-6, "|overlap| = {}", ov.norm());
        assert!((wf.norm(&basis, grid.dr()) - 1.0).abs() < 1e-9);
        let want = -state.energy * 1000.0 * dt;
        let got = ov.arg();
        let diff = (got - want + PI).rem_euclid(2.0 * PI) - PI;
        assert!(diff.abs() / 1000.0 < 1e-4, "phase error {diff}");
    }

    #[test]
    fn rabi_oscillation() {
        let (gap, mu, e0) = (0.2, 1.0, 0.05);
        let pot = model("flat-coupled", &[("v_gap", gap), ("mu_const", mu)]);
        let c = Constants::hydrogen();
        let grid = RadialGrid::new(256, 0.1, 25.0).unwrap();
        let basis = AngularBasis::new(0, 1).unwrap();
        let pulse = static_field(e0, 1e3);
        let dt = 0.05;
        let mut prop = Propagator::new(
            &pot,
            &c,
            &grid,
            &basis,
            &pulse,
            dt,
            CouplingGeometry::Aligned,
        );
        let mut wf = build_initial(&gaussian_state(&grid, 12.0, 1.0, 0), 0, &basis, &grid).unwrap();
        let lam = ((0.5 * gap).powi(2) + (mu * e0).powi(2)).sqrt();
        let amp = (mu * e0 / lam).powi(2);
        for n in 1..=2000 {
            prop.step(&mut wf);
            let (_, pu) = wf.channel_norms(&basis, grid.dr());
            let want = amp * (lam * n as f64 * dt).sin().powi(2);
            assert!((pu - want).abs() < 1e-3 * amp, "step {n}: {pu} vs {want}");
        }
    }

    #[test]
    fn free_gaussian_spreads_analytically() {
        let pot = model("flat-coupled", &[("v_gap", 0.2), ("mu_const", 1.0)]);
        let c = Constants::hydrogen();
        let grid = RadialGrid::new(512, 0.1, 51.3).unwrap();
        let basis = AngularBasis::new(0, 1).unwrap();
        let pulse = static_field(0.0, 1e4);
        let sigma0 = 1.0;
        let mut prop = Propagator::new(
            &pot,
            &c,
            &grid,
            &basis,
            &pulse,
            1.0,
            CouplingGeometry::Angular,
        );
        let mut wf =
            build_initial(&gaussian_state(&grid, 25.0, sigma0, 0), 0, &basis, &grid).unwrap();
        let steps = 2000;
        for _ in 0..steps {
            prop.step(&mut wf);
        }
        let rs = grid.points();
        let p: Vec<f64> = wf.ground.iter().map(|z| z.norm_sqr()).collect();
        let m0: f64 = p.iter().sum();
        let m1: f64 = p.iter().zip(&rs).map(|(a, r)| a * r).sum::<f64>() / m0;
        let m2: f64 = p
            .iter()
            .zip(&rs)
            .map(|(a, r)| a * (r - m1).powi(2))
            .sum::<f64>()
            / m0;
        let t = steps as f64;
        let want = sigma0 * (1.0 + (t / (2.0 * c.reduced_mass * sigma0 * sigma0)).powi(2)).sqrt();
        assert!(
            (m2.sqrt() / want - 1.0).abs() < 1e-6,
            "{} vs {want}",
            m2.sqrt()
        );
    }

    #[test]
    fn no_field_no_flux() {
        let pot = model("morse", &[("de", 0.1), ("a", 1.0), ("re", 2.0)]);
        let c = Constants::hydrogen();
        let grid = RadialGrid::new(512, 0.05, 51.25).unwrap();
        let state = solve_bound_state(&pot, &c, 0, 3, &grid).unwrap();
        let basis = AngularBasis::new(0, 6).unwrap();
        let pulse = LaserPulse::with_window(785.0, 0.0, 5.0, 2.5, 0.0).unwrap();
        let split = SplitConfig {
            r_split: 25.0,
            mask_width: 5.0,
            stride: 10,
            k_oversample: 2,
            k_keep: 20.0,
        };
        let out = run_job(
            &pot,
            &c,
            &state,
            0,
            &pulse,
            &grid,
            &basis,
            &Numerics::new(0.5, Some(split)),
        )
        .unwrap();
        assert!(out.dissociation_probability().abs() < 1e-8);
        assert!(out.amplitude.norm() < 1e-8);
        assert!(out.amplitude.k.iter().all(|&k| k > 0.0));
    }

    #[test]
    fn mask_shape() {
        let grid = RadialGrid::new(256, 0.1, 25.7).unwrap();
        let m = split_mask(&grid, 10.0, 4.0);
        assert_eq!(m[grid.index_of(9.9) - 1], 1.0);
        assert_eq!(m[grid.index_of(14.0)], 0.0);
        assert!(m.windows(2).all(|w| w[1] <= w[0]));
    }
}
