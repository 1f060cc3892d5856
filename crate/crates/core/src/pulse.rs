use crate::error::{Error, Result};
use crate::units::{fs_to_au, intensity_to_field, wavelength_nm_to_omega};

/// Intensity envelope level that counts as "field off".
pub const ENVELOPE_FLOOR: f64 = 1e-4;

/// Gaussian pulse 𝓔(t) = 𝓔₀ exp[−(t−t_c)²/w_t²] cos ω(t−t_c).
/// All times in atomic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserPulse {
    pub wavelength_nm: f64,
    /// W/cm².
    pub peak_intensity: f64,
    pub w_t: f64,
    pub t_center: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// Envelope width from an intensity autocorrelation time, both in fs.
pub fn width_from_autocorrelation(t_ac_fs: f64) -> f64 {
    t_ac_fs / (2.0 * std::f64::consts::LN_2.sqrt())
}

impl LaserPulse {
    /// Standard window: peak at 3·w_t after t_start = 0, field over 6·w_t,
    /// then a field-free tail of `tail` a.u.
    pub fn new(wavelength_nm: f64, peak_intensity: f64, w_t_fs: f64, tail: f64) -> Result<Self> {
        if !(wavelength_nm > 0.0) || !(w_t_fs > 0.0) || !(peak_intensity >= 0.0) || !(tail >= 0.0) {
            return Err(Error::validation(format!(
                "bad pulse: λ={wavelength_nm} nm, I={peak_intensity} W/cm², w_t={w_t_fs} fs, tail={tail}"
            )));
        }
        let w_t = fs_to_au(w_t_fs);
        let pulse = Self {
            wavelength_nm,
            peak_intensity,
            w_t,
            t_center: 3.0 * w_t,
            t_start: 0.0,
            t_end: 6.0 * w_t + tail,
        };
        pulse.check()?;
        Ok(pulse)
    }

    /// Window t_c ± `half_width`·w_t plus a tail.
    pub fn with_window(
        wavelength_nm: f64,
        peak_intensity: f64,
        w_t_fs: f64,
        half_width: f64,
        tail: f64,
    ) -> Result<Self> {
        let mut p = Self::new(wavelength_nm, peak_intensity, w_t_fs, tail)?;
        p.t_center = half_width * p.w_t;
        p.t_end = 2.0 * half_width * p.w_t + tail;
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        for t in [self.t_start, self.t_end] {
            if self.peak_intensity > 0.0 && self.envelope(t) >= ENVELOPE_FLOOR {
                return Err(Error::validation(format!(
                    "pulse envelope {:.2e} at window edge t={t:.1} exceeds {ENVELOPE_FLOOR:e}",
                    self.envelope(t)
                )));
            }
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        wavelength_nm_to_omega(self.wavelength_nm)
    }

    pub fn amplitude(&self) -> f64 {
        intensity_to_field(self.peak_intensity)
    }

    /// Intensity envelope exp[−2(t−t_c)²/w_t²].
    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.t_center) / self.w_t;
        (-2.0 * x * x).exp()
    }

    pub fn field(&self, t: f64) -> f64 {
        let s = t - self.t_center;
        let x = s / self.w_t;
        self.amplitude() * (-x * x).exp() * (self.omega() * s).cos()
    }

    /// First time after the peak at which the envelope drops below the floor.
    pub fn off_time(&self) -> f64 {
        self.t_center + self.w_t * (ENVELOPE_FLOOR.recip().ln() / 2.0).sqrt()
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Running field integrals on the step grid t_n = t_start + n·dt:
/// F1 = ∫𝓔, F2 = ∫F1, F3 = ∫F1², all from t_start.
#[derive(Debug, Clone)]
pub struct FieldIntegrals {
    pub t0: f64,
    pub dt: f64,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
}

impl FieldIntegrals {
    pub fn new(pulse: &LaserPulse, dt: f64, n_steps: usize) -> Self {
        const SUB: usize = 8;
        let h = dt / SUB as f64;
        let mut f1 = Vec::with_capacity(n_steps + 1);
        let mut f2 = Vec::with_capacity(n_steps + 1);
        let mut f3 = Vec::with_capacity(n_steps + 1);
        let (mut y1, mut y2, mut y3) = (0.0f64, 0.0f64, 0.0f64);
        f1.push(0.0);
        f2.push(0.0);
        f3.push(0.0);
        for n in 0..n_steps {
            for s in 0..SUB {
                let ta = pulse.t_start + n as f64 * dt + s as f64 * h;
                // RK4 on y' = (𝓔, y1, y1²); 𝓔 does not depend on y.
                let ea = pulse.field(ta);
                let em = pulse.field(ta + 0.5 * h);
                let eb = pulse.field(ta + h);
                let k1 = y1;
                let k2 = y1 + 0.5 * h * ea;
                let k3 = y1 + 0.5 * h * em;
                let k4 = y1 + h * em;
                y2 += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                y3 += h / 6.0 * (k1 * k1 + 2.0 * k2 * k2 + 2.0 * k3 * k3 + k4 * k4);
                y1 += h / 6.0 * (ea + 4.0 * em + eb);
            }
            f1.push(y1);
            f2.push(y2);
            f3.push(y3);
        }
        Self {
            t0: pulse.t_start,
            dt,
            f1,
            f2,
            f3,
        }
    }
}
