//! Born–Oppenheimer curves and transition dipole of the two-state ion.
//!
//! Tables are read as four whitespace-separated columns `R V1 V2 MU` in
//! atomic units. Energies are reported relative to the shared dissociation
//! asymptote, which is the internal energy zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use crate::units::Constants;

/// Potential energies and dipole at one internuclear distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialPoint {
    pub v1: f64,
    pub v2: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelPotential {
    Harmonic {
        omega: f64,
        r0: f64,
        depth: f64,
        mass: f64,
        gap: f64,
        mu_slope: f64,
    },
    Morse {
        de: f64,
        a: f64,
        re: f64,
        gap: f64,
        mu_slope: f64,
    },
    FlatCoupled {
        v_gap: f64,
        mu_const: f64,
    },
}

impl ModelPotential {
    fn eval(&self, r: f64) -> PotentialPoint {
        match *self {
            ModelPotential::Harmonic {
                omega,
                r0,
                depth,
                mass,
                gap,
                mu_slope,
            } => {
                let v1 = (0.5 * mass * omega * omega * (r - r0) * (r - r0) - depth).min(0.0);
                PotentialPoint {
                    v1,
                    v2: v1 + gap,
                    mu: mu_slope * r,
                }
            }
            ModelPotential::Morse {
                de,
                a,
                re,
                gap,
                mu_slope,
            } => {
                let e = 1.0 - (-a * (r - re)).exp();
                let v1 = de * e * e - de;
                PotentialPoint {
                    v1,
                    v2: v1 + gap,
                    mu: mu_slope * r,
                }
            }
            ModelPotential::FlatCoupled { v_gap, mu_const } => PotentialPoint {
                v1: 0.0,
                v2: v_gap,
                mu: mu_const,
            },
        }
    }

    fn mu_slope(&self) -> f64 {
        match *self {
            ModelPotential::Harmonic { mu_slope, .. } | ModelPotential::Morse { mu_slope, .. } => {
                mu_slope
            }
            ModelPotential::FlatCoupled { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Table {
        v1: CubicSpline,
        v2: CubicSpline,
        mu: CubicSpline,
    },
    Model(ModelPotential),
}

/// The electronic-structure input: V₁(R), V₂(R) and μ(R).
///
/// Immutable once built. Samples are kept as read so that a table survives a
/// write/read round trip bit-exactly; `evaluate` applies the asymptote shift.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSet {
    r_samples: Vec<f64>,
    v1_samples: Vec<f64>,
    v2_samples: Vec<f64>,
    mu_samples: Vec<f64>,
    asymptote: f64,
    mu_slope: f64,
    repr: Repr,
}

impl PotentialSet {
    /// Build from raw samples, checking every table invariant.
    pub fn from_samples(r: Vec<f64>, v1: Vec<f64>, v2: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if n < 4 {
            return Err(Error::validation(format!(
                "need at least 4 samples, got {n}"
            )));
        }
        if v1.len() != n || v2.len() != n || mu.len() != n {
            return Err(Error::validation("column lengths differ"));
        }
        if let Some(i) = r.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::validation(format!(
                "R must be positive, row {i} has {}",
                r[i]
            )));
        }
        if let Some(i) = r.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!(
                "R not strictly increasing at rows {i}..{}: {} then {}",
                i + 1,
                r[i],
                r[i + 1]
            )));
        }
        if let Some(i) = (0..n).find(|&i| v2[i] < v1[i]) {
            return Err(Error::validation(format!(
                "excited curve below ground curve at R={}: V2={} < V1={}",
                r[i], v2[i], v1[i]
            )));
        }
        let asymptote = (v1[n - 1] + v1[n - 2] + v1[n - 3]) / 3.0;
        if (v1[n - 1] - asymptote).abs() >= 1e-3 {
            return Err(Error::validation(format!(
                "ground curve not converged to its asymptote at r_max: |V1-asym|={:.3e}",
                (v1[n - 1] - asymptote).abs()
            )));
        }
        for (name, curve) in [("V1", &v1), ("V2", &v2)] {
            check_monotone_approach(name, &r, curve)?;
        }
        let mu_slope = mu[n - 1] / r[n - 1];
        let tail_slope = (mu[n - 1] - mu[n - 2]) / (r[n - 1] - r[n - 2]);
        if mu_slope == 0.0 || ((tail_slope - mu_slope) / mu_slope).abs() > 0.01 {
            return Err(Error::validation(format!(
                "dipole not asymptotically linear at r_max: mu/R={mu_slope:.5}, dmu/dR={tail_slope:.5}"
            )));
        }
        let repr = Repr::Table {
            v1: CubicSpline::natural(&r, &v1),
            v2: CubicSpline::natural(&r, &v2),
            mu: CubicSpline::natural(&r, &mu),
        };
        Ok(Self {
            r_samples: r,
            v1_samples: v1,
            v2_samples: v2,
            mu_samples: mu,
            asymptote,
            mu_slope,
            repr,
        })
    }

    pub fn r_samples(&self) -> &[f64] {
        &self.r_samples
    }

    pub fn v1_samples(&self) -> &[f64] {
        &self.v1_samples
    }

    pub fn v2_samples(&self) -> &[f64] {
        &self.v2_samples
    }

    pub fn mu_samples(&self) -> &[f64] {
        &self.mu_samples
    }

    /// Dissociation limit in the units of the source table.
    pub fn asymptote(&self) -> f64 {
        self.asymptote
    }

    pub fn mu_slope(&self) -> f64 {
        self.mu_slope
    }

    pub fn r_min(&self) -> f64 {
        self.r_samples[0]
    }

    pub fn r_max(&self) -> f64 {
        self.r_samples[self.r_samples.len() - 1]
    }

    pub fn is_model(&self) -> bool {
        matches!(self.repr, Repr::Model(_))
    }

    /// V₁, V₂ (asymptote-referenced) and μ at distance `r > 0`.
    pub fn evaluate(&self, r: f64) -> PotentialPoint {
        match &self.repr {
            Repr::Model(m) => m.eval(r),
            Repr::Table { v1, v2, mu } => {
                let a = self.asymptote;
                if r > self.r_max() {
                    PotentialPoint {
                        v1: 0.0,
                        v2: 0.0,
                        mu: self.mu_slope * r,
                    }
                } else if r < self.r_min() {
                    let r0 = self.r_min();
                    let d = r - r0;
                    PotentialPoint {
                        v1: self.v1_samples[0] - a + v1.derivative(r0) * d,
                        v2: self.v2_samples[0] - a + v2.derivative(r0) * d,
                        mu: self.mu_samples[0] + mu.derivative(r0) * d,
                    }
                } else {
                    PotentialPoint {
                        v1: v1.eval(r) - a,
                        v2: v2.eval(r) - a,
                        mu: mu.eval(r),
                    }
                }
            }
        }
    }

    /// Analytic fixture. Parameters by kind:
    /// `harmonic`: omega, r0 (optional depth, mass, gap, mu_slope);
    /// `morse`: de, a, re (optional gap, mu_slope);
    /// `flat-coupled`: v_gap, mu_const.
    /// All kinds accept r_min, r_max, n for the reporting grid.
    pub fn model(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str| -> Result<f64> {
            match params.get(key) {
                Some(&v) if v > 0.0 && v.is_finite() => Ok(v),
                Some(&v) => Err(Error::validation(format!(
                    "{kind}: parameter `{key}` must be positive, got {v}"
                ))),
                None => Err(Error::validation(format!(
                    "{kind}: missing parameter `{key}`"
                ))),
            }
        };
        let opt = |key: &str, default: f64| -> Result<f64> {
            if params.contains_key(key) {
                get(key)
            } else {
                Ok(default)
            }
        };
        let model = match kind {
            "harmonic" => ModelPotential::Harmonic {
                omega: get("omega")?,
                r0: get("r0")?,
                depth: opt("depth", 0.5)?,
                mass: opt("mass", Constants::hydrogen().reduced_mass)?,
                gap: opt("gap", 0.3)?,
                mu_slope: opt("mu_slope", 0.5)?,
            },
            "morse" => ModelPotential::Morse {
                de: get("de")?,
                a: get("a")?,
                re: get("re")?,
                gap: opt("gap", 0.3)?,
                mu_slope: opt("mu_slope", 0.5)?,
            },
            "flat-coupled" => ModelPotential::FlatCoupled {
                v_gap: get("v_gap")?,
                mu_const: get("mu_const")?,
            },
            other => {
                return Err(Error::validation(format!(
                    "unknown model kind `{other}` (expected harmonic, morse or flat-coupled)"
                )))
            }
        };
        let r_min = opt("r_min", 0.05)?;
        let r_max = opt("r_max", 60.0)?;
        let n = opt("n", 2001.0)? as usize;
        if r_max <= r_min || n < 4 {
            return Err(Error::validation(
                "model grid needs r_max > r_min and n >= 4",
            ));
        }
        Ok(Self::from_model(model, r_min, r_max, n))
    }

    pub fn from_model(model: ModelPotential, r_min: f64, r_max: f64, n: usize) -> Self {
        let dr = (r_max - r_min) / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| r_min + i as f64 * dr).collect();
        let pts: Vec<PotentialPoint> = r.iter().map(|&x| model.eval(x)).collect();
        Self {
            v1_samples: pts.iter().map(|p| p.v1).collect(),
            v2_samples: pts.iter().map(|p| p.v2).collect(),
            mu_samples: pts.iter().map(|p| p.mu).collect(),
            r_samples: r,
            asymptote: 0.0,
            mu_slope: model.mu_slope(),
            repr: Repr::Model(model),
        }
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text, path)
    }

    pub fn parse_table(text: &str, path: &Path) -> Result<Self> {
        let (mut r, mut v1, mut v2, mut mu) = (vec![], vec![], vec![], vec![]);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg,
            };
            if fields.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", fields.len())));
            }
            let mut vals = [0.0; 4];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot = f
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad number `{f}`: {e}")))?;
                if !slot.is_finite() {
                    return Err(err(format!("non-finite value `{f}`")));
                }
            }
            r.push(vals[0]);
            v1.push(vals[1]);
            v2.push(vals[2]);
            mu.push(vals[3]);
        }
        Self::from_samples(r, v1, v2, mu)
    }

    /// Table text that [`PotentialSet::parse_table`] reads back bit-exactly.
    pub fn to_table_string(&self) -> String {
        let mut out = String::from("#  R  V1  V2  MU  (atomic units)\n");
        for i in 0..self.r_samples.len() {
            let _ = writeln!(
                out,
                "{:e} {:e} {:e} {:e}",
                self.r_samples[i], self.v1_samples[i], self.v2_samples[i], self.mu_samples[i]
            );
        }
        out
    }

    pub fn write_table(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_table_string())?;
        Ok(())
    }
}

fn check_monotone_approach(name: &str, r: &[f64], v: &[f64]) -> Result<()> {
    let n = v.len();
    let last_min = (1..n - 1)
        .rev()
        .find(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1])
        .unwrap_or(0);
    let tail = &v[last_min..];
    let rising = tail[tail.len() - 1] >= tail[0];
    for (i, w) in tail.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (rising && step < -1e-12) || (!rising && step > 1e-12) {
            return Err(Error::validation(format!(
                "{name} does not approach the asymptote monotonically beyond R={}",
                r[last_min + i]
            )));
        }
    }
    Ok(())
}
