//! Run configuration: TOML with unit-suffixed physical values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use photofrag_core::averaging::{FocusModel, PopulationModel};
use photofrag_core::grid::RadialGrid;
use photofrag_core::io::sha256_hex;
use photofrag_core::potentials::PotentialSet;
use photofrag_core::propagator::{AsymptoticPhase, SplitConfig};
use photofrag_core::pulse::width_from_autocorrelation;
use photofrag_core::spectra::{check_flight_time, DetectorGrid};
use photofrag_core::units::{Constants, MASS_RATIO};
use serde::Deserialize;
use serde_json::json;

use crate::error::{EngineError, Result};
use crate::quantity as q;

#[derive(Debug, Deserialize)]
struct RawConfig {
    potential: RawPotential,
    pulse: RawPulse,
    focus: RawFocus,
    beam: RawBeam,
    grid: RawGrid,
    populations: RawPopulations,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
struct RawPotential {
    table: Option<String>,
    model: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, String>,
    mass_ratio: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawPulse {
    wavelength: String,
    width: Option<String>,
    autocorrelation: Option<String>,
    #[serde(default = "default_window")]
    window: f64,
    #[serde(default = "default_tail")]
    tail: String,
}

fn default_window() -> f64 {
    2.2
}

fn default_tail() -> String {
    "4000 au".into()
}

#[derive(Debug, Deserialize)]
struct RawFocus {
    energy: String,
    autocorrelation: Option<String>,
    focal_length: String,
    b_x: String,
    b_y: String,
    peak_intensity: Option<String>,
    n_intensities: usize,
}

#[derive(Debug, Deserialize)]
struct RawBeam {
    velocity: String,
    half_width: String,
    #[serde(default = "default_drift")]
    drift_length: String,
    detector_gate: String,
}

fn default_drift() -> String {
    "1 m".into()
}

#[derive(Debug, Deserialize)]
struct RawGrid {
    n_r: usize,
    #[serde(default = "default_r_min")]
    r_min: String,
    r_max: String,
    n_l: usize,
    dt: String,
    r_split: String,
    #[serde(default = "default_mask")]
    mask_width: String,
    #[serde(default = "default_stride")]
    split_stride: usize,
    #[serde(default = "default_oversample")]
    k_oversample: usize,
    #[serde(default = "default_k_keep")]
    k_keep: String,
    #[serde(default = "default_phase")]
    asymptotic_phase: String,
    #[serde(default = "default_diag")]
    diag_stride: usize,
}

fn default_r_min() -> String {
    "0.05 au".into()
}
fn default_mask() -> String {
    "3 au".into()
}
fn default_stride() -> usize {
    10
}
fn default_oversample() -> usize {
    4
}
fn default_k_keep() -> String {
    "14 au".into()
}
fn default_phase() -> String {
    "volkov".into()
}
fn default_diag() -> usize {
    100
}

#[derive(Debug, Deserialize)]
struct RawPopulations {
    file: String,
    #[serde(default = "default_n_max")]
    n_max: usize,
}

fn default_n_max() -> usize {
    6
}

#[derive(Debug, Deserialize)]
struct RawOutput {
    #[serde(default = "default_k_rho_max")]
    k_rho_max: String,
    #[serde(default = "default_n_k_rho")]
    n_k_rho: usize,
    #[serde(default = "default_n_alpha")]
    n_alpha: usize,
    #[serde(default)]
    angular_cuts: Vec<String>,
    #[serde(default = "default_stages")]
    stages: String,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            k_rho_max: default_k_rho_max(),
            n_k_rho: default_n_k_rho(),
            n_alpha: default_n_alpha(),
            angular_cuts: Vec::new(),
            stages: default_stages(),
        }
    }
}

fn default_k_rho_max() -> String {
    "12 au".into()
}
fn default_n_k_rho() -> usize {
    1201
}
fn default_n_alpha() -> usize {
    181
}
fn default_stages() -> String {
    "all".into()
}

/// How far the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Propagate,
    Project,
    Average,
}

impl Stage {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "propagate" => Ok(Stage::Propagate),
            "project" => Ok(Stage::Project),
            "average" | "all" => Ok(Stage::Average),
            other => Err(EngineError::Config(format!(
                "output.stages = \"{other}\": expected propagate, project, average or all"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Propagate => "propagate",
            Stage::Project => "project",
            Stage::Average => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSource {
    Table(PathBuf),
    Model {
        kind: String,
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    pub wavelength_nm: f64,
    pub w_t_fs: f64,
    /// Half window in units of w_t.
    pub window: f64,
    /// a.u.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub n_r: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_l: usize,
    pub dt: f64,
    pub split: SplitConfig,
    pub asymptotic_phase: AsymptoticPhase,
    pub diag_stride: usize,
}

impl GridParams {
    pub fn radial(&self) -> Result<RadialGrid> {
        Ok(RadialGrid::new(self.n_r, self.r_min, self.r_max)?)
    }
}

/// Validated configuration with every quantity in internal units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub potential_source: PotentialSource,
    pub potential: PotentialSet,
    pub potential_sha256: String,
    pub constants: Constants,
    pub pulse: PulseParams,
    pub focus: FocusModel,
    pub n_intensities: usize,
    /// a.u.
    pub detector_gate: f64,
    pub grid: GridParams,
    pub populations: PopulationModel,
    pub populations_path: PathBuf,
    pub populations_sha256: String,
    pub detector: DetectorGrid,
    pub angular_cuts: Vec<f64>,
    pub stage: Stage,
    /// Hash of the canonical resolved configuration and its input files.
    pub digest: String,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read(path: &Path, what: &str) -> Result<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| EngineError::Config(format!("{what} '{}': {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Config(format!("config '{}': {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let mut unknown = Vec::new();
        let raw: RawConfig = serde_ignored::deserialize(de, |p| unknown.push(p.to_string()))
            .map_err(|e| EngineError::Config(format!("{}: {}", path.display(), e.message())))?;
        if !unknown.is_empty() {
            return Err(EngineError::Config(format!(
                "{}: unknown keys: {}",
                path.display(),
                unknown.join(", ")
            )));
        }
        Self::from_raw(raw, path, base)
    }

    fn from_raw(raw: RawConfig, path: &Path, base: &Path) -> Result<Self> {
        let cfg_err = |m: String| EngineError::Config(m);

        let (potential_source, potential, potential_sha256) = match (&raw.potential.table, &raw.potential.model) {
            (Some(t), None) => {
                let p = resolve(base, t);
                let bytes = read(&p, "potential table")?;
                let text = String::from_utf8(bytes.clone())
                    .map_err(|_| cfg_err(format!("potential table '{}' is not UTF-8", p.display())))?;
                let pot = PotentialSet::parse_table(&text, &p)?;
                (PotentialSource::Table(p), pot, sha256_hex(&bytes))
            }
            (None, Some(kind)) => {
                let mut params = BTreeMap::new();
                for (k, v) in &raw.potential.params {
                    params.insert(k.clone(), q::atomic(&format!("potential.params.{k}"), v)?);
                }
                let pot = PotentialSet::model(kind, &params)?;
                let canon = json!({"model": kind, "params": params}).to_string();
                (
                    PotentialSource::Model {
                        kind: kind.clone(),
                        params,
                    },
                    pot,
                    sha256_hex(canon.as_bytes()),
                )
            }
            _ => {
                return Err(cfg_err(
                    "potential: give exactly one of `table` or `model`".into(),
                ))
            }
        };
        let constants = Constants::from_mass_ratio(raw.potential.mass_ratio.unwrap_or(MASS_RATIO));

        let p = &raw.pulse;
        let t_ac_pulse = p
            .autocorrelation
            .as_deref()
            .map(|s| q::time_fs("pulse.autocorrelation", s))
            .transpose()?;
        let w_t_fs = match (&p.width, t_ac_pulse) {
            (Some(w), _) => q::time_fs("pulse.width", w)?,
            (None, Some(t)) => width_from_autocorrelation(t),
            (None, None) => return Err(cfg_err("pulse: give `width` or `autocorrelation`".into())),
        };
        let pulse = PulseParams {
            wavelength_nm: q::length_nm("pulse.wavelength", &p.wavelength)?,
            w_t_fs,
            window: p.window,
            tail: q::time_au("pulse.tail", &p.tail)?,
        };
        if !(pulse.wavelength_nm > 0.0 && pulse.w_t_fs > 0.0 && pulse.window > 0.0 && pulse.tail >= 0.0) {
            return Err(cfg_err("pulse: wavelength, width and window must be positive".into()));
        }

        let f = &raw.focus;
        let t_ac = match (&f.autocorrelation, t_ac_pulse) {
            (Some(s), _) => q::time_fs("focus.autocorrelation", s)?,
            (None, Some(t)) => t,
            (None, None) => 2.0 * std::f64::consts::LN_2.sqrt() * w_t_fs,
        };
        let focus = FocusModel {
            e0: q::energy_mj("focus.energy", &f.energy)?,
            t_ac,
            wavelength: pulse.wavelength_nm,
            focal_length: q::length_mm("focus.focal_length", &f.focal_length)?,
            b_x: q::length_mm("focus.b_x", &f.b_x)?,
            b_y: q::length_mm("focus.b_y", &f.b_y)?,
            half_width: q::length_um("beam.half_width", &raw.beam.half_width)?,
            override_i0: f
                .peak_intensity
                .as_deref()
                .map(|s| q::intensity("focus.peak_intensity", s))
                .transpose()?,
        };
        if !(focus.e0 > 0.0 && focus.focal_length > 0.0 && focus.b_x > 0.0 && focus.b_y > 0.0 && focus.half_width > 0.0) {
            return Err(cfg_err("focus: energy, focal_length, b_x, b_y and beam.half_width must be positive".into()));
        }
        if f.n_intensities == 0 {
            return Err(cfg_err("focus.n_intensities must be at least 1".into()));
        }

        let g = &raw.grid;
        let grid = GridParams {
            n_r: g.n_r,
            r_min: q::length_au("grid.r_min", &g.r_min)?,
            r_max: q::length_au("grid.r_max", &g.r_max)?,
            n_l: g.n_l,
            dt: q::time_au("grid.dt", &g.dt)?,
            split: SplitConfig {
                r_split: q::length_au("grid.r_split", &g.r_split)?,
                mask_width: q::length_au("grid.mask_width", &g.mask_width)?,
                stride: g.split_stride,
                k_oversample: g.k_oversample,
                k_keep: q::momentum("grid.k_keep", &g.k_keep)?,
            },
            asymptotic_phase: g.asymptotic_phase.parse().map_err(|e: photofrag_core::Error| cfg_err(format!("grid.asymptotic_phase: {e}")))?,
            diag_stride: g.diag_stride,
        };
        let radial = grid.radial()?;
        if grid.n_l == 0 || !(grid.dt > 0.0) || grid.split.stride == 0 || grid.split.k_oversample == 0 {
            return Err(cfg_err("grid: n_l, dt, split_stride and k_oversample must be positive".into()));
        }
        if grid.split.r_split + 4.0 * grid.split.mask_width >= grid.r_max {
            return Err(cfg_err(format!(
                "grid: r_split + 4·mask_width = {} must stay below r_max = {}",
                grid.split.r_split + 4.0 * grid.split.mask_width,
                grid.r_max
            )));
        }
        if grid.split.k_keep > radial.k_max() {
            return Err(cfg_err(format!(
                "grid: k_keep = {} exceeds the radial grid limit π/ΔR = {:.3}",
                grid.split.k_keep,
                radial.k_max()
            )));
        }

        let b = &raw.beam;
        let detector_gate = q::momentum("beam.detector_gate", &b.detector_gate)?;
        let o = &raw.output;
        let detector = DetectorGrid {
            k_rho_max: q::momentum("output.k_rho_max", &o.k_rho_max)?,
            n_k_rho: o.n_k_rho,
            n_alpha: o.n_alpha,
            beam_velocity: q::velocity("beam.velocity", &b.velocity)?,
            drift_length: q::length_m("beam.drift_length", &b.drift_length)?,
        };
        if detector.n_k_rho < 2 || detector.n_alpha < 2 || !(detector.k_rho_max > 0.0) {
            return Err(cfg_err("output: need n_k_rho, n_alpha >= 2 and k_rho_max > 0".into()));
        }
        if detector.k_rho_max >= grid.split.k_keep {
            return Err(cfg_err(format!(
                "output.k_rho_max = {} must lie below the retained momentum range grid.k_keep = {}",
                detector.k_rho_max, grid.split.k_keep
            )));
        }
        if !(detector_gate >= 0.0) {
            return Err(cfg_err("beam.detector_gate must be >= 0".into()));
        }
        if !check_flight_time(detector.k_rho_max, detector.beam_velocity, &constants) {
            log::warn!(
                "flight-time correction exceeds 1% at k_ρ = {} for v = {} m/s",
                detector.k_rho_max,
                detector.beam_velocity
            );
        }
        let mut angular_cuts = Vec::new();
        for (i, s) in o.angular_cuts.iter().enumerate() {
            let k = q::momentum(&format!("output.angular_cuts[{i}]"), s)?;
            if !(k > 0.0 && k <= detector.k_rho_max) {
                return Err(cfg_err(format!("output.angular_cuts[{i}] = {k} outside (0, k_rho_max]")));
            }
            angular_cuts.push(k);
        }
        let stage = Stage::parse(&o.stages)?;
        if stage == Stage::Average && f.n_intensities < 4 {
            return Err(cfg_err(format!(
                "focus.n_intensities = {} but intensity averaging needs at least 4",
                f.n_intensities
            )));
        }

        let populations_path = resolve(base, &raw.populations.file);
        let pop_bytes = read(&populations_path, "population file")?;
        let pop_text = String::from_utf8(pop_bytes.clone())
            .map_err(|_| cfg_err(format!("population file '{}' is not UTF-8", populations_path.display())))?;
        let populations = PopulationModel::parse(&pop_text, raw.populations.n_max)
            .map_err(|e| cfg_err(format!("{}: {e}", populations_path.display())))?;

        let mut cfg = RunConfig {
            path: path.to_path_buf(),
            potential_source,
            potential,
            potential_sha256,
            constants,
            pulse,
            focus,
            n_intensities: f.n_intensities,
            detector_gate,
            grid,
            populations,
            populations_path,
            populations_sha256: sha256_hex(&pop_bytes),
            detector,
            angular_cuts,
            stage,
            digest: String::new(),
        };
        cfg.digest = sha256_hex(cfg.canonical().to_string().as_bytes());
        Ok(cfg)
    }

    /// Resolved settings as JSON with a fixed key order.
    pub fn canonical(&self) -> serde_json::Value {
        let d = &self.detector;
        let f = &self.focus;
        json!({
            "potential_sha256": self.potential_sha256,
            "mass_ratio": self.constants.mass_ratio,
            "pulse": {
                "wavelength_nm": self.pulse.wavelength_nm,
                "w_t_fs": self.pulse.w_t_fs,
                "window": self.pulse.window,
                "tail_au": self.pulse.tail,
            },
            "focus": {
                "e0_mj": f.e0,
                "t_ac_fs": f.t_ac,
                "focal_length_mm": f.focal_length,
                "b_x_mm": f.b_x,
                "b_y_mm": f.b_y,
                "half_width_um": f.half_width,
                "override_i0": f.override_i0,
                "n_intensities": self.n_intensities,
            },
            "grid": self.grid_json(),
            "detector": {
                "k_rho_max": d.k_rho_max,
                "n_k_rho": d.n_k_rho,
                "n_alpha": d.n_alpha,
                "beam_velocity": d.beam_velocity,
                "drift_length": d.drift_length,
                "gate": self.detector_gate,
            },
            "populations_sha256": self.populations_sha256,
            "n_max": self.populations.n_max,
            "angular_cuts": self.angular_cuts,
            "stage": self.stage.as_str(),
        })
    }

    pub fn grid_json(&self) -> serde_json::Value {
        let g = &self.grid;
        json!({
            "n_r": g.n_r,
            "r_min": g.r_min,
            "r_max": g.r_max,
            "n_l": g.n_l,
            "dt": g.dt,
            "r_split": g.split.r_split,
            "mask_width": g.split.mask_width,
            "split_stride": g.split.stride,
            "k_oversample": g.split.k_oversample,
            "k_keep": g.split.k_keep,
            "asymptotic_phase": g.asymptotic_phase.as_str(),
            "diag_stride": g.diag_stride,
        })
    }
}
