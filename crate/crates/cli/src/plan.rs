//! Expansion of a configuration into the (v, N, M_N, I) job lattice.

use std::fmt::Write as _;
use std::path::PathBuf;

use photofrag_core::averaging::intensity_grid;
use photofrag_core::io::sha256_hex;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, Stage};

/// Bumped whenever cached amplitudes or images change meaning.
pub const CACHE_SCHEMA: u32 = 1;

pub fn code_version() -> String {
    format!("{}+schema{}", env!("CARGO_PKG_VERSION"), CACHE_SCHEMA)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Job {
    pub v: usize,
    pub n_rot: usize,
    pub m_n: usize,
    /// Index into [`RunPlan::intensities`].
    pub i_index: usize,
    /// W/cm².
    pub intensity: f64,
    /// Content hash of everything that determines the propagation.
    pub key: String,
}

impl Job {
    pub fn label(&self) -> String {
        format!("v{}_N{}_M{}_I{:02}", self.v, self.n_rot, self.m_n, self.i_index)
    }
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub config: RunConfig,
    pub digest: String,
    pub intensities: Vec<f64>,
    pub jobs: Vec<Job>,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub stage: Stage,
}

fn job_key(cfg: &RunConfig, v: usize, n_rot: usize, m_n: usize, intensity: f64) -> String {
    let p = &cfg.pulse;
    let desc = json!({
        "code": code_version(),
        "potential_sha256": cfg.potential_sha256,
        "mass_ratio": cfg.constants.mass_ratio,
        "pulse": {
            "wavelength_nm": p.wavelength_nm,
            "w_t_fs": p.w_t_fs,
            "window": p.window,
            "tail_au": p.tail,
            "intensity": intensity,
        },
        "grid": cfg.grid_json(),
        "state": {"v": v, "N": n_rot, "M": m_n},
    });
    sha256_hex(desc.to_string().as_bytes())
}

/// Builds the job lattice: every active v, N ≤ n_max, M_N = 0…N, each intensity.
pub fn plan(config: RunConfig, out_dir: PathBuf, cache_dir: PathBuf) -> RunPlan {
    let intensities = if config.n_intensities == 1 {
        vec![photofrag_core::averaging::peak_intensity(&config.focus).value]
    } else {
        intensity_grid(&config.focus, config.n_intensities)
    };
    let mut jobs = Vec::new();
    for v in config.populations.active() {
        for n_rot in 0..=config.populations.n_max {
            for m_n in 0..=n_rot {
                for (i_index, &intensity) in intensities.iter().enumerate() {
                    jobs.push(Job {
                        v,
                        n_rot,
                        m_n,
                        i_index,
                        intensity,
                        key: job_key(&config, v, n_rot, m_n, intensity),
                    });
                }
            }
        }
    }
    let digest = config.digest.clone();
    let stage = config.stage;
    RunPlan {
        config,
        digest,
        intensities,
        jobs,
        out_dir,
        cache_dir,
        stage,
    }
}

impl RunPlan {
    /// Human-readable lattice for `plan --dry-run`.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config digest {}", self.digest);
        let _ = writeln!(s, "stages: {}", self.stage.as_str());
        let _ = writeln!(s, "intensities (W/cm2):");
        for (i, x) in self.intensities.iter().enumerate() {
            let _ = writeln!(s, "  I{i:02} {x:.6e}");
        }
        let _ = writeln!(s, "{} jobs:", self.jobs.len());
        for j in &self.jobs {
            let _ = writeln!(s, "  {} {}", j.label(), &j.key[..16]);
        }
        s
    }
}
