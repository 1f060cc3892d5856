//! Job execution, caching and the averaging chain.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use photofrag_core::angular::AngularBasis;
use photofrag_core::averaging::{intensity_average, mn_average, rotational_average, vibrational_average};
use photofrag_core::boundstates::{rotational_shift, solve_bound_state};
use photofrag_core::io::{self, sha256_hex};
use photofrag_core::propagator::{diagnostics_csv, run_job, MomentumAmplitude, Numerics};
use photofrag_core::pulse::LaserPulse;
use photofrag_core::spectra::{abel_project, convolve_detector, cut, momentum_spectrum, normalize, CutAxis};
use photofrag_core::DetectorImage;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cache::{Cache, Lookup};
use crate::config::{RunConfig, Stage};
use crate::error::{EngineError, Result};
use crate::plan::{code_version, Job, RunPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Computed,
    Cached,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobRecord {
    pub label: String,
    pub v: usize,
    pub n_rot: usize,
    pub m_n: usize,
    pub i_index: usize,
    pub intensity: f64,
    pub key: String,
    pub status: JobStatus,
    pub seconds: f64,
    pub steps: usize,
    pub final_internal_norm: f64,
    pub dissociation_probability: f64,
    pub image_key: Option<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub numerical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_path: String,
    pub config_digest: String,
    pub inputs: serde_json::Value,
    pub settings: serde_json::Value,
    pub intensities: Vec<f64>,
    pub jobs: Vec<JobRecord>,
    pub propagations: usize,
    pub cache_hits: usize,
    pub failures: usize,
    /// Relative output path → sha256.
    pub outputs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn outcome(&self) -> Result<()> {
        if self.failures == 0 {
            return Ok(());
        }
        let all_numerical = self.failures == self.jobs.len() && self.jobs.iter().all(|j| j.numerical);
        if all_numerical {
            Err(EngineError::Numerical(self.failures))
        } else {
            Err(EngineError::Partial {
                failed: self.failures,
                total: self.jobs.len(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub workers: usize,
    /// Run missing propagations; when false a missing amplitude is a job failure.
    pub propagate: bool,
    /// Recompute images even when cached.
    pub reproject: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            propagate: true,
            reproject: false,
        }
    }
}

struct Outputs {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Outputs {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        io::write_atomic(&path, bytes)?;
        self.hashes.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn write_image(&mut self, rel: &str, img: &DetectorImage, fields: BTreeMap<String, String>, csv: bool) -> Result<()> {
        let block = io::encode_image(img);
        let meta = io::Sidecar::new(fields, &block);
        self.write(&format!("{rel}.blk"), &block)?;
        self.write(&format!("{rel}.blk.meta"), meta.render().as_bytes())?;
        if csv {
            self.write(&format!("{rel}.csv"), io::image_csv(img).as_bytes())?;
        }
        Ok(())
    }

    fn write_cuts(&mut self, rel: &str, img: &DetectorImage, k_cuts: &[f64]) -> Result<()> {
        let c = cut(img, CutAxis::Alpha0)?;
        self.write(&format!("{rel}_cut_alpha0.csv"), c.to_csv("k_rho").as_bytes())?;
        for &k in k_cuts {
            let c = cut(img, CutAxis::FixedKRho(k))?;
            self.write(&format!("{rel}_cut_k{k:.2}.csv"), c.to_csv("alpha").as_bytes())?;
        }
        Ok(())
    }
}

fn image_key(cfg: &RunConfig, job_key: &str) -> String {
    let d = &cfg.detector;
    let desc = json!({
        "code": code_version(),
        "job": job_key,
        "k_rho_max": d.k_rho_max,
        "n_k_rho": d.n_k_rho,
        "n_alpha": d.n_alpha,
        "beam_velocity": d.beam_velocity,
        "drift_length": d.drift_length,
    });
    sha256_hex(desc.to_string().as_bytes())
}

fn job_fields(plan: &RunPlan, job: &Job) -> BTreeMap<String, String> {
    let mut f = BTreeMap::new();
    f.insert("v".into(), job.v.to_string());
    f.insert("N".into(), job.n_rot.to_string());
    f.insert("M_N".into(), job.m_n.to_string());
    f.insert("intensity_wcm2".into(), format!("{:e}", job.intensity));
    f.insert("job_key".into(), job.key.clone());
    f.insert("config_digest".into(), plan.digest.clone());
    f.insert("code_version".into(), code_version());
    f
}

/// Propagates one job from scratch.
fn propagate(cfg: &RunConfig, job: &Job) -> photofrag_core::Result<photofrag_core::JobOutput> {
    let grid = cfg.grid.radial().map_err(|e| photofrag_core::Error::Config(e.to_string()))?;
    let state = solve_bound_state(&cfg.potential, &cfg.constants, job.n_rot, job.v, &grid)?;
    let basis = AngularBasis::new(job.m_n, cfg.grid.n_l)?;
    let p = &cfg.pulse;
    let pulse = LaserPulse::with_window(p.wavelength_nm, job.intensity, p.w_t_fs, p.window, p.tail)?;
    let mut numerics = Numerics::new(cfg.grid.dt, Some(cfg.grid.split));
    numerics.asymptotic_phase = cfg.grid.asymptotic_phase;
    numerics.diag_stride = cfg.grid.diag_stride;
    run_job(
        &cfg.potential,
        &cfg.constants,
        &state,
        job.m_n as i64,
        &pulse,
        &grid,
        &basis,
        &numerics,
    )
}

struct JobResult {
    record: JobRecord,
    diagnostics: Option<String>,
    warnings: Vec<String>,
}

fn run_one(plan: &RunPlan, cache: &Cache, job: &Job, opts: ExecOptions) -> JobResult {
    let cfg = &plan.config;
    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut record = JobRecord {
        label: job.label(),
        v: job.v,
        n_rot: job.n_rot,
        m_n: job.m_n,
        i_index: job.i_index,
        intensity: job.intensity,
        key: job.key.clone(),
        status: JobStatus::Cached,
        seconds: 0.0,
        steps: 0,
        final_internal_norm: f64::NAN,
        dissociation_probability: f64::NAN,
        image_key: None,
        error: None,
        numerical: false,
    };
    let fail = |mut record: JobRecord, e: String, numerical: bool, warnings: Vec<String>| {
        log::error!("{}: {e}", record.label);
        record.status = JobStatus::Failed;
        record.error = Some(e);
        record.numerical = numerical;
        JobResult {
            record,
            diagnostics: None,
            warnings,
        }
    };

    let (amplitude, diagnostics): (MomentumAmplitude, String) = match cache.load_job(&job.key) {
        Lookup::Hit(c) => {
            record.steps = c.steps;
            record.final_internal_norm = c.final_internal_norm;
            (c.amplitude, c.diagnostics_csv)
        }
        other => {
            if let Lookup::Corrupt(msg) = other {
                log::warn!("{msg}; re-running");
                warnings.push(msg);
            }
            if !opts.propagate {
                return fail(record, "no cached amplitude".into(), false, warnings);
            }
            log::info!("{}: propagating", job.label());
            match propagate(cfg, job) {
                Ok(out) => {
                    let csv = diagnostics_csv(&out.diagnostics);
                    if let Err(e) = cache.store_job(
                        &job.key,
                        job_fields(plan, job),
                        &out.amplitude,
                        &csv,
                        out.final_internal_norm,
                        out.steps,
                    ) {
                        return fail(record, format!("cache write: {e}"), false, warnings);
                    }
                    record.status = JobStatus::Computed;
                    record.steps = out.steps;
                    record.final_internal_norm = out.final_internal_norm;
                    (out.amplitude, csv)
                }
                Err(e) => {
                    let numerical = e.is_numerical();
                    return fail(record, e.to_string(), numerical, warnings);
                }
            }
        }
    };
    record.dissociation_probability = amplitude.norm();

    if plan.stage >= Stage::Project {
        let ikey = image_key(cfg, &job.key);
        let cached = if opts.reproject {
            Lookup::Miss
        } else {
            cache.load_image(&ikey)
        };
        match cached {
            Lookup::Hit(_) => {}
            other => {
                if let Lookup::Corrupt(msg) = other {
                    log::warn!("{msg}; re-projecting");
                    warnings.push(msg);
                }
                let spec = momentum_spectrum(&amplitude);
                let img = match abel_project(&spec, &cfg.detector) {
                    Ok(img) => img,
                    Err(e) => return fail(record, format!("projection: {e}"), e.is_numerical(), warnings),
                };
                let mut fields = job_fields(plan, job);
                fields.insert("image_key".into(), ikey.clone());
                if let Err(e) = cache.store_image(&ikey, fields, &img) {
                    return fail(record, format!("cache write: {e}"), false, warnings);
                }
            }
        }
        record.image_key = Some(ikey);
    }
    record.seconds = start.elapsed().as_secs_f64();
    JobResult {
        record,
        diagnostics: Some(diagnostics),
        warnings,
    }
}

fn load_image(cache: &Cache, key: &str) -> Result<DetectorImage> {
    match cache.load_image(key) {
        Lookup::Hit(img) => Ok(img),
        Lookup::Miss => Err(photofrag_core::Error::Incomplete(format!("image {key} missing from cache")).into()),
        Lookup::Corrupt(m) => Err(photofrag_core::Error::Corrupt(m).into()),
    }
}

/// Per-v images after the M_N and rotational averages, one per intensity.
fn per_v_images(
    plan: &RunPlan,
    cache: &Cache,
    records: &[JobRecord],
    v: usize,
) -> Result<Vec<(f64, DetectorImage)>> {
    let cfg = &plan.config;
    let n_max = cfg.populations.n_max;
    let grid = cfg.grid.radial()?;
    let mut shifts = BTreeMap::new();
    for n in 0..=n_max {
        shifts.insert(n, rotational_shift(&cfg.potential, &cfg.constants, v, n, &grid)?);
    }
    let mut out = Vec::with_capacity(plan.intensities.len());
    for (i, &intensity) in plan.intensities.iter().enumerate() {
        let mut by_n = BTreeMap::new();
        for n in 0..=n_max {
            let mut by_m = BTreeMap::new();
            for m in 0..=n {
                let r = records
                    .iter()
                    .find(|r| r.v == v && r.n_rot == n && r.m_n == m && r.i_index == i)
                    .ok_or_else(|| photofrag_core::Error::Incomplete(format!("no job for v={v} N={n} M={m} I{i:02}")))?;
                let key = r.image_key.as_deref().ok_or_else(|| {
                    photofrag_core::Error::Incomplete(format!("{} has no image", r.label))
                })?;
                by_m.insert(m, load_image(cache, key)?);
            }
            by_n.insert(n, mn_average(&by_m, n)?);
        }
        out.push((intensity, rotational_average(&by_n, v, &cfg.populations, &shifts)?));
    }
    Ok(out)
}

/// Vibrational average, detector window, then the single normalization.
pub fn finish_chain(
    per_v: &BTreeMap<usize, DetectorImage>,
    cfg: &RunConfig,
) -> photofrag_core::Result<DetectorImage> {
    let vib = vibrational_average(per_v, &cfg.populations)?;
    let convolved = convolve_detector(&vib, cfg.detector_gate);
    normalize(&convolved)
}

fn average(plan: &RunPlan, cache: &Cache, records: &[JobRecord], out: &mut Outputs) -> Result<()> {
    let cfg = &plan.config;
    let mut averaged = BTreeMap::new();
    let mut peak = BTreeMap::new();
    for v in cfg.populations.active() {
        let curves = per_v_images(plan, cache, records, v)?;
        let top = curves.last().expect("at least one intensity").1.clone();
        let avg = if curves.len() == 1 {
            top.clone()
        } else {
            intensity_average(&curves, &cfg.focus)?
        };
        let mut fields = BTreeMap::new();
        fields.insert("v".into(), v.to_string());
        fields.insert("stage".into(), "intensity_average".into());
        out.write_image(&format!("per_v/v{v}_averaged"), &avg, fields.clone(), false)?;
        out.write_cuts(&format!("per_v/v{v}_averaged"), &normalize(&avg)?, &cfg.angular_cuts)?;
        fields.insert("stage".into(), "peak_intensity".into());
        out.write_image(&format!("per_v/v{v}_peak"), &top, fields, false)?;
        out.write_cuts(&format!("per_v/v{v}_peak"), &normalize(&top)?, &cfg.angular_cuts)?;
        averaged.insert(v, avg);
        peak.insert(v, top);
    }
    let mut fields = BTreeMap::new();
    fields.insert("config_digest".into(), plan.digest.clone());
    fields.insert("chain".into(), "mn,rot,intensity,vib,detector,normalize".into());
    let image = finish_chain(&averaged, cfg)?;
    out.write_image("image", &image, fields.clone(), true)?;
    out.write_cuts("image", &image, &cfg.angular_cuts)?;
    fields.insert("chain".into(), "mn,rot,vib,detector,normalize at peak intensity".into());
    let unaveraged = finish_chain(&peak, cfg)?;
    out.write_image("unaveraged/image", &unaveraged, fields, false)?;
    out.write_cuts("unaveraged/image", &unaveraged, &cfg.angular_cuts)?;
    Ok(())
}

/// Runs the plan: propagations (cached), projections, the averaging chain,
/// then writes every output and `manifest.json`.
pub fn execute(plan: &RunPlan, opts: ExecOptions) -> Result<Manifest> {
    let t0 = Instant::now();
    let cfg = &plan.config;
    let cache = Cache::open(&plan.cache_dir)?;
    fs::create_dir_all(&plan.out_dir).map_err(|e| EngineError::file(&plan.out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| EngineError::Config(format!("worker pool: {e}")))?;
    let results: Vec<JobResult> = pool.install(|| {
        plan.jobs
            .par_iter()
            .map(|job| run_one(plan, &cache, job, opts))
            .collect()
    });
    let t_jobs = t0.elapsed().as_secs_f64();

    let mut out = Outputs {
        root: plan.out_dir.clone(),
        hashes: BTreeMap::new(),
    };
    let mut warnings = Vec::new();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        if let Some(csv) = &r.diagnostics {
            out.write(&format!("diagnostics/{}.csv", r.record.label), csv.as_bytes())?;
        }
        warnings.extend(r.warnings);
        records.push(r.record);
    }
    let failures = records.iter().filter(|r| r.status == JobStatus::Failed).count();

    let t1 = Instant::now();
    if plan.stage >= Stage::Average {
        if failures == 0 {
            average(plan, &cache, &records, &mut out)?;
        } else {
            let msg = format!("averaging skipped: {failures} jobs failed");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let mut inputs = json!({
        "populations": {
            "path": cfg.populations_path.display().to_string(),
            "sha256": cfg.populations_sha256,
        },
        "potential_sha256": cfg.potential_sha256,
    });
    if let crate::config::PotentialSource::Table(p) = &cfg.potential_source {
        inputs["potential_table"] = json!(p.display().to_string());
    }
    let mut timings = BTreeMap::new();
    timings.insert("jobs_seconds".into(), t_jobs);
    timings.insert("averaging_seconds".into(), t1.elapsed().as_secs_f64());
    timings.insert("total_seconds".into(), t0.elapsed().as_secs_f64());
    let manifest = Manifest {
        tool_version: code_version(),
        config_path: cfg.path.display().to_string(),
        config_digest: plan.digest.clone(),
        inputs,
        settings: cfg.canonical(),
        intensities: plan.intensities.clone(),
        propagations: records.iter().filter(|r| r.status == JobStatus::Computed).count(),
        cache_hits: records.iter().filter(|r| r.status == JobStatus::Cached).count(),
        failures,
        jobs: records,
        outputs: out.hashes,
        warnings,
        timings,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    io::write_atomic(&plan.out_dir.join("manifest.json"), text.as_bytes())?;
    log::info!(
        "{} propagations, {} cache hits, {} failures",
        manifest.propagations,
        manifest.cache_hits,
        manifest.failures
    );
    Ok(manifest)
}

/// Reads a detector image block written by [`execute`].
pub fn read_image(path: &Path) -> Result<DetectorImage> {
    let (block, _) = io::read_block(path)?;
    Ok(io::decode_image(&block)?)
}
