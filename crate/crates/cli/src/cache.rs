//! Content-addressed job cache.
//!
//! A propagation entry is a directory `<key>/` holding the amplitude block,
//! its sidecar and the diagnostics CSV. Entries are assembled in a private
//! temporary directory and renamed into place, so a killed run leaves either
//! a complete entry or none. Projected images live in `images/<key>.blk`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use photofrag_core::io::{self, sha256_hex};
use photofrag_core::propagator::MomentumAmplitude;
use photofrag_core::spectra::DetectorImage;

use crate::error::{EngineError, Result};

const AMPLITUDE: &str = "amplitude.blk";
const DIAGNOSTICS: &str = "diagnostics.csv";

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct CachedJob {
    pub amplitude: MomentumAmplitude,
    pub diagnostics_csv: String,
    pub final_internal_norm: f64,
    pub steps: usize,
}

#[derive(Debug)]
pub enum Lookup<T> {
    Hit(T),
    Miss,
    /// Entry existed but failed verification and was removed.
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("images")).map_err(|e| EngineError::file(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_dir(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn image_path(&self, key: &str) -> PathBuf {
        self.dir.join("images").join(format!("{key}.blk"))
    }

    pub fn load_job(&self, key: &str) -> Lookup<CachedJob> {
        let dir = self.entry_dir(key);
        if !dir.exists() {
            return Lookup::Miss;
        }
        match read_entry(&dir) {
            Ok(job) => Lookup::Hit(job),
            Err(e) => {
                let msg = format!("cache entry {key}: {e}");
                let _ = fs::remove_dir_all(&dir);
                Lookup::Corrupt(msg)
            }
        }
    }

    pub fn store_job(
        &self,
        key: &str,
        mut fields: BTreeMap<String, String>,
        amplitude: &MomentumAmplitude,
        diagnostics_csv: &str,
        final_internal_norm: f64,
        steps: usize,
    ) -> Result<()> {
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self
            .dir
            .join(format!(".tmp-{key}-{}-{n}", std::process::id()));
        let _ = fs::remove_dir_all(&tmp);
        fs::create_dir_all(&tmp).map_err(|e| EngineError::file(&tmp, e))?;
        fields.insert("final_internal_norm".into(), format!("{final_internal_norm:e}"));
        fields.insert("steps".into(), steps.to_string());
        fields.insert("diagnostics_sha256".into(), sha256_hex(diagnostics_csv.as_bytes()));
        let block = io::encode_amplitude(amplitude);
        io::write_block(&tmp.join(AMPLITUDE), &block, fields)?;
        io::write_atomic(&tmp.join(DIAGNOSTICS), diagnostics_csv.as_bytes())?;
        let dest = self.entry_dir(key);
        if dest.exists() {
            let _ = fs::remove_dir_all(&dest);
        }
        if let Err(e) = fs::rename(&tmp, &dest) {
            let _ = fs::remove_dir_all(&tmp);
            if !dest.exists() {
                return Err(EngineError::file(dest, e));
            }
        }
        Ok(())
    }

    pub fn load_image(&self, key: &str) -> Lookup<DetectorImage> {
        let path = self.image_path(key);
        if !path.exists() {
            return Lookup::Miss;
        }
        match io::read_block(&path).and_then(|(b, _)| io::decode_image(&b)) {
            Ok(img) => Lookup::Hit(img),
            Err(e) => {
                let _ = fs::remove_file(&path);
                let _ = fs::remove_file(io::sidecar_path(&path));
                Lookup::Corrupt(format!("cached image {key}: {e}"))
            }
        }
    }

    pub fn store_image(&self, key: &str, fields: BTreeMap<String, String>, img: &DetectorImage) -> Result<()> {
        io::write_block(&self.image_path(key), &io::encode_image(img), fields)?;
        Ok(())
    }
}

fn read_entry(dir: &Path) -> photofrag_core::Result<CachedJob> {
    let (block, meta) = io::read_block(&dir.join(AMPLITUDE))?;
    let amplitude = io::decode_amplitude(&block)?;
    let diagnostics_csv = fs::read_to_string(dir.join(DIAGNOSTICS))?;
    if sha256_hex(diagnostics_csv.as_bytes()) != meta.get("diagnostics_sha256")? {
        return Err(photofrag_core::Error::Corrupt("diagnostics hash mismatch".into()));
    }
    let parse = |k: &str| -> photofrag_core::Result<f64> {
        meta.get(k)?
            .parse()
            .map_err(|_| photofrag_core::Error::Corrupt(format!("bad sidecar value for {k}")))
    };
    Ok(CachedJob {
        amplitude,
        diagnostics_csv,
        final_internal_norm: parse("final_internal_norm")?,
        steps: parse("steps")? as usize,
    })
}
