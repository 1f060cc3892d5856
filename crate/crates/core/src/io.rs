//! Binary blocks, sidecar headers and CSV exports.
//!
//! Block layout (all little-endian):
//!
//! ```text
//! 0   8   magic "PFRAGBLK"
//! 8   4   u32 format version
//! 12  4   u32 kind (1 = momentum amplitude, 2 = detector image)
//! 16  ..  kind-specific body
//! ```
//!
//! Amplitude body: u64 n_k, u64 n_θ, ground then excited as interleaved
//! (re, im) f64 pairs in row-major (θ, k) order, k grid, cosθ nodes,
//! quadrature weights, f64 t_ref, u64 M_N.
//!
//! Image body: u64 n_kρ, u64 n_α, values row-major (kρ, α), kρ grid, α grid,
//! f64 beam velocity (m/s), f64 drift length (m).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::propagator::MomentumAmplitude;
use crate::spectra::DetectorImage;

pub const MAGIC: &[u8; 8] = b"PFRAGBLK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum BlockKind {
    Amplitude = 1,
    Image = 2,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer(Vec<u8>);

impl Writer {
    fn new(kind: BlockKind) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        w.0.extend_from_slice(&(kind as u32).to_le_bytes());
        w
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn complex(&mut self, v: &[Complex64]) {
        for c in v {
            self.0.extend_from_slice(&c.re.to_le_bytes());
            self.0.extend_from_slice(&c.im.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], kind: BlockKind) -> Result<Self> {
        if buf.len() < 16 || &buf[..8] != MAGIC {
            return Err(Error::Corrupt("missing block magic".into()));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Corrupt(format!("unsupported block version {version}")));
        }
        let k = u32::from_le_bytes(buf[12..16].try_into().unwrap());
        if k != kind as u32 {
            return Err(Error::Corrupt(format!("block kind {k}, expected {}", kind as u32)));
        }
        Ok(Self { buf, pos: 16 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt("block truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > (self.buf.len() / 8) as u64 {
            return Err(Error::Corrupt(format!("dimension {v} larger than block")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let b = self.take(n.checked_mul(8).ok_or_else(|| Error::Corrupt("size overflow".into()))?)?;
        Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn complex(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let v = self.f64s(n.checked_mul(2).ok_or_else(|| Error::Corrupt("size overflow".into()))?)?;
        Ok(v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after block",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_amplitude(a: &MomentumAmplitude) -> Vec<u8> {
    let mut w = Writer::new(BlockKind::Amplitude);
    w.u64(a.n_k() as u64);
    w.u64(a.n_theta() as u64);
    w.complex(&a.ground);
    w.complex(&a.excited);
    w.f64s(&a.k);
    w.f64s(&a.cos_theta);
    w.f64s(&a.weights);
    w.f64s(&[a.t_ref]);
    w.u64(a.m_n as u64);
    w.0
}

pub fn decode_amplitude(bytes: &[u8]) -> Result<MomentumAmplitude> {
    let mut r = Reader::new(bytes, BlockKind::Amplitude)?;
    let n_k = r.dim()?;
    let n_theta = r.dim()?;
    let n = n_k
        .checked_mul(n_theta)
        .ok_or_else(|| Error::Corrupt("size overflow".into()))?;
    let ground = r.complex(n)?;
    let excited = r.complex(n)?;
    let k = r.f64s(n_k)?;
    let cos_theta = r.f64s(n_theta)?;
    let weights = r.f64s(n_theta)?;
    let t_ref = r.f64()?;
    let m_n = r.u64()? as usize;
    r.finish()?;
    Ok(MomentumAmplitude {
        k,
        cos_theta,
        weights,
        m_n,
        t_ref,
        ground,
        excited,
    })
}

pub fn encode_image(img: &DetectorImage) -> Vec<u8> {
    let mut w = Writer::new(BlockKind::Image);
    w.u64(img.n_k_rho() as u64);
    w.u64(img.n_alpha() as u64);
    w.f64s(&img.values);
    w.f64s(&img.k_rho);
    w.f64s(&img.alpha);
    w.f64s(&[img.beam_velocity, img.drift_length]);
    w.0
}

pub fn decode_image(bytes: &[u8]) -> Result<DetectorImage> {
    let mut r = Reader::new(bytes, BlockKind::Image)?;
    let nk = r.dim()?;
    let na = r.dim()?;
    let values = r.f64s(nk.checked_mul(na).ok_or_else(|| Error::Corrupt("size overflow".into()))?)?;
    let k_rho = r.f64s(nk)?;
    let alpha = r.f64s(na)?;
    let beam_velocity = r.f64()?;
    let drift_length = r.f64()?;
    r.finish()?;
    Ok(DetectorImage {
        k_rho,
        alpha,
        values,
        beam_velocity,
        drift_length,
    })
}

/// Sidecar text header: sorted `key = value` lines ending with the block hash.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    pub fields: BTreeMap<String, String>,
    pub sha256: String,
}

impl Sidecar {
    pub fn new(fields: BTreeMap<String, String>, block: &[u8]) -> Self {
        Self {
            fields,
            sha256: sha256_hex(block),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.fields {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str(&format!("sha256 = {}\n", self.sha256));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        let mut sha = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Corrupt(format!("bad sidecar line '{line}'")))?;
            if k == "sha256" {
                sha = Some(v.to_string());
            } else {
                fields.insert(k.to_string(), v.to_string());
            }
        }
        Ok(Self {
            fields,
            sha256: sha.ok_or_else(|| Error::Corrupt("sidecar has no sha256".into()))?,
        })
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Corrupt(format!("sidecar has no '{key}'")))
    }
}

/// `<block>.meta` next to a block file.
pub fn sidecar_path(block: &Path) -> PathBuf {
    let mut s = block.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes to a temporary sibling, syncs and renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes the block, then its sidecar.
pub fn write_block(path: &Path, block: &[u8], fields: BTreeMap<String, String>) -> Result<Sidecar> {
    let meta = Sidecar::new(fields, block);
    write_atomic(path, block)?;
    write_atomic(&sidecar_path(path), meta.render().as_bytes())?;
    Ok(meta)
}

/// Reads a block and checks it against the sidecar hash.
pub fn read_block(path: &Path) -> Result<(Vec<u8>, Sidecar)> {
    let block = fs::read(path)?;
    let meta = Sidecar::parse(&fs::read_to_string(sidecar_path(path))?)?;
    let got = sha256_hex(&block);
    if got != meta.sha256 {
        return Err(Error::Corrupt(format!(
            "{}: hash {got} does not match sidecar {}",
            path.display(),
            meta.sha256
        )));
    }
    Ok((block, meta))
}

/// `k_rho,alpha,P` rows in row-major order.
pub fn image_csv(img: &DetectorImage) -> String {
    let mut s = String::with_capacity(img.values.len() * 40);
    s.push_str("k_rho,alpha,P\n");
    for (i, k) in img.k_rho.iter().enumerate() {
        for (j, a) in img.alpha.iter().enumerate() {
            s.push_str(&format!("{k:.6e},{a:.6e},{:.12e}\n", img.at(i, j)));
        }
    }
    s
}

/// Inverse of [`image_csv`] for a full rectangular grid.
pub fn parse_image_csv(text: &str, beam_velocity: f64, drift_length: f64) -> Result<DetectorImage> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Corrupt(format!("image csv line {}: {e}", n + 1)))?;
        if f.len() != 3 {
            return Err(Error::Corrupt(format!("image csv line {}: expected 3 columns", n + 1)));
        }
        rows.push([f[0], f[1], f[2]]);
    }
    let first_k = rows.first().map(|r| r[0]).ok_or_else(|| Error::Corrupt("empty image csv".into()))?;
    let n_alpha = rows.iter().take_while(|r| r[0] == first_k).count();
    if rows.len() % n_alpha != 0 {
        return Err(Error::Corrupt("image csv is not a full grid".into()));
    }
    let alpha: Vec<f64> = rows[..n_alpha].iter().map(|r| r[1]).collect();
    let k_rho: Vec<f64> = rows.iter().step_by(n_alpha).map(|r| r[0]).collect();
    Ok(DetectorImage {
        k_rho,
        alpha,
        values: rows.iter().map(|r| r[2]).collect(),
        beam_velocity,
        drift_length,
    })
}
