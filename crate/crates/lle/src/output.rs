//! Deterministic serialization of states, branches, spectra, effective
//! potentials, and trajectories, plus the output MANIFEST with content hashes.

use crate::continuation::Branch;
use crate::field::{Field, TorusGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("state decode error: {0}")]
    Decode(String),
}

/// Collects written files so the MANIFEST can list them with hashes.
pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputWriter {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self, OutputError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| OutputError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), OutputError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| OutputError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let hash = format!("{:x}", Sha256::digest(contents.as_bytes()));
        self.files.push((name.to_string(), hash));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), OutputError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }

    /// Write the MANIFEST; `complete` = false marks a partially flushed run.
    pub fn finish(&mut self, complete: bool, note: Option<&str>) -> Result<(), OutputError> {
        let mut entries = self.files.clone();
        entries.sort();
        let manifest = Manifest {
            complete,
            note: note.map(|s| s.to_string()),
            files: entries
                .into_iter()
                .map(|(name, sha256)| ManifestEntry { name, sha256 })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        let path = self.dir.join("MANIFEST.json");
        fs::write(&path, &text).map_err(|e| OutputError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub complete: bool,
    pub note: Option<String>,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
}

/// State serialization: interleaved real/imaginary spectral coefficients
/// with grid metadata; exact round-trip.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateRecord {
    pub n: usize,
    /// coefficients in FFT bin order as [re0, im0, re1, im1, ...]
    pub coeffs_interleaved: Vec<f64>,
}

pub fn state_to_record(u: &Field) -> StateRecord {
    let mut coeffs_interleaved = Vec::with_capacity(2 * u.n());
    for c in u.coeffs() {
        coeffs_interleaved.push(c.re);
        coeffs_interleaved.push(c.im);
    }
    StateRecord {
        n: u.n(),
        coeffs_interleaved,
    }
}

pub fn state_from_record(rec: &StateRecord) -> Result<Field, OutputError> {
    if rec.coeffs_interleaved.len() != 2 * rec.n {
        return Err(OutputError::Decode(format!(
            "expected {} interleaved values, got {}",
            2 * rec.n,
            rec.coeffs_interleaved.len()
        )));
    }
    let grid = Arc::new(TorusGrid::new(rec.n).map_err(|e| OutputError::Decode(e.to_string()))?);
    let coeffs = rec
        .coeffs_interleaved
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    Ok(Field::from_coeffs(grid, coeffs))
}

fn fmt(x: f64) -> String {
    // shortest round-trip representation; deterministic on a given platform
    format!("{x}")
}

pub fn branch_csv(branch: &Branch) -> String {
    let mut out = String::from("param,l2norm,re_lambda0,im_lambda0,stable,sigma_est\n");
    for pt in &branch.points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(pt.param),
            fmt(pt.l2norm),
            fmt(pt.critical_eig.re),
            fmt(pt.critical_eig.im),
            u8::from(pt.stable),
            fmt(pt.sigma_est)
        ));
    }
    out
}

pub fn spectrum_csv(eigenvalues: &[Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for z in eigenvalues {
        out.push_str(&format!("{},{}\n", fmt(z.re), fmt(z.im)));
    }
    out
}

pub fn veff_csv(sigma: &[f64], values: &[f64]) -> String {
    let mut out = String::from("sigma,value\n");
    for (s, v) in sigma.iter().zip(values) {
        out.push_str(&format!("{},{}\n", fmt(*s), fmt(*v)));
    }
    out
}

pub fn zeros_csv(zeros: &[crate::pinning::ZeroRecord]) -> String {
    let mut out = String::from("sigma0,slope,prediction\n");
    for z in zeros {
        let pred = match z.prediction {
            crate::pinning::Prediction::StableForPositiveEps => "stable_for_positive_eps",
            crate::pinning::Prediction::StableForNegativeEps => "stable_for_negative_eps",
        };
        out.push_str(&format!("{},{},{}\n", fmt(z.sigma0), fmt(z.slope), pred));
    }
    out
}

pub fn trajectory_csv(times: &[f64], dev_h1: &[f64], dev_l2: &[f64]) -> String {
    let mut out = String::from("t,dev_h1,dev_l2\n");
    for ((t, a), b) in times.iter().zip(dev_h1).zip(dev_l2) {
        out.push_str(&format!("{},{},{}\n", fmt(*t), fmt(*a), fmt(*b)));
    }
    out
}

pub fn profile_csv(u: &Field) -> String {
    let mut out = String::from("x,re,im,intensity\n");
    for (x, v) in u.grid().points().iter().zip(u.values()) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(*x),
            fmt(v.re),
            fmt(v.im),
            fmt(v.norm_sqr())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_roundtrip_is_exact() {
        let grid = Arc::new(TorusGrid::new(32).unwrap());
        let u = Field::from_fn(grid, |x| Complex64::new(x.cos() + 0.3, 0.2 * (3.0 * x).sin()));
        let rec = state_to_record(&u);
        let text = serde_json::to_string(&rec).unwrap();
        let back: StateRecord = serde_json::from_str(&text).unwrap();
        let v = state_from_record(&back).unwrap();
        // bit-exact coefficients
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn writer_produces_manifest_with_hashes() {
        let dir = std::env::temp_dir().join(format!("lle-out-test-{}", std::process::id()));
        let mut w = OutputWriter::new(&dir).unwrap();
        w.write("a.csv", "x\n1\n").unwrap();
        w.finish(true, None).unwrap();
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.join("MANIFEST.json")).unwrap()).unwrap();
        assert!(manifest.complete);
        assert_eq!(manifest.files.len(), 1);
        assert_eq!(manifest.files[0].name, "a.csv");
        assert_eq!(manifest.files[0].sha256.len(), 64);
        fs::remove_dir_all(&dir).ok();
    }
}
