//! Artifact writing. Every file goes through [`Output`] so a run touches
//! exactly one directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::{ArrayD, IxDyn};
use qvp_core::{ModelKind, PosteriorDraws};
use serde::{Deserialize, Serialize};

pub const DRAWS_FORMAT: &str = "qvp-draws";
pub const DRAWS_VERSION: u32 = 1;

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        log::info!("wrote {}", p.display());
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        log::info!("wrote {}", p.display());
        Ok(())
    }

    /// `<stem>.bin` holds every array as little-endian `f64` in row-major
    /// order, back to back; `<stem>.json` maps names to shapes and offsets.
    pub fn draws(&self, stem: &str, draws: &PosteriorDraws) -> Result<()> {
        let data_file = format!("{stem}.bin");
        let file_name = Path::new(&data_file)
            .file_name()
            .expect("stem names a file")
            .to_string_lossy()
            .into_owned();
        let mut bytes = Vec::new();
        let mut arrays = Vec::new();
        let mut offset = 0;
        for (name, dims, a) in draws.arrays() {
            arrays.push(ArrayEntry {
                name: name.to_string(),
                dims: dims.iter().map(|d| d.to_string()).collect(),
                shape: a.shape().to_vec(),
                offset,
            });
            for v in a.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            offset += a.len();
        }
        let p = self.path(&data_file);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.json(
            &format!("{stem}.json"),
            &DrawsManifest {
                format: DRAWS_FORMAT.into(),
                version: DRAWS_VERSION,
                model: draws.model,
                taus: draws.taus.clone(),
                data_file: file_name,
                arrays,
            },
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub dims: Vec<String>,
    pub shape: Vec<usize>,
    /// Position of the first value, counted in `f64`s.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawsManifest {
    pub format: String,
    pub version: u32,
    pub model: ModelKind,
    pub taus: Vec<f64>,
    pub data_file: String,
    pub arrays: Vec<ArrayEntry>,
}

/// Load draws written by [`Output::draws`] from `manifest`.
pub fn read_draws(manifest: &Path) -> Result<PosteriorDraws> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let m: DrawsManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest.display()))?;
    if m.format != DRAWS_FORMAT || m.version != DRAWS_VERSION {
        bail!("unsupported draws format {} version {}", m.format, m.version);
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let bytes = fs::read(dir.join(&m.data_file)).with_context(|| format!("reading {}", m.data_file))?;
    if bytes.len() % 8 != 0 {
        bail!("{} is not a whole number of f64 values", m.data_file);
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut loaded = Vec::new();
    for e in &m.arrays {
        let n: usize = e.shape.iter().product();
        let Some(slice) = values.get(e.offset..e.offset + n) else {
            bail!("array {} runs past the end of {}", e.name, m.data_file);
        };
        loaded.push((e.name.clone(), ArrayD::from_shape_vec(IxDyn(&e.shape), slice.to_vec())?));
    }
    let draws = PosteriorDraws::from_arrays(m.model, m.taus, |name| {
        loaded.iter().find(|(n, _)| n == name).map(|(_, a)| a.clone())
    })?;
    Ok(draws)
}
