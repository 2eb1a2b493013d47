//! Generated datasets on disk.
//!
//! A dataset directory holds `manifest.txt` and one `.bscan` file per sample
//! under `scans/`. The manifest is UTF-8 text:
//!
//! ```text
//! bscan-dataset v1 n=2 split_seed=7
//! id=0 file=scans/000000.bscan layers=1 seed=1234 t=0.1,0,0,0,0,0 e=5,0,0,0,0,0
//! id=1 file=scans/000001.bscan layers=2 seed=5678 t=0.05,0.08,0,0,0,0 e=2.5,4,0,0,0,0
//! ```
//!
//! Targets are printed with the shortest decimal that reads back to the same
//! `f64`, so a manifest round-trips bit for bit.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::defaults::MAX_LAYERS;
use crate::em::{read_bscan, run_bscan, write_bscan, Acquisition, BScan};
use crate::error::{Error, Result};
use crate::scene::{sample_wall_from_seed, to_target, TargetVector};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MANIFEST_VERSION: u32 = 1;
const SCAN_DIR: &str = "scans";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: u64,
    /// Scan path relative to the dataset directory.
    pub file: String,
    pub layers: usize,
    pub seed: u64,
    pub target: TargetVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub version: u32,
    pub split_seed: u64,
    pub entries: Vec<ManifestEntry>,
    /// Directory that entry paths are resolved against. Not serialized.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn n_samples(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, id: u64) -> Result<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id).ok_or(Error::NotFound(id))
    }

    pub fn scan_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.file)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id) {
                return Err(Error::Format(format!("duplicate sample id {}", e.id)));
            }
            if !e.target.is_consistent() || e.target.layer_count() != e.layers {
                return Err(Error::Data {
                    id: e.id,
                    message: format!("target does not describe {} layers", e.layers),
                });
            }
            let rel = Path::new(&e.file);
            if e.file.is_empty() || rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(Error::Format(format!("sample {}: file path {:?} must be relative", e.id, e.file)));
            }
        }
        Ok(())
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn format_manifest(m: &DatasetManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "bscan-dataset v{} n={} split_seed={}", m.version, m.entries.len(), m.split_seed);
    for e in &m.entries {
        let _ = writeln!(
            out,
            "id={} file={} layers={} seed={} t={} e={}",
            e.id,
            e.file,
            e.layers,
            e.seed,
            join_floats(e.target.thicknesses()),
            join_floats(e.target.permittivities())
        );
    }
    out
}

fn field<'a>(token: Option<&'a str>, key: &str, line: usize) -> Result<&'a str> {
    let token = token.ok_or_else(|| Error::Parse { line, message: format!("missing `{key}=`") })?;
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::Parse { line, message: format!("expected `{key}=`, found `{token}`") })
}

fn number<T: std::str::FromStr>(s: &str, key: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("bad {key} value `{s}`") })
}

fn floats6(s: &str, key: &str, line: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(|x| number::<f64>(x, key, line)).collect::<Result<_>>()?;
    if v.len() != MAX_LAYERS {
        return Err(Error::Parse { line, message: format!("{key} needs {MAX_LAYERS} values, found {}", v.len()) });
    }
    Ok(v)
}

/// Parses manifest text. `root` is attached to the result for path resolution.
pub fn parse_manifest(text: &str, root: &Path) -> Result<DatasetManifest> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty manifest".into() })?;
    let mut h = header.split_whitespace();
    if h.next() != Some("bscan-dataset") {
        return Err(Error::Parse { line: 1, message: "missing `bscan-dataset` header".into() });
    }
    let version: u32 = match h.next().and_then(|v| v.strip_prefix('v')) {
        Some(v) => number(v, "version", 1)?,
        None => return Err(Error::Parse { line: 1, message: "missing version".into() }),
    };
    if version != MANIFEST_VERSION {
        return Err(Error::Format(format!("unsupported manifest version {version}")));
    }
    let n: usize = number(field(h.next(), "n", 1)?, "n", 1)?;
    let split_seed: u64 = number(field(h.next(), "split_seed", 1)?, "split_seed", 1)?;
    if h.next().is_some() {
        return Err(Error::Parse { line: 1, message: "trailing header fields".into() });
    }

    let mut entries = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let mut t = raw.split_whitespace();
        let id = number(field(t.next(), "id", line)?, "id", line)?;
        let file = field(t.next(), "file", line)?.to_string();
        let layers = number(field(t.next(), "layers", line)?, "layers", line)?;
        let seed = number(field(t.next(), "seed", line)?, "seed", line)?;
        let th = floats6(field(t.next(), "t", line)?, "t", line)?;
        let ep = floats6(field(t.next(), "e", line)?, "e", line)?;
        if t.next().is_some() {
            return Err(Error::Parse { line, message: "trailing fields".into() });
        }
        entries.push(ManifestEntry { id, file, layers, seed, target: TargetVector::from_slices(&th, &ep)? });
    }
    if entries.len() != n {
        return Err(Error::Format(format!("header declares {n} samples, found {}", entries.len())));
    }
    let m = DatasetManifest { version, split_seed, entries, root: root.to_path_buf() };
    m.validate()?;
    Ok(m)
}

pub fn write_manifest(m: &DatasetManifest) -> Result<()> {
    let path = m.root.join(MANIFEST_FILE);
    std::fs::write(&path, format_manifest(m)).map_err(|e| Error::io(path, e))
}

/// Reads `dir/manifest.txt` and checks that every referenced scan exists.
pub fn open_dataset(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m = parse_manifest(&text, dir)?;
    for e in &m.entries {
        let p = m.scan_path(e);
        if !p.is_file() {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "scan file missing")));
        }
    }
    Ok(m)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `index` under `master`. Independent of generation order.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub acquisition: Acquisition,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self { acquisition: Acquisition::default(), workers: 1 }
    }
}

fn simulate_sample(index: u64, master_seed: u64, out_dir: &Path, acq: &Acquisition) -> Result<ManifestEntry> {
    let seed = sample_seed(master_seed, index);
    let wall = sample_wall_from_seed(seed)?;
    let scan = run_bscan(&wall, acq)?;
    let file = format!("{SCAN_DIR}/{index:06}.bscan");
    write_bscan(&out_dir.join(&file), &scan)?;
    let target = to_target(&wall);
    Ok(ManifestEntry { id: index, file, layers: target.layer_count(), seed, target })
}

/// Simulates `n` samples into `out_dir` and writes the manifest last.
///
/// `progress` is called once per finished sample with the number finished so
/// far; it may be called from worker threads.
pub fn generate_dataset_with(
    n: usize,
    master_seed: u64,
    out_dir: &Path,
    opts: &GenOptions,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<DatasetManifest> {
    if n == 0 {
        return Err(Error::Argument("dataset needs at least one sample".into()));
    }
    let scan_dir = out_dir.join(SCAN_DIR);
    std::fs::create_dir_all(&scan_dir).map_err(|e| Error::io(&scan_dir, e))?;
    let done = std::sync::atomic::AtomicUsize::new(0);
    let run = |i: u64| {
        let r = simulate_sample(i, master_seed, out_dir, &opts.acquisition)
            .map_err(|e| Error::Sample { id: i, source: Box::new(e) });
        progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1);
        r
    };
    let entries: Vec<ManifestEntry> = if opts.workers == 1 {
        (0..n as u64).map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start workers: {e}")))?;
        pool.install(|| (0..n as u64).into_par_iter().map(run).collect::<Result<_>>())?
    };
    let m = DatasetManifest {
        version: MANIFEST_VERSION,
        split_seed: master_seed,
        entries,
        root: out_dir.to_path_buf(),
    };
    write_manifest(&m)?;
    Ok(m)
}

pub fn generate_dataset(n: usize, master_seed: u64, out_dir: &Path) -> Result<DatasetManifest> {
    generate_dataset_with(n, master_seed, out_dir, &GenOptions::default(), &|_| {})
}

/// Shuffled partition with `round(ratio * n)` entries in the first part.
/// Each part keeps manifest order.
pub fn split_dataset(m: &DatasetManifest, ratio: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} is outside (0, 1)")));
    }
    let n = m.entries.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * n as f64).round() as usize;
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let part = |want: bool| DatasetManifest {
        entries: m.entries.iter().zip(&in_train).filter(|(_, &t)| t == want).map(|(e, _)| e.clone()).collect(),
        ..m.clone()
    };
    Ok((part(true), part(false)))
}

pub fn load_sample(m: &DatasetManifest, id: u64) -> Result<(BScan, TargetVector)> {
    let entry = m.entry(id)?;
    let scan = read_bscan(&m.scan_path(entry))?;
    Ok((scan, entry.target))
}
