use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{io_err, EvalError};
use crate::classifier::{ClassLabel, ModelClass};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: ClassLabel,
}

/// Labeled image list. CSV form is `path,label` with paths relative to the
/// manifest's directory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
    /// Split name such as `train` or `test`.
    pub split: Option<String>,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>, split: Option<String>) -> Result<Self, EvalError> {
        let mut seen = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            if !seen.insert(&r.path) {
                return Err(EvalError::BadManifest {
                    path: "<memory>".into(),
                    line: i + 2,
                    reason: format!("duplicate path {}", r.path.display()),
                });
            }
        }
        Ok(Self { rows, split })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let bad = |line: usize, reason: String| EvalError::BadManifest {
            path: path.display().to_string(),
            line,
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "label"] {
            return Err(bad(1, "header must be 'path,label'".into()));
        }
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| bad(line, e.to_string()))?;
            let label: ClassLabel = rec[1].parse().map_err(|e: String| bad(line, e))?;
            let rel = PathBuf::from(&rec[0]);
            let full = if rel.is_absolute() {
                rel
            } else {
                base.join(rel)
            };
            if !seen.insert(full.clone()) {
                return Err(bad(line, format!("duplicate path {}", &rec[0])));
            }
            rows.push(ManifestRow { path: full, label });
        }
        let split = path
            .file_stem()
            .and_then(|s| s.to_str())
            .map(str::to_string);
        Ok(Self { rows, split })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| EvalError::BadConfig(e.to_string());
        w.write_record(["path", "label"]).map_err(csv_err)?;
        for r in &self.rows {
            let shown = r.path.strip_prefix(base).unwrap_or(&r.path);
            w.write_record([shown.to_string_lossy().as_ref(), r.label.as_str()])
                .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| EvalError::BadConfig(e.to_string()))?;
        fs::write(path, bytes).map_err(io_err(path))
    }
}

/// Keeps an equal, seeded random number of rows from each group (the size
/// of the smallest group). Rows in no group are dropped; order is preserved.
pub fn balanced_subsample(
    manifest: &Manifest,
    groups: &[ModelClass],
    seed: u64,
) -> Result<Manifest, EvalError> {
    let labels: Vec<ClassLabel> = manifest.rows.iter().map(|r| r.label).collect();
    let keep = balanced_indices(&labels, groups, seed)?;
    Ok(Manifest {
        rows: keep.into_iter().map(|i| manifest.rows[i].clone()).collect(),
        split: manifest.split.clone(),
    })
}

/// Ascending indices of the balanced subsample of `labels`.
pub(crate) fn balanced_indices(
    labels: &[ClassLabel],
    groups: &[ModelClass],
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
    for (i, &label) in labels.iter().enumerate() {
        if let Some(g) = groups.iter().position(|g| g.covers(label)) {
            members[g].push(i);
        }
    }
    if let Some(g) = members.iter().position(Vec::is_empty) {
        return Err(EvalError::MissingClass(groups[g].as_str().to_string()));
    }
    let take = members.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(take * groups.len());
    for m in &mut members {
        m.shuffle(&mut rng);
        keep.extend_from_slice(&m[..take]);
    }
    keep.sort_unstable();
    Ok(keep)
}
