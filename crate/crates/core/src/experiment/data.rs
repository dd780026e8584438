//! Dataset manifests and CSV loading.
//!
//! A manifest is a small `key = value` file (`#` starts a comment):
//!
//! ```text
//! name = breast-cancer
//! file = breast_cancer.csv
//! label = diagnosis
//! positive = M
//! classes = all
//! ws = mean_radius, radius_error, worst_radius
//! ```
//!
//! | key        | meaning                                                         |
//! |------------|-----------------------------------------------------------------|
//! | `name`     | dataset name used in reports (default: manifest file stem)      |
//! | `file`     | CSV path, relative to the data directory                        |
//! | `label`    | label column (required)                                         |
//! | `positive` | label value mapped to class 1                                   |
//! | `classes`  | `all` (exactly two present), `two-most-common`, or `a, b`       |
//! | `ws`       | comma-separated feature columns for the weak signals            |
//! | `image`    | `HxW`; weak signals default to pixels on the vertical center line |
//! | `id`       | column holding row identifiers                                  |
//! | `drop`     | comma-separated columns that are neither features nor labels    |
//!
//! Without `ws` or `image`, the first, middle and last features are used.
//! Without `positive`, the class that sorts last becomes positive (numerically
//! when both class values parse as numbers).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::weak::{center_line_pixels, default_features, pixel_index};

/// Overrides the directory that relative manifest `file` entries resolve against.
pub const DATA_DIR_ENV: &str = "ADVLABEL_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ClassSelection {
    /// The label column must hold exactly two values.
    All,
    TwoMostCommon,
    Pair(String, String),
}

impl ClassSelection {
    fn parse(value: &str) -> std::result::Result<Self, String> {
        match value {
            "all" => Ok(Self::All),
            "two-most-common" => Ok(Self::TwoMostCommon),
            other => match split_list(other).as_slice() {
                [a, b] if a != b => Ok(Self::Pair(a.clone(), b.clone())),
                _ => Err(format!(
                    "classes must be 'all', 'two-most-common' or two distinct values, got '{other}'"
                )),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub file: Option<PathBuf>,
    pub label: String,
    pub positive: Option<String>,
    pub classes: ClassSelection,
    pub ws: Option<Vec<String>>,
    pub image: Option<(usize, usize)>,
    pub id: Option<String>,
    pub drop: Vec<String>,
    /// Directory of the manifest file, used to resolve `file`.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl Manifest {
    /// Minimal manifest for a CSV with a binary label column.
    pub fn for_label(label: impl Into<String>) -> Self {
        Self {
            name: "dataset".into(),
            file: None,
            label: label.into(),
            positive: None,
            classes: ClassSelection::All,
            ws: None,
            image: None,
            id: None,
            drop: vec![],
            base_dir: PathBuf::from("."),
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries: HashMap<String, String> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::load(origin, format!("line {}: expected 'key = value'", i + 1)));
            };
            let key = key.trim().to_ascii_lowercase();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::load(origin, format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        let bad = |msg: String| Error::load(origin, msg);
        let known = ["name", "file", "label", "positive", "classes", "ws", "image", "id", "drop"];
        if let Some(k) = entries.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(bad(format!("unknown key '{k}'")));
        }
        let label = entries
            .remove("label")
            .ok_or_else(|| bad("missing required key 'label'".into()))?;
        let classes = match entries.remove("classes") {
            Some(v) => ClassSelection::parse(&v).map_err(bad)?,
            None => ClassSelection::All,
        };
        let image = match entries.remove("image") {
            Some(v) => {
                let dims = v
                    .split_once('x')
                    .and_then(|(h, w)| Some((h.trim().parse().ok()?, w.trim().parse().ok()?)));
                match dims {
                    Some((h, w)) if h > 0 && w > 0 => Some((h, w)),
                    _ => return Err(bad(format!("image must look like 28x28, got '{v}'"))),
                }
            }
            None => None,
        };
        let name = entries.remove("name").unwrap_or_else(|| {
            origin
                .file_stem()
                .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
        });
        Ok(Self {
            name,
            file: entries.remove("file").map(PathBuf::from),
            label,
            positive: entries.remove("positive"),
            classes,
            ws: entries.remove("ws").map(|v| split_list(&v)),
            image,
            id: entries.remove("id"),
            drop: entries.remove("drop").map(|v| split_list(&v)).unwrap_or_default(),
            base_dir: origin.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
        Self::parse(&text, path)
    }

    /// Location of the CSV: `file` under `$ADVLABEL_DATA_DIR` when set,
    /// otherwise next to the manifest.
    pub fn data_path(&self) -> Result<PathBuf> {
        let file = self
            .file
            .as_ref()
            .ok_or_else(|| Error::Config(format!("manifest for '{}' names no data file", self.name)))?;
        if file.is_absolute() {
            return Ok(file.clone());
        }
        Ok(match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => PathBuf::from(dir).join(file),
            None => self.base_dir.join(file),
        })
    }
}

/// A binary task ready for the experiment harness.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub name: String,
    pub data: Dataset,
    /// Feature indices for WS-1, WS-2, ...
    pub ws_features: Vec<usize>,
    pub positive: String,
    pub negative: String,
    /// Rows per class value in the file, most common first.
    pub class_counts: Vec<(String, usize)>,
}

fn class_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Reads a CSV with a header row and applies the manifest's class selection
/// and label mapping.
pub fn load_dataset(path: impl AsRef<Path>, manifest: &Manifest) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::load(path, e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::load(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::load(path, format!("no column named '{name}'")))
    };
    let label_col = column(&manifest.label)?;
    let id_col = manifest.id.as_deref().map(column).transpose()?;
    let mut skip = vec![false; headers.len()];
    skip[label_col] = true;
    if let Some(c) = id_col {
        skip[c] = true;
    }
    for name in &manifest.drop {
        skip[column(name)?] = true;
    }
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| !skip[c]).collect();
    if feature_cols.is_empty() {
        return Err(Error::load(path, "no feature columns"));
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Row numbers count the header as line 1.
        let line = i + 2;
        let record = record.map_err(|e| Error::load(path, format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::load(
                path,
                format!("line {line}: expected {} cells, found {}", headers.len(), record.len()),
            ));
        }
        let mut x = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = &record[c];
            let v: f64 = cell.parse().map_err(|_| {
                Error::load(path, format!("line {line}, column '{}': '{cell}' is not numeric", headers[c]))
            })?;
            if !v.is_finite() {
                return Err(Error::load(
                    path,
                    format!("line {line}, column '{}': non-finite value", headers[c]),
                ));
            }
            x.push(v);
        }
        let id = id_col.map_or_else(|| (line - 1).to_string(), |c| record[c].to_string());
        rows.push((record[label_col].to_string(), x, id));
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (label, _, _) in &rows {
        *counts.entry(label.as_str()).or_default() += 1;
    }
    let mut class_counts: Vec<(String, usize)> =
        counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    class_counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| class_order(&a.0, &b.0)));

    let (mut a, mut b) = match &manifest.classes {
        ClassSelection::All => match class_counts.as_slice() {
            [x, y] => (x.0.clone(), y.0.clone()),
            other => {
                return Err(Error::load(
                    path,
                    format!("expected exactly 2 classes in '{}', found {}", manifest.label, other.len()),
                ))
            }
        },
        ClassSelection::TwoMostCommon => {
            if class_counts.len() < 2 {
                return Err(Error::load(
                    path,
                    format!("fewer than 2 classes in '{}'", manifest.label),
                ));
            }
            (class_counts[0].0.clone(), class_counts[1].0.clone())
        }
        ClassSelection::Pair(x, y) => {
            for c in [x, y] {
                if !class_counts.iter().any(|(k, _)| k == c) {
                    return Err(Error::load(path, format!("class '{c}' does not occur")));
                }
            }
            (x.clone(), y.clone())
        }
    };
    if class_order(&a, &b).is_gt() {
        std::mem::swap(&mut a, &mut b);
    }
    let (negative, positive) = match &manifest.positive {
        None => (a, b),
        Some(p) if *p == b => (a, b),
        Some(p) if *p == a => (b, a),
        Some(p) => {
            return Err(Error::load(
                path,
                format!("positive class '{p}' is not among the selected classes '{a}', '{b}'"),
            ))
        }
    };

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    for (label, features, id) in rows {
        if label == positive || label == negative {
            y.push(if label == positive { 1.0 } else { 0.0 });
            x.push(features);
            ids.push(id);
        }
    }
    let names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let data = Dataset::from_rows(&x, Some(y))?
        .with_feature_names(names)?
        .with_ids(ids)?;

    let ws_features = match (&manifest.ws, manifest.image) {
        (Some(names), _) => names
            .iter()
            .map(|n| {
                data.feature_index(n)
                    .ok_or_else(|| Error::load(path, format!("weak-signal feature '{n}' is not a feature column")))
            })
            .collect::<Result<_>>()?,
        (None, Some((h, w))) => {
            if h * w != data.d() {
                return Err(Error::load(
                    path,
                    format!("image {h}x{w} needs {} pixel columns, found {}", h * w, data.d()),
                ));
            }
            center_line_pixels(h, w).into_iter().map(|px| pixel_index(w, px)).collect()
        }
        (None, None) => default_features(data.d()),
    };

    Ok(LoadedDataset {
        name: manifest.name.clone(),
        data,
        ws_features,
        positive,
        negative,
        class_counts,
    })
}

/// Loads the manifest and the CSV it names.
pub fn load_from_manifest(manifest_path: impl AsRef<Path>) -> Result<LoadedDataset> {
    let manifest = Manifest::load(manifest_path)?;
    load_dataset(manifest.data_path()?, &manifest)
}
