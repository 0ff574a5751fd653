//! TOML dataset manifests.
//!
//! ```toml
//! name = "dsa"
//! labels = "labels.csv"
//! classes = ["walk", "run"]      # optional
//! train_fraction = 0.6666666666666666
//! seed = 7
//! preprocess = [{ kind = "standardize" }, { kind = "zca", eps = 1e-5 }]
//!
//! [[channel]]
//! name = "sensors"
//! path = "features.csv"           # .csv, or the binary matrix container
//! rows = 9120                     # optional declared shape
//! cols = 5625
//! split = 45                      # optional: cut into 45 channels
//! layout = "blocked"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::preprocess::{Pipeline, Step};
use super::{
    channelize, one_hot, read_csv_matrix, read_labels, split_train_test, Layout, MultiChannelDataset,
};
use crate::error::{Error, Result};
use crate::format;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub name: String,
    pub path: PathBuf,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub split: Option<usize>,
    #[serde(default)]
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default)]
    pub name: String,
    pub labels: PathBuf,
    pub classes: Option<Vec<String>>,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub preprocess: Vec<Step>,
    #[serde(rename = "channel")]
    pub channels: Vec<ChannelEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_fraction() -> f64 {
    2.0 / 3.0
}

impl DatasetManifest {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if m.channels.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: "no [[channel]] entries".into(),
            });
        }
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if m.name.is_empty() {
            m.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(m)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Raw channel matrices and labels, before preprocessing.
    pub fn load_raw(&self) -> Result<MultiChannelDataset> {
        let loaded: Vec<Vec<(String, Matrix)>> = self
            .channels
            .par_iter()
            .map(|entry| self.load_entry(entry))
            .collect::<Result<_>>()?;
        let (names, mats): (Vec<String>, Vec<Matrix>) = loaded.into_iter().flatten().unzip();

        let label_path = self.resolve(&self.labels);
        let labels = read_labels(&label_path, self.classes.as_deref())?;
        for (name, m) in names.iter().zip(&mats) {
            if m.nrows() != labels.ids.len() {
                return Err(Error::Dataset(format!(
                    "channel `{name}` has {} rows, {} has {} labels",
                    m.nrows(),
                    label_path.display(),
                    labels.ids.len()
                )));
            }
        }
        let y = one_hot(&labels.ids, labels.classes.len())?;
        MultiChannelDataset::new(mats, y, names, self.name.clone())
    }

    fn load_entry(&self, entry: &ChannelEntry) -> Result<Vec<(String, Matrix)>> {
        let path = self.resolve(&entry.path);
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let m = if is_csv {
            read_csv_matrix(&path)?
        } else {
            format::read_matrix(&path)?
        };
        let declared = (entry.rows.unwrap_or(m.nrows()), entry.cols.unwrap_or(m.ncols()));
        if declared != m.dim() {
            return Err(Error::Dataset(format!(
                "channel `{}`: declared {}x{}, {} holds {}x{}",
                entry.name,
                declared.0,
                declared.1,
                path.display(),
                m.nrows(),
                m.ncols()
            )));
        }
        match entry.split {
            None | Some(1) => Ok(vec![(entry.name.clone(), m)]),
            Some(k) => Ok(channelize(&m, k, entry.layout)?
                .into_iter()
                .enumerate()
                .map(|(i, c)| (format!("{}/{i}", entry.name), c))
                .collect()),
        }
    }
}

/// Load a manifest and preprocess every channel with statistics from all
/// rows.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiChannelDataset> {
    let m = DatasetManifest::from_path(path)?;
    let raw = m.load_raw()?;
    raw.map_channels(|_, c| Pipeline::fit(c, &m.preprocess)?.apply(c))
}

#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: MultiChannelDataset,
    pub test: MultiChannelDataset,
    /// Every row, preprocessed with the training statistics.
    pub all: MultiChannelDataset,
    pub manifest: DatasetManifest,
}

/// Load, split by the manifest's fraction and seed, then preprocess with
/// statistics fitted on the training rows only.
pub fn load_split(path: impl AsRef<Path>) -> Result<PreparedSplit> {
    let manifest = DatasetManifest::from_path(path)?;
    let raw = manifest.load_raw()?;
    let (train_raw, test_raw) = split_train_test(&raw, manifest.train_fraction, manifest.seed)?;
    let pipelines = train_raw
        .channels()
        .iter()
        .map(|c| Pipeline::fit(c, &manifest.preprocess))
        .collect::<Result<Vec<_>>>()?;
    let train = train_raw.map_channels(|i, c| pipelines[i].apply(c))?;
    let test = test_raw.map_channels(|i, c| pipelines[i].apply(c))?;
    let all = raw.map_channels(|i, c| pipelines[i].apply(c))?;
    Ok(PreparedSplit {
        train,
        test,
        all,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn two_channel(dir: &Path, rows_decl: usize) -> PathBuf {
        write(dir, "a.csv", "x,y,z\n1,2,3\n4,5,6\n7,8,9\n0,1,0\n");
        write(dir, "b.csv", "x,y,z\n0,0,1\n1,1,1\n2,2,2\n3,3,9\n");
        write(dir, "y.csv", "label\n0\n1\n0\n1\n");
        write(
            dir,
            "m.toml",
            &format!(
                "labels = \"y.csv\"\n\n[[channel]]\nname = \"a\"\npath = \"a.csv\"\nrows = {rows_decl}\ncols = 3\n\n[[channel]]\nname = \"b\"\npath = \"b.csv\"\n"
            ),
        )
    }

    #[test]
    fn loads_two_channels() {
        let dir = tempfile::tempdir().unwrap();
        let m = two_channel(dir.path(), 4);
        let d = load_manifest(&m).unwrap();
        assert_eq!((d.rows(), d.channel_count(), d.class_count()), (4, 2, 2));
        assert!(d.channels().iter().all(|c| c.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_eq!(d.channel_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn declared_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let m = two_channel(dir.path(), 5);
        let err = load_manifest(&m).unwrap_err().to_string();
        assert!(err.contains("declared 5x3"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(dir.path(), "m.toml", "labels = \"y.csv\"\nbogus = 1\n[[channel]]\nname=\"a\"\npath=\"a.csv\"\n");
        let err = DatasetManifest::from_path(&m).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn binary_channel_and_split_entry() {
        let dir = tempfile::tempdir().unwrap();
        let x = Matrix::from_shape_fn((6, 8), |(i, j)| (i * 8 + j) as f64 * 0.37);
        format::write_matrix(dir.path().join("x.bin"), &x).unwrap();
        assert_eq!(format::read_matrix(dir.path().join("x.bin")).unwrap(), x);
        write(dir.path(), "y.csv", "label\na\nb\na\nb\na\nb\n");
        let m = write(
            dir.path(),
            "m.toml",
            "labels = \"y.csv\"\ntrain_fraction = 0.5\n[[channel]]\nname = \"s\"\npath = \"x.bin\"\nsplit = 4\nlayout = \"interleaved\"\n",
        );
        let d = load_manifest(&m).unwrap();
        assert_eq!(d.channel_count(), 4);
        assert_eq!(d.channel_dims(), vec![2; 4]);
        assert_eq!(d.channel_names()[3], "s/3");

        let s = load_split(&m).unwrap();
        assert_eq!((s.train.rows(), s.test.rows()), (3, 3));
    }
}
